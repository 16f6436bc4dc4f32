//! Lattice analysis of the vanishing set `D_m` of the weight: support
//! regularity, time slices, connected components and forward-in-time
//! reachability.
//!
//! A path may move one node left or right within a level, or one level up
//! at a fixed node; it never goes back in time. The check runs one BFS per
//! start node of the level-0 slice (`O(|Omega_0| n M)`); sharing frontiers
//! between start nodes would cut that down but is not needed at these sizes.

use crate::model::{Grid1D, TimeGrid, WeightField};
use std::collections::VecDeque;
use std::fmt::Write;

/// Cells of the `(n + 2) x (M + 1)` lattice; columns `0` and `n + 1` are
/// the boundary of `Omega` and never belong to `D_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceTimeMask {
    pub n: usize,
    pub steps: usize,
    /// Level-major; `true` means the cell lies in `D_m`.
    cells: Vec<bool>,
}

impl SpaceTimeMask {
    pub fn from_fn(n: usize, steps: usize, free: impl Fn(usize, usize) -> bool) -> Self {
        let nx = n + 2;
        let mut cells = vec![false; nx * (steps + 1)];
        for j in 0..=steps {
            for i in 1..=n {
                cells[j * nx + i] = free(i, j);
            }
        }
        Self { n, steps, cells }
    }

    /// Whether interior node `i` (1-based) at level `j` lies in `D_m`.
    #[inline]
    pub fn free(&self, i: usize, j: usize) -> bool {
        i >= 1 && i <= self.n && j <= self.steps && self.cells[j * (self.n + 2) + i]
    }

    #[inline]
    fn support(&self, i: usize, j: usize) -> bool {
        i >= 1 && i <= self.n && !self.cells[j * (self.n + 2) + i]
    }

    /// Text grid, one line per level from `0` to `M`: `|` boundary,
    /// `#` support of m, `.` vanishing set.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.n + 3) * (self.steps + 1));
        for j in 0..=self.steps {
            s.push('|');
            for i in 1..=self.n {
                s.push(if self.free(i, j) { '.' } else { '#' });
            }
            s.push_str("|\n");
        }
        s
    }

    /// Refine each cell into `factor x factor` copies (mask-only resampling).
    pub fn refine(&self, factor: usize) -> Self {
        let n = self.n * factor;
        let steps = self.steps * factor;
        Self::from_fn(n, steps, |i, j| {
            self.free((i - 1) / factor + 1, (j / factor).min(self.steps))
        })
    }
}

pub fn build_mask(weight: &WeightField, grid: &Grid1D, tgrid: &TimeGrid) -> SpaceTimeMask {
    SpaceTimeMask::from_fn(grid.n, tgrid.steps, |i, j| weight.m.get(i, j) < weight.threshold)
}

/// Nodes of the slice `Omega_{t_j}` (1-based).
pub fn slices(mask: &SpaceTimeMask, j: usize) -> Vec<usize> {
    (1..=mask.n).filter(|&i| mask.free(i, j)).collect()
}

/// Morphological opening of the support with the 3x3 square equals the
/// support. Neighbours outside the lattice count as support, so the
/// lattice edges do not erode.
pub fn check_regular_support(mask: &SpaceTimeMask) -> bool {
    let (n, steps) = (mask.n as isize, mask.steps as isize);
    let in_s = |i: isize, j: isize| -> bool {
        if i < 1 || i > n || j < 0 || j > steps {
            true
        } else {
            mask.support(i as usize, j as usize)
        }
    };
    let nbhd = |i: isize, j: isize| (-1..=1).flat_map(move |di| (-1..=1).map(move |dj| (i + di, j + dj)));
    let eroded = |i: isize, j: isize| -> bool {
        if i < 1 || i > n || j < 0 || j > steps {
            return true;
        }
        nbhd(i, j).all(|(a, b)| in_s(a, b))
    };
    for j in 0..=steps {
        for i in 1..=n {
            let opened = nbhd(i, j).any(|(a, b)| {
                (a >= 1 && a <= n && b >= 0 && b <= steps) && eroded(a, b)
            });
            if opened != in_s(i, j) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathWitness {
    /// `(node, level)` cells from the start to the end.
    pub cells: Vec<(usize, usize)>,
}

/// Re-checks a witness cell by cell: every cell in `D_m`, every move a unit
/// spatial step or a unit step forward in time, start at level 0.
pub fn validate_witness(mask: &SpaceTimeMask, w: &PathWitness) -> bool {
    let Some(&(_, j0)) = w.cells.first() else {
        return false;
    };
    if j0 != 0 || !w.cells.iter().all(|&(i, j)| mask.free(i, j)) {
        return false;
    }
    w.cells.windows(2).all(|p| {
        let ((i0, j0), (i1, j1)) = (p[0], p[1]);
        (j0 == j1 && i0.abs_diff(i1) == 1) || (i0 == i1 && j1 == j0 + 1)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub regular_support: bool,
    pub slices_nonempty: bool,
    pub components: usize,
    pub assumption_holds: bool,
    /// `((start node, 0), (node, level))` with no forward path between them.
    pub failing_pair: Option<((usize, usize), (usize, usize))>,
    pub witness_sample: Option<PathWitness>,
}

/// Cells reachable from `(start, 0)`, with BFS parents for path recovery.
fn reach(mask: &SpaceTimeMask, start: usize) -> Vec<Option<usize>> {
    let nx = mask.n + 2;
    let idx = |i: usize, j: usize| j * nx + i;
    let mut parent: Vec<Option<usize>> = vec![None; nx * (mask.steps + 1)];
    if !mask.free(start, 0) {
        return parent;
    }
    let s = idx(start, 0);
    parent[s] = Some(s);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((i, j)) = queue.pop_front() {
        let here = idx(i, j);
        let moves = [(i.wrapping_sub(1), j), (i + 1, j), (i, j + 1)];
        for (a, b) in moves {
            if mask.free(a, b) && parent[idx(a, b)].is_none() {
                parent[idx(a, b)] = Some(here);
                queue.push_back((a, b));
            }
        }
    }
    parent
}

fn path_to(mask: &SpaceTimeMask, parent: &[Option<usize>], target: (usize, usize)) -> PathWitness {
    let nx = mask.n + 2;
    let mut k = target.1 * nx + target.0;
    let mut cells = vec![target];
    while let Some(p) = parent[k] {
        if p == k {
            break;
        }
        k = p;
        cells.push((k % nx, k / nx));
    }
    cells.reverse();
    PathWitness { cells }
}

/// All-pairs forward reachability from the level-0 slice to every slice.
///
/// The reported failing pair uses the first start node that fails and,
/// for it, the unreachable cell on the latest level (smallest node), which
/// is the one the period map sees. On success the witness runs from the
/// first start node to the lexicographically last cell `(level, node)`.
pub fn check_assumption(mask: &SpaceTimeMask) -> AdmissibilityReport {
    let regular_support = check_regular_support(mask);
    let slices_nonempty = (0..=mask.steps).all(|j| !slices(mask, j).is_empty());
    let (components, _) = components(mask);
    let mut report = AdmissibilityReport {
        regular_support,
        slices_nonempty,
        components,
        assumption_holds: false,
        failing_pair: None,
        witness_sample: None,
    };
    let starts = slices(mask, 0);
    if starts.is_empty() {
        report.failing_pair = Some(((0, 0), (0, 0)));
        return report;
    }
    let nx = mask.n + 2;
    for &y in &starts {
        let parent = reach(mask, y);
        let miss = (0..=mask.steps)
            .rev()
            .find_map(|j| (1..=mask.n).find(|&i| mask.free(i, j) && parent[j * nx + i].is_none()).map(|i| (i, j)));
        if let Some(cell) = miss {
            report.failing_pair = Some(((y, 0), cell));
            return report;
        }
    }
    report.assumption_holds = slices_nonempty;
    if !slices_nonempty {
        // some slice is empty: pick any start and its unreachable empty level
        let j = (0..=mask.steps).find(|&j| slices(mask, j).is_empty()).unwrap();
        report.failing_pair = Some(((starts[0], 0), (0, j)));
        return report;
    }
    let parent = reach(mask, starts[0]);
    let last = (0..=mask.steps)
        .rev()
        .find_map(|j| (1..=mask.n).rev().find(|&i| mask.free(i, j)).map(|i| (i, j)))
        .unwrap();
    report.witness_sample = Some(path_to(mask, &parent, last));
    report
}

/// 4-connected components of `D_m` (no wrap in time); labels are `0` for
/// support cells and `1..=count` otherwise, level-major over `(n+2)` columns.
pub fn components(mask: &SpaceTimeMask) -> (usize, Vec<usize>) {
    let nx = mask.n + 2;
    let mut label = vec![0usize; nx * (mask.steps + 1)];
    let mut count = 0;
    for j in 0..=mask.steps {
        for i in 1..=mask.n {
            if !mask.free(i, j) || label[j * nx + i] != 0 {
                continue;
            }
            count += 1;
            label[j * nx + i] = count;
            let mut queue = VecDeque::from([(i, j)]);
            while let Some((a, b)) = queue.pop_front() {
                let nbrs = [
                    (a.wrapping_sub(1), b),
                    (a + 1, b),
                    (a, b + 1),
                    (a, b.wrapping_sub(1)),
                ];
                for (c, d) in nbrs {
                    if mask.free(c, d) && label[d * nx + c] == 0 {
                        label[d * nx + c] = count;
                        queue.push_back((c, d));
                    }
                }
            }
        }
    }
    (count, label)
}

impl AdmissibilityReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "regular_support={} slices_nonempty={} components={} assumption_holds={}",
            self.regular_support, self.slices_nonempty, self.components, self.assumption_holds
        );
        if let Some(((y, j0), (x, j1))) = self.failing_pair {
            let _ = write!(s, " failing_pair=(({y},{j0}),({x},{j1}))");
        }
        s
    }
}
