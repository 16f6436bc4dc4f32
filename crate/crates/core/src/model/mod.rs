//! Grids, sampled coefficient lattices, weights and boundary data.
//!
//! Every field is sampled pointwise on an `(n + 2) x (M + 1)` lattice
//! (boundary nodes included, time levels `0..=M`). Time is reduced modulo
//! the period before sampling, so level `M` is bit-identical to level `0`.

mod config;
mod expr;
mod scenario;

pub use config::{build_problem, ConfigDocument};
pub use expr::{EvalContext, Expr, Term};
pub use scenario::{builtin_scenario, Discretization, Scenario};

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid1D {
    /// Configs require `n >= 2`; the constructor also admits a single node
    /// so the scalar recursion can be exercised directly.
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(Error::BadScenarioParams(format!(
                "grid needs x_lo < x_hi, got ({x_lo}, {x_hi})"
            )));
        }
        if n == 0 {
            return Err(Error::BadScenarioParams("grid needs n >= 1".into()));
        }
        Ok(Self {
            x_lo,
            x_hi,
            n,
            h: (x_hi - x_lo) / (n as f64 + 1.0),
        })
    }

    /// Position of lattice node `i` in `0..=n+1` (0 and n+1 are the endpoints).
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n + 1 {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.h
        }
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub period: f64,
    pub steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(period: f64, steps: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::BadScenarioParams(format!("period must be > 0, got {period}")));
        }
        if steps < 2 {
            return Err(Error::BadScenarioParams("need at least 2 steps per period".into()));
        }
        Ok(Self {
            period,
            steps,
            dt: period / steps as f64,
        })
    }

    /// Time of level `j`, reduced into `[0, T)`.
    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        (j % self.steps) as f64 * self.dt
    }

    /// Nearest level for a physical time in `[0, T]`, if it lies on the lattice.
    pub fn level_of(&self, t: f64) -> Option<usize> {
        let f = t / self.dt;
        let j = f.round();
        if (f - j).abs() <= 1e-9 * f.abs().max(1.0) && j >= 0.0 && j <= self.steps as f64 {
            Some(j as usize)
        } else {
            None
        }
    }
}

/// A field sampled on the `(n + 2) x (M + 1)` lattice, stored level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    nx: usize,
    nt: usize,
    data: Vec<f64>,
}

impl Lattice {
    pub fn sample(grid: &Grid1D, tgrid: &TimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let nx = grid.n + 2;
        let nt = tgrid.steps + 1;
        let mut data = vec![0.0; nx * nt];
        for j in 0..tgrid.steps {
            let t = tgrid.t(j);
            for i in 0..nx {
                data[j * nx + i] = f(grid.x(i), t);
            }
        }
        // level M is level 0 reduced mod T
        let (head, tail) = data.split_at_mut(tgrid.steps * nx);
        tail.copy_from_slice(&head[..nx]);
        Self { nx, nt, data }
    }

    pub fn constant(grid: &Grid1D, tgrid: &TimeGrid, v: f64) -> Self {
        Self::sample(grid, tgrid, |_, _| v)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    /// All `n + 2` samples of time level `j`.
    #[inline]
    pub fn level(&self, j: usize) -> &[f64] {
        &self.data[j * self.nx..(j + 1) * self.nx]
    }

    pub fn levels(&self) -> usize {
        self.nt
    }

    pub fn nodes(&self) -> usize {
        self.nx
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Max of |sample| over the lattice.
    pub fn sup_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Lattice point of the first sample failing `ok`, if any.
    fn find(&self, ok: impl Fn(f64) -> bool) -> Option<(usize, usize, f64)> {
        self.data
            .iter()
            .position(|&v| !ok(v))
            .map(|k| (k % self.nx, k / self.nx, self.data[k]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    /// Diffusion `D(x, t)`.
    pub diffusion: Lattice,
    /// Drift inside the divergence, `a(x, t)`.
    pub drift_div: Lattice,
    /// First-order drift `b(x, t)`.
    pub drift: Lattice,
    /// Potential `c0(x, t)`.
    pub potential: Lattice,
    /// Ellipticity floor: `D >= alpha > 0` on every sample.
    pub alpha: f64,
}

/// Lattice sup-norms entering the Garding constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorms {
    pub drift_div: f64,
    pub drift: f64,
    pub potential_neg: f64,
}

impl SupNorms {
    /// `gamma0 = (|a| + |b|) / (2 alpha) + |c0^-|`.
    pub fn gamma0(&self, alpha: f64) -> f64 {
        (self.drift_div + self.drift) / (2.0 * alpha) + self.potential_neg
    }
}

pub fn sample_sup_norms(coeff: &CoefficientField) -> SupNorms {
    SupNorms {
        drift_div: coeff.drift_div.sup_abs(),
        drift: coeff.drift.sup_abs(),
        potential_neg: coeff
            .potential
            .values()
            .iter()
            .fold(0.0, |m: f64, &v| m.max(-v)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    Dirichlet,
    /// `(D u' + a u) . nu + b0 u = 0`; `b0 = 0` is Neumann.
    Robin { b0: f64 },
}

impl EndCondition {
    pub fn robin_coefficient(&self) -> Option<f64> {
        match self {
            EndCondition::Dirichlet => None,
            EndCondition::Robin { b0 } => Some(*b0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub left: EndCondition,
    pub right: EndCondition,
}

impl BoundarySpec {
    pub fn dirichlet() -> Self {
        Self {
            left: EndCondition::Dirichlet,
            right: EndCondition::Dirichlet,
        }
    }

    pub fn neumann() -> Self {
        Self::robin(0.0, 0.0)
    }

    pub fn robin(b0_left: f64, b0_right: f64) -> Self {
        Self {
            left: EndCondition::Robin { b0: b0_left },
            right: EndCondition::Robin { b0: b0_right },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub m: Lattice,
    /// Support cutoff: a sample belongs to supp(m) iff it is `>= threshold`.
    pub threshold: f64,
}

impl WeightField {
    /// Default cutoff `1e-12 * max sample`, floored at `1e-15`.
    pub fn with_default_threshold(m: Lattice) -> Self {
        let threshold = (1e-12 * m.sup_abs()).max(1e-15);
        Self { m, threshold }
    }

    pub fn in_support(&self, i: usize, j: usize) -> bool {
        self.m.get(i, j) >= self.threshold
    }
}

/// One time slab `[t_start, t_end)` of a piecewise-cylindrical vanishing
/// set; `active` lists the half-open subintervals `[lo, hi)` where the limit
/// evolution lives. An empty list annihilates during the slab.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub t_start: f64,
    pub t_end: f64,
    pub active: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylindricalPieceSpec {
    pub pieces: Vec<Piece>,
    /// Reject (rather than snap) endpoints that miss the lattice.
    pub strict: bool,
}

impl CylindricalPieceSpec {
    pub fn validate(&self, period: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::BadScenarioParams(msg));
        if self.pieces.is_empty() {
            return bad("no limit pieces".into());
        }
        let tol = 1e-12 * period;
        if self.pieces[0].t_start.abs() > tol {
            return bad("first piece must start at t = 0".into());
        }
        if (self.pieces.last().unwrap().t_end - period).abs() > tol {
            return bad("last piece must end at t = T".into());
        }
        for w in self.pieces.windows(2) {
            if (w[0].t_end - w[1].t_start).abs() > tol {
                return bad(format!("pieces leave a gap at t = {}", w[0].t_end));
            }
        }
        for p in &self.pieces {
            if p.t_end <= p.t_start {
                return bad(format!("empty slab [{}, {})", p.t_start, p.t_end));
            }
            if p.active.iter().any(|&(lo, hi)| lo >= hi) {
                return bad(format!("bad subinterval in slab starting at {}", p.t_start));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub grid: Grid1D,
    pub tgrid: TimeGrid,
    pub coeff: CoefficientField,
    pub bc: BoundarySpec,
    pub weight: WeightField,
    /// Time-stepping parameter in `[1/2, 1]`; 1 is fully implicit.
    pub theta: f64,
    /// Piecewise-cylindrical description of the vanishing set, when known.
    pub pieces: Option<CylindricalPieceSpec>,
}

impl ProblemSpec {
    /// Assemble and validate a spec from already-sampled parts.
    pub fn new(
        grid: Grid1D,
        tgrid: TimeGrid,
        coeff: CoefficientField,
        bc: BoundarySpec,
        weight: WeightField,
        theta: f64,
    ) -> Result<Self> {
        let spec = Self {
            grid,
            tgrid,
            coeff,
            bc,
            weight,
            theta,
            pieces: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_pieces(mut self, pieces: CylindricalPieceSpec) -> Result<Self> {
        pieces.validate(self.tgrid.period)?;
        self.pieces = Some(pieces);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let at = |field: &str, i: usize, j: usize, msg: String| Error::Invariant {
            field: field.into(),
            x: self.grid.x(i),
            t: self.tgrid.t(j),
            msg,
        };
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::BadScenarioParams(format!(
                "theta must lie in [1/2, 1], got {}",
                self.theta
            )));
        }
        let c = &self.coeff;
        if !(c.alpha.is_finite() && c.alpha > 0.0) {
            return Err(Error::BadScenarioParams(format!(
                "alpha must be > 0, got {}",
                c.alpha
            )));
        }
        for (name, lat) in [
            ("D", &c.diffusion),
            ("a", &c.drift_div),
            ("b", &c.drift),
            ("c0", &c.potential),
            ("m", &self.weight.m),
        ] {
            if lat.nodes() != self.grid.n + 2 || lat.levels() != self.tgrid.steps + 1 {
                return Err(Error::DimensionMismatch {
                    expected: (self.grid.n + 2) * (self.tgrid.steps + 1),
                    got: lat.nodes() * lat.levels(),
                });
            }
            if let Some((i, j, v)) = lat.find(f64::is_finite) {
                return Err(at(name, i, j, format!("non-finite sample {v}")));
            }
        }
        let alpha = c.alpha;
        if let Some((i, j, v)) = c.diffusion.find(|v| v >= alpha) {
            return Err(at("D", i, j, format!("sample {v} below alpha = {alpha}")));
        }
        if let Some((i, j, v)) = self.weight.m.find(|v| v >= 0.0) {
            return Err(at("m", i, j, format!("negative weight sample {v}")));
        }
        if !(self.weight.threshold > 0.0) {
            return Err(Error::BadScenarioParams("support threshold must be > 0".into()));
        }
        for end in [self.bc.left, self.bc.right] {
            if let Some(b0) = end.robin_coefficient() {
                if !(b0 >= 0.0 && b0.is_finite()) {
                    return Err(Error::BadScenarioParams(format!("b0 must be >= 0, got {b0}")));
                }
            }
        }
        Ok(())
    }

    pub fn sup_norms(&self) -> SupNorms {
        sample_sup_norms(&self.coeff)
    }

    pub fn gamma0(&self) -> f64 {
        self.sup_norms().gamma0(self.coeff.alpha)
    }

    /// True when no coefficient of the operator depends on time.
    pub fn is_autonomous(&self) -> bool {
        let c = &self.coeff;
        [&c.diffusion, &c.drift_div, &c.drift, &c.potential]
            .iter()
            .all(|lat| (1..lat.levels()).all(|j| lat.level(j) == lat.level(0)))
    }

    /// Stable SHA-256 over the grid parameters and every lattice sample.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in [
            self.grid.x_lo,
            self.grid.x_hi,
            self.tgrid.period,
            self.coeff.alpha,
            self.theta,
            self.weight.threshold,
        ] {
            h.update(v.to_le_bytes());
        }
        h.update((self.grid.n as u64).to_le_bytes());
        h.update((self.tgrid.steps as u64).to_le_bytes());
        for end in [self.bc.left, self.bc.right] {
            match end {
                EndCondition::Dirichlet => h.update([0u8]),
                EndCondition::Robin { b0 } => {
                    h.update([1u8]);
                    h.update(b0.to_le_bytes());
                }
            }
        }
        for lat in [
            &self.coeff.diffusion,
            &self.coeff.drift_div,
            &self.coeff.drift,
            &self.coeff.potential,
            &self.weight.m,
        ] {
            for v in lat.values() {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}
