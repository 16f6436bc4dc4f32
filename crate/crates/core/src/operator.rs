//! Flux-form finite-difference assembly of
//! `A(t) u = -(D u' + a u)' + b u' + c0 u` and of the penalty diagonal.
//!
//! Unknowns are the `n` interior nodes. The flux at the half node is
//! `F_{i+1/2} = D_{i+1/2} (u_{i+1} - u_i) / h + a_{i+1/2} (u_{i+1} + u_i) / 2`
//! with half-node coefficients taken as arithmetic means, and row `i` is
//! `(F_{i-1/2} - F_{i+1/2}) / h + b_i (u_{i+1} - u_{i-1}) / (2h) + c0_i u_i`.
//!
//! Dirichlet ends drop the boundary value. Robin/Neumann ends replace the
//! boundary flux by the condition `(D u' + a u) nu + b0 u = 0` and use a
//! mirrored ghost value in the centered drift term.

use crate::error::{Error, Result};
use crate::model::{EndCondition, ProblemSpec};
use crate::tridiag::Tridiagonal;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub matrix: Tridiagonal,
    pub level: usize,
    /// Mesh width, kept for the discrete bilinear form.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyDiagonal {
    pub values: Vec<f64>,
    pub level: usize,
}

pub fn assemble_a(spec: &ProblemSpec, level: usize) -> TridiagonalOperator {
    let n = spec.grid.n;
    let h = spec.grid.h;
    let c = &spec.coeff;
    let (d, a, b, c0) = (
        c.diffusion.level(level),
        c.drift_div.level(level),
        c.drift.level(level),
        c.potential.level(level),
    );
    let mut m = Tridiagonal::zeros(n);
    let h2 = h * h;
    for k in 0..n {
        let i = k + 1;
        let dp = 0.5 * (d[i] + d[i + 1]);
        let dm = 0.5 * (d[i - 1] + d[i]);
        let ap = 0.5 * (a[i] + a[i + 1]);
        let am = 0.5 * (a[i - 1] + a[i]);
        let bi = b[i];

        m.diag[k] += c0[i];

        // -F_{i+1/2} / h, or the right boundary condition
        if k + 1 < n || spec.bc.right == EndCondition::Dirichlet {
            m.diag[k] += dp / h2 - ap / (2.0 * h);
            if k + 1 < n {
                m.upper[k] += -dp / h2 - ap / (2.0 * h);
            }
        } else if let EndCondition::Robin { b0 } = spec.bc.right {
            m.diag[k] += b0 / h;
        }

        // +F_{i-1/2} / h, or the left boundary condition
        if k > 0 || spec.bc.left == EndCondition::Dirichlet {
            m.diag[k] += dm / h2 + am / (2.0 * h);
            if k > 0 {
                m.lower[k] += -dm / h2 + am / (2.0 * h);
            }
        } else if let EndCondition::Robin { b0 } = spec.bc.left {
            m.diag[k] += b0 / h;
        }

        // centered drift; a Robin end mirrors the ghost value onto the node
        let half = bi / (2.0 * h);
        if k + 1 < n {
            m.upper[k] += half;
        } else if spec.bc.right != EndCondition::Dirichlet {
            m.diag[k] += half;
        }
        if k > 0 {
            m.lower[k] -= half;
        } else if spec.bc.left != EndCondition::Dirichlet {
            m.diag[k] -= half;
        }
    }
    TridiagonalOperator { matrix: m, level, h }
}

pub fn assemble_penalty(spec: &ProblemSpec, level: usize) -> PenaltyDiagonal {
    let m = spec.weight.m.level(level);
    PenaltyDiagonal {
        values: m[1..=spec.grid.n].to_vec(),
        level,
    }
}

/// Discrete surrogate `h v^T A u` of the form `a(t, u, v)`.
pub fn bilinear_form(op: &TridiagonalOperator, u: &[f64], v: &[f64]) -> Result<f64> {
    let n = op.matrix.len();
    for len in [u.len(), v.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mut au = vec![0.0; n];
    op.matrix.apply(u, &mut au);
    Ok(op.h * au.iter().zip(v).map(|(x, y)| x * y).sum::<f64>())
}

/// `max(|a|, |b|) h <= 2 alpha` over the lattice.
pub fn mesh_peclet_ok(spec: &ProblemSpec) -> bool {
    let norms = spec.sup_norms();
    norms.drift_div.max(norms.drift) * spec.grid.h <= 2.0 * spec.coeff.alpha
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GardingAudit {
    /// `min (a(u,u) + gamma |u|^2) / |u|^2` over all sampled vectors and levels.
    pub min_ratio: f64,
    pub level: usize,
    pub samples: usize,
}

/// Random-vector audit of `a(t, u, u) + gamma |u|^2 >= 0` at every level.
pub fn garding_audit<R: Rng>(
    spec: &ProblemSpec,
    gamma: f64,
    samples: usize,
    rng: &mut R,
) -> GardingAudit {
    let n = spec.grid.n;
    let h = spec.grid.h;
    let mut best = GardingAudit {
        min_ratio: f64::INFINITY,
        level: 0,
        samples,
    };
    let vectors: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    for level in 0..spec.tgrid.steps {
        let op = assemble_a(spec, level);
        for u in &vectors {
            let norm2 = h * u.iter().map(|x| x * x).sum::<f64>();
            if norm2 == 0.0 {
                continue;
            }
            let form = bilinear_form(&op, u, u).expect("sizes match");
            let ratio = (form + gamma * norm2) / norm2;
            if ratio < best.min_ratio {
                best.min_ratio = ratio;
                best.level = level;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        BoundarySpec, CoefficientField, Grid1D, Lattice, ProblemSpec, TimeGrid, WeightField,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec_with(
        n: usize,
        bc: BoundarySpec,
        a: f64,
        b: f64,
        c0: f64,
        m: impl Fn(f64, f64) -> f64,
    ) -> ProblemSpec {
        let g = Grid1D::new(0.0, 1.0, n).unwrap();
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let coeff = CoefficientField {
            diffusion: Lattice::constant(&g, &tg, 1.0),
            drift_div: Lattice::constant(&g, &tg, a),
            drift: Lattice::constant(&g, &tg, b),
            potential: Lattice::constant(&g, &tg, c0),
            alpha: 1.0,
        };
        let w = WeightField::with_default_threshold(Lattice::sample(&g, &tg, m));
        ProblemSpec::new(g, tg, coeff, bc, w, 1.0).unwrap()
    }

    #[test]
    fn dirichlet_second_difference() {
        let spec = spec_with(3, BoundarySpec::dirichlet(), 0.0, 0.0, 0.0, |_, _| 0.0);
        let op = assemble_a(&spec, 0);
        assert_eq!(op.matrix.diag, vec![32.0, 32.0, 32.0]);
        assert_eq!(&op.matrix.lower[1..], &[-16.0, -16.0]);
        assert_eq!(&op.matrix.upper[..2], &[-16.0, -16.0]);
    }

    #[test]
    fn neumann_rows_sum_to_zero() {
        let spec = spec_with(3, BoundarySpec::neumann(), 0.0, 0.0, 0.0, |_, _| 0.0);
        let op = assemble_a(&spec, 0);
        assert_eq!((op.matrix.diag[0], op.matrix.upper[0]), (16.0, -16.0));
        assert_eq!((op.matrix.lower[2], op.matrix.diag[2]), (-16.0, 16.0));
        let spec = spec_with(20, BoundarySpec::neumann(), 0.0, 1.5, 0.0, |_, _| 0.0);
        let op = assemble_a(&spec, 0);
        for i in 0..20 {
            assert!(op.matrix.row_sum(i).abs() < 1e-12, "row {i}");
        }
        assert!(op.matrix.has_z_pattern());
    }

    #[test]
    fn robin_adds_boundary_diagonal() {
        let neu = assemble_a(&spec_with(3, BoundarySpec::neumann(), 0.0, 0.0, 0.0, |_, _| 0.0), 0);
        let rob = assemble_a(&spec_with(3, BoundarySpec::robin(2.0, 1.0), 0.0, 0.0, 0.0, |_, _| 0.0), 0);
        assert_eq!(rob.matrix.diag[0] - neu.matrix.diag[0], 2.0 / 0.25);
        assert_eq!(rob.matrix.diag[2] - neu.matrix.diag[2], 1.0 / 0.25);
        assert_eq!(rob.matrix.diag[1], neu.matrix.diag[1]);
    }

    #[test]
    fn potential_shifts_diagonal() {
        let base = assemble_a(&spec_with(3, BoundarySpec::dirichlet(), 0.0, 0.0, 0.0, |_, _| 0.0), 0);
        let shifted = assemble_a(&spec_with(3, BoundarySpec::dirichlet(), 0.0, 0.0, 5.0, |_, _| 0.0), 0);
        for i in 0..3 {
            assert_eq!(shifted.matrix.diag[i], base.matrix.diag[i] + 5.0);
        }
    }

    #[test]
    fn penalty_samples_interior_nodes() {
        let spec = spec_with(3, BoundarySpec::dirichlet(), 0.0, 0.0, 0.0, |x, _| x);
        assert_eq!(assemble_penalty(&spec, 2).values, vec![0.25, 0.5, 0.75]);
        let zero = spec_with(3, BoundarySpec::dirichlet(), 0.0, 0.0, 0.0, |_, _| 0.0);
        assert_eq!(assemble_penalty(&zero, 0).values, vec![0.0; 3]);
    }

    #[test]
    fn bilinear_form_on_sine_mode() {
        let n = 31;
        let spec = spec_with(n, BoundarySpec::dirichlet(), 0.0, 0.0, 0.0, |_, _| 0.0);
        let op = assemble_a(&spec, 0);
        let h = spec.grid.h;
        let u: Vec<f64> = (1..=n).map(|i| (std::f64::consts::PI * i as f64 * h).sin()).collect();
        let lam = 2.0 / (h * h) * (1.0 - (std::f64::consts::PI * h).cos());
        let norm2: f64 = u.iter().map(|x| x * x).sum();
        let form = bilinear_form(&op, &u, &u).unwrap();
        assert!((form - h * lam * norm2).abs() < 1e-10 * form);
        assert_eq!(bilinear_form(&op, &vec![0.0; n], &vec![0.0; n]).unwrap(), 0.0);
        assert!(matches!(
            bilinear_form(&op, &u[..3], &u),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn symmetric_without_drift() {
        let spec = spec_with(12, BoundarySpec::robin(0.5, 0.0), 0.0, 0.0, -1.0, |_, _| 0.0);
        let op = assemble_a(&spec, 0);
        for i in 0..11 {
            assert_eq!(op.matrix.lower[i + 1], op.matrix.upper[i]);
        }
    }

    #[test]
    fn garding_holds_with_gamma0() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for bc in [BoundarySpec::dirichlet(), BoundarySpec::neumann(), BoundarySpec::robin(1.0, 0.5)] {
            let spec = spec_with(24, bc, 1.0, 0.8, -2.0, |_, _| 0.0);
            assert!(mesh_peclet_ok(&spec));
            let g0 = spec.gamma0();
            assert_eq!(g0, 1.8 / 2.0 + 2.0);
            let audit = garding_audit(&spec, g0, 100, &mut rng);
            assert!(audit.min_ratio >= -1e-12, "{bc:?}: {}", audit.min_ratio);
        }
    }
}
