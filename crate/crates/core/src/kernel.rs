//! The discrete kernel `k(x_i, x_j, t, s)` of the penalized evolution, its
//! monotonicity in `lambda`, Gaussian upper envelopes and `l^p -> l^q`
//! smoothing norms.
//!
//! Convention: `K = U(t, s) / h`, so `h * sum_j K[i][j] u_j` is the evolved
//! state and `K` approximates the integral kernel pointwise.

use crate::error::{Error, Result};
use crate::evolve::StepFactorization;
use crate::spectral::propagator;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
    pub s_level: usize,
    pub t_level: usize,
    pub lambda: f64,
    /// Elapsed time `t - s`.
    pub tau: f64,
    pub h: f64,
    /// Interior node coordinates.
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub m_const: f64,
    pub omega: f64,
    pub cconst: f64,
    /// `max(k - envelope)` over the audited kernels; `<= 0` means the bound holds.
    pub max_violation: f64,
}

/// Entries below this are treated as underflow and skipped in log fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// Multiplier applied to the tight envelope constant.
pub const SAFETY: f64 = 1.05;

pub fn kernel_matrix(f: &StepFactorization, s_level: usize, t_level: usize) -> Result<KernelMatrix> {
    if s_level >= t_level || t_level > f.steps {
        return Err(Error::LevelOrder { from: s_level, to: t_level });
    }
    let p = propagator(f, s_level, t_level)?;
    // node coordinates relative to the left end; only differences matter
    let x = (1..=f.n).map(|i| i as f64 * f.h).collect();
    Ok(KernelMatrix {
        entries: p / f.h,
        s_level,
        t_level,
        lambda: f.lambda,
        tau: (t_level - s_level) as f64 * f.dt,
        h: f.h,
        x,
    })
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// `h K u`, the evolution of `u` from `s` to `t`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let v = &self.entries * DVector::from_column_slice(u) * self.h;
        v.as_slice().to_vec()
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn peak(&self) -> f64 {
        let mid = self.n() / 2;
        self.entries[(mid, mid)]
    }
}

/// `max(0, max(K_hi - K_lo))` where `K_hi` carries the larger penalty.
pub fn check_monotone_in_lambda(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<f64> {
    if k1.s_level != k2.s_level || k1.t_level != k2.t_level || k1.n() != k2.n() {
        return Err(Error::LevelMismatch);
    }
    let (lo, hi) = if k1.lambda <= k2.lambda { (k1, k2) } else { (k2, k1) };
    let worst = hi
        .entries
        .iter()
        .zip(lo.entries.iter())
        .map(|(a, b)| a - b)
        .fold(0.0, f64::max);
    Ok(worst)
}

/// `K(t, s) = h K(t, tau) K(tau, s)`, relative max-norm defect.
pub fn chapman_kolmogorov_defect(ks: &KernelMatrix, k1: &KernelMatrix, k2: &KernelMatrix) -> Result<f64> {
    if k1.t_level != k2.s_level || ks.s_level != k1.s_level || ks.t_level != k2.t_level {
        return Err(Error::LevelMismatch);
    }
    let composed = &k2.entries * &k1.entries * ks.h;
    let scale = ks.entries.amax().max(f64::MIN_POSITIVE);
    Ok((composed - &ks.entries).amax() / scale)
}

impl GaussianFit {
    fn shape(&self, tau: f64, d2: f64) -> f64 {
        (self.omega * tau).exp() * tau.powf(-0.5) * (-self.cconst * d2 / tau).exp()
    }

    pub fn envelope(&self, tau: f64, d2: f64) -> f64 {
        self.m_const * self.shape(tau, d2)
    }
}

/// `max(k - envelope)` over all entries of `k`.
pub fn envelope_violation(fit: &GaussianFit, k: &KernelMatrix) -> f64 {
    let n = k.n();
    let mut worst = f64::NEG_INFINITY;
    for j in 0..n {
        for i in 0..n {
            let d = k.x[i] - k.x[j];
            worst = worst.max(k.entries[(i, j)] - fit.envelope(k.tau, d * d));
        }
    }
    worst
}

/// Fit `log k + log(tau)/2 = log M + omega tau - c |x - y|^2 / tau` by least
/// squares over all entries above [`FIT_FLOOR`] of the `lambda = 0` kernels.
///
/// The regressed `M` is only a centre line; the reported constant is the
/// smallest one that makes the envelope hold on the fitted kernels, times
/// [`SAFETY`], and never below 1. `max_violation` is then evaluated over
/// `kernels` together with `audit` (kernels at other penalties).
pub fn fit_gaussian(kernels: &[KernelMatrix], audit: &[KernelMatrix]) -> Result<GaussianFit> {
    let mut taus: Vec<f64> = kernels.iter().map(|k| k.tau).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    if taus.len() < 3 {
        return Err(Error::InsufficientData(format!("{} distinct level pairs, need 3", taus.len())));
    }
    if taus[taus.len() - 1] < 4.0 * taus[0] {
        return Err(Error::InsufficientData("elapsed times span less than a factor 4".into()));
    }

    // normal equations for (log M, omega, c) with rows (1, tau, -d2/tau)
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    let mut rows = 0usize;
    for k in kernels {
        let n = k.n();
        for j in 0..n {
            for i in 0..n {
                let v = k.entries[(i, j)];
                if v <= FIT_FLOOR {
                    continue;
                }
                let d = k.x[i] - k.x[j];
                let row = nalgebra::Vector3::new(1.0, k.tau, -d * d / k.tau);
                let y = v.ln() + 0.5 * k.tau.ln();
                ata += row * row.transpose();
                atb += row * y;
                rows += 1;
            }
        }
    }
    if rows < 3 {
        return Err(Error::InsufficientData("too few entries above the floor".into()));
    }
    let coef = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::InsufficientData("degenerate regression".into()))?;
    let (omega, cconst) = (coef[1], coef[2]);
    if cconst <= 0.0 {
        return Err(Error::InsufficientData(format!("fitted decay constant {cconst} is not positive")));
    }

    let mut fit = GaussianFit { m_const: 1.0, omega, cconst, max_violation: 0.0 };
    let mut tight: f64 = 0.0;
    for k in kernels {
        let n = k.n();
        for j in 0..n {
            for i in 0..n {
                let d = k.x[i] - k.x[j];
                tight = tight.max(k.entries[(i, j)] / fit.shape(k.tau, d * d));
            }
        }
    }
    fit.m_const = (SAFETY * tight).max(1.0);
    fit.max_violation = kernels
        .iter()
        .chain(audit)
        .map(|k| envelope_violation(&fit, k))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(fit)
}

fn col_norm(k: &KernelMatrix, j: usize, q: f64) -> f64 {
    let c = k.entries.column(j);
    if q.is_infinite() {
        c.amax()
    } else {
        (k.h * c.iter().map(|v| v.abs().powf(q)).sum::<f64>()).powf(1.0 / q)
    }
}

/// `l^1(h) -> l^q(h)` norm of `u -> h K u`; exact (extreme points of the ball).
fn norm_1_to(k: &KernelMatrix, q: f64) -> f64 {
    (0..k.n()).map(|j| col_norm(k, j, q)).fold(0.0, f64::max)
}

/// `l^inf -> l^inf` norm: largest absolute row sum of `h K`.
fn norm_inf(k: &KernelMatrix) -> f64 {
    k.entries
        .row_iter()
        .map(|r| k.h * r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Norm of `u -> h K u` from `l^p(h)` to `l^q(h)`.
///
/// Exact for `p = 1`, `p = q = inf`, `p = q = 2` (singular values) and
/// `p = 2, q = inf` (row norms). Every other pair gets the Riesz–Thorin
/// bound between `l^1 -> l^{q/p}` and `l^inf -> l^inf`.
pub fn smoothing_norm(k: &KernelMatrix, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= p) || p.is_nan() || q.is_nan() {
        return Err(Error::BadExponents { p, q });
    }
    if p == 1.0 {
        return Ok(norm_1_to(k, q));
    }
    if p.is_infinite() {
        return Ok(norm_inf(k));
    }
    if p == 2.0 && q == 2.0 {
        let sv = (&k.entries * k.h).singular_values();
        return Ok(sv.max());
    }
    if p == 2.0 && q.is_infinite() {
        let best = k
            .entries
            .row_iter()
            .map(|r| (k.h * r.iter().map(|v| v * v).sum::<f64>()).sqrt())
            .fold(0.0, f64::max);
        return Ok(best);
    }
    let q1 = if q.is_infinite() { f64::INFINITY } else { q / p };
    Ok(norm_1_to(k, q1).powf(1.0 / p) * norm_inf(k).powf(1.0 - 1.0 / p))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        let dx = x.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    num / den
}
