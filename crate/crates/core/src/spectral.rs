//! Monodromy matrix, power iteration for its spectral radius, and the
//! periodic principal eigenpair `mu = -(1/T) log r`.

use crate::error::{Error, Result};
use crate::evolve::{prepare, StepFactorization};
use crate::model::ProblemSpec;
use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyMatrix {
    /// `U(T, 0)` in the standard basis.
    pub p: DMatrix<f64>,
    pub lambda: f64,
    pub positivity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub lambda: f64,
    pub r: f64,
    /// `-(1/T) log r`, or `+inf` when the limit is trivial.
    pub mu: f64,
    /// Principal eigenvector, unit Euclidean norm, oriented nonnegative.
    pub w: Vec<f64>,
    pub residual: f64,
    pub eigengap: f64,
    pub iterations: usize,
    pub trivial_limit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Spectral radii at or below this are reported as a trivial limit.
    pub r_floor: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
            r_floor: 1e-300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicEigenfunction {
    /// `u(t_j)` for `j = 0..=M`.
    pub samples: Vec<Vec<f64>>,
    pub mu: f64,
}

impl PeriodicEigenfunction {
    /// `|u(T) - u(0)| / |u(0)|` in the Euclidean norm.
    pub fn periodicity_defect(&self) -> f64 {
        let first = &self.samples[0];
        let last = self.samples.last().unwrap();
        norm2(&sub(last, first)) / norm2(first)
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Dense propagator `U(t_to, t_from)`, one evolved unit impulse per column.
pub fn propagator(f: &StepFactorization, from: usize, to: usize) -> Result<DMatrix<f64>> {
    if from > to || to > f.steps {
        return Err(Error::LevelOrder { from, to });
    }
    let n = f.n;
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            f.evolve_state(&e, from, to).expect("levels checked")
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

pub fn monodromy(f: &StepFactorization) -> MonodromyMatrix {
    MonodromyMatrix {
        p: propagator(f, 0, f.steps).expect("full period is a valid level range"),
        lambda: f.lambda,
        positivity: f.positivity,
    }
}

fn orient(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    if s < 0.0 {
        w.iter_mut().for_each(|x| *x = -*x);
    }
}

fn trivial(lambda: f64, n: usize, iterations: usize, r: f64) -> SpectralResult {
    SpectralResult {
        lambda,
        r,
        mu: f64::INFINITY,
        w: vec![0.0; n],
        residual: 0.0,
        eigengap: 0.0,
        iterations,
        trivial_limit: true,
    }
}

/// Power iteration from the all-ones vector.
pub fn spectral_radius(p: &MonodromyMatrix, opts: SpectralOptions) -> Result<SpectralResult> {
    let n = p.p.nrows();
    spectral_radius_from(p, &vec![1.0; n], opts)
}

pub fn spectral_radius_from(
    p: &MonodromyMatrix,
    init: &[f64],
    opts: SpectralOptions,
) -> Result<SpectralResult> {
    let a = &p.p;
    let n = a.nrows();
    if init.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: init.len() });
    }
    let mut w = DVector::from_column_slice(init);
    let nw = w.norm();
    if nw == 0.0 {
        return Err(Error::BadScenarioParams("initial vector is zero".into()));
    }
    w /= nw;
    for it in 1..=opts.max_iter {
        let y = a * &w;
        let ny = y.norm();
        if !(ny > opts.r_floor) {
            return Ok(trivial(p.lambda, n, it, ny));
        }
        let r = w.dot(&y);
        let residual = (&y - r * &w).norm();
        if r > 0.0 && residual <= opts.tol * r {
            let mut wv: Vec<f64> = w.iter().copied().collect();
            orient(&mut wv);
            if r <= opts.r_floor {
                return Ok(trivial(p.lambda, n, it, r));
            }
            let eigengap = (r - second_modulus(a, &wv, r)).max(0.0);
            return Ok(SpectralResult {
                lambda: p.lambda,
                r,
                mu: f64::NAN,
                w: wv,
                residual,
                eigengap,
                iterations: it,
                trivial_limit: false,
            });
        }
        w = y / ny;
    }
    Err(Error::NoConvergence(opts.max_iter))
}

/// Modulus of the subdominant eigenvalue, by power iteration on the
/// deflated matrix `P - r w w^T` (which keeps every other eigenvalue).
fn second_modulus(a: &DMatrix<f64>, w: &[f64], r: f64) -> f64 {
    let n = a.nrows();
    if n < 2 {
        return 0.0;
    }
    let wv = DVector::from_column_slice(w);
    let deflated = a - r * &wv * wv.transpose();
    let mut x = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -0.5 } + 0.01 * i as f64);
    x -= wv.dot(&x) * &wv;
    let mut nx = x.norm();
    if nx == 0.0 {
        return 0.0;
    }
    x /= nx;
    let window = 16;
    let iters = 400;
    let mut log_growth = Vec::with_capacity(iters);
    for _ in 0..iters {
        let y = &deflated * &x;
        nx = y.norm();
        if !(nx > 0.0) || !nx.is_finite() {
            return 0.0;
        }
        log_growth.push(nx.ln());
        x = y / nx;
    }
    let tail = &log_growth[iters - window..];
    (tail.iter().sum::<f64>() / window as f64).exp()
}

/// `|P w - r w|`, recomputed from scratch.
pub fn verify_pair(p: &MonodromyMatrix, r: f64, w: &[f64]) -> f64 {
    let wv = DVector::from_column_slice(w);
    (&p.p * &wv - r * &wv).norm()
}

/// All eigenvalues by a dense real Schur decomposition, sorted by
/// decreasing modulus. Intended as an oracle for `n <= 256`.
pub fn dense_spectrum(p: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = p.clone().complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    ev
}

pub fn finish(res: &mut SpectralResult, period: f64) {
    if !res.trivial_limit {
        res.mu = -res.r.ln() / period;
    }
}

pub fn principal_pair_with(spec: &ProblemSpec, lambda: f64, opts: SpectralOptions) -> Result<SpectralResult> {
    let f = prepare(spec, lambda)?;
    let p = monodromy(&f);
    let mut res = spectral_radius(&p, opts)?;
    finish(&mut res, spec.tgrid.period);
    Ok(res)
}

pub fn principal_pair(spec: &ProblemSpec, lambda: f64) -> Result<SpectralResult> {
    principal_pair_with(spec, lambda, SpectralOptions::default())
}

/// `u(t_j) = e^{mu t_j} U(t_j, 0) w`.
pub fn periodic_eigenfunction(f: &StepFactorization, res: &SpectralResult) -> Result<PeriodicEigenfunction> {
    if res.trivial_limit {
        return Err(Error::TrivialLimit);
    }
    let traj = f.trajectory(&res.w, 0, f.steps)?;
    let samples = traj
        .states
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            let scale = (res.mu * j as f64 * f.dt).exp();
            s.into_iter().map(|x| x * scale).collect()
        })
        .collect();
    Ok(PeriodicEigenfunction { samples, mu: res.mu })
}
