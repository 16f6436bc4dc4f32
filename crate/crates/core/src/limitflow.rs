//! Penalty sweeps `lambda -> inf`, the limit period map for
//! piecewise-cylindrical vanishing sets, and convergence diagnostics.
//!
//! The limit evolution is the exact `lambda -> inf` limit of the implicit
//! scheme: step `j -> j + 1` zeroes every node outside the active set of the
//! piece containing `t_{j+1}` and solves `(I + dt A_{j+1}) u = u_j` on the
//! active nodes with homogeneous Dirichlet walls. Since the scheme is
//! monotone in the penalty, `P_lambda >= P_inf` entrywise.

use crate::error::{Error, Result};
use crate::evolve::prepare;
use crate::kernel::loglog_slope;
use crate::model::{CylindricalPieceSpec, ProblemSpec};
use crate::operator::assemble_a;
use crate::spectral::{
    finish, monodromy, periodic_eigenfunction, spectral_radius, MonodromyMatrix, SpectralOptions,
};
use crate::tridiag::{ThomasFactor, Tridiagonal};
use nalgebra::DMatrix;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub lambda: f64,
    /// `+inf` for a trivial period map, NaN for a failed solve.
    pub mu: f64,
    pub r: f64,
    pub residual: f64,
    /// Space-time `L^2` mass of the normalized eigenfunction on `{m >= eps}`.
    pub s_eps_mass: f64,
    /// Space-time `L^2` distance to the limit eigenfunction; NaN without an oracle.
    pub dist_to_limit_l2: f64,
    /// `max |P_lambda|`, the decay audit for trivial limits.
    pub p_max: f64,
    pub trivial: bool,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub eps: f64,
    /// Adjacent pairs `(i, mu_i - mu_{i+1})` with a decrease beyond `1e-10`.
    pub violations: Vec<(usize, f64)>,
    /// `mu(lambda_max) - mu(lambda_max / 10)`, when both records exist.
    pub last_decade_change: Option<f64>,
    pub divergent: bool,
    /// Lattice cells (levels `0..M`) with `m >= eps` and with `m` below the support threshold.
    pub s_eps_cells: usize,
    pub vanishing_cells: usize,
}

/// Absolute change of `mu` over the last decade above which the sweep is
/// classified divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 0.5;

pub const MONOTONE_SLACK: f64 = 1e-10;

/// Per-level factors of the limit evolution.
#[derive(Debug, Clone)]
pub struct LimitEvolution {
    n: usize,
    steps: usize,
    /// Active mask and factor for step `j -> j + 1`, indexed by `j`.
    active: Vec<Vec<bool>>,
    factors: Vec<Option<ThomasFactor>>,
}

#[derive(Debug, Clone)]
pub struct LimitMonodromy {
    pub pinf: DMatrix<f64>,
    pub r_inf: f64,
    /// `+inf` when the limit period map vanishes.
    pub mu_inf: f64,
    /// Unit Euclidean norm, nonnegative; empty when trivial.
    pub w_inf: Vec<f64>,
    pub trivial: bool,
    pub warnings: Vec<String>,
    pub evolution: LimitEvolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub lambda_max: f64,
    pub mu_lambda: f64,
    pub mu_inf: f64,
    /// `|mu(lambda_max) - mu_inf|`.
    pub mu_gap: f64,
    /// `max |P_lambda_max - P_inf|`.
    pub p_diff_max: f64,
    pub q: f64,
    /// `l^q(h)` distance per level `0..=M` between the normalized eigenfunctions.
    pub level_dist: Vec<f64>,
    /// `l^2(h)` distance of the level-0 eigenvectors, both of unit `l^2(h)` norm.
    pub eigvec_dist_l2: f64,
    /// `(lambda, max |P_lambda|)` along the sweep.
    pub p_norm_decay: Vec<(f64, f64)>,
    pub trivial: bool,
}

impl LimitEvolution {
    /// One limit step `j -> j + 1` in place.
    pub fn step(&self, j: usize, v: &mut [f64]) {
        for (x, &a) in v.iter_mut().zip(&self.active[j]) {
            if !a {
                *x = 0.0;
            }
        }
        if let Some(f) = &self.factors[j] {
            f.solve_in_place(v);
        }
    }

    pub fn evolve_state(&self, v: &[f64], from: usize, to: usize) -> Result<Vec<f64>> {
        if from > to || to > self.steps {
            return Err(Error::LevelOrder { from, to });
        }
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        let mut u = v.to_vec();
        for j in from..to {
            self.step(j, &mut u);
        }
        Ok(u)
    }

    pub fn propagator(&self, from: usize, to: usize) -> Result<DMatrix<f64>> {
        if from > to || to > self.steps {
            return Err(Error::LevelOrder { from, to });
        }
        let cols: Vec<Vec<f64>> = (0..self.n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; self.n];
                e[j] = 1.0;
                self.evolve_state(&e, from, to).expect("levels checked")
            })
            .collect();
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| cols[j][i]))
    }

    /// Active nodes (1-based) of step `j -> j + 1`.
    pub fn active_nodes(&self, j: usize) -> Vec<usize> {
        (0..self.n).filter(|&k| self.active[j][k]).map(|k| k + 1).collect()
    }
}

fn on_node(x: f64, x_lo: f64, h: f64, n: usize) -> bool {
    let k = ((x - x_lo) / h).round();
    k >= 0.0 && k <= (n + 1) as f64 && (x - (x_lo + k * h)).abs() <= 1e-9 * h
}

/// Build the limit evolution from the declared pieces. Only the implicit
/// scheme has a penalty limit of this form.
pub fn limit_evolution(spec: &ProblemSpec, pieces: &CylindricalPieceSpec) -> Result<(LimitEvolution, Vec<String>)> {
    if spec.theta != 1.0 {
        return Err(Error::Unsupported(format!(
            "limit oracle needs theta = 1, got {}",
            spec.theta
        )));
    }
    let period = spec.tgrid.period;
    pieces.validate(period)?;
    let (grid, tgrid) = (&spec.grid, &spec.tgrid);
    let (n, h, dt) = (grid.n, grid.h, tgrid.dt);

    let mut warnings = Vec::new();
    for p in &pieces.pieces {
        for &(lo, hi) in &p.active {
            for v in [lo, hi] {
                if !on_node(v, grid.x_lo, h, n) {
                    if pieces.strict {
                        return Err(Error::MisalignedPiece { value: v });
                    }
                    warnings.push(format!("piece endpoint {v} is not a grid node; snapped"));
                }
            }
        }
    }

    let x_tol = 1e-9 * h;
    let t_tol = 1e-9 * dt;
    let mut active = Vec::with_capacity(tgrid.steps);
    let mut factors = Vec::with_capacity(tgrid.steps);
    for j in 0..tgrid.steps {
        let t = tgrid.t(j + 1);
        let piece = pieces
            .pieces
            .iter()
            .find(|p| t >= p.t_start - t_tol && t < p.t_end - t_tol)
            .expect("validated pieces cover [0, T)");
        let mask: Vec<bool> = (1..=n)
            .map(|i| {
                let x = grid.x(i);
                piece.active.iter().any(|&(lo, hi)| x >= lo - x_tol && x < hi - x_tol)
            })
            .collect();
        let factor = if mask.iter().any(|&a| a) {
            let mut l = Tridiagonal::identity(n);
            let a = assemble_a(spec, j + 1).matrix;
            for k in 0..n {
                if !mask[k] {
                    continue;
                }
                l.diag[k] += dt * a.diag[k];
                if k > 0 && mask[k - 1] {
                    l.lower[k] = dt * a.lower[k];
                }
                if k + 1 < n && mask[k + 1] {
                    l.upper[k] = dt * a.upper[k];
                }
            }
            Some(ThomasFactor::new(&l).ok_or(Error::SingularStep { level: j + 1 })?)
        } else {
            None
        };
        active.push(mask);
        factors.push(factor);
    }
    Ok((LimitEvolution { n, steps: tgrid.steps, active, factors }, warnings))
}

/// Limit period map, its spectral radius and `mu_inf`.
pub fn limit_monodromy(spec: &ProblemSpec, pieces: &CylindricalPieceSpec) -> Result<LimitMonodromy> {
    let (evolution, warnings) = limit_evolution(spec, pieces)?;
    let pinf = evolution.propagator(0, spec.tgrid.steps)?;
    let mono = MonodromyMatrix { p: pinf, lambda: f64::INFINITY, positivity: true };
    let mut res = spectral_radius(&mono, SpectralOptions::default())?;
    finish(&mut res, spec.tgrid.period);
    Ok(LimitMonodromy {
        pinf: mono.p,
        r_inf: res.r,
        mu_inf: res.mu,
        w_inf: if res.trivial_limit { Vec::new() } else { res.w },
        trivial: res.trivial_limit,
        warnings,
        evolution,
    })
}

/// Levels `0..=M` of `e^{mu t} U(t, 0) w`, scaled to unit space-time norm.
fn normalized_periodic(levels: Vec<Vec<f64>>, h: f64, dt: f64) -> Vec<Vec<f64>> {
    let steps = levels.len() - 1;
    let mass: f64 = levels[..steps]
        .iter()
        .map(|l| l.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        * h
        * dt;
    let s = 1.0 / mass.sqrt();
    levels.into_iter().map(|l| l.into_iter().map(|v| v * s).collect()).collect()
}

impl LimitMonodromy {
    /// Normalized periodic limit eigenfunction, levels `0..=M`.
    pub fn eigenfunction(&self, spec: &ProblemSpec) -> Result<Vec<Vec<f64>>> {
        if self.trivial {
            return Err(Error::TrivialLimit);
        }
        let dt = spec.tgrid.dt;
        let mut u = self.w_inf.clone();
        let mut levels = vec![u.clone()];
        for j in 0..spec.tgrid.steps {
            self.evolution.step(j, &mut u);
            let scale = (self.mu_inf * (j + 1) as f64 * dt).exp();
            levels.push(u.iter().map(|v| v * scale).collect());
        }
        Ok(normalized_periodic(levels, spec.grid.h, dt))
    }
}

fn space_time_dist(a: &[Vec<f64>], b: &[Vec<f64>], h: f64, dt: f64) -> f64 {
    let steps = a.len() - 1;
    let s: f64 = a[..steps]
        .iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>())
        .sum();
    (s * h * dt).sqrt()
}

fn failed(lambda: f64) -> SweepRecord {
    SweepRecord {
        lambda,
        mu: f64::NAN,
        r: f64::NAN,
        residual: f64::NAN,
        s_eps_mass: f64::NAN,
        dist_to_limit_l2: f64::NAN,
        p_max: f64::NAN,
        trivial: false,
        valid: false,
    }
}

fn sweep_one(
    spec: &ProblemSpec,
    lambda: f64,
    eps: f64,
    limit: Option<&(LimitMonodromy, Vec<Vec<f64>>)>,
) -> Result<SweepRecord> {
    let f = prepare(spec, lambda)?;
    let p = monodromy(&f);
    let p_max = p.p.amax();
    let mut res = spectral_radius(&p, SpectralOptions::default())?;
    finish(&mut res, spec.tgrid.period);
    let mut rec = SweepRecord {
        lambda,
        mu: res.mu,
        r: res.r,
        residual: res.residual,
        s_eps_mass: f64::NAN,
        dist_to_limit_l2: f64::NAN,
        p_max,
        trivial: res.trivial_limit,
        valid: true,
    };
    if res.trivial_limit {
        return Ok(rec);
    }
    let (h, dt) = (spec.grid.h, spec.tgrid.dt);
    let u = normalized_periodic(periodic_eigenfunction(&f, &res)?.samples, h, dt);
    let m = &spec.weight.m;
    let mut mass = 0.0;
    for (j, level) in u[..spec.tgrid.steps].iter().enumerate() {
        for (k, v) in level.iter().enumerate() {
            if m.get(k + 1, j) >= eps {
                mass += v * v;
            }
        }
    }
    rec.s_eps_mass = mass * h * dt;
    if let Some((_, u_inf)) = limit {
        rec.dist_to_limit_l2 = space_time_dist(&u, u_inf, h, dt);
    }
    Ok(rec)
}

/// One record per `lambda`, computed concurrently and merged in input order.
/// A failed `lambda` yields a record with `valid = false`.
pub fn sweep(spec: &ProblemSpec, lambdas: &[f64], eps: f64) -> Result<SweepOutcome> {
    if !(eps > 0.0) {
        return Err(Error::BadScenarioParams(format!("eps must be positive, got {eps}")));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0)) || lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::BadScenarioParams("lambdas must be ascending and nonnegative".into()));
    }
    let limit = match &spec.pieces {
        Some(p) if spec.theta == 1.0 => {
            let lim = limit_monodromy(spec, p)?;
            if lim.trivial {
                None
            } else {
                let u = lim.eigenfunction(spec)?;
                Some((lim, u))
            }
        }
        _ => None,
    };
    let records: Vec<SweepRecord> = lambdas
        .par_iter()
        .map(|&l| match sweep_one(spec, l, eps, limit.as_ref()) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("lambda = {l}: {e}");
                failed(l)
            }
        })
        .collect();

    let violations: Vec<(usize, f64)> = records
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].valid && w[1].valid && w[0].mu > w[1].mu + MONOTONE_SLACK)
        .map(|(i, w)| (i, w[0].mu - w[1].mu))
        .collect();

    let last_decade_change = records.last().and_then(|last| {
        let target = last.lambda / 10.0;
        records
            .iter()
            .find(|r| r.valid && target > 0.0 && (r.lambda / target - 1.0).abs() < 1e-9)
            .filter(|_| last.valid)
            .map(|prev| last.mu - prev.mu)
    });
    let divergent = last_decade_change.is_some_and(|d| d.is_nan() || d > DIVERGENCE_THRESHOLD);

    let m = &spec.weight.m;
    let cells = |pred: &dyn Fn(f64) -> bool| {
        (0..spec.tgrid.steps)
            .map(|j| (1..=spec.grid.n).filter(|&i| pred(m.get(i, j))).count())
            .sum::<usize>()
    };
    let threshold = spec.weight.threshold;
    Ok(SweepOutcome {
        records,
        eps,
        violations,
        last_decade_change,
        divergent,
        s_eps_cells: cells(&|v| v >= eps),
        vanishing_cells: cells(&|v| v < threshold),
    })
}

/// Compare the largest-`lambda` record against a non-trivial limit.
pub fn compare_to_limit(
    spec: &ProblemSpec,
    outcome: &SweepOutcome,
    lim: &LimitMonodromy,
    q: f64,
) -> Result<ConvergenceReport> {
    if lim.trivial {
        return Err(Error::TrivialLimitComparison);
    }
    let last = outcome
        .records
        .iter()
        .rev()
        .find(|r| r.valid && !r.trivial)
        .ok_or_else(|| Error::InsufficientData("no valid record".into()))?;
    let f = prepare(spec, last.lambda)?;
    let p = monodromy(&f);
    let mut res = spectral_radius(&p, SpectralOptions::default())?;
    finish(&mut res, spec.tgrid.period);
    let (h, dt) = (spec.grid.h, spec.tgrid.dt);

    let mut u = normalized_periodic(periodic_eigenfunction(&f, &res)?.samples, h, dt);
    let mut u_inf = lim.eigenfunction(spec)?;
    align_sign(&mut u);
    align_sign(&mut u_inf);
    let level_dist = u
        .iter()
        .zip(&u_inf)
        .map(|(a, b)| lq_dist(a, b, h, q))
        .collect();

    let unit = |w: &[f64]| -> Vec<f64> {
        let s = (h * w.iter().map(|v| v * v).sum::<f64>()).sqrt();
        w.iter().map(|v| v / s).collect()
    };
    let eigvec_dist_l2 = lq_dist(&unit(&res.w), &unit(&lim.w_inf), h, 2.0);

    Ok(ConvergenceReport {
        lambda_max: last.lambda,
        mu_lambda: res.mu,
        mu_inf: lim.mu_inf,
        mu_gap: (res.mu - lim.mu_inf).abs(),
        p_diff_max: (&p.p - &lim.pinf).amax(),
        q,
        level_dist,
        eigvec_dist_l2,
        p_norm_decay: p_norm_decay(outcome),
        trivial: false,
    })
}

/// Report for a sweep without a usable limit: only the operator decay, and
/// the trivial flag from the sentinel or the divergence heuristic.
pub fn trivial_report(outcome: &SweepOutcome, lim: Option<&LimitMonodromy>) -> ConvergenceReport {
    let last = outcome.records.iter().rev().find(|r| r.valid);
    ConvergenceReport {
        lambda_max: last.map_or(f64::NAN, |r| r.lambda),
        mu_lambda: last.map_or(f64::NAN, |r| r.mu),
        mu_inf: lim.map_or(f64::NAN, |l| l.mu_inf),
        mu_gap: f64::NAN,
        p_diff_max: lim.map_or(f64::NAN, |l| last.map_or(f64::NAN, |r| (r.p_max - l.pinf.amax()).abs())),
        q: f64::NAN,
        level_dist: Vec::new(),
        eigvec_dist_l2: f64::NAN,
        p_norm_decay: p_norm_decay(outcome),
        trivial: lim.is_some_and(|l| l.trivial) || outcome.divergent,
    }
}

fn p_norm_decay(outcome: &SweepOutcome) -> Vec<(f64, f64)> {
    outcome.records.iter().filter(|r| r.valid).map(|r| (r.lambda, r.p_max)).collect()
}

fn align_sign(levels: &mut [Vec<f64>]) {
    let peak = levels
        .iter()
        .flatten()
        .copied()
        .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    if peak < 0.0 {
        levels.iter_mut().flatten().for_each(|v| *v = -*v);
    }
}

fn lq_dist(a: &[f64], b: &[f64], h: f64, q: f64) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if q.is_infinite() {
        d.fold(0.0, f64::max)
    } else {
        (h * d.map(|v| v.powf(q)).sum::<f64>()).powf(1.0 / q)
    }
}

/// Slope of `log s_eps_mass` against `log lambda` over valid records with
/// `lambda >= 10`.
pub fn vanishing_rate(outcome: &SweepOutcome) -> Result<f64> {
    if outcome.s_eps_cells == 0 {
        return Err(Error::NotApplicable(format!("the set m >= {} is empty", outcome.eps)));
    }
    let pts: Vec<(f64, f64)> = outcome
        .records
        .iter()
        .filter(|r| r.valid && !r.trivial && r.lambda >= 10.0 && r.s_eps_mass > 0.0)
        .map(|r| (r.lambda, r.s_eps_mass))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable records with lambda >= 10", pts.len())));
    }
    let slope = loglog_slope(&pts);
    if outcome.vanishing_cells == 0 {
        return Err(Error::AssumptionViolated(format!(
            "the weight vanishes nowhere; fitted slope {slope:.3}"
        )));
    }
    Ok(slope)
}

/// Parse a comma separated list whose items are numbers or geometric
/// ranges such as `1e0:1e5:x10`.
pub fn parse_lambdas(src: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number `{}`", s.trim()));
    let mut out = Vec::new();
    for item in src.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.len() {
            1 => out.push(num(item)?),
            3 => {
                let (lo, hi) = (num(parts[0])?, num(parts[1])?);
                let factor = parts[2]
                    .trim()
                    .strip_prefix('x')
                    .ok_or_else(|| format!("step `{}` must look like x10", parts[2].trim()))
                    .and_then(num)?;
                if !(lo > 0.0 && hi >= lo && factor > 1.0) {
                    return Err(format!("bad range `{}`", item.trim()));
                }
                let mut k = 0;
                loop {
                    let v = lo * factor.powi(k);
                    if v > hi * (1.0 + 1e-12) {
                        break;
                    }
                    out.push(v);
                    k += 1;
                }
            }
            _ => return Err(format!("bad lambda item `{}`", item.trim())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_scenario, Discretization, Piece, Scenario};

    fn du_peng(n: usize, steps: usize) -> ProblemSpec {
        builtin_scenario(&Scenario::du_peng(), Discretization::new(n, steps)).unwrap()
    }

    fn whole(period: f64, x_lo: f64, x_hi: f64) -> CylindricalPieceSpec {
        CylindricalPieceSpec {
            pieces: vec![Piece { t_start: 0.0, t_end: period, active: vec![(x_lo, x_hi + 1.0)] }],
            strict: false,
        }
    }

    #[test]
    fn whole_domain_piece_reproduces_unpenalized_map() {
        let spec = builtin_scenario(&Scenario::heat_baseline(), Discretization::new(12, 24)).unwrap();
        let lim = limit_monodromy(&spec, &whole(1.0, 0.0, 1.0)).unwrap();
        let p0 = monodromy(&prepare(&spec, 0.0).unwrap()).p;
        assert!((&lim.pinf - &p0).amax() <= 1e-15 * p0.amax());
        assert!(!lim.trivial);
    }

    #[test]
    fn limit_is_dominated_by_every_penalty() {
        let spec = du_peng(16, 64);
        let lim = limit_monodromy(&spec, spec.pieces.as_ref().unwrap()).unwrap();
        for l in [0.0, 10.0, 1e3, 1e6] {
            let p = monodromy(&prepare(&spec, l).unwrap()).p;
            let low = (&p - &lim.pinf).min();
            assert!(low >= -1e-12, "lambda = {l}: {low}");
        }
    }

    #[test]
    fn slab_products_regroup() {
        let spec = du_peng(12, 40);
        let (ev, _) = limit_evolution(&spec, spec.pieces.as_ref().unwrap()).unwrap();
        let whole = ev.propagator(0, 40).unwrap();
        let split = ev.propagator(17, 40).unwrap() * ev.propagator(0, 17).unwrap();
        assert!((whole - split).amax() <= 1e-14);
    }

    #[test]
    fn du_peng_active_sets() {
        let spec = du_peng(9, 10);
        let (ev, _) = limit_evolution(&spec, spec.pieces.as_ref().unwrap()).unwrap();
        // t_{j+1} in [0, 0.5) or t = T (reduced to 0): whole domain
        assert_eq!(ev.active_nodes(0).len(), 9);
        assert_eq!(ev.active_nodes(9).len(), 9);
        // t_5 = 0.5 starts the restricted slab: nodes with x < 0.5
        assert_eq!(ev.active_nodes(4), vec![1, 2, 3, 4]);
        assert_eq!(ev.active_nodes(8), vec![1, 2, 3, 4]);
    }

    #[test]
    fn strict_mode_rejects_misaligned_endpoints() {
        let mut spec = du_peng(8, 16);
        let mut pieces = spec.pieces.clone().unwrap();
        pieces.strict = true;
        assert!(matches!(limit_evolution(&spec, &pieces), Err(Error::MisalignedPiece { .. })));
        pieces.strict = false;
        let (_, warnings) = limit_evolution(&spec, &pieces).unwrap();
        assert!(!warnings.is_empty());
        spec.theta = 0.5;
        assert!(matches!(limit_evolution(&spec, &pieces), Err(Error::Unsupported(_))));
    }

    #[test]
    fn counterexample_limit_vanishes() {
        let spec = builtin_scenario(&Scenario::counterexample_aligned(60), Discretization::new(60, 600)).unwrap();
        let lim = limit_monodromy(&spec, spec.pieces.as_ref().unwrap()).unwrap();
        assert!(lim.warnings.is_empty());
        assert_eq!(lim.pinf.amax(), 0.0);
        assert!(lim.trivial && lim.mu_inf == f64::INFINITY);
        assert!(lim.eigenfunction(&spec).is_err());
    }

    #[test]
    fn zero_weight_sweep_is_flat() {
        let spec = builtin_scenario(&Scenario::heat_baseline(), Discretization::new(16, 32)).unwrap();
        let out = sweep(&spec, &[0.0, 1.0, 100.0, 1e4], 0.5).unwrap();
        let mu0 = out.records[0].mu;
        assert!(out.records.iter().all(|r| r.mu == mu0 && r.valid));
        assert!(out.violations.is_empty() && !out.divergent);
        assert!(matches!(vanishing_rate(&out), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn full_weight_violates_assumption() {
        let text = "[grid]\nx_lo = 0\nx_hi = 1\nn = 12\n[time]\nT = 1\nM = 24\n[coefficients]\nD = 1\n\
                    [boundary]\nbc = dirichlet\n[weight]\nweight = 1\n";
        let spec = crate::model::build_problem(&text.parse().unwrap()).unwrap();
        let out = sweep(&spec, &[10.0, 100.0, 1000.0], 0.5).unwrap();
        for r in &out.records {
            assert!((r.s_eps_mass - 1.0).abs() < 1e-10);
        }
        assert!(matches!(vanishing_rate(&out), Err(Error::AssumptionViolated(_))));
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let spec = du_peng(8, 16);
        assert!(sweep(&spec, &[1.0, 0.5], 0.5).is_err());
        assert!(sweep(&spec, &[-1.0], 0.5).is_err());
        assert!(sweep(&spec, &[1.0], 0.0).is_err());
    }

    #[test]
    fn lambda_lists() {
        assert_eq!(parse_lambdas("1e0:1e3:x10").unwrap(), vec![1.0, 10.0, 100.0, 1000.0]);
        assert_eq!(parse_lambdas("0, 2.5,7").unwrap(), vec![0.0, 2.5, 7.0]);
        assert_eq!(parse_lambdas("0,1:100:x10").unwrap(), vec![0.0, 1.0, 10.0, 100.0]);
        assert!(parse_lambdas("1:10:10").is_err());
        assert!(parse_lambdas("1:2").is_err());
        assert!(parse_lambdas("a,b").is_err());
    }
}
