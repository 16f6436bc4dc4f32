//! Theta-scheme time stepping of `u_t + A(t) u + lambda m u = f`.
//!
//! Step `j -> j + 1` solves
//! `(I + theta dt (A_{j+1} + lambda M_{j+1})) u^{j+1}
//!    = (I - (1 - theta) dt (A_j + lambda M_j)) u^j + dt f^{j+theta}`,
//! with the penalty always inside the implicit part.

use crate::error::{Error, Result};
use crate::model::{EndCondition, ProblemSpec};
use crate::operator::{assemble_a, assemble_penalty, mesh_peclet_ok};
use crate::tridiag::{ThomasFactor, Tridiagonal};

/// Cached step matrices for one value of `lambda` over a full period.
#[derive(Debug, Clone)]
pub struct StepFactorization {
    pub lambda: f64,
    pub theta: f64,
    pub dt: f64,
    pub h: f64,
    pub n: usize,
    pub steps: usize,
    /// True iff `theta = 1` and every left matrix is a nonsingular M-matrix,
    /// so each step maps nonnegative vectors to nonnegative vectors.
    pub positivity: bool,
    pub warnings: Vec<String>,
    alpha: f64,
    bc: (EndCondition, EndCondition),
    ops: Vec<Tridiagonal>,
    penalties: Vec<Vec<f64>>,
    left: Vec<ThomasFactor>,
    right: Vec<Option<Tridiagonal>>,
}

pub fn prepare(spec: &ProblemSpec, lambda: f64) -> Result<StepFactorization> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::BadScenarioParams(format!("lambda must be >= 0, got {lambda}")));
    }
    let steps = spec.tgrid.steps;
    let dt = spec.tgrid.dt;
    let theta = spec.theta;
    let ops: Vec<Tridiagonal> = (0..=steps).map(|j| assemble_a(spec, j).matrix).collect();
    let penalties: Vec<Vec<f64>> = (0..=steps)
        .map(|j| {
            assemble_penalty(spec, j)
                .values
                .into_iter()
                .map(|m| lambda * m)
                .collect()
        })
        .collect();

    let mut warnings = Vec::new();
    let peclet = mesh_peclet_ok(spec);
    if !peclet {
        let msg = format!(
            "mesh Peclet condition violated (h = {}); step matrices may lose positivity",
            spec.grid.h
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut left = Vec::with_capacity(steps);
    let mut right = Vec::with_capacity(steps);
    let mut positivity = theta == 1.0;
    for j in 0..steps {
        let l = ops[j + 1].shifted_identity(theta * dt, Some(&penalties[j + 1]));
        if positivity && !(l.has_z_pattern() && l.strictly_diagonally_dominant()) {
            positivity = false;
        }
        left.push(ThomasFactor::new(&l).ok_or(Error::SingularStep { level: j })?);
        right.push(if theta < 1.0 {
            Some(ops[j].shifted_identity(-(1.0 - theta) * dt, Some(&penalties[j])))
        } else {
            None
        });
    }
    if theta == 1.0 && !positivity {
        let msg = "step matrices are not M-matrices; positivity is not certified".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(StepFactorization {
        lambda,
        theta,
        dt,
        h: spec.grid.h,
        n: spec.grid.n,
        steps,
        positivity,
        warnings,
        alpha: spec.coeff.alpha,
        bc: (spec.bc.left, spec.bc.right),
        ops,
        penalties,
        left,
        right,
    })
}

/// Source term samples at interior nodes, one vector per level `0..=M`.
/// Time is not reduced modulo the period.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingField {
    pub levels: Vec<Vec<f64>>,
}

impl ForcingField {
    pub fn zero(n: usize, steps: usize) -> Self {
        Self {
            levels: vec![vec![0.0; n]; steps + 1],
        }
    }

    pub fn sample(spec: &ProblemSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let g = spec.grid;
        let levels = (0..=spec.tgrid.steps)
            .map(|j| {
                let t = j as f64 * spec.tgrid.dt;
                (1..=g.n).map(|i| f(g.x(i), t)).collect()
            })
            .collect();
        Self { levels }
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|l| l.iter().all(|&v| v == 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `states[k]` is the solution at level `start_level + k`.
    pub states: Vec<Vec<f64>>,
    pub lambda: f64,
    pub start_level: usize,
}

impl Trajectory {
    pub fn end_level(&self) -> usize {
        self.start_level + self.states.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gamma: f64,
    /// `lhs / rhs`, or 0 when both sides vanish.
    pub ratio: f64,
}

impl StepFactorization {
    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        Ok(())
    }

    /// Operator `A` at level `j`.
    pub fn operator(&self, j: usize) -> &Tridiagonal {
        &self.ops[j]
    }

    /// `lambda * m` at level `j`.
    pub fn penalty(&self, j: usize) -> &[f64] {
        &self.penalties[j]
    }

    /// Apply `L_j^{-1}` in place.
    pub fn solve_left(&self, j: usize, v: &mut [f64]) {
        self.left[j].solve_in_place(v);
    }

    /// Apply the right matrix `R_j` (identity for `theta = 1`).
    pub fn apply_right(&self, j: usize, v: &[f64], out: &mut [f64]) {
        match &self.right[j] {
            Some(r) => r.apply(v, out),
            None => out.copy_from_slice(v),
        }
    }

    /// One homogeneous step `j -> j + 1` in place.
    pub fn step(&self, j: usize, v: &mut [f64], scratch: &mut [f64]) {
        if let Some(r) = &self.right[j] {
            r.apply(v, scratch);
            v.copy_from_slice(scratch);
        }
        self.left[j].solve_in_place(v);
    }

    /// Discrete evolution operator `U(t_to, t_from) v`.
    pub fn evolve_state(&self, v: &[f64], from: usize, to: usize) -> Result<Vec<f64>> {
        if from > to || to > self.steps {
            return Err(Error::LevelOrder { from, to });
        }
        self.check_len(v)?;
        let mut u = v.to_vec();
        let mut scratch = vec![0.0; self.n];
        for j in from..to {
            self.step(j, &mut u, &mut scratch);
        }
        Ok(u)
    }

    /// Homogeneous trajectory from level `from` to `to`.
    pub fn trajectory(&self, v: &[f64], from: usize, to: usize) -> Result<Trajectory> {
        if from > to || to > self.steps {
            return Err(Error::LevelOrder { from, to });
        }
        self.check_len(v)?;
        let mut states = Vec::with_capacity(to - from + 1);
        let mut u = v.to_vec();
        let mut scratch = vec![0.0; self.n];
        states.push(u.clone());
        for j in from..to {
            self.step(j, &mut u, &mut scratch);
            states.push(u.clone());
        }
        Ok(Trajectory { states, lambda: self.lambda, start_level: from })
    }

    /// `dt f^{j+theta}`.
    fn forcing_increment(&self, f: &ForcingField, j: usize) -> Vec<f64> {
        let (a, b) = (&f.levels[j], &f.levels[j + 1]);
        a.iter()
            .zip(b)
            .map(|(fa, fb)| self.dt * ((1.0 - self.theta) * fa + self.theta * fb))
            .collect()
    }

    /// Forced recurrence over the full period starting from `u0` at level 0.
    pub fn mild_solution(&self, u0: &[f64], f: &ForcingField) -> Result<Trajectory> {
        self.check_len(u0)?;
        if f.levels.len() != self.steps + 1 {
            return Err(Error::DimensionMismatch { expected: self.steps + 1, got: f.levels.len() });
        }
        for l in &f.levels {
            self.check_len(l)?;
        }
        let mut states = Vec::with_capacity(self.steps + 1);
        let mut u = u0.to_vec();
        let mut rhs = vec![0.0; self.n];
        states.push(u.clone());
        for j in 0..self.steps {
            self.apply_right(j, &u, &mut rhs);
            for (r, g) in rhs.iter_mut().zip(self.forcing_increment(f, j)) {
                *r += g;
            }
            self.solve_left(j, &mut rhs);
            u.copy_from_slice(&rhs);
            states.push(u.clone());
        }
        Ok(Trajectory { states, lambda: self.lambda, start_level: 0 })
    }

    /// Discrete variation of constants:
    /// `U(j, 0) u0 + sum_{k<j} U(j, k+1) L_k^{-1} dt f^{k+theta}`.
    pub fn variation_of_constants(&self, u0: &[f64], f: &ForcingField, to: usize) -> Result<Vec<f64>> {
        let mut total = self.evolve_state(u0, 0, to)?;
        for k in 0..to {
            let mut g = self.forcing_increment(f, k);
            self.solve_left(k, &mut g);
            let part = self.evolve_state(&g, k + 1, to)?;
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        Ok(total)
    }

    /// `h |u|^2 + h |D+ u / h|^2` plus the Robin boundary terms.
    pub fn v_norm_sq(&self, u: &[f64]) -> f64 {
        let h = self.h;
        let n = u.len();
        let l2: f64 = u.iter().map(|x| x * x).sum();
        let mut grad: f64 = u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        let mut boundary = 0.0;
        match self.bc.0 {
            EndCondition::Dirichlet => grad += u[0] * u[0],
            EndCondition::Robin { b0 } => boundary += b0 * u[0] * u[0],
        }
        match self.bc.1 {
            EndCondition::Dirichlet => grad += u[n - 1] * u[n - 1],
            EndCondition::Robin { b0 } => boundary += b0 * u[n - 1] * u[n - 1],
        }
        h * l2 + grad / h + boundary
    }

    /// Lattice surrogate of the a priori energy estimate between the first
    /// and last level of `traj` (trapezoidal rule in time).
    pub fn energy_report(&self, traj: &Trajectory, f: &ForcingField, gamma: f64) -> EnergyReport {
        let h = self.h;
        let dt = self.dt;
        let s = traj.start_level;
        let t_end = traj.end_level();
        let l2 = |v: &[f64]| h * v.iter().map(|x| x * x).sum::<f64>();
        let weight = |j: usize| (2.0 * gamma * (t_end - j) as f64 * dt).exp();
        let trap = |g: &dyn Fn(usize) -> f64| -> f64 {
            let mut acc = 0.0;
            for j in s..t_end {
                acc += 0.5 * dt * (g(j) + g(j + 1));
            }
            acc
        };
        let u = |j: usize| &traj.states[j - s];
        let v_term = trap(&|j| weight(j) * self.v_norm_sq(u(j)));
        let pen_term = trap(&|j| {
            weight(j)
                * h
                * u(j)
                    .iter()
                    .zip(&self.penalties[j])
                    .map(|(x, p)| p * x * x)
                    .sum::<f64>()
        });
        let f_term = trap(&|j| weight(j) * l2(&f.levels[j]));
        let lhs = 0.5 * l2(u(t_end)) + 0.25 * self.alpha * v_term + pen_term;
        let rhs = 0.5 * weight(s) * l2(u(s)) + f_term / self.alpha;
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        EnergyReport { lhs, rhs, gamma, ratio }
    }
}
