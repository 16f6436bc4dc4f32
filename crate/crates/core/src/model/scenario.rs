//! Builtin scenarios, rendered as config documents so that `demo` output
//! and programmatic construction go through the same parser.

use super::config::{build_problem, counterexample_weight, du_peng_weight};
use super::{ConfigDocument, Expr, ProblemSpec};
use crate::error::{Error, Result};
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// `u_t - u_xx = 0`, Dirichlet, no penalty.
    HeatBaseline { x_lo: f64, x_hi: f64, period: f64 },
    /// Penalty switched on over `Omega \ U0` from `t_star` to the end of the period.
    DuPeng {
        x_lo: f64,
        x_hi: f64,
        period: f64,
        u0: (f64, f64),
        t_star: f64,
    },
    /// Two interlocking L-shaped penalized blocks; `Omega = (x[0], x[5])`.
    Counterexample { x: [f64; 6], t: [f64; 6], period: f64 },
    /// `m(x, t) = p(x) q(t)`.
    Separable {
        x_lo: f64,
        x_hi: f64,
        period: f64,
        p: Expr,
        q: Expr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub n: usize,
    pub steps: usize,
    pub theta: f64,
}

impl Discretization {
    pub fn new(n: usize, steps: usize) -> Self {
        Self { n, steps, theta: 1.0 }
    }
}

impl Scenario {
    pub fn heat_baseline() -> Self {
        Scenario::HeatBaseline { x_lo: 0.0, x_hi: 1.0, period: 1.0 }
    }

    pub fn du_peng() -> Self {
        Scenario::DuPeng {
            x_lo: 0.0,
            x_hi: 1.0,
            period: 1.0,
            u0: (0.0, 0.5),
            t_star: 0.5,
        }
    }

    /// Staircase on `Omega = (0, 1)`, `T = 1`, with the abscissae snapped to
    /// the nodes of an `n`-node grid and `t_k = (2k + 1) T / 12`.
    pub fn counterexample_aligned(n: usize) -> Self {
        let h = 1.0 / (n as f64 + 1.0);
        let mut x = [0.0; 6];
        for (k, xk) in x.iter_mut().enumerate() {
            let node = (k as f64 * (n as f64 + 1.0) / 5.0).round();
            *xk = if k == 5 { 1.0 } else { node * h };
        }
        let mut t = [0.0; 6];
        for (k, tk) in t.iter_mut().enumerate() {
            *tk = (2 * k + 1) as f64 / 12.0;
        }
        Scenario::Counterexample { x, t, period: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::HeatBaseline { .. } => "heat_baseline",
            Scenario::DuPeng { .. } => "du_peng",
            Scenario::Counterexample { .. } => "counterexample",
            Scenario::Separable { .. } => "separable",
        }
    }

    /// Default discretization used by `demo` and by name lookups.
    pub fn default_discretization(&self) -> Discretization {
        match self {
            Scenario::HeatBaseline { .. } => Discretization::new(64, 256),
            Scenario::DuPeng { .. } => Discretization::new(64, 512),
            Scenario::Counterexample { .. } => Discretization::new(60, 600),
            Scenario::Separable { .. } => Discretization::new(64, 256),
        }
    }

    /// Scenario by CLI name with its default parameters.
    pub fn by_name(name: &str) -> Option<(Scenario, Discretization)> {
        let s = match name {
            "heat_baseline" => Scenario::heat_baseline(),
            "du_peng" => Scenario::du_peng(),
            "counterexample" => Scenario::counterexample_aligned(60),
            _ => return None,
        };
        let d = s.default_discretization();
        Some((s, d))
    }

    fn domain(&self) -> (f64, f64, f64) {
        match self {
            Scenario::HeatBaseline { x_lo, x_hi, period }
            | Scenario::DuPeng { x_lo, x_hi, period, .. }
            | Scenario::Separable { x_lo, x_hi, period, .. } => (*x_lo, *x_hi, *period),
            Scenario::Counterexample { x, period, .. } => (x[0], x[5], *period),
        }
    }

    fn check(&self) -> Result<()> {
        let (x_lo, x_hi, period) = self.domain();
        let res = match self {
            Scenario::DuPeng { u0, t_star, .. } => {
                du_peng_weight(x_lo, x_hi, period, *u0, *t_star).map(|_| ())
            }
            Scenario::Counterexample { x, t, .. } => {
                counterexample_weight(x_lo, x_hi, period, *x, *t).map(|_| ())
            }
            _ => Ok(()),
        };
        res.map_err(Error::BadScenarioParams)
    }

    /// Render as a config document.
    pub fn to_config_text(&self, disc: Discretization) -> Result<String> {
        self.check()?;
        let (x_lo, x_hi, period) = self.domain();
        let mut s = String::new();
        let _ = writeln!(s, "# scenario: {}", self.name());
        let _ = writeln!(s, "[grid]\nx_lo = {x_lo:e}\nx_hi = {x_hi:e}\nn = {}", disc.n);
        let _ = writeln!(s, "[time]\nT = {period:e}\nM = {}", disc.steps);
        let _ = writeln!(s, "[coefficients]\nD = 1\na = 0\nb = 0\nc0 = 0");
        let _ = writeln!(s, "[boundary]\nbc = dirichlet");
        let weight = match self {
            Scenario::HeatBaseline { .. } => "zero".to_string(),
            Scenario::DuPeng { u0, t_star, .. } => {
                format!("du_peng({:e}, {:e}, {t_star:e})", u0.0, u0.1)
            }
            Scenario::Counterexample { x, t, .. } => {
                let args: Vec<String> = x.iter().chain(t.iter()).map(|v| format!("{v:e}")).collect();
                format!("counterexample({})", args.join(", "))
            }
            Scenario::Separable { p, q, .. } => format!("separable({p}, {q})"),
        };
        let _ = writeln!(s, "[weight]\nweight = {weight}");
        let _ = writeln!(s, "[scheme]\ntheta = {:e}", disc.theta);
        Ok(s)
    }
}

pub fn builtin_scenario(scenario: &Scenario, disc: Discretization) -> Result<ProblemSpec> {
    let text = scenario.to_config_text(disc)?;
    let doc: ConfigDocument = text.parse()?;
    build_problem(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_baseline_has_zero_weight() {
        let spec = builtin_scenario(&Scenario::heat_baseline(), Discretization::new(16, 32)).unwrap();
        assert_eq!(spec.weight.m.sup_abs(), 0.0);
    }

    #[test]
    fn du_peng_cylinders() {
        let spec = builtin_scenario(&Scenario::du_peng(), Discretization::new(64, 512)).unwrap();
        let (g, tg) = (spec.grid, spec.tgrid);
        for j in 0..=tg.steps {
            for i in 1..=g.n {
                let penalized = tg.t(j) >= 0.5 && g.x(i) >= 0.5;
                assert_eq!(spec.weight.in_support(i, j), penalized);
            }
        }
    }

    #[test]
    fn counterexample_nodes_are_aligned() {
        let sc = Scenario::counterexample_aligned(60);
        let Scenario::Counterexample { x, t, .. } = &sc else { unreachable!() };
        let h = 1.0 / 61.0;
        for xk in &x[..5] {
            let f = xk / h;
            assert_eq!(f, f.round());
        }
        let spec = builtin_scenario(&sc, Discretization::new(60, 600)).unwrap();
        for tk in t {
            assert!(spec.tgrid.level_of(*tk).is_some());
        }
        // both L-blocks present at the expected levels
        let m = &spec.weight.m;
        assert_eq!(m.get(30, 100), 1.0); // [x1, x5) during [t0, t1)
        assert_eq!(m.get(5, 100), 0.0);
        assert_eq!(m.get(15, 200), 1.0); // [x1, x2) during [t1, t3)
        assert_eq!(m.get(40, 400), 1.0); // [x3, x4) during [t2, t4)
        assert_eq!(m.get(10, 500), 1.0); // [x0, x4) during [t4, t5)
        assert_eq!(m.get(55, 500), 0.0);
        assert_eq!(m.get(30, 570), 0.0);
    }

    #[test]
    fn counterexample_rejects_bad_times() {
        let mut sc = Scenario::counterexample_aligned(60);
        if let Scenario::Counterexample { t, .. } = &mut sc {
            t.swap(1, 2);
        }
        assert!(matches!(
            builtin_scenario(&sc, Discretization::new(60, 600)),
            Err(Error::BadScenarioParams(_))
        ));
    }

    #[test]
    fn separable_weight() {
        let sc = Scenario::Separable {
            x_lo: 0.0,
            x_hi: 1.0,
            period: 1.0,
            p: Expr::LinearX { base: 0.0, slope: 2.0 },
            q: Expr::SinT { base: 1.0, amp: 0.5 },
        };
        let spec = builtin_scenario(&sc, Discretization::new(7, 8)).unwrap();
        let (g, tg) = (spec.grid, spec.tgrid);
        let expected = 2.0 * g.x(3) * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * tg.t(2)).sin());
        assert!((spec.weight.m.get(3, 2) - expected).abs() < 1e-15);
    }
}
