//! The `perevo` command line.
//!
//! Exit codes: 0 success, 1 internal failure, 2 configuration or usage
//! error, 3 trivial period map, 4 power iteration did not converge,
//! 5 Gaussian envelope or monotonicity breached, 6 path condition fails,
//! 7 irregular support or an empty slice.

use crate::admissibility::{build_mask, check_assumption};
use crate::error::Error;
use crate::evolve::prepare;
use crate::io::{self, num, RunManifest};
use crate::kernel::{check_monotone_in_lambda, fit_gaussian, kernel_matrix};
use crate::limitflow::{compare_to_limit, limit_monodromy, parse_lambdas, sweep, trivial_report, vanishing_rate};
use crate::model::{build_problem, builtin_scenario, ConfigDocument, ProblemSpec, Scenario};
use crate::operator::garding_audit;
use crate::spectral::{finish, monodromy, periodic_eigenfunction, spectral_radius, SpectralOptions};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "perevo", version, about = "Periodic-parabolic principal eigenvalues under degenerate penalties")]
pub struct Cli {
    /// Configuration document; alternative to a builtin scenario name.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (PEREVO_OUT takes precedence).
    #[arg(long, global = true, default_value = "perevo-out")]
    pub out: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for the random-vector coercivity audit.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Interior nodes for builtin scenarios.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Time steps per period for builtin scenarios.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Principal eigenpair at one penalty.
    Eigen {
        scenario: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
    /// Penalty sweep with limit diagnostics.
    Sweep {
        scenario: Option<String>,
        /// Ascending list; items may be ranges like 1e0:1e5:x10.
        #[arg(long, default_value = "0,1e0:1e5:x10")]
        lambdas: String,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Exponent of the per-level eigenfunction distances.
        #[arg(long, default_value_t = 2.0)]
        q: f64,
    },
    /// Kernel between times s < t with a Gaussian envelope audit.
    Kernel {
        scenario: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long)]
        t: f64,
    },
    /// Support regularity and the forward path condition.
    Check { scenario: Option<String> },
    /// Eigenpair, sweep and check for a builtin scenario.
    Demo { scenario: String },
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl Failure {
    fn new(code: i32, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema { .. }
        | Error::Invariant { .. }
        | Error::BadScenarioParams(_)
        | Error::MisalignedPiece { .. }
        | Error::LevelOrder { .. }
        | Error::BadExponents { .. }
        | Error::Unsupported(_) => 2,
        Error::TrivialLimit => 3,
        Error::NoConvergence(_) => 4,
        _ => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(exit_code(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(1, format!("i/o: {e}"))
    }
}

type Outcome = std::result::Result<i32, Failure>;

struct Ctx {
    out: PathBuf,
    seed: u64,
    outputs: Vec<String>,
}

impl Ctx {
    fn write(&mut self, name: &str, contents: &str) -> std::result::Result<(), Failure> {
        let path = self.out.join(name);
        io::write_atomic(&path, contents.as_bytes())?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &Value) -> std::result::Result<(), Failure> {
        self.write(name, &io::to_json_text(v))
    }
}

fn load(cli: &Cli, scenario: Option<&str>) -> std::result::Result<(ProblemSpec, String), Failure> {
    match (&cli.config, scenario) {
        (Some(_), Some(_)) => Err(Failure::new(2, "give either --config or a scenario name, not both")),
        (None, None) => Err(Failure::new(2, "no --config and no scenario name")),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
            let doc: ConfigDocument = text.parse()?;
            Ok((build_problem(&doc)?, path.display().to_string()))
        }
        (None, Some(name)) => {
            let (sc, mut disc) = Scenario::by_name(name).ok_or_else(|| {
                Failure::new(2, format!("unknown scenario `{name}` (heat_baseline, du_peng, counterexample)"))
            })?;
            if let Some(n) = cli.n {
                disc.n = n;
            }
            if let Some(m) = cli.steps {
                disc.steps = m;
            }
            Ok((builtin_scenario(&sc, disc)?, format!("builtin:{name}")))
        }
    }
}

fn eigen(ctx: &mut Ctx, spec: &ProblemSpec, lambda: f64) -> Outcome {
    let f = prepare(spec, lambda)?;
    for w in &f.warnings {
        log::warn!("{w}");
    }
    let p = monodromy(&f);
    let mut res = spectral_radius(&p, SpectralOptions::default())?;
    finish(&mut res, spec.tgrid.period);

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let gamma0 = spec.gamma0();
    let audit = garding_audit(spec, gamma0, 64, &mut rng);
    let mut v = io::spectral_json(&res);
    let obj = v.as_object_mut().expect("object");
    obj.insert("positivity".into(), f.positivity.into());
    obj.insert("gamma0".into(), num(gamma0));
    obj.insert("garding_min_ratio".into(), num(audit.min_ratio));
    if res.trivial_limit {
        ctx.write_json("eigen.json", &v)?;
        println!("lambda = {lambda}: period map below floor, mu = +inf");
        return Ok(3);
    }
    let u = periodic_eigenfunction(&f, &res)?;
    obj.insert("periodicity_defect".into(), num(u.periodicity_defect()));
    ctx.write_json("eigen.json", &v)?;
    ctx.write("eigenfunction.csv", &io::trajectory_csv(&spec.grid, &spec.tgrid, &u.samples))?;
    println!("lambda = {lambda}: mu = {} r = {:e} residual = {:e}", res.mu, res.r, res.residual);
    Ok(0)
}

fn run_sweep(ctx: &mut Ctx, spec: &ProblemSpec, lambdas: &str, eps: f64, q: f64) -> Outcome {
    let lambdas = parse_lambdas(lambdas).map_err(|e| Failure::new(2, format!("--lambdas: {e}")))?;
    let outcome = sweep(spec, &lambdas, eps)?;
    let lim = match &spec.pieces {
        Some(p) => match limit_monodromy(spec, p) {
            Ok(l) => {
                for w in &l.warnings {
                    log::warn!("{w}");
                }
                Some(l)
            }
            Err(Error::Unsupported(msg)) => {
                log::warn!("{msg}");
                None
            }
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    let report = match &lim {
        Some(l) if !l.trivial => compare_to_limit(spec, &outcome, l, q)?,
        _ => trivial_report(&outcome, lim.as_ref()),
    };
    let mut v = io::convergence_json(&report);
    let obj = v.as_object_mut().expect("object");
    obj.insert("divergent".into(), outcome.divergent.into());
    obj.insert("last_decade_change".into(), num(outcome.last_decade_change.unwrap_or(f64::NAN)));
    let viol: Vec<Value> = outcome
        .violations
        .iter()
        .map(|&(i, d)| serde_json::json!([i, num(d)]))
        .collect();
    obj.insert("monotonicity_violations".into(), Value::Array(viol));
    obj.insert("eps".into(), num(eps));
    match vanishing_rate(&outcome) {
        Ok(s) => {
            obj.insert("vanishing_slope".into(), num(s));
        }
        Err(e) => {
            obj.insert("vanishing_slope".into(), Value::Null);
            obj.insert("vanishing_note".into(), e.to_string().into());
        }
    }
    ctx.write("sweep.csv", &io::sweep_csv(&outcome.records))?;
    ctx.write_json("convergence.json", &v)?;
    let valid: Vec<_> = outcome.records.iter().filter(|r| r.valid).collect();
    let mu: Vec<(f64, f64)> = valid.iter().map(|r| (r.lambda, r.mu)).collect();
    let mass: Vec<(f64, f64)> = valid.iter().map(|r| (r.lambda, r.s_eps_mass)).collect();
    ctx.write("mu.dat", &io::two_column("lambda", "mu", &mu))?;
    ctx.write("s_eps_mass.dat", &io::two_column("lambda", "s_eps_mass", &mass))?;
    for r in &outcome.records {
        println!("lambda = {:e}: mu = {} valid = {}", r.lambda, r.mu, r.valid);
    }
    println!("trivial = {} divergent = {}", report.trivial, outcome.divergent);
    Ok(0)
}

fn to_level(spec: &ProblemSpec, t: f64, name: &str) -> std::result::Result<usize, Failure> {
    let dt = spec.tgrid.dt;
    if !(t >= 0.0 && t <= spec.tgrid.period * (1.0 + 1e-12)) {
        return Err(Failure::new(2, format!("--{name} {t} is outside [0, T]")));
    }
    let level = (t / dt).round() as usize;
    if (level as f64 * dt - t).abs() > 1e-9 * dt {
        log::warn!("--{name} {t} is not a time level; using t = {}", level as f64 * dt);
    }
    Ok(level)
}

fn kernel(ctx: &mut Ctx, spec: &ProblemSpec, lambda: f64, s: f64, t: f64) -> Outcome {
    let (sl, tl) = (to_level(spec, s, "s")?, to_level(spec, t, "t")?);
    if sl >= tl {
        return Err(Failure::new(2, format!("need s < t on the lattice, got levels {sl} and {tl}")));
    }
    let f = prepare(spec, lambda)?;
    let f0 = prepare(spec, 0.0)?;
    let k = kernel_matrix(&f, sl, tl)?;
    let k0 = kernel_matrix(&f0, sl, tl)?;
    let monotone = check_monotone_in_lambda(&k0, &k)?;

    // fit pairs: elapsed (t - s) / 2^i, i = 0..3
    let mut spans: Vec<usize> = (0..4).map(|i| ((tl - sl) as f64 / f64::powi(2.0, i)).round() as usize).collect();
    spans.retain(|&d| d >= 1);
    spans.dedup();
    let fits = spans
        .iter()
        .map(|&d| kernel_matrix(&f0, sl, sl + d))
        .collect::<crate::error::Result<Vec<_>>>()?;
    let mut v = match fit_gaussian(&fits, std::slice::from_ref(&k)) {
        Ok(fit) => io::gaussian_fit_json(&fit),
        Err(e) => {
            log::warn!("{e}");
            serde_json::json!({ "Mconst": null, "omega": null, "cconst": null, "max_violation": null })
        }
    };
    let breach = v["max_violation"].as_f64().is_some_and(|x| x > 0.0) || monotone > 1e-12 * k0.max_entry();
    let obj = v.as_object_mut().expect("object");
    obj.insert("lambda".into(), num(lambda));
    obj.insert("s".into(), num(sl as f64 * spec.tgrid.dt));
    obj.insert("t".into(), num(tl as f64 * spec.tgrid.dt));
    obj.insert("peak".into(), num(k.peak()));
    obj.insert("monotone_violation".into(), num(monotone));
    ctx.write("kernel.csv", &io::kernel_csv(&spec.grid, &k))?;
    ctx.write_json("gaussian_fit.json", &v)?;
    println!("peak = {} monotone_violation = {:e} max_violation = {}", k.peak(), monotone, v["max_violation"]);
    Ok(if breach { 5 } else { 0 })
}

fn check(ctx: &mut Ctx, spec: &ProblemSpec) -> Outcome {
    let mask = build_mask(&spec.weight, &spec.grid, &spec.tgrid);
    let rep = check_assumption(&mask);
    ctx.write_json("admissibility.json", &io::admissibility_json(&rep, &mask))?;
    ctx.write("mask.txt", &mask.to_text())?;
    println!("{}", rep.summary());
    Ok(if !rep.regular_support || !rep.slices_nonempty {
        7
    } else if !rep.assumption_holds {
        6
    } else {
        0
    })
}

fn dispatch(cli: &Cli, ctx: &mut Ctx) -> std::result::Result<(i32, String, ProblemSpec), Failure> {
    let (code, label, spec) = match &cli.command {
        Command::Eigen { scenario, lambda } => {
            let (spec, label) = load(cli, scenario.as_deref())?;
            (eigen(ctx, &spec, *lambda)?, label, spec)
        }
        Command::Sweep { scenario, lambdas, eps, q } => {
            let (spec, label) = load(cli, scenario.as_deref())?;
            (run_sweep(ctx, &spec, lambdas, *eps, *q)?, label, spec)
        }
        Command::Kernel { scenario, lambda, s, t } => {
            let (spec, label) = load(cli, scenario.as_deref())?;
            (kernel(ctx, &spec, *lambda, *s, *t)?, label, spec)
        }
        Command::Check { scenario } => {
            let (spec, label) = load(cli, scenario.as_deref())?;
            (check(ctx, &spec)?, label, spec)
        }
        Command::Demo { scenario } => {
            let (spec, label) = load(cli, Some(scenario))?;
            let e = eigen(ctx, &spec, 0.0)?;
            run_sweep(ctx, &spec, "0,1e0:1e5:x10", 0.5, 2.0)?;
            let c = check(ctx, &spec)?;
            println!("eigen exit {e}, check exit {c}");
            (0, label, spec)
        }
    };
    Ok((code, label, spec))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Eigen { .. } => "eigen",
        Command::Sweep { .. } => "sweep",
        Command::Kernel { .. } => "kernel",
        Command::Check { .. } => "check",
        Command::Demo { .. } => "demo",
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let out = std::env::var_os("PEREVO_OUT").map(PathBuf::from).unwrap_or_else(|| cli.out.clone());
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let start = Instant::now();
    let mut ctx = Ctx { out, seed: cli.seed, outputs: Vec::new() };
    match dispatch(&cli, &mut ctx) {
        Ok((code, label, spec)) => {
            let manifest = RunManifest {
                command: command_name(&cli.command).into(),
                config: label,
                digest: spec.digest(),
                outputs: ctx.outputs.clone(),
                wall_time_s: start.elapsed().as_secs_f64(),
                version: env!("CARGO_PKG_VERSION").into(),
            };
            let path = ctx.out.join("manifest.json");
            if let Err(e) = io::write_atomic(Path::new(&path), io::to_json_text(&manifest.to_json()).as_bytes()) {
                eprintln!("error: i/o: {e}");
                return 1;
            }
            code
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}
