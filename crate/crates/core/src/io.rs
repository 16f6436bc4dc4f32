//! Output formats. Every float is written with 17 significant digits so
//! that identical runs produce byte-identical files; JSON writes non-finite
//! values as `null`.

use crate::admissibility::{validate_witness, AdmissibilityReport, SpaceTimeMask};
use crate::kernel::{GaussianFit, KernelMatrix};
use crate::limitflow::{ConvergenceReport, SweepRecord};
use crate::model::{Grid1D, TimeGrid};
use crate::spectral::SpectralResult;
use serde_json::{json, Map, Number, Value};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// `{:.16e}`, or `inf` / `-inf` / `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_f64(x).parse::<Number>().expect("formatted float is valid JSON"))
    } else {
        Value::Null
    }
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

pub fn spectral_json(res: &SpectralResult) -> Value {
    json!({
        "lambda": num(res.lambda),
        "r": num(res.r),
        "mu": num(res.mu),
        "residual": num(res.residual),
        "eigengap": num(res.eigengap),
        "iterations": res.iterations,
        "trivial_limit": res.trivial_limit,
    })
}

pub fn gaussian_fit_json(fit: &GaussianFit) -> Value {
    json!({
        "Mconst": num(fit.m_const),
        "omega": num(fit.omega),
        "cconst": num(fit.cconst),
        "max_violation": num(fit.max_violation),
    })
}

pub fn convergence_json(rep: &ConvergenceReport) -> Value {
    let decay: Vec<Value> = rep.p_norm_decay.iter().map(|&(l, p)| json!([num(l), num(p)])).collect();
    let max_level = rep.level_dist.iter().copied().fold(f64::NAN, f64::max);
    json!({
        "lambda_max": num(rep.lambda_max),
        "mu_lambda": num(rep.mu_lambda),
        "mu_inf": num(rep.mu_inf),
        "mu_gap": num(rep.mu_gap),
        "p_diff_max": num(rep.p_diff_max),
        "q": num(rep.q),
        "max_level_dist": num(max_level),
        "eigvec_dist_l2": num(rep.eigvec_dist_l2),
        "level_dist": nums(&rep.level_dist),
        "p_norm_decay": decay,
        "trivial": rep.trivial,
    })
}

pub fn admissibility_json(rep: &AdmissibilityReport, mask: &SpaceTimeMask) -> Value {
    let pair = rep
        .failing_pair
        .map_or(Value::Null, |((y, j0), (x, j1))| json!([[y, j0], [x, j1]]));
    let mut m = Map::new();
    m.insert("regular_support".into(), rep.regular_support.into());
    m.insert("slices_nonempty".into(), rep.slices_nonempty.into());
    m.insert("components".into(), rep.components.into());
    m.insert("assumption_holds".into(), rep.assumption_holds.into());
    m.insert("failing_pair".into(), pair);
    match &rep.witness_sample {
        Some(w) => {
            let cells: Vec<Value> = w.cells.iter().map(|&(i, j)| json!([i, j])).collect();
            m.insert("witness_valid".into(), validate_witness(mask, w).into());
            m.insert("witness_sample".into(), Value::Array(cells));
        }
        None => {
            m.insert("witness_valid".into(), Value::Null);
            m.insert("witness_sample".into(), Value::Null);
        }
    }
    Value::Object(m)
}

/// Long format `t,x,u`, one row per lattice point of the interior nodes.
pub fn trajectory_csv(grid: &Grid1D, tgrid: &TimeGrid, levels: &[Vec<f64>]) -> String {
    let mut s = String::from("t,x,u\n");
    for (j, level) in levels.iter().enumerate() {
        // plain j * dt: the last level is t = T, not its reduction
        let t = j as f64 * tgrid.dt;
        for (k, u) in level.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", fmt_f64(t), fmt_f64(grid.x(k + 1)), fmt_f64(*u));
        }
    }
    s
}

pub fn kernel_csv(grid: &Grid1D, k: &KernelMatrix) -> String {
    let n = k.n();
    let mut s = String::from("x,y,k\n");
    for i in 0..n {
        for j in 0..n {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt_f64(grid.x(i + 1)),
                fmt_f64(grid.x(j + 1)),
                fmt_f64(k.entries[(i, j)])
            );
        }
    }
    s
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut s = String::from("lambda,r,mu,residual,s_eps_mass,dist_to_limit_L2,trivial\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.lambda),
            fmt_f64(r.r),
            fmt_f64(r.mu),
            fmt_f64(r.residual),
            fmt_f64(r.s_eps_mass),
            fmt_f64(r.dist_to_limit_l2),
            r.trivial
        );
    }
    s
}

/// Two whitespace separated columns with a `#` header, for gnuplot.
pub fn two_column(x_name: &str, y_name: &str, rows: &[(f64, f64)]) -> String {
    let mut s = format!("# {x_name} {y_name}\n");
    for &(x, y) in rows {
        let _ = writeln!(s, "{} {}", fmt_f64(x), fmt_f64(y));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub digest: String,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub version: String,
}

impl RunManifest {
    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "config": self.config,
            "digest": self.digest,
            "outputs": self.outputs,
            "wall_time_s": num(self.wall_time_s),
            "version": self.version,
        })
    }
}
