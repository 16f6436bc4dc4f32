//! Plain-text `key = value` configuration documents.
//!
//! ```text
//! [grid]          x_lo, x_hi, n
//! [time]          T, M
//! [coefficients]  D, a, b, c0 (expressions), alpha (optional)
//! [boundary]      bc = dirichlet|neumann|robin, b0_left, b0_right,
//!                 bc_left / bc_right (optional per-end override)
//! [weight]        weight (expression or builtin), threshold (optional)
//! [scheme]        theta
//! [limit]         piece = t_start t_end lo:hi ... | t_start t_end empty
//!                 strict = true|false
//! ```
//!
//! `#` starts a comment. `piece` is the only key that may repeat.

use super::expr::{term_to_expr, EvalContext, Expr, Term};
use super::{
    BoundarySpec, CoefficientField, CylindricalPieceSpec, EndCondition, Grid1D, Lattice, Piece,
    ProblemSpec, TimeGrid, WeightField,
};
use crate::error::{Error, Result};
use std::str::FromStr;

const SCHEMA: &[(&str, &[&str])] = &[
    ("grid", &["x_lo", "x_hi", "n"]),
    ("time", &["T", "M"]),
    ("coefficients", &["D", "a", "b", "c0", "alpha"]),
    (
        "boundary",
        &["bc", "b0_left", "b0_right", "bc_left", "bc_right"],
    ),
    ("weight", &["weight", "threshold"]),
    ("scheme", &["theta"]),
    ("limit", &["piece", "strict"]),
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

/// A parsed and schema-checked configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    entries: Vec<Entry>,
}

fn schema_err(line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::Schema {
        line,
        key: key.into(),
        msg: msg.into(),
    }
}

impl FromStr for ConfigDocument {
    type Err = Error;

    fn from_str(src: &str) -> Result<Self> {
        let mut section: Option<String> = None;
        let mut entries: Vec<Entry> = Vec::new();
        for (k, raw) in src.lines().enumerate() {
            let line = k + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            if let Some(name) = text.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    return Err(schema_err(line, name, "unknown section"));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = text.split_once('=') else {
                return Err(schema_err(line, text, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(sec) = section.clone() else {
                return Err(schema_err(line, key, "key outside of any section"));
            };
            let allowed = SCHEMA.iter().find(|(s, _)| *s == sec).unwrap().1;
            if !allowed.contains(&key) {
                return Err(schema_err(line, key, format!("unknown key in [{sec}]")));
            }
            if value.is_empty() {
                return Err(schema_err(line, key, "empty value"));
            }
            if key != "piece" && entries.iter().any(|e| e.section == sec && e.key == key) {
                return Err(schema_err(line, key, "duplicate key"));
            }
            entries.push(Entry {
                section: sec,
                key: key.into(),
                value: value.into(),
                line,
            });
        }
        Ok(Self { entries })
    }
}

impl ConfigDocument {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
    }

    fn all<'a>(&'a self, section: &'a str, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries
            .iter()
            .filter(move |e| e.section == section && e.key == key)
    }

    fn required(&self, section: &str, key: &str) -> Result<&Entry> {
        self.get(section, key)
            .ok_or_else(|| schema_err(0, key, format!("missing required key in [{section}]")))
    }

    fn number<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| schema_err(e.line, key, format!("cannot parse `{}`", e.value))),
        }
    }

    fn req_number<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.required(section, key)?;
        Ok(self.number(section, key)?.unwrap())
    }

    fn expr(&self, key: &str, default: Option<Expr>) -> Result<Expr> {
        match self.get("coefficients", key) {
            None => default.ok_or_else(|| {
                schema_err(0, key, "missing required key in [coefficients]")
            }),
            Some(e) => Expr::parse(&e.value).map_err(|m| schema_err(e.line, key, m)),
        }
    }
}

/// A weight given either as a catalog expression or by builtin name; the
/// builtins also know their piecewise-cylindrical vanishing set.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct WeightDecl {
    pub expr: Expr,
    pub pieces: Option<Vec<Piece>>,
}

fn numbers_of(name: &str, args: &[Term], want: usize) -> std::result::Result<Vec<f64>, String> {
    if args.len() != want {
        return Err(format!("`{name}` takes {want} arguments, got {}", args.len()));
    }
    args.iter()
        .map(|a| a.as_number().ok_or_else(|| format!("`{name}` arguments must be numbers")))
        .collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

pub(crate) fn du_peng_weight(
    x_lo: f64,
    x_hi: f64,
    period: f64,
    u0: (f64, f64),
    t_star: f64,
) -> std::result::Result<WeightDecl, String> {
    let (lo, hi) = u0;
    if !(x_lo <= lo && lo < hi && hi <= x_hi) {
        return Err(format!("U0 = ({lo}, {hi}) must be a nonempty subinterval of ({x_lo}, {x_hi})"));
    }
    if !(0.0 < t_star && t_star < period) {
        return Err(format!("switch time {t_star} must lie in (0, T)"));
    }
    let mut boxes = Vec::new();
    if lo > x_lo {
        boxes.push(Expr::IndicatorBox { x1: x_lo, x2: lo, t1: t_star, t2: period });
    }
    if hi < x_hi {
        boxes.push(Expr::IndicatorBox { x1: hi, x2: x_hi, t1: t_star, t2: period });
    }
    let expr = if boxes.is_empty() {
        Expr::Const(0.0)
    } else {
        Expr::Sum(boxes)
    };
    Ok(WeightDecl {
        expr,
        pieces: Some(vec![
            Piece { t_start: 0.0, t_end: t_star, active: vec![(x_lo, x_hi)] },
            Piece { t_start: t_star, t_end: period, active: vec![(lo, hi)] },
        ]),
    })
}

/// Indicator of the two interlocking L-shaped blocks between the abscissae
/// `x[0..6]` and times `t[0..6]`.
pub(crate) fn counterexample_weight(
    x_lo: f64,
    x_hi: f64,
    period: f64,
    x: [f64; 6],
    t: [f64; 6],
) -> std::result::Result<WeightDecl, String> {
    if !strictly_increasing(&x) || !strictly_increasing(&t) {
        return Err("abscissae and times must be strictly increasing".into());
    }
    let tol = 1e-12 * (x_hi - x_lo);
    if (x[0] - x_lo).abs() > tol || (x[5] - x_hi).abs() > tol {
        return Err("abscissae must span the domain: x0 = x_lo, x5 = x_hi".into());
    }
    if !(0.0 < t[0] && t[5] < period) {
        return Err("times must satisfy 0 < t0 and t5 < T".into());
    }
    let b = |x1: f64, x2: f64, t1: f64, t2: f64| Expr::IndicatorBox { x1, x2, t1, t2 };
    let expr = Expr::Sum(vec![
        b(x[1], x[5], t[0], t[1]),
        b(x[1], x[2], t[1], t[3]),
        b(x[3], x[4], t[2], t[4]),
        b(x[0], x[4], t[4], t[5]),
    ]);
    let p = |t_start: f64, t_end: f64, active: Vec<(f64, f64)>| Piece { t_start, t_end, active };
    let pieces = vec![
        p(0.0, t[0], vec![(x[0], x[5])]),
        p(t[0], t[1], vec![(x[0], x[1])]),
        p(t[1], t[2], vec![(x[0], x[1]), (x[2], x[5])]),
        p(t[2], t[3], vec![(x[0], x[1]), (x[2], x[3]), (x[4], x[5])]),
        p(t[3], t[4], vec![(x[0], x[3]), (x[4], x[5])]),
        p(t[4], t[5], vec![(x[4], x[5])]),
        p(t[5], period, vec![(x[0], x[5])]),
    ];
    Ok(WeightDecl { expr, pieces: Some(pieces) })
}

fn parse_weight(src: &str, x_lo: f64, x_hi: f64, period: f64) -> std::result::Result<WeightDecl, String> {
    let term = Term::parse(src)?;
    match &term {
        Term::Call(name, args) if name == "zero" && args.is_empty() => Ok(WeightDecl {
            expr: Expr::Const(0.0),
            pieces: Some(vec![Piece { t_start: 0.0, t_end: period, active: vec![(x_lo, x_hi)] }]),
        }),
        Term::Call(name, args) if name == "du_peng" => {
            let v = numbers_of(name, args, 3)?;
            du_peng_weight(x_lo, x_hi, period, (v[0], v[1]), v[2])
        }
        Term::Call(name, args) if name == "counterexample" => {
            let v = numbers_of(name, args, 12)?;
            let x = [v[0], v[1], v[2], v[3], v[4], v[5]];
            let t = [v[6], v[7], v[8], v[9], v[10], v[11]];
            counterexample_weight(x_lo, x_hi, period, x, t)
        }
        Term::Call(name, args) if name == "separable" => {
            if args.len() != 2 {
                return Err("`separable` takes two expressions p(x), q(t)".into());
            }
            Ok(WeightDecl {
                expr: Expr::Product(vec![term_to_expr(&args[0])?, term_to_expr(&args[1])?]),
                pieces: None,
            })
        }
        _ => Ok(WeightDecl { expr: term_to_expr(&term)?, pieces: None }),
    }
}

fn parse_piece(value: &str) -> std::result::Result<Piece, String> {
    let mut it = value.split_whitespace();
    let mut next_num = |what: &str| -> std::result::Result<f64, String> {
        it.next()
            .ok_or_else(|| format!("missing {what}"))?
            .parse::<f64>()
            .map_err(|_| format!("cannot parse {what}"))
    };
    let t_start = next_num("t_start")?;
    let t_end = next_num("t_end")?;
    let rest: Vec<&str> = value.split_whitespace().skip(2).collect();
    if rest.is_empty() {
        return Err("missing active set (`lo:hi ...` or `empty`)".into());
    }
    let mut active = Vec::new();
    if rest != ["empty"] {
        for item in rest {
            let (lo, hi) = item
                .split_once(':')
                .ok_or_else(|| format!("expected `lo:hi`, got `{item}`"))?;
            let lo = lo.parse::<f64>().map_err(|_| format!("bad bound `{lo}`"))?;
            let hi = hi.parse::<f64>().map_err(|_| format!("bad bound `{hi}`"))?;
            active.push((lo, hi));
        }
    }
    Ok(Piece { t_start, t_end, active })
}

fn end_condition(kind: &str, b0: f64) -> Option<EndCondition> {
    match kind {
        "dirichlet" => Some(EndCondition::Dirichlet),
        "neumann" => Some(EndCondition::Robin { b0: 0.0 }),
        "robin" => Some(EndCondition::Robin { b0 }),
        _ => None,
    }
}

/// Validate a config document and materialize every lattice.
pub fn build_problem(doc: &ConfigDocument) -> Result<ProblemSpec> {
    let x_lo: f64 = doc.req_number("grid", "x_lo")?;
    let x_hi: f64 = doc.req_number("grid", "x_hi")?;
    let n: usize = doc.req_number("grid", "n")?;
    if n < 2 {
        let line = doc.get("grid", "n").map_or(0, |e| e.line);
        return Err(schema_err(line, "n", "need at least 2 interior nodes"));
    }
    let grid = Grid1D::new(x_lo, x_hi, n)?;
    let period: f64 = doc.req_number("time", "T")?;
    let steps: usize = doc.req_number("time", "M")?;
    let tgrid = TimeGrid::new(period, steps)?;

    let ctx = EvalContext {
        period,
        x_tol: 1e-9 * grid.h,
        t_tol: 1e-9 * tgrid.dt,
    };
    let sample = |e: &Expr| Lattice::sample(&grid, &tgrid, |x, t| e.eval(x, t, &ctx));

    let zero = Some(Expr::Const(0.0));
    let diffusion = sample(&doc.expr("D", None)?);
    let drift_div = sample(&doc.expr("a", zero.clone())?);
    let drift = sample(&doc.expr("b", zero.clone())?);
    let potential = sample(&doc.expr("c0", zero)?);
    let alpha = match doc.number::<f64>("coefficients", "alpha")? {
        Some(a) => a,
        None => diffusion.values().iter().cloned().fold(f64::INFINITY, f64::min),
    };
    let coeff = CoefficientField { diffusion, drift_div, drift, potential, alpha };

    let bc_entry = doc.required("boundary", "bc")?;
    let b0_left = doc.number::<f64>("boundary", "b0_left")?.unwrap_or(0.0);
    let b0_right = doc.number::<f64>("boundary", "b0_right")?.unwrap_or(0.0);
    let end = |key: &str, b0: f64| -> Result<EndCondition> {
        let e = doc.get("boundary", key).unwrap_or(bc_entry);
        end_condition(&e.value, b0)
            .ok_or_else(|| schema_err(e.line, &e.key, "expected dirichlet, neumann or robin"))
    };
    let bc = BoundarySpec {
        left: end("bc_left", b0_left)?,
        right: end("bc_right", b0_right)?,
    };

    let decl = match doc.get("weight", "weight") {
        None => WeightDecl { expr: Expr::Const(0.0), pieces: None },
        Some(e) => parse_weight(&e.value, x_lo, x_hi, period)
            .map_err(|m| schema_err(e.line, "weight", m))?,
    };
    let m = sample(&decl.expr);
    let weight = match doc.number::<f64>("weight", "threshold")? {
        Some(threshold) => WeightField { m, threshold },
        None => WeightField::with_default_threshold(m),
    };

    let theta = doc.number::<f64>("scheme", "theta")?.unwrap_or(1.0);
    let mut spec = ProblemSpec::new(grid, tgrid, coeff, bc, weight, theta)?;

    let strict = match doc.get("limit", "strict") {
        None => false,
        Some(e) => e
            .value
            .parse::<bool>()
            .map_err(|_| schema_err(e.line, "strict", "expected true or false"))?,
    };
    let declared: Vec<Piece> = doc
        .all("limit", "piece")
        .map(|e| parse_piece(&e.value).map_err(|m| schema_err(e.line, "piece", m)))
        .collect::<Result<_>>()?;
    let pieces = if declared.is_empty() { decl.pieces } else { Some(declared) };
    if let Some(pieces) = pieces {
        spec = spec.with_pieces(CylindricalPieceSpec { pieces, strict })?;
    }
    Ok(spec)
}
