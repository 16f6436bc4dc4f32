//! Coefficient expressions from the config catalog.
//!
//! Grammar: a bare number, or `name(arg, ...)` where `name` is one of
//! `const`, `sin_t`, `linear_x`, `indicator_box`, `sum`, `product`.

use std::f64::consts::PI;
use std::fmt;

/// Evaluation context: the period and the snapping tolerances used for
/// half-open indicator sampling.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext {
    pub period: f64,
    pub x_tol: f64,
    pub t_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// `base + amp * sin(2 pi t / T)`
    SinT { base: f64, amp: f64 },
    /// `base + slope * x`
    LinearX { base: f64, slope: f64 },
    /// Indicator of the half-open box `[x1, x2) x [t1, t2)`.
    IndicatorBox { x1: f64, x2: f64, t1: f64, t2: f64 },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
}

impl Expr {
    /// Evaluate at `(x, t)`; `t` is expected already reduced into `[0, T)`.
    pub fn eval(&self, x: f64, t: f64, ctx: &EvalContext) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::SinT { base, amp } => base + amp * (2.0 * PI * t / ctx.period).sin(),
            Expr::LinearX { base, slope } => base + slope * x,
            Expr::IndicatorBox { x1, x2, t1, t2 } => {
                // m(x+, t+): a node sitting on a left edge belongs to the box
                let in_x = x >= x1 - ctx.x_tol && x < x2 - ctx.x_tol;
                let in_t = t >= t1 - ctx.t_tol && t < t2 - ctx.t_tol;
                if in_x && in_t {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Sum(items) => items.iter().map(|e| e.eval(x, t, ctx)).sum(),
            Expr::Product(items) => items.iter().map(|e| e.eval(x, t, ctx)).product(),
        }
    }

    pub fn parse(src: &str) -> Result<Expr, String> {
        let mut p = Parser {
            chars: src.chars().collect(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(format!("trailing input at column {}", p.pos + 1));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, name: &str, items: &[Expr]) -> fmt::Result {
            write!(f, "{name}(")?;
            for (k, e) in items.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        }
        match self {
            Expr::Const(v) => write!(f, "{v:e}"),
            Expr::SinT { base, amp } => write!(f, "sin_t({base:e}, {amp:e})"),
            Expr::LinearX { base, slope } => write!(f, "linear_x({base:e}, {slope:e})"),
            Expr::IndicatorBox { x1, x2, t1, t2 } => {
                write!(f, "indicator_box({x1:e}, {x2:e}, {t1:e}, {t2:e})")
            }
            Expr::Sum(items) => list(f, "sum", items),
            Expr::Product(items) => list(f, "product", items),
        }
    }
}

/// A parsed call `name(args...)` or a bare number, before catalog lookup.
/// Weight declarations reuse this to recognise builtin scenario names.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Number(f64),
    Call(String, Vec<Term>),
}

impl Term {
    pub fn parse(src: &str) -> Result<Term, String> {
        let mut p = Parser {
            chars: src.chars().collect(),
            pos: 0,
        };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(format!("trailing input at column {}", p.pos + 1));
        }
        Ok(t)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Term::Number(v) => Some(*v),
            Term::Call(..) => None,
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn term(&mut self) -> Result<Term, String> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                let mut args = Vec::new();
                if self.peek() == Some('(') {
                    self.pos += 1;
                    if self.peek() == Some(')') {
                        self.pos += 1;
                    } else {
                        loop {
                            args.push(self.term()?);
                            match self.peek() {
                                Some(',') => self.pos += 1,
                                Some(')') => {
                                    self.pos += 1;
                                    break;
                                }
                                _ => return Err(format!("expected `,` or `)` in `{name}(...)`")),
                            }
                        }
                    }
                }
                Ok(Term::Call(name, args))
            }
            Some(_) => {
                let start = self.pos;
                while self.pos < self.chars.len() {
                    let c = self.chars[self.pos];
                    let exp_sign = (c == '-' || c == '+')
                        && self.pos > start
                        && matches!(self.chars[self.pos - 1], 'e' | 'E');
                    if c.is_ascii_digit()
                        || c == '.'
                        || c == 'e'
                        || c == 'E'
                        || exp_sign
                        || ((c == '-' || c == '+') && self.pos == start)
                    {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let s: String = self.chars[start..self.pos].iter().collect();
                s.parse::<f64>()
                    .map(Term::Number)
                    .map_err(|_| format!("bad number `{s}`"))
            }
            None => Err("unexpected end of expression".into()),
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let t = self.term()?;
        term_to_expr(&t)
    }
}

fn numbers(name: &str, args: &[Term], want: usize) -> Result<Vec<f64>, String> {
    if args.len() != want {
        return Err(format!("`{name}` takes {want} arguments, got {}", args.len()));
    }
    args.iter()
        .map(|a| {
            a.as_number()
                .ok_or_else(|| format!("`{name}` arguments must be numbers"))
        })
        .collect()
}

pub fn term_to_expr(t: &Term) -> Result<Expr, String> {
    match t {
        Term::Number(v) => Ok(Expr::Const(*v)),
        Term::Call(name, args) => match name.as_str() {
            "const" => Ok(Expr::Const(numbers(name, args, 1)?[0])),
            "sin_t" => {
                let v = numbers(name, args, 2)?;
                Ok(Expr::SinT { base: v[0], amp: v[1] })
            }
            "linear_x" => {
                let v = numbers(name, args, 2)?;
                Ok(Expr::LinearX { base: v[0], slope: v[1] })
            }
            "indicator_box" => {
                let v = numbers(name, args, 4)?;
                if !(v[0] < v[1] && v[2] < v[3]) {
                    return Err("indicator_box needs x1 < x2 and t1 < t2".into());
                }
                Ok(Expr::IndicatorBox {
                    x1: v[0],
                    x2: v[1],
                    t1: v[2],
                    t2: v[3],
                })
            }
            "sum" | "product" => {
                if args.is_empty() {
                    return Err(format!("`{name}` needs at least one argument"));
                }
                let items = args.iter().map(term_to_expr).collect::<Result<Vec<_>, _>>()?;
                Ok(if name == "sum" {
                    Expr::Sum(items)
                } else {
                    Expr::Product(items)
                })
            }
            other => Err(format!("unknown expression `{other}`")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CTX: EvalContext = EvalContext {
        period: 1.0,
        x_tol: 1e-12,
        t_tol: 1e-12,
    };

    #[test]
    fn parses_catalog() {
        assert_eq!(Expr::parse("2.5").unwrap(), Expr::Const(2.5));
        assert_eq!(Expr::parse(" -3e-1 ").unwrap(), Expr::Const(-0.3));
        assert_eq!(
            Expr::parse("sin_t(1, 0.5)").unwrap(),
            Expr::SinT { base: 1.0, amp: 0.5 }
        );
        let e = Expr::parse("sum(indicator_box(0,0.5,0,1), const(2))").unwrap();
        assert_eq!(e.eval(0.25, 0.5, &CTX), 3.0);
        assert_eq!(e.eval(0.75, 0.5, &CTX), 2.0);
    }

    #[test]
    fn indicator_is_half_open() {
        let e = Expr::parse("indicator_box(0.5, 1, 0.25, 0.75)").unwrap();
        assert_eq!(e.eval(0.5, 0.25, &CTX), 1.0);
        assert_eq!(e.eval(1.0, 0.5, &CTX), 0.0);
        assert_eq!(e.eval(0.6, 0.75, &CTX), 0.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("sin_t(1)").is_err());
        assert!(Expr::parse("bogus(1)").is_err());
        assert!(Expr::parse("sum(1, 2").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("product(linear_x(0.1, 2), sin_t(1, 0.3333333333333333))").unwrap();
        assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
    }
}
