//! Tridiagonal storage, products and the Thomas factorization.

/// `lower[i]` couples row `i` to `i - 1` (unused for `i = 0`), `upper[i]`
/// couples row `i` to `i + 1` (unused for the last row).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![1.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `I + scale * self`, optionally with an extra diagonal `scale * shift`.
    pub fn shifted_identity(&self, scale: f64, shift: Option<&[f64]>) -> Self {
        let n = self.len();
        let mut out = Self::zeros(n);
        for i in 0..n {
            let s = shift.map_or(0.0, |v| v[i]);
            out.diag[i] = 1.0 + scale * (self.diag[i] + s);
            out.lower[i] = scale * self.lower[i];
            out.upper[i] = scale * self.upper[i];
        }
        if n > 0 {
            out.lower[0] = 0.0;
            out.upper[n - 1] = 0.0;
        }
        out
    }

    /// `out = self * x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            out[i] = s;
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let n = self.len();
        let mut s = self.diag[i];
        if i > 0 {
            s += self.lower[i];
        }
        if i + 1 < n {
            s += self.upper[i];
        }
        s
    }

    /// Off-diagonal entries all `<= 0`.
    pub fn has_z_pattern(&self) -> bool {
        let n = self.len();
        (1..n).all(|i| self.lower[i] <= 0.0) && (0..n.saturating_sub(1)).all(|i| self.upper[i] <= 0.0)
    }

    /// Positive diagonal, strictly dominating its row or (for every row) its column.
    pub fn strictly_diagonally_dominant(&self) -> bool {
        let n = self.len();
        let off = |i: usize, j: usize| -> f64 {
            if j + 1 == i {
                self.lower[i].abs()
            } else if i + 1 == j {
                self.upper[i].abs()
            } else {
                0.0
            }
        };
        let rows = (0..n).all(|i| {
            let s: f64 = [i.wrapping_sub(1), i + 1]
                .iter()
                .filter(|&&j| j < n)
                .map(|&j| off(i, j))
                .sum();
            self.diag[i] > s
        });
        let cols = (0..n).all(|j| {
            let s: f64 = [j.wrapping_sub(1), j + 1]
                .iter()
                .filter(|&&i| i < n)
                .map(|&i| off(i, j))
                .sum();
            self.diag[j] > s
        });
        rows || cols
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i > 0 {
                m[(i, i - 1)] = self.lower[i];
            }
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
            }
        }
        m
    }
}

/// LU factors of a tridiagonal matrix without pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct ThomasFactor {
    lower: Vec<f64>,
    pivot: Vec<f64>,
    upper_mod: Vec<f64>,
}

impl ThomasFactor {
    /// `None` when a pivot vanishes or goes non-finite.
    pub fn new(t: &Tridiagonal) -> Option<Self> {
        let n = t.len();
        let mut pivot = vec![0.0; n];
        let mut upper_mod = vec![0.0; n];
        for i in 0..n {
            let p = if i == 0 {
                t.diag[0]
            } else {
                t.diag[i] - t.lower[i] * upper_mod[i - 1]
            };
            if p == 0.0 || !p.is_finite() {
                return None;
            }
            pivot[i] = p;
            if i + 1 < n {
                upper_mod[i] = t.upper[i] / p;
            }
        }
        Some(Self {
            lower: t.lower.clone(),
            pivot,
            upper_mod,
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.pivot.len();
        if n == 0 {
            return;
        }
        rhs[0] /= self.pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / self.pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_mod[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tridiagonal {
        Tridiagonal {
            lower: vec![0.0, -1.0, -2.0, -0.5],
            diag: vec![4.0, 5.0, 6.0, 3.0],
            upper: vec![-1.0, -1.5, -0.25, 0.0],
        }
    }

    #[test]
    fn thomas_matches_dense_solve() {
        let t = sample();
        let f = ThomasFactor::new(&t).unwrap();
        let b = [1.0, -2.0, 0.5, 3.0];
        let mut x = b;
        f.solve_in_place(&mut x);
        let dense = t.to_dense().lu().solve(&nalgebra::DVector::from_row_slice(&b)).unwrap();
        for i in 0..4 {
            assert!((x[i] - dense[i]).abs() < 1e-14);
        }
        let mut back = [0.0; 4];
        t.apply(&x, &mut back);
        for i in 0..4 {
            assert!((back[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_pivot_detected() {
        let t = Tridiagonal {
            lower: vec![0.0, 1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0, 0.0],
        };
        assert!(ThomasFactor::new(&t).is_none());
    }

    #[test]
    fn sign_pattern_and_dominance() {
        let t = sample();
        assert!(t.has_z_pattern());
        assert!(t.strictly_diagonally_dominant());
        let mut bad = t.clone();
        bad.upper[1] = 0.5;
        assert!(!bad.has_z_pattern());
    }
}
