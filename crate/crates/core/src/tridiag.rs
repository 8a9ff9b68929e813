//! Thomas algorithm for symmetric tridiagonal systems.

/// LU factors of a symmetric tridiagonal matrix, kept so repeated solves
/// with the same matrix skip the division chain of the forward sweep.
#[derive(Debug, Clone, Default)]
pub struct Factorization {
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
    off: Vec<f64>,
}

impl Factorization {
    /// Factor the matrix with main diagonal `diag` and off-diagonal `off`
    /// (`off[i]` couples rows `i` and `i + 1`). No pivoting; callers only pass
    /// diagonally dominant matrices.
    pub fn new(diag: &[f64], off: &[f64]) -> Self {
        let mut f = Self::default();
        f.refactor(diag, off);
        f
    }

    pub fn refactor(&mut self, diag: &[f64], off: &[f64]) {
        let n = diag.len();
        assert!(n > 0);
        assert_eq!(off.len() + 1, n);
        self.inv_pivot.resize(n, 0.0);
        self.upper.resize(n, 0.0);
        self.off.clear();
        self.off.extend_from_slice(off);

        let mut inv = 1.0 / diag[0];
        self.inv_pivot[0] = inv;
        self.upper[0] = if n > 1 { off[0] * inv } else { 0.0 };
        for i in 1..n {
            inv = 1.0 / (diag[i] - off[i - 1] * self.upper[i - 1]);
            self.inv_pivot[i] = inv;
            self.upper[i] = if i + 1 < n { off[i] * inv } else { 0.0 };
        }
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrite `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.off[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

/// One-shot solve of `T x = rhs` in place.
pub fn solve_symmetric(diag: &[f64], off: &[f64], rhs: &mut [f64]) {
    Factorization::new(diag, off).solve_in_place(rhs);
}
