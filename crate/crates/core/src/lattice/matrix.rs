use nalgebra::DMatrix;

/// Dense real symmetric matrix. Every mutator writes both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(n, n),
        }
    }

    /// Evaluates `f` on the upper triangle and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { m }
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(a: &DMatrix<f64>) -> Self {
        assert!(a.is_square(), "symmetrized needs a square matrix");
        let n = a.nrows();
        Self::from_fn(n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        SymMatrix {
            m: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
        }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[(i, j)] = v;
        self.m[(j, i)] = v;
    }
    pub fn add_to_diagonal(&mut self, i: usize, v: f64) {
        self.m[(i, i)] += v;
    }
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix { m: &self.m - &other.m }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix { m: &self.m + &other.m }
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(v.len(), n, "vector length mismatch");
        let mut out = vec![0.0; n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.m.column(j).iter()) {
                *o += a * vj;
            }
        }
        out
    }

    /// Copies `block` into the rows and columns listed in `positions`.
    pub fn embed(&mut self, block: &SymMatrix, positions: &[usize]) {
        assert_eq!(block.n(), positions.len(), "block size mismatch");
        for (a, &i) in positions.iter().enumerate() {
            for (b, &j) in positions.iter().enumerate() {
                self.m[(i, j)] = block.m[(a, b)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stays_symmetric() {
        let mut s = SymMatrix::from_fn(3, |i, j| (i * 10 + j) as f64);
        s.set(0, 2, 7.0);
        assert_eq!(s.get(2, 0), 7.0);
        assert_eq!(s.get(1, 0), s.get(0, 1));
        let raw = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let sym = SymMatrix::symmetrized(&raw);
        assert_eq!(sym.get(0, 1), 3.0);
    }

    #[test]
    fn embedding_and_products() {
        let mut big = SymMatrix::zeros(3);
        big.embed(&SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { -1.0 }), &[0, 2]);
        assert_eq!(big.get(0, 2), -1.0);
        assert_eq!(big.get(1, 1), 0.0);
        assert_eq!(big.mul_vec(&[1.0, 5.0, 1.0]), vec![1.0, 0.0, 1.0]);
    }
}
