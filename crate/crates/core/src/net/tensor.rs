/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    /// `rows` copies of `row`.
    pub fn broadcast(row: &[f64], rows: usize) -> Self {
        let mut data = Vec::with_capacity(rows * row.len());
        for _ in 0..rows {
            data.extend_from_slice(row);
        }
        Matrix::from_vec(rows, row.len(), data)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}

/// `out[r] += x[c]` for each edge `(r, c)`: the product `G · x`.
pub(crate) fn sparse_mul(edges: &[(u32, u32)], rows: usize, x: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(rows, x.cols);
    for &(r, c) in edges {
        let src = x.row(c as usize);
        for (o, s) in out.row_mut(r as usize).iter_mut().zip(src) {
            *o += s;
        }
    }
    out
}

/// `out[c] += x[r]` for each edge `(r, c)`: the product `Gᵀ · x`.
pub(crate) fn sparse_mul_t(edges: &[(u32, u32)], cols: usize, x: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(cols, x.cols);
    for &(r, c) in edges {
        let src = x.row(r as usize);
        for (o, s) in out.row_mut(c as usize).iter_mut().zip(src) {
            *o += s;
        }
    }
    out
}

/// Row-wise standardization `(x - mean) / sqrt(var + eps)`; returns the
/// normalized rows and each row's `1 / sqrt(var + eps)`.
pub(crate) fn standardize_rows(x: &Matrix, eps: f64) -> (Matrix, Vec<f64>) {
    let mut out = x.clone();
    let mut inv_std = Vec::with_capacity(x.rows);
    let d = x.cols as f64;
    for i in 0..x.rows {
        let row = out.row_mut(i);
        let mean = row.iter().sum::<f64>() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let inv = 1.0 / (var + eps).sqrt();
        for v in row.iter_mut() {
            *v = (*v - mean) * inv;
        }
        inv_std.push(inv);
    }
    (out, inv_std)
}

/// Gradient of [`standardize_rows`] given the normalized output `y`.
pub(crate) fn standardize_rows_backward(dy: &Matrix, y: &Matrix, inv_std: &[f64]) -> Matrix {
    let mut dx = Matrix::zeros(dy.rows, dy.cols);
    let d = dy.cols as f64;
    for i in 0..dy.rows {
        let (g, yr) = (dy.row(i), y.row(i));
        let mean_g = g.iter().sum::<f64>() / d;
        let mean_gy = g.iter().zip(yr).map(|(a, b)| a * b).sum::<f64>() / d;
        for ((o, &gi), &yi) in dx.row_mut(i).iter_mut().zip(g).zip(yr) {
            *o = inv_std[i] * (gi - mean_g - yi * mean_gy);
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_products() {
        let x = Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let edges = [(0, 0), (0, 2), (1, 1)];
        let y = sparse_mul(&edges, 2, &x);
        assert_eq!(y.data, vec![6.0, 8.0, 3.0, 4.0]);
        let z = sparse_mul_t(&edges, 3, &y);
        assert_eq!(z.data, vec![6.0, 8.0, 3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn standardized_rows_have_zero_mean_unit_variance() {
        let x = Matrix::from_vec(2, 4, vec![1.0, 2.0, 3.0, 10.0, -5.0, 0.5, 0.25, 7.0]);
        let (y, _) = standardize_rows(&x, 1e-5);
        for i in 0..2 {
            let r = y.row(i);
            let mean = r.iter().sum::<f64>() / 4.0;
            let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }
}
