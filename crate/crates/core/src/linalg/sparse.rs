use crate::error::{Error, Result};
use crate::linalg::DenseMat;

/// One data view stored in compressed sparse row layout.
///
/// The matrix the solver sees is `s · (Y − 1·dᵀ)`, where `Y` is the stored data, `d` the
/// optional column-mean row (implicit centering) and `s` is `1/√L` when scaling is enabled,
/// `1` otherwise. Neither the centering nor the scaling is ever materialised; both are applied
/// as rank-one / scalar corrections inside the products so the view stays sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseView {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    mean: Option<Vec<f64>>,
    scaled: bool,
}

impl SparseView {
    /// Builds a view from `(row, col, value)` triplets in any order.
    ///
    /// Out-of-range indices, duplicate cells and non-finite values are rejected.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "sparse view must have positive dimensions, got {rows}x{cols}"
            )));
        }
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) out of range for {rows}x{cols} view"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("SparseView::from_triplets"));
            }
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::InvalidArgument(format!(
                "duplicate entry ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col_idx = entries.iter().map(|e| e.1).collect();
        let values = entries.iter().map(|e| e.2).collect();
        Ok(SparseView {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
            mean: None,
            scaled: false,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        SparseView::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn from_dense(m: &DenseMat) -> Result<Self> {
        let mut trip = Vec::new();
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                if v != 0.0 {
                    trip.push((r, c, v));
                }
            }
        }
        SparseView::from_triplets(m.rows(), m.cols(), trip)
    }

    /// Enables implicit centering with the column means of the stored data.
    pub fn centered(mut self) -> Self {
        self.mean = Some(self.raw_column_means());
        self
    }

    /// Enables implicit centering with a caller-supplied mean row, which must match the
    /// column means of the stored data.
    pub fn with_mean(mut self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != self.cols {
            return Err(Error::dim("SparseView::with_mean", self.cols, mean.len()));
        }
        let actual = self.raw_column_means();
        let scale = actual.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if mean
            .iter()
            .zip(&actual)
            .any(|(a, b)| !a.is_finite() || (a - b).abs() > 1e-10 * scale)
        {
            return Err(Error::InvalidArgument(
                "mean row does not match the column means of the view".into(),
            ));
        }
        self.mean = Some(mean);
        Ok(self)
    }

    /// Toggles the `1/√L` scale factor.
    pub fn with_scaling(mut self, on: bool) -> Self {
        self.scaled = on;
        self
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.rows as f64 * self.cols as f64)
    }

    pub fn mean(&self) -> Option<&[f64]> {
        self.mean.as_deref()
    }

    pub fn is_centered(&self) -> bool {
        self.mean.is_some()
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    fn scale_factor(&self) -> f64 {
        if self.scaled {
            1.0 / (self.rows as f64).sqrt()
        } else {
            1.0
        }
    }

    /// Column indices and values of stored row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Frobenius norm of the stored entries, ignoring centering and scaling.
    pub fn raw_frob_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn raw_column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (&c, &v) in self.col_idx.iter().zip(&self.values) {
            sums[c] += v;
        }
        let l = self.rows as f64;
        sums.iter_mut().for_each(|s| *s /= l);
        sums
    }

    /// Keeps only the listed rows, in the given order. Centering, if enabled, is recomputed
    /// for the new row set.
    pub fn select_rows(&self, idx: &[usize]) -> Result<SparseView> {
        let mut trip = Vec::new();
        for (new_r, &r) in idx.iter().enumerate() {
            if r >= self.rows {
                return Err(Error::InvalidArgument(format!("row {r} out of range")));
            }
            let (cols, vals) = self.row(r);
            trip.extend(cols.iter().zip(vals).map(|(&c, &v)| (new_r, c, v)));
        }
        let out = SparseView::from_triplets(idx.len(), self.cols, trip)?.with_scaling(self.scaled);
        Ok(if self.mean.is_some() {
            out.centered()
        } else {
            out
        })
    }

    /// Dense form of the effective (centered, scaled) matrix. Desk-scale use only.
    pub fn to_dense(&self) -> DenseMat {
        let s = self.scale_factor();
        let mut out = DenseMat::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            out.set(r, c, v);
        }
        if let Some(mean) = &self.mean {
            for r in 0..self.rows {
                for (o, m) in out.row_mut(r).iter_mut().zip(mean) {
                    *o -= m;
                }
            }
        }
        out.scale(s);
        out
    }

    /// `X · D` for `D` of shape `M x K`.
    pub fn spmm_right(&self, d: &DenseMat) -> Result<DenseMat> {
        if d.rows() != self.cols {
            return Err(Error::dim(
                "spmm_right",
                format!("{} rows", self.cols),
                format!("{} rows", d.rows()),
            ));
        }
        if !d.is_finite() {
            return Err(Error::NonFinite("spmm_right"));
        }
        let k = d.cols();
        let mut out = DenseMat::zeros(self.rows, k);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let out_row = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &x) in out_row.iter_mut().zip(d.row(c)) {
                    *o += v * x;
                }
            }
        }
        if let Some(mean) = &self.mean {
            // (Y − 1·dᵀ)·D = Y·D − 1·(dᵀD)
            let mut shift = vec![0.0; k];
            for (c, &m) in mean.iter().enumerate() {
                for (s, &x) in shift.iter_mut().zip(d.row(c)) {
                    *s += m * x;
                }
            }
            for r in 0..self.rows {
                for (o, s) in out.row_mut(r).iter_mut().zip(&shift) {
                    *o -= s;
                }
            }
        }
        if self.scaled {
            out.scale(self.scale_factor());
        }
        Ok(out)
    }

    /// `Xᵀ · D` for `D` of shape `L x K`.
    pub fn spmm_left_t(&self, d: &DenseMat) -> Result<DenseMat> {
        if d.rows() != self.rows {
            return Err(Error::dim(
                "spmm_left_t",
                format!("{} rows", self.rows),
                format!("{} rows", d.rows()),
            ));
        }
        if !d.is_finite() {
            return Err(Error::NonFinite("spmm_left_t"));
        }
        let k = d.cols();
        let mut out = DenseMat::zeros(self.cols, k);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let d_row = d.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &x) in out.row_mut(c).iter_mut().zip(d_row) {
                    *o += v * x;
                }
            }
        }
        if let Some(mean) = &self.mean {
            // (Yᵀ − d·1ᵀ)·D = YᵀD − d·(1ᵀD)
            let mut colsum = vec![0.0; k];
            for r in 0..self.rows {
                for (s, &x) in colsum.iter_mut().zip(d.row(r)) {
                    *s += x;
                }
            }
            for (c, &m) in mean.iter().enumerate() {
                for (o, s) in out.row_mut(c).iter_mut().zip(&colsum) {
                    *o -= m * s;
                }
            }
        }
        if self.scaled {
            out.scale(self.scale_factor());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(a: &DenseMat, b: &DenseMat) -> DenseMat {
        DenseMat::from_fn(a.rows(), b.cols(), |r, c| {
            (0..a.cols()).map(|k| a.get(r, k) * b.get(k, c)).sum()
        })
    }

    fn random_view(rng: &mut ChaCha8Rng, l: usize, m: usize, density: f64) -> SparseView {
        let mut trip = Vec::new();
        for r in 0..l {
            for c in 0..m {
                if rng.random::<f64>() < density {
                    trip.push((r, c, rng.random_range(-2.0..2.0)));
                }
            }
        }
        SparseView::from_triplets(l, m, trip).unwrap()
    }

    fn random_dense(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMat {
        DenseMat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rel_err(a: &DenseMat, b: &DenseMat) -> f64 {
        a.sub(b).frob_norm() / b.frob_norm().max(1e-300)
    }

    #[test]
    fn spmm_right_identity() {
        let x = SparseView::identity(2).unwrap();
        let d = DenseMat::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(x.spmm_right(&d).unwrap(), d);
    }

    #[test]
    fn spmm_right_single_entry() {
        let x = SparseView::from_triplets(2, 2, [(0, 1, 5.0)]).unwrap();
        let d = DenseMat::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let want = DenseMat::from_rows(&[[5.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(x.spmm_right(&d).unwrap(), want);
    }

    #[test]
    fn spmm_left_t_identity_and_single_entry() {
        let x = SparseView::identity(2).unwrap();
        let d = DenseMat::from_rows(&[[7.0, -1.0], [0.5, 2.0]]).unwrap();
        assert_eq!(x.spmm_left_t(&d).unwrap(), d);

        let x = SparseView::from_triplets(2, 2, [(0, 1, 5.0)]).unwrap();
        let d = DenseMat::from_rows(&[[2.0, 0.0], [0.0, 0.0]]).unwrap();
        let want = DenseMat::from_rows(&[[0.0, 0.0], [10.0, 0.0]]).unwrap();
        assert_eq!(x.spmm_left_t(&d).unwrap(), want);
    }

    #[test]
    fn products_match_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let x = random_view(&mut rng, 20, 10, 0.2);
            let x = match trial % 3 {
                0 => x,
                1 => x.centered(),
                _ => x.centered().with_scaling(true),
            };
            let dense = x.to_dense();
            let d = random_dense(&mut rng, 10, 4);
            assert!(rel_err(&x.spmm_right(&d).unwrap(), &dense_mul(&dense, &d)) < 1e-12);
            let d = random_dense(&mut rng, 20, 3);
            assert!(
                rel_err(
                    &x.spmm_left_t(&d).unwrap(),
                    &dense_mul(&dense.transpose(), &d)
                ) < 1e-12
            );
        }
    }

    #[test]
    fn centered_columns_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_view(&mut rng, 15, 6, 0.4).centered();
        let dense = x.to_dense();
        for c in 0..6 {
            let s: f64 = (0..15).map(|r| dense.get(r, c)).sum();
            assert!(s.abs() < 1e-10, "column {c} sums to {s}");
        }
    }

    #[test]
    fn with_mean_is_checked() {
        let x = SparseView::from_triplets(2, 2, [(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        assert!(x.clone().with_mean(vec![1.0, 2.0]).is_ok());
        assert!(x.with_mean(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(SparseView::from_triplets(2, 2, [(2, 0, 1.0)]).is_err());
        assert!(SparseView::from_triplets(2, 2, [(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(SparseView::from_triplets(2, 2, [(0, 0, f64::INFINITY)]).is_err());
        let x = SparseView::identity(3).unwrap();
        assert!(x.spmm_right(&DenseMat::zeros(2, 1)).is_err());
        assert!(x.spmm_left_t(&DenseMat::zeros(4, 1)).is_err());
    }

    #[test]
    fn select_rows_keeps_order() {
        let x = SparseView::from_triplets(3, 2, [(0, 0, 1.0), (2, 1, 3.0)]).unwrap();
        let s = x.select_rows(&[2, 0]).unwrap();
        assert_eq!(
            s.triplets().collect::<Vec<_>>(),
            vec![(0, 1, 3.0), (1, 0, 1.0)]
        );
    }
}
