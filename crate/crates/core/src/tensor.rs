//! Dense multi-index tensor values at a point.
//!
//! Dimensions here are tiny (at most 6 per slot), so components are stored
//! as a dense row-major array. Variance is tracked per slot; contraction
//! pairs one upper with one lower slot, and metric raising/lowering converts
//! variance explicitly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Variance of a tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Upper,
    Lower,
}

/// A dense numeric tensor at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    dims: Vec<usize>,
    variance: Vec<Variance>,
    components: Vec<f64>,
}

impl TensorValue {
    /// All-zero tensor with the given slot dimensions and variances.
    pub fn zeros(dims: &[usize], variance: &[Variance]) -> TensorValue {
        assert_eq!(dims.len(), variance.len(), "one variance per slot");
        let len = dims.iter().product::<usize>().max(1);
        TensorValue {
            dims: dims.to_vec(),
            variance: variance.to_vec(),
            components: vec![0.0; len],
        }
    }

    /// Build from a component function over multi-indices.
    pub fn from_fn(
        dims: &[usize],
        variance: &[Variance],
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> TensorValue {
        let mut t = TensorValue::zeros(dims, variance);
        let mut idx = vec![0usize; dims.len()];
        for flat in 0..t.components.len() {
            t.unflatten(flat, &mut idx);
            t.components[flat] = f(&idx);
        }
        t
    }

    /// Scalar (rank 0) tensor.
    pub fn scalar(value: f64) -> TensorValue {
        TensorValue {
            dims: vec![],
            variance: vec![],
            components: vec![value],
        }
    }

    /// Identity as a (1,1) tensor in dimension `n`.
    pub fn identity(n: usize) -> TensorValue {
        TensorValue::from_fn(&[n, n], &[Variance::Upper, Variance::Lower], |i| {
            if i[0] == i[1] {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// Value of the rank-0 tensor.
    pub fn as_scalar(&self) -> f64 {
        assert!(self.dims.is_empty(), "not a scalar tensor");
        self.components[0]
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (i, &d) in idx.iter().zip(&self.dims) {
            debug_assert!(*i < d);
            flat = flat * d + i;
        }
        flat
    }

    fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for k in (0..self.dims.len()).rev() {
            idx[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[self.flatten(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let flat = self.flatten(idx);
        self.components[flat] = value;
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> TensorValue {
        TensorValue {
            dims: self.dims.clone(),
            variance: self.variance.clone(),
            components: self.components.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &TensorValue) -> Result<TensorValue> {
        if self.dims != other.dims || self.variance != other.variance {
            return Err(Error::DimensionMismatch(
                "tensor addition requires identical shape and variance".into(),
            ));
        }
        Ok(TensorValue {
            dims: self.dims.clone(),
            variance: self.variance.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Outer (tensor) product; slots of `other` follow slots of `self`.
    pub fn outer(&self, other: &TensorValue) -> TensorValue {
        let dims: Vec<usize> = self.dims.iter().chain(&other.dims).copied().collect();
        let variance: Vec<Variance> = self
            .variance
            .iter()
            .chain(&other.variance)
            .copied()
            .collect();
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for a in &self.components {
            for b in &other.components {
                components.push(a * b);
            }
        }
        TensorValue {
            dims,
            variance,
            components,
        }
    }

    /// Contract one upper slot against one lower slot of equal dimension.
    pub fn contract(&self, slot_a: usize, slot_b: usize) -> Result<TensorValue> {
        if slot_a == slot_b || slot_a >= self.rank() || slot_b >= self.rank() {
            return Err(Error::DimensionMismatch(format!(
                "invalid contraction slots ({slot_a}, {slot_b}) for rank {}",
                self.rank()
            )));
        }
        if self.variance[slot_a] == self.variance[slot_b] {
            return Err(Error::VarianceMismatch(
                "contraction must pair one upper with one lower slot".into(),
            ));
        }
        if self.dims[slot_a] != self.dims[slot_b] {
            return Err(Error::DimensionMismatch(format!(
                "contraction slots have dims {} and {}",
                self.dims[slot_a], self.dims[slot_b]
            )));
        }
        let (lo, hi) = if slot_a < slot_b {
            (slot_a, slot_b)
        } else {
            (slot_b, slot_a)
        };
        let d = self.dims[lo];
        let kept: Vec<usize> = (0..self.rank()).filter(|&s| s != lo && s != hi).collect();
        let out_dims: Vec<usize> = kept.iter().map(|&s| self.dims[s]).collect();
        let out_var: Vec<Variance> = kept.iter().map(|&s| self.variance[s]).collect();
        let mut out = TensorValue::zeros(&out_dims, &out_var);
        let mut full = vec![0usize; self.rank()];
        let mut out_idx = vec![0usize; kept.len()];
        for flat in 0..out.components.len() {
            out.unflatten(flat, &mut out_idx);
            for (pos, &s) in kept.iter().enumerate() {
                full[s] = out_idx[pos];
            }
            let mut sum = 0.0;
            for k in 0..d {
                full[lo] = k;
                full[hi] = k;
                sum += self.components[self.flatten(&full)];
            }
            out.components[flat] = sum;
        }
        Ok(out)
    }

    /// Move one slot's variance using the metric (`Lower -> Upper` uses the
    /// inverse metric, `Upper -> Lower` the metric itself).
    pub fn flip_slot(&self, slot: usize, g: &MetricAtPoint) -> Result<TensorValue> {
        if slot >= self.rank() {
            return Err(Error::DimensionMismatch(format!(
                "slot {slot} out of range for rank {}",
                self.rank()
            )));
        }
        let d = self.dims[slot];
        if d != g.dim() {
            return Err(Error::DimensionMismatch(format!(
                "slot dim {d} does not match metric dim {}",
                g.dim()
            )));
        }
        let mat = match self.variance[slot] {
            Variance::Upper => g.lower(),
            Variance::Lower => g.raise(),
        };
        let mut out = self.clone();
        out.variance[slot] = match self.variance[slot] {
            Variance::Upper => Variance::Lower,
            Variance::Lower => Variance::Upper,
        };
        let mut idx = vec![0usize; self.rank()];
        for flat in 0..out.components.len() {
            out.unflatten(flat, &mut idx);
            let i = idx[slot];
            let mut sum = 0.0;
            for j in 0..d {
                idx[slot] = j;
                sum += mat[(i, j)] * self.components[self.flatten(&idx)];
            }
            idx[slot] = i;
            out.components[flat] = sum;
        }
        Ok(out)
    }

    /// Squared norm: full contraction of the tensor with itself, all slots
    /// paired through the metric. Non-negative; zero iff the tensor is zero.
    pub fn norm_sq(&self, g: &MetricAtPoint) -> Result<f64> {
        let mut dual = self.clone();
        for slot in 0..self.rank() {
            dual = dual.flip_slot(slot, g)?;
        }
        Ok(self
            .components
            .iter()
            .zip(&dual.components)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Transform components tensorially, one orthogonal rotation per slot.
    ///
    /// Intended for orthonormal-frame components, where upper and lower
    /// slots transform identically under an orthogonal change of frame.
    pub fn change_frame(&self, rotations: &[&DMatrix<f64>]) -> Result<TensorValue> {
        if rotations.len() != self.rank() {
            return Err(Error::DimensionMismatch(format!(
                "need {} rotations, got {}",
                self.rank(),
                rotations.len()
            )));
        }
        for (slot, q) in rotations.iter().enumerate() {
            if q.nrows() != self.dims[slot] || q.ncols() != self.dims[slot] {
                return Err(Error::DimensionMismatch(format!(
                    "rotation for slot {slot} has shape {}x{}, slot dim is {}",
                    q.nrows(),
                    q.ncols(),
                    self.dims[slot]
                )));
            }
            let dev = (q.transpose() * *q - DMatrix::identity(q.nrows(), q.ncols())).abs().max();
            if dev > 1e-10 {
                return Err(Error::NotOrthogonal { deviation: dev });
            }
        }
        let mut current = self.clone();
        for (slot, q) in rotations.iter().enumerate() {
            let d = current.dims[slot];
            let mut next = current.clone();
            let mut idx = vec![0usize; current.rank()];
            for flat in 0..next.components.len() {
                next.unflatten(flat, &mut idx);
                let i = idx[slot];
                let mut sum = 0.0;
                for j in 0..d {
                    idx[slot] = j;
                    sum += q[(i, j)] * current.components[current.flatten(&idx)];
                }
                idx[slot] = i;
                next.components[flat] = sum;
            }
            current = next;
        }
        Ok(current)
    }
}

/// A positive-definite metric evaluated at a point, with its inverse.
#[derive(Debug, Clone)]
pub struct MetricAtPoint {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

impl MetricAtPoint {
    /// Validate symmetry and positive definiteness, then store the pair
    /// (metric, inverse). `pd_tol` is the relative eigenvalue floor.
    pub fn new(g: DMatrix<f64>, pd_tol: f64, point: &[f64]) -> Result<MetricAtPoint> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(Error::DimensionMismatch("metric must be square".into()));
        }
        let sym_dev = (&g - g.transpose()).abs().max();
        if sym_dev > 1e-9 * (1.0 + g.abs().max()) {
            return Err(Error::DimensionMismatch(format!(
                "metric not symmetric (deviation {sym_dev:.3e})"
            )));
        }
        let eig = g.clone().symmetric_eigen();
        let max_eig = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let min_eig = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if !(min_eig > pd_tol * max_eig.max(1.0)) {
            return Err(Error::SingularMetric {
                point: point.to_vec(),
            });
        }
        let g_inv = g.clone().try_inverse().ok_or_else(|| Error::SingularMetric {
            point: point.to_vec(),
        })?;
        Ok(MetricAtPoint { g, g_inv })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// The metric matrix (used to lower indices).
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// The inverse metric matrix (used to raise indices).
    pub fn raise(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    /// Inner product of two vectors (component slices).
    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g[(i, j)] * u[i] * v[j];
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclidean(n: usize) -> MetricAtPoint {
        MetricAtPoint::new(DMatrix::identity(n, n), 1e-12, &vec![0.0; n]).unwrap()
    }

    #[test]
    fn trace_of_identity() {
        let t = TensorValue::identity(3);
        let tr = t.contract(0, 1).unwrap();
        assert_eq!(tr.rank(), 0);
        assert_eq!(tr.as_scalar(), 3.0);
    }

    #[test]
    fn contraction_is_dot_product() {
        let u = TensorValue::from_fn(&[3], &[Variance::Upper], |i| [1.0, 2.0, 3.0][i[0]]);
        let v_flat = TensorValue::from_fn(&[3], &[Variance::Lower], |i| [4.0, 5.0, 6.0][i[0]]);
        let prod = u.outer(&v_flat);
        let dot = prod.contract(0, 1).unwrap().as_scalar();
        assert_eq!(dot, 32.0);
    }

    #[test]
    fn contraction_rejects_same_variance() {
        let t = TensorValue::zeros(&[2, 2], &[Variance::Upper, Variance::Upper]);
        assert!(matches!(
            t.contract(0, 1),
            Err(Error::VarianceMismatch(_))
        ));
    }

    #[test]
    fn norm_sq_vector() {
        let g = euclidean(2);
        let zero = TensorValue::zeros(&[2], &[Variance::Upper]);
        assert_eq!(zero.norm_sq(&g).unwrap(), 0.0);
        let e1 = TensorValue::from_fn(&[2], &[Variance::Upper], |i| if i[0] == 0 { 1.0 } else { 0.0 });
        assert_eq!(e1.norm_sq(&g).unwrap(), 1.0);
    }

    #[test]
    fn raise_then_lower_restores() {
        let g = MetricAtPoint::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]),
            1e-12,
            &[0.0, 0.0],
        )
        .unwrap();
        let t = TensorValue::from_fn(&[2, 2], &[Variance::Upper, Variance::Lower], |i| {
            (i[0] * 2 + i[1]) as f64 + 0.5
        });
        let back = t
            .flip_slot(0, &g)
            .unwrap()
            .flip_slot(0, &g)
            .unwrap();
        for (a, b) in t.components().iter().zip(back.components()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn frame_change_preserves_norm() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = euclidean(3);
        let t = TensorValue::from_fn(
            &[3, 3],
            &[Variance::Upper, Variance::Lower],
            |i| ((i[0] + 1) as f64).sin() + i[1] as f64,
        );
        let n0 = t.norm_sq(&g).unwrap();
        for _ in 0..20 {
            let q = crate::tensor::random_orthogonal(3, &mut rng);
            let rotated = t.change_frame(&[&q, &q]).unwrap();
            let n1 = rotated.norm_sq(&g).unwrap();
            assert!((n0 - n1).abs() <= 1e-9 * (1.0 + n0.abs()));
        }
    }

    #[test]
    fn identity_rotation_is_noop() {
        let t = TensorValue::from_fn(&[2], &[Variance::Upper], |i| i[0] as f64 + 1.0);
        let id = DMatrix::identity(2, 2);
        assert_eq!(t.change_frame(&[&id]).unwrap(), t);
    }

    #[test]
    fn rejects_non_orthogonal() {
        let t = TensorValue::zeros(&[2], &[Variance::Upper]);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            t.change_frame(&[&bad]),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn quarter_turn_rotates_basis_vector() {
        let t = TensorValue::from_fn(&[2], &[Variance::Upper], |i| if i[0] == 0 { 1.0 } else { 0.0 });
        let q = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let r = t.change_frame(&[&q]).unwrap();
        assert!((r.get(&[0]).abs() - 0.0).abs() <= 1e-12);
        assert!((r.get(&[1]).abs() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn non_positive_definite_metric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            MetricAtPoint::new(m, 1e-12, &[0.0, 0.0]),
            Err(Error::SingularMetric { .. })
        ));
    }
}

/// Random orthogonal matrix via sign-fixed QR of a random sample;
/// deterministic given the RNG state.
pub fn random_orthogonal(n: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}
