//! Per-chart Riemannian machinery.
//!
//! A [`MetricField`] owns a symmetric matrix of symbolic components over a
//! [`Chart`] and lazily derives the symbolic objects downstream of it:
//! inverse metric (by adjugate over determinant), Christoffel symbols,
//! Riemann curvature, Ricci, scalar curvature, and iterated covariant
//! derivatives of curvature. Everything stays symbolic until a point
//! evaluation, so high-order invariants use exact partials of the metric
//! rather than finite differences.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::expr::{env_from, EvalScope, Expr, RESERVED_FUNCS};
use crate::tensor::{MetricAtPoint, TensorValue, Variance};

/// A coordinate chart: ordered coordinate names and an optional open
/// domain box (one interval per coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    domain: Option<Vec<(f64, f64)>>,
}

impl Chart {
    pub fn new(names: &[&str]) -> Result<Chart> {
        Chart::with_domain_opt(names, None)
    }

    pub fn with_domain(names: &[&str], domain: Vec<(f64, f64)>) -> Result<Chart> {
        Chart::with_domain_opt(names, Some(domain))
    }

    fn with_domain_opt(names: &[&str], domain: Option<Vec<(f64, f64)>>) -> Result<Chart> {
        if names.is_empty() {
            return Err(Error::Chart("chart needs at least one coordinate".into()));
        }
        for (i, a) in names.iter().enumerate() {
            if RESERVED_FUNCS.contains(a) {
                return Err(Error::Chart(format!(
                    "coordinate name `{a}` is a reserved function name"
                )));
            }
            if names[..i].contains(a) {
                return Err(Error::Chart(format!("duplicate coordinate name `{a}`")));
            }
        }
        if let Some(d) = &domain {
            if d.len() != names.len() {
                return Err(Error::Chart("domain box must match chart dimension".into()));
            }
            if d.iter().any(|(lo, hi)| !(lo < hi)) {
                return Err(Error::Chart("domain intervals must be nonempty".into()));
            }
        }
        Ok(Chart {
            names: names.iter().map(|s| s.to_string()).collect(),
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name_refs(&self) -> Vec<&str> {
        self.names.iter().map(|s| s.as_str()).collect()
    }

    pub fn domain(&self) -> Option<&[(f64, f64)]> {
        self.domain.as_deref()
    }

    /// True if the point lies inside the (open) domain box; charts without
    /// a declared box accept every point.
    pub fn contains(&self, point: &[f64]) -> bool {
        if point.len() != self.dim() {
            return false;
        }
        match &self.domain {
            None => true,
            Some(d) => point
                .iter()
                .zip(d)
                .all(|(x, (lo, hi))| *x > *lo && *x < *hi),
        }
    }

    /// Evaluation environment binding each coordinate to the point value.
    pub fn env(&self, point: &[f64]) -> HashMap<String, f64> {
        assert_eq!(point.len(), self.dim(), "point dimension mismatch");
        env_from(&self.names, point)
    }

    /// Variable of this chart as an expression.
    pub fn coord(&self, i: usize) -> Expr {
        Expr::var(self.names[i].clone())
    }
}

// ---------------------------------------------------------------------------

/// Dense tensor field over a chart with symbolic components. Every slot
/// ranges over the chart dimension.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    chart: Chart,
    variance: Vec<Variance>,
    components: Vec<Expr>,
}

impl SymTensorField {
    pub fn from_fn(
        chart: &Chart,
        variance: &[Variance],
        mut f: impl FnMut(&[usize]) -> Expr,
    ) -> SymTensorField {
        let n = chart.dim();
        let len = n.pow(variance.len() as u32);
        let mut components = Vec::with_capacity(len);
        let mut idx = vec![0usize; variance.len()];
        for flat in 0..len {
            unflatten(flat, n, &mut idx);
            components.push(f(&idx));
        }
        SymTensorField {
            chart: chart.clone(),
            variance: variance.to_vec(),
            components,
        }
    }

    pub fn scalar(chart: &Chart, e: Expr) -> SymTensorField {
        SymTensorField {
            chart: chart.clone(),
            variance: vec![],
            components: vec![e],
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.components[flatten(idx, self.chart.dim())]
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Evaluate all components at one point with a shared evaluation scope.
    pub fn eval_with(&self, scope: &mut EvalScope) -> Result<TensorValue> {
        let n = self.chart.dim();
        let dims = vec![n; self.rank()];
        let mut values = Vec::with_capacity(self.components.len());
        for c in &self.components {
            values.push(scope.eval(c)?);
        }
        let mut t = TensorValue::zeros(&dims, &self.variance);
        let mut idx = vec![0usize; self.rank()];
        for (flat, v) in values.into_iter().enumerate() {
            unflatten(flat, n, &mut idx);
            t.set(&idx, v);
        }
        Ok(t)
    }

    pub fn eval_at(&self, point: &[f64]) -> Result<TensorValue> {
        let env = self.chart.env(point);
        self.eval_with(&mut EvalScope::new(&env))
    }

    /// Componentwise coordinate partials, appended as a trailing lower slot.
    /// Not tensorial by itself; used as the base step of the covariant
    /// derivative.
    pub fn coordinate_partials(&self) -> SymTensorField {
        let n = self.chart.dim();
        let mut variance = self.variance.clone();
        variance.push(Variance::Lower);
        let chart = self.chart.clone();
        SymTensorField::from_fn(&chart, &variance, |idx| {
            let (inner, c) = idx.split_at(idx.len() - 1);
            self.get(inner).diff(&chart.names()[c[0]])
        })
    }

    /// Levi-Civita covariant derivative; the derivative slot is appended
    /// last (lower).
    pub fn covariant_derivative(&self, metric: &MetricField) -> SymTensorField {
        assert_eq!(
            self.chart.names(),
            metric.chart().names(),
            "field and metric live on different charts"
        );
        let n = self.chart.dim();
        let gamma = metric.christoffel();
        let partials = self.coordinate_partials();
        let mut variance = self.variance.clone();
        variance.push(Variance::Lower);
        SymTensorField::from_fn(&self.chart.clone(), &variance, |idx| {
            let (inner, tail) = idx.split_at(idx.len() - 1);
            let c = tail[0];
            let mut acc = partials.get(idx).clone();
            let mut swapped = inner.to_vec();
            for (slot, var) in self.variance.iter().enumerate() {
                let orig = inner[slot];
                for m in 0..n {
                    swapped[slot] = m;
                    let t_comp = self.get(&swapped);
                    if t_comp.is_zero() {
                        continue;
                    }
                    let term = match var {
                        // + Γ^{a}_{c m} T^{...m...}
                        Variance::Upper => gamma.get(&[orig, c, m]).mul(t_comp),
                        // − Γ^{m}_{c b} T_{...m...}
                        Variance::Lower => gamma.get(&[m, c, orig]).mul(t_comp).neg(),
                    };
                    acc = acc.add(&term);
                }
                swapped[slot] = orig;
            }
            acc
        })
    }

    /// Symbolic trace over one upper and one lower slot.
    pub fn contract(&self, slot_a: usize, slot_b: usize) -> SymTensorField {
        assert_ne!(slot_a, slot_b);
        assert_ne!(
            self.variance[slot_a], self.variance[slot_b],
            "contraction pairs one upper with one lower slot"
        );
        let n = self.chart.dim();
        let (lo, hi) = if slot_a < slot_b {
            (slot_a, slot_b)
        } else {
            (slot_b, slot_a)
        };
        let kept: Vec<usize> = (0..self.rank()).filter(|&s| s != lo && s != hi).collect();
        let variance: Vec<Variance> = kept.iter().map(|&s| self.variance[s]).collect();
        SymTensorField::from_fn(&self.chart.clone(), &variance, |idx| {
            let mut full = vec![0usize; self.rank()];
            for (pos, &s) in kept.iter().enumerate() {
                full[s] = idx[pos];
            }
            Expr::sum((0..n).map(|k| {
                full[lo] = k;
                full[hi] = k;
                self.get(&full).clone()
            }))
        })
    }

    /// Contract two same-variance slots through a symbolic symmetric matrix
    /// (metric or inverse metric entries, row-major).
    pub fn contract_pair_with(
        &self,
        slot_a: usize,
        slot_b: usize,
        matrix: &[Expr],
    ) -> SymTensorField {
        assert_ne!(slot_a, slot_b);
        assert_eq!(
            self.variance[slot_a], self.variance[slot_b],
            "metric pairing applies to slots of equal variance"
        );
        let n = self.chart.dim();
        assert_eq!(matrix.len(), n * n);
        let (lo, hi) = if slot_a < slot_b {
            (slot_a, slot_b)
        } else {
            (slot_b, slot_a)
        };
        let kept: Vec<usize> = (0..self.rank()).filter(|&s| s != lo && s != hi).collect();
        let variance: Vec<Variance> = kept.iter().map(|&s| self.variance[s]).collect();
        SymTensorField::from_fn(&self.chart.clone(), &variance, |idx| {
            let mut full = vec![0usize; self.rank()];
            for (pos, &s) in kept.iter().enumerate() {
                full[s] = idx[pos];
            }
            let mut acc = Expr::zero();
            for a in 0..n {
                for b in 0..n {
                    full[lo] = a;
                    full[hi] = b;
                    let c = self.get(&full);
                    if c.is_zero() {
                        continue;
                    }
                    acc = acc.add(&matrix[a * n + b].mul(c));
                }
            }
            acc
        })
    }
}

fn flatten(idx: &[usize], n: usize) -> usize {
    let mut flat = 0;
    for &i in idx {
        debug_assert!(i < n);
        flat = flat * n + i;
    }
    flat
}

fn unflatten(mut flat: usize, n: usize, idx: &mut [usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] = flat % n;
        flat /= n;
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug)]
struct MetricInner {
    chart: Chart,
    components: Vec<Expr>, // n*n row-major, symmetric
    det: OnceLock<Expr>,
    inverse: OnceLock<Vec<Expr>>,
    christoffel: OnceLock<SymTensorField>,
    riemann: OnceLock<SymTensorField>,
    ricci: OnceLock<SymTensorField>,
    scal: OnceLock<Expr>,
    nabla_riemann: OnceLock<SymTensorField>,
    nabla2_riemann: OnceLock<SymTensorField>,
}

/// A Riemannian metric with symbolic components over a chart.
///
/// Cheap to clone; derived symbolic fields are computed once and shared.
#[derive(Debug, Clone)]
pub struct MetricField {
    inner: Arc<MetricInner>,
}

impl MetricField {
    /// `components` is the full n×n matrix in row-major order; it must be
    /// symmetric componentwise (structural expression equality).
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<MetricField> {
        let n = chart.dim();
        if components.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "metric needs {} components, got {}",
                n * n,
                components.len()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            for v in c.variables() {
                if !chart.names().contains(&v) {
                    return Err(Error::UndeclaredVariable { name: v });
                }
            }
            let (r, s) = (i / n, i % n);
            if r < s && components[r * n + s] != components[s * n + r] {
                return Err(Error::DimensionMismatch(format!(
                    "metric components ({r},{s}) and ({s},{r}) are not symmetric"
                )));
            }
        }
        Ok(MetricField {
            inner: Arc::new(MetricInner {
                chart,
                components,
                det: OnceLock::new(),
                inverse: OnceLock::new(),
                christoffel: OnceLock::new(),
                riemann: OnceLock::new(),
                ricci: OnceLock::new(),
                scal: OnceLock::new(),
                nabla_riemann: OnceLock::new(),
                nabla2_riemann: OnceLock::new(),
            }),
        })
    }

    /// Diagonal metric from the given diagonal entries.
    pub fn diagonal(chart: Chart, diag: Vec<Expr>) -> Result<MetricField> {
        let n = chart.dim();
        if diag.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "diagonal metric needs {n} entries, got {}",
                diag.len()
            )));
        }
        let mut comps = vec![Expr::zero(); n * n];
        for (i, d) in diag.into_iter().enumerate() {
            comps[i * n + i] = d;
        }
        MetricField::new(chart, comps)
    }

    /// Euclidean metric on the chart.
    pub fn euclidean(chart: Chart) -> MetricField {
        let n = chart.dim();
        MetricField::diagonal(chart, vec![Expr::one(); n]).expect("square by construction")
    }

    pub fn chart(&self) -> &Chart {
        &self.inner.chart
    }

    pub fn dim(&self) -> usize {
        self.inner.chart.dim()
    }

    /// Symbolic component g_{ij}.
    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.inner.components[i * self.dim() + j]
    }

    pub fn components(&self) -> &[Expr] {
        &self.inner.components
    }

    /// As a (0,2) symbolic field.
    pub fn as_field(&self) -> SymTensorField {
        SymTensorField::from_fn(
            self.chart(),
            &[Variance::Lower, Variance::Lower],
            |idx| self.component(idx[0], idx[1]).clone(),
        )
    }

    /// Determinant as a symbolic expression (shared node).
    pub fn det(&self) -> &Expr {
        self.inner.det.get_or_init(|| {
            let n = self.dim();
            det_memo(&self.inner.components, n, &(0..n).collect::<Vec<_>>())
        })
    }

    /// Symbolic inverse metric g^{ij} via adjugate / determinant. The
    /// determinant node is shared, so derivatives of the inverse follow the
    /// exact quotient rule (equivalently ∂g⁻¹ = −g⁻¹ (∂g) g⁻¹).
    pub fn inverse(&self) -> &[Expr] {
        self.inner.inverse.get_or_init(|| {
            let n = self.dim();
            let det = self.det().clone();
            let mut inv = vec![Expr::zero(); n * n];
            for i in 0..n {
                for j in 0..n {
                    // cofactor C_{ji} (adjugate is the transposed cofactor
                    // matrix, but the metric is symmetric so C_{ij} works)
                    let rows: Vec<usize> = (0..n).filter(|&r| r != i).collect();
                    let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
                    let minor = det_submatrix(&self.inner.components, n, &rows, &cols);
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    inv[i * n + j] = Expr::num(sign).mul(&minor).div(&det);
                }
            }
            inv
        })
    }

    /// Evaluate the metric at a point, checking positive definiteness.
    pub fn eval_metric(&self, point: &[f64], pd_tol: f64) -> Result<MetricAtPoint> {
        let env = self.chart().env(point);
        let mut scope = EvalScope::new(&env);
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = scope.eval(self.component(i, j))?;
            }
        }
        MetricAtPoint::new(m, pd_tol, point)
    }

    /// Christoffel symbols Γ^k_{ij} as a symbolic (1,2) field
    /// (slot order: k, i, j).
    pub fn christoffel(&self) -> &SymTensorField {
        self.inner.christoffel.get_or_init(|| {
            let n = self.dim();
            let chart = self.chart().clone();
            let names = chart.names().to_vec();
            let inv = self.inverse().to_vec();
            // precompute partials ∂_k g_{ij}
            let mut dg = vec![Expr::zero(); n * n * n];
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        dg[(k * n + i) * n + j] = self.component(i, j).diff(&names[k]);
                    }
                }
            }
            SymTensorField::from_fn(
                &chart,
                &[Variance::Upper, Variance::Lower, Variance::Lower],
                |idx| {
                    let (k, i, j) = (idx[0], idx[1], idx[2]);
                    Expr::sum((0..n).map(|l| {
                        let bracket = dg[(i * n + j) * n + l]
                            .add(&dg[(j * n + i) * n + l])
                            .sub(&dg[(l * n + i) * n + j]);
                        inv[k * n + l].mul(&bracket)
                    }))
                    .mul(&Expr::num(0.5))
                },
            )
        })
    }

    /// Riemann curvature R^l_{kij} as a symbolic (1,3) field, for the
    /// convention R(∂_i, ∂_j) ∂_k = R^l_{kij} ∂_l, i.e.
    /// R^l_{kij} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im} Γ^m_{jk} − Γ^l_{jm} Γ^m_{ik}.
    pub fn riemann(&self) -> &SymTensorField {
        self.inner.riemann.get_or_init(|| {
            let n = self.dim();
            let chart = self.chart().clone();
            let names = chart.names().to_vec();
            let gamma = self.christoffel().clone();
            // ∂_a Γ^l_{ij}
            let mut dgamma = vec![Expr::zero(); n * n * n * n];
            for a in 0..n {
                for l in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            dgamma[((a * n + l) * n + i) * n + j] =
                                gamma.get(&[l, i, j]).diff(&names[a]);
                        }
                    }
                }
            }
            SymTensorField::from_fn(
                &chart,
                &[
                    Variance::Upper,
                    Variance::Lower,
                    Variance::Lower,
                    Variance::Lower,
                ],
                |idx| {
                    let (l, k, i, j) = (idx[0], idx[1], idx[2], idx[3]);
                    let mut acc = dgamma[((i * n + l) * n + j) * n + k]
                        .sub(&dgamma[((j * n + l) * n + i) * n + k]);
                    for m in 0..n {
                        acc = acc.add(&gamma.get(&[l, i, m]).mul(gamma.get(&[m, j, k])));
                        acc = acc.sub(&gamma.get(&[l, j, m]).mul(gamma.get(&[m, i, k])));
                    }
                    acc
                },
            )
        })
    }

    /// Ricci tensor Ric_{kj} = R^i_{kij} as a symbolic (0,2) field.
    pub fn ricci(&self) -> &SymTensorField {
        self.inner
            .ricci
            .get_or_init(|| self.riemann().contract(0, 2))
    }

    /// Scalar curvature as a symbolic expression.
    pub fn scalar_curvature(&self) -> &Expr {
        self.inner.scal.get_or_init(|| {
            let n = self.dim();
            let inv = self.inverse();
            let ric = self.ricci();
            let mut acc = Expr::zero();
            for k in 0..n {
                for j in 0..n {
                    acc = acc.add(&inv[k * n + j].mul(ric.get(&[k, j])));
                }
            }
            acc
        })
    }

    /// ∇R (derivative slot appended last).
    pub fn nabla_riemann(&self) -> &SymTensorField {
        self.inner
            .nabla_riemann
            .get_or_init(|| self.riemann().covariant_derivative(self))
    }

    /// ∇²R (two derivative slots appended last).
    pub fn nabla2_riemann(&self) -> &SymTensorField {
        self.inner
            .nabla2_riemann
            .get_or_init(|| self.nabla_riemann().covariant_derivative(self))
    }
}

/// Determinant of the submatrix over `cols`, expanding along the first of
/// `rows`; memoization keeps the expansion polynomial-sized.
fn det_memo(comps: &[Expr], n: usize, cols: &[usize]) -> Expr {
    fn go(
        comps: &[Expr],
        n: usize,
        row: usize,
        cols: &[usize],
        memo: &mut HashMap<(usize, Vec<usize>), Expr>,
    ) -> Expr {
        if cols.is_empty() {
            return Expr::one();
        }
        if let Some(e) = memo.get(&(row, cols.to_vec())) {
            return e.clone();
        }
        let mut acc = Expr::zero();
        for (pos, &c) in cols.iter().enumerate() {
            let entry = &comps[row * n + c];
            if entry.is_zero() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let sub = go(comps, n, row + 1, &rest, memo);
            let term = entry.mul(&sub);
            acc = if pos % 2 == 0 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        memo.insert((row, cols.to_vec()), acc.clone());
        acc
    }
    go(comps, n, n - cols.len(), cols, &mut HashMap::new())
}

/// Determinant of the minor with the given row and column subsets.
fn det_submatrix(comps: &[Expr], n: usize, rows: &[usize], cols: &[usize]) -> Expr {
    if rows.is_empty() {
        return Expr::one();
    }
    let row = rows[0];
    let mut acc = Expr::zero();
    for (pos, &c) in cols.iter().enumerate() {
        let entry = &comps[row * n + c];
        if entry.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let sub = det_submatrix(comps, n, &rows[1..], &rest);
        let term = entry.mul(&sub);
        acc = if pos % 2 == 0 {
            acc.add(&term)
        } else {
            acc.sub(&term)
        };
    }
    acc
}

// ---------------------------------------------------------------------------
// Point operations

/// Christoffel symbols at a point as a (1,2) tensor value.
pub fn christoffel_at(g: &MetricField, point: &[f64], pd_tol: f64) -> Result<TensorValue> {
    g.eval_metric(point, pd_tol)?; // positive-definiteness gate
    g.christoffel().eval_at(point)
}

/// Riemann tensor R^l_{kij} at a point as a (1,3) tensor value.
pub fn riemann_at(g: &MetricField, point: &[f64], pd_tol: f64) -> Result<TensorValue> {
    g.eval_metric(point, pd_tol)?;
    g.riemann().eval_at(point)
}

/// Sectional curvature of span{X, Y} at a point.
pub fn sectional_at(
    g: &MetricField,
    point: &[f64],
    x: &[f64],
    y: &[f64],
    pd_tol: f64,
) -> Result<f64> {
    let n = g.dim();
    assert_eq!(x.len(), n);
    assert_eq!(y.len(), n);
    let gp = g.eval_metric(point, pd_tol)?;
    let riem = g.riemann().eval_at(point)?;
    // numerator ⟨R(X,Y)Y, X⟩ = g_{lm} X^m R^l_{kij} Y^k X^i Y^j
    let mut num = 0.0;
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let r = riem.get(&[l, k, i, j]);
                    if r == 0.0 {
                        continue;
                    }
                    let mut gx = 0.0;
                    for m in 0..n {
                        gx += gp.lower()[(l, m)] * x[m];
                    }
                    num += gx * r * y[k] * x[i] * y[j];
                }
            }
        }
    }
    let xx = gp.dot(x, x);
    let yy = gp.dot(y, y);
    let xy = gp.dot(x, y);
    let denom = xx * yy - xy * xy;
    if denom < 1e-12 {
        return Err(Error::DegeneratePlane { denom });
    }
    Ok(num / denom)
}

/// Divergence of a vector field at a point: div X = ∂_i X^i + Γ^i_{im} X^m.
pub fn divergence_at(
    field: &SymTensorField,
    g: &MetricField,
    point: &[f64],
    pd_tol: f64,
) -> Result<f64> {
    assert_eq!(field.rank(), 1);
    assert_eq!(field.variance()[0], Variance::Upper);
    g.eval_metric(point, pd_tol)?;
    let div = divergence_field(field, g);
    let env = g.chart().env(point);
    EvalScope::new(&env).eval(&div)
}

/// Divergence as a symbolic expression.
pub fn divergence_field(field: &SymTensorField, g: &MetricField) -> Expr {
    let n = g.dim();
    let names = g.chart().names().to_vec();
    let gamma = g.christoffel();
    let mut acc = Expr::zero();
    for i in 0..n {
        acc = acc.add(&field.get(&[i]).diff(&names[i]));
    }
    for i in 0..n {
        for m in 0..n {
            acc = acc.add(&gamma.get(&[i, i, m]).mul(field.get(&[m])));
        }
    }
    acc
}

/// Gradient of a scalar expression as an upper-index field: g^{ij} ∂_j s.
pub fn gradient_field(scalar: &Expr, g: &MetricField) -> SymTensorField {
    let n = g.dim();
    let names = g.chart().names().to_vec();
    let inv = g.inverse().to_vec();
    let partials: Vec<Expr> = names.iter().map(|v| scalar.diff(v)).collect();
    SymTensorField::from_fn(g.chart(), &[Variance::Upper], |idx| {
        let i = idx[0];
        Expr::sum((0..n).map(|j| inv[i * n + j].mul(&partials[j])))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn warped_surface() -> MetricField {
        // g = dx² + e^{2x} dy²
        let chart = Chart::new(&["x", "y"]).unwrap();
        let e2x = Expr::num(2.0).mul(&Expr::var("x")).exp();
        MetricField::diagonal(chart, vec![Expr::one(), e2x]).unwrap()
    }

    fn hopf_total() -> MetricField {
        // dη² + sin²η dξ₁² + cos²η dξ₂²
        let chart = Chart::new(&["eta", "xi1", "xi2"]).unwrap();
        let eta = Expr::var("eta");
        MetricField::diagonal(
            chart,
            vec![Expr::one(), eta.sin().pow(2.0), eta.cos().pow(2.0)],
        )
        .unwrap()
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let g = MetricField::euclidean(Chart::new(&["x", "y", "z"]).unwrap());
        let gamma = christoffel_at(&g, &[0.3, -1.2, 0.5], 1e-12).unwrap();
        assert_eq!(gamma.max_abs(), 0.0);
    }

    #[test]
    fn warped_surface_christoffel() {
        let g = warped_surface();
        let p = [0.4, -0.7];
        let gamma = christoffel_at(&g, &p, 1e-12).unwrap();
        let e2x = (2.0 * p[0]).exp();
        // Γ^x_{yy} = −e^{2x}, Γ^y_{xy} = 1
        assert!((gamma.get(&[0, 1, 1]) + e2x).abs() <= 1e-12 * e2x);
        assert!((gamma.get(&[1, 0, 1]) - 1.0).abs() <= 1e-12);
        assert!((gamma.get(&[1, 1, 0]) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn hopf_chart_christoffel() {
        let g = hopf_total();
        let p = [0.6, 1.0, 2.0];
        let gamma = christoffel_at(&g, &p, 1e-12).unwrap();
        // Γ^η_{ξ₁ξ₁} = −sin η cos η
        let expected = -(p[0].sin() * p[0].cos());
        assert!((gamma.get(&[0, 1, 1]) - expected).abs() <= 1e-12);
    }

    #[test]
    fn flat_riemann_vanishes() {
        let g = MetricField::euclidean(Chart::new(&["x", "y"]).unwrap());
        let r = riemann_at(&g, &[1.0, 2.0], 1e-12).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn hyperbolic_surface_sectional() {
        let g = warped_surface();
        for p in [[0.0, 0.0], [0.8, -0.3], [-0.5, 1.1]] {
            let k = sectional_at(&g, &p, &[1.0, 0.0], &[0.0, 1.0], 1e-12).unwrap();
            assert!((k + 1.0).abs() <= 1e-9, "K = {k} at {p:?}");
        }
    }

    #[test]
    fn round_sphere_sectional() {
        let g = hopf_total();
        let p = [0.7, 0.4, 2.2];
        for (x, y) in [
            ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            ([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
            ([0.0, 1.0, 0.0], [0.3, 0.0, 1.0]),
        ] {
            let k = sectional_at(&g, &p, &x, &y, 1e-12).unwrap();
            assert!((k - 1.0).abs() <= 1e-9, "K = {k}");
        }
    }

    #[test]
    fn sectional_depends_only_on_plane() {
        let g = warped_surface();
        let p = [0.2, 0.9];
        let k1 = sectional_at(&g, &p, &[1.0, 0.0], &[0.0, 1.0], 1e-12).unwrap();
        let k2 = sectional_at(&g, &p, &[2.0, 0.0], &[1.0, 1.0], 1e-12).unwrap();
        assert!((k1 - k2).abs() <= 1e-9);
    }

    #[test]
    fn degenerate_plane_rejected() {
        let g = MetricField::euclidean(Chart::new(&["x", "y"]).unwrap());
        assert!(matches!(
            sectional_at(&g, &[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], 1e-12),
            Err(Error::DegeneratePlane { .. })
        ));
    }

    #[test]
    fn metric_compatibility() {
        // ∇g = 0 for a non-trivial metric
        let g = hopf_total();
        let nabla_g = g.as_field().covariant_derivative(&g);
        let t = nabla_g.eval_at(&[0.9, 0.1, 0.2]).unwrap();
        assert!(t.max_abs() <= 1e-10, "|∇g| = {}", t.max_abs());
    }

    #[test]
    fn hessian_symmetric_flat() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let g = MetricField::euclidean(chart.clone());
        let s = Expr::parse("sin(x)*y^2 + exp(x*y)", &["x", "y"]).unwrap();
        let grad = SymTensorField::from_fn(&chart, &[Variance::Lower], |idx| {
            s.diff(&chart.names()[idx[0]])
        });
        let hess = grad.covariant_derivative(&g).eval_at(&[0.3, 0.7]).unwrap();
        assert!((hess.get(&[0, 1]) - hess.get(&[1, 0])).abs() <= 1e-10);
    }

    #[test]
    fn scalar_gradient_is_lower_partials() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let g = MetricField::euclidean(chart.clone());
        let s = SymTensorField::scalar(&chart, Expr::parse("x^2*y", &["x", "y"]).unwrap());
        let ds = s.covariant_derivative(&g).eval_at(&[1.5, -2.0]).unwrap();
        assert!((ds.get(&[0]) - (2.0 * 1.5 * -2.0)).abs() <= 1e-12);
        assert!((ds.get(&[1]) - 1.5f64.powi(2)).abs() <= 1e-12);
    }

    #[test]
    fn divergence_examples() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let flat = MetricField::euclidean(chart.clone());
        // constant field in flat space
        let constant = SymTensorField::from_fn(&chart, &[Variance::Upper], |_| Expr::num(1.0));
        assert_eq!(divergence_at(&constant, &flat, &[0.1, 0.2], 1e-12).unwrap(), 0.0);
        // radial field x∂x + y∂y in flat ℝ²
        let radial = SymTensorField::from_fn(&chart, &[Variance::Upper], |idx| chart.coord(idx[0]));
        assert_eq!(divergence_at(&radial, &flat, &[0.4, -0.9], 1e-12).unwrap(), 2.0);
        // X = −∂x on the warped surface: div = −Γ^y_{yx} = −1
        let g = warped_surface();
        let minus_dx = SymTensorField::from_fn(&chart, &[Variance::Upper], |idx| {
            if idx[0] == 0 {
                Expr::num(-1.0)
            } else {
                Expr::zero()
            }
        });
        let d = divergence_at(&minus_dx, &g, &[0.3, 0.5], 1e-12).unwrap();
        assert!((d + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn inverse_metric_is_pointwise_inverse() {
        let g = hopf_total();
        let n = g.dim();
        let p = [0.5, 0.3, 1.7];
        let env = g.chart().env(&p);
        let mut scope = EvalScope::new(&env);
        let inv = g.inverse();
        let gp = g.eval_metric(&p, 1e-12).unwrap();
        for i in 0..n {
            for j in 0..n {
                let v = scope.eval(&inv[i * n + j]).unwrap();
                assert!((v - gp.raise()[(i, j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn chart_validation() {
        assert!(Chart::new(&["x", "x"]).is_err());
        assert!(Chart::new(&["sin"]).is_err());
        assert!(Chart::new(&[]).is_err());
        let c = Chart::with_domain(&["x"], vec![(0.0, 1.0)]).unwrap();
        assert!(c.contains(&[0.5]));
        assert!(!c.contains(&[1.5]));
        assert!(!c.contains(&[0.0])); // open box
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let comps = vec![Expr::one(), Expr::var("x"), Expr::zero(), Expr::one()];
        assert!(MetricField::new(chart, comps).is_err());
    }
}
