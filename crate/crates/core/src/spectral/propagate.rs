use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::basis::{eigendecompose, SpectralBasis};
use super::cheb::{cheb_eval, ChebFilter, TemplateBank};
use crate::error::{Error, Result};
use crate::graph::CsrMatrix;

/// Below this the spectrum is treated as identically zero.
pub const ZERO_SPECTRUM: f64 = 1e-12;

/// λ_max to rescale against: the given value, or 1 for an all-zero spectrum
/// (where every eigenvalue maps to λ̃ = −1 regardless).
pub fn effective_lambda_max(lambda_max: f64) -> f64 {
    if lambda_max > ZERO_SPECTRUM {
        lambda_max
    } else {
        1.0
    }
}

/// A square operator that can be applied to a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        CsrMatrix::dim(self)
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.mul_vec_into(x, out);
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

fn check_signal(n: usize, x: &[f64]) -> Result<()> {
    if x.len() != n {
        return Err(Error::Shape(format!(
            "signal of length {} for an operator of dimension {n}",
            x.len()
        )));
    }
    Ok(())
}

/// y = U h(Λ) Uᵀ x, in three explicit steps: forward transform, per-frequency
/// gain, inverse transform.
pub fn filter_exact(basis: &SpectralBasis, filter: &ChebFilter, x: &[f64]) -> Result<Vec<f64>> {
    check_signal(basis.dim(), x)?;
    if basis.lambda_max.abs() <= ZERO_SPECTRUM {
        let h0 = filter.at_zero();
        return Ok(x.iter().map(|v| h0 * v).collect());
    }
    let x_hat = basis.forward(x)?;
    let y_hat: Vec<f64> = x_hat
        .iter()
        .zip(&basis.eigenvalues)
        .map(|(c, &l)| cheb_eval(filter, l) * c)
        .collect();
    basis.inverse(&y_hat)
}

/// Σ θ_k T_k(L̃) x via the three-term recurrence on vectors, with
/// L̃ = (2/λ_max) L − I. Costs K mat-vecs; no eigendecomposition.
pub fn filter_fast<Op: LinearOperator + ?Sized>(
    op: &Op,
    filter: &ChebFilter,
    x: &[f64],
) -> Result<Vec<f64>> {
    let n = op.dim();
    check_signal(n, x)?;
    let coeffs = filter.coeffs();
    let scale = 2.0 / filter.lambda_max();
    let shifted = |v: &[f64], out: &mut [f64]| {
        op.apply_into(v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = scale * *o - vi;
        }
    };

    let mut y: Vec<f64> = x.iter().map(|v| coeffs[0] * v).collect();
    if coeffs.len() == 1 {
        return Ok(y);
    }
    let mut prev = x.to_vec();
    let mut cur = vec![0.0; n];
    shifted(&prev, &mut cur);
    for (yi, c) in y.iter_mut().zip(&cur) {
        *yi += coeffs[1] * c;
    }
    let mut next = vec![0.0; n];
    for &theta in &coeffs[2..] {
        shifted(&cur, &mut next);
        for ((nx, p), yi) in next.iter_mut().zip(&prev).zip(y.iter_mut()) {
            *nx = 2.0 * *nx - p;
            *yi += theta * *nx;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(y)
}

/// Power-iteration estimate of the largest eigenvalue of a PSD operator,
/// inflated by 1%.
pub fn estimate_lambda_max<Op: LinearOperator + ?Sized>(op: &Op, iterations: usize) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut w = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        op.apply_into(&v, &mut w);
        estimate = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        std::mem::swap(&mut v, &mut w);
    }
    estimate.max(0.0) * 1.01
}

/// A way of applying a Chebyshev filter to a graph signal.
pub trait Propagator: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// Spectral upper bound to build compatible filters against. Exact for
    /// the eigenbasis strategy, an estimate for matrix-free ones. Never 0.
    fn lambda_max(&self) -> f64;

    fn propagate(&self, filter: &ChebFilter, x: &[f64]) -> Result<Vec<f64>>;
}

/// Filters through the full eigenbasis.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    basis: SpectralBasis,
}

impl ExactPropagator {
    pub fn new(basis: SpectralBasis) -> Self {
        Self { basis }
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }
}

impl Propagator for ExactPropagator {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn lambda_max(&self) -> f64 {
        effective_lambda_max(self.basis.lambda_max)
    }

    fn propagate(&self, filter: &ChebFilter, x: &[f64]) -> Result<Vec<f64>> {
        filter_exact(&self.basis, filter, x)
    }
}

/// Matrix-free Chebyshev recurrence over a sparse Laplacian.
#[derive(Clone, Debug)]
pub struct ChebyshevPropagator {
    laplacian: CsrMatrix,
    lambda_max: f64,
}

impl ChebyshevPropagator {
    /// Uses the power-iteration estimate for λ_max.
    pub fn new(laplacian: CsrMatrix) -> Self {
        let est = estimate_lambda_max(&laplacian, 200);
        Self::with_lambda_max(laplacian, est)
    }

    pub fn with_lambda_max(laplacian: CsrMatrix, lambda_max: f64) -> Self {
        Self {
            laplacian,
            lambda_max: effective_lambda_max(lambda_max),
        }
    }
}

impl Propagator for ChebyshevPropagator {
    fn name(&self) -> &'static str {
        "chebyshev"
    }

    fn dim(&self) -> usize {
        self.laplacian.dim()
    }

    fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    fn propagate(&self, filter: &ChebFilter, x: &[f64]) -> Result<Vec<f64>> {
        filter_fast(&self.laplacian, filter, x)
    }
}

pub type PropagatorFactory = fn(&DMatrix<f64>) -> Result<Box<dyn Propagator>>;

/// Propagation strategies by name.
pub struct PropagatorRegistry {
    factories: BTreeMap<&'static str, PropagatorFactory>,
}

impl PropagatorRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("exact", |l| Ok(Box::new(ExactPropagator::new(eigendecompose(l)?))));
        reg.register("chebyshev", |l| {
            Ok(Box::new(ChebyshevPropagator::new(CsrMatrix::from_dense(l)?)))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: PropagatorFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, laplacian: &DMatrix<f64>) -> Result<Box<dyn Propagator>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown propagator {name:?} (available: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(laplacian)
    }
}

/// Applies every template to `x`. Composition of the per-rule responses is
/// left to the caller.
pub fn apply_bank(
    bank: &TemplateBank,
    propagator: &dyn Propagator,
    x: &[f64],
) -> Result<BTreeMap<String, Vec<f64>>> {
    check_signal(propagator.dim(), x)?;
    if let Some((_, first)) = bank.templates().first() {
        let lm = first.lambda_max();
        if let Some((rule, _)) = bank
            .templates()
            .iter()
            .find(|(_, f)| (f.lambda_max() - lm).abs() > 1e-12 * lm)
        {
            return Err(Error::Config(format!(
                "template {rule:?} uses a different lambda_max than the rest of the bank"
            )));
        }
    }
    bank.templates()
        .iter()
        .map(|(rule, f)| Ok((rule.clone(), propagator.propagate(f, x)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LaplacianKind;

    fn path3() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0])
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_filter_returns_input() {
        let basis = eigendecompose(&path3()).unwrap();
        let f = ChebFilter::identity(basis.lambda_max).unwrap();
        let x = [0.1, 0.9, 0.4];
        assert!(max_diff(&filter_exact(&basis, &f, &x).unwrap(), &x) < 1e-10);
        assert_eq!(filter_fast(&path3(), &f, &x).unwrap(), x.to_vec());
        assert_eq!(filter_exact(&basis, &f, &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn first_order_filter_matches_dense_product() {
        // path spectrum is {0, 1, 3}; h = T1(λ̃) means h(L) = (2/3)L − I
        let l = path3();
        let basis = eigendecompose(&l).unwrap();
        assert!((basis.lambda_max - 3.0).abs() < 1e-12);
        let f = ChebFilter::new(vec![0.0, 1.0], basis.lambda_max).unwrap();
        let x = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.5]);
        let expected = (&l * (2.0 / 3.0) - DMatrix::identity(3, 3)) * &x;
        let got = filter_exact(&basis, &f, x.as_slice()).unwrap();
        assert!(max_diff(&got, expected.as_slice()) < 1e-12);
        // hand value: L x = (1, -1.5, 0.5), so (2/3) L x − x = (-1/3, -1, -1/6)
        assert!(max_diff(&got, &[-1.0 / 3.0, -1.0, -1.0 / 6.0]) < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let basis = eigendecompose(&path3()).unwrap();
        let f = ChebFilter::identity(3.0).unwrap();
        assert!(matches!(filter_exact(&basis, &f, &[1.0]), Err(Error::Shape(_))));
        assert!(matches!(filter_fast(&path3(), &f, &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_spectrum_applies_h_at_zero() {
        let basis = eigendecompose(&DMatrix::zeros(2, 2)).unwrap();
        let f = ChebFilter::new(vec![0.5, 0.25, 1.0], 1.0).unwrap();
        let x = [2.0, -4.0];
        let h0 = 0.5 - 0.25 + 1.0;
        assert_eq!(filter_exact(&basis, &f, &x).unwrap(), vec![2.0 * h0, -4.0 * h0]);
        let fast = filter_fast(&DMatrix::<f64>::zeros(2, 2), &f, &x).unwrap();
        assert!(max_diff(&fast, &[2.0 * h0, -4.0 * h0]) < 1e-15);
    }

    #[test]
    fn power_iteration_bounds_chain_spectrum() {
        let edges: Vec<_> = (0..49).map(|i| (i, i + 1, 1.0)).collect();
        let l = CsrMatrix::laplacian_from_edges(50, &edges, LaplacianKind::Unnormalized).unwrap();
        let exact = eigendecompose(&l.to_dense()).unwrap().lambda_max;
        let est = estimate_lambda_max(&l, 500);
        assert!(est <= exact * 1.01 + 1e-12);
        assert!(est > exact * 0.95);
    }

    #[test]
    fn registry_strategies_agree() {
        let reg = PropagatorRegistry::builtin();
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["chebyshev", "exact"]);
        let exact = reg.create("exact", &path3()).unwrap();
        let cheb = reg.create("chebyshev", &path3()).unwrap();
        let f = ChebFilter::heat_kernel(0.7, 6, exact.lambda_max()).unwrap();
        let x = [0.9, 0.1, 0.3];
        let a = exact.propagate(&f, &x).unwrap();
        let b = cheb.propagate(&f, &x).unwrap();
        assert!(max_diff(&a, &b) < 1e-12);
        assert!(reg.create("lanczos", &path3()).is_err());
    }

    #[test]
    fn bank_application() {
        let basis = eigendecompose(&path3()).unwrap();
        let p = ExactPropagator::new(basis.clone());
        let x = [0.2, 0.5, 0.7];
        let empty = TemplateBank::default();
        assert!(apply_bank(&empty, &p, &x).unwrap().is_empty());

        let id = ChebFilter::identity(3.0).unwrap();
        let one = TemplateBank::new(vec![("r".into(), id.clone())]).unwrap();
        let out = apply_bank(&one, &p, &x).unwrap();
        assert!(max_diff(&out["r"], &x) < 1e-12);

        let band = ChebFilter::new(vec![0.1, 0.0, -0.4], 3.0).unwrap();
        let two = TemplateBank::new(vec![("low".into(), id.clone()), ("band".into(), band.clone())]).unwrap();
        let out = apply_bank(&two, &p, &x).unwrap();
        assert_eq!(out["low"], filter_exact(&basis, &id, &x).unwrap());
        assert_eq!(out["band"], filter_exact(&basis, &band, &x).unwrap());

        let odd = TemplateBank::new(vec![
            ("a".into(), id),
            ("b".into(), ChebFilter::identity(5.0).unwrap()),
        ])
        .unwrap();
        assert!(apply_bank(&odd, &p, &x).is_err());
    }
}
