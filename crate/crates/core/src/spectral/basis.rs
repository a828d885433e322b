use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition L = U Λ Uᵀ of a symmetric Laplacian: the graph
/// Fourier basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column k is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
    pub lambda_max: f64,
}

impl SpectralBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Forward graph Fourier transform, Uᵀx.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok(self
            .eigenvectors
            .column_iter()
            .map(|u| u.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Inverse transform, U x̂.
    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs)?;
        let n = self.dim();
        let mut y = vec![0.0; n];
        for (k, c) in coeffs.iter().enumerate() {
            for (yi, u) in y.iter_mut().zip(self.eigenvectors.column(k).iter()) {
                *yi += u * c;
            }
        }
        Ok(y)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "signal of length {} for a basis of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Number of eigenvalues with magnitude at most `tol`.
    pub fn zero_multiplicity(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|l| l.abs() <= tol).count()
    }
}

/// Dense symmetric eigendecomposition with eigenvalues sorted ascending.
///
/// Sign convention: in each eigenvector the entry of largest magnitude (the
/// first one, on ties) is non-negative.
pub fn eigendecompose(l: &DMatrix<f64>) -> Result<SpectralBasis> {
    let (r, c) = l.shape();
    if r != c {
        return Err(Error::Shape(format!("expected square matrix, got {r}x{c}")));
    }
    let asym = (l - l.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::Shape(format!(
            "matrix is not symmetric (max |L - Lᵀ| = {asym:e})"
        )));
    }
    let n = r;
    if n == 0 {
        return Ok(SpectralBasis {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
            lambda_max: 0.0,
        });
    }
    let max_iter = 10_000 + 100 * n;
    let eig = SymmetricEigen::try_new(l.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::Numerical { iterations: max_iter })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(dst, &(col * sign));
    }
    let lambda_max = *eigenvalues.last().expect("n > 0");
    Ok(SpectralBasis {
        eigenvalues,
        eigenvectors,
        lambda_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_operator() {
        let b = eigendecompose(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(b.eigenvalues, vec![0.0; 3]);
        assert_eq!(b.lambda_max, 0.0);
        let eye = &b.eigenvectors.transpose() * &b.eigenvectors;
        assert!((eye - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn single_edge_spectrum() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let b = eigendecompose(&l).unwrap();
        assert!(b.eigenvalues[0].abs() < 1e-14);
        assert!((b.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert_eq!(b.lambda_max, b.eigenvalues[1]);
    }

    #[test]
    fn sign_convention_holds() {
        let l = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let b = eigendecompose(&l).unwrap();
        for col in b.eigenvectors.column_iter() {
            let mut pivot = 0;
            for i in 1..col.len() {
                if col[i].abs() > col[pivot].abs() {
                    pivot = i;
                }
            }
            assert!(col[pivot] >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(eigendecompose(&DMatrix::zeros(2, 3)), Err(Error::Shape(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(eigendecompose(&asym), Err(Error::Shape(_))));
    }

    #[test]
    fn empty_matrix() {
        let b = eigendecompose(&DMatrix::zeros(0, 0)).unwrap();
        assert_eq!(b.dim(), 0);
        assert_eq!(b.forward(&[]).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn forward_inverse_round_trip() {
        let l = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        let b = eigendecompose(&l).unwrap();
        let x = [0.2, -0.7, 1.3];
        let back = b.inverse(&b.forward(&x).unwrap()).unwrap();
        for (a, e) in back.iter().zip(x) {
            assert!((a - e).abs() < 1e-14);
        }
        assert!(b.forward(&[1.0]).is_err());
    }
}
