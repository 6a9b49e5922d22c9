//! Small dense helpers shared by the bound routines.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular {
            what,
            cause: "non-finite entries".into(),
        });
    }
    match m.clone().cholesky() {
        Some(c) => Ok(c.inverse()),
        None => Err(Error::Singular {
            what,
            cause: format!(
                "Cholesky failed, smallest eigenvalue {:.3e}",
                min_eigenvalue(m)
            ),
        }),
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m).symmetric_eigenvalues().min()
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m).symmetric_eigenvalues().max()
}

/// `a ⪰ b` in the Loewner order: the smallest eigenvalue of `a - b` is at
/// least `-tol` times the scale of the operands.
pub fn psd_dominates(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    let scale = a.abs().max().max(b.abs().max()).max(1e-300);
    min_eigenvalue(&(a - b)) >= -tol * scale
}

/// Eigenvalue-thresholded pseudo-inverse. Diagnostics only: bound reporting
/// never falls back to this.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_threshold: f64) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let cutoff = eig.eigenvalues.abs().max() * rel_threshold;
    let inv = eig
        .eigenvalues
        .map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_spd() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = spd_inverse(&m, "m").unwrap();
        assert!((&m * inv - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            spd_inverse(&m, "m"),
            Err(Error::Singular { what: "m", .. })
        ));
        let p = pseudo_inverse(&m, 1e-12);
        assert!((&p - DMatrix::from_element(2, 2, 0.25)).abs().max() < 1e-14);
    }

    #[test]
    fn loewner_order() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let b = DMatrix::identity(2, 2);
        assert!(psd_dominates(&a, &b, 1e-12));
        assert!(!psd_dominates(&b, &a, 1e-12));
    }
}
