use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Orthonormal DCT-II matrix, `C[k][j] = s_k cos(π(2j+1)k / 2n)`.
pub fn dct_matrix(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |k, j| {
        let s = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        s * (PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    })
}

fn check_square(patch: &DMatrix<f64>, op: &'static str) -> Result<usize> {
    let (r, c) = patch.shape();
    if r != c || r < 2 {
        return Err(Error::domain(op, format!("patch must be square with side >= 2, got {r}x{c}")));
    }
    Ok(r)
}

/// Separable 2D DCT-II, `C X Cᵀ`.
pub fn dct2(patch: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(patch, "dct2")?;
    let c = dct_matrix(n);
    Ok(&c * patch * c.transpose())
}

pub fn idct2(coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(coeffs, "idct2")?;
    let c = dct_matrix(n);
    Ok(c.transpose() * coeffs * &c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_patch_is_pure_dc() {
        let x = DMatrix::from_element(8, 8, 0.25);
        let y = dct2(&x).unwrap();
        assert!((y[(0, 0)] - 0.25 * 8.0).abs() < 1e-12);
        let rest: f64 = y.iter().skip(1).map(|v| v.abs()).sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn rejects_non_square() {
        assert!(dct2(&DMatrix::zeros(4, 8)).is_err());
    }
}
