//! The m × N Gaussian encoder with iid `N(0, 1/m)` entries.

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderInstance {
    matrix: DMatrix<f64>,
    seed: Option<u64>,
}

/// Draw `Φ` column by column from the seed. Requires `1 ≤ m < N`.
pub fn gaussian_encoder(m: usize, n: usize, seed: u64) -> Result<EncoderInstance> {
    if m == 0 || m >= n {
        return Err(Error::domain("gaussian_encoder", format!("need 1 <= m < N, got m = {m}, N = {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let matrix = DMatrix::from_fn(m, n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * scale
    });
    Ok(EncoderInstance { matrix, seed: Some(seed) })
}

impl EncoderInstance {
    /// Wrap a caller-supplied matrix with `m ≤ N` (square fixtures allowed).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let (m, n) = matrix.shape();
        if m == 0 || m > n {
            return Err(Error::domain("EncoderInstance::from_matrix", format!("shape {m}x{n} is not wide")));
        }
        Ok(EncoderInstance { matrix, seed: None })
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    /// Undersampling ratio `m/N`.
    pub fn delta(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `y = Φx`.
    pub fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regenerates_bit_identically() {
        let a = gaussian_encoder(128, 256, 7).unwrap();
        let b = gaussian_encoder(128, 256, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gaussian_encoder(128, 256, 8).unwrap());
    }

    #[test]
    fn rejects_square_and_tall() {
        assert!(gaussian_encoder(256, 256, 1).is_err());
        assert!(gaussian_encoder(0, 256, 1).is_err());
    }
}
