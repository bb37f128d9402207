//! Instance optimality of ℓ1 decoding with Gaussian encoders.
//!
//! A robust null space property with constant `η` gives the ℓ1 instance
//! optimality constant `C = 2(1+η)/(1−η)`. Finite constants only exist for
//! sparsity fractions up to `κ₀ ≈ 0.18`, so when `G₁(κ₀) ≥ 1/2` the best
//! guarantee `C·σ_k(x)₁/‖x‖₁ ≥ 2·G₁` cannot beat the trivial decoder.

use crate::dist::DistributionModel;
use crate::error::{Error, Result};
use crate::gcs::{EncoderInstance, RowSpaceFactor};
use crate::metrics::{top_k_support, GFunctional};
use crate::optimize::bisect;
use crate::rng::{child_rng, StreamRole};
use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest sparsity fraction `k/m` with a finite constant for Gaussian
/// encoders, taken as given from the strong phase-transition literature.
pub const KAPPA0: f64 = 0.18;

const BOUNDARY_XTOL: f64 = 1e-12;

/// `C = 2(1+η)/(1−η)`; infinite for `η ≥ 1`.
pub fn io_constant(eta: f64) -> Result<f64> {
    if !(eta >= 0.0) {
        return Err(Error::domain("io_constant", format!("eta = {eta} must be nonnegative")));
    }
    if eta >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * (1.0 + eta) / (1.0 - eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IOAssessment {
    pub dist: DistributionModel,
    pub kappa0: f64,
    pub g1_at_kappa0: f64,
    /// `G₁(κ₀) ≥ 1/2`: no guarantee better than the trivial decoder.
    pub trivial_at_kappa0: bool,
    /// Root of `G₁(δ) = 1/2`; `None` for an infinite first moment.
    pub weak_boundary_delta0: Option<f64>,
}

pub fn trivial_guarantee_test(dist: &DistributionModel) -> Result<IOAssessment> {
    let g1 = GFunctional::new(dist, 1.0)?;
    if !g1.bounded() {
        return Ok(IOAssessment {
            dist: *dist,
            kappa0: KAPPA0,
            g1_at_kappa0: 0.0,
            trivial_at_kappa0: false,
            weak_boundary_delta0: None,
        });
    }
    let g_k0 = g1.value(KAPPA0)?;
    // G₁ falls from 1 at κ = 0 to 0 at κ = 1
    let mut err = None;
    let root = bisect(
        |d| match g1.value(d) {
            Ok(v) => v - 0.5,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        0.0,
        1.0,
        BOUNDARY_XTOL,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(IOAssessment {
        dist: *dist,
        kappa0: KAPPA0,
        g1_at_kappa0: g_k0,
        trivial_at_kappa0: g_k0 >= 0.5,
        weak_boundary_delta0: Some(root),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NspCheck {
    /// False once some kernel vector violates `‖z_Ω‖₁ < η‖z_Ω̄‖₁`.
    pub holds_so_far: bool,
    /// Largest `‖z_Ω‖₁/‖z_Ω̄‖₁` seen over the sampled directions.
    pub worst_ratio: f64,
    pub directions: usize,
    pub witness: Option<Vec<f64>>,
}

/// `‖z_Ω‖₁/‖z_Ω̄‖₁` for `Ω` the `k` largest entries of `|z|`.
pub fn top_k_ratio(z: &[f64], k: usize) -> f64 {
    let support = top_k_support(z, k);
    let head: f64 = support.iter().map(|&i| z[i].abs()).sum();
    let total: f64 = z.iter().map(|v| v.abs()).sum();
    let tail = total - head;
    if head == 0.0 {
        0.0
    } else if tail <= 0.0 {
        f64::INFINITY
    } else {
        head / tail
    }
}

/// Randomized search for a violation of the robust null space property.
///
/// Draws `n_directions` Gaussian vectors, projects them onto `ker Φ`, and
/// checks the worst `k`-term split. A `false` verdict comes with a witness;
/// `true` only means no violation was found.
pub fn robust_nsp_check(enc: &EncoderInstance, eta: f64, k: usize, n_directions: usize, seed: u64) -> Result<NspCheck> {
    let (m, n) = (enc.m(), enc.n());
    if k >= n - m {
        return Err(Error::domain("robust_nsp_check", format!("k = {k} must be below N − m = {}", n - m)));
    }
    if !(eta > 0.0) {
        return Err(Error::domain("robust_nsp_check", format!("eta = {eta} must be positive")));
    }
    if k == 0 {
        return Ok(NspCheck { holds_so_far: true, worst_ratio: 0.0, directions: 0, witness: None });
    }
    let factor = RowSpaceFactor::new(enc)?;
    let q = factor.q();
    let ratios: Vec<(f64, DVector<f64>)> = (0..n_directions)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(seed, i as u64, StreamRole::Directions);
            let g = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let z = &g - q * q.tr_mul(&g);
            (top_k_ratio(z.as_slice(), k), z)
        })
        .collect();
    let mut worst = 0.0f64;
    let mut witness = None;
    for (r, z) in ratios {
        if r > worst {
            worst = r;
        }
        if r >= eta && witness.is_none() {
            witness = Some(z.as_slice().to_vec());
        }
    }
    Ok(NspCheck { holds_so_far: witness.is_none(), worst_ratio: worst, directions: n_directions, witness })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn io_constant_examples() {
        assert_eq!(io_constant(0.0).unwrap(), 2.0);
        assert!((io_constant(1.0 / 3.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(io_constant(1.0).unwrap().is_infinite());
        assert!(io_constant(1.0 - 1e-12).unwrap() > 1e12);
        assert!(io_constant(-0.1).is_err());
    }

    #[test]
    fn top_k_ratio_by_hand() {
        assert_eq!(top_k_ratio(&[3.0, -1.0, 1.0], 1), 1.5);
        assert_eq!(top_k_ratio(&[3.0, -1.0, 1.0], 0), 0.0);
    }
}
