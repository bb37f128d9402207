//! Closed-form predictions for the least-squares and oracle decoders.

use crate::dist::DistributionModel;
use crate::error::{Error, Result};
use crate::metrics::GFunctional;
use serde::{Deserialize, Serialize};

/// Expected LS relative error `1 − m/N`.
pub fn ls_expected_error(m: usize, n: usize) -> Result<f64> {
    if n == 0 || m > n {
        return Err(Error::domain("ls_expected_error", format!("need m <= N, got m = {m}, N = {n}")));
    }
    Ok(1.0 - m as f64 / n as f64)
}

/// Expected oracle relative error for a support of size `k`:
/// `rel_tail_energy / (1 − k/(m−1))`.
pub fn oracle_error_prediction(k: usize, m: usize, rel_tail_energy: f64) -> Result<f64> {
    if m < 2 || k + 1 >= m {
        return Err(Error::domain(
            "oracle_error_prediction",
            format!("k = {k} must be below m − 1 = {}; the restricted system is ill-conditioned", m as i64 - 1),
        ));
    }
    if !(rel_tail_energy >= 0.0) {
        return Err(Error::domain("oracle_error_prediction", "tail energy must be nonnegative"));
    }
    Ok(rel_tail_energy / (1.0 - k as f64 / (m - 1) as f64))
}

/// Large-N limit of the oracle error, `G₂(ρδ)/(1 − ρ)`.
pub fn oracle_asymptotic_error(dist: &DistributionModel, rho: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) || !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain("oracle_asymptotic_error", format!("need ρ in [0, 1), δ in (0, 1]; got {rho}, {delta}")));
    }
    let g2 = GFunctional::new(dist, 2.0)?;
    Ok(g2.value(rho * delta)? / (1.0 - rho))
}

/// `c_l(ε) = −ln(1−ε) − ε`.
pub fn c_l(eps: f64) -> f64 {
    -(-eps).ln_1p() - eps
}

/// `c_u(ε) = ε/(1−ε) + ln(1−ε)`.
pub fn c_u(eps: f64) -> f64 {
    eps / (1.0 - eps) + (-eps).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Interval on `‖Δ_LS(y) − x‖²/‖x‖²`.
    Ls,
    /// Interval on `‖Δ_oracle(y) − x‖²/‖x_Λ̄‖²`.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    /// Support size, used by the oracle bound only.
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationBound {
    pub kind: BoundKind,
    pub epsilon: f64,
    pub lo: f64,
    pub hi: f64,
    /// Upper bound on the probability of falling outside `[lo, hi]`.
    pub failure_prob: f64,
    pub c_l: f64,
    pub c_u: f64,
}

impl ConcentrationBound {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

pub fn concentration_bounds(kind: BoundKind, dims: Dims, eps: f64) -> Result<ConcentrationBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("concentration_bounds", format!("ε = {eps} outside (0, 1)")));
    }
    let Dims { n, m, k } = dims;
    let (nf, mf, kf) = (n as f64, m as f64, k as f64);
    let (lo, hi, failure_prob) = match kind {
        BoundKind::Ls => {
            if m == 0 || m > n {
                return Err(Error::domain("concentration_bounds", format!("need 1 <= m <= N, got {m}, {n}")));
            }
            let e = 1.0 - mf / nf;
            let p = 2.0 * (-(nf - mf) * eps * eps / 4.0).exp() + 2.0 * (-nf * eps * eps / 4.0).exp();
            ((1.0 - eps) * e, e / (1.0 - eps), p)
        }
        BoundKind::Oracle => {
            if k == 0 || k >= m {
                return Err(Error::domain("concentration_bounds", format!("need 0 < k < m, got k = {k}, m = {m}")));
            }
            let dof = mf - kf + 1.0;
            let lo = 1.0 + kf * (1.0 - eps).powi(3) / dof;
            let hi = 1.0 + kf * (1.0 - eps).powi(-3) / dof;
            let p = 8.0 * (-kf.min(dof) * c_l(eps) / 2.0).exp();
            (lo, hi, p)
        }
    };
    Ok(ConcentrationBound { kind, epsilon: eps, lo, hi, failure_prob, c_l: c_l(eps), c_u: c_u(eps) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_prediction_examples() {
        assert_eq!(oracle_error_prediction(0, 10, 1.0).unwrap(), 1.0);
        let v = oracle_error_prediction(512, 2048, 0.1).unwrap();
        assert!((v - 0.1 / (1.0 - 512.0 / 2047.0)).abs() < 1e-15);
        assert!((v - 0.133355).abs() < 1e-6);
        assert!(oracle_error_prediction(9, 10, 0.5).is_err());
    }

    #[test]
    fn c_functions() {
        assert!((c_l(0.5) - (2f64.ln() - 0.5)).abs() < 1e-15);
        for &e in &[1e-3, 0.1, 0.5, 0.9] {
            assert!(c_l(e) >= e * e / 2.0 && c_u(e) >= c_l(e));
        }
    }

    #[test]
    fn interval_collapses_as_eps_shrinks() {
        let b = concentration_bounds(BoundKind::Ls, Dims { n: 256, m: 64, k: 0 }, 1e-9).unwrap();
        assert!((b.lo - 0.75).abs() < 1e-8 && (b.hi - 0.75).abs() < 1e-8);
        let b = concentration_bounds(BoundKind::Oracle, Dims { n: 256, m: 64, k: 10 }, 1e-9).unwrap();
        assert!((b.lo - (1.0 + 10.0 / 55.0)).abs() < 1e-8 && b.lo <= b.hi);
    }
}
