//! Symmetric densities and the law of their absolute value.
//!
//! Four families are supported, each with a scale `λ` acting as
//! `p(x) = p₁(x/λ)/λ`:
//!
//! | family | unit-scale density | folded CDF |
//! |---|---|---|
//! | Laplace | `½ e^{−|x|}` | `1 − e^{−t}` |
//! | generalized Gaussian, shape τ | `τ/(2Γ(1/τ)) e^{−|x|^τ}` | `P(1/τ, t^τ)` |
//! | τ-s family | `∝ (1 + |x|^τ)^{−s/τ}` | `I_w(1/τ, (s−1)/τ)`, `w = t^τ/(1+t^τ)` |
//! | boundary density | `2|x|/(x²+1)³` | `1 − (t²+1)^{−2}` |
//!
//! The τ-s family covers the generalized Pareto (τ = 1) and Student's t
//! (τ = 2) shapes. Its normalizer is `2B(1/τ, (s−1)/τ)/τ`.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::rng::rng_from_seed;
use crate::special::{
    ln_beta, ln_gamma, regularized_incomplete_beta,
    regularized_lower_incomplete_gamma, regularized_upper_incomplete_gamma,
};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Upper end of the doubling search used by the numerical quantile.
pub const QUANTILE_BRACKET_CAP: f64 = 1e300;
const QUANTILE_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Laplace,
    GeneralizedGaussian,
    TauS,
    PZero,
}

/// Plain, unvalidated parameters. This is also the serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionParams {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

/// A validated symmetric density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionParams", into = "DistributionParams")]
pub struct DistributionModel {
    family: Family,
    tau: f64,
    s: f64,
    lambda: f64,
    /// log of the unit-scale normalizer over ℝ
    log_norm: f64,
}

impl TryFrom<DistributionParams> for DistributionModel {
    type Error = Error;

    fn try_from(p: DistributionParams) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::domain("DistributionModel", format!("{name} is required for {:?}", p.family)))
        };
        match p.family {
            Family::Laplace => Self::laplace(p.lambda),
            Family::PZero => Self::pzero_scaled(p.lambda),
            Family::GeneralizedGaussian => Self::generalized_gaussian(need(p.tau, "tau")?, p.lambda),
            Family::TauS => Self::tau_s(need(p.tau, "tau")?, need(p.s, "s")?, p.lambda),
        }
    }
}

impl From<DistributionModel> for DistributionParams {
    fn from(d: DistributionModel) -> Self {
        DistributionParams { family: d.family, tau: d.tau_opt(), s: d.s_opt(), lambda: d.lambda }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("DistributionModel", format!("{name} = {v} must be positive and finite")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ClosedForm,
    Quadrature,
    DivergenceRule,
}

/// `E|X|^q`, or a divergence flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub q: f64,
    /// `f64::INFINITY` when `infinite` is set.
    pub value: f64,
    pub infinite: bool,
    pub method: MomentMethod,
}

impl MomentSummary {
    pub fn is_finite(&self) -> bool {
        !self.infinite
    }
}

impl DistributionModel {
    pub fn laplace(lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(DistributionModel { family: Family::Laplace, tau: 1.0, s: 0.0, lambda, log_norm: 2f64.ln() })
    }

    pub fn generalized_gaussian(tau: f64, lambda: f64) -> Result<Self> {
        check_positive("tau", tau)?;
        check_positive("lambda", lambda)?;
        let log_norm = 2f64.ln() + ln_gamma(1.0 / tau) - tau.ln();
        Ok(DistributionModel { family: Family::GeneralizedGaussian, tau, s: 0.0, lambda, log_norm })
    }

    pub fn tau_s(tau: f64, s: f64, lambda: f64) -> Result<Self> {
        check_positive("tau", tau)?;
        check_positive("lambda", lambda)?;
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::domain("DistributionModel", format!("tail s = {s} must exceed 1")));
        }
        let log_norm = 2f64.ln() + ln_beta(1.0 / tau, (s - 1.0) / tau) - tau.ln();
        Ok(DistributionModel { family: Family::TauS, tau, s, lambda, log_norm })
    }

    pub fn pzero() -> Self {
        Self::pzero_scaled(1.0).expect("unit scale is valid")
    }

    pub fn pzero_scaled(lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(DistributionModel { family: Family::PZero, tau: 0.0, s: 0.0, lambda, log_norm: 0.0 })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.lambda
    }

    /// Shape τ, absent for Laplace and the boundary density.
    pub fn tau_opt(&self) -> Option<f64> {
        matches!(self.family, Family::GeneralizedGaussian | Family::TauS).then_some(self.tau)
    }

    pub fn s_opt(&self) -> Option<f64> {
        (self.family == Family::TauS).then_some(self.s)
    }

    /// Same shape with a different scale.
    pub fn with_scale(&self, lambda: f64) -> Result<Self> {
        DistributionParams { lambda, ..(*self).into() }.try_into()
    }

    /// Density on ℝ.
    pub fn pdf(&self, x: f64) -> f64 {
        let z = x.abs() / self.lambda;
        self.unit_pdf(z) / self.lambda
    }

    fn unit_pdf(&self, z: f64) -> f64 {
        match self.family {
            Family::Laplace => 0.5 * (-z).exp(),
            Family::GeneralizedGaussian => (-z.powf(self.tau) - self.log_norm).exp(),
            Family::TauS => {
                let lz = if z == 0.0 { 0.0 } else { (self.tau * z.ln()).exp().ln_1p() };
                (-(self.s / self.tau) * lz - self.log_norm).exp()
            }
            Family::PZero => {
                let w = z * z + 1.0;
                2.0 * z / (w * w * w)
            }
        }
    }

    /// Density of |X|.
    pub fn folded_pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            2.0 * self.pdf(t)
        }
    }

    /// `F̄(t) = P(|X| ≤ t)`.
    pub fn folded_cdf(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain("folded_cdf", format!("t = {t} must be nonnegative")));
        }
        Ok(self.cdf_unchecked(t))
    }

    /// `P(|X| > t)`, accurate deep in the tail.
    pub fn folded_survival(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain("folded_survival", format!("t = {t} must be nonnegative")));
        }
        Ok(self.survival_unchecked(t))
    }

    fn cdf_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        if t.is_infinite() {
            return 1.0;
        }
        let z = t / self.lambda;
        match self.family {
            Family::Laplace => -(-z).exp_m1(),
            Family::GeneralizedGaussian => {
                regularized_lower_incomplete_gamma(1.0 / self.tau, z.powf(self.tau)).unwrap_or(1.0)
            }
            Family::TauS => {
                if self.tau == 1.0 {
                    -((-(self.s - 1.0)) * z.ln_1p()).exp_m1()
                } else {
                    let zt = z.powf(self.tau);
                    let w = zt / (1.0 + zt);
                    regularized_incomplete_beta(1.0 / self.tau, (self.s - 1.0) / self.tau, w).unwrap_or(1.0)
                }
            }
            Family::PZero => {
                let w = z * z + 1.0;
                1.0 - 1.0 / (w * w)
            }
        }
    }

    fn survival_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        if t.is_infinite() {
            return 0.0;
        }
        let z = t / self.lambda;
        match self.family {
            Family::Laplace => (-z).exp(),
            Family::GeneralizedGaussian => {
                regularized_upper_incomplete_gamma(1.0 / self.tau, z.powf(self.tau)).unwrap_or(0.0)
            }
            Family::TauS => {
                if self.tau == 1.0 {
                    ((-(self.s - 1.0)) * z.ln_1p()).exp()
                } else {
                    // 1 − w = 1/(1 + z^τ), formed directly to keep tail precision
                    let a = (self.s - 1.0) / self.tau;
                    let b = 1.0 / self.tau;
                    let ln_y = -self.tau * z.ln() - (-self.tau * z.ln()).exp().ln_1p();
                    if ln_y < -600.0 {
                        // I_y(a, b) = y^a / (a B(a, b)) · (1 + O(y))
                        (a * ln_y - a.ln() - ln_beta(a, b)).exp()
                    } else {
                        regularized_incomplete_beta(a, b, ln_y.exp()).unwrap_or(0.0)
                    }
                }
            }
            Family::PZero => {
                let w = z * z + 1.0;
                1.0 / (w * w)
            }
        }
    }

    /// `F̄⁻¹(u)` for `u ∈ [0, 1)`.
    pub fn folded_quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::domain("folded_quantile", format!("u = {u} outside [0, 1)")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        if u > 0.5 {
            self.upper_quantile(1.0 - u)
        } else {
            self.solve_quantile(u, false)
        }
    }

    /// The `t` with `P(|X| > t) = kappa`, for `kappa ∈ (0, 1]`.
    ///
    /// Preferable to `folded_quantile(1 − κ)` when κ is small.
    pub fn upper_quantile(&self, kappa: f64) -> Result<f64> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::domain("upper_quantile", format!("kappa = {kappa} outside (0, 1]")));
        }
        if kappa == 1.0 {
            return Ok(0.0);
        }
        if let Some(z) = self.closed_upper_quantile(kappa) {
            let t = z * self.lambda;
            if !t.is_finite() {
                return Err(Error::Saturation { u: 1.0 - kappa, t_hi: f64::MAX, cdf_hi: 1.0 });
            }
            return Ok(t);
        }
        if kappa >= 0.5 {
            self.solve_quantile(1.0 - kappa, false)
        } else {
            self.solve_quantile(kappa, true)
        }
    }

    fn closed_upper_quantile(&self, kappa: f64) -> Option<f64> {
        match self.family {
            Family::Laplace => Some(-kappa.ln()),
            Family::PZero => Some((kappa.powf(-0.5) - 1.0).max(0.0).sqrt()),
            Family::TauS if self.tau == 1.0 => Some((-kappa.ln() / (self.s - 1.0)).exp_m1()),
            _ => None,
        }
    }

    /// Safeguarded Newton on `F̄(t) = target` (or `S(t) = target` when
    /// `upper`), inside a bracket grown by doubling.
    fn solve_quantile(&self, target: f64, upper: bool) -> Result<f64> {
        // residual(t) is increasing in t
        let residual = |t: f64| {
            if upper {
                target - self.survival_unchecked(t)
            } else {
                self.cdf_unchecked(t) - target
            }
        };
        let mut lo = 0.0;
        let mut hi = self.lambda;
        while residual(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > QUANTILE_BRACKET_CAP {
                return Err(Error::Saturation {
                    u: if upper { 1.0 - target } else { target },
                    t_hi: hi,
                    cdf_hi: self.cdf_unchecked(hi),
                });
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..400 {
            let r = residual(t);
            if r == 0.0 {
                return Ok(t);
            }
            if r < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= QUANTILE_RTOL * hi {
                break;
            }
            let slope = self.folded_pdf(t);
            let newton = t - r / slope;
            t = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else if lo > 0.0 && hi / lo > 4.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if (t - lo).min(hi - t) <= QUANTILE_RTOL * t {
                // Newton converged onto a bracket end
                break;
            }
        }
        Ok(t)
    }

    /// `E|X|^q`.
    pub fn absolute_moment(&self, q: f64) -> Result<MomentSummary> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::domain("absolute_moment", format!("q = {q} must be positive")));
        }
        if self.moment_diverges(q) {
            return Ok(MomentSummary { q, value: f64::INFINITY, infinite: true, method: MomentMethod::DivergenceRule });
        }
        let scale = self.lambda.powf(q);
        let (unit, method) = match self.family {
            Family::Laplace => (ln_gamma(q + 1.0).exp(), MomentMethod::ClosedForm),
            Family::GeneralizedGaussian => {
                ((ln_gamma((q + 1.0) / self.tau) - ln_gamma(1.0 / self.tau)).exp(), MomentMethod::ClosedForm)
            }
            Family::PZero => (2.0 * ln_beta(0.5 * q + 1.0, 2.0 - 0.5 * q).exp(), MomentMethod::ClosedForm),
            Family::TauS => {
                let unit = self.with_scale(1.0)?;
                (unit.moment_by_quadrature(q), MomentMethod::Quadrature)
            }
        };
        Ok(MomentSummary { q, value: unit * scale, infinite: false, method })
    }

    /// Tail-exponent rule: `E|X|^q = ∞` iff the folded density decays no
    /// faster than `t^{−(q+1)}`.
    pub fn moment_diverges(&self, q: f64) -> bool {
        match self.family {
            Family::Laplace | Family::GeneralizedGaussian => false,
            Family::TauS => q >= self.s - 1.0,
            Family::PZero => q >= 4.0,
        }
    }

    /// `∫₀^∞ t^q p̄(t) dt` by quadrature. Meaningless (large but finite) when
    /// the moment diverges.
    pub fn moment_by_quadrature(&self, q: f64) -> f64 {
        let f = |t: f64| if t == 0.0 { 0.0 } else { t.powf(q) * self.folded_pdf(t) };
        let split = self.lambda;
        let tol = Tolerance { abs: 0.0, rel: 1e-12, max_intervals: 8000 };
        integrate(f, 0.0, split, tol).value + integrate_to_infinity(f, split, tol).value
    }

    /// `∫₀^T t^q p̄(t) dt` by quadrature.
    pub fn partial_moment(&self, q: f64, upper: f64) -> f64 {
        let f = |t: f64| if t == 0.0 { 0.0 } else { t.powf(q) * self.folded_pdf(t) };
        let tol = Tolerance { abs: 0.0, rel: 1e-12, max_intervals: 8000 };
        if upper <= self.lambda {
            integrate(f, 0.0, upper, tol).value
        } else {
            integrate(f, 0.0, self.lambda, tol).value + integrate(f, self.lambda, upper, tol).value
        }
    }

    /// `n` iid draws, deterministic in `seed`.
    ///
    /// The magnitude is the inverse folded CDF applied to a uniform (through
    /// the survival function, so heavy tails keep full precision); the sign
    /// is an independent fair coin. The generalized Gaussian instead uses
    /// `|X| = λ Y^{1/τ}` with `Y ~ Gamma(1/τ, 1)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::domain("sample", "n must be at least 1"));
        }
        let mut rng = rng_from_seed(seed);
        let mut out = Vec::with_capacity(n);
        match self.family {
            Family::GeneralizedGaussian => {
                let gamma = Gamma::new(1.0 / self.tau, 1.0)
                    .map_err(|e| Error::domain("sample", e.to_string()))?;
                for _ in 0..n {
                    let y: f64 = gamma.sample(&mut rng);
                    let mag = self.lambda * y.powf(1.0 / self.tau);
                    out.push(if rng.random::<bool>() { mag } else { -mag });
                }
            }
            _ => {
                for _ in 0..n {
                    // v in (0, 1]
                    let v = 1.0 - rng.random::<f64>();
                    let mag = self.upper_quantile(v)?;
                    out.push(if rng.random::<bool>() { mag } else { -mag });
                }
            }
        }
        Ok(out)
    }

    /// Spec string accepted by `FromStr`.
    pub fn spec_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lam = if self.lambda == 1.0 { String::new() } else { format!(":{}", self.lambda) };
        match self.family {
            Family::Laplace => write!(f, "laplace{lam}"),
            Family::PZero => write!(f, "pzero{lam}"),
            Family::GeneralizedGaussian => write!(f, "ggd:{}{lam}", self.tau),
            Family::TauS => write!(f, "ts:{}:{}{lam}", self.tau, self.s),
        }
    }
}

impl FromStr for DistributionModel {
    type Err = Error;

    /// `laplace[:λ]`, `ggd:τ[:λ]`, `ts:τ:s[:λ]`, `pzero[:λ]`; case-insensitive.
    fn from_str(spec: &str) -> Result<Self> {
        let perr = |msg: &str| Error::Parse { spec: spec.to_string(), msg: msg.to_string() };
        let lower = spec.trim().to_ascii_lowercase();
        let mut parts = lower.split(':');
        let name = parts.next().unwrap_or_default();
        let nums: Vec<f64> = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| perr(&format!("bad number {p:?}"))))
            .collect::<Result<_>>()?;
        let wrap = |r: Result<Self>| r.map_err(|e| perr(&e.to_string()));
        match (name, nums.as_slice()) {
            ("laplace", []) => wrap(Self::laplace(1.0)),
            ("laplace", [l]) => wrap(Self::laplace(*l)),
            ("pzero", []) => Ok(Self::pzero()),
            ("pzero", [l]) => wrap(Self::pzero_scaled(*l)),
            ("ggd", [t]) => wrap(Self::generalized_gaussian(*t, 1.0)),
            ("ggd", [t, l]) => wrap(Self::generalized_gaussian(*t, *l)),
            ("ts", [t, s]) => wrap(Self::tau_s(*t, *s, 1.0)),
            ("ts", [t, s, l]) => wrap(Self::tau_s(*t, *s, *l)),
            ("laplace" | "pzero" | "ggd" | "ts", _) => Err(perr("wrong number of parameters")),
            _ => Err(perr("unknown family (expected laplace, ggd, ts or pzero)")),
        }
    }
}
