//! Compressibility functionals of a distribution.
//!
//! For iid draws from a density with folded law `p̄`, the relative best
//! k-term error `σ̄_k(x)_q^q` converges almost surely to
//!
//! ```text
//! G_q(κ) = ∫₀^{F̄⁻¹(1−κ)} t^q p̄(t) dt / ∫₀^∞ t^q p̄(t) dt,   k/N → κ
//! ```
//!
//! and is `0` for every `κ > 0` when `E|X|^q = ∞`. The oracle decoder's
//! best asymptotic relative squared error at undersampling `δ` is
//! `H(δ) = inf_ρ G₂(ρδ)/(1−ρ)`; least squares achieves `1 − δ`. The
//! critical undersampling `δ₀` is where the two meet.

use crate::dist::{DistributionModel, MomentSummary};
use crate::error::{Error, Result};
use crate::optimize::{bisect, golden_section, linspace, logspace};
use crate::rng::{derive_seed, StreamRole};
use serde::{Deserialize, Serialize};

/// Grid resolution for the ρ scan in [`h_fun`].
pub const H_RHO_GRID: usize = 256;
pub const H_RHO_MIN: f64 = 1e-4;
pub const H_RHO_MAX: f64 = 1.0 - 1e-4;
/// δ scan used by [`critical_undersampling`].
pub const DELTA0_GRID: usize = 200;
pub const DELTA0_LO: f64 = 0.001;
pub const DELTA0_HI: f64 = 0.999;
pub const DELTA0_XTOL: f64 = 1e-6;
/// `|H(δ) − (1 − δ)|` below this counts as a tie.
pub const TIE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GMethod {
    ClosedForm,
    Quadrature,
    /// `E|X|^q = ∞`: G vanishes for every κ > 0.
    UnboundedMoment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPoint {
    pub kappa: f64,
    pub g: f64,
    pub method: GMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GCurve {
    pub dist: DistributionModel,
    pub q: f64,
    pub samples: Vec<GPoint>,
}

/// `G_q` for one distribution, with its denominator cached.
#[derive(Debug, Clone)]
pub struct GFunctional {
    dist: DistributionModel,
    q: f64,
    moment: MomentSummary,
}

impl GFunctional {
    pub fn new(dist: &DistributionModel, q: f64) -> Result<Self> {
        let moment = dist.absolute_moment(q)?;
        // G is scale invariant; work at unit scale
        let dist = dist.with_scale(1.0)?;
        let moment = if moment.infinite { moment } else { dist.absolute_moment(q)? };
        Ok(GFunctional { dist, q, moment })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn moment(&self) -> &MomentSummary {
        &self.moment
    }

    pub fn bounded(&self) -> bool {
        !self.moment.infinite
    }

    /// Closed form for Laplace at q ∈ {1, 2}, quadrature otherwise.
    pub fn eval(&self, kappa: f64) -> Result<GPoint> {
        check_kappa(kappa)?;
        if !self.bounded() {
            if kappa == 0.0 {
                return Err(Error::domain(
                    "g_fun",
                    format!("E|X|^{} is infinite, G is undefined at kappa = 0", self.q),
                ));
            }
            return Ok(GPoint { kappa, g: 0.0, method: GMethod::UnboundedMoment });
        }
        if self.dist.family() == crate::Family::Laplace && (self.q == 1.0 || self.q == 2.0) && kappa > 0.0 {
            let g = g_fun_laplace_closed(self.q, kappa)?;
            return Ok(GPoint { kappa, g, method: GMethod::ClosedForm });
        }
        Ok(GPoint { kappa, g: self.eval_quadrature(kappa)?, method: GMethod::Quadrature })
    }

    /// Always by quadrature, regardless of family.
    pub fn eval_quadrature(&self, kappa: f64) -> Result<f64> {
        check_kappa(kappa)?;
        if !self.bounded() {
            return self.eval(kappa).map(|p| p.g);
        }
        if kappa == 0.0 {
            return Ok(1.0);
        }
        if kappa == 1.0 {
            return Ok(0.0);
        }
        let upper = self.dist.upper_quantile(kappa)?;
        let partial = self.dist.partial_moment(self.q, upper);
        Ok((partial / self.moment.value).clamp(0.0, 1.0))
    }

    /// Convenience: value only, `0` on the unbounded branch.
    pub fn value(&self, kappa: f64) -> Result<f64> {
        self.eval(kappa).map(|p| p.g)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if (0.0..=1.0).contains(&kappa) {
        Ok(())
    } else {
        Err(Error::domain("g_fun", format!("kappa = {kappa} outside [0, 1]")))
    }
}

/// `G_q[p](κ)`.
pub fn g_fun(dist: &DistributionModel, q: f64, kappa: f64) -> Result<GPoint> {
    GFunctional::new(dist, q)?.eval(kappa)
}

/// Laplace closed forms, `q ∈ {1, 2}`:
/// `1 − κ(1 + L)` and `1 − κ(1 + L + L²/2)` with `L = ln(1/κ)`.
pub fn g_fun_laplace_closed(q: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::domain("g_fun_laplace_closed", format!("kappa = {kappa} outside (0, 1]")));
    }
    let l = -kappa.ln();
    if q == 1.0 {
        Ok(1.0 - kappa * (1.0 + l))
    } else if q == 2.0 {
        Ok(1.0 - kappa * (1.0 + l + 0.5 * l * l))
    } else {
        Err(Error::Unsupported(format!("Laplace closed form exists only for q in {{1, 2}}, got {q}")))
    }
}

pub fn g_curve(dist: &DistributionModel, q: f64, kappas: &[f64]) -> Result<GCurve> {
    let g = GFunctional::new(dist, q)?;
    let samples = kappas.iter().map(|&k| g.eval(k)).collect::<Result<_>>()?;
    Ok(GCurve { dist: *dist, q, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HValue {
    pub delta: f64,
    pub value: f64,
    /// Minimizing ρ; `None` when degenerate (infinite second moment).
    pub rho_star: Option<f64>,
}

/// `H(δ) = inf_{ρ∈(0,1)} G₂(ρδ)/(1−ρ)` for one distribution.
#[derive(Debug, Clone)]
pub struct HFunctional {
    g2: GFunctional,
}

impl HFunctional {
    pub fn new(dist: &DistributionModel) -> Result<Self> {
        Ok(HFunctional { g2: GFunctional::new(dist, 2.0)? })
    }

    pub fn g2(&self) -> &GFunctional {
        &self.g2
    }

    /// Ratio minimized over ρ.
    pub fn objective(&self, delta: f64, rho: f64) -> Result<f64> {
        Ok(self.g2.value(rho * delta)? / (1.0 - rho))
    }

    /// Log-spaced grid scan over ρ, then golden-section refinement on the
    /// two cells around the best grid point. No unimodality is assumed.
    pub fn eval(&self, delta: f64) -> Result<HValue> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain("h_fun", format!("delta = {delta} outside (0, 1)")));
        }
        if !self.g2.bounded() {
            return Ok(HValue { delta, value: 0.0, rho_star: None });
        }
        let grid = logspace(H_RHO_MIN, H_RHO_MAX, H_RHO_GRID);
        let vals = grid.iter().map(|&r| self.objective(delta, r)).collect::<Result<Vec<_>>>()?;
        let best = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("grid is nonempty");
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let mut err = None;
        let (rho, v) = golden_section(
            |r| match self.objective(delta, r) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::INFINITY
                }
            },
            lo,
            hi,
            1e-12,
        );
        if let Some(e) = err {
            return Err(e);
        }
        let (rho, v) = if v <= vals[best] { (rho, v) } else { (grid[best], vals[best]) };
        Ok(HValue { delta, value: v, rho_star: Some(rho) })
    }
}

pub fn h_fun(dist: &DistributionModel, delta: f64) -> Result<HValue> {
    HFunctional::new(dist)?.eval(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalStatus {
    /// H crosses 1 − δ from above; `delta0` holds the first crossing.
    Found,
    /// H < 1 − δ on the whole grid: any δ₀ lies below the first grid point.
    BelowGrid,
    /// H ≥ 1 − δ on the whole grid.
    AboveGrid,
    /// H = 1 − δ within [`TIE_TOL`] everywhere (the boundary density).
    Tied,
    /// Infinite second moment: G₂ ≡ 0, so H ≡ 0.
    AlwaysCompressible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalUndersampling {
    pub delta0: Option<f64>,
    pub status: CriticalStatus,
    /// Every sign change of `H(δ) − (1 − δ)` found on the grid, refined.
    pub crossings: Vec<f64>,
}

fn sign_with_tol(v: f64) -> i8 {
    if v > TIE_TOL {
        1
    } else if v < -TIE_TOL {
        -1
    } else {
        0
    }
}

/// `δ₀`: first point, scanning δ upward, where `H(δ) − (1 − δ)` turns from
/// positive to nonpositive.
pub fn critical_undersampling(dist: &DistributionModel) -> Result<CriticalUndersampling> {
    let h = HFunctional::new(dist)?;
    if !h.g2.bounded() {
        return Ok(CriticalUndersampling {
            delta0: None,
            status: CriticalStatus::AlwaysCompressible,
            crossings: vec![],
        });
    }
    let excess = |d: f64| h.eval(d).map(|v| v.value - (1.0 - d));
    let grid = linspace(DELTA0_LO, DELTA0_HI, DELTA0_GRID);
    let vals = grid.iter().map(|&d| excess(d)).collect::<Result<Vec<_>>>()?;
    let signs: Vec<i8> = vals.iter().map(|&v| sign_with_tol(v)).collect();

    let mut crossings = Vec::new();
    let mut first_down = None;
    let mut last_nonzero: Option<(usize, i8)> = None;
    for (i, &s) in signs.iter().enumerate() {
        if s == 0 {
            continue;
        }
        if let Some((j, prev)) = last_nonzero {
            if prev != s {
                let mut err = None;
                let root = bisect(
                    |d| match excess(d) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    },
                    grid[j],
                    grid[i],
                    DELTA0_XTOL,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                crossings.push(root);
                if prev > 0 && first_down.is_none() {
                    first_down = Some(root);
                }
            }
        }
        last_nonzero = Some((i, s));
    }

    let status = if signs.iter().all(|&s| s == 0) {
        CriticalStatus::Tied
    } else if first_down.is_some() {
        CriticalStatus::Found
    } else if signs.iter().all(|&s| s >= 0) {
        CriticalStatus::AboveGrid
    } else {
        CriticalStatus::BelowGrid
    };
    Ok(CriticalUndersampling { delta0: first_down, status, crossings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Above,
    Equal,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentRow {
    pub kappa: f64,
    pub g2: f64,
    /// `(1 − √κ)²`
    pub bound: f64,
    pub cmp: Comparison,
}

/// Tolerance for [`Comparison::Equal`] in [`fourth_moment_criterion`].
pub const CRITERION_TOL: f64 = 1e-7;

/// Compare `G₂(κ)` with `(1 − √κ)²` on a κ grid. `G₂ ≥ (1 − √κ)²` near
/// zero forces `H(δ) ≥ 1 − δ` there.
pub fn fourth_moment_criterion(dist: &DistributionModel, kappas: &[f64]) -> Result<Vec<FourthMomentRow>> {
    let g = GFunctional::new(dist, 2.0)?;
    kappas
        .iter()
        .map(|&kappa| {
            let g2 = g.value(kappa)?;
            let bound = (1.0 - kappa.sqrt()).powi(2);
            let d = g2 - bound;
            let cmp = if d.abs() <= CRITERION_TOL {
                Comparison::Equal
            } else if d > 0.0 {
                Comparison::Above
            } else {
                Comparison::Below
            };
            Ok(FourthMomentRow { kappa, g2, bound, cmp })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentVerdict {
    CompressibleInfiniteVariance,
    Intermediate,
    IncompressibleFiniteFourth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRule {
    pub verdict: MomentVerdict,
    pub second_moment_finite: bool,
    pub fourth_moment_finite: bool,
}

pub fn moment_rule(dist: &DistributionModel) -> Result<MomentRule> {
    let second = dist.absolute_moment(2.0)?.is_finite();
    let fourth = dist.absolute_moment(4.0)?.is_finite();
    let verdict = if !second {
        MomentVerdict::CompressibleInfiniteVariance
    } else if fourth {
        MomentVerdict::IncompressibleFiniteFourth
    } else {
        MomentVerdict::Intermediate
    };
    Ok(MomentRule { verdict, second_moment_finite: second, fourth_moment_finite: fourth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibilityReport {
    pub dist: DistributionModel,
    pub h_samples: Vec<HValue>,
    pub critical: CriticalUndersampling,
    pub moments: MomentRule,
}

pub fn compressibility_report(dist: &DistributionModel, deltas: &[f64]) -> Result<CompressibilityReport> {
    let h = HFunctional::new(dist)?;
    let h_samples = deltas.iter().map(|&d| h.eval(d)).collect::<Result<_>>()?;
    Ok(CompressibilityReport {
        dist: *dist,
        h_samples,
        critical: critical_undersampling(dist)?,
        moments: moment_rule(dist)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KTermError {
    pub k: usize,
    pub q: f64,
    /// `σ_k(x)_q`
    pub sigma_k: f64,
    /// `σ_k(x)_q / ‖x‖_q`
    pub relative: f64,
}

/// Best k-term approximation error of `x` in ℓ^q, absolute and relative.
pub fn empirical_relative_kterm_error(x: &[f64], k: usize, q: f64) -> Result<KTermError> {
    let op = "empirical_relative_kterm_error";
    if k > x.len() {
        return Err(Error::domain(op, format!("k = {k} exceeds N = {}", x.len())));
    }
    if !(q > 0.0) {
        return Err(Error::domain(op, format!("q = {q} must be positive")));
    }
    let mags = sorted_magnitudes(x);
    let total: f64 = mags.iter().map(|m| m.powf(q)).sum();
    if total == 0.0 {
        return Err(Error::domain(op, "x is the zero vector"));
    }
    let tail: f64 = mags[k..].iter().map(|m| m.powf(q)).sum();
    Ok(KTermError { k, q, sigma_k: tail.powf(1.0 / q), relative: (tail / total).powf(1.0 / q) })
}

/// `|x|` sorted in decreasing order.
pub fn sorted_magnitudes(x: &[f64]) -> Vec<f64> {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    mags
}

/// Indices of the `k` largest-magnitude entries (ties broken by index).
pub fn top_k_support(x: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub k: usize,
    /// `G_q(κ)`; `0` on the unbounded branch.
    pub g_theory: f64,
    /// Mean over seeds of `σ̄_k(x_N)_q^q`.
    pub mean_sigma_q: f64,
    pub mean_gap: f64,
    /// Median over seeds of `|σ̄_k(x_N)_q^q − G_q(κ)|`.
    pub median_gap: f64,
    pub per_seed: Vec<f64>,
}

/// Monte Carlo check of `σ̄_{⌊κN⌋}(x_N)_q^q → G_q(κ)`.
///
/// The vector for `(N, seed)` is drawn with seed `derive_seed(seed, N, Signal)`.
pub fn convergence_check(
    dist: &DistributionModel,
    q: f64,
    kappa: f64,
    n_list: &[usize],
    seeds: &[u64],
) -> Result<Vec<ConvergenceRow>> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain("convergence_check", format!("kappa = {kappa} outside (0, 1)")));
    }
    if seeds.is_empty() {
        return Err(Error::domain("convergence_check", "no seeds"));
    }
    let g = GFunctional::new(dist, q)?.value(kappa)?;
    n_list
        .iter()
        .map(|&n| {
            let k = (kappa * n as f64).floor() as usize;
            let per_seed = seeds
                .iter()
                .map(|&seed| {
                    let x = dist.sample(n, derive_seed(seed, n as u64, StreamRole::Signal))?;
                    Ok(empirical_relative_kterm_error(&x, k, q)?.relative.powf(q))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
            let mut gaps: Vec<f64> = per_seed.iter().map(|v| (v - g).abs()).collect();
            Ok(ConvergenceRow {
                n,
                k,
                g_theory: g,
                mean_sigma_q: mean,
                mean_gap: (mean - g).abs(),
                median_gap: median(&mut gaps),
                per_seed,
            })
        })
        .collect()
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    assert!(!v.is_empty());
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
