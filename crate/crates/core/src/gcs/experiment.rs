//! Seeded Monte Carlo sweeps over undersampling ratios.
//!
//! Trial `t` draws `x` from `derive_seed(master, t, Signal)` and is reused at
//! every δ, so curves over δ share their signals. The encoder for `(t, m)`
//! comes from `derive_seed(derive_seed(master, t, Encoder), m, Encoder)`.

use super::decoders::{decode_l1, decode_oracle, DecoderKind, L1Options, RowSpaceFactor};
use super::encoder::gaussian_encoder;
use crate::dist::DistributionModel;
use crate::error::{Error, Result};
use crate::metrics::{h_fun, median, top_k_support};
use crate::rng::{derive_seed, StreamRole};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How the oracle support size is chosen at each δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum KRule {
    /// `k = round(ρm)`.
    FixedRho { rho: f64 },
    /// `k = round(ρ*m)` with ρ* the minimizer in `H(δ)`.
    BestRho,
    Explicit { k: usize },
}

impl Default for KRule {
    fn default() -> Self {
        KRule::BestRho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dist: DistributionModel,
    #[serde(rename = "N")]
    pub n: usize,
    pub deltas: Vec<f64>,
    pub decoders: Vec<DecoderKind>,
    #[serde(default)]
    pub k_rule: KRule,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub l1: L1Options,
}

impl ExperimentConfig {
    /// Laplace, N = 256, δ ∈ {0.1, …, 0.9}, LS and ℓ1, 500 trials.
    pub fn desk_default(master_seed: u64) -> Self {
        ExperimentConfig {
            dist: DistributionModel::laplace(1.0).expect("unit scale"),
            n: 256,
            deltas: (1..10).map(|i| i as f64 / 10.0).collect(),
            decoders: vec![DecoderKind::Ls, DecoderKind::L1],
            k_rule: KRule::BestRho,
            trials: 500,
            master_seed,
            l1: L1Options::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let op = "ExperimentConfig";
        if self.n < 2 {
            return Err(Error::domain(op, "N must be at least 2"));
        }
        if self.trials == 0 || self.deltas.is_empty() || self.decoders.is_empty() {
            return Err(Error::domain(op, "trials, deltas and decoders must be nonempty"));
        }
        for &d in &self.deltas {
            let m = measurements(d, self.n);
            if !(d > 0.0 && d < 1.0) || m == 0 || m >= self.n {
                return Err(Error::domain(op, format!("delta = {d} gives m = {m}, need 1 <= m < N")));
            }
        }
        if let KRule::FixedRho { rho } = self.k_rule {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::domain(op, format!("rho = {rho} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// `m = round(δN)`.
pub fn measurements(delta: f64, n: usize) -> usize {
    (delta * n as f64).round() as usize
}

/// One decoder applied in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub decoder: DecoderKind,
    pub delta: f64,
    pub m: usize,
    /// `k/m` actually used (oracle only).
    pub rho: Option<f64>,
    pub k: Option<usize>,
    pub trial: usize,
    pub master_seed: u64,
    /// `‖x̂ − x‖²/‖x‖²`; NaN when undefined (`x = 0`) or on failure.
    pub rel_sq_error: f64,
    pub iters: Option<usize>,
    pub residual: Option<f64>,
    pub converged: Option<bool>,
    /// Set when the relative error is undefined or the decoder failed.
    pub flag: Option<String>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str = "decoder,delta,rho,k,trial,rel_sq_error,iters,residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.decoder,
            self.delta,
            opt(&self.rho),
            opt(&self.k),
            self.trial,
            self.rel_sq_error,
            opt(&self.iters),
            opt(&self.residual)
        )
    }
}

/// Support size for one δ under the configured rule, clamped to `k ≤ m − 2`.
pub fn support_size(rule: &KRule, dist: &DistributionModel, delta: f64, m: usize) -> Result<usize> {
    let k = match *rule {
        KRule::Explicit { k } => k,
        KRule::FixedRho { rho } => (rho * m as f64).round() as usize,
        KRule::BestRho => {
            let h = h_fun(dist, delta)?;
            // infinite variance leaves ρ* undefined; any small k is as good
            (h.rho_star.unwrap_or(0.0) * m as f64).round() as usize
        }
    };
    Ok(k.min(m.saturating_sub(2)))
}

fn rel_sq(xh: &DVector<f64>, x: &DVector<f64>, x_sq: f64) -> f64 {
    (xh - x).norm_squared() / x_sq
}

fn failed(base: &TrialRecord, e: &Error) -> TrialRecord {
    TrialRecord { rel_sq_error: f64::NAN, flag: Some(e.to_string()), ..base.clone() }
}

/// All requested decoders on trial `t` at one δ.
pub fn run_trial(config: &ExperimentConfig, delta: f64, k: usize, t: usize) -> Result<Vec<TrialRecord>> {
    let n = config.n;
    let m = measurements(delta, n);
    let x = DVector::from_vec(config.dist.sample(n, derive_seed(config.master_seed, t as u64, StreamRole::Signal))?);
    let enc_seed = derive_seed(derive_seed(config.master_seed, t as u64, StreamRole::Encoder), m as u64, StreamRole::Encoder);
    let enc = gaussian_encoder(m, n, enc_seed)?;
    let y = enc.measure(&x);
    let x_sq = x.norm_squared();
    let degenerate = x_sq == 0.0;
    let mut out = Vec::with_capacity(config.decoders.len());
    for &decoder in &config.decoders {
        let base = TrialRecord {
            decoder,
            delta,
            m,
            rho: None,
            k: None,
            trial: t,
            master_seed: config.master_seed,
            rel_sq_error: f64::NAN,
            iters: None,
            residual: None,
            converged: None,
            flag: degenerate.then(|| "zero_signal".to_string()),
        };
        let rec = match decoder {
            DecoderKind::Trivial => TrialRecord { rel_sq_error: if degenerate { f64::NAN } else { 1.0 }, ..base },
            DecoderKind::Ls => {
                match RowSpaceFactor::new(&enc).and_then(|f| f.min_norm(&y)) {
                    Ok(xh) => TrialRecord { rel_sq_error: rel_sq(&xh, &x, x_sq), ..base },
                    Err(e) => failed(&base, &e),
                }
            }
            DecoderKind::Oracle => {
                let support = top_k_support(x.as_slice(), k);
                let base = TrialRecord { k: Some(k), rho: Some(k as f64 / m as f64), ..base };
                match decode_oracle(&enc, &y, &support) {
                    Ok(xh) => TrialRecord { rel_sq_error: rel_sq(&xh, &x, x_sq), ..base },
                    Err(e) => failed(&base, &e),
                }
            }
            DecoderKind::L1 => match decode_l1(&enc, &y, &config.l1) {
                Ok((xh, d)) => TrialRecord {
                    rel_sq_error: rel_sq(&xh, &x, x_sq),
                    iters: Some(d.iters),
                    residual: Some(d.residual),
                    converged: Some(d.converged),
                    ..base
                },
                Err(e) => failed(&base, &e),
            },
        };
        let rec = if degenerate { TrialRecord { rel_sq_error: f64::NAN, ..rec } } else { rec };
        out.push(rec);
    }
    Ok(out)
}

/// Run the sweep, handing records to `sink` in (δ, trial, decoder) order.
///
/// Trials at one δ run in parallel; only one δ is held in memory at a time.
/// Per-trial decoder failures become flagged records.
pub fn run_experiment<F>(config: &ExperimentConfig, mut sink: F) -> Result<()>
where
    F: FnMut(TrialRecord) -> Result<()>,
{
    config.validate()?;
    for &delta in &config.deltas {
        let m = measurements(delta, config.n);
        let k = if config.decoders.contains(&DecoderKind::Oracle) {
            support_size(&config.k_rule, &config.dist, delta, m)?
        } else {
            0
        };
        let batch: Vec<Result<Vec<TrialRecord>>> =
            (0..config.trials).into_par_iter().map(|t| run_trial(config, delta, k, t)).collect();
        for recs in batch {
            for r in recs? {
                sink(r)?;
            }
        }
    }
    Ok(())
}

pub fn run_experiment_collect(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    run_experiment(config, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// Per-(decoder, δ) aggregate of finite errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub decoder: DecoderKind,
    pub delta: f64,
    pub trials: usize,
    pub mean: f64,
    pub median: f64,
    /// Records with a NaN error.
    pub flagged: usize,
    /// ℓ1 runs that hit the iteration cap.
    pub nonconverged: usize,
}

pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(DecoderKind, u64), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.decoder, r.delta.to_bits())).or_default().push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((decoder, bits), rs)| {
            let mut vals: Vec<f64> = rs.iter().map(|r| r.rel_sq_error).filter(|v| v.is_finite()).collect();
            let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            SummaryRow {
                decoder,
                delta: f64::from_bits(bits),
                trials: rs.len(),
                mean,
                median: if vals.is_empty() { f64::NAN } else { median(&mut vals) },
                flagged: rs.len() - vals.len(),
                nonconverged: rs.iter().filter(|r| r.converged == Some(false)).count(),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.decoder.cmp(&b.decoder).then(a.delta.total_cmp(&b.delta)));
    rows
}

/// First δ where curve `a` drops to or below curve `b`, linearly
/// interpolated between grid points. Both curves are `(δ, value)` sorted by δ
/// on the same grid.
pub fn crossing_point(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<f64> {
    let diff: Vec<(f64, f64)> = a.iter().zip(b).map(|(p, q)| (p.0, p.1 - q.1)).collect();
    if diff.first()?.1 <= 0.0 {
        return None;
    }
    diff.windows(2).find(|w| w[1].1 <= 0.0).map(|w| {
        let (d0, v0) = w[0];
        let (d1, v1) = w[1];
        d0 + (d1 - d0) * v0 / (v0 - v1)
    })
}
