use super::dct::dct2;
use super::pgm::GrayImage;
use super::wavelet::dwt2_db4;
use crate::dist::DistributionModel;
use crate::error::{Error, Result};
use crate::metrics::sorted_magnitudes;
use crate::rng::{child_rng, derive_seed, StreamRole};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Dct,
    Db4,
}

impl TransformKind {
    pub fn apply(&self, patch: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            TransformKind::Dct => dct2(patch),
            TransformKind::Db4 => dwt2_db4(patch, None),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Dct => "dct",
            TransformKind::Db4 => "db4",
        })
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dct" => Ok(TransformKind::Dct),
            "db4" => Ok(TransformKind::Db4),
            other => Err(Error::Parse { spec: other.into(), msg: "expected dct or db4".into() }),
        }
    }
}

/// Square patches of one side length.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    side: usize,
    patches: Vec<DMatrix<f64>>,
    pub source: String,
    pub seed: Option<u64>,
}

impl PatchSet {
    pub fn new(patches: Vec<DMatrix<f64>>, source: impl Into<String>) -> Result<Self> {
        let side = patches.first().map(|p| p.nrows()).unwrap_or(0);
        if side < 2 || patches.iter().any(|p| p.shape() != (side, side)) {
            return Err(Error::domain("PatchSet", "patches must be nonempty, square and of one side >= 2"));
        }
        Ok(PatchSet { side, patches, source: source.into(), seed: None })
    }

    /// `count` patches at uniformly random positions in uniformly chosen images.
    pub fn sample(images: &[GrayImage], side: usize, count: usize, seed: u64) -> Result<Self> {
        let usable: Vec<&GrayImage> = images.iter().filter(|im| im.width >= side && im.height >= side).collect();
        if usable.is_empty() || count == 0 || side < 2 {
            return Err(Error::domain("PatchSet::sample", format!("no image holds a {side}x{side} patch, or count = 0")));
        }
        let mut rng = child_rng(seed, 0, StreamRole::Patches);
        let patches = (0..count)
            .map(|_| {
                let im = usable[rng.random_range(0..usable.len())];
                let r0 = rng.random_range(0..=im.height - side);
                let c0 = rng.random_range(0..=im.width - side);
                DMatrix::from_fn(side, side, |r, c| im.get(r0 + r, c0 + c))
            })
            .collect();
        let mut set = PatchSet::new(patches, format!("{} image(s)", usable.len()))?;
        set.seed = Some(seed);
        Ok(set)
    }

    /// Patches filled with iid draws from `dist`.
    pub fn synthetic(dist: &DistributionModel, side: usize, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::domain("PatchSet::synthetic", "count must be positive"));
        }
        let patches = (0..count)
            .map(|i| {
                let v = dist.sample(side * side, derive_seed(seed, i as u64, StreamRole::Patches))?;
                Ok(DMatrix::from_vec(side, side, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut set = PatchSet::new(patches, format!("iid {dist}"))?;
        set.seed = Some(seed);
        Ok(set)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn patches(&self) -> &[DMatrix<f64>] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveTag {
    Transform { transform: TransformKind },
    /// iid coefficients, no transform applied
    Identity,
    /// Quantile approximation `F̄⁻¹(1 − n/(N+1))` of a model.
    Model { dist: DistributionModel },
}

/// Values `|x|*_n` for ranks `n = 1..N`, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStatCurve {
    pub tag: CurveTag,
    pub values: Vec<f64>,
}

impl OrderStatCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(rank, value)` pairs, ranks from 1.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (i + 1, v))
    }

    /// `(ln n, ln |x|*_n)` for strictly positive values.
    pub fn log_log(&self) -> Vec<(f64, f64)> {
        self.points().filter(|p| p.1 > 0.0).map(|(n, v)| ((n as f64).ln(), v.ln())).collect()
    }
}

/// Transform each patch, sort `|coefficients|` descending, average rank-wise.
/// `transform = None` uses the raw patch values.
pub fn average_sorted_magnitudes(set: &PatchSet, transform: Option<TransformKind>) -> Result<OrderStatCurve> {
    if set.is_empty() {
        return Err(Error::domain("average_sorted_magnitudes", "empty patch set"));
    }
    let sorted = set
        .patches()
        .par_iter()
        .map(|p| {
            let c = match transform {
                Some(t) => t.apply(p)?,
                None => p.clone(),
            };
            Ok(sorted_magnitudes(c.as_slice()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = set.side() * set.side();
    let mut values = vec![0.0; n];
    for s in &sorted {
        for (acc, v) in values.iter_mut().zip(s) {
            *acc += v;
        }
    }
    let count = sorted.len() as f64;
    values.iter_mut().for_each(|v| *v /= count);
    let tag = match transform {
        Some(transform) => CurveTag::Transform { transform },
        None => CurveTag::Identity,
    };
    Ok(OrderStatCurve { tag, values })
}

/// Quantile approximation to the expected order statistics of `N` iid
/// magnitudes: rank `n` maps to `F̄⁻¹(1 − n/(N+1))`. The error against the
/// exact expectation is `O(1/N)` in the bulk.
pub fn expected_order_statistics(dist: &DistributionModel, n: usize) -> Result<OrderStatCurve> {
    if n == 0 {
        return Err(Error::domain("expected_order_statistics", "N must be at least 1"));
    }
    let values = (1..=n)
        .map(|r| dist.upper_quantile(r as f64 / (n + 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderStatCurve { tag: CurveTag::Model { dist: *dist }, values })
}

/// Hand-tuned fits to natural-image wavelet coefficients: generalized Pareto
/// (τ = 1, s = 2.69, λ = 8), Student's t (τ = 2, s = 2.64, λ = 4.5) and a
/// generalized Gaussian (τ = 0.7, λ = 5).
pub fn reference_models() -> [(&'static str, DistributionModel); 3] {
    [
        ("gpd", DistributionModel::tau_s(1.0, 2.69, 8.0).expect("valid")),
        ("student", DistributionModel::tau_s(2.0, 2.64, 4.5).expect("valid")),
        ("ggd", DistributionModel::generalized_gaussian(0.7, 5.0).expect("valid")),
    ]
}
