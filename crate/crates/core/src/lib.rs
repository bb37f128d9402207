//! Compressibility of iid distributions and Gaussian compressed sensing.
//!
//! * [`dist`]: the distribution catalog (Laplace, generalized Gaussian, the
//!   τ-s heavy-tailed family, the boundary density) with folded CDFs,
//!   quantiles, moments and seeded samplers.
//! * [`metrics`]: the k-term functionals `G_q`, `H`, the critical
//!   undersampling ratio `δ₀` and empirical relative k-term errors.
//! * [`gcs`]: Gaussian encoders, the trivial / least-squares / oracle / ℓ1
//!   decoders, theoretical predictions and the Monte Carlo harness.
//! * [`instance_opt`]: instance-optimality constants and the κ₀ test.
//! * [`transform`]: DCT / Daubechies-4 order statistics of image patches.

pub mod dist;
pub mod error;
pub mod gcs;
pub mod instance_opt;
pub mod metrics;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod transform;

pub use dist::{DistributionModel, Family, MomentSummary};
pub use error::{Error, Result};
