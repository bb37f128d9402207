//! Transform-domain order statistics of square image patches.
//!
//! Patches are transformed by an orthonormal 2D DCT-II or a periodic
//! Daubechies-4 wavelet transform; sorted coefficient magnitudes averaged
//! rank-wise give an empirical order-statistics curve that can be laid over
//! the quantile approximation of a model's expected order statistics.

mod dct;
mod patches;
mod pgm;
mod wavelet;

pub use dct::{dct2, dct_matrix, idct2};
pub use patches::{
    average_sorted_magnitudes, expected_order_statistics, reference_models, CurveTag, OrderStatCurve, PatchSet,
    TransformKind,
};
pub use pgm::{read_pgm, write_pgm, GrayImage};
pub use wavelet::{dwt2_db4, idwt2_db4, DB4_LOWPASS};
