//! Decoders mapping measurements `y = Φx` back to an estimate of `x`.
//!
//! * trivial: always `0`;
//! * least squares: the minimum-ℓ2-norm solution `Φ⁺y`;
//! * oracle: least squares restricted to a given support;
//! * ℓ1: basis pursuit `argmin ‖x̃‖₁ s.t. Φx̃ = y` solved by ADMM.

use super::encoder::EncoderInstance;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, QR};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Trivial,
    Ls,
    Oracle,
    L1,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [DecoderKind::Trivial, DecoderKind::Ls, DecoderKind::Oracle, DecoderKind::L1];

    pub fn as_str(&self) -> &'static str {
        match self {
            DecoderKind::Trivial => "trivial",
            DecoderKind::Ls => "ls",
            DecoderKind::Oracle => "oracle",
            DecoderKind::L1 => "l1",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trivial" => Ok(DecoderKind::Trivial),
            "ls" => Ok(DecoderKind::Ls),
            "oracle" => Ok(DecoderKind::Oracle),
            "l1" => Ok(DecoderKind::L1),
            other => Err(Error::Parse { spec: other.to_string(), msg: "expected trivial, ls, oracle or l1".into() }),
        }
    }
}

// Relative threshold on |R_ii| below which a column is treated as dependent.
fn rank_threshold(r: &DMatrix<f64>, rows: usize) -> f64 {
    let dmax = r.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    dmax * f64::EPSILON * rows.max(r.ncols()) as f64
}

fn numerical_rank(r: &DMatrix<f64>, rows: usize) -> usize {
    let thr = rank_threshold(r, rows);
    r.diagonal().iter().filter(|v| v.abs() > thr).count()
}

pub fn decode_trivial(n: usize) -> DVector<f64> {
    DVector::zeros(n)
}

/// Thin QR of `Φᵀ = QR` (`Q` is N × m, `R` is m × m upper triangular).
///
/// Gives `Φ⁺y = Q R⁻ᵀ y` and the projector onto the row space `QQᵀ`.
#[derive(Debug, Clone)]
pub struct RowSpaceFactor {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl RowSpaceFactor {
    pub fn new(enc: &EncoderInstance) -> Result<Self> {
        let qr = QR::new(enc.matrix().transpose());
        let r = qr.r();
        let rank = numerical_rank(&r, enc.n());
        if rank < enc.m() {
            return Err(Error::Conditioning { rank, expected: enc.m() });
        }
        Ok(RowSpaceFactor { q: qr.q(), r })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `Φ⁺y`.
    pub fn min_norm(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self
            .r
            .tr_solve_upper_triangular(y)
            .ok_or(Error::Conditioning { rank: 0, expected: self.r.nrows() })?;
        Ok(&self.q * z)
    }

    /// Coefficients `ν` with `Φᵀν = g` for `g` in the row space.
    fn row_coefficients(&self, g: &DVector<f64>) -> Option<DVector<f64>> {
        let c = self.q.tr_mul(g);
        self.r.solve_upper_triangular(&c)
    }
}

/// Minimum-norm least squares `Φ⁺y`.
pub fn decode_ls(enc: &EncoderInstance, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_len(enc, y, "decode_ls")?;
    RowSpaceFactor::new(enc)?.min_norm(y)
}

fn check_len(enc: &EncoderInstance, y: &DVector<f64>, op: &'static str) -> Result<()> {
    if y.len() != enc.m() {
        return Err(Error::domain(op, format!("y has length {}, expected m = {}", y.len(), enc.m())));
    }
    Ok(())
}

/// Least squares over the columns `support`, zero elsewhere.
pub fn decode_oracle(enc: &EncoderInstance, y: &DVector<f64>, support: &[usize]) -> Result<DVector<f64>> {
    check_len(enc, y, "decode_oracle")?;
    let (m, n) = (enc.m(), enc.n());
    if support.len() >= m {
        return Err(Error::domain("decode_oracle", format!("|support| = {} must be below m = {m}", support.len())));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= n) {
        return Err(Error::domain("decode_oracle", format!("index {j} out of range for N = {n}")));
    }
    let mut x = DVector::zeros(n);
    if support.is_empty() {
        return Ok(x);
    }
    let coef = restricted_least_squares(enc.matrix(), support, y)?;
    for (&j, &v) in support.iter().zip(coef.iter()) {
        x[j] = v;
    }
    Ok(x)
}

fn restricted_least_squares(phi: &DMatrix<f64>, support: &[usize], y: &DVector<f64>) -> Result<DVector<f64>> {
    let k = support.len();
    let sub = phi.select_columns(support);
    let qr = QR::new(sub);
    let r = qr.r();
    let rank = numerical_rank(&r, phi.nrows());
    if rank < k {
        return Err(Error::Conditioning { rank, expected: k });
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let head = qty.rows(0, k).into_owned();
    r.solve_upper_triangular(&head).ok_or(Error::Conditioning { rank, expected: k })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Options {
    /// Stop when iterate change and infeasibility are below `tol·‖y‖₂`.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial ADMM penalty; `None` picks one from the data.
    pub rho: Option<f64>,
    /// Attempt support polishing with a dual certificate.
    pub polish: bool,
}

pub const L1_DEFAULT_TOL: f64 = 1e-7;
pub const L1_DEFAULT_MAX_ITERS: usize = 50_000;

impl Default for L1Options {
    fn default() -> Self {
        L1Options { tol: L1_DEFAULT_TOL, max_iters: L1_DEFAULT_MAX_ITERS, rho: None, polish: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Stop {
    /// Residuals fell below tolerance.
    Tolerance,
    /// Polished support passed the optimality certificate.
    Certified,
    /// `y = 0`.
    Zero,
    MaxIters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Diagnostics {
    pub iters: usize,
    /// `‖Φx̂ − y‖₂ / ‖y‖₂`.
    pub residual: f64,
    pub converged: bool,
    pub stop: L1Stop,
    pub rho: f64,
}

const POLISH_EVERY: usize = 20;
const BALANCE_EVERY: usize = 10;
const BALANCE_UNTIL: usize = 2_000;
const BALANCE_MU: f64 = 10.0;
// over-relaxation of the affine step
const RELAX: f64 = 1.5;
const CERT_SLACK: f64 = 1e-9;
const CROSSOVER_PIVOTS: usize = 100;

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Basis pursuit by ADMM on the split `x ∈ {Φx = y}`, `z` carries `‖·‖₁`.
///
/// The affine step is the exact projection `v − QQᵀv + Φ⁺y` with the row
/// space factor of `Φᵀ`. Every few iterations the support of `z` is polished
/// by restricted least squares and accepted when a dual vector `ν` with
/// `Φᵀν ∈ ∂‖x̂‖₁` exists, which proves global optimality.
pub fn decode_l1(enc: &EncoderInstance, y: &DVector<f64>, opts: &L1Options) -> Result<(DVector<f64>, L1Diagnostics)> {
    check_len(enc, y, "decode_l1")?;
    if !(opts.tol > 0.0) || opts.max_iters == 0 {
        return Err(Error::domain("decode_l1", "tol must be positive and max_iters nonzero"));
    }
    let n = enc.n();
    let y_norm = y.norm();
    if y_norm == 0.0 {
        let d = L1Diagnostics { iters: 0, residual: 0.0, converged: true, stop: L1Stop::Zero, rho: 0.0 };
        return Ok((DVector::zeros(n), d));
    }
    let factor = RowSpaceFactor::new(enc)?;
    let x_ls = factor.min_norm(y)?;
    let q = factor.q();

    let mut rho = opts.rho.unwrap_or_else(|| {
        // threshold 1/ρ at a tenth of the typical least-squares magnitude
        let mean_abs = x_ls.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        10.0 / mean_abs.max(f64::MIN_POSITIVE)
    });
    let thr = opts.tol * y_norm;

    let mut z = x_ls.clone();
    let mut u = DVector::<f64>::zeros(n);
    let mut x = DVector::<f64>::zeros(n);
    let mut v = DVector::<f64>::zeros(n);
    let mut z_old = DVector::<f64>::zeros(n);
    let mut last_support: Vec<usize> = Vec::new();

    for it in 1..=opts.max_iters {
        // x = P(z − u)
        v.copy_from(&z);
        v -= &u;
        let c = q.tr_mul(&v);
        x.copy_from(&v);
        x.gemv(-1.0, q, &c, 1.0);
        x += &x_ls;

        z_old.copy_from(&z);
        let t = 1.0 / rho;
        let mut r_pri = 0.0;
        let mut dz = 0.0;
        for i in 0..n {
            let xr = RELAX * x[i] + (1.0 - RELAX) * z_old[i];
            z[i] = soft(xr + u[i], t);
            u[i] += xr - z[i];
            let d = x[i] - z[i];
            r_pri += d * d;
            let e = z[i] - z_old[i];
            dz += e * e;
        }
        let (r_pri, dz) = (r_pri.sqrt(), dz.sqrt());

        if r_pri <= thr && dz <= thr {
            let residual = (enc.measure(&x) - y).norm() / y_norm;
            let d = L1Diagnostics { iters: it, residual, converged: true, stop: L1Stop::Tolerance, rho };
            if opts.polish {
                let support = candidate_support(&z, enc.m());
                if let Some(p) = polish(enc, &factor, y, &support, &z, &u, rho) {
                    let residual = (enc.measure(&p) - y).norm() / y_norm;
                    return Ok((p, L1Diagnostics { residual, stop: L1Stop::Certified, ..d }));
                }
            }
            return Ok((x, d));
        }

        if opts.polish && it % POLISH_EVERY == 0 {
            let support = candidate_support(&z, enc.m());
            if support == last_support {
                if let Some(p) = polish(enc, &factor, y, &support, &z, &u, rho) {
                    let residual = (enc.measure(&p) - y).norm() / y_norm;
                    let d = L1Diagnostics { iters: it, residual, converged: true, stop: L1Stop::Certified, rho };
                    return Ok((p, d));
                }
            }
            last_support = support;
        }

        if it <= BALANCE_UNTIL && it % BALANCE_EVERY == 0 {
            let r_dual = rho * dz;
            if r_pri > BALANCE_MU * r_dual {
                rho *= 2.0;
                u /= 2.0;
            } else if r_dual > BALANCE_MU * r_pri {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    let residual = (enc.measure(&x) - y).norm() / y_norm;
    let d = L1Diagnostics { iters: opts.max_iters, residual, converged: false, stop: L1Stop::MaxIters, rho };
    Ok((x, d))
}

/// `supp(z)`, cut to the `m` largest magnitudes when larger.
fn candidate_support(z: &DVector<f64>, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
    if idx.len() > m {
        idx.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()));
        idx.truncate(m);
        idx.sort_unstable();
    }
    idx
}

/// Try to turn the ADMM state into a provably optimal point.
///
/// A support smaller than `m` is checked with a dual certificate. Otherwise
/// the support, padded by the largest dual estimates `|ρu|`, seeds a few
/// simplex pivots on the basis-pursuit LP.
fn polish(
    enc: &EncoderInstance,
    factor: &RowSpaceFactor,
    y: &DVector<f64>,
    support: &[usize],
    z: &DVector<f64>,
    u: &DVector<f64>,
    rho: f64,
) -> Option<DVector<f64>> {
    let (m, n) = (enc.m(), enc.n());
    if support.is_empty() {
        return None;
    }
    if support.len() < m {
        if let Some(x) = certify_small(enc, factor, y, support, z, u, rho) {
            return Some(x);
        }
    }
    let mut basis = support.to_vec();
    let mut in_basis = vec![false; n];
    for &j in &basis {
        in_basis[j] = true;
    }
    let mut rest: Vec<usize> = (0..n).filter(|&j| !in_basis[j]).collect();
    rest.sort_by(|&a, &b| u[b].abs().total_cmp(&u[a].abs()));
    basis.extend(rest.into_iter().take(m - basis.len()));
    crossover(enc.matrix(), y, basis, CROSSOVER_PIVOTS)
}

/// Restricted least squares on `support` (`|support| < m`) and a dual vector
/// `ν` with `Φ_Sᵀν = sign(x_S)` and `|Φᵀν| ≤ 1` elsewhere.
///
/// `ν` starts from the ADMM multiplier `ρu ∈ range(Φᵀ)` and takes the
/// smallest correction that makes the equality part exact.
fn certify_small(
    enc: &EncoderInstance,
    factor: &RowSpaceFactor,
    y: &DVector<f64>,
    support: &[usize],
    z: &DVector<f64>,
    u: &DVector<f64>,
    rho: f64,
) -> Option<DVector<f64>> {
    let phi = enc.matrix();
    let (m, n) = (enc.m(), enc.n());
    let s = support.len();
    let sub = phi.select_columns(support);
    let qr = QR::new(sub.clone());
    let r = qr.r();
    if numerical_rank(&r, m) < s {
        return None;
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let coef = r.solve_upper_triangular(&qty.rows(0, s).into_owned())?;
    // y must lie in the span of the chosen columns
    let fit = &sub * &coef - y;
    if fit.norm() > 1e-10 * y.norm() {
        return None;
    }
    if support.iter().zip(coef.iter()).any(|(&j, &c)| c == 0.0 || c.signum() != z[j].signum()) {
        return None;
    }
    let signs = coef.map(f64::signum);

    let mut nu = factor.row_coefficients(&(u * rho))?;
    let gap = &signs - sub.tr_mul(&nu);
    // min-norm δν with Φ_Sᵀ δν = gap: δν = Q_S R_S⁻ᵀ gap
    let w = r.tr_solve_upper_triangular(&gap)?;
    nu += qr.q() * w;

    let corr = phi.tr_mul(&nu);
    let mut x = DVector::zeros(n);
    for (&j, &c) in support.iter().zip(coef.iter()) {
        x[j] = c;
    }
    for j in 0..n {
        if x[j] != 0.0 {
            if (corr[j] - x[j].signum()).abs() > 1e-8 {
                return None;
            }
        } else if corr[j].abs() > 1.0 + CERT_SLACK {
            return None;
        }
    }
    Some(x)
}

/// Primal simplex on `min ‖x‖₁ s.t. Φx = y` from an `m`-column basis.
///
/// Returns the basic solution once no nonbasic column has `|φ_jᵀν| > 1`,
/// where `Φ_Bᵀν = sign(x_B)`; that `ν` certifies optimality.
fn crossover(phi: &DMatrix<f64>, y: &DVector<f64>, mut basis: Vec<usize>, max_pivots: usize) -> Option<DVector<f64>> {
    let (m, n) = phi.shape();
    if basis.len() != m {
        return None;
    }
    let mut inv = phi.select_columns(&basis).lu().try_inverse()?;
    let mut in_basis = vec![false; n];
    for &j in &basis {
        in_basis[j] = true;
    }
    for _ in 0..=max_pivots {
        let xb = &inv * y;
        if xb.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return None;
        }
        let nu = inv.tr_mul(&xb.map(f64::signum));
        let corr = phi.tr_mul(&nu);
        let entering = (0..n)
            .filter(|&j| !in_basis[j])
            .max_by(|&a, &b| corr[a].abs().total_cmp(&corr[b].abs()));
        let j = match entering {
            Some(j) if corr[j].abs() > 1.0 + CERT_SLACK => j,
            _ => {
                let mut x = DVector::zeros(n);
                for (&j, &v) in basis.iter().zip(xb.iter()) {
                    x[j] = v;
                }
                return Some(x);
            }
        };
        // x_B(θ) = x_B − θσd; the first basic entry to reach zero leaves
        let sigma = corr[j].signum();
        let d = &inv * phi.column(j);
        let mut leave = None;
        let mut theta = f64::INFINITY;
        for i in 0..m {
            let step = sigma * d[i];
            if step * xb[i] > 0.0 {
                let t = xb[i] / step;
                if t < theta {
                    theta = t;
                    leave = Some(i);
                }
            }
        }
        let r = leave?;
        // product-form update of B⁻¹ for column r replaced by φ_j
        let pivot = d[r];
        if pivot.abs() < 1e-12 {
            return None;
        }
        let row_r = inv.row(r) / pivot;
        for i in 0..m {
            if i != r && d[i] != 0.0 {
                let f = d[i];
                for c in 0..m {
                    inv[(i, c)] -= f * row_r[c];
                }
            }
        }
        inv.set_row(r, &row_r);
        in_basis[basis[r]] = false;
        in_basis[j] = true;
        basis[r] = j;
    }
    None
}
