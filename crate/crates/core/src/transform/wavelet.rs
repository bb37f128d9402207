use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Four-tap Daubechies scaling filter (two vanishing moments).
pub const DB4_LOWPASS: [f64; 4] = [
    0.482_962_913_144_534_16,
    0.836_516_303_737_807_9,
    0.224_143_868_042_013_38,
    -0.129_409_522_551_260_37,
];

fn highpass() -> [f64; 4] {
    let h = DB4_LOWPASS;
    [h[3], -h[2], h[1], -h[0]]
}

// One periodic analysis step on v (length n, even): [approx | detail].
fn analyze(v: &[f64], out: &mut [f64]) {
    let n = v.len();
    let half = n / 2;
    let g = highpass();
    for i in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for k in 0..4 {
            let x = v[(2 * i + k) % n];
            a += DB4_LOWPASS[k] * x;
            d += g[k] * x;
        }
        out[i] = a;
        out[half + i] = d;
    }
}

fn synthesize(c: &[f64], out: &mut [f64]) {
    let n = c.len();
    let half = n / 2;
    let g = highpass();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..half {
        for k in 0..4 {
            out[(2 * i + k) % n] += DB4_LOWPASS[k] * c[i] + g[k] * c[half + i];
        }
    }
}

fn check(patch: &DMatrix<f64>, levels: usize, op: &'static str) -> Result<usize> {
    let (r, c) = patch.shape();
    if r != c || r < 2 {
        return Err(Error::domain(op, format!("patch must be square with side >= 2, got {r}x{c}")));
    }
    if levels == 0 || r % (1usize << levels.min(63)) != 0 {
        return Err(Error::domain(op, format!("side {r} is not divisible by 2^{levels}")));
    }
    Ok(r)
}

/// Levels for a full decomposition of a side-`n` patch (`n = 2^j` gives `j`).
pub fn full_depth(n: usize) -> usize {
    n.trailing_zeros() as usize
}

fn apply_rows_cols(m: &mut DMatrix<f64>, size: usize, step: fn(&[f64], &mut [f64])) {
    let mut buf = vec![0.0; size];
    let mut out = vec![0.0; size];
    for r in 0..size {
        for c in 0..size {
            buf[c] = m[(r, c)];
        }
        step(&buf, &mut out);
        for c in 0..size {
            m[(r, c)] = out[c];
        }
    }
    for c in 0..size {
        for r in 0..size {
            buf[r] = m[(r, c)];
        }
        step(&buf, &mut out);
        for r in 0..size {
            m[(r, c)] = out[r];
        }
    }
}

/// Separable 2D periodic Daubechies-4 transform, recursing on the
/// low-low band. `levels = None` decomposes fully.
pub fn dwt2_db4(patch: &DMatrix<f64>, levels: Option<usize>) -> Result<DMatrix<f64>> {
    let levels = levels.unwrap_or_else(|| full_depth(patch.nrows()));
    let n = check(patch, levels, "dwt2_db4")?;
    let mut m = patch.clone();
    let mut size = n;
    for _ in 0..levels {
        apply_rows_cols(&mut m, size, analyze);
        size /= 2;
    }
    Ok(m)
}

pub fn idwt2_db4(coeffs: &DMatrix<f64>, levels: Option<usize>) -> Result<DMatrix<f64>> {
    let levels = levels.unwrap_or_else(|| full_depth(coeffs.nrows()));
    let n = check(coeffs, levels, "idwt2_db4")?;
    let mut m = coeffs.clone();
    let mut size = n >> (levels - 1);
    for _ in 0..levels {
        apply_rows_cols(&mut m, size, synthesize);
        size *= 2;
    }
    Ok(m)
}
