//! `--check`: recompute three rows of a previous output and compare.

use crate::commands::{self, CommandConfig, ResolvedConfig, SIMULATE_COLUMNS};
use crate::error::CliError;
use crate::table::{parse_output, Cell, TOOL};
use compressibility::gcs::DecoderKind;
use std::path::Path;

const REL_TOL: f64 = 1e-9;

/// First, middle and last row.
fn sample_rows(len: usize) -> Vec<usize> {
    let mut idx = vec![0, len / 2, len - 1];
    idx.dedup();
    idx
}

fn restrict(grid: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| grid[i]).collect()
}

fn same(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_nan() && y.is_nan() => true,
        (Ok(x), Ok(y)) => (x - y).abs() <= REL_TOL * x.abs().max(y.abs()).max(f64::MIN_POSITIVE),
        _ => false,
    }
}

fn field<'a>(columns: &[String], row: &'a [String], name: &str) -> Result<&'a str, CliError> {
    columns
        .iter()
        .position(|c| c == name)
        .map(|i| row[i].as_str())
        .ok_or_else(|| CliError::Format(format!("column {name} missing")))
}

/// Recompute the rows at `idx`; returns the expected columns and rows.
fn recompute(
    cfg: &CommandConfig,
    columns: &[String],
    rows: &[Vec<String>],
    idx: &[usize],
) -> Result<(Vec<String>, Vec<Vec<Cell>>), CliError> {
    let grid_len_ok = |grid: &[f64]| {
        if grid.len() == rows.len() {
            Ok(())
        } else {
            Err(CliError::CheckFailed(format!("{} rows for a grid of {}", rows.len(), grid.len())))
        }
    };
    let restricted = match cfg {
        CommandConfig::Gfun { dist, q, kappas } => {
            grid_len_ok(kappas)?;
            Some(CommandConfig::Gfun { dist: dist.clone(), q: *q, kappas: restrict(kappas, idx) })
        }
        CommandConfig::Hfun { dist, deltas } => {
            grid_len_ok(deltas)?;
            Some(CommandConfig::Hfun { dist: dist.clone(), deltas: restrict(deltas, idx) })
        }
        CommandConfig::Fig2 { n, trials, deltas, seed } => {
            grid_len_ok(deltas)?;
            Some(CommandConfig::Fig2 { n: *n, trials: *trials, deltas: restrict(deltas, idx), seed: *seed })
        }
        CommandConfig::Fig4 { kappas } => {
            grid_len_ok(kappas)?;
            Some(CommandConfig::Fig4 { kappas: restrict(kappas, idx) })
        }
        CommandConfig::Fig5 { taus } => {
            grid_len_ok(taus)?;
            Some(CommandConfig::Fig5 { taus: restrict(taus, idx) })
        }
        CommandConfig::Simulate { experiment } => {
            let mut out = Vec::new();
            for &i in idx {
                let row = &rows[i];
                let bad = |what: &str| CliError::Format(format!("row {i}: bad {what}"));
                let decoder: DecoderKind = field(columns, row, "decoder")?.parse().map_err(|_| bad("decoder"))?;
                let delta: f64 = field(columns, row, "delta")?.parse().map_err(|_| bad("delta"))?;
                let trial: usize = field(columns, row, "trial")?.parse().map_err(|_| bad("trial"))?;
                let rec = commands::recompute_trial(experiment, decoder, delta, trial)?;
                out.push(commands::trial_row(&rec));
            }
            let cols = SIMULATE_COLUMNS.iter().map(|s| s.to_string()).collect();
            return Ok((cols, out));
        }
        _ => None,
    };
    match restricted {
        Some(c) => {
            let t = commands::compute(&c)?.table;
            Ok((t.columns, t.rows))
        }
        None => {
            let t = commands::compute(cfg)?.table;
            if t.rows.len() != rows.len() {
                return Err(CliError::CheckFailed(format!("{} rows recomputed, {} in file", t.rows.len(), rows.len())));
            }
            let sel = idx.iter().map(|&i| t.rows[i].clone()).collect();
            Ok((t.columns, sel))
        }
    }
}

pub fn check_file(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path)?;
    let parsed = parse_output(&text)?;
    if parsed.header.tool != TOOL {
        return Err(CliError::Format(format!("written by {:?}, not {TOOL}", parsed.header.tool)));
    }
    let resolved: ResolvedConfig = serde_json::from_value(parsed.header.config.clone())
        .map_err(|e| CliError::Format(format!("unreadable config in header: {e}")))?;
    if resolved.command.schema() != parsed.header.schema {
        return Err(CliError::CheckFailed(format!(
            "schema {} does not match config ({})",
            parsed.header.schema,
            resolved.command.schema()
        )));
    }
    if parsed.rows.is_empty() {
        return Ok(format!("ok: {} has no rows to check", path.display()));
    }
    let idx = sample_rows(parsed.rows.len());
    let (columns, expected) = recompute(&resolved.command, &parsed.columns, &parsed.rows, &idx)?;
    if columns != parsed.columns {
        return Err(CliError::CheckFailed(format!("columns {:?}, expected {:?}", parsed.columns, columns)));
    }
    for (&i, exp) in idx.iter().zip(&expected) {
        let got = &parsed.rows[i];
        for (j, (g, e)) in got.iter().zip(exp).enumerate() {
            let e = e.render();
            if !same(g, &e) {
                return Err(CliError::CheckFailed(format!("row {i}, column {}: file has {g:?}, recomputed {e:?}", columns[j])));
            }
        }
    }
    let rows: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
    Ok(format!("ok: rows {} of {} match", rows.join(", "), path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_and_comparison() {
        assert_eq!(sample_rows(1), vec![0]);
        assert_eq!(sample_rows(2), vec![0, 1]);
        assert_eq!(sample_rows(101), vec![0, 50, 100]);
        assert!(same("0.5", "0.5000000000001"));
        assert!(!same("0.5", "0.5001"));
        assert!(same("NaN", "NaN"));
        assert!(same("", ""));
        assert!(!same("l1", "ls"));
    }
}
