//! Resolved command configurations and their computations.

use crate::error::CliError;
use crate::svg::{Plot, Series};
use crate::table::{Cell, Table};
use compressibility::gcs::experiment::{measurements, run_trial, support_size};
use compressibility::gcs::{run_experiment, summarize, DecoderKind, ExperimentConfig, KRule, TrialRecord};
use compressibility::instance_opt::{robust_nsp_check, trivial_guarantee_test, KAPPA0};
use compressibility::metrics::{compressibility_report, critical_undersampling, CriticalStatus, GFunctional, HFunctional};
use compressibility::optimize::linspace;
use compressibility::transform::{
    average_sorted_magnitudes, expected_order_statistics, read_pgm, reference_models, PatchSet, TransformKind,
};
use compressibility::{gcs, DistributionModel};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const SIMULATE_COLUMNS: [&str; 8] = ["decoder", "delta", "rho", "k", "trial", "rel_sq_error", "iters", "residual"];

/// Everything needed to recompute an output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum CommandConfig {
    Gfun { dist: String, q: f64, kappas: Vec<f64> },
    Hfun { dist: String, deltas: Vec<f64> },
    Delta0 { dist: String },
    Report { dist: String, deltas: Vec<f64> },
    Simulate { experiment: ExperimentConfig },
    Iocheck { dist: String },
    Nspfuzz { m: usize, n: usize, k: usize, eta: f64, directions: usize, seed: u64 },
    Imgstats {
        dir: Option<PathBuf>,
        synthetic: Option<String>,
        size: usize,
        count: usize,
        transform: TransformKind,
        seed: u64,
        overlay: bool,
    },
    Fig2 { n: usize, trials: usize, deltas: Vec<f64>, seed: u64 },
    Fig4 { kappas: Vec<f64> },
    Fig5 { taus: Vec<f64> },
}

impl CommandConfig {
    pub fn schema(&self) -> &'static str {
        match self {
            CommandConfig::Gfun { .. } => "gfun/v1",
            CommandConfig::Hfun { .. } => "hfun/v1",
            CommandConfig::Delta0 { .. } => "delta0/v1",
            CommandConfig::Report { .. } => "report/v1",
            CommandConfig::Simulate { .. } => "trials/v1",
            CommandConfig::Iocheck { .. } => "iocheck/v1",
            CommandConfig::Nspfuzz { .. } => "nspfuzz/v1",
            CommandConfig::Imgstats { .. } => "orderstats/v1",
            CommandConfig::Fig2 { .. } => "fig2/v1",
            CommandConfig::Fig4 { .. } => "fig4/v1",
            CommandConfig::Fig5 { .. } => "fig5/v1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub format: Format,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// The header's `config` object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    #[serde(flatten)]
    pub command: CommandConfig,
    pub output: OutputConfig,
}

pub fn parse_dist(spec: &str) -> Result<DistributionModel, CliError> {
    spec.parse::<DistributionModel>().map_err(|e| CliError::Usage(format!("bad distribution {spec:?}: {e}")))
}

/// `lo:hi:n` (inclusive, evenly spaced) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::Usage(format!("bad grid {spec:?}: {m}"));
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(bad("empty grid"));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = if parts.len() == 3 {
        let lo: f64 = parts[0].parse().map_err(|_| bad("lower end"))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad("upper end"))?;
        let n: usize = parts[2].parse().map_err(|_| bad("point count"))?;
        match n {
            0 => return Err(bad("empty grid")),
            1 => vec![lo],
            _ => linspace(lo, hi, n),
        }
    } else if parts.len() == 1 {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("not a number")))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        return Err(bad("expected lo:hi:n or a comma list"));
    };
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite value"));
    }
    Ok(grid)
}

/// `best`, `rho:<ρ>` or `k:<k>`.
pub fn parse_k_rule(spec: &str) -> Result<KRule, CliError> {
    let bad = || CliError::Usage(format!("bad k rule {spec:?}: expected best, rho:<x> or k:<n>"));
    match spec.split_once(':') {
        None if spec == "best" => Ok(KRule::BestRho),
        Some(("rho", v)) => Ok(KRule::FixedRho { rho: v.parse().map_err(|_| bad())? }),
        Some(("k", v)) => Ok(KRule::Explicit { k: v.parse().map_err(|_| bad())? }),
        _ => Err(bad()),
    }
}

fn status_name(s: CriticalStatus) -> &'static str {
    match s {
        CriticalStatus::Found => "found",
        CriticalStatus::BelowGrid => "below_grid",
        CriticalStatus::AboveGrid => "above_grid",
        CriticalStatus::Tied => "tied",
        CriticalStatus::AlwaysCompressible => "always_compressible",
    }
}

fn json_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

pub struct Output {
    pub table: Table,
    pub plot: Option<Plot>,
}

fn plain(table: Table) -> Output {
    Output { table, plot: None }
}

/// Compute a table command. `simulate` streams instead; see [`simulate`].
pub fn compute(cfg: &CommandConfig) -> Result<Output, CliError> {
    match cfg {
        CommandConfig::Gfun { dist, q, kappas } => gfun(&parse_dist(dist)?, *q, kappas),
        CommandConfig::Hfun { dist, deltas } => hfun(&parse_dist(dist)?, deltas),
        CommandConfig::Delta0 { dist } => delta0(&parse_dist(dist)?),
        CommandConfig::Report { dist, deltas } => report(&parse_dist(dist)?, deltas),
        CommandConfig::Iocheck { dist } => iocheck(&parse_dist(dist)?),
        CommandConfig::Nspfuzz { m, n, k, eta, directions, seed } => nspfuzz(*m, *n, *k, *eta, *directions, *seed),
        CommandConfig::Imgstats { dir, synthetic, size, count, transform, seed, overlay } => {
            imgstats(dir.as_deref(), synthetic.as_deref(), *size, *count, *transform, *seed, *overlay)
        }
        CommandConfig::Fig2 { n, trials, deltas, seed } => fig2(*n, *trials, deltas, *seed),
        CommandConfig::Fig4 { kappas } => fig4(kappas),
        CommandConfig::Fig5 { taus } => fig5(taus),
        CommandConfig::Simulate { experiment } => {
            let mut table = Table::new(&SIMULATE_COLUMNS);
            simulate(experiment, |r| {
                table.push(trial_row(&r));
                Ok(())
            })?;
            Ok(plain(table))
        }
    }
}

fn nonempty(grid: &[f64], what: &str) -> Result<(), CliError> {
    if grid.is_empty() {
        Err(CliError::Usage(format!("{what} grid is empty")))
    } else {
        Ok(())
    }
}

fn gfun(dist: &DistributionModel, q: f64, kappas: &[f64]) -> Result<Output, CliError> {
    nonempty(kappas, "kappa")?;
    let g = GFunctional::new(dist, q)?;
    let mut t = Table::new(&["kappa", "G", "method"]);
    for &k in kappas {
        let p = g.eval(k)?;
        t.push(vec![Cell::Num(k), Cell::Num(p.g), Cell::text(json_name(&p.method))]);
    }
    let plot = Plot {
        title: format!("G_{q} for {dist}"),
        x_label: "kappa".into(),
        y_label: format!("G_{q}(kappa)"),
        series: vec![Series::line("G", t.rows.iter().map(|r| (num(&r[0]), num(&r[1]))).collect())],
        ..Default::default()
    };
    Ok(Output { table: t, plot: Some(plot) })
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Num(v) => *v,
        Cell::Int(v) => *v as f64,
        _ => f64::NAN,
    }
}

fn hfun(dist: &DistributionModel, deltas: &[f64]) -> Result<Output, CliError> {
    nonempty(deltas, "delta")?;
    let h = HFunctional::new(dist)?;
    let mut t = Table::new(&["delta", "H", "rho_star"]);
    for &d in deltas {
        let v = h.eval(d)?;
        t.push(vec![Cell::Num(d), Cell::Num(v.value), Cell::opt_num(v.rho_star)]);
    }
    let plot = Plot {
        title: format!("H for {dist}"),
        x_label: "delta".into(),
        y_label: "relative error".into(),
        series: vec![
            Series::line("H(delta)", t.rows.iter().map(|r| (num(&r[0]), num(&r[1]))).collect()),
            Series::line("1 - delta", t.rows.iter().map(|r| (num(&r[0]), 1.0 - num(&r[0]))).collect()).dashed(),
        ],
        ..Default::default()
    };
    Ok(Output { table: t, plot: Some(plot) })
}

fn delta0(dist: &DistributionModel) -> Result<Output, CliError> {
    let c = critical_undersampling(dist)?;
    let mut t = Table::new(&["dist", "delta0", "status", "crossings"]);
    let crossings: Vec<String> = c.crossings.iter().map(|v| v.to_string()).collect();
    t.push(vec![
        Cell::text(dist.to_string()),
        Cell::opt_num(c.delta0),
        Cell::text(status_name(c.status)),
        Cell::text(crossings.join(";")),
    ]);
    Ok(plain(t))
}

fn report(dist: &DistributionModel, deltas: &[f64]) -> Result<Output, CliError> {
    let r = compressibility_report(dist, deltas)?;
    let mut t = Table::new(&["field", "delta", "value", "rho_star"]);
    let text = |f: &str, v: String| vec![Cell::text(f), Cell::Empty, Cell::Text(v), Cell::Empty];
    t.push(text("dist", dist.to_string()));
    t.push(text("verdict", json_name(&r.moments.verdict)));
    t.push(text("second_moment_finite", r.moments.second_moment_finite.to_string()));
    t.push(text("fourth_moment_finite", r.moments.fourth_moment_finite.to_string()));
    t.push(text("delta0_status", status_name(r.critical.status).into()));
    t.push(vec![Cell::text("delta0"), Cell::Empty, Cell::opt_num(r.critical.delta0), Cell::Empty]);
    for h in &r.h_samples {
        t.push(vec![Cell::text("h"), Cell::Num(h.delta), Cell::Num(h.value), Cell::opt_num(h.rho_star)]);
    }
    Ok(plain(t))
}

fn iocheck(dist: &DistributionModel) -> Result<Output, CliError> {
    let a = trivial_guarantee_test(dist)?;
    let mut t = Table::new(&["dist", "kappa0", "g1_at_kappa0", "trivial_at_kappa0", "weak_boundary_delta0"]);
    t.push(vec![
        Cell::text(dist.to_string()),
        Cell::Num(a.kappa0),
        Cell::Num(a.g1_at_kappa0),
        Cell::text(a.trivial_at_kappa0.to_string()),
        Cell::opt_num(a.weak_boundary_delta0),
    ]);
    Ok(plain(t))
}

fn nspfuzz(m: usize, n: usize, k: usize, eta: f64, directions: usize, seed: u64) -> Result<Output, CliError> {
    let enc = gcs::gaussian_encoder(m, n, seed)?;
    let r = robust_nsp_check(&enc, eta, k, directions, seed)?;
    let mut t = Table::new(&["m", "N", "k", "eta", "directions", "holds_so_far", "worst_ratio"]);
    t.push(vec![
        Cell::Int(m as i64),
        Cell::Int(n as i64),
        Cell::Int(k as i64),
        Cell::Num(eta),
        Cell::Int(directions as i64),
        Cell::text(r.holds_so_far.to_string()),
        Cell::Num(r.worst_ratio),
    ]);
    Ok(plain(t))
}

fn imgstats(
    dir: Option<&std::path::Path>,
    synthetic: Option<&str>,
    size: usize,
    count: usize,
    transform: TransformKind,
    seed: u64,
    overlay: bool,
) -> Result<Output, CliError> {
    if size < 2 || !size.is_power_of_two() {
        return Err(CliError::Usage(format!("--size must be a power of two >= 2, got {size}")));
    }
    let set = match (dir, synthetic) {
        (Some(dir), None) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(CliError::Usage(format!("no .pgm files in {}", dir.display())));
            }
            let images = paths.iter().map(|p| read_pgm(p)).collect::<Result<Vec<_>, _>>()?;
            PatchSet::sample(&images, size, count, seed)?
        }
        (None, Some(spec)) => PatchSet::synthetic(&parse_dist(spec)?, size, count, seed)?,
        _ => return Err(CliError::Usage("give exactly one of --dir or --synthetic".into())),
    };
    let curve = average_sorted_magnitudes(&set, Some(transform))?;
    let models = reference_models();
    let mut cols = vec!["rank", "value"];
    let mut overlays = Vec::new();
    if overlay {
        for (name, d) in &models {
            cols.push(name);
            overlays.push(expected_order_statistics(d, curve.len())?);
        }
    }
    let mut t = Table::new(&cols);
    for (i, (rank, v)) in curve.points().enumerate() {
        let mut row = vec![Cell::Int(rank as i64), Cell::Num(v)];
        row.extend(overlays.iter().map(|o| Cell::Num(o.values[i])));
        t.push(row);
    }
    let mut series = vec![Series::line(&format!("patches ({transform})"), curve.points().map(|(r, v)| (r as f64, v)).collect())];
    for ((name, _), o) in models.iter().zip(&overlays) {
        series.push(Series::line(name, o.points().map(|(r, v)| (r as f64, v)).collect()).dashed());
    }
    let plot = Plot {
        title: format!("order statistics, {size}x{size} patches, {transform}"),
        x_label: "rank".into(),
        y_label: "mean |coefficient|".into(),
        log_x: true,
        log_y: true,
        series,
        ..Default::default()
    };
    Ok(Output { table: t, plot: Some(plot) })
}

fn fig2(n: usize, trials: usize, deltas: &[f64], seed: u64) -> Result<Output, CliError> {
    nonempty(deltas, "delta")?;
    let dist = DistributionModel::laplace(1.0)?;
    let h = HFunctional::new(&dist)?;
    let exp = ExperimentConfig {
        dist,
        n,
        deltas: deltas.to_vec(),
        decoders: vec![DecoderKind::Oracle, DecoderKind::L1],
        k_rule: KRule::BestRho,
        trials,
        master_seed: seed,
        l1: Default::default(),
    };
    let mut records = Vec::new();
    run_experiment(&exp, |r| {
        records.push(r);
        Ok(())
    })?;
    let summary = summarize(&records);
    let find = |d: DecoderKind, delta: f64| summary.iter().find(|s| s.decoder == d && s.delta == delta);
    let mut t = Table::new(&[
        "delta",
        "ls_theory",
        "oracle_theory",
        "rho_star",
        "k",
        "oracle_mc",
        "l1_mc",
        "l1_nonconverged",
    ]);
    for &d in deltas {
        let hv = h.eval(d)?;
        let m = measurements(d, n);
        let k = support_size(&KRule::BestRho, &dist, d, m)?;
        t.push(vec![
            Cell::Num(d),
            Cell::Num(1.0 - d),
            Cell::Num(hv.value),
            Cell::opt_num(hv.rho_star),
            Cell::Int(k as i64),
            Cell::Num(find(DecoderKind::Oracle, d).map_or(f64::NAN, |s| s.mean)),
            Cell::Num(find(DecoderKind::L1, d).map_or(f64::NAN, |s| s.mean)),
            Cell::Int(find(DecoderKind::L1, d).map_or(0, |s| s.nonconverged) as i64),
        ]);
    }
    let col = |i: usize| t.rows.iter().map(|r| (num(&r[0]), num(&r[i]))).collect::<Vec<_>>();
    let plot = Plot {
        title: format!("Laplace, N = {n}, {trials} trials"),
        x_label: "undersampling delta = m/N".into(),
        y_label: "relative squared error".into(),
        log_y: true,
        series: vec![
            Series::line("LS 1 - delta", col(1)).dashed(),
            Series::line("oracle H(delta)", col(2)),
            Series::line("oracle MC", col(5)).markers(),
            Series::line("l1 MC", col(6)),
        ],
        hlines: vec![(10f64.powf(-0.3), "3 dB".into()), (0.1, "10 dB".into()), (0.01, "20 dB".into())],
        y_range: Some((0.005, 1.0)),
        ..Default::default()
    };
    Ok(Output { table: t, plot: Some(plot) })
}

fn fig4(kappas: &[f64]) -> Result<Output, CliError> {
    nonempty(kappas, "kappa")?;
    let g1 = GFunctional::new(&DistributionModel::laplace(1.0)?, 1.0)?;
    let mut t = Table::new(&["kappa", "g1", "step_bound"]);
    for &k in kappas {
        let step = if k <= KAPPA0 { 0.5 } else { 0.0 };
        t.push(vec![Cell::Num(k), Cell::Num(g1.value(k)?), Cell::Num(step)]);
    }
    let col = |i: usize| t.rows.iter().map(|r| (num(&r[0]), num(&r[i]))).collect::<Vec<_>>();
    let plot = Plot {
        title: "G_1 for Laplace and the kappa0 step".into(),
        x_label: "kappa".into(),
        y_label: "relative l1 error".into(),
        series: vec![Series::line("G_1(kappa)", col(1)), Series::line("1/2 on [0, kappa0]", col(2)).dashed()],
        ..Default::default()
    };
    Ok(Output { table: t, plot: Some(plot) })
}

fn fig5(taus: &[f64]) -> Result<Output, CliError> {
    nonempty(taus, "tau")?;
    let mut t = Table::new(&["tau", "delta0", "status"]);
    for &tau in taus {
        let row = match DistributionModel::generalized_gaussian(tau, 1.0).and_then(|d| critical_undersampling(&d)) {
            Ok(c) => vec![Cell::Num(tau), Cell::opt_num(c.delta0), Cell::text(status_name(c.status))],
            Err(e) => vec![Cell::Num(tau), Cell::Empty, Cell::text(format!("error: {e}"))],
        };
        t.push(row);
    }
    let pts = t.rows.iter().map(|r| (num(&r[0]), num(&r[1]))).filter(|p| p.1.is_finite()).collect();
    let plot = Plot {
        title: "critical undersampling for generalized Gaussians".into(),
        x_label: "shape tau".into(),
        y_label: "delta0".into(),
        series: vec![Series::line("delta0(tau)", pts)],
        ..Default::default()
    };
    Ok(Output { table: t, plot: Some(plot) })
}

pub fn trial_row(r: &TrialRecord) -> Vec<Cell> {
    vec![
        Cell::text(r.decoder.as_str()),
        Cell::Num(r.delta),
        Cell::opt_num(r.rho),
        r.k.map_or(Cell::Empty, |k| Cell::Int(k as i64)),
        Cell::Int(r.trial as i64),
        Cell::Num(r.rel_sq_error),
        r.iters.map_or(Cell::Empty, |v| Cell::Int(v as i64)),
        Cell::opt_num(r.residual),
    ]
}

pub fn simulate<F>(exp: &ExperimentConfig, sink: F) -> Result<(), CliError>
where
    F: FnMut(TrialRecord) -> compressibility::Result<()>,
{
    exp.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    run_experiment(exp, sink)?;
    Ok(())
}

/// Recompute the simulate record at a given (decoder, δ, trial).
pub fn recompute_trial(exp: &ExperimentConfig, decoder: DecoderKind, delta: f64, trial: usize) -> Result<TrialRecord, CliError> {
    let m = measurements(delta, exp.n);
    let k = if exp.decoders.contains(&DecoderKind::Oracle) { support_size(&exp.k_rule, &exp.dist, delta, m)? } else { 0 };
    run_trial(exp, delta, k, trial)?
        .into_iter()
        .find(|r| r.decoder == decoder)
        .ok_or_else(|| CliError::CheckFailed(format!("decoder {decoder} not in config")))
}
