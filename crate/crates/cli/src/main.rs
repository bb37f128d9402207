//! `csdist`: compressibility functionals and compressed sensing simulations
//! from the command line.

mod check;
mod commands;
mod error;
mod svg;
mod table;

use clap::{Args, Parser, Subcommand};
use commands::{parse_grid, parse_k_rule, CommandConfig, Format, OutputConfig, ResolvedConfig};
use compressibility::gcs::{DecoderKind, ExperimentConfig};
use compressibility::transform::TransformKind;
use error::CliError;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use table::Header;

const DEFAULT_SEED: u64 = 20_100_401;

#[derive(Parser)]
#[command(name = "csdist", version, about = "Compressibility of distributions and Gaussian compressed sensing experiments")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also render an SVG plot (figure commands).
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Master seed for everything random.
    #[arg(long, global = true, env = "CSDIST_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Re-validate a previous output by recomputing three of its rows.
    #[arg(long, value_name = "FILE")]
    check: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args)]
struct DistArg {
    /// `laplace[:λ]`, `ggd:τ[:λ]`, `ts:τ:s[:λ]` or `pzero`.
    dist: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// G_q(κ) on a κ grid.
    Gfun {
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// `lo:hi:n` or a comma list.
        #[arg(long, default_value = "0:1:101")]
        kappas: String,
    },
    /// H(δ) and the minimizing ρ on a δ grid.
    Hfun {
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, default_value = "0.01:0.99:99")]
        deltas: String,
    },
    /// Critical undersampling δ₀.
    Delta0 {
        #[command(flatten)]
        dist: DistArg,
    },
    /// Moment verdict, δ₀ and H samples.
    Report {
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, default_value = "0.1:0.9:9")]
        deltas: String,
    },
    /// Monte Carlo decoding trials, one row per trial.
    Simulate {
        /// JSON experiment config; overrides the flags below.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "laplace")]
        dist: String,
        #[arg(long = "n", default_value_t = 256)]
        n: usize,
        #[arg(long, default_value = "0.1:0.9:9")]
        deltas: String,
        /// Comma list of trivial, ls, oracle, l1.
        #[arg(long, default_value = "trivial,ls,oracle,l1")]
        decoders: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// `best`, `rho:<x>` or `k:<n>`.
        #[arg(long, default_value = "best")]
        k_rule: String,
    },
    /// Instance optimality assessment at κ₀.
    Iocheck {
        #[command(flatten)]
        dist: DistArg,
    },
    /// Random search for robust null space property violations.
    Nspfuzz {
        #[arg(long)]
        m: usize,
        #[arg(long = "n")]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 1000)]
        directions: usize,
    },
    /// Averaged sorted transform coefficients of image patches.
    Imgstats {
        /// Directory of PGM images.
        #[arg(long, conflicts_with = "synthetic")]
        dir: Option<PathBuf>,
        /// Draw i.i.d. patches from a distribution instead.
        #[arg(long)]
        synthetic: Option<String>,
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value = "dct")]
        transform: TransformKind,
        /// Add expected order statistics of the reference models.
        #[arg(long)]
        overlay: bool,
    },
    /// Relative error against undersampling for Laplace signals.
    Fig2 {
        #[arg(long = "n", default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value = "0.1:0.9:17")]
        deltas: String,
    },
    /// G_1 for Laplace with the κ₀ step bound.
    Fig4 {
        #[arg(long, default_value = "0:1:101")]
        kappas: String,
    },
    /// δ₀ across generalized Gaussian shapes.
    Fig5 {
        #[arg(long, default_value = "0.2:4:20")]
        taus: String,
    },
}

fn resolve(cmd: Cmd, seed: u64) -> Result<CommandConfig, CliError> {
    Ok(match cmd {
        Cmd::Gfun { dist, q, kappas } => CommandConfig::Gfun { dist: dist.dist, q, kappas: parse_grid(&kappas)? },
        Cmd::Hfun { dist, deltas } => CommandConfig::Hfun { dist: dist.dist, deltas: parse_grid(&deltas)? },
        Cmd::Delta0 { dist } => CommandConfig::Delta0 { dist: dist.dist },
        Cmd::Report { dist, deltas } => CommandConfig::Report { dist: dist.dist, deltas: parse_grid(&deltas)? },
        Cmd::Iocheck { dist } => CommandConfig::Iocheck { dist: dist.dist },
        Cmd::Simulate { config: Some(path), .. } => {
            let text = std::fs::read_to_string(&path)?;
            let experiment: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
            CommandConfig::Simulate { experiment }
        }
        Cmd::Simulate { config: None, dist, n, deltas, decoders, trials, k_rule } => {
            let decoders = decoders
                .split(',')
                .map(|s| s.trim().parse::<DecoderKind>())
                .collect::<Result<Vec<_>, _>>()?;
            CommandConfig::Simulate {
                experiment: ExperimentConfig {
                    dist: commands::parse_dist(&dist)?,
                    n,
                    deltas: parse_grid(&deltas)?,
                    decoders,
                    k_rule: parse_k_rule(&k_rule)?,
                    trials,
                    master_seed: seed,
                    l1: Default::default(),
                },
            }
        }
        Cmd::Nspfuzz { m, n, k, eta, directions } => CommandConfig::Nspfuzz { m, n, k, eta, directions, seed },
        Cmd::Imgstats { dir, synthetic, size, count, transform, overlay } => {
            CommandConfig::Imgstats { dir, synthetic, size, count, transform, seed, overlay }
        }
        Cmd::Fig2 { n, trials, deltas } => CommandConfig::Fig2 { n, trials, deltas: parse_grid(&deltas)?, seed },
        Cmd::Fig4 { kappas } => CommandConfig::Fig4 { kappas: parse_grid(&kappas)? },
        Cmd::Fig5 { taus } => CommandConfig::Fig5 { taus: parse_grid(&taus)? },
    })
}

fn default_format(cfg: &CommandConfig) -> Format {
    match cfg {
        CommandConfig::Iocheck { .. } => Format::Json,
        _ => Format::Csv,
    }
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn run_command(resolved: &ResolvedConfig) -> Result<(), CliError> {
    let header = Header::new(resolved.command.schema(), serde_json::to_value(resolved)?);
    let mut w = open_out(&resolved.output.out)?;
    if let CommandConfig::Simulate { experiment } = &resolved.command {
        // rows stream out as each δ finishes
        match resolved.output.format {
            Format::Csv => {
                header.write_csv_comments(&mut w)?;
                let mut cw = csv::Writer::from_writer(&mut w);
                cw.write_record(commands::SIMULATE_COLUMNS)?;
                commands::simulate(experiment, |r| {
                    cw.write_record(commands::trial_row(&r).iter().map(table::Cell::render))
                        .map_err(|e| compressibility::Error::Unsupported(format!("write failed: {e}")))
                })?;
                cw.flush()?;
            }
            Format::Json => {
                serde_json::to_writer(&mut w, &header)?;
                writeln!(w)?;
                commands::simulate(experiment, |r| {
                    let obj: serde_json::Map<String, serde_json::Value> = commands::SIMULATE_COLUMNS
                        .iter()
                        .zip(commands::trial_row(&r))
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect();
                    writeln!(w, "{}", serde_json::Value::Object(obj))
                        .map_err(|e| compressibility::Error::Unsupported(format!("write failed: {e}")))
                })?;
            }
        }
        w.flush()?;
        if resolved.output.svg.is_some() {
            eprintln!("note: simulate has no plot; --svg ignored");
        }
        return Ok(());
    }
    let out = commands::compute(&resolved.command)?;
    match resolved.output.format {
        Format::Csv => out.table.write_csv(&header, &mut w)?,
        Format::Json => out.table.write_json(&header, &mut w)?,
    }
    w.flush()?;
    if let Some(path) = &resolved.output.svg {
        match out.plot {
            Some(plot) => std::fs::write(path, plot.render())?,
            None => eprintln!("note: {} has no plot; --svg ignored", resolved.command.schema()),
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(path) = cli.check {
        if cli.command.is_some() {
            return Err(CliError::Usage("--check takes no subcommand".into()));
        }
        let report = check::check_file(&path)?;
        println!("{report}");
        return Ok(());
    }
    let cmd = cli.command.ok_or_else(|| CliError::Usage("no subcommand given; see --help".into()))?;
    let command = resolve(cmd, cli.seed)?;
    let format = cli.format.unwrap_or_else(|| default_format(&command));
    let resolved = ResolvedConfig { command, output: OutputConfig { format, out: cli.out, svg: cli.svg } };
    run_command(&resolved)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("csdist: {e}");
        std::process::exit(e.exit_code());
    }
}
