use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use nanolink::backhaul::{backhaul_rates, Hop};
use nanolink::mc::mc_information_rate;
use nanolink::pipeline::{sweep_distance_at, DISTANCE_SWEEP_SNR_DB};
use nanolink::thz::thz_information_rate;
use nanolink::units::{parse_quantity, Dimension};
use nanolink::{derive_stream, run_pipeline, sweep_snr, ArchitectureConfig};
use thiserror::Error;

use crate::config::{env_overrides, parse_config_str, resolve, ConfigError, FlatConfig};
use crate::output::{write_csv, write_manifest, Row, RunManifest};

pub const DEFAULT_SNR_GRID: &str = "0:50:5";
pub const DEFAULT_DISTANCE_GRID: &str = "1km:10km:1.8km";
const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "nanolink", version, about = "Molecular / THz / RF link-rate simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML config file; absent keys keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the config file and environment.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory for CSV files and manifests.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Monte-Carlo size of the simulated segments: MC realizations, THz
    /// symbols, or backhaul fading samples. `pipeline` sets all three.
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Molecular hop information rate.
    Mc,
    /// Terahertz hop information rate.
    Thz,
    /// Per-hop and end-to-end backhaul rates.
    Backhaul {
        /// Reference SNR (dB); defaults to backhaul.avg_snr_db_at_ref.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<String>,
    },
    /// All segments and the alert-path bottleneck.
    Pipeline {
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<String>,
    },
    /// Backhaul end-to-end rate over a reference-SNR grid.
    SweepSnr {
        /// start:stop:step in dB, stop inclusive.
        #[arg(long, allow_hyphen_values = true, default_value = DEFAULT_SNR_GRID)]
        grid: String,
    },
    /// Backhaul end-to-end rate as one hop's length varies.
    SweepDistance {
        /// Swept hop: hop1 or hop2.
        #[arg(long)]
        hop: Hop,
        /// start:stop:step, lengths with optional unit suffix.
        #[arg(long, default_value = DEFAULT_DISTANCE_GRID)]
        grid: String,
        /// Reference SNR (dB).
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mc => "mc",
            Command::Thz => "thz",
            Command::Backhaul { .. } => "backhaul",
            Command::Pipeline { .. } => "pipeline",
            Command::SweepSnr { .. } => "sweep-snr",
            Command::SweepDistance { .. } => "sweep-distance",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// `start:stop:step` with inclusive stop, or a single value.
pub fn parse_grid(text: &str, dim: Dimension) -> Result<Vec<f64>, CliError> {
    let bad = |why: String| CliError::Config(format!("invalid grid `{text}`: {why}"));
    let parse = |s: &str| parse_quantity(s, dim).map_err(|e| bad(e.to_string()));
    let parts: Vec<&str> = text.split(':').collect();
    let (start, stop, step) = match parts.as_slice() {
        [v] => {
            let v = parse(v)?;
            return Ok(vec![v]);
        }
        [a, b, s] => (parse(a)?, parse(b)?, parse(s)?),
        _ => return Err(bad("expected start:stop:step".into())),
    };
    if start == stop {
        return Ok(vec![start]);
    }
    if !(start.is_finite() && stop.is_finite()) {
        return Err(bad("endpoints must be finite".into()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(bad("step must be > 0".into()));
    }
    if stop < start {
        return Err(bad("stop is below start".into()));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > MAX_GRID_POINTS {
        return Err(bad(format!("{n} points exceed the limit of {MAX_GRID_POINTS}")));
    }
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

fn parse_snr(text: &str) -> Result<f64, CliError> {
    parse_quantity(text, Dimension::Decibel).map_err(|e| CliError::Config(format!("--snr: {e}")))
}

/// Resolve the configuration: defaults, config file, environment, flags.
pub fn load_config(cli: &Cli, env: FlatConfig) -> Result<ArchitectureConfig, CliError> {
    let mut flat = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config_str(&text)?
        }
        None => FlatConfig::new(),
    };
    flat.extend(env);
    let mut cfg = resolve(&ArchitectureConfig::default(), &flat)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = cli.realizations {
        if n == 0 {
            return Err(CliError::Config("--realizations must be >= 1".into()));
        }
        match cli.command {
            Command::Mc => cfg.mc.n_realizations = n,
            Command::Thz => cfg.thz.n_symbols = n,
            Command::Pipeline { .. } => {
                cfg.mc.n_realizations = n;
                cfg.thz.n_symbols = n;
                cfg.backhaul.n_fading_samples = n;
            }
            _ => cfg.backhaul.n_fading_samples = n,
        }
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Run one invocation and return the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    run_with_env(cli, env_overrides(std::env::vars()))
}

pub fn run_with_env(cli: &Cli, env: FlatConfig) -> Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let cfg = load_config(cli, env)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(runtime)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| runtime(format!("{}: {e}", cli.out.display())))?;

    log::info!("{} with seed {} (digest {})", cli.command.name(), cfg.master_seed, cfg.digest());
    let outputs = pool.install(|| dispatch(&cli.command, &cfg, &cli.out))?;

    let stem = outputs[0].file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
    let manifest_path = cli.out.join(format!("{stem}.manifest.json"));
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        config_digest: cfg.digest(),
        master_seed: cfg.master_seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
        config: serde_json::to_value(&cfg).map_err(runtime)?,
    };
    write_manifest(&manifest_path, &manifest).map_err(runtime)?;
    let mut all = outputs;
    all.push(manifest_path);
    Ok(all)
}

fn dispatch(command: &Command, cfg: &ArchitectureConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let seed = cfg.master_seed;
    let csv = |name: &str, x: &str, rows: &[Row]| -> Result<PathBuf, CliError> {
        let path = out.join(name);
        write_csv(&path, x, rows).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    };
    match command {
        Command::Mc => {
            let r = mc_information_rate(&cfg.mc, &derive_stream(seed, 1)).map_err(runtime)?;
            let row = Row::from_result(cfg.mc.molecules_per_impulse as f64, &r);
            Ok(vec![csv("mc.csv", "molecules_per_impulse", &[row])?])
        }
        Command::Thz => {
            let r = thz_information_rate(&cfg.thz, &derive_stream(seed, 2)).map_err(runtime)?;
            Ok(vec![csv("thz.csv", "distance_m", &[Row::from_result(cfg.thz.distance, &r)])?])
        }
        Command::Backhaul { snr } => {
            let snr = snr.as_deref().map(parse_snr).transpose()?.unwrap_or(cfg.backhaul.avg_snr_db_at_ref);
            let r = backhaul_rates(&cfg.backhaul, snr, &derive_stream(seed, 3)).map_err(runtime)?;
            let rows: Vec<Row> = [&r.hop1, &r.hop2, &r.e2e].iter().map(|x| Row::from_result(snr, x)).collect();
            Ok(vec![csv("backhaul.csv", "snr_db", &rows)?])
        }
        Command::Pipeline { snr } => {
            let mut cfg = cfg.clone();
            if let Some(s) = snr {
                cfg.backhaul.avg_snr_db_at_ref = parse_snr(s)?;
            }
            let report = run_pipeline(&cfg).map_err(runtime)?;
            let snr = cfg.backhaul.avg_snr_db_at_ref;
            let mut rows: Vec<Row> = report.per_segment.iter().map(|r| Row::from_result(snr, r)).collect();
            rows.push(Row::from_result(snr, &report.backhaul_e2e));
            let table = csv("pipeline.csv", "snr_db", &rows)?;
            let json = out.join("pipeline_report.json");
            let text = serde_json::to_string_pretty(&report).map_err(runtime)?;
            std::fs::write(&json, text + "\n").map_err(runtime)?;
            Ok(vec![table, json])
        }
        Command::SweepSnr { grid } => {
            let grid = parse_grid(grid, Dimension::Decibel)?;
            let rows = sweep_snr(cfg, &grid).map_err(runtime)?;
            let rows: Vec<Row> = rows.iter().map(Row::from).collect();
            Ok(vec![csv("sweep_snr.csv", "snr_db", &rows)?])
        }
        Command::SweepDistance { hop, grid, snr } => {
            let grid = parse_grid(grid, Dimension::Length)?;
            let snr = snr.as_deref().map(parse_snr).transpose()?.unwrap_or(DISTANCE_SWEEP_SNR_DB);
            let rows = sweep_distance_at(cfg, *hop, &grid, snr).map_err(runtime)?;
            let rows: Vec<Row> = rows.iter().map(Row::from).collect();
            let name = format!("sweep_distance_{}.csv", hop.as_str().to_ascii_lowercase());
            Ok(vec![csv(&name, "d_m", &rows)?])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_grid_has_eleven_points() {
        let g = parse_grid("0:50:5", Dimension::Decibel).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], 50.0);
    }

    #[test]
    fn distance_grid_with_units() {
        let g = parse_grid(DEFAULT_DISTANCE_GRID, Dimension::Length).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], 1000.0);
        assert!((g[5] - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_invalid_grids() {
        assert_eq!(parse_grid("-inf:-inf:1", Dimension::Decibel).unwrap(), vec![f64::NEG_INFINITY]);
        assert_eq!(parse_grid("12", Dimension::Decibel).unwrap(), vec![12.0]);
        for bad in ["0:50", "0:50:0", "50:0:5", "a:b:c", "0:50:-1", "0:1e9:1e-3"] {
            let err = parse_grid(bad, Dimension::Decibel).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
    }
}
