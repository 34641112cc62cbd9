//! `zblb` command-line tool: compress/decompress raw grids, evaluate the
//! closed-form bias predictor, and run the Monte Carlo experiments.
//!
//! Exit codes: 0 ok, 2 argument parse error, 3 configuration error,
//! 4 runtime error. Data goes to stdout (or files); logs and error JSON
//! go to stderr.

mod raw;

use clap::{Args, Parser, Subcommand};
use raw::{Dtype, RawGrid};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use zblb::bias::predict_total_bias;
use zblb::codec::{compress_grid, decompress_grid, CodecConfig, CodecError, Rounding};
use zblb::container::Container;
use zblb::harness::{
    autocorrelation, autocorrelation_norm, bitplane_randomness, gen_block, rng_for,
    run_bias_experiment, run_distribution_experiment, HarnessError, SyntheticBlockSpec,
};

#[derive(Parser)]
#[command(name = "zblb", version, about = "block-based lossy floating-point codec")]
struct Cli {
    /// Worker threads for block-parallel work (0 = all cores). Results
    /// are independent of this setting.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

fn parse_rounding(s: &str) -> Result<Rounding, String> {
    s.parse()
}

/// Shared pipeline parameters for the experiment commands.
#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value_t = 1)]
    d: u8,
    #[arg(long, default_value_t = 24)]
    k: u8,
    #[arg(long, default_value_t = 30)]
    q: u8,
    #[arg(long, value_parser = parse_rounding, default_value = "never")]
    mode: Rounding,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a ZRAW grid into a ZBLB container.
    Compress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Number of retained bit planes.
        #[arg(long)]
        precision: u16,
        #[arg(long, value_parser = parse_rounding, default_value = "never")]
        mode: Rounding,
    },
    /// Decompress a ZBLB container back to a ZRAW grid.
    Decompress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the closed-form bias prediction as JSON.
    Predict {
        #[command(flatten)]
        pipe: PipelineArgs,
        #[arg(long)]
        beta: u16,
        #[arg(long)]
        emax: i32,
    },
    /// Monte Carlo bias experiment over a beta sweep.
    Simulate {
        #[command(flatten)]
        pipe: PipelineArgs,
        #[arg(long, allow_hyphen_values = true)]
        emin: i32,
        #[arg(long, default_value_t = 0)]
        rho: u32,
        /// Betas: comma list (6,9,12) or inclusive range (6..20).
        #[arg(long)]
        betas: String,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Output format: json or csv.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Per-position quantization-error distribution at a fixed tolerance.
    Distribution {
        #[command(flatten)]
        pipe: PipelineArgs,
        #[arg(long, allow_hyphen_values = true)]
        emin: i32,
        #[arg(long, default_value_t = 0)]
        rho: u32,
        #[arg(long)]
        tolerance: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Normalized circular autocorrelation of a ZRAW field.
    Autocorr {
        #[arg(long)]
        input: PathBuf,
        /// Optional output field (ZRAW, f64).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Bit-plane one-frequency statistics over synthetic blocks.
    Bitstats {
        #[command(flatten)]
        pipe: PipelineArgs,
        #[arg(long, allow_hyphen_values = true)]
        emin: i32,
        #[arg(long, default_value_t = 0)]
        rho: u32,
        #[arg(long)]
        blocks: u64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Codec(c) => c.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn read_raw(path: &PathBuf) -> Result<RawGrid, CliError> {
    let bytes = std::fs::read(path)?;
    RawGrid::deserialize(&bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

fn parse_betas(s: &str) -> Result<Vec<u16>, CliError> {
    let bad = |m: &str| CliError::Config(format!("bad --betas {s:?}: {m}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u16 = a.trim().parse().map_err(|_| bad("range start"))?;
        let b: u16 = b.trim().parse().map_err(|_| bad("range end"))?;
        if a > b {
            return Err(bad("empty range"));
        }
        Ok((a..=b).collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad("list entry")))
            .collect()
    }
}

fn dtype_params(dtype: Dtype) -> (u8, u8) {
    match dtype {
        Dtype::F32 => (24, 30),
        Dtype::F64 => (53, 62),
    }
}

#[derive(Serialize)]
struct CompressSummary {
    config: CodecConfig,
    dims: [usize; 3],
    blocks: usize,
    compressed_bytes: usize,
    bits_per_value: f64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compress { input, output, precision, mode } => {
            let grid = read_raw(&input)?;
            let (k, q) = dtype_params(grid.dtype);
            let config =
                CodecConfig { d: grid.ndims, k, q, beta: precision, rounding: mode };
            config.validate()?;
            let blocks = compress_grid(&grid.data, grid.dims, &config)?;
            let container = Container { config, dims: grid.dims, blocks };
            let bytes = container.serialize();
            std::fs::write(&output, &bytes)?;
            let summary = CompressSummary {
                config,
                dims: grid.dims,
                blocks: container.blocks.len(),
                compressed_bytes: bytes.len(),
                bits_per_value: bytes.len() as f64 * 8.0 / grid.data.len() as f64,
            };
            println!("{}", serde_json::to_string(&summary).unwrap());
        }
        Command::Decompress { input, output } => {
            let bytes = std::fs::read(&input)?;
            let container =
                Container::deserialize(&bytes).map_err(|e| CliError::Runtime(e.to_string()))?;
            let data = decompress_grid(&container.blocks, container.dims, &container.config);
            let dtype = if container.config.k <= 24 { Dtype::F32 } else { Dtype::F64 };
            let ndims = container.config.d;
            let grid = RawGrid { dtype, ndims, dims: container.dims, data };
            std::fs::write(&output, grid.serialize())?;
        }
        Command::Predict { pipe, beta, emax } => {
            let cfg = CodecConfig { d: pipe.d, k: pipe.k, q: pipe.q, beta, rounding: pipe.mode };
            cfg.validate()?;
            let p = predict_total_bias(&cfg, emax)
                .map_err(|e| CliError::Config(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&p).unwrap());
        }
        Command::Simulate { pipe, emin, rho, betas, trials, seed, format } => {
            let betas = parse_betas(&betas)?;
            if trials == 0 {
                return Err(CliError::Config("--trials must be positive".into()));
            }
            let mut reports = Vec::new();
            for beta in betas {
                let cfg =
                    CodecConfig { d: pipe.d, k: pipe.k, q: pipe.q, beta, rounding: pipe.mode };
                cfg.validate()?;
                let spec = SyntheticBlockSpec { d: pipe.d, e_min: emin, rho, trials, seed };
                reports.push(run_bias_experiment(&spec, &cfg)?);
            }
            match format.as_str() {
                "json" => println!("{}", serde_json::to_string_pretty(&reports).unwrap()),
                "csv" => {
                    println!(
                        "beta,element,observed_mean,observed_std_err,predicted_mean,ratio,relative_error,floor_masked"
                    );
                    for r in &reports {
                        for i in 0..r.observed_mean.len() {
                            println!(
                                "{},{},{:e},{:e},{:e},{},{},{}",
                                r.config.beta,
                                i,
                                r.observed_mean[i],
                                r.observed_std_err[i],
                                r.predicted_mean[i],
                                r.ratio[i],
                                r.relative_error[i],
                                r.floor_masked[i]
                            );
                        }
                    }
                }
                other => {
                    return Err(CliError::Config(format!("unknown format {other:?} (json|csv)")))
                }
            }
        }
        Command::Distribution { pipe, emin, rho, tolerance, trials, seed } => {
            if !(tolerance > 0.0) {
                return Err(CliError::Config("--tolerance must be positive".into()));
            }
            let cfg = CodecConfig { d: pipe.d, k: pipe.k, q: pipe.q, beta: 0, rounding: pipe.mode };
            let spec = SyntheticBlockSpec { d: pipe.d, e_min: emin, rho, trials, seed };
            let report = run_distribution_experiment(&spec, &cfg, tolerance)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
        }
        Command::Autocorr { input, output } => {
            let grid = read_raw(&input)?;
            let r = autocorrelation(&grid.data, grid.dims)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let norm = autocorrelation_norm(&r);
            if let Some(path) = output {
                let out = RawGrid { dtype: Dtype::F64, ndims: grid.ndims, dims: grid.dims, data: r.clone() };
                std::fs::write(&path, out.serialize())?;
            }
            println!(
                "{}",
                serde_json::json!({ "center": r[0], "off_center_norm": norm, "dims": grid.dims })
            );
        }
        Command::Bitstats { pipe, emin, rho, blocks, seed } => {
            let cfg = CodecConfig { d: pipe.d, k: pipe.k, q: pipe.q, beta: 0, rounding: pipe.mode };
            cfg.validate()?;
            let spec = SyntheticBlockSpec { d: pipe.d, e_min: emin, rho, trials: blocks, seed };
            let mut rng = rng_for(seed, 0);
            let blocks: Vec<Vec<f64>> =
                (0..blocks).map(|_| gen_block(&spec, cfg.k as u32, &mut rng)).collect();
            let stats = bitplane_randomness(&blocks, &cfg)?;
            println!("{}", serde_json::to_string(&stats).unwrap());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Config(m) => ("config", m),
                CliError::Runtime(m) => ("runtime", m),
            };
            eprintln!("{}", serde_json::json!({ "error": msg, "kind": kind }));
            ExitCode::from(e.exit_code())
        }
    }
}
