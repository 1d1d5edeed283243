//! `kls`: classify source/broadcast-channel models, sweep key-leakage-storage
//! boundaries to CSV, compare boundary curves, and run the random-binning
//! simulator.
//!
//! Exit codes: 0 success, 1 computation error, 2 input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use kls::info::{bsc, product_channel, Channel, ProbVector};
use kls::model::{ClassifyOptions, SourceBcModel};
use kls::osrb::{build_binning, choose_rates, evaluate_exact, evaluate_monte_carlo};
use kls::region::{
    alpha_grid, compare_boundaries, sweep_bsc, sweep_general, GeneralSweepOptions, RegionBoundary,
};

const EXIT_COMPUTE: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "kls",
    version,
    about = "Key-leakage-storage regions and binning simulation"
)]
struct Cli {
    /// Override every seed in configs and defaults.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 keeps the library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a model JSON file into the channel classes with tight regions.
    Classify {
        model: PathBuf,
        /// Simplex grid resolution for the less-noisy search.
        #[arg(long, default_value_t = 10)]
        grid_resolution: usize,
        /// Random aux samples for the less-noisy search.
        #[arg(long, default_value_t = 200)]
        random_samples: usize,
    },
    /// Sweep boundary curves for every scenario in a config; one CSV each.
    Region {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two boundary CSVs at matched alpha grids.
    Compare { a: PathBuf, b: PathBuf },
    /// Run the binning simulator over every (blocklength, seed) in a config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn compute(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_COMPUTE,
            message: message.into(),
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("reading {}: {e}", path.display())))
}

/// Die quietly when a consumer like `head` closes stdout, as Unix tools do.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("kls: setting thread pool: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kls: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify {
            model,
            grid_resolution,
            random_samples,
        } => {
            let text = read_input(&model)?;
            let model = kls::model::model_from_json(&text)
                .map_err(|e| CliError::input(format!("parsing model: {e}")))?;
            let opts = ClassifyOptions {
                grid_resolution,
                random_samples,
                seed: cli.seed.unwrap_or(0),
            };
            let report = model.classify(&opts);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(())
        }
        Command::Region { config, out } => cmd_region(&config, &out),
        Command::Compare { a, b } => cmd_compare(&a, &b),
        Command::Simulate { config, out } => cmd_simulate(&config, &out, cli.seed),
    }
}

// --------------------------------------------------------------------------
// Config schemas
// --------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionConfig {
    alphas: AlphaSpec,
    scenarios: Vec<Scenario>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AlphaSpec {
    List(Vec<f64>),
    Grid { start: f64, stop: f64, count: usize },
}

impl AlphaSpec {
    fn resolve(&self) -> Result<Vec<f64>, CliError> {
        match self {
            AlphaSpec::List(v) => Ok(v.clone()),
            AlphaSpec::Grid { start, stop, count } => alpha_grid(*start, *stop, *count)
                .map_err(|e| CliError::input(format!("alpha grid: {e}"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    name: String,
    #[serde(flatten)]
    model: ModelSpec,
    #[serde(default)]
    sweep: SweepSpec,
}

#[derive(Deserialize)]
struct ModelSpec {
    px: Vec<f64>,
    encoder: Option<ChannelSpec>,
    decoder: Option<ChannelSpec>,
    bc: Option<BcSpec>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChannelSpec {
    Bsc {
        bsc: f64,
        #[serde(default = "one")]
        measurements: usize,
    },
    Rows {
        rows: Vec<Vec<f64>>,
        #[serde(default = "one")]
        measurements: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
struct BcSpec {
    rows: Vec<Vec<f64>>,
    xtilde_size: usize,
    y_size: usize,
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SweepSpec {
    #[default]
    Bsc,
    General {
        u_size: usize,
        grid_resolution: usize,
        random_samples: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl ChannelSpec {
    fn build(&self) -> Result<Channel, CliError> {
        let (base, measurements) = match self {
            ChannelSpec::Bsc {
                bsc: p,
                measurements,
            } => (
                bsc(*p).map_err(|e| CliError::input(format!("bsc channel: {e}")))?,
                *measurements,
            ),
            ChannelSpec::Rows { rows, measurements } => (
                Channel::new(rows.clone())
                    .map_err(|e| CliError::input(format!("channel rows: {e}")))?,
                *measurements,
            ),
        };
        product_channel(&base, measurements)
            .map_err(|e| CliError::input(format!("product channel: {e}")))
    }
}

impl ModelSpec {
    fn build(&self) -> Result<SourceBcModel, CliError> {
        let px =
            ProbVector::new(self.px.clone()).map_err(|e| CliError::input(format!("px: {e}")))?;
        match (&self.bc, &self.encoder, &self.decoder) {
            (Some(bc), None, None) => SourceBcModel::from_correlated_noise(
                px,
                Channel::new(bc.rows.clone())
                    .map_err(|e| CliError::input(format!("bc rows: {e}")))?,
                bc.xtilde_size,
                bc.y_size,
            )
            .map_err(|e| CliError::input(format!("model: {e}"))),
            (None, Some(enc), Some(dec)) => {
                SourceBcModel::from_separate_measurements(px, &enc.build()?, &dec.build()?)
                    .map_err(|e| CliError::input(format!("model: {e}")))
            }
            _ => Err(CliError::input(
                "model needs either `bc` or both `encoder` and `decoder`",
            )),
        }
    }
}

// --------------------------------------------------------------------------
// region
// --------------------------------------------------------------------------

fn cmd_region(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let text = read_input(config_path)?;
    let config: RegionConfig =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("parsing config: {e}")))?;
    if config.scenarios.is_empty() {
        return Err(CliError::input("config has no scenarios"));
    }
    let alphas = config.alphas.resolve()?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input(format!("creating {}: {e}", out_dir.display())))?;

    for scenario in &config.scenarios {
        let model = scenario.model.build()?;
        let mut boundary = match scenario.sweep {
            SweepSpec::Bsc => sweep_bsc(&model, &alphas)
                .map_err(|e| CliError::compute(format!("{}: {e}", scenario.name)))?,
            SweepSpec::General {
                u_size,
                grid_resolution,
                random_samples,
                seed,
            } => sweep_general(
                &model,
                &GeneralSweepOptions {
                    u_size,
                    grid_resolution,
                    random_samples,
                    seed,
                },
            )
            .map_err(|e| CliError::compute(format!("{}: {e}", scenario.name)))?,
        };
        boundary.descriptor = scenario.name.clone();
        let path = out_dir.join(format!("{}.csv", scenario.name));
        fs::write(&path, boundary.to_csv())
            .map_err(|e| CliError::compute(format!("writing {}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

// --------------------------------------------------------------------------
// compare
// --------------------------------------------------------------------------

fn cmd_compare(a_path: &Path, b_path: &Path) -> Result<(), CliError> {
    let stem = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let a = RegionBoundary::from_csv(&stem(a_path), &read_input(a_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", a_path.display())))?;
    let b = RegionBoundary::from_csv(&stem(b_path), &read_input(b_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", b_path.display())))?;
    let report = compare_boundaries(&a, &b)
        .map_err(|e| CliError::compute(format!("comparing boundaries: {e}")))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

// --------------------------------------------------------------------------
// simulate
// --------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    model: ModelSpec,
    /// BSC crossover of the aux channel (binary models).
    alpha: Option<f64>,
    /// Explicit aux rows as an alternative to `alpha`.
    aux_rows: Option<Vec<Vec<f64>>>,
    epsilon: f64,
    blocklengths: Vec<usize>,
    seeds: Vec<u64>,
    mode: ModeSpec,
    trials: Option<u64>,
}

#[derive(Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "snake_case")]
enum ModeSpec {
    Exact,
    MonteCarlo,
}

fn cmd_simulate(
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let text = read_input(config_path)?;
    let config: SimulateConfig =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("parsing config: {e}")))?;
    let config_echo: serde_json::Value = serde_json::from_str(&text).expect("parsed once already");

    let model = config.model.build()?;
    let aux = match (&config.alpha, &config.aux_rows) {
        (Some(alpha), None) => {
            if model.xtilde_size() != 2 {
                return Err(CliError::input("alpha parametrization needs binary X~"));
            }
            bsc(*alpha).map_err(|e| CliError::input(format!("alpha: {e}")))?
        }
        (None, Some(rows)) => {
            Channel::new(rows.clone()).map_err(|e| CliError::input(format!("aux_rows: {e}")))?
        }
        _ => {
            return Err(CliError::input(
                "config needs exactly one of `alpha` or `aux_rows`",
            ))
        }
    };
    let cardinality_bound = model.xtilde_size() + 2;
    if aux.output_size() > cardinality_bound {
        eprintln!(
            "kls: warning: aux alphabet {} exceeds the useful cardinality bound |X~| + 2 = {}",
            aux.output_size(),
            cardinality_bound
        );
    }
    if config.mode == ModeSpec::MonteCarlo && config.trials.is_none() {
        return Err(CliError::input("monte_carlo mode needs `trials`"));
    }
    if config.blocklengths.is_empty() || config.seeds.is_empty() {
        return Err(CliError::input("config needs blocklengths and seeds"));
    }
    let seeds: Vec<u64> = match seed_override {
        Some(s) => vec![s],
        None => config.seeds.clone(),
    };

    let rates = choose_rates(&model, &aux, config.epsilon)
        .map_err(|e| CliError::compute(format!("choosing rates: {e}")))?;

    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input(format!("creating {}: {e}", out_dir.display())))?;

    let mut report_lines = Vec::new();
    let mut runs = Vec::new();
    let mut failures = 0usize;
    for &n in &config.blocklengths {
        for &seed in &seeds {
            let outcome = build_binning(n, aux.output_size(), &rates, seed).and_then(|code| {
                match config.mode {
                    ModeSpec::Exact => evaluate_exact(&code, &model, &aux),
                    ModeSpec::MonteCarlo => evaluate_monte_carlo(
                        &code,
                        &model,
                        &aux,
                        config.trials.expect("checked above"),
                        seed,
                    ),
                }
            });
            match outcome {
                Ok(report) => {
                    let line = serde_json::to_string(&report).expect("report serializes");
                    println!("{line}");
                    report_lines.push(line.clone());
                    runs.push(serde_json::json!({
                        "n": n,
                        "seed": seed,
                        "report": serde_json::from_str::<serde_json::Value>(&line).unwrap(),
                    }));
                }
                Err(e) => {
                    // Per-run failures (guards, epsilon interactions) are
                    // surfaced and the remaining runs continue.
                    eprintln!("kls: run n={n} seed={seed}: {e}");
                    failures += 1;
                    runs.push(serde_json::json!({
                        "n": n,
                        "seed": seed,
                        "error": e.to_string(),
                    }));
                }
            }
        }
    }

    let reports_path = out_dir.join("reports.jsonl");
    fs::write(&reports_path, report_lines.join("\n") + "\n")
        .map_err(|e| CliError::compute(format!("writing {}: {e}", reports_path.display())))?;
    let manifest = serde_json::json!({
        "config": config_echo,
        "rates": rates,
        "runs": runs,
    });
    let manifest_path = out_dir.join("manifest.json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("serializes"),
    )
    .map_err(|e| CliError::compute(format!("writing {}: {e}", manifest_path.display())))?;

    if failures > 0 {
        Err(CliError::compute(format!(
            "{failures} run(s) failed; see manifest"
        )))
    } else {
        Ok(())
    }
}
