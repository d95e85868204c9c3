use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use psybench::calibration::{calibrate_mml_em, CalibrationConfig};
use psybench::estimation::ScaleTransform;
use psybench::fixtures::simulate_records;
use psybench::harness::{
    adapter_ingest, assemble_patterns, run_pipeline, write_records, ItemBank, PipelineOptions, PipelineOutput,
};
use psybench::matrix::ResponseMatrix;
use psybench::report::{build_ranking, emit_plot_data, summaries_from_pipeline, PopulationSummary, ScoreMethod};
use psybench::simulation::{simulate_matrix, SimulationSpec};
use psybench::Execution;
use serde::Deserialize;

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_ESTIMATION: u8 = 3;

#[derive(Parser)]
#[command(name = "psybench", version, about = "IRT calibration, proficiency estimation and ranking reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a response matrix (and optionally raw records) from an item bank.
    Simulate(SimulateArgs),
    /// Calibrate an item bank against a response matrix by MML-EM.
    Calibrate(CalibrateArgs),
    /// Score raw response records and estimate proficiency per taker.
    Estimate(EstimateArgs),
    /// Rank populations under percent-correct and IRT scoring and emit plot data.
    Report(ReportArgs),
    /// Check documents without running any estimation.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; every section is optional.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Simulation spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Item bank (JSON). Defaults to the spec's `item_bank`.
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Output response matrix (CSV).
    #[arg(long)]
    matrix: PathBuf,
    /// Output raw response records (CSV), one set per prompt variant.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Output true θ per taker (CSV).
    #[arg(long)]
    thetas: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Item bank (JSON) supplying item formats and starting structure.
    #[arg(long)]
    bank: PathBuf,
    /// Response matrix (CSV).
    #[arg(long)]
    matrix: PathBuf,
    /// Output calibrated bank (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    /// Calibrated item bank (JSON).
    #[arg(long)]
    bank: PathBuf,
    /// Raw response records (CSV).
    #[arg(long)]
    responses: PathBuf,
    /// Output pipeline results (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Pipeline results written by `estimate`.
    #[arg(long)]
    pipeline: PathBuf,
    /// Pre-summarized populations (JSON list of summaries, both methods).
    #[arg(long)]
    populations: Option<PathBuf>,
    /// Output directory for the CSV files and manifest.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Raw response records; requires `--bank`.
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Response matrix; requires `--bank`.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    execution: Execution,
    calibration: CalibrationConfig,
    simulate: SimulateConfig,
    estimate: EstimateConfig,
    report: ReportConfig,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateConfig {
    /// Prompt variants per taker in the records output.
    variants: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { variants: 1 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EstimateConfig {
    scale: Option<ScaleTransform>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ReportConfig {
    /// Taker ids are grouped into populations by the part before this character.
    population_separator: Option<char>,
}

/// Marks a failure as a validation error when no library error is attached.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn load_config(common: &Common) -> anyhow::Result<Config> {
    let Some(path) = &common.config else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: Config = toml::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
    if config.simulate.variants == 0 {
        bail!(Invalid(format!("{}: simulate.variants must be at least 1", path.display())));
    }
    Ok(config)
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_bank(path: &Path) -> anyhow::Result<ItemBank> {
    Ok(ItemBank::load(path)?)
}

fn load_spec(path: &Path) -> anyhow::Result<SimulationSpec> {
    let spec: SimulationSpec = serde_json::from_str(&read_text(path)?).map_err(psybench::Error::from)?;
    spec.validate()?;
    Ok(spec)
}

fn simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let config = load_config(&args.common)?;
    let spec = load_spec(&args.spec)?;
    let bank_path = match (&args.bank, &spec.item_bank) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => args.spec.parent().unwrap_or(Path::new(".")).join(p),
        (None, None) => bail!(Invalid("no item bank: pass --bank or set item_bank in the spec".into())),
    };
    let bank = load_bank(&bank_path)?;
    let data = if let Some(path) = &args.records {
        let (data, records) = simulate_records(&spec, &bank, config.simulate.variants, config.execution)?;
        let mut w = create(path)?;
        write_records(&records, &mut w)?;
        w.flush()?;
        data
    } else {
        simulate_matrix(&spec, bank.item_set(), config.execution)?
    };
    let mut w = create(&args.matrix)?;
    data.matrix.write_csv(&mut w)?;
    w.flush()?;
    if let Some(path) = &args.thetas {
        let mut w = create(path)?;
        writeln!(w, "taker_id,theta")?;
        for (id, theta) in data.matrix.respondents().iter().zip(&data.thetas) {
            writeln!(w, "{id},{theta}")?;
        }
        w.flush()?;
    }
    log::info!("simulated {} takers x {} items", data.matrix.n_respondents(), data.matrix.n_items());
    Ok(())
}

fn calibrate(args: &CalibrateArgs) -> anyhow::Result<()> {
    let config = load_config(&args.common)?;
    let bank = load_bank(&args.bank)?;
    let matrix = ResponseMatrix::read_csv(open(&args.matrix)?, bank.item_set())?;
    let calibration = CalibrationConfig { execution: config.execution, ..config.calibration };
    let result = calibrate_mml_em(&matrix, &calibration)?;
    if !result.converged {
        log::warn!("calibration stopped after {} cycles without converging", result.n_cycles);
    }
    for item in result.items.iter().filter(|i| i.flagged) {
        log::warn!("item {} reached the slope bound", item.params.item_id());
    }
    bank.with_calibration(&result)?.save(&args.out)?;
    log::info!("calibrated {} items in {} cycles", result.items.len(), result.n_cycles);
    Ok(())
}

fn estimate(args: &EstimateArgs) -> anyhow::Result<()> {
    let config = load_config(&args.common)?;
    let bank = load_bank(&args.bank)?;
    let ingest = adapter_ingest(open(&args.responses)?)?;
    for r in &ingest.rejects {
        log::warn!("line {}: {}", r.line, r.reason);
    }
    let options = PipelineOptions { scale: config.estimate.scale, execution: config.execution };
    let mut output = run_pipeline(&bank, &ingest.records, &options)?;
    output.rejects.splice(0..0, ingest.rejects);
    std::fs::write(&args.out, output.to_json()).with_context(|| format!("writing {}", args.out.display()))?;
    let failed: Vec<&str> = output
        .takers
        .iter()
        .filter(|t| t.error.is_some())
        .map(|t| t.taker_id.as_str())
        .collect();
    if !failed.is_empty() {
        bail!(psybench::Error::Pipeline {
            taker_id: failed.join(", "),
            message: "no usable estimate (results for other takers were written)".into(),
        });
    }
    Ok(())
}

fn report(args: &ReportArgs) -> anyhow::Result<()> {
    let config = load_config(&args.common)?;
    let output = PipelineOutput::from_json(&read_text(&args.pipeline)?)?;
    let (mut pc, mut irt) = summaries_from_pipeline(&output, config.report.population_separator, None)?;
    if let Some(path) = &args.populations {
        let given: Vec<PopulationSummary> =
            serde_json::from_str(&read_text(path)?).map_err(psybench::Error::from)?;
        for s in given {
            s.validate()?;
            match s.method {
                ScoreMethod::PercentCorrect => pc.push(s),
                ScoreMethod::Irt => irt.push(s),
            }
        }
    }
    let ranking = build_ranking(pc, irt)?;
    let files = emit_plot_data(&ranking, &args.out_dir)?;
    for d in &ranking.divergence {
        log::info!(
            "{} ranks {} by percent correct and {} by IRT",
            d.population_id, d.rank_percent_correct, d.rank_irt
        );
    }
    log::info!("wrote {}", files.manifest.display());
    Ok(())
}

fn validate(args: &ValidateArgs) -> anyhow::Result<()> {
    load_config(&args.common)?;
    if args.bank.is_none() && args.spec.is_none() {
        bail!(Invalid("nothing to validate: pass --bank and/or --spec".into()));
    }
    if let Some(path) = &args.spec {
        load_spec(path)?;
    }
    let Some(bank_path) = &args.bank else {
        if args.responses.is_some() || args.matrix.is_some() {
            bail!(Invalid("--responses and --matrix need --bank".into()));
        }
        return Ok(());
    };
    let bank = load_bank(bank_path)?;
    if let Some(path) = &args.matrix {
        ResponseMatrix::read_csv(open(path)?, bank.item_set())?.validate()?;
    }
    if let Some(path) = &args.responses {
        let ingest = adapter_ingest(open(path)?)?;
        let assembly = assemble_patterns(&ingest.records, &bank)?;
        let rejects: Vec<String> = ingest
            .rejects
            .iter()
            .chain(&assembly.rejects)
            .map(|r| format!("line {}: {}", r.line, r.reason))
            .collect();
        if !rejects.is_empty() {
            bail!(Invalid(format!("{} rejected records\n{}", rejects.len(), rejects.join("\n"))));
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<psybench::Error>() {
            if e.is_estimation() {
                return EXIT_ESTIMATION;
            }
            if e.is_validation() {
                return EXIT_VALIDATION;
            }
        }
        if cause.downcast_ref::<Invalid>().is_some() {
            return EXIT_VALIDATION;
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Estimate(a) => estimate(a),
        Command::Report(a) => report(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
