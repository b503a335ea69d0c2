mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ris_track::beamsplit::{phase_grid, SplitMethod};
use ris_track::geometry::build_geometry;
use ris_track::sim::{
    run_sweep, run_tracking, summarize, sweep_angles, Correction, Scenario, TraceRecord, OFF_LABEL,
    TRACE_COLUMNS,
};
use ris_track::uwb::{CorrectionState, DEFAULT_BETA_ANGLE, DEFAULT_BETA_DISTANCE};

use config::ScenarioFile;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// RIS beam tracking simulations driven by UWB position estimates.
#[derive(Debug, Parser)]
#[command(name = "ristrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one scenario key, e.g. `split.beam_count=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, env = "RIS_TRACK_OUT", default_value = "ristrack-out")]
    out: PathBuf,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioFile, CliError> {
        ScenarioFile::load(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track the trajectory; writes trace.csv and summary.json.
    Track(ScenarioArgs),
    /// Stationary sweep of target angles; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Target distance of every swept configuration, meters.
        #[arg(long)]
        distance_m: Option<f64>,
    },
    /// Two-beam phase-matching grids at the trajectory start.
    PhaseGrid(ScenarioArgs),
    /// Apply the momentum correction to a `k,time_s,d_m,nu_deg` stream.
    Correct {
        #[arg(long)]
        input: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BETA_DISTANCE)]
        beta_d: f64,
        #[arg(long, default_value_t = DEFAULT_BETA_ANGLE)]
        beta_nu: f64,
    },
}

fn trace_csv(records: &[TraceRecord]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS).map_err(runtime)?;
    for r in records {
        w.write_record(r.csv_fields()).map_err(runtime)?;
    }
    w.into_inner().map_err(runtime)
}

fn write_outputs(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// The configured method, plus the conventional uncorrected reference when
/// the method differs from it, plus the off-state baseline.
fn track_records(scenario: &Scenario) -> Result<Vec<TraceRecord>, CliError> {
    let mut records = run_tracking(scenario).map_err(runtime)?;
    if scenario.split.is_some() || scenario.correction != Correction::Off {
        let reference = Scenario {
            split: None,
            correction: Correction::Off,
            ..scenario.clone()
        };
        let mut all: Vec<TraceRecord> = run_tracking(&reference)
            .map_err(runtime)?
            .into_iter()
            .filter(|r| r.method != OFF_LABEL)
            .collect();
        all.append(&mut records);
        records = all;
    }
    Ok(records)
}

fn cmd_track(args: &ScenarioArgs) -> Result<(), CliError> {
    let scenario = args.load()?.scenario()?;
    let records = track_records(&scenario)?;
    let summary = summarize(&records, "conventional").map_err(runtime)?;
    let mut json = serde_json::to_vec_pretty(&summary).map_err(runtime)?;
    json.push(b'\n');
    write_outputs(
        &args.out,
        &[("trace.csv", trace_csv(&records)?), ("summary.json", json)],
    )
}

fn cmd_sweep(
    args: &ScenarioArgs,
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
    distance: Option<f64>,
) -> Result<(), CliError> {
    let file = args.load()?;
    let scenario = file.scenario()?;
    let angles = sweep_angles(
        from.unwrap_or(file.sweep.from_deg),
        to.unwrap_or(file.sweep.to_deg),
        step.unwrap_or(file.sweep.step_deg),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let distance = distance.unwrap_or(file.sweep.distance_m);
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(CliError::Config(format!(
            "sweep distance must be positive, got {distance}"
        )));
    }
    let records = run_sweep(&scenario, &angles, distance).map_err(runtime)?;
    write_outputs(&args.out, &[("sweep.csv", trace_csv(&records)?)])
}

fn grid_csv(grid: &[Vec<f64>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for row in grid {
        w.write_record(row.iter().map(f64::to_string))
            .map_err(runtime)?;
    }
    w.into_inner().map_err(runtime)
}

fn cmd_phase_grid(args: &ScenarioArgs) -> Result<(), CliError> {
    let file = args.load()?;
    if file.split.beam_count != 2 {
        return Err(CliError::Config(format!(
            "phase-grid needs split.beam_count = 2, got {}",
            file.split.beam_count
        )));
    }
    let scenario = file.scenario()?;
    let geom = build_geometry(&scenario.layout);
    let setup = scenario.link(&geom).map_err(runtime)?;
    let estimate = scenario.trajectory.start;
    let mut files = Vec::new();
    for (name, method) in [
        ("phase_grid_asm.csv", SplitMethod::Asm),
        ("phase_grid_dsm.csv", SplitMethod::Dsm),
    ] {
        let spec = file.split.spec_for(method)?;
        let grid = phase_grid(&setup, &estimate, &spec, &scenario.phases).map_err(runtime)?;
        files.push((name, grid_csv(&grid)?));
    }
    write_outputs(&args.out, &files)
}

fn cmd_correct(
    input: &Path,
    output: Option<&Path>,
    beta_d: f64,
    beta_nu: f64,
) -> Result<(), CliError> {
    let mut fd = CorrectionState::new(beta_d).map_err(|e| CliError::Config(e.to_string()))?;
    let mut fa = CorrectionState::new(beta_nu).map_err(|e| CliError::Config(e.to_string()))?;
    let bytes =
        fs::read(input).map_err(|e| runtime(format!("cannot read {}: {e}", input.display())))?;

    let mut out = Vec::new();
    if !bytes.iter().all(u8::is_ascii_whitespace) {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(bytes.as_slice());
        let headers = reader.headers().map_err(runtime)?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| runtime(format!("{}: missing column `{name}`", input.display())))
        };
        let (_, _, d_col, nu_col) = (
            column("k")?,
            column("time_s")?,
            column("d_m")?,
            column("nu_deg")?,
        );

        let mut w = csv::Writer::from_writer(&mut out);
        let mut header_out = headers.clone();
        header_out.push_field("d_corr_m");
        header_out.push_field("nu_corr_deg");
        w.write_record(&header_out).map_err(runtime)?;
        for (i, row) in reader.records().enumerate() {
            let row_no = i + 1;
            let row = row.map_err(|e| runtime(format!("row {row_no}: {e}")))?;
            let field = |c: usize, name: &str| -> Result<f64, CliError> {
                row.get(c)
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        runtime(format!("row {row_no}: `{name}` is not a finite number"))
                    })
            };
            let (d, nu) = (field(d_col, "d_m")?, field(nu_col, "nu_deg")?);
            let mut record = row.clone();
            record.push_field(&fd.correct_step(d).to_string());
            record.push_field(&fa.correct_step(nu).to_string());
            w.write_record(&record).map_err(runtime)?;
        }
        w.flush().map_err(runtime)?;
    }
    match output {
        Some(path) => fs::write(path, &out)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout().write_all(&out).map_err(runtime),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Track(args) => cmd_track(args),
        Command::Sweep {
            scenario,
            from,
            to,
            step,
            distance_m,
        } => cmd_sweep(scenario, *from, *to, *step, *distance_m),
        Command::PhaseGrid(args) => cmd_phase_grid(args),
        Command::Correct {
            input,
            output,
            beta_d,
            beta_nu,
        } => cmd_correct(input, output.as_deref(), *beta_d, *beta_nu),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ristrack: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
