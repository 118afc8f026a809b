//! `pantilt`: runs tracking scenarios, compares control variants and checks
//! the fusion kernels.
//!
//! Exit statuses: 0 success, 1 I/O or unexpected failure, 2 scenario parse
//! error, 3 configuration error, 4 fusion invariant violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pantilt::fusion::check::{run_fusion_checks, CheckSizes};
use pantilt::sim::{compare, run_scenario, Metrics, Scenario, ScenarioFile, Trace};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "PANTILT_OUT_DIR";

#[derive(Parser)]
#[command(name = "pantilt", version, about = "Pan-tilt tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every scenario in a file and write traces plus metrics.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory [default: $PANTILT_OUT_DIR or the current directory].
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Replaces the seed of every scenario in the file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run a baseline and a candidate that differ only in control settings
    /// and report paired metrics and the efficiency η.
    Compare {
        baseline: PathBuf,
        candidate: PathBuf,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Replaces the seed of both runs.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the fusion invariant and oracle suite.
    FusionCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        channels: usize,
        #[arg(long, default_value_t = 2)]
        height: usize,
        #[arg(long, default_value_t = 2)]
        width: usize,
        #[arg(long, default_value_t = 2)]
        heads: usize,
        /// Negative control: perturb the reference implementations.
        #[arg(long, hide = true)]
        perturb_oracle: bool,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Core(#[from] pantilt::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("fusion invariant violated: {}", .0.join(", "))]
    Invariant(Vec<String>),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(pantilt::Error::Parse { .. }) => 2,
            CliError::Core(pantilt::Error::Config(_)) => 3,
            CliError::Invariant(_) => 4,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Vec<Scenario>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut scenarios = ScenarioFile::from_toml_str(&text)?.scenarios;
    if let Some(seed) = seed {
        scenarios.iter_mut().for_each(|s| s.seed = seed);
    }
    Ok(scenarios)
}

/// Load exactly one scenario.
fn load_one(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut all = load(path, seed)?;
    if all.len() != 1 {
        return Err(pantilt::Error::Config(format!(
            "{}: compare needs exactly one scenario per file, found {}",
            path.display(),
            all.len()
        ))
        .into());
    }
    Ok(all.remove(0))
}

/// Runs scenarios on worker threads; results keep input order.
fn run_all(scenarios: &[Scenario]) -> Result<Vec<Trace>, CliError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios.iter().map(|s| scope.spawn(move || run_scenario(s))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario worker panicked").map_err(CliError::from)).collect()
    })
}

fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("."))
}

/// Writes every file or none: contents go to temporaries first and are
/// renamed into place once all writes succeeded.
fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged = Vec::new();
    let result = (|| {
        for (name, contents) in files {
            let tmp = dir.join(format!(".{name}.partial"));
            staged.push(tmp.clone());
            fs::write(&tmp, contents).map_err(io_err(&tmp))?;
        }
        for ((name, _), tmp) in files.iter().zip(&staged) {
            let dest = dir.join(name);
            fs::rename(tmp, &dest).map_err(io_err(&dest))?;
        }
        Ok(())
    })();
    if result.is_err() {
        for tmp in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}

fn to_json(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("metrics serialise to JSON") + "\n"
}

fn cmd_run(scenario: &Path, out: Option<PathBuf>, seed: Option<u64>, format: Format) -> Result<(), CliError> {
    let scenarios = load(scenario, seed)?;
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    if let Some(s) = scenarios.iter().find(|s| format!("{}.{ext}", s.name) == "metrics.json") {
        return Err(pantilt::Error::Config(format!("scenario name '{}' collides with metrics.json", s.name)).into());
    }
    let traces = run_all(&scenarios)?;

    let mut files = Vec::new();
    let mut summary = serde_json::Map::new();
    for (s, trace) in scenarios.iter().zip(&traces) {
        let body = match format {
            Format::Csv => trace.to_csv(),
            Format::Json => trace.to_json() + "\n",
        };
        files.push((format!("{}.{ext}", s.name), body));
        let metrics = Metrics::from_trace(trace)?;
        summary.insert(s.name.clone(), json!({ "seed": s.seed, "metrics": metrics }));
    }
    files.push(("metrics.json".into(), to_json(&summary.into())));

    let dir = out_dir(out);
    write_all(&dir, &files)?;
    for (name, _) in &files {
        println!("{}", dir.join(name).display());
    }
    Ok(())
}

fn cmd_compare(baseline: &Path, candidate: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let base = load_one(baseline, seed)?;
    let cand = load_one(candidate, seed)?;
    if !base.same_setup(&cand) {
        return Err(pantilt::Error::Config(format!(
            "{} and {} differ beyond control settings; refusing to compare",
            baseline.display(),
            candidate.display()
        ))
        .into());
    }
    let traces = run_all(&[base.clone(), cand.clone()])?;
    let c = compare(&traces[0], &traces[1])?;
    let report = json!({
        "baseline": { "name": base.name, "seed": base.seed, "metrics": c.baseline },
        "candidate": { "name": cand.name, "seed": cand.seed, "metrics": c.candidate },
        "settle_time_s": { "baseline": c.baseline.settle_time_s, "candidate": c.candidate.settle_time_s },
        "eta_percent": c.candidate.eta_vs,
        "jitter_delta_us": c.jitter_delta_us,
        "rms_delta_px": c.rms_delta_px,
    });
    let text = to_json(&report);
    write_all(&out_dir(out), &[("compare.json".into(), text.clone())])?;
    print!("{text}");
    Ok(())
}

fn cmd_fusion_check(seed: u64, sizes: CheckSizes, perturb: bool) -> Result<(), CliError> {
    let report = run_fusion_checks(seed, &sizes, perturb)?;
    print!("{}", to_json(&json!(report)));
    let failed: Vec<String> = report.failures().map(|c| c.name.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(failed))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, seed, format } => cmd_run(&scenario, out, seed, format),
        Command::Compare { baseline, candidate, out, seed } => cmd_compare(&baseline, &candidate, out, seed),
        Command::FusionCheck { seed, channels, height, width, heads, perturb_oracle } => {
            cmd_fusion_check(seed, CheckSizes { channels, height, width, heads }, perturb_oracle)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pantilt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
