//! Command-line front end: scenario generation, single-method runs, suite
//! comparison and offline metrics.
//!
//! Exit codes: 0 on success, 1 when an input or configuration is invalid,
//! 2 when a run fails.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use twist_retarget::harness::io::{read_gt_csv, read_records_csv, read_trajectory, write_gt_csv, write_records_csv, write_trajectory};
use twist_retarget::harness::{generate_scenario, run_pipeline, run_suite, RunConfig, TimingStats};
use twist_retarget::metrics::{report, AngleSeries};
use twist_retarget::retarget::Method;
use twist_retarget::Error;

#[derive(Parser, Debug)]
#[command(name = "twist-retarget", version, about = "Tripod twist retargeting for a four-finger robot hand")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a trajectory and its ground truth from a scenario.
    Generate {
        /// Run configuration (JSON). Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario to generate; required when the config has several.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Retarget one trajectory with one method and write per-frame records.
    Run {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Ground truth to copy into the records and score against.
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Run every configured scenario with each method and write a report.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "dextwist,vector")]
        methods: Vec<Method>,
        #[arg(long)]
        report: PathBuf,
        /// Also write `<scenario>_<method>.csv` record files here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Print frame-time percentiles to stderr.
        #[arg(long)]
        timing: bool,
    },
    /// Score a record file against a ground-truth file.
    Metrics {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn generate(config: Option<&Path>, scenario: Option<&str>, out: &Path, gt_path: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let sc = match (scenario, cfg.scenario.as_slice()) {
        (Some(name), _) => cfg.find_scenario(name)?,
        (None, [only]) => only,
        (None, many) => {
            let names: Vec<&str> = many.iter().map(|s| s.name.as_str()).collect();
            return Err(Error::ConfigInvalid(format!("config has several scenarios, pick one with --scenario: {}", names.join(", "))).into());
        }
    };
    let (frames, gt) = generate_scenario(sc)?;
    write_trajectory(create(out)?, &frames)?;
    write_gt_csv(create(gt_path)?, &gt)?;
    eprintln!("{}: {} frames -> {}", sc.name, frames.len(), out.display());
    Ok(())
}

fn run(traj: &Path, method: Method, config: Option<&Path>, out: &Path, gt_path: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let model = cfg.hand_model()?;
    let frames = read_trajectory(open(traj)?).with_context(|| format!("reading {}", traj.display()))?;
    let gt = gt_path
        .map(|p| read_gt_csv(open(p)?).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let result = run_pipeline(&frames, gt.as_ref(), method, &model, &cfg)?;
    write_records_csv(create(out)?, &result.records)?;
    if let Some(gt) = &gt {
        let metrics = report(&result.robot_series()?, gt, &result.axis_deviation_deg())?;
        println!("{}", serde_json::to_string_pretty(&metrics)?);
    }
    Ok(())
}

fn compare(config: Option<&Path>, methods: &[Method], report_path: &Path, out_dir: Option<&Path>, timing: bool) -> Result<()> {
    let cfg = load_config(config)?;
    let model = cfg.hand_model()?;
    let mut unique: Vec<Method> = Vec::new();
    for &m in methods {
        if !unique.contains(&m) {
            unique.push(m);
        }
    }
    let methods = unique;
    let suite = run_suite(&cfg, &model, &methods)?;
    let mut w = create(report_path)?;
    serde_json::to_writer_pretty(&mut w, &suite.report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    if let Some(dir) = out_dir {
        for s in &suite.scenarios {
            for r in &s.runs {
                let path = dir.join(format!("{}_{}.csv", s.config.name, r.method));
                write_records_csv(create(&path)?, &r.records)?;
            }
        }
    }
    if timing {
        for &m in &methods {
            let stats = |t: Option<TimingStats>| t.map_or_else(|| "none".to_owned(), |t| serde_json::to_string(&t).unwrap_or_default());
            eprintln!("{m} frames: {}", stats(suite.frame_timing(m)));
            eprintln!("{m} refined frames: {}", stats(suite.refine_timing(m)));
        }
    }
    Ok(())
}

fn metrics(records_path: &Path, gt_path: &Path) -> Result<()> {
    let records = read_records_csv(open(records_path)?).with_context(|| format!("reading {}", records_path.display()))?;
    let gt = read_gt_csv(open(gt_path)?).with_context(|| format!("reading {}", gt_path.display()))?;
    let series = AngleSeries::new(
        records.iter().map(|r| r.t).collect(),
        records.iter().map(|r| r.theta_r_deg.to_radians()).collect(),
        records.iter().map(|r| r.gate_active).collect(),
    )?;
    let dev: Vec<f64> = records.iter().map(|r| r.axis_dev_deg).collect();
    let out = report(&series, &gt, &dev)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

/// The error chain on one line, skipping causes whose text the previous
/// message already carries.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(e) if e.is_validation() => 1,
        _ => 2,
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
    let result = match &cli.command {
        Command::Generate { config, scenario, out, gt } => generate(config.as_deref(), scenario.as_deref(), out, gt),
        Command::Run { traj, method, config, out, gt } => run(traj, *method, config.as_deref(), out, gt.as_deref()),
        Command::Compare { config, methods, report, out_dir, timing } => {
            if methods.is_empty() {
                Err(anyhow!(Error::ConfigInvalid("--methods is empty".into())))
            } else {
                compare(config.as_deref(), methods, report, out_dir.as_deref(), *timing)
            }
        }
        Command::Metrics { records, gt } => metrics(records, gt),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
