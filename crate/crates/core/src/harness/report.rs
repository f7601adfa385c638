//! Method comparison over a scenario suite.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hand_model::HandModel;
use crate::harness::config::RunConfig;
use crate::harness::pipeline::{run_pipeline, PipelineRun};
use crate::harness::scenario::{generate_scenario, ScenarioConfig};
use crate::metrics::{joint_mask, pearson, report, rmse_mae, AngleSeries, MetricsReport};
use crate::palm_frame::HandFrameSample;
use crate::retarget::Method;
use crate::Error as CrateError;

/// One method's angle series, per-frame axis deviation (deg), and the
/// ground truth it is scored against.
#[derive(Clone, Debug)]
pub struct ScoredSeries<'a> {
    pub method: &'a AngleSeries,
    pub gt: &'a AngleSeries,
    pub axis_dev_deg: &'a [f64],
}

/// Metrics over several series at once: every masked sample of every part
/// counts once, as if the series had been concatenated.
pub fn pooled_report(parts: &[ScoredSeries<'_>]) -> Result<MetricsReport> {
    let (mut errors, mut m, mut g, mut dev) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for part in parts {
        if part.axis_dev_deg.len() != part.method.len() {
            return Err(Error::MisalignedSeries);
        }
        let mask = match joint_mask(part.method, part.gt) {
            Ok(mask) => mask,
            Err(Error::EmptyMask) => continue,
            Err(e) => return Err(e),
        };
        for i in mask {
            errors.push(part.method.value[i] - part.gt.value[i]);
            m.push(part.method.value[i]);
            g.push(part.gt.value[i]);
            dev.push(part.axis_dev_deg[i]);
        }
    }
    let (rmse, mae) = rmse_mae(&errors)?;
    let corr = match pearson(&m, &g) {
        Ok(r) => Some(r),
        Err(Error::DegenerateSignal | Error::MisalignedSeries) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        rmse,
        mae,
        corr,
        axis_dev_mean: dev.iter().sum::<f64>() / dev.len() as f64,
        axis_dev_max: dev.iter().copied().fold(0.0, f64::max),
        n_samples: errors.len(),
    })
}

/// Metrics of each method's robot angle against the ground truth.
pub fn compare(runs: &[PipelineRun], gt: &AngleSeries) -> Result<BTreeMap<String, MetricsReport>> {
    if runs.is_empty() {
        return Err(Error::ConfigInvalid("compare needs at least one method".into()));
    }
    let mut out = BTreeMap::new();
    for run in runs {
        let series = run.robot_series()?;
        out.insert(run.method.name().to_owned(), report(&series, gt, &run.axis_deviation_deg())?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub n_frames: usize,
    /// Robot angle against ground truth, per method.
    pub methods: BTreeMap<String, MetricsReport>,
    /// Task-angle estimate against ground truth (method independent).
    pub intent: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// SHA-256 of the configuration and hand model that produced the run.
    pub scenario_digest: String,
    /// Pooled over all scenarios.
    pub methods: BTreeMap<String, MetricsReport>,
    pub intent: MetricsReport,
    pub scenarios: Vec<ScenarioReport>,
}

/// Wall-clock frame time percentiles (ms). Kept apart from [`RunReport`]
/// so that reports stay reproducible byte for byte.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub n_frames: usize,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl TimingStats {
    /// Nearest-rank percentiles; `None` for an empty sample.
    pub fn from_nanos(nanos: &[u64]) -> Option<TimingStats> {
        if nanos.is_empty() {
            return None;
        }
        let mut v = nanos.to_vec();
        v.sort_unstable();
        let rank = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1] as f64 / 1e6;
        Some(TimingStats {
            n_frames: v.len(),
            median_ms: rank(0.5),
            p99_ms: rank(0.99),
            max_ms: *v.last().expect("non-empty") as f64 / 1e6,
        })
    }
}

/// One scenario's generated input and every method's run on it.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub trajectory: Vec<HandFrameSample>,
    pub gt: AngleSeries,
    pub runs: Vec<PipelineRun>,
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    pub report: RunReport,
    pub scenarios: Vec<ScenarioRun>,
}

impl SuiteOutput {
    /// Frame times of refined frames across the suite, per method.
    pub fn refine_timing(&self, method: Method) -> Option<TimingStats> {
        let nanos: Vec<u64> = self
            .scenarios
            .iter()
            .flat_map(|s| s.runs.iter().filter(|r| r.method == method))
            .flat_map(|r| r.traces.iter().filter(|t| t.refined).map(|t| t.nanos))
            .collect();
        TimingStats::from_nanos(&nanos)
    }

    /// Frame times of every frame across the suite, per method.
    pub fn frame_timing(&self, method: Method) -> Option<TimingStats> {
        let nanos: Vec<u64> = self
            .scenarios
            .iter()
            .flat_map(|s| s.runs.iter().filter(|r| r.method == method))
            .flat_map(|r| r.traces.iter().map(|t| t.nanos))
            .collect();
        TimingStats::from_nanos(&nanos)
    }
}

#[derive(Serialize)]
struct DigestInput<'a> {
    config: &'a RunConfig,
    hand_model: String,
}

/// Hex SHA-256 over the configuration (without the model path) and the
/// model parameters.
pub fn scenario_digest(cfg: &RunConfig, model: &HandModel) -> String {
    let config = RunConfig {
        hand_model_path: None,
        ..cfg.clone()
    };
    let input = DigestInput {
        config: &config,
        hand_model: model.to_json_string(),
    };
    let bytes = serde_json::to_vec(&input).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Generates every configured scenario, runs each method on it, and scores
/// the results. Scenarios and methods are processed in order, one at a time.
pub fn run_suite(cfg: &RunConfig, model: &HandModel, methods: &[Method]) -> Result<SuiteOutput> {
    cfg.validate()?;
    if methods.is_empty() {
        return Err(Error::ConfigInvalid("compare needs at least one method".into()));
    }
    let mut scenarios = Vec::with_capacity(cfg.scenario.len());
    for sc in &cfg.scenario {
        let (trajectory, gt) = generate_scenario(sc)?;
        let runs = methods
            .iter()
            .map(|&m| run_pipeline(&trajectory, Some(&gt), m, model, cfg))
            .collect::<Result<Vec<_>>>()?;
        scenarios.push(ScenarioRun {
            config: sc.clone(),
            trajectory,
            gt,
            runs,
        });
    }

    let mut reports = Vec::with_capacity(scenarios.len());
    let mut robot = Vec::new();
    let mut intent = Vec::new();
    for s in &scenarios {
        for run in &s.runs {
            robot.push((run.method, run.robot_series()?, run.axis_deviation_deg()));
        }
        // The human side does not depend on the method.
        intent.push(s.runs[0].intent_series()?);
    }
    let zeros: Vec<Vec<f64>> = scenarios.iter().map(|s| vec![0.0; s.gt.len()]).collect();
    for (k, s) in scenarios.iter().enumerate() {
        let methods = s
            .runs
            .iter()
            .map(|r| Ok((r.method.name().to_owned(), report(&r.robot_series()?, &s.gt, &r.axis_deviation_deg())?)))
            .collect::<Result<BTreeMap<_, _>>>()
            .map_err(|e: CrateError| scenario_context(&s.config.name, e))?;
        let intent_report =
            report(&intent[k], &s.gt, &zeros[k]).map_err(|e| scenario_context(&s.config.name, e))?;
        reports.push(ScenarioReport {
            name: s.config.name.clone(),
            n_frames: s.trajectory.len(),
            methods,
            intent: intent_report,
        });
    }

    let mut pooled = BTreeMap::new();
    for &m in methods {
        let parts: Vec<ScoredSeries<'_>> = robot
            .iter()
            .zip(scenarios.iter().flat_map(|s| s.runs.iter().map(move |_| &s.gt)))
            .filter(|((method, _, _), _)| *method == m)
            .map(|((_, series, dev), gt)| ScoredSeries {
                method: series,
                gt,
                axis_dev_deg: dev,
            })
            .collect();
        pooled.insert(m.name().to_owned(), pooled_report(&parts)?);
    }
    let intent_parts: Vec<ScoredSeries<'_>> = scenarios
        .iter()
        .enumerate()
        .map(|(k, s)| ScoredSeries {
            method: &intent[k],
            gt: &s.gt,
            axis_dev_deg: &zeros[k],
        })
        .collect();

    let report = RunReport {
        scenario_digest: scenario_digest(cfg, model),
        methods: pooled,
        intent: pooled_report(&intent_parts)?,
        scenarios: reports,
    };
    Ok(SuiteOutput { report, scenarios })
}

fn scenario_context(name: &str, e: Error) -> Error {
    match e {
        Error::EmptyMask => Error::InvalidTrajectory(format!("scenario `{name}` has no frame with an active pinch")),
        other => other,
    }
}
