//! Per-frame execution of the retargeting pipeline over a trajectory.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::hand_model::{Finger, HandModel, JointVector, NUM_JOINTS};
use crate::harness::config::RunConfig;
use crate::metrics::{axis_deviation, AngleSeries};
use crate::palm_frame::{build_palm_frame, HandFrameSample, INDEX_TIP, MIDDLE_TIP, RING_TIP, THUMB_TIP};
use crate::retarget::{breakdown_for_state, Method, RetargetSession, StepInput};
use crate::robot_tripod::{compute_tripod_state, robot_turn_angle};
use crate::se3::{UnitVec3, Vec3};
use crate::tripod_intent::{build_tool_frame, human_screw_axis, update_gate, update_intent, IntentState};

/// One output row per input frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRecord {
    pub t: f64,
    pub gate_active: bool,
    pub theta_task_deg: f64,
    /// Robot turning progress, accumulated over episodes.
    pub theta_r_deg: f64,
    pub theta_gt_deg: Option<f64>,
    pub axis_dev_deg: f64,
    pub j_total: f64,
    pub j_rot: f64,
    pub j_conn: f64,
    pub j_axis: f64,
    pub j_pos: f64,
    pub q_cmd: [f64; NUM_JOINTS],
}

/// Diagnostics of one frame that are not part of the record file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepTrace {
    pub q_init: JointVector,
    pub refined: bool,
    /// Twist objective before and after refinement.
    pub j_init: Option<f64>,
    pub j_out: Option<f64>,
    /// The frame's keypoints could not be used and the previous output was
    /// repeated.
    pub held: bool,
    /// Wall-clock processing time of the frame.
    pub nanos: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineRun {
    pub method: Method,
    pub records: Vec<FrameRecord>,
    pub traces: Vec<StepTrace>,
}

impl PipelineRun {
    /// Robot angle series (rad) with the gate as the active flag.
    pub fn robot_series(&self) -> Result<AngleSeries> {
        series(&self.records, |r| r.theta_r_deg)
    }

    /// Task angle series (rad) with the gate as the active flag.
    pub fn intent_series(&self) -> Result<AngleSeries> {
        series(&self.records, |r| r.theta_task_deg)
    }

    pub fn axis_deviation_deg(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.axis_dev_deg).collect()
    }
}

pub(crate) fn series(records: &[FrameRecord], value_deg: impl Fn(&FrameRecord) -> f64) -> Result<AngleSeries> {
    AngleSeries::new(
        records.iter().map(|r| r.t).collect(),
        records.iter().map(|r| value_deg(r).to_radians()).collect(),
        records.iter().map(|r| r.gate_active).collect(),
    )
}

/// Stateful pipeline for one trajectory and one method.
#[derive(Clone, Debug)]
pub struct Pipeline {
    cfg: RunConfig,
    session: RetargetSession,
    intent: IntentState,
    theta_r_offset: f64,
    theta_r_last: f64,
    last: Option<FrameRecord>,
}

impl Pipeline {
    pub fn new(model: HandModel, method: Method, cfg: &RunConfig) -> Result<Self> {
        cfg.gate.validate()?;
        cfg.intent.validate()?;
        Ok(Pipeline {
            cfg: cfg.clone(),
            session: RetargetSession::new(model, method, cfg.refine, cfg.baseline)?,
            intent: IntentState::default(),
            theta_r_offset: 0.0,
            theta_r_last: 0.0,
            last: None,
        })
    }

    pub fn intent(&self) -> &IntentState {
        &self.intent
    }

    pub fn session(&self) -> &RetargetSession {
        &self.session
    }

    /// Processes one frame. Frames whose palm frame cannot be built repeat
    /// the previous output with the new timestamp.
    pub fn step(&mut self, sample: &HandFrameSample, theta_gt: Option<f64>) -> (FrameRecord, StepTrace) {
        let start = Instant::now();
        let (mut record, mut trace) = match self.process(sample) {
            Ok(out) => out,
            Err(_) => self.held(sample.t),
        };
        record.theta_gt_deg = theta_gt.map(f64::to_degrees);
        trace.nanos = start.elapsed().as_nanos() as u64;
        self.last = Some(record);
        (record, trace)
    }

    fn held(&self, t: f64) -> (FrameRecord, StepTrace) {
        let q = *self.session.q_prev();
        let record = match self.last {
            Some(prev) => FrameRecord { t, ..prev },
            None => FrameRecord {
                t,
                gate_active: false,
                theta_task_deg: self.intent.theta_task.to_degrees(),
                theta_r_deg: 0.0,
                theta_gt_deg: None,
                axis_dev_deg: 0.0,
                j_total: 0.0,
                j_rot: 0.0,
                j_conn: 0.0,
                j_axis: 0.0,
                j_pos: 0.0,
                q_cmd: q.0,
            },
        };
        let trace = StepTrace {
            q_init: q,
            refined: false,
            j_init: None,
            j_out: None,
            held: true,
            nanos: 0,
        };
        (record, trace)
    }

    fn process(&mut self, sample: &HandFrameSample) -> Result<(FrameRecord, StepTrace)> {
        let palm = build_palm_frame(sample)?;
        let mut tips = BTreeMap::new();
        for (finger, name) in [(Finger::Thumb, THUMB_TIP), (Finger::Index, INDEX_TIP), (Finger::Middle, MIDDLE_TIP)] {
            tips.insert(finger, palm.to_palm(&sample.get(name)?));
        }
        if let Ok(ring) = sample.get(RING_TIP) {
            tips.insert(Finger::Ring, palm.to_palm(&ring));
        }
        let (th, ind, mid) = (tips[&Finger::Thumb], tips[&Finger::Index], tips[&Finger::Middle]);

        let mut intent = self.intent;
        intent.gate = update_gate(intent.gate, (th - ind).norm(), (th - mid).norm(), &self.cfg.gate);
        let active = intent.gate.active;
        let tool = if active {
            let prev = intent.alignment_axis(&self.cfg.intent);
            human_screw_axis(&th, &ind, &mid, &UnitVec3::Z, prev.as_ref())
                .and_then(|axis| build_tool_frame(&th, &ind, &mid, &axis))
                .ok()
        } else {
            None
        };
        self.intent = match update_intent(&intent, tool.as_ref(), &self.cfg.intent, active) {
            Ok(next) => next,
            // A near-half-turn jump between frames is not trusted: keep the
            // previous estimate but still advance the gate.
            Err(Error::NearPiRotation { .. }) => {
                let mut kept = self.intent;
                kept.gate = intent.gate;
                kept
            }
            Err(e) => return Err(e),
        };

        let step = self.session.dextwist_step(&StepInput {
            human_tips: &tips,
            palm_origin: Vec3::zeros(),
            episode: active.then_some(self.intent.gate.episode_id),
            theta_task: self.intent.theta_task,
        });
        if step.latched {
            self.theta_r_offset += self.theta_r_last;
            self.theta_r_last = 0.0;
        }

        let q_cmd = step.output.q_cmd;
        let mut record = FrameRecord {
            t: sample.t,
            gate_active: active,
            theta_task_deg: self.intent.theta_task.to_degrees(),
            theta_r_deg: 0.0,
            theta_gt_deg: None,
            axis_dev_deg: 0.0,
            j_total: 0.0,
            j_rot: 0.0,
            j_conn: 0.0,
            j_axis: 0.0,
            j_pos: 0.0,
            q_cmd: q_cmd.0,
        };
        if let (true, Some(reference)) = (active, self.session.reference()) {
            if let Ok(state) = compute_tripod_state(self.session.model(), &q_cmd, Some(&reference.a_ref)) {
                if let Ok(theta_r) = robot_turn_angle(&state, reference) {
                    self.theta_r_last = theta_r;
                }
                record.axis_dev_deg = axis_deviation(&state.normal, &reference.a_ref);
                let target = self.intent.theta_task - self.session.theta_at_latch();
                if let Ok(b) = breakdown_for_state(&state, reference, target, self.session.refine_config()) {
                    record.j_total = b.total;
                    record.j_rot = b.rot_term;
                    record.j_conn = b.conn_term;
                    record.j_axis = b.axis_term;
                    record.j_pos = b.pos_term;
                }
            }
        }
        record.theta_r_deg = (self.theta_r_offset + self.theta_r_last).to_degrees();

        let trace = StepTrace {
            q_init: step.q_init,
            refined: step.refined,
            j_init: step.output.initial_cost,
            j_out: step.refined.then_some(step.output.cost),
            held: false,
            nanos: 0,
        };
        Ok((record, trace))
    }
}

/// Runs a whole trajectory. `gt`, when given, must have one entry per frame.
pub fn run_pipeline(
    trajectory: &[HandFrameSample],
    gt: Option<&AngleSeries>,
    method: Method,
    model: &HandModel,
    cfg: &RunConfig,
) -> Result<PipelineRun> {
    if let Some(gt) = gt {
        gt.validate()?;
        if gt.len() != trajectory.len() {
            return Err(Error::MisalignedSeries);
        }
    }
    let mut pipeline = Pipeline::new(model.clone(), method, cfg)?;
    let mut records = Vec::with_capacity(trajectory.len());
    let mut traces = Vec::with_capacity(trajectory.len());
    for (k, sample) in trajectory.iter().enumerate() {
        let (record, trace) = pipeline.step(sample, gt.map(|g| g.value[k]));
        records.push(record);
        traces.push(trace);
    }
    Ok(PipelineRun { method, records, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand_model::default_model;
    use crate::harness::scenario::{default_suite, generate_scenario};

    #[test]
    fn empty_trajectory_gives_no_records() {
        let run = run_pipeline(&[], None, Method::DexTwist, &default_model(), &RunConfig::default()).unwrap();
        assert!(run.records.is_empty());
    }

    #[test]
    fn one_record_per_frame_and_misaligned_gt() {
        let (frames, gt) = generate_scenario(&default_suite()[2]).unwrap();
        let cfg = RunConfig::default();
        let run = run_pipeline(&frames, Some(&gt), Method::VectorBaseline, &default_model(), &cfg).unwrap();
        assert_eq!(run.records.len(), frames.len());
        assert!(run.records.iter().all(|r| r.theta_gt_deg.is_some()));
        let short = AngleSeries::new(gt.t[..5].to_vec(), gt.value[..5].to_vec(), gt.active[..5].to_vec()).unwrap();
        assert!(matches!(
            run_pipeline(&frames, Some(&short), Method::DexTwist, &default_model(), &cfg),
            Err(Error::MisalignedSeries)
        ));
    }

    #[test]
    fn degenerate_palm_frame_holds_previous_output() {
        let (mut frames, _) = generate_scenario(&default_suite()[0]).unwrap();
        let wrist = frames[40].get("wrist").unwrap();
        frames[40].keypoints.insert("index_knuckle".into(), wrist);
        let run = run_pipeline(&frames, None, Method::DexTwist, &default_model(), &RunConfig::default()).unwrap();
        assert!(run.traces[40].held);
        assert_eq!(run.records[40].q_cmd, run.records[39].q_cmd);
        assert_eq!(run.records[40].t, frames[40].t);
    }
}
