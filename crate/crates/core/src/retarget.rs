//! Joint-space retargeting: the twist refinement and the vector baseline.
//!
//! Both retargeters run the same solver: a fixed number of gradient-descent
//! steps with central-difference gradients, a per-component clip on each
//! update, clamping to joint limits, and a best-iterate return rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand_model::{Finger, HandModel, JointVector, NUM_JOINTS};
use crate::robot_tripod::{robot_turn_angle, RobotTripodState, TripodReference};
use crate::se3::Vec3;

/// Kinematics seen by the twist objective: where the three tripod tips are
/// for a joint vector, and which joints the refinement may move.
pub trait TripodKinematics {
    fn tripod_tips(&self, q: &JointVector) -> [Vec3; 3];
    fn limits(&self, joint: usize) -> (f64, f64);
    fn refine_joints(&self) -> Vec<usize>;

    fn clamp(&self, q: &JointVector) -> JointVector {
        let mut out = *q;
        for i in 0..NUM_JOINTS {
            let (lo, hi) = self.limits(i);
            out[i] = out[i].clamp(lo, hi);
        }
        out
    }
}

impl TripodKinematics for HandModel {
    fn tripod_tips(&self, q: &JointVector) -> [Vec3; 3] {
        self.fk_tripod(q)
    }

    fn limits(&self, joint: usize) -> (f64, f64) {
        HandModel::limits(self, joint)
    }

    fn refine_joints(&self) -> Vec<usize> {
        HandModel::tripod_joints()
    }
}

/// Settings of the shared finite-difference descent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentSettings {
    pub iterations: usize,
    pub fd_step: f64,
    pub step_size: f64,
    pub per_iter_clip: f64,
}

impl DescentSettings {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::ConfigInvalid("iterations must be >= 1".into()));
        }
        for (name, v) in [
            ("fd_step", self.fd_step),
            ("step_size", self.step_size),
            ("per_iter_clip", self.per_iter_clip),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConfigInvalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Central-difference gradient of `f` over the `free` components of `q`.
/// Components whose probes are not finite get a zero entry.
pub fn central_gradient<F>(f: &F, q: &JointVector, free: &[usize], h: f64) -> [f64; NUM_JOINTS]
where
    F: Fn(&JointVector) -> f64,
{
    let mut grad = [0.0; NUM_JOINTS];
    let mut probe = *q;
    for &i in free {
        probe[i] = q[i] + h;
        let plus = f(&probe);
        probe[i] = q[i] - h;
        let minus = f(&probe);
        probe[i] = q[i];
        let g = (plus - minus) / (2.0 * h);
        grad[i] = if g.is_finite() { g } else { 0.0 };
    }
    grad
}

/// Runs exactly `settings.iterations` clipped, limit-clamped descent steps
/// and returns the best iterate visited (the start point included) with its
/// cost. Points where `f` is not finite never win.
pub fn minimize_fd<F, L>(
    f: F,
    q0: &JointVector,
    free: &[usize],
    limits: L,
    settings: &DescentSettings,
) -> (JointVector, f64)
where
    F: Fn(&JointVector) -> f64,
    L: Fn(usize) -> (f64, f64),
{
    let mut q = *q0;
    let mut best = (q, f(&q));
    for _ in 0..settings.iterations {
        let grad = central_gradient(&f, &q, free, settings.fd_step);
        for &i in free {
            let dq = (-settings.step_size * grad[i]).clamp(-settings.per_iter_clip, settings.per_iter_clip);
            let (lo, hi) = limits(i);
            q[i] = (q[i] + dq).clamp(lo, hi);
        }
        let cost = f(&q);
        if cost < best.1 || !best.1.is_finite() && cost.is_finite() {
            best = (q, cost);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineConfig {
    pub w_rot: f64,
    pub w_conn: f64,
    pub w_axis: f64,
    pub w_pos: f64,
    pub iterations: usize,
    /// Central-difference probe (rad).
    pub fd_step: f64,
    /// Joint step per unit gradient. The default is 0.9 / (2 w_rot): a slightly
    /// damped version of the step that solves the angle term in one iteration
    /// when a single joint spins the tripod directly.
    pub step_size: f64,
    /// Bound on each joint update per iteration (rad).
    pub per_iter_clip: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            w_rot: 1.0,
            w_conn: 200.0,
            w_axis: 1.0,
            w_pos: 400.0,
            iterations: 5,
            fd_step: 1e-3,
            step_size: 0.45,
            per_iter_clip: 0.05,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_rot", self.w_rot),
            ("w_conn", self.w_conn),
            ("w_axis", self.w_axis),
            ("w_pos", self.w_pos),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::ConfigInvalid(format!("{name} must be non-negative, got {w}")));
            }
        }
        self.descent().validate()
    }

    pub fn descent(&self) -> DescentSettings {
        DescentSettings {
            iterations: self.iterations,
            fd_step: self.fd_step,
            step_size: self.step_size,
            per_iter_clip: self.per_iter_clip,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub total: f64,
    pub rot_term: f64,
    pub conn_term: f64,
    pub axis_term: f64,
    pub pos_term: f64,
}

/// Virtual-object cost of the tripod at `q` against a latched reference.
///
/// `theta_target` is the turning angle the tool frame should show relative
/// to the reference. The tripod normal is sign-aligned with the reference
/// axis.
pub fn objective<K: TripodKinematics + ?Sized>(
    kin: &K,
    q: &JointVector,
    reference: &TripodReference,
    theta_target: f64,
    cfg: &RefineConfig,
) -> Result<ObjectiveBreakdown> {
    let state = RobotTripodState::from_tips(kin.tripod_tips(q), Some(&reference.a_ref))?;
    Ok(breakdown_for_state(&state, reference, theta_target, cfg)?)
}

pub fn breakdown_for_state(
    state: &RobotTripodState,
    reference: &TripodReference,
    theta_target: f64,
    cfg: &RefineConfig,
) -> Result<ObjectiveBreakdown> {
    let theta_r = robot_turn_angle(state, reference)?;
    let rot_term = cfg.w_rot * (theta_r - theta_target).powi(2);
    let closure_sq: f64 = state
        .closure
        .iter()
        .zip(reference.e_ref.iter())
        .map(|(e, r)| (e - r).powi(2))
        .sum();
    let conn_term = cfg.w_conn * closure_sq;
    let cos = state.normal.dot(&reference.a_ref);
    let axis_term = cfg.w_axis * (1.0 - cos * cos).max(0.0);
    let pos_term = cfg.w_pos * (state.centroid - reference.c_ref).norm_squared();
    Ok(ObjectiveBreakdown {
        total: rot_term + conn_term + axis_term + pos_term,
        rot_term,
        conn_term,
        axis_term,
        pos_term,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetargetOutput {
    pub q_cmd: JointVector,
    /// Final value of the objective that was minimized.
    pub cost: f64,
    /// Twist objective at the starting configuration; present for
    /// refinement outputs.
    pub initial_cost: Option<f64>,
    /// Twist-objective terms; present for refinement outputs.
    pub breakdown: Option<ObjectiveBreakdown>,
    pub iterations_used: usize,
}

/// Residual refinement of the tripod joints toward `theta_target`.
///
/// Fails only when the tripod at `q_init` is degenerate; callers then keep
/// the unrefined configuration.
pub fn refine<K: TripodKinematics + ?Sized>(
    kin: &K,
    q_init: &JointVector,
    reference: &TripodReference,
    theta_target: f64,
    cfg: &RefineConfig,
) -> Result<RetargetOutput> {
    let at_init = objective(kin, q_init, reference, theta_target, cfg)?;
    let cost = |q: &JointVector| {
        objective(kin, q, reference, theta_target, cfg)
            .map(|b| b.total)
            .unwrap_or(f64::INFINITY)
    };
    let free = kin.refine_joints();
    let (q_best, best) = minimize_fd(cost, q_init, &free, |i| kin.limits(i), &cfg.descent());
    let breakdown = if best < at_init.total {
        objective(kin, &q_best, reference, theta_target, cfg)?
    } else {
        at_init
    };
    Ok(RetargetOutput {
        q_cmd: if best < at_init.total { q_best } else { *q_init },
        cost: breakdown.total,
        initial_cost: Some(at_init.total),
        breakdown: Some(breakdown),
        iterations_used: cfg.iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VectorRetargetConfig {
    /// Human-to-robot vector scaling.
    pub scale: f64,
    pub iterations: usize,
    pub step_size: f64,
    pub fd_step: f64,
    pub per_iter_clip: f64,
}

impl Default for VectorRetargetConfig {
    fn default() -> Self {
        VectorRetargetConfig {
            scale: 1.0,
            iterations: 20,
            step_size: 20.0,
            fd_step: 1e-3,
            per_iter_clip: 0.05,
        }
    }
}

impl VectorRetargetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 5.0) {
            return Err(Error::ConfigInvalid(format!(
                "vector scale must lie in (0, 5], got {}",
                self.scale
            )));
        }
        self.descent().validate()
    }

    pub fn descent(&self) -> DescentSettings {
        DescentSettings {
            iterations: self.iterations,
            fd_step: self.fd_step,
            step_size: self.step_size,
            per_iter_clip: self.per_iter_clip,
        }
    }
}

const TRIPOD_PAIRS: [(Finger, Finger); 3] = [
    (Finger::Thumb, Finger::Index),
    (Finger::Thumb, Finger::Middle),
    (Finger::Index, Finger::Middle),
];

/// Sum of squared differences between scaled human task-space vectors and
/// the robot's: palm origin to each available fingertip, plus the three
/// tripod tip-to-tip vectors.
pub fn vector_cost(
    human_tips: &BTreeMap<Finger, Vec3>,
    palm_origin: &Vec3,
    model: &HandModel,
    q: &JointVector,
    scale: f64,
) -> f64 {
    let robot = model.fk_fingertips(q);
    let mut cost = 0.0;
    for (finger, tip) in human_tips {
        let target = (tip - palm_origin) * scale;
        cost += (target - robot.get(*finger)).norm_squared();
    }
    for (a, b) in TRIPOD_PAIRS {
        if let (Some(ha), Some(hb)) = (human_tips.get(&a), human_tips.get(&b)) {
            let target = (hb - ha) * scale;
            cost += (target - (robot.get(b) - robot.get(a))).norm_squared();
        }
    }
    cost
}

/// Vector-retargeting baseline over all 16 joints, warm-started at `q_prev`.
pub fn vector_retarget(
    human_tips: &BTreeMap<Finger, Vec3>,
    palm_origin: &Vec3,
    model: &HandModel,
    q_prev: &JointVector,
    cfg: &VectorRetargetConfig,
) -> RetargetOutput {
    let usable = !human_tips.is_empty()
        && palm_origin.iter().all(|c| c.is_finite())
        && human_tips.values().all(|p| p.iter().all(|c| c.is_finite()));
    if !usable {
        return RetargetOutput {
            q_cmd: *q_prev,
            cost: f64::NAN,
            initial_cost: None,
            breakdown: None,
            iterations_used: 0,
        };
    }
    let cost = |q: &JointVector| vector_cost(human_tips, palm_origin, model, q, cfg.scale);
    let free: Vec<usize> = (0..NUM_JOINTS).collect();
    let (q_cmd, cost) = minimize_fd(cost, q_prev, &free, |i| model.limits(i), &cfg.descent());
    RetargetOutput {
        q_cmd,
        cost,
        initial_cost: None,
        breakdown: None,
        iterations_used: cfg.iterations,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "dextwist")]
    DexTwist,
    #[serde(rename = "vector")]
    VectorBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::DexTwist => "dextwist",
            Method::VectorBaseline => "vector",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dextwist" => Ok(Method::DexTwist),
            "vector" | "vector_baseline" => Ok(Method::VectorBaseline),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-frame inputs of a retarget session.
#[derive(Clone, Copy, Debug)]
pub struct StepInput<'a> {
    /// Human fingertips in the human palm frame.
    pub human_tips: &'a BTreeMap<Finger, Vec3>,
    pub palm_origin: Vec3,
    /// Current episode when the pinch gate is active.
    pub episode: Option<u64>,
    pub theta_task: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutput {
    pub output: RetargetOutput,
    /// Vector-retargeted configuration the step started from.
    pub q_init: JointVector,
    /// Refinement ran (as opposed to plain vector retargeting).
    pub refined: bool,
    /// A new reference was latched on this frame.
    pub latched: bool,
}

/// Stateful per-trajectory retargeter.
///
/// Holds the previous command and the tripod reference of the current
/// episode. On each activation the reference is re-latched and the task
/// angle at that moment is remembered, so the refinement target is the task
/// angle gained since the latch.
#[derive(Clone, Debug)]
pub struct RetargetSession {
    model: HandModel,
    method: Method,
    refine_cfg: RefineConfig,
    vector_cfg: VectorRetargetConfig,
    q_prev: JointVector,
    reference: Option<(u64, TripodReference)>,
    theta_at_latch: f64,
}

impl RetargetSession {
    pub fn new(
        model: HandModel,
        method: Method,
        refine_cfg: RefineConfig,
        vector_cfg: VectorRetargetConfig,
    ) -> Result<Self> {
        refine_cfg.validate()?;
        vector_cfg.validate()?;
        let q_prev = model.clamp_to_limits(&JointVector::zeros());
        Ok(RetargetSession {
            model,
            method,
            refine_cfg,
            vector_cfg,
            q_prev,
            reference: None,
            theta_at_latch: 0.0,
        })
    }

    pub fn model(&self) -> &HandModel {
        &self.model
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn q_prev(&self) -> &JointVector {
        &self.q_prev
    }

    /// Reference of the current (or most recent) episode.
    pub fn reference(&self) -> Option<&TripodReference> {
        self.reference.as_ref().map(|(_, r)| r)
    }

    pub fn theta_at_latch(&self) -> f64 {
        self.theta_at_latch
    }

    pub fn refine_config(&self) -> &RefineConfig {
        &self.refine_cfg
    }

    /// One control cycle.
    pub fn dextwist_step(&mut self, input: &StepInput<'_>) -> StepOutput {
        let nominal = vector_retarget(
            input.human_tips,
            &input.palm_origin,
            &self.model,
            &self.q_prev,
            &self.vector_cfg,
        );
        let q_init = nominal.q_cmd;
        let mut step = StepOutput {
            output: nominal,
            q_init,
            refined: false,
            latched: false,
        };

        if let Some(episode) = input.episode {
            let current = matches!(self.reference, Some((id, _)) if id == episode);
            if !current {
                if let Ok(state) = RobotTripodState::from_tips(self.model.fk_tripod(&q_init), None) {
                    self.reference = Some((episode, crate::robot_tripod::latch_reference(&state)));
                    self.theta_at_latch = input.theta_task;
                    step.latched = true;
                }
            } else if self.method == Method::DexTwist {
                let (_, reference) = self.reference.expect("checked above");
                let target = input.theta_task - self.theta_at_latch;
                if let Ok(out) = refine(&self.model, &q_init, &reference, target, &self.refine_cfg) {
                    step.output = out;
                    step.refined = true;
                }
            }
        }

        self.q_prev = step.output.q_cmd;
        step
    }
}
