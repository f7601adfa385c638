//! Tripod pinch gating and twist-intent estimation on the human side.
//!
//! The gate is a two-threshold debouncer over the thumb-index and
//! thumb-middle fingertip distances. While it is active, the tripod normal
//! gives the screw axis and the relative rotation of a tripod-attached tool
//! frame, projected onto the axis latched at activation, is accumulated into
//! the task angle. The task angle is never reset on release, so repeated
//! grasp/turn/release cycles ratchet it forward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::{so3_log, unit, Rotation, UnitVec3, Vec3, EPS_LEN};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PinchGateConfig {
    /// Both distances must be below this to count as a pinch frame (m).
    pub d_on: f64,
    /// Either distance above this counts as a release frame (m).
    pub d_off: f64,
    pub n_on: u32,
    pub n_off: u32,
}

impl Default for PinchGateConfig {
    fn default() -> Self {
        PinchGateConfig {
            d_on: 0.045,
            d_off: 0.065,
            n_on: 3,
            n_off: 3,
        }
    }
}

impl PinchGateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_on > 0.0 && self.d_on < self.d_off) {
            return Err(Error::ConfigInvalid(format!(
                "gate thresholds need 0 < d_on < d_off, got d_on = {}, d_off = {}",
                self.d_on, self.d_off
            )));
        }
        if self.n_on == 0 || self.n_off == 0 {
            return Err(Error::ConfigInvalid("gate frame counts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PinchGateState {
    pub active: bool,
    pub consecutive_on: u32,
    pub consecutive_off: u32,
    /// Number of activation edges seen so far.
    pub episode_id: u64,
}

/// Classification of one frame of fingertip distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PinchSignal {
    Pinch,
    Release,
    /// Between the two thresholds.
    Hold,
}

impl PinchSignal {
    pub fn classify(d_thumb_index: f64, d_thumb_middle: f64, cfg: &PinchGateConfig) -> Self {
        if d_thumb_index < cfg.d_on && d_thumb_middle < cfg.d_on {
            PinchSignal::Pinch
        } else if d_thumb_index > cfg.d_off || d_thumb_middle > cfg.d_off {
            PinchSignal::Release
        } else {
            PinchSignal::Hold
        }
    }
}

pub fn update_gate(
    state: PinchGateState,
    d_thumb_index: f64,
    d_thumb_middle: f64,
    cfg: &PinchGateConfig,
) -> PinchGateState {
    step_gate(state, PinchSignal::classify(d_thumb_index, d_thumb_middle, cfg), cfg)
}

pub fn step_gate(mut state: PinchGateState, signal: PinchSignal, cfg: &PinchGateConfig) -> PinchGateState {
    match (state.active, signal) {
        (false, PinchSignal::Pinch) => {
            state.consecutive_on += 1;
            if state.consecutive_on >= cfg.n_on {
                state.active = true;
                state.consecutive_on = 0;
                state.consecutive_off = 0;
                state.episode_id += 1;
            }
        }
        (true, PinchSignal::Release) => {
            state.consecutive_off += 1;
            if state.consecutive_off >= cfg.n_off {
                state.active = false;
                state.consecutive_on = 0;
                state.consecutive_off = 0;
            }
        }
        (false, _) => state.consecutive_on = 0,
        (true, _) => state.consecutive_off = 0,
    }
    state
}

/// Frame attached to a fingertip tripod: origin at the centroid, z along the
/// tripod normal, x toward the thumb tip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToolFrame {
    pub rotation: Rotation,
    pub origin: Vec3,
}

impl ToolFrame {
    pub fn axis(&self) -> UnitVec3 {
        self.rotation.column(2)
    }
}

/// Raw tripod normal `(p_ind - p_th) x (p_mid - p_th)`, not sign-corrected.
pub fn tripod_normal(p_th: &Vec3, p_ind: &Vec3, p_mid: &Vec3) -> Result<UnitVec3> {
    let n = (p_ind - p_th).cross(&(p_mid - p_th));
    if n.norm() <= EPS_LEN {
        return Err(Error::DegenerateTripod);
    }
    unit(n)
}

/// Screw axis of a tripod, with its sign aligned to `prev_axis` when given and
/// to the palm normal otherwise.
pub fn human_screw_axis(
    p_th: &Vec3,
    p_ind: &Vec3,
    p_mid: &Vec3,
    palm_normal: &UnitVec3,
    prev_axis: Option<&UnitVec3>,
) -> Result<UnitVec3> {
    let a = tripod_normal(p_th, p_ind, p_mid)?;
    let anchor = prev_axis.unwrap_or(palm_normal);
    Ok(if a.dot(anchor) < 0.0 { a.flipped() } else { a })
}

pub fn build_tool_frame(p_th: &Vec3, p_ind: &Vec3, p_mid: &Vec3, axis: &UnitVec3) -> Result<ToolFrame> {
    tripod_normal(p_th, p_ind, p_mid)?;
    let origin = (p_th + p_ind + p_mid) / 3.0;
    let to_thumb = p_th - origin;
    let off_axis = to_thumb - **axis * axis.as_vec().dot(&to_thumb);
    if off_axis.norm() <= EPS_LEN {
        return Err(Error::ThumbOnAxis);
    }
    let x = unit(off_axis)?;
    let y = UnitVec3::new_unchecked(axis.cross(&x));
    Ok(ToolFrame {
        rotation: Rotation::from_basis(&x, &y, axis),
        origin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntentConfig {
    /// Symmetric bound on the per-frame angle increment (rad).
    pub dtheta_clip: f64,
    /// Align each new axis with the previous one within an episode.
    pub axis_flip_guard: bool,
}

impl Default for IntentConfig {
    fn default() -> Self {
        IntentConfig {
            dtheta_clip: 0.2,
            axis_flip_guard: true,
        }
    }
}

impl IntentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dtheta_clip > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "dtheta_clip must be positive, got {}",
                self.dtheta_clip
            )));
        }
        Ok(())
    }
}

/// Episode-level twist intent.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntentState {
    /// Accumulated task angle (rad); persists across releases.
    pub theta_task: f64,
    /// Axis latched on the first usable frame of the current episode.
    pub a_task: Option<UnitVec3>,
    pub prev_tool: Option<ToolFrame>,
    pub gate: PinchGateState,
    /// Episode for which `a_task` was latched.
    latched_episode: Option<u64>,
}

impl IntentState {
    /// Axis used to sign-align the next tripod normal, if the guard applies.
    pub fn alignment_axis(&self, cfg: &IntentConfig) -> Option<UnitVec3> {
        if cfg.axis_flip_guard {
            self.prev_tool.map(|t| t.axis())
        } else {
            None
        }
    }

    pub fn episode_latched(&self) -> bool {
        self.gate.active && self.latched_episode == Some(self.gate.episode_id)
    }
}

/// Advances the intent by one frame.
///
/// `tool` is `None` for frames whose tripod could not be measured; such frames
/// leave the state untouched. A `NearPiRotation` error means the frame must
/// be dropped and the previous state kept.
pub fn update_intent(
    state: &IntentState,
    tool: Option<&ToolFrame>,
    cfg: &IntentConfig,
    active: bool,
) -> Result<IntentState> {
    let mut next = *state;
    if !active {
        next.prev_tool = None;
        return Ok(next);
    }
    let Some(tool) = tool else {
        return Ok(next);
    };
    if next.latched_episode != Some(next.gate.episode_id) || next.a_task.is_none() {
        next.a_task = Some(tool.axis());
        next.latched_episode = Some(next.gate.episode_id);
        next.prev_tool = Some(*tool);
        return Ok(next);
    }
    let (Some(prev), Some(axis)) = (next.prev_tool, next.a_task) else {
        next.prev_tool = Some(*tool);
        return Ok(next);
    };
    let relative = tool.rotation * prev.rotation.transpose();
    let delta = axis.as_vec().dot(&so3_log(&relative)?);
    next.theta_task += delta.clamp(-cfg.dtheta_clip, cfg.dtheta_clip);
    next.prev_tool = Some(*tool);
    Ok(next)
}
