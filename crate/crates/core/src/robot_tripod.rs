//! Robot-side tripod geometry and turning progress.
//!
//! The robot tool frame is built exactly like the human one (centroid origin,
//! tripod normal as z, thumb direction as x), so human and robot angles are
//! measured the same way.

use crate::error::Result;
use crate::hand_model::{HandModel, JointVector};
use crate::se3::{so3_log, UnitVec3, Vec3};
use crate::tripod_intent::{build_tool_frame, human_screw_axis, ToolFrame};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotTripodState {
    /// Thumb, index, middle tips in the robot palm frame.
    pub tips: [Vec3; 3],
    pub centroid: Vec3,
    pub normal: UnitVec3,
    /// Pairwise distances: thumb-index, thumb-middle, index-middle.
    pub closure: [f64; 3],
    pub tool: ToolFrame,
}

impl RobotTripodState {
    /// Builds the state from explicit tip positions. The normal is aligned
    /// with `prev_axis` when given, else with the palm +z axis.
    pub fn from_tips(tips: [Vec3; 3], prev_axis: Option<&UnitVec3>) -> Result<Self> {
        let [th, ind, mid] = &tips;
        let normal = human_screw_axis(th, ind, mid, &UnitVec3::Z, prev_axis)?;
        let tool = build_tool_frame(th, ind, mid, &normal)?;
        Ok(RobotTripodState {
            tips,
            centroid: tool.origin,
            normal,
            closure: [(th - ind).norm(), (th - mid).norm(), (ind - mid).norm()],
            tool,
        })
    }
}

pub fn compute_tripod_state(
    model: &HandModel,
    q: &JointVector,
    prev_axis: Option<&UnitVec3>,
) -> Result<RobotTripodState> {
    RobotTripodState::from_tips(model.fk_tripod(q), prev_axis)
}

/// Quantities frozen when the tripod activates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripodReference {
    pub tool_ref: ToolFrame,
    pub a_ref: UnitVec3,
    pub e_ref: [f64; 3],
    pub c_ref: Vec3,
}

pub fn latch_reference(state: &RobotTripodState) -> TripodReference {
    TripodReference {
        tool_ref: state.tool,
        a_ref: state.normal,
        e_ref: state.closure,
        c_ref: state.centroid,
    }
}

/// Signed rotation of the tool frame relative to the reference, projected on
/// the reference axis.
pub fn robot_turn_angle(state: &RobotTripodState, reference: &TripodReference) -> Result<f64> {
    let relative = state.tool.rotation * reference.tool_ref.rotation.transpose();
    Ok(reference.a_ref.as_vec().dot(&so3_log(&relative)?))
}
