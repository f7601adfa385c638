//! Kinematic model of a four-finger, 16-joint robot hand.
//!
//! Each finger is a serial chain of revolute joints rooted at a fixed pose in
//! the robot palm frame. Joint axes are expressed in the parent link frame;
//! a joint first rotates about its axis and then translates by its offset to
//! reach the next joint. Fingertips are points.

use std::collections::BTreeMap;
use std::ops::{Index, IndexMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::{unit, Rotation, Transform, UnitVec3, Vec3};

pub const NUM_JOINTS: usize = 16;
pub const JOINTS_PER_FINGER: usize = 4;

const DEFAULT_HAND_JSON: &str = include_str!("../data/default_hand.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
}

impl Finger {
    pub const ALL: [Finger; 4] = [Finger::Thumb, Finger::Index, Finger::Middle, Finger::Ring];
    pub const TRIPOD: [Finger; 3] = [Finger::Thumb, Finger::Index, Finger::Middle];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Finger::Thumb => "thumb",
            Finger::Index => "index",
            Finger::Middle => "middle",
            Finger::Ring => "ring",
        }
    }

    /// Slots of this finger's joints in a [`JointVector`].
    pub fn joints(self) -> std::ops::Range<usize> {
        let start = self.index() * JOINTS_PER_FINGER;
        start..start + JOINTS_PER_FINGER
    }
}

/// Joint angles (rad) ordered thumb, index, middle, ring; four per finger.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct JointVector(pub [f64; NUM_JOINTS]);

impl JointVector {
    pub fn zeros() -> Self {
        JointVector([0.0; NUM_JOINTS])
    }

    pub fn from_slice(q: &[f64]) -> Result<Self> {
        let arr: [f64; NUM_JOINTS] = q.try_into().map_err(|_| Error::JointVectorLength(q.len()))?;
        Ok(JointVector(arr))
    }

    pub fn finger(&self, finger: Finger) -> &[f64] {
        &self.0[finger.joints()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &JointVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for JointVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for JointVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Joint {
    pub axis: UnitVec3,
    pub offset: Vec3,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FingerChain {
    pub base_pose: Transform,
    pub joints: Vec<Joint>,
    pub tip_offset: Vec3,
}

impl FingerChain {
    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::InvalidModel("finger chain has no joints".into()));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if !(j.lower < j.upper) {
                return Err(Error::InvalidModel(format!(
                    "joint {i}: lower limit {} is not below upper limit {}",
                    j.lower, j.upper
                )));
            }
        }
        Ok(())
    }

    /// Tip position in the palm frame for the given joint angles.
    pub fn tip_position(&self, q: &[f64]) -> Vec3 {
        debug_assert_eq!(q.len(), self.joints.len());
        // Accumulate from the tip backwards: p <- R_j (offset_j + p).
        let mut p = self.tip_offset;
        for (joint, &angle) in self.joints.iter().zip(q).rev() {
            p = Rotation::about_axis(&joint.axis, angle).apply(&(joint.offset + p));
        }
        self.base_pose.apply(&p)
    }
}

/// Fingertip positions in the robot palm frame, indexed by [`Finger`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fingertips(pub [Vec3; 4]);

impl Fingertips {
    pub fn get(&self, finger: Finger) -> Vec3 {
        self.0[finger.index()]
    }

    pub fn tripod(&self) -> [Vec3; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandModel {
    fingers: [FingerChain; 4],
}

impl HandModel {
    pub fn new(fingers: [FingerChain; 4]) -> Result<Self> {
        for (finger, chain) in Finger::ALL.iter().zip(&fingers) {
            chain
                .validate()
                .map_err(|e| Error::InvalidModel(format!("{}: {e}", finger.name())))?;
            if chain.joints.len() != JOINTS_PER_FINGER {
                return Err(Error::InvalidModel(format!(
                    "{} has {} joints, expected {JOINTS_PER_FINGER}",
                    finger.name(),
                    chain.joints.len()
                )));
            }
        }
        Ok(HandModel { fingers })
    }

    pub fn finger(&self, finger: Finger) -> &FingerChain {
        &self.fingers[finger.index()]
    }

    pub fn fk_finger(&self, finger: Finger, q: &JointVector) -> Vec3 {
        self.fingers[finger.index()].tip_position(q.finger(finger))
    }

    pub fn fk_fingertips(&self, q: &JointVector) -> Fingertips {
        Fingertips(Finger::ALL.map(|f| self.fk_finger(f, q)))
    }

    pub fn fk_tripod(&self, q: &JointVector) -> [Vec3; 3] {
        Finger::TRIPOD.map(|f| self.fk_finger(f, q))
    }

    pub fn limits(&self, joint: usize) -> (f64, f64) {
        let j = &self.fingers[joint / JOINTS_PER_FINGER].joints[joint % JOINTS_PER_FINGER];
        (j.lower, j.upper)
    }

    pub fn clamp_to_limits(&self, q: &JointVector) -> JointVector {
        let mut out = *q;
        for i in 0..NUM_JOINTS {
            let (lo, hi) = self.limits(i);
            out[i] = q[i].clamp(lo, hi);
        }
        out
    }

    pub fn within_limits(&self, q: &JointVector) -> bool {
        (0..NUM_JOINTS).all(|i| {
            let (lo, hi) = self.limits(i);
            q[i] >= lo && q[i] <= hi
        })
    }

    /// Joint slots of thumb, index and middle.
    pub fn tripod_joints() -> Vec<usize> {
        Finger::TRIPOD.iter().flat_map(|f| f.joints()).collect()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: HandFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let fingers = Finger::ALL
            .iter()
            .map(|f| (f.name().to_owned(), FingerFile::from_chain(self.finger(*f))))
            .collect();
        serde_json::to_string_pretty(&HandFile { fingers }).expect("hand model serializes")
    }
}

/// The shipped default model (see `data/default_hand.json`).
pub fn default_model() -> HandModel {
    HandModel::from_json_str(DEFAULT_HAND_JSON).expect("bundled hand model is valid")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HandFile {
    fingers: BTreeMap<String, FingerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerFile {
    base_position: [f64; 3],
    base_rotation_rpy: [f64; 3],
    joints: Vec<JointFile>,
    tip_offset: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    axis: [f64; 3],
    offset: [f64; 3],
    lower: f64,
    upper: f64,
}

impl HandFile {
    fn into_model(mut self) -> Result<HandModel> {
        if let Some(extra) = self
            .fingers
            .keys()
            .find(|k| !Finger::ALL.iter().any(|f| f.name() == k.as_str()))
        {
            return Err(Error::InvalidModel(format!("unknown finger `{extra}`")));
        }
        let mut chains = Vec::with_capacity(4);
        for f in Finger::ALL {
            let file = self
                .fingers
                .remove(f.name())
                .ok_or_else(|| Error::InvalidModel(format!("missing finger `{}`", f.name())))?;
            chains.push(
                file.into_chain()
                    .map_err(|e| Error::InvalidModel(format!("{}: {e}", f.name())))?,
            );
        }
        let fingers: [FingerChain; 4] = chains.try_into().expect("four chains");
        HandModel::new(fingers)
    }
}

impl FingerFile {
    fn into_chain(self) -> Result<FingerChain> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.base_position) || !finite(&self.base_rotation_rpy) || !finite(&self.tip_offset) {
            return Err(Error::InvalidModel("non-finite finger parameter".into()));
        }
        let [roll, pitch, yaw] = self.base_rotation_rpy;
        let joints = self
            .joints
            .into_iter()
            .map(|j| {
                if !finite(&j.axis) || !finite(&j.offset) || !j.lower.is_finite() || !j.upper.is_finite() {
                    return Err(Error::InvalidModel("non-finite joint parameter".into()));
                }
                Ok(Joint {
                    axis: unit(Vec3::from(j.axis))
                        .map_err(|_| Error::InvalidModel("zero joint axis".into()))?,
                    offset: Vec3::from(j.offset),
                    lower: j.lower,
                    upper: j.upper,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let chain = FingerChain {
            base_pose: Transform::new(
                Rotation::from_rpy(roll, pitch, yaw),
                Vec3::from(self.base_position),
            ),
            joints,
            tip_offset: Vec3::from(self.tip_offset),
        };
        chain.validate()?;
        Ok(chain)
    }

    fn from_chain(chain: &FingerChain) -> Self {
        let m = chain.base_pose.rotation.matrix();
        // Inverse of Rz(yaw) Ry(pitch) Rx(roll).
        let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
        let roll = m[(2, 1)].atan2(m[(2, 2)]);
        let yaw = m[(1, 0)].atan2(m[(0, 0)]);
        FingerFile {
            base_position: chain.base_pose.translation.into(),
            base_rotation_rpy: [roll, pitch, yaw],
            joints: chain
                .joints
                .iter()
                .map(|j| JointFile {
                    axis: (*j.axis).into(),
                    offset: j.offset.into(),
                    lower: j.lower,
                    upper: j.upper,
                })
                .collect(),
            tip_offset: chain.tip_offset.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_two_link_finger() {
        let chain = FingerChain {
            base_pose: Transform::from_translation(Vec3::new(0.1, 0.2, 0.0)),
            joints: vec![
                Joint {
                    axis: UnitVec3::Z,
                    offset: Vec3::new(0.04, 0.0, 0.0),
                    lower: -2.0,
                    upper: 2.0,
                },
                Joint {
                    axis: UnitVec3::Z,
                    offset: Vec3::new(0.03, 0.0, 0.0),
                    lower: -2.0,
                    upper: 2.0,
                },
            ],
            tip_offset: Vec3::zeros(),
        };
        let q1 = std::f64::consts::FRAC_PI_2;
        let q2 = 0.0f64;
        let tip = chain.tip_position(&[q1, q2]);
        // x = l1 cos q1 + l2 cos(q1 + q2), y = l1 sin q1 + l2 sin(q1 + q2)
        let expected = Vec3::new(
            0.1 + 0.04 * q1.cos() + 0.03 * (q1 + q2).cos(),
            0.2 + 0.04 * q1.sin() + 0.03 * (q1 + q2).sin(),
            0.0,
        );
        assert!((tip - expected).norm() < 1e-15);

        let tip = chain.tip_position(&[0.3, -0.8]);
        let expected = Vec3::new(
            0.1 + 0.04 * 0.3f64.cos() + 0.03 * (-0.5f64).cos(),
            0.2 + 0.04 * 0.3f64.sin() + 0.03 * (-0.5f64).sin(),
            0.0,
        );
        assert!((tip - expected).norm() < 1e-15);
    }

    #[test]
    fn default_model_invariants() {
        let m = default_model();
        assert_eq!(HandModel::tripod_joints().len(), 12);
        for f in Finger::ALL {
            assert!(m.finger(f).validate().is_ok());
        }
        assert!(m.within_limits(&JointVector::zeros()));
    }

    #[test]
    fn ring_joints_do_not_move_tripod() {
        let m = default_model();
        let q = JointVector([0.2; NUM_JOINTS]);
        let mut q2 = q;
        q2[13] += 0.4;
        let a = m.fk_fingertips(&q);
        let b = m.fk_fingertips(&q2);
        assert_eq!(a.tripod(), b.tripod());
        assert_ne!(a.get(Finger::Ring), b.get(Finger::Ring));
    }

    #[test]
    fn clamp_examples() {
        let m = default_model();
        let q = JointVector([0.1; NUM_JOINTS]);
        assert_eq!(m.clamp_to_limits(&q), q);

        let mut q = JointVector::zeros();
        let (_, hi) = m.limits(5);
        q[5] = hi + 0.3;
        assert_eq!(m.clamp_to_limits(&q)[5], hi);

        let low = m.clamp_to_limits(&JointVector([-10.0; NUM_JOINTS]));
        for i in 0..NUM_JOINTS {
            assert_eq!(low[i], m.limits(i).0);
        }
    }

    #[test]
    fn joint_vector_length_is_checked() {
        assert!(matches!(JointVector::from_slice(&[0.0; 15]), Err(Error::JointVectorLength(15))));
        assert!(JointVector::from_slice(&[0.0; 16]).is_ok());
    }

    #[test]
    fn json_roundtrip_preserves_fk() {
        let m = default_model();
        let back = HandModel::from_json_str(&m.to_json_string()).unwrap();
        let q = JointVector([0.3; NUM_JOINTS]);
        let (a, b) = (m.fk_fingertips(&q), back.fk_fingertips(&q));
        for f in Finger::ALL {
            assert!((a.get(f) - b.get(f)).norm() < 1e-14);
        }
    }

    #[test]
    fn loader_rejects_missing_finger_and_bad_limits() {
        let m = default_model();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json_string()).unwrap();
        v["fingers"].as_object_mut().unwrap().remove("ring");
        let err = HandModel::from_json_str(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(ref s) if s.contains("ring")), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&m.to_json_string()).unwrap();
        v["fingers"]["index"]["joints"][1]["lower"] = serde_json::json!(5.0);
        assert!(matches!(HandModel::from_json_str(&v.to_string()), Err(Error::InvalidModel(_))));

        let mut v: serde_json::Value = serde_json::from_str(&m.to_json_string()).unwrap();
        v["fingers"]["index"]["joints"].as_array_mut().unwrap().pop();
        assert!(matches!(HandModel::from_json_str(&v.to_string()), Err(Error::InvalidModel(_))));
    }
}
