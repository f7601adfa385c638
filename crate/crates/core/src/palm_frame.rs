//! Human palm frame from headset keypoints, and the arm command built on it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::se3::{unit, Rotation, Transform, UnitVec3, Vec3, EPS_LEN};

pub const WRIST: &str = "wrist";
pub const INDEX_KNUCKLE: &str = "index_knuckle";
pub const PINKY_KNUCKLE: &str = "pinky_knuckle";
pub const THUMB_TIP: &str = "thumb_tip";
pub const INDEX_TIP: &str = "index_tip";
pub const MIDDLE_TIP: &str = "middle_tip";
/// Optional; used by the vector baseline when present.
pub const RING_TIP: &str = "ring_tip";

pub const REQUIRED_KEYPOINTS: [&str; 6] = [
    WRIST,
    INDEX_KNUCKLE,
    PINKY_KNUCKLE,
    THUMB_TIP,
    INDEX_TIP,
    MIDDLE_TIP,
];

/// One timestamped set of keypoints in the headset frame.
#[derive(Clone, Debug, PartialEq)]
pub struct HandFrameSample {
    pub t: f64,
    pub keypoints: BTreeMap<String, Vec3>,
}

impl HandFrameSample {
    pub fn new(t: f64) -> Self {
        HandFrameSample {
            t,
            keypoints: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, p: Vec3) -> Self {
        self.keypoints.insert(name.to_owned(), p);
        self
    }

    pub fn get(&self, name: &str) -> Result<Vec3> {
        self.keypoints
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingKeypoint(name.to_owned()))
    }

    /// Checks that all required names are present and every coordinate is
    /// finite.
    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::InvalidTrajectory(format!("non-finite time {}", self.t)));
        }
        for name in REQUIRED_KEYPOINTS {
            self.get(name)?;
        }
        if let Some((name, _)) = self
            .keypoints
            .iter()
            .find(|(_, p)| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidTrajectory(format!(
                "keypoint `{name}` has non-finite coordinates at t = {}",
                self.t
            )));
        }
        Ok(())
    }
}

/// Pose of the human palm in the headset frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PalmFrame {
    pub pose: Transform,
}

impl PalmFrame {
    pub fn x_axis(&self) -> UnitVec3 {
        self.pose.rotation.column(0)
    }

    pub fn y_axis(&self) -> UnitVec3 {
        self.pose.rotation.column(1)
    }

    /// Palm normal, expressed in the headset frame.
    pub fn normal(&self) -> UnitVec3 {
        self.pose.rotation.column(2)
    }

    pub fn origin(&self) -> Vec3 {
        self.pose.translation
    }

    /// Re-expresses a headset-frame point in palm coordinates.
    pub fn to_palm(&self, p: &Vec3) -> Vec3 {
        self.pose.apply_inverse(p)
    }
}

pub fn build_palm_frame(sample: &HandFrameSample) -> Result<PalmFrame> {
    let wrist = sample.get(WRIST)?;
    let index = sample.get(INDEX_KNUCKLE)?;
    let pinky = sample.get(PINKY_KNUCKLE)?;

    let x = unit(index - wrist).map_err(|_| Error::DegenerateKeypoints)?;
    let v = pinky - wrist;
    let normal = x.cross(&v);
    if normal.norm() <= EPS_LEN {
        return Err(Error::DegenerateKeypoints);
    }
    let z = unit(normal)?;
    let y = UnitVec3::new_unchecked(z.cross(&x));
    Ok(PalmFrame {
        pose: Transform::new(Rotation::from_basis(&x, &y, &z), wrist),
    })
}

/// Alignment of the headset frame with the robot base plus workspace scaling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmCommandConfig {
    base_alignment: Transform,
    translation_scale: f64,
}

impl ArmCommandConfig {
    pub fn new(base_alignment: Transform, translation_scale: f64) -> Result<Self> {
        if !(translation_scale > 0.0 && translation_scale <= 10.0) {
            return Err(Error::ConfigInvalid(format!(
                "translation_scale must lie in (0, 10], got {translation_scale}"
            )));
        }
        Ok(ArmCommandConfig {
            base_alignment,
            translation_scale,
        })
    }

    pub fn base_alignment(&self) -> &Transform {
        &self.base_alignment
    }

    pub fn translation_scale(&self) -> f64 {
        self.translation_scale
    }
}

impl Default for ArmCommandConfig {
    fn default() -> Self {
        ArmCommandConfig {
            base_alignment: Transform::identity(),
            translation_scale: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmCommand {
    pub pose: Transform,
    pub t: f64,
}

/// End-effector target: base alignment applied after scaling the palm
/// translation. Rotation is never scaled.
pub fn compose_arm_command(frame: &PalmFrame, cfg: &ArmCommandConfig, t: f64) -> ArmCommand {
    let scaled = Transform::new(
        frame.pose.rotation,
        frame.pose.translation * cfg.translation_scale,
    );
    ArmCommand {
        pose: cfg.base_alignment * scaled,
        t,
    }
}
