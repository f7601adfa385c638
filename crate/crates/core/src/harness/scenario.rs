//! Synthetic human tripod-twist trajectories with analytic ground truth.
//!
//! The palm is held at a fixed pose in the headset frame. Inside the palm
//! frame, three fingertips sit on a circle about `axis_in_palm` and rotate
//! together during turn phases. Release phases open the grip past the
//! release threshold, rewind the fingertips while open, and close again;
//! the ground-truth angle only advances while turning.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::AngleSeries;
use crate::palm_frame::{
    HandFrameSample, INDEX_KNUCKLE, INDEX_TIP, MIDDLE_TIP, PINKY_KNUCKLE, RING_TIP, THUMB_TIP, WRIST,
};
use crate::se3::{unit, Rotation, Transform, UnitVec3, Vec3};

/// Tripod centroid in the palm frame at which the default robot hand can
/// form a pinch, before scaling to the human hand.
pub const ROBOT_PINCH_CENTROID: [f64; 3] = [0.12, 0.02, 0.08];

/// Palm keypoints of the nominal hand, before scaling.
const INDEX_KNUCKLE_NOMINAL: [f64; 3] = [0.095, 0.0, 0.0];
const PINKY_KNUCKLE_NOMINAL: [f64; 3] = [0.088, 0.1, 0.0];
/// A loosely curled ring finger, away from the tripod.
const RING_TIP_NOMINAL: [f64; 3] = [0.16, 0.08, 0.05];

/// Opening factor applied to the tripod radius during release.
const OPEN_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case", deny_unknown_fields)]
pub enum Phase {
    /// Rotate at the configured turn rate.
    Turn { duration: f64 },
    /// Keep the grip still.
    Hold { duration: f64 },
    /// Open, rewind by `rewind_deg` while open, then close again.
    ReleaseAndRewind { duration: f64, rewind_deg: f64 },
    /// Start from an open hand and close into the pinch, without turning.
    Approach { duration: f64 },
}

impl Phase {
    pub fn duration(&self) -> f64 {
        match *self {
            Phase::Turn { duration }
            | Phase::Hold { duration }
            | Phase::Approach { duration }
            | Phase::ReleaseAndRewind { duration, .. } => duration,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    /// Hz.
    pub frame_rate: f64,
    pub axis_in_palm: [f64; 3],
    /// Degrees per second, signed.
    pub turn_rate: f64,
    pub segments: Vec<Phase>,
    /// Standard deviation of the per-coordinate keypoint noise (m).
    pub noise_sigma: f64,
    pub human_tripod_radius: f64,
    /// Size of the human hand relative to the robot hand.
    pub human_scale: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            frame_rate: 50.0,
            axis_in_palm: [0.0, 0.0, 1.0],
            turn_rate: 60.0,
            segments: Vec::new(),
            noise_sigma: 0.0,
            human_tripod_radius: 0.025,
            human_scale: 0.8,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(format!("scenario `{}`: {msg}", self.name)));
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return bad(format!("frame_rate must be positive, got {}", self.frame_rate));
        }
        if !self.turn_rate.is_finite() {
            return bad("turn_rate must be finite".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.human_tripod_radius > 0.0 && self.human_tripod_radius.is_finite()) {
            return bad("human_tripod_radius must be positive".into());
        }
        if !(self.human_scale > 0.0 && self.human_scale.is_finite()) {
            return bad("human_scale must be positive".into());
        }
        for (i, phase) in self.segments.iter().enumerate() {
            let d = phase.duration();
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("segment {i} has non-positive duration {d}"));
            }
            if let Phase::ReleaseAndRewind { rewind_deg, .. } = phase {
                if !rewind_deg.is_finite() {
                    return bad(format!("segment {i} has a non-finite rewind angle"));
                }
            }
        }
        self.tripod_basis().map(|_| ())
    }

    /// Screw axis and the in-plane direction of the thumb at zero angle.
    fn tripod_basis(&self) -> Result<(UnitVec3, UnitVec3)> {
        let axis = unit(Vec3::from(self.axis_in_palm))
            .map_err(|_| Error::ConfigInvalid(format!("scenario `{}`: axis_in_palm is zero", self.name)))?;
        if axis.z <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "scenario `{}`: axis_in_palm must point out of the palm (positive z)",
                self.name
            )));
        }
        let back = -Vec3::x();
        let thumb_dir = unit(back - *axis * axis.as_vec().dot(&back)).map_err(|_| {
            Error::ConfigInvalid(format!("scenario `{}`: axis_in_palm is parallel to the palm x axis", self.name))
        })?;
        Ok((axis, thumb_dir))
    }

    /// Number of frames the scenario produces.
    pub fn frame_count(&self) -> usize {
        self.segments.iter().map(|p| self.phase_frames(p)).sum()
    }

    fn phase_frames(&self, phase: &Phase) -> usize {
        (phase.duration() * self.frame_rate).round() as usize
    }
}

/// The three scenarios of the default comparison suite.
pub fn default_suite() -> Vec<ScenarioConfig> {
    let lead_in = Phase::Approach { duration: 0.8 };
    vec![
        ScenarioConfig {
            name: "single_turn_120".into(),
            segments: vec![lead_in, Phase::Turn { duration: 2.0 }, Phase::Hold { duration: 0.3 }],
            ..Default::default()
        },
        ScenarioConfig {
            name: "ratchet_3x60".into(),
            segments: vec![
                lead_in,
                Phase::Turn { duration: 1.0 },
                Phase::ReleaseAndRewind { duration: 1.2, rewind_deg: 60.0 },
                Phase::Turn { duration: 1.0 },
                Phase::ReleaseAndRewind { duration: 1.2, rewind_deg: 60.0 },
                Phase::Turn { duration: 1.0 },
                Phase::Hold { duration: 0.2 },
            ],
            ..Default::default()
        },
        ScenarioConfig {
            name: "turn_with_holds".into(),
            segments: vec![
                lead_in,
                Phase::Turn { duration: 0.5 },
                Phase::Hold { duration: 0.5 },
                Phase::Turn { duration: 0.5 },
                Phase::Hold { duration: 0.5 },
                Phase::Turn { duration: 0.5 },
                Phase::Hold { duration: 0.3 },
            ],
            ..Default::default()
        },
    ]
}

/// Fixed pose of the human palm in the headset frame.
pub fn headset_palm_pose() -> Transform {
    Transform::new(Rotation::from_rpy(0.3, -0.2, 0.8), Vec3::new(0.1, -0.25, 1.2))
}

/// Grip state of one frame: the turn phase of the fingertips (rad) and the
/// tripod radius.
#[derive(Clone, Copy, Debug)]
struct Grip {
    phase: f64,
    radius: f64,
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<(Vec<HandFrameSample>, AngleSeries)> {
    cfg.validate()?;
    let (axis, thumb_dir) = cfg.tripod_basis()?;
    let side = UnitVec3::new_unchecked(axis.cross(&thumb_dir));
    let s = cfg.human_scale;
    let centroid = Vec3::from(ROBOT_PINCH_CENTROID) * s;
    let r = cfg.human_tripod_radius;
    let step = cfg.turn_rate.to_radians() / cfg.frame_rate;

    let mut grips = Vec::with_capacity(cfg.frame_count());
    let mut gt = Vec::with_capacity(cfg.frame_count());
    let mut active = Vec::with_capacity(cfg.frame_count());
    let (mut theta, mut phase) = (0.0f64, 0.0f64);
    for segment in &cfg.segments {
        let n = cfg.phase_frames(segment);
        match *segment {
            Phase::Turn { .. } => {
                for _ in 0..n {
                    theta += step;
                    phase += step;
                    grips.push(Grip { phase, radius: r });
                    gt.push(theta);
                    active.push(true);
                }
            }
            Phase::Hold { .. } => {
                for _ in 0..n {
                    grips.push(Grip { phase, radius: r });
                    gt.push(theta);
                    active.push(true);
                }
            }
            Phase::ReleaseAndRewind { rewind_deg, .. } => {
                let n_open = n / 3;
                let n_rewind = n / 3;
                let n_close = n - n_open - n_rewind;
                let open = OPEN_FACTOR * r;
                for k in 0..n_open {
                    let f = (k + 1) as f64 / n_open as f64;
                    grips.push(Grip { phase, radius: r + (open - r) * f });
                }
                let start = phase;
                for k in 0..n_rewind {
                    let f = (k + 1) as f64 / n_rewind as f64;
                    phase = start - rewind_deg.to_radians() * f;
                    grips.push(Grip { phase, radius: open });
                }
                if n_rewind == 0 {
                    phase = start - rewind_deg.to_radians();
                }
                close_grip(&mut grips, n_close, phase, open, r);
                for _ in 0..n {
                    gt.push(theta);
                    active.push(false);
                }
            }
            Phase::Approach { .. } => {
                let n_open = n / 3;
                for _ in 0..n_open {
                    grips.push(Grip { phase, radius: OPEN_FACTOR * r });
                }
                close_grip(&mut grips, n - n_open, phase, OPEN_FACTOR * r, r);
                for _ in 0..n {
                    gt.push(theta);
                    active.push(false);
                }
            }
        }
    }

    let palm = headset_palm_pose();
    let mut noise = NoiseSource::new(cfg.noise_sigma, cfg.seed);
    let fixed = [
        (WRIST, Vec3::zeros()),
        (INDEX_KNUCKLE, Vec3::from(INDEX_KNUCKLE_NOMINAL) * s),
        (PINKY_KNUCKLE, Vec3::from(PINKY_KNUCKLE_NOMINAL) * s),
        (RING_TIP, Vec3::from(RING_TIP_NOMINAL) * s),
    ];
    let tip_offsets = [(THUMB_TIP, 0.0), (INDEX_TIP, 120f64.to_radians()), (MIDDLE_TIP, 240f64.to_radians())];

    let t: Vec<f64> = (0..grips.len()).map(|k| k as f64 / cfg.frame_rate).collect();
    let mut frames = Vec::with_capacity(grips.len());
    for (k, grip) in grips.iter().enumerate() {
        let mut sample = HandFrameSample::new(t[k]);
        for (name, p) in fixed {
            sample = sample.with(name, p);
        }
        for (name, offset) in tip_offsets {
            let angle = grip.phase + offset;
            let p = centroid + (*thumb_dir * angle.cos() + *side * angle.sin()) * grip.radius;
            sample = sample.with(name, p);
        }
        // Keypoints are visited in name order, so the noise stream is fixed.
        for p in sample.keypoints.values_mut() {
            *p = palm.apply(p) + noise.next_vec();
        }
        frames.push(sample);
    }
    Ok((frames, AngleSeries::new(t, gt, active)?))
}

/// Closes the grip from `open` to `closed` over the first two thirds of
/// `n` frames and holds it closed for the rest.
fn close_grip(grips: &mut Vec<Grip>, n: usize, phase: f64, open: f64, closed: f64) {
    let closing = (n as f64 * 2.0 / 3.0).max(1.0);
    for k in 0..n {
        let f = ((k + 1) as f64 / closing).min(1.0);
        grips.push(Grip { phase, radius: open - (open - closed) * f });
    }
}

struct NoiseSource {
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
}

impl NoiseSource {
    fn new(sigma: f64, seed: u64) -> Self {
        NoiseSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma is finite and positive")),
        }
    }

    fn next_vec(&mut self) -> Vec3 {
        match &self.normal {
            Some(n) => Vec3::new(n.sample(&mut self.rng), n.sample(&mut self.rng), n.sample(&mut self.rng)),
            None => Vec3::zeros(),
        }
    }
}
