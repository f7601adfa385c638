//! Tracking and axis-stability metrics over the active-pinch mask.
//!
//! Angles are handled in radians internally and reported in degrees.
//! Variances and covariances use the population (1/T) convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::UnitVec3;

/// Standard deviations at or below this are treated as constant signals.
pub const MIN_STD: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AngleSeries {
    pub t: Vec<f64>,
    /// Radians.
    pub value: Vec<f64>,
    pub active: Vec<bool>,
}

impl AngleSeries {
    pub fn new(t: Vec<f64>, value: Vec<f64>, active: Vec<bool>) -> Result<Self> {
        let s = AngleSeries { t, value, active };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.len() != self.value.len() || self.t.len() != self.active.len() {
            return Err(Error::MisalignedSeries);
        }
        if self.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTrajectory("series timestamps must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when either signal is constant over the mask.
    pub corr: Option<f64>,
    pub axis_dev_mean: f64,
    pub axis_dev_max: f64,
    pub n_samples: usize,
}

/// Indices of frames active in both series.
pub fn joint_mask(method: &AngleSeries, gt: &AngleSeries) -> Result<Vec<usize>> {
    method.validate()?;
    gt.validate()?;
    if method.t != gt.t {
        return Err(Error::MisalignedSeries);
    }
    let idx: Vec<usize> = (0..method.len())
        .filter(|&i| method.active[i] && gt.active[i])
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(idx)
}

/// `e(t) = theta_m(t) - theta_gt(t)` (rad) on the joint active mask.
pub fn tracking_error(method: &AngleSeries, gt: &AngleSeries) -> Result<Vec<f64>> {
    Ok(joint_mask(method, gt)?
        .into_iter()
        .map(|i| method.value[i] - gt.value[i])
        .collect())
}

/// RMSE and MAE in degrees of errors given in radians.
pub fn rmse_mae(errors: &[f64]) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(Error::EmptyMask);
    }
    let n = errors.len() as f64;
    let (sq, abs) = errors
        .iter()
        .fold((0.0, 0.0), |(sq, abs), e| (sq + e * e, abs + e.abs()));
    Ok(((sq / n).sqrt().to_degrees(), (abs / n).to_degrees()))
}

/// Pearson correlation, population convention.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::MisalignedSeries);
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    let (sd_a, sd_b) = ((var_a / n).sqrt(), (var_b / n).sqrt());
    if sd_a <= MIN_STD || sd_b <= MIN_STD {
        return Err(Error::DegenerateSignal);
    }
    Ok((cov / n / (sd_a * sd_b)).clamp(-1.0, 1.0))
}

/// `arccos(|a . a_ref|)` in degrees, within `[0, 90]`.
pub fn axis_deviation(a: &UnitVec3, a_ref: &UnitVec3) -> f64 {
    a.dot(a_ref).abs().clamp(-1.0, 1.0).acos().to_degrees()
}

/// Full report for one method. `axis_dev_deg` is per frame, aligned with
/// the series.
pub fn report(method: &AngleSeries, gt: &AngleSeries, axis_dev_deg: &[f64]) -> Result<MetricsReport> {
    if axis_dev_deg.len() != method.len() {
        return Err(Error::MisalignedSeries);
    }
    let mask = joint_mask(method, gt)?;
    let errors: Vec<f64> = mask.iter().map(|&i| method.value[i] - gt.value[i]).collect();
    let (rmse, mae) = rmse_mae(&errors)?;
    let m: Vec<f64> = mask.iter().map(|&i| method.value[i]).collect();
    let g: Vec<f64> = mask.iter().map(|&i| gt.value[i]).collect();
    let corr = match pearson(&m, &g) {
        Ok(r) => Some(r),
        Err(Error::DegenerateSignal) | Err(Error::MisalignedSeries) => None,
        Err(e) => return Err(e),
    };
    let dev: Vec<f64> = mask.iter().map(|&i| axis_dev_deg[i]).collect();
    Ok(MetricsReport {
        rmse,
        mae,
        corr,
        axis_dev_mean: dev.iter().sum::<f64>() / dev.len() as f64,
        axis_dev_max: dev.iter().copied().fold(0.0, f64::max),
        n_samples: mask.len(),
    })
}
