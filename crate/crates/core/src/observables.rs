//! Derived measurements: lifetime fits on logical series, and the
//! characteristic excitation and squeezing scales.

use serde::{Deserialize, Serialize};

use crate::floquet::{self, CircuitParams};
use crate::lindblad::EvolutionRecord;
use crate::{Error, Result};

/// Log-linear lifetime fit of one logical axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LifetimeFit {
    /// Decay time in `1/f0`; `f64::INFINITY` when the series does not decay.
    pub tau: f64,
    pub non_decaying: bool,
    /// Fitted window `[t_first, t_last]`.
    pub window: (f64, f64),
    /// rms residual of the log-linear fit.
    pub residual: f64,
    /// Standard error of tau from the fit covariance.
    pub std_error: f64,
    pub samples_used: usize,
}

/// Least-squares slope of `log |<sigma_j>|` against time.
///
/// The first tenth of the samples is dropped as transient, and only samples
/// with `|<sigma_j>| > 0.05` enter (the log of noise carries no signal).
pub fn lifetime_fit(record: &EvolutionRecord, axis: &str) -> Result<LifetimeFit> {
    let series = record
        .observables
        .get(axis)
        .ok_or_else(|| Error::Fit(format!("no observable series named {axis}")))?;
    lifetime_fit_series(&record.times, &series.mean)
}

pub fn lifetime_fit_series(times: &[f64], values: &[f64]) -> Result<LifetimeFit> {
    let skip = times.len() / 10;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values.iter())
        .skip(skip)
        .filter(|(_, &v)| v.abs() > 0.05)
        .map(|(&t, &v)| (t, v.abs().ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Fit(format!(
            "only {} usable samples above the noise floor (need 10)",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy * sxx - sx * sxy) / det;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let residual = (ss_res / n).sqrt();
    let slope_var = if pts.len() > 2 { ss_res / (n - 2.0) * n / det } else { 0.0 };
    let window = (pts[0].0, pts[pts.len() - 1].0);

    if slope >= -1e-14 {
        return Ok(LifetimeFit {
            tau: f64::INFINITY,
            non_decaying: true,
            window,
            residual,
            std_error: f64::INFINITY,
            samples_used: pts.len(),
        });
    }
    let tau = -1.0 / slope;
    let std_error = slope_var.sqrt() * tau * tau;
    Ok(LifetimeFit {
        tau,
        non_decaying: false,
        window,
        residual,
        std_error,
        samples_used: pts.len(),
    })
}

/// Characteristic scales of a stabilizing configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleReport {
    /// Signed effective barrier `E~_J` (units `h f0`).
    pub barrier: f64,
    /// Excitation energy `(E~_J h delta_f)^(1/2)`.
    pub excitation_energy: f64,
    /// Squeezing parameter `(h delta_f / E~_J)^(1/4)`, normalized to 1 at
    /// `h delta_f = E~_J`.
    pub squeezing: f64,
    /// Set when the configuration does not stabilize (barrier <= 0).
    pub non_stabilizing: bool,
}

pub fn scale_report(params: &CircuitParams) -> Result<ScaleReport> {
    let barrier = floquet::effective_barrier(params)?;
    if barrier <= 0.0 {
        return Ok(ScaleReport {
            barrier,
            excitation_energy: 0.0,
            squeezing: 0.0,
            non_stabilizing: true,
        });
    }
    Ok(ScaleReport {
        barrier,
        excitation_energy: (barrier * params.delta_f).sqrt(),
        squeezing: (params.delta_f / barrier).powf(0.25),
        non_stabilizing: false,
    })
}

/// Rate-additivity diagnostic `tau_y (1/tau_x + 1/tau_z)`; the dominant
/// barrier-crossing errors generate `sigma_x` and `sigma_z` flips at equal
/// rates, so the value sits near 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateAdditivity {
    pub value: f64,
    pub pass: bool,
}

pub fn sigma_y_ratio_check(
    tau_x: &LifetimeFit,
    tau_y: &LifetimeFit,
    tau_z: &LifetimeFit,
) -> Result<RateAdditivity> {
    if tau_x.non_decaying || tau_y.non_decaying || tau_z.non_decaying {
        return Err(Error::Fit("rate additivity needs three finite lifetimes".into()));
    }
    let value = tau_y.tau * (1.0 / tau_x.tau + 1.0 / tau_z.tau);
    Ok(RateAdditivity { value, pass: (0.7..=1.3).contains(&value) })
}
