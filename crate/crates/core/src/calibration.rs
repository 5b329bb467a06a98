//! Empirical contracting horizons and the fit of the horizon constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::picard::{run_to_convergence, CalibrationConfig, PicardConfig};
use crate::scenario::Scenario;

/// Horizons `t_min 2^k`, `k < count`, each split into `steps` time steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonScan {
    pub t_min: f64,
    pub count: usize,
    pub steps: usize,
}

impl Default for HorizonScan {
    fn default() -> Self {
        Self {
            t_min: 0.005,
            count: 12,
            steps: 8,
        }
    }
}

impl HorizonScan {
    pub fn horizons(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.t_min * 2f64.powi(k as i32))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonProbe {
    pub horizon: f64,
    pub max_ratio: Option<f64>,
    pub contracting: bool,
    /// Failure message when the run stopped with an error.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeissenbergScan {
    pub weissenberg: f64,
    pub probes: Vec<HorizonProbe>,
    /// Largest scanned horizon below the first failure; `None` if the
    /// smallest one already fails.
    pub t_emp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub scans: Vec<WeissenbergScan>,
    pub calibration: CalibrationConfig,
}

/// A run contracts when it converges and no sweep ratio reaches 1.
pub fn probe_horizon(
    sc: &Scenario,
    horizon: f64,
    steps: usize,
    cfg: &PicardConfig,
) -> HorizonProbe {
    let mut s = sc.clone();
    s.params.dt = horizon / steps as f64;
    let cfg = PicardConfig {
        allow_beyond_horizon: true,
        ..*cfg
    };
    let out = s
        .problem(horizon, cfg.beta)
        .and_then(|pb| run_to_convergence(&pb, &cfg));
    match out {
        Ok(c) => HorizonProbe {
            horizon,
            max_ratio: c.report.max_ratio,
            contracting: c.report.max_ratio.is_none_or(|r| r < 1.0),
            failure: None,
        },
        Err(Error::NoContraction { report, .. }) => HorizonProbe {
            horizon,
            max_ratio: report.max_ratio,
            contracting: false,
            failure: Some("no contraction".into()),
        },
        Err(e) => HorizonProbe {
            horizon,
            max_ratio: None,
            contracting: false,
            failure: Some(e.to_string()),
        },
    }
}

/// Scans horizons upwards and stops at the first non-contracting one.
pub fn contracting_horizon(
    sc: &Scenario,
    we: f64,
    scan: &HorizonScan,
    cfg: &PicardConfig,
) -> Result<WeissenbergScan> {
    let mut s = sc.clone();
    s.params = s.params.with_weissenberg(we);
    let mut probes = Vec::new();
    let mut t_emp = None;
    for t in scan.horizons() {
        let p = probe_horizon(&s, t, scan.steps, cfg);
        let ok = p.contracting;
        probes.push(p);
        if !ok {
            break;
        }
        t_emp = Some(t);
    }
    Ok(WeissenbergScan {
        weissenberg: we,
        probes,
        t_emp,
    })
}

/// Fits `T = (c We/(1+We))^(1/μ)` as a lower envelope of the empirical
/// horizons: `μ` from the log-log slope, then the largest `c` that keeps the
/// curve at or below every sample. Falls back to `μ = 1` when the slope is
/// not positive.
pub fn fit_calibration(samples: &[(f64, f64)]) -> Option<CalibrationConfig> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(we, t)| *we > 0.0 && *t > 0.0)
        .map(|(we, t)| ((we / (1.0 + we)).ln(), t.ln()))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mu_cal = if slope > 0.0 { 1.0 / slope } else { 1.0 };
    let log_c = pts
        .iter()
        .map(|(ls, lt)| mu_cal * lt - ls)
        .fold(f64::INFINITY, f64::min);
    Some(CalibrationConfig {
        c_cal: log_c.exp(),
        mu_cal,
    })
}

/// Empirical horizons for every Weissenberg number, in parallel, and the
/// fitted constants. Keeps the configured constants when no horizon contracts.
pub fn calibrate(
    sc: &Scenario,
    we_list: &[f64],
    scan: &HorizonScan,
    cfg: &PicardConfig,
) -> Result<CalibrationReport> {
    if we_list.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::param("/params/weissenberg", "must be > 0"));
    }
    let scans = we_list
        .par_iter()
        .map(|&we| contracting_horizon(sc, we, scan, cfg))
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64)> = scans
        .iter()
        .filter_map(|s| s.t_emp.map(|t| (s.weissenberg, t)))
        .collect();
    let calibration = fit_calibration(&samples).unwrap_or(cfg.calibration);
    Ok(CalibrationReport { scans, calibration })
}
