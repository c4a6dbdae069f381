use serde::Serialize;

use super::ledger::{Column, ThermoSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "equilibrium")]
    Equilibrium,
    #[serde(rename = "NESS-unconditional-only")]
    NessUnconditionalOnly,
    #[serde(rename = "ISS")]
    Iss,
    #[serde(rename = "transient")]
    Transient,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Equilibrium => "equilibrium",
            Verdict::NessUnconditionalOnly => "NESS-unconditional-only",
            Verdict::Iss => "ISS",
            Verdict::Transient => "transient",
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IssThresholds {
    /// Window length in steps; `None` means the last quarter of the series.
    pub window: Option<usize>,
    /// Multiple of the standard error used in the thresholds.
    pub se_multiplier: f64,
    /// Lower bound on every threshold.
    pub floor: f64,
}

impl Default for IssThresholds {
    fn default() -> Self {
        Self {
            window: None,
            se_multiplier: 3.0,
            floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IssReport {
    /// First step `t` inside the window.
    pub window_start: usize,
    pub window_len: usize,
    /// `|mean dI|` over the window.
    pub mean_abs_d_info: f64,
    pub se_d_info: f64,
    pub mean_gain: f64,
    pub se_gain: f64,
    pub mean_loss: f64,
    pub se_loss: f64,
    pub mean_d_sigma_u: f64,
    pub mean_d_sigma_c: f64,
    pub eps_info: f64,
    pub eps_gain: f64,
    pub verdict: Verdict,
}

/// Classifies the tail of a series: information still changing
/// (transient), constant information with ongoing gain (ISS), no gain but
/// ongoing production (unconditional NESS), or nothing at all.
pub fn iss_detect(series: &ThermoSeries, thresholds: &IssThresholds) -> IssReport {
    let n = series.len();
    let window_len = thresholds.window.unwrap_or(n / 4).clamp(1, n.max(1));
    let start = n - window_len;
    let (d_info, se_d_info) = series.window_stats(Column::DInfo, start);
    let (gain, se_gain) = series.window_stats(Column::Gain, start);
    let (loss, se_loss) = series.window_stats(Column::Loss, start);
    let (d_sigma_u, _) = series.window_stats(Column::DSigmaU, start);
    let (d_sigma_c, _) = series.window_stats(Column::DSigmaC, start);
    let eps = |se: f64| {
        let se = if se.is_finite() { se } else { 0.0 };
        (thresholds.se_multiplier * se).max(thresholds.floor)
    };
    let eps_info = eps(se_d_info);
    let eps_gain = eps(se_gain);
    let verdict = if d_info.abs() >= eps_info {
        Verdict::Transient
    } else if gain > eps_gain {
        Verdict::Iss
    } else if d_sigma_u > thresholds.floor {
        Verdict::NessUnconditionalOnly
    } else {
        Verdict::Equilibrium
    };
    IssReport {
        window_start: series.steps.get(start).map_or(0, |s| s.t),
        window_len,
        mean_abs_d_info: d_info.abs(),
        se_d_info,
        mean_gain: gain,
        se_gain,
        mean_loss: loss,
        se_loss,
        mean_d_sigma_u: d_sigma_u,
        mean_d_sigma_c: d_sigma_c,
        eps_info,
        eps_gain,
        verdict,
    }
}
