//! Tolerance checks run by `reproduce-all` against measured values.

use std::f64::consts::SQRT_2;

use qisim_core::qubit::{bell_state, chsh_s, werner, AngleConvention, CHSH_ANGLES};
use serde::Serialize;

use crate::commands::{
    bell_background, bell_row, BellSummary, EitSummary, G13Summary, StoreSummary, TimedistSummary, MEASURED_FIDELITIES,
};
use crate::config::RunConfig;
use crate::model;
use crate::CliError;

pub const MEASURED_VISIBILITY_12_5_MHZ: f64 = 0.97;
pub const MEASURED_VISIBILITY_3_7_MHZ: f64 = 0.80;
pub const MEASURED_WINDOW_HZ: f64 = 5.5e6;
pub const MEASURED_DELAY_S: f64 = 200e-9;
pub const MEASURED_DELAY_BANDWIDTH: f64 = 7.0;
pub const MEASURED_GROUP_VELOCITY: f64 = 2e4;
pub const MEASURED_AVERAGE_FIDELITY: f64 = 0.924;
pub const MEASURED_S_1US: f64 = 2.28;
pub const MEASURED_S_1US_UNCERTAINTY: f64 = 0.17;
pub const MEASURED_CROSSING_S: f64 = 2e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    /// `abs`: |value − target| ≤ tolerance; `rel`: relative; `max`/`min`: bound.
    pub mode: &'static str,
    pub passed: bool,
}

impl Check {
    fn abs(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::build(name, value, target, tolerance, "abs", (value - target).abs() <= tolerance)
    }

    fn rel(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::build(name, value, target, tolerance, "rel", (value - target).abs() <= tolerance * target.abs())
    }

    fn max(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::build(name, value, bound, 0.0, "max", value <= bound)
    }

    fn min(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::build(name, value, bound, 0.0, "min", value > bound)
    }

    fn build(name: impl Into<String>, value: f64, target: f64, tolerance: f64, mode: &'static str, ok: bool) -> Self {
        Self { name: name.into(), value, target, tolerance, mode, passed: ok && value.is_finite() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub all_passed: bool,
    pub failures: Vec<String>,
    pub checks: Vec<Check>,
}

pub struct Summaries<'a> {
    pub timedist: &'a TimedistSummary,
    pub eit: &'a EitSummary,
    pub store: &'a StoreSummary,
    pub bell: &'a BellSummary,
    pub g13: &'a G13Summary,
}

pub fn run(cfg: &RunConfig, s: &Summaries<'_>) -> Result<CheckReport, CliError> {
    let mut checks = vec![
        Check::abs(
            "visibility_sigma_12.5MHz",
            model::visibility_at_sigma_hz(cfg, 12.5e6)?,
            MEASURED_VISIBILITY_12_5_MHZ,
            0.01,
        ),
        Check::abs(
            "visibility_sigma_3.7MHz",
            model::visibility_at_sigma_hz(cfg, 3.7e6)?,
            MEASURED_VISIBILITY_3_7_MHZ,
            0.02,
        ),
    ];
    for r in &s.timedist.rows {
        match r.t_p_s {
            Some(t) if (t - 100e-9).abs() < 1e-12 => {
                checks.push(Check::min("timedist_pearson_Tp100ns", r.pearson, 0.3))
            }
            Some(t) if (t - 30e-9).abs() < 1e-12 => checks.push(Check::max("timedist_pearson_Tp30ns", r.pearson, 0.15)),
            _ => {}
        }
    }

    let e = s.eit;
    checks.extend([
        Check::rel("eit_window_fwhm_hz", e.window_fwhm_hz, MEASURED_WINDOW_HZ, 0.10),
        Check::rel("eit_group_delay_s", e.group_delay_s, MEASURED_DELAY_S, 0.10),
        Check::rel("eit_delay_bandwidth_product", e.delay_bandwidth_product, MEASURED_DELAY_BANDWIDTH, 0.15),
        Check::rel("eit_group_velocity", e.v_g, MEASURED_GROUP_VELOCITY, 0.10),
        Check::rel("eit_control_off_transmission", e.control_off_transmission, (-cfg.eit.od).exp(), 1e-9),
    ]);

    if let Some(row) = s.store.rows.iter().find(|r| (r.storage_time_s - 200e-9).abs() < 1e-12) {
        for (state, measured) in MEASURED_FIDELITIES {
            if let Some(f) = row.fidelities.iter().find(|f| f.state == state.label()) {
                checks.push(Check::abs(format!("fidelity_{}", state.label()), f.fidelity, measured, 0.04));
            }
        }
        checks.push(Check::abs("fidelity_average", row.average, MEASURED_AVERAGE_FIDELITY, 0.03));
    }

    let ideal = chsh_s(&bell_state(), CHSH_ANGLES, AngleConvention::Minus);
    checks.push(Check::abs("chsh_ideal", ideal, 2.0 * SQRT_2, 1e-9));
    let s_1us = match s.bell.rows.iter().find(|r| (r.t_s - 1e-6).abs() < 1e-12) {
        Some(r) => r.s,
        None => bell_row(cfg, bell_background(cfg)?.0, 1e-6, u64::MAX)?.s,
    };
    checks.push(Check::abs("chsh_1us", s_1us, MEASURED_S_1US, MEASURED_S_1US_UNCERTAINTY));
    let weak = chsh_s(&werner(0.70)?, CHSH_ANGLES, AngleConvention::Minus);
    checks.push(Check::max("chsh_source_visibility_0.70", weak, 2.0));

    let g = s.g13;
    checks.push(Check::rel("g13_crossing_s", g.crossing_s.unwrap_or(f64::NAN), MEASURED_CROSSING_S, 0.10));
    checks.push(Check::abs("alpha_at_crossing", g.alpha_at_crossing.unwrap_or(f64::NAN), 1.0, 1e-9));

    let failures: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    Ok(CheckReport { all_passed: failures.is_empty(), failures, checks })
}
