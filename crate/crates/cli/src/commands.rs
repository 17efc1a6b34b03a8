//! The experiment commands. Each computes its sweep in parallel, then emits
//! its artifacts through the shared writer and returns a summary.

use std::f64::consts::SQRT_2;

use qisim_core::biphoton::JointTimeDistribution;
use qisim_core::eit::{optimal_switch_off, store_and_retrieve, ControlTimeline, DecayShape, Pulse, StorageWarning};
use qisim_core::qubit::{
    alpha_quality, chsh_s, correlation_curve, curve_visibility, fit_background_to_fidelities,
    fit_background_to_visibility, g13_crossing_time, g13_decay_model, werner, AngleConvention, FlyingBasis, SixState,
    CHSH_ANGLES,
};
use qisim_core::spectral::{hz_to_rad, pulse_duration_from_sigma, rad_to_hz, sigma_from_pulse_duration, PumpSpectrum};
use qisim_core::svg::{self, Series};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::model;
use crate::output::{grid_rows, ArtifactWriter, Cell};
use crate::CliError;

/// Six-state fidelities measured after 200 ns of storage, in the order
/// H, V, +, −, R, L.
pub const MEASURED_FIDELITIES: [(SixState, f64); 6] = [
    (SixState::H, 0.954),
    (SixState::V, 0.989),
    (SixState::Plus, 0.909),
    (SixState::Minus, 0.889),
    (SixState::R, 0.920),
    (SixState::L, 0.881),
];

const SVG_MAX_CELLS: usize = 128;

fn measured_fidelity(s: SixState) -> Option<f64> {
    MEASURED_FIDELITIES.iter().find(|(x, _)| *x == s).map(|(_, f)| *f)
}

/// `100e-9` → `100ns`, `2.5e-7` → `250ns`, `1.25e-9` → `1p25ns`.
fn ns_label(t: f64) -> String {
    let s = format!("{:.3}", t * 1e9);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{}ns", s.replace('.', "p"))
}

// ---------------------------------------------------------------- visibility

#[derive(Debug, Clone, Serialize)]
pub struct VisibilityRow {
    pub sigma_hz: f64,
    pub t_p_s: f64,
    pub visibility: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VisibilitySummary {
    pub gamma_hz: f64,
    pub rows: Vec<VisibilityRow>,
    /// `(σ/γ, V)` samples of the smooth curve.
    pub curve: Vec<(f64, f64)>,
}

pub fn visibility(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<VisibilitySummary, CliError> {
    let points: Vec<(f64, f64)> = cfg
        .visibility
        .sigma_hz
        .iter()
        .map(|&s| (s, f64::NAN))
        .chain(cfg.visibility.t_p_s.iter().map(|&t| (f64::NAN, t)))
        .collect();
    let rows: Vec<VisibilityRow> = points
        .par_iter()
        .map(|&(sigma_hz, t_p)| {
            let resolved = if t_p.is_nan() {
                PumpSpectrum::gaussian_hz(sigma_hz)
                    .and_then(|p| Ok((sigma_hz, pulse_duration_from_sigma(p.sigma().unwrap())?)))
            } else {
                sigma_from_pulse_duration(t_p).map(|s| (rad_to_hz(s), t_p))
            };
            let result = resolved.clone().and_then(|(s, _)| model::visibility_at_sigma_hz(cfg, s));
            let (sigma_hz, t_p_s) = resolved.unwrap_or((sigma_hz, t_p));
            match result {
                Ok(v) => VisibilityRow { sigma_hz, t_p_s, visibility: Some(v), error: None },
                Err(e) => VisibilityRow { sigma_hz, t_p_s, visibility: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    if !rows.is_empty() && rows.iter().all(|r| r.visibility.is_none()) {
        return Err(CliError::Sweep(rows.iter().filter_map(|r| r.error.clone()).collect::<Vec<_>>().join("; ")));
    }
    let n = cfg.visibility.curve_points;
    let curve: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .filter_map(|k| {
            let ratio = 0.1 * 100f64.powf(k as f64 / (n.max(2) - 1) as f64);
            model::visibility_at_sigma_hz(cfg, ratio * cfg.source.gamma_hz).ok().map(|v| (ratio, v))
        })
        .collect();

    let csv_rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                r.sigma_hz.into(),
                r.t_p_s.into(),
                r.visibility.into(),
                r.error.clone().map_or(Cell::Empty, Cell::Text),
            ]
        })
        .collect();
    w.csv("visibility.csv", &["sigma_hz", "T_p_s", "visibility", "error"], &csv_rows)?;
    let curve_rows: Vec<Vec<Cell>> = curve.iter().map(|&(r, v)| vec![r.into(), v.into()]).collect();
    w.csv("visibility_curve.csv", &["sigma_over_gamma", "visibility"], &curve_rows)?;
    let summary = VisibilitySummary { gamma_hz: cfg.source.gamma_hz, rows, curve };
    w.json("visibility.json", &summary)?;
    w.svg("visibility.svg", || {
        let mut marks: Vec<(f64, f64)> = summary
            .rows
            .iter()
            .filter_map(|r| r.visibility.map(|v| ((r.sigma_hz / summary.gamma_hz).log10(), v)))
            .collect();
        marks.sort_by(|a, b| a.0.total_cmp(&b.0));
        svg::line_plot(
            "Spectral visibility",
            "log10(σ/γ)",
            "V",
            &[
                Series { label: "V(σ/γ)", points: summary.curve.iter().map(|&(r, v)| (r.log10(), v)).collect() },
                Series { label: "sweep", points: marks },
            ],
        )
    })?;
    Ok(summary)
}

// ------------------------------------------------------------------ timedist

#[derive(Debug, Clone, Serialize)]
pub struct TimedistRow {
    pub label: String,
    pub t_p_s: Option<f64>,
    pub pump_kind: String,
    pub pearson: f64,
    pub pearson_after_storage: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimedistSummary {
    pub with_storage: bool,
    pub group_delay_removed_s: Option<f64>,
    pub rows: Vec<TimedistRow>,
}

pub fn timedist(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<TimedistSummary, CliError> {
    let pumps: Vec<(String, Option<f64>, PumpSpectrum)> = if cfg.timedist.t_p_s.is_empty() {
        let p = model::configured_pump(cfg)?;
        vec![(p.kind_name().to_string(), None, p)]
    } else {
        cfg.timedist
            .t_p_s
            .iter()
            .map(|&t| Ok((format!("Tp{}", ns_label(t)), Some(t), PumpSpectrum::from_pulse_duration(t)?)))
            .collect::<Result<_, qisim_core::Error>>()?
    };
    let medium = if cfg.timedist.with_storage { Some(model::medium(cfg)?.0) } else { None };
    type Pair = (JointTimeDistribution, Option<JointTimeDistribution>);
    let results: Vec<Pair> = pumps
        .par_iter()
        .map(|(_, _, pump)| {
            let plain = model::time_distribution(cfg, *pump, None)?;
            let stored = medium.as_ref().map(|m| model::time_distribution(cfg, *pump, Some(m))).transpose()?;
            Ok((plain, stored))
        })
        .collect::<Result<_, qisim_core::Error>>()?;

    let mut rows = Vec::new();
    for ((label, t_p, pump), (plain, stored)) in pumps.iter().zip(&results) {
        emit_distribution(w, &format!("timedist_{label}"), &format!("P(t₁,t₂), {label}"), plain)?;
        if let Some(s) = stored {
            emit_distribution(w, &format!("timedist_{label}_stored"), &format!("P(t₁,t₂) after storage, {label}"), s)?;
        }
        rows.push(TimedistRow {
            label: label.clone(),
            t_p_s: *t_p,
            pump_kind: pump.kind_name().to_string(),
            pearson: plain.pearson(),
            pearson_after_storage: stored.as_ref().map(|s| s.pearson()),
        });
    }
    let summary = TimedistSummary {
        with_storage: cfg.timedist.with_storage,
        group_delay_removed_s: medium.map(|m| m.group_delay()).transpose()?,
        rows,
    };
    w.json("timedist.json", &summary)?;
    Ok(summary)
}

fn emit_distribution(
    w: &mut ArtifactWriter,
    stem: &str,
    title: &str,
    d: &JointTimeDistribution,
) -> Result<(), CliError> {
    let t_ns: Vec<f64> = d.t_grid().points().iter().map(|t| t * 1e9).collect();
    let p = d.density();
    w.csv(&format!("{stem}.csv"), &["t1_ns", "t2_ns", "density"], &grid_rows(&t_ns, |i, j| p[(i, j)]))?;
    w.svg(&format!("{stem}.svg"), || {
        let step = t_ns.len().div_ceil(SVG_MAX_CELLS);
        let idx: Vec<usize> = (0..t_ns.len()).step_by(step).collect();
        let axis: Vec<f64> = idx.iter().map(|&k| t_ns[k]).collect();
        svg::heatmap(title, "t₂ (ns)", "t₁ (ns)", &axis, &axis, |r, c| p[(idx[r], idx[c])])
    })
}

// ----------------------------------------------------------------------- eit

#[derive(Debug, Clone, Serialize)]
pub struct StorageSummary {
    pub pulse_fwhm_s: f64,
    pub switch_off_s: f64,
    pub storage_time_s: f64,
    pub tau_mem_s: f64,
    pub leakage_efficiency: f64,
    pub retrieval_efficiency: f64,
    pub filter_loss: f64,
    pub not_entered: f64,
    pub decay_loss: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EitSummary {
    pub window_fwhm_hz: f64,
    pub group_delay_s: f64,
    /// 2π·Δf·τ_d
    pub delay_bandwidth_product: f64,
    pub delay_bandwidth_convention: &'static str,
    pub v_g: f64,
    pub peak_transmission: f64,
    pub control_off_transmission: f64,
    pub gamma_s_hz: f64,
    pub gamma_s_fitted: bool,
    pub fit_objective: Option<f64>,
    pub warnings: Vec<String>,
    pub storage: StorageSummary,
}

pub fn eit(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<EitSummary, CliError> {
    let (medium, fit) = model::medium(cfg)?;
    let ch = medium.characterize()?;
    let off = medium.control_off();
    let e = &cfg.eit;
    let n = e.spectrum_points;
    let spectrum: Vec<(f64, f64, f64)> = (0..n)
        .map(|k| {
            let f = -0.5 * e.spectrum_span_hz + e.spectrum_span_hz * k as f64 / (n - 1) as f64;
            let d = hz_to_rad(f);
            (f, medium.intensity_transmission(d), off.intensity_transmission(d))
        })
        .collect();

    let decay = model::memory_decay(cfg)?;
    let dt = e.pulse_fwhm_s / 50.0;
    let pulse = Pulse::gaussian(e.pulse_fwhm_s, 3.0 * e.pulse_fwhm_s + 100e-9, 0.0, dt, 4096)?;
    let timeline = ControlTimeline::new(optimal_switch_off(&pulse, &medium)?, e.storage_time_s, e.ramp_s)?;
    let report = store_and_retrieve(&pulse, &medium, &timeline, &decay)?;

    let spectrum_rows: Vec<Vec<Cell>> =
        spectrum.iter().map(|&(f, on, off)| vec![f.into(), on.into(), off.into()]).collect();
    w.csv("eit_spectrum.csv", &["detuning_hz", "transmission_control_on", "transmission_control_off"], &spectrum_rows)?;
    let pulses = [("input", &pulse), ("leaked", &report.leaked_pulse), ("retrieved", &report.output_pulse)];
    let t_end = pulses.iter().map(|(_, p)| support_end(p)).fold(0.0, f64::max) + 4.0 * e.pulse_fwhm_s;
    let in_view = |p: &Pulse, k: usize| p.time(k) <= t_end;
    let mut pulse_rows = Vec::new();
    for (name, p) in pulses {
        for (k, z) in p.samples().iter().enumerate().filter(|(k, _)| in_view(p, *k)) {
            pulse_rows.push(vec![Cell::from(name), (p.time(k) * 1e9).into(), z.norm_sqr().into()]);
        }
    }
    w.csv("eit_storage_pulses.csv", &["pulse", "t_ns", "intensity"], &pulse_rows)?;

    let summary = EitSummary {
        window_fwhm_hz: ch.window_fwhm_hz,
        group_delay_s: ch.group_delay_s,
        delay_bandwidth_product: ch.delay_bandwidth_product,
        delay_bandwidth_convention: "2π·Δf·τ_d",
        v_g: ch.group_velocity_m_per_s,
        peak_transmission: ch.peak_transmission,
        control_off_transmission: ch.control_off_transmission,
        gamma_s_hz: rad_to_hz(medium.gamma_s()),
        gamma_s_fitted: fit.is_some(),
        fit_objective: fit.map(|f| f.objective),
        warnings: ch.warnings.clone(),
        storage: StorageSummary {
            pulse_fwhm_s: e.pulse_fwhm_s,
            switch_off_s: timeline.on_until,
            storage_time_s: e.storage_time_s,
            tau_mem_s: decay.tau_mem,
            leakage_efficiency: report.leakage_efficiency,
            retrieval_efficiency: report.retrieval_efficiency,
            filter_loss: report.filter_loss,
            not_entered: report.not_entered,
            decay_loss: report.decay_loss,
            warnings: report
                .warnings
                .iter()
                .map(|StorageWarning::Capacity { duration, group_delay, leakage }| {
                    format!(
                        "pulse duration {duration:.3e} s exceeds twice the group delay {group_delay:.3e} s; leakage {leakage:.3}"
                    )
                })
                .collect(),
        },
    };
    w.json("eit.json", &summary)?;
    w.svg("eit_spectrum.svg", || {
        svg::line_plot(
            "EIT transmission",
            "detuning (MHz)",
            "|t|²",
            &[
                Series { label: "control on", points: spectrum.iter().map(|&(f, on, _)| (f * 1e-6, on)).collect() },
                Series { label: "control off", points: spectrum.iter().map(|&(f, _, off)| (f * 1e-6, off)).collect() },
            ],
        )
    })?;
    w.svg("eit_storage.svg", || {
        let trace = |p: &Pulse| -> Vec<(f64, f64)> {
            p.samples()
                .iter()
                .enumerate()
                .filter(|(k, _)| in_view(p, *k))
                .map(|(k, z)| (p.time(k) * 1e9, z.norm_sqr()))
                .collect()
        };
        svg::line_plot(
            "Storage and retrieval",
            "t (ns)",
            "intensity",
            &[
                Series { label: "input", points: trace(&pulse) },
                Series { label: "leaked", points: trace(&report.leaked_pulse) },
                Series { label: "retrieved", points: trace(&report.output_pulse) },
            ],
        )
    })?;
    Ok(summary)
}

/// Last time at which the intensity exceeds 10⁻⁶ of the pulse's peak.
fn support_end(p: &Pulse) -> f64 {
    let peak = p.samples().iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    p.samples().iter().rposition(|z| z.norm_sqr() > 1e-6 * peak).map_or(p.t0(), |k| p.time(k))
}

// --------------------------------------------------------------------- store

#[derive(Debug, Clone, Serialize)]
pub struct StateFidelity {
    pub state: &'static str,
    pub fidelity: f64,
    pub measured: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StoreRow {
    pub storage_time_s: f64,
    pub fidelities: Vec<StateFidelity>,
    pub average: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StoreSummary {
    pub background_b: f64,
    pub background_fitted: bool,
    pub fit_time_s: f64,
    pub phase_jitter_rad: f64,
    pub tau_mem_s: f64,
    pub rows: Vec<StoreRow>,
}

/// Background ratio: configured, or fitted to the measured six-state
/// fidelities at `store.fit_time_s`.
pub fn store_background(cfg: &RunConfig) -> Result<(f64, bool), CliError> {
    if let Some(b) = cfg.channel.background_b {
        return Ok((b, false));
    }
    let decay = model::memory_decay(cfg)?;
    let params = model::channel_params(cfg, 0.0, cfg.store.fit_time_s)?;
    let b = fit_background_to_fidelities(&params, &|t| decay.efficiency(t), &MEASURED_FIDELITIES)?;
    Ok((b, true))
}

pub fn store(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<StoreSummary, CliError> {
    let decay = model::memory_decay(cfg)?;
    let (b, fitted) = store_background(cfg)?;
    let rows: Vec<StoreRow> = cfg
        .store
        .storage_times_s
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let params = model::channel_params(cfg, b, t)?;
            let report = model::channel(cfg, &params, &decay, k as u64)?.six_state_battery()?;
            let fidelities: Vec<StateFidelity> = cfg
                .store
                .states
                .iter()
                .map(|&s| StateFidelity {
                    state: s.label(),
                    fidelity: report.get(s).unwrap_or(f64::NAN),
                    measured: measured_fidelity(s),
                })
                .collect();
            let average = fidelities.iter().map(|f| f.fidelity).sum::<f64>() / fidelities.len().max(1) as f64;
            Ok(StoreRow { storage_time_s: t, fidelities, average })
        })
        .collect::<Result<_, qisim_core::Error>>()?;

    let csv_rows: Vec<Vec<Cell>> = rows
        .iter()
        .flat_map(|r| {
            r.fidelities
                .iter()
                .map(move |f| vec![r.storage_time_s.into(), f.state.into(), f.fidelity.into(), f.measured.into()])
        })
        .collect();
    w.csv("store_fidelities.csv", &["storage_time_s", "state", "fidelity", "measured"], &csv_rows)?;
    let summary = StoreSummary {
        background_b: b,
        background_fitted: fitted,
        fit_time_s: cfg.store.fit_time_s,
        phase_jitter_rad: cfg.channel.phase_jitter_rad,
        tau_mem_s: decay.tau_mem,
        rows,
    };
    w.json("store.json", &summary)?;
    for r in &summary.rows {
        w.svg(&format!("store_fidelities_{}.svg", ns_label(r.storage_time_s)), || {
            let bars: Vec<(String, f64, Option<f64>)> =
                r.fidelities.iter().map(|f| (f.state.to_string(), f.fidelity, f.measured)).collect();
            svg::bar_chart(
                &format!("Storage fidelity after {} (ticks: measured)", ns_label(r.storage_time_s)),
                "F",
                &bars,
                (0.5, 1.0),
            )
        })?;
    }
    Ok(summary)
}

// ---------------------------------------------------------------------- bell

#[derive(Debug, Clone, Serialize)]
pub struct BellRow {
    pub t_s: f64,
    pub s: f64,
    pub violated: bool,
    pub visibility_h: f64,
    pub visibility_plus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BellSummary {
    pub source_visibility: f64,
    pub background_b: f64,
    pub background_fitted: bool,
    pub calibration_time_s: f64,
    pub convention: &'static str,
    pub angles_deg: [f64; 4],
    pub rows: Vec<BellRow>,
    pub curve_time_s: f64,
    pub curve_visibility_h: f64,
    pub curve_visibility_plus: f64,
}

pub fn source_visibility(cfg: &RunConfig) -> f64 {
    cfg.channel.v_src.unwrap_or(cfg.bell.local_s / (2.0 * SQRT_2))
}

/// Background ratio: configured, or fitted so the stored pair shows
/// `bell.target_visibility` at `bell.calibration_time_s`.
pub fn bell_background(cfg: &RunConfig) -> Result<(f64, bool), CliError> {
    if let Some(b) = cfg.channel.background_b {
        return Ok((b, false));
    }
    let decay = model::memory_decay(cfg)?;
    let params = model::channel_params(cfg, 0.0, cfg.bell.calibration_time_s)?;
    let b = fit_background_to_visibility(
        source_visibility(cfg),
        &params,
        &|t| decay.efficiency(t),
        cfg.bell.target_visibility,
    )?;
    Ok((b, true))
}

/// S and fringe visibilities of a stored Werner pair at storage time `t`.
pub fn bell_row(cfg: &RunConfig, b: f64, t: f64, stream: u64) -> Result<BellRow, qisim_core::Error> {
    let decay = model::memory_decay(cfg)?;
    let params = model::channel_params(cfg, b, t)?;
    let rho = model::channel(cfg, &params, &decay, stream)?.apply_to_second(&werner(source_visibility(cfg))?)?;
    let s = chsh_s(&rho, CHSH_ANGLES, AngleConvention::Minus);
    Ok(BellRow {
        t_s: t,
        s,
        violated: s > 2.0,
        visibility_h: curve_visibility(&rho, FlyingBasis::H),
        visibility_plus: curve_visibility(&rho, FlyingBasis::Plus),
    })
}

pub fn bell(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<BellSummary, CliError> {
    let (b, fitted) = bell_background(cfg)?;
    let rows: Vec<BellRow> = cfg
        .bell
        .storage_times_s
        .par_iter()
        .enumerate()
        .map(|(k, &t)| bell_row(cfg, b, t, k as u64))
        .collect::<Result<_, _>>()?;
    let decay = model::memory_decay(cfg)?;
    let params = model::channel_params(cfg, b, cfg.bell.curve_time_s)?;
    let stream = cfg.bell.storage_times_s.len() as u64;
    let rho = model::channel(cfg, &params, &decay, stream)?.apply_to_second(&werner(source_visibility(cfg))?)?;
    let thetas_deg: Vec<f64> = (0..=72).map(|k| 2.5 * k as f64).collect();
    let thetas: Vec<f64> = thetas_deg.iter().map(|d| d.to_radians()).collect();
    let curve_h = correlation_curve(&rho, FlyingBasis::H, &thetas);
    let curve_p = correlation_curve(&rho, FlyingBasis::Plus, &thetas);

    let csv_rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                r.t_s.into(),
                r.s.into(),
                Cell::from(if r.violated { "true" } else { "false" }),
                r.visibility_h.into(),
                r.visibility_plus.into(),
            ]
        })
        .collect();
    w.csv("bell_chsh.csv", &["t_s", "S", "violated", "visibility_H", "visibility_plus"], &csv_rows)?;
    let curve_rows: Vec<Vec<Cell>> = thetas_deg
        .iter()
        .zip(curve_h.iter().zip(&curve_p))
        .map(|(&d, (&h, &p))| vec![d.into(), h.into(), p.into()])
        .collect();
    w.csv("bell_correlation_curve.csv", &["theta_deg", "coincidence_H", "coincidence_plus"], &curve_rows)?;
    let summary = BellSummary {
        source_visibility: source_visibility(cfg),
        background_b: b,
        background_fitted: fitted,
        calibration_time_s: cfg.bell.calibration_time_s,
        convention: "minus",
        angles_deg: CHSH_ANGLES.map(f64::to_degrees),
        rows,
        curve_time_s: cfg.bell.curve_time_s,
        curve_visibility_h: curve_visibility(&rho, FlyingBasis::H),
        curve_visibility_plus: curve_visibility(&rho, FlyingBasis::Plus),
    };
    w.json("bell.json", &summary)?;
    w.svg("bell_correlation_curve.svg", || {
        svg::line_plot(
            &format!("Polarization correlation after {}", ns_label(summary.curve_time_s)),
            "θ (deg)",
            "normalized coincidences",
            &[
                Series { label: "flying H", points: thetas_deg.iter().copied().zip(curve_h.iter().copied()).collect() },
                Series { label: "flying +", points: thetas_deg.iter().copied().zip(curve_p.iter().copied()).collect() },
            ],
        )
    })?;
    w.svg("bell_chsh.svg", || {
        let bars: Vec<(String, f64, Option<f64>)> =
            summary.rows.iter().map(|r| (ns_label(r.t_s), r.s, Some(2.0))).collect();
        svg::bar_chart("CHSH S (ticks: local bound)", "S", &bars, (0.0, 2.0 * SQRT_2))
    })?;
    Ok(summary)
}

// ----------------------------------------------------------------------- g13

#[derive(Debug, Clone, Serialize)]
pub struct G13Summary {
    pub g0: f64,
    pub threshold: f64,
    pub tau_mem_s: f64,
    pub decay_shape: &'static str,
    pub crossing_s: Option<f64>,
    pub alpha_at_zero: f64,
    pub alpha_at_crossing: Option<f64>,
}

pub fn g13(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<G13Summary, CliError> {
    let g = &cfg.g13;
    let decay = model::memory_decay(cfg)?;
    let eta = |t: f64| decay.efficiency(t);
    let n = g.n_times;
    let samples: Vec<(f64, f64, Option<f64>)> = (0..n)
        .map(|k| {
            let t = g.t_max_s * k as f64 / (n - 1) as f64;
            let v = g13_decay_model(t, g.g0, &eta)?;
            Ok((t, v, alpha_quality(v).ok()))
        })
        .collect::<Result<_, qisim_core::Error>>()?;
    let crossing = g13_crossing_time(g.g0, g.threshold, &eta, g.t_max_s).ok();
    let alpha_at_crossing = crossing.map(|t| g13_decay_model(t, g.g0, &eta).and_then(alpha_quality)).transpose()?;

    let rows: Vec<Vec<Cell>> = samples.iter().map(|&(t, v, a)| vec![t.into(), v.into(), a.into()]).collect();
    w.csv("g13.csv", &["t_s", "g13", "alpha"], &rows)?;
    let summary = G13Summary {
        g0: g.g0,
        threshold: g.threshold,
        tau_mem_s: decay.tau_mem,
        decay_shape: match decay.shape {
            DecayShape::Gaussian => "gaussian",
            DecayShape::Exponential => "exponential",
        },
        crossing_s: crossing,
        alpha_at_zero: alpha_quality(g.g0)?,
        alpha_at_crossing,
    };
    w.json("g13.json", &summary)?;
    w.svg("g13.svg", || {
        svg::line_plot(
            "Cross correlation after storage",
            "t (μs)",
            "g13",
            &[
                Series { label: "g13", points: samples.iter().map(|&(t, v, _)| (t * 1e6, v)).collect() },
                Series { label: "threshold", points: vec![(0.0, g.threshold), (g.t_max_s * 1e6, g.threshold)] },
            ],
        )
    })?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::ns_label;

    #[test]
    fn labels() {
        assert_eq!(ns_label(100e-9), "100ns");
        assert_eq!(ns_label(30e-9), "30ns");
        assert_eq!(ns_label(0.0), "0ns");
        assert_eq!(ns_label(1e-6), "1000ns");
        assert_eq!(ns_label(1.25e-9), "1p25ns");
    }
}
