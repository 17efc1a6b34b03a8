//! Browser bindings: three interactive views over the core models. Every
//! entry point returns a JSON string; on invalid input it carries an
//! `error` field instead of throwing.

use qisim_core::biphoton::visibility;
use qisim_core::eit::{DecayShape, EitMedium, MemoryDecay};
use qisim_core::qubit::{
    chsh_s, correlation_curve, curve_visibility, stored_pair, AngleConvention, FlyingBasis, MemoryChannelParams,
    CHSH_ANGLES,
};
use qisim_core::spectral::{build_jsa, hz_to_rad, CavityLine, FrequencyGrid, PumpSpectrum};
use qisim_core::svg::{self, Series};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn to_string(result: qisim_core::Result<Value>) -> String {
    result.unwrap_or_else(|e| json!({ "error": e.to_string() })).to_string()
}

fn source_visibility(line: CavityLine, sigma: f64) -> qisim_core::Result<f64> {
    let pump = PumpSpectrum::gaussian(sigma)?;
    visibility(&build_jsa(FrequencyGrid::default_for(&line, &pump)?, line, pump)?)
}

pub fn visibility_view(gamma_mhz: f64, sigma_mhz: f64) -> qisim_core::Result<Value> {
    let line = CavityLine::from_linewidth_hz(gamma_mhz * 1e6)?;
    let sigma = hz_to_rad(sigma_mhz * 1e6);
    let v = source_visibility(line, sigma)?;
    let curve: Vec<(f64, f64)> = (0..25)
        .filter_map(|k| {
            let ratio = 0.1 * 100f64.powf(k as f64 / 24.0);
            source_visibility(line, ratio * line.gamma()).ok().map(|v| (ratio.log10(), v))
        })
        .collect();
    let marker = vec![((sigma / line.gamma()).log10(), 0.0), ((sigma / line.gamma()).log10(), v)];
    let plot = svg::line_plot(
        "Spectral visibility",
        "log10(σ/γ)",
        "V",
        &[Series { label: "V(σ/γ)", points: curve }, Series { label: "selected σ", points: marker }],
    );
    Ok(json!({ "visibility": v, "svg": plot }))
}

pub fn eit_view(od: f64, rabi_mhz: f64, gamma_ge_mhz: f64, gamma_s_khz: f64) -> qisim_core::Result<Value> {
    let m = EitMedium::new(
        od,
        hz_to_rad(rabi_mhz * 1e6),
        hz_to_rad(gamma_ge_mhz * 1e6),
        hz_to_rad(gamma_s_khz * 1e3),
        4e-3,
    )?;
    let ch = m.characterize()?;
    let off = m.control_off();
    let span = 4.0 * rabi_mhz.max(gamma_ge_mhz);
    let f: Vec<f64> = (0..=400).map(|k| -span + 2.0 * span * k as f64 / 400.0).collect();
    let on_pts = f.iter().map(|&x| (x, m.intensity_transmission(hz_to_rad(x * 1e6)))).collect();
    let off_pts = f.iter().map(|&x| (x, off.intensity_transmission(hz_to_rad(x * 1e6)))).collect();
    let plot = svg::line_plot(
        "Transmission",
        "detuning (MHz)",
        "|t|²",
        &[Series { label: "control on", points: on_pts }, Series { label: "control off", points: off_pts }],
    );
    Ok(json!({
        "window_fwhm_hz": ch.window_fwhm_hz,
        "group_delay_s": ch.group_delay_s,
        "delay_bandwidth_product": ch.delay_bandwidth_product,
        "v_g": ch.group_velocity_m_per_s,
        "svg": plot,
    }))
}

pub fn bell_view(v_src: f64, background: f64, storage_us: f64, tau_mem_us: f64) -> qisim_core::Result<Value> {
    let decay = MemoryDecay::new(1.0, tau_mem_us * 1e-6, DecayShape::Gaussian)?;
    let params = MemoryChannelParams::new(1.0, 1.0, std::f64::consts::TAU / 28.0, background, storage_us * 1e-6)?;
    let rho = stored_pair(v_src, &params, &|t| decay.efficiency(t))?;
    let s = chsh_s(&rho, CHSH_ANGLES, AngleConvention::Minus);
    let deg: Vec<f64> = (0..=72).map(|k| 2.5 * k as f64).collect();
    let rad: Vec<f64> = deg.iter().map(|d| d.to_radians()).collect();
    let curve = |b| deg.iter().copied().zip(correlation_curve(&rho, b, &rad)).collect();
    let plot = svg::line_plot(
        "Polarization correlation",
        "θ (deg)",
        "normalized coincidences",
        &[
            Series { label: "flying H", points: curve(FlyingBasis::H) },
            Series { label: "flying +", points: curve(FlyingBasis::Plus) },
        ],
    );
    Ok(json!({
        "s": s,
        "violated": s > 2.0,
        "visibility_h": curve_visibility(&rho, FlyingBasis::H),
        "visibility_plus": curve_visibility(&rho, FlyingBasis::Plus),
        "svg": plot,
    }))
}

#[wasm_bindgen]
pub fn visibility_explorer(gamma_mhz: f64, sigma_mhz: f64) -> String {
    to_string(visibility_view(gamma_mhz, sigma_mhz))
}

#[wasm_bindgen]
pub fn eit_spectrum(od: f64, rabi_mhz: f64, gamma_ge_mhz: f64, gamma_s_khz: f64) -> String {
    to_string(eit_view(od, rabi_mhz, gamma_ge_mhz, gamma_s_khz))
}

#[wasm_bindgen]
pub fn bell_explorer(v_src: f64, background: f64, storage_us: f64, tau_mem_us: f64) -> String {
    to_string(bell_view(v_src, background, storage_us, tau_mem_us))
}
