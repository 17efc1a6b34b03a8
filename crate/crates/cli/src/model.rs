//! Core model objects built from a [`RunConfig`].

use qisim_core::biphoton::{self, JointTimeDistribution, TimeGrid};
use qisim_core::eit::{fit_gamma_s, EitMedium, GammaSFit, MemoryDecay};
use qisim_core::qubit::{memory_lifetime_for_crossing, MemoryChannel, MemoryChannelParams};
use qisim_core::spectral::{
    build_jsa, hz_to_rad, sigma_from_pulse_duration, CavityLine, FrequencyGrid, JointSpectralAmplitude, PumpSpectrum,
};
use qisim_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Bandwidth, PumpKind, RunConfig};

const DEFAULT_FREQ_SPAN_FACTOR: f64 = 40.0;
const DEFAULT_FREQ_POINTS: usize = 512;

pub fn cavity_line(cfg: &RunConfig) -> Result<CavityLine> {
    CavityLine::from_linewidth_hz(cfg.source.gamma_hz)
}

/// The pump described by `source.*`.
pub fn configured_pump(cfg: &RunConfig) -> Result<PumpSpectrum> {
    match cfg.source.pump_kind {
        PumpKind::FlatLimit => Ok(PumpSpectrum::FlatLimit),
        PumpKind::DeltaLimit => Ok(PumpSpectrum::DeltaLimit),
        PumpKind::Gaussian => match cfg.source.bandwidth {
            Bandwidth::PulseDuration(t) => PumpSpectrum::from_pulse_duration(t),
            Bandwidth::SigmaHz(s) => PumpSpectrum::gaussian_hz(s),
        },
    }
}

/// Default grid unless `grids.n_freq` or `grids.freq_span_factor` is set,
/// in which case the span is `factor·max(γ, σ)` with `n_freq` points.
pub fn frequency_grid(cfg: &RunConfig, line: &CavityLine, pump: &PumpSpectrum) -> Result<FrequencyGrid> {
    if cfg.grids.n_freq.is_none() && cfg.grids.freq_span_factor.is_none() {
        return FrequencyGrid::default_for(line, pump);
    }
    let scale = pump.sigma().map_or(line.gamma(), |s| s.max(line.gamma()));
    let factor = cfg.grids.freq_span_factor.unwrap_or(DEFAULT_FREQ_SPAN_FACTOR);
    FrequencyGrid::new(factor * scale, cfg.grids.n_freq.unwrap_or(DEFAULT_FREQ_POINTS))
}

/// Default detection window scaled by `grids.time_span_factor`, sampled
/// with `grids.n_time` points.
pub fn time_grid(cfg: &RunConfig, line: &CavityLine, pump: &PumpSpectrum) -> Result<TimeGrid> {
    let base = TimeGrid::default_for(line, pump)?;
    let f = cfg.grids.time_span_factor;
    TimeGrid::new(f * base.start(), f * base.stop(), cfg.grids.n_time)
}

pub fn source(cfg: &RunConfig, pump: PumpSpectrum) -> Result<JointSpectralAmplitude> {
    let line = cavity_line(cfg)?;
    build_jsa(frequency_grid(cfg, &line, &pump)?, line, pump)
}

/// Spectral visibility for a Gaussian pump of standard deviation `sigma_hz`.
pub fn visibility_at_sigma_hz(cfg: &RunConfig, sigma_hz: f64) -> Result<f64> {
    biphoton::visibility(&source(cfg, PumpSpectrum::gaussian_hz(sigma_hz)?)?)
}

pub fn visibility_at_pulse_duration(cfg: &RunConfig, t_p: f64) -> Result<f64> {
    biphoton::visibility(&source(cfg, PumpSpectrum::gaussian(sigma_from_pulse_duration(t_p)?)?)?)
}

/// Joint detection-time distribution, optionally after the signal photon
/// passes the delay-compensated memory filter.
pub fn time_distribution(
    cfg: &RunConfig,
    pump: PumpSpectrum,
    filter: Option<&EitMedium>,
) -> Result<JointTimeDistribution> {
    let line = cavity_line(cfg)?;
    let tg = time_grid(cfg, &line, &pump)?;
    match (pump, filter) {
        (PumpSpectrum::DeltaLimit, None) => JointTimeDistribution::continuous_limit(&line, tg),
        (PumpSpectrum::DeltaLimit, Some(_)) => Err(Error::UnsupportedPump("delta_limit")),
        (pump, None) => biphoton::joint_time_distribution(&source(cfg, pump)?, &tg),
        (pump, Some(m)) => {
            // The narrow window stretches the signal photon by up to one group delay.
            let tg = TimeGrid::new(tg.start(), tg.stop() + m.group_delay()?.max(0.0), tg.len())?;
            let f = m.delay_compensated_filter()?;
            biphoton::post_storage_distribution(&source(cfg, pump)?, &tg, &f)
        }
    }
}

/// Medium with `γ_s` either as configured or fitted to the target window
/// and delay.
pub fn medium(cfg: &RunConfig) -> Result<(EitMedium, Option<GammaSFit>)> {
    let e = &cfg.eit;
    let base = EitMedium::new(
        e.od,
        hz_to_rad(e.rabi_hz),
        hz_to_rad(e.gamma_ge_hz),
        hz_to_rad(e.gamma_s_hz.unwrap_or(0.0)),
        e.length_m,
    )?;
    match e.gamma_s_hz {
        Some(_) => Ok((base, None)),
        None => {
            let fit = fit_gamma_s(&base, hz_to_rad(e.target_window_hz), e.target_delay_s)?;
            Ok((base.with_gamma_s(fit.gamma_s)?, Some(fit)))
        }
    }
}

/// Memory lifetime: `eit.tau_mem_s`, or the value placing the g₁₃
/// threshold crossing at `g13.crossing_s`.
pub fn memory_lifetime(cfg: &RunConfig) -> Result<f64> {
    match cfg.eit.tau_mem_s {
        Some(t) => Ok(t),
        None => memory_lifetime_for_crossing(cfg.g13.g0, cfg.g13.threshold, cfg.g13.crossing_s, cfg.eit.decay_shape),
    }
}

pub fn memory_decay(cfg: &RunConfig) -> Result<MemoryDecay> {
    MemoryDecay::new(cfg.eit.eta0, memory_lifetime(cfg)?, cfg.eit.decay_shape)
}

pub fn channel_params(cfg: &RunConfig, background: f64, storage_time: f64) -> Result<MemoryChannelParams> {
    let c = &cfg.channel;
    MemoryChannelParams::new(c.eta_u, c.eta_d, c.phase_jitter_rad, background, storage_time)
}

/// Analytic jitter average, or a seeded Monte Carlo mean when
/// `channel.jitter_samples > 0`. Each `stream` draws independent phases.
pub fn channel(
    cfg: &RunConfig,
    params: &MemoryChannelParams,
    decay: &MemoryDecay,
    stream: u64,
) -> Result<MemoryChannel> {
    let eta = |t: f64| decay.efficiency(t);
    match cfg.channel.jitter_samples {
        0 => MemoryChannel::new(params, &eta),
        n => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream);
            MemoryChannel::sampled(params, &eta, n, &mut rng)
        }
    }
}
