//! Λ-type EIT medium: probe transmission, slow light and a phenomenological
//! stop-light memory.
//!
//! The amplitude transfer function of an ensemble of optical depth `OD` is
//!
//! ```text
//! t(δ) = exp(−(OD/2) · γ_ge(γ_s − iδ) / ((γ_ge − iδ)(γ_s − iδ) + Ω_c²/4))
//! ```
//!
//! with the sign convention of the rest of the crate (a field component
//! `e^{−iδt}`), so a positive phase slope `d arg t/dδ` is a delay.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, ensure_unit_interval, Error, Result};
use crate::optimize;
use crate::spectral::{hz_to_rad, TWO_PI};

/// Half the Rb D1 natural linewidth, 2π × 2.87 MHz.
pub const RB_D1_GAMMA_GE_HZ: f64 = 2.87e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EitMedium {
    optical_depth: f64,
    rabi_control: f64,
    gamma_ge: f64,
    gamma_s: f64,
    length: f64,
}

impl EitMedium {
    /// All rates in rad/s, length in metres.
    pub fn new(optical_depth: f64, rabi_control: f64, gamma_ge: f64, gamma_s: f64, length: f64) -> Result<Self> {
        ensure_positive("optical_depth", optical_depth)?;
        ensure_non_negative("rabi_control", rabi_control)?;
        ensure_positive("gamma_ge", gamma_ge)?;
        ensure_non_negative("gamma_s", gamma_s)?;
        ensure_positive("length", length)?;
        Ok(Self { optical_depth, rabi_control, gamma_ge, gamma_s, length })
    }

    /// OD 55, Ω_c = 2π·12.6 MHz, γ_ge = 2π·2.87 MHz, γ_s = 0, L = 4 mm.
    pub fn reference() -> Self {
        Self {
            optical_depth: 55.0,
            rabi_control: hz_to_rad(12.6e6),
            gamma_ge: hz_to_rad(RB_D1_GAMMA_GE_HZ),
            gamma_s: 0.0,
            length: 4e-3,
        }
    }

    pub fn optical_depth(&self) -> f64 {
        self.optical_depth
    }

    pub fn rabi_control(&self) -> f64 {
        self.rabi_control
    }

    pub fn gamma_ge(&self) -> f64 {
        self.gamma_ge
    }

    pub fn gamma_s(&self) -> f64 {
        self.gamma_s
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn with_gamma_s(self, gamma_s: f64) -> Result<Self> {
        Self::new(self.optical_depth, self.rabi_control, self.gamma_ge, gamma_s, self.length)
    }

    pub fn with_rabi_control(self, rabi_control: f64) -> Result<Self> {
        Self::new(self.optical_depth, rabi_control, self.gamma_ge, self.gamma_s, self.length)
    }

    pub fn with_optical_depth(self, optical_depth: f64) -> Result<Self> {
        Self::new(optical_depth, self.rabi_control, self.gamma_ge, self.gamma_s, self.length)
    }

    pub fn with_length(self, length: f64) -> Result<Self> {
        Self::new(self.optical_depth, self.rabi_control, self.gamma_ge, self.gamma_s, length)
    }

    /// Same medium with the control field off.
    pub fn control_off(self) -> Self {
        Self { rabi_control: 0.0, ..self }
    }

    /// `ln t(δ)`; its imaginary part is the (unwrapped) transmitted phase.
    pub fn log_transmission(&self, delta: f64) -> Complex64 {
        let i = Complex64::i();
        if self.rabi_control == 0.0 {
            // Two-level limit; the spin factor cancels.
            return -0.5 * self.optical_depth * self.gamma_ge / (Complex64::new(self.gamma_ge, 0.0) - i * delta);
        }
        let spin = Complex64::new(self.gamma_s, 0.0) - i * delta;
        let optical = Complex64::new(self.gamma_ge, 0.0) - i * delta;
        let denom = optical * spin + 0.25 * self.rabi_control * self.rabi_control;
        -0.5 * self.optical_depth * self.gamma_ge * spin / denom
    }

    pub fn transmission(&self, delta: f64) -> Complex64 {
        self.log_transmission(delta).exp()
    }

    /// |t(δ)|²
    pub fn intensity_transmission(&self, delta: f64) -> f64 {
        (2.0 * self.log_transmission(delta).re).exp()
    }

    pub fn has_transparency_window(&self) -> bool {
        self.rabi_control > 0.0 && self.intensity_transmission(0.0) > (-0.5 * self.optical_depth).exp()
    }

    /// Full width (rad/s) of the transparency peak at half its on-resonance
    /// intensity transmission.
    pub fn window_fwhm(&self) -> Result<f64> {
        if !self.has_transparency_window() {
            return Err(Error::Undefined("the medium shows no transparency window".into()));
        }
        let half = 0.5 * self.intensity_transmission(0.0);
        let reach = self.rabi_control;
        let steps = 20_000;
        let h = reach / steps as f64;
        let mut inside = 0.0;
        for k in 1..=steps {
            let d = k as f64 * h;
            if self.intensity_transmission(d) < half {
                let edge = optimize::bisect(|x| self.intensity_transmission(x) - half, inside, d, 1e-9 * h)?;
                return Ok(2.0 * edge);
            }
            inside = d;
        }
        Err(Error::Undefined("transmission never falls to half its peak".into()))
    }

    /// Group delay d(arg t)/dδ at δ = 0, by central difference.
    pub fn group_delay(&self) -> Result<f64> {
        if self.rabi_control <= 0.0 {
            return Err(Error::InvalidInput("group delay needs a control field".into()));
        }
        let scale = self.window_fwhm().unwrap_or(0.5 * self.rabi_control);
        let h = 1e-4 * scale;
        Ok((self.log_transmission(h).im - self.log_transmission(-h).im) / (2.0 * h))
    }

    /// L / τ_d
    pub fn group_velocity(&self) -> Result<f64> {
        let tau = self.group_delay()?;
        if tau <= 0.0 {
            return Err(Error::Undefined(format!("group delay {tau} s is not positive")));
        }
        Ok(self.length / tau)
    }

    /// Transfer function with the mean group delay removed, so a filtered
    /// photon stays centred on its undelayed time axis.
    pub fn delay_compensated_filter(&self) -> Result<impl Fn(f64) -> Complex64> {
        let tau = self.group_delay()?;
        let medium = *self;
        Ok(move |delta: f64| medium.transmission(delta) * Complex64::from_polar(1.0, -delta * tau))
    }

    pub fn characterize(&self) -> Result<EitCharacterization> {
        let window = self.window_fwhm()?;
        let delay = self.group_delay()?;
        let mut warnings = Vec::new();
        if delay <= 0.0 {
            warnings.push(format!("non-positive group delay {delay:.3e} s; the window is too broad for slow light"));
        }
        Ok(EitCharacterization {
            window_fwhm_hz: window / TWO_PI,
            group_delay_s: delay,
            delay_bandwidth_product: window * delay,
            group_velocity_m_per_s: if delay > 0.0 { self.length / delay } else { f64::NAN },
            peak_transmission: self.intensity_transmission(0.0),
            control_off_transmission: self.control_off().intensity_transmission(0.0),
            warnings,
        })
    }
}

/// Amplitude transfer `t(δ)` of the medium.
pub fn transmission(delta: f64, medium: &EitMedium) -> Complex64 {
    medium.transmission(delta)
}

/// Group delay in seconds; see [`EitMedium::group_delay`].
pub fn group_delay(medium: &EitMedium) -> Result<f64> {
    medium.group_delay()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EitCharacterization {
    pub window_fwhm_hz: f64,
    pub group_delay_s: f64,
    /// Angular window width times delay, 2π·Δf·τ_d.
    pub delay_bandwidth_product: f64,
    pub group_velocity_m_per_s: f64,
    pub peak_transmission: f64,
    pub control_off_transmission: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSFit {
    pub gamma_s: f64,
    pub window_fwhm: f64,
    pub group_delay: f64,
    /// Sum of squared log-ratios against the two targets.
    pub objective: f64,
}

/// Fits the spin-wave decoherence rate so that the transparency window and
/// group delay best match the targets, in the log-ratio least-squares sense.
/// The search covers `0 ≤ γ_s ≤ Ω_c/2`, beyond which no window survives.
pub fn fit_gamma_s(medium: &EitMedium, target_window: f64, target_delay: f64) -> Result<GammaSFit> {
    ensure_positive("target_window", target_window)?;
    ensure_positive("target_delay", target_delay)?;
    if medium.rabi_control() <= 0.0 {
        return Err(Error::FitFailure("no control field, nothing to fit".into()));
    }
    let penalty = 1e6;
    let objective = |gs: f64| -> f64 {
        let Ok(m) = medium.with_gamma_s(gs) else { return penalty };
        match (m.window_fwhm(), m.group_delay()) {
            (Ok(w), Ok(tau)) if tau > 0.0 => {
                let a = (w / target_window).ln();
                let b = (tau / target_delay).ln();
                a * a + b * b
            }
            _ => penalty,
        }
    };
    let upper = 0.5 * medium.rabi_control();
    let best = optimize::golden_section_min(&objective, 0.0, upper, 1e-7 * upper)?;
    let candidates = [(0.0, objective(0.0)), best];
    let (gs, obj) = candidates
        .iter()
        .copied()
        .filter(|(_, o)| o.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::FitFailure("objective is not finite anywhere".into()))?;
    if obj >= penalty {
        return Err(Error::FitFailure("no γ_s in range yields a transparency window".into()));
    }
    let fitted = medium.with_gamma_s(gs)?;
    Ok(GammaSFit {
        gamma_s: gs,
        window_fwhm: fitted.window_fwhm()?,
        group_delay: fitted.group_delay()?,
        objective: obj,
    })
}

/// Uniformly sampled complex field envelope, |a|² in photons (or energy) per
/// second.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    t0: f64,
    dt: f64,
    samples: Vec<Complex64>,
}

impl Pulse {
    pub fn new(t0: f64, dt: f64, samples: Vec<Complex64>) -> Result<Self> {
        ensure_finite("t0", t0)?;
        ensure_positive("dt", dt)?;
        if samples.len() < 2 {
            return Err(Error::InvalidInput("a pulse needs at least two samples".into()));
        }
        Ok(Self { t0, dt, samples })
    }

    /// Unit-energy Gaussian with intensity FWHM `fwhm`, centred at `center`.
    pub fn gaussian(fwhm: f64, center: f64, t0: f64, dt: f64, n: usize) -> Result<Self> {
        ensure_positive("fwhm", fwhm)?;
        let s = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
        let samples = (0..n)
            .map(|k| {
                let x = (t0 + k as f64 * dt - center) / s;
                Complex64::new((-0.25 * x * x).exp(), 0.0)
            })
            .collect();
        Self::new(t0, dt, samples)?.normalized()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn normalized(mut self) -> Result<Self> {
        let e = self.energy();
        if !(e > 0.0) {
            return Err(Error::InvalidInput("pulse has zero energy".into()));
        }
        let f = e.sqrt().recip();
        self.samples.iter_mut().for_each(|z| *z *= f);
        Ok(self)
    }

    pub fn peak_time(&self) -> f64 {
        let k = self
            .samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.time(k)
    }

    /// Length of the central interval holding 95% of the energy.
    pub fn duration(&self) -> f64 {
        let total = self.energy() / self.dt;
        let (mut acc, mut lo, mut hi) = (0.0, None, None);
        for (k, z) in self.samples.iter().enumerate() {
            acc += z.norm_sqr();
            if lo.is_none() && acc >= 0.025 * total {
                lo = Some(k);
            }
            if hi.is_none() && acc >= 0.975 * total {
                hi = Some(k);
            }
        }
        match (lo, hi) {
            (Some(a), Some(b)) => (b - a) as f64 * self.dt,
            _ => 0.0,
        }
    }

    /// Returns a copy with `extra` zero samples appended.
    fn padded(&self, extra: usize) -> Vec<Complex64> {
        let mut v = self.samples.clone();
        v.resize(self.samples.len() + extra, Complex64::new(0.0, 0.0));
        v
    }
}

fn fft_pair(n: usize) -> (Arc<dyn rustfft::Fft<f64>>, Arc<dyn rustfft::Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// Angular frequency of FFT bin `k` for `n` samples spaced `dt`.
fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    TWO_PI * signed / (n as f64 * dt)
}

/// Result of propagating a pulse through the medium.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub output: Pulse,
    /// Transmitted energy evaluated in the frequency domain.
    pub transmitted_energy: f64,
}

/// Applies `t(δ)` to a pulse in the frequency domain. The output lives on an
/// extended buffer long enough to hold the delayed pulse.
pub fn propagate(pulse: &Pulse, medium: &EitMedium) -> Result<Pulse> {
    propagate_detailed(pulse, medium).map(|p| p.output)
}

pub fn propagate_detailed(pulse: &Pulse, medium: &EitMedium) -> Result<Propagation> {
    let dt = pulse.dt();
    let nyquist = std::f64::consts::PI / dt;
    let feature = medium.window_fwhm().unwrap_or_else(|_| medium.rabi_control().max(medium.gamma_ge()));
    if nyquist < 4.0 * feature {
        return Err(Error::Resolution(format!(
            "sample spacing {dt:.3e} s is too coarse for a {:.3e} Hz spectral feature",
            feature / TWO_PI
        )));
    }
    let delay = if medium.rabi_control() > 0.0 { medium.group_delay()?.max(0.0) } else { 0.0 };
    let min_len = 2 * pulse.len() + (4.0 * delay / dt).ceil() as usize;
    let n = min_len.next_power_of_two();
    let (fwd, inv) = fft_pair(n);

    let mut buf = pulse.padded(n - pulse.len());
    fwd.process(&mut buf);

    let total: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    let edge: f64 = buf
        .iter()
        .enumerate()
        .filter(|(k, _)| bin_frequency(*k, n, dt).abs() > 0.9 * nyquist)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    if total > 0.0 && edge / total > 0.01 {
        return Err(Error::Resolution("pulse spectrum reaches the Nyquist band".into()));
    }

    for (k, z) in buf.iter_mut().enumerate() {
        // FFT bin ω_k carries the detuning δ = −ω_k in the e^{−iδt} convention.
        *z *= medium.transmission(-bin_frequency(k, n, dt));
    }
    let transmitted_energy = buf.iter().map(|z| z.norm_sqr()).sum::<f64>() * dt / n as f64;
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);

    let tail_start = n - n / 20;
    let tail: f64 = buf[tail_start..].iter().map(|z| z.norm_sqr()).sum::<f64>() * dt;
    if tail > 1e-3 * pulse.energy() {
        return Err(Error::Resolution("delayed pulse wraps around the transform window".into()));
    }

    Ok(Propagation { output: Pulse::new(pulse.t0(), dt, buf)?, transmitted_energy })
}

/// Control-field schedule for one storage attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlTimeline {
    /// Time at which the control field is switched off.
    pub on_until: f64,
    /// Storage time t_s before the control is switched back on.
    pub off_duration: f64,
    /// Switching time scale.
    pub ramp: f64,
}

impl ControlTimeline {
    pub fn new(on_until: f64, off_duration: f64, ramp: f64) -> Result<Self> {
        ensure_non_negative("on_until", on_until)?;
        ensure_non_negative("off_duration", off_duration)?;
        ensure_positive("ramp", ramp)?;
        Ok(Self { on_until, off_duration, ramp })
    }
}

/// Switch-off time that captures the most energy of the propagated pulse
/// inside the medium, i.e. in the window `(t_off, t_off + τ_d]` of exit times.
pub fn optimal_switch_off(pulse: &Pulse, medium: &EitMedium) -> Result<f64> {
    let out = propagate(pulse, medium)?;
    let tau = medium.group_delay()?;
    if tau <= 0.0 {
        return Err(Error::Undefined("no slow light, nothing can be stored".into()));
    }
    let w = (tau / out.dt()).round() as usize;
    let p: Vec<f64> = out.samples().iter().map(|z| z.norm_sqr()).collect();
    let mut prefix = vec![0.0; p.len() + 1];
    for (k, v) in p.iter().enumerate() {
        prefix[k + 1] = prefix[k] + v;
    }
    let best = (0..p.len().saturating_sub(w))
        .max_by(|&a, &b| {
            let ea = prefix[a + 1 + w] - prefix[a + 1];
            let eb = prefix[b + 1 + w] - prefix[b + 1];
            ea.total_cmp(&eb)
        })
        .unwrap_or(0);
    Ok(out.time(best).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayShape {
    Exponential,
    Gaussian,
}

/// Storage efficiency η(t) = η₀·exp(−t/τ) or η₀·exp(−t²/τ²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryDecay {
    pub eta0: f64,
    pub tau_mem: f64,
    pub shape: DecayShape,
}

impl MemoryDecay {
    pub fn new(eta0: f64, tau_mem: f64, shape: DecayShape) -> Result<Self> {
        ensure_unit_interval("eta0", eta0)?;
        ensure_positive("tau_mem", tau_mem)?;
        Ok(Self { eta0, tau_mem, shape })
    }

    /// Lossless, non-decaying memory.
    pub fn ideal() -> Self {
        Self { eta0: 1.0, tau_mem: f64::INFINITY, shape: DecayShape::Exponential }
    }

    pub fn efficiency(&self, t: f64) -> f64 {
        let x = t / self.tau_mem;
        match self.shape {
            DecayShape::Exponential => self.eta0 * (-x).exp(),
            DecayShape::Gaussian => self.eta0 * (-x * x).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StorageWarning {
    /// The pulse is longer than twice the group delay and cannot be fully
    /// compressed; carries the resulting leakage efficiency.
    Capacity { duration: f64, group_delay: f64, leakage: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageReport {
    pub leakage_efficiency: f64,
    pub retrieval_efficiency: f64,
    pub storage_time: f64,
    /// Retrieved field, re-emitted `storage_time` after it was stored.
    pub output_pulse: Pulse,
    /// Field leaving the medium before the control is switched off.
    pub leaked_pulse: Pulse,
    /// Fractions of the input energy lost to each channel.
    pub filter_loss: f64,
    pub not_entered: f64,
    pub decay_loss: f64,
    pub warnings: Vec<StorageWarning>,
}

impl StorageReport {
    /// Input energy fraction not recovered as leakage or retrieval.
    pub fn absorbed(&self) -> f64 {
        self.filter_loss + self.not_entered + self.decay_loss
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Stop-light storage in three phases:
///
/// 1. the pulse propagates through the medium with the control on; whatever
///    exits before `timeline.on_until` is leakage,
/// 2. the part that would exit within one group delay after switch-off is
///    inside the ensemble and is stored; later parts never enter and are
///    absorbed once the medium turns opaque,
/// 3. the stored excitation decays by `decay.efficiency(t_s)` and is
///    re-emitted `t_s` later with its shape unchanged.
pub fn store_and_retrieve(
    pulse: &Pulse,
    medium: &EitMedium,
    timeline: &ControlTimeline,
    decay: &MemoryDecay,
) -> Result<StorageReport> {
    let input_energy = pulse.energy();
    if !(input_energy > 0.0) {
        return Err(Error::InvalidInput("pulse has zero energy".into()));
    }
    let prop = propagate_detailed(pulse, medium)?;
    let out = &prop.output;
    let tau = medium.group_delay()?;
    if tau <= 0.0 {
        return Err(Error::Undefined("no slow light, nothing can be stored".into()));
    }
    let dt = out.dt();
    let (mut leak, mut stored, mut late) = (0.0, 0.0, 0.0);
    let mut leaked = Vec::with_capacity(out.len());
    let mut kept = Vec::with_capacity(out.len());
    for (k, z) in out.samples().iter().enumerate() {
        let t = out.time(k);
        let s_off = logistic((t - timeline.on_until) / timeline.ramp);
        let s_full = logistic((t - timeline.on_until - tau) / timeline.ramp);
        let p = z.norm_sqr() * dt;
        leak += p * (1.0 - s_off);
        stored += p * s_off * (1.0 - s_full);
        late += p * s_off * s_full;
        leaked.push(*z * (1.0 - s_off).sqrt());
        kept.push(*z * (s_off * (1.0 - s_full)).sqrt());
    }
    let eta = decay.efficiency(timeline.off_duration);
    let amp = eta.sqrt();
    kept.iter_mut().for_each(|z| *z *= amp);

    let leakage_efficiency = leak / input_energy;
    let mut warnings = Vec::new();
    let duration = pulse.duration();
    if duration > 2.0 * tau {
        warnings.push(StorageWarning::Capacity { duration, group_delay: tau, leakage: leakage_efficiency });
    }
    Ok(StorageReport {
        leakage_efficiency,
        retrieval_efficiency: stored * eta / input_energy,
        storage_time: timeline.off_duration,
        output_pulse: Pulse::new(out.t0() + timeline.off_duration, dt, kept)?,
        leaked_pulse: Pulse::new(out.t0(), dt, leaked)?,
        filter_loss: (input_energy - prop.transmitted_energy) / input_energy,
        not_entered: late / input_energy,
        decay_loss: stored * (1.0 - eta) / input_energy,
        warnings,
    })
}
