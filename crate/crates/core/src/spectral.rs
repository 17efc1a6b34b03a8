//! Pump spectra, cavity line shapes and the joint spectral amplitude of a
//! cavity-enhanced down-conversion source.
//!
//! Every frequency here is an angular detuning (rad/s) from the degenerate
//! center frequency, so the ~10¹⁵ rad/s optical carrier never enters the
//! arithmetic.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_positive, Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
pub fn hz_to_rad(hz: f64) -> f64 {
    TWO_PI * hz
}

/// Angular frequency (rad/s) to ordinary frequency (Hz).
pub fn rad_to_hz(rad: f64) -> f64 {
    rad / TWO_PI
}

/// Largest tolerated spectral mass outside a grid.
pub const MAX_TAIL_MASS: f64 = 0.01;

const DEFAULT_POINTS: usize = 512;
const SPAN_FACTOR: f64 = 40.0;
/// Span cap (in linewidths) once the pump is broad enough that the cavity
/// Lorentzians, not the pump, set the support of the amplitude.
const MAX_SPAN_LINEWIDTHS: f64 = 160.0;

/// Uniform, zero-centred detuning grid shared by both photon axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    span: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(span: f64, n_points: usize) -> Result<Self> {
        ensure_positive("span", span)?;
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("n_points must be even and >= 8, got {n_points}")));
        }
        Ok(Self { span, n_points })
    }

    /// Default grid for a source: 512 points spanning 40·max(γ, σ), capped at
    /// 160γ, refined if the spacing would not resolve γ/3 or σ.
    pub fn default_for(line: &CavityLine, pump: &PumpSpectrum) -> Result<Self> {
        let gamma = line.gamma();
        let span = match pump {
            PumpSpectrum::Gaussian { sigma } => (SPAN_FACTOR * gamma.max(*sigma)).min(MAX_SPAN_LINEWIDTHS * gamma),
            PumpSpectrum::FlatLimit => MAX_SPAN_LINEWIDTHS * gamma,
            PumpSpectrum::DeltaLimit => return Err(Error::UnsupportedPump("delta_limit")),
        };
        let finest = match pump {
            PumpSpectrum::Gaussian { sigma } => (gamma / 3.0).min(*sigma),
            _ => gamma / 3.0,
        };
        let mut n = DEFAULT_POINTS;
        let needed = (span / finest).ceil() as usize + 1;
        if needed > n {
            n = needed + needed % 2;
        }
        Self::new(span, n)
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        self.span / (self.n_points - 1) as f64
    }

    pub fn max_detuning(&self) -> f64 {
        0.5 * self.span
    }

    /// Detuning of sample `i`; exactly antisymmetric about the grid centre.
    pub fn point(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.n_points - 1) as f64) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

/// Single-mode cavity line of full width `gamma` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityLine {
    gamma: f64,
}

impl CavityLine {
    pub fn new(gamma: f64) -> Result<Self> {
        ensure_positive("gamma", gamma)?;
        Ok(Self { gamma })
    }

    pub fn from_linewidth_hz(hz: f64) -> Result<Self> {
        Self::new(hz_to_rad(hz))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `1 / (δ + iγ/2)` without input validation.
    #[inline]
    pub fn response_at(&self, delta: f64) -> Complex64 {
        Complex64::new(delta, 0.5 * self.gamma).inv()
    }
}

/// Cavity response `1/(δ + iγ/2)`; its squared magnitude is a Lorentzian of
/// FWHM γ.
pub fn cavity_response(delta: f64, line: &CavityLine) -> Result<Complex64> {
    ensure_finite("delta", delta)?;
    Ok(line.response_at(delta))
}

/// Pump amplitude spectrum as a function of the sum detuning δ₁ + δ₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpSpectrum {
    /// Normalised Gaussian with amplitude standard deviation `sigma` (rad/s).
    Gaussian { sigma: f64 },
    /// Continuous-wave pump, φ = δ(ω). Only available through analytic paths.
    DeltaLimit,
    /// Infinitely short pump, φ = const.
    FlatLimit,
}

impl PumpSpectrum {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        Ok(Self::Gaussian { sigma })
    }

    pub fn gaussian_hz(sigma_hz: f64) -> Result<Self> {
        Self::gaussian(hz_to_rad(sigma_hz))
    }

    /// Gaussian pump whose temporal amplitude envelope has FWHM `t_p`.
    pub fn from_pulse_duration(t_p: f64) -> Result<Self> {
        Self::gaussian(sigma_from_pulse_duration(t_p)?)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::DeltaLimit => "delta_limit",
            Self::FlatLimit => "flat_limit",
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            Self::Gaussian { sigma } => Some(*sigma),
            _ => None,
        }
    }

    /// Value the spectrum tends to at infinite detuning.
    pub fn asymptote(&self) -> f64 {
        match self {
            Self::FlatLimit => 1.0,
            _ => 0.0,
        }
    }

    pub fn amplitude(&self, omega: f64) -> Result<f64> {
        pump_amplitude(omega, self)
    }

    #[inline]
    fn amplitude_at(&self, omega: f64) -> f64 {
        match self {
            Self::Gaussian { sigma } => (-(omega * omega) / (2.0 * sigma * sigma)).exp() / ((TWO_PI).sqrt() * sigma),
            Self::FlatLimit => 1.0,
            Self::DeltaLimit => f64::NAN,
        }
    }
}

/// `φ(ω) = exp(−ω²/2σ²) / (√(2π) σ)` for a Gaussian pump; constant 1 in the
/// flat limit.
pub fn pump_amplitude(omega_sum_detuning: f64, pump: &PumpSpectrum) -> Result<f64> {
    ensure_finite("omega", omega_sum_detuning)?;
    match pump {
        PumpSpectrum::DeltaLimit => Err(Error::UnsupportedPump("delta_limit")),
        PumpSpectrum::Gaussian { sigma } => {
            ensure_positive("sigma", *sigma)?;
            Ok(pump.amplitude_at(omega_sum_detuning))
        }
        PumpSpectrum::FlatLimit => Ok(1.0),
    }
}

/// Spectral standard deviation (rad/s) of a Gaussian pump whose temporal
/// amplitude envelope has full width at half maximum `t_p` seconds:
/// σ = 2π · √(2 ln 2) / (π T_p).
pub fn sigma_from_pulse_duration(t_p: f64) -> Result<f64> {
    ensure_positive("T_p", t_p)?;
    let sigma_hz = (2.0 * LN_2).sqrt() / (PI * t_p);
    Ok(hz_to_rad(sigma_hz))
}

/// Inverse of [`sigma_from_pulse_duration`].
pub fn pulse_duration_from_sigma(sigma: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    Ok((2.0 * LN_2).sqrt() / (PI * rad_to_hz(sigma)))
}

/// Fraction of a Lorentzian `1/(δ² + γ²/4)` lying outside `|δ| < half_span`.
pub fn lorentzian_tail_fraction(half_span: f64, gamma: f64) -> f64 {
    1.0 - (2.0 / PI) * (2.0 * half_span / gamma).atan()
}

/// Same for the squared Lorentzian `1/(δ² + γ²/4)²`.
pub fn lorentzian_squared_tail_fraction(half_span: f64, gamma: f64) -> f64 {
    let a = 0.5 * gamma;
    let x = half_span;
    let inner = x / (2.0 * a * a * (x * x + a * a)) + (x / a).atan() / (2.0 * a * a * a);
    (1.0 - 4.0 * a * a * a * inner / PI).max(0.0)
}

/// Estimated |ψ|² mass outside the grid square.
///
/// Along one axis the marginal tail is a Lorentzian weighted by how much pump
/// intensity remains at the grid edge, plus the squared-Lorentzian ridge
/// along δ₁ + δ₂ ≈ 0.
pub fn tail_mass_estimate(grid: &FrequencyGrid, line: &CavityLine, pump: &PumpSpectrum) -> f64 {
    let half = grid.max_detuning();
    let gamma = line.gamma();
    let edge_ratio = match pump {
        PumpSpectrum::Gaussian { sigma } => (-(half * half) / (sigma * sigma)).exp(),
        _ => 1.0,
    };
    let per_axis =
        (lorentzian_tail_fraction(half, gamma) * edge_ratio + lorentzian_squared_tail_fraction(half, gamma)).min(1.0);
    1.0 - (1.0 - per_axis) * (1.0 - per_axis)
}

/// Sampled two-photon amplitude ψ(δ₁, δ₂); rows index photon 1 (flying),
/// columns photon 2 (signal).
#[derive(Debug, Clone)]
pub struct JointSpectralAmplitude {
    grid: FrequencyGrid,
    line: CavityLine,
    pump: PumpSpectrum,
    amplitude: DMatrix<Complex64>,
    /// Factor relating `amplitude` to the bare model `L(δ₁)L(δ₂)φ(δ₁+δ₂)`.
    scale: f64,
    normalized: bool,
}

impl JointSpectralAmplitude {
    /// Samples the bare model on the grid without normalising.
    pub fn sample(grid: FrequencyGrid, line: CavityLine, pump: PumpSpectrum) -> Result<Self> {
        if let PumpSpectrum::DeltaLimit = pump {
            return Err(Error::UnsupportedPump("delta_limit"));
        }
        let deltas = grid.points();
        let responses: Vec<Complex64> = deltas.iter().map(|&d| line.response_at(d)).collect();
        let n = grid.len();
        let amplitude =
            DMatrix::from_fn(n, n, |i, j| responses[i] * responses[j] * pump.amplitude_at(deltas[i] + deltas[j]));
        Ok(Self { grid, line, pump, amplitude, scale: 1.0, normalized: false })
    }

    /// Wraps an arbitrary amplitude matrix. The result carries no generating
    /// model, so analytic time-domain shortcuts are disabled for it.
    pub fn from_matrix(grid: FrequencyGrid, amplitude: DMatrix<Complex64>) -> Result<Self> {
        let n = grid.len();
        if amplitude.nrows() != n || amplitude.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "amplitude must be {n}x{n}, got {}x{}",
                amplitude.nrows(),
                amplitude.ncols()
            )));
        }
        if amplitude.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("amplitude has non-finite entries".into()));
        }
        Ok(Self {
            grid,
            // Placeholder model; `has_model` is false via the NaN scale.
            line: CavityLine { gamma: 1.0 },
            pump: PumpSpectrum::Gaussian { sigma: 1.0 },
            amplitude,
            scale: f64::NAN,
            normalized: false,
        })
    }

    /// L²-normalises so that Σ|ψ|²·dδ² = 1.
    pub fn normalize(mut self) -> Result<Self> {
        let norm = self.norm_squared();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Contract(format!("cannot normalise amplitude with norm² {norm}")));
        }
        let factor = norm.sqrt().recip();
        self.amplitude *= Complex64::new(factor, 0.0);
        self.scale *= factor;
        self.normalized = true;
        Ok(self)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn line(&self) -> &CavityLine {
        &self.line
    }

    pub fn pump(&self) -> &PumpSpectrum {
        &self.pump
    }

    pub fn amplitude(&self) -> &DMatrix<Complex64> {
        &self.amplitude
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn has_model(&self) -> bool {
        self.scale.is_finite()
    }

    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    /// Σ|ψ|²·dδ²
    pub fn norm_squared(&self) -> f64 {
        let h = self.grid.spacing();
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * h * h
    }
}

/// Samples `L(δ₁)·L(δ₂)·φ(δ₁+δ₂)` on `grid` and L²-normalises it.
pub fn build_jsa(grid: FrequencyGrid, line: CavityLine, pump: PumpSpectrum) -> Result<JointSpectralAmplitude> {
    let half = grid.max_detuning();
    let gamma = line.gamma();
    if let PumpSpectrum::DeltaLimit = pump {
        return Err(Error::UnsupportedPump("delta_limit"));
    }
    if half < 4.0 * gamma {
        return Err(Error::Resolution(format!("grid half-span {half:.4e} rad/s is below 4γ = {:.4e}", 4.0 * gamma)));
    }
    if grid.spacing() > gamma / 3.0 {
        return Err(Error::Resolution(format!(
            "grid spacing {:.4e} rad/s does not resolve γ/3 = {:.4e}",
            grid.spacing(),
            gamma / 3.0
        )));
    }
    if let PumpSpectrum::Gaussian { sigma } = pump {
        // Beyond 20γ the cavity Lorentzians, not the pump, bound the support.
        let needed = 4.0 * sigma.min(0.125 * MAX_SPAN_LINEWIDTHS * gamma);
        if half < needed {
            return Err(Error::Resolution(format!(
                "grid half-span {half:.4e} rad/s is below {needed:.4e} (4σ, capped at 80γ)"
            )));
        }
        if grid.spacing() > sigma {
            return Err(Error::Resolution(format!(
                "grid spacing {:.4e} rad/s does not resolve σ = {sigma:.4e}",
                grid.spacing()
            )));
        }
    }
    let tail = tail_mass_estimate(&grid, &line, &pump);
    if tail > MAX_TAIL_MASS {
        return Err(Error::Resolution(format!(
            "estimated spectral mass outside the grid is {:.2}% (limit {:.0}%)",
            100.0 * tail,
            100.0 * MAX_TAIL_MASS
        )));
    }
    JointSpectralAmplitude::sample(grid, line, pump)?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gamma() -> f64 {
        hz_to_rad(5e6)
    }

    #[test]
    fn response_on_resonance_is_minus_i_two_over_gamma() {
        let line = CavityLine::new(gamma()).unwrap();
        let r = cavity_response(0.0, &line).unwrap();
        assert_relative_eq!(r.norm(), 2.0 / gamma(), max_relative = 1e-14);
        assert_relative_eq!(r.arg(), -PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn response_half_power_at_half_linewidth() {
        let line = CavityLine::new(gamma()).unwrap();
        let peak = cavity_response(0.0, &line).unwrap().norm_sqr();
        for sign in [-1.0, 1.0] {
            let edge = cavity_response(sign * gamma() / 2.0, &line).unwrap().norm_sqr();
            assert_relative_eq!(edge, peak / 2.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn response_rejects_non_finite_detuning() {
        let line = CavityLine::new(gamma()).unwrap();
        assert!(matches!(cavity_response(f64::NAN, &line), Err(Error::InvalidInput(_))));
        assert!(cavity_response(f64::INFINITY, &line).is_err());
        assert!(CavityLine::new(0.0).is_err());
    }

    #[test]
    fn lorentzian_integral_matches_two_pi_over_gamma() {
        let line = CavityLine::new(gamma()).unwrap();
        let grid = FrequencyGrid::new(20.0 * gamma(), 4000).unwrap();
        let h = grid.spacing();
        let sum: f64 = grid.points().iter().map(|&d| line.response_at(d).norm_sqr()).sum::<f64>() * h;
        let exact = TWO_PI / gamma();
        assert!((sum / exact - 1.0).abs() < 0.05, "ratio {}", sum / exact);
        // The shortfall is the analytic tail beyond ±10γ.
        let expected = 1.0 - lorentzian_tail_fraction(grid.max_detuning(), gamma());
        assert!((sum / exact - expected).abs() < 1e-3);
        let wide = FrequencyGrid::new(400.0 * gamma(), 40_000).unwrap();
        let hw = wide.spacing();
        let wide_sum: f64 = wide.points().iter().map(|&d| line.response_at(d).norm_sqr()).sum::<f64>() * hw;
        assert!((wide_sum / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn gaussian_pump_peak_and_one_sigma_ratio() {
        let sigma = hz_to_rad(12.5e6);
        let pump = PumpSpectrum::gaussian(sigma).unwrap();
        let peak = pump_amplitude(0.0, &pump).unwrap();
        assert_relative_eq!(peak, 1.0 / ((TWO_PI).sqrt() * sigma), max_relative = 1e-14);
        let ratio = pump_amplitude(sigma, &pump).unwrap() / peak;
        assert_relative_eq!(ratio, (-0.5f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn gaussian_pump_integrates_to_one_over_six_sigma() {
        let sigma = hz_to_rad(12.5e6);
        let pump = PumpSpectrum::gaussian(sigma).unwrap();
        let grid = FrequencyGrid::new(12.0 * sigma, 2000).unwrap();
        let integral: f64 =
            grid.points().iter().map(|&w| pump_amplitude(w, &pump).unwrap()).sum::<f64>() * grid.spacing();
        assert!((integral - 1.0).abs() < 1e-6, "integral {integral}");
    }

    #[test]
    fn delta_pump_is_not_pointwise() {
        assert_eq!(pump_amplitude(0.0, &PumpSpectrum::DeltaLimit), Err(Error::UnsupportedPump("delta_limit")));
        assert_eq!(pump_amplitude(3.0, &PumpSpectrum::FlatLimit), Ok(1.0));
        assert!(PumpSpectrum::gaussian(-1.0).is_err());
    }

    #[test]
    fn pulse_duration_mapping() {
        let s30 = rad_to_hz(sigma_from_pulse_duration(30e-9).unwrap());
        let s100 = rad_to_hz(sigma_from_pulse_duration(100e-9).unwrap());
        assert!((s30 - 12.49e6).abs() < 0.01e6, "σ(30 ns) = {s30}");
        assert!((s100 - 3.75e6).abs() < 0.01e6, "σ(100 ns) = {s100}");
        assert!(sigma_from_pulse_duration(1e3).unwrap() < 1e-2);
        assert!(sigma_from_pulse_duration(0.0).is_err());
        assert!(sigma_from_pulse_duration(-3e-9).is_err());
        let back = pulse_duration_from_sigma(sigma_from_pulse_duration(42e-9).unwrap()).unwrap();
        assert_relative_eq!(back, 42e-9, max_relative = 1e-12);
    }

    #[test]
    fn grid_invariants() {
        assert!(FrequencyGrid::new(1.0, 7).is_err());
        assert!(FrequencyGrid::new(1.0, 9).is_err());
        assert!(FrequencyGrid::new(0.0, 16).is_err());
        let g = FrequencyGrid::new(10.0, 16).unwrap();
        assert_relative_eq!(g.spacing(), 10.0 / 15.0);
        assert_relative_eq!(g.point(0), -5.0, epsilon = 1e-12);
        assert_relative_eq!(g.point(15), 5.0, epsilon = 1e-12);
        for i in 0..16 {
            assert_eq!(g.point(i), -g.point(15 - i));
        }
    }

    #[test]
    fn flat_limit_factorises_exactly() {
        let line = CavityLine::new(gamma()).unwrap();
        let grid = FrequencyGrid::default_for(&line, &PumpSpectrum::FlatLimit).unwrap();
        let grid = FrequencyGrid::new(grid.span(), 64).unwrap();
        let jsa = JointSpectralAmplitude::sample(grid, line, PumpSpectrum::FlatLimit).unwrap();
        let a = jsa.amplitude();
        let d = grid.points();
        for i in 0..64 {
            for j in 0..64 {
                let f = line.response_at(d[i]) * line.response_at(d[j]);
                assert_eq!(a[(i, j)], f);
            }
        }
    }

    #[test]
    fn build_jsa_is_normalised_and_symmetric() {
        let line = CavityLine::new(gamma()).unwrap();
        let pump = PumpSpectrum::gaussian_hz(3.7e6).unwrap();
        let grid = FrequencyGrid::default_for(&line, &pump).unwrap();
        let jsa = build_jsa(grid, line, pump).unwrap();
        assert!((jsa.norm_squared() - 1.0).abs() < 1e-9);
        let a = jsa.amplitude();
        assert_eq!(a, &a.transpose());
    }

    #[test]
    fn build_jsa_rejects_narrow_or_coarse_grids() {
        let line = CavityLine::new(gamma()).unwrap();
        let pump = PumpSpectrum::gaussian_hz(12.5e6).unwrap();
        let narrow = FrequencyGrid::new(6.0 * gamma(), 256).unwrap();
        assert!(matches!(build_jsa(narrow, line, pump), Err(Error::Resolution(_))));
        let coarse = FrequencyGrid::new(100.0 * gamma(), 32).unwrap();
        assert!(matches!(build_jsa(coarse, line, pump), Err(Error::Resolution(_))));
        // Flat pump at 40γ leaves ~3% of the Lorentzian tails off-grid.
        let flat40 = FrequencyGrid::new(40.0 * gamma(), 512).unwrap();
        assert!(matches!(build_jsa(flat40, line, PumpSpectrum::FlatLimit), Err(Error::Resolution(_))));
        assert!(matches!(build_jsa(flat40, line, PumpSpectrum::DeltaLimit), Err(Error::UnsupportedPump(_))));
    }

    #[test]
    fn tail_fractions_match_quadrature() {
        let g = 2.0;
        for half in [3.0, 10.0, 40.0] {
            let n = 400_000;
            let top = 4000.0;
            let h = (top - half) / n as f64;
            let (mut t1, mut t2) = (0.0, 0.0);
            for k in 0..n {
                let d = half + (k as f64 + 0.5) * h;
                let l = 1.0 / (d * d + g * g / 4.0);
                t1 += l * h;
                t2 += l * l * h;
            }
            // Add the analytic remainder beyond `top` for the plain Lorentzian.
            t1 += 1.0 / top;
            let f1 = 2.0 * t1 / (TWO_PI / g);
            let a = g / 2.0;
            let f2 = 2.0 * t2 / (PI / (2.0 * a * a * a));
            assert!((lorentzian_tail_fraction(half, g) - f1).abs() < 1e-6);
            assert!((lorentzian_squared_tail_fraction(half, g) - f2).abs() < 1e-7);
        }
    }
}
