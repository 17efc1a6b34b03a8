//! Frequency-correlation diagnostics and two-photon time distributions.
//!
//! The multi-photon interference visibility ξ/κ is evaluated as the purity of
//! the signal photon's reduced spectral state: expanding ξ with
//! ρ(δ₂,δ₄) = ∫ψ*(δ₁,δ₂)ψ(δ₁,δ₄)dδ₁ gives ξ = Tr ρ² and κ = (Tr ρ)².
//!
//! Time-domain amplitudes use the unitary transform
//! ψ(t) = ∫ψ(δ) e^{−iδt} dδ/√(2π) on each axis, so ∫|ψ(t)|²dt = ∫|ψ(δ)|²dδ.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ensure_non_negative, Error, Result};
use crate::linalg;
use crate::spectral::{CavityLine, FrequencyGrid, JointSpectralAmplitude, PumpSpectrum, TWO_PI};

/// Tolerance on the visibility range before a result is declared unresolved.
pub const VISIBILITY_SLACK: f64 = 1e-9;
/// Largest tolerated |ψ|² mass in the outer 10% band of the frequency grid.
pub const MAX_EDGE_MASS: f64 = 0.01;

/// Signal-photon reduced density kernel on a frequency grid.
#[derive(Debug, Clone)]
pub struct ReducedFrequencyState {
    grid: FrequencyGrid,
    rho: DMatrix<Complex64>,
}

impl ReducedFrequencyState {
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Kernel values ρ(δⱼ, δₖ).
    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    /// ∫ρ(δ,δ)dδ
    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum::<f64>() * self.grid.spacing()
    }

    /// ∫∫|ρ(δ,δ')|²dδdδ' = Tr ρ² for a Hermitian kernel.
    pub fn purity(&self) -> f64 {
        let h = self.grid.spacing();
        self.rho.iter().map(|z| z.norm_sqr()).sum::<f64>() * h * h
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        let n = self.rho.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the discretised operator ρ·dδ (whose
    /// eigenvalues sum to the trace). O(n³); meant for checks on small grids.
    pub fn min_eigenvalue(&self) -> f64 {
        let op = &self.rho * Complex64::new(self.grid.spacing(), 0.0);
        op.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// ρ = A†A·dδ, made exactly Hermitian.
pub fn reduced_state(jsa: &JointSpectralAmplitude) -> Result<ReducedFrequencyState> {
    if !jsa.is_normalized() {
        return Err(Error::Contract("reduced_state needs a normalised amplitude".into()));
    }
    let a = jsa.amplitude();
    let h = jsa.grid().spacing();
    let gram = linalg::adjoint_mul(a, a);
    let rho = (&gram + gram.adjoint()) * Complex64::new(0.5 * h, 0.0);
    Ok(ReducedFrequencyState { grid: *jsa.grid(), rho })
}

/// Multi-photon interference visibility V = Tr ρ² / (Tr ρ)².
pub fn visibility(jsa: &JointSpectralAmplitude) -> Result<f64> {
    let rho = reduced_state(jsa)?;
    let trace = rho.trace();
    let v = rho.purity() / (trace * trace);
    clip_visibility(v)
}

fn clip_visibility(v: f64) -> Result<f64> {
    if !v.is_finite() || !(-VISIBILITY_SLACK..=1.0 + VISIBILITY_SLACK).contains(&v) {
        return Err(Error::Resolution(format!("visibility {v} outside [0, 1]; the frequency grid is too coarse")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Uniform time axis (seconds) shared by both detection times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    stop: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, n_points: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) || stop <= start {
            return Err(Error::InvalidInput(format!("time grid needs start < stop, got [{start}, {stop}]")));
        }
        if n_points < 2 {
            return Err(Error::InvalidInput("time grid needs at least 2 points".into()));
        }
        Ok(Self { start, stop, n_points })
    }

    /// `[−2/γ, 8/γ]` with 512 points, extended backwards by three pump
    /// coherence times 1/σ for Gaussian pumps.
    pub fn default_for(line: &CavityLine, pump: &PumpSpectrum) -> Result<Self> {
        let gamma = line.gamma();
        let lead = match pump {
            PumpSpectrum::Gaussian { sigma } => 3.0 / sigma,
            _ => 0.0,
        };
        Self::new(-2.0 / gamma - lead, 8.0 / gamma, 512)
    }

    /// Grid covering exactly one period 2π/dδ of the discrete transform,
    /// starting at `start`. Sums over it obey Parseval exactly.
    pub fn full_period(grid: &FrequencyGrid, start: f64, n_points: usize) -> Result<Self> {
        let period = TWO_PI / grid.spacing();
        let dt = period / n_points as f64;
        Self::new(start, start + period - dt, n_points)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        (self.stop - self.start) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

/// Unitary transform of the cavity response `1/(δ + iγ/2)`:
/// `−i√(2π) e^{−γt/2}` for t > 0, zero before, midpoint at t = 0.
pub fn cavity_time_response(t: f64, line: &CavityLine) -> Complex64 {
    let step = if t > 0.0 {
        1.0
    } else if t == 0.0 {
        0.5
    } else {
        return Complex64::new(0.0, 0.0);
    };
    Complex64::new(0.0, -(TWO_PI).sqrt() * step * (-0.5 * line.gamma() * t).exp())
}

fn fourier_matrix(t_grid: &TimeGrid, grid: &FrequencyGrid) -> DMatrix<Complex64> {
    let deltas = grid.points();
    let times = t_grid.points();
    let w = grid.spacing() / (TWO_PI).sqrt();
    DMatrix::from_fn(times.len(), deltas.len(), |j, k| Complex64::from_polar(w, -deltas[k] * times[j]))
}

fn check_time_window(jsa: &JointSpectralAmplitude, t_grid: &TimeGrid) -> Result<()> {
    let period = TWO_PI / jsa.grid().spacing();
    if t_grid.stop() - t_grid.start() >= period {
        return Err(Error::Resolution(format!(
            "time window {:.4e} s is not shorter than the transform period {period:.4e} s",
            t_grid.stop() - t_grid.start()
        )));
    }
    Ok(())
}

fn check_edge_mass(amplitude: &DMatrix<Complex64>, grid: &FrequencyGrid) -> Result<()> {
    let edge = 0.9 * grid.max_detuning();
    let d = grid.points();
    let (mut total, mut outer) = (0.0, 0.0);
    for j in 0..amplitude.ncols() {
        for i in 0..amplitude.nrows() {
            let m = amplitude[(i, j)].norm_sqr();
            total += m;
            if d[i].abs() > edge || d[j].abs() > edge {
                outer += m;
            }
        }
    }
    if total > 0.0 && outer / total >= MAX_EDGE_MASS {
        return Err(Error::Resolution(format!(
            "{:.2}% of the spectral mass sits in the outer 10% of the grid; the transform would alias",
            100.0 * outer / total
        )));
    }
    Ok(())
}

/// Two-dimensional time-domain amplitude ψ(t₁, t₂) on `t_grid`.
///
/// Any constant asymptote of the pump spectrum (the flat limit) is split off
/// as `φ∞·L(δ₁)L(δ₂)`, whose transform is known in closed form; the
/// remaining, rapidly decaying part is summed on the grid.
pub fn time_domain(jsa: &JointSpectralAmplitude, t_grid: &TimeGrid) -> Result<DMatrix<Complex64>> {
    time_domain_filtered(jsa, t_grid, None)
}

/// As [`time_domain`], with an optional transfer function multiplying the
/// signal (column) axis before the transform.
pub fn time_domain_filtered(
    jsa: &JointSpectralAmplitude,
    t_grid: &TimeGrid,
    signal_filter: Option<&dyn Fn(f64) -> Complex64>,
) -> Result<DMatrix<Complex64>> {
    check_time_window(jsa, t_grid)?;
    let grid = jsa.grid();
    let d = grid.points();
    let asymptote = if jsa.has_model() { jsa.pump().asymptote() } else { 0.0 };

    if asymptote != 0.0 && signal_filter.is_some() {
        return Err(Error::Resolution("a filtered flat-limit amplitude has unsamplable 1/δ tails".into()));
    }

    let mut residual = jsa.amplitude().clone();
    if asymptote != 0.0 {
        let line = *jsa.line();
        let c = asymptote * jsa.scale();
        let resp: Vec<Complex64> = d.iter().map(|&x| line.response_at(x)).collect();
        for j in 0..residual.ncols() {
            for i in 0..residual.nrows() {
                residual[(i, j)] -= resp[i] * resp[j] * c;
            }
        }
    }
    if let Some(filter) = signal_filter {
        for (j, &x) in d.iter().enumerate() {
            let f = filter(x);
            for i in 0..residual.nrows() {
                residual[(i, j)] *= f;
            }
        }
    }
    check_edge_mass(&residual, grid)?;

    let e = fourier_matrix(t_grid, grid);
    let mut out = linalg::mul(&linalg::mul(&e, &residual), &e.transpose());

    if asymptote != 0.0 {
        let line = *jsa.line();
        let c = asymptote * jsa.scale();
        let h: Vec<Complex64> = t_grid.points().iter().map(|&t| cavity_time_response(t, &line)).collect();
        for j in 0..out.ncols() {
            for i in 0..out.nrows() {
                out[(i, j)] += h[i] * h[j] * c;
            }
        }
    }
    Ok(out)
}

/// Closed-form amplitude for a continuous-wave pump: e^{−γ|t₁−t₂|/2}.
pub fn continuous_limit_amplitude(line: &CavityLine, t_grid: &TimeGrid) -> DMatrix<Complex64> {
    let t = t_grid.points();
    let g = line.gamma();
    DMatrix::from_fn(t.len(), t.len(), |i, j| Complex64::new((-0.5 * g * (t[i] - t[j]).abs()).exp(), 0.0))
}

/// Closed-form amplitude for an infinitely short pump:
/// e^{−γt₁/2}e^{−γt₂/2} for t₁, t₂ ≥ 0, zero otherwise.
pub fn short_pump_limit_amplitude(line: &CavityLine, t_grid: &TimeGrid) -> DMatrix<Complex64> {
    let t = t_grid.points();
    let g = line.gamma();
    let f = |x: f64| if x >= 0.0 { (-0.5 * g * x).exp() } else { 0.0 };
    DMatrix::from_fn(t.len(), t.len(), |i, j| Complex64::new(f(t[i]) * f(t[j]), 0.0))
}

/// P(t₁, t₂) = |ψ(t₁, t₂)|², normalised to a maximum of one.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTimeDistribution {
    t_grid: TimeGrid,
    density: DMatrix<f64>,
}

impl JointTimeDistribution {
    pub fn from_amplitude(t_grid: TimeGrid, amplitude: &DMatrix<Complex64>) -> Result<Self> {
        if amplitude.nrows() != t_grid.len() || amplitude.ncols() != t_grid.len() {
            return Err(Error::InvalidInput("amplitude shape does not match the time grid".into()));
        }
        Self::from_density(t_grid, amplitude.map(|z| z.norm_sqr()))
    }

    fn from_density(t_grid: TimeGrid, density: DMatrix<f64>) -> Result<Self> {
        let max = density.max();
        if !(max > 0.0 && max.is_finite()) {
            return Err(Error::Resolution("two-photon density vanishes on the time grid".into()));
        }
        let density = density.map(|p| p / max);
        Ok(Self { t_grid, density })
    }

    pub fn continuous_limit(line: &CavityLine, t_grid: TimeGrid) -> Result<Self> {
        Self::from_amplitude(t_grid, &continuous_limit_amplitude(line, &t_grid))
    }

    pub fn short_pump_limit(line: &CavityLine, t_grid: TimeGrid) -> Result<Self> {
        Self::from_amplitude(t_grid, &short_pump_limit_amplitude(line, &t_grid))
    }

    pub fn t_grid(&self) -> &TimeGrid {
        &self.t_grid
    }

    /// Rows index t₁ (flying photon), columns t₂ (signal photon).
    pub fn density(&self) -> &DMatrix<f64> {
        &self.density
    }

    /// Pearson correlation of (t₁, t₂) weighted by the density; a diagonal
    /// ridge (frequency anti-correlation) gives a large positive value.
    pub fn pearson(&self) -> f64 {
        let t = self.t_grid.points();
        let total: f64 = self.density.iter().sum();
        let (mut m1, mut m2) = (0.0, 0.0);
        for j in 0..t.len() {
            for i in 0..t.len() {
                let p = self.density[(i, j)];
                m1 += p * t[i];
                m2 += p * t[j];
            }
        }
        m1 /= total;
        m2 /= total;
        let (mut c, mut v1, mut v2) = (0.0, 0.0, 0.0);
        for j in 0..t.len() {
            for i in 0..t.len() {
                let p = self.density[(i, j)];
                let (a, b) = (t[i] - m1, t[j] - m2);
                c += p * a * b;
                v1 += p * a * a;
                v2 += p * b * b;
            }
        }
        c / (v1 * v2).sqrt()
    }

    /// Separable Gaussian blur of standard deviation `sigma_t` seconds on both
    /// axes, modelling detector timing jitter. Zero returns a copy.
    pub fn blurred(&self, sigma_t: f64) -> Result<Self> {
        ensure_non_negative("sigma_t", sigma_t)?;
        if sigma_t == 0.0 {
            return Ok(self.clone());
        }
        let dt = self.t_grid.spacing();
        let reach = (4.0 * sigma_t / dt).ceil() as isize;
        let kernel: Vec<f64> = (-reach..=reach)
            .map(|k| {
                let x = k as f64 * dt / sigma_t;
                (-0.5 * x * x).exp()
            })
            .collect();
        let n = self.t_grid.len() as isize;
        let convolve = |src: &DMatrix<f64>, along_rows: bool| {
            DMatrix::from_fn(n as usize, n as usize, |i, j| {
                let mut acc = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let off = k as isize - reach;
                    let (ii, jj) =
                        if along_rows { (i as isize + off, j as isize) } else { (i as isize, j as isize + off) };
                    if (0..n).contains(&ii) && (0..n).contains(&jj) {
                        acc += w * src[(ii as usize, jj as usize)];
                    }
                }
                acc
            })
        };
        let once = convolve(&self.density, true);
        Self::from_density(self.t_grid, convolve(&once, false))
    }
}

/// Normalised |ψ(t₁,t₂)|² for a sampled source.
pub fn joint_time_distribution(jsa: &JointSpectralAmplitude, t_grid: &TimeGrid) -> Result<JointTimeDistribution> {
    JointTimeDistribution::from_amplitude(*t_grid, &time_domain(jsa, t_grid)?)
}

/// Two-photon distribution after the signal photon passes a spectral filter
/// such as an EIT memory window.
pub fn post_storage_distribution(
    jsa: &JointSpectralAmplitude,
    t_grid: &TimeGrid,
    signal_filter: &dyn Fn(f64) -> Complex64,
) -> Result<JointTimeDistribution> {
    let amp = time_domain_filtered(jsa, t_grid, Some(signal_filter))?;
    JointTimeDistribution::from_amplitude(*t_grid, &amp)
}

/// Σ|ψ(t₁,t₂)|²·dt²
pub fn time_norm_squared(amplitude: &DMatrix<Complex64>, t_grid: &TimeGrid) -> f64 {
    let dt = t_grid.spacing();
    amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * dt * dt
}
