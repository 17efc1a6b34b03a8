use std::time::Instant;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use qisim_core::biphoton::{
    self, continuous_limit_amplitude, joint_time_distribution, post_storage_distribution, reduced_state,
    short_pump_limit_amplitude, time_domain, time_norm_squared, visibility, JointTimeDistribution, TimeGrid,
};
use qisim_core::spectral::{build_jsa, CavityLine, FrequencyGrid, JointSpectralAmplitude, PumpSpectrum};
use qisim_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line() -> CavityLine {
    CavityLine::from_linewidth_hz(5e6).unwrap()
}

fn source(pump: PumpSpectrum) -> JointSpectralAmplitude {
    let l = line();
    build_jsa(FrequencyGrid::default_for(&l, &pump).unwrap(), l, pump).unwrap()
}

/// ξ/κ by the fourfold sum, with the amplitude evaluated from scratch.
fn brute_force_visibility(gamma: f64, sigma: f64, grid: &FrequencyGrid) -> f64 {
    let d = grid.points();
    let n = d.len();
    let psi = DMatrix::from_fn(n, n, |i, j| {
        let l1 = Complex64::new(d[i], 0.5 * gamma).inv();
        let l2 = Complex64::new(d[j], 0.5 * gamma).inv();
        let s = d[i] + d[j];
        l1 * l2 * (-s * s / (2.0 * sigma * sigma)).exp()
    });
    let mut xi = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    xi += psi[(a, b)].conj() * psi[(c, e)].conj() * psi[(a, e)] * psi[(c, b)];
                }
            }
        }
    }
    let kappa: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    xi.re / (kappa * kappa)
}

#[test]
fn purity_formula_matches_fourfold_sum() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let gamma: f64 = rng.random_range(1.0..10.0);
        let sigma = gamma * rng.random_range(0.5..3.0);
        let grid = FrequencyGrid::new(10.0 * gamma.max(sigma), 32).unwrap();
        let jsa = JointSpectralAmplitude::sample(
            grid,
            CavityLine::new(gamma).unwrap(),
            PumpSpectrum::gaussian(sigma).unwrap(),
        )
        .unwrap()
        .normalize()
        .unwrap();
        let fast = visibility(&jsa).unwrap();
        let slow = brute_force_visibility(gamma, sigma, &grid);
        assert_relative_eq!(fast, slow, max_relative = 1e-6);
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn visibility_at_the_two_pump_bandwidths() {
    let start = Instant::now();
    let v_short = visibility(&source(PumpSpectrum::gaussian_hz(12.5e6).unwrap())).unwrap();
    let v_long = visibility(&source(PumpSpectrum::gaussian_hz(3.7e6).unwrap())).unwrap();
    assert!((v_short - 0.97).abs() <= 0.01, "V(12.5 MHz) = {v_short}");
    assert!((v_long - 0.80).abs() <= 0.02, "V(3.7 MHz) = {v_long}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn visibility_rises_with_pump_bandwidth() {
    let gamma = line().gamma();
    let mut previous = 0.0;
    for k in 0..20 {
        let ratio = 0.1 * 100f64.powf(k as f64 / 19.0);
        let v = visibility(&source(PumpSpectrum::gaussian(ratio * gamma).unwrap())).unwrap();
        assert!(v >= previous - 1e-9, "σ/γ = {ratio}: {v} < {previous}");
        assert!((0.0..=1.0).contains(&v));
        previous = v;
    }
}

#[test]
fn broadband_pump_is_nearly_uncorrelated() {
    let v = visibility(&source(PumpSpectrum::gaussian_hz(1e9).unwrap())).unwrap();
    assert!(v > 0.999, "V = {v}");
    let flat = visibility(&source(PumpSpectrum::FlatLimit)).unwrap();
    assert_relative_eq!(flat, 1.0, epsilon = 1e-9);
}

#[test]
fn reduced_state_is_a_density_kernel() {
    let jsa = source(PumpSpectrum::gaussian_hz(3.7e6).unwrap());
    let rho = reduced_state(&jsa).unwrap();
    assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-9);
    assert!(rho.max_hermitian_defect() < 1e-12);
    assert!(rho.purity() <= 1.0 + 1e-9);
}

#[test]
fn reduced_state_needs_a_normalised_amplitude() {
    let l = line();
    let pump = PumpSpectrum::gaussian_hz(5e6).unwrap();
    let raw = JointSpectralAmplitude::sample(FrequencyGrid::default_for(&l, &pump).unwrap(), l, pump).unwrap();
    assert!(matches!(reduced_state(&raw), Err(Error::Contract(_))));
}

#[test]
fn reduced_state_is_positive_on_a_small_grid() {
    let gamma = 1.0;
    let grid = FrequencyGrid::new(24.0, 96).unwrap();
    let jsa =
        JointSpectralAmplitude::sample(grid, CavityLine::new(gamma).unwrap(), PumpSpectrum::gaussian(0.7).unwrap())
            .unwrap()
            .normalize()
            .unwrap();
    assert!(reduced_state(&jsa).unwrap().min_eigenvalue() > -1e-12);
}

#[test]
fn transform_preserves_norm_over_one_period() {
    for sigma_hz in [3.7e6, 12.5e6] {
        let jsa = source(PumpSpectrum::gaussian_hz(sigma_hz).unwrap());
        let grid = *jsa.grid();
        let tg = TimeGrid::full_period(&grid, -0.3 * std::f64::consts::TAU / grid.spacing(), grid.len()).unwrap();
        let amp = time_domain(&jsa, &tg).unwrap();
        let norm = time_norm_squared(&amp, &tg);
        assert!((norm - 1.0).abs() < 1e-6, "σ = {sigma_hz} Hz: norm {norm}");
    }
}

#[test]
fn flat_pump_reproduces_the_short_pump_limit() {
    let l = line();
    let jsa = source(PumpSpectrum::FlatLimit);
    let tg = TimeGrid::default_for(&l, &PumpSpectrum::FlatLimit).unwrap();
    let numeric = time_domain(&jsa, &tg).unwrap().map(|z| z.norm());
    let analytic = short_pump_limit_amplitude(&l, &tg).map(|z| z.re);
    let unit = |m: DMatrix<f64>| {
        let n = m.norm();
        m / n
    };
    let err = (unit(numeric) - unit(analytic)).norm();
    assert!(err < 1e-3, "relative L2 error {err}");
}

#[test]
fn continuous_limit_depends_on_the_time_difference_only() {
    let l = line();
    let tg = TimeGrid::new(0.0, 400e-9, 41).unwrap();
    let a = continuous_limit_amplitude(&l, &tg);
    let t = tg.points();
    for i in 0..t.len() {
        for j in 0..t.len() {
            let expect = (-0.5 * l.gamma() * (t[i] - t[j]).abs()).exp();
            assert_eq!(a[(i, j)].re, expect);
        }
    }
    let p = JointTimeDistribution::continuous_limit(&l, tg).unwrap();
    assert!(p.pearson() > 0.5);
}

/// Convolution form of the time amplitude, ∫ds e^{−σ²s²/2} h(t₁−s) h(t₂−s)
/// with h(t) = e^{−γt/2}Θ(t), by trapezoidal quadrature.
fn convolution_density(gamma: f64, sigma: f64, t: &[f64]) -> DMatrix<f64> {
    let n = t.len();
    let lo = -10.0 / sigma;
    DMatrix::from_fn(n, n, |i, j| {
        let hi = t[i].min(t[j]);
        if hi <= lo {
            return 0.0;
        }
        let steps = 4000;
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for k in 0..=steps {
            let s = lo + k as f64 * h;
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            acc += w * (-0.5 * sigma * sigma * s * s - 0.5 * gamma * (t[i] + t[j] - 2.0 * s)).exp();
        }
        let v = acc * h;
        v * v
    })
}

fn oracle_deviation(t_p: f64, span_linewidths: f64, n: usize) -> f64 {
    let l = line();
    let pump = PumpSpectrum::from_pulse_duration(t_p).unwrap();
    let grid = FrequencyGrid::new(span_linewidths * l.gamma(), n).unwrap();
    let jsa = build_jsa(grid, l, pump).unwrap();
    let tg = TimeGrid::new(-60e-9, 200e-9, 53).unwrap();
    let ours = joint_time_distribution(&jsa, &tg).unwrap();
    let oracle = convolution_density(l.gamma(), pump.sigma().unwrap(), &tg.points());
    let oracle = &oracle / oracle.max();
    (ours.density() - oracle).amax()
}

#[test]
fn time_distribution_matches_convolution_quadrature() {
    for t_p in [30e-9, 100e-9] {
        let coarse = oracle_deviation(t_p, 40.0, 512);
        let fine = oracle_deviation(t_p, 160.0, 2048);
        assert!(coarse < 5e-2, "T_p = {t_p}: default grid deviation {coarse}");
        assert!(fine < 1e-2 && fine < 0.3 * coarse, "T_p = {t_p}: wider grid {fine} vs {coarse}");
    }
}

#[test]
fn ridge_diagnostic_separates_the_two_pulse_durations() {
    let l = line();
    let pearson = |t_p: f64| {
        let pump = PumpSpectrum::from_pulse_duration(t_p).unwrap();
        let tg = TimeGrid::default_for(&l, &pump).unwrap();
        joint_time_distribution(&source(pump), &tg).unwrap().pearson()
    };
    let long = pearson(100e-9);
    let short = pearson(30e-9);
    assert!(long > 0.3, "T_p = 100 ns: {long}");
    assert!(short < 0.15, "T_p = 30 ns: {short}");
}

#[test]
fn identity_filter_leaves_the_distribution_unchanged() {
    let l = line();
    let pump = PumpSpectrum::from_pulse_duration(100e-9).unwrap();
    let jsa = source(pump);
    let tg = TimeGrid::default_for(&l, &pump).unwrap();
    let plain = joint_time_distribution(&jsa, &tg).unwrap();
    let filtered = post_storage_distribution(&jsa, &tg, &|_| Complex64::new(1.0, 0.0)).unwrap();
    assert_eq!(plain, filtered);
}

#[test]
fn filtered_flat_limit_is_rejected() {
    let l = line();
    let jsa = source(PumpSpectrum::FlatLimit);
    let tg = TimeGrid::default_for(&l, &PumpSpectrum::FlatLimit).unwrap();
    let r = post_storage_distribution(&jsa, &tg, &|_| Complex64::new(1.0, 0.0));
    assert!(matches!(r, Err(Error::Resolution(_))));
}

#[test]
fn long_time_window_is_rejected() {
    let jsa = source(PumpSpectrum::gaussian_hz(5e6).unwrap());
    let period = std::f64::consts::TAU / jsa.grid().spacing();
    let tg = TimeGrid::new(0.0, 1.5 * period, 64).unwrap();
    assert!(matches!(time_domain(&jsa, &tg), Err(Error::Resolution(_))));
}

#[test]
fn spectrum_at_grid_edge_is_rejected() {
    let grid = FrequencyGrid::new(20.0, 64).unwrap();
    let d = grid.points();
    let amp = DMatrix::from_fn(64, 64, |i, j| {
        Complex64::new(if d[i].abs() > 9.5 || d[j].abs() > 9.5 { 1.0 } else { 0.01 }, 0.0)
    });
    let jsa = JointSpectralAmplitude::from_matrix(grid, amp).unwrap().normalize().unwrap();
    let tg = TimeGrid::new(0.0, 0.1, 16).unwrap();
    assert!(matches!(time_domain(&jsa, &tg), Err(Error::Resolution(_))));
}

#[test]
fn timing_blur_keeps_the_peak_normalisation() {
    let l = line();
    let pump = PumpSpectrum::from_pulse_duration(100e-9).unwrap();
    let tg = TimeGrid::new(-100e-9, 300e-9, 96).unwrap();
    let p = joint_time_distribution(&source(pump), &tg).unwrap();
    let b = p.blurred(5e-9).unwrap();
    assert_relative_eq!(b.density().max(), 1.0, epsilon = 1e-12);
    assert!(b.pearson() > 0.0);
    assert_eq!(p.blurred(0.0).unwrap(), p);
    assert!(biphoton::JointTimeDistribution::short_pump_limit(&l, tg).unwrap().pearson().abs() < 1e-9);
}
