//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Lines are written to the raw stdout handle so they appear whether or not
//! the test harness captures output.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qisim::config::RunConfig;
use qisim::output::ArtifactWriter;
use qisim::{commands, model, run, CliError, Command};
use qisim_core::biphoton::{continuous_limit_amplitude, time_domain, time_norm_squared, visibility, TimeGrid};
use qisim_core::qubit::{
    alpha_quality, bell_state, chsh_s, mean_curve_visibility, random_two_qubit_density, stored_pair, werner,
    AngleConvention, MemoryChannel, MemoryChannelParams, CHSH_ANGLES,
};
use qisim_core::spectral::{build_jsa, hz_to_rad, CavityLine, FrequencyGrid, JointSpectralAmplitude, PumpSpectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, name: &str, failures: &[String], details: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut line = format!("{status} criterion {criterion} ({name}): {details}");
    if !failures.is_empty() {
        line.push_str(&format!(" | failed: {}", failures.join("; ")));
    }
    line.push('\n');
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(failures.is_empty(), "{line}");
}

struct Tally(Vec<String>);

impl Tally {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.0.push(what);
        }
    }

    fn within(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        self.check((value - target).abs() <= tol, format!("{name} = {value:.6} not within {target} ± {tol}"));
    }

    fn within_rel(&mut self, name: &str, value: f64, target: f64, rel: f64) {
        self.check(
            (value - target).abs() <= rel * target.abs(),
            format!("{name} = {value:.6e} not within {target:e} ± {}%", 100.0 * rel),
        );
    }
}

fn scratch() -> (tempfile::TempDir, ArtifactWriter) {
    let dir = tempfile::tempdir().unwrap();
    let w = ArtifactWriter::create(dir.path(), RunConfig::defaults().output.formats).unwrap();
    (dir, w)
}

#[test]
fn criterion_1_visibility() {
    let cfg = RunConfig::defaults();
    let gamma = hz_to_rad(5e6);
    let line = CavityLine::new(gamma).unwrap();
    let start = Instant::now();
    let v = |sigma_hz: f64| {
        let pump = PumpSpectrum::gaussian_hz(sigma_hz).unwrap();
        let grid = FrequencyGrid::default_for(&line, &pump).unwrap();
        assert_eq!(grid.len(), 512);
        visibility(&build_jsa(grid, line, pump).unwrap()).unwrap()
    };
    let (v_short, v_long) = (v(12.5e6), v(3.7e6));
    let elapsed = start.elapsed().as_secs_f64();
    let mut t = Tally::new();
    t.within("V(12.5 MHz)", v_short, 0.97, 0.01);
    t.within("V(3.7 MHz)", v_long, 0.80, 0.02);
    t.check(elapsed < 5.0, format!("runtime {elapsed:.2} s ≥ 5 s"));
    let via_cli = model::visibility_at_sigma_hz(&cfg, 12.5e6).unwrap();
    t.check(via_cli == v_short, format!("CLI path gives {via_cli}, direct {v_short}"));
    report(
        1,
        "visibility",
        &t.0,
        &format!("V(12.5 MHz) = {v_short:.4}, V(3.7 MHz) = {v_long:.4}, 512² grids in {elapsed:.2} s"),
    );
}

/// ξ/κ by the fourfold sum with the amplitude written out from scratch.
fn fourfold_visibility(gamma: f64, sigma: f64, grid: &FrequencyGrid) -> f64 {
    let d = grid.points();
    let n = d.len();
    let l = |x: f64| Complex64::new(1.0, 0.0) / Complex64::new(x, 0.5 * gamma);
    let psi = DMatrix::from_fn(n, n, |a, b| {
        let s = d[a] + d[b];
        l(d[a]) * l(d[b]) * (-(s * s) / (2.0 * sigma * sigma)).exp()
    });
    let mut xi = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    xi += psi[(a, c)] * psi[(b, c)].conj() * psi[(b, e)] * psi[(a, e)].conj();
                }
            }
        }
    }
    let kappa: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    xi.re / (kappa * kappa)
}

#[test]
fn criterion_2_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut t = Tally::new();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let gamma = hz_to_rad(rng.random_range(1e6..20e6));
        let sigma = gamma * rng.random_range(0.2..5.0);
        let grid = FrequencyGrid::new(12.0 * gamma.max(sigma), 32).unwrap();
        let jsa = JointSpectralAmplitude::sample(
            grid,
            CavityLine::new(gamma).unwrap(),
            PumpSpectrum::gaussian(sigma).unwrap(),
        )
        .unwrap()
        .normalize()
        .unwrap();
        let fast = visibility(&jsa).unwrap();
        let slow = fourfold_visibility(gamma, sigma, &grid);
        let rel = (fast - slow).abs() / slow;
        worst = worst.max(rel);
        t.check(rel < 1e-6, format!("γ = {gamma:.3e}, σ = {sigma:.3e}: relative gap {rel:.2e}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    t.check(elapsed < 10.0, format!("runtime {elapsed:.2} s ≥ 10 s"));
    report(
        2,
        "oracle equivalence",
        &t.0,
        &format!("5 random (σ, γ) pairs on 32×32, worst relative gap {worst:.2e}, {elapsed:.2} s"),
    );
}

fn unit(m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.norm();
    m / n
}

#[test]
fn criterion_3_time_domain_limits() {
    let gamma = hz_to_rad(5e6);
    let line = CavityLine::new(gamma).unwrap();
    let mut t = Tally::new();

    let pump = PumpSpectrum::FlatLimit;
    let tg = TimeGrid::default_for(&line, &pump).unwrap();
    let jsa = build_jsa(FrequencyGrid::default_for(&line, &pump).unwrap(), line, pump).unwrap();
    let numeric = time_domain(&jsa, &tg).unwrap().map(|z| z.norm());
    let ts = tg.points();
    let decay = |x: f64| if x > 0.0 { (-0.5 * gamma * x).exp() } else { 0.0 };
    let expected = DMatrix::from_fn(ts.len(), ts.len(), |i, j| decay(ts[i]) * decay(ts[j]));
    let l2 = (unit(numeric) - unit(expected)).norm();
    t.check(l2 < 1e-3, format!("flat-limit L2 error {l2:.2e}"));

    let cont = continuous_limit_amplitude(&line, &tg);
    let mut worst = 0.0f64;
    for i in 0..ts.len() {
        for j in 0..ts.len() {
            worst = worst.max((cont[(i, j)].norm() - (-0.5 * gamma * (ts[i] - ts[j]).abs()).exp()).abs());
        }
    }
    t.check(worst <= 1e-15, format!("continuous limit deviates by {worst:.2e}"));

    let cfg = RunConfig::defaults();
    let (_dir, mut w) = scratch();
    let summary = commands::timedist(&cfg, &mut w).unwrap();
    let pearson = |tp: f64| summary.rows.iter().find(|r| r.t_p_s == Some(tp)).unwrap().pearson;
    let (long, short) = (pearson(100e-9), pearson(30e-9));
    t.check(long > 0.3, format!("Pearson(100 ns) = {long:.3} ≤ 0.3"));
    t.check(short < 0.15, format!("Pearson(30 ns) = {short:.3} ≥ 0.15"));
    report(
        3,
        "time-domain limits",
        &t.0,
        &format!("flat L2 {l2:.2e}, continuous max dev {worst:.1e}, Pearson 100 ns {long:.3}, 30 ns {short:.3}"),
    );
}

#[test]
fn criterion_4_eit_characterization() {
    let cfg = RunConfig::defaults();
    let (_dir, mut w) = scratch();
    let e = commands::eit(&cfg, &mut w).unwrap();
    let mut t = Tally::new();
    t.within_rel("window FWHM (Hz)", e.window_fwhm_hz, 5.5e6, 0.10);
    t.within_rel("group delay (s)", e.group_delay_s, 200e-9, 0.10);
    t.within_rel("2π·Δf·τ_d", e.delay_bandwidth_product, 7.0, 0.15);
    t.within_rel("control-off transmission", e.control_off_transmission, (-55.0f64).exp(), 1e-9);
    t.within_rel("v_g (m/s)", e.v_g, 2e4, 0.10);
    report(
        4,
        "EIT characterization",
        &t.0,
        &format!(
            "fitted γ_s = {:.3e} Hz, FWHM {:.4} MHz, τ_d {:.1} ns, DBP {:.3}, T_off {:.3e}, v_g {:.0} m/s",
            e.gamma_s_hz,
            e.window_fwhm_hz * 1e-6,
            e.group_delay_s * 1e9,
            e.delay_bandwidth_product,
            e.control_off_transmission,
            e.v_g
        ),
    );
}

#[test]
fn criterion_5_six_state_fidelities() {
    let measured = [("H", 0.954), ("V", 0.989), ("+", 0.909), ("-", 0.889), ("R", 0.920), ("L", 0.881)];
    let cfg = RunConfig::defaults();
    assert!((cfg.channel.phase_jitter_rad - std::f64::consts::TAU / 28.0).abs() < 1e-15);
    let (_dir, mut w) = scratch();
    let s = commands::store(&cfg, &mut w).unwrap();
    let row = s.rows.iter().find(|r| r.storage_time_s == 200e-9).unwrap();
    let mut t = Tally::new();
    let mut parts = Vec::new();
    for (label, f_meas) in measured {
        let f = row.fidelities.iter().find(|f| f.state == label).unwrap().fidelity;
        t.within(&format!("F({label})"), f, f_meas, 0.04);
        parts.push(format!("{label} {f:.3}"));
    }
    t.within("average", row.average, 0.924, 0.03);
    report(
        5,
        "six-state fidelities",
        &t.0,
        &format!("fitted b = {:.4}; {}; average {:.4}", s.background_b, parts.join(", "), row.average),
    );
}

#[test]
fn criterion_6_chsh() {
    let mut t = Tally::new();
    let ideal = chsh_s(&bell_state(), CHSH_ANGLES, AngleConvention::Minus);
    t.within("S(ideal)", ideal, 2.0 * SQRT_2, 1e-9);

    let cfg = RunConfig::defaults();
    let (_dir, mut w) = scratch();
    let bell = commands::bell(&cfg, &mut w).unwrap();
    let decay = model::memory_decay(&cfg).unwrap();
    let params = MemoryChannelParams::new(1.0, 1.0, cfg.channel.phase_jitter_rad, bell.background_b, 1e-6).unwrap();
    let rho = stored_pair(bell.source_visibility, &params, &|x| decay.efficiency(x)).unwrap();
    let v_curve = mean_curve_visibility(&rho);
    t.within("curve visibility at 1 μs", v_curve, 0.81, 1e-9);
    let s_1us = bell.rows.iter().find(|r| r.t_s == 1e-6).unwrap().s;
    t.within("S(1 μs)", s_1us, 2.28, 0.17);

    let weak = chsh_s(&werner(0.70).unwrap(), CHSH_ANGLES, AngleConvention::Minus);
    t.check(weak <= 2.0, format!("S(V_src = 0.70) = {weak:.4} > 2"));
    report(
        6,
        "CHSH",
        &t.0,
        &format!(
            "S(ideal) = {ideal:.12}, curve visibility {v_curve:.4} → S(1 μs) = {s_1us:.4}, S(V_src 0.70) = {weak:.4}"
        ),
    );
}

#[test]
fn criterion_7_g13_alpha() {
    let cfg = RunConfig::defaults();
    let (_dir, mut w) = scratch();
    let g = commands::g13(&cfg, &mut w).unwrap();
    let mut t = Tally::new();
    let crossing = g.crossing_s.unwrap_or(f64::NAN);
    t.within_rel("crossing time (s)", crossing, 2e-6, 0.10);
    let a5 = alpha_quality(5.0).unwrap();
    t.check(a5 == 1.0, format!("α(5) = {a5}"));
    let mut previous = f64::INFINITY;
    for k in 0..200 {
        let g13 = 1.0 + 0.01 * 1.05f64.powi(k);
        let a = alpha_quality(g13).unwrap();
        t.check(a < previous, format!("α not decreasing at g13 = {g13}"));
        previous = a;
    }
    report(
        7,
        "g13 and α",
        &t.0,
        &format!("τ_mem = {:.3} μs, g13 crosses 5 at {:.4} μs, α(5) = {a5}", g.tau_mem_s * 1e6, crossing * 1e6),
    );
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn criterion_8_property_suites() {
    let mut t = Tally::new();

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let worst_s = (0..1000)
        .map(|_| chsh_s(&random_two_qubit_density(&mut rng), CHSH_ANGLES, AngleConvention::Minus))
        .fold(0.0, f64::max);
    t.check(worst_s <= 2.0 * SQRT_2 + 1e-9, format!("Tsirelson violated: S = {worst_s}"));

    let mut worst_choi = f64::INFINITY;
    for _ in 0..200 {
        let p = MemoryChannelParams::new(
            rng.random_range(0.0..=1.0),
            rng.random_range(0.0..=1.0),
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..3e-6),
        )
        .unwrap();
        let ch = MemoryChannel::new(&p, &|x: f64| (-x * x / 2.56e-12).exp()).unwrap();
        worst_choi = worst_choi.min(ch.choi_min_eigenvalue());
    }
    t.check(worst_choi >= -1e-12, format!("Choi matrix not PSD: λ_min = {worst_choi:.3e}"));

    let line = CavityLine::from_linewidth_hz(5e6).unwrap();
    let mut worst_parseval = 0.0f64;
    for sigma_hz in [3.7e6, 12.5e6] {
        let pump = PumpSpectrum::gaussian_hz(sigma_hz).unwrap();
        let jsa = build_jsa(FrequencyGrid::default_for(&line, &pump).unwrap(), line, pump).unwrap();
        let grid = *jsa.grid();
        let tg = TimeGrid::full_period(&grid, -0.3 * std::f64::consts::TAU / grid.spacing(), grid.len()).unwrap();
        let gap = (time_norm_squared(&time_domain(&jsa, &tg).unwrap(), &tg) - jsa.norm_squared()).abs();
        worst_parseval = worst_parseval.max(gap);
    }
    t.check(worst_parseval < 1e-6, format!("Parseval gap {worst_parseval:.2e}"));

    let cfg = RunConfig::load(None, &["channel.jitter_samples=2000".into()], None).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        match run(Command::ReproduceAll, &cfg, d.path()) {
            Ok(_) | Err(CliError::Checks(_)) => {}
            Err(e) => panic!("reproduce-all failed: {e}"),
        }
    }
    let (first, second) = (read_outputs(a.path()), read_outputs(b.path()));
    t.check(first.len() >= 10, format!("only {} outputs", first.len()));
    let identical = first == second;
    t.check(identical, "reruns differ".into());
    report(
        8,
        "property suites",
        &t.0,
        &format!(
            "max S over 1000 states {worst_s:.6}, min Choi eigenvalue {worst_choi:.2e}, Parseval gap {worst_parseval:.1e}, \
             {} outputs byte-identical across reruns: {identical}",
            first.len()
        ),
    );
}
