//! Polarization qubits, the dual-rail memory channel and two-photon
//! correlation diagnostics.
//!
//! Basis order is `{|H⟩, |V⟩}`; for two qubits `|ab⟩` has index `2a + b`.
//! `|H⟩` is stored in rail D and `|V⟩` in rail U.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{ensure_non_negative, ensure_positive, ensure_unit_interval, Error, Result};
use crate::optimize;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-10;

/// Phase stability of λ/28 read as one standard deviation of the
/// interferometer phase.
pub const DEFAULT_PHASE_JITTER: f64 = std::f64::consts::TAU / 28.0;

/// Analyzer angles (θ₁, θ₁′, θ₂, θ₂′) = (0°, 45°, 22.5°, 67.5°).
pub const CHSH_ANGLES: [f64; 4] =
    [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_8, 3.0 * std::f64::consts::FRAC_PI_8];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    jones: Vector2<Complex64>,
}

impl PolarizationState {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("Jones vector has norm² {norm}, expected 1")));
        }
        Ok(Self { jones: Vector2::new(alpha, beta) })
    }

    /// Rescales `(α, β)` to unit norm.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput("Jones vector must be non-zero and finite".into()));
        }
        Self::new(alpha / n, beta / n)
    }

    /// `cos θ|H⟩ + sin θ|V⟩`
    pub fn linear(theta: f64) -> Self {
        Self { jones: Vector2::new(Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)) }
    }

    pub fn h() -> Self {
        Self::linear(0.0)
    }

    pub fn v() -> Self {
        Self { jones: Vector2::new(C0, C1) }
    }

    pub fn plus() -> Self {
        Self::linear(std::f64::consts::FRAC_PI_4)
    }

    pub fn minus() -> Self {
        Self::linear(-std::f64::consts::FRAC_PI_4)
    }

    /// `(|H⟩ + i|V⟩)/√2`
    pub fn r() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { jones: Vector2::new(Complex64::new(s, 0.0), Complex64::new(0.0, s)) }
    }

    /// `(|H⟩ − i|V⟩)/√2`
    pub fn l() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { jones: Vector2::new(Complex64::new(s, 0.0), Complex64::new(0.0, -s)) }
    }

    pub fn jones(&self) -> &Vector2<Complex64> {
        &self.jones
    }

    pub fn alpha(&self) -> Complex64 {
        self.jones[0]
    }

    pub fn beta(&self) -> Complex64 {
        self.jones[1]
    }

    pub fn density(&self) -> QubitDensity {
        QubitDensity { matrix: self.jones * self.jones.adjoint() }
    }
}

/// The six input states of a storage-fidelity battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SixState {
    H,
    V,
    Plus,
    Minus,
    R,
    L,
}

impl SixState {
    pub const ALL: [SixState; 6] = [Self::H, Self::V, Self::Plus, Self::Minus, Self::R, Self::L];

    pub fn label(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::V => "V",
            Self::Plus => "+",
            Self::Minus => "-",
            Self::R => "R",
            Self::L => "L",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.label().eq_ignore_ascii_case(s.trim())).or(
            match s.trim().to_ascii_lowercase().as_str() {
                "plus" => Some(Self::Plus),
                "minus" => Some(Self::Minus),
                _ => None,
            },
        )
    }

    pub fn state(self) -> PolarizationState {
        match self {
            Self::H => PolarizationState::h(),
            Self::V => PolarizationState::v(),
            Self::Plus => PolarizationState::plus(),
            Self::Minus => PolarizationState::minus(),
            Self::R => PolarizationState::r(),
            Self::L => PolarizationState::l(),
        }
    }
}

fn hermitian_defect<const N: usize>(m: &nalgebra::SMatrix<Complex64, N, N>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn validate_density<const N: usize>(m: &nalgebra::SMatrix<Complex64, N, N>) -> Result<()>
where
    nalgebra::Const<N>:
        nalgebra::DimMin<nalgebra::Const<N>, Output = nalgebra::Const<N>> + nalgebra::DimSub<nalgebra::U1>,
    nalgebra::DefaultAllocator:
        nalgebra::allocator::Allocator<<nalgebra::Const<N> as nalgebra::DimSub<nalgebra::U1>>::Output>,
{
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("density matrix has non-finite entries".into()));
    }
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidInput(format!("density matrix is not Hermitian (defect {defect:.2e})")));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidInput(format!("density matrix has trace {tr}")));
    }
    let min = min_eigenvalue(m);
    if min < -PSD_TOL {
        return Err(Error::InvalidInput(format!("density matrix has eigenvalue {min:.3e}")));
    }
    Ok(())
}

fn min_eigenvalue<const N: usize>(m: &nalgebra::SMatrix<Complex64, N, N>) -> f64
where
    nalgebra::Const<N>: nalgebra::DimSub<nalgebra::U1>,
    nalgebra::DefaultAllocator:
        nalgebra::allocator::Allocator<<nalgebra::Const<N> as nalgebra::DimSub<nalgebra::U1>>::Output>,
{
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity {
    matrix: Matrix2<Complex64>,
}

impl QubitDensity {
    pub fn new(matrix: Matrix2<Complex64>) -> Result<Self> {
        validate_density(&matrix)?;
        Ok(Self { matrix })
    }

    pub fn maximally_mixed() -> Self {
        Self { matrix: Matrix2::identity() * Complex64::new(0.5, 0.0) }
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitDensity {
    matrix: Matrix4<Complex64>,
}

impl TwoQubitDensity {
    pub fn new(matrix: Matrix4<Complex64>) -> Result<Self> {
        validate_density(&matrix)?;
        Ok(Self { matrix })
    }

    pub fn from_pure(v: Vector4<Complex64>) -> Result<Self> {
        let n = v.norm_squared();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("state vector has norm² {n}")));
        }
        Ok(Self { matrix: v * v.adjoint() })
    }

    pub fn product(a: &QubitDensity, b: &QubitDensity) -> Self {
        Self { matrix: a.matrix.kronecker(&b.matrix) }
    }

    pub fn maximally_mixed() -> Self {
        Self { matrix: Matrix4::identity() * Complex64::new(0.25, 0.0) }
    }

    /// Convex combination `w·self + (1 − w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        ensure_unit_interval("weight", w)?;
        Ok(Self { matrix: self.matrix * Complex64::new(w, 0.0) + other.matrix * Complex64::new(1.0 - w, 0.0) })
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn reduced_first(&self) -> QubitDensity {
        QubitDensity {
            matrix: Matrix2::from_fn(|a, c| self.matrix[(2 * a, 2 * c)] + self.matrix[(2 * a + 1, 2 * c + 1)]),
        }
    }

    pub fn reduced_second(&self) -> QubitDensity {
        QubitDensity { matrix: Matrix2::from_fn(|b, d| self.matrix[(b, d)] + self.matrix[(2 + b, 2 + d)]) }
    }
}

/// `(|HV⟩ + |VH⟩)/√2`
pub fn bell_state() -> TwoQubitDensity {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    TwoQubitDensity {
        matrix: {
            let v = Vector4::new(C0, s, s, C0);
            v * v.adjoint()
        },
    }
}

/// `V·|Ψ⁺⟩⟨Ψ⁺| + (1 − V)·I/4`
pub fn werner(visibility: f64) -> Result<TwoQubitDensity> {
    ensure_unit_interval("visibility", visibility)?;
    bell_state().mix(&TwoQubitDensity::maximally_mixed(), visibility)
}

/// Random density matrix `GG†/tr(GG†)` with complex Gaussian `G`.
pub fn random_two_qubit_density<R: Rng + ?Sized>(rng: &mut R) -> TwoQubitDensity {
    let g = Matrix4::from_fn(|_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    let m = g * g.adjoint();
    let tr = m.trace().re;
    TwoQubitDensity { matrix: m / Complex64::new(tr, 0.0) }
}

/// Random Haar-distributed pure qubit state.
pub fn random_polarization_state<R: Rng + ?Sized>(rng: &mut R) -> PolarizationState {
    loop {
        let a = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        let b = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        if let Ok(s) = PolarizationState::normalized(a, b) {
            return s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryChannelParams {
    /// Amplitude transmission of rail U (carries V).
    pub eta_u: f64,
    /// Amplitude transmission of rail D (carries H).
    pub eta_d: f64,
    /// Standard deviation of the relative rail phase, radians.
    pub phase_jitter_sigma: f64,
    /// Background-to-signal probability ratio at zero storage time.
    pub background: f64,
    pub storage_time: f64,
}

impl MemoryChannelParams {
    pub fn new(eta_u: f64, eta_d: f64, phase_jitter_sigma: f64, background: f64, storage_time: f64) -> Result<Self> {
        let p = Self { eta_u, eta_d, phase_jitter_sigma, background, storage_time };
        p.validate()?;
        Ok(p)
    }

    pub fn identity() -> Self {
        Self { eta_u: 1.0, eta_d: 1.0, phase_jitter_sigma: 0.0, background: 0.0, storage_time: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_unit_interval("eta_u", self.eta_u)?;
        ensure_unit_interval("eta_d", self.eta_d)?;
        ensure_non_negative("phase_jitter_sigma", self.phase_jitter_sigma)?;
        ensure_non_negative("background", self.background)?;
        ensure_non_negative("storage_time", self.storage_time)
    }

    /// Mean coherence survival `E[e^{iφ}] = e^{−σ²/2}`.
    pub fn dephasing_factor(&self) -> f64 {
        (-0.5 * self.phase_jitter_sigma * self.phase_jitter_sigma).exp()
    }
}

/// Unnormalized linear map of one stored qubit.
///
/// `Λ(ρ) = D_φ(KρK†) + b·tr(ρ)·I/2`, with `K = √s·diag(η_D, η_U)`,
/// `s = η(t)/η(0)` the relative retrieval efficiency and `D_φ` scaling the
/// coherences by the jitter survival factor. Post-selection on a retrieved
/// click is the division by `tr Λ(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryChannel {
    kraus_diag: [f64; 2],
    coherence: Complex64,
    noise: f64,
}

impl MemoryChannel {
    pub fn new(params: &MemoryChannelParams, eta_of_t: &dyn Fn(f64) -> f64) -> Result<Self> {
        Self::with_coherence(params, eta_of_t, Complex64::new(params.dephasing_factor(), 0.0))
    }

    fn with_coherence(
        params: &MemoryChannelParams,
        eta_of_t: &dyn Fn(f64) -> f64,
        coherence: Complex64,
    ) -> Result<Self> {
        params.validate()?;
        let eta0 = eta_of_t(0.0);
        let eta_t = eta_of_t(params.storage_time);
        if !(eta0.is_finite() && eta_t.is_finite()) || eta0 < 0.0 || eta_t < 0.0 {
            return Err(Error::InvalidInput("retrieval efficiency must be finite and non-negative".into()));
        }
        let s = if eta0 > 0.0 { eta_t / eta0 } else { 0.0 };
        let a = s.sqrt();
        Ok(Self { kraus_diag: [a * params.eta_d, a * params.eta_u], coherence, noise: params.background })
    }

    /// Channel with the jitter average replaced by a Monte Carlo mean over
    /// `samples` Gaussian phase draws.
    pub fn sampled<R: Rng + ?Sized>(
        params: &MemoryChannelParams,
        eta_of_t: &dyn Fn(f64) -> f64,
        samples: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidInput("need at least one jitter sample".into()));
        }
        let coherence = if params.phase_jitter_sigma > 0.0 {
            let normal = Normal::new(0.0, params.phase_jitter_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
            let sum: Complex64 = (0..samples).map(|_| Complex64::from_polar(1.0, normal.sample(rng))).sum();
            sum / samples as f64
        } else {
            C1
        };
        Self::with_coherence(params, eta_of_t, coherence)
    }

    /// Unnormalized output `Λ(m)` for any 2×2 operator.
    pub fn apply_linear(&self, m: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let [kd, ku] = self.kraus_diag;
        let tr = m.trace();
        let half_noise = tr * (0.5 * self.noise);
        Matrix2::new(
            m[(0, 0)] * (kd * kd) + half_noise,
            m[(0, 1)] * (kd * ku) * self.coherence,
            m[(1, 0)] * (kd * ku) * self.coherence.conj(),
            m[(1, 1)] * (ku * ku) + half_noise,
        )
    }

    /// Retrieved (post-selected) state.
    pub fn apply(&self, rho: &QubitDensity) -> Result<QubitDensity> {
        let out = self.apply_linear(&rho.matrix);
        let tr = out.trace().re;
        if !(tr > 0.0) {
            return Err(Error::NoRetrieval);
        }
        Ok(QubitDensity { matrix: out / Complex64::new(tr, 0.0) })
    }

    /// `(id ⊗ Λ)` applied to the second qubit, post-selected.
    pub fn apply_to_second(&self, rho: &TwoQubitDensity) -> Result<TwoQubitDensity> {
        let m = &rho.matrix;
        let mut out = Matrix4::zeros();
        for a in 0..2 {
            for c in 0..2 {
                let block = Matrix2::from_fn(|b, d| m[(2 * a + b, 2 * c + d)]);
                let mapped = self.apply_linear(&block);
                for b in 0..2 {
                    for d in 0..2 {
                        out[(2 * a + b, 2 * c + d)] = mapped[(b, d)];
                    }
                }
            }
        }
        let tr = out.trace().re;
        if !(tr > 0.0) {
            return Err(Error::NoRetrieval);
        }
        let out = out / Complex64::new(tr, 0.0);
        Ok(TwoQubitDensity { matrix: (out + out.adjoint()) * Complex64::new(0.5, 0.0) })
    }

    /// Choi matrix `Σᵢⱼ |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)` of the unnormalized map.
    pub fn choi(&self) -> Matrix4<Complex64> {
        let mut c = Matrix4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut e = Matrix2::zeros();
                e[(i, j)] = C1;
                let mapped = self.apply_linear(&e);
                for b in 0..2 {
                    for d in 0..2 {
                        c[(2 * i + b, 2 * j + d)] = mapped[(b, d)];
                    }
                }
            }
        }
        c
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.choi())
    }
}

/// Stores one qubit and returns the post-selected retrieved state.
pub fn memory_channel(
    rho_in: &QubitDensity,
    params: &MemoryChannelParams,
    eta_of_t: &dyn Fn(f64) -> f64,
) -> Result<QubitDensity> {
    MemoryChannel::new(params, eta_of_t)?.apply(rho_in)
}

/// `⟨ψ|ρ|ψ⟩`
pub fn fidelity(psi_in: &PolarizationState, rho_out: &QubitDensity) -> f64 {
    let v = psi_in.jones();
    (v.adjoint() * rho_out.matrix * v)[(0, 0)].re.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SixStateReport {
    pub fidelities: Vec<(SixState, f64)>,
    pub average: f64,
}

impl SixStateReport {
    pub fn get(&self, s: SixState) -> Option<f64> {
        self.fidelities.iter().find(|(x, _)| *x == s).map(|(_, f)| *f)
    }
}

pub fn six_state_battery(params: &MemoryChannelParams, eta_of_t: &dyn Fn(f64) -> f64) -> Result<SixStateReport> {
    MemoryChannel::new(params, eta_of_t)?.six_state_battery()
}

impl MemoryChannel {
    /// Stores each of the six states and reports the retrieval fidelities.
    pub fn six_state_battery(&self) -> Result<SixStateReport> {
        let fidelities = SixState::ALL
            .iter()
            .map(|&s| {
                let psi = s.state();
                self.apply(&psi.density()).map(|out| (s, fidelity(&psi, &out)))
            })
            .collect::<Result<Vec<_>>>()?;
        let average = fidelities.iter().map(|(_, f)| f).sum::<f64>() / fidelities.len() as f64;
        Ok(SixStateReport { fidelities, average })
    }
}

/// Least-squares fit of the background ratio `b` to measured six-state
/// fidelities, all other channel parameters held fixed.
pub fn fit_background_to_fidelities(
    params: &MemoryChannelParams,
    eta_of_t: &dyn Fn(f64) -> f64,
    targets: &[(SixState, f64)],
) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::FitFailure("no fidelity targets".into()));
    }
    let cost = |b: f64| -> f64 {
        let p = MemoryChannelParams { background: b, ..*params };
        match six_state_battery(&p, eta_of_t) {
            Ok(rep) => targets.iter().map(|(s, f)| (rep.get(*s).unwrap_or(f64::NAN) - f).powi(2)).sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let (b, c) = optimize::golden_section_min(&cost, 0.0, 2.0, 1e-12)?;
    let (b, c) = if cost(0.0) < c { (0.0, cost(0.0)) } else { (b, c) };
    if !c.is_finite() {
        return Err(Error::FitFailure("fidelity cost is not finite".into()));
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleConvention {
    /// Both analyzers project on `cos θ|H⟩ + sin θ|V⟩`.
    Plus,
    /// First analyzer mirrored (θ₁ → −θ₁).
    Minus,
}

/// Polarization observable with eigenstates at θ (+1) and θ + 90° (−1).
fn analyzer(theta: f64) -> Matrix2<Complex64> {
    let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    Matrix2::new(Complex64::new(c, 0.0), Complex64::new(s, 0.0), Complex64::new(s, 0.0), Complex64::new(-c, 0.0))
}

/// `P(++) + P(−−) − P(+−) − P(−+)` for analyzers at θ₁, θ₂.
pub fn correlation_e(rho: &TwoQubitDensity, theta1: f64, theta2: f64, convention: AngleConvention) -> f64 {
    let t1 = match convention {
        AngleConvention::Plus => theta1,
        AngleConvention::Minus => -theta1,
    };
    let obs = analyzer(t1).kronecker(&analyzer(theta2));
    (rho.matrix * obs).trace().re.clamp(-1.0, 1.0)
}

/// `|E(θ₁,θ₂) − E(θ₁,θ₂′) + E(θ₁′,θ₂) + E(θ₁′,θ₂′)|`
pub fn chsh_s(rho: &TwoQubitDensity, angles: [f64; 4], convention: AngleConvention) -> f64 {
    let [a, a2, b, b2] = angles;
    let e = |x, y| correlation_e(rho, x, y, convention);
    (e(a, b) - e(a, b2) + e(a2, b) + e(a2, b2)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlyingBasis {
    H,
    Plus,
}

impl FlyingBasis {
    fn state(self) -> PolarizationState {
        match self {
            Self::H => PolarizationState::h(),
            Self::Plus => PolarizationState::plus(),
        }
    }
}

/// Coincidence probability with the flying photon (qubit 1) projected on
/// the basis state and the signal photon (qubit 2) on `cos θ|H⟩ + sin θ|V⟩`.
pub fn coincidence(rho: &TwoQubitDensity, flying: FlyingBasis, theta: f64) -> f64 {
    let v = flying.state().jones().kronecker(PolarizationState::linear(theta).jones());
    (v.adjoint() * rho.matrix * v)[(0, 0)].re.max(0.0)
}

/// Max-normalized coincidence curve over `thetas`.
pub fn correlation_curve(rho: &TwoQubitDensity, flying: FlyingBasis, thetas: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = thetas.iter().map(|&t| coincidence(rho, flying, t)).collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        raw.iter().map(|p| p / max).collect()
    } else {
        raw
    }
}

/// `(max − min)/(max + min)` of a sampled curve.
pub fn sampled_visibility(curve: &[f64]) -> f64 {
    let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min > 0.0 {
        (max - min) / (max + min)
    } else {
        0.0
    }
}

/// Exact fringe visibility. The coincidence curve is `a + b cos 2θ + c sin 2θ`,
/// so three samples fix it.
pub fn curve_visibility(rho: &TwoQubitDensity, flying: FlyingBasis) -> f64 {
    let p0 = coincidence(rho, flying, 0.0);
    let p90 = coincidence(rho, flying, std::f64::consts::FRAC_PI_2);
    let p45 = coincidence(rho, flying, std::f64::consts::FRAC_PI_4);
    let a = 0.5 * (p0 + p90);
    let b = 0.5 * (p0 - p90);
    let c = p45 - a;
    if a > 0.0 {
        (b * b + c * c).sqrt() / a
    } else {
        0.0
    }
}

/// Mean of the H- and +-basis fringe visibilities.
pub fn mean_curve_visibility(rho: &TwoQubitDensity) -> f64 {
    0.5 * (curve_visibility(rho, FlyingBasis::H) + curve_visibility(rho, FlyingBasis::Plus))
}

/// Two-photon state after storing photon 2 of a Werner source.
pub fn stored_pair(
    source_visibility: f64,
    params: &MemoryChannelParams,
    eta_of_t: &dyn Fn(f64) -> f64,
) -> Result<TwoQubitDensity> {
    MemoryChannel::new(params, eta_of_t)?.apply_to_second(&werner(source_visibility)?)
}

/// Background ratio `b` for which the stored pair shows the target mean
/// fringe visibility at `params.storage_time`.
pub fn fit_background_to_visibility(
    source_visibility: f64,
    params: &MemoryChannelParams,
    eta_of_t: &dyn Fn(f64) -> f64,
    target: f64,
) -> Result<f64> {
    ensure_positive("target visibility", target)?;
    let vis = |b: f64| -> f64 {
        let p = MemoryChannelParams { background: b, ..*params };
        stored_pair(source_visibility, &p, eta_of_t).map(|rho| mean_curve_visibility(&rho)).unwrap_or(f64::NAN)
    };
    let v0 = vis(0.0);
    if !(v0 >= target) {
        return Err(Error::FitFailure(format!(
            "noise-free visibility {v0:.4} is already below the target {target:.4}"
        )));
    }
    let mut hi = 1.0;
    while vis(hi) > target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::FitFailure("visibility never drops to the target".into()));
        }
    }
    optimize::bisect(|b| vis(b) - target, 0.0, hi, 1e-13)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStatistics {
    p1: f64,
    p3: f64,
    p13: f64,
}

impl PairStatistics {
    pub fn new(p1: f64, p3: f64, p13: f64) -> Result<Self> {
        ensure_non_negative("p1", p1)?;
        ensure_non_negative("p3", p3)?;
        ensure_non_negative("p13", p13)?;
        if p13 > p1.min(p3) + 1e-12 {
            return Err(Error::InvalidInput(format!("coincidence probability {p13} exceeds a singles probability")));
        }
        Ok(Self { p1, p3, p13 })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p3(&self) -> f64 {
        self.p3
    }

    pub fn p13(&self) -> f64 {
        self.p13
    }
}

/// `p₁₃/(p₁p₃)`
pub fn g13(stats: &PairStatistics) -> Result<f64> {
    if stats.p1 <= 0.0 || stats.p3 <= 0.0 {
        return Err(Error::Undefined("cross-correlation needs non-zero singles".into()));
    }
    Ok(stats.p13 / (stats.p1 * stats.p3))
}

/// `α = 4/(g₁₃ − 1)`: 0 for an ideal single photon, 1 at the coherent-state
/// level.
pub fn alpha_quality(g13_value: f64) -> Result<f64> {
    if g13_value.is_nan() || g13_value <= 1.0 {
        return Err(Error::ClassicalRegime(g13_value));
    }
    Ok(4.0 / (g13_value - 1.0))
}

/// Cross-correlation versus storage time: signal coincidences follow the
/// retrieval efficiency while accidentals do not,
/// `g₁₃(t) = 1 + (g₀ − 1)·η(t)/η(0)`.
pub fn g13_decay_model(t: f64, g0: f64, eta_of_t: &dyn Fn(f64) -> f64) -> Result<f64> {
    if !(g0 > 1.0) || !g0.is_finite() {
        return Err(Error::InvalidInput(format!("g0 must exceed 1, got {g0}")));
    }
    let eta0 = eta_of_t(0.0);
    if !(eta0 > 0.0) {
        return Err(Error::InvalidInput("η(0) must be positive".into()));
    }
    Ok(1.0 + (g0 - 1.0) * eta_of_t(t) / eta0)
}

/// Memory lifetime for which `g₁₃` decays from `g0` to `level` at `t_cross`.
pub fn memory_lifetime_for_crossing(g0: f64, level: f64, t_cross: f64, shape: crate::eit::DecayShape) -> Result<f64> {
    ensure_positive("t_cross", t_cross)?;
    if !(level > 1.0 && g0 > level) {
        return Err(Error::InvalidInput(format!("need g0 > level > 1, got g0 = {g0}, level = {level}")));
    }
    let log_ratio = ((g0 - 1.0) / (level - 1.0)).ln();
    Ok(match shape {
        crate::eit::DecayShape::Exponential => t_cross / log_ratio,
        crate::eit::DecayShape::Gaussian => t_cross / log_ratio.sqrt(),
    })
}

/// First time in `[0, t_max]` at which `g₁₃` falls to `level`.
pub fn g13_crossing_time(g0: f64, level: f64, eta_of_t: &dyn Fn(f64) -> f64, t_max: f64) -> Result<f64> {
    let f = |t: f64| g13_decay_model(t, g0, eta_of_t).map(|g| g - level).unwrap_or(f64::NAN);
    optimize::bisect(f, 0.0, t_max, 1e-12 * t_max)
}
