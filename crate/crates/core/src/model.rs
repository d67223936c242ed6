//! Two-atom Hilbert space, physical constants and the Hamiltonian / collapse
//! operator builders.
//!
//! Single-atom levels are ordered `|0⟩, |1⟩, |r⟩, |α⟩` and the two-atom index
//! is `4 * atom1 + atom2`. Every module in the crate shares this ordering.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, SMatrix, SVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseRealization;
use crate::pulses::PulseShape;

/// Dimension of the two-atom space.
pub const DIM: usize = 16;

pub type Matrix16 = SMatrix<C64, DIM, DIM>;
pub type Ket16 = SVector<C64, DIM>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Atomic mass unit in kg.
const AMU: f64 = 1.660_539_066_60e-27;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Zero = 0,
    One = 1,
    Rydberg = 2,
    Leak = 3,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Zero, Level::One, Level::Rydberg, Level::Leak];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::Zero => "0",
            Level::One => "1",
            Level::Rydberg => "r",
            Level::Leak => "alpha",
        }
    }
}

/// Two-atom basis index of `|a b⟩`.
#[inline]
pub fn basis_index(a: Level, b: Level) -> usize {
    4 * a.index() + b.index()
}

/// Levels of each atom for a two-atom index.
#[inline]
pub fn basis_levels(index: usize) -> (Level, Level) {
    (Level::ALL[index / 4], Level::ALL[index % 4])
}

/// Human readable label, e.g. `01`, `rr`, `0_alpha`, `alpha_alpha`.
pub fn basis_label(index: usize) -> String {
    let (a, b) = basis_levels(index);
    if a == Level::Leak || b == Level::Leak {
        format!("{}_{}", a.label(), b.label())
    } else {
        format!("{}{}", a.label(), b.label())
    }
}

/// Index of `|rr⟩`.
pub const RR: usize = 10;

/// The four computational inputs `|00⟩, |01⟩, |10⟩, |11⟩`.
pub const COMPUTATIONAL: [usize; 4] = [0, 1, 4, 5];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// C₆/2π in MHz·μm⁶.
    pub c6: f64,
    /// Rydberg lifetime in μs.
    pub tau_r: f64,
    /// Atomic mass in kg.
    pub mass: f64,
    /// Boltzmann constant in J/K.
    pub kb: f64,
    /// Effective wavevectors of the two two-photon transitions, m⁻¹.
    pub k1_eff: f64,
    pub k2_eff: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            c6: 862_690.0,
            tau_r: 400.0,
            mass: 87.0 * AMU,
            kb: 1.380_649e-23,
            k1_eff: 8.76e6,
            k2_eff: 5.0e6,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c6,
            self.tau_r,
            self.mass,
            self.kb,
            self.k1_eff,
            self.k2_eff,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(
                "physical constants must be strictly positive",
            ))
        }
    }

    /// Rydberg decay rate γ = 2π/τ in rad/μs.
    pub fn gamma(&self) -> f64 {
        TAU / self.tau_r
    }

    /// Interatomic distance (μm) at which the interaction equals `v` (rad/μs).
    pub fn distance_for(&self, v: f64) -> f64 {
        (TAU * self.c6 / v).powf(1.0 / 6.0)
    }

    /// One-dimensional thermal rms velocity in m/s.
    pub fn v_rms(&self, temperature: f64) -> f64 {
        (self.kb * temperature / self.mass).sqrt()
    }
}

/// van der Waals interaction `2π·C₆/r⁶` in rad/μs for a distance in μm.
pub fn interaction_strength(r: f64, constants: &PhysicalConstants) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!(
            "interatomic distance must be positive, got {r}"
        )));
    }
    Ok(TAU * constants.c6 / r.powi(6))
}

/// Probabilities that a Rydberg decay lands in `|0⟩`, `|1⟩` or `|α⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingRatios {
    pub eta_r0: f64,
    pub eta_r1: f64,
    pub eta_alpha: f64,
}

impl BranchingRatios {
    pub fn new(eta_r0: f64, eta_r1: f64, eta_alpha: f64) -> Result<Self> {
        let b = Self {
            eta_r0,
            eta_r1,
            eta_alpha,
        };
        b.validate()?;
        Ok(b)
    }

    /// Equal decay into both qubit states, no leakage.
    pub fn qubit_only() -> Self {
        Self {
            eta_r0: 0.5,
            eta_r1: 0.5,
            eta_alpha: 0.0,
        }
    }

    /// (⅛, ⅛, ¾): most decays leave the qubit manifold.
    pub fn leaky() -> Self {
        Self {
            eta_r0: 0.125,
            eta_r1: 0.125,
            eta_alpha: 0.75,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let etas = [self.eta_r0, self.eta_r1, self.eta_alpha];
        if etas.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::invalid("branching ratios must lie in [0, 1]"));
        }
        if (etas.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("branching ratios must sum to 1"));
        }
        Ok(())
    }
}

impl Default for BranchingRatios {
    fn default() -> Self {
        Self::qubit_only()
    }
}

/// Everything that defines one gate instance. All frequencies in rad/μs.
///
/// `Δ₂` is never stored: it always follows from the antiblockade constraint
/// `V = Δ₁ + Δ₂ + q`, see [`GateParameters::delta2`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateParameters {
    pub pulse1: PulseShape,
    pub pulse2: PulseShape,
    pub delta1: f64,
    pub q: f64,
    pub v0: f64,
    pub t_gate: f64,
    pub gamma: f64,
    pub branching: BranchingRatios,
}

impl GateParameters {
    #[inline]
    pub fn delta2(&self) -> f64 {
        self.v0 - self.delta1 - self.q
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_gate > 0.0) || !self.t_gate.is_finite() {
            return Err(Error::invalid(format!(
                "gate duration must be positive, got {}",
                self.t_gate
            )));
        }
        for v in [self.delta1, self.q, self.v0, self.gamma] {
            if !v.is_finite() {
                return Err(Error::invalid("non-finite gate parameter"));
            }
        }
        if self.gamma < 0.0 {
            return Err(Error::invalid("decay rate must be non-negative"));
        }
        self.pulse1.validate()?;
        self.pulse2.validate()?;
        self.branching.validate()
    }

    /// Whether both detunings exceed twice the matching pulse peak, the
    /// regime where the effective model is meaningful. Informational only.
    pub fn large_detuning_ok(&self) -> bool {
        self.delta1.abs() > 2.0 * self.pulse1.peak(self.t_gate)
            && self.delta2().abs() > 2.0 * self.pulse2.peak(self.t_gate)
    }

    /// Copy with both pulses switched off.
    pub fn with_pulses_off(&self) -> Self {
        Self {
            pulse1: self.pulse1.scaled(0.0),
            pulse2: self.pulse2.scaled(0.0),
            ..*self
        }
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-9 * self.t_gate;
        if t < -slack || t > self.t_gate + slack || t.is_nan() {
            return Err(Error::domain(format!(
                "time {t} outside [0, {}]",
                self.t_gate
            )));
        }
        Ok(())
    }
}

/// A 16×16 operator on the two-atom space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(pub Matrix16);

impl Operator {
    pub fn zeros() -> Self {
        Self(Matrix16::zeros())
    }

    pub fn matrix(&self) -> &Matrix16 {
        &self.0
    }

    /// `|a⟩⟨b|` acting on one atom, embedded in the two-atom space.
    pub fn single_atom(atom: usize, ket: Level, bra: Level, coeff: C64) -> Self {
        let mut m = Matrix16::zeros();
        for other in Level::ALL {
            let (row, col) = match atom {
                0 => (basis_index(ket, other), basis_index(bra, other)),
                _ => (basis_index(other, ket), basis_index(other, bra)),
            };
            m[(row, col)] += coeff;
        }
        Self(m)
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// max |H − H†| over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(self.0 - self.0.adjoint()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| *z == ZERO)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

impl std::ops::Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

pub(crate) fn max_abs(m: &Matrix16) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Two-atom density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    rho: Matrix16,
}

impl QuantumState {
    /// Wrap a matrix without checks.
    pub fn from_matrix(rho: Matrix16) -> Self {
        Self { rho }
    }

    /// `|k⟩⟨k|` for a basis index.
    pub fn basis(index: usize) -> Self {
        let mut rho = Matrix16::zeros();
        rho[(index, index)] = ONE;
        Self { rho }
    }

    /// `|ψ⟩⟨ψ|`; the ket is normalised first.
    pub fn pure(ket: &Ket16) -> Result<Self> {
        let norm = ket.norm();
        if !(norm > 0.0) {
            return Err(Error::invalid("cannot build a state from a zero vector"));
        }
        let psi = ket / C64::new(norm, 0.0);
        Ok(Self {
            rho: psi * psi.adjoint(),
        })
    }

    pub fn matrix(&self) -> &Matrix16 {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    pub fn population(&self, index: usize) -> f64 {
        self.rho[(index, index)].re
    }

    pub fn populations(&self) -> [f64; DIM] {
        std::array::from_fn(|i| self.rho[(i, i)].re)
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation(&self, psi: &Ket16) -> f64 {
        (psi.adjoint() * self.rho * psi)[(0, 0)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(self.rho - self.rho.adjoint()))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.rho)
    }

    /// Swap the roles of atom 1 and atom 2.
    pub fn exchange_atoms(&self) -> Self {
        let p = |i: usize| 4 * (i % 4) + i / 4;
        Self {
            rho: Matrix16::from_fn(|i, j| self.rho[(p(i), p(j))]),
        }
    }
}

pub(crate) fn min_eigenvalue(m: &Matrix16) -> f64 {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let dyn_m = DMatrix::from_iterator(DIM, DIM, herm.iter().copied());
    dyn_m
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

impl fmt::Display for QuantumState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..DIM {
            let p = self.population(i);
            if p.abs() > 1e-12 {
                writeln!(f, "|{}⟩ {p:.6}", basis_label(i))?;
            }
        }
        Ok(())
    }
}

/// Instantaneous drive amplitude (rad/μs) of `laser` (0 or 1) on `atom`
/// (0 or 1) including the noise realisation's intensity and spatial factors.
#[inline]
pub(crate) fn drive(
    params: &GateParameters,
    realization: &NoiseRealization,
    laser: usize,
    atom: usize,
    t: f64,
) -> f64 {
    let shape = if laser == 0 {
        &params.pulse1
    } else {
        &params.pulse2
    };
    let base = realization.intensity_scale * shape.value(t, params.t_gate)
        + realization.intensity_offset[laser];
    let s = if atom == 0 {
        realization.spatial_scale1
    } else {
        realization.spatial_scale2
    };
    s * base
}

/// Laser detunings seen by the atoms including Doppler offsets.
#[inline]
pub(crate) fn detunings(params: &GateParameters, realization: &NoiseRealization) -> (f64, f64) {
    (
        params.delta1 + realization.alpha1,
        params.delta2() + realization.alpha2,
    )
}

/// Full two-atom Hamiltonian in the laser-phase frame.
///
/// Each atom carries `Ω₁ s e^{−i(Δ₁+α₁)t}|r⟩⟨0| + Ω₂ s e^{−i(Δ₂+α₂)t}|r⟩⟨1| + H.c.`
/// and the pair carries the realised interaction on `|rr⟩`. With this phase
/// convention the two-photon transition `|01⟩ → |rr⟩` is resonant when
/// `V = Δ₁ + Δ₂`.
pub fn build_hamiltonian(
    t: f64,
    params: &GateParameters,
    realization: &NoiseRealization,
) -> Result<Operator> {
    params.check_time(t)?;
    let (d1, d2) = detunings(params, realization);
    let mut h = Operator::zeros();
    for atom in 0..2 {
        let c0 = C64::from_polar(drive(params, realization, 0, atom, t), -d1 * t);
        let c1 = C64::from_polar(drive(params, realization, 1, atom, t), -d2 * t);
        let up = Operator::single_atom(atom, Level::Rydberg, Level::Zero, c0)
            + Operator::single_atom(atom, Level::Rydberg, Level::One, c1);
        h = h + up.clone() + up.adjoint();
    }
    h[(RR, RR)] += C64::new(realization.v_realized, 0.0);
    Ok(h)
}

/// Energies `(E₀, E₁, E_r, E_α)` of the diagonal frame change that removes the
/// explicit laser phases: `E_r − E₀ = Δ₁+α₁`, `E_r − E₁ = Δ₂+α₂`, `E₀ = E_α = 0`.
pub fn frame_energies(params: &GateParameters, realization: &NoiseRealization) -> [f64; 4] {
    let (d1, d2) = detunings(params, realization);
    [0.0, d1 - d2, d1, 0.0]
}

/// Two-atom frame energies `E_a + E_b`.
pub fn two_atom_frame_energies(
    params: &GateParameters,
    realization: &NoiseRealization,
) -> [f64; DIM] {
    let e = frame_energies(params, realization);
    std::array::from_fn(|i| e[i / 4] + e[i % 4])
}

/// Time-independent-phase Hamiltonian obtained from [`build_hamiltonian`] by
/// the diagonal frame change `W = exp(−i Σ E_k t |k⟩⟨k|)`.
///
/// Populations are frame invariant, and so is the dissipator for the decay
/// and dephasing channels, so evolutions in either frame give identical
/// populations. Doppler offsets are absorbed into the frame energies.
pub fn build_static_frame_hamiltonian(
    t: f64,
    params: &GateParameters,
    realization: &NoiseRealization,
) -> Result<Operator> {
    params.check_time(t)?;
    let energies = two_atom_frame_energies(params, realization);
    let mut h = Operator::zeros();
    for atom in 0..2 {
        let c0 = C64::new(drive(params, realization, 0, atom, t), 0.0);
        let c1 = C64::new(drive(params, realization, 1, atom, t), 0.0);
        let up = Operator::single_atom(atom, Level::Rydberg, Level::Zero, c0)
            + Operator::single_atom(atom, Level::Rydberg, Level::One, c1);
        h = h + up.clone() + up.adjoint();
    }
    for (i, e) in energies.iter().enumerate() {
        h[(i, i)] -= C64::new(*e, 0.0);
    }
    h[(RR, RR)] += C64::new(realization.v_realized, 0.0);
    Ok(h)
}

/// Rotate a static-frame density matrix at time `t` back to the phase frame.
pub fn static_to_phase_frame(
    rho: &Matrix16,
    t: f64,
    params: &GateParameters,
    realization: &NoiseRealization,
) -> Matrix16 {
    let e = two_atom_frame_energies(params, realization);
    Matrix16::from_fn(|i, j| rho[(i, j)] * C64::from_polar(1.0, -(e[i] - e[j]) * t))
}

/// The six Rydberg decay channels `√(ηγ)|g⟩ⱼ⟨r|`, ordered
/// `(g=0, atom 1), (g=0, atom 2), (g=1, atom 1), (g=1, atom 2), (α, 1), (α, 2)`.
/// Channels with η = 0 are zero operators.
pub fn build_decay_channels(gamma: f64, branching: &BranchingRatios) -> Vec<Operator> {
    let targets = [
        (Level::Zero, branching.eta_r0),
        (Level::One, branching.eta_r1),
        (Level::Leak, branching.eta_alpha),
    ];
    let mut out = Vec::with_capacity(6);
    for (ground, eta) in targets {
        let amp = C64::new((eta * gamma).max(0.0).sqrt(), 0.0);
        for atom in 0..2 {
            out.push(Operator::single_atom(atom, ground, Level::Rydberg, amp));
        }
    }
    out
}

/// Laser-phase dephasing channels `√(γ₀/2)(|r⟩⟨r| − |g⟩⟨g|)` for g ∈ {0, 1}
/// on each atom, ordered `(0, atom 1), (0, atom 2), (1, atom 1), (1, atom 2)`.
pub fn build_dephasing_channels(gamma0: f64) -> Result<Vec<Operator>> {
    if !(gamma0 >= 0.0) {
        return Err(Error::domain(format!(
            "dephasing rate must be non-negative, got {gamma0}"
        )));
    }
    let amp = C64::new((gamma0 / 2.0).sqrt(), 0.0);
    let mut out = Vec::with_capacity(4);
    for ground in [Level::Zero, Level::One] {
        for atom in 0..2 {
            out.push(
                Operator::single_atom(atom, Level::Rydberg, Level::Rydberg, amp)
                    + Operator::single_atom(atom, ground, ground, -amp),
            );
        }
    }
    Ok(out)
}
