//! Reduced Hamiltonians obtained by adiabatically eliminating the singly
//! excited states at large detuning.
//!
//! [`effective_from_commutators`] builds the second-order Hamiltonian
//! `[h₁†,h₁]/Δ₁ + [h₂†,h₂]/Δ₂ + q|rr⟩⟨rr|` from the two frequency components
//! of the coupling; [`effective_closed_form`] is its expanded form. The
//! three-level model on `{|01⟩, |10⟩, |rr⟩}` drives [`simulate_effective`].

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::integrator::rk4_step;
use crate::model::{basis_index, GateParameters, Level, COMPUTATIONAL};
use crate::pulses::effective_quantities;
use crate::quad::simpson;
use crate::C64;

pub type Matrix3 = SMatrix<C64, 3, 3>;
pub type Matrix9 = SMatrix<C64, 9, 9>;

/// Labels of the nine retained two-atom states, in matrix order.
pub const BLOCK_LABELS: [&str; 9] = ["00", "01", "10", "11", "0r", "r0", "1r", "r1", "rr"];

const S00: usize = 0;
const S01: usize = 1;
const S10: usize = 2;
const S11: usize = 3;
const S0R: usize = 4;
const SR0: usize = 5;
const S1R: usize = 6;
const SR1: usize = 7;
const SRR: usize = 8;

fn pulses_at(t: f64, params: &GateParameters) -> (f64, f64) {
    (
        params.pulse1.value(t, params.t_gate),
        params.pulse2.value(t, params.t_gate),
    )
}

fn check_detunings(params: &GateParameters) -> Result<(f64, f64)> {
    let (d1, d2) = (params.delta1, params.delta2());
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::domain("effective model requires non-zero detunings"));
    }
    Ok((d1, d2))
}

/// Three-level Hamiltonian on `{|01⟩, |10⟩, |rr⟩}` at time `t`.
pub fn build_effective_h01(t: f64, params: &GateParameters) -> Result<Matrix3> {
    params.check_time(t)?;
    let (o1, o2) = pulses_at(t, params);
    let eq = effective_quantities(o1, o2, params.delta1, params.delta2(), params.q)?;
    let (e, c, d) = (
        C64::from(eq.omega_e),
        C64::from(eq.omega_c),
        C64::from(eq.delta),
    );
    let z = C64::new(0.0, 0.0);
    Ok(Matrix3::new(c, z, e, z, c, e, e, e, d))
}

/// Phases `(∫2Ω₁²/Δ₁ dt, ∫2Ω₂²/Δ₂ dt)` accumulated by `|00⟩` and `|11⟩`.
pub fn effective_phase_00_11(params: &GateParameters, steps: usize) -> Result<(f64, f64)> {
    let (d1, d2) = check_detunings(params)?;
    let steps = steps.max(2);
    let h = params.t_gate / steps as f64;
    let (mut f00, mut f11) = (Vec::with_capacity(steps + 1), Vec::with_capacity(steps + 1));
    for k in 0..=steps {
        let (o1, o2) = pulses_at(k as f64 * h, params);
        f00.push(2.0 * o1 * o1 / d1);
        f11.push(2.0 * o2 * o2 / d2);
    }
    Ok((simpson(&f00, h), simpson(&f11, h)))
}

fn unit(row: usize, col: usize, c: f64) -> Matrix9 {
    let mut m = Matrix9::zeros();
    m[(row, col)] = C64::from(c);
    m
}

/// Frequency components `(h₁, h₂)` of the rotating-frame coupling, with
/// `H₀ = Σₙ hₙ e^{−iΔₙt} + H.c.`.
pub fn coupling_components(o1: f64, o2: f64) -> (Matrix9, Matrix9) {
    let h1 = unit(SR1, S01, o1)
        + unit(SR0, S00, o1)
        + unit(S0R, S00, o1)
        + unit(S1R, S10, o1)
        + unit(S1R, SRR, o2)
        + unit(SR1, SRR, o2);
    let h2 = unit(S0R, S01, o2)
        + unit(S1R, S11, o2)
        + unit(SR1, S11, o2)
        + unit(SR0, S10, o2)
        + unit(S0R, SRR, o1)
        + unit(SR0, SRR, o1);
    (h1, h2)
}

/// `[h₁†,h₁]/Δ₁ + [h₂†,h₂]/Δ₂ + q|rr⟩⟨rr|` at time `t`.
pub fn effective_from_commutators(t: f64, params: &GateParameters) -> Result<Matrix9> {
    params.check_time(t)?;
    let (d1, d2) = check_detunings(params)?;
    let (o1, o2) = pulses_at(t, params);
    let (h1, h2) = coupling_components(o1, o2);
    let comm = |h: &Matrix9| h.adjoint() * h - h * h.adjoint();
    let mut out = comm(&h1) / C64::from(d1) + comm(&h2) / C64::from(d2);
    out[(SRR, SRR)] += C64::from(params.q);
    Ok(out)
}

/// Expanded form of [`effective_from_commutators`] for amplitudes `o1`, `o2`.
pub fn effective_closed_form(o1: f64, o2: f64, d1: f64, d2: f64, q: f64) -> Matrix9 {
    let (a, b) = (o1 * o1, o2 * o2);
    let mut m = SMatrix::<f64, 9, 9>::zeros();
    m[(S00, S00)] = 2.0 * a / d1;
    m[(S11, S11)] = 2.0 * b / d2;
    m[(S01, S01)] = a / d1 + b / d2;
    m[(S10, S10)] = a / d1 + b / d2;
    m[(SRR, SRR)] = 2.0 * b / d1 + 2.0 * a / d2 + q;
    let oe = o1 * o2 * (1.0 / d1 + 1.0 / d2);
    for s in [S01, S10] {
        m[(SRR, s)] = oe;
        m[(s, SRR)] = oe;
    }
    m[(S0R, S0R)] = -(a / d1 + (a + b) / d2);
    m[(SR0, SR0)] = m[(S0R, S0R)];
    m[(SR1, SR1)] = -(b / d2 + (a + b) / d1);
    m[(S1R, S1R)] = m[(SR1, SR1)];
    m[(S0R, SR0)] = -a * (1.0 / d1 + 1.0 / d2);
    m[(SR0, S0R)] = m[(S0R, SR0)];
    m[(S1R, SR1)] = -b * (1.0 / d1 + 1.0 / d2);
    m[(SR1, S1R)] = m[(S1R, SR1)];
    m.map(C64::from)
}

/// Populations from effective Schrödinger evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveTrajectory {
    pub times: Vec<f64>,
    pub p00: Vec<f64>,
    pub p01: Vec<f64>,
    pub p10: Vec<f64>,
    pub p11: Vec<f64>,
    pub prr: Vec<f64>,
    /// Largest deviation of the state norm from one.
    pub max_norm_error: f64,
}

impl EffectiveTrajectory {
    pub fn time_in_rr(&self) -> f64 {
        let h = if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        };
        simpson(&self.prr, h)
    }
}

/// Evolve computational basis state `input` (two-atom index) under the
/// effective model on a uniform grid of `steps` intervals.
pub fn simulate_effective(
    input: usize,
    params: &GateParameters,
    steps: usize,
) -> Result<EffectiveTrajectory> {
    if !COMPUTATIONAL.contains(&input) {
        return Err(Error::domain(format!(
            "effective model input must be a computational state, got {input}"
        )));
    }
    params.validate()?;
    check_detunings(params)?;
    let steps = steps.max(1);
    let dt = params.t_gate / steps as f64;
    let times: Vec<f64> = (0..=steps)
        .map(|k| params.t_gate * k as f64 / steps as f64)
        .collect();
    let n = steps + 1;
    let mut traj = EffectiveTrajectory {
        times,
        p00: vec![0.0; n],
        p01: vec![0.0; n],
        p10: vec![0.0; n],
        p11: vec![0.0; n],
        prr: vec![0.0; n],
        max_norm_error: 0.0,
    };

    let (s01, s10) = (
        basis_index(Level::Zero, Level::One),
        basis_index(Level::One, Level::Zero),
    );
    if input != s01 && input != s10 {
        // |00⟩ and |11⟩ only acquire a phase.
        let p = if input == 0 {
            &mut traj.p00
        } else {
            &mut traj.p11
        };
        p.iter_mut().for_each(|v| *v = 1.0);
        return Ok(traj);
    }

    let mut psi = SVector::<C64, 3>::zeros();
    psi[if input == s01 { 0 } else { 1 }] = C64::from(1.0);
    let minus_i = C64::new(0.0, -1.0);
    let mut failure = None;
    for k in 0..=steps {
        traj.p01[k] = psi[0].norm_sqr();
        traj.p10[k] = psi[1].norm_sqr();
        traj.prr[k] = psi[2].norm_sqr();
        traj.max_norm_error = traj.max_norm_error.max((psi.norm_squared() - 1.0).abs());
        if k == steps {
            break;
        }
        let t = traj.times[k];
        psi = rk4_step(&psi, t, dt, |ts, y| {
            match build_effective_h01(ts.min(params.t_gate), params) {
                Ok(h) => h * y * minus_i,
                Err(e) => {
                    failure = Some(e);
                    SVector::zeros()
                }
            }
        });
        if let Some(e) = failure.take() {
            return Err(e);
        }
    }
    Ok(traj)
}
