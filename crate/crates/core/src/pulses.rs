//! Pulse families and the scalar quantities of the effective swapping model.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GateParameters;
use crate::quad::simpson;

/// Rabi-frequency envelope over `[0, T_g]`. Amplitudes in rad/μs, widths in μs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PulseShape {
    /// Isosceles triangle: zero at both ends, `omega_max` at `T_g/2`.
    Triangle { omega_max: f64 },
    /// Gaussian centred at `T_g/2`, shifted and rescaled so it vanishes at
    /// both ends and peaks at `omega_max`.
    Gaussian { omega_max: f64, width: f64 },
    /// `c0 + c1 cos(2πt/T_g) + c2 sin(πt/T_g)`. May change sign.
    Composite { c0: f64, c1: f64, c2: f64 },
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseShape::Triangle { omega_max } if !(omega_max >= 0.0 && omega_max.is_finite()) => {
                Err(Error::invalid(
                    "triangle amplitude must be finite and non-negative",
                ))
            }
            PulseShape::Gaussian { omega_max, width } => {
                if !(omega_max >= 0.0 && omega_max.is_finite()) {
                    Err(Error::invalid(
                        "gaussian amplitude must be finite and non-negative",
                    ))
                } else if !(width > 0.0 && width.is_finite()) {
                    Err(Error::invalid("gaussian width must be positive"))
                } else {
                    Ok(())
                }
            }
            PulseShape::Composite { c0, c1, c2 } if ![c0, c1, c2].iter().all(|c| c.is_finite()) => {
                Err(Error::invalid("composite coefficients must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Envelope value at `t` without range checks.
    #[inline]
    pub fn value(&self, t: f64, t_gate: f64) -> f64 {
        match *self {
            PulseShape::Triangle { omega_max } => {
                let x = (2.0 * t / t_gate - 1.0).abs();
                omega_max * (1.0 - x).max(0.0)
            }
            PulseShape::Gaussian { omega_max, width } => {
                let half = 0.5 * t_gate;
                let inv = 1.0 / (2.0 * width * width);
                let floor = (-half * half * inv).exp();
                let g = (-(t - half).powi(2) * inv).exp();
                omega_max * (g - floor) / (1.0 - floor)
            }
            PulseShape::Composite { c0, c1, c2 } => {
                c0 + c1 * (TAU * t / t_gate).cos() + c2 * (PI * t / t_gate).sin()
            }
        }
    }

    /// Largest |Ω(t)| over the gate. Exact for triangle and Gaussian, sampled
    /// on 2001 points for composite pulses.
    pub fn peak(&self, t_gate: f64) -> f64 {
        match *self {
            PulseShape::Triangle { omega_max } | PulseShape::Gaussian { omega_max, .. } => {
                omega_max
            }
            PulseShape::Composite { .. } => (0..=2000)
                .map(|k| self.value(t_gate * k as f64 / 2000.0, t_gate).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Multiply the amplitude (all coefficients for composite pulses).
    pub fn scaled(&self, k: f64) -> Self {
        match *self {
            PulseShape::Triangle { omega_max } => PulseShape::Triangle {
                omega_max: k * omega_max,
            },
            PulseShape::Gaussian { omega_max, width } => PulseShape::Gaussian {
                omega_max: k * omega_max,
                width,
            },
            PulseShape::Composite { c0, c1, c2 } => PulseShape::Composite {
                c0: k * c0,
                c1: k * c1,
                c2: k * c2,
            },
        }
    }
}

/// Rabi frequency of `shape` at time `t` of a gate of length `t_gate`.
pub fn rabi(shape: &PulseShape, t: f64, t_gate: f64) -> Result<f64> {
    let slack = 1e-9 * t_gate;
    if t.is_nan() || t < -slack || t > t_gate + slack {
        return Err(Error::domain(format!("time {t} outside [0, {t_gate}]")));
    }
    Ok(shape.value(t.clamp(0.0, t_gate), t_gate))
}

/// Effective coupling, ground-state Stark shift and `|rr⟩` detuning of the
/// reduced three-level model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveQuantities {
    pub omega_e: f64,
    pub omega_c: f64,
    pub delta: f64,
}

pub fn effective_quantities(
    omega1: f64,
    omega2: f64,
    delta1: f64,
    delta2: f64,
    q: f64,
) -> Result<EffectiveQuantities> {
    if delta1 == 0.0 || delta2 == 0.0 {
        return Err(Error::domain("effective model requires non-zero detunings"));
    }
    let (o1s, o2s) = (omega1 * omega1, omega2 * omega2);
    Ok(EffectiveQuantities {
        omega_e: omega1 * omega2 * (1.0 / delta1 + 1.0 / delta2),
        omega_c: o1s / delta1 + o2s / delta2,
        delta: 2.0 * o2s / delta1 + 2.0 * o1s / delta2 + q,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseArea {
    /// ∫ 2Ω_e²/δ dt; non-finite when δ vanishes on the grid.
    pub area: f64,
    /// Smallest |δ(t)| on the grid.
    pub min_abs_delta: f64,
}

impl PulseArea {
    /// Threshold on |δ| below which the adiabatic-elimination estimate is
    /// reported as invalid.
    pub const DELTA_FLOOR: f64 = 1e-3;

    pub fn is_valid(&self) -> bool {
        self.area.is_finite() && self.min_abs_delta >= Self::DELTA_FLOOR
    }
}

/// Effective pulse area `∫₀^{T_g} 2Ω_e(t)²/δ(t) dt` by composite Simpson on a
/// uniform grid with `steps` intervals.
pub fn effective_pulse_area(params: &GateParameters, steps: usize) -> Result<PulseArea> {
    let steps = steps.max(2);
    let d2 = params.delta2();
    let h = params.t_gate / steps as f64;
    let mut min_abs_delta = f64::INFINITY;
    let mut integrand = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * h;
        let o1 = params.pulse1.value(t, params.t_gate);
        let o2 = params.pulse2.value(t, params.t_gate);
        let eq = effective_quantities(o1, o2, params.delta1, d2, params.q)?;
        min_abs_delta = min_abs_delta.min(eq.delta.abs());
        let num = 2.0 * eq.omega_e * eq.omega_e;
        integrand.push(if num == 0.0 { 0.0 } else { num / eq.delta });
    }
    Ok(PulseArea {
        area: simpson(&integrand, h),
        min_abs_delta,
    })
}
