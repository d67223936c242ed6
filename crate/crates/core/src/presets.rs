//! Reference parameter sets: the optimised pulses at T_g = 1 μs for the three
//! pulse families, the two duration-optimised Gaussian gates, and the default
//! noise specifications of the error budget.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::fidelity::InputSuperposition;
use crate::model::{BranchingRatios, GateParameters, PhysicalConstants};
use crate::noise::{
    BeamNoise, DopplerNoise, IntensityNoise, InteractionNoise, NoiseSpec, PhaseNoise,
};
use crate::pulses::PulseShape;
use crate::units::mhz;

/// Nominal interaction V/2π in MHz at r₀ ≈ 4.8 μm.
pub const V0_MHZ: f64 = 70.49;

/// Thermal position spread at 20 μK in a 147 kHz trap, μm.
pub const SIGMA_R_20UK: f64 = 0.04734;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Triangle,
    Gaussian,
    Composite,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Triangle, Case::Gaussian, Case::Composite];
}

fn base(pulse1: PulseShape, pulse2: PulseShape, delta1_mhz: f64, q_mhz: f64) -> GateParameters {
    GateParameters {
        pulse1,
        pulse2,
        delta1: mhz(delta1_mhz),
        q: mhz(q_mhz),
        v0: mhz(V0_MHZ),
        t_gate: 1.0,
        gamma: PhysicalConstants::default().gamma(),
        branching: BranchingRatios::qubit_only(),
    }
}

/// Optimised 1 μs gate for `case`, with `modified = true` selecting the q ≠ 0
/// (modified antiblockade) row and `false` the q = 0 row.
pub fn optimised_gate(case: Case, modified: bool) -> GateParameters {
    let tri = |o: f64| PulseShape::Triangle { omega_max: mhz(o) };
    let gau = |o: f64, w: f64| PulseShape::Gaussian {
        omega_max: mhz(o),
        width: w,
    };
    let com = |a: f64, b: f64, c: f64| PulseShape::Composite {
        c0: mhz(a),
        c1: mhz(b),
        c2: mhz(c),
    };
    match (case, modified) {
        (Case::Triangle, false) => base(tri(3.769), tri(10.441), 26.642, 0.0),
        (Case::Triangle, true) => base(tri(5.513), tri(10.947), 23.090, 4.668),
        (Case::Gaussian, false) => base(gau(3.595, 0.279), gau(9.219, 0.189), 23.924, 0.0),
        (Case::Gaussian, true) => base(gau(5.114, 0.257), gau(8.948, 0.351), 22.110, 5.037),
        (Case::Composite, false) => base(
            com(1.033, -1.167, 1.334),
            com(3.100, -2.662, 2.617),
            25.194,
            0.0,
        ),
        (Case::Composite, true) => base(
            com(1.774, -1.884, 2.036),
            com(2.558, -2.624, 2.608),
            22.532,
            5.090,
        ),
    }
}

/// Reference perfect-case fidelity for the matching [`optimised_gate`] row.
pub fn optimised_gate_fidelity(case: Case, modified: bool) -> f64 {
    match (case, modified) {
        (Case::Triangle, false) => 0.9992,
        (Case::Triangle, true) => 0.9996,
        (Case::Gaussian, false) => 0.9993,
        (Case::Gaussian, true) => 0.9997,
        (Case::Composite, false) => 0.9992,
        (Case::Composite, true) => 0.9997,
    }
}

/// Duration-optimised Gaussian gate under a 2π·10 MHz Rabi cap
/// (T_g = 0.8894 μs, leaky branching).
pub fn fast_gate_10mhz() -> GateParameters {
    GateParameters {
        pulse1: PulseShape::Gaussian {
            omega_max: mhz(4.969),
            width: 0.4948,
        },
        pulse2: PulseShape::Gaussian {
            omega_max: mhz(9.728),
            width: 0.5318,
        },
        delta1: mhz(22.951),
        q: mhz(6.051),
        t_gate: 0.8894,
        branching: BranchingRatios::leaky(),
        ..optimised_gate(Case::Gaussian, true)
    }
}

/// Duration-optimised Gaussian gate under a 2π·50 MHz Rabi cap
/// (T_g = 0.1177 μs, leaky branching).
pub fn fast_gate_50mhz() -> GateParameters {
    GateParameters {
        pulse1: PulseShape::Gaussian {
            omega_max: mhz(37.413),
            width: 0.0586,
        },
        pulse2: PulseShape::Gaussian {
            omega_max: mhz(48.404),
            width: 1.6082,
        },
        delta1: mhz(-94.133),
        q: mhz(33.429),
        t_gate: 0.1177,
        branching: BranchingRatios::leaky(),
        ..optimised_gate(Case::Gaussian, true)
    }
}

/// `(1/√10)|00⟩ + √(7/10)|01⟩ + √(7/40)|10⟩ + (1/√40)|11⟩`.
pub fn arbitrary_input() -> InputSuperposition {
    InputSuperposition::real(
        (0.1f64).sqrt(),
        (0.7f64).sqrt(),
        (7.0f64 / 40.0).sqrt(),
        (1.0f64 / 40.0).sqrt(),
    )
    .expect("normalised by construction")
}

/// Default noise specifications of the error budget, one active channel each.
pub mod noise {
    use super::*;

    pub const TEMPERATURE: f64 = 20e-6;

    /// Trap frequency ω/2π = 147 kHz, as rad/μs.
    pub fn trap_freq() -> f64 {
        TAU * 0.147
    }

    fn single(samples: usize, seed: u64) -> NoiseSpec {
        NoiseSpec {
            samples,
            seed,
            ..NoiseSpec::none()
        }
    }

    pub fn position(samples: usize, seed: u64) -> NoiseSpec {
        NoiseSpec {
            interaction: InteractionNoise::GaussianPosition {
                temperature: TEMPERATURE,
                trap_freq: trap_freq(),
            },
            ..single(samples, seed)
        }
    }

    pub fn uniform_interaction(dv_over_v: f64, samples: usize, seed: u64) -> NoiseSpec {
        NoiseSpec {
            interaction: InteractionNoise::Uniform { dv_over_v },
            ..single(samples, seed)
        }
    }

    pub fn doppler(samples: usize, seed: u64) -> NoiseSpec {
        NoiseSpec {
            doppler: DopplerNoise::On {
                temperature: TEMPERATURE,
            },
            ..single(samples, seed)
        }
    }

    pub fn intensity(samples: usize, seed: u64) -> NoiseSpec {
        NoiseSpec {
            intensity: IntensityNoise::Uniform {
                delta_omega: 0.05,
                additive: false,
            },
            ..single(samples, seed)
        }
    }

    pub fn phase(samples: usize, seed: u64) -> NoiseSpec {
        NoiseSpec {
            phase: PhaseNoise::Uniform {
                gamma0_max: mhz(0.1),
            },
            ..single(samples, seed)
        }
    }

    pub fn beam(samples: usize, seed: u64) -> NoiseSpec {
        NoiseSpec {
            beam: BeamNoise::On {
                waist: 2.0,
                sigma: SIGMA_R_20UK,
            },
            ..single(samples, seed)
        }
    }
}
