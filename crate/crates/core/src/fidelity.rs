//! SWAP gate and state-transfer fidelities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::evolve_final;
use crate::model::{GateParameters, Ket16, QuantumState, COMPUTATIONAL};
use crate::noise::NoiseRealization;
use crate::C64;

/// Normalised two-qubit input `a00|00⟩ + a01|01⟩ + a10|10⟩ + a11|11⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSuperposition {
    pub a00: C64,
    pub a01: C64,
    pub a10: C64,
    pub a11: C64,
}

impl InputSuperposition {
    pub fn new(a00: C64, a01: C64, a10: C64, a11: C64) -> Result<Self> {
        let s = Self { a00, a01, a10, a11 };
        s.validate()?;
        Ok(s)
    }

    pub fn real(a00: f64, a01: f64, a10: f64, a11: f64) -> Result<Self> {
        Self::new(a00.into(), a01.into(), a10.into(), a11.into())
    }

    pub fn validate(&self) -> Result<()> {
        let norm: f64 = self.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "input superposition has norm² {norm}, expected 1"
            )));
        }
        Ok(())
    }

    /// Amplitudes in the order `00, 01, 10, 11`.
    pub fn amplitudes(&self) -> [C64; 4] {
        [self.a00, self.a01, self.a10, self.a11]
    }

    pub fn ket(&self) -> Ket16 {
        let mut k = Ket16::zeros();
        for (a, &i) in self.amplitudes().iter().zip(&COMPUTATIONAL) {
            k[i] = *a;
        }
        k
    }
}

/// SWAP image of `input`: `a01 ↔ a10`, no phases applied.
pub fn ideal_swap_target(input: &InputSuperposition) -> InputSuperposition {
    InputSuperposition {
        a01: input.a10,
        a10: input.a01,
        ..*input
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMode {
    /// `√⟨ψ|ρ|ψ⟩`.
    #[default]
    Uhlmann,
    /// `⟨ψ|ρ|ψ⟩`.
    Overlap,
}

impl FidelityMode {
    fn apply(self, overlap: f64) -> f64 {
        let o = overlap.clamp(0.0, 1.0);
        match self {
            FidelityMode::Uhlmann => o.sqrt(),
            FidelityMode::Overlap => o,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateFidelity {
    pub value: f64,
    /// Per-input fidelities for `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub per_input: [f64; 4],
}

/// Mean over the four computational inputs of the fidelity between the
/// evolved state and its SWAP image.
pub fn average_gate_fidelity(
    params: &GateParameters,
    realization: &NoiseRealization,
    mode: FidelityMode,
    steps: usize,
) -> Result<GateFidelity> {
    // |01⟩ and |10⟩ (and their targets) are exchanged by relabelling the
    // atoms, which leaves a symmetric realisation invariant.
    let symmetric = realization.is_atom_symmetric();
    let mut per_input = [0.0; 4];
    for (k, &input) in COMPUTATIONAL.iter().enumerate() {
        if k == 2 && symmetric {
            per_input[2] = per_input[1];
            continue;
        }
        let target = COMPUTATIONAL[[0, 2, 1, 3][k]];
        let (rho, _) = evolve_final(&QuantumState::basis(input), params, realization, steps)?;
        per_input[k] = mode.apply(rho.population(target));
    }
    Ok(GateFidelity {
        value: per_input.iter().sum::<f64>() / 4.0,
        per_input,
    })
}

/// Uhlmann fidelity between the evolved `input` and its ideal SWAP image.
pub fn state_swap_fidelity(
    input: &InputSuperposition,
    params: &GateParameters,
    realization: &NoiseRealization,
    steps: usize,
) -> Result<f64> {
    input.validate()?;
    let initial = QuantumState::pure(&input.ket())?;
    let (rho, _) = evolve_final(&initial, params, realization, steps)?;
    let target = ideal_swap_target(input).ket();
    Ok(FidelityMode::Uhlmann.apply(rho.expectation(&target)))
}
