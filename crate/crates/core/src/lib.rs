//! Simulation and pulse optimisation for two-atom Rydberg antiblockade SWAP
//! gates.
//!
//! The crate integrates the two-atom Lindblad master equation over the basis
//! `{0, 1, r, α} ⊗ {0, 1, r, α}` under parameterised laser pulses, evaluates
//! SWAP fidelities, runs Monte Carlo error budgets over six noise channels and
//! searches pulse parameters with a real-coded genetic algorithm.
//!
//! Frequencies are angular (rad/μs) everywhere inside the crate, times are in
//! μs and lengths in μm. Conversion from the MHz (value/2π) convention used in
//! configuration files happens at the boundary via [`units`].

pub mod effective;
pub mod error;
pub mod fidelity;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod optimizer;
pub mod presets;
pub mod pulses;
pub mod quad;
pub mod units;

pub use error::{Error, Result};
pub use fidelity::{
    average_gate_fidelity, ideal_swap_target, state_swap_fidelity, FidelityMode, GateFidelity,
    InputSuperposition,
};
pub use integrator::{evolve, evolve_phase_frame, time_in_state, Diagnostics, Trajectory};
pub use model::{
    BranchingRatios, GateParameters, Level, Operator, PhysicalConstants, QuantumState, DIM,
};
pub use noise::{
    error_budget, monte_carlo_fidelity, sample_noise, BudgetSources, ErrorBudget, McOptions,
    McStats, NoiseRealization, NoiseSpec,
};
pub use optimizer::{ga_optimize, GaOptions, OptResult, SearchSpace};
pub use pulses::{
    effective_pulse_area, effective_quantities, rabi, EffectiveQuantities, PulseShape,
};

pub use num_complex::Complex64 as C64;

/// Default number of fixed RK4 steps over one gate.
pub const DEFAULT_STEPS: usize = 4000;
