//! Run configuration as read from TOML.
//!
//! Frequencies are written as value/2π in MHz, times in μs, lengths in μm and
//! temperatures in μK. Everything is converted to the crate's internal units
//! in the `to_*` methods and nowhere else.

use std::collections::BTreeMap;
use std::path::Path;

use antiblockade::noise::{BeamNoise, DopplerNoise, IntensityNoise, InteractionNoise, PhaseNoise};
use antiblockade::optimizer::{Bound, PulseFamily};
use antiblockade::units::{mhz, to_mhz};
use antiblockade::{
    BranchingRatios, BudgetSources, FidelityMode, GaOptions, GateParameters, InputSuperposition,
    NoiseSpec, PulseShape, SearchSpace, C64, DEFAULT_STEPS,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn default_v0() -> f64 {
    antiblockade::presets::V0_MHZ
}

/// γ/2π in MHz for a 400 μs Rydberg lifetime.
fn default_gamma() -> f64 {
    1.0 / 400.0
}

fn default_samples() -> usize {
    300
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_true() -> bool {
    true
}

fn default_t_gate() -> f64 {
    1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides every block-level seed when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            CliError::Parse {
                file: None,
                line,
                col,
                message: e.message().trim().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config always serialises")
    }

    /// Seed resolution: command line, then the top-level `seed`, then the
    /// block's own value.
    pub fn resolve_seed(&self, cli: Option<u64>, block: u64) -> u64 {
        cli.or(self.seed).unwrap_or(block)
    }

    pub fn require_gate(&self) -> Result<&GateConfig, CliError> {
        self.gate
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [gate] section".into()))
    }
}

/// 1-based line and column of byte offset `pos`.
fn line_col(text: &str, pos: usize) -> (usize, usize) {
    let before = &text[..pos.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseConfig {
    Triangle { omega_max: f64 },
    Gaussian { omega_max: f64, width: f64 },
    Composite { c0: f64, c1: f64, c2: f64 },
}

impl PulseConfig {
    pub fn to_shape(self) -> PulseShape {
        match self {
            PulseConfig::Triangle { omega_max } => PulseShape::Triangle {
                omega_max: mhz(omega_max),
            },
            PulseConfig::Gaussian { omega_max, width } => PulseShape::Gaussian {
                omega_max: mhz(omega_max),
                width,
            },
            PulseConfig::Composite { c0, c1, c2 } => PulseShape::Composite {
                c0: mhz(c0),
                c1: mhz(c1),
                c2: mhz(c2),
            },
        }
    }

    pub fn from_shape(shape: &PulseShape) -> Self {
        match *shape {
            PulseShape::Triangle { omega_max } => PulseConfig::Triangle {
                omega_max: to_mhz(omega_max),
            },
            PulseShape::Gaussian { omega_max, width } => PulseConfig::Gaussian {
                omega_max: to_mhz(omega_max),
                width,
            },
            PulseShape::Composite { c0, c1, c2 } => PulseConfig::Composite {
                c0: to_mhz(c0),
                c1: to_mhz(c1),
                c2: to_mhz(c2),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingConfig {
    pub eta_r0: f64,
    pub eta_r1: f64,
    pub eta_alpha: f64,
}

impl Default for BranchingConfig {
    fn default() -> Self {
        let b = BranchingRatios::qubit_only();
        Self {
            eta_r0: b.eta_r0,
            eta_r1: b.eta_r1,
            eta_alpha: b.eta_alpha,
        }
    }
}

impl BranchingConfig {
    pub fn to_ratios(self) -> Result<BranchingRatios, CliError> {
        BranchingRatios::new(self.eta_r0, self.eta_r1, self.eta_alpha)
            .map_err(|e| CliError::invalid("branching", e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    pub delta1: f64,
    pub q: f64,
    #[serde(default = "default_v0")]
    pub v0: f64,
    pub t_gate: f64,
    /// Rydberg decay rate γ/2π in MHz.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub pulse1: PulseConfig,
    pub pulse2: PulseConfig,
    #[serde(default)]
    pub branching: BranchingConfig,
}

impl GateConfig {
    pub fn to_params(&self) -> Result<GateParameters, CliError> {
        let p = GateParameters {
            pulse1: self.pulse1.to_shape(),
            pulse2: self.pulse2.to_shape(),
            delta1: mhz(self.delta1),
            q: mhz(self.q),
            v0: mhz(self.v0),
            t_gate: self.t_gate,
            gamma: mhz(self.gamma),
            branching: self.branching.to_ratios()?,
        };
        p.validate().map_err(|e| CliError::invalid("gate", e))?;
        Ok(p)
    }

    pub fn from_params(p: &GateParameters) -> Self {
        Self {
            delta1: to_mhz(p.delta1),
            q: to_mhz(p.q),
            v0: to_mhz(p.v0),
            t_gate: p.t_gate,
            gamma: to_mhz(p.gamma),
            pulse1: PulseConfig::from_shape(&p.pulse1),
            pulse2: PulseConfig::from_shape(&p.pulse2),
            branching: BranchingConfig {
                eta_r0: p.branching.eta_r0,
                eta_r1: p.branching.eta_r1,
                eta_alpha: p.branching.eta_alpha,
            },
        }
    }
}

/// Interatomic-distance channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionConfig {
    Uniform {
        dv_over_v: f64,
    },
    /// Temperature in μK, trap frequency ω/2π in MHz.
    GaussianPosition {
        temperature: f64,
        trap_freq: f64,
    },
}

impl InteractionConfig {
    fn to_noise(self) -> InteractionNoise {
        match self {
            InteractionConfig::Uniform { dv_over_v } => InteractionNoise::Uniform { dv_over_v },
            InteractionConfig::GaussianPosition {
                temperature,
                trap_freq,
            } => InteractionNoise::GaussianPosition {
                temperature: temperature * 1e-6,
                trap_freq: mhz(trap_freq),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DopplerConfig {
    /// μK.
    pub temperature: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityConfig {
    pub delta_omega: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub additive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    /// Largest dephasing rate γ₀/2π in MHz.
    pub gamma0_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    /// Beam waist and transverse position spread, μm.
    pub waist: f64,
    pub sigma: f64,
}

/// The five technical channels, each optional.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Channels {
    pub interaction: Option<InteractionConfig>,
    pub doppler: Option<DopplerConfig>,
    pub intensity: Option<IntensityConfig>,
    pub phase: Option<PhaseConfig>,
    pub beam: Option<BeamConfig>,
}

impl Channels {
    pub fn to_spec(&self, samples: usize, seed: u64) -> Result<NoiseSpec, CliError> {
        let spec = NoiseSpec {
            interaction: self
                .interaction
                .map_or(InteractionNoise::None, |c| c.to_noise()),
            doppler: self
                .doppler
                .map_or(DopplerNoise::None, |c| DopplerNoise::On {
                    temperature: c.temperature * 1e-6,
                }),
            intensity: self
                .intensity
                .map_or(IntensityNoise::None, |c| IntensityNoise::Uniform {
                    delta_omega: c.delta_omega,
                    additive: c.additive,
                }),
            phase: self
                .phase
                .map_or(PhaseNoise::None, |c| PhaseNoise::Uniform {
                    gamma0_max: mhz(c.gamma0_max),
                }),
            beam: self.beam.map_or(BeamNoise::None, |c| BeamNoise::On {
                waist: c.waist,
                sigma: c.sigma,
            }),
            samples,
            seed,
        };
        spec.validate().map_err(|e| CliError::invalid("noise", e))?;
        Ok(spec)
    }
}

/// Monte Carlo noise applied on top of a `simulate` run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<InteractionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler: Option<DopplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<IntensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<BeamConfig>,
}

impl NoiseConfig {
    pub fn channels(&self) -> Channels {
        Channels {
            interaction: self.interaction,
            doppler: self.doppler,
            intensity: self.intensity,
            phase: self.phase,
            beam: self.beam,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionConfig {
    /// Amplitudes of |00⟩, |01⟩, |10⟩, |11⟩.
    pub re: [f64; 4],
    #[serde(default)]
    pub im: [f64; 4],
}

impl SuperpositionConfig {
    pub fn to_input(&self) -> Result<InputSuperposition, CliError> {
        let a: Vec<C64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        InputSuperposition::new(a[0], a[1], a[2], a[3])
            .map_err(|e| CliError::invalid("simulate.superposition", e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub mode: FidelityMode,
    /// Compare |01⟩ and |10⟩ against the effective three-level model.
    #[serde(default = "default_true")]
    pub effective: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superposition: Option<SuperpositionConfig>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            mode: FidelityMode::Uhlmann,
            effective: true,
            superposition: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub mode: FidelityMode,
    /// Also sample every source at once.
    #[serde(default, skip_serializing_if = "is_false")]
    pub joint: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<InteractionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler: Option<DopplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<IntensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<BeamConfig>,
}

impl BudgetConfig {
    pub fn to_sources(&self, seed: u64) -> Result<BudgetSources, CliError> {
        let one = |c: Channels| c.to_spec(self.samples, seed).map(Some);
        let none = Channels::default();
        let mut s = BudgetSources {
            joint: self.joint,
            ..Default::default()
        };
        if let Some(c) = self.position {
            s.position = one(Channels {
                interaction: Some(c),
                ..none
            })?;
        }
        if let Some(c) = self.doppler {
            s.doppler = one(Channels {
                doppler: Some(c),
                ..none
            })?;
        }
        if let Some(c) = self.intensity {
            s.intensity = one(Channels {
                intensity: Some(c),
                ..none
            })?;
        }
        if let Some(c) = self.phase {
            s.phase = one(Channels {
                phase: Some(c),
                ..none
            })?;
        }
        if let Some(c) = self.beam {
            s.beam = one(Channels {
                beam: Some(c),
                ..none
            })?;
        }
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Uniform relative interaction spread.
    DvOverV,
    /// Atomic temperature in μK, driving the channel named by `channel`.
    Temperature,
    /// Relative intensity spread.
    DeltaOmega,
    /// Largest dephasing rate γ₀/2π in MHz.
    Gamma0,
    /// Beam waist in μm.
    Waist,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureChannel {
    #[default]
    Position,
    Doppler,
}

fn default_trap_freq() -> f64 {
    0.147
}

fn default_sigma() -> f64 {
    antiblockade::presets::SIGMA_R_20UK
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub name: String,
    pub gate: GateConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub mode: FidelityMode,
    /// Channel driven by the temperature axis.
    #[serde(default)]
    pub channel: TemperatureChannel,
    /// Trap frequency ω/2π (MHz) for the position channel.
    #[serde(default = "default_trap_freq")]
    pub trap_freq: f64,
    /// Transverse position spread (μm) for the waist axis.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(rename = "curve")]
    pub curves: Vec<CurveConfig>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid.is_empty() {
            return Err(CliError::Config("sweep.grid must not be empty".into()));
        }
        if self.curves.is_empty() {
            return Err(CliError::Config(
                "sweep needs at least one [[sweep.curve]]".into(),
            ));
        }
        let mut names: Vec<&str> = self.curves.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("sweep curve names must be unique".into()));
        }
        let safe = |n: &str| {
            !n.is_empty()
                && n.chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        };
        if let Some(bad) = self.curves.iter().find(|c| !safe(&c.name)) {
            return Err(CliError::Config(format!(
                "sweep curve name `{}` may only contain letters, digits, `_` and `-`",
                bad.name
            )));
        }
        Ok(())
    }

    /// Noise channels at grid value `x`.
    pub fn channels_at(&self, x: f64) -> Channels {
        let none = Channels::default();
        match self.axis {
            SweepAxis::DvOverV => Channels {
                interaction: Some(InteractionConfig::Uniform { dv_over_v: x }),
                ..none
            },
            SweepAxis::Temperature => match self.channel {
                TemperatureChannel::Position => Channels {
                    interaction: Some(InteractionConfig::GaussianPosition {
                        temperature: x,
                        trap_freq: self.trap_freq,
                    }),
                    ..none
                },
                TemperatureChannel::Doppler => Channels {
                    doppler: Some(DopplerConfig { temperature: x }),
                    ..none
                },
            },
            SweepAxis::DeltaOmega => Channels {
                intensity: Some(IntensityConfig {
                    delta_omega: x,
                    additive: false,
                }),
                ..none
            },
            SweepAxis::Gamma0 => Channels {
                phase: Some(PhaseConfig { gamma0_max: x }),
                ..none
            },
            SweepAxis::Waist => Channels {
                beam: Some(BeamConfig {
                    waist: x,
                    sigma: self.sigma,
                }),
                ..none
            },
        }
    }
}

/// GA settings; every field falls back to the library default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism: usize,
    pub seed: u64,
    pub stagnation_limit: usize,
    pub rescale_rate: f64,
    pub search_steps: usize,
    pub final_steps: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        let o = GaOptions::default();
        Self {
            population: o.population,
            generations: o.generations,
            crossover_rate: o.crossover_rate,
            mutation_rate: o.mutation_rate,
            elitism: o.elitism,
            seed: o.seed,
            stagnation_limit: o.stagnation_limit,
            rescale_rate: o.rescale_rate,
            search_steps: o.search_steps,
            final_steps: o.final_steps,
        }
    }
}

impl GaConfig {
    pub fn to_options(&self, seed: u64) -> Result<GaOptions, CliError> {
        let o = GaOptions {
            population: self.population,
            generations: self.generations,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            elitism: self.elitism,
            seed,
            stagnation_limit: self.stagnation_limit,
            rescale_rate: self.rescale_rate,
            search_steps: self.search_steps,
            final_steps: self.final_steps,
        };
        o.validate()
            .map_err(|e| CliError::invalid("optimize.ga", e))?;
        Ok(o)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub family: PulseFamily,
    #[serde(default, skip_serializing_if = "is_false")]
    pub optimize_t_gate: bool,
    #[serde(default = "default_t_gate")]
    pub t_gate: f64,
    /// Largest admissible Rabi frequency /2π, MHz.
    pub rabi_cap: f64,
    #[serde(default = "default_v0")]
    pub v0: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Ranking penalty per μs of gate time when `optimize_t_gate` is set.
    #[serde(default)]
    pub duration_weight: f64,
    #[serde(default)]
    pub fitness_floor: f64,
    /// `[lo, hi]` per gene: MHz for amplitudes and detunings, μs for widths
    /// and `t_gate`.
    pub bounds: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub branching: BranchingConfig,
    #[serde(default)]
    pub ga: GaConfig,
}

/// Genes measured in μs rather than MHz.
fn is_time_gene(name: &str) -> bool {
    name.starts_with("width") || name == "t_gate"
}

impl OptimizeConfig {
    pub fn to_space(&self) -> Result<SearchSpace, CliError> {
        let bounds = self
            .bounds
            .iter()
            .map(|(k, &[lo, hi])| {
                let s = if is_time_gene(k) { 1.0 } else { mhz(1.0) };
                (k.clone(), Bound::new(lo * s, hi * s))
            })
            .collect();
        let space = SearchSpace {
            family: self.family,
            bounds,
            optimize_t_gate: self.optimize_t_gate,
            t_gate: self.t_gate,
            rabi_cap: mhz(self.rabi_cap),
            v0: mhz(self.v0),
            gamma: mhz(self.gamma),
            branching: self.branching.to_ratios()?,
            duration_weight: self.duration_weight,
            fitness_floor: self.fitness_floor,
        };
        space
            .validate()
            .map_err(|e| CliError::invalid("optimize", e))?;
        Ok(space)
    }
}
