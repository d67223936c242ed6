//! Stochastic noise channels, Monte Carlo fidelity estimation and the error
//! budget.
//!
//! Each Monte Carlo sample owns a ChaCha8 stream selected by its sample index,
//! so results are bitwise reproducible for a given seed no matter how many
//! worker threads evaluate the samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{average_gate_fidelity, FidelityMode};
use crate::model::{interaction_strength, GateParameters, PhysicalConstants};
use crate::DEFAULT_STEPS;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionNoise {
    #[default]
    None,
    /// `V → V₀(1+u)`, `u ~ U[−dv_over_v, dv_over_v]`.
    Uniform { dv_over_v: f64 },
    /// Distance `r ~ N(r₀, σ_r)` with `σ_r = √(k_B T / m ω²)`; temperature in
    /// K, trap frequency in rad/μs.
    GaussianPosition { temperature: f64, trap_freq: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DopplerNoise {
    #[default]
    None,
    /// Frozen thermal velocity at `temperature` (K).
    On { temperature: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityNoise {
    #[default]
    None,
    /// Relative amplitude error `ε ~ U[−δ_Ω, δ_Ω]`. Multiplicative
    /// (`Ω(t) → (1+ε)Ω(t)`) unless `additive`, in which case each laser gets a
    /// constant offset `ε·Ω_max`.
    Uniform {
        delta_omega: f64,
        #[serde(default)]
        additive: bool,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseNoise {
    #[default]
    None,
    /// Dephasing rate drawn from `U[0, gamma0_max]` (rad/μs).
    Uniform { gamma0_max: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BeamNoise {
    #[default]
    None,
    /// Transverse atom position `(x, y) ~ N(0, σ)²` in a beam of waist `w`,
    /// both in μm.
    On { waist: f64, sigma: f64 },
}

fn default_samples() -> usize {
    300
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub interaction: InteractionNoise,
    #[serde(default)]
    pub doppler: DopplerNoise,
    #[serde(default)]
    pub intensity: IntensityNoise,
    #[serde(default)]
    pub phase: PhaseNoise,
    #[serde(default)]
    pub beam: BeamNoise,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseSpec {
    /// All channels off, 300 samples, seed 0.
    pub fn none() -> Self {
        Self {
            interaction: InteractionNoise::None,
            doppler: DopplerNoise::None,
            intensity: IntensityNoise::None,
            phase: PhaseNoise::None,
            beam: BeamNoise::None,
            samples: default_samples(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("noise spec needs at least one sample"));
        }
        match self.interaction {
            InteractionNoise::Uniform { dv_over_v } if !(0.0..1.0).contains(&dv_over_v) => {
                return Err(Error::invalid("dv_over_v must lie in [0, 1)"))
            }
            InteractionNoise::GaussianPosition {
                temperature,
                trap_freq,
            } if !(temperature >= 0.0 && trap_freq > 0.0) => {
                return Err(Error::invalid(
                    "position noise needs T ≥ 0 and a positive trap frequency",
                ))
            }
            _ => {}
        }
        if let DopplerNoise::On { temperature } = self.doppler {
            if !(temperature >= 0.0) {
                return Err(Error::invalid("Doppler temperature must be non-negative"));
            }
        }
        if let IntensityNoise::Uniform { delta_omega, .. } = self.intensity {
            if !(0.0..1.0).contains(&delta_omega) {
                return Err(Error::invalid("delta_omega must lie in [0, 1)"));
            }
        }
        if let PhaseNoise::Uniform { gamma0_max } = self.phase {
            if !(gamma0_max >= 0.0) {
                return Err(Error::invalid("gamma0_max must be non-negative"));
            }
        }
        if let BeamNoise::On { waist, sigma } = self.beam {
            if !(waist > 0.0 && sigma >= 0.0) {
                return Err(Error::invalid(
                    "beam noise needs a positive waist and σ ≥ 0",
                ));
            }
        }
        Ok(())
    }

    /// Number of channels that are switched on.
    pub fn active_channels(&self) -> usize {
        [
            self.interaction != InteractionNoise::None,
            self.doppler != DopplerNoise::None,
            self.intensity != IntensityNoise::None,
            self.phase != PhaseNoise::None,
            self.beam != BeamNoise::None,
        ]
        .iter()
        .filter(|on| **on)
        .count()
    }

    pub fn is_noiseless(&self) -> bool {
        self.active_channels() == 0
    }

    /// Channels of `other` layered over `self` (channels active in `other` win).
    pub fn merged(&self, other: &NoiseSpec) -> NoiseSpec {
        NoiseSpec {
            interaction: if other.interaction != InteractionNoise::None {
                other.interaction
            } else {
                self.interaction
            },
            doppler: if other.doppler != DopplerNoise::None {
                other.doppler
            } else {
                self.doppler
            },
            intensity: if other.intensity != IntensityNoise::None {
                other.intensity
            } else {
                self.intensity
            },
            phase: if other.phase != PhaseNoise::None {
                other.phase
            } else {
                self.phase
            },
            beam: if other.beam != BeamNoise::None {
                other.beam
            } else {
                self.beam
            },
            ..*self
        }
    }
}

/// Standard deviation of the interatomic distance (μm) for a thermal atom
/// in a harmonic trap (trap frequency in rad/μs, temperature in K).
pub fn position_sigma(temperature: f64, trap_freq: f64, constants: &PhysicalConstants) -> f64 {
    let omega_si = trap_freq * 1e6;
    (constants.kb * temperature / (constants.mass * omega_si * omega_si)).sqrt() * 1e6
}

/// Doppler standard deviations `(k₁ v_rms, k₂ v_rms)` in rad/μs.
pub fn doppler_sigmas(temperature: f64, constants: &PhysicalConstants) -> (f64, f64) {
    let v = constants.v_rms(temperature);
    (constants.k1_eff * v * 1e-6, constants.k2_eff * v * 1e-6)
}

/// One concrete draw of every stochastic perturbation for one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    /// Interaction used in the Hamiltonian, rad/μs.
    pub v_realized: f64,
    /// Doppler offsets added to Δ₁ and Δ₂, rad/μs.
    pub alpha1: f64,
    pub alpha2: f64,
    /// Multiplicative pulse amplitude factor.
    pub intensity_scale: f64,
    /// Additive amplitude offsets per laser (rad/μs); zero unless the additive
    /// intensity model is selected.
    pub intensity_offset: [f64; 2],
    pub gamma0_realized: f64,
    /// Beam-profile factors of atom 1 and atom 2.
    pub spatial_scale1: f64,
    pub spatial_scale2: f64,
}

impl NoiseRealization {
    /// The noiseless realisation for `params`.
    pub fn nominal(params: &GateParameters) -> Self {
        Self {
            v_realized: params.v0,
            alpha1: 0.0,
            alpha2: 0.0,
            intensity_scale: 1.0,
            intensity_offset: [0.0; 2],
            gamma0_realized: 0.0,
            spatial_scale1: 1.0,
            spatial_scale2: 1.0,
        }
    }

    /// Whether the realisation treats both atoms identically.
    pub fn is_atom_symmetric(&self) -> bool {
        self.spatial_scale1 == self.spatial_scale2
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.v_realized,
            self.alpha1,
            self.alpha2,
            self.intensity_scale,
            self.intensity_offset[0],
            self.intensity_offset[1],
            self.gamma0_realized,
        ];
        if !finite.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite noise realisation"));
        }
        if !(self.intensity_scale > 0.0) {
            return Err(Error::invalid("intensity scale must be positive"));
        }
        if !(self.gamma0_realized >= 0.0) {
            return Err(Error::invalid("dephasing rate must be non-negative"));
        }
        for s in [self.spatial_scale1, self.spatial_scale2] {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::invalid("spatial scale factors must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Draw one realisation. Channels are sampled in a fixed order (interaction,
/// Doppler, intensity, phase, beam) and inactive channels consume no
/// randomness.
pub fn sample_noise<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    params: &GateParameters,
    constants: &PhysicalConstants,
    rng: &mut R,
) -> NoiseRealization {
    let mut out = NoiseRealization::nominal(params);

    match spec.interaction {
        InteractionNoise::None => {}
        InteractionNoise::Uniform { dv_over_v } => {
            let u = rng.random_range(-dv_over_v..=dv_over_v);
            out.v_realized = params.v0 * (1.0 + u);
        }
        InteractionNoise::GaussianPosition {
            temperature,
            trap_freq,
        } => {
            let r0 = constants.distance_for(params.v0);
            let sigma = position_sigma(temperature, trap_freq, constants);
            let dist = Normal::new(r0, sigma).expect("finite σ");
            out.v_realized = loop {
                // A non-positive distance is resampled.
                if let Ok(v) = interaction_strength(dist.sample(rng), constants) {
                    break v;
                }
            };
        }
    }

    if let DopplerNoise::On { temperature } = spec.doppler {
        let (s1, s2) = doppler_sigmas(temperature, constants);
        out.alpha1 = Normal::new(0.0, s1).expect("finite σ").sample(rng);
        out.alpha2 = Normal::new(0.0, s2).expect("finite σ").sample(rng);
    }

    if let IntensityNoise::Uniform {
        delta_omega,
        additive,
    } = spec.intensity
    {
        let eps = rng.random_range(-delta_omega..=delta_omega);
        if additive {
            out.intensity_offset = [
                eps * params.pulse1.peak(params.t_gate),
                eps * params.pulse2.peak(params.t_gate),
            ];
        } else {
            out.intensity_scale = 1.0 + eps;
        }
    }

    if let PhaseNoise::Uniform { gamma0_max } = spec.phase {
        out.gamma0_realized = rng.random_range(0.0..=gamma0_max);
    }

    if let BeamNoise::On { waist, sigma } = spec.beam {
        let dist = Normal::new(0.0, sigma).expect("finite σ");
        let w2 = waist * waist;
        let mut factor = || {
            let (x, y): (f64, f64) = (dist.sample(rng), dist.sample(rng));
            (-(x * x + y * y) / w2).exp()
        };
        out.spatial_scale1 = factor();
        out.spatial_scale2 = factor();
    }

    out
}

/// The RNG stream for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub steps: usize,
    pub mode: FidelityMode,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            mode: FidelityMode::Uhlmann,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub mean: f64,
    pub stddev: f64,
    pub stderr: f64,
    /// Samples that contributed.
    pub n: usize,
    /// Samples dropped because their trajectory failed a quality check.
    pub excluded: usize,
}

impl McStats {
    pub fn from_values(values: &[f64], excluded: usize) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stddev: f64::NAN,
                stderr: f64::NAN,
                n,
                excluded,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stddev,
            stderr: stddev / (n as f64).sqrt(),
            n,
            excluded,
        }
    }
}

/// Mean average-gate fidelity over `spec.samples` noise draws.
pub fn monte_carlo_fidelity(
    params: &GateParameters,
    spec: &NoiseSpec,
    constants: &PhysicalConstants,
    options: &McOptions,
) -> Result<McStats> {
    params.validate()?;
    spec.validate()?;

    if spec.is_noiseless() {
        // Every draw is the nominal realisation.
        let f = average_gate_fidelity(
            params,
            &NoiseRealization::nominal(params),
            options.mode,
            options.steps,
        )?;
        return Ok(McStats {
            mean: f.value,
            stddev: 0.0,
            stderr: 0.0,
            n: spec.samples,
            excluded: 0,
        });
    }

    let outcomes: Vec<Result<f64>> = (0..spec.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(spec.seed, i);
            let realization = sample_noise(spec, params, constants, &mut rng);
            average_gate_fidelity(params, &realization, options.mode, options.steps)
                .map(|f| f.value)
        })
        .collect();

    let mut values = Vec::with_capacity(outcomes.len());
    let mut excluded = 0;
    for outcome in outcomes {
        match outcome {
            Ok(v) => values.push(v),
            Err(e) if e.is_numerical() => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(McStats::from_values(&values, excluded))
}

/// One noise specification per error source; each must have exactly one
/// channel switched on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSources {
    #[serde(default)]
    pub position: Option<NoiseSpec>,
    #[serde(default)]
    pub doppler: Option<NoiseSpec>,
    #[serde(default)]
    pub intensity: Option<NoiseSpec>,
    #[serde(default)]
    pub phase: Option<NoiseSpec>,
    #[serde(default)]
    pub beam: Option<NoiseSpec>,
    /// Also sample every source simultaneously.
    #[serde(default)]
    pub joint: bool,
}

impl BudgetSources {
    /// The default budget at 20 μK: position, Doppler, 5 % intensity,
    /// γ₀/2π = 0.1 MHz phase noise and a 2 μm beam waist.
    pub fn standard(samples: usize, seed: u64) -> Self {
        use crate::presets::noise as p;
        Self {
            position: Some(p::position(samples, seed)),
            doppler: Some(p::doppler(samples, seed)),
            intensity: Some(p::intensity(samples, seed)),
            phase: Some(p::phase(samples, seed)),
            beam: Some(p::beam(samples, seed)),
            joint: false,
        }
    }

    fn named(&self) -> [(&'static str, Option<&NoiseSpec>); 5] {
        [
            ("position", self.position.as_ref()),
            ("doppler", self.doppler.as_ref()),
            ("intensity", self.intensity.as_ref()),
            ("phase", self.phase.as_ref()),
            ("beam", self.beam.as_ref()),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceBudget {
    /// `F(no noise) − mean F(source on)`, floored at zero.
    pub infidelity: f64,
    pub stats: McStats,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub perfect_fidelity: f64,
    /// `1 − F(no noise)`, the intrinsic Rydberg-decay error.
    pub decay_infidelity: f64,
    pub position: Option<SourceBudget>,
    pub doppler: Option<SourceBudget>,
    pub intensity: Option<SourceBudget>,
    pub phase: Option<SourceBudget>,
    pub beam: Option<SourceBudget>,
    /// Perfect fidelity minus the sum of all technical infidelities.
    pub conservative_fidelity: f64,
    /// Mean fidelity with every source sampled at once, when requested.
    pub joint: Option<McStats>,
}

impl ErrorBudget {
    pub fn sources(&self) -> [(&'static str, Option<&SourceBudget>); 5] {
        [
            ("position", self.position.as_ref()),
            ("doppler", self.doppler.as_ref()),
            ("intensity", self.intensity.as_ref()),
            ("phase", self.phase.as_ref()),
            ("beam", self.beam.as_ref()),
        ]
    }

    pub fn technical_infidelity(&self) -> f64 {
        self.sources()
            .iter()
            .filter_map(|(_, s)| s.map(|s| s.infidelity))
            .sum()
    }
}

pub fn error_budget(
    params: &GateParameters,
    sources: &BudgetSources,
    constants: &PhysicalConstants,
    options: &McOptions,
) -> Result<ErrorBudget> {
    for (name, spec) in sources.named() {
        if let Some(spec) = spec {
            if spec.active_channels() != 1 {
                return Err(Error::invalid(format!(
                    "budget source `{name}` must have exactly one active channel"
                )));
            }
        }
    }

    let perfect = average_gate_fidelity(
        params,
        &NoiseRealization::nominal(params),
        options.mode,
        options.steps,
    )?
    .value;

    let run = |spec: Option<&NoiseSpec>| -> Result<Option<SourceBudget>> {
        spec.map(|spec| {
            let stats = monte_carlo_fidelity(params, spec, constants, options)?;
            Ok(SourceBudget {
                infidelity: (perfect - stats.mean).max(0.0),
                stats,
                samples: spec.samples,
                seed: spec.seed,
            })
        })
        .transpose()
    };

    let joint = if sources.joint {
        let specs: Vec<&NoiseSpec> = sources.named().iter().filter_map(|(_, s)| *s).collect();
        match specs.split_first() {
            Some((first, rest)) => {
                let combined = rest.iter().fold(**first, |acc, s| acc.merged(s));
                Some(monte_carlo_fidelity(params, &combined, constants, options)?)
            }
            None => None,
        }
    } else {
        None
    };

    let mut budget = ErrorBudget {
        perfect_fidelity: perfect,
        decay_infidelity: 1.0 - perfect,
        position: run(sources.position.as_ref())?,
        doppler: run(sources.doppler.as_ref())?,
        intensity: run(sources.intensity.as_ref())?,
        phase: run(sources.phase.as_ref())?,
        beam: run(sources.beam.as_ref())?,
        conservative_fidelity: perfect,
        joint,
    };
    budget.conservative_fidelity = perfect - budget.technical_infidelity();
    Ok(budget)
}

/// Relative interaction spread `6σ_r/r₀` implied by a position spread.
pub fn dv_over_v_for_sigma(
    sigma_r: f64,
    params: &GateParameters,
    constants: &PhysicalConstants,
) -> f64 {
    6.0 * sigma_r / constants.distance_for(params.v0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{self, Case};

    #[test]
    fn all_none_spec_gives_nominal_realisation() {
        let p = presets::optimised_gate(Case::Gaussian, true);
        let mut rng = sample_rng(7, 0);
        let r = sample_noise(
            &NoiseSpec::none(),
            &p,
            &PhysicalConstants::default(),
            &mut rng,
        );
        assert_eq!(r, NoiseRealization::nominal(&p));
    }

    #[test]
    fn thermal_spreads_at_20uk() {
        let c = PhysicalConstants::default();
        let p = presets::optimised_gate(Case::Gaussian, true);
        let sigma = position_sigma(20e-6, presets::noise::trap_freq(), &c);
        assert!(
            (sigma * 1e3 - 47.34).abs() < 0.05,
            "σ_r = {} nm",
            sigma * 1e3
        );
        let dv = dv_over_v_for_sigma(sigma, &p, &c);
        assert!((dv - 0.0592).abs() < 0.0005, "δV/V = {dv}");
        assert!((c.v_rms(20e-6) - 0.044).abs() < 0.0005);
        let (s1, s2) = doppler_sigmas(20e-6, &c);
        assert!(
            (s1 - 0.383).abs() < 0.001 && (s2 - 0.219).abs() < 0.001,
            "{s1} {s2}"
        );
    }

    #[test]
    fn samples_respect_channel_ranges() {
        let c = PhysicalConstants::default();
        let p = presets::optimised_gate(Case::Gaussian, true);
        let spec = NoiseSpec {
            interaction: InteractionNoise::Uniform { dv_over_v: 0.05 },
            intensity: IntensityNoise::Uniform {
                delta_omega: 0.05,
                additive: false,
            },
            phase: PhaseNoise::Uniform { gamma0_max: 0.6 },
            beam: BeamNoise::On {
                waist: 2.0,
                sigma: 0.05,
            },
            ..NoiseSpec::none()
        };
        for i in 0..200 {
            let r = sample_noise(&spec, &p, &c, &mut sample_rng(3, i));
            assert!((r.v_realized / p.v0 - 1.0).abs() <= 0.05);
            assert!((r.intensity_scale - 1.0).abs() <= 0.05);
            assert!((0.0..=0.6).contains(&r.gamma0_realized));
            r.validate().unwrap();
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let c = PhysicalConstants::default();
        let p = presets::optimised_gate(Case::Gaussian, true);
        let spec = presets::noise::position(10, 42);
        let a = sample_noise(&spec, &p, &c, &mut sample_rng(42, 3));
        let b = sample_noise(&spec, &p, &c, &mut sample_rng(42, 3));
        let d = sample_noise(&spec, &p, &c, &mut sample_rng(42, 4));
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = NoiseSpec {
            interaction: InteractionNoise::Uniform { dv_over_v: 1.2 },
            ..NoiseSpec::none()
        };
        assert!(bad.validate().is_err());
        let bad = NoiseSpec {
            samples: 0,
            ..NoiseSpec::none()
        };
        assert!(bad.validate().is_err());
        let bad = NoiseSpec {
            beam: BeamNoise::On {
                waist: 0.0,
                sigma: 0.1,
            },
            ..NoiseSpec::none()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn budget_rejects_multi_channel_sources() {
        let p = presets::optimised_gate(Case::Gaussian, true);
        let spec = presets::noise::doppler(1, 0).merged(&presets::noise::phase(1, 0));
        let sources = BudgetSources {
            doppler: Some(spec),
            ..Default::default()
        };
        assert!(error_budget(
            &p,
            &sources,
            &PhysicalConstants::default(),
            &McOptions::default()
        )
        .is_err());
    }

    #[test]
    fn stats_of_constant_values() {
        let s = McStats::from_values(&[0.5; 10], 1);
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.stddev, 0.0);
        assert_eq!(s.n, 10);
        assert_eq!(s.excluded, 1);
    }
}
