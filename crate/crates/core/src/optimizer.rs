//! Real-coded genetic algorithm over pulse parameters, Δ₁, q and optionally
//! T_g, maximising the noiseless average SWAP fidelity.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{average_gate_fidelity, FidelityMode};
use crate::model::{BranchingRatios, GateParameters, PhysicalConstants};
use crate::noise::NoiseRealization;
use crate::presets::V0_MHZ;
use crate::pulses::PulseShape;
use crate::units::mhz;
use crate::DEFAULT_STEPS;

/// Smallest change of the ranking key counted as progress.
const STAGNATION_TOLERANCE: f64 = 1e-7;

/// Slope of the ranking penalty below [`SearchSpace::fitness_floor`].
const FLOOR_PENALTY: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseFamily {
    Triangle,
    Gaussian,
    Composite,
}

impl PulseFamily {
    /// Genome names of the pulse parameters of this family.
    pub fn pulse_parameters(self) -> &'static [&'static str] {
        match self {
            PulseFamily::Triangle => &["omega1_max", "omega2_max"],
            PulseFamily::Gaussian => &["omega1_max", "width1", "omega2_max", "width2"],
            PulseFamily::Composite => &["c0_1", "c1_1", "c2_1", "c0_2", "c1_2", "c2_2"],
        }
    }

    fn pulses(self, g: &[f64]) -> (PulseShape, PulseShape) {
        match self {
            PulseFamily::Triangle => (
                PulseShape::Triangle { omega_max: g[0] },
                PulseShape::Triangle { omega_max: g[1] },
            ),
            PulseFamily::Gaussian => (
                PulseShape::Gaussian {
                    omega_max: g[0],
                    width: g[1],
                },
                PulseShape::Gaussian {
                    omega_max: g[2],
                    width: g[3],
                },
            ),
            PulseFamily::Composite => (
                PulseShape::Composite {
                    c0: g[0],
                    c1: g[1],
                    c2: g[2],
                },
                PulseShape::Composite {
                    c0: g[3],
                    c1: g[4],
                    c2: g[5],
                },
            ),
        }
    }

    fn genes(self, p1: &PulseShape, p2: &PulseShape) -> Option<Vec<f64>> {
        match (self, p1, p2) {
            (
                PulseFamily::Triangle,
                PulseShape::Triangle { omega_max: a },
                PulseShape::Triangle { omega_max: b },
            ) => Some(vec![*a, *b]),
            (
                PulseFamily::Gaussian,
                PulseShape::Gaussian {
                    omega_max: a,
                    width: w,
                },
                PulseShape::Gaussian {
                    omega_max: b,
                    width: v,
                },
            ) => Some(vec![*a, *w, *b, *v]),
            (
                PulseFamily::Composite,
                PulseShape::Composite { c0, c1, c2 },
                PulseShape::Composite {
                    c0: d0,
                    c1: d1,
                    c2: d2,
                },
            ) => Some(vec![*c0, *c1, *c2, *d0, *d1, *d2]),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// Search domain. Bounds are keyed by genome name: the family's
/// [`pulse_parameters`](PulseFamily::pulse_parameters), then `delta1`, `q`
/// and, with `optimize_t_gate`, `t_gate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub family: PulseFamily,
    pub bounds: BTreeMap<String, Bound>,
    pub optimize_t_gate: bool,
    /// Gate duration when it is not part of the genome.
    pub t_gate: f64,
    /// Largest admissible |Ω(t)| of either pulse (rad/μs).
    pub rabi_cap: f64,
    pub v0: f64,
    pub gamma: f64,
    pub branching: BranchingRatios,
    /// With `optimize_t_gate`, candidates are ranked by
    /// `F − duration_weight·T_g − 1000·max(0, fitness_floor − F)` (T_g in μs).
    #[serde(default)]
    pub duration_weight: f64,
    #[serde(default)]
    pub fitness_floor: f64,
}

impl SearchSpace {
    /// Gaussian pulses at T_g = 1 μs: Ω_max ∈ 2π·[0, 10] MHz, widths in
    /// [0.1, 0.5] μs, Δ₁ ∈ 2π·[10, 40] MHz, q ∈ 2π·[0, 10] MHz.
    pub fn gaussian_fixed_duration() -> Self {
        let mut bounds = BTreeMap::new();
        bounds.insert("omega1_max".into(), Bound::new(0.0, mhz(10.0)));
        bounds.insert("omega2_max".into(), Bound::new(0.0, mhz(10.0)));
        bounds.insert("width1".into(), Bound::new(0.1, 0.5));
        bounds.insert("width2".into(), Bound::new(0.1, 0.5));
        bounds.insert("delta1".into(), Bound::new(mhz(10.0), mhz(40.0)));
        bounds.insert("q".into(), Bound::new(0.0, mhz(10.0)));
        Self {
            family: PulseFamily::Gaussian,
            bounds,
            optimize_t_gate: false,
            t_gate: 1.0,
            rabi_cap: mhz(10.0),
            v0: mhz(V0_MHZ),
            gamma: PhysicalConstants::default().gamma(),
            branching: BranchingRatios::qubit_only(),
            duration_weight: 0.0,
            fitness_floor: 0.0,
        }
    }

    /// Gaussian pulses with T_g ∈ [0.05, 1.2] μs in the genome, amplitudes up
    /// to `rabi_cap` and the leaky branching ratios.
    pub fn gaussian_duration_search(rabi_cap: f64) -> Self {
        let mut s = Self::gaussian_fixed_duration();
        for name in ["omega1_max", "omega2_max"] {
            s.bounds.insert(name.into(), Bound::new(0.0, rabi_cap));
        }
        for name in ["width1", "width2"] {
            s.bounds.insert(name.into(), Bound::new(0.02, 2.0));
        }
        s.bounds
            .insert("delta1".into(), Bound::new(mhz(-150.0), mhz(150.0)));
        s.bounds.insert("q".into(), Bound::new(0.0, mhz(50.0)));
        s.bounds.insert("t_gate".into(), Bound::new(0.05, 1.2));
        s.optimize_t_gate = true;
        s.rabi_cap = rabi_cap;
        s.branching = BranchingRatios::leaky();
        s.duration_weight = 1.0;
        s.fitness_floor = 0.9992;
        s
    }

    /// Point bounds at `params`, so the search can only return `params`.
    pub fn point(params: &GateParameters, family: PulseFamily) -> Result<Self> {
        let genes = family
            .genes(&params.pulse1, &params.pulse2)
            .ok_or_else(|| Error::invalid("pulse shapes do not match the family"))?;
        let mut bounds = BTreeMap::new();
        for (name, v) in family.pulse_parameters().iter().zip(genes) {
            bounds.insert((*name).to_string(), Bound::point(v));
        }
        bounds.insert("delta1".into(), Bound::point(params.delta1));
        bounds.insert("q".into(), Bound::point(params.q));
        let cap = params
            .pulse1
            .peak(params.t_gate)
            .max(params.pulse2.peak(params.t_gate));
        Ok(Self {
            family,
            bounds,
            optimize_t_gate: false,
            t_gate: params.t_gate,
            rabi_cap: cap.max(f64::MIN_POSITIVE),
            v0: params.v0,
            gamma: params.gamma,
            branching: params.branching,
            duration_weight: 0.0,
            fitness_floor: 0.0,
        })
    }

    /// Genome names in gene order.
    pub fn gene_names(&self) -> Vec<&'static str> {
        let mut names = self.family.pulse_parameters().to_vec();
        names.extend(["delta1", "q"]);
        if self.optimize_t_gate {
            names.push("t_gate");
        }
        names
    }

    fn ordered_bounds(&self) -> Result<Vec<Bound>> {
        self.gene_names()
            .iter()
            .map(|n| {
                self.bounds
                    .get(*n)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("missing bound for {n}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let names = self.gene_names();
        if let Some(extra) = self.bounds.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::invalid(format!("unknown search parameter {extra}")));
        }
        for (name, b) in names.iter().zip(self.ordered_bounds()?) {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo <= b.hi) {
                return Err(Error::invalid(format!(
                    "bound for {name} must be a finite interval"
                )));
            }
        }
        if self.optimize_t_gate && self.bounds["t_gate"].lo <= 0.0 {
            return Err(Error::invalid("gate duration bounds must be positive"));
        }
        if !self.optimize_t_gate && !(self.t_gate > 0.0 && self.t_gate.is_finite()) {
            return Err(Error::invalid("gate duration must be positive"));
        }
        if !(self.rabi_cap > 0.0 && self.rabi_cap.is_finite()) {
            return Err(Error::invalid("rabi cap must be positive"));
        }
        if !(self.duration_weight >= 0.0 && self.duration_weight.is_finite()) {
            return Err(Error::invalid(
                "duration weight must be finite and non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.fitness_floor) {
            return Err(Error::invalid("fitness floor must lie in [0, 1]"));
        }
        self.branching.validate()
    }

    /// Stretch the gate by `s = factor` keeping the effective swap area and
    /// `q·T_g` fixed: `T_g → sT_g`, widths `→ s·w`, `q → q/s`,
    /// `Ω → Ω·s^(−a)` and `Δ₁ → Δ₁·s^(1−2a)` with `a ∈ [½, 1]`.
    fn rescale_duration(&self, genes: &mut [f64], factor: f64, a: f64) {
        let amp = factor.powf(-a);
        let np = self.family.pulse_parameters().len();
        match self.family {
            PulseFamily::Gaussian => {
                genes[0] *= amp;
                genes[1] *= factor;
                genes[2] *= amp;
                genes[3] *= factor;
            }
            PulseFamily::Triangle | PulseFamily::Composite => {
                genes[..np].iter_mut().for_each(|g| *g *= amp)
            }
        }
        genes[np] *= factor.powf(1.0 - 2.0 * a);
        genes[np + 1] /= factor;
        genes[np + 2] *= factor;
    }

    /// Decode a genome. Δ₂ is implied by `v0 − Δ₁ − q`.
    pub fn decode(&self, genes: &[f64]) -> GateParameters {
        let np = self.family.pulse_parameters().len();
        let (pulse1, pulse2) = self.family.pulses(&genes[..np]);
        GateParameters {
            pulse1,
            pulse2,
            delta1: genes[np],
            q: genes[np + 1],
            v0: self.v0,
            t_gate: if self.optimize_t_gate {
                genes[np + 2]
            } else {
                self.t_gate
            },
            gamma: self.gamma,
            branching: self.branching,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaOptions {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub elitism: usize,
    pub seed: u64,
    pub stagnation_limit: usize,
    /// Probability that a child is time-rescaled when T_g is in the genome.
    pub rescale_rate: f64,
    /// Integration steps during the search.
    pub search_steps: usize,
    /// Integration steps for the reported fitness.
    pub final_steps: usize,
}

impl Default for GaOptions {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            elitism: 2,
            seed: 0,
            stagnation_limit: 30,
            rescale_rate: 0.2,
            search_steps: 1000,
            final_steps: DEFAULT_STEPS,
        }
    }
}

impl GaOptions {
    pub fn validate(&self) -> Result<()> {
        if self.population < 8 {
            return Err(Error::invalid("population must be at least 8"));
        }
        if self.elitism >= self.population {
            return Err(Error::invalid(
                "elitism must be smaller than the population",
            ));
        }
        let rates = [self.crossover_rate, self.mutation_rate, self.rescale_rate];
        if !rates.iter().all(|r| (0.0..=1.0).contains(r)) {
            return Err(Error::invalid(
                "crossover, mutation and rescale rates must lie in [0, 1]",
            ));
        }
        if self.generations == 0 {
            return Err(Error::invalid("at least one generation required"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best: GateParameters,
    /// Fitness of `best` at [`GaOptions::final_steps`].
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
    pub seed: u64,
}

/// Noiseless average gate fidelity, or 0 when a pulse exceeds `rabi_cap` or
/// the integration fails.
pub fn objective_perfect_fidelity(candidate: &GateParameters, rabi_cap: f64, steps: usize) -> f64 {
    let over = |p: &PulseShape| p.peak(candidate.t_gate) > rabi_cap * (1.0 + 1e-12);
    if over(&candidate.pulse1) || over(&candidate.pulse2) {
        return 0.0;
    }
    average_gate_fidelity(
        candidate,
        &NoiseRealization::nominal(candidate),
        FidelityMode::Uhlmann,
        steps,
    )
    .map(|f| f.value)
    .unwrap_or(0.0)
}

#[derive(Clone, Debug)]
struct Individual {
    genes: Vec<f64>,
    fitness: f64,
}

impl Individual {
    /// Ranking score: fitness, less the duration penalty when T_g is searched.
    fn key(&self, space: &SearchSpace) -> f64 {
        if space.optimize_t_gate {
            let shortfall = (space.fitness_floor - self.fitness).max(0.0);
            self.fitness
                - space.duration_weight * self.genes[self.genes.len() - 1]
                - FLOOR_PENALTY * shortfall
        } else {
            self.fitness
        }
    }
}

fn rank(pop: &mut [Individual], space: &SearchSpace) {
    pop.sort_by(|a, b| b.key(space).total_cmp(&a.key(space)));
}

fn evaluate(space: &SearchSpace, genomes: Vec<Vec<f64>>, steps: usize) -> Vec<Individual> {
    genomes
        .into_par_iter()
        .map(|genes| {
            let fitness = objective_perfect_fidelity(&space.decode(&genes), space.rabi_cap, steps);
            Individual { genes, fitness }
        })
        .collect()
}

fn tournament<'a, R: Rng>(
    pop: &'a [Individual],
    space: &SearchSpace,
    rng: &mut R,
) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..3 {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.key(space) > best.key(space) {
            best = c;
        }
    }
    best
}

/// Run the genetic algorithm. Deterministic for a given `options.seed`.
pub fn ga_optimize(space: &SearchSpace, options: &GaOptions) -> Result<OptResult> {
    space.validate()?;
    options.validate()?;
    let bounds = space.ordered_bounds()?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let initial: Vec<Vec<f64>> = (0..options.population)
        .map(|_| {
            bounds
                .iter()
                .map(|b| {
                    if b.width() > 0.0 {
                        rng.random_range(b.lo..=b.hi)
                    } else {
                        b.lo
                    }
                })
                .collect()
        })
        .collect();
    let mut pop = evaluate(space, initial, options.search_steps);
    let mut evaluations = pop.len();
    rank(&mut pop, space);

    let mut history = Vec::with_capacity(options.generations);
    let record = |pop: &[Individual], generation: usize, history: &mut Vec<GenerationStats>| {
        let best = pop.iter().map(|i| i.fitness).fold(0.0, f64::max);
        let mean = pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64;
        history.push(GenerationStats {
            generation,
            best_fitness: best,
            mean_fitness: mean,
        });
    };
    record(&pop, 0, &mut history);

    let mut best_key = pop[0].key(space);
    let mut stagnant = 0;
    for generation in 1..options.generations {
        let sigma_scale = 0.05 * 0.98f64.powi(generation as i32);
        // Elites by rank, plus the fittest individual when ranking by duration.
        let mut next: Vec<Individual> = pop[..options.elitism].to_vec();
        if let Some(fittest) = pop.iter().max_by(|a, b| a.fitness.total_cmp(&b.fitness)) {
            if !next.iter().any(|e| e.genes == fittest.genes) {
                next.push(fittest.clone());
            }
        }
        let mut children = Vec::with_capacity(options.population - next.len());
        while next.len() + children.len() < options.population {
            let a = tournament(&pop, space, &mut rng);
            if space.optimize_t_gate && rng.random::<f64>() < options.rescale_rate {
                let mut child = a.genes.clone();
                let factor = rng.random_range(0.9..=1.0);
                let exponent = rng.random_range(0.5..=1.0);
                space.rescale_duration(&mut child, factor, exponent);
                for (g, bound) in child.iter_mut().zip(&bounds) {
                    *g = bound.clamp(*g);
                }
                children.push(child);
                continue;
            }
            let b = tournament(&pop, space, &mut rng);
            let crossover = rng.random::<f64>() < options.crossover_rate;
            let mut child: Vec<f64> = a
                .genes
                .iter()
                .zip(&b.genes)
                .zip(&bounds)
                .map(|((&x, &y), bound)| {
                    if !crossover {
                        return x;
                    }
                    let (lo, hi) = (x.min(y), x.max(y));
                    let ext = 0.5 * (hi - lo);
                    if ext > 0.0 {
                        bound.clamp(rng.random_range((lo - ext)..=(hi + ext)))
                    } else {
                        x
                    }
                })
                .collect();
            for (g, bound) in child.iter_mut().zip(&bounds) {
                if bound.width() > 0.0 && rng.random::<f64>() < options.mutation_rate {
                    let normal =
                        Normal::new(0.0, sigma_scale * bound.width()).expect("positive sigma");
                    *g = bound.clamp(*g + normal.sample(&mut rng));
                }
            }
            children.push(child);
        }
        evaluations += children.len();
        next.extend(evaluate(space, children, options.search_steps));
        pop = next;
        rank(&mut pop, space);
        record(&pop, generation, &mut history);

        let key = pop[0].key(space);
        if key - best_key > STAGNATION_TOLERANCE {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        best_key = best_key.max(key);
        if stagnant >= options.stagnation_limit {
            break;
        }
    }

    let best = space.decode(&pop[0].genes);
    let best_fitness = objective_perfect_fidelity(&best, space.rabi_cap, options.final_steps);
    evaluations += 1;
    Ok(OptResult {
        best,
        best_fitness,
        history,
        evaluations,
        seed: options.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{self, Case};

    fn quick(seed: u64) -> GaOptions {
        GaOptions {
            population: 8,
            generations: 3,
            seed,
            search_steps: 1000,
            final_steps: 1000,
            ..GaOptions::default()
        }
    }

    #[test]
    fn decode_respects_constraint() {
        let s = SearchSpace::gaussian_fixed_duration();
        let p = s.decode(&[1.0, 0.2, 2.0, 0.3, 100.0, 20.0]);
        assert_eq!(p.delta1, 100.0);
        assert_eq!(p.q, 20.0);
        assert!((p.delta1 + p.delta2() + p.q - s.v0).abs() < 1e-12);
        assert_eq!(
            p.pulse2,
            PulseShape::Gaussian {
                omega_max: 2.0,
                width: 0.3
            }
        );
    }

    #[test]
    fn zero_pulses_score_one_half() {
        let p = presets::optimised_gate(Case::Gaussian, true).with_pulses_off();
        let mut q = p.clone();
        q.gamma = 0.0;
        assert!((objective_perfect_fidelity(&q, 1.0, 1000) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cap_violation_scores_zero() {
        let p = presets::optimised_gate(Case::Gaussian, true);
        assert_eq!(objective_perfect_fidelity(&p, mhz(5.0), 1000), 0.0);
    }

    #[test]
    fn validation_catches_bad_spaces() {
        let mut s = SearchSpace::gaussian_fixed_duration();
        s.bounds.insert("bogus".into(), Bound::new(0.0, 1.0));
        assert!(s.validate().is_err());
        let mut s = SearchSpace::gaussian_fixed_duration();
        s.bounds.remove("q");
        assert!(s.validate().is_err());
        let mut s = SearchSpace::gaussian_fixed_duration();
        s.bounds.insert("q".into(), Bound::new(1.0, 0.0));
        assert!(s.validate().is_err());
        let s = SearchSpace::gaussian_fixed_duration();
        assert!(ga_optimize(
            &s,
            &GaOptions {
                population: 4,
                ..quick(0)
            }
        )
        .is_err());
    }

    #[test]
    fn point_bounds_return_the_point() {
        let p = presets::optimised_gate(Case::Triangle, true);
        let s = SearchSpace::point(&p, PulseFamily::Triangle).unwrap();
        let r = ga_optimize(&s, &quick(5)).unwrap();
        assert_eq!(r.best, p);
        assert!(SearchSpace::point(&p, PulseFamily::Gaussian).is_err());
    }

    #[test]
    fn seeded_runs_are_reproducible_and_monotone() {
        let s = SearchSpace::gaussian_fixed_duration();
        let a = ga_optimize(&s, &quick(11)).unwrap();
        let b = ga_optimize(&s, &quick(11)).unwrap();
        assert_eq!(a, b);
        for w in a.history.windows(2) {
            assert!(w[1].best_fitness >= w[0].best_fitness);
        }
        assert!((0.0..=1.0).contains(&a.best_fitness));
    }
}
