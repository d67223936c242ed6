//! The four subcommands. Each reads a [`RunConfig`], writes its artefacts
//! under the output directory and returns the JSON document it wrote.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use antiblockade::effective::simulate_effective;
use antiblockade::model::{basis_label, RR};
use antiblockade::noise::SourceBudget;
use antiblockade::pulses::PulseArea;
use antiblockade::{
    average_gate_fidelity, effective_pulse_area, error_budget, evolve, ga_optimize,
    monte_carlo_fidelity, state_swap_fidelity, time_in_state, Diagnostics, ErrorBudget,
    FidelityMode, McOptions, McStats, NoiseRealization, PhysicalConstants, QuantumState,
    Trajectory,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{GateConfig, RunConfig, SweepAxis};
use crate::error::CliError;

/// Inputs of the four computational basis states, in `00, 01, 10, 11` order.
const INPUTS: [usize; 4] = [0, 1, 4, 5];
/// SWAP image of each entry of [`INPUTS`].
const TARGETS: [usize; 4] = [0, 4, 1, 5];

pub struct Context {
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Context {
    pub fn new(out: impl Into<PathBuf>, seed: Option<u64>) -> Result<Self, CliError> {
        let out = out.into();
        fs::create_dir_all(&out)?;
        Ok(Self { out, seed })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.path(name), text)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiagnosticsRecord {
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl From<Diagnostics> for DiagnosticsRecord {
    fn from(d: Diagnostics) -> Self {
        Self {
            max_trace_drift: d.max_trace_drift,
            max_hermiticity_error: d.max_hermiticity_error,
            min_eigenvalue: d.min_eigenvalue,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InputRecord {
    pub input: String,
    pub file: String,
    /// Population of the SWAP image at the end of the gate.
    pub target_population: f64,
    /// ∫ρ_rr dt in μs.
    pub t_rr: f64,
    pub diagnostics: DiagnosticsRecord,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveComparison {
    pub input: String,
    pub max_abs_p01: f64,
    pub max_abs_p10: f64,
    pub max_abs_prr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PulseAreaRecord {
    /// Absent when the effective detuning vanishes somewhere on the grid.
    pub area: Option<f64>,
    pub min_abs_delta: f64,
}

impl From<PulseArea> for PulseAreaRecord {
    fn from(a: PulseArea) -> Self {
        Self {
            area: a.is_valid().then_some(a.area),
            min_abs_delta: a.min_abs_delta,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuperpositionRecord {
    pub re: [f64; 4],
    pub im: [f64; 4],
    pub fidelity: f64,
    pub file: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NoiseRecord {
    pub samples: usize,
    pub seed: u64,
    pub stats: McStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSummary {
    pub gate: GateConfig,
    pub steps: usize,
    pub mode: FidelityMode,
    pub fidelity: f64,
    pub per_input: [f64; 4],
    /// ∫ρ_rr dt for the |01⟩ input, μs.
    pub t_rr: f64,
    pub inputs: Vec<InputRecord>,
    pub effective_pulse_area: Option<PulseAreaRecord>,
    pub large_detuning_ok: bool,
    pub effective_comparison: Vec<EffectiveComparison>,
    pub superposition: Option<SuperpositionRecord>,
    pub noise: Option<NoiseRecord>,
}

fn write_trajectory(ctx: &Context, name: &str, traj: &Trajectory) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(ctx.path(name))?);
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn run_simulate(cfg: &RunConfig, ctx: &Context) -> Result<SimulateSummary, CliError> {
    let gate = cfg.require_gate()?;
    let params = gate.to_params()?;
    let sim = cfg.simulate.unwrap_or_default();
    let nominal = NoiseRealization::nominal(&params);

    let mut inputs = Vec::with_capacity(4);
    for (&input, &target) in INPUTS.iter().zip(&TARGETS) {
        let traj = evolve(&QuantumState::basis(input), &params, &nominal, sim.steps)?;
        let label = basis_label(input);
        let file = format!("trajectory_{label}.csv");
        write_trajectory(ctx, &file, &traj)?;
        inputs.push(InputRecord {
            input: label,
            file,
            target_population: traj.rho_final.population(target),
            t_rr: time_in_state(&traj, RR),
            diagnostics: traj.diagnostics.into(),
        });
    }
    let fidelity = average_gate_fidelity(&params, &nominal, sim.mode, sim.steps)?;

    // The effective model is only defined for non-zero detunings; report
    // nothing rather than failing the whole run when it is not.
    let effective_pulse_area = effective_pulse_area(&params, sim.steps)
        .ok()
        .map(PulseAreaRecord::from);

    let mut effective_comparison = Vec::new();
    if sim.effective {
        let lossless = antiblockade::GateParameters {
            gamma: 0.0,
            ..params
        };
        for input in [1, 4] {
            let Ok(eff) = simulate_effective(input, &lossless, sim.steps) else {
                continue;
            };
            let full = evolve(&QuantumState::basis(input), &lossless, &nominal, sim.steps)?;
            effective_comparison.push(EffectiveComparison {
                input: basis_label(input),
                max_abs_p01: max_abs_diff(&full.population_series(1), &eff.p01),
                max_abs_p10: max_abs_diff(&full.population_series(4), &eff.p10),
                max_abs_prr: max_abs_diff(&full.population_series(RR), &eff.prr),
            });
        }
    }

    let superposition = match sim.superposition {
        Some(s) => {
            let input = s.to_input()?;
            let traj = evolve(
                &QuantumState::pure(&input.ket())?,
                &params,
                &nominal,
                sim.steps,
            )?;
            let file = "trajectory_superposition.csv".to_string();
            write_trajectory(ctx, &file, &traj)?;
            let fidelity = state_swap_fidelity(&input, &params, &nominal, sim.steps)?;
            Some(SuperpositionRecord {
                re: s.re,
                im: s.im,
                fidelity,
                file,
            })
        }
        None => None,
    };

    let noise = match &cfg.noise {
        Some(n) => {
            let seed = cfg.resolve_seed(ctx.seed, n.seed);
            let spec = n.channels().to_spec(n.samples, seed)?;
            let options = McOptions {
                steps: sim.steps,
                mode: sim.mode,
            };
            let stats =
                monte_carlo_fidelity(&params, &spec, &PhysicalConstants::default(), &options)?;
            Some(NoiseRecord {
                samples: n.samples,
                seed,
                stats,
            })
        }
        None => None,
    };

    let summary = SimulateSummary {
        gate: *gate,
        steps: sim.steps,
        mode: sim.mode,
        fidelity: fidelity.value,
        per_input: fidelity.per_input,
        t_rr: inputs[1].t_rr,
        inputs,
        effective_pulse_area,
        large_detuning_ok: params.large_detuning_ok(),
        effective_comparison,
        superposition,
        noise,
    };
    ctx.write_json("summary.json", &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetReport {
    pub seed: u64,
    pub samples: usize,
    pub steps: usize,
    /// SHA-256 of the canonical JSON of the gate and budget settings.
    pub params_hash: String,
    pub gate: GateConfig,
    pub budget: ErrorBudget,
}

fn params_hash<T: Serialize>(value: &T) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn run_budget(cfg: &RunConfig, ctx: &Context) -> Result<BudgetReport, CliError> {
    let gate = cfg.require_gate()?;
    let params = gate.to_params()?;
    let mut budget_cfg = cfg
        .budget
        .ok_or_else(|| CliError::Config("missing [budget] section".into()))?;
    budget_cfg.seed = cfg.resolve_seed(ctx.seed, budget_cfg.seed);
    if budget_cfg.samples == 0 {
        return Err(CliError::Config(
            "[budget] samples must be at least 1".into(),
        ));
    }
    let sources = budget_cfg.to_sources(budget_cfg.seed)?;
    let options = McOptions {
        steps: budget_cfg.steps,
        mode: budget_cfg.mode,
    };
    let budget = error_budget(&params, &sources, &PhysicalConstants::default(), &options)?;

    let report = BudgetReport {
        seed: budget_cfg.seed,
        samples: budget_cfg.samples,
        steps: budget_cfg.steps,
        params_hash: params_hash(&(gate, &budget_cfg))?,
        gate: *gate,
        budget,
    };
    ctx.write_json("budget.json", &report)?;
    ctx.write_text("budget.txt", &budget_table(&report))?;
    Ok(report)
}

/// Aligned plain-text rendering of a budget.
pub fn budget_table(report: &BudgetReport) -> String {
    let b = &report.budget;
    let mut s = String::new();
    let rule = "-".repeat(62);
    let _ = writeln!(
        s,
        "{:<22}{:>14}{:>14}{:>12}",
        "error source", "infidelity", "mean F", "stderr"
    );
    let _ = writeln!(s, "{rule}");
    let _ = writeln!(
        s,
        "{:<22}{:>14.4e}{:>14.6}{:>12}",
        "Rydberg decay", b.decay_infidelity, b.perfect_fidelity, "-"
    );
    for (name, src) in b.sources() {
        match src {
            Some(SourceBudget {
                infidelity, stats, ..
            }) => {
                let _ = writeln!(
                    s,
                    "{name:<22}{infidelity:>14.4e}{:>14.6}{:>12.2e}",
                    stats.mean, stats.stderr
                );
            }
            None => {
                let _ = writeln!(s, "{name:<22}{:>14}{:>14}{:>12}", "-", "-", "-");
            }
        }
    }
    let _ = writeln!(s, "{rule}");
    let _ = writeln!(s, "{:<22}{:>14.6}", "perfect F", b.perfect_fidelity);
    let _ = writeln!(
        s,
        "{:<22}{:>14.6}",
        "conservative F", b.conservative_fidelity
    );
    if let Some(j) = &b.joint {
        let _ = writeln!(
            s,
            "{:<22}{:>14.6}{:>14}{:>12.2e}",
            "joint F", j.mean, "", j.stderr
        );
    }
    let _ = writeln!(
        s,
        "samples {}  seed {}  steps {}  hash {}",
        report.samples,
        report.seed,
        report.steps,
        &report.params_hash[..16]
    );
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub x: f64,
    pub stats: McStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepCurve {
    pub name: String,
    pub file: String,
    pub points: Vec<SweepPoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub seed: u64,
    pub samples: usize,
    pub curves: Vec<SweepCurve>,
}

pub const SWEEP_HEADER: &str = "x,mean_F,stddev,stderr,n";

pub fn run_sweep(cfg: &RunConfig, ctx: &Context) -> Result<SweepReport, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    sweep.validate()?;
    let seed = cfg.resolve_seed(ctx.seed, sweep.seed);
    let options = McOptions {
        steps: sweep.steps,
        mode: sweep.mode,
    };
    let constants = PhysicalConstants::default();

    // Validate everything before the first expensive run.
    let params: Vec<_> = sweep
        .curves
        .iter()
        .map(|c| c.gate.to_params())
        .collect::<Result<_, _>>()?;
    let specs: Vec<_> = sweep
        .grid
        .iter()
        .map(|&x| sweep.channels_at(x).to_spec(sweep.samples, seed))
        .collect::<Result<_, _>>()?;

    let mut curves = Vec::with_capacity(sweep.curves.len());
    for (curve, p) in sweep.curves.iter().zip(&params) {
        let mut points = Vec::with_capacity(specs.len());
        let mut csv = format!("{SWEEP_HEADER}\n");
        for (&x, spec) in sweep.grid.iter().zip(&specs) {
            let stats = monte_carlo_fidelity(p, spec, &constants, &options)?;
            let _ = writeln!(
                csv,
                "{x},{},{},{},{}",
                stats.mean, stats.stddev, stats.stderr, stats.n
            );
            points.push(SweepPoint { x, stats });
        }
        let file = format!("sweep_{}.csv", curve.name);
        ctx.write_text(&file, &csv)?;
        curves.push(SweepCurve {
            name: curve.name.clone(),
            file,
            points,
        });
    }
    let report = SweepReport {
        axis: sweep.axis,
        seed,
        samples: sweep.samples,
        curves,
    };
    ctx.write_json("sweep.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeReport {
    pub seed: u64,
    pub best_fitness: f64,
    pub generations: usize,
    pub evaluations: usize,
    pub gate: GateConfig,
}

pub const OPTIMIZE_LOG_HEADER: &str = "generation,best_fitness,mean_fitness";

pub fn run_optimize(cfg: &RunConfig, ctx: &Context) -> Result<OptimizeReport, CliError> {
    let opt = cfg
        .optimize
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [optimize] section".into()))?;
    let space = opt.to_space()?;
    let options = opt.ga.to_options(cfg.resolve_seed(ctx.seed, opt.ga.seed))?;
    let result = ga_optimize(&space, &options)?;

    let mut log = format!("{OPTIMIZE_LOG_HEADER}\n");
    for g in &result.history {
        let _ = writeln!(
            log,
            "{},{},{}",
            g.generation, g.best_fitness, g.mean_fitness
        );
    }
    ctx.write_text("optimize_log.csv", &log)?;

    let report = OptimizeReport {
        seed: result.seed,
        best_fitness: result.best_fitness,
        generations: result.history.len(),
        evaluations: result.evaluations,
        gate: GateConfig::from_params(&result.best),
    };
    ctx.write_json("optimize_result.json", &report)?;
    Ok(report)
}

/// Write the configuration as it was understood, for provenance.
pub fn write_resolved_config(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    ctx.write_text("config.resolved.toml", &cfg.to_toml())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_is_symmetric_and_zero_on_self() {
        let a = [0.1, 0.5, 0.9];
        let b = [0.2, 0.4, 0.9];
        assert_eq!(max_abs_diff(&a, &a), 0.0);
        assert!((max_abs_diff(&a, &b) - 0.1).abs() < 1e-15);
        assert_eq!(max_abs_diff(&a, &b), max_abs_diff(&b, &a));
    }

    #[test]
    fn hash_depends_on_content() {
        let a = params_hash(&(1, "x")).unwrap();
        assert_eq!(a, params_hash(&(1, "x")).unwrap());
        assert_ne!(a, params_hash(&(2, "x")).unwrap());
        assert_eq!(a.len(), 64);
    }
}
