//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_DEVIATIONS` are expected to fail; their analysis
//! lives with the project notes. The run fails if any other criterion fails,
//! or if a known deviation starts passing (so the list cannot go stale).

use std::process::ExitCode;
use std::time::Instant;

use antiblockade::effective::{
    effective_closed_form, effective_from_commutators, simulate_effective,
};
use antiblockade::model::RR;
use antiblockade::optimizer::SearchSpace;
use antiblockade::presets::{self, noise as np, Case};
use antiblockade::units::mhz;
use antiblockade::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_DEVIATIONS: &[u32] = &[4, 6, 7, 9];

const SEED: u64 = 1;
const SAMPLES: usize = 300;
const STEPS: usize = DEFAULT_STEPS;
const GAUSSIAN_SEEDS: [u64; 3] = [1, 2, 3];
const FAST_GATE_SEED: u64 = 1;

struct Report {
    ok: bool,
    lines: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self {
            ok: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, pass: bool, what: String) {
        self.ok &= pass;
        self.lines
            .push(format!("    [{}] {what}", if pass { "ok" } else { "x " }));
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn rel_within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn perfect(p: &GateParameters, steps: usize) -> f64 {
    average_gate_fidelity(
        p,
        &NoiseRealization::nominal(p),
        FidelityMode::Uhlmann,
        steps,
    )
    .unwrap()
    .value
}

fn mc(p: &GateParameters, spec: &NoiseSpec) -> McStats {
    monte_carlo_fidelity(
        p,
        spec,
        &PhysicalConstants::default(),
        &McOptions::default(),
    )
    .unwrap()
}

fn label(case: Case, modified: bool) -> String {
    format!("{case:?} {}", if modified { "q!=0" } else { "q=0" })
}

fn optimised_gate_fidelities() -> Report {
    let mut r = Report::new();
    for case in Case::ALL {
        for modified in [false, true] {
            let p = presets::optimised_gate(case, modified);
            let t0 = Instant::now();
            let f = perfect(&p, STEPS);
            let secs = t0.elapsed().as_secs_f64();
            let want = presets::optimised_gate_fidelity(case, modified);
            r.check(
                within(f, want, 5e-4) && secs < 10.0,
                format!(
                    "{}: F = {f:.5} (reference {want}), {secs:.2} s",
                    label(case, modified)
                ),
            );
        }
    }
    r
}

fn t_rr(p: &GateParameters) -> f64 {
    let traj = evolve(
        &QuantumState::basis(1),
        p,
        &NoiseRealization::nominal(p),
        STEPS,
    )
    .unwrap();
    time_in_state(&traj, RR)
}

fn time_spent() -> Report {
    let mut r = Report::new();
    let q0 = t_rr(&presets::optimised_gate(Case::Triangle, false));
    let q = t_rr(&presets::optimised_gate(Case::Triangle, true));
    r.check(
        rel_within(q0, 0.0926, 0.05),
        format!("Triangle q=0: T_rr = {q0:.4} us (0.0926)"),
    );
    r.check(
        rel_within(q, 0.0248, 0.05),
        format!("Triangle q!=0: T_rr = {q:.4} us (0.0248)"),
    );
    let reduction = (q0 - q) / q0;
    r.check(
        reduction >= 0.70,
        format!("reduction {:.1} % (>= 70 %)", 100.0 * reduction),
    );
    for (case, want) in [(Case::Gaussian, 0.0238), (Case::Composite, 0.0254)] {
        let t = t_rr(&presets::optimised_gate(case, true));
        r.check(
            rel_within(t, want, 0.05),
            format!("{case:?} q!=0: T_rr = {t:.4} us ({want})"),
        );
    }
    r
}

fn pulse_areas() -> Report {
    let mut r = Report::new();
    for (case, want) in [
        (Case::Triangle, 3.2600),
        (Case::Gaussian, 3.2318),
        (Case::Composite, 3.1946),
    ] {
        let a = effective_pulse_area(&presets::optimised_gate(case, true), STEPS).unwrap();
        r.check(
            a.is_valid() && rel_within(a.area, want, 0.02),
            format!("{case:?}: area {:.4} ({want})", a.area),
        );
    }
    r
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn effective_oracle() -> Report {
    let mut r = Report::new();
    for case in Case::ALL {
        for modified in [false, true] {
            let p = GateParameters {
                gamma: 0.0,
                ..presets::optimised_gate(case, modified)
            };
            let full = evolve(
                &QuantumState::basis(1),
                &p,
                &NoiseRealization::nominal(&p),
                STEPS,
            )
            .unwrap();
            let eff = simulate_effective(1, &p, STEPS).unwrap();
            let d = [
                max_diff(&full.population_series(1), &eff.p01),
                max_diff(&full.population_series(4), &eff.p10),
                max_diff(&full.population_series(RR), &eff.prr),
            ];
            r.check(
                d.iter().all(|&x| x <= 0.06),
                format!(
                    "{}: max |dP| (01, 10, rr) = ({:.3}, {:.3}, {:.3})",
                    label(case, modified),
                    d[0],
                    d[1],
                    d[2]
                ),
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (o1, o2) = (
            mhz(rng.random_range(0.0..12.0)),
            mhz(rng.random_range(0.0..12.0)),
        );
        let mut p = presets::optimised_gate(Case::Triangle, true);
        p.delta1 = mhz(rng.random_range(10.0..40.0));
        p.q = mhz(rng.random_range(0.0..10.0));
        p.pulse1 = PulseShape::Triangle { omega_max: o1 };
        p.pulse2 = PulseShape::Triangle { omega_max: o2 };
        // Triangle pulses peak at T_g/2, so the drive there is exactly (o1, o2).
        let h = effective_from_commutators(0.5 * p.t_gate, &p).unwrap();
        let c = effective_closed_form(o1, o2, p.delta1, p.delta2(), p.q);
        worst = worst.max((h - c).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    r.check(
        worst <= 1e-10,
        format!("commutator vs closed form over 100 draws: max entry diff {worst:.2e}"),
    );
    r
}

fn interaction_spread() -> Report {
    let mut r = Report::new();
    for (modified, want_f, want_inf) in [(false, 0.87, 1.33e-1), (true, 0.97, 7.52e-2)] {
        let p = presets::optimised_gate(Case::Gaussian, modified);
        let tag = label(Case::Gaussian, modified);
        let u = mc(&p, &np::uniform_interaction(0.05, SAMPLES, SEED));
        r.check(
            within(u.mean, want_f, 0.02),
            format!("{tag}: F(dV/V = 0.05) = {:.4} ({want_f})", u.mean),
        );
        let inf = perfect(&p, STEPS) - mc(&p, &np::position(SAMPLES, SEED)).mean;
        r.check(
            rel_within(inf, want_inf, 0.25),
            format!("{tag}: position infidelity at 20 uK = {inf:.3e} ({want_inf:.3e})"),
        );
    }
    r
}

fn row(b: &ErrorBudget, name: &str) -> f64 {
    b.sources()
        .iter()
        .find(|(n, _)| *n == name)
        .and_then(|(_, s)| s.map(|s| s.infidelity))
        .unwrap()
}

fn budget(p: &GateParameters) -> ErrorBudget {
    error_budget(
        p,
        &BudgetSources::standard(SAMPLES, SEED),
        &PhysicalConstants::default(),
        &McOptions::default(),
    )
    .unwrap()
}

fn gaussian_budget() -> Report {
    let mut r = Report::new();
    let b = budget(&presets::optimised_gate(Case::Gaussian, true));
    let factor2 = |x: f64, want: f64| x >= want / 2.0 && x <= want * 2.0;
    let (i, ph, d, bm) = (
        row(&b, "intensity"),
        row(&b, "phase"),
        row(&b, "doppler"),
        row(&b, "beam"),
    );
    r.check(
        factor2(i, 3.37e-3),
        format!("intensity {i:.3e} (3.37e-3, factor 2)"),
    );
    r.check(
        factor2(ph, 6.68e-3),
        format!("phase {ph:.3e} (6.68e-3, factor 2)"),
    );
    r.check(d <= 2e-4, format!("doppler {d:.3e} (<= 2e-4)"));
    r.check(bm <= 1e-4, format!("beam {bm:.3e} (<= 1e-4)"));
    r.check(
        b.conservative_fidelity >= 0.90,
        format!(
            "q!=0 conservative F {:.4} (>= 0.90)",
            b.conservative_fidelity
        ),
    );
    let b0 = budget(&presets::optimised_gate(Case::Gaussian, false));
    r.check(
        b0.conservative_fidelity <= b.conservative_fidelity - 0.05,
        format!(
            "q=0 conservative F {:.4} (<= q!=0 - 0.05)",
            b0.conservative_fidelity
        ),
    );
    r
}

fn fast_gates() -> Report {
    let mut r = Report::new();
    let input = presets::arbitrary_input();
    for (name, p, swap_want) in [
        ("10 MHz cap", presets::fast_gate_10mhz(), 0.9995),
        ("50 MHz cap", presets::fast_gate_50mhz(), 0.9994),
    ] {
        let f = perfect(&p, STEPS);
        r.check(
            within(f, 0.9995, 5e-4),
            format!("{name}: F = {f:.5} at T_g = {} us (0.9995)", p.t_gate),
        );
        let s = state_swap_fidelity(&input, &p, &NoiseRealization::nominal(&p), STEPS).unwrap();
        r.check(
            within(s, swap_want, 5e-4),
            format!("{name}: state-swap F = {s:.4} ({swap_want})"),
        );
    }
    let b = budget(&presets::fast_gate_50mhz());
    let pos = row(&b, "position");
    r.check(
        rel_within(pos, 1.15e-2, 0.30),
        format!("50 MHz cap: position row {pos:.3e} (1.15e-2 +-30 %)"),
    );
    let (top, top_v) = ["position", "doppler", "intensity", "phase", "beam"]
        .iter()
        .map(|n| (*n, row(&b, n)))
        .fold(("", f64::MIN), |a, x| if x.1 > a.1 { x } else { a });
    r.check(
        top == "intensity",
        format!("50 MHz cap: dominant technical row: {top} ({top_v:.3e}), expected intensity"),
    );
    r
}

fn optimizer() -> Report {
    let mut r = Report::new();
    for seed in GAUSSIAN_SEEDS {
        let t0 = Instant::now();
        let opts = GaOptions {
            seed,
            ..GaOptions::default()
        };
        let res = ga_optimize(&SearchSpace::gaussian_fixed_duration(), &opts).unwrap();
        r.check(
            res.best_fitness >= 0.999 && res.history.len() <= 200 && opts.population == 64,
            format!(
                "Gaussian 1 us seed {seed}: F = {:.5} after {} generations ({:.0} s)",
                res.best_fitness,
                res.history.len(),
                t0.elapsed().as_secs_f64()
            ),
        );
    }

    let t0 = Instant::now();
    let space = SearchSpace::gaussian_duration_search(mhz(50.0));
    let res = ga_optimize(
        &space,
        &GaOptions {
            seed: FAST_GATE_SEED,
            ..GaOptions::default()
        },
    )
    .unwrap();
    r.check(
        res.best.t_gate <= 0.15 && res.best_fitness >= 0.999,
        format!(
            "cap 50 MHz seed {FAST_GATE_SEED}: T_g = {:.4} us, F = {:.5} ({:.0} s)",
            res.best.t_gate,
            res.best_fitness,
            t0.elapsed().as_secs_f64()
        ),
    );

    let quick = GaOptions {
        population: 12,
        generations: 4,
        seed: 5,
        final_steps: 1000,
        ..GaOptions::default()
    };
    let same = [SearchSpace::gaussian_fixed_duration(), space]
        .iter()
        .all(|s| ga_optimize(s, &quick).unwrap() == ga_optimize(s, &quick).unwrap());
    r.check(
        same,
        "repeated seeds reproduce identical results in both modes".into(),
    );
    r
}

fn invariants() -> Report {
    let mut r = Report::new();
    let mut sets: Vec<(String, GateParameters)> = Vec::new();
    for case in Case::ALL {
        for modified in [false, true] {
            sets.push((
                label(case, modified),
                presets::optimised_gate(case, modified),
            ));
        }
    }
    sets.push(("10 MHz cap".into(), presets::fast_gate_10mhz()));
    sets.push(("50 MHz cap".into(), presets::fast_gate_50mhz()));

    let (mut drift, mut herm, mut eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for (_, p) in &sets {
        let nominal = NoiseRealization::nominal(p);
        let inputs = [0, 1, 4, 5].map(QuantumState::basis);
        for s in inputs
            .iter()
            .chain([QuantumState::pure(&presets::arbitrary_input().ket()).unwrap()].iter())
        {
            let d = evolve(s, p, &nominal, STEPS).unwrap().diagnostics;
            drift = drift.max(d.max_trace_drift);
            herm = herm.max(d.max_hermiticity_error);
            eig = eig.min(d.min_eigenvalue);
        }
    }
    r.check(drift <= 1e-8, format!("max trace drift {drift:.2e}"));
    r.check(herm <= 1e-10, format!("max Hermiticity error {herm:.2e}"));
    r.check(eig >= -1e-8, format!("min eigenvalue {eig:.2e}"));

    for (name, p) in sets.iter().take(6) {
        let nominal = NoiseRealization::nominal(p);
        let a = evolve(&QuantumState::basis(1), p, &nominal, STEPS).unwrap();
        let b = evolve(&QuantumState::basis(1), p, &nominal, 2 * STEPS).unwrap();
        let halving = (0..DIM)
            .map(|i| (a.rho_final.population(i) - b.rho_final.population(i)).abs())
            .fold(0.0, f64::max);
        r.check(
            halving < 1e-8,
            format!("{name}: step halving changes final populations by {halving:.2e}"),
        );

        let fine = 5;
        let c = evolve_phase_frame(&QuantumState::basis(1), p, &nominal, fine * STEPS).unwrap();
        let frame = a
            .populations
            .iter()
            .enumerate()
            .flat_map(|(k, pa)| {
                pa.iter()
                    .zip(&c.populations[fine * k])
                    .map(|(x, y)| (x - y).abs())
            })
            .fold(0.0, f64::max);
        r.check(
            frame <= 1e-6,
            format!("{name}: static vs phase frame max population diff {frame:.2e}"),
        );
    }
    r
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Report); 9] = [
        (1, "optimised gate fidelities", optimised_gate_fidelities),
        (2, "time spent in |rr>", time_spent),
        (3, "effective pulse areas", pulse_areas),
        (4, "effective-model oracle", effective_oracle),
        (5, "interaction-spread endpoints", interaction_spread),
        (6, "Gaussian error budget", gaussian_budget),
        (7, "duration-optimised gates", fast_gates),
        (8, "genetic optimiser", optimizer),
        (9, "numerical invariants", invariants),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());

    let mut unexpected = Vec::new();
    let mut summary = Vec::new();
    for (id, name, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let t0 = Instant::now();
        let report = run();
        let known = KNOWN_DEVIATIONS.contains(&id);
        let status = match (report.ok, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => "FAIL",
            (true, true) => "PASS (listed as known deviation)",
        };
        if report.ok == known {
            unexpected.push(id);
        }
        println!(
            "criterion {id} {status}: {name} [{:.1} s]",
            t0.elapsed().as_secs_f64()
        );
        for line in &report.lines {
            println!("{line}");
        }
        summary.push(format!("criterion {id}: {status}"));
    }
    println!("\nsummary");
    for s in &summary {
        println!("  {s}");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
