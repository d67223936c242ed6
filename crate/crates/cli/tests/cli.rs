use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use antiblockade::presets::{self, Case};
use antiblockade_cli::config::GateConfig;
use antiblockade_cli::RunConfig;
use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn preset(name: &str) -> PathBuf {
    repo().join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_antiblockade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_schema(schema: &str, doc: &Value) {
    let schema: Value = read_json(&repo().join("schema").join(schema));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn csv_rows(path: &Path, header: &[&str]) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let h: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(h, header);
    r.records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .map(|v| v.parse::<f64>().unwrap())
                .collect()
        })
        .collect()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

const TRAJECTORY_HEADER: [&str; 17] = [
    "t_us",
    "p_00",
    "p_01",
    "p_0r",
    "p_0_alpha",
    "p_10",
    "p_11",
    "p_1r",
    "p_1_alpha",
    "p_r0",
    "p_r1",
    "p_rr",
    "p_r_alpha",
    "p_alpha_0",
    "p_alpha_1",
    "p_alpha_r",
    "p_alpha_alpha",
];

#[test]
fn simulate_triangle_modified_reports_fidelity_and_time_spent() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("simulate", &preset("gate_triangle_q.toml"), dir.path(), &[]);
    ok(&o);
    let s = read_json(&dir.path().join("summary.json"));
    assert_schema("summary.schema.json", &s);
    let f = s["fidelity"].as_f64().unwrap();
    assert!((f - 0.9996).abs() <= 5e-4, "F = {f}");
    let t_rr = s["t_rr"].as_f64().unwrap();
    assert!((t_rr - 0.0248).abs() <= 0.05 * 0.0248, "T_rr = {t_rr}");
    assert_eq!(s["effective_comparison"].as_array().unwrap().len(), 2);

    for label in ["00", "01", "10", "11"] {
        let rows = csv_rows(
            &dir.path().join(format!("trajectory_{label}.csv")),
            &TRAJECTORY_HEADER,
        );
        assert_eq!(rows.len(), 4001);
        assert_eq!(rows[0][0], 0.0);
        assert!((rows.last().unwrap()[0] - 1.0).abs() < 1e-9);
        for row in &rows {
            let total: f64 = row[1..].iter().sum();
            assert!((total - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn dark_pulses_give_one_half_and_no_dynamics() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("gate_gaussian_q.toml"))
        .unwrap()
        .replace("omega_max = 5.114", "omega_max = 0.0")
        .replace("omega_max = 8.948", "omega_max = 0.0");
    let cfg = write_config(dir.path(), &text);
    ok(&run_config("simulate", &cfg, &dir.path().join("out"), &[]));
    let s = read_json(&dir.path().join("out/summary.json"));
    assert!((s["fidelity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    for (k, label) in ["00", "01", "10", "11"].iter().enumerate() {
        let rows = csv_rows(
            &dir.path().join(format!("out/trajectory_{label}.csv")),
            &TRAJECTORY_HEADER,
        );
        let col = [1, 2, 5, 6][k];
        assert!(rows.iter().all(|r| (r[col] - 1.0).abs() < 1e-12));
    }
}

#[test]
fn fast_gate_preset_runs_at_short_duration() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_config(
        "simulate",
        &preset("fast_gate_50mhz.toml"),
        dir.path(),
        &[],
    ));
    let s = read_json(&dir.path().join("summary.json"));
    assert_schema("summary.schema.json", &s);
    assert_eq!(s["gate"]["t_gate"].as_f64().unwrap(), 0.1177);
    let f = s["fidelity"].as_f64().unwrap();
    assert!((f - 0.9995).abs() <= 5e-4, "F = {f}");
    let rows = csv_rows(
        &dir.path().join("trajectory_superposition.csv"),
        &TRAJECTORY_HEADER,
    );
    assert!((rows.last().unwrap()[0] - 0.1177).abs() < 1e-9);
}

const NULL_BUDGET: &str = r#"
[budget]
samples = 1
seed = 3
steps = 1000

[budget.position]
kind = "uniform"
dv_over_v = 0.0

[budget.doppler]
temperature = 0.0

[budget.intensity]
delta_omega = 0.0

[budget.phase]
gamma0_max = 0.0

[budget.beam]
waist = 2.0
sigma = 0.0
"#;

#[test]
fn zero_width_noise_gives_zero_budget_rows() {
    let dir = tempfile::tempdir().unwrap();
    let gate = std::fs::read_to_string(preset("gate_gaussian_q.toml")).unwrap();
    let gate = gate.split("[simulate]").next().unwrap();
    let cfg = write_config(dir.path(), &format!("{gate}{NULL_BUDGET}"));
    let out = dir.path().join("out");
    ok(&run_config("budget", &cfg, &out, &[]));
    let b = read_json(&out.join("budget.json"));
    assert_schema("budget.schema.json", &b);
    for row in ["position", "doppler", "intensity", "phase", "beam"] {
        assert_eq!(
            b["budget"][row]["infidelity"].as_f64().unwrap(),
            0.0,
            "{row}"
        );
    }
    assert_eq!(b["seed"], 3);
    assert_eq!(
        b["budget"]["conservative_fidelity"],
        b["budget"]["perfect_fidelity"]
    );
    let table = std::fs::read_to_string(out.join("budget.txt")).unwrap();
    assert!(table.contains("conservative F"));
    let hash = b["params_hash"].as_str().unwrap().to_string();

    // The seed participates in the provenance hash.
    ok(&run_config("budget", &cfg, &out, &["--seed", "4"]));
    let b = read_json(&out.join("budget.json"));
    assert_eq!(b["seed"], 4);
    assert_ne!(b["params_hash"].as_str().unwrap(), hash);
}

#[test]
fn sweep_without_spread_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("sweep_dv_over_v.toml"))
        .unwrap()
        .replace(
            "grid = [0.0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04, 0.045, 0.05]",
            "grid = [0.0, 0.0]",
        )
        .replace("samples = 300", "samples = 2")
        .replace("steps = 4000", "steps = 1000");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    ok(&run_config("sweep", &cfg, &out, &["--threads", "1"]));
    let report = read_json(&out.join("sweep.json"));
    assert_schema("sweep.schema.json", &report);
    for name in ["q0", "q"] {
        let rows = csv_rows(
            &out.join(format!("sweep_{name}.csv")),
            &["x", "mean_F", "stddev", "stderr", "n"],
        );
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][1], rows[1][1]);
        assert_eq!(rows[0][2], 0.0);
        assert_eq!(rows[0][4], 2.0);
    }
}

const POINT_SEARCH: &str = r#"
[optimize]
family = "gaussian"
t_gate = 1.0
rabi_cap = 10.0

[optimize.bounds]
omega1_max = [5.114, 5.114]
width1 = [0.257, 0.257]
omega2_max = [8.948, 8.948]
width2 = [0.351, 0.351]
delta1 = [22.11, 22.11]
q = [5.037, 5.037]

[optimize.ga]
population = 8
generations = 2
seed = 11
search_steps = 1000
final_steps = 1000
"#;

#[test]
fn point_bounds_echo_parameters_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), POINT_SEARCH);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run_config("optimize", &cfg, &a, &[]));
    ok(&run_config("optimize", &cfg, &b, &[]));
    let ja = std::fs::read_to_string(a.join("optimize_result.json")).unwrap();
    assert_eq!(
        ja,
        std::fs::read_to_string(b.join("optimize_result.json")).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(a.join("optimize_log.csv")).unwrap(),
        std::fs::read_to_string(b.join("optimize_log.csv")).unwrap()
    );

    let r: Value = serde_json::from_str(&ja).unwrap();
    assert_schema("optimize_result.schema.json", &r);
    let gate: GateConfig = serde_json::from_value(r["gate"].clone()).unwrap();
    let want = GateConfig::from_params(&presets::optimised_gate(Case::Gaussian, true));
    for (got, exp) in [(gate.delta1, want.delta1), (gate.q, want.q)] {
        assert!((got - exp).abs() < 1e-9);
    }
    assert_eq!(r["seed"], 11);
    let log = csv_rows(
        &a.join("optimize_log.csv"),
        &["generation", "best_fitness", "mean_fitness"],
    );
    assert!(!log.is_empty());
    assert!(r["best_fitness"].as_f64().unwrap() > 0.999);
}

#[test]
fn unknown_key_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[gate]\ndelta1 = 1.0\nspeed = 3\n");
    let o = run_config("simulate", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("run.toml:"), "{err}");
    assert!(err.contains("speed"), "{err}");
}

#[test]
fn invalid_values_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("gate_gaussian_q.toml"))
        .unwrap()
        .replace("t_gate = 1.0", "t_gate = -1.0");
    let cfg = write_config(dir.path(), &text);
    assert_eq!(
        run_config("simulate", &cfg, &dir.path().join("out"), &[])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        run_config("simulate", &missing, &dir.path().join("out"), &[])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn unstable_integration_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("gate_triangle_q.toml"))
        .unwrap()
        .replace("omega_max = 10.947", "omega_max = 1000000.0")
        .replace("steps = 4000", "steps = 1000");
    let cfg = write_config(dir.path(), &text);
    let o = run_config("simulate", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn every_preset_round_trips() {
    let mut n = 0;
    for entry in std::fs::read_dir(repo().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        if let Some(g) = &cfg.gate {
            g.to_params().unwrap();
        }
        if let Some(o) = &cfg.optimize {
            o.to_space().unwrap();
        }
        n += 1;
    }
    assert!(n >= 18);
}

#[test]
fn table_presets_match_library_parameters() {
    for case in Case::ALL {
        for modified in [false, true] {
            let name = format!(
                "gate_{}_{}.toml",
                format!("{case:?}").to_lowercase(),
                if modified { "q" } else { "q0" }
            );
            let cfg = RunConfig::load(&preset(&name)).unwrap();
            let got = cfg.gate.unwrap().to_params().unwrap();
            let want = presets::optimised_gate(case, modified);
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
            assert!(
                close(got.delta1, want.delta1) && close(got.q, want.q) && close(got.v0, want.v0),
                "{name}"
            );
            assert!(close(got.gamma, want.gamma), "{name}");
            assert_eq!(
                format!("{:.9?}", got.pulse1),
                format!("{:.9?}", want.pulse1),
                "{name}"
            );
            assert_eq!(
                format!("{:.9?}", got.pulse2),
                format!("{:.9?}", want.pulse2),
                "{name}"
            );
        }
    }
}
