//! Configuration parsing, output layouts and a small self-convergence run.

use vacuum_euler::harness::io::{read_checkpoint, write_checkpoint, write_iteration_trace, write_time_series};
use vacuum_euler::harness::{builtin_scenarios, converge, Config, ConvergeSettings, Scenario, DEFAULT_SEED};
use vacuum_euler::Error;

fn scratch_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ve-harness-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn builtins_cover_four_exponents() {
    // k = (gamma + 1) / (2 (gamma - 1)), s = ceil(k) + 3
    let expect = [("gamma3", 1.0, 4), ("gamma5_3", 2.0, 5), ("gamma2", 1.5, 5), ("gamma4", 5.0 / 6.0, 4)];
    let got = builtin_scenarios();
    assert_eq!(got.len(), expect.len());
    for (sc, (name, k, s)) in got.iter().zip(expect) {
        assert_eq!(sc.name, name);
        let p = sc.params().unwrap();
        assert!((p.k() - k).abs() < 1e-14);
        assert_eq!(p.s(), s);
    }
}

#[test]
fn config_accepts_builtin_and_inline_scenarios() {
    let c = Config::from_json("{}").unwrap();
    assert_eq!(c.scenario().unwrap().name, "gamma3");
    assert_eq!(c.seed(), DEFAULT_SEED);
    let c = Config::from_json(r#"{"scenario": "gamma4", "seed": 7}"#).unwrap();
    assert_eq!(c.scenario().unwrap().gamma, 4.0);
    assert_eq!(c.seed(), 7);
    let c = Config::from_json(r#"{"scenario": {"name": "mine", "gamma": 2.5, "n": 64, "t_final": 0.2}}"#).unwrap();
    let sc = c.scenario().unwrap();
    assert_eq!((sc.n, sc.t_final, sc.dt), (64, 0.2, 1e-3));
}

#[test]
fn config_errors_are_configuration_errors() {
    for bad in [
        r#"{"scenario": "gamma7"}"#,
        r#"{"colour": 1}"#,
        r#"{"scenario": {"name": "x", "gamma": 0.9}}"#,
        r#"{"scenario": {"name": "x", "gamma": 3, "n": 4}}"#,
        r#"{"converge": {"ns": [64, 96, 128]}}"#,
        r#"{"verify": {"criteria": [0]}}"#,
        r#"{"picard": {"horizon_fraction": 1.5}}"#,
        "not json",
    ] {
        match Config::from_json(bad) {
            Err(Error::Config(_)) => {}
            other => panic!("{bad}: expected a configuration error, got {other:?}"),
        }
    }
}

fn short(name: &str, n: usize, t: f64) -> Scenario {
    let sc = builtin_scenarios().into_iter().find(|s| s.name == name).unwrap();
    Scenario { t_final: t, record_every: 5, ..sc.with_n(n) }
}

#[test]
fn time_series_and_checkpoint_layouts() {
    let dir = scratch_dir("io");
    let sc = short("gamma2", 32, 0.02);
    let run = sc.simulate().unwrap();
    let k = sc.params().unwrap().k();
    let path = dir.join("ts.csv");
    write_time_series(&path, &run, k).unwrap();
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    // s = 5 for k = 3/2, so levels 0..=5
    let expected: Vec<String> = ["t", "zeroth", "full", "level_0", "level_1", "level_2", "level_3", "level_4", "level_5"]
        .into_iter()
        .chain(["phi_over_xi_min", "phi_over_xi_max", "boundary_position", "cfl"])
        .map(String::from)
        .collect();
    assert_eq!(header, expected);
    let rows: Vec<Vec<f64>> =
        rdr.records().map(|r| r.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect()).collect();
    assert_eq!(rows.len(), run.records.len());
    for r in &rows {
        // the level columns add up to the full energy
        let sum: f64 = r[3..9].iter().sum();
        assert!((sum - r[2]).abs() <= 1e-12 * r[2]);
    }

    let cp = dir.join("cp.json");
    write_checkpoint(&cp, run.final_state(), run.t_star).unwrap();
    let (back, t) = read_checkpoint(&cp).unwrap();
    assert_eq!(t, run.t_star);
    assert_eq!(back.psi.values, run.final_state().psi.values);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn iteration_trace_layout() {
    use vacuum_euler::evolution::{picard_iterate, PicardConfig};
    let dir = scratch_dir("trace");
    // prepared gamma = 3 data need n >= 56
    let sc = short("gamma3", 64, 0.02);
    let cfg = PicardConfig {
        params: sc.params().unwrap(),
        dt: 2e-3,
        horizon: 0.02,
        n_max: 3,
        tol: 0.0,
        reconstruction: Default::default(),
    };
    let res = picard_iterate(&cfg, &sc.initial_state().unwrap()).unwrap();
    let path = dir.join("trace.csv");
    write_iteration_trace(&path, &res.trace).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,approx_energy,phi_over_xi_min,phi_over_xi_max,diff_to_previous,fg_residual,identity_residual"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[4], "");
    assert_eq!(lines.count(), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn coarse_grids_cannot_hold_prepared_data() {
    match short("gamma3", 32, 0.02).initial_state() {
        Err(Error::Admissibility(msg)) => assert!(msg.contains("refine the grid"), "{msg}"),
        other => panic!("expected an admissibility error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn small_self_convergence_run() {
    let settings = ConvergeSettings { ns: vec![64, 128, 256], t: 0.02, ..ConvergeSettings::default() };
    let rep = converge(&builtin_scenarios()[0], &settings).unwrap();
    assert_eq!(rep.rows.len(), 3);
    assert!(rep.rows[0].order_phi_over_xi.is_some() && rep.rows[1].order_phi_over_xi.is_none());
    assert!(rep.min_order_phi_over_xi > 1.5, "order {}", rep.min_order_phi_over_xi);
}
