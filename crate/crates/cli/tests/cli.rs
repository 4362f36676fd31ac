use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use snetcalc::{optimize_closed_form, MmooParams, NetworkSpec, Objective, ThetaGrid, TrafficModel};
use snetcalc_cli::{read_rows, Method, Provenance, ReportRow, Status, SENTINEL};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    fs::read_to_string(configs().join(name)).unwrap()
}

fn snetcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snetcalc"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn rows(path: &str) -> Vec<ReportRow> {
    read_rows(fs::File::open(path).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn network(params: MmooParams, hops: usize, n: u32, m: u32) -> (TrafficModel, NetworkSpec) {
    (
        TrafficModel::mmoo(params, n).unwrap(),
        NetworkSpec {
            hops,
            capacity: 100e6,
            cross: Some(TrafficModel::mmoo(params, m).unwrap()),
            epsilon: 1e-9,
            slot: 1e-4,
        },
    )
}

#[test]
fn bound_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    for objective in ["delay", "backlog"] {
        let text = config("high_burstiness.toml").replace(
            "objective = \"delay\"",
            &format!("objective = \"{objective}\""),
        );
        let cfg = write(&dir, "c.toml", &text);
        let out = dir.path().join(format!("{objective}.csv"));
        let out = out.to_str().unwrap();
        let o = snetcalc(&["bound", "--config", &cfg, "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.contains(&format!("{objective} bound")));
        let r = rows(out);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].method, Method::UnionBound);
        assert_eq!(r[1].method, Method::ClosedForm);
        let (through, spec) = network(MmooParams::high_burstiness(), 2, 134, 333);
        let obj = if objective == "delay" {
            Objective::Delay
        } else {
            Objective::Backlog
        };
        let (_, expected) =
            optimize_closed_form(&through, &spec, obj, &ThetaGrid::default()).unwrap();
        assert!(
            rel(r[0].bound, expected) < 1e-6,
            "{} vs {expected}",
            r[0].bound
        );
        assert!(rel(r[1].bound, expected) < 1e-12);
        let p: Provenance =
            serde_json::from_str(&fs::read_to_string(format!("{out}.json")).unwrap()).unwrap();
        assert_eq!(p.command, "bound");
        assert_eq!(p.version, env!("CARGO_PKG_VERSION"));
        assert_eq!(p.theta_grid.points, 200);
        assert_eq!(p.config_text, text);
        assert_eq!(p.rows, 2);
    }
}

#[test]
fn overrides_and_independent_method() {
    let dir = TempDir::new().unwrap();
    let text = config("high_burstiness.toml").replace("independent = false", "independent = true");
    let cfg = write(&dir, "c.toml", &text);
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();
    let o = snetcalc(&[
        "bound",
        "--config",
        &cfg,
        "--out",
        out,
        "--hops",
        "3",
        "--epsilon",
        "1e-6",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(out);
    assert_eq!(r[0].method, Method::Independent);
    assert_eq!(r[0].hops, 3);
    assert!(r[0].bound <= r[1].bound * (1.0 + 1e-9));
    assert!((r[0].epsilon_achieved - 1e-6).abs() < 1e-9);
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let base = config("high_burstiness.toml");
    let cases = [
        (
            base.replace("capacity_mbps = 100", "capacity_mbps = -100"),
            "capacity_mbps",
        ),
        (base.replace("hops = 2", "hops = 2\nlinks = 4"), "links"),
        (base.replace("epsilon = 1e-9", "epsilon = 2.0"), "epsilon"),
        (base.replace("count = 134", "count = 0"), "count"),
        (base.replace("max = 1e-2", "max = 1e-12"), "theta_grid.max"),
        (
            base.replace("model = \"mmoo\"", "model = \"poisson\""),
            "poisson",
        ),
    ];
    for (text, field) in cases {
        let cfg = write(&dir, "bad.toml", &text);
        let o = snetcalc(&["bound", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{field}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(field), "{field}: {err}");
        assert!(err.contains("line "), "{field}: {err}");
    }
    let o = snetcalc(&["bound", "--config", "/nonexistent/c.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let o = snetcalc(&["bound"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overloaded_network_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let text = config("high_burstiness.toml").replace("capacity_mbps = 100", "capacity_mbps = 10");
    let cfg = write(&dir, "c.toml", &text);
    let o = snetcalc(&["bound", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.contains("no stable theta") && err.contains("margin"),
        "{err}"
    );
    let o = snetcalc(&["sweep-hops", "--config", &cfg, "--hops", "1,2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn hop_sweep_grows_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let mut by_variant = vec![];
    for name in ["high_burstiness.toml", "low_burstiness.toml"] {
        let cfg = configs().join(name);
        let cfg = cfg.to_str().unwrap();
        let a = dir.path().join(format!("a-{name}.csv"));
        let b = dir.path().join(format!("b-{name}.csv"));
        for out in [&a, &b] {
            let o = snetcalc(&[
                "sweep-hops",
                "--config",
                cfg,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let r = rows(a.to_str().unwrap());
        assert_eq!(r.len(), 40);
        let thm2: Vec<&ReportRow> = r
            .iter()
            .filter(|r| r.method == Method::UnionBound)
            .collect();
        assert_eq!(
            thm2.iter().map(|r| r.hops).collect::<Vec<_>>(),
            (1..=20).collect::<Vec<_>>()
        );
        assert!(thm2.windows(2).all(|w| w[1].bound > w[0].bound));
        for pair in r.chunks(2) {
            assert_eq!(pair[0].hops, pair[1].hops);
            assert!(rel(pair[0].bound, pair[1].bound) < 1e-6);
            assert!(
                rel(
                    pair[0].bound_per_hop_log
                        * pair[0].hops as f64
                        * (1.0 + (pair[0].hops as f64).ln()),
                    pair[0].bound
                ) < 1e-12
            );
        }
        by_variant.push(thm2.iter().map(|r| r.bound).collect::<Vec<_>>());
    }
    assert!(by_variant[0]
        .iter()
        .zip(&by_variant[1])
        .all(|(high, low)| high >= low));
}

#[test]
fn empty_hop_list_is_a_usage_error() {
    let cfg = configs().join("high_burstiness.toml");
    let o = snetcalc(&[
        "sweep-hops",
        "--config",
        cfg.to_str().unwrap(),
        "--hops",
        "",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flow_sweep_flags_saturation() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("high_burstiness.toml");
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("flows.csv");
    let out = out.to_str().unwrap();
    let o = snetcalc(&["sweep-flows", "--config", cfg, "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stderr).unwrap().contains("warning"));
    let r = rows(out);
    let thm2: Vec<&ReportRow> = r
        .iter()
        .filter(|r| r.method == Method::UnionBound)
        .collect();
    let hops: Vec<usize> = thm2.iter().map(|r| r.hops).collect();
    let per_h = thm2.len() / 4;
    assert!((15..=20).contains(&per_h));
    assert_eq!(
        hops,
        [1, 2, 5, 10]
            .iter()
            .flat_map(|&h| vec![h; per_h])
            .collect::<Vec<_>>()
    );
    for h in thm2.chunks(per_h) {
        let last = h.last().unwrap();
        assert_eq!(last.status, Status::Infeasible);
        assert!(last.bound >= SENTINEL);
        assert!(h.iter().all(|r| r.through_flows == r.cross_flows));
        let feasible: Vec<_> = h.iter().filter(|r| r.status == Status::Ok).collect();
        assert!(feasible.windows(2).all(|w| w[1].bound >= w[0].bound));
    }
    for i in 0..per_h {
        assert!(thm2[3 * per_h + i].bound >= thm2[i].bound);
    }
    // a single point agrees with the bound command at the same parameters
    let o = snetcalc(&[
        "sweep-flows",
        "--config",
        cfg,
        "--out",
        out,
        "--hops",
        "2",
        "--flows",
        "134",
    ]);
    assert!(o.status.success());
    let point = rows(out)[0].clone();
    let text = config("high_burstiness.toml").replace("count = 333", "count = 134");
    let single = write(&dir, "single.toml", &text);
    let bound_out = dir.path().join("bound.csv");
    let bound_out = bound_out.to_str().unwrap();
    assert!(
        snetcalc(&["bound", "--config", &single, "--out", bound_out])
            .status
            .success()
    );
    assert_eq!(rows(bound_out)[0].bound, point.bound);
}

#[test]
fn simulate_underloaded_constant_source() {
    let dir = TempDir::new().unwrap();
    let text = "epsilon = 1e-3\n\n[network]\nhops = 2\ncapacity_mbps = 10\n\n[through]\nmodel = \"constant\"\nrate_mbps = 1\ncount = 3\n";
    let cfg = write(&dir, "c.toml", text);
    let run = |out: &str| {
        let o = snetcalc(&[
            "simulate",
            "--config",
            &cfg,
            "--slots",
            "20000",
            "--replications",
            "2",
            "--epsilon",
            "1e-2",
            "--out",
            out,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            String::from_utf8(o.stdout).unwrap(),
            String::from_utf8(o.stderr).unwrap(),
        )
    };
    let a = dir.path().join("a.csv");
    let (stdout, stderr) = run(a.to_str().unwrap());
    assert!(stdout.contains("result           PASS"));
    assert!(stdout.contains("exceedance 0.000000e0"));
    assert!(stderr.is_empty(), "{stderr}");
    let b = dir.path().join("b.csv");
    let (again, _) = run(b.to_str().unwrap());
    assert_eq!(stdout, again);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn simulate_mmoo_single_hop() {
    let dir = TempDir::new().unwrap();
    let text = config("low_burstiness.toml")
        .replace("count = 134", "count = 100")
        .replace("count = 333", "count = 100")
        .replace("hops = 2", "hops = 1");
    let cfg = write(&dir, "c.toml", &text);
    let trace = dir.path().join("trace.txt");
    let o = snetcalc(&[
        "simulate",
        "--config",
        &cfg,
        "--slots",
        "1000000",
        "--replications",
        "2",
        "--seed",
        "9",
        "--trace",
        trace.to_str().unwrap(),
        "--trace-stride",
        "100",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("result           PASS"), "{stdout}");
    let trace = fs::read_to_string(trace).unwrap();
    assert!(trace.starts_with("slot backlog_hop1_bits delay_s\n"));
    // boundaries 100_000..=1_000_000
    assert_eq!(trace.lines().count(), 1 + 9001);
    // too few samples for the target probability
    let o = snetcalc(&[
        "simulate",
        "--config",
        &cfg,
        "--slots",
        "10000",
        "--replications",
        "1",
        "--epsilon",
        "1e-5",
    ]);
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("below 100/epsilon"));
    // sigma-rho traffic has no sample paths
    let sr = text.replacen(
        "model = \"mmoo\"\npeak_mbps = 1.5\nmean_on_ms = 1\nmean_off_ms = 9\n",
        "model = \"sigma_rho\"\nsigma_bits = 0\nrho_mbps = 0.2\n",
        1,
    );
    let cfg = write(&dir, "sr.toml", &sr);
    assert_eq!(
        snetcalc(&["simulate", "--config", &cfg, "--slots", "10000"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn exit_codes() {
    use snetcalc_cli::CliError;
    assert_eq!(CliError::Validation(String::new()).exit_code(), 2);
    assert_eq!(CliError::Infeasible(String::new()).exit_code(), 3);
    assert_eq!(CliError::SimulationFailed(String::new()).exit_code(), 4);
}
