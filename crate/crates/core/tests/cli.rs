use std::path::Path;
use std::process::{Command, Output};

use dsrnet::sim::{Trajectory, TrajectoryKind};

fn dsrnet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsrnet"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn dsrnet_plain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsrnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Number following `prefix` on the first line that starts with it.
fn value_after(text: &str, prefix: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(prefix))
        .unwrap_or_else(|| panic!("no line starting with '{prefix}' in\n{text}"));
    line[prefix.len()..]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn analyze_ring() {
    let o = dsrnet_plain(&["analyze"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!((value_after(&s, "  lambda_min = ") - 0.0081).abs() < 5e-4);
    assert!((value_after(&s, "  lambda_max = ") - 4.2361).abs() < 1e-3);
    assert!((value_after(&s, "gamma bound (real spectrum): ") - 0.47214).abs() < 2e-4);
    assert!(s.contains("beta range: (-0.002406, 1.000000)"), "{s}");
    assert!(s.contains("leaders: 16"));
}

#[test]
fn analyze_two_node_graph_and_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("pair.json");
    std::fs::write(&g, r#"{"nodes": 2, "source": 2, "edges": [[2, 1, 1.0]]}"#).unwrap();
    let o = dsrnet_plain(&["analyze", "--graph", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!((value_after(&stdout(&o), "gamma bound (general): ") - 2.0).abs() < 1e-12);

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"nodes": 2, "source": 2, "edges": [[2, 1, -1.0]]}"#,
    )
    .unwrap();
    let o = dsrnet_plain(&["analyze", "--graph", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonpositive weight"));

    let o = dsrnet_plain(&[
        "analyze",
        "--graph",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(
        dsrnet_plain(&["analyze", "--frobnicate"]).status.code(),
        Some(1)
    );
    assert_eq!(
        dsrnet_plain(&["simulate", "--mode", "third-order"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(dsrnet_plain(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_single_point_and_paper_style_beta_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsrnet(&["sweep", "gamma", "--grid", "0.3:0.3:0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value_after(&stdout(&o), "argmin gamma = "), 0.3);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "gain,radius");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("3.00000000000000e-1,"));

    let o = dsrnet(
        &["sweep", "beta", "--grid=-0.00240612:0.999:0.01"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!((value_after(&stdout(&o), "argmin beta = ") - 0.8876).abs() < 5e-3);
}

#[test]
fn simulate_modes_report_settling_times() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, expected, tol) in [
        ("first-order", 12.04, 0.05),
        ("dsr", 0.90, 0.05),
        ("second-order", 0.9399, 0.02),
        ("continuous", 12.07, 0.05),
    ] {
        let o = dsrnet(&["simulate", "--mode", mode], dir.path());
        assert_eq!(o.status.code(), Some(0), "{mode}");
        let ts = value_after(&stdout(&o), "settling time = ");
        assert!((ts - expected).abs() <= tol, "{mode}: {ts}");
        let text =
            std::fs::read_to_string(dir.path().join(format!("trajectory_{mode}.csv"))).unwrap();
        let t = Trajectory::from_csv(&text, TrajectoryKind::Dsr).unwrap();
        assert_eq!(t.n(), 31);
        assert_eq!(t.to_csv(), text);
        assert!(!text.contains('\r'));
    }
}

#[test]
fn unstable_runs_need_force_and_keep_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsrnet(&["simulate", "--gamma", "0.48"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("trajectory_first-order.csv").exists());
    let o = dsrnet(&["simulate", "--gamma", "0.48", "--force"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
    let text = std::fs::read_to_string(dir.path().join("trajectory_first-order.csv")).unwrap();
    assert!(text.lines().count() > 2);
    let o = dsrnet(
        &["simulate", "--mode", "second-order", "--tilde-dt", "0.01"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!((value_after(&stdout(&o), "spectral radius = ") - 1.7667).abs() < 1e-3);
}

#[test]
fn formation_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsrnet(&["formation"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let plain = value_after(&s, "distortion without DSR = ");
    let dsr = value_after(&s, "distortion with DSR    = ");
    assert!(plain > dsr, "{plain} vs {dsr}");
    for f in ["formation_no_dsr.csv", "formation_dsr.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.starts_with("t,x_1,y_1,x_2,y_2,"));
        assert!(text.lines().next().unwrap().ends_with(",x_31,y_31"));
    }

    let o = dsrnet(&["formation", "--step", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value_after(&stdout(&o), "distortion without DSR = "), 0.0);
    assert_eq!(value_after(&stdout(&o), "distortion with DSR    = "), 0.0);

    let o = dsrnet(&["formation", "--horizon", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("formation_dsr.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("0,1.00000000000000e0,0,"));
}

#[test]
fn reproduce_paper_is_deterministic_and_detects_a_wrong_gain() {
    let a = dsrnet_plain(&["reproduce-paper"]);
    let b = dsrnet_plain(&["reproduce-paper"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
    let table = stdout(&a);
    let failing: Vec<&str> = table.lines().filter(|l| l.ends_with("FAIL")).collect();
    // the fine-grid β argmin sits at the discrete critical-damping point, not at 0.8876
    assert_eq!(failing.len(), 1, "{table}");
    assert!(failing[0].starts_with("beta sweep argmin (step 1e-4)"));
    assert_eq!(a.status.code(), Some(3));

    let o = dsrnet_plain(&["reproduce-paper", "--gamma", "0.4"]);
    assert_eq!(o.status.code(), Some(3));
    let row = stdout(&o)
        .lines()
        .find(|l| l.starts_with("settling time without DSR"))
        .unwrap()
        .to_string();
    assert!(row.ends_with("FAIL"), "{row}");
}
