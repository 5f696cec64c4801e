use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quadtune::campaign::CampaignSummary;

fn quadtune(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadtune"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn summary(dir: &Path) -> CampaignSummary {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn zero_iterations_report_the_initial_best() {
    let tmp = tempfile::tempdir().unwrap();
    ok(quadtune(&["tune", "--algo", "bbo", "--trials", "1", "--iters", "0", "--out", "r"], tmp.path()));
    let s = summary(&tmp.path().join("r"));
    let trace = std::fs::read_to_string(tmp.path().join("r/trial_0/trace.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let initial: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(s.trials[0].cost.aggregate, initial);
}

#[test]
fn pso_campaign_layout_and_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["tune", "--algo", "pso", "--trials", "5", "--seed", "7", "--iters", "3", "--pop", "10", "--out", "r"];
    ok(quadtune(&args, tmp.path()));
    let dir = tmp.path().join("r");
    for k in 0..5 {
        for f in ["trace.csv", "trace.json", "best_gains.json"] {
            assert!(dir.join(format!("trial_{k}")).join(f).is_file(), "trial_{k}/{f}");
        }
    }
    let s = summary(&dir);
    assert_eq!(s.trials.len(), 5);
    assert_eq!(s.trials.iter().map(|t| t.seed).collect::<Vec<_>>(), vec![7, 8, 9, 10, 11]);

    let first = std::fs::read(dir.join("summary.json")).unwrap();
    let trace = std::fs::read(dir.join("trial_3/trace.csv")).unwrap();
    ok(quadtune(&args, tmp.path()));
    assert_eq!(first, std::fs::read(dir.join("summary.json")).unwrap());
    assert_eq!(trace, std::fs::read(dir.join("trial_3/trace.csv")).unwrap());
}

#[test]
fn simulate_then_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let gains = config("gains_conventional_pd.json");
    let stdout = ok(quadtune(&["simulate", "--gains", gains.to_str().unwrap(), "--out", "sim"], tmp.path()));
    assert!(stdout.contains("aggregate cost 3.97"));
    let sim = tmp.path().join("sim");
    for f in ["trajectory.csv", "cost.json", "metrics.json"] {
        assert!(sim.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(sim.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1002);

    let json = ok(quadtune(&["metrics", "sim/trajectory.csv"], tmp.path()));
    let reports: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 4);
}

#[test]
fn perfect_start_costs_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("scenario.json"),
        r#"{"initial_state": {"position": [0,0,0], "attitude": [0,0,0], "velocity": [0,0,0], "body_rates": [0,0,0]}}"#,
    )
    .unwrap();
    let gains = config("gains_published_bbo.json");
    let stdout = ok(quadtune(
        &["simulate", "--gains", gains.to_str().unwrap(), "--scenario", "scenario.json", "--out", "sim"],
        tmp.path(),
    ));
    assert!(stdout.contains("aggregate cost 0\n"), "{stdout}");
}

#[test]
fn compare_published_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let [pd, pso, bbo] = ["gains_conventional_pd.json", "gains_published_pso.json", "gains_published_bbo.json"]
        .map(|f| config(f).display().to_string());
    let table = ok(quadtune(&["compare", &pd, &pso, &bbo, "--out", "a.json"], tmp.path()));
    for label in ["gains_conventional_pd", "gains_published_pso", "gains_published_bbo", "F (aggregate)"] {
        assert!(table.contains(label), "{label}");
    }
    ok(quadtune(&["compare", &bbo, &pso, &pd, "--out", "b.json"], tmp.path()));
    let read = |f: &str| -> Vec<serde_json::Value> {
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join(f)).unwrap()).unwrap()
    };
    let (a, mut b) = (read("a.json"), read("b.json"));
    b.reverse();
    assert_eq!(a, b);

    ok(quadtune(&["compare", &pd, &pd, "--out", "self.json"], tmp.path()));
    let s = read("self.json");
    assert_eq!(s[0]["cost"], s[1]["cost"]);
}

#[test]
fn errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let pd = config("gains_conventional_pd.json").display().to_string();
    let out = quadtune(&["compare", &pd, "missing.json"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    std::fs::write(tmp.path().join("bad.json"), "{\n  \"trials\": 2,\n  \"seed\": -1\n}\n").unwrap();
    let out = quadtune(&["tune", "--config", "bad.json"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}
