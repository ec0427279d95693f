use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mosk(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mosk"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap()
}

#[test]
fn toy_run_writes_monotone_trace_and_reruns_from_echo() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("toy.toml");
    fs::write(&config, "[run]\nseed = 5\ninitial_designs = 10\nbudget = 13\n\n[pso]\nswarm_size = 16\niterations = 20\n").unwrap();
    let out = dir.path().join("first");
    let o = mosk(&["optimize"], &config, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let trace = csv_rows(&out.join("trace.csv"));
    assert_eq!(trace.len(), 1 + 13);
    let it = column(&trace, "iteration");
    assert_eq!(trace[1..].iter().filter(|r| r[it] != "0").count(), 3);
    let hv = column(&trace, "hypervolume");
    let values: Vec<f64> = trace[1..].iter().filter_map(|r| r[hv].parse().ok()).collect();
    assert_eq!(values.len(), 13);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    for name in ["front.csv", "hypervolume.csv", "models.csv", "timing.csv", "config.echo"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    assert_eq!(csv_rows(&out.join("hypervolume.csv")).len(), 1 + 4);
    assert_eq!(csv_rows(&out.join("models.csv")).len(), 1 + 3);

    let again = dir.path().join("again");
    let o = mosk(&["optimize"], &out.join("config.echo"), &again);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(out.join("trace.csv")).unwrap(), fs::read(again.join("trace.csv")).unwrap());
}

#[test]
fn all_infeasible_run_has_header_only_front() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("damaged.toml");
    fs::write(&config, "[run]\ninitial_designs = 6\nbudget = 6\n\n[simulator]\ndamage_threshold = 0.0\n").unwrap();
    let out = dir.path().join("out");
    let o = mosk(&["optimize"], &config, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let front = fs::read_to_string(out.join("front.csv")).unwrap();
    assert_eq!(front.lines().count(), 1);
    assert!(front.starts_with("pre_processing,power,"));
    assert!(!fs::read_to_string(out.join("trace.csv")).unwrap().contains('\r'));
}

#[test]
fn nsga2_run_and_hypervolume_tool_agree() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("ga.toml");
    fs::write(&config, "[run]\nalgorithm = \"nsga2\"\nreference = [0.0, 30.0]\n\n[nsga2]\npopulation = 8\ngenerations = 5\n").unwrap();
    let out = dir.path().join("out");
    let o = mosk(&["optimize", "--budget", "48"], &config, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&out.join("trace.csv")).len(), 1 + 48);
    let last: f64 = csv_rows(&out.join("hypervolume.csv")).last().unwrap()[2].parse().unwrap();

    let o = Command::new(env!("CARGO_BIN_EXE_mosk"))
        .args(["hypervolume", "--front"])
        .arg(out.join("front.csv"))
        .args(["--ref", "0,30"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let tool: f64 = String::from_utf8(o.stdout).unwrap().trim().parse().unwrap();
    assert!((tool - last).abs() <= 1e-9 * last.max(1.0), "{tool} vs {last}");
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "[run]\nalgorithm = \"nsga2\"\n").unwrap();
    let o = mosk(&["optimize", "--budget", "31"], &config, &dir.path().join("x"));
    assert!(!o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim().lines().count(), 1);

    fs::write(&config, "[run]\nbogus = 1\n").unwrap();
    let o = mosk(&["optimize"], &config, &dir.path().join("x"));
    assert!(!o.status.success());

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    fs::write(&config, "[run]\nbudget = 30\n").unwrap();
    let o = mosk(&["optimize"], &config, &blocker.join("sub"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = Command::new(env!("CARGO_BIN_EXE_mosk"))
        .args(["hypervolume", "--front", "/nonexistent/front.csv", "--ref", "0,1"])
        .output()
        .unwrap();
    assert!(!o.status.success());
}
