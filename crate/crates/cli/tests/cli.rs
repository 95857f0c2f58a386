use std::path::Path;
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;

fn workstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workstat")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn wcf_starts_at_one() {
    let o = workstat(&["wcf", "--samples", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# v,re,im\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 5);
    assert_eq!(r[0], vec![0.0, 1.0, 0.0]);
}

#[test]
fn wcf_nonperturbative_needs_pure_bath() {
    let o = workstat(&["wcf", "--qubit", "spin", "--omega", "0.05", "--p", "1", "--nonperturbative"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("available only for pure thermal bath"));
    let o = workstat(&["wcf", "--samples", "3", "--nonperturbative"]);
    assert!(o.status.success());
}

fn header_value(text: &str, key: &str) -> f64 {
    let line = text.lines().next().unwrap();
    let field = line.trim_start_matches("# ").split(", ").find(|f| f.starts_with(key)).unwrap();
    field.split(" = ").nth(1).unwrap().parse().unwrap()
}

#[test]
fn wdf_header_carries_atom_and_normalization() {
    let o = workstat(&["wdf", "--alpha", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_abs_diff_eq!(header_value(&text, "normalization"), 1.0, epsilon = 1e-6);
    let atom = header_value(&text, "atom_weight");
    assert!(atom > 0.0 && atom < 1.0);
    assert_eq!(text.lines().nth(1), Some("# w,density"));
}

fn asymmetry(text: &str) -> f64 {
    let r = rows(text);
    let n = r.len();
    let (mut diff, mut total) = (0.0, 0.0);
    for i in 0..n / 2 {
        let (a, b) = (r[i][1], r[n - 1 - i][1]);
        diff += (a - b).abs();
        total += a + b;
    }
    diff / total
}

#[test]
fn asymmetry_about_zero_grows_with_beta() {
    let a: Vec<f64> = ["0.5", "1", "2"]
        .iter()
        .map(|b| asymmetry(&stdout(&workstat(&["wdf", "--alpha", "5", "--beta", b]))))
        .collect();
    assert!(a[0] < a[1] && a[1] < a[2], "{a:?}");
}

#[test]
fn spin_density_dominates() {
    let peak = |q: &str| {
        let o = workstat(&["wdf", "--alpha", "5", "--qubit", q, "--omega", "0.05", "--p", "1"]);
        rows(&stdout(&o)).iter().map(|r| r[1]).fold(0.0, f64::max)
    };
    let spin = peak("spin");
    assert!(spin > peak("fermion"));
    assert!(spin > peak("topological"));
}

#[test]
fn wdf_nonperturbative_writes_second_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = workstat(&["wdf", "--alpha", "5", "--nonperturbative", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let full = read(&dir.path().join("p_nonperturbative.csv"));
    assert_abs_diff_eq!(header_value(&full, "normalization"), 1.0, epsilon = 1e-4);
    assert!(rows(&full).len() > 100);
    // Without an output path there is nowhere to put the second file.
    assert_eq!(workstat(&["wdf", "--nonperturbative"]).status.code(), Some(2));
}

fn report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn lookup(r: &[(String, String)], key: &str) -> String {
    r.iter().find(|(k, _)| k == key).unwrap().1.clone()
}

#[test]
fn pure_bath_is_passive() {
    for alpha in ["0.5", "1", "5"] {
        let r = report(&stdout(&workstat(&["wext", "--alpha", alpha, "--beta", "3"])));
        assert!(lookup(&r, "w_ext").parse::<f64>().unwrap() <= 0.0);
    }
}

#[test]
fn engine_carnot_limit_and_exclusion() {
    let args =
        ["engine", "--qubit", "spin", "--omega", "0.05", "--p", "0.9", "--w-bar", "-1e-6", "--delta-s", "0"];
    let r = report(&stdout(&workstat(&args)));
    assert_eq!(lookup(&r, "mode"), "heat-engine");
    let eta: f64 = lookup(&r, "figure_of_merit").parse().unwrap();
    let ratio: f64 = lookup(&r, "r").parse().unwrap();
    assert_abs_diff_eq!(eta, 1.0 - ratio, epsilon = 1e-15);

    let o = workstat(&["engine", "--qubit", "spin", "--omega", "0.05", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("excluded from engine analysis"));
}

#[test]
fn sweep_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = workstat(&[
            "sweep",
            "--alpha",
            "5",
            "--qubit",
            "spin",
            "--omega",
            "0.05",
            "--p",
            "1",
            "--x",
            "p:0:1:16",
            "--y",
            "beta:0.1:100:16:log",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["grid.csv", "contour.csv", "betaq.csv"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    let grid = read(&a.join("grid.csv"));
    assert!(grid.starts_with("# p,beta,w_ext,level,mode\n"));
    assert_eq!(grid.lines().count(), 1 + 256);
    assert!(rows(&read(&a.join("contour.csv"))).len() > 2);
    assert!(rows(&read(&a.join("betaq.csv"))).len() > 2);
}

#[test]
fn sweep_engine_leaves_undefined_cells_empty() {
    let dir = tempfile::tempdir().unwrap();
    let o = workstat(&[
        "sweep",
        "--alpha",
        "5",
        "--qubit",
        "fermion",
        "--omega",
        "0.05",
        "--p",
        "0.9",
        "--x",
        "p:0.500001:0.999999:16",
        "--y",
        "beta:0.1:100:16:log",
        "--quantity",
        "figure_of_merit",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let grid = read(&dir.path().join("grid.csv"));
    for line in grid.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 5);
        match f[4] {
            "heat-engine" | "refrigerator" => assert!(!f[2].is_empty()),
            _ => assert!(f[2].is_empty()),
        }
    }
}

#[test]
fn config_file_precedence_and_strictness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[system]\nalpha = 5.0\nbeta = 2.0\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = stdout(&workstat(&["wext", "--config", c]));
    let explicit = stdout(&workstat(&["wext", "--alpha", "5", "--beta", "2"]));
    assert_eq!(from_file, explicit);
    let overridden = stdout(&workstat(&["wext", "--config", c, "--beta", "1"]));
    assert_eq!(overridden, stdout(&workstat(&["wext", "--alpha", "5", "--beta", "1"])));

    std::fs::write(&cfg, "[system]\ntemperature = 2.0\n").unwrap();
    assert_eq!(workstat(&["wext", "--config", c]).status.code(), Some(2));
    assert_eq!(workstat(&["wext", "--alpha", "-1"]).status.code(), Some(2));
}

#[test]
fn verify_prints_every_check_with_margins() {
    let o = workstat(&["verify", "--verbose"]);
    let text = stdout(&o);
    let status: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(status.len(), 12);
    assert_eq!(text.matches("margin").count(), 12);
    let all_pass = status.iter().all(|l| l.starts_with("PASS"));
    assert_eq!(o.status.success(), all_pass);
    if !all_pass {
        assert_eq!(o.status.code(), Some(1));
    }
}
