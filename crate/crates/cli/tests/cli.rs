use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn lepsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lepsim")).args(args).arg("--out").arg(out).env("RUST_LOG", "error").output().unwrap()
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = lepsim(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn default_run_writes_201_rows() {
    let tmp = TempDir::new().unwrap();
    ok(&["run"], tmp.path());
    let text = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(text.starts_with("t,Sz,Sx,Sy,rho11,Re rho12,Im rho12\n"));
    assert!(!text.contains('\r'));
    let r = rows(&tmp.path().join("trajectory.csv"));
    assert_eq!(r.len(), 201);
    assert_eq!(r[200][0], 200.0);
    assert_eq!(r[0][1], -1.0);
    let manifest = std::fs::read_to_string(tmp.path().join("MANIFEST")).unwrap();
    assert!(manifest.lines().any(|l| l.starts_with("trajectory.csv sha256:")));
}

#[test]
fn undriven_dissipation_free_run_is_constant() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", "initial = [0.0, 0.0, 0.5]\n[system]\nmuE0 = 0.0\ndelta = 0.0\n[bath]\ncouplingRate = 0.0\n");
    for solver in ["bloch", "generalized", "nonmarkov", "negf"] {
        let out = tmp.path().join(solver);
        ok(&["run", "--config", cfg.to_str().unwrap(), "--solver", solver], &out);
        let r = rows(&out.join("trajectory.csv"));
        for row in &r {
            for k in 1..7 {
                assert!((row[k] - r[0][k]).abs() < 1e-12, "{solver}: column {k} drifts");
            }
        }
    }
}

#[test]
fn identical_configs_give_identical_bytes_and_echo_reproduces() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", "solver = \"generalized\"\n[system]\nmuE0 = 0.02\n[time]\ntEnd = 50.0\ndt = 0.5\ndecimation = 2\n");
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&["run", "--config", cfg.to_str().unwrap()], &a);
    ok(&["run", "--config", cfg.to_str().unwrap(), "--threads", "2"], &b);
    let echoed = a.join("trajectory.toml");
    ok(&["run", "--config", echoed.to_str().unwrap()], &c);
    let csv = std::fs::read(a.join("trajectory.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("trajectory.csv")).unwrap());
    assert_eq!(csv, std::fs::read(c.join("trajectory.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("MANIFEST")).unwrap(), std::fs::read(c.join("MANIFEST")).unwrap());
    assert_eq!(rows(&a.join("trajectory.csv")).len(), 51);
}

#[test]
fn analyze_counts_modes_of_a_run() {
    let tmp = TempDir::new().unwrap();
    for (solver, want) in [("bloch", 3), ("nonmarkov", 4)] {
        let run = tmp.path().join(format!("run-{solver}"));
        ok(&["run", "--solver", solver], &run);
        let an = tmp.path().join(format!("an-{solver}"));
        let stdout = ok(&["analyze", run.join("trajectory.csv").to_str().unwrap(), "--solver", solver], &an);
        assert!(stdout.contains(&format!("{want} modes")), "{stdout}");
        let text = std::fs::read_to_string(an.join("modes.csv")).unwrap();
        assert!(text.starts_with("Re omega,Im omega,Re d,Im d,|d|\n"));
        assert_eq!(rows(&an.join("modes.csv")).len(), want);
    }
}

#[test]
fn analyze_constant_column_gives_one_stationary_mode() {
    let tmp = TempDir::new().unwrap();
    let mut text = String::from("t,Sz,Sx,Sy,rho11,Re rho12,Im rho12\n");
    for n in 0..101 {
        text.push_str(&format!("{n}.0,0.25,0,0,0.375,0,0\n"));
    }
    let input = write_config(&tmp, "const.csv", &text);
    ok(&["analyze", input.to_str().unwrap()], tmp.path());
    let m = rows(&tmp.path().join("modes.csv"));
    assert_eq!(m.len(), 1);
    assert!(m[0][0].abs() < 1e-10 && m[0][1].abs() < 1e-10);
    assert!((m[0][2] - 0.25).abs() < 1e-10);
}

#[test]
fn analyze_rejects_schema_mismatch() {
    let tmp = TempDir::new().unwrap();
    let input = write_config(&tmp, "bad.csv", "t,Sz\n0,1\n1,1\n");
    let o = lepsim(&["analyze", input.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected header"));
    let ragged = write_config(&tmp, "ragged.csv", "t,Sz,Sx,Sy,rho11,Re rho12,Im rho12\n0,1,0,0,0,0,0\n3,1,0,0,0,0,0\n4,1,0,0,0,0,0\n");
    assert!(!lepsim(&["analyze", ragged.to_str().unwrap()], tmp.path()).status.success());
}

#[test]
fn sweep_summaries() {
    let tmp = TempDir::new().unwrap();
    let bloch = tmp.path().join("bloch");
    ok(&["sweep"], &bloch);
    let text = std::fs::read_to_string(bloch.join("sweep.csv")).unwrap();
    assert!(text.starts_with("muE0,Re omega1,Im omega1,Re omega2,Im omega2,|d1|,gap,modeCount,lepFlag\n"));
    let lep: f64 = text.lines().last().unwrap().strip_prefix("# lep=").unwrap().parse().unwrap();
    assert!((lep - 0.025).abs() < 0.005, "{lep}");
    let r = rows(&bloch.join("sweep.csv"));
    assert_eq!(r.len(), 50);
    assert_eq!(r.iter().filter(|row| row[8] == 1.0).count(), 1);

    let nm = tmp.path().join("nonmarkov");
    ok(&["sweep", "--solver", "nonmarkov"], &nm);
    assert!(std::fs::read_to_string(nm.join("sweep.csv")).unwrap().ends_with("# lep=none\n"));
}

#[test]
fn invalid_configs_fail_with_field_names() {
    let tmp = TempDir::new().unwrap();
    for (text, field) in [("[bath]\ncoupling = 0.1\n", "coupling"), ("[system]\neps2 = -1.0\n", "eps2"), ("solver = \"rk45\"\n", "solver")] {
        let cfg = write_config(&tmp, "bad.toml", text);
        let o = lepsim(&["run", "--config", cfg.to_str().unwrap()], tmp.path());
        assert!(!o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).contains(field), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!lepsim(&["run", "--solver", "lindblad"], tmp.path()).status.success());
}

#[test]
fn reproduce_fig4_writes_three_panels() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", "[sweep]\nmin = 0.005\nmax = 0.045\npoints = 9\n");
    ok(&["reproduce", "fig4", "--config", cfg.to_str().unwrap()], tmp.path());
    let manifest = std::fs::read_to_string(tmp.path().join("MANIFEST")).unwrap();
    for panel in ["fig4a_bloch", "fig4b_generalized", "fig4c_nonmarkov"] {
        assert!(manifest.contains(&format!("{panel}.csv sha256:")));
        let r = rows(&tmp.path().join(format!("{panel}.csv")));
        assert_eq!(r.len(), 9);
        assert_eq!(r[0].len(), 5);
    }
}
