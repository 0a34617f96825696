use std::path::Path;
use std::process::{Command, Output};

fn hypolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypolab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    let text = format!("grid.n_x = 16\ngrid.n_theta = 8\nsolver.t_end = 2.0\nsolver.record_every = 5\n{body}");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn csv_body(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn simulate_is_deterministic_and_writes_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario.preset = \"cross\"\nscenario.smoothing_width = 0.1\n");
    let mut bodies = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(name);
        let o = hypolab(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "3", "--threads", threads, "--gnuplot"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("series.gp").exists());
        let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
        assert!(csv.starts_with("# generated"));
        assert_eq!(csv.lines().nth(1), Some("t,mass,l2,dissipation,good_set_density_sq,sigma_defect"));
        let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
        assert!(report.contains("seed = 3"));
        bodies.push(csv_body(&out.join("series.csv")));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let bad = write_config(dir.path(), "solver.dtt = 0.1\n");
    let o = hypolab(&["simulate", "--config", &bad, "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dtt"));

    assert_eq!(hypolab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hypolab(&["simulate", "--config", "/nonexistent/run.toml"]).status.code(), Some(3));

    let blow_up = write_config(dir.path(), "initial.preset = \"single-mode\"\ninitial.amplitude = 1e308\ninitial.mode = [1, 1]\n");
    let o = hypolab(&["simulate", "--config", &blow_up, "--out", out]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let blocked = dir.path().join("file");
    std::fs::write(&blocked, "").unwrap();
    let cfg = write_config(dir.path(), "");
    let o = hypolab(&["gcc", "--config", &cfg, "--out", blocked.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn gcc_and_certificate_on_band() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario.preset = \"band\"\nscenario.smoothing_width = 0.1\nt_star = 4.0\n");
    let out = dir.path().join("o");
    let o = hypolab(&["gcc", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out.join("gcc.txt")).unwrap();
    assert!(text.contains("uniform GCC not certified"));
    let o = hypolab(&["certificate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(std::fs::read_to_string(out.join("certificate.txt")).unwrap().contains("not issued"));
}

#[test]
fn verify_and_bogovskii() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario.preset = \"uniform\"\nbogovskii.datum = \"manufactured\"\nbogovskii.resolution = 24\n",
    );
    let out = dir.path().join("o");
    let o = hypolab(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("verify.txt")).unwrap();
    assert!(text.contains("energy ledger") && text.contains("mandatory identities         pass"));
    let o = hypolab(&["bogovskii", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(out.join("divergence.txt")).unwrap().contains("residual"));
    assert!(out.join("f2.bin").exists());
}
