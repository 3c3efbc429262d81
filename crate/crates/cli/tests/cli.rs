use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn muskat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_of_bundled_equilibria() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("mut_m2_equal.toml", "NormallyHyperbolic", 5, 1),
        ("mu_m2.toml", "NormallyStable", 6, 0),
        ("mut_m1.toml", "NormallyStable", 3, 0),
    ];
    for (name, class, kernel, unstable) in cases {
        let out = tmp.path().join(name);
        let o = muskat(&["spectrum", &config(name), "--out", out.to_str().unwrap()]);
        assert!(
            o.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let r = json(out.join("spectrum.json"));
        assert_eq!(r["classification"], class, "{name}");
        assert_eq!(r["kernel_count"], kernel, "{name}");
        assert_eq!(r["unstable_count"], unstable, "{name}");
        assert_eq!(r["rank_l"], r["rank_l2"], "{name}");
    }
}

#[test]
fn simulate_single_perturbed_reaches_equilibrium() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = muskat(&[
        "simulate",
        &config("mu_single_perturbed.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let term = json(out.join("termination.json"));
    assert_eq!(term["termination"], "Equilibrium");
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(
        diag.starts_with("t,area_total,area_1,perimeter,maxHdev,ball_r,vinf,jinf,fit_residual\n")
    );
    assert!(out.join("snap_00000.json").exists());
    assert!(out.join("config.toml").exists());
}

#[test]
fn simulate_two_circles_shows_ripening() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = muskat(&[
        "simulate",
        &config("mut_two_circles.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let rows: Vec<Vec<f64>> = diag
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 5);
    // columns: t, area_total, area_1, area_2, ...
    assert!(
        rows.windows(2).all(|w| w[1][2] < w[0][2]),
        "smaller area must shrink"
    );
    assert!(
        rows.windows(2).all(|w| w[1][3] > w[0][3]),
        "larger area must grow"
    );
    let a0 = rows[0][1];
    assert!(rows.iter().all(|r| ((r[1] - a0) / a0).abs() <= 1e-4));
    let term = json(out.join("termination.json"));
    assert!(term["area_drift"][0].as_f64().unwrap() > 0.1);
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<PathBuf> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for d in &dirs {
        let o = muskat(&[
            "simulate",
            &config("mu_single_perturbed.toml"),
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 10);
    for n in names {
        assert_eq!(
            fs::read(dirs[0].join(&n)).unwrap(),
            fs::read(dirs[1].join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    let text = fs::read_to_string(config("mu_single_perturbed.toml")).unwrap();
    fs::write(
        &bad,
        text.replace("t_end = 20.0", "t_end = 20.0\ncolour = \"blue\""),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = muskat(&[
        "simulate",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour"), "{err}");
    assert!(!out.exists());

    let o = muskat(&[
        "spectrum",
        &config("mu_single_perturbed.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = muskat(&[
        "simulate",
        tmp.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_table() {
    let o = muskat(&["oracle"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,lambda"));
    let rows: Vec<(u32, f64)> = lines
        .map(|l| {
            let (m, v) = l.split_once(',').unwrap();
            (m.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0], (0, 0.0));
    assert!((rows[2].1 - 0.9375).abs() < 1e-15);
    assert!(rows.windows(2).all(|w| w[1].1 > w[0].1));

    let o = muskat(&["oracle", "--model", "mut", "--rho2", "1.0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = muskat(&["oracle", "--radius", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports_named_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = muskat(&[
        "verify",
        "--only",
        "GEOMETRY-CAL",
        "--only",
        "KERNEL-DIM",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("PASS  9 GEOMETRY-CAL"));
    assert!(text.contains("PASS  2 KERNEL-DIM"));
    let report = json(out.join("verify_report.json"));
    assert_eq!(report["results"].as_array().unwrap().len(), 2);
    assert!(out.join("artifacts/spectrum.json").exists());

    // the convergence clause is rounding-limited and fails; the exit code says so
    let o = muskat(&["verify", "--only", "ORACLE-EQ"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL  3 ORACLE-EQ"));

    let o = muskat(&["verify", "--only", "NOT-A-CRITERION"]);
    assert_eq!(o.status.code(), Some(2));
    let o = muskat(&["verify", "--level", "medium"]);
    assert_eq!(o.status.code(), Some(2));
}
