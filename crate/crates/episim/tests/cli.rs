use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn episim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_episim"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = episim(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.cfg");
    std::fs::write(
        &path,
        "beta = 0.001\ngamma = 0.8\nm1 = 1\nm2 = 1\ncontrol = constant\nu = 10\n\
         x1_0 = 1000\nx2_0 = 10\nstep = 0.01\nt_end = 30\nsample_every = 10\n",
    )
    .unwrap();
    path
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn stepwise_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write_config(d);
    let (traj, data, clusters, sel) = (
        d.join("traj.csv"),
        d.join("data.csv"),
        d.join("clusters.csv"),
        d.join("selection.csv"),
    );
    let (model, rate, report) = (d.join("model"), d.join("rate.csv"), d.join("report.csv"));

    ok(&["simulate", "--config", s(&cfg), "--out", s(&traj)]);
    assert_eq!(header(&traj), "t,x1,x2");
    ok(&["dataset", "--config", s(&cfg), "--out", s(&data)]);
    assert_eq!(header(&data), "x2_raw,x1_raw,x2_std,x1_std");
    assert!(d.join("data.csv.cfg").exists());

    ok(&[
        "cluster",
        "--data",
        s(&data),
        "--k-candidates",
        "2,3,4",
        "--seed",
        "3",
        "--out",
        s(&clusters),
        "--selection-out",
        s(&sel),
    ]);
    assert_eq!(header(&clusters), "point_index,cluster,silhouette");
    assert_eq!(header(&sel), "k,mean_silhouette,V");
    assert_eq!(std::fs::read_to_string(&sel).unwrap().lines().count(), 4);

    ok(&[
        "train",
        "--data",
        s(&data),
        "--k",
        "3",
        "--seed",
        "3",
        "--eta",
        "0.01",
        "--momentum",
        "0.9",
        "--target-mse",
        "1e-3",
        "--max-epochs",
        "200",
        "--out",
        s(&model),
    ]);
    for f in [
        "manifest.txt",
        "net_0.txt",
        "net_1.txt",
        "net_2.txt",
        "provenance.cfg",
    ] {
        assert!(model.join(f).exists(), "{f}");
    }
    assert!(std::fs::read_to_string(model.join("net_0.txt"))
        .unwrap()
        .starts_with("mlp 1 5 1\n"));

    let p1: f64 = ok(&["predict", "--model", s(&model), "--input", "50"])
        .trim()
        .parse()
        .unwrap();
    let p2: f64 = ok(&["predict", "--model", s(&model), "--input", "50"])
        .trim()
        .parse()
        .unwrap();
    assert!(p1.is_finite());
    assert_eq!(p1.to_bits(), p2.to_bits());

    ok(&[
        "rate",
        "--model",
        s(&model),
        "--traj",
        s(&traj),
        "--out",
        s(&rate),
    ]);
    assert_eq!(header(&rate), "t,actual,estimated");
    let rows = std::fs::read_to_string(&rate).unwrap().lines().count();
    let traj_rows = std::fs::read_to_string(&traj).unwrap().lines().count();
    assert_eq!(rows, traj_rows);

    ok(&[
        "compare",
        "--data",
        s(&data),
        "--model",
        s(&model),
        "--degrees",
        "1,2",
        "--out",
        s(&report),
    ]);
    let text = std::fs::read_to_string(&report).unwrap();
    let methods: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(methods, ["cooperative_nn", "poly1", "poly2"]);
}

#[test]
fn experiment_writes_every_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("run");
    let stdout = ok(&["experiment", "--config", s(&cfg), "--out-dir", s(&out)]);
    assert!(stdout.contains("cooperative_nn"));
    for f in [
        "experiment.cfg",
        "traj.csv",
        "data.csv",
        "clusters.csv",
        "report.csv",
        "rate.csv",
        "rate_poly1.csv",
        "rate_poly2.csv",
        "rate_rmse.csv",
        "model/manifest.txt",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    // the saved configuration reproduces the run
    let again = tmp.path().join("again");
    ok(&[
        "experiment",
        "--config",
        s(&out.join("experiment.cfg")),
        "--out-dir",
        s(&again),
    ]);
    assert_eq!(
        std::fs::read(out.join("report.csv")).unwrap(),
        std::fs::read(again.join("report.csv")).unwrap()
    );
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "beta = 0.001\ngamma = 0.8\nm1 = 0.3\nm2 = 1\ncontrol = none\nx1_0 = 1\nx2_0 = 1\nt_end = 1\n").unwrap();
    let out = episim(&[
        "simulate",
        "--config",
        s(&bad),
        "--out",
        s(&tmp.path().join("t.csv")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("inadmissible"), "{err}");
    assert!(err.contains("m1"), "{err}");

    std::fs::write(&bad, "beta = 0.001\nbogus = 1\n").unwrap();
    let out = episim(&[
        "simulate",
        "--config",
        s(&bad),
        "--out",
        s(&tmp.path().join("t.csv")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `bogus`"));

    let out = episim(&["predict", "--model", s(tmp.path()), "--input", "1"]);
    assert!(!out.status.success());
}
