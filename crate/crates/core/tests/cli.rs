use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn esn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL: &str = r#"
[dataset]
generator = "mackey-glass"
n = 900

[split]
washout = 50
train = 500
test = 300

[esn]
n_res = 60
beta = 1e-7

[eval]
horizon = 200

[run]
repeats = 3
"#;

#[test]
fn gen_writes_requested_rows_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(&esn(&["gen", "mg", "--n", "4000", "--out", "mg.csv"], dir.path()));
    let text = fs::read_to_string(dir.path().join("mg.csv")).unwrap();
    assert_eq!(text.lines().count(), 4001);

    ok(&esn(&["gen", "sine", "--trend", "--n", "1000", "--out", "s.csv"], dir.path()));
    let last: f64 = fs::read_to_string(dir.path().join("s.csv"))
        .unwrap()
        .lines()
        .last()
        .unwrap()
        .parse()
        .unwrap();
    let want = (1001.0 * std::f64::consts::PI.powi(3)).sin() + 1.0;
    assert!((last - want).abs() < 1e-9, "{last} vs {want}");

    for name in ["a.csv", "b.csv"] {
        ok(&esn(&["gen", "arma", "--seed", "11", "--n", "300", "--out", name], dir.path()));
    }
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
    ok(&esn(&["gen", "arma", "--seed", "12", "--n", "300", "--out", "c.csv"], dir.path()));
    assert_ne!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("c.csv")).unwrap()
    );
}

#[test]
fn run_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), SMALL).unwrap();
    ok(&esn(&["run", "exp.toml", "--out-dir", "r1"], dir.path()));
    ok(&esn(&["run", "exp.toml", "--out-dir", "r2", "--threads", "1"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("r1/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for rel in [
        "report.csv",
        "report.md",
        "tracking/mackey-glass_esn_seed0.csv",
        "tracking/mackey-glass_esn_seed2.csv",
    ] {
        assert_eq!(
            fs::read(dir.path().join("r1").join(rel)).unwrap(),
            fs::read(dir.path().join("r2").join(rel)).unwrap(),
            "{rel}"
        );
    }
}

#[test]
fn seed_flag_shifts_every_repeat() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), SMALL).unwrap();
    ok(&esn(&["run", "exp.toml", "--seed", "40", "--out-dir", "r"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("r/report.csv")).unwrap();
    let seeds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(seeds, ["40", "41", "42"]);
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), SMALL.replace("beta = 1e-7", "beta = \"tiny\"")).unwrap();
    let out = esn(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("esn.beta"));

    fs::write(dir.path().join("bad2.toml"), SMALL.replace("repeats = 3", "repeats = 3\nthreads = 2")).unwrap();
    let out = esn(&["run", "bad2.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.threads"));

    assert_eq!(esn(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(esn(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn divergence_is_data_unless_strict() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("beta = 1e-7", "beta = 1e-7\ndivergence_limit = 0.5");
    fs::write(dir.path().join("div.toml"), text).unwrap();
    ok(&esn(&["run", "div.toml", "--out-dir", "a"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("a/report.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(cols[3].is_empty() && !cols[6].is_empty(), "{line}");
    }
    let out = esn(&["run", "div.toml", "--out-dir", "b", "--strict"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_predict_roundtrip_and_guided_lengths() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), SMALL).unwrap();
    ok(&esn(&["train", "exp.toml", "--model-out", "m.esn"], dir.path()));
    ok(&esn(&["predict", "m.esn", "--steps", "200", "--out", "p.csv"], dir.path()));
    ok(&esn(&["run", "exp.toml", "--out-dir", "r"], dir.path()));

    let predicted: Vec<String> = fs::read_to_string(dir.path().join("p.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    let tracked: Vec<String> = fs::read_to_string(dir.path().join("r/tracking/mackey-glass_esn_seed0.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    assert_eq!(predicted, tracked);

    ok(&esn(&["gen", "mg", "--n", "500", "--out", "in.csv"], dir.path()));
    ok(&esn(
        &["predict", "m.esn", "--mode", "guided", "--input", "in.csv", "--out", "g.csv"],
        dir.path(),
    ));
    let rows = fs::read_to_string(dir.path().join("g.csv")).unwrap().lines().count();
    assert_eq!(rows, 501);

    let missing = esn(&["predict", "m.esn", "--mode", "guided", "--out", "g.csv"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn predict_on_untrained_model_is_a_typed_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), SMALL).unwrap();
    ok(&esn(&["train", "exp.toml", "--model-out", "m.esn"], dir.path()));
    let text = fs::read_to_string(dir.path().join("m.esn")).unwrap();
    let start = text.find("[w_out]").unwrap();
    let end = text.find("[last_state]").unwrap();
    fs::write(dir.path().join("u.esn"), format!("{}{}", &text[..start], &text[end..])).unwrap();
    let out = esn(&["predict", "u.esn", "--out", "p.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no trained readout"));
}

#[test]
fn ensemble_train_and_report_merge() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[ensemble]\nkind = \"bagging\"\nmembers = 3\n").replace("repeats = 3", "repeats = 2");
    fs::write(dir.path().join("ens.toml"), &text).unwrap();
    ok(&esn(&["train", "ens.toml", "--model-out", "e.ens"], dir.path()));
    assert!(dir.path().join("e_member_2.esn").exists());
    ok(&esn(&["predict", "e.ens", "--steps", "200", "--out", "p.csv"], dir.path()));
    ok(&esn(&["run", "ens.toml", "--out-dir", "a"], dir.path()));
    let predicted = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let tracked = fs::read_to_string(dir.path().join("a/tracking/mackey-glass_esn+bagging3_seed0.csv")).unwrap();
    let last_col: Vec<&str> = tracked.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(predicted.lines().skip(1).collect::<Vec<_>>(), last_col);

    let header = fs::read_to_string(dir.path().join("a/report.csv")).unwrap();
    assert!(header.starts_with("dataset,label,seed,mse,mae,rmse,diverged_at,jensen_bound,error_reduction\n"));

    ok(&esn(&["run", "ens.toml", "--seed", "2", "--out-dir", "b"], dir.path()));
    ok(&esn(&["report-merge", "a/report.csv", "b/report.csv", "--out-dir", "m"], dir.path()));
    let merged = fs::read_to_string(dir.path().join("m/report.csv")).unwrap();
    assert_eq!(merged.lines().count(), 1 + 8);
    let md = fs::read_to_string(dir.path().join("m/report.md")).unwrap();
    assert!(md.contains("## Error reduction"));
    let clash = esn(&["report-merge", "a/report.csv", "a/report.csv", "--out-dir", "n"], dir.path());
    assert_eq!(clash.status.code(), Some(1));
}
