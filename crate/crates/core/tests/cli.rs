use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = r#"
seed = 11
estimators = ["fft", "music", "omp", "anm"]

[simulate]
n_samples = 300

[train]
epochs = 14

[train.data]
samples_per_epoch = 128

[eval]
n_trials = 6
snr_db = 20.0
xi = 0.0
xi_sweep = [0.0, 0.5, 1.0]
snr_sweep = { start = 0.0, stop = 20.0, step = 10.0 }
"#;

fn sdoa(args: &[&str], dir: &Path) -> Output {
    let config = dir.join("quick.toml");
    if !config.exists() {
        std::fs::write(&config, QUICK).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_sdoa"))
        .args(args)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn simulate_writes_dataset_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdoa(&["simulate", "--single-thread"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, snaps, stages) =
        sdoa::array::read_dataset(&dir.path().join("dataset.bin")).unwrap();
    assert_eq!(header.count, 300);
    assert_eq!(snaps.len(), 300);
    assert_eq!(stages.len(), 300);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dataset.json")).unwrap())
            .unwrap();
    assert_eq!(meta["master_seed"], 11);
}

#[test]
fn train_history_cycles_the_curriculum() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdoa(&["train"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv(&dir.path().join("history.csv"));
    assert_eq!(rows[0], ["epoch", "stage", "loss"]);
    assert_eq!(rows.len(), 15);
    let stages: Vec<&str> = rows[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(stages[..7], stages[7..]);
    assert_eq!(stages[0], "perfect");
    assert!(rows[1..]
        .iter()
        .all(|r| r[2].parse::<f64>().unwrap() >= 0.0));
    assert!(sdoa::net::load_model(&dir.path().join("model.bin")).is_ok());
}

#[test]
fn eval_sweeps_have_expected_rows_and_agree_at_zero_xi() {
    let dir = tempfile::tempdir().unwrap();
    let a = sdoa(&["eval-snr"], dir.path());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = sdoa(&["eval-imperfect"], dir.path());
    assert_eq!(code(&b), 0, "{}", String::from_utf8_lossy(&b.stderr));

    let snr = csv(&dir.path().join("rmse_snr.csv"));
    let xi = csv(&dir.path().join("rmse_xi.csv"));
    assert_eq!(
        snr[0],
        [
            "estimator",
            "snr_db",
            "rmse_deg",
            "n_trials",
            "median_runtime_ms"
        ]
    );
    assert_eq!(
        xi[0],
        [
            "estimator",
            "xi",
            "rmse_deg",
            "n_trials",
            "median_runtime_ms"
        ]
    );
    assert_eq!(snr.len(), 1 + 4 * 3);
    assert_eq!(xi.len(), 1 + 4 * 3);

    let mut keys: Vec<(String, f64)> = xi[1..]
        .iter()
        .map(|r| (r[0].clone(), r[1].parse().unwrap()))
        .collect();
    let sorted = {
        let mut k = keys.clone();
        k.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        k
    };
    assert_eq!(keys, sorted);
    keys.dedup();
    assert_eq!(keys.len(), 12);

    for row in xi[1..]
        .iter()
        .filter(|r| r[1].parse::<f64>().unwrap() == 0.0)
    {
        let twin = snr[1..]
            .iter()
            .find(|s| s[0] == row[0] && s[1].parse::<f64>().unwrap() == 20.0)
            .unwrap();
        assert_eq!(twin[2], row[2], "{}", row[0]);
    }
    for r in snr[1..].iter().chain(&xi[1..]) {
        assert!(r[2].parse::<f64>().unwrap() >= 0.0);
        assert_eq!(r[3], "6");
    }
}

#[test]
fn spectrum_writes_one_file_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdoa(
        &["spectrum", "--doas", "-30,10,20", "--snr", "25"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "spectrum_fft.csv",
        "spectrum_music.csv",
        "spectrum_omp_sticks.csv",
        "spectrum_anm.csv",
    ] {
        let rows = csv(&dir.path().join(name));
        assert_eq!(rows.len(), 1 + 1801, "{name}");
        assert_eq!(rows[0], ["angle_deg", "value"]);
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdoa(&["eval-snr", "--seed", "not-a-number"], dir.path());
    assert_eq!(code(&o), 1);
    let o = sdoa(&["spectrum", "--estimators", "capon"], dir.path());
    assert_eq!(code(&o), 1);
    let o = sdoa(&["spectrum", "--estimators", "sdoanet"], dir.path());
    assert_eq!(code(&o), 1);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sdoa"))
        .args(["simulate", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_key"));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.bin");
    let o = sdoa(
        &[
            "spectrum",
            "--estimators",
            "sdoanet",
            "--model",
            missing.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a model").unwrap();
    let o = sdoa(&["eval-snr", "--model", junk.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
}
