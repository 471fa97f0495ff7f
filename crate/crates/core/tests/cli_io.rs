use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use wildlab::io::{run_command, Command, ExperimentConfig, InitialSection, RunOptions, Status};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs_dir().join(name)).unwrap()
}

fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> wildlab::io::Outcome {
    let opts = RunOptions {
        out: out.to_path_buf(),
        seed: None,
        strict: false,
    };
    run_command(cmd, cfg, &opts).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

const CONSTANT: &str = r#"
[grid]
dim = 2
n = 16

[initial]
kind = "constant"
momentum = [1.0, 0.0]

[solver]
t_end = 0.05

[profile]
kind = "constant"
value = 0.5

[wave]
n = [1, 2, 3]
"#;

#[test]
fn config_round_trips() {
    let mut texts: Vec<String> = fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    texts.push(CONSTANT.into());
    texts.push(
        r#"
[grid]
dim = 3
n = 8
[pressure]
kind = "table"
rho = [0.5, 1.0, 2.0]
p = [0.25, 1.0, 4.0]
interval = [0.4, 2.5]
[profile]
kind = "table"
times = [0.0, 0.05, 0.1]
values = [0.3, 0.2, 0.1]
[budget]
match_time = 0.05
"#
        .into(),
    );
    for text in texts {
        let a = ExperimentConfig::from_toml(&text).unwrap();
        let b = ExperimentConfig::from_toml(&a.to_toml()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.to_toml(), b.to_toml());
    }
}

#[test]
fn config_rejects_bad_input() {
    let cases = [
        ("[grid]\ndim = 4\nn = 16\n", "config.invalid"),
        ("[grid]\ndim = 2\nn = 12\n", "config.invalid"),
        ("[grid]\ndim = 2\nn = 16\ncolour = 1\n", "config.parse"),
        ("[grid\n", "config.parse"),
        ("[grid]\ndim = 2\nn = 32\n[initial]\nkind = \"file\"\npath = \"/nonexistent.wef\"\n", "config.missing"),
        ("[grid]\ndim = 2\nn = 32\n[initial]\nkind = \"constant\"\nrho = -1.0\n", "config.invalid"),
    ];
    for (text, class) in cases {
        let err = ExperimentConfig::from_toml(text).and_then(|c| c.validate());
        assert_eq!(err.unwrap_err().class(), class, "{text}");
    }
}

#[test]
fn constant_state_reports_zero_drifts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(CONSTANT).unwrap();
    let out = run(Command::Solve, &cfg, tmp.path());
    assert_eq!(out.status, Status::Ok);
    let rep = json(&out.run_dir, "solve.json");
    for key in ["mass_drift", "momentum_drift", "energy_drift"] {
        assert_eq!(rep["solver"][key].as_f64(), Some(0.0), "{key}");
    }
    assert_eq!(rep["solver"]["completed"], true);
    assert_eq!(rep["format_version"], "wildlab-report/1");
    assert!(out.run_dir.join("snapshots/snap_00000.wef").exists());
    assert!(out.run_dir.join("config.toml").exists());
}

#[test]
fn certify_reports_zero_margin_and_wave_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(CONSTANT).unwrap();
    let out = run(Command::Certify, &cfg, tmp.path());
    let rep = json(&out.run_dir, "certify.json");
    let zero = rep["zero"]["margin_min"].as_f64().unwrap();
    assert!((zero - 0.5).abs() <= 1e-12, "{zero}");
    let waves = rep["waves"].as_array().unwrap();
    assert_eq!(waves.len(), 3);
    for w in waves {
        assert_eq!(w["verdict"], "pass");
        assert!(w["certification"]["margin_min"].as_f64().unwrap() > 0.0);
    }
    let csv = fs::read_to_string(out.run_dir.join("margins.csv")).unwrap();
    assert!(csv.starts_with("candidate,n,time,min"));
}

#[test]
fn zero_profile_is_rejected_with_positivity_message() {
    let text = CONSTANT.replace("value = 0.5", "value = 0.0");
    let err = ExperimentConfig::from_toml(&text).unwrap().validate().unwrap_err();
    assert_eq!(err.class(), "config.invalid");
    assert!(err.to_string().contains("strictly positive"), "{err}");
}

#[test]
fn budget_report_shows_lambda0() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(CONSTANT).unwrap();
    let out = run(Command::Budget, &cfg, tmp.path());
    let rep = json(&out.run_dir, "budget.json");
    assert_eq!(rep["budget"]["lambda0"].as_f64(), Some(0.00125));
    assert_eq!(rep["budget"]["target_eps"].as_f64(), Some(0.1));
}

#[test]
fn constant_state_window_spans_the_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(CONSTANT).unwrap();
    let out = run(Command::Window, &cfg, tmp.path());
    let rep = json(&out.run_dir, "window.json");
    assert_eq!(rep["window"]["t_w"].as_f64(), Some(0.05));
    assert_eq!(rep["window"]["empty"], false);
}

#[test]
fn window_sweep_reports_first_nonempty_eps() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = load("bump.toml");
    cfg.profile = wildlab::io::ProfileSection::Exponential { eps: 50.0 };
    let out = run(Command::Window, &cfg, tmp.path());
    let rep = json(&out.run_dir, "window.json");
    assert_eq!(rep["window"]["empty"], true);
    let eps = rep["sweep"]["eps"].as_f64().unwrap();
    assert!(eps > 0.0 && eps <= 0.2);
    assert!(rep["sweep"]["window"]["t_w"].as_f64().unwrap() > 0.0);
}

#[test]
fn acoustic_error_shrinks_under_refinement() {
    let tmp = tempfile::tempdir().unwrap();
    let mut errors = Vec::new();
    for n in [32, 64, 128] {
        let mut cfg = load("acoustic.toml");
        cfg.grid.n = n;
        let out = run(Command::Solve, &cfg, tmp.path());
        let rep = json(&out.run_dir, "solve.json");
        errors.push(rep["solver"]["acoustic_oracle_error"].as_f64().unwrap());
    }
    assert!(errors[2] < errors[1] && errors[1] < errors[0], "{errors:?}");
    assert!(errors[2] <= 1e-7);
    // The linear oracle itself is off by O(δ²); the discretization part on
    // top of that floor decays at the fourth order of the CFL step.
    let ratio = (errors[0] - errors[1]) / (errors[1] - errors[2]);
    assert!((8.0..32.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn gaussian_bump_completes_without_blowup() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = load("bump.toml");
    cfg.solver = Default::default();
    let out = run(Command::Solve, &cfg, tmp.path());
    assert_eq!(out.status, Status::Ok);
    let rep = json(&out.run_dir, "solve.json");
    assert_eq!(rep["solver"]["t_reached"], rep["solver"]["t_end"]);
    assert!(rep["solver"]["blowup"].is_null());
}

#[test]
fn certify_reuses_stored_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(CONSTANT).unwrap();
    let first = run(Command::Solve, &cfg, tmp.path());
    let snap = first.run_dir.join("snapshots/snap_00000.wef");
    let before = fs::metadata(&snap).unwrap().modified().unwrap();
    run(Command::Certify, &cfg, tmp.path());
    assert_eq!(fs::metadata(&snap).unwrap().modified().unwrap(), before);
}

#[test]
fn seed_override_changes_random_data_and_run_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load("random.toml");
    let a = cfg.initial_data().unwrap();
    let mut other = cfg.clone();
    other.seed += 1;
    let b = other.initial_data().unwrap();
    assert_ne!(a.rho.values(), b.rho.values());
    assert_eq!(a.rho.values(), cfg.initial_data().unwrap().rho.values());

    let opts = |seed| RunOptions {
        out: tmp.path().to_path_buf(),
        seed,
        strict: false,
    };
    let r1 = run_command(Command::Solve, &cfg, &opts(None)).unwrap();
    let r2 = run_command(Command::Solve, &cfg, &opts(Some(cfg.seed + 1))).unwrap();
    assert_ne!(r1.run_dir, r2.run_dir);
    assert!(matches!(cfg.initial, InitialSection::RandomLowMode { .. }));
}

#[test]
fn report_renders_text_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(CONSTANT).unwrap();
    run(Command::Budget, &cfg, tmp.path());
    let out = run(Command::Report, &cfg, tmp.path());
    assert!(out.summary.iter().any(|l| l.starts_with("budget.lambda0") && l.ends_with("0.00125")));
    let csv = fs::read_to_string(out.run_dir.join("summary.csv")).unwrap();
    assert!(csv.contains("budget,budget.lambda0,0.00125"));
}

fn cli(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = Process::new(env!("CARGO_BIN_EXE_wildlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8(o.stdout).unwrap(),
        String::from_utf8(o.stderr).unwrap(),
    )
}

fn assert_error_line(stderr: &str, class: &str) {
    let lines: Vec<_> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    assert!(lines[0].starts_with(&format!("error[{class}]: ")), "{stderr}");
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let write = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_owned()
    };

    let good = write("good.toml", CONSTANT);
    let (code, stdout, stderr) = cli(&["certify", "--config", &good, "--strict"], &out);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("zero candidate"));
    let (code, stdout, _) = cli(&["solve", "--config", &good, "--quiet", "--threads", "2"], &out);
    assert_eq!((code, stdout.as_str()), (0, ""));

    let (code, _, stderr) = cli(&["solve"], &out);
    assert_eq!(code, 2);
    assert_error_line(&stderr, "config.missing");

    let (code, _, stderr) = cli(&["explode"], &out);
    assert_eq!(code, 2);
    assert_error_line(&stderr, "usage");

    let zero = write("zero.toml", &CONSTANT.replace("value = 0.5", "value = 0.0"));
    let (code, _, stderr) = cli(&["certify", "--config", &zero], &out);
    assert_eq!(code, 2);
    assert_error_line(&stderr, "config.invalid");

    let typo = write("typo.toml", &CONSTANT.replace("t_end", "t_ned"));
    let (code, _, stderr) = cli(&["solve", "--config", &typo], &out);
    assert_eq!(code, 2);
    assert_error_line(&stderr, "config.parse");

    let steep = write(
        "steep.toml",
        "[grid]\ndim = 2\nn = 32\n[initial]\nkind = \"acoustic\"\namplitude = 0.5\n[solver]\nt_end = 3.0\nsnap_every = 50\n",
    );
    let (code, _, stderr) = cli(&["solve", "--config", &steep], &out);
    assert_eq!(code, 3, "{stderr}");
    assert_error_line(&stderr, "numerical.abort");

    let bump = fs::read_to_string(configs_dir().join("bump.toml")).unwrap();
    let wide = write("wide.toml", &bump.replace("eps = 0.2", "eps = 50.0"));
    let (code, _, _) = cli(&["window", "--config", &wide], &out);
    assert_eq!(code, 0);
    let (code, _, stderr) = cli(&["window", "--config", &wide, "--strict"], &out);
    assert_eq!(code, 4);
    assert_error_line(&stderr, "certification");

    let (code, _, stderr) = cli(&["report", tmp.path().join("nowhere").to_str().unwrap()], &out);
    assert_eq!(code, 2);
    assert_error_line(&stderr, "config.missing");
}
