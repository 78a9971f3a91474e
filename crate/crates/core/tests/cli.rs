use std::path::Path;
use std::process::{Command, Output};

fn gvs(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gvar-spill"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn every_command_runs_on_simulated_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gvs(&["simulate", "--out", "data", "--n", "6", "--t", "300", "--seed", "5"], d));
    for f in ["activity.csv", "declarations.csv", "counties.csv", "trade.csv", "config.toml", "truth.csv"] {
        assert!(d.join("data").join(f).exists(), "{f}");
    }
    let cfg = "data/config.toml";
    let runs: [(&[&str], &[&str]); 8] = [
        (&["shocks"], &["state_shocks.csv", "national_shock.csv"]),
        (&["summarize"], &["declarations_by_group.csv", "national_peaks.csv"]),
        (&["estimate"], &["estimates.csv", "diagnostics.csv"]),
        (&["gvar"], &["stability.csv"]),
        (&["irf", "--region", "SW", "--horizon", "12"], &["irf_SW_states.csv", "irf_SW_regions.csv", "irf_headline.csv"]),
        (
            &["bootstrap", "--region", "SW", "--replications", "30", "--horizon", "12"],
            &["bootstrap_SW_states.csv", "bootstrap_SW_regions.csv", "bootstrap_SW_info.csv"],
        ),
        (&["second-round", "--horizon", "12"], &["second_round.csv"]),
        (&["shocks", "--event-group", "storm,flood"], &["state_shocks.csv"]),
    ];
    for (i, (args, files)) in runs.iter().enumerate() {
        let out_dir = format!("out{i}");
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--config", cfg, "--out", &out_dir]);
        ok(&gvs(&full, d));
        for f in *files {
            assert!(d.join(&out_dir).join(f).exists(), "{} missing after {:?}", f, args);
        }
        let manifest = std::fs::read_dir(d.join(&out_dir))
            .unwrap()
            .filter_map(|e| e.ok())
            .any(|e| e.file_name().to_string_lossy().starts_with("manifest_"));
        assert!(manifest, "no manifest after {args:?}");
    }

    let states = std::fs::read_to_string(d.join("out6/second_round.csv")).unwrap();
    assert_eq!(states.lines().next().unwrap(), "state,horizon,gvar,muted,second_round");
    assert_eq!(states.lines().count(), 7);
}

#[test]
fn compare_prints_three_panels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gvs(&["simulate", "--out", "data", "--n", "8", "--t", "240", "--seed", "2"], d));
    // keep the bias correction short
    let path = d.join("data/config.toml");
    let mut cfg: gvar_spill::config::RunConfig = toml::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    cfg.compare.bias_correction.draws = 10;
    cfg.compare.bias_correction.tolerance = 1e-3;
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    let out = gvs(&["compare", "--config", "data/config.toml", "--out", "cmp"], d);
    ok(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for panel in ["(a)", "(b)", "(c)"] {
        assert!(stdout.contains(panel), "{stdout}");
    }
    assert_eq!(std::fs::read_to_string(d.join("cmp/comparison.txt")).unwrap(), stdout);
}

#[test]
fn failures_emit_a_json_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = gvs(&["estimate", "--config", "missing.toml"], dir.path());
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "InputMissing");
    assert!(err["message"].as_str().unwrap().contains("missing.toml"));

    std::fs::write(dir.path().join("bad.toml"), "[model]\nlags = 0\n").unwrap();
    let out = gvs(&["estimate", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "ConfigError");
}

#[test]
fn unknown_region_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gvs(&["simulate", "--out", "data", "--n", "4", "--t", "200"], d));
    let out = gvs(&["irf", "--region", "XX", "--config", "data/config.toml", "--out", "o"], d);
    assert!(!out.status.success());
    assert!(serde_json::from_slice::<serde_json::Value>(&out.stderr).is_ok());
}
