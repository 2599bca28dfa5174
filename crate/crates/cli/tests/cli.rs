use std::process::{Command, Output};

fn arbfun(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arbfun")).args(args).output().expect("binary runs")
}

fn csv(args: &[&str]) -> String {
    let out = arbfun(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn list_contains_catalog() {
    let text = csv(&["list"]);
    for id in ["thm4-gamma", "thm5-oscillating", "thm9-chaos", "thm11-euler"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing");
    }
    assert_eq!(text, csv(&["list"]));
}

#[test]
fn graduation_is_byte_identical_across_runs_and_threads() {
    let args = ["graduation", "--seed", "1", "--replicates", "4000"];
    let a = csv(&args);
    let b = csv(&args);
    assert_eq!(a, b);
    let mut four = args.to_vec();
    four.extend(["--threads", "4"]);
    assert_eq!(a, csv(&four));
    let mut other = args.to_vec();
    other[2] = "2";
    assert_ne!(a, csv(&other));
}

#[test]
fn csv_schema_and_identity_gamma_row() {
    let text = csv(&["graduation", "--experiment", "thm4-gamma", "--replicates", "20000", "--function", "identity"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("experiment,n,statistic,estimate,std_error,target,provenance,z_score"));
    let inf = text.lines().find(|l| l.starts_with("thm4-gamma,inf,")).expect("extrapolated row");
    let fields: Vec<&str> = inf.split(',').collect();
    assert_eq!(fields.len(), 8);
    assert_eq!(fields[5].parse::<f64>().unwrap(), 1.0 / 12.0);
    assert_eq!(fields[6], "paper");
    assert!(fields[7].parse::<f64>().unwrap().abs() <= 4.0);
    for l in text.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 8, "{l}");
        if !f[5].is_empty() {
            assert!(["paper", "analytic-oracle", "simulation-oracle"].contains(&f[6]), "{l}");
        }
    }
}

#[test]
fn config_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("rows.csv");
    std::fs::write(&cfg, "# small run\nexperiment = thm9-chaos\nn_ladder = 4, 8\n").unwrap();
    let status = arbfun(&["chaos", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("thm9-chaos,8,n2_norm_sq[k=1]")));
}

#[test]
fn unsupported_system_fails_with_diagnostic() {
    let out = arbfun(&["sde", "--system", "geometric", "--replicates", "100", "--n-ladder", "4,8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the supported class"));
}

#[test]
fn invalid_inputs_are_rejected() {
    for args in [
        vec!["all", "--experiment", "no-such-id"],
        vec!["sde", "--n-ladder", "8,4"],
        vec!["paths", "--grid-mult", "8"],
        vec!["chaos", "--experiment", "thm4-gamma"],
    ] {
        let out = arbfun(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn failing_gate_gives_nonzero_exit() {
    // A gate of 1e-9 sigma cannot hold for a Monte Carlo row.
    let out = arbfun(&["graduation", "--experiment", "thm4bis-general", "--replicates", "2000", "--gate", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}
