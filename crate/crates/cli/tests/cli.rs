use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_confplane");

fn schema() -> &'static jsonschema::Validator {
    static V: OnceLock<jsonschema::Validator> = OnceLock::new();
    V.get_or_init(|| {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
        let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        jsonschema::validator_for(&schema).unwrap()
    })
}

fn exec(args: &[&str], dir: Option<&Path>, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("CONFPLANE_") {
            cmd.env_remove(k);
        }
    }
    cmd.envs(env.iter().copied());
    if let Some(d) = dir {
        cmd.current_dir(d);
    }
    cmd.output().unwrap()
}

/// Runs a command that must succeed and returns its schema-checked report.
fn report_in(args: &[&str], dir: Option<&Path>, env: &[(&str, &str)]) -> Value {
    let out = exec(args, dir, env);
    assert!(
        out.status.success(),
        "{args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let errors: Vec<String> = schema().iter_errors(&v).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}");
    v
}

fn report(args: &[&str]) -> Value {
    report_in(args, None, &[])
}

#[test]
fn flat_factor_has_zero_curvature() {
    let v = report(&["curvature", "--u", "0", "--window", "1", "--n", "33"]);
    let r = &v["result"];
    assert_eq!(r["flat"], true);
    assert_eq!(r["k"].as_array().unwrap().len(), 33);
    for row in r["k"].as_array().unwrap()[1..32].iter() {
        for k in &row.as_array().unwrap()[1..32] {
            assert_eq!(k.as_f64(), Some(0.0));
        }
    }
    assert!(r["k"][0][0].is_null());
}

#[test]
fn analyze_golden_family() {
    let fast = ["--angles", "16"];
    let run = |c: f64| {
        let u = format!("{c}*log(1+x^2+y^2)");
        let mut args = vec!["analyze", "--u", u.as_str()];
        args.extend(fast);
        report(&args)["result"].clone()
    };
    let r = run(0.25);
    assert_eq!(r["subharmonic"]["pass"], true);
    assert!((r["alpha"]["value"].as_f64().unwrap() - 0.5).abs() < 0.03);
    assert_eq!(r["completeness"]["class"], "Complete");
    assert_eq!(r["agreement"], "agree");
    assert_eq!(r["flatness"]["flat"], false);

    let r = run(1.0);
    assert_eq!(r["completeness"]["class"], "Incomplete");
    assert_eq!(r["oracle"]["verdict"], "IncompleteWitness");
    assert_eq!(r["agreement"], "agree");

    // α = 1 exactly: complete, but never certified either way by the rays.
    let r = run(0.5);
    assert!((r["alpha"]["value"].as_f64().unwrap() - 1.0).abs() < 0.03);
    assert_eq!(r["completeness"]["class"], "BorderlineComplete");
    assert_ne!(r["oracle"]["verdict"], "IncompleteWitness");
    assert_eq!(r["agreement"], "inconclusive");
}

#[test]
fn harmonic_factor_is_flat_and_incomplete() {
    let r = report(&["analyze", "--u", "x", "--angles", "16"])["result"].clone();
    assert_eq!(r["alpha"]["infinite"], true);
    assert_eq!(r["flatness"]["flat"], true);
    let w = &r["oracle"]["witness"];
    assert!((w["length"].as_f64().unwrap() - (-1f64).exp()).abs() < 1e-6);
}

#[test]
fn revolve_then_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = Some(dir.path());
    let v = report_in(
        &["deform", "revolve", "--profile", "x^2", "--window", "1.5", "--n", "129", "--out-prefix", "p", "--svg", "k.svg"],
        d,
        &[],
    );
    assert_eq!(v["outputs"].as_array().unwrap().len(), 4);
    let svg = std::fs::read_to_string(dir.path().join("k.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    let files = ["--E", "p.E.cpg", "--F", "p.F.cpg", "--G", "p.G.cpg"];
    let mut args = vec!["beltrami", "roundtrip"];
    args.extend(files);
    let v = report_in(&args, d, &[]);
    let rt = &v["result"]["roundtrip"];
    assert!(rt["deviation"].as_f64().unwrap() <= 1e-2, "{rt}");
    let digests: Vec<&str> = v["input"]["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["sha256"].as_str().unwrap())
        .collect();
    assert_eq!(digests.len(), 3);
    assert_ne!(digests[0], digests[1]);

    let mut args = vec!["beltrami", "decompose", "--out-prefix", "d", "--svg", "mu.svg"];
    args.extend(files);
    let v = report_in(&args, d, &[]);
    assert_eq!(v["result"]["contracting"], true);
    let v = report_in(&["beltrami", "solve", "--mu-re", "d.mu.re.cpg", "--mu-im", "d.mu.im.cpg"], d, &[]);
    let r = &v["result"];
    assert_eq!(r["orientation_preserving"], true);
    assert_eq!(r["lattice"]["n"], 129);
    let p1 = &r["phi_at_1"];
    assert!((p1[0].as_f64().unwrap() - 1.0).abs() < 1e-12 && p1[1].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn constant_coefficient_matches_affine_map() {
    let r = report(&["beltrami", "solve", "--mu", "0.3,0", "--window", "4", "--n", "256"])["result"].clone();
    assert!(r["affine_reference"]["max_error"].as_f64().unwrap() <= 1e-2);
    assert!(r["report"]["iterations"].as_u64().unwrap() <= 60);
    assert!(r["report"]["residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn disc_cone_profile_is_flat_on_the_unit_disc() {
    let r = report(&["deform", "revolve", "--n", "129"])["result"].clone();
    assert_eq!(r["unit_disc_deviation"].as_f64(), Some(0.0));
    assert_eq!(r["curvature"]["nonnegative"], true);
}

#[test]
fn completion_and_convex_paths() {
    let dir = tempfile::tempdir().unwrap();
    let v = report_in(
        &["complete", "--u", "x", "--s", "1", "--angles", "8", "--rays-csv", "rays.csv"],
        Some(dir.path()),
        &[],
    );
    let row = &v["result"]["path"][0];
    assert!(row["min_length_ratio"].as_f64().unwrap() >= 0.99);
    assert_eq!(row["oracle"]["verdict"], "NoWitnessFound");
    let csv = std::fs::read_to_string(dir.path().join("rays.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("ray,angle,radius,partial_length"));
    assert!(csv.lines().count() > 8);

    let v = report(&["deform", "convex", "--u0", "0.1*log(1+x^2+y^2)", "--u1", "0.6*log(1+x^2+y^2)", "--s", "0,0.5,1"]);
    let path = v["result"]["path"].as_array().unwrap();
    let alphas: Vec<f64> = path.iter().map(|p| p["alpha"].as_f64().unwrap()).collect();
    assert!((alphas[1] - 0.7).abs() < 0.03, "{alphas:?}");
    assert!(path.iter().all(|p| p["within_endpoint_bound"] == true));
    assert_eq!(path[0]["u"], "0.1*log(1+x^2+y^2)");
}

#[test]
fn oracle_path_length() {
    let v = report(&["oracle", "--u", "x", "--path", "0,0;3,0", "--angles", "8"]);
    let len = v["result"]["path"]["length"]["value"].as_f64().unwrap();
    assert!((len - (1.0 - (-3f64).exp())).abs() < 1e-8);
}

#[test]
fn alpha_profile_csv_and_membership() {
    let dir = tempfile::tempdir().unwrap();
    let v = report_in(
        &["alpha", "--u", "0.25*log(1+x^2+y^2)", "--member-of", "0.5", "--profile-csv", "prof.csv"],
        Some(dir.path()),
        &[],
    );
    assert_eq!(v["result"]["membership"]["member"], true);
    let csv = std::fs::read_to_string(dir.path().join("prof.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[0], 1e6);
    assert!((last[2] - 0.25 * (1.0 + 1e12f64).ln()).abs() < 1e-9);
}

#[test]
fn flags_override_environment_which_overrides_defaults() {
    let args = ["curvature", "--u", "x^2+y^2", "--window", "1"];
    let v = report_in(&args, None, &[]);
    assert_eq!(v["parameters"]["n"], 129);
    assert_eq!(v["parameter_sources"]["n"], "default");
    assert_eq!(v["parameter_sources"]["flat_tol"], "default");
    assert_eq!(v["parameters"]["flat_tol"], 1e-6);

    let v = report_in(&args, None, &[("CONFPLANE_N", "17")]);
    assert_eq!(v["parameters"]["n"], 17);
    assert_eq!(v["parameter_sources"]["n"], "env");

    let mut with_flag = args.to_vec();
    with_flag.extend(["--n", "9"]);
    let v = report_in(&with_flag, None, &[("CONFPLANE_N", "17")]);
    assert_eq!(v["parameters"]["n"], 9);
    assert_eq!(v["parameter_sources"]["n"], "flag");
    assert_eq!(v["result"]["lattice"]["n"], 9);
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let args = ["analyze", "--u", "0.3*log(1+x^2+y^2)+0.1*x", "--angles", "16"];
    let a = exec(&args, None, &[]);
    let b = exec(&args, None, &[]);
    let strip = |o: &Output| {
        let s = String::from_utf8(o.stdout.clone()).unwrap();
        s[..s.find("\"timings\"").unwrap()].to_string()
    };
    assert!(a.status.success() && b.status.success());
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn usage_errors_exit_with_one_and_print_help() {
    let out = exec(&["analyze"], None, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage: confplane analyze"), "{err}");
    assert!(out.stdout.is_empty());

    for args in [
        vec!["analyze", "--u", "1+"],
        vec!["frobnicate"],
        vec!["curvature", "--u", "x", "--n", "2"],
        vec!["beltrami", "roundtrip", "--E", "missing.cpg", "--F", "f", "--G", "g"],
        vec!["deform", "revolve", "--profile", "-x^2+4"],
        vec!["oracle", "--u", "x", "--path", "1,2;3"],
    ] {
        let out = exec(&args, None, &[]);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(exec(&["--help"], None, &[]).status.code(), Some(0));
    assert_eq!(exec(&["beltrami", "--help"], None, &[]).status.code(), Some(0));
}

#[test]
fn numeric_failures_exit_with_two() {
    let out = exec(&["beltrami", "solve", "--mu", "0.3,0", "--n", "64", "--max-iterations", "1"], None, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numeric failure"));
    assert!(out.stdout.is_empty());
}
