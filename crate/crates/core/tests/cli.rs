use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_statemerge")).args(args).env_remove("STATEMERGE_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn typ_on_uniform_bits_keeps_everything() {
    let out = run(&["typ", "--p", "0.5,0.5", "--n", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rank"], 1024);
    assert_eq!(v["weight"], 1.0);
}

#[test]
fn pure_two_party_region_has_mirrored_corners() {
    let out = run(&["region", "--state", "pure-ab", "--parties", "A,B", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let corners = v["corners"].as_array().unwrap();
    assert_eq!(corners.len(), 2);
    for c in corners {
        let r = c["rates"].as_array().unwrap();
        assert!((r[0].as_f64().unwrap() + r[1].as_f64().unwrap()).abs() < 1e-9);
    }
}

#[test]
fn csv_polygon_has_header_and_rays() {
    let out = run(&["region", "--state", "pure-ab", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "R_A,R_B,kind");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].ends_with(",ray") && lines[4].ends_with(",ray"));
}

#[test]
fn epr_merge_distills() {
    let out = run(&["merge", "--state", "epr", "--n", "2", "--L", "2", "--trials", "3", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["ebits_out"], 1.0);
    assert!(v["mean_fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
}

#[test]
fn product_state_with_max_rank_is_perfect() {
    let v = json(&run(&["merge", "--state", "product", "--L", "max", "--trials", "3"]));
    assert!((v["mean_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn every_subcommand_honors_format() {
    let cases: &[&[&str]] = &[
        &["merge", "--trials", "2"],
        &["twirl", "--samples", "200"],
        &["region", "--state", "ghz3"],
        &["assist", "--state", "ghz3", "--trials", "2"],
        &["mac"],
        &["typ", "--n", "20"],
        &["covering", "--state", "random", "--dims", "2,2,2", "--trials", "2"],
        &["side-info", "--state", "random", "--dims", "2,2,2", "--trials", "1"],
    ];
    for args in cases {
        let j = run(&[args, &["--format", "json"][..]].concat());
        assert!(serde_json::from_slice::<Value>(&j.stdout).is_ok(), "{args:?}");
        let c = run(&[args, &["--format", "csv"][..]].concat());
        let text = String::from_utf8(c.stdout).unwrap();
        let mut rows = csv::Reader::from_reader(text.as_bytes());
        let width = rows.headers().unwrap().len();
        assert!(width > 1, "{args:?}");
        assert!(rows.records().all(|r| r.map(|r| r.len() == width).unwrap_or(false)), "{args:?}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let args = ["assist", "--state", "random", "--dims", "2,2,2", "--trials", "3", "--seed", "11"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn seed_can_come_from_the_environment() {
    let args = ["merge", "--trials", "2", "--state", "random", "--dims", "2,2,2"];
    let with_env =
        Command::new(env!("CARGO_BIN_EXE_statemerge")).args(args).env("STATEMERGE_SEED", "5").output().unwrap();
    let explicit = run(&[&args[..], &["--seed", "5"]].concat());
    assert_eq!(with_env.stdout, explicit.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["merge", "--state", "nope"]).status.code(), Some(4));
    assert_eq!(run(&["typ", "--p", "0.5,0.6"]).status.code(), Some(4));
    assert_eq!(run(&["merge", "--n", "12", "--cap", "100"]).status.code(), Some(3));
    // the typical set is empty at n = 1, so the certificate fails
    assert_eq!(run(&["typ", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn output_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("statemerge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mac.json");
    let out = run(&["mac", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), run(&["mac"]).stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}
