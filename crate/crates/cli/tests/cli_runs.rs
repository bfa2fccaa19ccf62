use std::fs;
use std::path::Path;
use std::process::Command as Process;

use seqauction_cli::config::{load_scenario, BUILTIN};
use seqauction_cli::manifest::{Command, RunManifest, MANIFEST_FILE};
use seqauction_cli::run::run_experiment;
use seqauction_cli::Failure;

fn manifest(name: &str, command: Command, samples: usize) -> RunManifest {
    let mut file = load_scenario(name).unwrap().file;
    file.samples = samples;
    let seed = file.seed;
    RunManifest::new(command, Some(name.into()), Some(file), seed, samples, 0.01)
}

fn applicable(name: &str) -> Vec<Command> {
    let matroid = load_scenario(name).unwrap().scenario.is_matroid();
    let mut out = vec![
        Command::Simulate,
        Command::Poa,
        Command::Deviate { player: if matroid { 2 } else { 0 }, value: if name == "single-value-bipartite" { 0.9 } else { 0.6 } },
        Command::Solve { types: 11, bids: 11, sweeps: 1 },
    ];
    // myopic play is not an equilibrium, so verify is expected to fail there
    if name != "single-value-bipartite" {
        out.push(Command::Verify);
    }
    out
}

fn seqauction(args: &[&str]) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_seqauction")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn every_scenario_runs_every_applicable_command() {
    for (name, _) in BUILTIN {
        for command in applicable(name) {
            let dir = tempfile::tempdir().unwrap();
            let m = manifest(name, command.clone(), 1000);
            run_experiment(&m, dir.path()).unwrap_or_else(|e| panic!("{name} {command:?}: {e}"));
            for file in command.outputs() {
                assert!(dir.path().join(file).is_file(), "{name} {command:?} wrote no {file}");
            }
            assert_eq!(RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap(), m);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let m = RunManifest::new(Command::EmitBidfn { points: 11 }, None, None, 0, 0, 0.0);
    run_experiment(&m, dir.path()).unwrap();
    let last = read(dir.path(), "bidfn.csv").lines().last().unwrap().to_string();
    let cols: Vec<&str> = last.split(',').collect();
    assert_eq!(cols[0], "1");
    assert!((cols[1].parse::<f64>().unwrap() - (1.0 - 2f64.ln())).abs() < 1e-12);
}

#[test]
fn reruns_are_byte_identical() {
    for (name, _) in BUILTIN {
        let first = tempfile::tempdir().unwrap();
        let second = tempfile::tempdir().unwrap();
        let m = manifest(name, Command::Poa, 2000);
        run_experiment(&m, first.path()).unwrap();
        let manifest_path = first.path().join(MANIFEST_FILE);
        let (code, _, err) = seqauction(&["rerun", manifest_path.to_str().unwrap(), "--out", second.path().to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        for file in ["poa.csv", "summary.txt"] {
            assert_eq!(read(first.path(), file), read(second.path(), file), "{name} {file}");
        }
    }
}

#[test]
fn exit_codes_follow_failure_categories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    assert_eq!(seqauction(&["poa", "--scenario", empty.to_str().unwrap(), "--out", out]).0, 2);

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, BUILTIN[0].1.replacen('{', "{\"colour\": 1,", 1)).unwrap();
    let (code, _, err) = seqauction(&["poa", "--scenario", unknown.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2);
    assert!(err.contains("colour"), "{err}");

    let (code, _, err) = seqauction(&["verify", "--scenario", "single-value-bipartite", "--samples", "1000", "--out", out]);
    assert_eq!(code, 3);
    assert!(err.contains("profitable deviation"), "{err}");

    let (code, stdout, _) = seqauction(&["poa", "--scenario", "three-bidder-two-items", "--samples", "1000", "--seed", "5", "--out", out]);
    assert_eq!(code, 0);
    assert!(stdout.contains("ratio"));

    assert!(matches!(
        run_experiment(&manifest("triangle-matroid", Command::Poa, 10), dir.path()),
        Err(Failure::Schema(_))
    ));
}
