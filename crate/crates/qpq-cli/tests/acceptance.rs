//! CLI acceptance: byte-exact determinism of every command under a fixed
//! seed (criterion 9), the worked-example fixture replay, and exit-code
//! behavior on invalid parameters.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qpq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qpq"))
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qpq-acceptance-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run_ok(args: &[&str]) -> Output {
    let output = qpq().args(args).output().expect("spawning qpq");
    assert!(
        output.status.success(),
        "qpq {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

/// Every file in the directory, keyed by name.
fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("output dir exists") {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        map.insert(name, fs::read(entry.path()).unwrap());
    }
    map
}

/// Runs the same command twice into fresh directories and demands
/// byte-identical outputs.
fn assert_deterministic(tag: &str, args: &[&str]) -> BTreeMap<String, Vec<u8>> {
    let (dir_a, dir_b) = (
        fresh_dir(&format!("{tag}-a")),
        fresh_dir(&format!("{tag}-b")),
    );
    let with_out = |dir: &Path| -> Vec<String> {
        args.iter()
            .map(ToString::to_string)
            .chain(["--out".to_string(), dir.display().to_string()])
            .collect()
    };
    run_ok(
        &with_out(&dir_a)
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    run_ok(
        &with_out(&dir_b)
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    let (bytes_a, bytes_b) = (dir_bytes(&dir_a), dir_bytes(&dir_b));
    assert_eq!(
        bytes_a.keys().collect::<Vec<_>>(),
        bytes_b.keys().collect::<Vec<_>>(),
        "file sets differ for {tag}"
    );
    for (name, bytes) in &bytes_a {
        assert_eq!(
            bytes, &bytes_b[name],
            "{tag}: {name} differs between reruns"
        );
    }
    let _ = fs::remove_dir_all(&dir_a);
    let _ = fs::remove_dir_all(&dir_b);
    bytes_a
}

#[test]
fn c9_dilute_commands_are_deterministic() {
    assert_deterministic(
        "dilute-knn",
        &[
            "dilute", "--method", "kn-n", "--n", "12", "--k", "2", "--seed", "7",
        ],
    );
    assert_deterministic(
        "dilute-nn",
        &[
            "dilute", "--method", "n-n", "--n", "24", "--k", "3", "--seed", "9",
        ],
    );
    assert_deterministic(
        "dilute-rmn",
        &[
            "dilute", "--method", "rm-n", "--m", "5", "--k", "2", "--r", "2", "--n", "10",
            "--seed", "11",
        ],
    );
    let files = assert_deterministic(
        "dilute-gkn",
        &[
            "dilute",
            "--method",
            "gkn-n",
            "--n",
            "30",
            "--g",
            "2",
            "--p",
            "0.4",
            "--seed",
            "5",
            "--dishonest",
        ],
    );
    assert!(files.contains_key("records_mok0.csv"));
    println!("criterion 9: PASS - dilute outputs byte-identical across reruns");
}

#[test]
fn c9_attack_commands_are_deterministic() {
    let files = assert_deterministic(
        "attack-nn",
        &[
            "attack-nn",
            "--n",
            "64",
            "--k",
            "2",
            "--p",
            "0.3",
            "--runs",
            "2",
            "--seed",
            "3",
            "--snapshot-at",
            "1,2,3",
            "--grid",
            "8x8",
        ],
    );
    for name in [
        "snap_q1.ppm",
        "snap_q2.ppm",
        "snap_q3.ppm",
        "dqa.csv",
        "summary.csv",
    ] {
        assert!(files.contains_key(name), "missing {name}");
    }
    assert!(files["snap_q1.ppm"].starts_with(b"P3\n8 8\n255\n"));

    assert_deterministic(
        "attack-rm",
        &[
            "attack-rm",
            "--m",
            "6",
            "--k",
            "2",
            "--r",
            "2",
            "--p",
            "0.3",
            "--seed",
            "5",
        ],
    );
    println!("criterion 9: PASS - attack outputs (CSVs and images) byte-identical");
}

#[test]
fn c9_tables_and_curves_are_deterministic() {
    assert_deterministic(
        "table1",
        &[
            "tables", "--which", "1", "--rows", "64:2", "--runs", "2", "--seed", "13",
        ],
    );
    assert_deterministic(
        "table2",
        &[
            "tables", "--which", "2", "--n", "500", "--runs", "1", "--g-max", "2", "--seed", "17",
        ],
    );
    assert_deterministic("table3", &["tables", "--which", "3", "--e", "0.03"]);
    assert_deterministic(
        "fig5",
        &["curves", "--fig", "5", "--e-max", "0.5", "--steps", "50"],
    );
    assert_deterministic(
        "fig2",
        &[
            "curves", "--fig", "2", "--n", "64", "--k", "2", "--p", "0.3", "--seed", "19",
        ],
    );
    println!("criterion 9: PASS - table and curve CSVs byte-identical");
}

#[test]
fn worked_example_replay_via_fixture_file() {
    let dir = fresh_dir("fixture");
    fs::create_dir_all(&dir).unwrap();
    let rok_path = dir.join("rok_fixture.txt");
    fs::write(
        &rok_path,
        "bob=011001000111001101011001\nalice=?1??0????1??0????1???0??\n",
    )
    .unwrap();
    run_ok(&[
        "dilute",
        "--method",
        "kn-n",
        "--n",
        "12",
        "--k",
        "2",
        "--rok-file",
        rok_path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let fok = fs::read_to_string(dir.join("fok.txt")).unwrap();
    assert!(fok.contains("bob=010100011110"), "fok was:\n{fok}");
    assert!(fok.contains("alice=?????????1??"), "fok was:\n{fok}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn invalid_parameters_exit_nonzero() {
    // 7 > C(4,2) = 6.
    let out = qpq()
        .args([
            "dilute", "--method", "rm-n", "--m", "4", "--k", "2", "--n", "7",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("C(4,2)"));

    let out = qpq()
        .args(["dilute", "--method", "bogus", "--n", "8", "--k", "2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn fig2_replays_a_stored_trace() {
    let dir = fresh_dir("replay");
    run_ok(&[
        "attack-nn", "--n", "64", "--k", "2", "--p", "0.3", "--runs", "1", "--seed", "3",
        "--out", dir.to_str().unwrap(),
    ]);
    let trace_path = dir.join("trace_run0.csv");
    run_ok(&[
        "curves", "--fig", "2",
        "--trace", trace_path.to_str().unwrap(),
        "--out", dir.to_str().unwrap(),
    ]);
    let trace = fs::read_to_string(&trace_path).unwrap();
    let fig2 = fs::read_to_string(dir.join("fig2.csv")).unwrap();
    assert_eq!(fig2.lines().count(), trace.lines().count());
    // Stripped columns line up row for row.
    for (t, f) in trace.lines().skip(1).zip(fig2.lines().skip(1)) {
        let want: Vec<&str> = t.split(',').take(3).collect();
        let got: Vec<&str> = f.split(',').skip(1).collect();
        assert_eq!(got, want);
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn snapshots_use_the_square_grid_default() {
    // N = 225 defaults to a 15x15 grid; three checkpoints, three images.
    let dir = fresh_dir("snap225");
    run_ok(&[
        "attack-nn",
        "--n",
        "225",
        "--k",
        "3",
        "--p",
        "0.25",
        "--runs",
        "1",
        "--seed",
        "42",
        "--snapshot-at",
        "1,7,14",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let ppms: Vec<String> = dir_bytes(&dir)
        .into_keys()
        .filter(|name| name.ends_with(".ppm"))
        .collect();
    assert_eq!(ppms, ["snap_q1.ppm", "snap_q14.ppm", "snap_q7.ppm"]);
    let first = fs::read(dir.join("snap_q1.ppm")).unwrap();
    assert!(first.starts_with(b"P3\n15 15\n255\n"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn full_knowledge_attack_reports_dqa_one() {
    let dir = fresh_dir("p1");
    run_ok(&[
        "attack-nn",
        "--n",
        "32",
        "--k",
        "2",
        "--p",
        "1.0",
        "--runs",
        "3",
        "--seed",
        "21",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let dqa = fs::read_to_string(dir.join("dqa.csv")).unwrap();
    let mut lines = dqa.lines();
    assert_eq!(lines.next(), Some("run,dqa,conflicts"));
    for line in lines {
        assert_eq!(line.split(',').nth(1), Some("1"), "row {line}");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn table3_emits_both_error_rates_labeled() {
    let dir = fresh_dir("t3");
    run_ok(&[
        "tables",
        "--which",
        "3",
        "--e",
        "0.03",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(dir.join("table3.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("error_rate_mok") && header.contains("error_rate_fok"));
    // The published comparison line for the plain method.
    let kn_n = csv.lines().find(|l| l.starts_with("kn-n,")).unwrap();
    assert!(kn_n.contains("6.103516") && kn_n.contains("0.175761") && kn_n.contains("0.002235"));
    // Both pipeline error rates, per-MOK and g-combined.
    let gkn = csv.lines().find(|l| l.starts_with("gkn-n,")).unwrap();
    assert!(gkn.contains("0.000837") && gkn.contains("0.005002"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn fig5_grid_shape() {
    let dir = fresh_dir("fig5");
    run_ok(&[
        "curves",
        "--fig",
        "5",
        "--e-max",
        "0.5",
        "--steps",
        "50",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(dir.join("fig5.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 52); // header + 51 grid points
    assert_eq!(lines[1], "0.000000,0.000000,0.000000");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = fresh_dir("config");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("scenario.cfg");
    fs::write(&cfg, "# scenario\nn=16\nk=2\nseed=33\n").unwrap();
    run_ok(&[
        "dilute",
        "--method",
        "n-n",
        "--k",
        "3",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("n=16"), "file value used:\n{manifest}");
    assert!(manifest.contains("k=3"), "flag overrides file:\n{manifest}");
    assert!(manifest.contains("seed=33"));
    let _ = fs::remove_dir_all(&dir);
}
