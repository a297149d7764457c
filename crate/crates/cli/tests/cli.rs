use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmp-ldpc"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn stability_degree_two_is_unstable() {
    let out = stdout(&run(&[
        "stability",
        "--lambda2",
        "1.0",
        "--rho-dc",
        "4",
        "--alpha",
        "0.2",
        "--beta",
        "0.05",
    ]));
    assert!(out.contains("gamma = 3\n"), "{out}");
    assert!(out.contains("UNSTABLE"));
}

#[test]
fn stability_from_channel() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = stdout(&run(&[
        "stability",
        "--lambda3",
        "1.0",
        "--rho-dc",
        "6",
        "--a",
        "1.0",
        "--ebn0",
        "3.0",
        "--rate",
        "0.5",
        "--csv",
        csv.to_str().unwrap(),
    ]));
    assert!(out.contains("STABLE"));
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("alpha,beta,lambda2,lambda3,rho_prime_1,gamma\n"));
}

#[test]
fn threshold_picks_a_one_point_three() {
    let base = fixture("fl_r34_tmp.bm");
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.txt");
    let out = stdout(&run(&[
        "threshold",
        "--base",
        base.to_str().unwrap(),
        "--a-grid",
        "0.1:3.0:0.1",
        "--weights-out",
        w.to_str().unwrap(),
    ]));
    assert!(out.contains("a* = 1.3\n"), "{out}");
    assert!(out.contains("threshold = "));
    let check = stdout(&run(&[
        "weights",
        "import",
        "--base",
        base.to_str().unwrap(),
        "--file",
        w.to_str().unwrap(),
    ]));
    assert!(check.contains("200 iterations, 2x8 edge types"), "{check}");
}

#[test]
fn threshold_of_regular_ensemble() {
    let out = stdout(&run(&[
        "threshold",
        "--regular",
        "3,6",
        "--a-grid",
        "1.0",
        "--l-max",
        "100",
    ]));
    assert!(out.contains("a* = 1\n"), "{out}");
}

#[test]
fn simulate_noiseless() {
    let base = fixture("fl_r34_tmp.bm");
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let out = stdout(&run(&[
        "simulate",
        "--base",
        base.to_str().unwrap(),
        "--q",
        "32",
        "--snr",
        "20",
        "--decoder",
        "tmp",
        "--max-frames",
        "200",
        "--threads",
        "2",
        "--csv",
        csv.to_str().unwrap(),
    ]));
    assert!(out.contains("FER 0.000e0"), "{out}");
    let text = std::fs::read_to_string(csv).unwrap();
    let records = tmp_ldpc::sim::records_from_csv(&text).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].frames, 200);
    assert_eq!(records[0].frame_errors, 0);
}

#[test]
fn lift_then_simulate_from_file() {
    let base = fixture("fl_r34_tmp.bm");
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("code");
    let out = stdout(&run(&[
        "lift",
        "--base",
        base.to_str().unwrap(),
        "--q",
        "64",
        "--out",
        stem.to_str().unwrap(),
    ]));
    assert!(out.contains("n = 512"), "{out}");
    assert!(out.contains("girth = "), "{out}");
    let lift = dir.path().join("code.lift");
    assert!(dir.path().join("code.alist").exists());
    let out = stdout(&run(&[
        "simulate",
        "--base",
        base.to_str().unwrap(),
        "--lift",
        lift.to_str().unwrap(),
        "--snr",
        "20",
        "--decoder",
        "bp",
        "--max-frames",
        "50",
    ]));
    assert!(out.contains("FER 0.000e0"), "{out}");
}

#[test]
fn spectrum_of_regular_protograph() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.bm");
    std::fs::write(&b, "1 2\n3 3\n").unwrap();
    let out = stdout(&run(&[
        "spectrum",
        "--base",
        b.to_str().unwrap(),
        "--grid",
        "0.01,0.02,0.03,0.1,0.5",
    ]));
    assert!(out.contains("omega* = 2.27"), "{out}");
    assert!(out.contains("omega,G\n"));
}

#[test]
fn weights_export_round_trip() {
    let base = fixture("fl_r34_tmp.bm");
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.txt");
    stdout(&run(&[
        "weights",
        "export",
        "--base",
        base.to_str().unwrap(),
        "--ebn0",
        "3.5",
        "--l-max",
        "20",
        "--out",
        w.to_str().unwrap(),
    ]));
    let out = stdout(&run(&[
        "weights",
        "import",
        "--base",
        base.to_str().unwrap(),
        "--file",
        w.to_str().unwrap(),
    ]));
    assert!(out.contains("20 iterations"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("1,")));
}

#[test]
fn optimize_tiny_space() {
    let dir = tempfile::tempdir().unwrap();
    let best = dir.path().join("best.bm");
    let log = dir.path().join("log.csv");
    let out = stdout(&run(&[
        "optimize",
        "--m0",
        "1",
        "--n0",
        "2",
        "--max-entry",
        "4",
        "--generations",
        "3",
        "--a-grid",
        "1.0",
        "--out",
        best.to_str().unwrap(),
        "--csv",
        log.to_str().unwrap(),
    ]));
    assert!(out.contains("threshold = "), "{out}");
    let b = tmp_ldpc::BaseMatrix::parse(&std::fs::read_to_string(best).unwrap()).unwrap();
    assert_eq!((b.rows(), b.cols()), (1, 2));
    assert_eq!(std::fs::read_to_string(log).unwrap().lines().count(), 5);
}

#[test]
fn usage_errors_fail() {
    assert!(!run(&["threshold"]).status.success());
    assert!(!run(&["bogus"]).status.success());
    assert!(!run(&["stability", "--lambda2", "1.0"]).status.success());
    let o = run(&["threshold", "--base", "/nonexistent.bm"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
}
