use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stochexp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn expand(dir: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join("expansion.txt");
    let mut args = vec![
        "expand".to_string(),
        config("logistic.toml").display().to_string(),
        "--workdir".into(),
        dir.join("work").display().to_string(),
        "--output".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    (bin().args(&args).output().unwrap(), out)
}

#[test]
fn shuffle_and_ncp() {
    let o = run(&["shuffle", "0,1,0", "1,1"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "1 ; 0,1,0,1,1\n2 ; 0,1,1,0,1\n3 ; 0,1,1,1,0\n1 ; 1,0,1,0,1\n2 ; 1,0,1,1,0\n1 ; 1,1,0,1,0\n"
    );
    for algo in ["recursive", "iterative"] {
        let o = run(&["ncp", "1", "2,3", "--algo", algo]);
        assert_eq!(stdout(&o), "1 ; 1,2,3\n1 ; 2,1,3\n");
    }
    assert_eq!(stdout(&run(&["shuffle", "", "4,2"])), "1 ; 4,2\n");
    assert_eq!(stdout(&run(&["ncp", "4,2", ""])), "");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["shuffle", "1", "x"]).status.code(), Some(2));
    assert_eq!(run(&["shuffle", "1"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["shuffle", "1", "2", "--algo", "fast"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["expand", "/nonexistent.toml"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "drivers = 2\nf = [[\"a\"]]\npicard_iterations = 2\n").unwrap();
    let o = run(&["expand", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`f`"));

    let (o, _) = expand(dir.path(), &["--memory-term-cap", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("memory-term-cap"));
}

#[test]
fn expand_is_independent_of_worker_count() {
    let one = tempfile::tempdir().unwrap();
    let eight = tempfile::tempdir().unwrap();
    let (o1, f1) = expand(one.path(), &["--workers", "1"]);
    let (o8, f8) = expand(eight.path(), &["--workers", "8"]);
    assert!(o1.status.success() && o8.status.success());
    assert!(stdout(&o1).starts_with("terms: 676\n"), "{}", stdout(&o1));
    assert!(stdout(&o8).starts_with("terms: 676\n"));
    assert_eq!(std::fs::read(f1).unwrap(), std::fs::read(f8).unwrap());
    // intermediates are cleaned up
    assert_eq!(
        std::fs::read_dir(one.path().join("work")).unwrap().count(),
        0
    );
}

#[test]
fn expand_then_expect() {
    let dir = tempfile::tempdir().unwrap();
    let (o, file) = expand(dir.path(), &["--iterations", "2"]);
    assert!(o.status.success());
    let o = run(&["expect", file.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "a*T-1/2*a^2*T^2\n");
    let o = run(&["expect", file.to_str().unwrap(), "--time-symbol", "t"]);
    assert_eq!(stdout(&o), "a*t-1/2*a^2*t^2\n");

    let broken = dir.path().join("broken.txt");
    std::fs::write(&broken, "1 ; 0\n1 ; 0,,1\n").unwrap();
    let o = run(&["expect", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn ou_single_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ou.txt");
    let o = run(&[
        "expand",
        config("ou.toml").to_str().unwrap(),
        "--iterations",
        "1",
        "--workdir",
        dir.path().join("w").to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("terms: 2\nmax word length: 1\n"));
    assert_eq!(std::fs::read_to_string(out).unwrap(), "a ; 0\nb ; 1\n");
}

#[test]
fn picard_q() {
    assert_eq!(stdout(&run(&["picard-q", "1", "2"])), "Q0\n");
    assert_eq!(
        stdout(&run(&["picard-q", "2", "2", "--monomials"])),
        "Q0\n(> Q0 Q1)\n(> (* Q0 Q0) Q2)\n"
    );
    assert_eq!(run(&["picard-q", "0", "2"]).status.code(), Some(2));
}

#[test]
fn mc_check() {
    let o = run(&[
        "mc-check",
        "--word",
        "0,0,0",
        "--samples",
        "20",
        "--steps",
        "8",
        "--seed",
        "3",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("J[0,0,0]"));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let args = [
        "mc-check",
        "--word",
        "0,1,1,0,0",
        "--word",
        "1,2",
        "--samples",
        "2000",
        "--steps",
        "64",
        "--seed",
        "11",
        "--samples-csv",
        csv.to_str().unwrap(),
    ];
    let first = run(&args);
    assert!(first.status.success(), "{}", stdout(&first));
    assert_eq!(stdout(&first), stdout(&run(&args)), "seeded runs repeat");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("sample,J[0,1,1,0,0],J[1,2]\n"));
    assert_eq!(text.lines().count(), 2001);

    // any sampling error exceeds a zero threshold
    let o = run(&[
        "mc-check",
        "--word",
        "1,1",
        "--z-threshold",
        "0",
        "--samples",
        "10",
        "--steps",
        "4",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(3));

    assert_eq!(run(&["mc-check", "--samples", "10"]).status.code(), Some(1));
    let o = run(&[
        "mc-check",
        "--full",
        config("ou.toml").to_str().unwrap(),
        "--param",
        "a=1",
        "--samples",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`b`"));
}

#[test]
fn mc_check_full_ou() {
    let o = run(&[
        "mc-check",
        "--full",
        config("ou.toml").to_str().unwrap(),
        "--param",
        "a=1",
        "--param",
        "b=0.1",
        "-T",
        "0.5",
        "--samples",
        "2000",
        "--steps",
        "256",
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("Y_T"));
}

#[test]
fn bench_shuffle_csv() {
    let args = [
        "bench-shuffle",
        "--min-length",
        "2",
        "--max-length",
        "4",
        "--trials",
        "5",
        "--seed",
        "9",
    ];
    let o = run(&args);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "total_length,trials,recursive_mean_ns,iterative_mean_ns,mean_ratio"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("2,5,"));
}
