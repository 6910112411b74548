use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cylstable"));
    cmd.args(args).arg("--out").arg(dir);
    if let Some(t) = threads {
        cmd.env("CYLSTABLE_THREADS", t);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn constants_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["constants", "--alpha", "1.5", "--p", "1.2"], None);
    assert_eq!(code(&o), 0);
    let kv = fs::read_to_string(dir.path().join("constants.txt")).unwrap();
    assert!(kv.starts_with("# cylstable "));
    assert!(kv.contains("# config.p=1.2\n"));
    assert!(kv.contains("\nc_alpha=2.50662827463"));
    let csv = fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "key,value"));
}

#[test]
fn solve_reaches_the_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["solve", "--preset", "heat", "--T", "0.05", "--M", "200", "--seed", "7"],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("mild_path.csv")).unwrap();
    let trailer = text.lines().last().unwrap();
    let residual: f64 = trailer.rsplit(',').next().unwrap().parse().unwrap();
    assert!(residual < 1e-10);
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with(','))
        .count();
    assert_eq!(rows, 1 + 201);
}

#[test]
fn tail_is_byte_identical_across_runs_and_thread_counts() {
    let args = [
        "tail", "--n", "1", "--gamma", "1", "--alpha", "1.5", "--N", "1000000", "--seed", "7",
    ];
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    assert_eq!(code(&run(dir.path(), &args, None)), 0);
    let first = (read("tail.csv"), read("tail.summary"));
    assert_eq!(code(&run(dir.path(), &args, None)), 0);
    assert_eq!(first, (read("tail.csv"), read("tail.summary")));
    assert_eq!(code(&run(dir.path(), &args, Some("1"))), 0);
    assert_eq!(first, (read("tail.csv"), read("tail.summary")));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(dir.path(), &["tail", "--N", "1000"], None)),
        2,
        "missing seed"
    );
    assert_eq!(code(&run(dir.path(), &["constants", "--seed", "1"], None)), 2);
    assert_eq!(
        code(&run(dir.path(), &["constants", "--alpha", "1.5", "--p", "1.7"], None)),
        2
    );
    assert_eq!(code(&run(dir.path(), &["frobnicate"], None)), 2);
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "alpha=1.5\nbogus=3\n").unwrap();
    assert_eq!(
        code(&run(
            dir.path(),
            &["constants", "--config", cfg.to_str().unwrap()],
            None
        )),
        2
    );
    assert_eq!(code(&run(dir.path(), &["sample", "--seed", "1"], Some("zero"))), 2);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# constants\nalpha=1.2\np=0.5\n").unwrap();
    let o = run(
        dir.path(),
        &["constants", "--config", cfg.to_str().unwrap(), "--p", "0.7"],
        None,
    );
    assert_eq!(code(&o), 0);
    let kv = fs::read_to_string(dir.path().join("constants.txt")).unwrap();
    assert!(kv.contains("# config.alpha=1.2\n") && kv.contains("# config.p=0.7\n"));
}

#[test]
fn failed_and_inconclusive_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let wrong = run(
        dir.path(),
        &["gof", "--seed", "1", "--N", "20000", "--target", "gaussian"],
        None,
    );
    assert_eq!(code(&wrong), 1);
    let right = run(dir.path(), &["gof", "--seed", "1", "--N", "20000"], None);
    assert_eq!(code(&right), 0);
    let far = run(
        dir.path(),
        &[
            "tail", "--seed", "1", "--N", "100000", "--r_min", "1000", "--r_max", "10000",
        ],
        None,
    );
    assert_eq!(code(&far), 3);
    let summary = fs::read_to_string(dir.path().join("tail.summary")).unwrap();
    assert!(summary.contains("overall=inconclusive"));
}

#[test]
fn noise_file_feeds_integrate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["noise", "--seed", "3", "--m", "2", "--M", "5", "--extend", "3"],
        None,
    );
    assert_eq!(code(&o), 0);
    let noise = dir.path().join("noise.csv");
    let o = run(
        dir.path(),
        &["integrate", "--noise", noise.to_str().unwrap(), "--gamma", "1,1,1"],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("integral.csv")).unwrap();
    assert!(text.lines().any(|l| l == "t,coord_1,coord_2,coord_3"));
}

#[test]
fn experiments_pass_on_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["picard", "--seed", "5", "--replicas", "20"][..],
        &["uniqueness", "--seed", "5", "--replicas", "10"],
        &["glue", "--seed", "5", "--T", "0.2", "--M", "50"],
        &["moment", "--seed", "5"],
        &["gronwall"],
        &["check-model"],
    ] {
        let o = run(dir.path(), args, None);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
