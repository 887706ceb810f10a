use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ars-bench"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&bench(&["--help"])), 0);
    assert_eq!(code(&bench(&["--version"])), 0);
    assert_eq!(code(&bench(&["bench", "--help"])), 0);
}

#[test]
fn configuration_errors_exit_one() {
    assert_eq!(code(&bench(&["bench", "--no-such-flag"])), 1);
    assert_eq!(code(&bench(&[])), 1);
    assert_eq!(code(&bench(&["bench", "--target", "cauchy"])), 1);
    assert_eq!(code(&bench(&["bench", "--replicas", "0"])), 1);
    assert_eq!(code(&bench(&["sample", "--method", "both"])), 1);
    assert_eq!(code(&bench(&["trace", "--trace-at", "10,5"])), 1);
    assert_eq!(
        code(&bench(&["bench", "--config", "/nonexistent/ars.conf"])),
        1
    );
}

#[test]
fn runtime_errors_exit_two() {
    let o = bench(&["sample", "--initial-nodes", "1,2", "--n", "10"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sample_writes_one_value_per_line() {
    let o = bench(&[
        "sample", "--target", "gamma", "--n", "250", "--nodes", "4", "--seed", "3",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let xs: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(xs.len(), 250);
    assert!(xs.iter().all(|&x| x > 0.0));
}

#[test]
fn bench_prints_csv_without_out() {
    let o = bench(&[
        "bench",
        "--n",
        "300",
        "--nodes",
        "3",
        "--replicas",
        "2",
        "--method",
        "cars",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], ars_bench::CSV_HEADER);
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("CARS,gaussian(sigma2=0.5),300,3,"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        "# small grid\ntarget = gamma:2,2\nmethod = ars\nn = 200\nnodes = 3\nreplicas = 2\n",
    )
    .unwrap();
    let out = dir.path().join("rows.csv");
    let o = bench(&[
        "bench",
        "--config",
        conf.to_str().unwrap(),
        "--method",
        "cars",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("CARS,gamma(r=2;a=2),200,3,"), "{row}");
    assert!(String::from_utf8(o.stdout).unwrap().contains("CARS"));
}

#[test]
fn trace_and_sweep_produce_records() {
    let o = bench(&[
        "trace",
        "--initial-nodes=-1.5,-1,1.8",
        "--n",
        "100",
        "--trace-at",
        "0,50",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("iteration,log_normalizer,"));
    assert!(text.lines().nth(1).unwrap().starts_with("0,"));

    let o = bench(&["sweep", "--n", "300", "--nodes", "3,4,6", "--replicas", "2"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| !l.starts_with("ARS")));
}

#[test]
fn validate_passes() {
    let o = bench(&["validate", "--seed", "5"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
