use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "scheme,n,nt,m,snr_db,trials,source_errors,ris_errors,ber_source,ber_ris,analytic_source,analytic_ris,seed,wall_time_s";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-ssk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn sweep_to(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "sweep", "--scheme", "astbc-fast", "--n", "16", "--nt", "2", "--m", "4", "--snr", "-5:5:5", "--trials", "4000",
        "--seed", "9", "--out",
    ];
    args.push(path.to_str().unwrap());
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn sweep_writes_csv_with_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.csv");
    let o = sweep_to(&p, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&p).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("astbc-fast,16,2,4,-5,4000,"));
    assert!(lines[1].ends_with(",9,"));
    // confidence intervals go to stderr
    assert!(String::from_utf8_lossy(&o.stderr).contains("ber_source="));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    assert!(sweep_to(&a, &["--workers", "1"]).status.success());
    assert!(sweep_to(&b, &["--workers", "8"]).status.success());
    assert!(sweep_to(&c, &[]).status.success());
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    assert_eq!(a, std::fs::read(c).unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "scheme = \"pb\"\nn = 8\nnt = 2\nsnr_db = [-10.0, 0.0]\ntrials = 2000\nseed = 5\n",
    )
    .unwrap();
    let out = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "1000",
        "--out",
        out.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("pb,8,2,,-10,1000,"));
    assert!(text.lines().nth(2).unwrap().starts_with("pb,8,2,,0,1000,"));
    assert!(std::fs::read_to_string(json).unwrap().contains("\"scheme\": \"pb\""));
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "scheme = \"pb\"\nn = 8\nnt = 2\nsnr = \"0\"\nbogus = 1\n").unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["sweep", "--scheme", "astbc-fast", "--n", "7", "--nt", "2", "--snr", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("even"));

    let o = run(&["sweep", "--scheme", "pb", "--n", "8", "--nt", "2", "--snr", "5:0:1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["sweep", "--scheme", "nope", "--n", "8", "--nt", "2", "--snr", "0"]);
    assert!(!o.status.success());
}

#[test]
fn analytic_curves() {
    let o = run(&["analytic", "--scheme", "astbc-fast", "--n", "64", "--nt", "2", "--m", "2", "--snr", "-10:10:10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,abep_source,abep_ris");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("-10,0.046430316,"));

    let o = run(&["analytic", "--scheme", "pb", "--n", "32", "--nt", "2", "--snr", "-20"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("-20,0.0109") && row.ends_with(','));

    let o = run(&["analytic", "--scheme", "astbc-optimal", "--n", "64", "--nt", "2", "--snr", "20", "--asymptotic"]);
    assert!(o.status.success());

    let o = run(&["analytic", "--scheme", "traditional-ssk", "--n", "8", "--nt", "2", "--snr", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_prints_diagnostics() {
    for method in ["optimal", "lowcomplexity", "sdr", "bruteforce"] {
        let o = run(&["optimize", "--n", "4", "--nt", "2", "--method", method, "--levels", "8"]);
        assert!(o.status.success(), "{method}");
        let text = stdout(&o);
        assert!(text.contains("d_min: "), "{method}");
        let theta = text.lines().find(|l| l.starts_with("theta: ")).unwrap();
        assert_eq!(theta.split(',').count(), 4);
    }
    let o = run(&["optimize", "--n", "4", "--nt", "4", "--method", "optimal"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fast_validation_passes() {
    let o = run(&["validate", "--level", "fast"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
    assert!(text.contains("closed-form-pep"));
}
