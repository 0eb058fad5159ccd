use std::fs;
use std::process::{Command, Output};

fn fdmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdmm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analytic_radius_sweep_to_stdout() {
    let o = fdmm(&[
        "analytic",
        "--sweep",
        "r=1000:6000:1000",
        "--metric",
        "latency",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("param,value,scheme,metric,analytic"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 18);
    let pre: Vec<_> = rows
        .iter()
        .filter(|l| l.contains("PRE_FDMM"))
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert!(pre.iter().all(|v| *v == pre[0]));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&fdmm(&["--help"])), 0);
    assert_eq!(code(&fdmm(&["--version"])), 0);
    assert_eq!(code(&fdmm(&[])), 1);
    assert_eq!(code(&fdmm(&["nonsense"])), 1);
    assert_eq!(code(&fdmm(&["analytic", "--sweep", "r=6000:1000:1000"])), 1);
    assert_eq!(code(&fdmm(&["analytic", "--sweep", "no_such_param=1"])), 1);
    assert_eq!(code(&fdmm(&["analytic", "--scheme", "MIPv6"])), 1);
    assert_eq!(code(&fdmm(&["analytic", "--sweep", "p_f=0.5,1.2"])), 2);
    assert_eq!(
        code(&fdmm(&["analytic", "--scenario", "/definitely/missing"])),
        1
    );
    assert_eq!(code(&fdmm(&["simulate", "--trace"])), 1);
    assert_eq!(
        code(&fdmm(&[
            "plot",
            "--input",
            "/definitely/missing.csv",
            "--out",
            "/tmp"
        ])),
        1
    );
}

#[test]
fn invalid_scenario_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "wireless_fail_prob = 3\n").unwrap();
    let o = fdmm(&["analytic", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    fs::write(&path, "mix_zone_radius = 2km\n").unwrap();
    let o = fdmm(&[
        "analytic",
        "--scenario",
        path.to_str().unwrap(),
        "--metric",
        "latency",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("param,value"));
}

#[test]
fn report_defaults_and_tolerance() {
    let o = fdmm(&["report"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("ordering PRE<RE<DDMM: PASS"));
    let o = fdmm(&["report", "--tolerance", "-1"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("ordering PRE<RE<DDMM: FAIL"));
}

#[test]
fn report_without_applicable_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fdmm(&[
        "analytic",
        "--sweep",
        "xi=0.5,1",
        "--metric",
        "failure_prob",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0);
    let csv = dir.path().join("analytic.csv");
    let o = fdmm(&["report", "--input", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("no checks applicable"));
}

#[test]
fn simulate_is_deterministic_and_traces() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &str| {
        vec![
            "simulate".to_string(),
            "--scheme".into(),
            "DDMM,RE_FDMM".into(),
            "--seeds".into(),
            "1:2".into(),
            "--duration".into(),
            "600".into(),
            "--mode".into(),
            "both".into(),
            "--trace".into(),
            "--out".into(),
            dir.to_string(),
        ]
    };
    for d in [&a, &b] {
        let args = args(d.path().to_str().unwrap());
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(code(&fdmm(&args)), 0);
    }
    let ca = fs::read(a.path().join("simulate.csv")).unwrap();
    let cb = fs::read(b.path().join("simulate.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(
        text.starts_with("param,value,scheme,metric,analytic,sim_mean,sim_stderr,n,rel_error,note")
    );
    assert_eq!(text.lines().count(), 1 + 2 * 5);
    let trace = fs::read_to_string(a.path().join("trace_RE_FDMM_2.tsv")).unwrap();
    assert!(trace.starts_with("time\tnode\tevent\tkind\tflags\tbytes"));
    assert!(trace.contains("HI"));
}

#[test]
fn insufficient_events_still_succeeds() {
    let o = fdmm(&[
        "simulate",
        "--scheme",
        "DDMM",
        "--metric",
        "latency",
        "--duration",
        "0.5",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("insufficient events"));
}

#[test]
fn plot_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fdmm(&[
        "analytic",
        "--sweep",
        "p_f=0.1:0.8:0.1",
        "--metric",
        "latency,packet_loss",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0);
    let csv = dir.path().join("analytic.csv");
    let plots = dir.path().join("plots");
    let o = fdmm(&[
        "plot",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let svg = fs::read_to_string(plots.join("analytic_latency.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("wireless_fail_prob"));
    assert!(plots.join("analytic_packet_loss.svg").exists());

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "param,value,scheme,metric,analytic\n").unwrap();
    let o = fdmm(&["plot", "--input", empty.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 1);
}

#[test]
fn figures_suite_reports_the_flatness_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = fdmm(&["figures", "--out", dir.path().to_str().unwrap()]);
    let text = stdout(&o);
    // the predictive latency is not flat in p_f, so the suite exits 3
    assert_eq!(code(&o), 3, "{text}");
    assert!(text.contains("latency PRE_FDMM constant: FAIL"));
    assert!(text.contains("8 of 9 figures pass"));
    for id in 11..=19 {
        assert!(dir.path().join(format!("fig{id}.csv")).exists());
    }
    assert!(dir.path().join("fig19_signaling_cost.svg").exists());
}
