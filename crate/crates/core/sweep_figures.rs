//! A parameter sweep written as CSV and SVG, followed by the whole suite of
//! trend studies with their checks.

use fdmm::experiment::plot::write_plots;
use fdmm::experiment::{check_table, run_analytic, run_figures, CheckConfig, Metric, Sweep, SweepSpec};
use fdmm::defaults;

fn main() {
    let out = std::env::temp_dir().join("fdmm-sweep-example");
    let p = defaults();

    let spec = SweepSpec {
        sweep: Some(Sweep::parse("phi=5ms:35ms:5ms").unwrap()),
        metrics: vec![Metric::Latency, Metric::PacketLoss],
        ..SweepSpec::default()
    };
    let table = run_analytic(&spec, &p).unwrap();
    print!("{}", table.to_csv_string().unwrap());
    for path in write_plots(&table, &out, "phi").unwrap() {
        println!("wrote {}", path.display());
    }
    for c in check_table(&table, &CheckConfig::default()) {
        println!("{c}");
    }

    println!();
    let results = run_figures(&p, &SweepSpec::default(), &CheckConfig::default(), Some(&out)).unwrap();
    for r in &results {
        let failed: Vec<_> = r.checks.iter().filter(|c| !c.pass).collect();
        println!(
            "{} {:<62} {}/{} checks pass",
            r.spec.id,
            r.spec.title,
            r.checks.len() - failed.len(),
            r.checks.len()
        );
        for c in failed {
            println!("    {c}");
        }
    }
}
