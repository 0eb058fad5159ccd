use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analytic::Scheme;
use crate::params::unit_label;

use super::{ExperimentError, Metric, Mode, ResultTable};

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn colour(s: Scheme) -> &'static str {
    match s {
        Scheme::Ddmm => "#d62728",
        Scheme::PreFdmm => "#1f77b4",
        Scheme::ReFdmm => "#2ca02c",
    }
}

fn axis_label(name: &str, unit: &str) -> String {
    if unit.is_empty() {
        name.to_string()
    } else {
        format!("{name} [{unit}]")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Range padded so that flat or single-point series still get an axis.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 * hi.abs().max(lo.abs()).max(1e-300) {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let d = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - d, hi + d)
    }
}

struct Series {
    scheme: Scheme,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

/// Renders one metric of the table as an SVG line chart.
pub fn render_svg(table: &ResultTable, metric: Metric) -> Result<String, ExperimentError> {
    let mut series = Vec::new();
    for scheme in table.schemes() {
        match table.mode {
            Mode::Analytic => series.push(Series {
                scheme,
                points: table.series(scheme, metric),
                dashed: false,
            }),
            Mode::Simulate => series.push(Series {
                scheme,
                points: table.sim_series(scheme, metric),
                dashed: false,
            }),
            Mode::Both => {
                series.push(Series {
                    scheme,
                    points: table.sim_series(scheme, metric),
                    dashed: false,
                });
                series.push(Series {
                    scheme,
                    points: table.series(scheme, metric),
                    dashed: true,
                });
            }
        }
    }
    series.retain(|s| !s.points.is_empty());
    if series.is_empty() {
        return Err(ExperimentError::Usage(format!(
            "no data for metric {metric}"
        )));
    }

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let param = table.param().unwrap_or("-");
    let xlabel = axis_label(param, unit_label(param));
    let ylabel = axis_label(metric.as_str(), metric.unit());

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{} vs {}</text>"#,
        LEFT + pw / 2.0,
        escape(metric.as_str()),
        escape(param)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r##"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="#ccc"/><text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 16.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.1}" x2="{}" y2="{py:.1}" stroke="#ccc"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 4.0,
            py + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 15.0,
        escape(&xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&ylabel)
    );

    for (i, ser) in series.iter().enumerate() {
        let c = colour(ser.scheme);
        let dash = if ser.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        if ser.points.len() > 1 {
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"{dash}/>"#,
                pts.join(" ")
            );
        }
        if !ser.dashed {
            for &(x, y) in &ser.points {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{c}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
        }
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let name = if ser.dashed {
            format!("{} (analytic)", ser.scheme)
        } else {
            ser.scheme.to_string()
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 22.0,
            lx + 27.0,
            ly + 4.0,
            escape(&name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes `<stem>_<metric>.svg` for every metric in the table.
pub fn write_plots(
    table: &ResultTable,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, ExperimentError> {
    if table.is_empty() {
        return Err(ExperimentError::Usage("cannot plot an empty table".into()));
    }
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for metric in table.metrics() {
        let svg = match render_svg(table, metric) {
            Ok(svg) => svg,
            // simulated metric without events in any cell
            Err(ExperimentError::Usage(_)) => continue,
            Err(e) => return Err(e),
        };
        let path = dir.join(format!("{stem}_{metric}.svg"));
        fs::write(&path, svg)?;
        out.push(path);
    }
    if out.is_empty() {
        return Err(ExperimentError::Usage(
            "table has no plottable values".into(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{run_analytic, ResultRow, Sweep, SweepSpec};
    use crate::params::defaults;

    #[test]
    fn latency_plot_has_three_series_and_units() {
        let spec = SweepSpec {
            sweep: Some(Sweep::parse("r=1000:6000:1000").unwrap()),
            metrics: vec![Metric::Latency],
            ..SweepSpec::default()
        };
        let t = run_analytic(&spec, &defaults()).unwrap();
        let svg = render_svg(&t, Metric::Latency).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("mix_zone_radius [m]"));
        assert!(svg.contains("latency [s]"));
        assert!(svg.contains("PRE_FDMM"));
    }

    #[test]
    fn single_point_renders_a_marker() {
        let mut t = ResultTable::new(Mode::Analytic);
        t.rows.push(ResultRow {
            analytic: Some(0.0),
            ..ResultRow::default()
        });
        let svg = render_svg(&t, Metric::Latency).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn both_mode_overlays_dashed_analytic() {
        let mut t = ResultTable::new(Mode::Both);
        for v in [1.0, 2.0] {
            t.rows.push(ResultRow {
                param: "phi".into(),
                value: Some(v),
                analytic: Some(v),
                sim_mean: Some(v * 1.01),
                n: 5,
                ..ResultRow::default()
            });
        }
        let svg = render_svg(&t, Metric::Latency).unwrap();
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains("(analytic)"));
    }

    #[test]
    fn empty_table_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = write_plots(&ResultTable::new(Mode::Analytic), dir.path(), "x").unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
