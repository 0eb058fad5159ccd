use std::io::{Read, Write};

use crate::analytic::Scheme;

use super::{ExperimentError, Metric, Mode};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub param: String,
    pub value: Option<f64>,
    pub scheme: Scheme,
    pub metric: Metric,
    pub analytic: Option<f64>,
    pub sim_mean: Option<f64>,
    pub sim_stderr: Option<f64>,
    pub n: u64,
    pub rel_error: Option<f64>,
    pub note: String,
}

impl Default for ResultRow {
    fn default() -> Self {
        ResultRow {
            param: "-".into(),
            value: None,
            scheme: Scheme::Ddmm,
            metric: Metric::Latency,
            analytic: None,
            sim_mean: None,
            sim_stderr: None,
            n: 0,
            rel_error: None,
            note: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub mode: Mode,
    pub rows: Vec<ResultRow>,
}

const ANALYTIC_HEADER: [&str; 5] = ["param", "value", "scheme", "metric", "analytic"];
const FULL_HEADER: [&str; 10] = [
    "param",
    "value",
    "scheme",
    "metric",
    "analytic",
    "sim_mean",
    "sim_stderr",
    "n",
    "rel_error",
    "note",
];

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_num(s: Option<&str>, line: usize) -> Result<Option<f64>, ExperimentError> {
    match s.map(str::trim) {
        None | Some("") => Ok(None),
        Some(t) => t
            .parse()
            .map(Some)
            .map_err(|_| ExperimentError::Usage(format!("row {line}: bad number `{t}`"))),
    }
}

impl ResultTable {
    pub fn new(mode: Mode) -> Self {
        ResultTable {
            mode,
            rows: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn param(&self) -> Option<&str> {
        self.rows.first().map(|r| r.param.as_str())
    }

    pub fn metrics(&self) -> Vec<Metric> {
        let mut m: Vec<_> = self.rows.iter().map(|r| r.metric).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        let mut s: Vec<_> = self.rows.iter().map(|r| r.scheme).collect();
        s.sort();
        s.dedup();
        s
    }

    /// `(value, analytic)` pairs of one series in row order.
    pub fn series(&self, scheme: Scheme, metric: Metric) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.metric == metric)
            .filter_map(|r| Some((r.value.unwrap_or(0.0), r.analytic?)))
            .collect()
    }

    pub fn sim_series(&self, scheme: Scheme, metric: Metric) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.metric == metric)
            .filter_map(|r| Some((r.value.unwrap_or(0.0), r.sim_mean?)))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ExperimentError> {
        let mut out = csv::Writer::from_writer(w);
        if self.mode == Mode::Analytic {
            out.write_record(ANALYTIC_HEADER)?;
            for r in &self.rows {
                out.write_record([
                    r.param.clone(),
                    num(r.value),
                    r.scheme.to_string(),
                    r.metric.to_string(),
                    num(r.analytic),
                ])?;
            }
        } else {
            out.write_record(FULL_HEADER)?;
            for r in &self.rows {
                out.write_record([
                    r.param.clone(),
                    num(r.value),
                    r.scheme.to_string(),
                    r.metric.to_string(),
                    num(r.analytic),
                    num(r.sim_mean),
                    num(r.sim_stderr),
                    r.n.to_string(),
                    num(r.rel_error),
                    r.note.clone(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, ExperimentError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Reads a table written by [`ResultTable::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<ResultTable, ExperimentError> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let need = |name: &str| {
            col(name).ok_or_else(|| ExperimentError::Usage(format!("CSV lacks a `{name}` column")))
        };
        let (c_param, c_value, c_scheme, c_metric) = (
            need("param")?,
            need("value")?,
            need("scheme")?,
            need("metric")?,
        );
        let c_analytic = col("analytic");
        let c_sim = col("sim_mean");
        let mode = match (c_analytic.is_some(), c_sim.is_some()) {
            (_, false) => Mode::Analytic,
            (true, true) => Mode::Both,
            (false, true) => Mode::Simulate,
        };
        let mut table = ResultTable::new(mode);
        let mut any_analytic = false;
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let get = |c: Option<usize>| c.and_then(|c| rec.get(c));
            let scheme = rec[c_scheme]
                .parse()
                .map_err(|e: String| ExperimentError::Usage(format!("row {line}: {e}")))?;
            let metric = rec[c_metric]
                .parse()
                .map_err(|e: String| ExperimentError::Usage(format!("row {line}: {e}")))?;
            let analytic = parse_num(get(c_analytic), line)?;
            any_analytic |= analytic.is_some();
            table.rows.push(ResultRow {
                param: rec[c_param].to_string(),
                value: parse_num(Some(&rec[c_value]), line)?,
                scheme,
                metric,
                analytic,
                sim_mean: parse_num(get(c_sim), line)?,
                sim_stderr: parse_num(get(col("sim_stderr")), line)?,
                n: get(col("n"))
                    .and_then(|s| s.trim().parse().ok())
                    .unwrap_or(0),
                rel_error: parse_num(get(col("rel_error")), line)?,
                note: get(col("note")).unwrap_or("").to_string(),
            });
        }
        if mode == Mode::Both && !any_analytic {
            table.mode = Mode::Simulate;
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{run_analytic, Sweep, SweepSpec};
    use crate::params::defaults;

    #[test]
    fn analytic_csv_round_trip() {
        let spec = SweepSpec {
            sweep: Some(Sweep::parse("xi=0.1:1:0.1").unwrap()),
            ..SweepSpec::default()
        };
        let t = run_analytic(&spec, &defaults()).unwrap();
        let text = t.to_csv_string().unwrap();
        assert!(text.starts_with("param,value,scheme,metric,analytic\n"));
        let back = ResultTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn full_csv_round_trip() {
        let mut t = ResultTable::new(Mode::Both);
        t.rows.push(ResultRow {
            param: "phi".into(),
            value: Some(0.005),
            scheme: Scheme::PreFdmm,
            metric: Metric::PacketLoss,
            analytic: Some(1.5),
            sim_mean: Some(1.25),
            sim_stderr: Some(0.1),
            n: 12,
            rel_error: Some(1.0 / 6.0),
            note: "a, quoted \"note\"".into(),
        });
        t.rows.push(ResultRow {
            note: "insufficient events".into(),
            analytic: Some(2.0),
            ..ResultRow::default()
        });
        let back = ResultTable::read_csv(t.to_csv_string().unwrap().as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn bad_csv_is_rejected() {
        assert!(ResultTable::read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad = "param,value,scheme,metric,analytic\nr,1,NOPE,latency,1\n";
        assert!(ResultTable::read_csv(bad.as_bytes()).is_err());
    }
}
