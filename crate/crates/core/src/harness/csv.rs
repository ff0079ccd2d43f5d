//! Trace CSV files.
//!
//! Header `k,objective_gap,grad_map_norm,grad_f_count,subgrad_h_count,elapsed_seconds`;
//! reals are written with 17 significant digits so a file parses back to
//! the identical trace. An unknown gap is an empty field.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::{RunTrace, TraceRecord};

pub const HEADER: &str = "k,objective_gap,grad_map_norm,grad_f_count,subgrad_h_count,elapsed_seconds";

pub const AGGREGATE_HEADER: &str = "k,runs,objective_gap_mean,objective_gap_std,grad_map_norm_mean,grad_map_norm_std,\
grad_f_count_mean,grad_f_count_std,subgrad_h_count_mean,subgrad_h_count_std,elapsed_seconds_mean,elapsed_seconds_std";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in trace.iter() {
        let gap = r.objective_gap.map(real).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            gap,
            real(r.grad_map_norm),
            r.grad_f_count,
            r.subgrad_h_count,
            real(r.elapsed_seconds)
        );
    }
    out
}

pub fn write_trace_csv(trace: &RunTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_trace_csv(trace)).map_err(|e| Error::io(path, e))
}

pub fn parse_trace_csv(text: &str) -> Result<RunTrace> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        other => return Err(Error::Format(format!("bad trace header {other:?}"))),
    }
    let mut trace = RunTrace::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::Format(format!(
                "row {row}: expected 6 fields, found {}",
                cols.len()
            )));
        }
        let bad = |what: &str| Error::Format(format!("row {row}: bad {what}"));
        let f = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        let u = |s: &str, what: &str| s.parse::<u64>().map_err(|_| bad(what));
        trace.push(TraceRecord {
            k: cols[0].parse().map_err(|_| bad("k"))?,
            objective_gap: if cols[1].is_empty() {
                None
            } else {
                Some(f(cols[1], "objective_gap")?)
            },
            grad_map_norm: f(cols[2], "grad_map_norm")?,
            grad_f_count: u(cols[3], "grad_f_count")?,
            subgrad_h_count: u(cols[4], "subgrad_h_count")?,
            elapsed_seconds: f(cols[5], "elapsed_seconds")?,
        });
    }
    Ok(trace)
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<RunTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace_csv(&text)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-`k` mean and (population) standard deviation across traces. Rows
/// are emitted for every `k` present in all traces.
pub fn format_aggregate_csv(traces: &[RunTrace]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    let rows = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    for i in 0..rows {
        let col = |get: &dyn Fn(&TraceRecord) -> f64| -> (f64, f64) {
            let v: Vec<f64> = traces.iter().map(|t| get(&t.records[i])).collect();
            mean_std(&v)
        };
        let gaps: Option<Vec<f64>> = traces.iter().map(|t| t.records[i].objective_gap).collect();
        let gap = match gaps {
            Some(v) => {
                let (m, s) = mean_std(&v);
                format!("{},{}", real(m), real(s))
            }
            None => ",".to_string(),
        };
        let (gm, gs) = col(&|r| r.grad_map_norm);
        let (fm, fs) = col(&|r| r.grad_f_count as f64);
        let (hm, hs) = col(&|r| r.subgrad_h_count as f64);
        let (em, es) = col(&|r| r.elapsed_seconds);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            traces[0].records[i].k,
            traces.len(),
            gap,
            real(gm),
            real(gs),
            real(fm),
            real(fs),
            real(hm),
            real(hs),
            real(em),
            real(es)
        );
    }
    out
}

pub fn write_aggregate_csv(traces: &[RunTrace], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_aggregate_csv(traces)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunTrace {
        let mut t = RunTrace::new();
        for k in 1..=3 {
            t.push(TraceRecord {
                k,
                objective_gap: if k == 2 { None } else { Some(1.0 / 3.0 / k as f64) },
                grad_map_norm: std::f64::consts::PI * k as f64,
                grad_f_count: k as u64,
                subgrad_h_count: 10 * k as u64,
                elapsed_seconds: 1e-7 * k as f64,
            });
        }
        t
    }

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(format_trace_csv(&RunTrace::new()), format!("{HEADER}\n"));
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample();
        let text = format_trace_csv(&t);
        assert_eq!(parse_trace_csv(&text).unwrap(), t);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace_csv(&t, &p).unwrap();
        assert_eq!(read_trace_csv(&p).unwrap(), t);
    }

    #[test]
    fn column_order() {
        let text = format_trace_csv(&sample());
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "1");
        assert_eq!(row[3], "1");
        assert_eq!(row[4], "10");
        assert_eq!(text.lines().nth(2).unwrap().split(',').nth(1), Some(""));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_trace_csv("k,gap\n").is_err());
        assert!(parse_trace_csv(&format!("{HEADER}\n1,2,3\n")).is_err());
        assert!(parse_trace_csv(&format!("{HEADER}\n1,x,3,4,5,6\n")).is_err());
    }

    #[test]
    fn unwritable_path() {
        let err = write_trace_csv(&sample(), "/nonexistent/dir/t.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn aggregate_means() {
        let a = sample();
        let mut b = sample();
        for r in &mut b.records {
            r.grad_map_norm *= 3.0;
        }
        let text = format_aggregate_csv(&[a.clone(), b.clone()]);
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        let mean: f64 = row[4].parse().unwrap();
        assert_eq!(mean, (a.records[0].grad_map_norm + b.records[0].grad_map_norm) / 2.0);
        // the gap column is empty where any trace lacks it
        let row2: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
        assert_eq!((row2[2], row2[3]), ("", ""));
    }
}
