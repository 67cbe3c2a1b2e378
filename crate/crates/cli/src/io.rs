//! File formats: event dumps, histogram tables, JSON documents.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pairemit_core::event_sim::{Detector, DetectionRecord, EmissionRecord};
use pairemit_core::inference::Histogram;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RunError, RunResult};

pub const EVENTS_FILE: &str = "events.csv";
pub const REPORT_FILE: &str = "report.json";
pub const RATES_FILE: &str = "rates.json";
pub const PROPERTIES_FILE: &str = "properties.json";
pub const FIG1_FILE: &str = "fig1.csv";
pub const FIG1_OVERLAY_FILE: &str = "fig1_overlay.csv";

pub const EVENTS_HEADER: &str = "molecule_id,t_f,t_s,t1,t2,repeat_detector,t_repeat";

/// Seconds with 17 significant digits, which round-trips every `f64`.
pub fn fmt_time(t: f64) -> String {
    format!("{t:.16e}")
}

fn push_opt(line: &mut String, t: Option<f64>) {
    line.push(',');
    if let Some(t) = t {
        write!(line, "{t:.16e}").expect("writing to a String");
    }
}

fn detector_label(d: Detector) -> &'static str {
    match d {
        Detector::One => "1",
        Detector::Two => "2",
    }
}

fn format_rows(em: &[EmissionRecord], det: &[DetectionRecord]) -> String {
    let mut out = String::with_capacity(em.len() * 100);
    for (e, d) in em.iter().zip(det) {
        write!(out, "{},{:.16e},{:.16e}", e.molecule_id, e.t_f, e.t_s).expect("writing to a String");
        push_opt(&mut out, d.t1);
        push_opt(&mut out, d.t2);
        out.push(',');
        if let Some((det, _)) = d.repeat_hit {
            out.push_str(detector_label(det));
        }
        push_opt(&mut out, d.repeat_hit.map(|(_, t)| t));
        out.push('\n');
    }
    out
}

pub fn ensure_dir(dir: &Path) -> RunResult<()> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))
}

fn create(path: &Path) -> RunResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| RunError::io(path, e))
}

/// Writes the event dump. Rows are formatted in parallel chunks and written
/// in molecule order.
pub fn write_events(path: &Path, em: &[EmissionRecord], det: &[DetectionRecord]) -> RunResult<()> {
    assert_eq!(em.len(), det.len());
    const CHUNK: usize = 1 << 15;
    let blocks: Vec<String> = em
        .par_chunks(CHUNK)
        .zip(det.par_chunks(CHUNK))
        .map(|(e, d)| format_rows(e, d))
        .collect();
    let mut w = create(path)?;
    let io = |e| RunError::io(path, e);
    writeln!(w, "{EVENTS_HEADER}").map_err(io)?;
    for b in &blocks {
        w.write_all(b.as_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Deserialize)]
struct EventRow {
    molecule_id: u64,
    t_f: f64,
    t_s: f64,
    t1: Option<f64>,
    t2: Option<f64>,
    #[serde(default)]
    repeat_detector: Option<u8>,
    #[serde(default)]
    t_repeat: Option<f64>,
}

/// Reads an event dump back into emission and detection records.
pub fn read_events(path: &Path) -> RunResult<(Vec<EmissionRecord>, Vec<DetectionRecord>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| RunError::csv(path, e))?;
    let mut em = Vec::new();
    let mut det = Vec::new();
    for row in rdr.deserialize::<EventRow>() {
        let r = row.map_err(|e| RunError::csv(path, e))?;
        let malformed = |reason: &str| RunError::Malformed {
            path: path.to_path_buf(),
            reason: format!("molecule {}: {reason}", r.molecule_id),
        };
        if !(r.t_f >= 0.0 && r.t_s >= r.t_f) {
            return Err(malformed("expected 0 <= t_f <= t_s"));
        }
        let repeat_hit = match (r.repeat_detector, r.t_repeat) {
            (None, None) => None,
            (Some(1), Some(t)) => Some((Detector::One, t)),
            (Some(2), Some(t)) => Some((Detector::Two, t)),
            _ => return Err(malformed("repeat_detector and t_repeat must be given together")),
        };
        em.push(EmissionRecord {
            molecule_id: r.molecule_id,
            t_f: r.t_f,
            t_s: r.t_s,
        });
        det.push(DetectionRecord {
            molecule_id: r.molecule_id,
            t1: r.t1,
            t2: r.t2,
            repeat_hit,
        });
    }
    Ok((em, det))
}

/// `t_lo,t_hi,count,density` with `density = count / (norm * width)`.
pub fn write_histogram(path: &Path, h: &Histogram, norm: f64) -> RunResult<()> {
    let mut w = create(path)?;
    let io = |e| RunError::io(path, e);
    writeln!(w, "t_lo,t_hi,count,density").map_err(io)?;
    for (edge, &c) in h.edges().windows(2).zip(h.counts()) {
        let density = c as f64 / (norm * (edge[1] - edge[0]));
        writeln!(w, "{:.16e},{:.16e},{c},{density:.16e}", edge[0], edge[1]).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes a header and rows of numbers in the event-dump number format.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> RunResult<()> {
    let mut w = create(path)?;
    let io = |e| RunError::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_time(v)).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> RunResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

pub fn output_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
