//! simulate → detect → histogram → fit, and the report bundle.

use std::collections::BTreeMap;
use std::path::Path;

use pairemit_core::event_sim::{
    assign_detections, simulate_range, Detector, DetectionRecord, EmissionMode, EmissionRecord,
};
use pairemit_core::inference::{
    build_histogram, fit_cumulative_exponential, fit_exponential_histogram, fit_exponential_mle,
    fit_two_sided_exponential, FitResult, Histogram,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checks::Check;
use crate::config::ExperimentConfig;
use crate::derivation::LabeledReport;
use crate::error::{RunError, RunResult};
use crate::io;

/// Molecules per parallel work unit.
const CHUNK: u64 = 1 << 16;

/// Evaluation points for the per-detector cumulative fit.
const CUMULATIVE_POINTS: usize = 200;

/// Runs `f` on a pool of `workers` threads, or on the global pool when
/// `workers` is 0. Results never depend on the thread count.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> RunResult<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSet {
    pub emissions: Vec<EmissionRecord>,
    pub detections: Vec<DetectionRecord>,
}

/// Emission and detection records for the whole ensemble, generated in
/// parallel chunks and concatenated in molecule order.
pub fn generate_events(cfg: &ExperimentConfig) -> RunResult<EventSet> {
    let sim = cfg.sim_config()?;
    let n_chunks = cfg.n0.div_ceil(CHUNK);
    let parts: Vec<(Vec<EmissionRecord>, Vec<DetectionRecord>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let ids = c * CHUNK..((c + 1) * CHUNK).min(cfg.n0);
            let em = simulate_range(&sim, ids)?;
            let det = assign_detections(&em, &sim)?;
            Ok((em, det))
        })
        .collect::<pairemit_core::Result<_>>()?;
    let mut emissions = Vec::with_capacity(cfg.n0 as usize);
    let mut detections = Vec::with_capacity(cfg.n0 as usize);
    for (e, d) in parts {
        emissions.extend(e);
        detections.extend(d);
    }
    Ok(EventSet {
        emissions,
        detections,
    })
}

/// Time samples extracted from detection records, in seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observables {
    /// Earlier registered time, for molecules with two registered photons.
    pub first: Vec<f64>,
    /// Later registered time for the same molecules.
    pub second: Vec<f64>,
    /// `second - first`.
    pub gap: Vec<f64>,
    pub det1: Vec<f64>,
    pub det2: Vec<f64>,
    /// `t1 - t2` where both detectors fired.
    pub coincidence: Vec<f64>,
}

pub fn observables(detections: &[DetectionRecord]) -> Observables {
    let mut o = Observables::default();
    for d in detections {
        let mut times: Vec<f64> = d.hits(Detector::One).chain(d.hits(Detector::Two)).collect();
        o.det1.extend(d.hits(Detector::One));
        o.det2.extend(d.hits(Detector::Two));
        if let Some(tau) = d.coincidence() {
            o.coincidence.push(tau);
        }
        if times.len() == 2 {
            times.sort_by(f64::total_cmp);
            o.first.push(times[0]);
            o.second.push(times[1]);
            o.gap.push(times[1] - times[0]);
        }
    }
    o
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorCounts {
    pub detector1: u64,
    pub detector2: u64,
    pub coincidences: u64,
    pub two_photon_molecules: u64,
}

/// Comparison of fitted rates with the amplitude-engine prediction
/// `ratio * Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossEngine {
    pub predicted_gamma_f: f64,
    pub fitted_gamma_f: f64,
    pub z_f: f64,
    pub predicted_gamma_s: f64,
    pub fitted_gamma_s: f64,
    pub z_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub version: String,
    /// Wall-clock time of the run; the only field that varies between
    /// identical runs.
    pub timestamp: String,
    pub config_echo: ExperimentConfig,
    /// `1 / gamma_inverse`, in s⁻¹.
    pub gamma: f64,
    pub counts: DetectorCounts,
    /// Fitted rates in s⁻¹.
    pub fits: BTreeMap<String, FitResult>,
    /// `rate_hat / Γ` for every fit.
    pub fit_ratios: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub skipped_fits: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_ratios: Vec<LabeledReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_engine: Option<CrossEngine>,
    /// File names of the tables written next to the report.
    pub curve_tables: Vec<String>,
    pub checks: Vec<Check>,
}

pub const HISTOGRAMS: [&str; 5] = ["first", "second", "det1", "det2", "coincidence"];

pub fn histogram_file(name: &str) -> String {
    format!("hist_{name}.csv")
}

/// Histograms over `[0, 8/Γ]` (coincidences over `[-8/Γ, 8/Γ]`) with the
/// configured bin count.
pub fn histograms(cfg: &ExperimentConfig, o: &Observables) -> RunResult<BTreeMap<&'static str, Histogram>> {
    let t_max = cfg.t_max();
    let w = t_max / cfg.bins as f64;
    let mut out = BTreeMap::new();
    for (name, samples) in [("first", &o.first), ("second", &o.second), ("det1", &o.det1), ("det2", &o.det2)] {
        out.insert(name, build_histogram(samples, w, (0.0, t_max))?);
    }
    out.insert("coincidence", build_histogram(&o.coincidence, w, (-t_max, t_max))?);
    Ok(out)
}

fn fit_all(
    o: &Observables,
    hist: &BTreeMap<&'static str, Histogram>,
) -> (BTreeMap<String, FitResult>, BTreeMap<String, String>) {
    let attempts: [(&str, pairemit_core::Result<FitResult>); 6] = [
        ("first", fit_exponential_mle(&o.first)),
        ("first_histogram", fit_exponential_histogram(&hist["first"])),
        ("second", fit_exponential_mle(&o.gap)),
        ("det1", fit_cumulative_exponential(&o.det1, CUMULATIVE_POINTS)),
        ("det2", fit_cumulative_exponential(&o.det2, CUMULATIVE_POINTS)),
        ("coincidence", fit_two_sided_exponential(&o.coincidence)),
    ];
    let mut fits = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    for (name, r) in attempts {
        match r {
            Ok(f) => {
                fits.insert(name.to_string(), f);
            }
            Err(e) => {
                skipped.insert(name.to_string(), e.to_string());
            }
        }
    }
    (fits, skipped)
}

/// Rates the fits should recover: the configured stage rates in sequential
/// mode, `(2Γ, Γ)` for independent atoms.
pub fn expected_rates(cfg: &ExperimentConfig) -> (f64, f64) {
    let g = cfg.gamma();
    match cfg.mode {
        EmissionMode::Sequential => (cfg.gamma_f_ratio * g, cfg.gamma_s_ratio * g),
        EmissionMode::Independent => (2.0 * g, g),
    }
}

fn experiment_checks(cfg: &ExperimentConfig, fits: &BTreeMap<String, FitResult>, counts: &DetectorCounts) -> Vec<Check> {
    let (gf, gs) = expected_rates(cfg);
    let g = cfg.gamma();
    let mut checks = Vec::new();
    for (name, want) in [("first", gf), ("second", gs), ("det1", g), ("det2", g), ("coincidence", gs)] {
        let label = format!("fit-{name}");
        checks.push(match fits.get(name) {
            Some(f) => Check::within(&label, f.rate_hat, want, f.std_error, 4.0),
            None => Check::new(&label, false, "fit unavailable".into()),
        });
    }
    let (c1, c2) = (counts.detector1 as f64, counts.detector2 as f64);
    checks.push(Check::new(
        "detector-symmetry",
        (c1 - c2).abs() <= 4.0 * (c1 + c2).sqrt(),
        format!("detector counts {c1} and {c2}, limit {:.1}", 4.0 * (c1 + c2).sqrt()),
    ));
    checks
}

/// Fits, counts and checks from an event set, without writing anything.
pub fn analyze(cfg: &ExperimentConfig, events: &EventSet) -> RunResult<ReportBundle> {
    let o = observables(&events.detections);
    let hist = histograms(cfg, &o)?;
    let (fits, skipped_fits) = fit_all(&o, &hist);
    let g = cfg.gamma();
    let fit_ratios = fits.iter().map(|(k, f)| (k.clone(), f.rate_hat / g)).collect();
    let counts = DetectorCounts {
        detector1: o.det1.len() as u64,
        detector2: o.det2.len() as u64,
        coincidences: o.coincidence.len() as u64,
        two_photon_molecules: o.first.len() as u64,
    };
    let checks = experiment_checks(cfg, &fits, &counts);
    Ok(ReportBundle {
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config_echo: cfg.clone(),
        gamma: g,
        counts,
        fits,
        fit_ratios,
        skipped_fits,
        rate_ratios: Vec::new(),
        cross_engine: None,
        curve_tables: HISTOGRAMS.iter().map(|h| histogram_file(h)).collect(),
        checks,
    })
}

/// Writes the five histogram tables. First/second/detector densities are
/// normalized per molecule, coincidences per coincidence.
pub fn write_histograms(cfg: &ExperimentConfig, dir: &Path, o: &Observables) -> RunResult<()> {
    let hist = histograms(cfg, o)?;
    for (name, h) in &hist {
        let norm = if *name == "coincidence" {
            (o.coincidence.len() as f64).max(1.0)
        } else {
            cfg.n0 as f64
        };
        io::write_histogram(&dir.join(histogram_file(name)), h, norm)?;
    }
    Ok(())
}

/// Result of [`run_experiment`]: the report plus the in-memory events so
/// later stages (figure overlay) can reuse them.
pub struct ExperimentOutput {
    pub report: ReportBundle,
    pub events: EventSet,
}

/// Simulates, writes `events.csv`, the histogram tables and `report.json`
/// into the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> RunResult<ExperimentOutput> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    io::ensure_dir(dir)?;
    let events = generate_events(cfg)?;
    io::write_events(&dir.join(io::EVENTS_FILE), &events.emissions, &events.detections)?;
    let report = analyze(cfg, &events)?;
    write_histograms(cfg, dir, &observables(&events.detections))?;
    io::write_json(&dir.join(io::REPORT_FILE), &report)?;
    Ok(ExperimentOutput { report, events })
}

/// Re-analyzes an existing event dump.
pub fn run_fit(cfg: &ExperimentConfig, events_path: &Path) -> RunResult<ReportBundle> {
    cfg.validate()?;
    let (emissions, detections) = io::read_events(events_path)?;
    if emissions.len() as u64 != cfg.n0 {
        return Err(RunError::Validation(vec![crate::error::FieldIssue {
            field: "n0".into(),
            reason: format!(
                "configured {} molecules but {} holds {}",
                cfg.n0,
                events_path.display(),
                emissions.len()
            ),
        }]));
    }
    let events = EventSet {
        emissions,
        detections,
    };
    let dir = &cfg.output_dir;
    io::ensure_dir(dir)?;
    let report = analyze(cfg, &events)?;
    write_histograms(cfg, dir, &observables(&events.detections))?;
    io::write_json(&dir.join(io::REPORT_FILE), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n0: u64) -> ExperimentConfig {
        ExperimentConfig {
            n0,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn chunked_generation_matches_serial() {
        let cfg = small(CHUNK * 2 + 17);
        let ev = generate_events(&cfg).unwrap();
        let sim = cfg.sim_config().unwrap();
        let serial = pairemit_core::event_sim::simulate_ensemble(&sim).unwrap();
        assert_eq!(ev.emissions, serial);
        let one = with_workers(1, || generate_events(&cfg)).unwrap().unwrap();
        assert_eq!(one, ev);
    }

    #[test]
    fn multi_hit_observables_see_every_photon() {
        let cfg = small(10_000);
        let ev = generate_events(&cfg).unwrap();
        let o = observables(&ev.detections);
        assert_eq!(o.first.len(), 10_000);
        assert_eq!(o.det1.len() + o.det2.len(), 20_000);
        for (e, (f, s)) in ev.emissions.iter().zip(o.first.iter().zip(&o.second)) {
            assert_eq!((e.t_f, e.t_s), (*f, *s));
        }
    }

    #[test]
    fn analysis_recovers_rates_at_moderate_size() {
        let cfg = small(200_000);
        let ev = generate_events(&cfg).unwrap();
        let r = analyze(&cfg, &ev).unwrap();
        assert!(r.checks.iter().all(|c| c.passed), "{:#?}", r.checks);
        assert!(r.skipped_fits.is_empty());
        assert!((r.fit_ratios["first"] - 2.0).abs() < 0.03);
    }
}
