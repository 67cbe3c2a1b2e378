//! Normalized detection curves on `[0, 8/Γ]`, with optional simulated
//! overlay.

use std::path::PathBuf;

use pairemit_core::kinetics::{cumulative_counts, detection_densities};
use serde::{Deserialize, Serialize};

use crate::checks::poisson_band_ok;
use crate::config::ExperimentConfig;
use crate::error::RunResult;
use crate::experiment::{generate_events, histograms, observables, EventSet};
use crate::io;

/// Intervals on the analytic grid; 400 intervals give 401 rows.
pub const FIGURE_INTERVALS: usize = 400;

pub const FIG1_HEADER: [&str; 8] = [
    "t_gamma", "n_i", "n_f", "n_s", "t_seconds", "n_i_per_s", "n_f_per_s", "n_s_per_s",
];

pub const OVERLAY_HEADER: [&str; 11] = [
    "t_lo_gamma",
    "t_hi_gamma",
    "sim_n_f",
    "exp_n_f",
    "sigma_n_f",
    "sim_n_s",
    "exp_n_s",
    "sigma_n_s",
    "sim_n_i",
    "exp_n_i",
    "sigma_n_i",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Output {
    pub table: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay: Option<PathBuf>,
    /// Largest `|n_f + n_s - 2 n_i|` over the analytic rows, in units of Γ.
    pub identity_residual: f64,
    /// Bins outside the Poisson 4-sigma band, per curve `[n_f, n_s, n_i]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay_outliers: Option<[usize; 3]>,
}

/// Analytic rows: Γt, then `n_i = e^{-Γt}`, `n_f`, `n_s` in units of Γ, then
/// the same in seconds and s⁻¹. `n_i` is the single-atom detector law, so the
/// identity `n_f + n_s = 2 n_i` is a genuine check of the rates.
pub fn figure_rows(cfg: &ExperimentConfig) -> RunResult<Vec<Vec<f64>>> {
    let g = cfg.gamma();
    let rates = cfg.rates()?;
    (0..=FIGURE_INTERVALS)
        .map(|k| {
            let tg = 8.0 * k as f64 / FIGURE_INTERVALS as f64;
            let t = tg / g;
            let d = detection_densities(t, &rates)?;
            let n_i = (-tg).exp();
            let (n_f, n_s) = (d.n_first / g, d.n_second / g);
            Ok(vec![tg, n_i, n_f, n_s, t, n_i * g, d.n_first, d.n_second])
        })
        .collect()
}

pub fn identity_residual(rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|r| (r[2] + r[3] - 2.0 * r[1]).abs())
        .fold(0.0, f64::max)
}

struct Overlay {
    rows: Vec<Vec<f64>>,
    outliers: [usize; 3],
}

/// Per-bin simulated densities against exact bin integrals of the curves.
/// First and second photons are normalized by the molecules expected to
/// register both photons, detector counts by the expected single-photon
/// registrations.
fn overlay(cfg: &ExperimentConfig, events: &EventSet) -> RunResult<Overlay> {
    let g = cfg.gamma();
    let rates = cfg.rates()?;
    let o = observables(&events.detections);
    let hist = histograms(cfg, &o)?;
    let n0 = cfg.n0 as f64;
    let eta = cfg.detector_efficiency;
    let norm_pair = n0 * eta * eta;
    let norm_single = n0 * eta;
    let cum = |t: f64| cumulative_counts(t, &rates, 1.0);

    let mut rows = Vec::new();
    let mut outliers = [0usize; 3];
    let edges = hist["first"].edges().to_vec();
    for k in 0..edges.len() - 1 {
        let (a, b) = (edges[k], edges[k + 1]);
        let (ca, cb) = (cum(a)?, cum(b)?);
        let width_g = (b - a) * g;
        let means = [
            norm_pair * (cb.n_first - ca.n_first),
            norm_pair * (cb.n_second - ca.n_second),
            norm_single * ((-g * a).exp() - (-g * b).exp()),
        ];
        let norms = [norm_pair, norm_pair, norm_single];
        let counts = [hist["first"].counts()[k], hist["second"].counts()[k], hist["det1"].counts()[k]];
        let mut row = vec![a * g, b * g];
        for j in 0..3 {
            if !poisson_band_ok(counts[j], means[j]) {
                outliers[j] += 1;
            }
            let scale = norms[j] * width_g;
            row.extend([counts[j] as f64 / scale, means[j] / scale, means[j].sqrt() / scale]);
        }
        rows.push(row);
    }
    Ok(Overlay { rows, outliers })
}

/// Writes `fig1.csv` and, when the config asks for it, `fig1_overlay.csv`.
/// Events are simulated on demand unless supplied.
pub fn reproduce_figure1(cfg: &ExperimentConfig, events: Option<&EventSet>) -> RunResult<Figure1Output> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    io::ensure_dir(dir)?;
    let rows = figure_rows(cfg)?;
    let table = dir.join(io::FIG1_FILE);
    io::write_table(&table, &FIG1_HEADER, &rows)?;
    let mut out = Figure1Output {
        table,
        overlay: None,
        identity_residual: identity_residual(&rows),
        overlay_outliers: None,
    };
    if cfg.fig1_overlay {
        let generated;
        let ev = match events {
            Some(e) => e,
            None => {
                generated = generate_events(cfg)?;
                &generated
            }
        };
        let ov = overlay(cfg, ev)?;
        let path = dir.join(io::FIG1_OVERLAY_FILE);
        io::write_table(&path, &OVERLAY_HEADER, &ov.rows)?;
        out.overlay = Some(path);
        out.overlay_outliers = Some(ov.outliers);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_row_is_one_two_zero() {
        let rows = figure_rows(&ExperimentConfig::default()).unwrap();
        assert_eq!(rows.len(), 401);
        assert_eq!(&rows[0][..4], &[0.0, 1.0, 2.0, 0.0]);
        assert_eq!(rows[400][0], 8.0);
        assert!(identity_residual(&rows) <= 1e-12);
    }

    #[test]
    fn incompatible_rates_break_the_identity() {
        let cfg = ExperimentConfig {
            gamma_f_ratio: 1.5,
            ..ExperimentConfig::default()
        };
        assert!(identity_residual(&figure_rows(&cfg).unwrap()) > 0.1);
    }
}
