//! Experiment runner on top of `pairemit-core`: configuration, parallel event
//! generation, analysis, figure tables, amplitude-engine reports and the
//! files they are written to.

pub mod checks;
pub mod config;
pub mod derivation;
pub mod error;
pub mod experiment;
pub mod figure;
pub mod io;

use checks::Check;
use config::ExperimentConfig;
use derivation::LabeledReport;
use error::RunResult;
use experiment::{CrossEngine, ReportBundle};
use figure::Figure1Output;

pub use error::RunError;

/// Amplitude results must sit this close to their targets.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;
pub const PROPAGATION_TOLERANCE: f64 = 1e-4;

fn find<'a>(reports: &'a [LabeledReport], case: &str) -> Option<&'a LabeledReport> {
    reports.iter().find(|r| r.case == case)
}

fn target_check(reports: &[LabeledReport], case: &str, target: f64, tol: f64) -> Check {
    let name = format!("ratio-{case}");
    match find(reports, case) {
        Some(r) => Check::new(
            &name,
            (r.report.ratio - target).abs() <= tol,
            format!("ratio {:.12}, target {target} ± {tol:e}", r.report.ratio),
        ),
        None => Check::new(&name, false, "case missing".into()),
    }
}

/// Checks on the main case and the second-emission sweep.
pub fn derivation_checks(reports: &[LabeledReport]) -> Vec<Check> {
    let mut out = vec![
        target_check(reports, "main-identity", 2.0, IDENTITY_TOLERANCE),
        target_check(reports, "main-free", 2.0, PROPAGATION_TOLERANCE),
    ];
    if let Some(r) = find(reports, "main-identity") {
        out.push(Check::new(
            "completeness-main-identity",
            (r.report.completeness_sum - 1.0).abs() <= IDENTITY_TOLERANCE,
            format!("completeness {:.12}", r.report.completeness_sum),
        ));
    }
    let sweep: Vec<&LabeledReport> = reports.iter().filter(|r| r.case == "second-emission").collect();
    if let (Some(first), Some(last)) = (sweep.first(), sweep.last()) {
        out.push(Check::new(
            "second-emission-zero-separation",
            (first.report.ratio - 2.0).abs() <= IDENTITY_TOLERANCE,
            format!("ratio {:.12}", first.report.ratio),
        ));
        out.push(Check::new(
            "second-emission-max-separation",
            (last.report.ratio - 1.0).abs() <= PROPAGATION_TOLERANCE,
            format!("ratio {:.12} at separation {} µm", last.report.ratio, last.separation.unwrap_or(f64::NAN)),
        ));
        // ratios may only stay flat once they have reached exactly 1
        let monotone = sweep
            .windows(2)
            .all(|w| w[1].report.ratio < w[0].report.ratio || w[1].report.ratio == 1.0);
        out.push(Check::new("second-emission-monotone", monotone, format!("{} sweep points", sweep.len())));
    } else {
        out.push(Check::new("second-emission-sweep", false, "sweep missing".into()));
    }
    out
}

/// Checks on the suite. Property 1 has no fixed target and is only
/// required to be present.
pub fn property_checks(reports: &[LabeledReport]) -> Vec<Check> {
    let mut out = vec![
        target_check(reports, "prop2-identity", 1.0, IDENTITY_TOLERANCE),
        target_check(reports, "prop2-free", 1.0, PROPAGATION_TOLERANCE),
        target_check(reports, "prop3-identity", 2.0, PROPAGATION_TOLERANCE),
        target_check(reports, "prop3-free", 2.0, PROPAGATION_TOLERANCE),
        target_check(reports, "prop4-identity", 2.0, PROPAGATION_TOLERANCE),
        target_check(reports, "prop4-free", 2.0, PROPAGATION_TOLERANCE),
    ];
    let prop1 = reports
        .iter()
        .filter(|r| r.case.starts_with("prop1-"))
        .filter(|r| r.report.interference_term.is_some())
        .count();
    out.push(Check::new(
        "prop1-reported",
        prop1 == 4,
        format!("{prop1} property-1 reports with an interference term"),
    ));
    out
}

pub fn figure_checks(fig: &Figure1Output) -> Vec<Check> {
    let mut out = vec![Check::new(
        "fig1-identity",
        fig.identity_residual <= 1e-12,
        format!("max |n_f + n_s - 2 n_i| = {:e}", fig.identity_residual),
    )];
    if let Some(o) = fig.overlay_outliers {
        out.push(Check::new(
            "fig1-overlay",
            o == [0, 0, 0],
            format!("bins outside the Poisson 4-sigma band (n_f, n_s, n_i): {o:?}"),
        ));
    }
    out
}

/// Fitted first and second rates against `ratio * Γ` from the amplitude
/// engine, in units of the fit standard error.
pub fn cross_engine(report: &ReportBundle, reports: &[LabeledReport]) -> Option<CrossEngine> {
    let main = find(reports, "main-identity")?;
    let second = reports.iter().filter(|r| r.case == "second-emission").last()?;
    let f = report.fits.get("first")?;
    let s = report.fits.get("second")?;
    let pf = main.report.ratio * report.gamma;
    let ps = second.report.ratio * report.gamma;
    Some(CrossEngine {
        predicted_gamma_f: pf,
        fitted_gamma_f: f.rate_hat,
        z_f: (f.rate_hat - pf) / f.std_error,
        predicted_gamma_s: ps,
        fitted_gamma_s: s.rate_hat,
        z_s: (s.rate_hat - ps) / s.std_error,
    })
}

pub struct FullOutput {
    pub report: ReportBundle,
    pub figure: Figure1Output,
}

/// Everything: experiment, figure tables, rate derivation and amplitude
/// properties, with one combined report.
pub fn run_full(cfg: &ExperimentConfig) -> RunResult<FullOutput> {
    let exp = experiment::run_experiment(cfg)?;
    let figure = figure::reproduce_figure1(cfg, Some(&exp.events))?;
    let rates = derivation::run_rate_derivation(&cfg.amplitude_params)?;
    let props = derivation::run_properties(&cfg.amplitude_params)?;
    let dir = &cfg.output_dir;
    io::write_json(&dir.join(io::RATES_FILE), &rates)?;
    io::write_json(&dir.join(io::PROPERTIES_FILE), &props)?;

    let mut report = exp.report;
    report.cross_engine = cross_engine(&report, &rates);
    if let Some(c) = report.cross_engine {
        report.checks.push(Check::new(
            "cross-engine",
            c.z_f.abs() <= 3.0 && c.z_s.abs() <= 3.0,
            format!("z_f = {:.3}, z_s = {:.3} (limit 3)", c.z_f, c.z_s),
        ));
    }
    report.checks.extend(figure_checks(&figure));
    report.checks.extend(derivation_checks(&rates));
    report.checks.extend(property_checks(&props));
    report.curve_tables.push(io::FIG1_FILE.to_string());
    if figure.overlay.is_some() {
        report.curve_tables.push(io::FIG1_OVERLAY_FILE.to_string());
    }
    report.rate_ratios = rates.into_iter().chain(props).collect();
    io::write_json(&dir.join(io::REPORT_FILE), &report)?;
    Ok(FullOutput { report, figure })
}
