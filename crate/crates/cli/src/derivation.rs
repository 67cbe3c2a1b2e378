//! Amplitude-engine runs: the main first-emission case, the second-emission
//! separation sweep and the four amplitude properties.

use pairemit_core::amplitude::{
    property_rate, first_emission_rate_ratio, second_emission_rate_ratio, PropertyCase,
    EvolutionChoice, FinalStates, RateRatioReport,
};
use pairemit_core::quantum_state::{make_packet, make_two_atom_gaussian, GridFunction, SpatialGrid};
use serde::{Deserialize, Serialize};

use crate::config::AmplitudeParams;
use crate::error::RunResult;

/// A rate-ratio report with the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledReport {
    /// Short name of the run, e.g. `main-identity` or `prop1-orthogonal`.
    pub case: String,
    pub evolution: EvolutionChoice,
    /// `X / Y` of the initial correlated Gaussian, where one is involved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_ratio: Option<f64>,
    /// Atom separation at the second emission.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(flatten)]
    pub report: RateRatioReport,
}

fn labeled(case: &str, evolution: EvolutionChoice, report: RateRatioReport) -> LabeledReport {
    LabeledReport {
        case: case.to_string(),
        evolution,
        width_ratio: None,
        separation: None,
        report,
    }
}

fn evolutions(p: &AmplitudeParams) -> [EvolutionChoice; 2] {
    [
        EvolutionChoice::Identity,
        EvolutionChoice::FreePropagation { dt: p.dt },
    ]
}

fn suffix(u: EvolutionChoice) -> &'static str {
    match u {
        EvolutionChoice::Identity => "identity",
        EvolutionChoice::FreePropagation { .. } => "free",
    }
}

/// First-emission ratio for the configured correlated Gaussian, under
/// identity and free evolution.
pub fn main_case(p: &AmplitudeParams) -> RunResult<Vec<LabeledReport>> {
    let grid = p.grid()?;
    let psi = make_two_atom_gaussian(p.x, p.y, &grid)?;
    let mut out = Vec::new();
    for u in evolutions(p) {
        let r = first_emission_rate_ratio(&psi, u, &FinalStates::OrderedGrid)?;
        let mut l = labeled(&format!("main-{}", suffix(u)), u, r);
        l.width_ratio = Some(p.x / p.y);
        out.push(l);
    }
    Ok(out)
}

/// Separations `0, ..., p.separation` on `p.sweep_points` equal steps.
pub fn sweep_separations(p: &AmplitudeParams) -> Vec<f64> {
    let n = p.sweep_points;
    (0..n)
        .map(|k| p.separation * k as f64 / (n - 1) as f64)
        .collect()
}

/// Second-emission ratio for two packets leaving a common center in opposite
/// directions, with relative speed chosen so that they are `d` apart after
/// `p.dt`.
pub fn second_emission_at(p: &AmplitudeParams, d: f64) -> RunResult<LabeledReport> {
    let v = d / p.dt;
    let psi = make_packet(0.0, -0.5 * v, p.sigma)?;
    let phi = make_packet(0.0, 0.5 * v, p.sigma)?;
    let r = second_emission_rate_ratio((&psi, &phi), p.dt, p.recoil_k)?;
    let mut l = labeled(
        "second-emission",
        EvolutionChoice::FreePropagation { dt: p.dt },
        r,
    );
    l.separation = Some(d);
    Ok(l)
}

pub fn second_emission_sweep(p: &AmplitudeParams) -> RunResult<Vec<LabeledReport>> {
    sweep_separations(p)
        .into_iter()
        .map(|d| second_emission_at(p, d))
        .collect()
}

/// Main case followed by the second-emission sweep.
pub fn run_rate_derivation(p: &AmplitudeParams) -> RunResult<Vec<LabeledReport>> {
    let mut out = main_case(p)?;
    out.extend(second_emission_sweep(p)?);
    Ok(out)
}

/// Ground and first excited oscillator states of width `sigma`: an exactly
/// orthogonal pair on a symmetric grid.
fn orthogonal_pair(grid: &SpatialGrid, sigma: f64) -> RunResult<(GridFunction, GridFunction)> {
    let g = make_packet(0.0, 0.0, sigma)?;
    let chi = g.sample(grid).normalized()?;
    let xi = GridFunction::from_fn(*grid, |x| g.amplitude(x) * (x / sigma)).normalized()?;
    Ok((chi, xi))
}

/// All four amplitude properties. Property 1 is reported for an orthogonal
/// and an identical pair under both the ordered grid basis and the restricted
/// family spanned by the pair itself.
pub fn run_properties(p: &AmplitudeParams) -> RunResult<Vec<LabeledReport>> {
    let grid = p.grid()?;
    let psi = make_two_atom_gaussian(p.x, p.y, &grid)?;
    let ratio = Some(p.x / p.y);
    let mut out = Vec::new();

    let (chi, xi) = orthogonal_pair(&grid, p.sigma)?;
    let restricted = FinalStates::Restricted(vec![chi.clone(), xi.clone()]);
    for (name, a, b) in [("orthogonal", &chi, &xi), ("identical", &chi, &chi)] {
        for (conv, finals) in [("ordered", &FinalStates::OrderedGrid), ("restricted", &restricted)] {
            let u = EvolutionChoice::Identity;
            let r = property_rate(PropertyCase::NonEntangled { chi: a, xi: b }, u, finals)?;
            out.push(labeled(&format!("prop1-{name}-{conv}"), u, r));
        }
    }

    for u in evolutions(p) {
        let r = property_rate(PropertyCase::NonSymmetrized { psi: &psi }, u, &FinalStates::OrderedGrid)?;
        let mut l = labeled(&format!("prop2-{}", suffix(u)), u, r);
        l.width_ratio = ratio;
        out.push(l);
    }
    for u in evolutions(p) {
        let r = property_rate(PropertyCase::EntangledFinal { psi: &psi }, u, &FinalStates::OrderedGrid)?;
        let mut l = labeled(&format!("prop3-{}", suffix(u)), u, r);
        l.width_ratio = ratio;
        out.push(l);
    }
    for u in evolutions(p) {
        let r = property_rate(
            PropertyCase::EntangledSecond { intermediate: &psi },
            u,
            &FinalStates::OrderedGrid,
        )?;
        let mut l = labeled(&format!("prop4-{}", suffix(u)), u, r);
        l.width_ratio = ratio;
        out.push(l);
    }
    Ok(out)
}
