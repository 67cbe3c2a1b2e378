//! Experiment configuration: one JSON document plus `key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use pairemit_core::event_sim::{DetectorModel, EmissionMode, SimConfig};
use pairemit_core::kinetics::RateTriple;
use pairemit_core::quantum_state::{SpatialGrid, MIN_GRID_POINTS};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{FieldIssue, RunError, RunResult};

/// Spatial grid for the amplitude computations. Lengths are in micrometres,
/// with ħ = m = 1 fixing the time unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    /// Half-width of the symmetric grid; `None` means `8 max(x, y)`.
    pub half_width: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 512,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeParams {
    /// Width along `x + y` of the correlated two-atom Gaussian.
    pub x: f64,
    /// Width along `x - y`.
    pub y: f64,
    /// Single-atom packet width for the second-emission stage.
    pub sigma: f64,
    /// Momentum kick given to the emitting atom at the second emission.
    pub recoil_k: f64,
    /// Free-propagation time used for evolved cases.
    pub dt: f64,
    /// Largest atom separation on the second-emission sweep.
    pub separation: f64,
    pub sweep_points: usize,
    pub grid: GridSpec,
}

impl Default for AmplitudeParams {
    fn default() -> Self {
        AmplitudeParams {
            x: 2.0,
            y: 1.0,
            sigma: 1.0,
            recoil_k: 0.0,
            dt: 1.0,
            separation: 100.0,
            sweep_points: 41,
            grid: GridSpec::default(),
        }
    }
}

impl AmplitudeParams {
    pub fn grid(&self) -> RunResult<SpatialGrid> {
        let half = self.grid.half_width.unwrap_or(8.0 * self.x.max(self.y));
        Ok(SpatialGrid::centered(half, self.grid.points)?)
    }

    fn issues(&self, out: &mut Vec<FieldIssue>) {
        let positive = [
            ("amplitude_params.x", self.x),
            ("amplitude_params.y", self.y),
            ("amplitude_params.sigma", self.sigma),
            ("amplitude_params.dt", self.dt),
            ("amplitude_params.separation", self.separation),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(issue(name, "must be finite and positive"));
            }
        }
        if !self.recoil_k.is_finite() {
            out.push(issue("amplitude_params.recoil_k", "must be finite"));
        }
        if self.sweep_points < 2 {
            out.push(issue("amplitude_params.sweep_points", "need at least 2 points"));
        }
        if self.grid.points < MIN_GRID_POINTS {
            out.push(issue(
                "amplitude_params.grid.points",
                &format!("need at least {MIN_GRID_POINTS} points"),
            ));
        }
        if let Some(h) = self.grid.half_width {
            if !(h > 0.0 && h.is_finite()) {
                out.push(issue("amplitude_params.grid.half_width", "must be finite and positive"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Single-atom lifetime `1 / Γ` in seconds.
    pub gamma_inverse: f64,
    /// `Γ_f / Γ` used by sequential mode.
    pub gamma_f_ratio: f64,
    /// `Γ_s / Γ` used by sequential mode.
    pub gamma_s_ratio: f64,
    pub n0: u64,
    pub mode: EmissionMode,
    pub seed: u64,
    /// Histogram bins over `[0, 8 / Γ]`.
    pub bins: usize,
    pub output_dir: PathBuf,
    pub detector_efficiency: f64,
    pub detector_model: DetectorModel,
    /// Add simulated histograms next to the analytic figure curves.
    pub fig1_overlay: bool,
    pub amplitude_params: AmplitudeParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gamma_inverse: 1.6e-9,
            gamma_f_ratio: 2.0,
            gamma_s_ratio: 1.0,
            n0: 1_000_000,
            mode: EmissionMode::Sequential,
            seed: 1,
            bins: 200,
            output_dir: PathBuf::from("out"),
            detector_efficiency: 1.0,
            detector_model: DetectorModel::MultiHit,
            fig1_overlay: true,
            amplitude_params: AmplitudeParams::default(),
        }
    }
}

fn issue(field: &str, reason: &str) -> FieldIssue {
    FieldIssue {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

impl ExperimentConfig {
    pub fn gamma(&self) -> f64 {
        1.0 / self.gamma_inverse
    }

    pub fn rates(&self) -> RunResult<RateTriple> {
        let g = self.gamma();
        Ok(RateTriple::new(g, self.gamma_f_ratio * g, self.gamma_s_ratio * g)?)
    }

    pub fn sim_config(&self) -> RunResult<SimConfig> {
        Ok(SimConfig {
            n0: self.n0,
            mode: self.mode,
            rates: self.rates()?,
            seed: self.seed,
            detector_efficiency: self.detector_efficiency,
            detector_model: self.detector_model,
        })
    }

    /// End of the histogram and figure window, `8 / Γ`.
    pub fn t_max(&self) -> f64 {
        8.0 * self.gamma_inverse
    }

    /// Every offending field, or `Ok` when the configuration is usable.
    pub fn validate(&self) -> RunResult<()> {
        let mut out = Vec::new();
        let positive = [
            ("gamma_inverse", self.gamma_inverse),
            ("gamma_f_ratio", self.gamma_f_ratio),
            ("gamma_s_ratio", self.gamma_s_ratio),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(issue(name, "must be finite and positive"));
            }
        }
        if self.n0 == 0 {
            out.push(issue("n0", "at least one molecule is required"));
        }
        if self.bins == 0 {
            out.push(issue("bins", "at least one bin is required"));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            out.push(issue("detector_efficiency", "must lie in (0, 1]"));
        }
        if self.output_dir.as_os_str().is_empty() {
            out.push(issue("output_dir", "must not be empty"));
        } else if self.output_dir.is_file() {
            out.push(issue("output_dir", "exists and is not a directory"));
        }
        self.amplitude_params.issues(&mut out);
        if out.is_empty() {
            Ok(())
        } else {
            Err(RunError::Validation(out))
        }
    }

    /// Reads `path` (or starts from the defaults) and applies `key=value`
    /// overrides. Dotted keys reach nested fields, e.g.
    /// `amplitude_params.grid.points=256`. Values are parsed as JSON and fall
    /// back to plain strings.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> RunResult<Self> {
        let base = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| RunError::io(p, e))?;
                let file: Value = serde_json::from_str(&text).map_err(|e| {
                    RunError::Validation(vec![issue(&p.display().to_string(), &e.to_string())])
                })?;
                let mut v = serde_json::to_value(ExperimentConfig::default())?;
                merge(&mut v, file);
                v
            }
            None => serde_json::to_value(ExperimentConfig::default())?,
        };
        if let Err(e) = serde_json::from_value::<ExperimentConfig>(base.clone()) {
            return Err(RunError::Validation(vec![issue("config", &e.to_string())]));
        }

        let mut issues = Vec::new();
        let mut merged = base.clone();
        for kv in overrides {
            let Some((key, raw)) = kv.split_once('=') else {
                issues.push(issue(kv, "expected key=value"));
                continue;
            };
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            // check each override on its own so type errors name their key
            let mut alone = base.clone();
            if let Err(reason) = set_path(&mut alone, key, value.clone()) {
                issues.push(issue(key, &reason));
                continue;
            }
            if let Err(e) = serde_json::from_value::<ExperimentConfig>(alone) {
                issues.push(issue(key, &e.to_string()));
                continue;
            }
            set_path(&mut merged, key, value).expect("checked above");
        }
        if !issues.is_empty() {
            return Err(RunError::Validation(issues));
        }
        let cfg: ExperimentConfig = serde_json::from_value(merged)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Overlays `patch` on `base`, recursing into objects present in both.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), String> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| format!("`{}` is not a section", parts[..i].join(".")))?;
        if !obj.contains_key(*part) {
            return Err("unknown field".to_string());
        }
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.get_mut(*part).expect("present");
    }
    Err("empty key".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.rates().unwrap().gamma_f, 2.0 / 1.6e-9);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = ExperimentConfig::load(
            None,
            &[
                "n0=500".into(),
                "mode=independent".into(),
                "amplitude_params.grid.points=256".into(),
                "output_dir=/tmp/x".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.n0, 500);
        assert_eq!(cfg.mode, EmissionMode::Independent);
        assert_eq!(cfg.amplitude_params.grid.points, 256);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn every_bad_field_is_listed() {
        let err = ExperimentConfig::load(
            None,
            &["n0=0".into(), "detector_efficiency=0".into(), "amplitude_params.x=-1".into()],
        )
        .unwrap_err();
        let RunError::Validation(issues) = err else { panic!() };
        let fields: Vec<&str> = issues.iter().map(|i| i.field.as_str()).collect();
        assert_eq!(fields, ["n0", "detector_efficiency", "amplitude_params.x"]);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let dir = std::env::temp_dir().join(format!("pairemit-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.json");
        fs::write(&path, r#"{"n0": 7, "amplitude_params": {"grid": {"points": 128}}}"#).unwrap();
        let cfg = ExperimentConfig::load(Some(&path), &["amplitude_params.x=1.25".into()]).unwrap();
        assert_eq!(cfg.n0, 7);
        assert_eq!(cfg.amplitude_params.grid.points, 128);
        assert_eq!(cfg.amplitude_params.x, 1.25);
        assert_eq!(cfg.amplitude_params.y, AmplitudeParams::default().y);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unknown_and_mistyped_keys_are_reported() {
        let err = ExperimentConfig::load(None, &["nzero=1".into(), "bins=many".into(), "seed".into()])
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let RunError::Validation(issues) = err else { panic!() };
        assert_eq!(issues.len(), 3);
        assert_eq!(issues[0].field, "nzero");
        assert_eq!(issues[1].field, "bins");
    }
}
