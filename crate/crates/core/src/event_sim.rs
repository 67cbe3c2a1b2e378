//! Per-molecule emission and detection events.
//!
//! Two emission models are provided:
//!
//! * [`EmissionMode::Sequential`]: the first photon after an `Exp(gamma_f)`
//!   wait, the second after a further `Exp(gamma_s)` wait.
//! * [`EmissionMode::Independent`]: two atoms in a product state, each decaying
//!   after an `Exp(gamma)` wait; the first photon is the earlier of the two.
//!
//! All randomness for molecule `i` comes from the substream addressed by
//! `(seed, i)`, so [`simulate_range`] over any partition of `0..n0` concatenates
//! to exactly [`simulate_ensemble`].

use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::RateTriple;
use crate::rng::{Domain, Substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmissionMode {
    Sequential,
    Independent,
}

/// How a detector treats a second photon from the same molecule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorModel {
    /// At most one time per detector per molecule; the later photon is lost.
    #[default]
    SingleHit,
    /// Both photons are registered even when they reach the same detector.
    MultiHit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n0: u64,
    pub mode: EmissionMode,
    pub rates: RateTriple,
    pub seed: u64,
    pub detector_efficiency: f64,
    #[serde(default)]
    pub detector_model: DetectorModel,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(Error::param("n0", "at least one molecule is required"));
        }
        self.rates.validate()?;
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            return Err(Error::param(
                "detector_efficiency",
                "efficiency must lie in (0, 1]",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionRecord {
    pub molecule_id: u64,
    pub t_f: f64,
    pub t_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detector {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub molecule_id: u64,
    /// Earliest registered time at detector 1.
    pub t1: Option<f64>,
    /// Earliest registered time at detector 2.
    pub t2: Option<f64>,
    /// Later photon that reached an already-hit detector; only kept under
    /// [`DetectorModel::MultiHit`].
    pub repeat_hit: Option<(Detector, f64)>,
}

impl DetectionRecord {
    /// `t1 - t2` when both detectors fired.
    pub fn coincidence(&self) -> Option<f64> {
        Some(self.t1? - self.t2?)
    }

    /// Every registered time at `detector`.
    pub fn hits(&self, detector: Detector) -> impl Iterator<Item = f64> {
        let first = match detector {
            Detector::One => self.t1,
            Detector::Two => self.t2,
        };
        let repeat = match self.repeat_hit {
            Some((d, t)) if d == detector => Some(t),
            _ => None,
        };
        first.into_iter().chain(repeat)
    }
}

fn emit_one(cfg: &SimConfig, molecule_id: u64) -> EmissionRecord {
    let mut s = Substream::new(cfg.seed, Domain::Emission, molecule_id);
    let (t_f, t_s) = match cfg.mode {
        EmissionMode::Sequential => {
            let t_f = s.exponential(cfg.rates.gamma_f);
            (t_f, t_f + s.exponential(cfg.rates.gamma_s))
        }
        EmissionMode::Independent => {
            let a = s.exponential(cfg.rates.gamma);
            let b = s.exponential(cfg.rates.gamma);
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        }
    };
    EmissionRecord {
        molecule_id,
        t_f,
        t_s,
    }
}

/// Emission records for the molecules with ids in `ids`.
pub fn simulate_range(cfg: &SimConfig, ids: Range<u64>) -> Result<Vec<EmissionRecord>> {
    cfg.validate()?;
    if ids.end > cfg.n0 {
        return Err(Error::param("ids", "range exceeds the ensemble size"));
    }
    Ok(ids.map(|id| emit_one(cfg, id)).collect())
}

pub fn simulate_ensemble(cfg: &SimConfig) -> Result<Vec<EmissionRecord>> {
    simulate_range(cfg, 0..cfg.n0)
}

fn detect_one(cfg: &SimConfig, rec: &EmissionRecord) -> DetectionRecord {
    let mut s = Substream::new(cfg.seed, Domain::Detection, rec.molecule_id);
    let mut out = DetectionRecord {
        molecule_id: rec.molecule_id,
        t1: None,
        t2: None,
        repeat_hit: None,
    };
    // photons in time order, so the first to land on a detector is the earliest
    for t in [rec.t_f, rec.t_s] {
        let detector = if s.coin() { Detector::One } else { Detector::Two };
        let kept = s.open01() < cfg.detector_efficiency;
        if !kept {
            continue;
        }
        let slot = match detector {
            Detector::One => &mut out.t1,
            Detector::Two => &mut out.t2,
        };
        if slot.is_none() {
            *slot = Some(t);
        } else if cfg.detector_model == DetectorModel::MultiHit {
            out.repeat_hit = Some((detector, t));
        }
    }
    out
}

/// Sends each photon to detector 1 or 2 with probability 1/2, then keeps it
/// with probability `detector_efficiency`.
pub fn assign_detections(records: &[EmissionRecord], cfg: &SimConfig) -> Result<Vec<DetectionRecord>> {
    cfg.validate()?;
    Ok(records.iter().map(|r| detect_one(cfg, r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: EmissionMode, n0: u64) -> SimConfig {
        SimConfig {
            n0,
            mode,
            rates: RateTriple::compatible(1.0).unwrap(),
            seed: 42,
            detector_efficiency: 1.0,
            detector_model: DetectorModel::SingleHit,
        }
    }

    #[test]
    fn ordering_holds_in_both_modes() {
        for mode in [EmissionMode::Sequential, EmissionMode::Independent] {
            for r in simulate_ensemble(&cfg(mode, 10_000)).unwrap() {
                assert!(0.0 <= r.t_f && r.t_f <= r.t_s);
            }
        }
    }

    #[test]
    fn partitioned_generation_is_identical() {
        let c = cfg(EmissionMode::Sequential, 1000);
        let whole = simulate_ensemble(&c).unwrap();
        let mut parts = simulate_range(&c, 0..333).unwrap();
        parts.extend(simulate_range(&c, 333..1000).unwrap());
        assert_eq!(whole, parts);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = cfg(EmissionMode::Sequential, 0);
        assert!(simulate_ensemble(&c).is_err());
        c.n0 = 10;
        c.detector_efficiency = 0.0;
        assert!(simulate_ensemble(&c).is_err());
        c.detector_efficiency = 1.5;
        assert!(assign_detections(&[], &c).is_err());
    }

    #[test]
    fn single_hit_keeps_only_earliest() {
        let mut c = cfg(EmissionMode::Sequential, 5000);
        let recs = simulate_ensemble(&c).unwrap();
        let det = assign_detections(&recs, &c).unwrap();
        for (r, d) in recs.iter().zip(&det) {
            assert!(d.repeat_hit.is_none());
            match (d.t1, d.t2) {
                (Some(a), Some(b)) => {
                    assert!((a == r.t_f && b == r.t_s) || (a == r.t_s && b == r.t_f))
                }
                (Some(a), None) | (None, Some(a)) => assert_eq!(a, r.t_f),
                (None, None) => panic!("efficiency 1 lost both photons"),
            }
        }
        // same assignment draws under multi-hit, plus the repeat photon
        c.detector_model = DetectorModel::MultiHit;
        let multi = assign_detections(&recs, &c).unwrap();
        for (s, m) in det.iter().zip(&multi) {
            assert_eq!((s.t1, s.t2), (m.t1, m.t2));
            assert_eq!(m.repeat_hit.is_some(), s.t1.is_none() || s.t2.is_none());
        }
    }

    #[test]
    fn hits_iterates_repeat_photon() {
        let d = DetectionRecord {
            molecule_id: 0,
            t1: Some(1.0),
            t2: None,
            repeat_hit: Some((Detector::One, 2.0)),
        };
        assert_eq!(d.hits(Detector::One).collect::<Vec<_>>(), [1.0, 2.0]);
        assert_eq!(d.hits(Detector::Two).count(), 0);
        assert_eq!(d.coincidence(), None);
    }
}
