//! Pipeline settings loaded from a TOML file. Every key is optional:
//!
//! ```toml
//! gravity_mps2 = 9.80665
//! cadence_ms = 500
//! mean_subtraction = false
//!
//! [segment]
//! off_route_m = 30.0
//! speed_gate = { min_kph = 20.0, max_kph = 50.0 }
//!
//! [iri_model]
//! slope = 4.19
//! intercept = 1.73
//!
//! [weights]
//! alligator_crack = 3.5
//!
//! [qa]
//! boxplot_k = 1.5
//! alpha = 0.05
//! ```
//!
//! Keys under `[weights]` replace the matching default weights.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distress::WeightTable;
use crate::error::{Error, Result};
use crate::model::{DistressType, STANDARD_GRAVITY};
use crate::qa::QaConfig;
use crate::roughness::IriModel;
use crate::segment::SegmentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub gravity_mps2: f64,
    pub cadence_ms: u64,
    /// Use each run's mean vertical acceleration as the RMS reference
    /// instead of gravity.
    pub mean_subtraction: bool,
    pub segment: SegmentConfig,
    pub iri_model: IriModel,
    pub weights: BTreeMap<DistressType, f64>,
    pub qa: QaConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            gravity_mps2: STANDARD_GRAVITY,
            cadence_ms: 500,
            mean_subtraction: false,
            segment: SegmentConfig::default(),
            iri_model: IriModel::default(),
            weights: BTreeMap::new(),
            qa: QaConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::invalid(format!("config: {}", e.message())))?;
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn weight_table(&self) -> Result<WeightTable> {
        WeightTable::with_overrides(&self.weights)
    }

    fn check(&self) -> Result<()> {
        if !(self.gravity_mps2.is_finite() && self.gravity_mps2 > 0.0) {
            return Err(Error::invalid("config: gravity_mps2 must be positive"));
        }
        if self.cadence_ms == 0 {
            return Err(Error::invalid("config: cadence_ms must be positive"));
        }
        let g = self.segment.speed_gate;
        if !(g.min_kph >= 0.0 && g.min_kph <= g.max_kph) {
            return Err(Error::invalid("config: speed gate needs 0 <= min_kph <= max_kph"));
        }
        if self.segment.off_route_m.is_nan() || self.segment.off_route_m <= 0.0 {
            return Err(Error::invalid("config: off_route_m must be positive"));
        }
        if self.qa.boxplot_k.is_nan() || self.qa.boxplot_k <= 0.0 {
            return Err(Error::invalid("config: boxplot_k must be positive"));
        }
        if !(self.qa.alpha > 0.0 && self.qa.alpha < 1.0) {
            return Err(Error::invalid("config: alpha must be in (0, 1)"));
        }
        self.weight_table()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn overrides() {
        let c = Config::from_toml(
            "gravity_mps2 = 9.81\n[segment]\noff_route_m = 15.0\nspeed_gate = { min_kph = 10.0, max_kph = 60.0 }\n\
             [iri_model]\nslope = 4.0\nintercept = 2.0\n[weights]\npothole = 4.0\n[qa]\nalpha = 0.01\nboxplot_k = 3.0\n",
        )
        .unwrap();
        assert_eq!(c.gravity_mps2, 9.81);
        assert_eq!(c.segment.speed_gate.max_kph, 60.0);
        assert_eq!(c.iri_model.slope(), 4.0);
        let w = c.weight_table().unwrap();
        assert_eq!(w.get(DistressType::Pothole), Some(4.0));
        assert_eq!(w.get(DistressType::AlligatorCrack), Some(3.0));
        assert_eq!(c.qa.alpha, 0.01);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_toml("[iri_model]\nslope = -1.0\nintercept = 1.0\n").is_err());
        assert!(Config::from_toml("[qa]\nalpha = 2.0\n").is_err());
        assert!(Config::from_toml("[weights]\npothole = 0.0\n").is_err());
        assert!(Config::from_toml("[weights]\nrutting = 1.0\n").is_err());
        assert!(Config::from_toml("gravity = 9.8\n").is_err());
    }
}
