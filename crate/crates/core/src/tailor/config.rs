use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::part::PartLabel;
use crate::{Error, Result};

/// Search parameters of the two-stage cutting-plane optimisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailorConfig {
    /// Half-angle of the spherical cap of normals around the hint (degrees).
    pub cap_half_angle_deg: f64,
    pub azimuths: usize,
    pub tilts: usize,
    /// Refinement stops once the step falls below this (radians).
    pub refine_tolerance: f64,
    /// A refined normal replaces the hint only if it is shorter by more than
    /// this fraction of the hint's perimeter.
    pub tie_tolerance: f64,
    /// Cut points sampled along the axis in stage two.
    pub cut_samples: usize,
    /// Stage-two perimeters closer than this (mm) count as equal.
    pub cut_tie_tolerance: f64,
    /// Stage-two ranges as fractions of the axis extent, per part.
    pub ranges: BTreeMap<PartLabel, [f64; 2]>,
    pub default_range: [f64; 2],
}

impl Default for TailorConfig {
    fn default() -> Self {
        TailorConfig {
            cap_half_angle_deg: 45.0,
            azimuths: 16,
            tilts: 8,
            refine_tolerance: 1e-6,
            tie_tolerance: 1e-4,
            cut_samples: 32,
            cut_tie_tolerance: 1e-6,
            ranges: BTreeMap::from([
                (PartLabel::UpperTorso, [0.27, 0.42]),
                (PartLabel::LowerTorso, [0.1, 0.45]),
                (PartLabel::Pelvis, [0.3, 0.8]),
            ]),
            default_range: [0.1, 0.9],
        }
    }
}

impl TailorConfig {
    pub fn range(&self, label: PartLabel) -> [f64; 2] {
        self.ranges.get(&label).copied().unwrap_or(self.default_range)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.cap_half_angle_deg > 0.0 && self.cap_half_angle_deg < 90.0) {
            return bad(format!("cap half-angle {} outside (0, 90)", self.cap_half_angle_deg));
        }
        if self.azimuths == 0 || self.tilts == 0 || self.cut_samples == 0 {
            return bad("grid sizes must be positive".into());
        }
        if !(self.refine_tolerance > 0.0) || self.tie_tolerance < 0.0 || self.cut_tie_tolerance < 0.0 {
            return bad("tolerances must be non-negative".into());
        }
        for r in self.ranges.values().chain(std::iter::once(&self.default_range)) {
            if !(0.0 <= r[0] && r[0] <= r[1] && r[1] <= 1.0) {
                return bad(format!("range {r:?} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TailorConfig =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_partial_documents() {
        let cfg = TailorConfig::default();
        assert_eq!(TailorConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let partial = TailorConfig::from_json(r#"{"cut_samples": 8}"#).unwrap();
        assert_eq!(partial.cut_samples, 8);
        assert_eq!(partial.range(PartLabel::Pelvis), [0.3, 0.8]);
        assert_eq!(partial.range(PartLabel::LeftHand), [0.1, 0.9]);
    }

    #[test]
    fn bad_values_rejected() {
        assert!(TailorConfig::from_json(r#"{"default_range": [0.8, 0.2]}"#).is_err());
        assert!(TailorConfig::from_json(r#"{"azimuths": 0}"#).is_err());
        assert!(TailorConfig::from_json(r#"{"unknown": 1}"#).is_err());
    }
}
