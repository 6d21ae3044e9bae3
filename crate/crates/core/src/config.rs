//! Single run configuration document covering every module.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::community::CommunityConfig;
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::pipeline::AudioConfig;
use crate::proximity::ProximityConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Pair detected groups with truth groups by optimal one-to-one assignment instead of best match.
    pub optimal_assignment: bool,
    pub snr_grid_db: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { optimal_assignment: false, snr_grid_db: vec![20.0, 15.0, 10.0, 5.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeetSenseConfig {
    pub audio: AudioConfig,
    pub proximity: ProximityConfig,
    pub features: FeatureConfig,
    pub community: CommunityConfig,
    pub detector: DetectorConfig,
    pub baselines: BaselineConfig,
    pub eval: EvalConfig,
}

impl MeetSenseConfig {
    pub fn validate(&self) -> Result<()> {
        self.audio.similarity.validate()?;
        if !(self.audio.bandpass_low_hz > 0.0 && self.audio.bandpass_low_hz < self.audio.bandpass_high_hz) {
            return Err(Error::param("bandpass edges must satisfy 0 < low < high"));
        }
        if self.audio.filter_order == 0 || self.audio.max_shift_s < 0.0 {
            return Err(Error::param("filter order must be positive and max shift non-negative"));
        }
        self.proximity.validate()?;
        if !(self.features.significance_alpha > 0.0 && self.features.significance_alpha < 1.0) {
            return Err(Error::param("significance level must lie in (0, 1)"));
        }
        if self.community.walk_length == 0 {
            return Err(Error::param("walk length must be positive"));
        }
        self.detector.validate()?;
        self.baselines.next2me.validate()?;
        self.baselines.audiomatch.validate()?;
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::param(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str::<Self>(&s)
            .map_err(|e| Error::format(path, e))
            .and_then(|c| c.validate().map(|_| c))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = MeetSenseConfig::default();
        c.validate().unwrap();
        let s = c.to_toml();
        assert!(s.contains("delta_p1"));
        assert!(s.contains("top_n"));
        assert_eq!(MeetSenseConfig::from_toml_str(&s).unwrap(), c);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c = MeetSenseConfig::from_toml_str("[detector]\ndelta_alpha = 0.2\n").unwrap();
        assert_eq!(c.detector.delta_alpha, 0.2);
        assert_eq!(c.detector.delta_p1, 0.3);
    }

    #[test]
    fn rejects_bad_values_and_keys() {
        assert!(MeetSenseConfig::from_toml_str("[detector]\ndelta_p2 = 0.9\n").is_err());
        assert!(MeetSenseConfig::from_toml_str("[detector]\nbogus = 1\n").is_err());
    }
}
