use std::path::{Path, PathBuf};

use bell_core::{CoefficientScheme, OptimizerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignKind {
    CoplanarMc,
    WwMc,
    ExpectationMc,
    LhvSweep,
    MkBaseline,
}

impl CampaignKind {
    pub fn default_trials(self) -> usize {
        match self {
            CampaignKind::CoplanarMc | CampaignKind::WwMc | CampaignKind::LhvSweep => 1000,
            CampaignKind::ExpectationMc => 100,
            CampaignKind::MkBaseline => 1,
        }
    }
}

/// Which state `|Φ⟩` an expectation trial maximizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSelector {
    /// `(|0…0⟩ + |1…1⟩)/√2`.
    #[default]
    Ghz,
    /// GHZ followed by an independent Haar-random unitary on every site.
    Random,
    /// The top coplanar eigenvector of the trial's operator at random directions.
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub kind: CampaignKind,
    pub n: usize,
    pub r: usize,
    /// `None` picks the kind's default count.
    pub trials: Option<usize>,
    pub master_seed: u64,
    pub scheme: CoefficientScheme,
    /// Signs used for every trial instead of sampled ones (length `r^n`).
    pub forced_signs: Option<Vec<i8>>,
    /// Sign function used for every `ww_mc` trial (length `2^n`).
    pub forced_f: Option<Vec<i8>>,
    pub optimizer: OptimizerConfig,
    pub state: StateSelector,
    /// Also compute the classical value of every trial.
    pub with_lhv: bool,
    pub lhv_restarts: usize,
    /// `ww_mc` only: sweep all `2^(2^n)` sign functions instead of sampling.
    pub exhaustive: bool,
    /// Fill `elapsed_ms`; off by default so outputs are reproducible.
    pub record_timing: bool,
    /// Worker threads; 0 uses every core.
    #[serde(skip_serializing)]
    pub threads: usize,
    #[serde(skip_serializing)]
    pub output_path: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub format: OutputFormat,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            kind: CampaignKind::CoplanarMc,
            n: 10,
            r: 2,
            trials: None,
            master_seed: 0,
            scheme: CoefficientScheme::Uniform,
            forced_signs: None,
            forced_f: None,
            optimizer: OptimizerConfig::default(),
            state: StateSelector::Ghz,
            with_lhv: false,
            lhv_restarts: bell_core::lhv::DEFAULT_RESTARTS,
            exhaustive: false,
            record_timing: false,
            threads: 0,
            output_path: None,
            format: OutputFormat::Csv,
        }
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl CampaignConfig {
    pub fn new(kind: CampaignKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn trial_count(&self) -> usize {
        self.trials.unwrap_or(self.kind.default_trials())
    }

    /// Checks every kind-specific constraint and returns a copy with the
    /// trial count made explicit.
    pub fn validated(&self) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.trials = Some(self.trial_count());
        let (n, r) = (cfg.n, cfg.r);
        if cfg.trial_count() == 0 {
            return Err(config_err("trials must be >= 1"));
        }
        if n < 2 {
            return Err(config_err(format!(
                "n must be >= 2 for the bounds to be defined, got {n}"
            )));
        }
        if r == 0 {
            return Err(config_err("r must be >= 1"));
        }
        let needs_starts = !matches!(
            cfg.kind,
            CampaignKind::WwMc | CampaignKind::LhvSweep | CampaignKind::MkBaseline
        );
        if needs_starts && cfg.optimizer.starts == 0 {
            return Err(config_err("optimizer.starts must be >= 1"));
        }
        if cfg.lhv_restarts == 0 {
            return Err(config_err("lhv_restarts must be >= 1"));
        }
        match cfg.kind {
            CampaignKind::WwMc => {
                if r != 2 {
                    return Err(config_err(format!("ww_mc needs r = 2, got {r}")));
                }
                if n > 20 {
                    return Err(HarnessError::Core(bell_core::BellError::SizeLimit(format!(
                        "ww_mc needs n <= 20, got {n}"
                    ))));
                }
                if cfg.exhaustive && n > bell_core::werner_wolf::MAX_ENUMERATE_SITES {
                    return Err(HarnessError::Core(bell_core::BellError::SizeLimit(format!(
                        "exhaustive sweep needs n <= {}, got {n}",
                        bell_core::werner_wolf::MAX_ENUMERATE_SITES
                    ))));
                }
                if let Some(f) = &cfg.forced_f {
                    check_signs("forced_f", f, 1usize.checked_shl(n as u32).unwrap_or(0))?;
                }
            }
            CampaignKind::MkBaseline => {
                if r != 2 {
                    return Err(config_err(format!("mk_baseline needs r = 2, got {r}")));
                }
                if n > 20 {
                    return Err(HarnessError::Core(bell_core::BellError::SizeLimit(format!(
                        "mk_baseline needs n <= 20, got {n}"
                    ))));
                }
            }
            CampaignKind::ExpectationMc => {
                let (max_n, max_r) = (
                    bell_core::statevector::MAX_OPT_SITES,
                    bell_core::statevector::MAX_OPT_SETTINGS,
                );
                if n > max_n || r > max_r {
                    return Err(HarnessError::Core(bell_core::BellError::SizeLimit(format!(
                        "expectation_mc needs n <= {max_n} and r <= {max_r}, got n = {n}, r = {r}"
                    ))));
                }
            }
            CampaignKind::CoplanarMc | CampaignKind::LhvSweep => {}
        }
        if !matches!(cfg.kind, CampaignKind::WwMc | CampaignKind::MkBaseline) {
            let len = bell_core::model::tensor_len(n, r)?;
            if let Some(signs) = &cfg.forced_signs {
                check_signs("forced_signs", signs, len)?;
            }
            if let CoefficientScheme::Explicit(values) = &cfg.scheme {
                if values.len() != len {
                    return Err(config_err(format!(
                        "explicit scheme has {} values, expected {len}",
                        values.len()
                    )));
                }
            }
        }
        Ok(cfg)
    }
}

fn check_signs(name: &str, signs: &[i8], len: usize) -> Result<()> {
    if signs.len() != len {
        return Err(config_err(format!(
            "{name} has {} entries, expected {len}",
            signs.len()
        )));
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(config_err(format!("{name} entries must be +1 or -1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_is_config_error() {
        let cfg = CampaignConfig {
            trials: Some(0),
            ..CampaignConfig::default()
        };
        assert!(matches!(cfg.validated(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn single_site_is_config_error() {
        let cfg = CampaignConfig {
            n: 1,
            ..CampaignConfig::new(CampaignKind::ExpectationMc)
        };
        assert!(matches!(cfg.validated(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn ww_needs_two_settings() {
        let cfg = CampaignConfig {
            r: 3,
            n: 4,
            ..CampaignConfig::new(CampaignKind::WwMc)
        };
        assert!(matches!(cfg.validated(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn default_trial_counts() {
        assert_eq!(
            CampaignConfig::new(CampaignKind::CoplanarMc)
                .validated()
                .unwrap()
                .trials,
            Some(1000)
        );
        let cfg = CampaignConfig {
            n: 6,
            ..CampaignConfig::new(CampaignKind::ExpectationMc)
        };
        assert_eq!(cfg.validated().unwrap().trials, Some(100));
    }

    #[test]
    fn oversized_expectation_is_size_limit() {
        let cfg = CampaignConfig {
            n: 11,
            ..CampaignConfig::new(CampaignKind::ExpectationMc)
        };
        assert!(matches!(
            cfg.validated(),
            Err(HarnessError::Core(bell_core::BellError::SizeLimit(_)))
        ));
    }

    #[test]
    fn forced_signs_are_checked() {
        let cfg = CampaignConfig {
            n: 2,
            forced_signs: Some(vec![1, 1, 0, 1]),
            ..CampaignConfig::default()
        };
        assert!(matches!(cfg.validated(), Err(HarnessError::Config(_))));
        let cfg = CampaignConfig {
            n: 2,
            forced_signs: Some(vec![1, 1, 1]),
            ..CampaignConfig::default()
        };
        assert!(matches!(cfg.validated(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn json_round_trip_drops_runtime_fields() {
        let cfg = CampaignConfig {
            threads: 7,
            output_path: Some("x.csv".into()),
            ..CampaignConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(!text.contains("threads"));
        assert!(!text.contains("output_path"));
        let back: CampaignConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(
            back,
            CampaignConfig {
                threads: 0,
                output_path: None,
                ..cfg
            }
        );
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: CampaignConfig = serde_json::from_str(r#"{"kind": "ww_mc", "n": 5, "scheme": "uniform"}"#).unwrap();
        assert_eq!(cfg.kind, CampaignKind::WwMc);
        assert_eq!(cfg.r, 2);
        assert_eq!(cfg.optimizer, OptimizerConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<CampaignConfig>(r#"{"trails": 3}"#).is_err());
    }
}
