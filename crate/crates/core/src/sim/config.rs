//! Experiment configuration files.
//!
//! TOML or JSON, chosen by file extension (`.json` is JSON, anything else is
//! TOML). Recognized keys: `L`, `m`, `rho_db` (a number or
//! `{start, stop, step}`), `gamma`, `rate_bits`, `schemes`, `trials`,
//! `codebook_redraws`, `seed`. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotic::{build_eta_distribution, EtaDistribution, UserClass};
use crate::channel::{SystemConfig, UserProfile};
use crate::error::{Error, Result};

/// Selection rule evaluated by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `s*` and the on-users from the main-order rates.
    MainOrder,
    /// A presumed number of on-users, chosen by main-order rate.
    FixedS(usize),
    /// Exhaustive direction-aware selection every block, at `s*`.
    Oracle,
    /// The random orthonormal beams statistic `max |h†b|/L`.
    RandomBeamsStat,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::MainOrder => f.write_str("main_order"),
            Scheme::FixedS(k) => write!(f, "fixed_s({k})"),
            Scheme::Oracle => f.write_str("oracle"),
            Scheme::RandomBeamsStat => f.write_str("random_beams_stat"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "main_order" => return Ok(Scheme::MainOrder),
            "oracle" => return Ok(Scheme::Oracle),
            "random_beams_stat" => return Ok(Scheme::RandomBeamsStat),
            _ => {}
        }
        s.strip_prefix("fixed_s(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|k| k.trim().parse().ok())
            .map(Scheme::FixedS)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// SNR grid in dB: one value or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrGrid {
    Single(f64),
    Range { start: f64, stop: f64, step: f64 },
}

impl SnrGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            SnrGrid::Single(v) if v.is_finite() => Ok(vec![v]),
            SnrGrid::Single(v) => Err(Error::Config(format!("invalid SNR {v}"))),
            SnrGrid::Range { start, stop, step } => {
                if !(step > 0.0 && start.is_finite() && stop >= start) {
                    return Err(Error::Config(format!(
                        "invalid SNR range {start}..{stop} step {step}"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                Ok((0..=n).map(|k| start + k as f64 * step).collect())
            }
        }
    }
}

fn default_redraws() -> usize {
    10
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::MainOrder]
}

fn default_trials() -> usize {
    10_000
}

/// Raw contents of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "L")]
    pub antennas: usize,
    pub m: usize,
    pub rho_db: SnrGrid,
    pub gamma: Vec<f64>,
    pub rate_bits: Vec<u32>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_redraws")]
    pub codebook_redraws: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ConfigFile {
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The system at the first SNR of the grid.
    pub fn system(&self) -> Result<SystemConfig> {
        if self.gamma.len() != self.m || self.rate_bits.len() != self.m {
            return Err(Error::Config(format!(
                "gamma and rate_bits must list {} values (got {} and {})",
                self.m,
                self.gamma.len(),
                self.rate_bits.len()
            )));
        }
        let users = self
            .gamma
            .iter()
            .zip(&self.rate_bits)
            .map(|(&g, &r)| UserProfile::new(g, r))
            .collect::<Result<Vec<_>>>()?;
        let first = self.rho_db.values()?[0];
        SystemConfig::with_snr_db(self.antennas, first, users)
    }

    pub fn into_spec(self) -> Result<ExperimentSpec> {
        let spec = ExperimentSpec {
            system: self.system()?,
            snr_grid_db: self.rho_db.values()?,
            schemes: self.schemes,
            trials: self.trials,
            codebook_redraws: self.codebook_redraws,
            master_seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A Monte Carlo sweep over SNR and schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// System template; its SNR is replaced by each grid point.
    pub system: SystemConfig,
    pub snr_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// Fading blocks per codebook draw.
    pub trials: usize,
    pub codebook_redraws: usize,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("SNR grid must be nonempty and finite".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        if self.trials == 0 || self.codebook_redraws == 0 {
            return Err(Error::Config("trials and codebook_redraws must be positive".into()));
        }
        if self.trials > u32::MAX as usize || self.codebook_redraws > u32::MAX as usize {
            return Err(Error::Config("trial counts must fit in 32 bits".into()));
        }
        let l = self.system.antennas();
        for s in &self.schemes {
            match *s {
                Scheme::FixedS(k) if k == 0 || k > l.min(self.system.user_count()) => {
                    return Err(Error::Config(format!("{s} needs 1 <= k <= L = {l}")));
                }
                Scheme::Oracle if self.system.user_count() > crate::selection::ORACLE_MAX_USERS => {
                    return Err(Error::EnumerationCap {
                        users: self.system.user_count(),
                        cap: crate::selection::ORACLE_MAX_USERS,
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// One entry of a classes file; omitting `rbar` means perfect feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub fraction: f64,
    pub gamma: f64,
    #[serde(default)]
    pub rbar: Option<f64>,
}

/// User classes of a large system plus its SNR, given as exactly one of
/// `rho` (linear) or `rho_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesFile {
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub rho_db: Option<f64>,
    pub classes: Vec<ClassEntry>,
}

impl ClassesFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn rho(&self) -> Result<f64> {
        match (self.rho, self.rho_db) {
            (Some(r), None) => Ok(r),
            (None, Some(db)) => Ok(crate::channel::db_to_linear(db)),
            _ => Err(Error::Config("give exactly one of `rho` and `rho_db`".into())),
        }
    }

    pub fn classes(&self) -> Vec<UserClass> {
        self.classes
            .iter()
            .map(|c| UserClass { fraction: c.fraction, gamma: c.gamma, rbar: c.rbar.unwrap_or(f64::INFINITY) })
            .collect()
    }

    pub fn distribution(&self) -> Result<EtaDistribution> {
        build_eta_distribution(&self.classes(), self.rho()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
L = 4
m = 4
rho_db = { start = 0, stop = 20, step = 5 }
gamma = [1, 1, 1, 1]
rate_bits = [6, 6, 6, 6]
schemes = ["main_order", "fixed_s(4)", "oracle"]
trials = 100
codebook_redraws = 2
seed = 9
"#;

    #[test]
    fn scheme_tags_round_trip() {
        for s in [Scheme::MainOrder, Scheme::FixedS(3), Scheme::Oracle, Scheme::RandomBeamsStat] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("fixed_s(x)".parse::<Scheme>().is_err());
        assert!("greedy".parse::<Scheme>().is_err());
    }

    #[test]
    fn parses_toml() {
        let cfg = ConfigFile::parse_toml(SAMPLE).unwrap();
        assert_eq!(cfg.rho_db.values().unwrap(), vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        let spec = cfg.into_spec().unwrap();
        assert_eq!(spec.schemes[1], Scheme::FixedS(4));
        assert_eq!(spec.master_seed, 9);
        assert_eq!(spec.system.antennas(), 4);
    }

    #[test]
    fn parses_json_with_scalar_snr() {
        let text = r#"{"L": 2, "m": 3, "rho_db": 10, "gamma": [1, 0.5, 2],
                       "rate_bits": [4, 4, 4], "schemes": ["main_order"], "trials": 5}"#;
        let spec = ConfigFile::parse_json(text).unwrap().into_spec().unwrap();
        assert_eq!(spec.snr_grid_db, vec![10.0]);
        assert_eq!(spec.codebook_redraws, 10);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let extra = format!("{SAMPLE}\nnoise = 1\n");
        assert!(ConfigFile::parse_toml(&extra).is_err());

        let short = SAMPLE.replace("gamma = [1, 1, 1, 1]", "gamma = [1, 1]");
        assert!(ConfigFile::parse_toml(&short).unwrap().into_spec().is_err());

        let wide = SAMPLE.replace("fixed_s(4)", "fixed_s(5)");
        assert!(ConfigFile::parse_toml(&wide).unwrap().into_spec().is_err());

        let zero = SAMPLE.replace("trials = 100", "trials = 0");
        assert!(ConfigFile::parse_toml(&zero).unwrap().into_spec().is_err());
    }

    #[test]
    fn classes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("classes.toml");
        std::fs::write(&path, "rho = 10\n[[classes]]\nfraction = 0.5\ngamma = 1\n[[classes]]\nfraction = 0.5\ngamma = 1\nrbar = 1\n").unwrap();
        let file = ClassesFile::load(&path).unwrap();
        let d = file.distribution().unwrap();
        assert_eq!(d.atoms().len(), 2);
        assert!((d.atoms()[0].eta - 10.0).abs() < 1e-12);
        assert!((d.atoms()[1].eta - 5.0 / 6.0).abs() < 1e-12);

        std::fs::write(&path, "rho = 1\nrho_db = 0\nclasses = []\n").unwrap();
        assert!(ClassesFile::load(&path).unwrap().rho().is_err());
    }
}
