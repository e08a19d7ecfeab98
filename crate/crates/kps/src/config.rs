//! Generator configuration from CLI flags and `key=value` files.

use std::fmt;
use std::path::Path;

use kps_core::gen::{CostLaw, CostMode, GenSpec, LocalPattern};

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Bad { line: usize, message: String },
    Missing(&'static str),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(err) => write!(f, "config io error: {err}"),
            ConfigError::Bad { line, message } => write!(f, "config line {line}: {message}"),
            ConfigError::Missing(what) => write!(f, "missing required setting `{what}`"),
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_local_pattern(text: &str) -> Result<LocalPattern, String> {
    if text.trim() == "2,2,3" {
        return Ok(LocalPattern::TwoTwoThree);
    }
    match text.trim().parse::<u32>() {
        Ok(q) if q >= 1 => Ok(LocalPattern::Cap(q)),
        _ => Err(format!(
            "unsupported local pattern `{text}` (expected a capacity or `2,2,3`)"
        )),
    }
}

pub fn parse_cost_mode(text: &str) -> Result<CostMode, String> {
    match text.trim() {
        "dense" => Ok(CostMode::Dense),
        "diag" => Ok(CostMode::Diag),
        other => Err(format!("unknown cost mode `{other}`")),
    }
}

pub fn parse_cost_law(text: &str) -> Result<CostLaw, String> {
    match text.trim() {
        "uniform01" => Ok(CostLaw::Uniform01),
        "mixed" => Ok(CostLaw::Mixed),
        other => Err(format!("unknown cost law `{other}`")),
    }
}

/// Partially specified generator settings; flags overlay a config file,
/// and unset optional fields fall back to defaults in [`Self::build`].
#[derive(Debug, Default, Clone)]
pub struct GenOverlay {
    pub num_groups: Option<usize>,
    pub num_items: Option<usize>,
    pub num_resources: Option<usize>,
    pub cost_mode: Option<CostMode>,
    pub cost_law: Option<CostLaw>,
    pub pattern: Option<LocalPattern>,
    pub tightness: Option<f64>,
    pub seed: Option<u64>,
}

impl GenOverlay {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        let mut overlay = GenOverlay::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| ConfigError::Bad {
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key=value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => overlay.num_groups = Some(value.parse().map_err(|e| bad(format!("bad n: {e}")))?),
                "m" => overlay.num_items = Some(value.parse().map_err(|e| bad(format!("bad m: {e}")))?),
                "k" => {
                    overlay.num_resources =
                        Some(value.parse().map_err(|e| bad(format!("bad k: {e}")))?)
                }
                "cost_mode" => overlay.cost_mode = Some(parse_cost_mode(value).map_err(bad)?),
                "cost_law" => overlay.cost_law = Some(parse_cost_law(value).map_err(bad)?),
                "local" => overlay.pattern = Some(parse_local_pattern(value).map_err(bad)?),
                "tightness" => {
                    overlay.tightness =
                        Some(value.parse().map_err(|e| bad(format!("bad tightness: {e}")))?)
                }
                "seed" => overlay.seed = Some(value.parse().map_err(|e| bad(format!("bad seed: {e}")))?),
                other => return Err(bad(format!("unknown setting `{other}`"))),
            }
        }
        Ok(overlay)
    }

    /// Fields set on `self` win over `base`.
    pub fn over(self, base: GenOverlay) -> GenOverlay {
        GenOverlay {
            num_groups: self.num_groups.or(base.num_groups),
            num_items: self.num_items.or(base.num_items),
            num_resources: self.num_resources.or(base.num_resources),
            cost_mode: self.cost_mode.or(base.cost_mode),
            cost_law: self.cost_law.or(base.cost_law),
            pattern: self.pattern.or(base.pattern),
            tightness: self.tightness.or(base.tightness),
            seed: self.seed.or(base.seed),
        }
    }

    pub fn build(self) -> Result<GenSpec, ConfigError> {
        Ok(GenSpec {
            num_groups: self.num_groups.ok_or(ConfigError::Missing("n"))?,
            num_items: self.num_items.ok_or(ConfigError::Missing("m"))?,
            num_resources: self.num_resources.ok_or(ConfigError::Missing("k"))?,
            cost_mode: self.cost_mode.unwrap_or(CostMode::Dense),
            cost_law: self.cost_law.unwrap_or(CostLaw::Uniform01),
            pattern: self.pattern.unwrap_or(LocalPattern::Cap(1)),
            tightness: self.tightness.unwrap_or(0.5),
            seed: self.seed.unwrap_or(0),
        })
    }
}
