//! Run configuration: defaults, then `proxinorm.toml`, then `PROXINORM_*`
//! environment variables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::construction::{ConstructionParams, ConstructionTable, DEFAULT_DEPTH_BUDGET, DEFAULT_PRECISION_CAP};
use crate::demo::{DemoParams, DEFAULT_ROUNDING_DENOMINATOR_BITS};
use crate::descent::SearchParams;
use crate::error::{Error, Result};
use crate::linalg::DEFAULT_ELIMINATION_BUDGET;
use crate::norm::DEFAULT_PRECISION_BITS;

pub const CONFIG_FILE: &str = "proxinorm.toml";
const ENV_PREFIX: &str = "PROXINORM_";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub depth_budget: usize,
    pub precision_bits: u64,
    pub elimination_budget: usize,
    #[serde(rename = "demo_N", alias = "demo_n")]
    pub demo_n: usize,
    pub rounding_denominator_bits: u32,
    pub precision_cap: u64,
    /// Table depth of the prefix searched for descent directions.
    pub search_depth: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            depth_budget: DEFAULT_DEPTH_BUDGET,
            precision_bits: DEFAULT_PRECISION_BITS,
            elimination_budget: DEFAULT_ELIMINATION_BUDGET,
            demo_n: 2,
            rounding_denominator_bits: DEFAULT_ROUNDING_DENOMINATOR_BITS,
            precision_cap: DEFAULT_PRECISION_CAP,
            search_depth: SearchParams::default().depth,
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Config = toml::from_str(s).map_err(|e| Error::parse("config", e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads `path`, or `proxinorm.toml` in the working directory when it
    /// exists, then applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => Some(p.to_path_buf()),
            None => Some(Path::new(CONFIG_FILE).to_path_buf()).filter(|p| p.exists()),
        };
        let mut c = match file {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::parse("config", format!("{}: {e}", p.display())))?;
                Config::from_toml_str(&text)?
            }
            None => Config::default(),
        };
        c.apply_env(std::env::vars())?;
        Ok(c)
    }

    /// Applies `PROXINORM_<KEY>` overrides, e.g. `PROXINORM_DEPTH_BUDGET`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        for (k, v) in vars {
            let Some(key) = k.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let field = k.as_str();
            let num = |v: &str| -> Result<u64> {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::parse(field, format!("`{v}` is not a nonnegative integer")))
            };
            match key.to_ascii_lowercase().as_str() {
                "depth_budget" => self.depth_budget = num(&v)? as usize,
                "precision_bits" => self.precision_bits = num(&v)?,
                "elimination_budget" => self.elimination_budget = num(&v)? as usize,
                "demo_n" => self.demo_n = num(&v)? as usize,
                "rounding_denominator_bits" => self.rounding_denominator_bits = num(&v)? as u32,
                "precision_cap" => self.precision_cap = num(&v)?,
                "search_depth" => self.search_depth = num(&v)? as usize,
                _ => {}
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("depth_budget", self.depth_budget as u64),
            ("precision_bits", self.precision_bits),
            ("elimination_budget", self.elimination_budget as u64),
            ("demo_N", self.demo_n as u64),
            ("rounding_denominator_bits", self.rounding_denominator_bits as u64),
            ("precision_cap", self.precision_cap),
            ("search_depth", self.search_depth as u64),
        ];
        for (name, value) in fields {
            if value == 0 {
                return Err(Error::parse(name, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn table(&self) -> ConstructionTable {
        ConstructionTable::new(ConstructionParams {
            depth_budget: self.depth_budget,
            precision_cap: self.precision_cap,
        })
    }

    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            depth: self.search_depth,
            precision_bits: self.precision_bits,
            rounding_denominator_bits: self.rounding_denominator_bits,
            ..SearchParams::default()
        }
    }

    pub fn demo_params(&self, n: Option<usize>) -> DemoParams {
        DemoParams {
            n: n.unwrap_or(self.demo_n),
            precision_bits: self.precision_bits,
            elimination_budget: self.elimination_budget,
            rounding_denominator_bits: self.rounding_denominator_bits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = Config::default();
        assert_eq!((c.depth_budget, c.precision_bits, c.demo_n, c.rounding_denominator_bits), (5000, 64, 2, 16));
        assert_eq!(Config::from_toml_str("").unwrap(), c);
    }

    #[test]
    fn toml_keys() {
        let c = Config::from_toml_str("depth_budget = 100\ndemo_N = 4\n").unwrap();
        assert_eq!((c.depth_budget, c.demo_n), (100, 4));
        assert!(Config::from_toml_str("depth_budget = 0").is_err());
        assert!(matches!(Config::from_toml_str("bogus = 1"), Err(Error::Parse { .. })));
    }

    #[test]
    fn env_overrides() {
        let mut c = Config::default();
        c.apply_env([
            ("PROXINORM_DEPTH_BUDGET".to_string(), "77".to_string()),
            ("PROXINORM_DEMO_N".to_string(), "3".to_string()),
            ("HOME".to_string(), "/x".to_string()),
        ])
        .unwrap();
        assert_eq!((c.depth_budget, c.demo_n), (77, 3));
        let err = c
            .apply_env([("PROXINORM_PRECISION_BITS".to_string(), "lots".to_string())])
            .unwrap_err();
        assert!(err.to_string().contains("PROXINORM_PRECISION_BITS"));
    }
}
