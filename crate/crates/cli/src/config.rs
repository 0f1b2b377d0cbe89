use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use twofold::{BaseParams, SystemParams};

const BASE_KEYS: [&str; 9] = ["d", "m", "beta", "c1", "c2", "r0", "omega0", "mu", "gamma"];

/// Device constants. Precedence: flag, then `--config` file, then the
/// reference turntable values (which do not include `k2` and `kappa`).
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// JSON file with flat parameter keys (d, m, beta, c1, c2, k2, r0, omega0, mu, gamma, kappa)
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
}

impl ParamArgs {
    fn merged(&self) -> Result<Map<String, Value>> {
        let mut map = match serde_json::to_value(BaseParams::reference())? {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: Map<String, Value> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            for (k, v) in file {
                if !BASE_KEYS.contains(&k.as_str()) && k != "k2" && k != "kappa" {
                    bail!("unknown parameter key '{k}' in {}", path.display());
                }
                map.insert(k, v);
            }
        }
        let flags = [
            ("d", self.d),
            ("m", self.m),
            ("beta", self.beta),
            ("c1", self.c1),
            ("c2", self.c2),
            ("k2", self.k2),
            ("r0", self.r0),
            ("omega0", self.omega0),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
        ];
        for (k, v) in flags {
            if let Some(x) = v {
                map.insert(k.to_string(), serde_json::json!(x));
            }
        }
        Ok(map)
    }

    pub fn base(&self) -> Result<BaseParams> {
        let mut map = self.merged()?;
        map.remove("k2");
        map.remove("kappa");
        let base: BaseParams = serde_json::from_value(Value::Object(map))?;
        base.validate()?;
        Ok(base)
    }

    /// Full parameters if `k2` and `kappa` are known.
    pub fn full(&self) -> Result<Option<SystemParams>> {
        let map = self.merged()?;
        if !map.contains_key("k2") || !map.contains_key("kappa") {
            return Ok(None);
        }
        let p: SystemParams = serde_json::from_value(Value::Object(map))?;
        p.validate()?;
        Ok(Some(p))
    }
}

/// Everything that determines a run's outputs, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub params: Option<SystemParams>,
    pub base: Option<BaseParams>,
    pub options: Value,
    pub output: String,
}

impl RunConfig {
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
