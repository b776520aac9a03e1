//! Project configuration: `fault2flow.config`, a UTF-8 `key = value` file
//! with `#` comments. Unknown keys are errors: a typo should fail loudly,
//! not silently fall back to a default. Credentials are referenced by
//! environment variable name and never stored.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: invalid value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub boundary_epsilon: f64,
    pub region_cap: usize,
    pub random_count: usize,
    /// Verification loop cap. The default of 5 is a project choice; nothing
    /// in the diagnosis method prescribes one.
    pub max_iterations: usize,
    pub n8n_endpoint: Option<String>,
    pub n8n_api_key_env: String,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            boundary_epsilon: 1e-3,
            region_cap: 4096,
            random_count: 16,
            max_iterations: 5,
            n8n_endpoint: None,
            n8n_api_key_env: "FAULT2FLOW_N8N_KEY".into(),
        }
    }
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut config = Config::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Malformed { line: line_no, text: line.to_string() });
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = |message: String| ConfigError::BadValue {
            line: line_no,
            key: key.to_string(),
            message,
        };
        match key {
            "seed" => config.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
            "boundary_epsilon" => {
                let eps: f64 = value.parse().map_err(|e| bad(format!("{e}")))?;
                if !(eps.is_finite() && eps > 0.0) {
                    return Err(bad("must be a positive finite number".into()));
                }
                config.boundary_epsilon = eps;
            }
            "region_cap" => config.region_cap = value.parse().map_err(|e| bad(format!("{e}")))?,
            "random_count" => {
                config.random_count = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "max_iterations" => {
                let n: usize = value.parse().map_err(|e| bad(format!("{e}")))?;
                if n < 1 {
                    return Err(bad("must be at least 1".into()));
                }
                config.max_iterations = n;
            }
            "n8n_endpoint" => config.n8n_endpoint = Some(value.to_string()),
            "n8n_api_key_env" => config.n8n_api_key_env = value.to_string(),
            other => {
                return Err(ConfigError::UnknownKey { line: line_no, key: other.to_string() })
            }
        }
    }
    Ok(config)
}

/// Load an explicit path, else `./fault2flow.config` when present, else
/// defaults.
pub fn load_config(explicit: Option<&Path>) -> Result<Config, String> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let default = Path::new("fault2flow.config");
            if !default.exists() {
                return Ok(Config::default());
            }
            default.to_path_buf()
        }
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| e.to_string())
}
