//! Run configuration: command-line flags merged over an optional TOML file,
//! flags winning. Unknown file keys are rejected.

use num_complex::Complex64;
use serde::Deserialize;
use std::path::PathBuf;

/// Fixed default seed so documented commands reproduce their tables.
pub const DEFAULT_SEED: u64 = 0xD022;
pub const DEFAULT_RESOLUTION: u32 = 64;
pub const DEFAULT_SAMPLES: u64 = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format '{other}' (expected json or csv)")),
        }
    }
}

/// Optional values from a `key = value` TOML config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub alpha0: Option<f64>,
    pub z: Option<String>,
    pub z3: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub c_matter: Option<f64>,
    pub delta_sigma: Option<f64>,
    pub samples: Option<u64>,
    pub resolution: Option<u32>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub points: Option<usize>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))
    }
}

/// Parses "a+bi" / "a-bi" / "a" into a complex number.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim().replace(' ', "");
    if let Ok(re) = t.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    let body = t
        .strip_suffix('i')
        .ok_or_else(|| format!("cannot parse complex number '{s}'"))?;
    // Split at the sign of the imaginary part (not a leading sign, not an
    // exponent sign).
    let bytes = body.as_bytes();
    for k in (1..bytes.len()).rev() {
        let c = bytes[k] as char;
        if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
            let re: f64 = body[..k]
                .parse()
                .map_err(|_| format!("cannot parse complex number '{s}'"))?;
            let imtxt = &body[k..];
            let im: f64 = if imtxt == "+" {
                1.0
            } else if imtxt == "-" {
                -1.0
            } else {
                imtxt
                    .parse()
                    .map_err(|_| format!("cannot parse complex number '{s}'"))?
            };
            return Ok(Complex64::new(re, im));
        }
    }
    // Pure imaginary.
    let im: f64 = if body.is_empty() || body == "+" {
        1.0
    } else if body == "-" {
        -1.0
    } else {
        body.parse()
            .map_err(|_| format!("cannot parse complex number '{s}'"))?
    };
    Ok(Complex64::new(0.0, im))
}

pub fn parse_alphas(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad weight '{p}' in --alphas"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0.3+0.1i").unwrap(), Complex64::new(0.3, 0.1));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("-1.5-2i").unwrap(), Complex64::new(-1.5, -2.0));
        assert_eq!(parse_complex("0.5i").unwrap(), Complex64::new(0.0, 0.5));
        assert!(parse_complex("xyz").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: Result<FileConfig, _> = toml::from_str("gamma = 1.0\nbogus = 3\n");
        assert!(r.is_err());
        let ok: FileConfig = toml::from_str("gamma = 1.0\nsamples = 1000\n").unwrap();
        assert_eq!(ok.samples, Some(1000));
    }
}
