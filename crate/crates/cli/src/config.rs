//! JSON problem configs.

use std::fs;
use std::path::Path;

use ctmc_freshness::ctmc::Generator;
use ctmc_freshness::freshness::{proximity_band, Model, ProximityMatrix};
use ctmc_freshness::optimizer::SourceSpec;
use ctmc_freshness::scenarios::log_grid;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub sources: Vec<SourceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<Grids>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub id: String,
    pub generator: Vec<Vec<f64>>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximity: Option<ProximityConfig>,
}

fn unit_weight() -> f64 {
    1.0
}

/// `{"band_v": v}` for `p_ij = 1{|i - j| <= v}`, or an explicit `{"matrix": [[..]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProximityConfig {
    BandV(usize),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Grid>,
}

/// Either explicit points or `count` log-spaced points in `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Log { min: f64, max: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Grid::Points(v) if !v.is_empty() => Ok(v.clone()),
            Grid::Log { min, max, count } if *min > 0.0 && max >= min && *count > 0 => {
                Ok(log_grid(*min, *max, *count))
            }
            _ => Err(CliError::Usage(format!("invalid grid {self:?}"))),
        }
    }

    /// `min:max:count` for a log grid, otherwise comma-separated values.
    pub fn parse(s: &str) -> Result<Self, String> {
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            let count = parts[2]
                .trim()
                .parse::<usize>()
                .map_err(|e| format!("{:?}: {e}", parts[2]))?;
            return Ok(Grid::Log {
                min: num(parts[0])?,
                max: num(parts[1])?,
                count,
            });
        }
        s.split(',')
            .map(num)
            .collect::<Result<Vec<_>, _>>()
            .map(Grid::Points)
    }
}

pub const DEFAULT_LAMBDA_GRID: Grid = Grid::Log {
    min: 1e-2,
    max: 1e2,
    count: 32,
};

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if cfg.sources.is_empty() {
            return Err(CliError::Parse("config lists no sources".into()));
        }
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The single source of a one-source config.
    pub fn single(&self) -> Result<&SourceConfig, CliError> {
        match self.sources.as_slice() {
            [s] => Ok(s),
            _ => Err(CliError::Usage(format!(
                "this command expects exactly one source, config has {}",
                self.sources.len()
            ))),
        }
    }

    pub fn lambda_grid(&self) -> Option<&Grid> {
        self.grids.as_ref().and_then(|g| g.lambda.as_ref())
    }

    pub fn build(&self) -> Result<Vec<SourceSpec>, CliError> {
        self.sources.iter().map(SourceConfig::build).collect()
    }
}

impl SourceConfig {
    pub fn generator(&self) -> Result<Generator, CliError> {
        Ok(Generator::new(&self.generator)?)
    }

    pub fn proximity(&self) -> Result<Option<ProximityMatrix>, CliError> {
        let k = self.generator.len();
        Ok(match &self.proximity {
            None => None,
            Some(ProximityConfig::BandV(v)) => Some(proximity_band(k, *v)),
            Some(ProximityConfig::Matrix(rows)) => Some(ProximityMatrix::new(rows)?),
        })
    }

    pub fn build(&self) -> Result<SourceSpec, CliError> {
        Ok(SourceSpec::new(
            self.id.clone(),
            self.generator()?,
            self.weight,
            self.model,
            self.proximity()?,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_STATE: &str = r#"{
        "sources": [{
            "id": "x",
            "generator": [[-1.95, 1.95, 0.0], [1.0, -2.95, 1.95], [0.0, 2.0, -2.0]],
            "model": "FWC",
            "proximity": {"band_v": 1}
        }],
        "grids": {"lambda": {"min": 0.01, "max": 100.0, "count": 32}}
    }"#;

    #[test]
    fn round_trip() {
        let cfg = Config::parse(THREE_STATE).unwrap();
        assert_eq!(cfg.sources[0].weight, 1.0);
        assert_eq!(cfg.lambda_grid().unwrap().points().unwrap().len(), 32);
        let again = Config::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);

        let with_matrix = Config {
            sources: vec![SourceConfig {
                proximity: Some(ProximityConfig::Matrix(vec![
                    vec![1.0, 0.2],
                    vec![0.3, 1.0],
                ])),
                generator: vec![vec![-1.0, 1.0], vec![2.0, -2.0]],
                ..cfg.sources[0].clone()
            }],
            budget: Some(3.5),
            grids: Some(Grids {
                lambda: Some(Grid::Points(vec![0.5, 1.0])),
            }),
        };
        assert_eq!(Config::parse(&with_matrix.to_json()).unwrap(), with_matrix);
    }

    #[test]
    fn rejects_unknown_fields_and_models() {
        assert!(matches!(
            Config::parse(r#"{"sources": [], "extra": 1}"#),
            Err(CliError::Parse(_))
        ));
        let bad_model = THREE_STATE.replace("FWC", "FWX");
        assert!(matches!(Config::parse(&bad_model), Err(CliError::Parse(_))));
        assert!(matches!(
            Config::parse(r#"{"sources": []}"#),
            Err(CliError::Parse(_))
        ));
    }

    #[test]
    fn grid_flag_syntax() {
        assert_eq!(
            Grid::parse("0.1,1,10").unwrap(),
            Grid::Points(vec![0.1, 1.0, 10.0])
        );
        assert_eq!(
            Grid::parse("0.01:100:5").unwrap(),
            Grid::Log {
                min: 0.01,
                max: 100.0,
                count: 5
            }
        );
        assert!(Grid::parse("a,b").is_err());
        assert!(Grid::Points(vec![]).points().is_err());
    }
}
