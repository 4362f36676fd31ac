//! Analysis configuration, read from TOML.
//!
//! Units live in the key names (`capacity_mbps`, `slot_ms`, ...); everything
//! is converted to bits and seconds before it reaches the library.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};
use snetcalc::sim::Source;
use snetcalc::{
    DeltaPolicy, MmooParams, NetworkSpec, Objective, OptimizerSettings, SigmaRhoRow, SigmaRhoTable,
    ThetaGrid, TrafficModel,
};
use toml::Spanned;

/// A value that must be finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Positive(pub f64);

impl<'de> Deserialize<'de> for Positive {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v.is_finite() && v > 0.0 {
            Ok(Positive(v))
        } else {
            Err(de::Error::custom(format!("must be positive, got {v}")))
        }
    }
}

/// A probability strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Probability(pub f64);

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v > 0.0 && v < 1.0 {
            Ok(Probability(v))
        } else {
            Err(de::Error::custom(format!(
                "must lie strictly between 0 and 1, got {v}"
            )))
        }
    }
}

/// A count of at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Count(pub u32);

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        match u32::try_from(v) {
            Ok(n) if n >= 1 => Ok(Count(n)),
            _ => Err(de::Error::custom(format!(
                "must be a whole number of at least 1, got {v}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub network: NetworkConfig,
    pub through: TrafficConfig,
    #[serde(default)]
    pub cross: Option<TrafficConfig>,
    pub epsilon: Probability,
    #[serde(default)]
    pub theta_grid: Option<Spanned<ThetaGridConfig>>,
    #[serde(default)]
    pub delta_policy: PolicyConfig,
    #[serde(default = "default_slot_ms")]
    pub slot_ms: Positive,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    /// Use the bound for independent arrivals and hops.
    #[serde(default)]
    pub independent: bool,
    #[serde(default)]
    pub simulation: SimulationConfig,
}

fn default_slot_ms() -> Positive {
    Positive(0.1)
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub hops: Count,
    pub capacity_mbps: Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mmoo,
    /// Per-flow `(σ, ρ)`: either one constant pair or a table over θ.
    SigmaRho,
    /// Deterministic fluid at a fixed rate per flow.
    Constant,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mmoo => "mmoo",
            ModelKind::SigmaRho => "sigma_rho",
            ModelKind::Constant => "constant",
        }
    }
}

/// One traffic class. Which of the optional fields are required depends
/// on `model`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    pub model: ModelKind,
    pub count: Count,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_mbps: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_on_ms: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_off_ms: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_bits: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_mbps: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<SigmaRhoEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_mbps: Option<Positive>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaRhoEntry {
    pub theta: Positive,
    pub sigma_bits: f64,
    pub rho_mbps: Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGridConfig {
    pub min: Positive,
    pub max: Positive,
    pub points: Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyConfig {
    #[default]
    Midpoint,
    Refine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveConfig {
    #[default]
    Delay,
    Backlog,
    Output,
}

impl ObjectiveConfig {
    pub fn objective(self) -> Objective {
        match self {
            ObjectiveConfig::Delay => Objective::Delay,
            ObjectiveConfig::Backlog => Objective::Backlog,
            ObjectiveConfig::Output => Objective::Output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub slots: Count,
    pub replications: Count,
    pub seed: u64,
    pub warmup: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            slots: Count(1_000_000),
            replications: Count(10),
            seed: 1,
            warmup: 0.1,
        }
    }
}

/// A configuration problem, with the line it was found on when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

/// Dotted key assigned on line `line` (1-based), qualified by the
/// enclosing table header.
fn key_on_line(text: &str, line: usize) -> Option<String> {
    let lines: Vec<&str> = text.lines().collect();
    let (key, _) = lines.get(line - 1)?.split_once('=')?;
    let key = key.trim();
    let table = lines[..line - 1]
        .iter()
        .rev()
        .map(|l| l.trim())
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim());
    Some(match table {
        Some(t) => format!("{t}.{key}"),
        None => key.to_string(),
    })
}

fn table_line(text: &str, name: &str) -> Option<usize> {
    let header = format!("[{name}]");
    text.lines().position(|l| l.trim() == header).map(|i| i + 1)
}

impl AnalysisConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: AnalysisConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            let message = e.message().trim().to_string();
            let message = match line.and_then(|l| key_on_line(text, l)) {
                Some(key) if !message.contains(&key) => format!("{key}: {message}"),
                _ => message,
            };
            ConfigError { line, message }
        })?;
        cfg.check(text)?;
        Ok(cfg)
    }

    fn check(&self, text: &str) -> Result<(), ConfigError> {
        if let Some(grid) = &self.theta_grid {
            let g = grid.get_ref();
            let fail = |message: &str| ConfigError {
                line: Some(line_of(text, grid.span().start)),
                message: message.to_string(),
            };
            if g.max.0 <= g.min.0 {
                return Err(fail("theta_grid.max must exceed theta_grid.min"));
            }
            if g.points.0 < 3 {
                return Err(fail("theta_grid.points must be at least 3"));
            }
        }
        for (name, t) in [
            ("through", Some(&self.through)),
            ("cross", self.cross.as_ref()),
        ] {
            if let Some(t) = t {
                t.model(1).map_err(|e| ConfigError {
                    line: table_line(text, name),
                    message: format!("{name}: {e}"),
                })?;
            }
        }
        let w = self.simulation.warmup;
        if !(0.0..1.0).contains(&w) {
            return Err(ConfigError {
                line: table_line(text, "simulation"),
                message: format!("simulation.warmup must lie in [0, 1), got {w}"),
            });
        }
        Ok(())
    }

    pub fn capacity(&self) -> f64 {
        self.network.capacity_mbps.0 * 1e6
    }

    pub fn slot(&self) -> f64 {
        self.slot_ms.0 * 1e-3
    }

    pub fn theta_grid(&self) -> ThetaGrid {
        match &self.theta_grid {
            Some(g) => {
                let g = g.get_ref();
                ThetaGrid {
                    min: g.min.0,
                    max: g.max.0,
                    points: g.points.0 as usize,
                }
            }
            None => ThetaGrid::default(),
        }
    }

    pub fn settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            theta_grid: self.theta_grid(),
            delta_policy: match self.delta_policy {
                PolicyConfig::Midpoint => DeltaPolicy::Midpoint,
                PolicyConfig::Refine => DeltaPolicy::Refine,
            },
        }
    }

    /// Through model and network with optional overrides.
    pub fn network(
        &self,
        hops: Option<usize>,
        flows: Option<u32>,
        epsilon: Option<f64>,
    ) -> Result<(TrafficModel, NetworkSpec), String> {
        let through = self.through.model(flows.unwrap_or(self.through.count()))?;
        let cross = match &self.cross {
            Some(c) => Some(c.model(flows.unwrap_or(c.count()))?),
            None => None,
        };
        let spec = NetworkSpec {
            hops: hops.unwrap_or(self.network.hops.0 as usize),
            capacity: self.capacity(),
            cross,
            epsilon: epsilon.unwrap_or(self.epsilon.0),
            slot: self.slot(),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok((through, spec))
    }
}

impl TrafficConfig {
    pub fn count(&self) -> u32 {
        self.count.0
    }

    /// Rejects fields that do not belong to the model.
    fn only(&self, allowed: &[&str]) -> Result<(), String> {
        let present = [
            ("peak_mbps", self.peak_mbps.is_some()),
            ("mean_on_ms", self.mean_on_ms.is_some()),
            ("mean_off_ms", self.mean_off_ms.is_some()),
            ("sigma_bits", self.sigma_bits.is_some()),
            ("rho_mbps", self.rho_mbps.is_some()),
            ("table", self.table.is_some()),
            ("rate_mbps", self.rate_mbps.is_some()),
        ];
        match present.iter().find(|(k, set)| *set && !allowed.contains(k)) {
            Some((k, _)) => Err(format!("{k} does not apply to model {}", self.model.name())),
            None => Ok(()),
        }
    }

    fn mmoo_params(&self) -> Result<MmooParams, String> {
        self.only(&["peak_mbps", "mean_on_ms", "mean_off_ms"])?;
        let need = |v: Option<Positive>, k: &str| v.map(|p| p.0).ok_or(format!("mmoo needs {k}"));
        MmooParams::from_durations(
            need(self.peak_mbps, "peak_mbps")? * 1e6,
            need(self.mean_on_ms, "mean_on_ms")? * 1e-3,
            need(self.mean_off_ms, "mean_off_ms")? * 1e-3,
        )
        .map_err(|e| e.to_string())
    }

    fn constant_rate(&self) -> Result<f64, String> {
        self.only(&["rate_mbps"])?;
        self.rate_mbps
            .map(|r| r.0 * 1e6)
            .ok_or("constant needs rate_mbps".to_string())
    }

    pub fn model(&self, count: u32) -> Result<TrafficModel, String> {
        let model = match self.model {
            ModelKind::Mmoo => TrafficModel::mmoo(self.mmoo_params()?, count),
            ModelKind::SigmaRho => {
                self.only(&["sigma_bits", "rho_mbps", "table"])?;
                let table = match (self.sigma_bits, self.rho_mbps, &self.table) {
                    (Some(s), Some(r), None) => SigmaRhoTable::constant(s, r.0 * 1e6),
                    (None, None, Some(rows)) => SigmaRhoTable::new(
                        rows.iter()
                            .map(|e| SigmaRhoRow {
                                theta: e.theta.0,
                                sigma: e.sigma_bits,
                                rho: e.rho_mbps.0 * 1e6,
                            })
                            .collect(),
                    ),
                    _ => {
                        return Err(
                            "sigma_rho needs either sigma_bits and rho_mbps, or table".to_string()
                        )
                    }
                }
                .map_err(|e| e.to_string())?;
                TrafficModel::sigma_rho(table, count)
            }
            ModelKind::Constant => {
                let table = SigmaRhoTable::constant(0.0, self.constant_rate()?)
                    .map_err(|e| e.to_string())?;
                TrafficModel::sigma_rho(table, count)
            }
        };
        model.map_err(|e| e.to_string())
    }

    /// Per-flow long-run rate, bits/second, when the model has one.
    pub fn mean_rate(&self) -> Option<f64> {
        match self.model {
            ModelKind::Mmoo => self.mmoo_params().ok().map(|p| p.mean_rate()),
            ModelKind::Constant => self.constant_rate().ok(),
            ModelKind::SigmaRho => None,
        }
    }

    /// Simulator source for `count` flows. σρ models have no sample paths.
    pub fn source(&self, count: u32) -> Result<Source, String> {
        match self.model {
            ModelKind::Mmoo => Ok(Source::Mmoo {
                params: self.mmoo_params()?,
                flows: count,
            }),
            ModelKind::Constant => Ok(Source::ConstantRate {
                rate: self.constant_rate()? * f64::from(count),
            }),
            ModelKind::SigmaRho => Err("sigma_rho traffic cannot be simulated".to_string()),
        }
    }
}
