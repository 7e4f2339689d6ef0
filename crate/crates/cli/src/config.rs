//! Run configuration: a JSON record naming one command plus the scenario
//! and settings it needs.

use std::fs;
use std::path::{Path, PathBuf};

use factfind::distributions::{binomial_connections, polarize, Atom, ConnectionDistribution, PreferenceDistribution};
use factfind::equilibrium::{Scenario, Settings};
use factfind::technology::{CostFunction, SuccessTechnology};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl ToString) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default)]
    pub settings: SettingsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Solve,
    SweepConnectivity {
        /// Later steps must dominate earlier ones.
        steps: Vec<ConnectionsSpec>,
        /// Labels for the steps; defaults to binomial `q` or the step index.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<Vec<f64>>,
    },
    SweepPolarization {
        deltas: Vec<f64>,
    },
    Simulate {
        graph: GraphSpec,
        voters: usize,
        replications: usize,
        #[serde(default)]
        dump_graph: bool,
    },
    Volunteer {
        technology: TechnologySpec,
        cost: CostSpec,
        value: f64,
        players: [usize; 2],
    },
    VerifyAll {
        /// Config files, relative to this one.
        runs: Vec<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SweepConnectivity { .. } => "sweep-connectivity",
            Command::SweepPolarization { .. } => "sweep-polarization",
            Command::Simulate { .. } => "simulate",
            Command::Volunteer { .. } => "volunteer",
            Command::VerifyAll { .. } => "verify-all",
        }
    }

    fn needs_scenario(&self) -> bool {
        !matches!(self, Command::Volunteer { .. } | Command::VerifyAll { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub prior: f64,
    pub types: TypesSpec,
    pub technology: TechnologySpec,
    pub cost: CostSpec,
    pub connections: ConnectionsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TypesSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Piecewise-linear cdf through `(λ, F)` points.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
    PointMass {
        at: f64,
    },
    /// `base` polarized around the prior with weight `delta`.
    Polarized {
        base: Box<TypesSpec>,
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TechnologySpec {
    Weibull { scale: f64, shape: f64 },
    Exponential { scale: f64 },
    Smoothstep { b: f64, eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostSpec {
    Linear { gamma: f64 },
    Power { gamma: f64, exponent: f64 },
    RootShift { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionsSpec {
    Binomial { n: usize, q: f64 },
    Pmf { masses: Vec<f64> },
    PointMass { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    Planted,
    ErdosRenyi {
        mean_degree: f64,
        #[serde(default)]
        failure: f64,
        cap: usize,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_grid: Option<usize>,
}

impl SettingsSpec {
    pub fn build(&self) -> Result<Settings<f64>> {
        let d = Settings::<f64>::default();
        let s = Settings {
            grid: self.grid.unwrap_or(d.grid),
            root_tol: self.root_tol.unwrap_or(d.root_tol),
            fixed_point_tol: self.fixed_point_tol.unwrap_or(d.fixed_point_tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            x_max: self.x_max.or(d.x_max),
            shape_grid: self.shape_grid.unwrap_or(d.shape_grid),
        };
        s.validate().map_err(|e| ConfigError::invalid("settings", e))?;
        Ok(s)
    }
}

impl TypesSpec {
    pub fn build(&self, prior: f64) -> factfind::Result<PreferenceDistribution<f64>> {
        match self {
            TypesSpec::Uniform { lo, hi } => PreferenceDistribution::uniform(*lo, *hi),
            TypesSpec::Tabulated { points } => PreferenceDistribution::tabulated(points.clone()),
            TypesSpec::Discrete { atoms } => {
                PreferenceDistribution::discrete(atoms.iter().map(|&(l, m)| Atom::new(l, m)).collect())
            }
            TypesSpec::PointMass { at } => PreferenceDistribution::point_mass(*at),
            TypesSpec::Polarized { base, delta } => polarize(&base.build(prior)?, *delta, prior),
        }
    }
}

impl TechnologySpec {
    pub fn build(&self) -> factfind::Result<SuccessTechnology<f64>> {
        match *self {
            TechnologySpec::Weibull { scale, shape } => SuccessTechnology::weibull(scale, shape),
            TechnologySpec::Exponential { scale } => SuccessTechnology::exponential(scale),
            TechnologySpec::Smoothstep { b, eps } => SuccessTechnology::smooth_step(b, eps),
        }
    }
}

impl CostSpec {
    pub fn build(&self) -> factfind::Result<CostFunction<f64>> {
        match *self {
            CostSpec::Linear { gamma } => CostFunction::linear(gamma),
            CostSpec::Power { gamma, exponent } => CostFunction::power(gamma, exponent),
            CostSpec::RootShift { gamma } => CostFunction::root_shift(gamma),
        }
    }
}

impl ConnectionsSpec {
    pub fn build(&self) -> factfind::Result<ConnectionDistribution<f64>> {
        match self {
            ConnectionsSpec::Binomial { n, q } => binomial_connections(*n, *q),
            ConnectionsSpec::Pmf { masses } => ConnectionDistribution::new(masses.clone()),
            ConnectionsSpec::PointMass { n } => Ok(ConnectionDistribution::point_mass(*n)),
        }
    }

    /// Sweep label: `q` for binomial steps.
    fn label(&self) -> Option<f64> {
        match self {
            ConnectionsSpec::Binomial { q, .. } => Some(*q),
            _ => None,
        }
    }

    fn field(&self, base: &str) -> String {
        match self {
            ConnectionsSpec::Binomial { q, .. } if !(0.0..=1.0).contains(q) => format!("{base}.q"),
            ConnectionsSpec::Pmf { .. } => format!("{base}.masses"),
            _ => base.to_string(),
        }
    }
}

impl ScenarioSpec {
    pub fn build(&self, settings: Settings<f64>) -> Result<Scenario<f64>> {
        let types = self
            .types
            .build(self.prior)
            .map_err(|e| ConfigError::invalid("scenario.types", e))?;
        let tech = self
            .technology
            .build()
            .map_err(|e| ConfigError::invalid("scenario.technology", e))?;
        let cost = self
            .cost
            .build()
            .map_err(|e| ConfigError::invalid("scenario.cost", e))?;
        let conn = self
            .connections
            .build()
            .map_err(|e| ConfigError::invalid(self.connections.field("scenario.connections"), e))?;
        Scenario::new(self.prior, types, tech, cost, conn, settings)
            .map_err(|e| ConfigError::invalid("scenario.prior", e))
    }
}

impl RunConfig {
    /// A solve run with default settings.
    pub fn solve(scenario: ScenarioSpec) -> Self {
        RunConfig {
            command: Command::Solve,
            seed: 0,
            out: None,
            scenario: Some(scenario),
            settings: SettingsSpec::default(),
        }
    }

    pub fn scenario(&self) -> Result<Scenario<f64>> {
        let spec = self
            .scenario
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("scenario", format!("required by `{}`", self.command.name())))?;
        spec.build(self.settings.build()?)
    }

    /// Sweep labels for a connectivity sweep.
    pub fn connectivity_params(&self) -> Vec<f64> {
        match &self.command {
            Command::SweepConnectivity { steps, params } => match params {
                Some(p) => p.clone(),
                None => match steps.iter().map(|s| s.label()).collect::<Option<Vec<f64>>>() {
                    Some(qs) => qs,
                    None => (0..steps.len()).map(|i| i as f64).collect(),
                },
            },
            _ => Vec::new(),
        }
    }

    /// Checks every distribution, technology and command invariant.
    pub fn validate(&self) -> Result<()> {
        self.settings.build()?;
        if self.command.needs_scenario() || self.scenario.is_some() {
            self.scenario()?;
        }
        match &self.command {
            Command::Solve | Command::VerifyAll { .. } => {}
            Command::SweepConnectivity { steps, params } => {
                if steps.len() < 2 {
                    return Err(ConfigError::invalid(
                        "command.sweep-connectivity.steps",
                        "need at least two steps",
                    ));
                }
                for (i, s) in steps.iter().enumerate() {
                    s.build().map_err(|e| {
                        ConfigError::invalid(s.field(&format!("command.sweep-connectivity.steps[{i}]")), e)
                    })?;
                }
                if let Some(p) = params {
                    if p.len() != steps.len() {
                        return Err(ConfigError::invalid(
                            "command.sweep-connectivity.params",
                            "needs one label per step",
                        ));
                    }
                }
            }
            Command::SweepPolarization { deltas } => {
                if deltas.len() < 2 {
                    return Err(ConfigError::invalid(
                        "command.sweep-polarization.deltas",
                        "need at least two values",
                    ));
                }
                if let Some(d) = deltas.iter().find(|d| !(0.0..1.0).contains(*d)) {
                    return Err(ConfigError::invalid(
                        "command.sweep-polarization.deltas",
                        format!("{d} outside [0, 1)"),
                    ));
                }
            }
            Command::Simulate {
                graph,
                voters,
                replications,
                ..
            } => {
                if *voters == 0 {
                    return Err(ConfigError::invalid("command.simulate.voters", "must be positive"));
                }
                if *replications == 0 {
                    return Err(ConfigError::invalid(
                        "command.simulate.replications",
                        "must be positive",
                    ));
                }
                if let GraphSpec::ErdosRenyi {
                    mean_degree, failure, ..
                } = graph
                {
                    if !(*mean_degree >= 0.0 && *mean_degree <= (*voters as f64 - 1.0).max(0.0)) {
                        return Err(ConfigError::invalid(
                            "command.simulate.graph.mean_degree",
                            "outside [0, voters − 1]",
                        ));
                    }
                    if !(0.0..=1.0).contains(failure) {
                        return Err(ConfigError::invalid("command.simulate.graph.failure", "outside [0, 1]"));
                    }
                }
            }
            Command::Volunteer {
                technology,
                cost,
                value,
                players,
            } => {
                technology
                    .build()
                    .map_err(|e| ConfigError::invalid("command.volunteer.technology", e))?;
                if !matches!(technology, TechnologySpec::Smoothstep { .. }) {
                    return Err(ConfigError::invalid(
                        "command.volunteer.technology",
                        "must be smoothstep",
                    ));
                }
                cost.build()
                    .map_err(|e| ConfigError::invalid("command.volunteer.cost", e))?;
                if !(*value > 0.0 && *value <= 0.25) {
                    return Err(ConfigError::invalid("command.volunteer.value", "must lie in (0, 1/4]"));
                }
                if players[0] == 0 || players[1] < players[0] {
                    return Err(ConfigError::invalid(
                        "command.volunteer.players",
                        "need 1 <= first <= last",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = parse_config(&text).map_err(|e| match e {
        ConfigError::Parse {
            line, column, message, ..
        } => ConfigError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message,
        },
        other => other,
    })?;
    Ok(config)
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<config>"),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "command": "solve",
        "scenario": {
            "prior": 0.5,
            "types": {"kind": "uniform", "lo": 0, "hi": 1},
            "technology": {"kind": "exponential", "scale": 1},
            "cost": {"kind": "linear", "gamma": 0.02},
            "connections": {"kind": "binomial", "n": 5, "q": 0.5}
        }
    }"#;

    #[test]
    fn minimal_solve_uses_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.command, Command::Solve);
        let s = c.scenario().unwrap().settings;
        assert_eq!(s.grid, 128);
        assert_eq!(s, Settings::default());
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn binomial_q_above_one_names_field() {
        let text = MINIMAL.replace("\"q\": 0.5", "\"q\": 1.5");
        let err = parse_config(&text).unwrap_err();
        match err {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "scenario.connections.q"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_config("{\n  \"command\": \"solve\",\n  oops\n}").unwrap_err();
        match err {
            ConfigError::Parse { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"prior\": 0.5", "\"prior\": 0.5, \"priro\": 0.4");
        assert!(matches!(parse_config(&text), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn missing_scenario_is_named() {
        let err = parse_config(r#"{"command": "solve"}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "scenario"));
    }

    #[test]
    fn round_trip() {
        let c = parse_config(MINIMAL).unwrap();
        let again = parse_config(&serde_json::to_string_pretty(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
