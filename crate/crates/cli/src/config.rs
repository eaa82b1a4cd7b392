use std::path::PathBuf;

use holonomy::connection::ConnectionConfig;
use holonomy::hamiltonian::HamiltonianConfig;
use holonomy::path::PathConfig;
use holonomy::{
    ActionAngleState, ControlConnection, HamiltonianPoly, ParameterPath, Propagator, QuantizationScheme,
    TruncatedBasis,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub m: usize,
    #[serde(default)]
    pub p: usize,
    pub n_max: usize,
    #[serde(default)]
    pub margin: usize,
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub twist: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub actions: Vec<f64>,
    pub angles: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    Identity,
    /// Holonomy realized by the loop with these harmonic parameters.
    Planted { params: Vec<f64> },
    /// Row-major `[re, im]` entries (imaginary parts ignored for classical targets).
    Matrix { matrix: Vec<[f64; 2]> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpace {
    #[default]
    QuantumBlock,
    Classical,
}

fn default_order() -> usize {
    1
}

fn default_budget() -> usize {
    5000
}

fn default_restarts() -> usize {
    8
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_restart_scale() -> f64 {
    0.5
}

fn default_initial_step() -> f64 {
    0.25
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    #[serde(default)]
    pub space: TargetSpace,
    pub target: TargetConfig,
    #[serde(default)]
    pub block: i64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_restart_scale")]
    pub restart_scale: f64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    /// Ordered-exponential steps per objective evaluation; defaults to `run.steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

fn default_steps() -> usize {
    1000
}

fn default_t() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub propagator: Propagator,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            command: None,
            steps: default_steps(),
            t: default_t(),
            seed: 0,
            propagator: Propagator::Midpoint,
            output: default_output(),
        }
    }
}

/// Whole experiment record. All quantities are dimensionless with ħ = 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    pub system: SystemConfig,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisConfig>,
    #[serde(default)]
    pub run: RunSection,
}

/// Engine objects built from a validated [`RunConfig`].
pub struct System {
    pub scheme: QuantizationScheme,
    pub basis: TruncatedBasis,
    pub hamiltonian: HamiltonianPoly,
    pub conn: Option<ControlConnection>,
    pub path: Option<ParameterPath>,
    pub initial: Option<ActionAngleState>,
}

fn field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn check_len(path: &str, expected: usize, got: usize) -> Result<(), CliError> {
    if expected == got {
        Ok(())
    } else {
        Err(field(path, format!("expected {expected} entries, got {got}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "config".to_string() } else { path };
            field(&path, e.into_inner())
        })
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    /// The output directory is left out; it does not affect any result.
    pub fn hash(&self) -> String {
        let mut cfg = self.clone();
        cfg.run.output = PathBuf::new();
        let canonical = serde_json::to_vec(&cfg).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Cross-field checks; builds the engine objects.
    pub fn build(&self) -> Result<System, CliError> {
        let s = &self.system;
        if s.m == 0 {
            return Err(field("system.m", "must be >= 1"));
        }
        check_len("system.lambda", s.m, s.lambda.len())?;
        if !s.twist.is_empty() {
            check_len("system.twist", s.m, s.twist.len())?;
        }
        let scheme = QuantizationScheme::new(&s.lambda, &s.twist).map_err(|e| field("system.twist", e))?;
        let basis = TruncatedBasis::new(s.m, s.n_max, s.margin).map_err(|e| field("system", e))?;

        for (j, t) in self.hamiltonian.terms.iter().enumerate() {
            check_len(&format!("hamiltonian.terms[{j}].powers"), s.m, t.powers.len())?;
        }
        let hamiltonian =
            HamiltonianPoly::from_config(s.m, &self.hamiltonian).map_err(|e| field("hamiltonian", e))?;

        let conn = match &self.connection {
            Some(c) => {
                if c.m != s.m {
                    return Err(field("connection.m", format!("{} does not match system.m = {}", c.m, s.m)));
                }
                if c.p != s.p {
                    return Err(field("connection.p", format!("{} does not match system.p = {}", c.p, s.p)));
                }
                for (j, t) in c.terms.iter().enumerate() {
                    check_len(&format!("connection.terms[{j}].mode"), s.m, t.mode.len())?;
                }
                Some(ControlConnection::from_config(c).map_err(|e| field("connection", e))?)
            }
            None => None,
        };

        let path = match &self.path {
            Some(p) => {
                let pp = match p {
                    PathConfig::PiecewiseLinear { p, .. } | PathConfig::FourierLoop { p, .. } => *p,
                };
                if pp != s.p {
                    return Err(field("path.p", format!("{pp} does not match system.p = {}", s.p)));
                }
                Some(ParameterPath::from_config(p).map_err(|e| field("path", e))?)
            }
            None => None,
        };

        let initial = match &self.initial_state {
            Some(st) => {
                check_len("initial_state.actions", s.m, st.actions.len())?;
                check_len("initial_state.angles", s.m, st.angles.len())?;
                Some(
                    ActionAngleState::new(st.actions.clone(), st.angles.clone())
                        .map_err(|e| field("initial_state", e))?,
                )
            }
            None => None,
        };

        if self.run.steps == 0 {
            return Err(field("run.steps", "must be >= 1"));
        }
        if !self.run.t.is_finite() {
            return Err(field("run.t", "must be finite"));
        }
        Ok(System {
            scheme,
            basis,
            hamiltonian,
            conn,
            path,
            initial,
        })
    }
}

impl System {
    pub fn conn(&self, command: &str) -> Result<&ControlConnection, CliError> {
        self.conn
            .as_ref()
            .ok_or_else(|| field("connection", format!("required by `{command}`")))
    }

    pub fn path(&self, command: &str) -> Result<&ParameterPath, CliError> {
        self.path
            .as_ref()
            .ok_or_else(|| field("path", format!("required by `{command}`")))
    }

    pub fn initial(&self, command: &str) -> Result<&ActionAngleState, CliError> {
        self.initial
            .as_ref()
            .ok_or_else(|| field("initial_state", format!("required by `{command}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"system": {"m": 1, "n_max": 2, "lambda": [0.3]},
        "hamiltonian": {"terms": [{"powers": [1], "coeff": 1.0}]}}"#;

    #[test]
    fn minimal_config_builds() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let sys = cfg.build().unwrap();
        assert_eq!(sys.basis.len(), 5);
        assert!(sys.conn("holonomy").is_err());
        assert_eq!(cfg.hash(), RunConfig::parse(MINIMAL).unwrap().hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("[0.3]", "[0.3, 0.1]");
        let err = RunConfig::parse(&bad).unwrap().build().err().unwrap().to_string();
        assert!(err.contains("system.lambda"), "{err}");

        let bad = MINIMAL.replace("\"n_max\": 2", "\"n_max\": \"two\"");
        let err = RunConfig::parse(&bad).err().unwrap().to_string();
        assert!(err.contains("system.n_max"), "{err}");

        let bad = MINIMAL.replace("\"powers\": [1]", "\"powers\": [1, 0]");
        let err = RunConfig::parse(&bad).unwrap().build().err().unwrap().to_string();
        assert!(err.contains("hamiltonian.terms[0].powers"), "{err}");
    }

    #[test]
    fn overrides_change_the_hash() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        let h0 = cfg.hash();
        cfg.run.output = PathBuf::from("elsewhere");
        assert_eq!(cfg.hash(), h0);
        cfg.run.steps = 17;
        assert_ne!(cfg.hash(), h0);
    }
}
