use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::BoxDomain;
use crate::solver::{AmsOptions, PreconditionerVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum MeshSpec {
    /// `n × n × n` cubes per refinement level.
    Hex {
        levels: Vec<usize>,
        #[serde(default = "BoxDomain::unit")]
        domain: BoxDomain,
    },
    /// Each cube split into six tetrahedra.
    Tet {
        levels: Vec<usize>,
        #[serde(default = "BoxDomain::unit")]
        domain: BoxDomain,
    },
    /// PMESH files, one per level.
    File { paths: Vec<PathBuf> },
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec::Hex {
            levels: vec![2, 4, 8],
            domain: BoxDomain::unit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-6,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mesh: MeshSpec,
    pub timesteps: Vec<f64>,
    pub final_time: f64,
    /// Time steps per benchmark run; `None` runs to `final_time`.
    pub bench_steps: Option<usize>,
    pub epsilon: f64,
    pub sigma: f64,
    pub mu: f64,
    pub source: [f64; 3],
    /// `None`: 1 for solves, a six-point sweep for the stabilization bench.
    pub alphas: Option<Vec<f64>>,
    pub alpha_scope: super::AlphaScope,
    pub variants: Vec<PreconditionerVariant>,
    /// `None`: 1 thread, or 1, 2, 4, 8 for the scalability bench.
    pub threads: Option<Vec<usize>>,
    pub solver: Tolerances,
    pub ams: AmsOptions,
    pub output_dir: PathBuf,
}

pub const DEFAULT_TIMESTEPS: [f64; 4] = [0.1, 0.05, 0.01, 0.005];
pub const DEFAULT_ALPHA_SWEEP: [f64; 6] = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_THREAD_SWEEP: [usize; 4] = [1, 2, 4, 8];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSpec::default(),
            timesteps: DEFAULT_TIMESTEPS.to_vec(),
            final_time: 0.5,
            bench_steps: Some(1),
            epsilon: 1.0,
            sigma: 1.0,
            mu: 1.0,
            source: [1.0, 1.0, 1.0],
            alphas: None,
            alpha_scope: super::AlphaScope::Schur,
            variants: PreconditionerVariant::ALL.to_vec(),
            threads: None,
            solver: Tolerances::default(),
            ams: AmsOptions::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match &self.mesh {
            MeshSpec::Hex { levels, .. } | MeshSpec::Tet { levels, .. } => {
                if levels.is_empty() || levels.contains(&0) {
                    return bad("mesh levels must be a nonempty list of positive counts");
                }
            }
            MeshSpec::File { paths } => {
                if paths.is_empty() {
                    return bad("mesh paths must be nonempty");
                }
            }
        }
        if self.timesteps.is_empty() || self.timesteps.iter().any(|&t| !(t > 0.0)) {
            return bad("timesteps must be a nonempty list of positive values");
        }
        if !(self.final_time > 0.0) {
            return bad("final_time must be positive");
        }
        if self.timesteps.iter().any(|&t| t > self.final_time * (1.0 + 1e-12)) {
            return bad("every timestep must satisfy tau <= final_time");
        }
        if self.bench_steps == Some(0) {
            return bad("bench_steps must be at least 1");
        }
        if !(self.epsilon > 0.0) || !(self.mu > 0.0) || !(self.sigma >= 0.0) {
            return bad("need epsilon > 0, mu > 0, sigma >= 0");
        }
        if let Some(a) = &self.alphas {
            if a.is_empty() || a.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return bad("alphas must be a nonempty list of finite values >= 0");
            }
        }
        if self.variants.is_empty() {
            return bad("variants must be nonempty");
        }
        if let Some(t) = &self.threads {
            if t.is_empty() || t.contains(&0) {
                return bad("threads must be a nonempty list of positive counts");
            }
        }
        if !(self.solver.abs_tol > 0.0) || !(self.solver.rel_tol > 0.0) || self.solver.max_iterations == 0 {
            return bad("solver tolerances must be positive and max_iterations >= 1");
        }
        if self.ams.smoothing_sweeps == 0 {
            return bad("ams.smoothing_sweeps must be at least 1");
        }
        if let crate::solver::AuxSolver::Cg { tol } = self.ams.aux_solver {
            if !(tol > 0.0) {
                return bad("auxiliary CG tolerance must be positive");
            }
        }
        Ok(())
    }

    /// Number of implicit Euler steps to reach `final_time`.
    pub fn steps_to_final(&self, tau: f64) -> usize {
        ((self.final_time / tau) - 1e-9).ceil().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn invalid_configs() {
        assert!(ExperimentConfig::from_json(r#"{"timesteps": []}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"final_time": 0.01, "timesteps": [0.1]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"mesh": {"kind": "hex", "levels": [0]}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"variants": ["bogus"]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"ams": {"smoothing_sweeps": 0}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"unknown_key": 1}"#).is_err());
    }

    #[test]
    fn parses_full_example() {
        let c = ExperimentConfig::from_json(
            r#"{
                "mesh": {"kind": "tet", "levels": [2, 3]},
                "timesteps": [0.05],
                "variants": ["jacobi_ams", "exact_exact"],
                "alphas": [0.1, 1, 10],
                "ams": {"smoothing_sweeps": 1, "aux_solver": {"kind": "cg", "tol": 1e-8}}
            }"#,
        )
        .unwrap();
        assert_eq!(c.variants[0], PreconditionerVariant::JacobiAms);
        assert_eq!(c.steps_to_final(0.05), 10);
    }
}
