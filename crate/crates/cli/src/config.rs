use std::path::Path;

use patrolgame::GraphSpec;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Allocate,
    CoOptimize,
    Simulate,
    Verify,
}

/// Scenario file contents. Command-line flags override any field here.
///
/// ```json
/// {"graph": {"family": "bipartite", "n_p": 3, "n_q": 2}, "B": 20, "mode": "co-optimize"}
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub tau: Option<Vec<u32>>,
    #[serde(default, rename = "B")]
    pub budget: Option<u64>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Strategy to simulate instead of the synthesized one (row-major).
    #[serde(default, rename = "P")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub nmax: Option<usize>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("bad scenario file {}: {e}", path.display())))
    }

    /// Solve and simulate take `tau`; allocate and co-optimize take `B`.
    pub fn check_mode(&self, mode: Mode) -> Result<(), Failure> {
        match mode {
            Mode::Solve | Mode::Simulate => {
                if self.tau.is_none() {
                    return Err(Failure::usage("this mode needs tau"));
                }
                if self.budget.is_some() {
                    return Err(Failure::usage("this mode takes tau, not B"));
                }
            }
            Mode::Allocate | Mode::CoOptimize => {
                if self.budget.is_none() {
                    return Err(Failure::usage("this mode needs B"));
                }
                if self.tau.is_some() {
                    return Err(Failure::usage("this mode takes B, not tau"));
                }
            }
            Mode::Verify => {}
        }
        if mode == Mode::CoOptimize {
            let family = self.graph.as_ref().map(|g| g.family.to_ascii_lowercase());
            if !matches!(family.as_deref(), Some("bipartite" | "complete_bipartite")) {
                return Err(Failure::usage("co-optimize needs the bipartite family"));
            }
            if let Some(b) = self.budget.filter(|b| b % 2 == 1) {
                return Err(Failure::usage(format!(
                    "co-optimize needs an even budget, got {b}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scenario() {
        let c: ScenarioConfig = serde_json::from_str(
            r#"{"graph": {"family": "bipartite", "n_p": 3, "n_q": 2}, "B": 20, "mode": "co-optimize"}"#,
        )
        .unwrap();
        assert_eq!(c.budget, Some(20));
        assert_eq!(c.mode, Some(Mode::CoOptimize));
        assert!(c.check_mode(Mode::CoOptimize).is_ok());
        assert!(c.check_mode(Mode::Solve).is_err());
    }

    #[test]
    fn co_optimize_rules() {
        let mut c = ScenarioConfig {
            graph: Some(GraphSpec::complete(3)),
            budget: Some(20),
            ..Default::default()
        };
        assert!(c.check_mode(Mode::CoOptimize).is_err());
        c.graph = Some(GraphSpec::bipartite(2, 2));
        c.budget = Some(11);
        assert!(c.check_mode(Mode::CoOptimize).is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"budget": 3}"#).is_err());
    }
}
