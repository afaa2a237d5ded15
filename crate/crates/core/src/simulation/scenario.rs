use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normal covariate `x1` with mean and standard deviation per level of `x2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateParams {
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
}

/// Per-arm Gaussian linear model on `(1, x1 − μ₁, x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeParams {
    pub beta: [[f64; 3]; 2],
    pub sigma: [f64; 2],
}

/// Per-arm logistic model on `(1, x1 − μ₁, x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationParams {
    pub beta: [[f64; 3]; 2],
}

/// Per-arm Weibull proportional hazards `exp(−t^γ e^{lp})`, with `lp` linear
/// in `(1, x1 − μ₁, x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseParams {
    pub beta: [[f64; 3]; 2],
    pub gamma: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub pi: f64,
    pub p_x2: f64,
    pub tau: f64,
    /// Generate the active arm from the control-arm parameters.
    #[serde(default)]
    pub null: bool,
    pub x1: CovariateParams,
    pub y: OutcomeParams,
    pub r: ObservationParams,
    /// Censoring.
    pub eps0: CauseParams,
    /// Primary terminal event.
    pub eps1: CauseParams,
    /// Competing death.
    pub eps2: CauseParams,
}

impl ScenarioParams {
    /// Calibrated two-arm scenario with a landmark at two years.
    pub fn table1() -> Self {
        Self {
            pi: 0.5,
            p_x2: 0.156,
            tau: 2.0,
            null: false,
            x1: CovariateParams { mu: [46.24, 51.15], sigma: [14.99, 15.33] },
            y: OutcomeParams {
                beta: [[40.141, 0.895, 1.993], [43.121, 0.863, 2.620]],
                sigma: [11.85, 12.16],
            },
            r: ObservationParams { beta: [[2.243, 0.0, 0.0], [2.309, 0.0, 0.0]] },
            eps0: CauseParams {
                beta: [[0.00014f64.ln(), 0.0, 0.0], [9.35e-5f64.ln(), 0.0, 0.0]],
                gamma: [6.691, 6.946],
            },
            eps1: CauseParams {
                beta: [[0.0285f64.ln(), -0.0243, -0.5832], [0.01817f64.ln(), -0.0289, -0.1261]],
                gamma: [1.822, 1.901],
            },
            eps2: CauseParams {
                beta: [[0.0154f64.ln(), -0.0205, -0.4549], [0.0160f64.ln(), 0.00687, -0.598]],
                gamma: [1.143, 1.071],
            },
        }
    }

    pub fn table1_null() -> Self {
        Self { null: true, ..Self::table1() }
    }

    pub fn table5() -> Self {
        scenario_table5(&Self::table1())
    }

    /// Built-in scenarios: `table1`, `table5`, `table1-null`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "table1" => Some(Self::table1()),
            "table5" => Some(Self::table5()),
            "table1-null" => Some(Self::table1_null()),
            _ => None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sp: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        sp.validate()?;
        Ok(sp)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1), got {p}")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        prob("pi", self.pi)?;
        prob("p_x2", self.p_x2)?;
        positive("tau", self.tau)?;
        for k in 0..2 {
            positive("x1.sigma", self.x1.sigma[k])?;
            positive("y.sigma", self.y.sigma[k])?;
            for (name, c) in [("eps0", &self.eps0), ("eps1", &self.eps1), ("eps2", &self.eps2)] {
                positive(&format!("{name}.gamma"), c.gamma[k])?;
            }
        }
        let all_finite = [&self.y.beta, &self.r.beta, &self.eps0.beta, &self.eps1.beta, &self.eps2.beta]
            .iter()
            .all(|b| b.iter().flatten().all(|v| v.is_finite()))
            && self.x1.mu.iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Marginal mean of `x1`, used to centre it inside the generator.
    pub fn x1_mean(&self) -> f64 {
        self.x1.mu[0] * (1.0 - self.p_x2) + self.x1.mu[1] * self.p_x2
    }

    /// Parameter set used for subjects in arm `a`.
    pub fn arm_index(&self, a: u8) -> usize {
        if self.null {
            0
        } else {
            a as usize
        }
    }
}

/// Stronger `x1` effect on the primary-event hazard (−0.15 in both arms),
/// everything else unchanged.
pub fn scenario_table5(sp: &ScenarioParams) -> ScenarioParams {
    let mut out = sp.clone();
    out.eps1.beta[0][1] = -0.15;
    out.eps1.beta[1][1] = -0.15;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table5_changes_one_coefficient_per_arm() {
        let base = ScenarioParams::table1();
        let t5 = scenario_table5(&base);
        assert_eq!(t5.eps1.beta[0][1], -0.15);
        assert_eq!(t5.eps1.beta[1][1], -0.15);
        let mut back = t5.clone();
        back.eps1.beta[0][1] = base.eps1.beta[0][1];
        back.eps1.beta[1][1] = base.eps1.beta[1][1];
        assert_eq!(back, base);
    }

    #[test]
    fn toml_round_trip() {
        let sp = ScenarioParams::table1();
        let text = sp.to_toml_string().unwrap();
        assert_eq!(ScenarioParams::from_toml_str(&text).unwrap(), sp);
    }

    #[test]
    fn invalid_probability_rejected() {
        let mut sp = ScenarioParams::table1();
        sp.pi = 1.0;
        assert!(sp.validate().is_err());
        let text = ScenarioParams::table1().to_toml_string().unwrap().replace("p_x2 = 0.156", "p_x2 = -0.1");
        assert!(matches!(ScenarioParams::from_toml_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn centring_constant() {
        let mu = ScenarioParams::table1().x1_mean();
        assert!((mu - (46.24 * 0.844 + 51.15 * 0.156)).abs() < 1e-12);
    }

    #[test]
    fn builtins() {
        assert!(ScenarioParams::builtin("table1-null").unwrap().null);
        assert!(ScenarioParams::builtin("nope").is_none());
    }
}
