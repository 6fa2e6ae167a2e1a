use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial density profiles that can be written into a parameter record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialProfile {
    Constant {
        value: f64,
    },
    /// Straight line from `left` at `u = 0` to `right` at `u = 1`.
    Linear {
        left: f64,
        right: f64,
    },
    /// `left` on `[0, at)`, `right` on `[at, 1]`.
    Step {
        left: f64,
        right: f64,
        at: f64,
    },
    /// `mean + amplitude · sin(π·modes·u)`.
    Sine {
        mean: f64,
        amplitude: f64,
        modes: f64,
    },
}

impl Default for InitialProfile {
    fn default() -> Self {
        InitialProfile::Constant { value: 0.5 }
    }
}

impl InitialProfile {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            InitialProfile::Constant { value } => value,
            InitialProfile::Linear { left, right } => left + (right - left) * u,
            InitialProfile::Step { left, right, at } => {
                if u < at {
                    left
                } else {
                    right
                }
            }
            InitialProfile::Sine {
                mean,
                amplitude,
                modes,
            } => mean + amplitude * (std::f64::consts::PI * modes * u).sin(),
        }
    }

    /// Checks that the profile takes values in `[0,1]`.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialProfile::Constant { value } => (0.0..=1.0).contains(&value),
            InitialProfile::Linear { left, right } | InitialProfile::Step { left, right, .. } => {
                (0.0..=1.0).contains(&left) && (0.0..=1.0).contains(&right)
            }
            InitialProfile::Sine {
                mean, amplitude, ..
            } => mean - amplitude.abs() >= 0.0 && mean + amplitude.abs() <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "initial profile {self:?} leaves [0,1]"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_and_validates() {
        assert_eq!(
            InitialProfile::Linear {
                left: 0.2,
                right: 0.8
            }
            .eval(0.5),
            0.5
        );
        assert_eq!(
            InitialProfile::Step {
                left: 0.1,
                right: 0.9,
                at: 0.5
            }
            .eval(0.5),
            0.9
        );
        assert!(InitialProfile::Sine {
            mean: 0.5,
            amplitude: 0.6,
            modes: 1.0
        }
        .validate()
        .is_err());
        let json = serde_json::to_string(&InitialProfile::Constant { value: 0.5 }).unwrap();
        assert_eq!(json, r#"{"kind":"constant","value":0.5}"#);
    }
}
