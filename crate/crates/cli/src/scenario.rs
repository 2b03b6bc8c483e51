//! Scenario files: one agent's boundary condition, tunables and vehicle.

use std::path::Path;

use cloplan::{PathBoundaryCondition, Pose2D, VehicleGeometry, VehicleLimits};
use serde::{Deserialize, Serialize};

fn five() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tunables {
    pub s0_m: f64,
    pub s2_m: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Origin {
    pub x_m: f64,
    pub y_m: f64,
    pub psi_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Goal relative to the start pose, in the start frame.
    pub dx_m: f64,
    pub dy_m: f64,
    pub dpsi_rad: f64,
    #[serde(default)]
    pub kappa0_per_m: f64,
    #[serde(default)]
    pub kappa2_per_m: f64,
    #[serde(default = "five")]
    pub s0_m: f64,
    #[serde(default = "five")]
    pub s2_m: f64,
    /// Candidate `(s0, s2)` pairs; when present, replaces `s0_m`/`s2_m` and
    /// the feasible candidate with the shortest travel time wins.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tunables: Vec<Tunables>,
    #[serde(default = "five")]
    pub v0_mps: f64,
    #[serde(default)]
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<VehicleLimits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<VehicleGeometry>,
    /// Second agent for `conflict` when only one file is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_b: Option<Box<Scenario>>,
}

impl Scenario {
    pub fn boundary_condition(&self) -> PathBoundaryCondition {
        PathBoundaryCondition::new(self.dx_m, self.dy_m, self.dpsi_rad, self.kappa0_per_m, self.kappa2_per_m)
    }

    pub fn origin(&self) -> Pose2D {
        Pose2D::new(self.origin.x_m, self.origin.y_m, self.origin.psi_rad)
    }

    pub fn candidates(&self) -> Vec<(f64, f64)> {
        if self.tunables.is_empty() {
            vec![(self.s0_m, self.s2_m)]
        } else {
            self.tunables.iter().map(|t| (t.s0_m, t.s2_m)).collect()
        }
    }
}

/// Reads a JSON file, naming the file and serde's field-level message on failure.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_omitted_fields() {
        let s: Scenario = serde_json::from_str(r#"{"dx_m": 10, "dy_m": 0, "dpsi_rad": 0}"#).unwrap();
        assert_eq!((s.s0_m, s.s2_m, s.v0_mps), (5.0, 5.0, 5.0));
        assert_eq!(s.origin(), Pose2D::origin());
        assert!(s.limits.is_none() && s.agent_b.is_none());
        assert_eq!(s.candidates(), vec![(5.0, 5.0)]);
    }

    #[test]
    fn unknown_and_missing_fields_are_named() {
        let e = serde_json::from_str::<Scenario>(r#"{"dx": 10, "dy_m": 0, "dpsi_rad": 0}"#).unwrap_err();
        assert!(e.to_string().contains("unknown field `dx`"), "{e}");
        let e = serde_json::from_str::<Scenario>(r#"{"dx_m": 10, "dpsi_rad": 0}"#).unwrap_err();
        assert!(e.to_string().contains("missing field `dy_m`"), "{e}");
        let e = serde_json::from_str::<Scenario>(r#"{"dx_m": 1, "dy_m": 0, "dpsi_rad": 0, "limits": {"a_max": 2}}"#).unwrap_err();
        assert!(e.to_string().contains("unknown field `a_max`"), "{e}");
    }
}
