//! Vehicle limits and body geometry.

use std::f64::consts::{FRAC_PI_6, PI};

use serde::{Deserialize, Serialize};

/// Input and comfort limits of the car-like vehicle.
///
/// The maximum path curvature is not stored; [`VehicleLimits::kappa_max`]
/// derives it from the steering limit and the wheelbase every time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleLimits {
    /// Maximum steering angle [rad].
    #[serde(rename = "gamma_max_rad")]
    pub gamma_max: f64,
    /// Maximum steering rate [rad/s].
    #[serde(rename = "omega_max_rad_per_s")]
    pub omega_max: f64,
    /// Longitudinal acceleration bounds [m/s²].
    #[serde(rename = "a_min_mps2")]
    pub a_min: f64,
    #[serde(rename = "a_max_mps2")]
    pub a_max: f64,
    /// Jerk bound [m/s³].
    #[serde(rename = "j_max_mps3")]
    pub j_max: f64,
    /// Lateral acceleration bound [m/s²].
    #[serde(rename = "a_lat_max_mps2")]
    pub a_lat_max: f64,
    /// Wheelbase [m].
    #[serde(rename = "wheelbase_m")]
    pub wheelbase: f64,
    /// Speed used wherever both branches of the speed bound are unbounded [m/s].
    #[serde(rename = "v_cap_mps")]
    pub v_cap: f64,
}

impl Default for VehicleLimits {
    fn default() -> Self {
        VehicleLimits {
            gamma_max: FRAC_PI_6,
            omega_max: 2.0 * PI,
            a_min: -8.0,
            a_max: 3.0,
            j_max: 2.0,
            a_lat_max: 3.0,
            // chosen so that tan(γ_max)/l = 0.2 1/m
            wheelbase: FRAC_PI_6.tan() / 0.2,
            v_cap: 30.0,
        }
    }
}

impl VehicleLimits {
    /// `tan(γ_max) / l`.
    pub fn kappa_max(&self) -> f64 {
        self.gamma_max.tan() / self.wheelbase
    }

    /// Checks signs and ranges; returns a field-level message on failure.
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("gamma_max", self.gamma_max),
            ("omega_max", self.omega_max),
            ("a_min", self.a_min),
            ("a_max", self.a_max),
            ("j_max", self.j_max),
            ("a_lat_max", self.a_lat_max),
            ("wheelbase", self.wheelbase),
            ("v_cap", self.v_cap),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(format!("{name} must be finite"));
            }
        }
        if !(self.gamma_max > 0.0 && self.gamma_max < PI / 2.0) {
            return Err("gamma_max must lie in (0, π/2)".into());
        }
        if !(self.a_min < 0.0 && self.a_max > 0.0) {
            return Err("need a_min < 0 < a_max".into());
        }
        for (name, v) in [
            ("omega_max", self.omega_max),
            ("j_max", self.j_max),
            ("a_lat_max", self.a_lat_max),
            ("wheelbase", self.wheelbase),
            ("v_cap", self.v_cap),
        ] {
            if v <= 0.0 {
                return Err(format!("{name} must be positive"));
            }
        }
        Ok(())
    }
}

/// Rectangular body, measured from the rear-axle center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleGeometry {
    /// Wheelbase `l` [m].
    #[serde(rename = "wheelbase_m")]
    pub wheelbase: f64,
    /// Front overhang `d_f` [m].
    #[serde(rename = "front_overhang_m")]
    pub front_overhang: f64,
    /// Rear overhang `d_r` [m].
    #[serde(rename = "rear_overhang_m")]
    pub rear_overhang: f64,
    /// Body width `w` [m].
    #[serde(rename = "width_m")]
    pub width: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        let wheelbase = FRAC_PI_6.tan() / 0.2;
        VehicleGeometry { wheelbase, front_overhang: 3.8 - wheelbase, rear_overhang: 1.0, width: 1.9 }
    }
}

impl VehicleGeometry {
    /// `l + d_f`, the distance from the rear axle to the front bumper.
    pub fn front_length(&self) -> f64 {
        self.wheelbase + self.front_overhang
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("wheelbase", self.wheelbase),
            ("front_overhang", self.front_overhang),
            ("rear_overhang", self.rear_overhang),
            ("width", self.width),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive and finite"));
            }
        }
        Ok(())
    }
}
