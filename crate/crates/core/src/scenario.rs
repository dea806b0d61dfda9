//! World description, line-of-sight channel model and SNR arithmetic.
//!
//! SNR values are linear ratios everywhere in the API. Decibels appear only
//! in files and on the command line.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{IoError, PlanError};

/// Horizontal position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        (self - other).norm_sq()
    }

    /// Linear interpolation: `self` at `t = 0`, `other` at `t = 1`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Static mission setup: ground base stations, endpoints, altitudes, speed
/// limit and reference SNR (linear).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    gbs: Vec<Point>,
    pub start: Point,
    pub goal: Point,
    pub uav_altitude: f64,
    pub gbs_altitude: f64,
    pub max_speed: f64,
    pub ref_snr: f64,
}

impl Scenario {
    pub fn new(
        gbs: Vec<Point>,
        start: Point,
        goal: Point,
        uav_altitude: f64,
        gbs_altitude: f64,
        max_speed: f64,
        ref_snr: f64,
    ) -> Result<Self, PlanError> {
        if gbs.is_empty() {
            return Err(PlanError::InvalidInput("at least one GBS is required".into()));
        }
        if !(max_speed > 0.0 && max_speed.is_finite()) {
            return Err(PlanError::InvalidInput(format!("max speed must be positive, got {max_speed}")));
        }
        if !(ref_snr > 0.0 && ref_snr.is_finite()) {
            return Err(PlanError::InvalidInput(format!("reference SNR must be positive, got {ref_snr}")));
        }
        if !(uav_altitude.is_finite() && gbs_altitude.is_finite()) {
            return Err(PlanError::InvalidInput("altitudes must be finite".into()));
        }
        if !gbs.iter().chain([&start, &goal]).all(|p| p.is_finite()) {
            return Err(PlanError::InvalidInput("coordinates must be finite".into()));
        }
        Ok(Scenario {
            gbs,
            start,
            goal,
            uav_altitude,
            gbs_altitude,
            max_speed,
            ref_snr,
        })
    }

    pub fn gbs(&self) -> &[Point] {
        &self.gbs
    }

    pub fn num_gbs(&self) -> usize {
        self.gbs.len()
    }

    /// Squared altitude difference `(H - H_G)^2`.
    pub fn height_gap_sq(&self) -> f64 {
        let dh = self.uav_altitude - self.gbs_altitude;
        dh * dh
    }

    /// Largest SNR target any position can meet (zero horizontal distance).
    pub fn snr_ceiling(&self) -> f64 {
        self.ref_snr / self.height_gap_sq()
    }

    /// Linear SNR for a UAV whose nearest GBS is `horizontal` meters away.
    pub fn snr_at_distance(&self, horizontal: f64) -> f64 {
        self.ref_snr / (self.height_gap_sq() + horizontal * horizontal)
    }

    pub fn with_gbs(&self, gbs: Vec<Point>) -> Result<Self, PlanError> {
        Scenario::new(
            gbs,
            self.start,
            self.goal,
            self.uav_altitude,
            self.gbs_altitude,
            self.max_speed,
            self.ref_snr,
        )
    }

    pub fn with_endpoints(&self, start: Point, goal: Point) -> Result<Self, PlanError> {
        Scenario::new(
            self.gbs.clone(),
            start,
            goal,
            self.uav_altitude,
            self.gbs_altitude,
            self.max_speed,
            self.ref_snr,
        )
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk scenario layout. SNR in dB, coordinates in meters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub gbs: Vec<[f64; 2]>,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub uav_altitude_m: f64,
    pub gbs_altitude_m: f64,
    pub max_speed_mps: f64,
    pub ref_snr_db: f64,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            gbs: s.gbs.iter().map(|&p| p.into()).collect(),
            start: s.start.into(),
            goal: s.goal.into(),
            uav_altitude_m: s.uav_altitude,
            gbs_altitude_m: s.gbs_altitude,
            max_speed_mps: s.max_speed,
            ref_snr_db: to_db(s.ref_snr),
        }
    }
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = IoError;

    fn try_from(f: ScenarioFile) -> Result<Self, IoError> {
        Scenario::new(
            f.gbs.into_iter().map(Point::from).collect(),
            f.start.into(),
            f.goal.into(),
            f.uav_altitude_m,
            f.gbs_altitude_m,
            f.max_speed_mps,
            from_db(f.ref_snr_db),
        )
        .map_err(|e| IoError::Invalid(e.to_string()))
    }
}

/// An SNR target together with the horizontal coverage radius it induces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityRequirement {
    pub snr_target: f64,
    pub radius: f64,
}

impl ConnectivityRequirement {
    /// Requirement whose coverage radius is exactly `radius`.
    pub fn from_radius(scenario: &Scenario, radius: f64) -> Self {
        ConnectivityRequirement {
            snr_target: scenario.snr_at_distance(radius),
            radius,
        }
    }
}

/// Coverage radius `sqrt(gamma0 / rho - (H - H_G)^2)` for an SNR target.
pub fn coverage_radius(scenario: &Scenario, snr_target: f64) -> Result<ConnectivityRequirement, PlanError> {
    if !(snr_target > 0.0 && snr_target.is_finite()) {
        return Err(PlanError::InvalidInput(format!("SNR target must be positive, got {snr_target}")));
    }
    let h2 = scenario.height_gap_sq();
    let radicand = scenario.ref_snr / snr_target - h2;
    // Rounding in gamma0 / (gamma0 / h2) must not turn the exact ceiling into an error.
    let floor = -4.0 * f64::EPSILON * h2.max(1.0);
    if radicand < floor {
        return Err(PlanError::UnachievableSnr {
            target_db: to_db(snr_target),
            limit_db: to_db(scenario.snr_ceiling()),
        });
    }
    let radius = if radicand <= -floor { 0.0 } else { radicand.sqrt() };
    Ok(ConnectivityRequirement { snr_target, radius })
}

/// Index of the horizontally closest GBS; ties go to the smallest index.
pub fn closest_gbs(scenario: &Scenario, position: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (m, g) in scenario.gbs.iter().enumerate() {
        let d = position.dist_sq(*g);
        if d < best_d {
            best_d = d;
            best = m;
        }
    }
    best
}

/// Received SNR when associated with the closest GBS.
pub fn snr_at(scenario: &Scenario, position: Point) -> f64 {
    let nearest_sq = scenario
        .gbs
        .iter()
        .map(|g| position.dist_sq(*g))
        .fold(f64::INFINITY, f64::min);
    scenario.ref_snr / (scenario.height_gap_sq() + nearest_sq)
}
