//! Scene geometry for a wall-mounted RIS.
//!
//! Global axes: the Tx sits on the `yz` plane (`x = 0`), heights are `z`.
//! The RIS is either on the side wall (parallel to `xz`) or on the opposite
//! wall (parallel to `yz`). Its local frame has the first array axis along
//! global `x` (side wall) or `y` (opposite wall), the second array axis along
//! global `z`, and the broadside normal pointing back into the room
//! (`-y` and `-x` respectively).
//!
//! Local angles follow the usual planar-array convention: for a unit
//! direction `u`, azimuth `φ = atan2(u·e1, u·n)` and elevation
//! `θ = asin(u·e2)`, so `u = cosθ sinφ e1 + sinθ e2 + cosθ cosφ n`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

pub fn distance(a: Point3, b: Point3) -> f64 {
    (a - b).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WallPlacement {
    /// RIS parallel to the `xz` plane.
    #[serde(rename = "side")]
    SideWall,
    /// RIS parallel to the `yz` plane, facing the Tx.
    #[serde(rename = "opposite")]
    OppositeWall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Environment {
    /// Indoor hotspot (office).
    #[serde(rename = "inh")]
    InH,
    /// Urban microcell (street canyon).
    #[serde(rename = "umi")]
    UMi,
}

impl Environment {
    pub fn cell_radius_limit(self) -> f64 {
        match self {
            Environment::InH => 75.0,
            Environment::UMi => 100.0,
        }
    }

    /// Allowed Tx mounting heights, inclusive.
    pub fn tx_height_range(self) -> (f64, f64) {
        match self {
            Environment::InH => (2.0, 3.0),
            Environment::UMi => (3.0, 20.0),
        }
    }

    /// Upper bound on heights of anything in the scene, scatterers included.
    pub fn ceiling(self) -> f64 {
        match self {
            Environment::InH => 3.5,
            Environment::UMi => 50.0,
        }
    }

    /// RIS mounting height at or above which the RIS links are taken as LOS.
    pub fn forced_los_ris_height(self) -> f64 {
        match self {
            Environment::InH => 2.0,
            Environment::UMi => 10.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Environment::InH => "InH",
            Environment::UMi => "UMi",
        }
    }
}

/// Ground users must stay strictly below this height.
pub const MAX_RX_HEIGHT: f64 = 2.0;

/// Supported carrier frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Band {
    Ghz28,
    Ghz73,
}

impl Band {
    pub fn ghz(self) -> u32 {
        match self {
            Band::Ghz28 => 28,
            Band::Ghz73 => 73,
        }
    }

    pub fn frequency_hz(self) -> f64 {
        f64::from(self.ghz()) * 1e9
    }

    pub fn wavelength(self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz()
    }
}

impl TryFrom<u32> for Band {
    type Error = String;

    fn try_from(ghz: u32) -> std::result::Result<Self, String> {
        match ghz {
            28 => Ok(Band::Ghz28),
            73 => Ok(Band::Ghz73),
            other => Err(format!("unsupported frequency {other} GHz (expected 28 or 73)")),
        }
    }
}

impl From<Band> for u32 {
    fn from(b: Band) -> u32 {
        b.ghz()
    }
}

fn default_true() -> bool {
    true
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub environment: Environment,
    #[serde(rename = "frequency_ghz")]
    pub band: Band,
    pub wall: WallPlacement,
    pub tx: Point3,
    pub rx: Point3,
    /// Center of the RIS.
    pub ris: Point3,
    #[serde(rename = "elements")]
    pub n_elements: usize,
    /// Element pitch in meters; half a wavelength when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_spacing: Option<f64>,
    #[serde(rename = "direct_link", default = "default_true")]
    pub direct_link_present: bool,
}

impl Scenario {
    pub fn wavelength(&self) -> f64 {
        self.band.wavelength()
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    pub fn spacing(&self) -> f64 {
        self.element_spacing.unwrap_or(self.wavelength() / 2.0)
    }

    /// Side length of the square element grid, if `N` is a perfect square.
    pub fn side(&self) -> Option<usize> {
        perfect_square_root(self.n_elements)
    }

    pub fn array(&self) -> Result<RisArray> {
        let side = self.side().ok_or_else(|| {
            Error::invalid(
                "elements",
                format!("{} is not a positive perfect square", self.n_elements),
            )
        })?;
        Ok(RisArray::new(
            self.ris,
            self.wall,
            side,
            self.spacing(),
            self.wavenumber(),
        ))
    }

    pub fn tx_ris_distance(&self) -> f64 {
        distance(self.tx, self.ris)
    }

    pub fn ris_rx_distance(&self) -> f64 {
        distance(self.ris, self.rx)
    }

    pub fn tx_rx_distance(&self) -> f64 {
        distance(self.tx, self.rx)
    }

    pub fn bounds(&self) -> SceneBounds {
        SceneBounds::for_scenario(self)
    }
}

pub(crate) fn perfect_square_root(n: usize) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Orthonormal RIS frame in global coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisFrame {
    pub first_axis: Point3,
    pub second_axis: Point3,
    pub normal: Point3,
}

impl RisFrame {
    pub fn for_wall(wall: WallPlacement) -> Self {
        match wall {
            WallPlacement::SideWall => RisFrame {
                first_axis: Point3::new(1.0, 0.0, 0.0),
                second_axis: Point3::new(0.0, 0.0, 1.0),
                normal: Point3::new(0.0, -1.0, 0.0),
            },
            WallPlacement::OppositeWall => RisFrame {
                first_axis: Point3::new(0.0, 1.0, 0.0),
                second_axis: Point3::new(0.0, 0.0, 1.0),
                normal: Point3::new(-1.0, 0.0, 0.0),
            },
        }
    }
}

/// Azimuth/elevation relative to the RIS broadside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalAngles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl LocalAngles {
    pub const BROADSIDE: LocalAngles = LocalAngles {
        azimuth: 0.0,
        elevation: 0.0,
    };

    /// Unit direction in global coordinates.
    pub fn direction(self, wall: WallPlacement) -> Point3 {
        let f = RisFrame::for_wall(wall);
        let (sp, cp) = self.azimuth.sin_cos();
        let (st, ct) = self.elevation.sin_cos();
        f.first_axis * (ct * sp) + f.second_axis * st + f.normal * (ct * cp)
    }
}

pub fn local_angles(ris: Point3, wall: WallPlacement, target: Point3) -> Result<LocalAngles> {
    let d = target - ris;
    let r = d.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(Error::CoincidentPoints("target coincides with the RIS"));
    }
    let u = d * (1.0 / r);
    let f = RisFrame::for_wall(wall);
    let mut azimuth = u.dot(f.first_axis).atan2(u.dot(f.normal));
    if azimuth <= -PI {
        azimuth = PI;
    }
    let elevation = u.dot(f.second_axis).clamp(-1.0, 1.0).asin();
    Ok(LocalAngles { azimuth, elevation })
}

/// Square planar RIS placed in the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct RisArray {
    pub center: Point3,
    pub wall: WallPlacement,
    pub frame: RisFrame,
    pub side: usize,
    pub spacing: f64,
    pub wavenumber: f64,
    positions: Vec<Point3>,
}

impl RisArray {
    pub fn new(center: Point3, wall: WallPlacement, side: usize, spacing: f64, wavenumber: f64) -> Self {
        let frame = RisFrame::for_wall(wall);
        let half = (side as f64 - 1.0) / 2.0;
        let positions = (0..side)
            .flat_map(|p| (0..side).map(move |q| (p, q)))
            .map(|(p, q)| {
                center
                    + frame.first_axis * ((p as f64 - half) * spacing)
                    + frame.second_axis * ((q as f64 - half) * spacing)
            })
            .collect();
        Self {
            center,
            wall,
            frame,
            side,
            spacing,
            wavenumber,
            positions,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Element centers, element `(p, q)` at index `p * side + q`.
    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn angles_to(&self, target: Point3) -> Result<LocalAngles> {
        local_angles(self.center, self.wall, target)
    }

    /// Far-field steering vector, referenced to element `(0, 0)`.
    pub fn steering(&self, ang: LocalAngles) -> Vec<Complex64> {
        steering_vector(self.side, self.spacing, self.wavenumber, ang)
    }

    /// Spherical-wavefront response to a point source: entry `n` is
    /// `e^{-jk(r_n - r_0)}`, optionally scaled by `r_c / r_n` (amplitude of
    /// an inverse-square hop relative to the array center).
    pub fn exact_response(&self, source: Point3, scale_amplitude: bool) -> Vec<Complex64> {
        let r0 = distance(source, self.positions[0]);
        let rc = distance(source, self.center);
        self.positions
            .iter()
            .map(|&p| {
                let r = distance(source, p);
                let phase = Complex64::cis(-self.wavenumber * (r - r0));
                if scale_amplitude {
                    phase * (rc / r)
                } else {
                    phase
                }
            })
            .collect()
    }
}

fn steering_vector(side: usize, spacing: f64, wavenumber: f64, ang: LocalAngles) -> Vec<Complex64> {
    let kd = wavenumber * spacing;
    let u1 = ang.elevation.cos() * ang.azimuth.sin();
    let u2 = ang.elevation.sin();
    let rows: Vec<Complex64> = (0..side).map(|p| Complex64::cis(kd * p as f64 * u1)).collect();
    let cols: Vec<Complex64> = (0..side).map(|q| Complex64::cis(kd * q as f64 * u2)).collect();
    rows.iter().flat_map(|&r| cols.iter().map(move |&c| r * c)).collect()
}

/// Array response `a(φ, θ)` of the scenario's RIS; entry `(p, q)` is
/// `exp(j k d (p cosθ sinφ + q sinθ))`.
pub fn array_response(scn: &Scenario, ang: LocalAngles) -> Result<Vec<Complex64>> {
    let side = scn
        .side()
        .ok_or_else(|| Error::invalid("elements", format!("{} is not a perfect square", scn.n_elements)))?;
    Ok(steering_vector(side, scn.spacing(), scn.wavenumber(), ang))
}

/// Axis-aligned box holding every terminal and scatterer of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneBounds {
    pub min: Point3,
    pub max: Point3,
}

impl SceneBounds {
    pub fn for_scenario(scn: &Scenario) -> Self {
        let limit = scn.environment.cell_radius_limit();
        let mut max = Point3::new(limit, limit, scn.environment.ceiling());
        match scn.wall {
            WallPlacement::SideWall => max.y = max.y.min(scn.ris.y),
            WallPlacement::OppositeWall => max.x = max.x.min(scn.ris.x),
        }
        SceneBounds {
            min: Point3::new(0.0, 0.0, 0.0),
            max,
        }
    }

    pub fn contains(&self, p: Point3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }

    /// Clamp into the box shrunk by `margin` on every face.
    pub fn clip(&self, p: Point3, margin: f64) -> Point3 {
        let c = |v: f64, lo: f64, hi: f64| {
            let (lo, hi) = (lo + margin, hi - margin);
            if lo > hi {
                (lo + hi) / 2.0
            } else {
                v.clamp(lo, hi)
            }
        };
        Point3::new(
            c(p.x, self.min.x, self.max.x),
            c(p.y, self.min.y, self.max.y),
            c(p.z, self.min.z, self.max.z),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    NonFiniteCoordinate,
    NonSquareElements,
    InvalidElementSpacing,
    NonPositiveHeight,
    NegativeCoordinate,
    CellRadiusExceeded,
    TxHeightRange,
    RxTooHigh,
    AboveCeiling,
    TxNotOnYzPlane,
    RisNotOnWall,
    CoincidentPositions,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NonFiniteCoordinate => "NON_FINITE_COORDINATE",
            ViolationCode::NonSquareElements => "NON_SQUARE_ELEMENTS",
            ViolationCode::InvalidElementSpacing => "INVALID_ELEMENT_SPACING",
            ViolationCode::NonPositiveHeight => "NON_POSITIVE_HEIGHT",
            ViolationCode::NegativeCoordinate => "NEGATIVE_COORDINATE",
            ViolationCode::CellRadiusExceeded => "CELL_RADIUS_EXCEEDED",
            ViolationCode::TxHeightRange => "TX_HEIGHT_RANGE",
            ViolationCode::RxTooHigh => "RX_TOO_HIGH",
            ViolationCode::AboveCeiling => "ABOVE_CEILING",
            ViolationCode::TxNotOnYzPlane => "TX_NOT_ON_YZ_PLANE",
            ViolationCode::RisNotOnWall => "RIS_NOT_ON_WALL",
            ViolationCode::CoincidentPositions => "COINCIDENT_POSITIONS",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

const POSITION_TOLERANCE: f64 = 1e-9;

/// Checks a scenario against the placement rules; an empty list means valid.
pub fn validate_scenario(scn: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(Violation { code, message });
    let named = [("Tx", scn.tx), ("Rx", scn.rx), ("RIS", scn.ris)];

    for (name, p) in named {
        if !p.is_finite() {
            push(
                ViolationCode::NonFiniteCoordinate,
                format!("{name} position {p} has a non-finite coordinate"),
            );
        }
    }
    if !out.is_empty() {
        return out;
    }
    let mut push = |code, message: String| out.push(Violation { code, message });

    if scn.side().is_none() {
        push(
            ViolationCode::NonSquareElements,
            format!("N = {} must be a positive perfect square", scn.n_elements),
        );
    }
    if let Some(d) = scn.element_spacing {
        if !(d.is_finite() && d > 0.0) {
            push(
                ViolationCode::InvalidElementSpacing,
                format!("element spacing {d} m must be positive"),
            );
        }
    }

    let env = scn.environment;
    let limit = env.cell_radius_limit();
    for (name, p) in named {
        if p.z <= 0.0 {
            push(
                ViolationCode::NonPositiveHeight,
                format!("{name} height {} m must be positive", p.z),
            );
        }
        if p.x < 0.0 || p.y < 0.0 {
            push(
                ViolationCode::NegativeCoordinate,
                format!("{name} position {p} lies outside the x, y >= 0 quadrant"),
            );
        }
        if p.x.abs().max(p.y.abs()) >= limit {
            push(
                ViolationCode::CellRadiusExceeded,
                format!(
                    "{name} position {p} exceeds the {} cell radius of {limit} m",
                    env.name()
                ),
            );
        }
        if p.z > env.ceiling() {
            push(
                ViolationCode::AboveCeiling,
                format!("{name} height {} m exceeds the {} m ceiling", p.z, env.ceiling()),
            );
        }
    }

    let (lo, hi) = env.tx_height_range();
    if !(lo..=hi).contains(&scn.tx.z) {
        push(
            ViolationCode::TxHeightRange,
            format!("Tx height {} m outside [{lo}, {hi}] m for {}", scn.tx.z, env.name()),
        );
    }
    if scn.rx.z >= MAX_RX_HEIGHT {
        push(
            ViolationCode::RxTooHigh,
            format!("Rx height {} m must be below {MAX_RX_HEIGHT} m", scn.rx.z),
        );
    }
    if scn.tx.x.abs() > POSITION_TOLERANCE {
        push(
            ViolationCode::TxNotOnYzPlane,
            format!("Tx must lie on the yz plane (x = 0), got x = {}", scn.tx.x),
        );
    }

    let (wall_coord, coord): (f64, fn(Point3) -> f64) = match scn.wall {
        WallPlacement::SideWall => (scn.ris.y, |p| p.y),
        WallPlacement::OppositeWall => (scn.ris.x, |p| p.x),
    };
    for (name, p) in [("Tx", scn.tx), ("Rx", scn.rx)] {
        if coord(p) > wall_coord + POSITION_TOLERANCE {
            push(
                ViolationCode::RisNotOnWall,
                format!("{name} at {p} lies behind the RIS wall plane"),
            );
        }
    }

    for (i, (a, pa)) in named.iter().enumerate() {
        for (b, pb) in named.iter().skip(i + 1) {
            if distance(*pa, *pb) < 1e-6 {
                push(
                    ViolationCode::CoincidentPositions,
                    format!("{a} and {b} occupy the same position"),
                );
            }
        }
    }
    out
}

pub const DEFAULT_ELEMENTS: usize = 256;

/// Example placement for an environment and wall choice.
pub fn recommend_positions(environment: Environment, wall: WallPlacement) -> Scenario {
    let (tx, rx, ris) = match (environment, wall) {
        (Environment::InH, WallPlacement::SideWall) => (
            Point3::new(0.0, 25.0, 2.0),
            Point3::new(38.0, 48.0, 1.0),
            Point3::new(40.0, 50.0, 2.0),
        ),
        (Environment::InH, WallPlacement::OppositeWall) => (
            Point3::new(0.0, 25.0, 2.0),
            Point3::new(70.0, 35.0, 1.0),
            Point3::new(70.0, 30.0, 2.0),
        ),
        (Environment::UMi, WallPlacement::SideWall) => (
            Point3::new(0.0, 25.0, 20.0),
            Point3::new(50.0, 70.0, 1.0),
            Point3::new(70.0, 85.0, 10.0),
        ),
        (Environment::UMi, WallPlacement::OppositeWall) => (
            Point3::new(0.0, 25.0, 20.0),
            Point3::new(75.0, 55.0, 1.0),
            Point3::new(90.0, 60.0, 10.0),
        ),
    };
    Scenario {
        environment,
        band: Band::Ghz28,
        wall,
        tx,
        rx,
        ris,
        n_elements: DEFAULT_ELEMENTS,
        element_spacing: None,
        direct_link_present: true,
    }
}
