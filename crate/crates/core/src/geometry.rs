//! Scene layout: base-station pose, array geometry, user grids, and the
//! coordinate transforms used by the tracer and the feature pipeline.
//!
//! All in-memory angles are radians, measured counterclockwise from the +x
//! axis; the JSON scene format stores angles in degrees (fields carry a
//! `_deg` suffix) and frequencies in GHz so files stay human-editable.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the horizontal plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const ZERO: Position = Position { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance_to(&self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Per-element radiation pattern. Only isotropic elements are modeled; the
/// enum exists so the channel synthesis has an explicit place where pattern
/// gain enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementPattern {
    Isotropic,
}

impl ElementPattern {
    /// Amplitude gain toward `azimuth` (radians relative to boresight).
    pub fn gain(&self, _azimuth: f64) -> f64 {
        match self {
            ElementPattern::Isotropic => 1.0,
        }
    }
}

/// Uniform linear array at the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub num_elements: usize,
    /// Element spacing as a fraction of the carrier wavelength.
    pub element_spacing: f64,
    /// Array boresight azimuth in radians.
    pub boresight_azimuth: f64,
    pub element_pattern: ElementPattern,
}

impl ArrayConfig {
    /// Half-wavelength ULA with boresight along +x.
    pub fn new(num_elements: usize) -> Self {
        ArrayConfig {
            num_elements,
            element_spacing: 0.5,
            boresight_azimuth: 0.0,
            element_pattern: ElementPattern::Isotropic,
        }
    }

    pub fn with_boresight(mut self, azimuth: f64) -> Self {
        self.boresight_azimuth = azimuth;
        self
    }

    fn validate(&self, field: &str) -> Result<()> {
        if self.num_elements == 0 {
            return Err(Error::invalid(
                format!("{field}.num_elements"),
                "array needs at least one element",
            ));
        }
        if !(self.element_spacing > 0.0) || !self.element_spacing.is_finite() {
            return Err(Error::invalid(
                format!("{field}.element_spacing"),
                "spacing must be a positive wavelength fraction",
            ));
        }
        if !self.boresight_azimuth.is_finite() {
            return Err(Error::invalid(
                format!("{field}.boresight_azimuth"),
                "boresight must be finite",
            ));
        }
        Ok(())
    }
}

/// Axis-aligned rectangle of candidate user positions, discretized on a
/// square lattice anchored at `origin` (its lower-left corner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeGridRect {
    pub origin: Position,
    pub width: f64,
    pub height: f64,
    /// Lattice pitch in meters.
    #[serde(default = "default_grid_spacing")]
    pub spacing: f64,
}

fn default_grid_spacing() -> f64 {
    0.1
}

impl UeGridRect {
    pub fn new(origin: Position, width: f64, height: f64, spacing: f64) -> Self {
        UeGridRect {
            origin,
            width,
            height,
            spacing,
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !self.origin.is_finite() {
            return Err(Error::invalid(
                format!("{field}.origin"),
                "origin must be finite",
            ));
        }
        if !(self.width >= 0.0) || !self.width.is_finite() {
            return Err(Error::invalid(
                format!("{field}.width"),
                "width must be finite and non-negative",
            ));
        }
        if !(self.height >= 0.0) || !self.height.is_finite() {
            return Err(Error::invalid(
                format!("{field}.height"),
                "height must be finite and non-negative",
            ));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::invalid(
                format!("{field}.spacing"),
                "spacing must be positive",
            ));
        }
        Ok(())
    }
}

/// Complete scene description: one base station plus the user grids it
/// serves.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub bs_position: Position,
    pub array: ArrayConfig,
    pub grids: Vec<UeGridRect>,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.bs_position.is_finite() {
            return Err(Error::invalid("bs_position", "must be finite"));
        }
        self.array.validate("array")?;
        if self.grids.is_empty() {
            return Err(Error::invalid("grids", "scene needs at least one grid"));
        }
        for (i, grid) in self.grids.iter().enumerate() {
            grid.validate(&format!("grids[{i}]"))?;
        }
        if !(self.carrier_frequency > 0.0) || !self.carrier_frequency.is_finite() {
            return Err(Error::invalid(
                "carrier_frequency",
                "carrier must be a positive frequency in Hz",
            ));
        }
        Ok(())
    }

    /// Serializes to the JSON file format (degrees / GHz units).
    pub fn to_json(&self) -> Result<String> {
        let file = SceneFile::from_spec(self);
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses the JSON file format and validates the result.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        let spec = file.into_spec();
        spec.validate()?;
        Ok(spec)
    }
}

/// On-disk form of [`SceneSpec`]: angles in degrees, frequency in GHz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub bs_position: Position,
    pub array: ArrayFile,
    pub grids: Vec<UeGridRect>,
    pub carrier_frequency_ghz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayFile {
    pub num_elements: usize,
    #[serde(default = "default_element_spacing")]
    pub element_spacing: f64,
    #[serde(default)]
    pub boresight_azimuth_deg: f64,
    #[serde(default = "default_pattern")]
    pub element_pattern: ElementPattern,
}

fn default_element_spacing() -> f64 {
    0.5
}

fn default_pattern() -> ElementPattern {
    ElementPattern::Isotropic
}

impl SceneFile {
    pub fn from_spec(spec: &SceneSpec) -> Self {
        SceneFile {
            bs_position: spec.bs_position,
            array: ArrayFile {
                num_elements: spec.array.num_elements,
                element_spacing: spec.array.element_spacing,
                boresight_azimuth_deg: spec.array.boresight_azimuth.to_degrees(),
                element_pattern: spec.array.element_pattern,
            },
            grids: spec.grids.clone(),
            carrier_frequency_ghz: spec.carrier_frequency / 1e9,
        }
    }

    pub fn into_spec(self) -> SceneSpec {
        SceneSpec {
            bs_position: self.bs_position,
            array: ArrayConfig {
                num_elements: self.array.num_elements,
                element_spacing: self.array.element_spacing,
                boresight_azimuth: self.array.boresight_azimuth_deg.to_radians(),
                element_pattern: self.array.element_pattern,
            },
            grids: self.grids,
            carrier_frequency: self.carrier_frequency_ghz * 1e9,
        }
    }
}

/// Wraps an angle to the interval (-pi, pi].
///
/// Values already inside the interval are returned bit-exactly so that
/// `atan2` outputs pass through untouched.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let two_pi = 2.0 * PI;
    let mut wrapped = (angle + PI).rem_euclid(two_pi);
    // rem_euclid lands in [0, 2*pi); zero corresponds to the seam, which the
    // half-open convention assigns to +pi.
    if wrapped == 0.0 {
        wrapped = two_pi;
    }
    wrapped - PI
}

/// Enumerates every lattice point of every grid, row-major within each grid
/// (y varies slowest), grids in declaration order.
///
/// Each axis carries `floor(extent / spacing) + 1` points; a 1e-9 relative
/// nudge absorbs the binary rounding of decimal spacings so that e.g. a
/// 1.0 m extent at 0.1 m pitch yields exactly 11 points. Points are clamped
/// into the rectangle so accumulated step error cannot escape it.
pub fn discretize_grids(scene: &SceneSpec) -> Vec<Position> {
    let mut points = Vec::new();
    for rect in &scene.grids {
        let cols = axis_count(rect.width, rect.spacing);
        let rows = axis_count(rect.height, rect.spacing);
        for row in 0..rows {
            let y = (rect.origin.y + row as f64 * rect.spacing).min(rect.origin.y + rect.height);
            for col in 0..cols {
                let x =
                    (rect.origin.x + col as f64 * rect.spacing).min(rect.origin.x + rect.width);
                points.push(Position::new(x, y));
            }
        }
    }
    points
}

fn axis_count(extent: f64, spacing: f64) -> usize {
    (extent / spacing + 1e-9).floor() as usize + 1
}

/// Converts `point` to polar coordinates `(distance, azimuth)` about
/// `origin`. Azimuth is measured from +x, wrapped to (-pi, pi]; the origin
/// itself maps to `(0.0, 0.0)` by convention.
pub fn to_polar(point: Position, origin: Position) -> (f64, f64) {
    let dx = point.x - origin.x;
    let dy = point.y - origin.y;
    let distance = dx.hypot(dy);
    if distance == 0.0 {
        return (0.0, 0.0);
    }
    (distance, wrap_angle(dy.atan2(dx)))
}

/// Angle of arrival at the base station for a user at `point`, measured
/// relative to the array boresight and wrapped to (-pi, pi].
///
/// Errors with [`Error::CoincidentWithBs`] when the user sits exactly on the
/// base station.
pub fn aoa_at_bs(point: Position, scene: &SceneSpec) -> Result<f64> {
    if point == scene.bs_position {
        return Err(Error::CoincidentWithBs);
    }
    let (_, azimuth) = to_polar(point, scene.bs_position);
    Ok(wrap_angle(azimuth - scene.array.boresight_azimuth))
}
