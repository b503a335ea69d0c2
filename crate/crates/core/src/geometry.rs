//! Surface layout, scenario coordinates and receiver trajectories.
//!
//! The surface frame has its origin at the RIS center, `x` pointing right
//! along the surface, `y` pointing up and `z` along the broadside normal.
//! Scenario positions are given in polar form (distance from the center,
//! azimuth from broadside, positive toward `+x`) with an optional height.

use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// A point or displacement in the surface frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    /// The point mirrored through the `y`–`z` plane.
    pub fn mirror_x(&self) -> Self {
        Self::new(-self.x, self.y, self.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

/// Tiling of identical rectangular modules into one surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisLayout {
    modules_x: usize,
    modules_y: usize,
    elems_per_module_x: usize,
    elems_per_module_y: usize,
    module_width: f64,
    module_height: f64,
}

impl RisLayout {
    pub fn new(
        modules_x: usize,
        modules_y: usize,
        elems_per_module_x: usize,
        elems_per_module_y: usize,
        module_width: f64,
        module_height: f64,
    ) -> Result<Self> {
        if modules_x == 0 || modules_y == 0 || elems_per_module_x == 0 || elems_per_module_y == 0 {
            return Err(Error::InvalidLayout("all counts must be at least 1".into()));
        }
        if !(module_width > 0.0 && module_width.is_finite())
            || !(module_height > 0.0 && module_height.is_finite())
        {
            return Err(Error::InvalidLayout(format!(
                "module dimensions must be positive, got {module_width} x {module_height}"
            )));
        }
        Ok(Self {
            modules_x,
            modules_y,
            elems_per_module_x,
            elems_per_module_y,
            module_width,
            module_height,
        })
    }

    pub fn modules_x(&self) -> usize {
        self.modules_x
    }
    pub fn modules_y(&self) -> usize {
        self.modules_y
    }
    pub fn elems_per_module_x(&self) -> usize {
        self.elems_per_module_x
    }
    pub fn elems_per_module_y(&self) -> usize {
        self.elems_per_module_y
    }
    pub fn module_width(&self) -> f64 {
        self.module_width
    }
    pub fn module_height(&self) -> f64 {
        self.module_height
    }

    /// Element columns across the whole surface.
    pub fn columns(&self) -> usize {
        self.modules_x * self.elems_per_module_x
    }

    /// Element rows across the whole surface.
    pub fn rows(&self) -> usize {
        self.modules_y * self.elems_per_module_y
    }

    pub fn element_count(&self) -> usize {
        self.columns() * self.rows()
    }

    pub fn pitch_x(&self) -> f64 {
        self.module_width / self.elems_per_module_x as f64
    }

    pub fn pitch_y(&self) -> f64 {
        self.module_height / self.elems_per_module_y as f64
    }

    /// Overall (width, height) of the surface in meters.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.modules_x as f64 * self.module_width,
            self.modules_y as f64 * self.module_height,
        )
    }
}

impl Default for RisLayout {
    /// Twelve 360 mm x 247 mm modules of 16 x 16 elements, three across and
    /// four high.
    fn default() -> Self {
        Self {
            modules_x: 3,
            modules_y: 4,
            elems_per_module_x: 16,
            elems_per_module_y: 16,
            module_width: 0.360,
            module_height: 0.247,
        }
    }
}

/// Position of an element within the global element grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCell {
    /// Global row, 0 at the bottom edge.
    pub row: usize,
    /// Global column, 0 at the left (`-x`) edge.
    pub column: usize,
}

/// Element positions of a built surface.
#[derive(Debug, Clone, PartialEq)]
pub struct RisGeometry {
    layout: RisLayout,
    positions: Vec<Point3>,
    cells: Vec<GridCell>,
}

impl RisGeometry {
    pub fn layout(&self) -> &RisLayout {
        &self.layout
    }

    pub fn element_positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Lays out all elements with abutting modules and the centroid at the origin.
///
/// Elements are ordered row-major over modules (bottom module row first),
/// then row-major within each module.
pub fn build_geometry(layout: &RisLayout) -> RisGeometry {
    let px = layout.pitch_x();
    let py = layout.pitch_y();
    let half_w = layout.columns() as f64 * px / 2.0;
    let half_h = layout.rows() as f64 * py / 2.0;

    let n = layout.element_count();
    let mut positions = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n);
    for my in 0..layout.modules_y {
        for mx in 0..layout.modules_x {
            for ey in 0..layout.elems_per_module_y {
                for ex in 0..layout.elems_per_module_x {
                    let row = my * layout.elems_per_module_y + ey;
                    let column = mx * layout.elems_per_module_x + ex;
                    positions.push(Point3::new(
                        (column as f64 + 0.5) * px - half_w,
                        (row as f64 + 0.5) * py - half_h,
                        0.0,
                    ));
                    cells.push(GridCell { row, column });
                }
            }
        }
    }
    RisGeometry {
        layout: *layout,
        positions,
        cells,
    }
}

/// Antenna position relative to the RIS center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    distance: f64,
    angle_deg: f64,
    height: f64,
}

impl PolarPoint {
    /// A point at the height of the RIS center.
    pub fn new(distance: f64, angle_deg: f64) -> Result<Self> {
        Self::with_height(distance, angle_deg, 0.0)
    }

    pub fn with_height(distance: f64, angle_deg: f64, height: f64) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "distance must be positive, got {distance}"
            )));
        }
        if !(angle_deg > -90.0 && angle_deg < 90.0) {
            return Err(Error::InvalidPoint(format!(
                "angle must lie in (-90, 90) degrees, got {angle_deg}"
            )));
        }
        if !height.is_finite() {
            return Err(Error::InvalidPoint(format!(
                "height must be finite, got {height}"
            )));
        }
        Ok(Self {
            distance,
            angle_deg,
            height,
        })
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn to_cartesian(&self) -> Point3 {
        polar_to_cartesian(self)
    }
}

pub fn polar_to_cartesian(p: &PolarPoint) -> Point3 {
    let a = p.angle_deg.to_radians();
    Point3::new(p.distance * a.sin(), p.height, p.distance * a.cos())
}

/// Distance from `point` to every element, in element order.
pub fn element_distances(geom: &RisGeometry, point: &Point3) -> Result<Vec<f64>> {
    geom.positions
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let d = e.distance(point);
            if d > 0.0 {
                Ok(d)
            } else {
                Err(Error::DegenerateGeometry { index })
            }
        })
        .collect()
}

/// Linear receiver motion in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub start: PolarPoint,
    /// m/s
    pub radial_speed: f64,
    /// deg/s
    pub angular_speed: f64,
    /// s
    pub duration: f64,
    /// Hz
    pub sample_rate: f64,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidTrajectory(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::InvalidTrajectory(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if !self.radial_speed.is_finite() || !self.angular_speed.is_finite() {
            return Err(Error::InvalidTrajectory("speeds must be finite".into()));
        }
        Ok(())
    }

    /// Number of samples covering `[0, duration]`.
    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate + 1e-9).floor() as usize + 1
    }

    /// Position at time `t`, without bounds checks on the trajectory.
    pub fn position_at(&self, t: f64) -> Result<PolarPoint> {
        PolarPoint::with_height(
            self.start.distance + self.radial_speed * t,
            self.start.angle_deg + self.angular_speed * t,
            self.start.height,
        )
        .map_err(|e| Error::InvalidTrajectory(format!("at t = {t} s: {e}")))
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub position: PolarPoint,
}

pub fn sample_trajectory(spec: &TrajectorySpec) -> Result<Vec<TrajectorySample>> {
    spec.validate()?;
    (0..spec.sample_count())
        .map(|k| {
            let time = k as f64 / spec.sample_rate;
            spec.position_at(time)
                .map(|position| TrajectorySample { time, position })
        })
        .collect()
}
