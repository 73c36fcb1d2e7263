//! Planar geometry in canonical units: integer nanometers for lengths and
//! integer micro-degrees for angles, so poses survive serialization exactly.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MICRODEG_PER_DEG: i64 = 1_000_000;
pub const FULL_TURN: i64 = 360 * MICRODEG_PER_DEG;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    pub fn translate(self, dx: i64, dy: i64) -> Self {
        Point::new(self.x + dx, self.y + dy)
    }

    pub fn dist2(self, other: Point) -> i128 {
        let dx = (self.x - other.x) as i128;
        let dy = (self.y - other.y) as i128;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

/// An orientation, normalized to `[0, 360)` degrees and stored in
/// micro-degrees. Serializes as floating degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Angle(i64);

impl Angle {
    pub const ZERO: Angle = Angle(0);

    pub fn from_microdeg(u: i64) -> Self {
        Angle(u.rem_euclid(FULL_TURN))
    }

    /// Rounds to the nearest micro-degree.
    pub fn from_degrees(deg: f64) -> Self {
        Angle::from_microdeg((deg * MICRODEG_PER_DEG as f64).round() as i64)
    }

    pub fn microdeg(self) -> i64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0 as f64 / MICRODEG_PER_DEG as f64
    }

    pub fn radians(self) -> f64 {
        self.degrees().to_radians()
    }

    pub fn rotate_by(self, delta_microdeg: i64) -> Self {
        Angle::from_microdeg(self.0 + delta_microdeg)
    }

    /// Shortest-arc separation in micro-degrees, in `[0, 180°]`.
    pub fn arc_distance(self, other: Angle) -> i64 {
        let d = (self.0 - other.0).rem_euclid(FULL_TURN);
        d.min(FULL_TURN - d)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let deg = f64::deserialize(d)?;
        if !deg.is_finite() {
            return Err(serde::de::Error::custom("non-finite angle"));
        }
        Ok(Angle::from_degrees(deg))
    }
}

/// Axis-aligned rectangle anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub width_nm: i64,
    pub height_nm: i64,
}

impl Region {
    pub fn new(width_nm: i64, height_nm: i64) -> Self {
        Region { width_nm, height_nm }
    }

    pub fn area_nm2(&self) -> i128 {
        self.width_nm as i128 * self.height_nm as i128
    }

    pub fn contains(&self, p: Point) -> bool {
        (0..=self.width_nm).contains(&p.x) && (0..=self.height_nm).contains(&p.y)
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0, self.width_nm), p.y.clamp(0, self.height_nm))
    }
}

/// Rotates an offset counter-clockwise: 90° maps `(x, y)` to `(-y, x)`.
pub fn rotate(offset: (i64, i64), angle: Angle) -> (f64, f64) {
    match angle.microdeg() {
        0 => return (offset.0 as f64, offset.1 as f64),
        u if u == 90 * MICRODEG_PER_DEG => return (-offset.1 as f64, offset.0 as f64),
        u if u == 180 * MICRODEG_PER_DEG => return (-offset.0 as f64, -offset.1 as f64),
        u if u == 270 * MICRODEG_PER_DEG => return (offset.1 as f64, -offset.0 as f64),
        _ => {}
    }
    let (s, c) = angle.radians().sin_cos();
    let (x, y) = (offset.0 as f64, offset.1 as f64);
    (x * c - y * s, x * s + y * c)
}

/// A rectangle of size `w × h` centered at `center`, rotated by `angle`.
#[derive(Debug, Clone, Copy)]
pub struct OrientedRect {
    pub center: (f64, f64),
    pub half: (f64, f64),
    /// Unit vectors of the local x and y axes.
    pub axes: [(f64, f64); 2],
}

impl OrientedRect {
    pub fn new(center: Point, size: (i64, i64), angle: Angle) -> Self {
        let ax = rotate((1, 0), angle);
        let ay = rotate((0, 1), angle);
        OrientedRect {
            center: (center.x as f64, center.y as f64),
            half: (size.0 as f64 / 2.0, size.1 as f64 / 2.0),
            axes: [ax, ay],
        }
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        let (cx, cy) = self.center;
        let [ax, ay] = self.axes;
        let (hx, hy) = self.half;
        let p = |sx: f64, sy: f64| (cx + sx * hx * ax.0 + sy * hy * ay.0, cy + sx * hx * ax.1 + sy * hy * ay.1);
        [p(-1.0, -1.0), p(1.0, -1.0), p(1.0, 1.0), p(-1.0, 1.0)]
    }

    /// Radius of the circumscribed circle.
    pub fn radius(&self) -> f64 {
        self.half.0.hypot(self.half.1)
    }

    /// True when `(x, y)` lies strictly inside the rectangle.
    pub fn contains_strict(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let u = dx * self.axes[0].0 + dy * self.axes[0].1;
        let v = dx * self.axes[1].0 + dy * self.axes[1].1;
        const EPS: f64 = 1e-9;
        u.abs() < self.half.0 - EPS && v.abs() < self.half.1 - EPS
    }

    fn project(&self, axis: (f64, f64)) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (x, y) in self.corners() {
            let p = x * axis.0 + y * axis.1;
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }

    /// Separating-axis test. Touching rectangles count as intersecting.
    pub fn intersects(&self, other: &OrientedRect) -> bool {
        let (dx, dy) = (other.center.0 - self.center.0, other.center.1 - self.center.1);
        let reach = self.radius() + other.radius();
        if dx * dx + dy * dy > reach * reach * (1.0 + 1e-12) {
            return false;
        }
        const EPS: f64 = 1e-9;
        for axis in self.axes.iter().chain(other.axes.iter()) {
            let (a0, a1) = self.project(*axis);
            let (b0, b1) = other.project(*axis);
            if a1 < b0 - EPS || b1 < a0 - EPS {
                return false;
            }
        }
        true
    }
}
