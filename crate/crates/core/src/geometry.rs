//! Planar points, cone partial orders, and axis-aligned regions.
//!
//! A cone order `(theta, phi)` declares `y` a predecessor of `x` when the
//! direction of `y - x` lies in the closed angular sector starting at angle
//! `theta` and sweeping anticlockwise by `phi`, with angles measured
//! anticlockwise from the upward vertical `(0, 1)`. Opening angles in
//! `(pi, 2*pi)` are rejected: the relation stops being transitive there.
//! `phi = 2*pi` is allowed and degenerates to "every other point qualifies"
//! (the directed nearest-neighbour graph).

use thiserror::Error;

/// Angular tolerance used to snap a requested cone onto the two special
/// cases with exact arithmetic (the coordinatewise order and the full cone).
const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("cone angles must be finite, got theta={theta}, phi={phi}")]
    NonFiniteAngle { theta: f64, phi: f64 },
    #[error("cone opening must lie in (0, pi] or equal 2*pi, got phi={phi}")]
    InvalidOpening { phi: f64 },
    #[error("rectangle bounds must be finite with lo <= hi, got ({x_lo}, {x_hi}] x ({y_lo}, {y_hi}]")]
    InvalidRect {
        x_lo: f64,
        x_hi: f64,
        y_lo: f64,
        y_hi: f64,
    },
}

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Squared Euclidean distance. Exact comparisons on these values are the
    /// tie-breaking currency of the forest builders, so every caller must go
    /// through this one expression.
    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// How `precedes` is dispatched. The quadrant case must use exact
/// coordinatewise comparisons: evaluating it through rotated rays would move
/// the boundary by one rounding step and silently change which points are
/// comparable.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ConeKind {
    /// `(theta, phi) = (pi/2, pi/2)`: `y <= x` coordinatewise.
    Quadrant,
    /// `phi = 2*pi`: every point precedes every other.
    Full,
    /// Anything else: sign tests against the two boundary rays.
    General,
}

/// A cone partial order on the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeOrder {
    theta: f64,
    phi: f64,
    kind: ConeKind,
    /// Unit direction of the ray at angle `theta`.
    ray_lo: (f64, f64),
    /// Unit direction of the ray at angle `theta + phi`.
    ray_hi: (f64, f64),
}

/// Direction of the ray at `angle`, measured anticlockwise from `(0, 1)`.
fn ray(angle: f64) -> (f64, f64) {
    (-angle.sin(), angle.cos())
}

#[inline]
fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

impl ConeOrder {
    /// The coordinatewise partial order `y <= x` in both coordinates.
    pub fn coordinatewise() -> Self {
        // Unwrap is fine: the angles are in range by construction.
        ConeOrder::new(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2).unwrap()
    }

    /// Full cone: the directed nearest-neighbour graph order.
    pub fn full() -> Self {
        ConeOrder::new(0.0, std::f64::consts::TAU).unwrap()
    }

    /// Build a cone order. `theta` is normalised into `[0, 2*pi)`; `phi`
    /// must lie in `(0, pi]` or equal `2*pi` (within `1e-12`).
    pub fn new(theta: f64, phi: f64) -> Result<Self, GeometryError> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(GeometryError::NonFiniteAngle { theta, phi });
        }
        let full = (phi - std::f64::consts::TAU).abs() <= SNAP_TOL;
        if !full && !(phi > 0.0 && phi <= std::f64::consts::PI) {
            return Err(GeometryError::InvalidOpening { phi });
        }
        let theta = theta.rem_euclid(std::f64::consts::TAU);
        let kind = if full {
            ConeKind::Full
        } else if (theta - std::f64::consts::FRAC_PI_2).abs() <= SNAP_TOL
            && (phi - std::f64::consts::FRAC_PI_2).abs() <= SNAP_TOL
        {
            ConeKind::Quadrant
        } else {
            ConeKind::General
        };
        Ok(ConeOrder {
            theta,
            phi,
            kind,
            ray_lo: ray(theta),
            ray_hi: ray(theta + phi),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// True when the order is the coordinatewise one.
    pub fn is_coordinatewise(&self) -> bool {
        self.kind == ConeKind::Quadrant
    }

    /// True when the cone is the whole plane.
    pub fn is_full(&self) -> bool {
        self.kind == ConeKind::Full
    }

    /// Does `y` precede `x`? The cone is closed: directions exactly along a
    /// boundary ray count. A point precedes itself.
    #[inline]
    pub fn precedes(&self, y: &Point, x: &Point) -> bool {
        let d = (y.x - x.x, y.y - x.y);
        if d.0 == 0.0 && d.1 == 0.0 {
            return true;
        }
        match self.kind {
            ConeKind::Quadrant => y.x <= x.x && y.y <= x.y,
            ConeKind::Full => true,
            // `d` lies between the rays iff it is anticlockwise of `ray_lo`
            // and clockwise of `ray_hi`; for phi <= pi the two half-plane
            // tests cut out exactly the closed sector.
            ConeKind::General => cross(self.ray_lo, d) >= 0.0 && cross(self.ray_hi, d) <= 0.0,
        }
    }
}

/// `length^alpha` with cheap paths for the exponents the experiments use
/// constantly. All weight computations funnel through here so that the same
/// rounding applies everywhere.
#[inline]
pub fn pow_weight(length: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        length
    } else if alpha == 2.0 {
        length * length
    } else {
        length.powf(alpha)
    }
}

/// Edge weight between two points: Euclidean distance to the power `alpha`.
pub fn power_weight(x: &Point, y: &Point, alpha: f64) -> f64 {
    pow_weight(x.dist(y), alpha)
}

/// Half-open axis-aligned rectangle `(x_lo, x_hi] x (y_lo, y_hi]`.
///
/// Half-openness matches the unit square `(0, 1]^2` the point processes live
/// on: the origin itself is outside every region, and abutting regions
/// partition points without double counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self, GeometryError> {
        let fin = x_lo.is_finite() && x_hi.is_finite() && y_lo.is_finite() && y_hi.is_finite();
        if !fin || x_lo > x_hi || y_lo > y_hi {
            return Err(GeometryError::InvalidRect {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            });
        }
        Ok(Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        })
    }

    /// The unit square `(0, 1]^2`.
    pub fn unit() -> Self {
        Rect {
            x_lo: 0.0,
            x_hi: 1.0,
            y_lo: 0.0,
            y_hi: 1.0,
        }
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        p.x > self.x_lo && p.x <= self.x_hi && p.y > self.y_lo && p.y <= self.y_hi
    }
}
