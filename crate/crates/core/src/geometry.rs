//! Planar pieces shared by cost regions and set descriptors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for point and graph membership tests.
pub const GEOM_TOL: f64 = 1e-12;

/// Continuous piecewise-linear function `y = f(x)` through `points`, defined
/// on `[points[0].0, points[last].0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiecewiseLinear {
    pub points: Vec<(f64, f64)>,
}

/// One linear piece of a [`PiecewiseLinear`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Segment {
    pub fn is_constant(&self) -> bool {
        self.y0 == self.y1
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.x1 == self.x0 {
            return self.y0;
        }
        self.y0 + (self.y1 - self.y0) * (x - self.x0) / (self.x1 - self.x0)
    }

    /// The `x` with `f(x) = y` on a strictly sloped segment, if inside it.
    pub fn preimage(&self, y: f64) -> Option<f64> {
        if self.is_constant() {
            return None;
        }
        let t = (y - self.y0) / (self.y1 - self.y0);
        (-GEOM_TOL..=1.0 + GEOM_TOL)
            .contains(&t)
            .then(|| self.x0 + t.clamp(0.0, 1.0) * (self.x1 - self.x0))
    }

    /// Inverse map on a strictly sloped segment (unclamped).
    pub fn inverse(&self, y: f64) -> f64 {
        self.x0 + (y - self.y0) / (self.y1 - self.y0) * (self.x1 - self.x0)
    }
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let f = PiecewiseLinear { points };
        f.validate()?;
        Ok(f)
    }

    pub fn identity() -> Self {
        PiecewiseLinear { points: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    pub fn constant(y: f64, x0: f64, x1: f64) -> Self {
        PiecewiseLinear { points: vec![(x0, y), (x1, y)] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Config("a graph needs at least two points".into()));
        }
        if self.points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Config("graph abscissae must be strictly increasing".into()));
        }
        if self
            .points
            .iter()
            .any(|&(x, y)| !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y))
        {
            return Err(Error::Config("graph points must lie in the unit square".into()));
        }
        Ok(())
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.points.windows(2).map(|w| Segment { x0: w[0].0, x1: w[1].0, y0: w[0].1, y1: w[1].1 })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        let (a, b) = self.domain();
        if x < a || x > b {
            return None;
        }
        self.segments().find(|s| x <= s.x1).map(|s| s.eval(x))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.eval(x).is_some_and(|fx| (fx - y).abs() <= GEOM_TOL)
    }

    /// Abscissae where the graph meets the horizontal line at height `y`
    /// transversally, plus the segment endpoints.
    pub fn critical_abscissae(&self, y: f64) -> Vec<f64> {
        let mut xs: Vec<f64> = self.points.iter().map(|p| p.0).collect();
        xs.extend(self.segments().filter_map(|s| s.preimage(y)));
        xs
    }
}
