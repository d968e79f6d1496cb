//! Uniform grids on the unit interval and discrete measures on their atoms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MASS_TOL: f64 = 1e-12;

/// Grid of resolution `n` on `(0, 1]`: atoms `i/n` for `i = 1..=n`, atom `i`
/// representing the half-open cell `((i-1)/n, i/n]`.
///
/// Indices are zero-based in code, so atom `k` sits at `(k+1)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("grid resolution must be positive".into()));
        }
        Ok(Grid { n })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn atom(self, k: usize) -> f64 {
        (k + 1) as f64 / self.n as f64
    }

    pub fn atoms(self) -> impl Iterator<Item = f64> {
        (0..self.n).map(move |k| self.atom(k))
    }

    /// Cell bounds `(left, right]` of atom `k`.
    pub fn cell(self, k: usize) -> (f64, f64) {
        (k as f64 / self.n as f64, self.atom(k))
    }

    /// Index of the atom whose cell contains `x`, for `x` in `(0, 1]`.
    pub fn locate(self, x: f64) -> Option<usize> {
        if !(x > 0.0 && x <= 1.0) {
            return None;
        }
        // x * n may round across a cell boundary; correct against the exact atoms
        let mut k = ((x * self.n as f64).ceil() as usize).clamp(1, self.n) - 1;
        while k > 0 && x <= self.cell(k).0 {
            k -= 1;
        }
        while k + 1 < self.n && x > self.atom(k) {
            k += 1;
        }
        Some(k)
    }
}

/// Non-negative weights on grid atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    #[serde(skip)]
    total: f64,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Input(format!("measure weight {w} is not a finite non-negative number")));
        }
        let total = weights.iter().sum();
        Ok(DiscreteMeasure { weights, total })
    }

    pub fn uniform(n: usize) -> Self {
        DiscreteMeasure::new(vec![1.0 / n as f64; n]).expect("uniform weights are valid")
    }

    pub fn zeros(n: usize) -> Self {
        DiscreteMeasure { weights: vec![0.0; n], total: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_probability(&self) -> bool {
        (self.total - 1.0).abs() <= MASS_TOL
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.weights[k] > 0.0).collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Pointwise product `f * self`.
    pub fn reweighted(&self, density: &[f64]) -> Result<Self> {
        if density.len() != self.len() {
            return Err(Error::Input("density length does not match measure".into()));
        }
        DiscreteMeasure::new(self.weights.iter().zip(density).map(|(w, f)| w * f).collect())
    }

    /// Integral of `values` against the measure.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// Atomless marginal on `[0, 1]`, given by a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalSpec {
    Uniform,
    /// Density `densities[k]` on `[breaks[k], breaks[k+1])`.
    PiecewiseConstant { breaks: Vec<f64>, densities: Vec<f64> },
    /// Point masses. Representable so it can be rejected explicitly.
    Atoms { points: Vec<f64>, weights: Vec<f64> },
}

impl MarginalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MarginalSpec::Uniform => Ok(()),
            MarginalSpec::PiecewiseConstant { breaks, densities } => {
                if breaks.len() != densities.len() + 1 || densities.is_empty() {
                    return Err(Error::Config("piecewise density needs len(breaks) = len(densities) + 1".into()));
                }
                if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
                    return Err(Error::Config("density breakpoints must start at 0 and end at 1".into()));
                }
                if breaks.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Config("density breakpoints must be strictly increasing".into()));
                }
                if densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(Error::Config("densities must be finite and non-negative".into()));
                }
                let mass = self.measure_of(0.0, 1.0)?;
                if (mass - 1.0).abs() > MASS_TOL {
                    return Err(Error::Config(format!("density integrates to {mass}, expected 1")));
                }
                Ok(())
            }
            MarginalSpec::Atoms { .. } => Err(Error::Unsupported(
                "marginals with atoms are not supported; use a density".into(),
            )),
        }
    }

    pub fn is_atomless(&self) -> bool {
        !matches!(self, MarginalSpec::Atoms { .. })
    }

    /// Mass of the interval `[a, b]` (endpoints are null sets).
    pub fn measure_of(&self, a: f64, b: f64) -> Result<f64> {
        let (a, b) = (a.max(0.0), b.min(1.0));
        if b <= a {
            return Ok(0.0);
        }
        match self {
            MarginalSpec::Uniform => Ok(b - a),
            MarginalSpec::PiecewiseConstant { breaks, densities } => Ok(breaks
                .windows(2)
                .zip(densities)
                .map(|(w, d)| {
                    let lo = w[0].max(a);
                    let hi = w[1].min(b);
                    if hi > lo {
                        d * (hi - lo)
                    } else {
                        0.0
                    }
                })
                .sum()),
            MarginalSpec::Atoms { .. } => Err(Error::Unsupported("atomic marginal".into())),
        }
    }

    /// Density value at `x`; breakpoints belong to the piece on their right.
    pub fn density_at(&self, x: f64) -> Result<f64> {
        match self {
            MarginalSpec::Uniform => Ok(1.0),
            MarginalSpec::PiecewiseConstant { breaks, densities } => {
                let k = breaks[1..].iter().position(|&b| x < b).unwrap_or(densities.len() - 1);
                Ok(densities[k])
            }
            MarginalSpec::Atoms { .. } => Err(Error::Unsupported("atomic marginal".into())),
        }
    }

    /// Points where the density may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            MarginalSpec::PiecewiseConstant { breaks, .. } => breaks.clone(),
            _ => vec![0.0, 1.0],
        }
    }

    /// Integrates the density over every cell of `grid`.
    pub fn discretize(&self, grid: Grid) -> Result<DiscreteMeasure> {
        self.validate()?;
        let weights = (0..grid.n())
            .map(|k| {
                let (a, b) = grid.cell(k);
                self.measure_of(a, b)
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(weights)
    }
}
