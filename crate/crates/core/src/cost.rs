//! Declarative cost descriptors on the unit square and their grid samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::geometry::{PiecewiseLinear, GEOM_TOL};
use crate::grid::Grid;
use crate::plan::TransportPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

/// Geometric support of one cost region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    /// `y < x`
    BelowDiagonal,
    /// `x = y`
    Diagonal,
    /// `x < y`
    AboveDiagonal,
    /// Half-open box `(x0, x1] x (y0, y1]`.
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Graph { graph: PiecewiseLinear },
    PointSet { points: Vec<(f64, f64)> },
    /// Symbolic modification on a product-null set; never matched by sampling.
    CountableMarker { label: String },
    /// All points whose `axis` coordinate avoids every open interval.
    ComplementOfIntervals { intervals: Vec<(f64, f64)>, axis: Axis },
}

impl RegionKind {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            RegionKind::BelowDiagonal => y < x,
            RegionKind::Diagonal => x == y,
            RegionKind::AboveDiagonal => x < y,
            RegionKind::Rectangle { x0, x1, y0, y1 } => *x0 < x && x <= *x1 && *y0 < y && y <= *y1,
            RegionKind::Graph { graph } => graph.contains(x, y),
            RegionKind::PointSet { points } => points
                .iter()
                .any(|&(px, py)| (px - x).abs() <= GEOM_TOL && (py - y).abs() <= GEOM_TOL),
            RegionKind::CountableMarker { .. } => false,
            RegionKind::ComplementOfIntervals { intervals, axis } => {
                let t = match axis {
                    Axis::X => x,
                    Axis::Y => y,
                };
                !intervals.iter().any(|&(a, b)| a < t && t < b)
            }
        }
    }

    /// Membership of the grid atom `(i, j)`; the diagonal regions compare
    /// indices, not coordinates.
    pub fn contains_atom(&self, grid: Grid, i: usize, j: usize) -> bool {
        match self {
            RegionKind::BelowDiagonal => j < i,
            RegionKind::Diagonal => i == j,
            RegionKind::AboveDiagonal => i < j,
            other => other.contains(grid.atom(i), grid.atom(j)),
        }
    }

    /// Abscissae in which `x -> [ (x, y) in region ]` may change, at height `y`.
    fn x_breakpoints(&self, y: f64, out: &mut Vec<f64>) {
        match self {
            RegionKind::BelowDiagonal | RegionKind::Diagonal | RegionKind::AboveDiagonal => out.push(y),
            RegionKind::Rectangle { x0, x1, .. } => out.extend([*x0, *x1]),
            RegionKind::Graph { graph } => out.extend(graph.critical_abscissae(y)),
            RegionKind::PointSet { points } => out.extend(points.iter().map(|p| p.0)),
            RegionKind::CountableMarker { .. } => {}
            RegionKind::ComplementOfIntervals { intervals, axis: Axis::X } => {
                out.extend(intervals.iter().flat_map(|&(a, b)| [a, b]))
            }
            RegionKind::ComplementOfIntervals { axis: Axis::Y, .. } => {}
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RegionKind::Rectangle { x0, x1, y0, y1 } => {
                if [x0, x1, y0, y1].iter().any(|v| !v.is_finite()) || x1 < x0 || y1 < y0 {
                    return Err(Error::Config(format!("bad rectangle ({x0},{x1}]x({y0},{y1}]")));
                }
                Ok(())
            }
            RegionKind::Graph { graph } => graph.validate(),
            RegionKind::ComplementOfIntervals { intervals, .. } => {
                if intervals.iter().any(|(a, b)| !(a <= b)) {
                    return Err(Error::Config("excluded interval with a > b".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(flatten)]
    pub kind: RegionKind,
    pub value: ExtendedReal,
}

impl Region {
    pub fn new(kind: RegionKind, value: ExtendedReal) -> Self {
        Region { kind, value }
    }
}

/// Ordered list of regions; later regions override earlier ones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostDescriptor {
    pub regions: Vec<Region>,
}

/// How a descriptor is turned into a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// `C[i][j] = c(x_i, y_j)` at the atoms.
    #[default]
    Atom,
    /// `C[i][j]` = average of `c(., y_j)` over the cell of `x_i`, computed
    /// exactly from the region breakpoints.
    CellAverage,
}

impl CostDescriptor {
    pub fn new(regions: Vec<Region>) -> Self {
        CostDescriptor { regions }
    }

    pub fn constant(value: ExtendedReal) -> Self {
        CostDescriptor::new(vec![Region::new(
            RegionKind::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 },
            value,
        )])
    }

    pub fn push(&mut self, kind: RegionKind, value: ExtendedReal) {
        self.regions.push(Region::new(kind, value));
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::Config("cost descriptor has no regions".into()));
        }
        self.regions.iter().try_for_each(|r| r.kind.validate())
    }

    /// Value of the last region containing `(x, y)`.
    pub fn sample(&self, x: f64, y: f64) -> Result<ExtendedReal> {
        self.regions
            .iter()
            .rev()
            .find(|r| r.kind.contains(x, y))
            .map(|r| r.value)
            .ok_or_else(|| Error::Config(format!("no cost region contains ({x}, {y})")))
    }

    pub fn sample_atom(&self, grid: Grid, i: usize, j: usize) -> Result<ExtendedReal> {
        self.regions
            .iter()
            .rev()
            .find(|r| r.kind.contains_atom(grid, i, j))
            .map(|r| r.value)
            .ok_or_else(|| {
                Error::Config(format!(
                    "no cost region contains atom ({}, {})",
                    grid.atom(i),
                    grid.atom(j)
                ))
            })
    }

    /// Exact mean of `x -> c(x, y_j)` over the cell of atom `i`.
    fn cell_average(&self, grid: Grid, i: usize, j: usize) -> Result<ExtendedReal> {
        let y = grid.atom(j);
        let (a, b) = grid.cell(i);
        let mut cuts = vec![a, b];
        for r in &self.regions {
            r.kind.x_breakpoints(y, &mut cuts);
        }
        cuts.retain(|&t| t >= a && t <= b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut acc = ExtendedReal::ZERO;
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let v = self.sample(0.5 * (w[0] + w[1]), y)?;
            acc = acc + v.weighted(len / (b - a));
        }
        Ok(acc)
    }

    pub fn discretize(&self, grid: Grid, sampling: Sampling) -> Result<CostMatrix> {
        self.validate()?;
        let n = grid.n();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(match sampling {
                    Sampling::Atom => self.sample_atom(grid, i, j)?,
                    Sampling::CellAverage => self.cell_average(grid, i, j)?,
                });
            }
        }
        Ok(CostMatrix { rows: n, cols: n, data })
    }
}

/// Free-function form of [`CostDescriptor::sample`].
pub fn sample_cost(descriptor: &CostDescriptor, x: f64, y: f64) -> Result<ExtendedReal> {
    descriptor.sample(x, y)
}

/// Dense matrix of extended-real costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<ExtendedReal>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<ExtendedReal>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Input(format!("cost matrix has {} entries, expected {rows}x{cols}", data.len())));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    /// Builds from rows of `f64`; `f64::INFINITY` marks a forbidden pair.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Input("ragged cost rows".into()));
        }
        let data = rows
            .iter()
            .flatten()
            .map(|&v| ExtendedReal::new(v))
            .collect::<Result<Vec<_>>>()?;
        CostMatrix::new(rows.len(), cols, data)
    }

    pub fn constant(rows: usize, cols: usize, value: ExtendedReal) -> Self {
        CostMatrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> ExtendedReal {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: ExtendedReal) {
        self.data[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[ExtendedReal] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .map(|r| r.iter().map(|v| v.to_f64()).collect())
            .collect()
    }

    /// Largest finite entry (0 if there is none).
    pub fn max_finite(&self) -> f64 {
        self.data.iter().filter_map(|v| v.finite()).fold(0.0, f64::max)
    }

    pub fn has_infinite(&self) -> bool {
        self.data.iter().any(|v| v.is_infinite())
    }

    /// Entrywise clamp to `[0, level]`; `+inf` becomes `level`.
    pub fn truncate(&self, level: u32) -> Result<CostMatrix> {
        if level == 0 {
            return Err(Error::Input("truncation level must be at least 1".into()));
        }
        let level = f64::from(level);
        Ok(CostMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.clamp_to(level)).collect(),
        })
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CostMatrix {
        let data = rows
            .clone()
            .flat_map(|i| cols.clone().map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        CostMatrix { rows: rows.len(), cols: cols.len(), data }
    }

    pub fn map(&self, f: impl Fn(ExtendedReal) -> ExtendedReal) -> CostMatrix {
        CostMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

/// Free-function form of [`CostMatrix::truncate`].
pub fn truncate_cost(cost: &CostMatrix, level: u32) -> Result<CostMatrix> {
    cost.truncate(level)
}

/// `sum C[i][j] * plan[i][j]` with `(+inf) * 0 = 0`.
pub fn plan_cost(cost: &CostMatrix, plan: &TransportPlan) -> Result<ExtendedReal> {
    if cost.rows() != plan.rows() || cost.cols() != plan.cols() {
        return Err(Error::Input(format!(
            "plan is {}x{} but cost is {}x{}",
            plan.rows(),
            plan.cols(),
            cost.rows(),
            cost.cols()
        )));
    }
    Ok(cost.entries().iter().zip(plan.entries()).map(|(c, &m)| c.weighted(m)).sum())
}
