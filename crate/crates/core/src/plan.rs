//! Transport plans (sub-couplings) and dual potential pairs.

use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::grid::{DiscreteMeasure, MASS_TOL};

/// Non-negative `rows x cols` matrix of transported mass, with cached marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    mass: Vec<f64>,
    #[serde(skip)]
    row_sums: Vec<f64>,
    #[serde(skip)]
    col_sums: Vec<f64>,
}

impl TransportPlan {
    pub fn new(rows: usize, cols: usize, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != rows * cols {
            return Err(Error::Input(format!(
                "plan has {} entries, expected {rows}x{cols}",
                mass.len()
            )));
        }
        if mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Input("plan entries must be finite and non-negative".into()));
        }
        let mut plan = TransportPlan { rows, cols, mass, row_sums: vec![], col_sums: vec![] };
        plan.refresh_sums();
        Ok(plan)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        TransportPlan::new(rows, cols, vec![0.0; rows * cols]).unwrap()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Input("ragged plan rows".into()));
        }
        TransportPlan::new(rows.len(), cols, rows.concat())
    }

    /// Mass `weights[k]` at `(k, k)`.
    pub fn diagonal(marginal: &DiscreteMeasure) -> Self {
        let n = marginal.len();
        let mut plan = TransportPlan::zeros(n, n);
        for (k, &w) in marginal.weights().iter().enumerate() {
            plan.mass[k * n + k] = w;
        }
        plan.refresh_sums();
        plan
    }

    /// Uniform diagonal plan at resolution `n`.
    pub fn uniform_diagonal(n: usize) -> Self {
        TransportPlan::diagonal(&DiscreteMeasure::uniform(n))
    }

    /// Reversed diagonal `(k, n-1-k)` with uniform mass.
    pub fn anti_diagonal(n: usize) -> Self {
        let mut plan = TransportPlan::zeros(n, n);
        for k in 0..n {
            plan.mass[k * n + (n - 1 - k)] = 1.0 / n as f64;
        }
        plan.refresh_sums();
        plan
    }

    pub fn product(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        let mass = mu
            .weights()
            .iter()
            .flat_map(|a| nu.weights().iter().map(move |b| a * b))
            .collect();
        TransportPlan::new(mu.len(), nu.len(), mass).unwrap()
    }

    /// Uniform coupling moving atom `k` to atom `k-1` and atom 0 to atom `n-1`.
    pub fn cyclic_shift(n: usize) -> Self {
        let mut plan = TransportPlan::zeros(n, n);
        for k in 0..n {
            let target = if k == 0 { n - 1 } else { k - 1 };
            plan.mass[k * n + target] = 1.0 / n as f64;
        }
        plan.refresh_sums();
        plan
    }

    /// Sub-coupling of mass `(n-1)/n` moving atom `k` to atom `k-1`.
    pub fn shift_subplan(n: usize) -> Self {
        let mut plan = TransportPlan::zeros(n, n);
        for k in 1..n {
            plan.mass[k * n + k - 1] = 1.0 / n as f64;
        }
        plan.refresh_sums();
        plan
    }

    pub(crate) fn refresh_sums(&mut self) {
        self.row_sums = (0..self.rows)
            .map(|i| self.mass[i * self.cols..(i + 1) * self.cols].iter().sum())
            .collect();
        self.col_sums = (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.mass[i * self.cols + j]).sum())
            .collect();
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(value.is_finite() && value >= 0.0);
        let old = self.mass[i * self.cols + j];
        self.mass[i * self.cols + j] = value;
        self.row_sums[i] += value - old;
        self.col_sums[j] += value - old;
    }

    pub fn entries(&self) -> &[f64] {
        &self.mass
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Positive entries as `(i, j, mass)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(move |(k, &m)| (k / self.cols, k % self.cols, m))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.mass.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Row and column sums bounded by `mu`, `nu` (within `tol`).
    pub fn is_sub_coupling(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> bool {
        self.rows == mu.len()
            && self.cols == nu.len()
            && self.row_sums.iter().zip(mu.weights()).all(|(r, w)| *r <= w + tol)
            && self.col_sums.iter().zip(nu.weights()).all(|(c, w)| *c <= w + tol)
    }

    /// Marginals equal to `mu`, `nu` (within `tol`).
    pub fn is_coupling(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> bool {
        self.rows == mu.len()
            && self.cols == nu.len()
            && self.row_sums.iter().zip(mu.weights()).all(|(r, w)| (r - w).abs() <= tol)
            && self.col_sums.iter().zip(nu.weights()).all(|(c, w)| (c - w).abs() <= tol)
    }

    pub fn row_marginal(&self) -> DiscreteMeasure {
        DiscreteMeasure::new(self.row_sums.iter().map(|v| v.max(0.0)).collect()).unwrap()
    }

    pub fn col_marginal(&self) -> DiscreteMeasure {
        DiscreteMeasure::new(self.col_sums.iter().map(|v| v.max(0.0)).collect()).unwrap()
    }

    /// Cached sums agree with the matrix.
    pub fn sums_consistent(&self) -> bool {
        let mut fresh = self.clone();
        fresh.refresh_sums();
        fresh
            .row_sums
            .iter()
            .zip(&self.row_sums)
            .chain(fresh.col_sums.iter().zip(&self.col_sums))
            .all(|(a, b)| (a - b).abs() <= MASS_TOL)
    }
}

/// A pair `(phi, psi)` on rows and columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPotentials {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl DualPotentials {
    pub fn new(phi: Vec<f64>, psi: Vec<f64>) -> Self {
        DualPotentials { phi, psi }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        DualPotentials { phi: vec![0.0; rows], psi: vec![0.0; cols] }
    }

    /// `int phi dmu + int psi dnu`.
    pub fn objective(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        mu.integrate(&self.phi) + nu.integrate(&self.psi)
    }

    pub fn sum_at(&self, i: usize, j: usize) -> f64 {
        self.phi[i] + self.psi[j]
    }

    /// `min (C - phi - psi)` over finite entries; `+inf` when every entry is infinite.
    pub fn feasibility_slack(&self, cost: &CostMatrix) -> f64 {
        let mut slack = f64::INFINITY;
        for i in 0..cost.rows() {
            for j in 0..cost.cols() {
                if let Some(c) = cost.get(i, j).finite() {
                    slack = slack.min(c - self.sum_at(i, j));
                }
            }
        }
        slack
    }

    pub fn is_feasible(&self, cost: &CostMatrix, tol: f64) -> bool {
        self.feasibility_slack(cost) >= -tol
    }
}
