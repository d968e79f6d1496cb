//! Block approximation of a plan by per-cell partial transport, a dyadic
//! weak* metric, and the liminf harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{plan_cost, CostMatrix};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::grid::{DiscreteMeasure, MASS_TOL};
use crate::instance::Instance;
use crate::plan::{DualPotentials, TransportPlan};
use crate::solver::{solve_partial, SolveStatus};

/// `n x n` cells of side `1/n`, each holding `s x s` atoms of the fine grid
/// of resolution `n * s`. Fine atom `k` lies in cell `k / s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub n: usize,
    pub s: usize,
}

impl BlockPartition {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(Error::Config(format!("block partition needs n, s >= 1, got n={n}, s={s}")));
        }
        Ok(BlockPartition { n, s })
    }

    pub fn fine(&self) -> usize {
        self.n * self.s
    }

    /// Fine index range of block `l`.
    pub fn block(&self, l: usize) -> std::ops::Range<usize> {
        l * self.s..(l + 1) * self.s
    }

    pub fn cell_of(&self, i: usize, j: usize) -> (usize, usize) {
        (i / self.s, j / self.s)
    }
}

/// A plan restricted to one cell, in the cell's local `s x s` coordinates.
#[derive(Debug, Clone)]
pub struct CellRestriction {
    pub l: usize,
    pub m: usize,
    pub plan: TransportPlan,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
}

impl CellRestriction {
    pub fn mass(&self) -> f64 {
        self.plan.total()
    }
}

pub fn restrict_plan(plan: &TransportPlan, partition: BlockPartition, l: usize, m: usize) -> Result<CellRestriction> {
    let big = partition.fine();
    if plan.rows() != big || plan.cols() != big {
        return Err(Error::Input(format!("plan is {}x{}, partition needs {big}x{big}", plan.rows(), plan.cols())));
    }
    if l >= partition.n || m >= partition.n {
        return Err(Error::Input(format!("cell ({l}, {m}) outside a {}-block partition", partition.n)));
    }
    let s = partition.s;
    let mut local = TransportPlan::zeros(s, s);
    for (a, i) in partition.block(l).enumerate() {
        for (b, j) in partition.block(m).enumerate() {
            local.set(a, b, plan.get(i, j));
        }
    }
    let mu = local.row_marginal();
    let nu = local.col_marginal();
    Ok(CellRestriction { l, m, plan: local, mu, nu })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub l: usize,
    pub m: usize,
    pub cell_mass: f64,
    pub retained_mass: f64,
    pub cost: ExtendedReal,
    pub status: SolveStatus,
    /// `retained >= cell mass - 1/n^3`.
    pub mass_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potentials: Option<DualPotentials>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximationStep {
    pub n: usize,
    pub s: usize,
    pub mass: f64,
    pub cost_c: ExtendedReal,
    pub target_cr_integral: ExtendedReal,
    /// `cost_c <= target + 1/n`.
    pub bound_ok: bool,
    #[serde(skip)]
    pub plan: TransportPlan,
    #[serde(skip)]
    pub per_cell_reports: Vec<CellReport>,
}

impl ApproximationStep {
    pub fn bound(&self) -> ExtendedReal {
        self.target_cr_integral + ExtendedReal::from_f64_lossy(1.0 / self.n as f64)
    }

    pub fn all_cells_ok(&self) -> bool {
        self.per_cell_reports.iter().all(|c| c.mass_ok)
    }
}

/// Replaces `plan` on every cell of the `n`-block partition by an optimal
/// partial plan for the cost `c` between the cell marginals, with mass
/// tolerance `1/n^3`, and glues the pieces.
///
/// Refuses plans whose rectified cost is infinite (nothing to approximate).
pub fn block_approximate_plan(plan: &TransportPlan, instance: &Instance, n: usize, s: usize) -> Result<ApproximationStep> {
    let partition = BlockPartition::new(n, s)?;
    let big = partition.fine();
    if plan.rows() != big || plan.cols() != big {
        return Err(Error::Input(format!("plan is {}x{}, expected {big}x{big}", plan.rows(), plan.cols())));
    }
    let rectified = instance
        .rectified_matrix(big)?
        .ok_or_else(|| Error::Precondition(format!("instance {} has no known rectified cost", instance.name)))?;
    let target = plan_cost(&rectified, plan)?;
    if target.is_infinite() {
        return Err(Error::Precondition("the plan has infinite rectified cost; there is nothing to approximate".into()));
    }
    let cost = instance.discretize(big)?.cost;
    let eps = 1.0 / (n as f64).powi(3);

    let cells: Vec<(usize, usize)> = (0..n).flat_map(|l| (0..n).map(move |m| (l, m))).collect();
    let solved = cells
        .par_iter()
        .map(|&(l, m)| solve_cell(plan, &cost, partition, l, m, eps))
        .collect::<Result<Vec<_>>>()?;

    let mut glued = TransportPlan::zeros(big, big);
    let mut reports = Vec::with_capacity(solved.len());
    for (report, local) in solved {
        if let Some(local) = local {
            for (a, i) in partition.block(report.l).enumerate() {
                for (b, j) in partition.block(report.m).enumerate() {
                    let v = local.get(a, b);
                    if v > 0.0 {
                        glued.set(i, j, v);
                    }
                }
            }
        }
        reports.push(report);
    }
    let cost_c = plan_cost(&cost, &glued)?;
    let bound = target + ExtendedReal::from_f64_lossy(1.0 / n as f64);
    Ok(ApproximationStep {
        n,
        s,
        mass: glued.total(),
        cost_c,
        target_cr_integral: target,
        bound_ok: cost_c <= bound,
        plan: glued,
        per_cell_reports: reports,
    })
}

fn solve_cell(
    plan: &TransportPlan,
    cost: &CostMatrix,
    partition: BlockPartition,
    l: usize,
    m: usize,
    eps: f64,
) -> Result<(CellReport, Option<TransportPlan>)> {
    let cell = restrict_plan(plan, partition, l, m)?;
    let cell_mass = cell.mass();
    let empty = |status| CellReport {
        l,
        m,
        cell_mass,
        retained_mass: 0.0,
        cost: ExtendedReal::ZERO,
        status,
        mass_ok: cell_mass <= eps + MASS_TOL,
        potentials: None,
    };
    if cell_mass <= 0.0 {
        return Ok((empty(SolveStatus::Optimal), None));
    }
    let local_cost = cost.submatrix(partition.block(l), partition.block(m));
    // keeps the tolerance inside [0, 1) when a single cell holds all the mass
    let report = solve_partial(&local_cost, &cell.mu, &cell.nu, eps.min(cell_mass * (1.0 - f64::EPSILON)))?;
    match (report.status, report.plan) {
        (SolveStatus::Optimal, Some(local)) => {
            let retained = local.total();
            Ok((
                CellReport {
                    l,
                    m,
                    cell_mass,
                    retained_mass: retained,
                    cost: report.value,
                    status: SolveStatus::Optimal,
                    mass_ok: retained >= cell_mass - eps - MASS_TOL,
                    potentials: report.potentials,
                },
                Some(local),
            ))
        }
        (status, _) => Ok((empty(status), None)),
    }
}

/// `sum_k 2^-k max_C |pi(C) - pi'(C)|` over dyadic cells of level `k = 0..=K`,
/// `K` the finest level both grids resolve. Grid sizes must be powers of two.
pub fn weak_star_distance(a: &TransportPlan, b: &TransportPlan) -> Result<f64> {
    for p in [a, b] {
        if p.rows() != p.cols() || !p.rows().is_power_of_two() {
            return Err(Error::Input(format!(
                "weak* distance needs square plans on dyadic grids, got {}x{}",
                p.rows(),
                p.cols()
            )));
        }
    }
    let finest = a.rows().min(b.rows());
    let (mut ca, mut cb) = (coarsen(a, finest), coarsen(b, finest));
    let mut side = finest;
    let mut total = 0.0;
    loop {
        let k = side.trailing_zeros() as i32;
        let worst = ca.iter().zip(&cb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        total += worst * 2f64.powi(-k);
        if side == 1 {
            break;
        }
        ca = halve(&ca, side);
        cb = halve(&cb, side);
        side /= 2;
    }
    Ok(total)
}

/// Cell masses of `plan` on a `side x side` grid (`side` divides the plan size).
fn coarsen(plan: &TransportPlan, side: usize) -> Vec<f64> {
    let f = plan.rows() / side;
    let mut out = vec![0.0; side * side];
    for (i, j, v) in plan.support() {
        out[(i / f) * side + j / f] += v;
    }
    out
}

fn halve(cells: &[f64], side: usize) -> Vec<f64> {
    let h = side / 2;
    let mut out = vec![0.0; h * h];
    for i in 0..side {
        for j in 0..side {
            out[(i / 2) * h + j / 2] += cells[i * side + j];
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiminfRow {
    pub n: usize,
    pub distance: f64,
    pub cost_cr: ExtendedReal,
    pub cost_c: ExtendedReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnessStatus {
    Conclusive,
    /// The sequence did not approach its declared limit within the horizon.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiminfReport {
    pub rows: Vec<LiminfRow>,
    pub limit_cost_cr: ExtendedReal,
    pub limit_cost_c: ExtendedReal,
    /// Minimum over the second half of the sequence.
    pub tail_min_cr: ExtendedReal,
    pub tail_min_c: ExtendedReal,
    /// `limit <= tail min + 1e-6` for the rectified cost.
    pub cr_holds: bool,
    pub c_holds: bool,
    /// `limit - tail min` for the original cost.
    pub c_gap: f64,
    pub status: HarnessStatus,
}

pub const LIMINF_SLACK: f64 = 1e-6;
/// Final weak* distance below which the sequence counts as converged.
pub const CONVERGENCE_TOL: f64 = 0.1;

/// Scores `sequence(n)` for each resolution against `limit(n)` with both the
/// rectified and the original cost; limit costs use the last resolution.
pub fn liminf_harness(
    instance: &Instance,
    resolutions: &[usize],
    sequence: impl Fn(usize) -> Result<TransportPlan>,
    limit: impl Fn(usize) -> Result<TransportPlan>,
) -> Result<LiminfReport> {
    let last = *resolutions.last().ok_or_else(|| Error::Input("empty horizon".into()))?;
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let (pi, lim) = (sequence(n)?, limit(n)?);
        let c = instance.discretize(n)?.cost;
        let cr = instance
            .rectified_matrix(n)?
            .ok_or_else(|| Error::Precondition(format!("instance {} has no known rectified cost", instance.name)))?;
        rows.push(LiminfRow {
            n,
            distance: weak_star_distance(&pi, &lim)?,
            cost_cr: plan_cost(&cr, &pi)?,
            cost_c: plan_cost(&c, &pi)?,
        });
    }
    let lim = limit(last)?;
    let limit_cost_c = plan_cost(&instance.discretize(last)?.cost, &lim)?;
    let limit_cost_cr = plan_cost(&instance.rectified_matrix(last)?.expect("checked above"), &lim)?;
    let tail = &rows[rows.len() / 2..];
    let tail_min_cr = tail.iter().map(|r| r.cost_cr).min().expect("non-empty tail");
    let tail_min_c = tail.iter().map(|r| r.cost_c).min().expect("non-empty tail");
    let holds = |lim: ExtendedReal, tail: ExtendedReal| lim <= tail + ExtendedReal::from_f64_lossy(LIMINF_SLACK);
    let (first, final_d) = (rows[0].distance, rows[rows.len() - 1].distance);
    let status = if final_d <= CONVERGENCE_TOL && final_d <= first {
        HarnessStatus::Conclusive
    } else {
        HarnessStatus::Inconclusive
    };
    Ok(LiminfReport {
        cr_holds: holds(limit_cost_cr, tail_min_cr),
        c_holds: holds(limit_cost_c, tail_min_c),
        c_gap: limit_cost_c.to_f64() - tail_min_c.to_f64(),
        limit_cost_cr,
        limit_cost_c,
        tail_min_cr,
        tail_min_c,
        rows,
        status,
    })
}

/// Closed-form plans used by the harnesses and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Diagonal,
    AntiDiagonal,
    Product,
    CyclicShift,
}

impl PlanKind {
    /// The plan for uniform marginals on a grid of `size` atoms.
    pub fn build(self, size: usize) -> TransportPlan {
        match self {
            PlanKind::Diagonal => TransportPlan::uniform_diagonal(size),
            PlanKind::AntiDiagonal => TransportPlan::anti_diagonal(size),
            PlanKind::Product => {
                let u = DiscreteMeasure::uniform(size);
                TransportPlan::product(&u, &u)
            }
            PlanKind::CyclicShift => TransportPlan::cyclic_shift(size),
        }
    }
}

impl std::str::FromStr for PlanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(PlanKind::Diagonal),
            "anti-diagonal" | "anti_diagonal" => Ok(PlanKind::AntiDiagonal),
            "product" => Ok(PlanKind::Product),
            "shift" | "cyclic_shift" => Ok(PlanKind::CyclicShift),
            _ => Err(Error::Config(format!("unknown plan {s:?}; expected diagonal, anti-diagonal, product or shift"))),
        }
    }
}
