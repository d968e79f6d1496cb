//! Exact primal/dual solution of the discrete transport problem with
//! forbidden (`+inf`) pairs, and its partial-mass relaxation.

mod maxflow;
mod network_simplex;

use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::grid::{DiscreteMeasure, MASS_TOL};
use crate::instance::Instance;
use crate::plan::{DualPotentials, TransportPlan};

use maxflow::MaxFlow;
use network_simplex::{network_simplex, FlowProblem};

/// Agreement required between primal and dual objectives.
pub const DUALITY_TOL: f64 = 1e-7;
/// Dual constraint tolerance `phi + psi <= C + FEAS_TOL`.
pub const FEAS_TOL: f64 = 1e-9;
const SUPPORT_TOL: f64 = 1e-12;
const FEASIBILITY_FLOW_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// No plan of finite cost exists; the value is `+inf`.
    InfeasibleFinite,
    /// The simplex did not certify optimality.
    Degenerate,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::InfeasibleFinite => "infeasible_finite",
            SolveStatus::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub value: ExtendedReal,
    pub status: SolveStatus,
    /// Primal cost minus dual objective of the returned certificate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<TransportPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potentials: Option<DualPotentials>,
    #[serde(skip)]
    pub pivots: usize,
}

impl SolveReport {
    fn infeasible() -> Self {
        SolveReport {
            value: ExtendedReal::INFINITY,
            status: SolveStatus::InfeasibleFinite,
            objective_gap: None,
            plan: None,
            potentials: None,
            pivots: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Optimal basis of one transport (or partial transport) LP.
struct Solved {
    plan: TransportPlan,
    potentials: DualPotentials,
    primal: f64,
    dual: f64,
    pivots: usize,
    converged: bool,
}

fn check_shapes(cost: &CostMatrix, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if cost.rows() != mu.len() || cost.cols() != nu.len() {
        return Err(Error::Input(format!(
            "cost is {}x{} but marginals have {} and {} atoms",
            cost.rows(),
            cost.cols(),
            mu.len(),
            nu.len()
        )));
    }
    Ok(())
}

fn check_totals(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if (mu.total() - nu.total()).abs() > MASS_TOL {
        return Err(Error::Input(format!(
            "marginal totals differ: {} vs {}",
            mu.total(),
            nu.total()
        )));
    }
    Ok(())
}

/// Largest mass movable along finite-cost pairs under the marginal bounds.
fn finite_arc_capacity(cost: &CostMatrix, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let (r, c) = (cost.rows(), cost.cols());
    let (s, t) = (r + c, r + c + 1);
    let mut g = MaxFlow::new(r + c + 2, 1e-18);
    for i in 0..r {
        if mu.weight(i) > 0.0 {
            g.add_edge(s, i, mu.weight(i));
        }
    }
    for j in 0..c {
        if nu.weight(j) > 0.0 {
            g.add_edge(r + j, t, nu.weight(j));
        }
    }
    for i in 0..r {
        for j in 0..c {
            if cost.get(i, j).is_finite() && mu.weight(i) > 0.0 && nu.weight(j) > 0.0 {
                g.add_edge(i, r + j, f64::INFINITY);
            }
        }
    }
    g.run(s, t)
}

/// Solves `min <C, pi>` over sub-couplings of total mass at least
/// `total - slack` (full couplings when `slack = 0`).
fn solve_lp(cost: &CostMatrix, mu: &DiscreteMeasure, nu: &DiscreteMeasure, slack: f64) -> Solved {
    let (r, c) = (cost.rows(), cost.cols());
    let partial = slack > 0.0;
    let nodes = r + c + if partial { 2 } else { 0 };
    let mut supply: Vec<f64> = mu.weights().to_vec();
    supply.extend(nu.weights().iter().map(|w| -w));
    if partial {
        supply.push(slack);
        supply.push(-slack);
    }
    let mut problem = FlowProblem::new(nodes, supply);
    let mut pair_of_arc = Vec::new();
    for i in 0..r {
        for j in 0..c {
            if let Some(v) = cost.get(i, j).finite() {
                problem.add_arc(i, r + j, v);
                pair_of_arc.push((i, j));
            }
        }
    }
    let real_arcs = problem.num_arcs();
    if partial {
        let (s, t) = (r + c, r + c + 1);
        for i in 0..r {
            problem.add_arc(i, t, 0.0);
        }
        for j in 0..c {
            problem.add_arc(s, r + j, 0.0);
        }
        problem.add_arc(s, t, 0.0);
    }

    let mut art_cost = (cost.max_finite() + 1.0) * (nodes as f64 + 1.0);
    let mut sol = network_simplex(&problem, art_cost);
    // a feasible instance ends with empty artificial arcs once the penalty is large enough
    for _ in 0..2 {
        if sol.artificial_flow <= FEASIBILITY_FLOW_TOL {
            break;
        }
        art_cost *= 1e3;
        sol = network_simplex(&problem, art_cost);
    }

    let mut plan = TransportPlan::zeros(r, c);
    let mut primal = 0.0;
    for (arc, &(i, j)) in pair_of_arc.iter().enumerate().take(real_arcs) {
        let f = sol.flow[arc];
        if f > 0.0 {
            plan.set(i, j, f);
            primal += f * problem.costs[arc];
        }
    }

    let pot = &sol.potential;
    let mut phi: Vec<f64> = (0..r).map(|i| -pot[i]).collect();
    let mut psi: Vec<f64> = (0..c).map(|j| pot[r + j]).collect();
    let (mut phi_s, mut psi_t) = if partial { (-pot[r + c], pot[r + c + 1]) } else { (0.0, 0.0) };
    // (phi + d, psi - d) is an equivalent certificate; pin max psi = 0
    let shift = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift.is_finite() {
        phi.iter_mut().for_each(|p| *p += shift);
        psi.iter_mut().for_each(|p| *p -= shift);
        phi_s += shift;
        psi_t -= shift;
    }
    let potentials = DualPotentials::new(phi, psi);
    let dual = potentials.objective(mu, nu) + if partial { slack * (phi_s + psi_t) } else { 0.0 };

    Solved {
        plan,
        potentials,
        primal,
        dual,
        pivots: sol.pivots,
        converged: sol.converged && sol.artificial_flow <= FEASIBILITY_FLOW_TOL,
    }
}

fn report_from(solved: Solved) -> SolveReport {
    let status = if solved.converged { SolveStatus::Optimal } else { SolveStatus::Degenerate };
    SolveReport {
        value: ExtendedReal::from_f64_lossy(solved.primal),
        status,
        objective_gap: Some(solved.primal - solved.dual),
        plan: Some(solved.plan),
        potentials: Some(solved.potentials),
        pivots: solved.pivots,
    }
}

/// Minimum-cost coupling of `mu` and `nu`; `+inf` entries are forbidden pairs.
pub fn solve_primal(cost: &CostMatrix, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<SolveReport> {
    check_shapes(cost, mu, nu)?;
    check_totals(mu, nu)?;
    if finite_arc_capacity(cost, mu, nu) < mu.total() - FEASIBILITY_FLOW_TOL {
        return Ok(SolveReport::infeasible());
    }
    Ok(report_from(solve_lp(cost, mu, nu, 0.0)))
}

/// Maximal `int phi dmu + int psi dnu` over `phi + psi <= C`.
///
/// The potentials come from the optimal basis of the primal simplex; the
/// reported value is their objective.
pub fn solve_dual(cost: &CostMatrix, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<SolveReport> {
    let mut report = solve_primal(cost, mu, nu)?;
    if let Some(pot) = &report.potentials {
        report.value = ExtendedReal::from_f64_lossy(pot.objective(mu, nu));
    }
    Ok(report)
}

/// Minimum cost over sub-couplings with row sums `<= mu`, column sums
/// `<= nu` and total mass `>= total - eps`.
///
/// Encoded exactly as a full transport problem with one slack row and one
/// slack column of capacity `eps` at zero cost.
pub fn solve_partial(cost: &CostMatrix, mu: &DiscreteMeasure, nu: &DiscreteMeasure, eps: f64) -> Result<SolveReport> {
    check_shapes(cost, mu, nu)?;
    check_totals(mu, nu)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Input(format!("mass tolerance must lie in [0, 1), got {eps}")));
    }
    if eps == 0.0 {
        return solve_primal(cost, mu, nu);
    }
    let required = mu.total() - eps;
    if required > 0.0 && finite_arc_capacity(cost, mu, nu) < required - FEASIBILITY_FLOW_TOL {
        return Ok(SolveReport::infeasible());
    }
    Ok(report_from(solve_lp(cost, mu, nu, eps)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlacknessViolation {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
    /// `C[i][j] - phi[i] - psi[j]`, `inf` on a forbidden pair.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlacknessCheck {
    pub holds: bool,
    pub violations: Vec<SlacknessViolation>,
}

/// Every pair carrying mass must have a tight dual constraint.
pub fn check_complementary_slackness(report: &SolveReport, cost: &CostMatrix) -> Result<SlacknessCheck> {
    let (Some(plan), Some(pot)) = (&report.plan, &report.potentials) else {
        return Err(Error::Precondition("report carries no plan and potentials".into()));
    };
    let mut violations = Vec::new();
    for (i, j, mass) in plan.support() {
        if mass <= SUPPORT_TOL {
            continue;
        }
        let slack = cost.get(i, j).to_f64() - pot.sum_at(i, j);
        if !(slack.abs() <= DUALITY_TOL) {
            violations.push(SlacknessViolation { i, j, mass, slack });
        }
    }
    Ok(SlacknessCheck { holds: violations.is_empty(), violations })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxedRow {
    pub eps: f64,
    pub value: ExtendedReal,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxedTable {
    pub n: usize,
    pub rows: Vec<RelaxedRow>,
    pub primal: ExtendedReal,
    /// Value at the smallest tolerance.
    pub limit: ExtendedReal,
    /// `[limit, primal]`: the relaxed limit lies below the grid primal.
    pub bracket: (ExtendedReal, ExtendedReal),
    /// Values are non-increasing in the tolerance.
    pub monotone: bool,
}

/// Partial values along a strictly decreasing tolerance schedule.
pub fn relaxed_value(instance: &Instance, n: usize, schedule: &[f64]) -> Result<RelaxedTable> {
    if schedule.is_empty() {
        return Err(Error::Input("empty tolerance schedule".into()));
    }
    if schedule.iter().any(|&e| !(e > 0.0 && e < 1.0)) || schedule.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Input("tolerances must lie in (0, 1) and strictly decrease".into()));
    }
    let d = instance.discretize(n)?;
    let primal = solve_primal(&d.cost, &d.mu, &d.nu)?.value;
    let rows = schedule
        .iter()
        .map(|&eps| Ok(RelaxedRow { eps, value: solve_partial(&d.cost, &d.mu, &d.nu, eps)?.value }))
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[1].value.to_f64() >= w[0].value.to_f64() - FEAS_TOL)
        && rows.last().is_none_or(|r| r.value.to_f64() <= primal.to_f64() + FEAS_TOL);
    let limit = rows.last().unwrap().value;
    Ok(RelaxedTable { n, rows, primal, limit, bracket: (limit, primal), monotone })
}
