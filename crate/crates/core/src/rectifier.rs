//! Grid-level faces of the rectified cost: the pointwise dual envelope,
//! reweighted dual optimizers over a truncation ladder, box-infimum pairs,
//! and the accumulator taking their pointwise supremum.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::grid::DiscreteMeasure;
use crate::instance::Instance;
use crate::plan::DualPotentials;
use crate::solver::{solve_primal, SolveStatus, FEAS_TOL};

/// Balance condition tolerance for reweighting pairs.
pub const BALANCE_TOL: f64 = 1e-10;
const MAX_RETRIES: usize = 100;
const ZERO_MASS: f64 = 1e-15;

/// Largest `phi[i] + psi[j]` over pairs with `phi + psi <= C` at every finite
/// entry; `+inf` when unbounded.
///
/// Solved as a difference-constraints LP: with `u = phi`, `w = -psi` each
/// constraint is an arc `w_b -> u_a` of length `C[a][b]`, and the optimum is
/// the shortest-path distance from `w_j` to `u_i` (Bellman-Ford).
pub fn pointwise_dual_envelope(cost: &CostMatrix, i: usize, j: usize) -> Result<ExtendedReal> {
    let (r, c) = (cost.rows(), cost.cols());
    if i >= r || j >= c {
        return Err(Error::Input(format!("entry ({i}, {j}) outside a {r}x{c} cost")));
    }
    let dist = envelope_distances(cost, j);
    Ok(ExtendedReal::from_f64_lossy(dist[i]))
}

/// Distances from column node `source` to every row node.
fn envelope_distances(cost: &CostMatrix, source: usize) -> Vec<f64> {
    let (r, c) = (cost.rows(), cost.cols());
    // nodes: rows 0..r, columns r..r+c
    let mut arcs = Vec::new();
    for a in 0..r {
        for b in 0..c {
            if let Some(w) = cost.get(a, b).finite() {
                arcs.push((r + b, a, w));
            }
        }
    }
    let mut dist = vec![f64::INFINITY; r + c];
    dist[r + source] = 0.0;
    for _ in 0..(r + c) {
        let mut changed = false;
        for &(from, to, w) in &arcs {
            if dist[from].is_finite() && dist[from] + w < dist[to] - 1e-15 {
                dist[to] = dist[from] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist.truncate(r);
    dist
}

/// Envelope at every entry.
pub fn dual_envelope_matrix(cost: &CostMatrix) -> CostMatrix {
    let (r, c) = (cost.rows(), cost.cols());
    let mut out = CostMatrix::constant(r, c, ExtendedReal::ZERO);
    for j in 0..c {
        let dist = envelope_distances(cost, j);
        for (i, d) in dist.into_iter().enumerate() {
            out.set(i, j, ExtendedReal::from_f64_lossy(d));
        }
    }
    out
}

/// Densities `f`, `g` in `[0, 1]` with `sum f mu = sum g nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightPair {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl ReweightPair {
    /// Rescales the heavier side so both integrals agree.
    pub fn balanced(mut f: Vec<f64>, mut g: Vec<f64>, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        let (a, b) = (mu.integrate(&f), nu.integrate(&g));
        if a > b {
            let s = if a > 0.0 { b / a } else { 0.0 };
            f.iter_mut().for_each(|v| *v *= s);
        } else if b > a {
            let s = if b > 0.0 { a / b } else { 0.0 };
            g.iter_mut().for_each(|v| *v *= s);
        }
        ReweightPair { f, g }
    }

    pub fn mass(&self, mu: &DiscreteMeasure) -> f64 {
        mu.integrate(&self.f)
    }

    pub fn is_balanced(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
        (mu.integrate(&self.f) - nu.integrate(&self.g)).abs() <= BALANCE_TOL
            && self.f.iter().chain(&self.g).all(|v| (0.0..=1.0).contains(v))
    }
}

fn draw_profile(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    if rng.gen_bool(0.5) {
        (0..len).map(|_| rng.gen::<f64>()).collect()
    } else {
        let a = rng.gen_range(0..len);
        let b = rng.gen_range(a..len);
        let h = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
        (0..len).map(|k| if (a..=b).contains(&k) { h } else { 0.0 }).collect()
    }
}

fn sample_with(rng: &mut ChaCha8Rng, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<ReweightPair> {
    for _ in 0..=MAX_RETRIES {
        let f = draw_profile(rng, mu.len());
        let g = draw_profile(rng, nu.len());
        let pair = ReweightPair::balanced(f, g, mu, nu);
        if pair.mass(mu) > ZERO_MASS {
            return Ok(pair);
        }
    }
    Err(Error::Input(format!("no non-degenerate reweighting after {MAX_RETRIES} retries")))
}

/// Deterministic per seed: a mixture of uniform-entry and step profiles,
/// balanced on one side.
pub fn sample_reweight_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure, seed: u64) -> Result<ReweightPair> {
    sample_with(&mut ChaCha8Rng::seed_from_u64(seed), mu, nu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ZeroPair,
    BoxInfimum { rows: (usize, usize), cols: (usize, usize) },
    ReweightedDual { seed: u64, stream: u64, level: u32 },
    User,
}

impl Provenance {
    pub fn kind(&self) -> &'static str {
        match self {
            Provenance::ZeroPair => "zero_pair",
            Provenance::BoxInfimum { .. } => "box_infimum",
            Provenance::ReweightedDual { .. } => "reweighted_dual",
            Provenance::User => "user",
        }
    }
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::ZeroPair => write!(f, "zero_pair"),
            Provenance::BoxInfimum { rows, cols } => {
                write!(f, "box_infimum[{}..{}x{}..{}]", rows.0, rows.1, cols.0, cols.1)
            }
            Provenance::ReweightedDual { seed, stream, level } => {
                write!(f, "reweighted_dual[seed={seed};stream={stream};level={level}]")
            }
            Provenance::User => write!(f, "user"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasiblePair {
    pub potentials: DualPotentials,
    pub provenance: Provenance,
    /// Dual objective against the marginals that generated the pair.
    pub objective: Option<f64>,
}

impl FeasiblePair {
    pub fn zero(rows: usize, cols: usize) -> Self {
        FeasiblePair { potentials: DualPotentials::zero(rows, cols), provenance: Provenance::ZeroPair, objective: Some(0.0) }
    }

    pub fn user(phi: Vec<f64>, psi: Vec<f64>) -> Self {
        FeasiblePair { potentials: DualPotentials::new(phi, psi), provenance: Provenance::User, objective: None }
    }
}

/// Raises `phi` then `psi` to their c-transforms against a bounded cost.
/// Feasibility is kept and neither potential decreases.
fn c_transform_tighten(cost: &CostMatrix, pot: &mut DualPotentials) {
    for (i, phi) in pot.phi.iter_mut().enumerate() {
        let best = (0..cost.cols()).map(|j| cost.get(i, j).to_f64() - pot.psi[j]).fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            *phi = best;
        }
    }
    for (j, psi) in pot.psi.iter_mut().enumerate() {
        let best = (0..cost.rows()).map(|i| cost.get(i, j).to_f64() - pot.phi[i]).fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            *psi = best;
        }
    }
}

fn reweighted_dual(
    cost: &CostMatrix,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    pair: &ReweightPair,
    provenance: Provenance,
) -> Result<FeasiblePair> {
    if cost.has_infinite() {
        return Err(Error::Precondition("reweighted dual optimizer needs a bounded (truncated) cost".into()));
    }
    let fmu = mu.reweighted(&pair.f)?;
    let gnu = nu.reweighted(&pair.g)?;
    if fmu.total() <= ZERO_MASS || gnu.total() <= ZERO_MASS {
        return Ok(FeasiblePair::zero(cost.rows(), cost.cols()));
    }
    let report = solve_primal(cost, &fmu, &gnu)?;
    let mut pot = match (report.status, report.potentials) {
        (SolveStatus::Optimal, Some(p)) => p,
        (status, _) => return Err(Error::Precondition(format!("reweighted transport ended with status {status:?}"))),
    };
    c_transform_tighten(cost, &mut pot);
    let objective = pot.objective(&fmu, &gnu);
    Ok(FeasiblePair { potentials: pot, provenance, objective: Some(objective) })
}

/// Optimal potentials for the transport between `f mu` and `g nu`, made
/// feasible at every grid pair of the (bounded) cost by c-transforms.
pub fn reweighted_dual_optimizer(
    cost: &CostMatrix,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    pair: &ReweightPair,
) -> Result<FeasiblePair> {
    reweighted_dual(cost, mu, nu, pair, Provenance::User)
}

/// Index ranges of the dyadic intervals `((l-1)/2^k, l/2^k]` holding at least
/// one atom of an `n`-grid, for every level up to the first one that
/// separates all atoms. Duplicates are removed.
pub fn dyadic_ranges(n: usize) -> Vec<Range<usize>> {
    let mut seen = BTreeSet::new();
    let mut k = 0u32;
    loop {
        let blocks = 1usize << k;
        for l in 1..=blocks {
            let (lo, hi) = ((l - 1) * n / blocks, l * n / blocks);
            if hi > lo {
                seen.insert((lo, hi));
            }
        }
        if blocks >= n {
            break;
        }
        k += 1;
    }
    seen.into_iter().map(|(a, b)| a..b).collect()
}

/// `phi = e` on `rows`, `psi = 0` on `cols`, both `-B` elsewhere, where `e`
/// is the box infimum (clamped to the largest finite entry when infinite).
pub fn box_infimum_pair(cost: &CostMatrix, rows: Range<usize>, cols: Range<usize>) -> FeasiblePair {
    let max = cost.max_finite();
    let inf = rows
        .clone()
        .flat_map(|i| cols.clone().map(move |j| (i, j)))
        .map(|(i, j)| cost.get(i, j))
        .min()
        .unwrap_or(ExtendedReal::INFINITY);
    let e = inf.finite().unwrap_or(max);
    let b = e + max + 1.0;
    let phi = (0..cost.rows()).map(|i| if rows.contains(&i) { e } else { -b }).collect();
    let psi = (0..cost.cols()).map(|j| if cols.contains(&j) { 0.0 } else { -b }).collect();
    FeasiblePair {
        potentials: DualPotentials::new(phi, psi),
        provenance: Provenance::BoxInfimum { rows: (rows.start, rows.end), cols: (cols.start, cols.end) },
        objective: None,
    }
}

/// Box pairs over all products of dyadic row and column intervals.
pub fn box_infimum_pairs(cost: &CostMatrix) -> Vec<FeasiblePair> {
    let rows = dyadic_ranges(cost.rows());
    let cols = dyadic_ranges(cost.cols());
    rows.iter()
        .flat_map(|r| cols.iter().map(move |c| (r.clone(), c.clone())))
        .map(|(r, c)| box_infimum_pair(cost, r, c))
        .collect()
}

/// Powers of two up to twice the largest finite entry; `[1]` if none fits.
pub fn truncation_ladder(cost: &CostMatrix) -> Vec<u32> {
    let cap = 2.0 * cost.max_finite();
    let ladder: Vec<u32> = (0..31).map(|k| 1u32 << k).take_while(|&l| f64::from(l) <= cap).collect();
    if ladder.is_empty() {
        vec![1]
    } else {
        ladder
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub provenance: Provenance,
    pub objective: Option<f64>,
    /// `min (C - phi - psi)` over finite entries.
    pub slack: f64,
    /// Entries raised by this pair when it was added.
    pub improved: usize,
}

/// Pointwise supremum of `phi + psi` over accumulated feasible pairs.
#[derive(Debug, Clone)]
pub struct RectifiedAccumulator {
    cost: CostMatrix,
    lower_envelope: Vec<f64>,
    log: Vec<ProvenanceRecord>,
}

impl RectifiedAccumulator {
    /// Empty accumulator: every entry starts at `-inf`.
    pub fn new(cost: CostMatrix) -> Self {
        let len = cost.rows() * cost.cols();
        RectifiedAccumulator { cost, lower_envelope: vec![f64::NEG_INFINITY; len], log: Vec::new() }
    }

    pub fn add(&mut self, pair: FeasiblePair) -> Result<()> {
        let pot = &pair.potentials;
        if pot.phi.len() != self.cost.rows() || pot.psi.len() != self.cost.cols() {
            return Err(Error::Input("pair does not match the cost shape".into()));
        }
        let slack = pot.feasibility_slack(&self.cost);
        if slack < -FEAS_TOL {
            return Err(Error::Precondition(format!("pair {} violates phi + psi <= C by {}", pair.provenance, -slack)));
        }
        let cols = self.cost.cols();
        let mut improved = 0;
        for (k, env) in self.lower_envelope.iter_mut().enumerate() {
            let v = pot.sum_at(k / cols, k % cols);
            if v > *env {
                if v > *env + FEAS_TOL {
                    improved += 1;
                }
                *env = v;
            }
        }
        self.log.push(ProvenanceRecord { provenance: pair.provenance, objective: pair.objective, slack, improved });
        Ok(())
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn pair_count(&self) -> usize {
        self.log.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower_envelope[i * self.cost.cols() + j]
    }

    pub fn lower_envelope(&self) -> Vec<Vec<f64>> {
        self.lower_envelope.chunks(self.cost.cols().max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn log(&self) -> &[ProvenanceRecord] {
        &self.log
    }

    /// `max (C - envelope)` over finite entries (0 if there are none).
    pub fn sup_gap(&self) -> f64 {
        self.cost
            .entries()
            .iter()
            .zip(&self.lower_envelope)
            .filter_map(|(c, e)| c.finite().map(|c| c - e))
            .fold(0.0, f64::max)
    }

    /// Smallest envelope value over infinite entries, if any.
    pub fn min_at_infinite(&self) -> Option<f64> {
        self.cost
            .entries()
            .iter()
            .zip(&self.lower_envelope)
            .filter(|(c, _)| c.is_infinite())
            .map(|(_, &e)| e)
            .reduce(f64::min)
    }

    /// Entries raised per provenance kind.
    pub fn contributions(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for rec in &self.log {
            *out.entry(rec.provenance.kind()).or_insert(0) += rec.improved;
        }
        out
    }

    /// Dense envelope matrix, one CSV row per grid row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.lower_envelope() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// `provenance,objective,slack,improved` lines.
    pub fn provenance_csv(&self) -> String {
        let mut out = String::from("provenance,objective,slack,improved\n");
        for r in &self.log {
            let obj = r.objective.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.provenance, obj, r.slack, r.improved);
        }
        out
    }
}

/// Accumulates the zero pair, every dyadic box pair and `budget` reweighted
/// dual pairs spread round-robin over the truncation ladder.
///
/// Pair `p` draws from stream `p` of a ChaCha generator keyed by `seed`, so
/// the result does not depend on scheduling.
pub fn generative_rectify(instance: &Instance, n: usize, budget: usize, seed: u64) -> Result<RectifiedAccumulator> {
    let d = instance.discretize(n)?;
    let mut acc = RectifiedAccumulator::new(d.cost.clone());
    acc.add(FeasiblePair::zero(n, n))?;
    for pair in box_infimum_pairs(&d.cost) {
        acc.add(pair)?;
    }
    let ladder = truncation_ladder(&d.cost);
    let truncated = ladder.iter().map(|&l| d.cost.truncate(l)).collect::<Result<Vec<_>>>()?;
    let pairs = (0..budget as u64)
        .into_par_iter()
        .map(|p| {
            let slot = (p as usize) % ladder.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p);
            let rw = sample_with(&mut rng, &d.mu, &d.nu)?;
            let provenance = Provenance::ReweightedDual { seed, stream: p, level: ladder[slot] };
            reweighted_dual(&truncated[slot], &d.mu, &d.nu, &rw, provenance)
        })
        .collect::<Result<Vec<_>>>()?;
    for pair in pairs {
        acc.add(pair)?;
    }
    Ok(acc)
}
