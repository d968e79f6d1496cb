//! L-negligibility of declaratively described subsets of the unit square.
//!
//! A set `A` is L-negligible when `A ⊆ (M × Y) ∪ (X × N)` for a `mu`-null
//! `M` and a `nu`-null `N`. For the closed grammar below and atomless
//! marginals this is decided piece by piece; witnesses are combined by
//! union.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::{CostMatrix, RegionKind};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::geometry::{PiecewiseLinear, GEOM_TOL};
use crate::grid::{DiscreteMeasure, Grid, MarginalSpec};
use crate::instance::{Instance, Modification};
use crate::solver::{solve_primal, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    /// Half-open box `(x0, x1] x (y0, y1]`.
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Graph { graph: PiecewiseLinear },
    PointSet { points: Vec<(f64, f64)> },
    /// Symbolic countable set such as `Q x Q`; contains no grid atoms.
    CountableSet { label: String },
}

impl Piece {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.to_region().contains(x, y)
    }

    pub fn to_region(&self) -> RegionKind {
        match self {
            Piece::Rectangle { x0, x1, y0, y1 } => RegionKind::Rectangle { x0: *x0, x1: *x1, y0: *y0, y1: *y1 },
            Piece::Graph { graph } => RegionKind::Graph { graph: graph.clone() },
            Piece::PointSet { points } => RegionKind::PointSet { points: points.clone() },
            Piece::CountableSet { label } => RegionKind::CountableMarker { label: label.clone() },
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            Piece::Rectangle { x0, x1, y0, y1 } => {
                if ![x0, x1, y0, y1].iter().all(|v| unit(**v)) || x1 < x0 || y1 < y0 {
                    return Err(Error::Config(format!("bad rectangle ({x0},{x1}]x({y0},{y1}]")));
                }
            }
            Piece::Graph { graph } => graph.validate()?,
            Piece::PointSet { points } => {
                if !points.iter().all(|&(x, y)| unit(x) && unit(y)) {
                    return Err(Error::Config("points must lie in the unit square".into()));
                }
            }
            Piece::CountableSet { .. } => {}
        }
        Ok(())
    }
}

/// Finite union of pieces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SetDescriptor {
    pub pieces: Vec<Piece>,
}

impl SetDescriptor {
    pub fn new(pieces: Vec<Piece>) -> Self {
        SetDescriptor { pieces }
    }

    pub fn empty() -> Self {
        SetDescriptor::default()
    }

    pub fn diagonal() -> Self {
        SetDescriptor::new(vec![Piece::Graph { graph: PiecewiseLinear::identity() }])
    }

    pub fn horizontal_segment(y: f64, x0: f64, x1: f64) -> Self {
        SetDescriptor::new(vec![Piece::Graph { graph: PiecewiseLinear::constant(y, x0, x1) }])
    }

    pub fn points(points: Vec<(f64, f64)>) -> Self {
        SetDescriptor::new(vec![Piece::PointSet { points }])
    }

    pub fn rationals() -> Self {
        SetDescriptor::new(vec![Piece::CountableSet { label: "QxQ".into() }])
    }

    pub fn union(&self, other: &SetDescriptor) -> SetDescriptor {
        SetDescriptor::new(self.pieces.iter().chain(&other.pieces).cloned().collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.pieces.iter().try_for_each(Piece::validate)
    }

    pub fn to_regions(&self) -> Vec<RegionKind> {
        self.pieces.iter().map(Piece::to_region).collect()
    }

    pub fn contains_atom(&self, grid: Grid, i: usize, j: usize) -> bool {
        let (x, y) = (grid.atom(i), grid.atom(j));
        self.pieces.iter().any(|p| p.contains(x, y))
    }
}

/// Union of intervals, points and symbolic countable sets on one axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NullSet {
    pub intervals: Vec<(f64, f64)>,
    pub points: Vec<f64>,
    pub countable: Vec<String>,
}

impl NullSet {
    fn extend(&mut self, other: NullSet) {
        self.intervals.extend(other.intervals);
        self.points.extend(other.points);
        self.countable.extend(other.countable);
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.points.is_empty() && self.countable.is_empty()
    }

    /// Mass under an atomless marginal (points and countable sets are null).
    pub fn measure(&self, spec: &MarginalSpec) -> Result<f64> {
        self.intervals.iter().map(|&(a, b)| spec.measure_of(a, b)).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a - GEOM_TOL <= t && t <= b + GEOM_TOL)
            || self.points.iter().any(|&p| (p - t).abs() <= GEOM_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub m: NullSet,
    pub n: NullSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegligibilityVerdict {
    pub negligible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocking_piece: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl NegligibilityVerdict {
    /// `mu(M) = nu(N) = 0` and the cover contains every atom of `A` on `grid`.
    pub fn witness_is_valid(&self, set: &SetDescriptor, mu: &MarginalSpec, nu: &MarginalSpec, grid: Grid) -> Result<bool> {
        let Some(w) = &self.witness else {
            return Ok(!self.negligible);
        };
        if w.m.measure(mu)? > 0.0 || w.n.measure(nu)? > 0.0 {
            return Ok(false);
        }
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                if set.contains_atom(grid, i, j) && !w.m.contains(grid.atom(i)) && !w.n.contains(grid.atom(j)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

enum PieceRule {
    Null(Witness),
    Blocked(String),
}

fn sloped_segment_rule(
    seg: crate::geometry::Segment,
    mu: &MarginalSpec,
    nu: &MarginalSpec,
) -> Result<PieceRule> {
    // split the domain where either density may jump along the graph
    let mut cuts = vec![seg.x0, seg.x1];
    cuts.extend(mu.breakpoints().into_iter().filter(|&b| b > seg.x0 && b < seg.x1));
    for b in nu.breakpoints() {
        let x = seg.inverse(b);
        if x > seg.x0 && x < seg.x1 {
            cuts.push(x);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut w = Witness { m: NullSet::default(), n: NullSet::default() };
    w.m.points.extend(&cuts);
    for c in cuts.windows(2) {
        let (p, q) = (c[0], c[1]);
        let mid = 0.5 * (p + q);
        let dx = mu.density_at(mid)?;
        let dy = nu.density_at(seg.eval(mid))?;
        if dx > 0.0 && dy > 0.0 {
            return Ok(PieceRule::Blocked(format!(
                "sloped graph over [{p}, {q}] has positive marginal mass on both axes"
            )));
        }
        if dx == 0.0 {
            w.m.intervals.push((p, q));
        } else {
            let (a, b) = (seg.eval(p), seg.eval(q));
            w.n.intervals.push((a.min(b), a.max(b)));
        }
    }
    Ok(PieceRule::Null(w))
}

fn piece_rule(piece: &Piece, mu: &MarginalSpec, nu: &MarginalSpec) -> Result<PieceRule> {
    let mut w = Witness { m: NullSet::default(), n: NullSet::default() };
    match piece {
        Piece::Rectangle { x0, x1, y0, y1 } => {
            if x1 <= x0 || y1 <= y0 {
                return Ok(PieceRule::Null(w));
            }
            if mu.measure_of(*x0, *x1)? == 0.0 {
                w.m.intervals.push((*x0, *x1));
            } else if nu.measure_of(*y0, *y1)? == 0.0 {
                w.n.intervals.push((*y0, *y1));
            } else {
                return Ok(PieceRule::Blocked("rectangle with positive mass on both sides".into()));
            }
        }
        Piece::PointSet { points } => w.m.points.extend(points.iter().map(|p| p.0)),
        Piece::CountableSet { label } => w.m.countable.push(label.clone()),
        Piece::Graph { graph } => {
            for seg in graph.segments() {
                if seg.is_constant() {
                    w.n.points.push(seg.y0);
                    continue;
                }
                match sloped_segment_rule(seg, mu, nu)? {
                    PieceRule::Null(sw) => {
                        w.m.extend(sw.m);
                        w.n.extend(sw.n);
                    }
                    blocked => return Ok(blocked),
                }
            }
        }
    }
    Ok(PieceRule::Null(w))
}

/// Decides L-negligibility of `set` for atomless marginals.
pub fn is_l_negligible(set: &SetDescriptor, mu: &MarginalSpec, nu: &MarginalSpec) -> Result<NegligibilityVerdict> {
    for spec in [mu, nu] {
        if !spec.is_atomless() {
            return Err(Error::Unsupported("negligibility rules assume atomless marginals".into()));
        }
        spec.validate()?;
    }
    set.validate()?;
    let mut witness = Witness { m: NullSet::default(), n: NullSet::default() };
    for (k, piece) in set.pieces.iter().enumerate() {
        match piece_rule(piece, mu, nu)? {
            PieceRule::Null(w) => {
                witness.m.extend(w.m);
                witness.n.extend(w.n);
            }
            PieceRule::Blocked(reason) => {
                return Ok(NegligibilityVerdict {
                    negligible: false,
                    witness: None,
                    blocking_piece: Some(k),
                    reason: Some(reason),
                })
            }
        }
    }
    Ok(NegligibilityVerdict { negligible: true, witness: Some(witness), blocking_piece: None, reason: None })
}

/// Largest mass a coupling of `mu`, `nu` can put on the grid atoms of `set`.
///
/// Solved as a transport problem with cost 0 on `set` and 1 elsewhere
/// (the unit shift of the indicator cost keeps costs non-negative).
pub fn max_plan_mass(set: &SetDescriptor, mu: &DiscreteMeasure, nu: &DiscreteMeasure, n: usize) -> Result<f64> {
    let grid = Grid::new(n)?;
    if mu.len() != n || nu.len() != n {
        return Err(Error::Input("marginals do not live on the requested grid".into()));
    }
    let mut cost = CostMatrix::constant(n, n, ExtendedReal::ONE);
    for i in 0..n {
        for j in 0..n {
            if set.contains_atom(grid, i, j) {
                cost.set(i, j, ExtendedReal::ZERO);
            }
        }
    }
    let report = solve_primal(&cost, mu, nu)?;
    if report.status != SolveStatus::Optimal {
        return Err(Error::Precondition(format!("mass LP ended with status {:?}", report.status)));
    }
    Ok((mu.total() - report.value.to_f64()).clamp(0.0, mu.total()))
}

/// Mass of the grid atoms lying in the witness cover: an upper bound for
/// [`max_plan_mass`] whenever the verdict is negligible.
pub fn witness_cover_mass(witness: &Witness, mu: &DiscreteMeasure, nu: &DiscreteMeasure, grid: Grid) -> f64 {
    let mx: f64 = (0..grid.n()).filter(|&i| witness.m.contains(grid.atom(i))).map(|i| mu.weight(i)).sum();
    let ny: f64 = (0..grid.n()).filter(|&j| witness.n.contains(grid.atom(j))).map(|j| nu.weight(j)).sum();
    mx + ny
}

#[derive(Debug, Clone, Serialize)]
pub struct KellererRow {
    pub n: usize,
    pub max_plan_mass: f64,
    /// `Some` for negligible verdicts.
    pub cover_mass: Option<f64>,
}

/// `max_plan_mass` across resolutions, with the witness cover bound.
pub fn kellerer_trend(
    set: &SetDescriptor,
    mu: &MarginalSpec,
    nu: &MarginalSpec,
    resolutions: &[usize],
) -> Result<(NegligibilityVerdict, Vec<KellererRow>)> {
    let verdict = is_l_negligible(set, mu, nu)?;
    let rows = resolutions
        .iter()
        .map(|&n| {
            let grid = Grid::new(n)?;
            let (dmu, dnu) = (mu.discretize(grid)?, nu.discretize(grid)?);
            Ok(KellererRow {
                n,
                max_plan_mass: max_plan_mass(set, &dmu, &dnu, n)?,
                cover_mass: verdict.witness.as_ref().map(|w| witness_cover_mass(w, &dmu, &dnu, grid)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((verdict, rows))
}

/// Overrides the cost on `set` by `value`, refusing sets that are not
/// L-negligible for the instance marginals.
pub fn apply_null_modification(instance: &Instance, set: &SetDescriptor, value: ExtendedReal) -> Result<Instance> {
    let verdict = is_l_negligible(set, &instance.marginal_x, &instance.marginal_y)?;
    if !verdict.negligible {
        return Err(Error::NotNegligible {
            piece: verdict.blocking_piece.unwrap_or(0),
            reason: verdict.reason.unwrap_or_default(),
        });
    }
    let mut out = instance.clone();
    // an earlier modification becomes part of the base cost
    out.cost = instance.effective_cost();
    out.modification = Some(Modification { set: set.clone(), value });
    out.name = format!("{}+nullmod", instance.name);
    Ok(out)
}

impl fmt::Display for SetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (parse_number(a)?, parse_number(b)?);
            a / b
        }
        None => s.parse::<f64>().map_err(|_| Error::Config(format!("not a number: {s:?}")))?,
    };
    Ok(v)
}

/// Parses `[(x, y), (x, y), ...]`.
fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>> {
    let body = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Config(format!("expected [(x,y), ...], got {s:?}")))?;
    let mut out = Vec::new();
    for chunk in body.split(')') {
        let chunk = chunk.trim().trim_start_matches(',').trim();
        if chunk.is_empty() {
            continue;
        }
        let inner = chunk
            .strip_prefix('(')
            .ok_or_else(|| Error::Config(format!("expected (x,y), got {chunk:?}")))?;
        let (x, y) = inner
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("expected (x,y), got {chunk:?}")))?;
        out.push((parse_number(x)?, parse_number(y)?));
    }
    Ok(out)
}

/// Parses `[a, b]`.
fn parse_interval(s: &str) -> Result<(f64, f64)> {
    let body = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Config(format!("expected [a,b], got {s:?}")))?;
    let (a, b) = body.split_once(',').ok_or_else(|| Error::Config(format!("expected [a,b], got {s:?}")))?;
    Ok((parse_number(a)?, parse_number(b)?))
}

fn parse_piece(text: &str) -> Result<Piece> {
    let text = text.trim();
    let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    let rest = rest.trim();
    match head {
        "diagonal" => Ok(Piece::Graph { graph: PiecewiseLinear::identity() }),
        "anti-diagonal" | "antidiagonal" => Ok(Piece::Graph { graph: PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 0.0)])? }),
        "rationals" | "QxQ" => Ok(Piece::CountableSet { label: "QxQ".into() }),
        "points" => Ok(Piece::PointSet { points: parse_pairs(rest)? }),
        "graph" => Ok(Piece::Graph { graph: PiecewiseLinear::new(parse_pairs(rest)?)? }),
        "rect" => {
            let v = rest.split_whitespace().map(parse_number).collect::<Result<Vec<_>>>()?;
            match v[..] {
                [x0, x1, y0, y1] => Ok(Piece::Rectangle { x0, x1, y0, y1 }),
                _ => Err(Error::Config("rect takes four numbers: x0 x1 y0 y1".into())),
            }
        }
        "segment" => {
            // segment y=<c> x∈[a,b]   (also "x in [a,b]")
            let rest = rest.replace('∈', " in ");
            let y_part = rest
                .split_whitespace()
                .next()
                .and_then(|t| t.strip_prefix("y="))
                .ok_or_else(|| Error::Config(format!("expected 'segment y=c x in [a,b]', got {text:?}")))?;
            let y = parse_number(y_part)?;
            let interval = rest
                .split_once("in")
                .map(|(_, r)| r.trim())
                .ok_or_else(|| Error::Config(format!("missing x-range in {text:?}")))?;
            let (a, b) = parse_interval(interval)?;
            Ok(Piece::Graph { graph: PiecewiseLinear::new(vec![(a, y), (b, y)])? })
        }
        _ => Err(Error::Config(format!("unknown set piece {head:?}"))),
    }
}

impl FromStr for SetDescriptor {
    type Err = Error;

    /// JSON, or `;`-separated pieces: `diagonal`, `anti-diagonal`,
    /// `segment y=0.3 x∈[0,0.5]`, `points [(0.5,0.5)]`, `graph [(x,y),..]`,
    /// `rect x0 x1 y0 y1`, `rationals`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let set = if s.starts_with('{') {
            serde_json::from_str(s)?
        } else {
            SetDescriptor::new(
                s.split(';')
                    .filter(|p| !p.trim().is_empty())
                    .map(parse_piece)
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        set.validate()?;
        Ok(set)
    }
}
