//! Named instances with their continuum values and rectifications.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{Axis, CostDescriptor, RegionKind, Sampling};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::instance::{Instance, KnownValues};

pub const DEFAULT_M: f64 = 2.0;
pub const DEFAULT_K: usize = 20;
/// Intervals used to stand in for the infinite union when solving for `alpha`;
/// the omitted tail has measure below `2^-60`.
const FULL_UNION_TERMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub instance: Instance,
    pub tags: Vec<String>,
    /// Why the continuum values hold.
    pub citation: String,
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        &self.instance.name
    }

    pub fn continuum_values(&self) -> KnownValues {
        self.instance.known_values.clone().unwrap_or_default()
    }
}

/// Parameters of the parametrized entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogParams {
    pub m: f64,
    pub k: usize,
    pub seed: u64,
    pub n: usize,
    pub range: (f64, f64),
}

impl Default for CatalogParams {
    fn default() -> Self {
        CatalogParams { m: DEFAULT_M, k: DEFAULT_K, seed: 0, n: 6, range: (0.0, 1.0) }
    }
}

pub const NAMES: [&str; 6] = ["diag_inf", "diag_M", "rational_nullmod", "fat_set", "trivial_zero", "random_finite"];

fn ext(v: f64) -> ExtendedReal {
    ExtendedReal::from_f64_lossy(v)
}

fn known(p: f64, d: f64, pr: f64) -> Option<KnownValues> {
    Some(KnownValues { primal: Some(ext(p)), dual: Some(ext(d)), rectified_primal: Some(ext(pr)) })
}

fn staircase(above: ExtendedReal) -> CostDescriptor {
    let mut c = CostDescriptor::constant(ExtendedReal::ZERO);
    c.push(RegionKind::AboveDiagonal, above);
    c.push(RegionKind::Diagonal, ExtendedReal::ONE);
    c
}

fn staircase_rectified(above: ExtendedReal) -> CostDescriptor {
    let mut c = CostDescriptor::constant(ExtendedReal::ZERO);
    c.push(RegionKind::AboveDiagonal, above);
    c
}

/// 0 below the diagonal, 1 on it, `+inf` above.
pub fn diag_inf() -> CatalogEntry {
    let mut inst = Instance::new("diag_inf", staircase(ExtendedReal::INFINITY));
    inst.known_rectified = Some(staircase_rectified(ExtendedReal::INFINITY));
    inst.known_values = known(1.0, 0.0, 0.0);
    CatalogEntry {
        instance: inst,
        tags: vec!["duality_gap".into(), "infinite_cost".into()],
        citation: "the diagonal carries the only finite plan (P=1); feasible pairs exceed 0 at countably many diagonal points only (D=0); rectified cost vanishes on y<=x".into(),
    }
}

/// The staircase with `m` in place of `+inf`.
pub fn diag_m(m: f64) -> Result<CatalogEntry> {
    if !(m.is_finite() && m > 1.0) {
        return Err(Error::Config(format!("diag_M needs a finite M > 1, got {m}")));
    }
    let mut inst = Instance::new(format!("diag_M(M={m})"), staircase(ext(m)));
    inst.known_rectified = Some(staircase_rectified(ext(m)));
    inst.known_values = known(0.0, 0.0, 0.0);
    Ok(CatalogEntry {
        instance: inst,
        tags: vec!["non_attainment".into(), "finite_cost".into()],
        citation: "finite cost: duality holds with value 0, not attained; optimizing sequences converge to the diagonal plan of cost 1; rectified cost is 0 on the diagonal".into(),
    })
}

/// `c = 1` except on the countable set `Q x Q`, where it is 0.
pub fn rational_nullmod() -> CatalogEntry {
    let mut cost = CostDescriptor::constant(ExtendedReal::ONE);
    cost.push(RegionKind::CountableMarker { label: "QxQ".into() }, ExtendedReal::ZERO);
    let mut inst = Instance::new("rational_nullmod", cost);
    inst.known_rectified = Some(CostDescriptor::constant(ExtendedReal::ONE));
    inst.known_values = known(1.0, 1.0, 1.0);
    CatalogEntry {
        instance: inst,
        tags: vec!["null_modification".into()],
        citation: "cost equals 1 off an L-negligible set, so the problem is the trivial one with c = 1".into(),
    }
}

/// Rationals of `[0, 1]` in lowest terms, by denominator then numerator.
pub fn rationals(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut q = 1u64;
    while out.len() < count {
        for p in 0..=q {
            if gcd(p, q) == 1 {
                out.push(p as f64 / q as f64);
                if out.len() == count {
                    break;
                }
            }
        }
        q += 1;
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `(q_k - alpha/2^k, q_k + alpha/2^k)` for `k = 1..=count`.
pub fn fat_intervals(alpha: f64, count: usize) -> Vec<(f64, f64)> {
    rationals(count)
        .into_iter()
        .enumerate()
        .map(|(k, q)| {
            let r = alpha / 2f64.powi(k as i32 + 1);
            (q - r, q + r)
        })
        .collect()
}

/// Lebesgue measure of a union of intervals intersected with `[0, 1]`.
pub fn union_measure(intervals: &[(f64, f64)]) -> f64 {
    let mut clipped: Vec<(f64, f64)> =
        intervals.iter().map(|&(a, b)| (a.max(0.0), b.min(1.0))).filter(|(a, b)| b > a).collect();
    clipped.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (a, b) in clipped {
        current = match current {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((a, b)) = current {
        total += b - a;
    }
    total
}

/// The `alpha` for which the full union has measure 1/2 (bisection).
pub fn fat_alpha() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if union_measure(&fat_intervals(mid, FULL_UNION_TERMS)) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `lambda(D_K)` with `D_K` the unit interval minus the first `k` intervals.
pub fn fat_set_measure(k: usize) -> f64 {
    1.0 - union_measure(&fat_intervals(fat_alpha(), k))
}

/// `c(x, y) = I_D(x)` with `D` truncated after `k` removed intervals; cells
/// are sampled by their exact x-average.
pub fn fat_set(k: usize) -> CatalogEntry {
    let mut cost = CostDescriptor::constant(ExtendedReal::ZERO);
    cost.push(
        RegionKind::ComplementOfIntervals { intervals: fat_intervals(fat_alpha(), k), axis: Axis::X },
        ExtendedReal::ONE,
    );
    let mut inst = Instance::new(format!("fat_set(K={k})"), cost.clone());
    inst.sampling = Sampling::CellAverage;
    inst.known_rectified = Some(cost);
    inst.known_values = known(0.5, 0.5, 0.5);
    CatalogEntry {
        instance: inst,
        tags: vec!["no_lsc_modification".into(), "bounded_cost".into()],
        citation: "c = I_D(x) with lambda(D) = 1/2: every plan and the pair (I_D, 0) give 1/2; finite K approximates from above".into(),
    }
}

pub fn trivial_zero() -> CatalogEntry {
    let mut inst = Instance::new("trivial_zero", CostDescriptor::constant(ExtendedReal::ZERO));
    inst.known_rectified = Some(CostDescriptor::constant(ExtendedReal::ZERO));
    inst.known_values = known(0.0, 0.0, 0.0);
    CatalogEntry { instance: inst, tags: vec!["trivial".into()], citation: "zero cost".into() }
}

/// Uniform marginals and one constant cost per grid cell drawn from `range`.
pub fn random_finite(seed: u64, n: usize, range: (f64, f64)) -> Result<Instance> {
    if n == 0 || n > 64 {
        return Err(Error::Config(format!("random_finite needs 1 <= n <= 64, got {n}")));
    }
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(Error::Config(format!("bad value range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cost = CostDescriptor::constant(ext(lo));
    let nf = n as f64;
    for i in 0..n {
        for j in 0..n {
            let v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let kind = RegionKind::Rectangle {
                x0: i as f64 / nf,
                x1: (i + 1) as f64 / nf,
                y0: j as f64 / nf,
                y1: (j + 1) as f64 / nf,
            };
            cost.push(kind, ext(v));
        }
    }
    Ok(Instance::new(format!("random_finite(seed={seed},n={n})"), cost))
}

fn random_entry(p: &CatalogParams) -> Result<CatalogEntry> {
    Ok(CatalogEntry {
        instance: random_finite(p.seed, p.n, p.range)?,
        tags: vec!["random".into(), "finite_cost".into()],
        citation: "seeded finite costs; duality and envelope identities hold".into(),
    })
}

/// Entry by name, with parameters for `diag_M`, `fat_set` and `random_finite`.
pub fn entry(name: &str, params: &CatalogParams) -> Result<CatalogEntry> {
    match name {
        "diag_inf" => Ok(diag_inf()),
        "diag_M" | "diag_m" => diag_m(params.m),
        "rational_nullmod" => Ok(rational_nullmod()),
        "fat_set" => Ok(fat_set(params.k)),
        "trivial_zero" => Ok(trivial_zero()),
        "random_finite" => random_entry(params),
        _ => Err(Error::Config(format!("unknown catalog entry {name:?}; known: {}", NAMES.join(", ")))),
    }
}

/// Every entry with default parameters.
pub fn catalog() -> Vec<CatalogEntry> {
    let p = CatalogParams::default();
    NAMES.iter().map(|n| entry(n, &p).expect("default parameters are valid")).collect()
}
