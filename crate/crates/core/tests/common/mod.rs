//! Independent oracles: vertex enumeration of the transportation polytope
//! and a dense two-phase tableau simplex.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dualgap_core::{CostMatrix, DiscreteMeasure, ExtendedReal};

const PIVOT_TOL: f64 = 1e-12;

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < PIVOT_TOL {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Minimum of `<C, pi>` over the vertices of the transportation polytope,
/// enumerated as basic solutions on `r + c - 1` allowed cells (the last
/// column constraint is redundant and dropped). `+inf` if none exists.
pub fn brute_force_transport(cost: &[Vec<f64>], mu: &[f64], nu: &[f64]) -> f64 {
    let (r, c) = (mu.len(), nu.len());
    let cells: Vec<(usize, usize)> =
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).filter(|&(i, j)| cost[i][j].is_finite()).collect();
    let k = r + c - 1;
    let mut best = f64::INFINITY;
    if cells.len() < k {
        return best;
    }
    let mut rhs: Vec<f64> = mu.to_vec();
    rhs.extend_from_slice(&nu[..c - 1]);
    combinations(cells.len(), k, &mut |pick| {
        let mut a = vec![vec![0.0; k]; k];
        for (col, &p) in pick.iter().enumerate() {
            let (i, j) = cells[p];
            a[i][col] = 1.0;
            if j < c - 1 {
                a[r + j][col] = 1.0;
            }
        }
        if let Some(x) = solve_square(a, rhs.clone()) {
            if x.iter().all(|&v| v >= -1e-12) {
                let val: f64 = pick.iter().zip(&x).map(|(&p, &v)| cost[cells[p].0][cells[p].1] * v.max(0.0)).sum();
                best = best.min(val);
            }
        }
    });
    best
}

/// `min c.x` subject to `a_eq x = b_eq`, `a_ub x <= b_ub`, `x >= 0`, by a
/// dense two-phase tableau with Bland's rule. `None` if infeasible.
pub fn dense_lp_min(c: &[f64], a_eq: &[Vec<f64>], b_eq: &[f64], a_ub: &[Vec<f64>], b_ub: &[f64]) -> Option<f64> {
    let nv = c.len();
    let (me, mu) = (a_eq.len(), a_ub.len());
    let m = me + mu;
    // columns: x (nv), slacks (mu), artificials (m), rhs
    let width = nv + mu + m + 1;
    let mut t = vec![vec![0.0; width]; m];
    for (row, (a, &b)) in a_ub.iter().zip(b_ub).chain(a_eq.iter().zip(b_eq)).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for v in 0..nv {
            t[row][v] = sign * a[v];
        }
        if row < mu {
            t[row][nv + row] = sign;
        }
        t[row][nv + mu + row] = 1.0;
        t[row][width - 1] = sign * b;
    }
    let mut basis: Vec<usize> = (0..m).map(|row| nv + mu + row).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, l: usize, enter: usize| {
        let p = t[l][enter];
        t[l].iter_mut().for_each(|v| *v /= p);
        let pivot_row = t[l].clone();
        for (r, row) in t.iter_mut().enumerate() {
            let f = row[enter];
            if r != l && f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
        basis[l] = enter;
    };
    // false when unbounded
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, obj: &[f64], allowed: usize| -> bool {
        loop {
            let reduced = |col: usize| obj[col] - (0..m).map(|r| obj[basis[r]] * t[r][col]).sum::<f64>();
            let Some(enter) = (0..allowed).find(|&col| !basis.contains(&col) && reduced(col) < -1e-10) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                if t[r][enter] > 1e-12 {
                    let ratio = t[r][width - 1] / t[r][enter];
                    let better = match leave {
                        None => true,
                        Some((l, lr)) => ratio < lr - 1e-14 || ((ratio - lr).abs() <= 1e-14 && basis[r] < basis[l]),
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((l, _)) = leave else {
                return false;
            };
            pivot(t, basis, l, enter);
        }
    };

    let mut phase1 = vec![0.0; width - 1];
    for v in phase1.iter_mut().skip(nv + mu) {
        *v = 1.0;
    }
    run(&mut t, &mut basis, &phase1, width - 1);
    let infeas: f64 = (0..m).filter(|&r| basis[r] >= nv + mu).map(|r| t[r][width - 1]).sum();
    if infeas > 1e-9 {
        return None;
    }
    // drive zero-level artificials out; rows with no other entry are redundant
    for r in 0..m {
        if basis[r] >= nv + mu {
            if let Some(col) = (0..nv + mu).find(|&col| t[r][col].abs() > 1e-9 && !basis.contains(&col)) {
                pivot(&mut t, &mut basis, r, col);
            }
        }
    }
    let mut phase2 = vec![0.0; width - 1];
    phase2[..nv].copy_from_slice(c);
    if !run(&mut t, &mut basis, &phase2, nv + mu) {
        return Some(f64::NEG_INFINITY);
    }
    Some((0..m).filter(|&r| basis[r] < nv).map(|r| c[basis[r]] * t[r][width - 1]).sum())
}

/// Partial transport value by the dense LP: rows `<= mu`, cols `<= nu`,
/// total `>= total - eps`; forbidden cells are left out.
pub fn partial_lp(cost: &[Vec<f64>], mu: &[f64], nu: &[f64], eps: f64) -> Option<f64> {
    let (r, c) = (mu.len(), nu.len());
    let cells: Vec<(usize, usize)> =
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).filter(|&(i, j)| cost[i][j].is_finite()).collect();
    let obj: Vec<f64> = cells.iter().map(|&(i, j)| cost[i][j]).collect();
    let mut a_ub = Vec::new();
    let mut b_ub = Vec::new();
    for i in 0..r {
        a_ub.push(cells.iter().map(|&(a, _)| if a == i { 1.0 } else { 0.0 }).collect());
        b_ub.push(mu[i]);
    }
    for j in 0..c {
        a_ub.push(cells.iter().map(|&(_, b)| if b == j { 1.0 } else { 0.0 }).collect());
        b_ub.push(nu[j]);
    }
    let total: f64 = mu.iter().sum();
    a_ub.push(vec![-1.0; cells.len()]);
    b_ub.push(-(total - eps));
    dense_lp_min(&obj, &[], &[], &a_ub, &b_ub)
}

/// Full transport value by the dense LP.
pub fn transport_lp(cost: &[Vec<f64>], mu: &[f64], nu: &[f64]) -> Option<f64> {
    let (r, c) = (mu.len(), nu.len());
    let cells: Vec<(usize, usize)> =
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).filter(|&(i, j)| cost[i][j].is_finite()).collect();
    let obj: Vec<f64> = cells.iter().map(|&(i, j)| cost[i][j]).collect();
    let mut a_eq: Vec<Vec<f64>> = Vec::new();
    let mut b_eq = Vec::new();
    for i in 0..r {
        a_eq.push(cells.iter().map(|&(a, _)| if a == i { 1.0 } else { 0.0 }).collect());
        b_eq.push(mu[i]);
    }
    for j in 0..c {
        a_eq.push(cells.iter().map(|&(_, b)| if b == j { 1.0 } else { 0.0 }).collect());
        b_eq.push(nu[j]);
    }
    dense_lp_min(&obj, &a_eq, &b_eq, &[], &[])
}

/// Staircase matrix: 0 below the diagonal, 1 on it, `above` elsewhere.
pub fn staircase(n: usize, above: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if j < i { 0.0 } else if j == i { 1.0 } else { above }).collect())
        .collect()
}

pub fn seeded_rows(seed: u64, r: usize, c: usize, forbid: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..r)
        .map(|_| {
            (0..c)
                .map(|_| if rng.gen::<f64>() < forbid { f64::INFINITY } else { (rng.gen::<f64>() * 10.0).round() / 4.0 })
                .collect()
        })
        .collect()
}

pub fn seeded_measure(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

pub fn matrix(rows: &[Vec<f64>]) -> CostMatrix {
    CostMatrix::from_rows(rows).unwrap()
}

pub fn measure(w: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::new(w.to_vec()).unwrap()
}

pub fn value(v: ExtendedReal) -> f64 {
    v.to_f64()
}
