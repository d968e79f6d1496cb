mod common;

use common::*;
use dualgap_core::rectifier::*;
use dualgap_core::solver::FEAS_TOL;
use dualgap_core::{catalog, CostMatrix, DiscreteMeasure};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random pair made feasible by a c-transform of random row potentials.
fn random_feasible_pair(cost: &CostMatrix, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi: Vec<f64> = (0..cost.rows()).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let psi: Vec<f64> = (0..cost.cols())
        .map(|j| {
            let best = (0..cost.rows())
                .filter_map(|i| cost.get(i, j).finite().map(|c| c - phi[i]))
                .fold(f64::INFINITY, f64::min);
            let shave: f64 = rng.gen_range(0.0..1.0);
            if best.is_finite() { best - shave } else { rng.gen_range(-3.0..3.0) }
        })
        .collect();
    (phi, psi)
}

#[test]
fn envelope_dominates_random_feasible_pairs() {
    for inst in 0..5u64 {
        let cost = matrix(&seeded_rows(inst, 6, 6, 0.2));
        let env = dual_envelope_matrix(&cost);
        for k in 0..100 {
            let (phi, psi) = random_feasible_pair(&cost, inst * 1000 + k);
            for i in 0..6 {
                for j in 0..6 {
                    assert!(phi[i] + psi[j] <= env.get(i, j).to_f64() + FEAS_TOL);
                }
            }
        }
    }
}

#[test]
fn envelope_equals_finite_cost_and_ignores_reweighting() {
    for seed in 0..50u64 {
        let cost = catalog::random_finite(seed, 6, (0.0, 1.0)).unwrap().discretize(6).unwrap().cost;
        let env = dual_envelope_matrix(&cost);
        for (a, b) in env.entries().iter().zip(cost.entries()) {
            assert!((a.to_f64() - b.to_f64()).abs() <= 1e-7);
        }
    }
}

#[test]
fn envelope_is_infinite_exactly_at_forbidden_pairs() {
    let cost = catalog::diag_inf().instance.discretize(5).unwrap().cost;
    let env = dual_envelope_matrix(&cost);
    assert_eq!(env, cost);
}

#[test]
fn generative_envelope_stays_below_the_pointwise_envelope_and_grows_with_budget() {
    let inst = catalog::random_finite(11, 5, (0.0, 3.0)).unwrap();
    let cost = inst.discretize(5).unwrap().cost;
    let env = dual_envelope_matrix(&cost);
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for budget in [0usize, 5, 20, 60] {
        let acc = generative_rectify(&inst, 5, budget, 9).unwrap();
        let cur = acc.lower_envelope();
        for i in 0..5 {
            for j in 0..5 {
                assert!(cur[i][j] <= env.get(i, j).to_f64() + FEAS_TOL);
                assert!(cur[i][j] >= 0.0);
                if let Some(p) = &prev {
                    assert!(cur[i][j] >= p[i][j]);
                }
            }
        }
        prev = Some(cur);
    }
}

#[test]
fn staircase_rectification_recovers_the_finite_entries() {
    let inst = catalog::diag_inf().instance;
    let acc = generative_rectify(&inst, 4, 200, 42).unwrap();
    assert!(acc.sup_gap() <= 1e-6);
    // forbidden entries reach the top of the truncation ladder
    assert!(acc.min_at_infinite().unwrap() >= acc.cost().max_finite());
}

#[test]
fn staircase_truncated_at_two_gives_the_finite_variant_value() {
    let d = catalog::diag_inf().instance.discretize(4).unwrap();
    let ones = ReweightPair { f: vec![1.0; 4], g: vec![1.0; 4] };
    let pair = reweighted_dual_optimizer(&d.cost.truncate(2).unwrap(), &d.mu, &d.nu, &ones).unwrap();
    assert!((pair.objective.unwrap() - 0.5).abs() <= 1e-9);
    assert!(pair.potentials.is_feasible(&d.cost, FEAS_TOL));
}

#[test]
fn rectification_is_deterministic_per_seed() {
    let inst = catalog::random_finite(2, 4, (0.0, 2.0)).unwrap();
    let a = generative_rectify(&inst, 4, 30, 5).unwrap();
    let b = generative_rectify(&inst, 4, 30, 5).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.provenance_csv(), b.provenance_csv());
}

proptest! {
    #[test]
    fn accumulator_is_monotone(seed in any::<u64>(), count in 1usize..20) {
        let cost = matrix(&seeded_rows(seed, 4, 4, 0.3));
        let mut acc = RectifiedAccumulator::new(cost.clone());
        let mut prev = acc.lower_envelope();
        for k in 0..count as u64 {
            let (phi, psi) = random_feasible_pair(&cost, seed.wrapping_add(k));
            acc.add(FeasiblePair::user(phi, psi)).unwrap();
            let cur = acc.lower_envelope();
            for (a, b) in cur.iter().flatten().zip(prev.iter().flatten()) {
                prop_assert!(a >= b);
            }
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!(cur[i][j] <= cost.get(i, j).to_f64() + FEAS_TOL);
                }
            }
            prev = cur;
        }
    }

    #[test]
    fn sampled_pairs_satisfy_balance(seed in any::<u64>(), n in 1usize..10) {
        let mu = measure(&seeded_measure(seed, n));
        let nu = DiscreteMeasure::uniform(n);
        let p = sample_reweight_pair(&mu, &nu, seed).unwrap();
        prop_assert!(p.is_balanced(&mu, &nu));
        prop_assert!(p.mass(&mu) > 0.0);
    }

    #[test]
    fn reweighted_pairs_are_feasible_everywhere(seed in any::<u64>()) {
        let cost = matrix(&seeded_rows(seed, 5, 5, 0.0));
        let mu = DiscreteMeasure::uniform(5);
        let pair = sample_reweight_pair(&mu, &mu, seed).unwrap();
        let fp = reweighted_dual_optimizer(&cost, &mu, &mu, &pair).unwrap();
        prop_assert!(fp.potentials.is_feasible(&cost, FEAS_TOL));
    }
}
