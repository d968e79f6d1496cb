use dualgap_core::approximator::*;
use dualgap_core::{catalog, DiscreteMeasure, TransportPlan};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_plan(seed: u64, n: usize) -> TransportPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n * n).map(|_| if rng.gen_bool(0.6) { rng.gen::<f64>() } else { 0.0 }).collect();
    let s: f64 = raw.iter().sum::<f64>().max(1e-300);
    TransportPlan::new(n, n, raw.iter().map(|v| v / s).collect()).unwrap()
}

proptest! {
    #[test]
    fn weak_star_metric_axioms(a in any::<u64>(), b in any::<u64>(), c in any::<u64>(), k in 0u32..4) {
        let n = 1usize << k;
        let (p, q, r) = (random_plan(a, n), random_plan(b, n), random_plan(c, n));
        let pq = weak_star_distance(&p, &q).unwrap();
        prop_assert!((pq - weak_star_distance(&q, &p).unwrap()).abs() <= 1e-15);
        prop_assert_eq!(weak_star_distance(&p, &p).unwrap(), 0.0);
        let pr = weak_star_distance(&p, &r).unwrap();
        let rq = weak_star_distance(&r, &q).unwrap();
        prop_assert!(pq <= pr + rq + 1e-12);
        prop_assert!(pq >= 0.0);
    }

    #[test]
    fn distinct_cell_masses_have_positive_distance(a in any::<u64>(), b in any::<u64>()) {
        let (p, q) = (random_plan(a, 4), random_plan(b, 4));
        let same = p.entries().iter().zip(q.entries()).all(|(x, y)| (x - y).abs() <= 1e-15);
        prop_assert_eq!(weak_star_distance(&p, &q).unwrap() <= 1e-15, same);
    }
}

#[test]
fn glued_plans_respect_fine_marginals() {
    for inst in [catalog::diag_inf().instance, catalog::diag_m(2.0).unwrap().instance, catalog::trivial_zero().instance] {
        for (n, s) in [(2usize, 4usize), (4, 4), (4, 8)] {
            let pi = PlanKind::Diagonal.build(n * s);
            let step = block_approximate_plan(&pi, &inst, n, s).unwrap();
            let u = DiscreteMeasure::uniform(n * s);
            assert!(step.plan.is_sub_coupling(&u, &u, 1e-12));
            assert!(step.all_cells_ok());
            assert!(step.mass >= 1.0 - (n * n) as f64 / (n as f64).powi(3) - 1e-12);
        }
    }
}

#[test]
fn product_plan_on_zero_cost() {
    let inst = catalog::trivial_zero().instance;
    let step = block_approximate_plan(&PlanKind::Product.build(32), &inst, 4, 8).unwrap();
    assert_eq!(step.cost_c.to_f64(), 0.0);
    for c in &step.per_cell_reports {
        assert!(c.cell_mass - c.retained_mass <= 1.0 / 64.0 + 1e-12);
    }
}

#[test]
fn step_serializes_the_documented_fields() {
    let inst = catalog::trivial_zero().instance;
    let step = block_approximate_plan(&PlanKind::Diagonal.build(8), &inst, 2, 4).unwrap();
    let v: serde_json::Value = serde_json::to_value(&step).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["bound_ok", "cost_c", "mass", "n", "s", "target_cr_integral"]);
}
