use dualgap_core::negligibility::*;
use dualgap_core::{catalog, solve_dual, solve_primal, ExtendedReal, Grid, MarginalSpec};
use proptest::prelude::*;

const U: MarginalSpec = MarginalSpec::Uniform;

fn negligible_piece() -> impl Strategy<Value = SetDescriptor> {
    prop_oneof![
        (0.0f64..1.0, 0.0f64..0.5, 0.5f64..1.0).prop_map(|(y, a, b)| SetDescriptor::horizontal_segment(y, a, b)),
        prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..5).prop_map(SetDescriptor::points),
        Just(SetDescriptor::rationals()),
    ]
}

proptest! {
    #[test]
    fn union_of_negligible_sets_is_negligible(a in negligible_piece(), b in negligible_piece()) {
        let (va, vb) = (is_l_negligible(&a, &U, &U).unwrap(), is_l_negligible(&b, &U, &U).unwrap());
        prop_assert!(va.negligible && vb.negligible);
        let u = a.union(&b);
        let vu = is_l_negligible(&u, &U, &U).unwrap();
        prop_assert!(vu.negligible);
        let (wa, wb, wu) = (va.witness.unwrap(), vb.witness.unwrap(), vu.witness.clone().unwrap());
        prop_assert_eq!(wu.m.points.len(), wa.m.points.len() + wb.m.points.len());
        prop_assert_eq!(wu.n.points.len(), wa.n.points.len() + wb.n.points.len());
        prop_assert!(vu.witness_is_valid(&u, &U, &U, Grid::new(8).unwrap()).unwrap());
    }

    #[test]
    fn kellerer_bound_holds_for_negligible_sets(a in negligible_piece(), n in 2usize..12) {
        let (verdict, rows) = kellerer_trend(&a, &U, &U, &[n]).unwrap();
        prop_assert!(verdict.negligible);
        let row = &rows[0];
        prop_assert!(row.max_plan_mass <= row.cover_mass.unwrap() + 1e-9);
    }
}

#[test]
fn diagonal_carries_all_mass_at_every_resolution() {
    let (v, rows) = kellerer_trend(&SetDescriptor::diagonal(), &U, &U, &[4, 8, 16, 32]).unwrap();
    assert!(!v.negligible);
    assert!(rows.iter().all(|r| (r.max_plan_mass - 1.0).abs() < 1e-9 && r.cover_mass.is_none()));
}

#[test]
fn rational_marker_leaves_unit_cost_unchanged() {
    let one = dualgap_core::Instance::new("one", dualgap_core::CostDescriptor::constant(ExtendedReal::ONE));
    let modified = apply_null_modification(&one, &SetDescriptor::rationals(), ExtendedReal::ZERO).unwrap();
    for n in [2, 3, 4, 8, 16] {
        let d = modified.discretize(n).unwrap();
        assert_eq!(d.cost, one.discretize(n).unwrap().cost);
        assert_eq!(solve_primal(&d.cost, &d.mu, &d.nu).unwrap().value, ExtendedReal::ONE);
        assert_eq!(solve_dual(&d.cost, &d.mu, &d.nu).unwrap().value, ExtendedReal::ONE);
    }
}

#[test]
fn point_modification_soundness() {
    let zero = catalog::trivial_zero().instance;
    let set = SetDescriptor::points(vec![(0.5, 0.5)]);
    let modified = apply_null_modification(&zero, &set, ExtendedReal::INFINITY).unwrap();
    for n in [4usize, 5] {
        let d = modified.discretize(n).unwrap();
        let hit = (0..n).any(|i| (0..n).any(|j| set.contains_atom(Grid::new(n).unwrap(), i, j)));
        assert_eq!(hit, n % 2 == 0);
        let p = solve_primal(&d.cost, &d.mu, &d.nu).unwrap().value;
        let q = solve_dual(&d.cost, &d.mu, &d.nu).unwrap().value;
        assert_eq!(p, ExtendedReal::ZERO);
        assert!(q.to_f64().abs() <= 1e-9);
        // no coupling puts mass on a single atom pair beyond 1/n
        assert!(max_plan_mass(&set, &d.mu, &d.nu, n).unwrap() <= 1.0 / n as f64 + 1e-12);
    }
}

#[test]
fn segment_modification_on_the_staircase() {
    let inst = catalog::diag_inf().instance;
    let seg = SetDescriptor::horizontal_segment(0.3, 0.5, 1.0);
    let modified = apply_null_modification(&inst, &seg, ExtendedReal::new(7.0).unwrap()).unwrap();
    let d = modified.discretize(8).unwrap();
    let p = solve_primal(&d.cost, &d.mu, &d.nu).unwrap();
    assert!((p.value.to_f64() - 1.0).abs() <= 1e-9);
}

#[test]
fn modification_survives_the_file_format() {
    let inst = catalog::diag_inf().instance;
    let modified = apply_null_modification(&inst, &SetDescriptor::rationals(), ExtendedReal::INFINITY).unwrap();
    let back = dualgap_core::Instance::from_json(&modified.to_json().unwrap()).unwrap();
    assert_eq!(back, modified);
}
