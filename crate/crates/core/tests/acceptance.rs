//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the lines; the test fails if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use dualgap_core::approximator::{block_approximate_plan, liminf_harness, weak_star_distance, HarnessStatus};
use dualgap_core::cost::plan_cost;
use dualgap_core::negligibility::{apply_null_modification, kellerer_trend, SetDescriptor};
use dualgap_core::rectifier::{dual_envelope_matrix, generative_rectify};
use dualgap_core::solver::DUALITY_TOL;
use dualgap_core::{
    catalog, CostDescriptor, ExtendedReal, Instance, MarginalSpec, SolveStatus, TransportPlan, solve_dual, solve_partial,
    solve_primal,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn primal(inst: &Instance, n: usize) -> f64 {
    let d = inst.discretize(n).unwrap();
    value(solve_primal(&d.cost, &d.mu, &d.nu).unwrap().value)
}

fn criterion_1() -> Outcome {
    let e = catalog::diag_inf();
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [4usize, 16, 64] {
        let d = e.instance.discretize(n).unwrap();
        let p = value(solve_primal(&d.cost, &d.mu, &d.nu).unwrap().value);
        let q = value(solve_partial(&d.cost, &d.mu, &d.nu, 1.0 / n as f64).unwrap().value);
        pass &= (p - 1.0).abs() <= 1e-9 && q.abs() <= 1e-9;
        detail.push(format!("n={n} P={p} P^(1/n)={q}"));
    }
    let k = e.continuum_values();
    pass &= k.primal == Some(ExtendedReal::ONE) && k.dual == Some(ExtendedReal::ZERO);
    detail.push(format!("continuum P={:?} D={:?}", k.primal, k.dual));
    outcome(pass, detail.join("; "))
}

fn criterion_2() -> Outcome {
    let inst = catalog::diag_inf().instance;
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [4usize, 16, 64] {
        let d = inst.discretize(n).unwrap();
        let cr = inst.rectified_matrix(n).unwrap().unwrap();
        let p = value(solve_primal(&cr, &d.mu, &d.nu).unwrap().value);
        pass &= p.abs() <= 1e-9;
        detail.push(format!("n={n} P(c_r)={p}"));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_3() -> Outcome {
    let n = 4usize;
    let d = catalog::diag_inf().instance.discretize(n).unwrap();
    let (cost, mu, nu) = (d.cost.to_rows(), d.mu.weights().to_vec(), d.nu.weights().to_vec());
    let mut pass = true;
    let mut detail = Vec::new();
    for eps in [1.0 / 8.0, 1.0 / 16.0, 0.25, 0.5] {
        let lp = partial_lp(&cost, &mu, &nu, eps).unwrap();
        let solver = value(solve_partial(&d.cost, &d.mu, &d.nu, eps).unwrap().value);
        let formula = (1.0 / n as f64 - eps).max(0.0);
        pass &= (formula - lp).abs() <= 1e-9 && (solver - lp).abs() <= 1e-9;
        detail.push(format!("eps={eps} formula={formula} lp={lp} solver={solver}"));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_4() -> Outcome {
    let m = 2.0;
    let inst = catalog::diag_m(m).unwrap().instance;
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [4usize, 8, 16] {
        let p = primal(&inst, n);
        pass &= (p - m / n as f64).abs() <= 1e-9;
        detail.push(format!("n={n} P={p}"));
    }
    let mut distances = Vec::new();
    let mut last_cost = f64::NAN;
    for k in 2..=8 {
        let n = 1usize << k;
        let d = inst.discretize(n).unwrap();
        let r = solve_primal(&d.cost, &d.mu, &d.nu).unwrap();
        let plan = r.plan.unwrap();
        distances.push(weak_star_distance(&plan, &TransportPlan::uniform_diagonal(n)).unwrap());
        last_cost = value(plan_cost(&d.cost, &plan).unwrap());
    }
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);
    let diag_inf = catalog::diag_inf().instance.discretize(256).unwrap().cost;
    let limit_cost = value(plan_cost(&diag_inf, &TransportPlan::uniform_diagonal(256)).unwrap());
    let gap = limit_cost - last_cost;
    pass &= monotone && (limit_cost - 1.0).abs() <= 1e-9 && gap >= 0.99;
    detail.push(format!("distances={distances:.4?} monotone={monotone} limit cost={limit_cost} final cost={last_cost} gap={gap:.4}"));
    outcome(pass, detail.join("; "))
}

fn criterion_5() -> Outcome {
    let k = 20;
    let inst = catalog::fat_set(k).instance;
    let target = catalog::fat_set_measure(k);
    let d = inst.discretize(64).unwrap();
    let p = value(solve_primal(&d.cost, &d.mu, &d.nu).unwrap().value);
    let q = value(solve_dual(&d.cost, &d.mu, &d.nu).unwrap().value);
    let pass = (p - target).abs() <= 1e-6 && (q - target).abs() <= 1e-6 && target - 0.5 <= 0.02;
    outcome(pass, format!("lambda(D_K)={target} P={p} D={q}"))
}

fn criterion_6() -> Outcome {
    let mut worst_env = 0.0f64;
    let mut worst_gap = 0.0f64;
    for seed in 0..50u64 {
        let inst = catalog::random_finite(seed, 6, (0.0, 1.0)).unwrap();
        let cost = inst.discretize(6).unwrap().cost;
        let env = dual_envelope_matrix(&cost);
        for (a, b) in env.entries().iter().zip(cost.entries()) {
            worst_env = worst_env.max((value(*a) - value(*b)).abs());
        }
        worst_gap = worst_gap.max(generative_rectify(&inst, 6, 500, seed).unwrap().sup_gap());
    }
    outcome(worst_env <= 1e-7 && worst_gap <= 1e-4, format!("max |envelope - C|={worst_env:e} max sup-gap={worst_gap:e}"))
}

fn criterion_7() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for e in catalog::catalog() {
        for n in [2usize, 4, 8, 16] {
            let d = e.instance.discretize(n).unwrap();
            let p = solve_primal(&d.cost, &d.mu, &d.nu).unwrap();
            let q = solve_dual(&d.cost, &d.mu, &d.nu).unwrap();
            if p.status == SolveStatus::Optimal {
                worst = worst.max((value(p.value) - value(q.value)).abs());
                checked += 1;
            }
        }
    }
    for seed in 0..100u64 {
        let n = 1 + (seed as usize % 16);
        let cost = seeded_rows(seed, n, n, 0.0);
        let (c, mu, nu) = (matrix(&cost), measure(&seeded_measure(seed, n)), measure(&seeded_measure(seed + 1, n)));
        let p = solve_primal(&c, &mu, &nu).unwrap();
        let q = solve_dual(&c, &mu, &nu).unwrap();
        worst = worst.max((value(p.value) - value(q.value)).abs());
        checked += 1;
    }
    let mut worst_bf = 0.0f64;
    let mut bf_count = 0usize;
    for seed in 0..300u64 {
        let (r, c) = (1 + seed as usize % 3, 1 + (seed as usize / 3) % 3);
        let cost = seeded_rows(seed, r, c, 0.25);
        let (mu, nu) = (seeded_measure(seed ^ 0xA5A5, r), seeded_measure(seed ^ 0x5A5A, c));
        let bf = brute_force_transport(&cost, &mu, &nu);
        let s = value(solve_primal(&matrix(&cost), &measure(&mu), &measure(&nu)).unwrap().value);
        worst_bf = worst_bf.max(if bf.is_infinite() && s.is_infinite() { 0.0 } else { (bf - s).abs() });
        bf_count += 1;
    }
    outcome(
        worst <= DUALITY_TOL && worst_bf <= 1e-10,
        format!("{checked} instances max |P-D|={worst:e}; {bf_count} vertex enumerations max diff={worst_bf:e}"),
    )
}

fn criterion_8() -> Outcome {
    let inst = catalog::diag_inf().instance;
    let s = 8usize;
    let target = TransportPlan::uniform_diagonal(128);
    let mut pass = true;
    let mut detail = Vec::new();
    let mut distances = Vec::new();
    for n in [4usize, 8, 16] {
        let pi = TransportPlan::uniform_diagonal(n * s);
        let step = block_approximate_plan(&pi, &inst, n, s).unwrap();
        let cost = value(step.cost_c);
        let bound = 1.0 / n as f64;
        let cells_ok = step.all_cells_ok();
        pass &= cost <= bound && cells_ok;
        distances.push(weak_star_distance(&step.plan, &target).unwrap());
        detail.push(format!("n={n} cost_c={cost} bound={bound} cells_ok={cells_ok}"));
    }
    let non_increasing = distances.windows(2).all(|w| w[1] <= w[0]);
    pass &= non_increasing;
    detail.push(format!("distances={distances:.4?}"));
    outcome(pass, detail.join("; "))
}

fn criterion_9() -> Outcome {
    let inst = catalog::diag_m(2.0).unwrap().instance;
    let resolutions: Vec<usize> = (2..=9).map(|k| 1usize << k).collect();
    let report = liminf_harness(
        &inst,
        &resolutions,
        |n| Ok(TransportPlan::cyclic_shift(n)),
        |n| Ok(TransportPlan::uniform_diagonal(n)),
    )
    .unwrap();
    let pass = report.cr_holds && !report.c_holds && report.c_gap >= 0.99 && report.status == HarnessStatus::Conclusive;
    outcome(
        pass,
        format!(
            "c_r: limit={} tail min={}; c: limit={} tail min={} gap={:.4}; {:?}",
            report.limit_cost_cr, report.tail_min_cr, report.limit_cost_c, report.tail_min_c, report.c_gap, report.status
        ),
    )
}

fn criterion_10() -> Outcome {
    let u = MarginalSpec::Uniform;
    let battery: Vec<(&str, SetDescriptor, bool)> = vec![
        ("diagonal", SetDescriptor::diagonal(), false),
        ("segment y=0.3", SetDescriptor::horizontal_segment(0.3, 0.0, 1.0), true),
        ("segment y=0.5", SetDescriptor::horizontal_segment(0.5, 0.0, 1.0), true),
        ("segment y=1", SetDescriptor::horizontal_segment(1.0, 0.25, 0.75), true),
        ("segment y=0.75", SetDescriptor::horizontal_segment(0.75, 0.0, 0.5), true),
        ("point", SetDescriptor::points(vec![(0.5, 0.5)]), true),
        ("two points", SetDescriptor::points(vec![(0.25, 0.75), (0.75, 0.25)]), true),
        ("corner points", SetDescriptor::points(vec![(1.0, 1.0), (0.5, 0.25)]), true),
        ("QxQ", SetDescriptor::rationals(), true),
        (
            "segment and point",
            SetDescriptor::horizontal_segment(0.5, 0.0, 1.0).union(&SetDescriptor::points(vec![(0.25, 0.25)])),
            true,
        ),
    ];
    let resolutions = [4usize, 8, 16, 32];
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, set, expect_negligible) in &battery {
        let (verdict, rows) = kellerer_trend(set, &u, &u, &resolutions).unwrap();
        let masses_ok = if *expect_negligible {
            rows.iter().all(|r| r.max_plan_mass <= 2.0 / r.n as f64 + 1e-12)
        } else {
            rows.iter().all(|r| (r.max_plan_mass - 1.0).abs() <= 1e-12)
        };
        let ok = verdict.negligible == *expect_negligible && masses_ok;
        pass &= ok;
        if !ok {
            let masses: Vec<f64> = rows.iter().map(|r| r.max_plan_mass).collect();
            detail.push(format!("{label}: negligible={} masses={masses:?}", verdict.negligible));
        }
    }
    detail.insert(0, format!("{} descriptors at n={resolutions:?}", battery.len()));
    outcome(pass, detail.join("; "))
}

fn criterion_11() -> Outcome {
    let one = Instance::new("one", CostDescriptor::constant(ExtendedReal::ONE));
    let modified = apply_null_modification(&one, &SetDescriptor::rationals(), ExtendedReal::ZERO).unwrap();
    let mut pass = true;
    for n in [1usize, 2, 3, 4, 7, 8, 16, 32] {
        let d = modified.discretize(n).unwrap();
        let p = solve_primal(&d.cost, &d.mu, &d.nu).unwrap().value;
        let q = solve_dual(&d.cost, &d.mu, &d.nu).unwrap().value;
        pass &= p == ExtendedReal::ONE && q == ExtendedReal::ONE;
    }
    outcome(pass, "c = 1 with the QxQ marker set to 0: P = D = 1 at n in {1,2,3,4,7,8,16,32}")
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, Duration); 11] = [
        ("duality gap on the staircase", criterion_1, Duration::from_secs(10)),
        ("rectified duality", criterion_2, Duration::from_secs(10)),
        ("partial-value formula", criterion_3, Duration::from_secs(1)),
        ("non-attainment (M=2)", criterion_4, Duration::from_secs(10)),
        ("fat set", criterion_5, Duration::from_secs(30)),
        ("finite rectification", criterion_6, Duration::from_secs(60)),
        ("strong duality suite", criterion_7, Duration::from_secs(60)),
        ("block approximation", criterion_8, Duration::from_secs(60)),
        ("liminf harness", criterion_9, Duration::from_secs(10)),
        ("negligibility trend", criterion_10, Duration::from_secs(30)),
        ("null modification", criterion_11, Duration::from_secs(5)),
    ];
    let mut failed = Vec::new();
    for (k, (label, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        // runtimes are measured on debug builds; the budget is reported, not enforced
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {label}: {} [{elapsed:.2?} of {budget:?}]", k + 1, o.detail);
        if !o.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
