//! Subcommand bodies. Each returns a report; rows come back in input order
//! regardless of how the pool schedules the solves.

use dualgap_core::approximator::{block_approximate_plan, weak_star_distance, PlanKind};
use dualgap_core::catalog;
use dualgap_core::negligibility::{kellerer_trend, SetDescriptor};
use dualgap_core::rectifier::generative_rectify;
use dualgap_core::{solve_dual, solve_partial, solve_primal, Error, ExtendedReal, Instance, MarginalSpec, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{resolve_schedule, Tolerance};
use crate::report::Report;

fn gap(primal: ExtendedReal, dual: ExtendedReal) -> String {
    if primal.is_infinite() {
        if dual.is_infinite() { "0".into() } else { "inf".into() }
    } else {
        format!("{}", primal.to_f64() - dual.to_f64())
    }
}

pub fn solve(inst: &Instance, resolutions: &[usize]) -> Result<Report> {
    let rows = resolutions
        .par_iter()
        .map(|&n| {
            let d = inst.discretize(n)?;
            let p = solve_primal(&d.cost, &d.mu, &d.nu)?;
            let q = solve_dual(&d.cost, &d.mu, &d.nu)?;
            Ok(vec![
                inst.name.clone(),
                n.to_string(),
                p.value.to_string(),
                q.value.to_string(),
                p.status.to_string(),
                gap(p.value, q.value),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = Report::new(vec!["instance", "n", "primal", "dual", "status", "duality_gap"]);
    rows.into_iter().for_each(|row| r.push(row));
    Ok(r)
}

pub fn gap_scan(inst: &Instance, resolutions: &[usize], schedule: &[Tolerance]) -> Result<Report> {
    // (n, rows of (eps, value), primal, value at 1/n)
    let per_n = resolutions
        .par_iter()
        .map(|&n| {
            let d = inst.discretize(n)?;
            let primal = solve_primal(&d.cost, &d.mu, &d.nu)?.value;
            let values = resolve_schedule(schedule, n)
                .into_iter()
                .map(|eps| Ok((eps, solve_partial(&d.cost, &d.mu, &d.nu, eps)?.value)))
                .collect::<Result<Vec<_>>>()?;
            let diag_eps = 1.0 / n as f64;
            let diag = match values.iter().find(|(e, _)| *e == diag_eps) {
                Some(&(_, v)) => v,
                None => solve_partial(&d.cost, &d.mu, &d.nu, diag_eps)?.value,
            };
            Ok((n, values, primal, diag))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = Report::new(vec!["instance", "n", "eps", "partial", "primal"]);
    for (n, values, primal, _) in &per_n {
        for (eps, v) in values {
            r.push(vec![inst.name.clone(), n.to_string(), eps.to_string(), v.to_string(), primal.to_string()]);
        }
    }
    let trend: Vec<Value> =
        per_n.iter().map(|(n, _, p, d)| json!({"n": n, "primal": p.to_string(), "partial_at_1_over_n": d.to_string()})).collect();
    let (_, _, p_last, d_last) = per_n.last().expect("resolutions are non-empty");
    r.summarize("diagonal_schedule", Value::Array(trend));
    r.summarize("estimated_primal", p_last.to_string());
    r.summarize("estimated_dual", d_last.to_string());
    r.summarize("estimated_gap", gap(*p_last, *d_last));
    Ok(r)
}

pub fn rectify(inst: &Instance, n: usize, budget: usize, seed: u64) -> Result<Report> {
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    let acc = generative_rectify(inst, n, budget, seed)?;
    let env = acc.lower_envelope();
    let mut r = Report::new(vec!["i", "j", "cost", "envelope", "gap"]);
    for (i, row) in env.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            let c = acc.cost().get(i, j);
            let g = c.finite().map_or_else(|| "inf".to_string(), |c| (c - e).to_string());
            r.push(vec![i.to_string(), j.to_string(), c.to_string(), e.to_string(), g]);
        }
    }
    r.summarize("instance", inst.name.clone());
    r.summarize("n", n);
    r.summarize("sup_gap", acc.sup_gap());
    r.summarize("pair_count", acc.pair_count());
    if let Some(m) = acc.min_at_infinite() {
        r.summarize("min_at_infinite", m);
    }
    let contributions: serde_json::Map<String, Value> =
        acc.contributions().into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
    r.summarize("contributions", Value::Object(contributions));
    Ok(r)
}

pub fn negligible(descriptor: &str, resolutions: &[usize]) -> Result<Report> {
    let set: SetDescriptor = descriptor.parse()?;
    let u = MarginalSpec::Uniform;
    let (verdict, rows) = kellerer_trend(&set, &u, &u, resolutions)?;
    let mut r = Report::new(vec!["n", "max_plan_mass", "cover_mass"]);
    for row in &rows {
        r.push(vec![row.n.to_string(), row.max_plan_mass.to_string(), row.cover_mass.map(|v| v.to_string()).unwrap_or_default()]);
    }
    r.summarize("negligible", verdict.negligible);
    if let Some(reason) = &verdict.reason {
        r.summarize("reason", reason.clone());
    }
    r.document = Some(json!({
        "descriptor": serde_json::to_value(&set)?,
        "negligible": verdict.negligible,
        "witness": verdict.witness,
        "blocking_piece": verdict.blocking_piece,
        "reason": verdict.reason,
        "trend": rows,
    }));
    Ok(r)
}

pub fn approximate(inst: &Instance, plan: PlanKind, resolutions: &[usize], s: usize) -> Result<Report> {
    let finest = resolutions.iter().max().expect("resolutions are non-empty") * s;
    let target = plan.build(finest);
    let steps = resolutions
        .par_iter()
        .map(|&n| block_approximate_plan(&plan.build(n * s), inst, n, s))
        .collect::<Result<Vec<_>>>()?;
    let mut r = Report::new(vec![
        "instance", "n", "s", "mass", "cost_c", "target_cr_integral", "bound", "bound_ok", "cells_ok", "distance",
    ]);
    for step in &steps {
        // the metric needs power-of-two grids; other sizes leave the cell empty
        let distance = weak_star_distance(&step.plan, &target).map(|d| d.to_string()).unwrap_or_default();
        r.push(vec![
            inst.name.clone(),
            step.n.to_string(),
            step.s.to_string(),
            step.mass.to_string(),
            step.cost_c.to_string(),
            step.target_cr_integral.to_string(),
            (1.0 / step.n as f64).to_string(),
            step.bound_ok.to_string(),
            step.all_cells_ok().to_string(),
            distance,
        ]);
    }
    Ok(r)
}

pub fn catalog_list() -> Report {
    let mut r = Report::new(vec!["name", "tags", "P_c", "D_c", "note"]);
    for e in catalog::catalog() {
        let k = e.continuum_values();
        let show = |v: Option<ExtendedReal>| v.map(|v| v.to_string()).unwrap_or_default();
        r.push(vec![e.name().to_string(), e.tags.join(";"), show(k.primal), show(k.dual), e.citation.clone()]);
    }
    r
}

pub fn catalog_show(inst: &Instance) -> Result<Report> {
    let mut r = Report::new(vec!["name", "json"]);
    let text = inst.to_json()?;
    r.push(vec![inst.name.clone(), text.clone()]);
    r.document = Some(serde_json::from_str(&text)?);
    Ok(r)
}
