//! Oracle suite run by `trajopt verify`, operating on trajectory-file data so that a
//! tampered file is judged on what it claims.

use serde::Serialize;
use trajopt_core::conserved::{block_decompose, generalized_vertex_count, GeneralizedInstance, DEFAULT_EPS_CONSERVED};
use trajopt_core::oracle::{
    audit_against, envelope_min_cost, induced_polygon, product_vertices,
};
use trajopt_core::polytope::{enumerate_vertices, is_edge, VertexSet};
use trajopt_core::problem::{cost_value, target_value};
use trajopt_core::trajectory::MinimalCostFunction;
use trajopt_core::ProblemInstance;

use crate::files::{build_any, TrajectoryFile};
use crate::CliError;

const TOL: f64 = 1e-9;
const ENVELOPE_SAMPLES: usize = 50;
const EDGE_MAX_DIM: usize = 5;
const MAX_PRODUCT_VERTICES: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn human_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let tag = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Skipped => "WARN skipped",
                };
                format!("{tag} {}: {}", c.name, c.detail)
            })
            .collect()
    }
}

fn check(name: &'static str, failures: Vec<String>, ok_detail: String) -> Check {
    if failures.is_empty() {
        Check {
            name,
            status: Status::Pass,
            detail: ok_detail,
        }
    } else {
        Check {
            name,
            status: Status::Fail,
            detail: failures.join("; "),
        }
    }
}

fn skipped(name: &'static str, detail: String) -> Check {
    Check {
        name,
        status: Status::Skipped,
        detail,
    }
}

fn sorted_desc(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = v.collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

fn structure(inst: &ProblemInstance, file: &TrajectoryFile, blocks: &[Vec<usize>]) -> Check {
    let mut bad = Vec::new();
    let n = file.vertices.len();
    if n == 0 || file.breakpoints.len() != n || file.steps.len() + 1 != n {
        bad.push(format!(
            "{} vertices, {} breakpoints, {} steps",
            n,
            file.breakpoints.len(),
            file.steps.len()
        ));
        return check("structure", bad, String::new());
    }
    let d = inst.dim();
    for (i, v) in file.vertices.iter().enumerate() {
        if v.len() != d {
            bad.push(format!("vertex {i} has length {}", v.len()));
            continue;
        }
        for block in blocks {
            let want = sorted_desc(block.iter().map(|&j| inst.lambda[j]));
            let got = sorted_desc(block.iter().map(|&j| v[j]));
            if want.iter().zip(&got).any(|(a, b)| (a - b).abs() > TOL) {
                bad.push(format!("vertex {i} is not a (block-wise) permutation of the spectrum"));
                break;
            }
        }
        let [a, w] = file.breakpoints[i];
        if (target_value(v, &inst.target) - a).abs() > TOL || (cost_value(v, &inst.cost) - w).abs() > TOL {
            bad.push(format!("breakpoint {i} does not match its vertex"));
        }
    }
    for (i, s) in file.steps.iter().enumerate() {
        if s.k >= d || s.l >= d {
            bad.push(format!("step {i} index out of range"));
            continue;
        }
        let mut next = file.vertices[i].clone();
        next.swap(s.k, s.l);
        if next.iter().zip(&file.vertices[i + 1]).any(|(a, b)| (a - b).abs() > TOL) {
            bad.push(format!("step {i} does not map vertex {i} to vertex {}", i + 1));
        }
        let [a0, _] = file.breakpoints[i];
        let [a1, _] = file.breakpoints[i + 1];
        if a1 <= a0 {
            bad.push(format!("breakpoints not strictly increasing at {i}"));
        }
        if (s.alpha_start - a0).abs() > TOL || (s.alpha_end - a1).abs() > TOL {
            bad.push(format!("step {i} alpha span disagrees with breakpoints"));
        }
    }
    let (first, last) = (file.breakpoints[0][0], file.breakpoints[n - 1][0]);
    if (file.alpha_range[0] - first).abs() > TOL || (file.alpha_range[1] - last).abs() > TOL {
        bad.push("alpha_range disagrees with breakpoints".into());
    }
    check("structure", bad, format!("{n} vertices consistent"))
}

fn gradients(inst: &ProblemInstance, file: &TrajectoryFile) -> Check {
    let mut bad = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for (i, s) in file.steps.iter().enumerate() {
        let (k, l) = (s.k, s.l);
        if k >= inst.dim() || l >= inst.dim() {
            bad.push(format!("step {i} index out of range"));
            continue;
        }
        let da = inst.target[k] - inst.target[l];
        let g = (inst.cost[k] - inst.cost[l]) / da;
        if !g.is_finite() || (g - s.gradient).abs() > TOL * (1.0 + g.abs()) {
            bad.push(format!("step {i}: stored gradient {} but (E_k-E_l)/(a_k-a_l) = {g}", s.gradient));
        }
        if s.gradient < prev - TOL {
            bad.push(format!("step {i}: gradient decreases"));
        }
        prev = s.gradient;
    }
    check("gradients", bad, format!("{} steps, non-decreasing", file.steps.len()))
}

fn fresh_build(inst: &ProblemInstance, file: &TrajectoryFile) -> Result<Check, CliError> {
    let traj = build_any(inst).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut bad = Vec::new();
    if traj.breakpoints.len() != file.breakpoints.len() {
        bad.push(format!(
            "{} breakpoints, rebuild has {}",
            file.breakpoints.len(),
            traj.breakpoints.len()
        ));
    } else {
        for (i, (&(a, w), [fa, fw])) in traj.breakpoints.iter().zip(&file.breakpoints).enumerate() {
            if (a - fa).abs() > TOL || (w - fw).abs() > TOL {
                bad.push(format!("breakpoint {i} differs from rebuild"));
            }
        }
    }
    Ok(check("rebuild", bad, "matches a fresh build".into()))
}

fn vertex_set(inst: &ProblemInstance, blocks: &[Vec<usize>], cap: usize) -> Result<VertexSet, String> {
    let largest = blocks.iter().map(Vec::len).max().unwrap_or(0);
    if largest > cap {
        return Err(format!("dimension {largest} exceeds enumeration cap {cap}"));
    }
    if inst.conserved.is_some() {
        let g = GeneralizedInstance::new(inst.clone()).map_err(|e| e.to_string())?;
        let count = generalized_vertex_count(&g).map_err(|e| e.to_string())?;
        if count > MAX_PRODUCT_VERTICES {
            return Err(format!("{count} product vertices"));
        }
        product_vertices(&g, cap).map_err(|e| e.to_string())
    } else {
        enumerate_vertices(&inst.lambda, inst.eps_pop, cap).map_err(|e| e.to_string())
    }
}

fn envelope(inst: &ProblemInstance, f: &MinimalCostFunction, vset: &VertexSet) -> Check {
    let poly = match induced_polygon(vset, &inst.target, &inst.cost) {
        Ok(p) => p,
        Err(e) => return check("envelope", vec![e.to_string()], String::new()),
    };
    let mut bad = Vec::new();
    let (lo, hi) = poly.alpha_range();
    let (flo, fhi) = f.domain();
    if (lo - flo).abs() > TOL || (hi - fhi).abs() > TOL {
        bad.push(format!("alpha range [{flo}, {fhi}] but polygon spans [{lo}, {hi}]"));
        return check("envelope", bad, String::new());
    }
    let mut alphas: Vec<f64> = f.breakpoints.iter().map(|b| b.0).collect();
    alphas.extend((0..ENVELOPE_SAMPLES).map(|i| lo + (hi - lo) * i as f64 / (ENVELOPE_SAMPLES - 1) as f64));
    let mut worst: f64 = 0.0;
    for a in alphas {
        match (f.eval(a), envelope_min_cost(&poly, a)) {
            (Ok(w), Ok(e)) => worst = worst.max((w - e).abs()),
            (Err(e), _) | (_, Err(e)) => bad.push(e.to_string()),
        }
    }
    if worst > TOL {
        bad.push(format!("max |omega - envelope| = {worst:e}"));
    }
    check(
        "envelope",
        bad,
        format!("{} vertices, max deviation {worst:e}", vset.count),
    )
}

fn edges(file: &TrajectoryFile, vset: &VertexSet, eps: f64) -> Check {
    let mut bad = Vec::new();
    for (i, w) in file.vertices.windows(2).enumerate() {
        match is_edge(&w[0], &w[1], vset, eps.max(TOL)) {
            Ok(true) => {}
            Ok(false) => bad.push(format!("step {i} is not a polytope edge")),
            Err(e) => bad.push(format!("step {i}: {e}")),
        }
    }
    check("edges", bad, format!("{} steps are edges", file.steps.len()))
}

pub fn run(
    inst: &ProblemInstance,
    file: &TrajectoryFile,
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<Report, CliError> {
    let blocks = match &inst.conserved {
        Some(c) => block_decompose(c, DEFAULT_EPS_CONSERVED).blocks,
        None => vec![(0..inst.dim()).collect()],
    };
    let mut checks = vec![structure(inst, file, &blocks)];
    let consistent = checks[0].status == Status::Pass;
    checks.push(gradients(inst, file));
    checks.push(fresh_build(inst, file)?);
    let f = MinimalCostFunction {
        breakpoints: file.breakpoints.iter().map(|&[a, w]| (a, w)).collect(),
    };

    match (consistent, vertex_set(inst, &blocks, cap)) {
        (false, _) => {
            checks.push(skipped("envelope", "inconsistent trajectory file".into()));
            checks.push(skipped("edges", "inconsistent trajectory file".into()));
        }
        (true, Ok(vset)) => {
            checks.push(envelope(inst, &f, &vset));
            if inst.dim() <= EDGE_MAX_DIM {
                checks.push(edges(file, &vset, inst.eps_pop));
            } else {
                checks.push(skipped("edges", format!("dimension {} > {EDGE_MAX_DIM}", inst.dim())));
            }
        }
        (true, Err(why)) => {
            checks.push(skipped("envelope", why.clone()));
            checks.push(skipped("edges", why));
        }
    }

    if !consistent {
        checks.push(skipped("monte-carlo", "inconsistent trajectory file".into()));
    } else {
        let r = audit_against(inst, &f, samples, seed).map_err(|e| CliError::Domain(e.to_string()))?;
        let mut bad = Vec::new();
        if r.violations > 0 {
            bad.push(format!("{} of {} samples below omega (min slack {:e})", r.violations, r.samples, r.min_slack));
        }
        if r.skipped > 0 {
            bad.push(format!("{} samples outside the alpha range", r.skipped));
        }
        checks.push(check(
            "monte-carlo",
            bad,
            format!("{} samples, min slack {:e}", r.samples, r.min_slack),
        ));
    }

    let passed = checks.iter().all(|c| c.status != Status::Fail);
    Ok(Report { passed, checks })
}
