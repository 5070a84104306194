//! Brute-force checks that do not rely on the av-swap rule: projected vertex polygons, their
//! lower envelope, and Monte-Carlo sampling of doubly-stochastic maps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::conserved::GeneralizedInstance;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::polytope::{enumerate_vertices, VertexSet};
use crate::problem::{dot, ProblemInstance};
use crate::trajectory::{MinimalCostFunction, OptimalTrajectory, ALPHA_TOL};

/// Projections closer than this in α are treated as one abscissa.
const ALPHA_MERGE: f64 = 1e-12;
/// Largest dimension accepted by [`sample_doubly_stochastic`].
pub const MAX_SAMPLE_DIM: usize = 10;
/// Slack below which an audited point counts as a violation.
pub const AUDIT_TOL: f64 = 1e-9;

/// The image of the population polytope under `p ↦ (a·p, E·p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedPolygon {
    /// `(α, ε)` of every polytope vertex, in vertex order.
    pub points: Vec<(f64, f64)>,
    /// Convex hull, counter-clockwise from the lowest-α point.
    pub hull: Vec<(f64, f64)>,
    /// Lower boundary, ascending in α.
    pub lower_envelope: Vec<(f64, f64)>,
    /// Upper boundary, ascending in α.
    pub upper_envelope: Vec<(f64, f64)>,
}

impl InducedPolygon {
    pub fn alpha_range(&self) -> (f64, f64) {
        (
            self.lower_envelope[0].0,
            self.lower_envelope[self.lower_envelope.len() - 1].0,
        )
    }

    /// Whether the upper boundary is concave (slopes non-increasing) within `tol`.
    pub fn upper_is_concave(&self, tol: f64) -> bool {
        let s = slopes(&self.upper_envelope);
        s.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    /// Whether the lower boundary is convex (slopes non-decreasing) within `tol`.
    pub fn lower_is_convex(&self, tol: f64) -> bool {
        let s = slopes(&self.lower_envelope);
        s.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}

fn slopes(pts: &[(f64, f64)]) -> Vec<f64> {
    pts.windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect()
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower monotone chain of points sorted by `(x, y)`.
fn lower_chain(sorted: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &p in sorted {
        while out.len() >= 2 && cross(out[out.len() - 2], out[out.len() - 1], p) <= 0.0 {
            out.pop();
        }
        out.push(p);
    }
    out
}

fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower = lower_chain(&pts);
    let rev: Vec<_> = pts.iter().rev().copied().collect();
    let mut upper = lower_chain(&rev);
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Collapses abscissae within [`ALPHA_MERGE`], keeping the extreme ordinate chosen by `pick`.
fn merge_columns(points: &[(f64, f64)], pick: fn(f64, f64) -> f64) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        match out.last_mut() {
            Some(last) if p.0 - last.0 <= ALPHA_MERGE => last.1 = pick(last.1, p.1),
            _ => out.push(p),
        }
    }
    out
}

/// Projects every vertex and extracts hull and envelopes.
pub fn induced_polygon(vset: &VertexSet, a: &[f64], e: &[f64]) -> Result<InducedPolygon> {
    if vset.vertices.is_empty() {
        return Err(Error::Solver("empty vertex set"));
    }
    let d = vset.dim();
    for (field, v) in [("target", a), ("cost", e)] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                field,
                expected: d,
                found: v.len(),
            });
        }
    }
    let points: Vec<(f64, f64)> = vset
        .vertices
        .iter()
        .map(|v| (dot(a, v), dot(e, v)))
        .collect();
    let hull = convex_hull(&points);
    let lower_envelope = lower_chain(&merge_columns(&points, f64::min));
    let upper_envelope: Vec<(f64, f64)> = lower_chain(
        &merge_columns(&points, f64::max)
            .into_iter()
            .map(|(x, y)| (x, -y))
            .collect::<Vec<_>>(),
    )
    .into_iter()
    .map(|(x, y)| (x, -y))
    .collect();
    Ok(InducedPolygon {
        points,
        hull,
        lower_envelope,
        upper_envelope,
    })
}

/// Lower envelope value at `alpha`.
pub fn envelope_min_cost(poly: &InducedPolygon, alpha: f64) -> Result<f64> {
    let env = &poly.lower_envelope;
    let (min, max) = poly.alpha_range();
    if alpha.is_nan() || alpha < min - ALPHA_TOL || alpha > max + ALPHA_TOL {
        return Err(Error::AlphaOutOfRange { alpha, min, max });
    }
    let alpha = alpha.clamp(min, max);
    if env.len() == 1 {
        return Ok(env[0].1);
    }
    let s = env
        .partition_point(|p| p.0 <= alpha)
        .saturating_sub(1)
        .min(env.len() - 2);
    let (x0, y0) = env[s];
    let (x1, y1) = env[s + 1];
    if alpha == x0 {
        return Ok(y0);
    }
    Ok(y0 + (alpha - x0) * (y1 - y0) / (x1 - x0))
}

/// Vertices of the direct product of the per-block polytopes.
pub fn product_vertices(ginst: &GeneralizedInstance, max_dim: usize) -> Result<VertexSet> {
    let d = ginst.dim();
    let eps = ginst.base.eps_pop;
    let per_block: Vec<VertexSet> = ginst
        .block_lambdas
        .iter()
        .map(|lam| enumerate_vertices(lam, eps, max_dim))
        .collect::<Result<_>>()?;
    let mut vertices = vec![vec![0.0; d]];
    for (block, vs) in ginst.structure.blocks.iter().zip(&per_block) {
        let mut next = Vec::with_capacity(vertices.len() * vs.count);
        for partial in &vertices {
            for bv in &vs.vertices {
                let mut v = partial.clone();
                for (&i, &x) in block.iter().zip(bv) {
                    v[i] = x;
                }
                next.push(v);
            }
        }
        vertices = next;
    }
    let count = vertices.len();
    Ok(VertexSet { vertices, count })
}

fn random_permutation(d: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    perm
}

fn sample_with(d: usize, n_perms: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = n_perms.max(1);
    let mut weights: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut m = Matrix::zeros(d, d);
    for w in weights {
        let perm = random_permutation(d, rng);
        for (j, &i) in perm.iter().enumerate() {
            m[(i, j)] += w;
        }
    }
    m
}

/// Dirichlet(1)-weighted mixture of `n_perms` uniform random permutation matrices.
///
/// Not uniform on the Birkhoff polytope; good enough to look for counterexamples.
pub fn sample_doubly_stochastic(d: usize, n_perms: usize, seed: u64) -> Result<Matrix> {
    if d > MAX_SAMPLE_DIM {
        return Err(Error::DimensionTooLarge {
            dim: d,
            max: MAX_SAMPLE_DIM,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with(d, n_perms, &mut rng))
}

/// Outcome of a Monte-Carlo optimality audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub samples: usize,
    /// Samples whose α fell outside the trajectory's range (only possible for partial builds).
    pub skipped: usize,
    pub violations: usize,
    /// Smallest `ε − ω_opt(α)` seen.
    pub min_slack: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples doubly-stochastic maps (block-diagonal when a conserved observable is present),
/// applies them to the spectrum and checks no image beats the trajectory.
pub fn monte_carlo_audit(
    inst: &ProblemInstance,
    traj: &OptimalTrajectory,
    n_samples: usize,
    seed: u64,
) -> Result<AuditReport> {
    audit_against(inst, &traj.minimal_cost_function(), n_samples, seed)
}

/// [`monte_carlo_audit`] against an arbitrary piecewise-linear candidate, e.g. one read from disk.
pub fn audit_against(
    inst: &ProblemInstance,
    omega: &MinimalCostFunction,
    n_samples: usize,
    seed: u64,
) -> Result<AuditReport> {
    let d = inst.dim();
    let blocks: Vec<Vec<usize>> = match &inst.conserved {
        Some(c) => crate::conserved::block_decompose(c, crate::conserved::DEFAULT_EPS_CONSERVED).blocks,
        None => vec![(0..d).collect()],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AuditReport {
        samples: n_samples,
        skipped: 0,
        violations: 0,
        min_slack: f64::INFINITY,
    };
    for s in 0..n_samples {
        let mut p = vec![0.0; d];
        for block in &blocks {
            let n = block.len();
            // cycle the mixture size so pure permutations are sampled too
            let dm = sample_with(n, s % (n + 1) + 1, &mut rng);
            let lam: Vec<f64> = block.iter().map(|&i| inst.lambda[i]).collect();
            for (r, &i) in block.iter().enumerate() {
                p[i] = dm.row(r).iter().zip(&lam).map(|(x, y)| x * y).sum();
            }
        }
        let alpha = dot(&inst.target, &p);
        let eps = dot(&inst.cost, &p);
        match omega.eval(alpha) {
            Ok(w) => {
                let slack = eps - w;
                report.min_slack = report.min_slack.min(slack);
                if slack < -AUDIT_TOL {
                    report.violations += 1;
                }
            }
            Err(_) => report.skipped += 1,
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::DEFAULT_MAX_ENUM_DIM;

    fn vs(lam: &[f64]) -> VertexSet {
        enumerate_vertices(lam, 1e-12, DEFAULT_MAX_ENUM_DIM).unwrap()
    }

    #[test]
    fn two_dim_segment() {
        let p = induced_polygon(&vs(&[0.7, 0.3]), &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(p.hull.len(), 2);
        assert_eq!(p.lower_envelope, vec![(0.3, 0.7), (0.7, 0.3)]);
        assert!((envelope_min_cost(&p, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_target_collapses() {
        let p = induced_polygon(&vs(&[0.5, 0.3, 0.2]), &[1.0; 3], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.lower_envelope.len(), 1);
        assert!((envelope_min_cost(&p, 1.0).unwrap() - 0.7).abs() < 1e-15);
        assert!(envelope_min_cost(&p, 0.9).is_err());
    }

    #[test]
    fn points_above_envelope() {
        let a = [0.0, 0.2, 1.0, 0.5];
        let e = [0.4, 0.1, 0.9, 0.0];
        let p = induced_polygon(&vs(&[0.4, 0.3, 0.2, 0.1]), &a, &e).unwrap();
        for &(x, y) in &p.points {
            assert!(y >= envelope_min_cost(&p, x).unwrap() - 1e-12);
        }
        assert!(p.lower_is_convex(1e-12));
        assert!(p.upper_is_concave(1e-12));
        for h in &p.hull {
            assert!(p.points.contains(h));
        }
    }

    #[test]
    fn sampler_is_doubly_stochastic_and_seeded() {
        let m = sample_doubly_stochastic(6, 4, 9).unwrap();
        assert!(m.is_doubly_stochastic(1e-12));
        assert_eq!(m, sample_doubly_stochastic(6, 4, 9).unwrap());
        let p = sample_doubly_stochastic(5, 1, 3).unwrap();
        assert!(p.to_rows().iter().flatten().all(|&x| x == 0.0 || x == 1.0));
        assert!(sample_doubly_stochastic(11, 2, 0).is_err());
    }
}
