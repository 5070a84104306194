//! Construction and evaluation of the optimal trajectory.
//!
//! The trajectory starts at the minimal vertex of the population polytope (spectrum sorted
//! descending along the preferred basis) and repeatedly applies the adjacent-value swap that
//! increases the target at the smallest cost-per-target gradient. Each step is an edge of the
//! polytope, so the minimal cost function is the piecewise-linear interpolation of the visited
//! vertices. Only `O(d)` candidate swaps are scanned per step; nothing here enumerates the
//! polytope.

use crate::error::{Error, Result};
use crate::lift::TTransform;
use crate::polytope::av_swaps;
use crate::problem::{dot, value_classes, PreferredOrder, ProblemInstance, COEFF_EPS};

/// Absolute tolerance used when checking `alpha` against the trajectory domain.
pub const ALPHA_TOL: f64 = 1e-9;

/// Description of the tie-breaking rule, recorded in serialized trajectories.
pub const TIE_BREAK_POLICY: &str = "min gradient; ties within eps_grad by lexicographically smallest (k, l) in preferred positions";

/// One adjacent-value swap along the trajectory, in preferred-basis positions.
///
/// `a[k] > a[l]` and `p[k] < p[l]` before the swap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapStep {
    pub k: usize,
    pub l: usize,
    pub delta_alpha: f64,
    pub gradient: f64,
    pub alpha_start: f64,
    pub alpha_end: f64,
}

impl SwapStep {
    /// The swapped pair as original basis indices.
    pub fn original_pair(&self, order: &PreferredOrder) -> (usize, usize) {
        (order.perm[self.k], order.perm[self.l])
    }
}

/// Whether the optimal state at `α_min` is unique, and which condition certifies it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uniqueness {
    /// All target coefficients are distinct.
    DistinctTargets,
    /// Costs are distinct inside every block of equal target coefficients.
    DistinctCostsWithinTargets,
    /// The minimal arrangement puts equal eigenvalues on every (target, cost)-degenerate block.
    DegeneratePopulations,
    NotUnique,
}

impl Uniqueness {
    pub fn is_unique(self) -> bool {
        self != Uniqueness::NotUnique
    }

    /// 1-based index of the certifying condition.
    pub fn condition(self) -> Option<u8> {
        match self {
            Uniqueness::DistinctTargets => Some(1),
            Uniqueness::DistinctCostsWithinTargets => Some(2),
            Uniqueness::DegeneratePopulations => Some(3),
            Uniqueness::NotUnique => None,
        }
    }
}

/// A population on the trajectory together with its location.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    /// Preferred-basis populations.
    pub population: Vec<f64>,
    /// Index of the active step (0 when the trajectory has no steps).
    pub segment: usize,
    /// Fraction of the active step already applied, in `[0, 1]`.
    pub fraction: f64,
}

/// Piecewise-linear minimal cost function on `[α_min, α_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalCostFunction {
    pub breakpoints: Vec<(f64, f64)>,
}

impl MinimalCostFunction {
    pub fn domain(&self) -> (f64, f64) {
        let first = self.breakpoints[0].0;
        let last = self.breakpoints[self.breakpoints.len() - 1].0;
        (first, last)
    }

    /// Slopes of consecutive segments.
    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    fn clamp(&self, alpha: f64) -> Result<f64> {
        let (min, max) = self.domain();
        if alpha < min - ALPHA_TOL || alpha > max + ALPHA_TOL || alpha.is_nan() {
            return Err(Error::AlphaOutOfRange { alpha, min, max });
        }
        Ok(alpha.clamp(min, max))
    }

    /// Index `s` of the last breakpoint with `α_s ≤ alpha`, capped to the last segment.
    fn segment_of(&self, alpha: f64) -> usize {
        let n = self.breakpoints.len();
        let s = self.breakpoints.partition_point(|b| b.0 <= alpha);
        s.saturating_sub(1).min(n.saturating_sub(2))
    }

    pub fn eval(&self, alpha: f64) -> Result<f64> {
        let alpha = self.clamp(alpha)?;
        if let Some(b) = self.breakpoints.iter().find(|b| b.0 == alpha) {
            return Ok(b.1);
        }
        let s = self.segment_of(alpha);
        let (a0, w0) = self.breakpoints[s];
        let (a1, w1) = self.breakpoints[s + 1];
        Ok(w0 + (alpha - a0) * (w1 - w0) / (a1 - a0))
    }
}

/// The optimal trajectory: vertices visited, the swaps between them, and `ω_opt`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalTrajectory {
    pub order: PreferredOrder,
    /// Preferred-basis population vectors; `vertices[i + 1]` is `vertices[i]` after `steps[i]`.
    pub vertices: Vec<Vec<f64>>,
    pub steps: Vec<SwapStep>,
    /// `(α, ω)` at every vertex.
    pub breakpoints: Vec<(f64, f64)>,
    pub(crate) target: Vec<f64>,
    pub(crate) cost: Vec<f64>,
    pub(crate) blocks: Vec<usize>,
    /// Reference spectrum in original coordinates (the diagonal state the lift starts from).
    pub(crate) reference: Vec<f64>,
    pub(crate) eps_pop: f64,
    pub(crate) eps_grad: f64,
}

impl OptimalTrajectory {
    pub fn alpha_range(&self) -> (f64, f64) {
        self.minimal_cost_function().domain()
    }

    pub fn minimal_cost_function(&self) -> MinimalCostFunction {
        MinimalCostFunction {
            breakpoints: self.breakpoints.clone(),
        }
    }

    pub fn gradients(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.gradient).collect()
    }

    /// Target coefficients in preferred order.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Cost coefficients in preferred order.
    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// Conserved-block label of every preferred position (all zero without a conserved observable).
    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn vertex_original(&self, i: usize) -> Vec<f64> {
        self.order.to_original(&self.vertices[i])
    }

    /// Steps that start at or after `alpha`.
    pub fn steps_from(&self, alpha: f64) -> &[SwapStep] {
        let first = self
            .steps
            .iter()
            .position(|s| s.alpha_start >= alpha - ALPHA_TOL)
            .unwrap_or(self.steps.len());
        &self.steps[first..]
    }

    /// Permutation `π` with `vertices[0]` (original coordinates) `[π[j]] = reference[j]`.
    pub fn initial_permutation(&self) -> Vec<usize> {
        let start = self.vertex_original(0);
        let d = start.len();
        let blocks_orig = self.order.to_original(&self.blocks);
        let mut perm = vec![0; d];
        let n_blocks = self.blocks.iter().max().map_or(0, |m| m + 1);
        for b in 0..n_blocks {
            let mut src: Vec<usize> = (0..d).filter(|&i| blocks_orig[i] == b).collect();
            let mut dst = src.clone();
            src.sort_by(|&i, &j| self.reference[j].total_cmp(&self.reference[i]).then(i.cmp(&j)));
            dst.sort_by(|&i, &j| start[j].total_cmp(&start[i]).then(i.cmp(&j)));
            for (s, t) in src.into_iter().zip(dst) {
                perm[s] = t;
            }
        }
        perm
    }
}

/// Preferred-basis view of an instance used while stepping.
struct Engine {
    order: PreferredOrder,
    target: Vec<f64>,
    cost: Vec<f64>,
    target_rank: Vec<usize>,
    cost_rank: Vec<usize>,
    blocks: Vec<usize>,
    lambda: Vec<f64>,
    eps_pop: f64,
    eps_grad: f64,
}

impl Engine {
    /// `block_labels` are per original index; `None` means a single block.
    fn new(inst: &ProblemInstance, block_labels: Option<&[usize]>) -> Self {
        let d = inst.dim();
        let ra = value_classes(&inst.target, COEFF_EPS);
        let re = value_classes(&inst.cost, COEFF_EPS);
        let zeros = vec![0; d];
        let labels = block_labels.unwrap_or(&zeros);
        let mut perm: Vec<usize> = (0..d).collect();
        perm.sort_by_key(|&i| (labels[i], ra[i], re[i], i));
        let order = PreferredOrder::from_perm(perm);
        Self {
            target: order.to_preferred(&inst.target),
            cost: order.to_preferred(&inst.cost),
            target_rank: order.to_preferred(&ra),
            cost_rank: order.to_preferred(&re),
            blocks: order.to_preferred(labels),
            lambda: inst.lambda.clone(),
            eps_pop: inst.eps_pop,
            eps_grad: inst.eps_grad,
            order,
        }
    }

    fn block_positions(&self) -> Vec<Vec<usize>> {
        let n_blocks = self.blocks.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); n_blocks];
        for (pos, &b) in self.blocks.iter().enumerate() {
            out[b].push(pos);
        }
        out
    }

    fn block_spectrum(&self, positions: &[usize]) -> Vec<f64> {
        let mut vals: Vec<f64> = positions
            .iter()
            .map(|&pos| self.lambda[self.order.perm[pos]])
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    fn minimal_vertex(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.target.len()];
        for positions in self.block_positions() {
            // preferred order already runs (target asc, cost asc) inside each block
            for (&pos, v) in positions.iter().zip(self.block_spectrum(&positions)) {
                p[pos] = v;
            }
        }
        p
    }

    fn maximal_vertex(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.target.len()];
        for mut positions in self.block_positions() {
            let values = self.block_spectrum(&positions);
            positions.sort_by(|&x, &y| {
                self.target_rank[y]
                    .cmp(&self.target_rank[x])
                    .then(self.cost_rank[x].cmp(&self.cost_rank[y]))
                    .then(x.cmp(&y))
            });
            for (pos, v) in positions.into_iter().zip(values) {
                p[pos] = v;
            }
        }
        p
    }

    fn is_vertex(&self, p: &[f64]) -> bool {
        if p.len() != self.target.len() {
            return false;
        }
        self.block_positions().iter().all(|positions| {
            let mut got: Vec<f64> = positions.iter().map(|&pos| p[pos]).collect();
            got.sort_by(|a, b| b.total_cmp(a));
            got.iter()
                .zip(self.block_spectrum(positions))
                .all(|(x, y)| (x - y).abs() <= self.eps_pop)
        })
    }

    fn next_step(&self, p: &[f64]) -> Option<SwapStep> {
        let mut best: Option<SwapStep> = None;
        for positions in self.block_positions() {
            let local: Vec<f64> = positions.iter().map(|&pos| p[pos]).collect();
            for s in av_swaps(&local, self.eps_pop) {
                let (k, l) = (positions[s.k], positions[s.l]);
                if self.target_rank[k] <= self.target_rank[l] {
                    continue;
                }
                let gradient = (self.cost[k] - self.cost[l]) / (self.target[k] - self.target[l]);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        gradient < b.gradient - self.eps_grad
                            || (gradient <= b.gradient + self.eps_grad && (k, l) < (b.k, b.l))
                    }
                };
                if better {
                    let delta_alpha = (self.target[k] - self.target[l]) * (p[l] - p[k]);
                    best = Some(SwapStep {
                        k,
                        l,
                        delta_alpha,
                        gradient,
                        alpha_start: 0.0,
                        alpha_end: 0.0,
                    });
                }
            }
        }
        best.map(|mut s| {
            s.alpha_start = dot(&self.target, p);
            s.alpha_end = s.alpha_start + s.delta_alpha;
            s
        })
    }

    fn run(self, start: Vec<f64>, reference: Vec<f64>) -> OptimalTrajectory {
        let mut vertices = vec![start];
        let mut steps = Vec::new();
        let mut breakpoints = vec![(
            dot(&self.target, &vertices[0]),
            dot(&self.cost, &vertices[0]),
        )];
        loop {
            let current = vertices.last().expect("non-empty");
            let Some(mut step) = self.next_step(current) else {
                break;
            };
            let mut next = current.clone();
            next.swap(step.k, step.l);
            let point = (dot(&self.target, &next), dot(&self.cost, &next));
            let prev = breakpoints.last().expect("non-empty").0;
            step.alpha_start = prev;
            // keep breakpoints strictly increasing even when Δα is below rounding noise
            step.alpha_end = point.0.max(prev + step.delta_alpha);
            breakpoints.push((step.alpha_end, point.1));
            steps.push(step);
            vertices.push(next);
        }
        OptimalTrajectory {
            order: self.order,
            vertices,
            steps,
            breakpoints,
            target: self.target,
            cost: self.cost,
            blocks: self.blocks,
            reference,
            eps_pop: self.eps_pop,
            eps_grad: self.eps_grad,
        }
    }
}

/// Minimal vertex in preferred coordinates: the spectrum sorted descending.
pub fn minimal_vertex(inst: &ProblemInstance, order: &PreferredOrder) -> Vec<f64> {
    let mut values = inst.lambda.clone();
    values.sort_by(|a, b| b.total_cmp(a));
    debug_assert_eq!(values.len(), order.len());
    values
}

/// Maximal vertex in preferred coordinates.
///
/// Largest eigenvalues go to the largest target coefficients; inside a block of equal target
/// coefficients the larger eigenvalue sits at the lower cost.
pub fn maximal_vertex(inst: &ProblemInstance, order: &PreferredOrder) -> Vec<f64> {
    let engine = Engine::new(inst, None);
    debug_assert_eq!(&engine.order, order);
    engine.maximal_vertex()
}

/// The cheapest target-increasing adjacent-value swap at the preferred-basis vertex `p`.
pub fn next_step(p: &[f64], inst: &ProblemInstance) -> Result<Option<SwapStep>> {
    let engine = Engine::new(inst, None);
    if !engine.is_vertex(p) {
        return Err(Error::NotAVertex);
    }
    Ok(engine.next_step(p))
}

/// Builds the full optimal trajectory from the minimal to the maximal vertex.
pub fn build(inst: &ProblemInstance) -> Result<OptimalTrajectory> {
    build_with_blocks(inst, None, None)
}

/// Builds the trajectory that starts at the vertex `start` (original coordinates) instead of the
/// minimal vertex. Starting from a vertex already on the optimal trajectory yields its upper part.
pub fn build_from(inst: &ProblemInstance, start: &[f64]) -> Result<OptimalTrajectory> {
    build_with_blocks(inst, None, Some(start))
}

pub(crate) fn build_with_blocks(
    inst: &ProblemInstance,
    block_labels: Option<&[usize]>,
    start: Option<&[f64]>,
) -> Result<OptimalTrajectory> {
    let engine = Engine::new(inst, block_labels);
    let first = match start {
        None => engine.minimal_vertex(),
        Some(s) => {
            if s.len() != inst.dim() {
                return Err(Error::DimensionMismatch {
                    field: "start",
                    expected: inst.dim(),
                    found: s.len(),
                });
            }
            let p = engine.order.to_preferred(s);
            if !engine.is_vertex(&p) {
                return Err(Error::NotAVertex);
            }
            p
        }
    };
    Ok(engine.run(first, inst.lambda.clone()))
}

/// `ω_opt(α)`.
pub fn omega_opt(traj: &OptimalTrajectory, alpha: f64) -> Result<f64> {
    traj.minimal_cost_function().eval(alpha)
}

/// Population on the trajectory with target value `alpha`.
pub fn state_at(traj: &OptimalTrajectory, alpha: f64) -> Result<TrajectoryPoint> {
    let f = traj.minimal_cost_function();
    let alpha = f.clamp(alpha)?;
    if traj.steps.is_empty() {
        return Ok(TrajectoryPoint {
            population: traj.vertices[0].clone(),
            segment: 0,
            fraction: 0.0,
        });
    }
    let s = f.segment_of(alpha);
    let (a0, _) = traj.breakpoints[s];
    let (a1, _) = traj.breakpoints[s + 1];
    let fraction = ((alpha - a0) / (a1 - a0)).clamp(0.0, 1.0);
    let step = &traj.steps[s];
    let mut population = traj.vertices[s].clone();
    let (pk, pl) = (population[step.k], population[step.l]);
    population[step.k] = pk + fraction * (pl - pk);
    population[step.l] = pl + fraction * (pk - pl);
    Ok(TrajectoryPoint {
        population,
        segment: s,
        fraction,
    })
}

/// Checks the three uniqueness conditions for the optimal state at `α_min`.
pub fn uniqueness_at_minimum(inst: &ProblemInstance) -> Uniqueness {
    let engine = Engine::new(inst, None);
    let d = inst.dim();
    let ra = &engine.target_rank;
    let re = &engine.cost_rank;
    let pairs = || (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j)));
    if pairs().all(|(i, j)| ra[i] != ra[j]) {
        return Uniqueness::DistinctTargets;
    }
    if pairs().all(|(i, j)| ra[i] != ra[j] || re[i] != re[j]) {
        return Uniqueness::DistinctCostsWithinTargets;
    }
    let p = engine.minimal_vertex();
    if pairs()
        .filter(|&(i, j)| ra[i] == ra[j] && re[i] == re[j])
        .all(|(i, j)| (p[i] - p[j]).abs() <= inst.eps_pop)
    {
        return Uniqueness::DegeneratePopulations;
    }
    Uniqueness::NotUnique
}

/// Entry onto the trajectory at `alpha_in`, with a constructive doubly-stochastic chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryPoint {
    pub point: TrajectoryPoint,
    /// Sends reference index `j` to original index `permutation[j]` (first vertex of the trajectory).
    pub permutation: Vec<usize>,
    /// T-transforms in original coordinates, applied after the permutation in order.
    pub transforms: Vec<TTransform>,
}

impl EntryPoint {
    /// Applies the chain to the reference spectrum; the result is the entry population in
    /// original coordinates.
    pub fn apply(&self, reference: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; reference.len()];
        for (j, &x) in reference.iter().enumerate() {
            p[self.permutation[j]] = x;
        }
        for t in &self.transforms {
            t.apply(&mut p);
        }
        p
    }
}

/// Replays the trajectory up to `alpha_in`: permutation to the first vertex, one full swap per
/// completed step and a partial T-transform on the active step.
pub fn entry_point(traj: &OptimalTrajectory, alpha_in: f64) -> Result<EntryPoint> {
    let point = state_at(traj, alpha_in)?;
    let d = traj.vertices[0].len();
    let mut transforms = Vec::new();
    if !traj.steps.is_empty() {
        for step in &traj.steps[..point.segment] {
            let (i, j) = step.original_pair(&traj.order);
            transforms.push(TTransform { i, j, t: 0.0, dim: d });
        }
        if point.fraction > 0.0 {
            let (i, j) = traj.steps[point.segment].original_pair(&traj.order);
            transforms.push(TTransform {
                i,
                j,
                t: 1.0 - point.fraction,
                dim: d,
            });
        }
    }
    Ok(EntryPoint {
        point,
        permutation: traj.initial_permutation(),
        transforms,
    })
}
