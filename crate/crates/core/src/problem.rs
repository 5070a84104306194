//! Problem instances, the preferred basis ordering, and the linear target/cost functionals.

use crate::error::{Error, Result};
use crate::polytope::majorizes;

pub const DEFAULT_EPS_POP: f64 = 1e-12;
pub const DEFAULT_EPS_GRAD: f64 = 1e-12;
/// Absolute tolerance for equality of target and cost coefficients.
pub const COEFF_EPS: f64 = 1e-12;

const SUM_TOL: f64 = 1e-9;

/// A state spectrum together with the diagonal target and cost observables.
///
/// All vectors are indexed by the original basis. `lambda[i]` is the eigenvalue sitting on
/// basis state `i` of the reference (diagonal) state; the problem itself only depends on
/// the multiset of eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub lambda: Vec<f64>,
    pub target: Vec<f64>,
    pub cost: Vec<f64>,
    pub conserved: Option<Vec<f64>>,
    pub initial_populations: Option<Vec<f64>>,
    pub eps_pop: f64,
    pub eps_grad: f64,
}

impl ProblemInstance {
    /// Unvalidated instance with default tolerances; call [`validate`] before use.
    pub fn new(lambda: Vec<f64>, target: Vec<f64>, cost: Vec<f64>) -> Self {
        Self {
            lambda,
            target,
            cost,
            conserved: None,
            initial_populations: None,
            eps_pop: DEFAULT_EPS_POP,
            eps_grad: DEFAULT_EPS_GRAD,
        }
    }

    pub fn with_conserved(mut self, c: Vec<f64>) -> Self {
        self.conserved = Some(c);
        self
    }

    pub fn with_initial_populations(mut self, p: Vec<f64>) -> Self {
        self.initial_populations = Some(p);
        self
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Target value of the initial populations, if any were given.
    pub fn alpha_in(&self) -> Option<f64> {
        self.initial_populations
            .as_deref()
            .map(|p| target_value(p, &self.target))
    }

    /// Cost of the initial populations, if any were given.
    pub fn initial_cost(&self) -> Option<f64> {
        self.initial_populations
            .as_deref()
            .map(|p| cost_value(p, &self.cost))
    }
}

/// Checks the instance invariants and renormalizes `lambda` when it is within `1e-9` of unit sum.
pub fn validate(raw: ProblemInstance) -> Result<ProblemInstance> {
    let mut inst = raw;
    let d = inst.lambda.len();
    if d == 0 {
        return Err(Error::DimensionMismatch {
            field: "eigenvalues",
            expected: 1,
            found: 0,
        });
    }
    let check_len = |field: &'static str, len: usize| {
        if len != d {
            Err(Error::DimensionMismatch {
                field,
                expected: d,
                found: len,
            })
        } else {
            Ok(())
        }
    };
    check_len("target", inst.target.len())?;
    check_len("cost", inst.cost.len())?;
    if let Some(c) = &inst.conserved {
        check_len("conserved", c.len())?;
    }
    if let Some(p) = &inst.initial_populations {
        check_len("initial_populations", p.len())?;
    }

    let finite = |field: &'static str, v: &[f64]| {
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { field })
        }
    };
    finite("eigenvalues", &inst.lambda)?;
    finite("target", &inst.target)?;
    finite("cost", &inst.cost)?;
    if let Some(c) = &inst.conserved {
        finite("conserved", c)?;
    }
    if let Some(p) = &inst.initial_populations {
        finite("initial_populations", p)?;
    }

    for (name, value) in [("eps_pop", inst.eps_pop), ("eps_grad", inst.eps_grad)] {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::NonPositiveTolerance { name, value });
        }
    }

    if let Some((index, &value)) = inst.lambda.iter().enumerate().find(|(_, &x)| x < 0.0) {
        return Err(Error::NegativeEigenvalue { index, value });
    }
    let sum: f64 = inst.lambda.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::NotNormalized { sum });
    }
    // sums off by a few ulps are rounding in the input, not a normalization error
    if (sum - 1.0).abs() > inst.lambda.len() as f64 * f64::EPSILON {
        for x in inst.lambda.iter_mut() {
            *x /= sum;
        }
    }

    if let Some(p) = &inst.initial_populations {
        if !initial_reachable(&inst, p) {
            return Err(Error::NotMajorized);
        }
    }
    Ok(inst)
}

/// Majorization check for the initial populations, block by block when a conserved
/// observable is present.
fn initial_reachable(inst: &ProblemInstance, p: &[f64]) -> bool {
    let tol = inst.eps_pop.max(SUM_TOL);
    match &inst.conserved {
        None => majorizes(&inst.lambda, p, tol),
        Some(c) => crate::conserved::block_decompose(c, crate::conserved::DEFAULT_EPS_CONSERVED)
            .blocks
            .iter()
            .all(|block| {
                let lam: Vec<f64> = block.iter().map(|&i| inst.lambda[i]).collect();
                let pb: Vec<f64> = block.iter().map(|&i| p[i]).collect();
                majorizes(&lam, &pb, tol)
            }),
    }
}

/// Ranks values into equality classes: values whose sorted gaps are `<= eps` share a rank.
pub(crate) fn value_classes(values: &[f64], eps: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut rank = vec![0; values.len()];
    let mut current = 0;
    for w in 0..idx.len() {
        if w > 0 && values[idx[w]] - values[idx[w - 1]] > eps {
            current += 1;
        }
        rank[idx[w]] = current;
    }
    rank
}

/// Permutation putting the basis in ascending (target, cost, index) order.
///
/// `perm[position] = original index`; `inverse[original index] = position`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferredOrder {
    pub perm: Vec<usize>,
    pub inverse: Vec<usize>,
}

impl PreferredOrder {
    pub fn from_perm(perm: Vec<usize>) -> Self {
        let mut inverse = vec![0; perm.len()];
        for (pos, &orig) in perm.iter().enumerate() {
            inverse[orig] = pos;
        }
        Self { perm, inverse }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_perm((0..d).collect())
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Reorders an original-basis vector into preferred positions.
    pub fn to_preferred<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| v[i]).collect()
    }

    /// Maps a preferred-basis vector back to original indices.
    pub fn to_original<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); v.len()];
        for (pos, &orig) in self.perm.iter().enumerate() {
            out[orig] = v[pos];
        }
        out
    }
}

/// Lexicographic `(a, E, index)` ordering with equality of `a` and `E` judged within `eps`.
pub fn preferred_order(target: &[f64], cost: &[f64], eps: f64) -> PreferredOrder {
    assert_eq!(target.len(), cost.len(), "target and cost lengths differ");
    let ra = value_classes(target, eps);
    let re = value_classes(cost, eps);
    let mut perm: Vec<usize> = (0..target.len()).collect();
    perm.sort_by_key(|&i| (ra[i], re[i], i));
    PreferredOrder::from_perm(perm)
}

/// `a · p`.
pub fn target_value(p: &[f64], a: &[f64]) -> f64 {
    dot(p, a)
}

/// `E · p`.
pub fn cost_value(p: &[f64], e: &[f64]) -> f64 {
    dot(p, e)
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "length mismatch");
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
