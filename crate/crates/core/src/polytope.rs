//! Population-polytope primitives.
//!
//! The population polytope of a spectrum `λ` is the convex hull of all permutations of `λ`
//! (equivalently the set of vectors majorized by `λ`). Its vertices are the distinct
//! permutations and its edges join vertices that differ by a swap of two adjacently
//! valued entries. Vertex enumeration and the brute-force edge test are exponential in `d`
//! and intended for verification only.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::value_classes;
use crate::simplex::{maximize, LpOutcome};

/// Default cap on the dimension for vertex enumeration.
pub const DEFAULT_MAX_ENUM_DIM: usize = 9;

const EDGE_TOL: f64 = 1e-9;

/// `x ≻ y`: every partial sum of sorted-descending `x` dominates that of `y`, with equal totals.
pub fn majorizes(x: &[f64], y: &[f64], eps: f64) -> bool {
    assert_eq!(x.len(), y.len(), "length mismatch");
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    ys.sort_by(|a, b| b.total_cmp(a));
    let (mut sx, mut sy) = (0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys) {
        sx += a;
        sy += b;
        if sx < sy - eps {
            return false;
        }
    }
    (sx - sy).abs() <= eps
}

/// Sizes of the equality classes of `values` (gaps `> eps` separate classes).
pub fn degeneracy_classes(values: &[f64], eps: f64) -> Vec<usize> {
    let ranks = value_classes(values, eps);
    let n_classes = ranks.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; n_classes];
    for r in ranks {
        sizes[r] += 1;
    }
    sizes
}

/// Number of distinct permutations, `d! / Π s_i!`.
pub fn multinomial_count(values: &[f64], eps: f64) -> u128 {
    let mut count: u128 = 1;
    let mut placed: u128 = 0;
    // build the multinomial as a product of binomials to stay exact
    for s in degeneracy_classes(values, eps) {
        for k in 1..=s as u128 {
            placed += 1;
            count = count * placed / k;
        }
    }
    count
}

/// The distinct permutations of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    pub vertices: Vec<Vec<f64>>,
    pub count: usize,
}

impl VertexSet {
    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, Vec::len)
    }

    /// Index of the vertex equal to `v` within `eps`, if any.
    pub fn position(&self, v: &[f64], eps: f64) -> Option<usize> {
        self.vertices
            .iter()
            .position(|w| w.iter().zip(v).all(|(a, b)| (a - b).abs() <= eps))
    }
}

/// All distinct permutations of `lambda`, in lexicographic order of their class labels
/// (the first vertex is `lambda` sorted descending).
pub fn enumerate_vertices(lambda: &[f64], eps: f64, max_dim: usize) -> Result<VertexSet> {
    let d = lambda.len();
    if d > max_dim {
        return Err(Error::DimensionTooLarge { dim: d, max: max_dim });
    }
    let mut sorted = lambda.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // label 0 = largest class
    let mut labels = vec![0usize; d];
    for i in 1..d {
        labels[i] = labels[i - 1] + usize::from(sorted[i - 1] - sorted[i] > eps);
    }
    let n_classes = labels.last().map_or(0, |l| l + 1);
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n_classes];
    for (&l, &v) in labels.iter().zip(&sorted) {
        members[l].push(v);
    }

    let mut vertices = Vec::new();
    let mut current = labels;
    loop {
        let mut next_member = vec![0usize; n_classes];
        let v: Vec<f64> = current
            .iter()
            .map(|&l| {
                let x = members[l][next_member[l]];
                next_member[l] += 1;
                x
            })
            .collect();
        vertices.push(v);
        if !next_permutation(&mut current) {
            break;
        }
    }
    let count = vertices.len();
    Ok(VertexSet { vertices, count })
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A swap of two adjacently valued entries, oriented so that `p[k] < p[l]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AvSwap {
    pub k: usize,
    pub l: usize,
}

/// All adjacent-valued index pairs of `p`.
///
/// Values are grouped into levels (gaps `> eps`); every index of one level is paired with
/// every index of the next level up. Ordered by level, then `k`, then `l`.
pub fn av_swaps(p: &[f64], eps: f64) -> Vec<AvSwap> {
    let ranks = value_classes(p, eps);
    let n_levels = ranks.iter().max().map_or(0, |m| m + 1);
    let mut levels: Vec<Vec<usize>> = vec![Vec::new(); n_levels];
    for (i, &r) in ranks.iter().enumerate() {
        levels[r].push(i);
    }
    let mut out = Vec::new();
    for w in levels.windows(2) {
        for &k in &w[0] {
            for &l in &w[1] {
                out.push(AvSwap { k, l });
            }
        }
    }
    out
}

/// `v` with entries `i` and `j` exchanged.
pub fn swapped(v: &[f64], i: usize, j: usize) -> Vec<f64> {
    let mut w = v.to_vec();
    w.swap(i, j);
    w
}

/// Brute-force edge test, independent of the adjacent-value characterization.
///
/// Solves `max Σ_{v ∉ {v1,v2}} μ_v` over convex weights `μ` reproducing the midpoint of
/// `v1` and `v2`. The segment is an edge exactly when every representation puts all of its
/// weight on the two endpoints.
pub fn is_edge(v1: &[f64], v2: &[f64], vset: &VertexSet, eps: f64) -> Result<bool> {
    let i1 = vset.position(v1, eps).ok_or(Error::NotAVertex)?;
    let i2 = vset.position(v2, eps).ok_or(Error::NotAVertex)?;
    if i1 == i2 {
        return Ok(false);
    }
    let d = vset.dim();
    let n = vset.count;
    let mut a = Matrix::zeros(d + 1, n);
    for (j, v) in vset.vertices.iter().enumerate() {
        for i in 0..d {
            a[(i, j)] = v[i];
        }
        a[(d, j)] = 1.0;
    }
    let mut b: Vec<f64> = v1.iter().zip(v2).map(|(x, y)| 0.5 * (x + y)).collect();
    b.push(1.0);
    let mut c = vec![1.0; n];
    c[i1] = 0.0;
    c[i2] = 0.0;
    match maximize(&a, &b, &c) {
        LpOutcome::Optimal { value, .. } => Ok(value <= EDGE_TOL),
        LpOutcome::Infeasible => Err(Error::Solver("midpoint not representable")),
        LpOutcome::Unbounded => Err(Error::Solver("unbounded")),
        LpOutcome::Stalled => Err(Error::Solver("pivot limit")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn majorization_examples() {
        assert!(majorizes(&[0.7, 0.3], &[0.5, 0.5], 1e-12));
        assert!(!majorizes(&[0.5, 0.5], &[0.7, 0.3], 1e-12));
        assert!(!majorizes(&[0.7, 0.3], &[0.5, 0.6], 1e-12));
    }

    #[test]
    fn vertex_counts() {
        let v = enumerate_vertices(&[0.1, 0.2, 0.3, 0.4], 1e-12, 9).unwrap();
        assert_eq!(v.count, 24);
        assert_eq!(v.vertices[0], vec![0.4, 0.3, 0.2, 0.1]);
        assert_eq!(enumerate_vertices(&[0.5, 0.25, 0.25], 1e-12, 9).unwrap().count, 3);
        let third = 1.0 / 3.0;
        assert_eq!(enumerate_vertices(&[third; 3], 1e-12, 9).unwrap().count, 1);
        assert_eq!(multinomial_count(&[0.5, 0.25, 0.25], 1e-12), 3);
        assert!(matches!(
            enumerate_vertices(&[0.1; 10], 1e-12, 9),
            Err(Error::DimensionTooLarge { dim: 10, max: 9 })
        ));
    }

    #[test]
    fn av_swap_examples() {
        let s = av_swaps(&[0.4, 0.3, 0.2, 0.1], 1e-12);
        assert_eq!(
            s,
            vec![
                AvSwap { k: 3, l: 2 },
                AvSwap { k: 2, l: 1 },
                AvSwap { k: 1, l: 0 }
            ]
        );
        let s = av_swaps(&[0.4, 0.1, 0.3, 0.2], 1e-12);
        assert_eq!(
            s,
            vec![
                AvSwap { k: 1, l: 3 },
                AvSwap { k: 3, l: 2 },
                AvSwap { k: 2, l: 0 }
            ]
        );
        assert!(av_swaps(&[0.5, 0.5], 1e-12).is_empty());
        // degenerate middle level: both members pair with both neighbours
        let s = av_swaps(&[0.4, 0.2, 0.2, 0.2 - 0.0], 1e-12);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn edge_examples() {
        let lam = [0.1, 0.2, 0.3, 0.4];
        let vs = enumerate_vertices(&lam, 1e-12, 9).unwrap();
        let v1 = [0.4, 0.3, 0.2, 0.1];
        assert!(is_edge(&v1, &[0.3, 0.4, 0.2, 0.1], &vs, 1e-12).unwrap());
        assert!(!is_edge(&v1, &[0.1, 0.3, 0.2, 0.4], &vs, 1e-12).unwrap());
        assert_eq!(
            is_edge(&v1, &[0.25, 0.25, 0.25, 0.25], &vs, 1e-12),
            Err(Error::NotAVertex)
        );

        let vs = enumerate_vertices(&[0.7, 0.3], 1e-12, 9).unwrap();
        assert!(is_edge(&[0.7, 0.3], &[0.3, 0.7], &vs, 1e-12).unwrap());
    }

    #[test]
    fn permuting_lambda_gives_same_vertex_set() {
        let a = enumerate_vertices(&[0.1, 0.2, 0.3, 0.4], 1e-12, 9).unwrap();
        let b = enumerate_vertices(&[0.3, 0.1, 0.4, 0.2], 1e-12, 9).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn vertices_are_majorization_equivalent(raw in prop::collection::vec(1u32..5, 2..7)) {
            let total: u32 = raw.iter().sum();
            let lam: Vec<f64> = raw.iter().map(|&x| x as f64 / total as f64).collect();
            let vs = enumerate_vertices(&lam, 1e-12, 9).unwrap();
            prop_assert_eq!(vs.count as u128, multinomial_count(&lam, 1e-12));
            for v in &vs.vertices {
                prop_assert!(majorizes(&lam, v, 1e-12));
                prop_assert!(majorizes(v, &lam, 1e-12));
            }
        }
    }
}
