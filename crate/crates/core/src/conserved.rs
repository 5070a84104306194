//! Optimal trajectories under an additional conserved observable.
//!
//! Unitaries commuting with a diagonal observable `C` act block-wise on its eigenspaces, so the
//! reachable populations form the direct product of per-block population polytopes. Edges of
//! the product are single-block edges, hence the trajectory is built by the same greedy rule
//! restricted to swaps inside one block.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix};
use crate::polytope::{multinomial_count, DEFAULT_MAX_ENUM_DIM};
use crate::problem::{validate, ProblemInstance};
use crate::trajectory::{build_with_blocks, OptimalTrajectory};

/// Default clustering tolerance for conserved eigenvalues.
pub const DEFAULT_EPS_CONSERVED: f64 = 1e-9;

const TRACE_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenspaces of the conserved observable, ascending by eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStructure {
    pub blocks: Vec<Vec<usize>>,
    pub block_values: Vec<f64>,
}

impl BlockStructure {
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Block label of every index.
    pub fn labels(&self) -> Vec<usize> {
        let d = self.blocks.iter().map(Vec::len).sum();
        let mut out = vec![0; d];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                out[i] = b;
            }
        }
        out
    }
}

pub fn block_decompose(c: &[f64], eps: f64) -> BlockStructure {
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&i, &j| c[i].total_cmp(&c[j]).then(i.cmp(&j)));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_values = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for i in idx {
        if blocks.is_empty() || c[i] - last > eps {
            blocks.push(Vec::new());
            block_values.push(c[i]);
        }
        blocks.last_mut().expect("pushed").push(i);
        last = c[i];
    }
    for b in blocks.iter_mut() {
        b.sort_unstable();
    }
    BlockStructure {
        blocks,
        block_values,
    }
}

/// Result of discarding coherences between conserved blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Dephased {
    pub matrix: ComplexMatrix,
    /// Eigenvalues of each block, descending.
    pub block_eigenvalues: Vec<Vec<f64>>,
    /// Frobenius norm of the discarded off-block part.
    pub coherence_mass: f64,
}

pub fn dephase(rho: &ComplexMatrix, structure: &BlockStructure) -> Result<Dephased> {
    let dev = rho.hermiticity_defect();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::NotUnitTrace(tr.re));
    }
    let labels = structure.labels();
    let n = rho.dim();
    let mut matrix = ComplexMatrix::zeros(n);
    let mut mass = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                matrix[(i, j)] = rho[(i, j)];
            } else {
                mass += rho[(i, j)].norm_sqr();
            }
        }
    }
    let block_eigenvalues = structure
        .blocks
        .iter()
        .map(|block| hermitian_eigenvalues(&rho.submatrix(block)))
        .collect();
    Ok(Dephased {
        matrix,
        block_eigenvalues,
        coherence_mass: mass.sqrt(),
    })
}

/// A problem instance together with its conserved-block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedInstance {
    /// `base.lambda` restricted to a block is that block's spectrum.
    pub base: ProblemInstance,
    pub structure: BlockStructure,
    pub block_lambdas: Vec<Vec<f64>>,
}

impl GeneralizedInstance {
    /// Validates `base` (which must carry a conserved vector) and derives the blocks.
    pub fn new(base: ProblemInstance) -> Result<Self> {
        let base = validate(base)?;
        let c = base
            .conserved
            .clone()
            .ok_or(Error::WrongInstanceKind {
                expected: "an instance with a conserved observable",
            })?;
        let structure = block_decompose(&c, DEFAULT_EPS_CONSERVED);
        let block_lambdas = structure
            .blocks
            .iter()
            .map(|b| b.iter().map(|&i| base.lambda[i]).collect())
            .collect();
        Ok(Self {
            base,
            structure,
            block_lambdas,
        })
    }

    /// Builds an instance from a density matrix: the state is dephased and each block's
    /// eigenvalues are laid on the block's indices in descending order.
    pub fn from_density(
        rho: &ComplexMatrix,
        target: Vec<f64>,
        cost: Vec<f64>,
        conserved: Vec<f64>,
    ) -> Result<(Self, Dephased)> {
        let structure = block_decompose(&conserved, DEFAULT_EPS_CONSERVED);
        let dephased = dephase(rho, &structure)?;
        let mut lambda = vec![0.0; rho.dim()];
        for (block, values) in structure.blocks.iter().zip(&dephased.block_eigenvalues) {
            for (&i, &v) in block.iter().zip(values) {
                // tiny negative eigenvalues from rounding
                lambda[i] = v.max(0.0);
            }
        }
        let populations: Vec<f64> = (0..rho.dim()).map(|i| rho[(i, i)].re).collect();
        let base = ProblemInstance::new(lambda, target, cost)
            .with_conserved(conserved)
            .with_initial_populations(populations);
        Ok((Self::new(base)?, dephased))
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// Greedy trajectory over the product polytope, starting from the per-block minimal vertices.
pub fn build_generalized(ginst: &GeneralizedInstance) -> Result<OptimalTrajectory> {
    let labels = ginst.structure.labels();
    build_with_blocks(&ginst.base, Some(&labels), None)
}

/// As [`build_generalized`] but starting from the vertex `start` (original coordinates).
pub fn build_generalized_from(ginst: &GeneralizedInstance, start: &[f64]) -> Result<OptimalTrajectory> {
    let labels = ginst.structure.labels();
    build_with_blocks(&ginst.base, Some(&labels), Some(start))
}

/// Number of vertices of the product polytope.
pub fn generalized_vertex_count(ginst: &GeneralizedInstance) -> Result<u128> {
    let mut total: u128 = 1;
    for lam in &ginst.block_lambdas {
        if lam.len() > DEFAULT_MAX_ENUM_DIM {
            return Err(Error::DimensionTooLarge {
                dim: lam.len(),
                max: DEFAULT_MAX_ENUM_DIM,
            });
        }
        total *= multinomial_count(lam, ginst.base.eps_pop);
    }
    Ok(total)
}

/// `max |[U, diag(c)]_ij|`.
pub fn commutator_defect(u: &crate::linalg::Matrix, c: &[f64]) -> f64 {
    let n = c.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((u[(i, j)] * (c[j] - c[i])).abs());
        }
    }
    worst
}

/// Hermitian matrix from real diagonal plus complex off-diagonal entries; test and CLI helper.
pub fn density_from_parts(diagonal: &[f64], off: &[(usize, usize, Complex64)]) -> ComplexMatrix {
    let mut m = ComplexMatrix::from_diagonal(diagonal);
    for &(i, j, z) in off {
        m[(i, j)] = z;
        m[(j, i)] = z.conj();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::build;

    #[test]
    fn block_examples() {
        let s = block_decompose(&[0.0, 1.0, 1.0, 2.0], 1e-9);
        assert_eq!(s.blocks, vec![vec![0], vec![1, 2], vec![3]]);
        let s = block_decompose(&[3.0; 4], 1e-9);
        assert_eq!(s.blocks.len(), 1);
        // out-of-order values still group by value
        let s = block_decompose(&[2.0, 0.0, 2.0 + 1e-12, 1.0], 1e-9);
        assert_eq!(s.blocks, vec![vec![1], vec![3], vec![0, 2]]);
    }

    #[test]
    fn dephase_drops_cross_block_terms() {
        let s = block_decompose(&[0.0, 1.0, 1.0], 1e-9);
        let diag = [0.5, 0.3, 0.2];
        let plain = ComplexMatrix::from_diagonal(&diag);
        let d = dephase(&plain, &s).unwrap();
        assert_eq!(d.matrix, plain);
        assert_eq!(d.coherence_mass, 0.0);

        let rho = density_from_parts(&diag, &[(0, 1, Complex64::new(0.1, 0.05))]);
        let d = dephase(&rho, &s).unwrap();
        assert_eq!(d.matrix, plain);
        assert!((d.coherence_mass - (2.0 * 0.0125f64).sqrt()).abs() < 1e-15);

        // in-block coherence changes the block spectrum but not the trace
        let rho = density_from_parts(&diag, &[(1, 2, Complex64::new(0.0, 0.1))]);
        let d = dephase(&rho, &s).unwrap();
        let b = &d.block_eigenvalues[1];
        let disc = (0.05f64.powi(2) + 0.01).sqrt();
        assert!((b[0] - (0.25 + disc)).abs() < 1e-12);
        assert!((b[1] - (0.25 - disc)).abs() < 1e-12);
    }

    #[test]
    fn dephase_rejects_bad_input() {
        let s = block_decompose(&[0.0, 1.0], 1e-9);
        let mut m = ComplexMatrix::from_diagonal(&[0.5, 0.5]);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(dephase(&m, &s), Err(Error::NotHermitian(_))));
        let m = ComplexMatrix::from_diagonal(&[0.5, 0.6]);
        assert!(matches!(dephase(&m, &s), Err(Error::NotUnitTrace(_))));
    }

    #[test]
    fn constant_conserved_reduces_to_base() {
        let lam = vec![0.1, 0.35, 0.2, 0.25, 0.1];
        let a = vec![0.0, 1.0, 0.5, 1.0, 0.0];
        let e = vec![0.3, 0.1, 0.7, 0.2, 0.0];
        let base = validate(ProblemInstance::new(lam.clone(), a.clone(), e.clone())).unwrap();
        let g = GeneralizedInstance::new(
            ProblemInstance::new(lam, a, e).with_conserved(vec![4.0; 5]),
        )
        .unwrap();
        let t1 = build(&base).unwrap();
        let t2 = build_generalized(&g).unwrap();
        assert_eq!(t1.vertices, t2.vertices);
        assert_eq!(t1.steps, t2.steps);
        assert_eq!(t1.breakpoints, t2.breakpoints);
    }

    #[test]
    fn vertex_counts() {
        let g = GeneralizedInstance::new(
            ProblemInstance::new(vec![0.2, 0.3, 0.5], vec![0.0; 3], vec![0.0; 3])
                .with_conserved(vec![1.0; 3]),
        )
        .unwrap();
        assert_eq!(generalized_vertex_count(&g).unwrap(), 6);
        let g = GeneralizedInstance::new(
            ProblemInstance::new(vec![0.25, 0.25, 0.5, 0.0], vec![0.0; 4], vec![0.0; 4])
                .with_conserved(vec![1.0, 1.0, 1.0, 2.0]),
        )
        .unwrap();
        assert_eq!(generalized_vertex_count(&g).unwrap(), 3);
    }
}
