//! Lifting trajectory points to doubly-stochastic matrices, unitaries and diagonal states.
//!
//! Every trajectory step is a two-level rotation
//! `cos θ |i⟩⟨i| + sin θ |i⟩⟨j| − sin θ |j⟩⟨i| + cos θ |j⟩⟨j|` whose entrywise squared
//! magnitudes form the T-transform with weight `t = cos² θ`. Rotations are real, so all
//! unitaries produced here are orthogonal matrices.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::polytope::majorizes;
use crate::trajectory::{state_at, OptimalTrajectory};

/// `t·1 + (1 − t)·(i j)` acting on coordinates `i`, `j` of a `dim`-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTransform {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub dim: usize,
}

impl TTransform {
    fn check(&self) -> Result<()> {
        for index in [self.i, self.j] {
            if index >= self.dim {
                return Err(Error::IndexOutOfRange {
                    index,
                    dim: self.dim,
                });
            }
        }
        if self.i == self.j {
            return Err(Error::IndexOutOfRange {
                index: self.j,
                dim: self.dim,
            });
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::TOutOfRange(self.t));
        }
        Ok(())
    }

    /// In-place `p ← D p`.
    pub fn apply(&self, p: &mut [f64]) {
        let (x, y) = (p[self.i], p[self.j]);
        p[self.i] = self.t * x + (1.0 - self.t) * y;
        p[self.j] = (1.0 - self.t) * x + self.t * y;
    }

    /// Rotation angle realizing this transform, `θ = arccos √t ∈ [0, π/2]`.
    pub fn angle(&self) -> f64 {
        self.t.sqrt().clamp(0.0, 1.0).acos()
    }
}

/// Rotation by `theta` in the plane of basis states `i`, `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelRotation {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
    pub dim: usize,
}

impl From<TTransform> for TwoLevelRotation {
    fn from(tt: TTransform) -> Self {
        Self {
            i: tt.i,
            j: tt.j,
            theta: tt.angle(),
            dim: tt.dim,
        }
    }
}

pub fn t_transform_matrix(tt: &TTransform) -> Result<Matrix> {
    tt.check()?;
    let mut m = Matrix::identity(tt.dim);
    m[(tt.i, tt.i)] = tt.t;
    m[(tt.j, tt.j)] = tt.t;
    m[(tt.i, tt.j)] = 1.0 - tt.t;
    m[(tt.j, tt.i)] = 1.0 - tt.t;
    Ok(m)
}

pub fn rotation_matrix(rot: &TwoLevelRotation) -> Result<Matrix> {
    for index in [rot.i, rot.j] {
        if index >= rot.dim {
            return Err(Error::IndexOutOfRange {
                index,
                dim: rot.dim,
            });
        }
    }
    if rot.i == rot.j {
        return Err(Error::IndexOutOfRange {
            index: rot.j,
            dim: rot.dim,
        });
    }
    let (s, c) = rot.theta.sin_cos();
    let mut m = Matrix::identity(rot.dim);
    m[(rot.i, rot.i)] = c;
    m[(rot.j, rot.j)] = c;
    m[(rot.i, rot.j)] = s;
    m[(rot.j, rot.i)] = -s;
    Ok(m)
}

/// Entrywise squared magnitudes, `D_mn = |u_mn|²`.
pub fn unistochastic_of(u: &Matrix) -> Matrix {
    u.map(|x| x * x)
}

/// A trajectory point realized as matrices in the original basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    pub alpha: f64,
    /// Orthogonal `U` with `diag(U ρ_ref Uᵀ)` on the trajectory, where `ρ_ref = diag(reference)`.
    pub unitary: Matrix,
    /// `|U|²`.
    pub doubly_stochastic: Matrix,
    /// Populations of `U ρ_ref Uᵀ`, original coordinates.
    pub density_diagonal: Vec<f64>,
    /// Permutation part of `U` (reference state to the first trajectory vertex).
    pub permutation: Matrix,
}

impl LiftedPoint {
    /// The rotations alone, `U Pᵀ`; these act on the first trajectory vertex.
    pub fn rotations(&self) -> Matrix {
        &self.unitary * &self.permutation.transpose()
    }
}

/// Composes the permutation onto the first vertex, a full swap per completed step and a
/// partial rotation on the active step.
pub fn lift_point(traj: &OptimalTrajectory, alpha: f64) -> Result<LiftedPoint> {
    let point = state_at(traj, alpha)?;
    let d = traj.vertices[0].len();
    let permutation = Matrix::permutation(&traj.initial_permutation());
    let mut unitary = permutation.clone();
    if !traj.steps.is_empty() {
        let mut rotations = Vec::with_capacity(point.segment + 1);
        for step in &traj.steps[..point.segment] {
            let (i, j) = step.original_pair(&traj.order);
            rotations.push(TwoLevelRotation {
                i,
                j,
                theta: std::f64::consts::FRAC_PI_2,
                dim: d,
            });
        }
        if point.fraction > 0.0 {
            let (i, j) = traj.steps[point.segment].original_pair(&traj.order);
            let tt = TTransform {
                i,
                j,
                t: 1.0 - point.fraction,
                dim: d,
            };
            rotations.push(tt.into());
        }
        for rot in &rotations {
            unitary = &rotation_matrix(rot)? * &unitary;
        }
    }
    let doubly_stochastic = unistochastic_of(&unitary);
    let density_diagonal = unitary.conjugate_diagonal(traj.reference());
    Ok(LiftedPoint {
        alpha,
        unitary,
        doubly_stochastic,
        density_diagonal,
        permutation,
    })
}

/// Hardy–Littlewood–Pólya construction of a chain taking `x` to `y` when `x ≻ y`.
///
/// Returns `(permutation, transforms)`: place `x` by `permutation` (`x[j]` goes to position
/// `permutation[j]`), then apply the T-transforms in order. At most `d − 1` transforms are
/// emitted because each one fixes a coordinate to its target value.
pub fn hlp_chain(x: &[f64], y: &[f64], eps: f64) -> Result<(Vec<usize>, Vec<TTransform>)> {
    let d = x.len();
    if y.len() != d {
        return Err(Error::DimensionMismatch {
            field: "y",
            expected: d,
            found: y.len(),
        });
    }
    if !majorizes(x, y, eps) {
        return Err(Error::NotMajorized);
    }
    let desc = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)));
        idx
    };
    let x_rank = desc(x);
    let y_rank = desc(y);
    // rank r of x is placed where the rank-r entry of y lives
    let mut permutation = vec![0; d];
    for r in 0..d {
        permutation[x_rank[r]] = y_rank[r];
    }
    let mut z: Vec<f64> = x_rank.iter().map(|&i| x[i]).collect();
    let target: Vec<f64> = y_rank.iter().map(|&i| y[i]).collect();

    let mut transforms = Vec::new();
    for _ in 0..d {
        let Some(j) = (0..d).rev().find(|&r| z[r] > target[r] + eps) else {
            break;
        };
        let Some(k) = ((j + 1)..d).find(|&r| z[r] < target[r] - eps) else {
            break;
        };
        let delta = (z[j] - target[j]).min(target[k] - z[k]);
        let gap = z[j] - z[k];
        let t = 1.0 - delta / gap;
        let tt = TTransform {
            i: y_rank[j],
            j: y_rank[k],
            t: t.clamp(0.0, 1.0),
            dim: d,
        };
        z[j] -= delta;
        z[k] += delta;
        transforms.push(tt);
    }
    Ok((permutation, transforms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn t_transform_endpoints() {
        let id = t_transform_matrix(&TTransform { i: 0, j: 2, t: 1.0, dim: 3 }).unwrap();
        assert_eq!(id, Matrix::identity(3));
        let sw = t_transform_matrix(&TTransform { i: 0, j: 2, t: 0.0, dim: 3 }).unwrap();
        assert_eq!(sw, Matrix::permutation(&[2, 1, 0]));
        let q = t_transform_matrix(&TTransform { i: 0, j: 1, t: 0.25, dim: 2 }).unwrap();
        assert_eq!(q, Matrix::from_rows(&[vec![0.25, 0.75], vec![0.75, 0.25]]));
    }

    #[test]
    fn t_transform_errors() {
        assert_eq!(
            t_transform_matrix(&TTransform { i: 0, j: 3, t: 0.5, dim: 3 }),
            Err(Error::IndexOutOfRange { index: 3, dim: 3 })
        );
        assert_eq!(
            t_transform_matrix(&TTransform { i: 0, j: 1, t: 1.5, dim: 3 }),
            Err(Error::TOutOfRange(1.5))
        );
        assert!(rotation_matrix(&TwoLevelRotation { i: 1, j: 1, theta: 0.0, dim: 2 }).is_err());
    }

    #[test]
    fn rotation_endpoints() {
        let r = rotation_matrix(&TwoLevelRotation { i: 0, j: 1, theta: 0.0, dim: 3 }).unwrap();
        assert_eq!(r, Matrix::identity(3));
        let r = rotation_matrix(&TwoLevelRotation {
            i: 0,
            j: 1,
            theta: std::f64::consts::FRAC_PI_2,
            dim: 2,
        })
        .unwrap();
        assert!(r.max_abs_diff(&Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]])) < 1e-15);
        assert!(unistochastic_of(&r).max_abs_diff(&Matrix::permutation(&[1, 0])) < 1e-30);
    }

    #[test]
    fn unistochastic_of_permutation_and_identity() {
        let p = Matrix::permutation(&[2, 0, 1]);
        assert_eq!(unistochastic_of(&p), p);
        assert_eq!(unistochastic_of(&Matrix::identity(4)), Matrix::identity(4));
    }

    #[test]
    fn hlp_reaches_target() {
        let x = [0.5, 0.1, 0.3, 0.1];
        let y = [0.25, 0.25, 0.25, 0.25];
        let (perm, chain) = hlp_chain(&x, &y, 1e-12).unwrap();
        assert!(chain.len() <= 3);
        let mut p = vec![0.0; 4];
        for (j, &v) in x.iter().enumerate() {
            p[perm[j]] = v;
        }
        for t in &chain {
            t.apply(&mut p);
        }
        for v in p {
            assert!((v - 0.25).abs() < 1e-15);
        }
        assert_eq!(hlp_chain(&y, &x, 1e-12), Err(Error::NotMajorized));
    }

    proptest! {
        #[test]
        fn rotation_squares_are_t_transforms(theta in 0.0f64..std::f64::consts::FRAC_PI_2) {
            let r = rotation_matrix(&TwoLevelRotation { i: 1, j: 3, theta, dim: 4 }).unwrap();
            prop_assert!(r.orthogonality_defect() <= 1e-12);
            let t = theta.cos().powi(2);
            let d = t_transform_matrix(&TTransform { i: 1, j: 3, t, dim: 4 }).unwrap();
            prop_assert!(unistochastic_of(&r).max_abs_diff(&d) <= 1e-12);
            prop_assert!(unistochastic_of(&r).is_doubly_stochastic(1e-12));
        }

        #[test]
        fn hlp_chain_maps_x_to_any_majorized_y(
            raw in prop::collection::vec(0.01f64..1.0, 2..8),
            seed in prop::collection::vec(0.0f64..1.0, 8),
        ) {
            let total: f64 = raw.iter().sum();
            let x: Vec<f64> = raw.iter().map(|v| v / total).collect();
            // y = mixture of x and a rotated copy of x, hence x ≻ y
            let d = x.len();
            let w = seed[0];
            let shift = 1 + (seed[1] * (d - 1) as f64) as usize % d;
            let y: Vec<f64> = (0..d).map(|i| w * x[i] + (1.0 - w) * x[(i + shift) % d]).collect();
            let (perm, chain) = hlp_chain(&x, &y, 1e-12).unwrap();
            prop_assert!(chain.len() < d);
            let mut p = vec![0.0; d];
            for (j, &v) in x.iter().enumerate() {
                p[perm[j]] = v;
            }
            for t in &chain {
                t.apply(&mut p);
            }
            for (a, b) in p.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
