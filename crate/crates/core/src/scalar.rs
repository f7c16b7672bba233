//! Scalar abstraction: everything numerical runs over `Complex<T>` with
//! `T: Float`, so the physics modules never name a concrete precision.
//!
//! The trait carries the dense eigensolver bridge (backed by faer, which runs
//! sequentially here so results do not depend on any thread pool) and the
//! precision-dependent identification tolerances. The documented tolerance
//! values are the `f64` ones; `f32` uses loosened thresholds consistent with
//! its epsilon and is intended for smoke checks, not production runs.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};

/// Floating point scalar usable for every computation in this crate.
pub trait Float:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::NumAssignOps
    + num_traits::FromPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Eigenvalues and right eigenvectors of a general complex dense matrix.
    fn eig_dense(matrix: &Array2<Complex<Self>>) -> Result<EigPairs<Self>>;

    /// Relative tolerance below which a generator eigenvalue counts as zero.
    fn zero_mode_tol() -> Self;

    /// Relative tolerance below which eigenvalues join a degenerate cluster.
    fn cluster_tol() -> Self;

    /// Relative tolerance for entries that must vanish structurally
    /// (charge symmetry, selection rules, Hermiticity checks).
    fn structure_tol() -> Self;

    /// Convert an `f64` literal; panics only for non-finite inputs.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in this scalar")
    }
}

/// Eigenvalues with matching right eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigPairs<T: Float> {
    pub values: Vec<Complex<T>>,
    pub vectors: Array2<Complex<T>>,
}

fn eig_faer<T>(matrix: &Array2<Complex<T>>) -> Result<EigPairs<T>>
where
    T: Float + faer::traits::RealField,
    Complex<T>: faer::traits::ComplexField<Real = T>,
{
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let m = faer::Mat::from_fn(n, n, |i, j| matrix[(i, j)]);
    let evd = m.eigen().map_err(|_| Error::EigNoConvergence)?;
    let s = evd.S();
    let u = evd.U();
    Ok(EigPairs {
        values: (0..n).map(|i| s[i]).collect(),
        vectors: Array2::from_shape_fn((n, n), |(i, j)| u[(i, j)]),
    })
}

impl Float for f64 {
    fn eig_dense(matrix: &Array2<Complex<f64>>) -> Result<EigPairs<f64>> {
        eig_faer(matrix)
    }

    fn zero_mode_tol() -> f64 {
        1e-9
    }

    fn cluster_tol() -> f64 {
        1e-8
    }

    fn structure_tol() -> f64 {
        1e-10
    }
}

impl Float for f32 {
    fn eig_dense(matrix: &Array2<Complex<f32>>) -> Result<EigPairs<f32>> {
        eig_faer(matrix)
    }

    fn zero_mode_tol() -> f32 {
        1e-4
    }

    fn cluster_tol() -> f32 {
        1e-3
    }

    fn structure_tol() -> f32 {
        1e-4
    }
}

/// Largest absolute value of a complex matrix (zero for empty input).
pub(crate) fn max_abs<T: Float>(matrix: &Array2<Complex<T>>) -> T {
    matrix
        .iter()
        .map(|z| z.norm())
        .fold(T::zero(), |acc, x| if x > acc { x } else { acc })
}

/// Solve `a x = b` for a small dense complex system by Gaussian elimination
/// with partial pivoting. `None` signals a numerically singular matrix.
pub(crate) fn solve_dense<T: Float>(
    a: &Array2<Complex<T>>,
    b: &[Complex<T>],
) -> Option<Vec<Complex<T>>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return None;
    }
    let scale = max_abs(a);
    if scale == T::zero() {
        return None;
    }
    let pivot_floor = scale * T::epsilon() * T::lit(1e3);
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (pivot_row, pivot_mag) =
            (col..n)
                .map(|r| (r, m[(r, col)].norm()))
                .fold(
                    (col, T::zero()),
                    |best, cand| {
                        if cand.1 > best.1 {
                            cand
                        } else {
                            best
                        }
                    },
                );
        if pivot_mag <= pivot_floor {
            return None;
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = m[(col, c)];
                m[(col, c)] = m[(pivot_row, c)];
                m[(pivot_row, c)] = tmp;
            }
            rhs.swap(col, pivot_row);
            perm.swap(col, pivot_row);
        }
        let pivot = m[(col, col)];
        for r in (col + 1)..n {
            let factor = m[(r, col)] / pivot;
            if factor.norm() == T::zero() {
                continue;
            }
            for c in col..n {
                let sub = factor * m[(col, c)];
                m[(r, c)] -= sub;
            }
            let sub = factor * rhs[col];
            rhs[r] -= sub;
        }
    }
    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in (row + 1)..n {
            acc -= m[(row, c)] * x[c];
        }
        x[row] = acc / m[(row, row)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn eig_dense_recovers_diagonal_matrix() {
        let m = Array2::from_shape_fn((3, 3), |(i, j)| {
            if i == j {
                c(i as f64 + 1.0, -(i as f64))
            } else {
                c(0.0, 0.0)
            }
        });
        let pairs = f64::eig_dense(&m).unwrap();
        let mut values: Vec<_> = pairs.values.clone();
        values.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (i, v) in values.iter().enumerate() {
            assert!((v - c(i as f64 + 1.0, -(i as f64))).norm() < 1e-12);
        }
    }

    #[test]
    fn eig_dense_residual_is_small() {
        let m = Array2::from_shape_fn((6, 6), |(i, j)| {
            c(((3 * i + j) % 5) as f64, i as f64 - 0.5 * j as f64)
        });
        let pairs = f64::eig_dense(&m).unwrap();
        for col in 0..6 {
            for row in 0..6 {
                let mut acc = c(0.0, 0.0);
                for k in 0..6 {
                    acc += m[(row, k)] * pairs.vectors[(k, col)];
                }
                let residual = acc - pairs.values[col] * pairs.vectors[(row, col)];
                assert!(residual.norm() < 1e-12, "residual {}", residual.norm());
            }
        }
    }

    #[test]
    fn solve_dense_round_trips() {
        let a = Array2::from_shape_fn((4, 4), |(i, j)| {
            c(1.0 + (i * 4 + j) as f64, (i as f64 - j as f64) * 0.3)
                + if i == j { c(5.0, 0.0) } else { c(0.0, 0.0) }
        });
        let x_true: Vec<_> = (0..4).map(|i| c(0.5 * i as f64, 1.0 - i as f64)).collect();
        let mut b = vec![c(0.0, 0.0); 4];
        for r in 0..4 {
            for k in 0..4 {
                b[r] += a[(r, k)] * x_true[k];
            }
        }
        let x = solve_dense(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).norm() < 1e-12);
        }
    }

    #[test]
    fn solve_dense_rejects_singular() {
        let a = Array2::from_shape_fn((3, 3), |(i, _)| c(i as f64, 0.0));
        let b = vec![c(1.0, 0.0); 3];
        assert!(solve_dense(&a, &b).is_none());
    }

    #[test]
    fn f32_eig_smoke() {
        let m = Array2::from_shape_fn((4, 4), |(i, j)| {
            Complex::new(((i + 2 * j) % 3) as f32, i as f32 - j as f32)
        });
        let pairs = f32::eig_dense(&m).unwrap();
        assert_eq!(pairs.values.len(), 4);
        for col in 0..4 {
            for row in 0..4 {
                let mut acc = Complex::new(0.0f32, 0.0);
                for k in 0..4 {
                    acc += m[(row, k)] * pairs.vectors[(k, col)];
                }
                let residual = acc - pairs.values[col] * pairs.vectors[(row, col)];
                assert!(residual.norm() < 1e-4);
            }
        }
    }
}
