//! Truncated bosonic Fock space and dense operators on it.
//!
//! The space keeps number states |0>, ..., |n_max>; operators are dense
//! complex matrices in that basis. Truncation is the usual hard cutoff:
//! the creation operator annihilates |n_max>, so identities that involve
//! states above the cutoff (for example [a, a^dag] = 1) acquire a defect in
//! the (n_max, n_max) corner.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Float;

/// Fock space truncated at occupation `n_max` (dimension `n_max + 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParams("n_max must be at least 1".to_string()));
        }
        Ok(FockSpace { n_max })
    }

    pub fn n_max(self) -> usize {
        self.n_max
    }

    /// Hilbert-space dimension, `n_max + 1`.
    pub fn dim(self) -> usize {
        self.n_max + 1
    }
}

/// Dense operator on a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator<T: Float> {
    space: FockSpace,
    elements: Array2<Complex<T>>,
}

impl<T: Float> FockOperator<T> {
    pub fn zeros(space: FockSpace) -> Self {
        let d = space.dim();
        FockOperator {
            space,
            elements: Array2::from_elem((d, d), Complex::new(T::zero(), T::zero())),
        }
    }

    pub fn identity(space: FockSpace) -> Self {
        let mut op = Self::zeros(space);
        for i in 0..space.dim() {
            op.elements[(i, i)] = Complex::new(T::one(), T::zero());
        }
        op
    }

    /// Wrap an explicit matrix; the shape must match the space dimension.
    pub fn from_elements(space: FockSpace, elements: Array2<Complex<T>>) -> Result<Self> {
        let d = space.dim();
        if elements.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "operator shape {:?} does not match space dimension {}",
                elements.dim(),
                d
            )));
        }
        Ok(FockOperator { space, elements })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn elements(&self) -> &Array2<Complex<T>> {
        &self.elements
    }

    pub fn elements_mut(&mut self) -> &mut Array2<Complex<T>> {
        &mut self.elements
    }

    pub fn into_elements(self) -> Array2<Complex<T>> {
        self.elements
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> Self {
        let d = self.space.dim();
        FockOperator {
            space: self.space,
            elements: Array2::from_shape_fn((d, d), |(i, j)| self.elements[(j, i)].conj()),
        }
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.space, rhs.space);
        FockOperator {
            space: self.space,
            elements: self.elements.dot(&rhs.elements),
        }
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        FockOperator {
            space: self.space,
            elements: self.elements.mapv(|z| z * factor),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..self.space.dim() {
            acc += self.elements[(i, i)];
        }
        acc
    }

    /// Trace of the product `tr(self * rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> Complex<T> {
        debug_assert_eq!(self.space, rhs.space);
        let d = self.space.dim();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..d {
            for j in 0..d {
                acc += self.elements[(i, j)] * rhs.elements[(j, i)];
            }
        }
        acc
    }

    /// Hilbert-Schmidt inner product `tr(self^dag * rhs)`.
    pub fn hs_inner(&self, rhs: &Self) -> Complex<T> {
        debug_assert_eq!(self.space, rhs.space);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (a, b) in self.elements.iter().zip(rhs.elements.iter()) {
            acc += a.conj() * *b;
        }
        acc
    }

    pub fn commutator_with(&self, rhs: &Self) -> Self {
        self.matmul(rhs).sub(&rhs.matmul(self))
    }

    pub fn anticommutator_with(&self, rhs: &Self) -> Self {
        self.matmul(rhs).add(&rhs.matmul(self))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.space, rhs.space);
        FockOperator {
            space: self.space,
            elements: &self.elements + &rhs.elements,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.space, rhs.space);
        FockOperator {
            space: self.space,
            elements: &self.elements - &rhs.elements,
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        crate::scalar::max_abs(&self.elements)
    }

    /// Largest absolute entry of `self - self^dag`.
    pub fn hermiticity_error(&self) -> T {
        let d = self.space.dim();
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                let diff = (self.elements[(i, j)] - self.elements[(j, i)].conj()).norm();
                if diff > worst {
                    worst = diff;
                }
            }
        }
        worst
    }
}

/// Annihilation operator: a |n> = sqrt(n) |n-1>.
pub fn annihilation<T: Float>(space: FockSpace) -> FockOperator<T> {
    let mut op = FockOperator::zeros(space);
    for n in 1..space.dim() {
        op.elements_mut()[(n - 1, n)] = Complex::new(T::lit(n as f64).sqrt(), T::zero());
    }
    op
}

/// Creation operator on the truncated space; a^dag |n_max> = 0.
pub fn creation<T: Float>(space: FockSpace) -> FockOperator<T> {
    annihilation(space).adjoint()
}

/// Number operator, diagonal with entries n.
pub fn number<T: Float>(space: FockSpace) -> FockOperator<T> {
    let mut op = FockOperator::zeros(space);
    for n in 0..space.dim() {
        op.elements_mut()[(n, n)] = Complex::new(T::lit(n as f64), T::zero());
    }
    op
}

/// Kerr Hamiltonian omega0 * n + (u/2) * n^2, diagonal in the number basis.
pub fn kerr_hamiltonian<T: Float>(space: FockSpace, omega0: T, u: T) -> FockOperator<T> {
    let mut op = FockOperator::zeros(space);
    let half = T::lit(0.5);
    for n in 0..space.dim() {
        let nf = T::lit(n as f64);
        op.elements_mut()[(n, n)] = Complex::new(omega0 * nf + half * u * nf * nf, T::zero());
    }
    op
}

/// Matrix unit |m><n|.
pub fn basis_operator<T: Float>(space: FockSpace, m: usize, n: usize) -> Result<FockOperator<T>> {
    let d = space.dim();
    if m >= d || n >= d {
        return Err(Error::DimensionMismatch(format!(
            "basis operator |{}><{}| does not fit a space of dimension {}",
            m, n, d
        )));
    }
    let mut op = FockOperator::zeros(space);
    op.elements_mut()[(m, n)] = Complex::new(T::one(), T::zero());
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n_max: usize) -> FockSpace {
        FockSpace::new(n_max).unwrap()
    }

    #[test]
    fn space_rejects_trivial_cutoff() {
        assert!(FockSpace::new(0).is_err());
        assert_eq!(space(15).dim(), 16);
    }

    #[test]
    fn annihilation_has_sqrt_entries() {
        let a = annihilation::<f64>(space(5));
        for n in 1..=5usize {
            let entry = a.elements()[(n - 1, n)];
            assert!((entry.re - (n as f64).sqrt()).abs() < 1e-15);
            assert!(entry.im == 0.0);
        }
        assert!(a.elements()[(3, 2)].norm() == 0.0);
    }

    #[test]
    fn creation_is_adjoint_of_annihilation() {
        let s = space(6);
        let a = annihilation::<f64>(s);
        let c = creation::<f64>(s);
        assert!(c.sub(&a.adjoint()).max_abs() == 0.0);
    }

    #[test]
    fn number_matches_creation_times_annihilation() {
        let s = space(9);
        let n_direct = number::<f64>(s);
        let n_product = creation::<f64>(s).matmul(&annihilation(s));
        assert!(n_direct.sub(&n_product).max_abs() < 1e-12);
    }

    #[test]
    fn commutator_shows_truncation_corner() {
        let s = space(7);
        let a = annihilation::<f64>(s);
        let c = creation::<f64>(s);
        let comm = a.commutator_with(&c);
        for n in 0..7usize {
            assert!((comm.elements()[(n, n)].re - 1.0).abs() < 1e-13);
        }
        assert!((comm.elements()[(7, 7)].re + 7.0).abs() < 1e-12);
    }

    #[test]
    fn kerr_hamiltonian_diagonal_and_gaps() {
        let s = space(10);
        let h = kerr_hamiltonian::<f64>(s, 0.0, 2.0);
        assert!((h.elements()[(3, 3)].re - 9.0).abs() < 1e-13);
        let omega0 = 0.7;
        let u = 1.3;
        let h2 = kerr_hamiltonian::<f64>(s, omega0, u);
        for n in 0..10usize {
            let gap = h2.elements()[(n + 1, n + 1)].re - h2.elements()[(n, n)].re;
            let expected = omega0 + 0.5 * u + u * n as f64;
            assert!((gap - expected).abs() < 1e-12);
        }
        assert!(h.hermiticity_error() == 0.0);
    }

    #[test]
    fn hs_inner_is_orthonormal_on_matrix_units() {
        let s = space(3);
        let e10 = basis_operator::<f64>(s, 1, 0).unwrap();
        let e21 = basis_operator::<f64>(s, 2, 1).unwrap();
        assert!((e10.hs_inner(&e10).re - 1.0).abs() < 1e-15);
        assert!(e10.hs_inner(&e21).norm() < 1e-15);
    }

    #[test]
    fn trace_product_matches_matmul_trace() {
        let s = space(4);
        let a = annihilation::<f64>(s);
        let c = creation::<f64>(s);
        let direct = a.trace_product(&c);
        let via_product = a.matmul(&c).trace();
        assert!((direct - via_product).norm() < 1e-13);
    }

    #[test]
    fn f32_operators_work() {
        let s = space(4);
        let a = annihilation::<f32>(s);
        assert!((a.elements()[(1, 2)].re - 2f32.sqrt()).abs() < 1e-6);
        let n = creation::<f32>(s).matmul(&a);
        assert!(n.sub(&number(s)).max_abs() < 1e-5);
    }
}
