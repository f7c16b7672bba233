//! Lindblad generator of the driven-dissipative Kerr (quantum van der Pol)
//! oscillator, its vectorized superoperator form, and the U(1) charge block
//! decomposition.
//!
//! The master equation is
//!
//! d rho / dt = L(rho) = -i [H, rho]
//!              + sum_j rate_j ( J_j rho J_j^dag - {J_j^dag J_j, rho} / 2 ),
//!
//! with H = omega0 * n + (u/2) n^2 and jumps (a^dag, r*gamma), (a a, gamma).
//! Vectorization uses column stacking, vec(A X B) = (B^T kron A) vec(X), so
//! the matrix element X_{m,n} sits at vector index n*d + m. The charge
//! superoperator K = [n, .] is diagonal in that basis with eigenvalue
//! k = m - n, and L is block diagonal over k because every term of L moves
//! both indices of |m><n| by the same amount.

use ndarray::{linalg::kron, Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{annihilation, creation, kerr_hamiltonian, number, FockOperator, FockSpace};
use crate::scalar::{max_abs, Float};

/// Physical parameters of the van der Pol (Kerr) model, in units where the
/// two-photon loss rate gamma carries the dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VdpParams<T: Float> {
    /// Detuning of the oscillator frequency in the rotating frame.
    pub omega0: T,
    /// Kerr interaction strength.
    pub u: T,
    /// Two-photon loss rate; sets the overall scale.
    pub gamma: T,
    /// Pump ratio: the one-photon gain rate is r * gamma.
    pub r: T,
    /// Fock cutoff.
    pub n_max: usize,
}

impl<T: Float> VdpParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_nan() || self.gamma <= T::zero() {
            return Err(Error::InvalidParams("gamma must be positive".to_string()));
        }
        if self.r < T::zero() {
            return Err(Error::InvalidParams(
                "pump ratio r must be nonnegative".to_string(),
            ));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParams("n_max must be at least 1".to_string()));
        }
        Ok(())
    }

    pub fn space(&self) -> FockSpace {
        FockSpace::new(self.n_max).expect("validated cutoff")
    }
}

/// A Hamiltonian together with weighted jump operators.
#[derive(Clone, Debug)]
pub struct LindbladModel<T: Float> {
    space: FockSpace,
    hamiltonian: FockOperator<T>,
    /// Jump operators with their rates, in a fixed order.
    jumps: Vec<(FockOperator<T>, T)>,
}

impl<T: Float> LindbladModel<T> {
    pub fn new(
        space: FockSpace,
        hamiltonian: FockOperator<T>,
        jumps: Vec<(FockOperator<T>, T)>,
    ) -> Result<Self> {
        if hamiltonian.space() != space {
            return Err(Error::DimensionMismatch(
                "hamiltonian lives on a different space".to_string(),
            ));
        }
        let h_scale = hamiltonian.max_abs().max(T::one());
        if hamiltonian.hermiticity_error() > T::structure_tol() * h_scale {
            return Err(Error::InvalidParams(
                "hamiltonian must be Hermitian".to_string(),
            ));
        }
        for (op, rate) in &jumps {
            if op.space() != space {
                return Err(Error::DimensionMismatch(
                    "jump operator lives on a different space".to_string(),
                ));
            }
            if *rate < T::zero() {
                return Err(Error::InvalidParams(
                    "jump rates must be nonnegative".to_string(),
                ));
            }
        }
        Ok(LindbladModel {
            space,
            hamiltonian,
            jumps,
        })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn hamiltonian(&self) -> &FockOperator<T> {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[(FockOperator<T>, T)] {
        &self.jumps
    }
}

/// Build the van der Pol model: Kerr Hamiltonian plus one-photon gain at
/// rate r*gamma and two-photon loss at rate gamma.
pub fn build_vdp<T: Float>(params: &VdpParams<T>) -> Result<LindbladModel<T>> {
    params.validate()?;
    let space = params.space();
    let h = kerr_hamiltonian(space, params.omega0, params.u);
    let a = annihilation::<T>(space);
    let jumps = vec![
        (creation::<T>(space), params.r * params.gamma),
        (a.matmul(&a), params.gamma),
    ];
    LindbladModel::new(space, h, jumps)
}

/// Direct evaluation of L(x): the oracle route that never touches the
/// vectorized superoperator.
pub fn liouvillian_rhs<T: Float>(model: &LindbladModel<T>, x: &FockOperator<T>) -> FockOperator<T> {
    let minus_i = Complex::new(T::zero(), -T::one());
    let mut out = model.hamiltonian.commutator_with(x).scale(minus_i);
    out = out.add(&dissipator_rhs(model, x));
    out
}

/// Direct evaluation of the dissipative part D(x) alone.
pub fn dissipator_rhs<T: Float>(model: &LindbladModel<T>, x: &FockOperator<T>) -> FockOperator<T> {
    let half = Complex::new(T::lit(0.5), T::zero());
    let mut out = FockOperator::zeros(model.space);
    for (j, rate) in &model.jumps {
        let jdag = j.adjoint();
        let jdag_j = jdag.matmul(j);
        let sandwich = j.matmul(x).matmul(&jdag);
        let anti = jdag_j.anticommutator_with(x).scale(half);
        out = out.add(&sandwich.sub(&anti).scale(Complex::new(*rate, T::zero())));
    }
    out
}

/// Direct evaluation of the adjoint generator L^dag(x) with respect to the
/// Hilbert-Schmidt inner product (Heisenberg picture).
pub fn adjoint_rhs<T: Float>(model: &LindbladModel<T>, x: &FockOperator<T>) -> FockOperator<T> {
    let plus_i = Complex::new(T::zero(), T::one());
    let mut out = model.hamiltonian.commutator_with(x).scale(plus_i);
    out = out.add(&adjoint_dissipator_rhs(model, x));
    out
}

/// Direct evaluation of D^dag(x).
pub fn adjoint_dissipator_rhs<T: Float>(
    model: &LindbladModel<T>,
    x: &FockOperator<T>,
) -> FockOperator<T> {
    let half = Complex::new(T::lit(0.5), T::zero());
    let mut out = FockOperator::zeros(model.space);
    for (j, rate) in &model.jumps {
        let jdag = j.adjoint();
        let jdag_j = jdag.matmul(j);
        let sandwich = jdag.matmul(x).matmul(j);
        let anti = jdag_j.anticommutator_with(x).scale(half);
        out = out.add(&sandwich.sub(&anti).scale(Complex::new(*rate, T::zero())));
    }
    out
}

/// Vectorized-basis index of the matrix element X_{m,n} (column stacking).
pub fn vec_index(space: FockSpace, m: usize, n: usize) -> usize {
    n * space.dim() + m
}

/// U(1) charge of a vectorized-basis index: k = m - n for |m><n|.
pub fn charge_of_index(space: FockSpace, index: usize) -> i64 {
    let d = space.dim();
    (index % d) as i64 - (index / d) as i64
}

/// Column-stack an operator into a vector of length d^2.
pub fn vectorize<T: Float>(op: &FockOperator<T>) -> Array1<Complex<T>> {
    let d = op.space().dim();
    Array1::from_shape_fn(d * d, |idx| op.elements()[(idx % d, idx / d)])
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Float>(space: FockSpace, v: &Array1<Complex<T>>) -> Result<FockOperator<T>> {
    let d = space.dim();
    if v.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} does not match d^2 = {}",
            v.len(),
            d * d
        )));
    }
    let elements = Array2::from_shape_fn((d, d), |(m, n)| v[n * d + m]);
    FockOperator::from_elements(space, elements)
}

/// Dense superoperator acting on vectorized operators.
#[derive(Clone, Debug)]
pub struct Superoperator<T: Float> {
    space: FockSpace,
    matrix: Array2<Complex<T>>,
}

impl<T: Float> Superoperator<T> {
    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<Complex<T>> {
        &self.matrix
    }

    /// Apply to an operator: unvec(M vec(X)).
    pub fn apply(&self, x: &FockOperator<T>) -> Result<FockOperator<T>> {
        if x.space() != self.space {
            return Err(Error::DimensionMismatch(
                "operator lives on a different space".to_string(),
            ));
        }
        let v = vectorize(x);
        let w = self.matrix.dot(&v);
        unvectorize(self.space, &w)
    }

    /// Adjoint with respect to the Hilbert-Schmidt inner product; in the
    /// orthonormal matrix-unit basis this is the conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.matrix.nrows();
        Superoperator {
            space: self.space,
            matrix: Array2::from_shape_fn((n, n), |(i, j)| self.matrix[(j, i)].conj()),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Superoperator {
            space: self.space,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

fn identity_matrix<T: Float>(d: usize) -> Array2<Complex<T>> {
    Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// vec(A X B) = (B^T kron A) vec(X).
fn sandwich_matrix<T: Float>(a: &Array2<Complex<T>>, b: &Array2<Complex<T>>) -> Array2<Complex<T>> {
    kron(&b.t(), a)
}

/// Assemble the vectorized Liouvillian matrix.
pub fn liouvillian<T: Float>(model: &LindbladModel<T>) -> Superoperator<T> {
    let d = model.space.dim();
    let id = identity_matrix::<T>(d);
    let h = model.hamiltonian.elements();
    let minus_i = Complex::new(T::zero(), -T::one());
    let half = Complex::new(T::lit(0.5), T::zero());

    let mut m = (&sandwich_matrix(h, &id) - &sandwich_matrix(&id, h)).mapv(|z| z * minus_i);
    for (j, rate) in &model.jumps {
        let rate_c = Complex::new(*rate, T::zero());
        let jdag = j.adjoint();
        let jdag_j = jdag.matmul(j);
        let gain = sandwich_matrix(j.elements(), jdag.elements());
        let left = sandwich_matrix(jdag_j.elements(), &id);
        let right = sandwich_matrix(&id, jdag_j.elements());
        let drain = (&left + &right).mapv(|z| z * half);
        m = &m + &(&gain - &drain).mapv(|z| z * rate_c);
    }
    Superoperator {
        space: model.space,
        matrix: m,
    }
}

/// Adjoint Liouvillian, computed as the conjugate transpose of the
/// vectorized Liouvillian. The direct Heisenberg-form route is
/// [`adjoint_rhs`]; the two are compared in tests.
pub fn adjoint_liouvillian<T: Float>(model: &LindbladModel<T>) -> Superoperator<T> {
    liouvillian(model).adjoint()
}

/// Vectorized form of the dissipator D alone.
pub fn dissipator<T: Float>(model: &LindbladModel<T>) -> Superoperator<T> {
    let dissipation_only = LindbladModel {
        space: model.space,
        hamiltonian: FockOperator::zeros(model.space),
        jumps: model.jumps.clone(),
    };
    liouvillian(&dissipation_only)
}

/// Charge superoperator K = [n, .], diagonal in the vectorized basis.
pub fn charge_superoperator<T: Float>(space: FockSpace) -> Superoperator<T> {
    let d = space.dim();
    let id = identity_matrix::<T>(d);
    let n_op = number::<T>(space);
    let m = &sandwich_matrix(n_op.elements(), &id) - &sandwich_matrix(&id, n_op.elements());
    Superoperator { space, matrix: m }
}

/// One U(1) sector of the Liouvillian.
#[derive(Clone, Debug)]
pub struct ChargeBlock<T: Float> {
    pub k: i64,
    /// Vectorized-basis indices belonging to this sector, ascending.
    pub indices: Vec<usize>,
    pub matrix: Array2<Complex<T>>,
}

/// The Liouvillian split into its charge sectors k = -n_max ... n_max.
#[derive(Clone, Debug)]
pub struct BlockDecomposition<T: Float> {
    space: FockSpace,
    blocks: Vec<ChargeBlock<T>>,
}

impl<T: Float> BlockDecomposition<T> {
    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn blocks(&self) -> &[ChargeBlock<T>] {
        &self.blocks
    }

    pub fn block(&self, k: i64) -> Option<&ChargeBlock<T>> {
        let n_max = self.space.n_max() as i64;
        if k < -n_max || k > n_max {
            return None;
        }
        Some(&self.blocks[(k + n_max) as usize])
    }
}

/// Split a superoperator into its charge sectors, verifying that no entry
/// couples different sectors beyond the structural tolerance.
pub fn block_decompose<T: Float>(sup: &Superoperator<T>) -> Result<BlockDecomposition<T>> {
    let space = sup.space();
    let d = space.dim();
    let n_max = space.n_max() as i64;
    let charges: Vec<i64> = (0..d * d).map(|i| charge_of_index(space, i)).collect();
    let scale = max_abs(sup.matrix());
    let tol = T::structure_tol() * scale;

    for row in 0..d * d {
        for col in 0..d * d {
            if charges[row] != charges[col] {
                let mag = sup.matrix()[(row, col)].norm();
                if mag > tol {
                    return Err(Error::ChargeSymmetryViolation {
                        row,
                        col,
                        magnitude: mag.to_f64().unwrap_or(f64::NAN),
                        k_row: charges[row],
                        k_col: charges[col],
                    });
                }
            }
        }
    }

    let mut blocks = Vec::with_capacity((2 * n_max + 1) as usize);
    for k in -n_max..=n_max {
        let indices: Vec<usize> = (0..d * d).filter(|&i| charges[i] == k).collect();
        let size = indices.len();
        debug_assert_eq!(size, d - k.unsigned_abs() as usize);
        let matrix = Array2::from_shape_fn((size, size), |(bi, bj)| {
            sup.matrix()[(indices[bi], indices[bj])]
        });
        blocks.push(ChargeBlock { k, indices, matrix });
    }
    Ok(BlockDecomposition { space, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis_operator;

    fn params(r: f64, u: f64, n_max: usize) -> VdpParams<f64> {
        VdpParams {
            omega0: 0.0,
            u,
            gamma: 1.0,
            r,
            n_max,
        }
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// Deterministic pseudo-random Hermitian operator for oracle comparisons.
    fn seeded_hermitian(space: FockSpace, seed: u64) -> FockOperator<f64> {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let d = space.dim();
        let mut x = FockOperator::zeros(space);
        for i in 0..d {
            for j in i..d {
                let re = next();
                let im = if i == j { 0.0 } else { next() };
                x.elements_mut()[(i, j)] = c(re, im);
                if i != j {
                    x.elements_mut()[(j, i)] = c(re, -im);
                }
            }
        }
        x
    }

    #[test]
    fn build_vdp_orders_jumps_and_validates() {
        let model = build_vdp(&params(0.5, 3.0, 8)).unwrap();
        assert_eq!(model.jumps().len(), 2);
        // First jump is the pump a^dag at rate r*gamma.
        assert!((model.jumps()[0].1 - 0.5).abs() < 1e-15);
        assert!((model.jumps()[0].0.elements()[(1, 0)].re - 1.0).abs() < 1e-15);
        // Second jump is the two-photon loss a*a at rate gamma.
        assert!((model.jumps()[1].1 - 1.0).abs() < 1e-15);
        assert!((model.jumps()[1].0.elements()[(0, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!(build_vdp(&params(-0.1, 3.0, 8)).is_err());
        assert!(build_vdp(&VdpParams {
            gamma: 0.0,
            ..params(1.0, 1.0, 4)
        })
        .is_err());
    }

    #[test]
    fn pump_action_on_vacuum() {
        // For rho = |0><0| the pump term alone gives
        // r*gamma * (|1><1| - |0><0|) since a^dag|0><0|a = |1><1| and
        // {a a^dag, |0><0|}/2 = |0><0|.
        let space = FockSpace::new(3).unwrap();
        let model = LindbladModel::new(
            space,
            FockOperator::zeros(space),
            vec![(creation::<f64>(space), 2.0)],
        )
        .unwrap();
        let rho0 = basis_operator::<f64>(space, 0, 0).unwrap();
        let out = liouvillian_rhs(&model, &rho0);
        assert!((out.elements()[(1, 1)].re - 2.0).abs() < 1e-14);
        assert!((out.elements()[(0, 0)].re + 2.0).abs() < 1e-14);
        assert!(out.sub(&dissipator_rhs(&model, &rho0)).max_abs() < 1e-15);
    }

    #[test]
    fn superoperator_matches_direct_evaluation() {
        let model = build_vdp(&params(1.7, 4.2, 6)).unwrap();
        let sup = liouvillian(&model);
        for seed in 1..=20u64 {
            let x = seeded_hermitian(model.space(), seed);
            let direct = liouvillian_rhs(&model, &x);
            let via_matrix = sup.apply(&x).unwrap();
            assert!(
                direct.sub(&via_matrix).max_abs() < 1e-12,
                "seed {seed} disagrees"
            );
        }
    }

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity() {
        let model = build_vdp(&params(2.5, 1.5, 7)).unwrap();
        for seed in 1..=10u64 {
            let x = seeded_hermitian(model.space(), seed);
            let lx = liouvillian_rhs(&model, &x);
            assert!(lx.trace().norm() < 1e-12);
            assert!(lx.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn adjoint_matches_hilbert_schmidt_pairing() {
        // tr(A^dag L(B)) == tr((L^dag A)^dag B) for random pairs.
        let model = build_vdp(&params(0.8, 2.0, 5)).unwrap();
        let sup = liouvillian(&model);
        let sup_adj = adjoint_liouvillian(&model);
        for seed in 0..20u64 {
            let a = seeded_hermitian(model.space(), 2 * seed + 1);
            let b = seeded_hermitian(model.space(), 2 * seed + 2);
            let lhs = a.hs_inner(&sup.apply(&b).unwrap());
            let rhs = sup_adj.apply(&a).unwrap().hs_inner(&b);
            assert!((lhs - rhs).norm() < 1e-11, "seed {seed}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn adjoint_superoperator_matches_heisenberg_form() {
        let model = build_vdp(&params(1.2, 0.7, 5)).unwrap();
        let sup_adj = adjoint_liouvillian(&model);
        for seed in 0..10u64 {
            let x = seeded_hermitian(model.space(), seed + 31);
            let via_matrix = sup_adj.apply(&x).unwrap();
            let direct = adjoint_rhs(&model, &x);
            assert!(via_matrix.sub(&direct).max_abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_annihilates_identity() {
        let model = build_vdp(&params(3.0, 5.0, 8)).unwrap();
        let one = FockOperator::identity(model.space());
        assert!(adjoint_rhs(&model, &one).max_abs() < 1e-13);
    }

    #[test]
    fn hamiltonian_part_is_anti_hermitian_superoperator() {
        // With all rates zero, L^dag = -L.
        let space = FockSpace::new(6).unwrap();
        let model =
            LindbladModel::new(space, kerr_hamiltonian::<f64>(space, 0.3, 2.0), vec![]).unwrap();
        let sup = liouvillian(&model);
        let sum = sup.adjoint().matrix() + sup.matrix();
        assert!(max_abs(&sum.to_owned()) < 1e-13);
    }

    #[test]
    fn charge_superoperator_measures_index_difference() {
        let space = FockSpace::new(4).unwrap();
        let k_sup = charge_superoperator::<f64>(space);
        let op = basis_operator::<f64>(space, 3, 1).unwrap();
        let out = k_sup.apply(&op).unwrap();
        assert!(out.sub(&op.scale(c(2.0, 0.0))).max_abs() < 1e-14);
    }

    #[test]
    fn charge_commutes_with_liouvillian() {
        let model = build_vdp(&params(2.0, 6.0, 6)).unwrap();
        let l = liouvillian(&model);
        let k = charge_superoperator::<f64>(model.space());
        let lk = l.matrix().dot(k.matrix());
        let kl = k.matrix().dot(l.matrix());
        assert!(max_abs(&(&lk - &kl)) < 1e-12);
    }

    #[test]
    fn block_sizes_follow_charge_multiplicity() {
        let model = build_vdp(&params(0.5, 3.0, 15)).unwrap();
        let decomp = block_decompose(&liouvillian(&model)).unwrap();
        assert_eq!(decomp.blocks().len(), 31);
        let total: usize = decomp.blocks().iter().map(|b| b.indices.len()).sum();
        assert_eq!(total, 256);
        let b1 = decomp.block(1).unwrap();
        assert_eq!(b1.indices.len(), 15);
        assert_eq!(decomp.block(0).unwrap().indices.len(), 16);
        assert_eq!(decomp.block(-15).unwrap().indices.len(), 1);
        assert!(decomp.block(16).is_none());
    }

    #[test]
    fn block_reassembly_reproduces_matrix() {
        let model = build_vdp(&params(1.0, 2.0, 5)).unwrap();
        let sup = liouvillian(&model);
        let decomp = block_decompose(&sup).unwrap();
        for block in decomp.blocks() {
            for (bi, &i) in block.indices.iter().enumerate() {
                for (bj, &j) in block.indices.iter().enumerate() {
                    let diff = (block.matrix[(bi, bj)] - sup.matrix()[(i, j)]).norm();
                    assert!(diff == 0.0);
                }
            }
        }
    }

    #[test]
    fn charge_breaking_jump_is_rejected() {
        // a + a*a changes the charge by mixed amounts, so the generator
        // couples different sectors and decomposition must refuse.
        let space = FockSpace::new(4).unwrap();
        let a = annihilation::<f64>(space);
        let mixed = a.add(&a.matmul(&a));
        let model =
            LindbladModel::new(space, FockOperator::zeros(space), vec![(mixed, 1.0)]).unwrap();
        let sup = liouvillian(&model);
        match block_decompose(&sup) {
            Err(Error::ChargeSymmetryViolation { .. }) => {}
            other => panic!("expected charge violation, got {other:?}"),
        }
    }

    #[test]
    fn vectorization_round_trips() {
        let space = FockSpace::new(3).unwrap();
        let x = seeded_hermitian(space, 7);
        let v = vectorize(&x);
        assert_eq!(v.len(), 16);
        assert_eq!(v[vec_index(space, 2, 1)], x.elements()[(2, 1)]);
        let back = unvectorize(space, &v).unwrap();
        assert!(back.sub(&x).max_abs() == 0.0);
        assert_eq!(charge_of_index(space, vec_index(space, 3, 1)), 2);
    }

    #[test]
    fn f32_superoperator_agrees_with_direct_route() {
        let p = VdpParams::<f32> {
            omega0: 0.0,
            u: 2.0,
            gamma: 1.0,
            r: 0.5,
            n_max: 4,
        };
        let model = build_vdp(&p).unwrap();
        let sup = liouvillian(&model);
        let x = {
            let mut x = FockOperator::<f32>::zeros(model.space());
            x.elements_mut()[(0, 0)] = Complex::new(0.25, 0.0);
            x.elements_mut()[(2, 1)] = Complex::new(0.5, -0.25);
            x.elements_mut()[(1, 2)] = Complex::new(0.5, 0.25);
            x
        };
        let diff = sup
            .apply(&x)
            .unwrap()
            .sub(&liouvillian_rhs(&model, &x))
            .max_abs();
        assert!(diff < 1e-5);
    }
}
