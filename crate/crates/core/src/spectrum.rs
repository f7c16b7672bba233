//! Biorthogonal eigenmode set of the Liouvillian and the steady state.
//!
//! Each charge block L_k is diagonalized densely; left eigenoperators come
//! from the conjugate-transpose block (never from inverting the right
//! eigenvector matrix), are matched to right eigenvalues by lambda <->
//! conj(lambda), and the pairs are normalized to tr(l_a^dag r_b) = delta_ab.
//! Degenerate clusters are normalized jointly through their Gram matrix.
//! The unique zero mode yields the steady state rho_s = r_0 / tr(r_0), after
//! which the paired left eigenoperator is the identity.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{FockOperator, FockSpace};
use crate::lindblad::{block_decompose, build_vdp, liouvillian, BlockDecomposition, VdpParams};
use crate::scalar::{max_abs, solve_dense, Float};

pub use crate::ode::propagate_oracle;

/// One eigenmode of the generator: L(right) = lambda right,
/// L^dag(left) = conj(lambda) left, normalized against its partners.
#[derive(Clone, Debug)]
pub struct EigenMode<T: Float> {
    pub k: i64,
    pub lambda: Complex<T>,
    pub right: FockOperator<T>,
    pub left: FockOperator<T>,
}

/// The full eigenmode set, ordered by charge sector (k ascending) and inside
/// each sector by Im lambda ascending with ties broken by Re lambda
/// descending.
#[derive(Clone, Debug)]
pub struct LiouvilleSpectrum<T: Float> {
    space: FockSpace,
    modes: Vec<EigenMode<T>>,
    steady_index: usize,
    scale: T,
}

impl<T: Float> LiouvilleSpectrum<T> {
    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn modes(&self) -> &[EigenMode<T>] {
        &self.modes
    }

    pub fn modes_with_charge(&self, k: i64) -> impl Iterator<Item = &EigenMode<T>> {
        self.modes.iter().filter(move |m| m.k == k)
    }

    /// Index of the zero mode within [`Self::modes`].
    pub fn steady_index(&self) -> usize {
        self.steady_index
    }

    /// Unit-trace steady state (the normalized right zero mode).
    pub fn steady_state(&self) -> &FockOperator<T> {
        &self.modes[self.steady_index].right
    }

    /// Largest |lambda| over the spectrum; tolerances are relative to it.
    pub fn scale(&self) -> T {
        self.scale
    }

    /// Diagonal of the steady state in the number basis.
    pub fn populations(&self) -> Vec<T> {
        let rho = self.steady_state();
        (0..self.space.dim())
            .map(|n| rho.elements()[(n, n)].re)
            .collect()
    }
}

fn conj_transpose<T: Float>(m: &Array2<Complex<T>>) -> Array2<Complex<T>> {
    Array2::from_shape_fn((m.ncols(), m.nrows()), |(i, j)| m[(j, i)].conj())
}

fn normalize_columns<T: Float>(m: &mut Array2<Complex<T>>) {
    for mut col in m.columns_mut() {
        let norm = col
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        if norm > T::zero() {
            let inv = Complex::new(T::one() / norm, T::zero());
            col.mapv_inplace(|z| z * inv);
        }
    }
}

/// Greedy bijection between left eigenvalues mu_j and right eigenvalues
/// lambda_i minimizing |mu_j - conj(lambda_i)| pair by pair.
fn pair_left_to_right<T: Float>(
    right: &[Complex<T>],
    left: &[Complex<T>],
    tol: T,
) -> Result<Vec<usize>> {
    let n = right.len();
    let mut candidates: Vec<(T, usize, usize)> = Vec::with_capacity(n * n);
    for (i, lam) in right.iter().enumerate() {
        for (j, mu) in left.iter().enumerate() {
            candidates.push(((mu - lam.conj()).norm(), i, j));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut assignment = vec![usize::MAX; n];
    let mut left_used = vec![false; n];
    let mut assigned = 0;
    let mut worst = T::zero();
    for (dist, i, j) in candidates {
        if assignment[i] != usize::MAX || left_used[j] {
            continue;
        }
        assignment[i] = j;
        left_used[j] = true;
        if dist > worst {
            worst = dist;
        }
        assigned += 1;
        if assigned == n {
            break;
        }
    }
    if worst > tol {
        return Err(Error::PairingFailure(worst.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(assignment)
}

/// Group indices whose eigenvalues sit within `tol` of each other
/// (transitively, via union-find).
fn degenerate_clusters<T: Float>(values: &[Complex<T>], tol: T) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        groups[root].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

fn embed_vector<T: Float>(
    space: FockSpace,
    indices: &[usize],
    column: ndarray::ArrayView1<'_, Complex<T>>,
) -> FockOperator<T> {
    let d = space.dim();
    let mut op = FockOperator::zeros(space);
    for (pos, &idx) in indices.iter().enumerate() {
        op.elements_mut()[(idx % d, idx / d)] = column[pos];
    }
    op
}

struct RawBlock<T: Float> {
    k: i64,
    indices: Vec<usize>,
    right_values: Vec<Complex<T>>,
    right_vectors: Array2<Complex<T>>,
    left_values: Vec<Complex<T>>,
    left_vectors: Array2<Complex<T>>,
}

/// Diagonalize every charge block and assemble the biorthonormal mode set.
pub fn diagonalize<T: Float>(decomp: &BlockDecomposition<T>) -> Result<LiouvilleSpectrum<T>> {
    let space = decomp.space();
    let d = space.dim();

    let mut raw_blocks = Vec::with_capacity(decomp.blocks().len());
    let mut scale = T::zero();
    for block in decomp.blocks() {
        let right = T::eig_dense(&block.matrix)?;
        let left = T::eig_dense(&conj_transpose(&block.matrix))?;
        for v in &right.values {
            if v.norm() > scale {
                scale = v.norm();
            }
        }
        let mut right_vectors = right.vectors;
        let mut left_vectors = left.vectors;
        normalize_columns(&mut right_vectors);
        normalize_columns(&mut left_vectors);
        raw_blocks.push(RawBlock {
            k: block.k,
            indices: block.indices.clone(),
            right_values: right.values,
            right_vectors,
            left_values: left.values,
            left_vectors,
        });
    }

    let tol_zero = T::zero_mode_tol() * scale;
    let tol_cluster = T::cluster_tol() * scale;
    let tol_pair = T::lit(1e-6) * scale;
    let defect_floor = T::epsilon() * T::lit(1e4);

    let mut modes: Vec<EigenMode<T>> = Vec::with_capacity(d * d);
    for rb in &raw_blocks {
        let size = rb.right_values.len();
        let assignment = pair_left_to_right(&rb.right_values, &rb.left_values, tol_pair)?;
        let clusters = degenerate_clusters(&rb.right_values, tol_cluster);

        let mut block_modes: Vec<EigenMode<T>> = Vec::with_capacity(size);
        for cluster in clusters {
            let m = cluster.len();
            // Gram matrix G[a][b] = <w_a, r_b> over the cluster.
            let gram = Array2::from_shape_fn((m, m), |(a, b)| {
                let wj = assignment[cluster[a]];
                let ri = cluster[b];
                let mut acc = Complex::new(T::zero(), T::zero());
                for row in 0..size {
                    acc += rb.left_vectors[(row, wj)].conj() * rb.right_vectors[(row, ri)];
                }
                acc
            });
            if max_abs(&gram) < defect_floor {
                return Err(Error::DefectiveCluster(format!(
                    "{:?}",
                    rb.right_values[cluster[0]]
                )));
            }
            // New left vectors L = W (G^H)^{-1} give L^H R = I on the cluster.
            let gram_h = conj_transpose(&gram);
            let mut inv = Array2::from_elem((m, m), Complex::new(T::zero(), T::zero()));
            for a in 0..m {
                let mut unit = vec![Complex::new(T::zero(), T::zero()); m];
                unit[a] = Complex::new(T::one(), T::zero());
                let col = solve_dense(&gram_h, &unit).ok_or_else(|| {
                    Error::DefectiveCluster(format!("{:?}", rb.right_values[cluster[0]]))
                })?;
                for b in 0..m {
                    inv[(b, a)] = col[b];
                }
            }
            if max_abs(&inv) > T::one() / defect_floor {
                return Err(Error::DefectiveCluster(format!(
                    "{:?}",
                    rb.right_values[cluster[0]]
                )));
            }
            for (a, &ri) in cluster.iter().enumerate() {
                let lvec = Array1::from_shape_fn(size, |row| {
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for b in 0..m {
                        acc += rb.left_vectors[(row, assignment[cluster[b]])] * inv[(b, a)];
                    }
                    acc
                });
                block_modes.push(EigenMode {
                    k: rb.k,
                    lambda: rb.right_values[ri],
                    right: embed_vector(space, &rb.indices, rb.right_vectors.column(ri)),
                    left: embed_vector(space, &rb.indices, lvec.view()),
                });
            }
        }

        block_modes.sort_by(|a, b| {
            a.lambda
                .im
                .partial_cmp(&b.lambda.im)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(
                    b.lambda
                        .re
                        .partial_cmp(&a.lambda.re)
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
        });
        modes.extend(block_modes);
    }

    for mode in &modes {
        if mode.lambda.re > tol_zero {
            return Err(Error::GrowingMode(
                mode.lambda.re.to_f64().unwrap_or(f64::NAN),
            ));
        }
    }

    let zero_indices: Vec<usize> = modes
        .iter()
        .enumerate()
        .filter(|(_, m)| m.lambda.norm() <= tol_zero)
        .map(|(i, _)| i)
        .collect();
    if zero_indices.len() != 1 {
        return Err(Error::DegenerateSteadyState(zero_indices.len()));
    }
    let steady_index = zero_indices[0];
    if modes[steady_index].k != 0 {
        return Err(Error::InvalidSteadyState(
            "zero mode sits outside the k=0 sector".to_string(),
        ));
    }

    // Normalize the zero mode to a unit-trace steady state; rescaling the
    // left partner by the conjugate keeps tr(l^dag r) = 1. The left partner
    // then equals the identity operator.
    let trace = modes[steady_index].right.trace();
    if trace.norm() < T::lit(1e-8) {
        return Err(Error::InvalidSteadyState(
            "zero mode has vanishing trace".to_string(),
        ));
    }
    let inv_trace = Complex::new(T::one(), T::zero()) / trace;
    modes[steady_index].right = modes[steady_index].right.scale(inv_trace);
    modes[steady_index].left = modes[steady_index].left.scale(trace.conj());

    let rho = &modes[steady_index].right;
    if rho.hermiticity_error() > T::structure_tol() {
        return Err(Error::InvalidSteadyState(format!(
            "steady state not Hermitian: defect {:.3e}",
            rho.hermiticity_error().to_f64().unwrap_or(f64::NAN)
        )));
    }
    if (rho.trace().re - T::one()).abs() > T::structure_tol()
        || rho.trace().im.abs() > T::structure_tol()
    {
        return Err(Error::InvalidSteadyState(
            "steady state trace differs from one".to_string(),
        ));
    }
    let herm = Array2::from_shape_fn((d, d), |(i, j)| {
        (rho.elements()[(i, j)] + rho.elements()[(j, i)].conj())
            * Complex::new(T::lit(0.5), T::zero())
    });
    let eigs = T::eig_dense(&herm)?;
    for v in &eigs.values {
        if v.re < -T::structure_tol() {
            return Err(Error::InvalidSteadyState(format!(
                "steady state has negative population {:.3e}",
                v.re.to_f64().unwrap_or(f64::NAN)
            )));
        }
    }

    Ok(LiouvilleSpectrum {
        space,
        modes,
        steady_index,
        scale,
    })
}

/// Convenience: full pipeline from van der Pol parameters.
pub fn diagonalize_vdp<T: Float>(params: &VdpParams<T>) -> Result<LiouvilleSpectrum<T>> {
    let model = build_vdp(params)?;
    let sup = liouvillian(&model);
    let decomp = block_decompose(&sup)?;
    diagonalize(&decomp)
}

/// Expansion coefficients c_a = tr(l_a^dag rho0) of a unit-trace initial
/// state over the eigenmode set, aligned with [`LiouvilleSpectrum::modes`].
pub fn decay_mode_expansion<T: Float>(
    spectrum: &LiouvilleSpectrum<T>,
    rho0: &FockOperator<T>,
) -> Result<Vec<Complex<T>>> {
    if rho0.space() != spectrum.space {
        return Err(Error::DimensionMismatch(
            "initial state lives on a different space".to_string(),
        ));
    }
    let trace = rho0.trace();
    if (trace.re - T::one()).abs() > T::lit(1e-8) || trace.im.abs() > T::lit(1e-8) {
        return Err(Error::InvalidParams(
            "decay-mode expansion expects a unit-trace initial state".to_string(),
        ));
    }
    Ok(spectrum
        .modes
        .iter()
        .map(|mode| mode.left.hs_inner(rho0))
        .collect())
}

/// Reassemble rho(t) = sum_a c_a exp(lambda_a t) r_a from expansion
/// coefficients. The zero-mode term reproduces rho_s because c_0 = tr(rho0).
pub fn reconstruct<T: Float>(
    spectrum: &LiouvilleSpectrum<T>,
    coefficients: &[Complex<T>],
    t: T,
) -> Result<FockOperator<T>> {
    if coefficients.len() != spectrum.modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} modes",
            coefficients.len(),
            spectrum.modes.len()
        )));
    }
    let mut out = FockOperator::zeros(spectrum.space);
    for (mode, &c) in spectrum.modes.iter().zip(coefficients) {
        let weight = c * (mode.lambda * Complex::new(t, T::zero())).exp();
        if weight.norm() == T::zero() {
            continue;
        }
        out = out.add(&mode.right.scale(weight));
    }
    Ok(out)
}

/// Eigenvalue table (k, Re lambda, Im lambda) in deterministic export order.
pub fn export_eigenvalues<T: Float>(spectrum: &LiouvilleSpectrum<T>) -> Vec<(i64, T, T)> {
    spectrum
        .modes
        .iter()
        .map(|m| (m.k, m.lambda.re, m.lambda.im))
        .collect()
}

/// Worst deviation of tr(l_a^dag r_b) from delta_ab. Only same-sector pairs
/// are compared; cross-sector products vanish structurally.
pub fn biorthogonality_residual<T: Float>(spectrum: &LiouvilleSpectrum<T>) -> T {
    let mut worst = T::zero();
    let n = spectrum.modes.len();
    for a in 0..n {
        for b in 0..n {
            if spectrum.modes[a].k != spectrum.modes[b].k {
                continue;
            }
            let overlap = spectrum.modes[a].left.hs_inner(&spectrum.modes[b].right);
            let target = if a == b {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            };
            let dev = (overlap - target).norm();
            if dev > worst {
                worst = dev;
            }
        }
    }
    worst
}

/// Max-norm residual of the completeness relation
/// sum_a vec(r_a) vec(l_a)^dag = identity on the d^2 space.
pub fn completeness_residual<T: Float>(spectrum: &LiouvilleSpectrum<T>) -> T {
    let d = spectrum.space.dim();
    let dim = d * d;
    let mut sum = Array2::from_elem((dim, dim), Complex::new(T::zero(), T::zero()));
    for mode in &spectrum.modes {
        let r = crate::lindblad::vectorize(&mode.right);
        let l = crate::lindblad::vectorize(&mode.left);
        for i in 0..dim {
            if r[i].norm() == T::zero() {
                continue;
            }
            for j in 0..dim {
                sum[(i, j)] += r[i] * l[j].conj();
            }
        }
    }
    let mut worst = T::zero();
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            };
            let dev = (sum[(i, j)] - target).norm();
            if dev > worst {
                worst = dev;
            }
        }
    }
    worst
}

/// Shift of the slow k=1 eigenvalues when the cutoff grows by `extra`.
#[derive(Clone, Copy, Debug)]
pub struct CutoffStability<T: Float> {
    pub n_max: usize,
    pub n_max_check: usize,
    pub compared: usize,
    pub max_shift: T,
}

/// Compare the `count` k=1 eigenvalues with smallest |Im lambda| between the
/// configured cutoff and an enlarged one, matching each to its nearest
/// partner.
pub fn cutoff_stability<T: Float>(
    params: &VdpParams<T>,
    extra: usize,
    count: usize,
) -> Result<CutoffStability<T>> {
    let base = diagonalize_vdp(params)?;
    let enlarged_params = VdpParams {
        n_max: params.n_max + extra,
        ..*params
    };
    let enlarged = diagonalize_vdp(&enlarged_params)?;

    let mut slow: Vec<Complex<T>> = base.modes_with_charge(1).map(|m| m.lambda).collect();
    slow.sort_by(|a, b| {
        a.im.abs()
            .partial_cmp(&b.im.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    slow.truncate(count);
    let reference: Vec<Complex<T>> = enlarged.modes_with_charge(1).map(|m| m.lambda).collect();

    let mut max_shift = T::zero();
    for lam in &slow {
        let nearest = reference
            .iter()
            .map(|r| (lam - r).norm())
            .fold(T::infinity(), |a, b| if b < a { b } else { a });
        if nearest > max_shift {
            max_shift = nearest;
        }
    }
    Ok(CutoffStability {
        n_max: params.n_max,
        n_max_check: params.n_max + extra,
        compared: slow.len(),
        max_shift,
    })
}
