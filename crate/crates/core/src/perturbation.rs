//! Perturbation theory in the dissipator around the closed Kerr oscillator.
//!
//! Zeroth-order eigenmodes are the Fock matrix units |i><j| with eigenvalues
//! -i(E_i - E_j). The first-order eigenvalue correction is the dissipator
//! expectation tr(l^(0)dag D(r^(0))); evaluating it directly gives the
//! "trace formula" linewidth gamma n^2 + r gamma (2n+3)/2. A second
//! convention in circulation, here called the closed form, is exactly twice
//! that value. Both are implemented and every perturbative output can run
//! with either; exact diagonalization at large u/gamma picks the physical
//! one (see the eigenvalue-convergence tests).
//!
//! First-order eigenvector corrections mix each coherence (n+1, n) with the
//! two coherences reachable by one pump or one two-photon-loss event. The
//! corrections carry factors 1/u, so the scheme requires u != 0.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{annihilation, basis_operator, creation, FockOperator, FockSpace};
use crate::greens::{retarded_gf, spectral_function, OmegaGrid, PoleData};
use crate::lindblad::{build_vdp, dissipator_rhs, LindbladModel, VdpParams};
use crate::scalar::Float;
use crate::spectrum::LiouvilleSpectrum;

/// Which linewidth convention a perturbative quantity uses.
///
/// `TraceFormula` is the directly evaluated first-order correction and is
/// the default: it is self-consistent with the general perturbation scheme
/// and checkable against exact eigenvalues. `ClosedForm` is the published
/// closed-form rate 2 gamma n^2 + r gamma (2n+3), which is twice the trace
/// value; it is kept so results can be reproduced under both conventions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinewidthSource {
    #[default]
    TraceFormula,
    ClosedForm,
}

/// A zeroth-order eigenmode |i><j| of the closed-system Liouvillian.
#[derive(Clone, Copy, Debug)]
pub struct ZerothMode<T: Float> {
    pub i: usize,
    pub j: usize,
    pub lambda: Complex<T>,
}

/// Enumerate the matrix-unit eigenmodes of -i[H, .] for a diagonal H.
pub fn zeroth_order_modes<T: Float>(
    space: FockSpace,
    hamiltonian: &FockOperator<T>,
) -> Result<Vec<ZerothMode<T>>> {
    if hamiltonian.space() != space {
        return Err(Error::DimensionMismatch(
            "Hamiltonian lives on a different space".to_string(),
        ));
    }
    let d = space.dim();
    for i in 0..d {
        for j in 0..d {
            if i != j && hamiltonian.elements()[(i, j)].norm() > T::structure_tol() {
                return Err(Error::NonDiagonalHamiltonian);
            }
        }
    }
    let energy = |i: usize| hamiltonian.elements()[(i, i)].re;
    let mut modes = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            modes.push(ZerothMode {
                i,
                j,
                lambda: Complex::new(T::zero(), -(energy(i) - energy(j))),
            });
        }
    }
    Ok(modes)
}

/// First-order eigenvalue correction of the mode |i><j|:
/// lambda^(1) = tr[(|i><j|)^dag D(|i><j|)], the (i,j) diagonal element of
/// the dissipator in the matrix-unit basis.
pub fn first_order_eigenvalue<T: Float>(
    model: &LindbladModel<T>,
    i: usize,
    j: usize,
) -> Result<Complex<T>> {
    let unit = basis_operator::<T>(model.space(), i, j)?;
    let image = dissipator_rhs(model, &unit);
    Ok(image.elements()[(i, j)])
}

/// Linewidth of the coherence (n+1, n) from the first-order trace formula,
/// evaluated on an enlarged space so the cutoff cannot contaminate it.
/// Equals gamma n^2 + r gamma (2n+3)/2.
pub fn trace_linewidth<T: Float>(n: usize, r: T, gamma: T) -> T {
    let params = VdpParams {
        omega0: T::zero(),
        u: T::one(),
        gamma,
        r,
        n_max: n + 3,
    };
    let model = build_vdp(&params).expect("gamma > 0 and r >= 0 are checked by callers");
    let lambda1 = first_order_eigenvalue(&model, n + 1, n)
        .expect("mode (n+1, n) exists on the enlarged space");
    -lambda1.re
}

/// Closed-form linewidth convention gamma (2 n^2 + r (2n+3)).
pub fn closed_form_linewidth<T: Float>(n: usize, r: T, gamma: T) -> T {
    let nf = T::from_usize(n).unwrap();
    gamma * (T::lit(2.0) * nf * nf + r * (T::lit(2.0) * nf + T::lit(3.0)))
}

/// Transition energy E_{n+1} - E_n = omega0 + u/2 + u n of the Kerr ladder.
pub fn transition_energy<T: Float>(n: usize, omega0: T, u: T) -> T {
    omega0 + u * T::lit(0.5) + u * T::from_usize(n).unwrap()
}

/// Dispatch between the two linewidth conventions.
pub fn linewidth<T: Float>(n: usize, r: T, gamma: T, source: LinewidthSource) -> T {
    match source {
        LinewidthSource::TraceFormula => trace_linewidth(n, r, gamma),
        LinewidthSource::ClosedForm => closed_form_linewidth(n, r, gamma),
    }
}

/// Total golden-rule decay rate out of the pair {|n>, |n+1>}: the sum of
/// pump and two-photon-loss transition rates from both levels, evaluated
/// from explicit matrix elements on a space large enough to hold every
/// final state.
pub fn golden_rule_rate<T: Float>(n: usize, r: T, gamma: T) -> T {
    let space = FockSpace::new(n + 3).expect("n + 3 >= 1");
    let adag = creation::<T>(space);
    let a_op = annihilation::<T>(space);
    let aa = a_op.matmul(&a_op);
    let column_weight = |op: &FockOperator<T>, source: usize| {
        let mut acc = T::zero();
        for m in 0..space.dim() {
            acc += op.elements()[(m, source)].norm_sqr();
        }
        acc
    };
    r * gamma * (column_weight(&adag, n) + column_weight(&adag, n + 1))
        + gamma * (column_weight(&aa, n) + column_weight(&aa, n + 1))
}

/// One eigenvector-correction coefficient: the matrix unit |i><j| it
/// multiplies, as (i, j), and its complex amplitude.
pub type MixEntry<T> = ((usize, usize), Complex<T>);

/// First-order description of the coherence mode (n+1, n): its transition
/// energy, linewidth under both conventions, and the eigenvector mixing
/// coefficients into neighboring coherences, again under both conventions.
#[derive(Clone, Debug)]
pub struct PerturbativeMode<T: Float> {
    pub n: usize,
    pub energy: T,
    pub gamma_trace: T,
    pub gamma_closed: T,
    pub right_mix: Vec<MixEntry<T>>,
    pub left_mix: Vec<MixEntry<T>>,
    pub right_mix_closed: Vec<MixEntry<T>>,
    pub left_mix_closed: Vec<MixEntry<T>>,
}

impl<T: Float> PerturbativeMode<T> {
    pub fn gamma(&self, source: LinewidthSource) -> T {
        match source {
            LinewidthSource::TraceFormula => self.gamma_trace,
            LinewidthSource::ClosedForm => self.gamma_closed,
        }
    }

    /// Perturbative eigenvalue lambda^(0) + lambda^(1) = -Gamma - i E.
    pub fn lambda(&self, source: LinewidthSource) -> Complex<T> {
        Complex::new(-self.gamma(source), -self.energy)
    }

    pub fn mixes(&self, source: LinewidthSource) -> (&[MixEntry<T>], &[MixEntry<T>]) {
        match source {
            LinewidthSource::TraceFormula => (&self.right_mix, &self.left_mix),
            LinewidthSource::ClosedForm => (&self.right_mix_closed, &self.left_mix_closed),
        }
    }
}

/// First-order eigenvector corrections of the mode (n+1, n), computed from
/// the general formula: the coefficient of |i><j| in r^(1) is
/// tr[(|i><j|)^dag D(r^(0))] / (lambda^(0) - lambda^(0)_{ij}), and the left
/// correction uses the adjoint dissipator with conjugated denominators.
/// Everything is evaluated on a space enlarged by four levels so that no
/// matrix element is cut off.
pub fn first_order_eigenvectors<T: Float>(
    params: &VdpParams<T>,
    n: usize,
) -> Result<PerturbativeMode<T>> {
    params.validate()?;
    if params.u == T::zero() {
        return Err(Error::DegeneratePerturbation(
            "u = 0 makes the unperturbed spectrum degenerate".to_string(),
        ));
    }
    let enlarged = VdpParams {
        n_max: n + 4,
        ..*params
    };
    let model = build_vdp(&enlarged)?;
    let space = model.space();
    let modes0 = zeroth_order_modes(space, model.hamiltonian())?;
    let d = space.dim();
    let lambda_of = |i: usize, j: usize| modes0[i * d + j].lambda;
    let lambda_alpha = lambda_of(n + 1, n);

    let unit_alpha = basis_operator::<T>(space, n + 1, n)?;
    let d_right = dissipator_rhs(&model, &unit_alpha);
    let d_left = crate::lindblad::adjoint_dissipator_rhs(&model, &unit_alpha);
    let numer_floor = T::lit(1e-13) * d_right.max_abs().max(d_left.max_abs());

    let mut right_mix = Vec::new();
    let mut left_mix = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if (i, j) == (n + 1, n) {
                continue;
            }
            let gap = lambda_alpha - lambda_of(i, j);
            let right_numer = d_right.elements()[(i, j)];
            if right_numer.norm() > numer_floor {
                if gap.norm() <= T::lit(1e-10) * (lambda_alpha.norm() + params.gamma) {
                    return Err(Error::DegeneratePerturbation(format!(
                        "modes ({}, {}) and ({}, {}) are quasi-degenerate",
                        n + 1,
                        n,
                        i,
                        j
                    )));
                }
                right_mix.push(((i, j), right_numer / gap));
            }
            let left_numer = d_left.elements()[(i, j)];
            if left_numer.norm() > numer_floor {
                if gap.norm() <= T::lit(1e-10) * (lambda_alpha.norm() + params.gamma) {
                    return Err(Error::DegeneratePerturbation(format!(
                        "modes ({}, {}) and ({}, {}) are quasi-degenerate",
                        n + 1,
                        n,
                        i,
                        j
                    )));
                }
                left_mix.push(((i, j), left_numer / gap.conj()));
            }
        }
    }
    right_mix.sort_by_key(|&(ij, _)| ij);
    left_mix.sort_by_key(|&(ij, _)| ij);

    // Published closed-form coefficients; uniformly twice the trace-formula
    // values, mirroring the linewidth conventions.
    let nf = T::from_usize(n).unwrap();
    let iu = Complex::new(T::zero(), T::one());
    let rg_u = params.r * params.gamma / params.u;
    let g_u = params.gamma / params.u;
    let mut right_mix_closed = Vec::new();
    if n >= 2 {
        let coeff = iu * (g_u * nf * ((nf * nf - T::one()).sqrt()));
        right_mix_closed.push(((n - 1, n - 2), coeff));
    }
    right_mix_closed.push((
        (n + 2, n + 1),
        -iu * (T::lit(2.0) * rg_u * ((nf + T::lit(2.0)) * (nf + T::one())).sqrt()),
    ));
    right_mix_closed.sort_by_key(|&(ij, _)| ij);
    let mut left_mix_closed = Vec::new();
    if n >= 1 {
        let coeff = -iu * (T::lit(2.0) * rg_u * (nf * (nf + T::one())).sqrt());
        left_mix_closed.push(((n, n - 1), coeff));
    }
    left_mix_closed.push((
        (n + 3, n + 2),
        iu * (g_u * (nf + T::lit(2.0)) * ((nf + T::one()) * (nf + T::lit(3.0))).sqrt()),
    ));
    left_mix_closed.sort_by_key(|&(ij, _)| ij);

    let lambda1 = first_order_eigenvalue(&model, n + 1, n)?;
    Ok(PerturbativeMode {
        n,
        energy: transition_energy(n, params.omega0, params.u),
        gamma_trace: -lambda1.re,
        gamma_closed: closed_form_linewidth(n, params.r, params.gamma),
        right_mix,
        left_mix,
        right_mix_closed,
        left_mix_closed,
    })
}

/// All perturbative coherence modes that fit the cutoff: eigenvector
/// corrections reference level n+3, so n runs through 0..=n_max-3.
pub fn perturbative_modes<T: Float>(params: &VdpParams<T>) -> Result<Vec<PerturbativeMode<T>>> {
    params.validate()?;
    if params.n_max < 3 {
        return Err(Error::InvalidParams(format!(
            "eigenvector corrections need n_max >= 3, got {}",
            params.n_max
        )));
    }
    (0..=params.n_max - 3)
        .map(|n| first_order_eigenvectors(params, n))
        .collect()
}

/// Lifetime approximation of the spectral function: one Lorentzian per
/// ladder transition, A(omega) = (1/pi) sum_n Gamma_n (n+1)(p_n - p_{n+1})
/// / [(omega - E_n)^2 + Gamma_n^2], truncated at n = n_max - 1. The matrix
/// element |<n+1|a^dag|n>|^2 = n+1 enters analytically, so the cutoff does
/// not distort the weights.
pub fn lifetime_spectral_function<T: Float>(
    params: &VdpParams<T>,
    populations: &[T],
    grid: &OmegaGrid<T>,
    source: LinewidthSource,
) -> Result<Vec<T>> {
    params.validate()?;
    if populations.len() != params.n_max + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} populations for n_max = {}",
            populations.len(),
            params.n_max
        )));
    }
    let terms: Vec<(T, T, T)> = (0..params.n_max)
        .map(|n| {
            let weight = T::from_usize(n + 1).unwrap() * (populations[n] - populations[n + 1]);
            (
                transition_energy(n, params.omega0, params.u),
                linewidth(n, params.r, params.gamma, source),
                weight,
            )
        })
        .collect();
    Ok(grid
        .points()
        .iter()
        .map(|&w| {
            let mut acc = T::zero();
            for &(energy, width, weight) in &terms {
                let detuning = w - energy;
                acc += width * weight / (detuning * detuning + width * width);
            }
            acc / T::PI()
        })
        .collect())
}

/// Poles and Lehmann weights of the perturbative retarded Green's function.
/// With `include_corrections` the eigenoperators are r^(0) + r^(1) and
/// l^(0) + l^(1), which makes the weights complex; without it they reduce to
/// the real lifetime weights (n+1)(p_n - p_{n+1}).
pub fn poles_from_perturbative<T: Float>(
    params: &VdpParams<T>,
    modes: &[PerturbativeMode<T>],
    steady_state: &FockOperator<T>,
    source: LinewidthSource,
    include_corrections: bool,
) -> Result<Vec<PoleData<T>>> {
    params.validate()?;
    let space = params.space();
    if steady_state.space() != space {
        return Err(Error::DimensionMismatch(
            "steady state lives on a different space".to_string(),
        ));
    }
    let a_op = annihilation::<T>(space);
    let adag = creation::<T>(space);
    let commutator = adag.commutator_with(steady_state);

    let mut poles = Vec::with_capacity(modes.len());
    for mode in modes {
        let mut right = basis_operator::<T>(space, mode.n + 1, mode.n)?;
        let mut left = right.clone();
        if include_corrections {
            let (right_mix, left_mix) = mode.mixes(source);
            for &((i, j), coeff) in right_mix {
                let unit = basis_operator::<T>(space, i, j)?;
                right = right.add(&unit.scale(coeff));
            }
            for &((i, j), coeff) in left_mix {
                let unit = basis_operator::<T>(space, i, j)?;
                left = left.add(&unit.scale(coeff));
            }
        }
        let weight = a_op.trace_product(&right) * left.hs_inner(&commutator);
        poles.push(PoleData {
            k: 1,
            lambda: mode.lambda(source),
            weight,
        });
    }
    Ok(poles)
}

/// Beyond-lifetime spectral function: the Lehmann sum evaluated with
/// first-order eigenvalues and eigenvectors and the exact steady state.
/// The complex weights produce non-Lorentzian line shapes, which is what
/// lets this approximation capture spectral negativity.
pub fn beyond_lifetime_spectral_function<T: Float>(
    params: &VdpParams<T>,
    spectrum: &LiouvilleSpectrum<T>,
    grid: &OmegaGrid<T>,
    source: LinewidthSource,
) -> Result<Vec<T>> {
    params.validate()?;
    if spectrum.space() != params.space() {
        return Err(Error::DimensionMismatch(
            "spectrum was computed on a different space".to_string(),
        ));
    }
    let modes = perturbative_modes(params)?;
    let poles = poles_from_perturbative(params, &modes, spectrum.steady_state(), source, true)?;
    let gr = retarded_gf(&poles, grid, T::zero())?;
    Ok(spectral_function(&gr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::kerr_hamiltonian;
    use crate::lindblad::liouvillian_rhs;
    use crate::spectrum::diagonalize_vdp;
    use num_complex::Complex64;

    fn vdp(r: f64, u: f64, n_max: usize) -> VdpParams<f64> {
        VdpParams {
            omega0: 0.0,
            u,
            gamma: 1.0,
            r,
            n_max,
        }
    }

    #[test]
    fn zeroth_modes_carry_hamiltonian_gaps() {
        let space = FockSpace::new(6).unwrap();
        let h = kerr_hamiltonian(space, 0.0, 2.0);
        let modes = zeroth_order_modes(space, &h).unwrap();
        let d = space.dim();
        let get = |i: usize, j: usize| modes[i * d + j].lambda;
        assert_eq!(get(3, 3), Complex64::new(0.0, 0.0));
        assert!((get(2, 1) - Complex64::new(0.0, -3.0)).norm() < 1e-14);
        assert!((get(0, 2) - Complex64::new(0.0, 4.0)).norm() < 1e-14);
    }

    #[test]
    fn zeroth_modes_are_closed_system_eigenvectors() {
        let space = FockSpace::new(5).unwrap();
        let h = kerr_hamiltonian(space, 0.3, 1.7);
        let closed = LindbladModel::new(space, h.clone(), Vec::new()).unwrap();
        for mode in zeroth_order_modes(space, &h).unwrap() {
            let unit = basis_operator::<f64>(space, mode.i, mode.j).unwrap();
            let residual = liouvillian_rhs(&closed, &unit)
                .sub(&unit.scale(mode.lambda))
                .max_abs();
            assert!(residual < 1e-12);
        }
    }

    #[test]
    fn non_diagonal_hamiltonian_is_rejected() {
        let space = FockSpace::new(4).unwrap();
        let mut h = kerr_hamiltonian(space, 0.0, 1.0);
        h.elements_mut()[(0, 1)] = Complex64::new(0.2, 0.0);
        h.elements_mut()[(1, 0)] = Complex64::new(0.2, 0.0);
        assert!(matches!(
            zeroth_order_modes(space, &h),
            Err(Error::NonDiagonalHamiltonian)
        ));
    }

    #[test]
    fn first_order_eigenvalue_is_real_and_matches_the_trace_value() {
        let r = 0.7;
        let model = build_vdp(&vdp(r, 3.0, 12)).unwrap();
        let lambda1 = first_order_eigenvalue(&model, 1, 0).unwrap();
        assert!((lambda1.re - (-1.5 * r)).abs() < 1e-12);
        assert!(lambda1.im.abs() < 1e-12);
        for n in 0..7 {
            let l = first_order_eigenvalue(&model, n + 1, n).unwrap();
            assert!(l.im.abs() < 1e-12, "n={n}: Im lambda^(1) = {}", l.im);
            let expected = -((n as f64).powi(2) + 0.5 * r * (2.0 * n as f64 + 3.0));
            assert!((l.re - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_is_exactly_twice_the_trace_formula() {
        for n in 0..=10 {
            for &r in &[0.0f64, 0.5, 1.0, 6.0] {
                let trace = trace_linewidth(n, r, 1.3);
                let closed = closed_form_linewidth(n, r, 1.3);
                assert!((closed - 2.0 * trace).abs() < 1e-12, "n={n}, r={r}");
            }
        }
    }

    #[test]
    fn golden_rule_rate_equals_the_closed_form() {
        for n in 0..=10 {
            for &r in &[0.0f64, 1.0, 2.5] {
                let gr = golden_rule_rate(n, r, 1.0);
                assert!((gr - closed_form_linewidth(n, r, 1.0)).abs() < 1e-12);
            }
        }
        assert!((golden_rule_rate::<f64>(0, 1.0, 1.0) - 3.0).abs() < 1e-14);
        assert!((golden_rule_rate::<f64>(5, 0.0, 1.0) - 50.0).abs() < 1e-14);
        assert!((closed_form_linewidth::<f64>(0, 6.0, 1.0) - 18.0).abs() < 1e-14);
        assert!((closed_form_linewidth::<f64>(2, 0.0, 1.0) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn transition_energies_follow_the_ladder() {
        assert!((transition_energy::<f64>(1, 0.0, 10.0) - 15.0).abs() < 1e-14);
        assert!((transition_energy::<f64>(0, 0.4, 2.0) - 1.4).abs() < 1e-14);
    }

    #[test]
    fn eigenvector_corrections_have_the_expected_structure() {
        let params = vdp(0.8, 3.0, 12);
        let mode = first_order_eigenvectors(&params, 2).unwrap();
        let right_keys: Vec<_> = mode.right_mix.iter().map(|e| e.0).collect();
        let left_keys: Vec<_> = mode.left_mix.iter().map(|e| e.0).collect();
        assert_eq!(right_keys, vec![(1, 0), (4, 3)]);
        assert_eq!(left_keys, vec![(2, 1), (5, 4)]);

        // Coefficients are purely imaginary: real numerators over +-iU gaps.
        for entry in mode.right_mix.iter().chain(&mode.left_mix) {
            assert!(entry.1.re.abs() < 1e-13);
        }

        let rg_u = 0.8 / 3.0;
        let g_u = 1.0 / 3.0;
        let expect = |ij: (usize, usize), mix: &[((usize, usize), Complex64)]| {
            mix.iter().find(|e| e.0 == ij).unwrap().1
        };
        let up = expect((4, 3), &mode.right_mix);
        assert!((up - Complex64::new(0.0, -rg_u * 12.0f64.sqrt())).norm() < 1e-12);
        let down = expect((1, 0), &mode.right_mix);
        assert!((down - Complex64::new(0.0, 0.5 * g_u * 2.0 * 3.0f64.sqrt())).norm() < 1e-12);
        let l_down = expect((2, 1), &mode.left_mix);
        assert!((l_down - Complex64::new(0.0, -rg_u * 6.0f64.sqrt())).norm() < 1e-12);
        let l_up = expect((5, 4), &mode.left_mix);
        assert!((l_up - Complex64::new(0.0, 0.5 * g_u * 4.0 * 15.0f64.sqrt())).norm() < 1e-12);
    }

    #[test]
    fn closed_form_mixing_is_twice_the_trace_mixing() {
        let params = vdp(1.2, 5.0, 12);
        for n in 0..=4 {
            let mode = first_order_eigenvectors(&params, n).unwrap();
            assert_eq!(mode.right_mix.len(), mode.right_mix_closed.len());
            assert_eq!(mode.left_mix.len(), mode.left_mix_closed.len());
            for (trace, closed) in mode.right_mix.iter().zip(&mode.right_mix_closed) {
                assert_eq!(trace.0, closed.0);
                assert!((closed.1 - trace.1 * 2.0).norm() < 1e-12);
            }
            for (trace, closed) in mode.left_mix.iter().zip(&mode.left_mix_closed) {
                assert_eq!(trace.0, closed.0);
                assert!((closed.1 - trace.1 * 2.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lowest_mode_mixes_upward_only() {
        let mode = first_order_eigenvectors(&vdp(0.8, 3.0, 12), 0).unwrap();
        let right_keys: Vec<_> = mode.right_mix.iter().map(|e| e.0).collect();
        let left_keys: Vec<_> = mode.left_mix.iter().map(|e| e.0).collect();
        assert_eq!(right_keys, vec![(2, 1)]);
        assert_eq!(left_keys, vec![(3, 2)]);
    }

    #[test]
    fn zero_interaction_is_rejected() {
        assert!(matches!(
            first_order_eigenvectors(&vdp(0.8, 0.0, 12), 1),
            Err(Error::DegeneratePerturbation(_))
        ));
    }

    #[test]
    fn perturbative_eigenvalues_match_exact_ones_at_weak_dissipation() {
        let params = vdp(0.5, 1000.0, 12);
        let spec = diagonalize_vdp(&params).unwrap();
        let exact: Vec<Complex64> = spec.modes_with_charge(1).map(|m| m.lambda).collect();
        for n in 0..6 {
            let lambda_p = Complex64::new(
                -trace_linewidth(n, params.r, params.gamma),
                -transition_energy(n, params.omega0, params.u),
            );
            let nearest = exact
                .iter()
                .min_by(|a, b| {
                    (*a - lambda_p)
                        .norm()
                        .partial_cmp(&(*b - lambda_p).norm())
                        .unwrap()
                })
                .unwrap();
            assert!(
                (nearest - lambda_p).norm() < 1e-4 * nearest.norm(),
                "n={n}: perturbative {lambda_p} vs exact {nearest}"
            );
            // The exact damping rate follows the trace convention; the
            // closed form overshoots it by a factor near two.
            let exact_width = -nearest.re;
            let trace = trace_linewidth(n, params.r, params.gamma);
            let closed = closed_form_linewidth(n, params.r, params.gamma);
            assert!((exact_width - trace).abs() < 0.02 * trace);
            assert!((closed / exact_width - 2.0).abs() < 0.05);
        }
    }

    #[test]
    fn lifetime_form_reduces_to_one_lorentzian_for_a_pure_ground_state() {
        let params = vdp(1.0, 4.0, 8);
        let mut populations = vec![0.0; 9];
        populations[0] = 1.0;
        let e0 = transition_energy(0, 0.0, 4.0);
        let grid = OmegaGrid::new(vec![e0 - 1.0, e0, e0 + 1.0, e0 + 2.0]).unwrap();
        let a =
            lifetime_spectral_function(&params, &populations, &grid, LinewidthSource::TraceFormula)
                .unwrap();
        let width = trace_linewidth(0, 1.0, 1.0);
        assert!((a[1] - 1.0 / (std::f64::consts::PI * width)).abs() < 1e-12);
        let lorentz = |w: f64| width / (std::f64::consts::PI * (w * w + width * width));
        assert!((a[0] - lorentz(-1.0)).abs() < 1e-12);
        assert!((a[3] - lorentz(2.0)).abs() < 1e-12);
    }

    #[test]
    fn uncorrected_weights_are_real_and_match_population_differences() {
        let params = vdp(2.0, 5.0, 10);
        let spec = diagonalize_vdp(&params).unwrap();
        let modes = perturbative_modes(&params).unwrap();
        let poles = poles_from_perturbative(
            &params,
            &modes,
            spec.steady_state(),
            LinewidthSource::TraceFormula,
            false,
        )
        .unwrap();
        let populations = spec.populations();
        for (mode, pole) in modes.iter().zip(&poles) {
            assert!(pole.weight.im.abs() < 1e-12);
            let expected = (mode.n as f64 + 1.0) * (populations[mode.n] - populations[mode.n + 1]);
            assert!((pole.weight.re - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn corrected_weights_become_complex() {
        let params = vdp(2.0, 5.0, 10);
        let spec = diagonalize_vdp(&params).unwrap();
        let modes = perturbative_modes(&params).unwrap();
        let poles = poles_from_perturbative(
            &params,
            &modes,
            spec.steady_state(),
            LinewidthSource::TraceFormula,
            true,
        )
        .unwrap();
        let max_im = poles.iter().map(|p| p.weight.im.abs()).fold(0.0, f64::max);
        assert!(max_im > 1e-6, "corrections left every weight real");
    }

    #[test]
    fn dropping_corrections_reproduces_the_lifetime_form() {
        let params = vdp(2.0, 5.0, 10);
        let spec = diagonalize_vdp(&params).unwrap();
        let modes = perturbative_modes(&params).unwrap();
        let poles = poles_from_perturbative(
            &params,
            &modes,
            spec.steady_state(),
            LinewidthSource::TraceFormula,
            false,
        )
        .unwrap();
        let grid = OmegaGrid::linspace(-5.0, 60.0, 301).unwrap();
        let from_poles = spectral_function(&retarded_gf(&poles, &grid, 0.0).unwrap());

        // Same truncation, summed directly from the closed formula.
        let populations = spec.populations();
        for (idx, &w) in grid.points().iter().enumerate() {
            let mut direct = 0.0;
            for n in 0..=params.n_max - 3 {
                let width = trace_linewidth(n, params.r, params.gamma);
                let energy = transition_energy(n, params.omega0, params.u);
                let weight = (n as f64 + 1.0) * (populations[n] - populations[n + 1]);
                direct +=
                    width * weight / ((w - energy).powi(2) + width * width) / std::f64::consts::PI;
            }
            assert!(
                (from_poles[idx] - direct).abs() < 1e-12,
                "omega = {w}: {} vs {direct}",
                from_poles[idx]
            );
        }
    }

    #[test]
    fn beyond_lifetime_collapses_onto_lifetime_at_weak_dissipation() {
        let params = vdp(0.5, 100.0, 12);
        let spec = diagonalize_vdp(&params).unwrap();
        let grid = OmegaGrid::linspace(-60.0, 1300.0, 2001).unwrap();
        let beyond =
            beyond_lifetime_spectral_function(&params, &spec, &grid, LinewidthSource::TraceFormula)
                .unwrap();
        let lifetime = lifetime_spectral_function(
            &params,
            &spec.populations(),
            &grid,
            LinewidthSource::TraceFormula,
        )
        .unwrap();
        let scale = lifetime.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        // The lifetime sum keeps transitions up to n_max - 1 while the
        // corrected sum stops at n_max - 3; compare below those extra peaks.
        let cut = transition_energy(params.n_max - 3, 0.0, params.u) - 3.0 * params.u;
        let mut worst = 0.0f64;
        for (i, &w) in grid.points().iter().enumerate() {
            if w < cut {
                worst = worst.max((beyond[i] - lifetime[i]).abs());
            }
        }
        assert!(
            worst < 0.03 * scale,
            "worst deviation {worst} vs scale {scale}"
        );
    }
}
