//! Steady-state correlation functions and single-particle Green's functions
//! assembled from the eigenmode set.
//!
//! Every spectral quantity here is an explicit sum over k=1 eigenmodes: the
//! retarded Green's function is a sum of simple poles at omega = -Im lambda
//! with half-widths -Re lambda, and the greater/lesser functions share the
//! same poles with their own coefficient sets. The spectral function obtained
//! from -Im G^R / pi and from (S_> - S_<)/(2 pi) agree identically, which is
//! tracked as a residual rather than assumed.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{annihilation, creation, FockOperator};
use crate::lindblad::VdpParams;
use crate::scalar::Float;
use crate::spectrum::LiouvilleSpectrum;

/// Strictly increasing frequency grid.
#[derive(Clone, Debug)]
pub struct OmegaGrid<T: Float> {
    points: Vec<T>,
}

impl<T: Float> OmegaGrid<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(
                "frequency grid needs at least two points".to_string(),
            ));
        }
        for w in &points {
            if !w.is_finite() {
                return Err(Error::InvalidGrid("non-finite grid point".to_string()));
            }
        }
        for pair in points.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidGrid(
                    "grid points must increase strictly".to_string(),
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn linspace(min: T, max: T, count: usize) -> Result<Self> {
        if count < 2 || min.is_nan() || max.is_nan() || min >= max {
            return Err(Error::InvalidGrid(format!(
                "cannot span [{min}, {max}] with {count} points"
            )));
        }
        let step = (max - min) / T::from_usize(count - 1).unwrap();
        let points = (0..count)
            .map(|i| {
                if i == count - 1 {
                    max
                } else {
                    min + step * T::from_usize(i).unwrap()
                }
            })
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> T {
        self.points[0]
    }

    pub fn max(&self) -> T {
        *self.points.last().unwrap()
    }

    pub fn max_spacing(&self) -> T {
        self.points
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Default grid for a parameter set: the Kerr ladder spans energies up to
/// roughly u * n_max, padded by several dissipative widths on both sides.
pub fn default_omega_grid<T: Float>(params: &VdpParams<T>) -> OmegaGrid<T> {
    default_omega_grid_sized(params, 4001).expect("4001 points and a positive pad always span")
}

/// Same frequency window as [`default_omega_grid`] with a chosen resolution.
pub fn default_omega_grid_sized<T: Float>(
    params: &VdpParams<T>,
    points: usize,
) -> Result<OmegaGrid<T>> {
    let span = params.u.abs() * T::from_usize(params.n_max).unwrap();
    let pad = T::lit(10.0) * params.gamma * (T::one() + T::lit(3.0) * params.r);
    let lo = params.omega0 - (T::lit(0.5) * span + pad);
    let hi = params.omega0 + T::lit(1.5) * span + pad;
    OmegaGrid::linspace(lo, hi, points)
}

/// Whether a two-time correlator keeps or drops the disconnected
/// steady-state product <A><B>.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectedness {
    Full,
    Connected,
}

/// Two-time steady-state correlator <A(t) B(0)> on t >= 0, evaluated as
/// sum_a exp(lambda_a t) tr(A r_a) tr(l_a^dag B rho_s). The steady-mode term
/// is exactly <A><B>, so the connected variant just omits it.
pub fn correlator<T: Float>(
    spectrum: &LiouvilleSpectrum<T>,
    op_a: &FockOperator<T>,
    op_b: &FockOperator<T>,
    times: &[T],
    connectedness: Connectedness,
) -> Result<Vec<Complex<T>>> {
    if op_a.space() != spectrum.space() || op_b.space() != spectrum.space() {
        return Err(Error::DimensionMismatch(
            "correlator operators live on a different space".to_string(),
        ));
    }
    if times.iter().any(|t| !t.is_finite() || *t < T::zero()) {
        return Err(Error::InvalidTimeGrid);
    }
    let b_rho = op_b.matmul(spectrum.steady_state());
    let terms: Vec<(Complex<T>, Complex<T>)> = spectrum
        .modes()
        .iter()
        .enumerate()
        .filter(|(i, _)| connectedness == Connectedness::Full || *i != spectrum.steady_index())
        .map(|(_, mode)| {
            let amp = op_a.trace_product(&mode.right) * mode.left.hs_inner(&b_rho);
            (mode.lambda, amp)
        })
        .collect();
    Ok(times
        .iter()
        .map(|&t| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &(lambda, amp) in &terms {
                if amp.norm() == T::zero() {
                    continue;
                }
                acc += amp * (lambda * Complex::new(t, T::zero())).exp();
            }
            acc
        })
        .collect())
}

/// One pole of the retarded Green's function: a k=1 eigenvalue and its
/// Lehmann weight tr(a r_a) tr(l_a^dag [a^dag, rho_s]).
#[derive(Clone, Copy, Debug)]
pub struct PoleData<T: Float> {
    pub k: i64,
    pub lambda: Complex<T>,
    pub weight: Complex<T>,
}

/// Per-mode ingredients of the greater/lesser functions.
struct KeldyshCoefficient<T: Float> {
    lambda: Complex<T>,
    greater: Complex<T>,
    lesser: Complex<T>,
}

/// Verify the charge selection rule and collect the k=1 mode coefficients.
fn k1_coefficients<T: Float>(
    spectrum: &LiouvilleSpectrum<T>,
) -> Result<Vec<KeldyshCoefficient<T>>> {
    let a_op = annihilation::<T>(spectrum.space());
    let adag = creation::<T>(spectrum.space());
    let rho = spectrum.steady_state();
    let adag_rho = adag.matmul(rho);
    let rho_adag = rho.matmul(&adag);

    let mut coefficients = Vec::new();
    for mode in spectrum.modes() {
        let a_trace = a_op.trace_product(&mode.right);
        if mode.k != 1 {
            if a_trace.norm() > T::structure_tol() {
                return Err(Error::SelectionRuleViolation {
                    k: mode.k,
                    magnitude: a_trace.norm().to_f64().unwrap_or(f64::NAN),
                });
            }
            continue;
        }
        coefficients.push(KeldyshCoefficient {
            lambda: mode.lambda,
            greater: a_trace * mode.left.hs_inner(&adag_rho),
            lesser: a_trace * mode.left.hs_inner(&rho_adag),
        });
    }
    Ok(coefficients)
}

fn check_eta<T: Float>(eta: T) -> Result<()> {
    if !eta.is_finite() || eta < T::zero() {
        return Err(Error::InvalidParams(format!(
            "linewidth floor must be finite and nonnegative, got {eta}"
        )));
    }
    Ok(())
}

/// Lehmann poles and weights of the retarded Green's function. The weights
/// are differences of the greater and lesser coefficients, so the three
/// spectral routes share one pole set.
pub fn pole_weights<T: Float>(spectrum: &LiouvilleSpectrum<T>) -> Result<Vec<PoleData<T>>> {
    Ok(k1_coefficients(spectrum)?
        .iter()
        .map(|c| PoleData {
            k: 1,
            lambda: c.lambda,
            weight: c.greater - c.lesser,
        })
        .collect())
}

/// Exact frequency-integrated weight; equals one when the mode set is
/// complete, because sum_a w_a = tr([a, a^dag] rho_s) = tr(rho_s).
pub fn sum_rule<T: Float>(poles: &[PoleData<T>]) -> Complex<T> {
    poles
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, p| acc + p.weight)
}

/// Retarded Green's function data on a grid:
/// G^R(omega) = sum_a w_a / (omega + Im lambda_a - i Re lambda_a).
/// A positive `eta` widens every pole by shifting lambda -> lambda - eta; it
/// is a plotting aid for the gamma -> 0 regime and must stay at zero in
/// quantitative work.
pub fn retarded_gf<T: Float>(
    poles: &[PoleData<T>],
    grid: &OmegaGrid<T>,
    eta: T,
) -> Result<Vec<Complex<T>>> {
    check_eta(eta)?;
    let one = Complex::new(T::one(), T::zero());
    Ok(grid
        .points()
        .iter()
        .map(|&w| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for p in poles {
                let denom = Complex::new(w + p.lambda.im, -(p.lambda.re - eta));
                acc += p.weight * (one / denom);
            }
            acc
        })
        .collect())
}

/// Spectral function A(omega) = -Im G^R(omega) / pi.
pub fn spectral_function<T: Float>(gr: &[Complex<T>]) -> Vec<T> {
    gr.iter().map(|g| -g.im / T::PI()).collect()
}

/// Greater/lesser functions and the (purely imaginary) Keldysh component,
/// stored as Im G^K = -(S_> + S_<).
#[derive(Clone, Debug)]
pub struct KeldyshData<T: Float> {
    pub s_greater: Vec<T>,
    pub s_lesser: Vec<T>,
    pub gk_im: Vec<T>,
}

/// Evaluate S_>(omega) and S_<(omega) as 2 Re sum_a c_a / (-lambda_a
/// - i omega) over the k=1 modes.
pub fn keldysh_gf<T: Float>(
    spectrum: &LiouvilleSpectrum<T>,
    grid: &OmegaGrid<T>,
    eta: T,
) -> Result<KeldyshData<T>> {
    check_eta(eta)?;
    let coefficients = k1_coefficients(spectrum)?;
    let mut s_greater = Vec::with_capacity(grid.len());
    let mut s_lesser = Vec::with_capacity(grid.len());
    let mut gk_im = Vec::with_capacity(grid.len());
    let one = Complex::new(T::one(), T::zero());
    for &w in grid.points() {
        let mut sg = T::zero();
        let mut sl = T::zero();
        for c in &coefficients {
            let denom = Complex::new(eta - c.lambda.re, -(c.lambda.im + w));
            let kernel = one / denom;
            sg += T::lit(2.0) * (c.greater * kernel).re;
            sl += T::lit(2.0) * (c.lesser * kernel).re;
        }
        s_greater.push(sg);
        s_lesser.push(sl);
        gk_im.push(-(sg + sl));
    }
    Ok(KeldyshData {
        s_greater,
        s_lesser,
        gk_im,
    })
}

/// Spectral function along the Keldysh route, (S_> - S_<) / (2 pi).
pub fn spectral_from_keldysh<T: Float>(keldysh: &KeldyshData<T>) -> Vec<T> {
    keldysh
        .s_greater
        .iter()
        .zip(&keldysh.s_lesser)
        .map(|(&sg, &sl)| (sg - sl) / (T::lit(2.0) * T::PI()))
        .collect()
}

/// Pointwise effective temperature from the fluctuation-dissipation ratio
/// X(omega) = -Im G^K / (2 pi A). Entries are masked (None) where the
/// spectral weight is negligible or |X| <= 1, where no temperature solves
/// the defining relation X = coth(omega / 2 T).
pub fn effective_temperature<T: Float>(
    grid: &OmegaGrid<T>,
    a: &[T],
    gk_im: &[T],
) -> Result<Vec<Option<T>>> {
    if a.len() != grid.len() || gk_im.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "effective temperature needs matching lengths, got {} / {} on a {}-point grid",
            a.len(),
            gk_im.len(),
            grid.len()
        )));
    }
    let a_scale = a
        .iter()
        .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m });
    let floor = T::lit(1e-6) * a_scale;
    Ok(grid
        .points()
        .iter()
        .zip(a.iter().zip(gk_im))
        .map(|(&w, (&av, &gk))| {
            if av.abs() < floor {
                return None;
            }
            let x = -gk / (T::lit(2.0) * T::PI() * av);
            if x.abs() <= T::one() {
                return None;
            }
            Some(w / (T::lit(2.0) * (T::one() / x).atanh()))
        })
        .collect())
}

/// Trapezoidal integral of sampled values over the grid.
pub fn integrate_grid<T: Float>(grid: &OmegaGrid<T>, values: &[T]) -> Result<T> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values on a {}-point grid",
            values.len(),
            grid.len()
        )));
    }
    let pts = grid.points();
    let mut acc = T::zero();
    for i in 0..pts.len() - 1 {
        acc += (values[i] + values[i + 1]) * (pts[i + 1] - pts[i]) * T::lit(0.5);
    }
    Ok(acc)
}

/// Closed-form integral of the spectral function over [lo, hi]: each pole
/// contributes an arctangent from Re w and a logarithm from Im w.
pub fn spectral_area<T: Float>(poles: &[PoleData<T>], lo: T, hi: T, eta: T) -> Result<T> {
    check_eta(eta)?;
    let antiderivative = |w: T| {
        let mut acc = T::zero();
        for p in poles {
            let x = w + p.lambda.im;
            let half_width = eta - p.lambda.re;
            acc += p.weight.re / T::PI() * (x / half_width).atan()
                - p.weight.im / (T::lit(2.0) * T::PI()) * (x * x + half_width * half_width).ln();
        }
        acc
    };
    Ok(antiderivative(hi) - antiderivative(lo))
}

/// Occupation recovered from S_<: the trapezoidal integral over the grid
/// plus the closed-form contribution of the Lorentzian tails outside it.
#[derive(Clone, Copy, Debug)]
pub struct OccupationSplit<T: Float> {
    pub grid_part: T,
    pub tail: T,
    pub total: T,
}

/// Integrate S_<(omega) / (2 pi). The full-axis integral is known in closed
/// form (sum of Re c_a^<), so the tail beyond [grid.min, grid.max] is that
/// total minus the closed-form integral over the grid range; the reported
/// occupation is the numerically integrated grid part plus this tail.
pub fn occupation_from_s_lesser<T: Float>(
    spectrum: &LiouvilleSpectrum<T>,
    grid: &OmegaGrid<T>,
    eta: T,
) -> Result<OccupationSplit<T>> {
    check_eta(eta)?;
    let coefficients = k1_coefficients(spectrum)?;
    let keldysh = keldysh_gf(spectrum, grid, eta)?;
    let grid_part = integrate_grid(grid, &keldysh.s_lesser)? / (T::lit(2.0) * T::PI());

    // Antiderivative of S_<(omega) / (2 pi) for one pole, with
    // y = -(omega + Im lambda) and a = eta - Re lambda:
    // -(Re c / pi) atan(y / a) - (Im c / 2 pi) ln(a^2 + y^2).
    let range_closed = |w: T| {
        let mut acc = T::zero();
        for c in &coefficients {
            let y = -(w + c.lambda.im);
            let a = eta - c.lambda.re;
            acc += -(c.lesser.re / T::PI()) * (y / a).atan()
                - c.lesser.im / (T::lit(2.0) * T::PI()) * (a * a + y * y).ln();
        }
        acc
    };
    let full_axis = coefficients
        .iter()
        .fold(T::zero(), |acc, c| acc + c.lesser.re);
    let tail = full_axis - (range_closed(grid.max()) - range_closed(grid.min()));
    Ok(OccupationSplit {
        grid_part,
        tail,
        total: grid_part + tail,
    })
}

/// Local maxima of sampled values, returned as (omega, value) pairs in
/// ascending frequency order.
pub fn find_peaks<T: Float>(grid: &OmegaGrid<T>, values: &[T]) -> Vec<(T, T)> {
    let mut peaks = Vec::new();
    if values.len() != grid.len() {
        return peaks;
    }
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] > values[i + 1] {
            peaks.push((grid.points()[i], values[i]));
        }
    }
    peaks
}

/// Everything the spectrum pipeline produces on one grid.
#[derive(Clone, Debug)]
pub struct SpectralResult<T: Float> {
    pub grid: OmegaGrid<T>,
    pub gr: Vec<Complex<T>>,
    pub a: Vec<T>,
    pub gk_im: Vec<T>,
    pub t_eff: Vec<Option<T>>,
    pub poles: Vec<PoleData<T>>,
    pub sum_rule: Complex<T>,
    pub area_grid: T,
    pub area_closed: T,
    pub occupation: OccupationSplit<T>,
    /// Worst pointwise gap between -Im G^R / pi and (S_> - S_<) / (2 pi).
    pub identity_residual: T,
}

/// Assemble the retarded and Keldysh functions, the spectral function, the
/// pointwise effective temperature, and the integral diagnostics.
pub fn spectral_result<T: Float>(
    spectrum: &LiouvilleSpectrum<T>,
    grid: &OmegaGrid<T>,
    eta: T,
) -> Result<SpectralResult<T>> {
    let poles = pole_weights(spectrum)?;
    let gr = retarded_gf(&poles, grid, eta)?;
    let a = spectral_function(&gr);
    let keldysh = keldysh_gf(spectrum, grid, eta)?;
    let from_keldysh = spectral_from_keldysh(&keldysh);
    let identity_residual = a
        .iter()
        .zip(&from_keldysh)
        .map(|(&x, &y)| (x - y).abs())
        .fold(T::zero(), |m, v| if v > m { v } else { m });
    let t_eff = effective_temperature(grid, &a, &keldysh.gk_im)?;
    let area_grid = integrate_grid(grid, &a)?;
    let area_closed = spectral_area(&poles, grid.min(), grid.max(), eta)?;
    let occupation = occupation_from_s_lesser(spectrum, grid, eta)?;
    let total_weight = sum_rule(&poles);
    Ok(SpectralResult {
        grid: grid.clone(),
        gr,
        a,
        gk_im: keldysh.gk_im,
        t_eff,
        poles,
        sum_rule: total_weight,
        area_grid,
        area_closed,
        occupation,
        identity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::number;
    use crate::lindblad::build_vdp;
    use crate::ode::propagate_oracle;
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
    fn grid_construction_rejects_bad_input() {
        assert!(OmegaGrid::new(vec![0.0]).is_err());
        assert!(OmegaGrid::new(vec![0.0, 0.0]).is_err());
        assert!(OmegaGrid::new(vec![1.0, 0.0]).is_err());
        assert!(OmegaGrid::new(vec![0.0, f64::NAN]).is_err());
        assert!(OmegaGrid::<f64>::linspace(1.0, 1.0, 5).is_err());
        let g = OmegaGrid::linspace(-2.0, 6.0, 5).unwrap();
        assert_eq!(g.points(), &[-2.0, 0.0, 2.0, 4.0, 6.0]);
        assert_eq!(g.max_spacing(), 2.0);
    }

    #[test]
    fn default_grid_covers_the_kerr_ladder() {
        let params = vdp(2.0, 10.0, 15);
        let grid = default_omega_grid(&params);
        assert_eq!(grid.len(), 4001);
        assert!(grid.min() < -70.0);
        assert!(grid.max() > 10.0 * 14.0 + 10.0);
        assert!(grid.max() >= 1.5 * 150.0);
    }

    #[test]
    fn pole_count_matches_the_k1_sector() {
        let spec = diagonalize_vdp(&vdp(2.0, 5.0, 12)).unwrap();
        let poles = pole_weights(&spec).unwrap();
        assert_eq!(poles.len(), 12);
        assert!(poles.iter().all(|p| p.k == 1));
        assert!(poles.iter().all(|p| p.lambda.re < 0.0));
    }

    #[test]
    fn annihilator_traces_vanish_outside_the_k1_sector() {
        let spec = diagonalize_vdp(&vdp(2.0, 5.0, 10)).unwrap();
        let a_op = annihilation::<f64>(spec.space());
        for k in [0i64, 2] {
            for mode in spec.modes_with_charge(k) {
                let trace = a_op.trace_product(&mode.right);
                assert!(
                    trace.norm() < 1e-12,
                    "k={k} mode carries annihilator trace {trace}"
                );
            }
        }
    }

    #[test]
    fn weak_damping_weights_reduce_to_population_differences() {
        let params: VdpParams<f64> = VdpParams {
            omega0: 0.0,
            u: 1.0,
            gamma: 1e-6,
            r: 0.5,
            n_max: 8,
        };
        let spec = diagonalize_vdp(&params).unwrap();
        let poles = pole_weights(&spec).unwrap();
        let oracle = crate::analysis::classical_steady_state(8, 0.5).unwrap();
        let p = oracle.populations();
        for pole in &poles {
            // Ladder position from the Kerr gap E_{n+1} - E_n = u/2 + u n.
            let n = (-pole.lambda.im / params.u - 0.5).round() as usize;
            let expected = (n as f64 + 1.0) * (p[n] - p[n + 1]);
            assert!(
                (pole.weight.re - expected).abs() < 1e-5,
                "n={n}: weight {} vs population difference {expected}",
                pole.weight.re
            );
            assert!(pole.weight.im.abs() < 1e-5);
        }
    }

    #[test]
    fn weak_damping_correlator_reduces_to_the_closed_system_sum() {
        let params: VdpParams<f64> = VdpParams {
            omega0: 0.0,
            u: 1.0,
            gamma: 1e-6,
            r: 0.5,
            n_max: 8,
        };
        let spec = diagonalize_vdp(&params).unwrap();
        let a_op = annihilation::<f64>(spec.space());
        let adag = creation::<f64>(spec.space());
        let times = [0.5, 2.0];
        let values = correlator(&spec, &a_op, &adag, &times, Connectedness::Full).unwrap();
        let p = spec.populations();
        for (value, &t) in values.iter().zip(&times) {
            let mut closed = Complex64::new(0.0, 0.0);
            for (n, &pn) in p.iter().enumerate().take(8) {
                let gap = params.u / 2.0 + params.u * n as f64;
                closed += Complex64::new(0.0, -gap * t).exp() * ((n as f64 + 1.0) * pn);
            }
            assert!(
                (value - closed).norm() < 1e-4,
                "t={t}: {value} vs closed-system {closed}"
            );
        }
    }

    #[test]
    fn weight_sum_equals_truncated_commutator_average() {
        // With a finite basis the completeness relation gives
        // Σ_α w_α = tr([â,â†]ρ_s) exactly, and the truncated commutator has
        // the diagonal (1,...,1, -n_max), so the sum misses unity by exactly
        // (n_max+1)·p_top. That identity holds to machine precision.
        let spec = diagonalize_vdp(&vdp(2.0, 5.0, 12)).unwrap();
        let total = sum_rule(&pole_weights(&spec).unwrap());
        let p_top = spec.populations()[12];
        let expected = 1.0 - 13.0 * p_top;
        assert!((total.re - expected).abs() < 1e-12);
        assert!(total.im.abs() < 1e-12);
    }

    #[test]
    fn weight_sum_converges_to_one_with_cutoff() {
        let spec = diagonalize_vdp(&vdp(2.0, 5.0, 18)).unwrap();
        let total = sum_rule(&pole_weights(&spec).unwrap());
        assert!((total - Complex64::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn retarded_gf_decays_as_one_over_omega() {
        let spec = diagonalize_vdp(&vdp(2.0, 5.0, 12)).unwrap();
        let poles = pole_weights(&spec).unwrap();
        let grid = OmegaGrid::new(vec![1e8, 2e8]).unwrap();
        let gr = retarded_gf(&poles, &grid, 0.0).unwrap();
        assert!((gr[0] * Complex64::new(1e8, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn spectral_routes_agree_pointwise() {
        let spec = diagonalize_vdp(&vdp(2.0, 5.0, 12)).unwrap();
        let grid = default_omega_grid(&vdp(2.0, 5.0, 12));
        let result = spectral_result(&spec, &grid, 0.0).unwrap();
        let a_max = result.a.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(result.identity_residual < 1e-12 * a_max.max(1.0));
    }

    #[test]
    fn keldysh_component_is_nonpositive() {
        let spec = diagonalize_vdp(&vdp(2.0, 5.0, 12)).unwrap();
        let grid = default_omega_grid(&vdp(2.0, 5.0, 12));
        let keldysh = keldysh_gf(&spec, &grid, 0.0).unwrap();
        for &gk in &keldysh.gk_im {
            assert!(gk <= 1e-12);
        }
    }

    #[test]
    fn occupation_from_lesser_matches_populations() {
        let params = vdp(2.0, 5.0, 12);
        let spec = diagonalize_vdp(&params).unwrap();
        let grid = default_omega_grid(&params);
        let occupation = occupation_from_s_lesser(&spec, &grid, 0.0).unwrap();
        let expected: f64 = spec
            .populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum();
        assert!(
            (occupation.total - expected).abs() < 1e-8 * expected,
            "occupation {} vs <n> {}",
            occupation.total,
            expected
        );
        // The tail carries real weight; quadrature alone must not be trusted.
        assert!(occupation.tail.abs() > 0.0);
    }

    #[test]
    fn correlator_matches_direct_propagation() {
        let params = vdp(2.0, 5.0, 8);
        let spec = diagonalize_vdp(&params).unwrap();
        let model = build_vdp(&params).unwrap();
        let a_op = annihilation::<f64>(spec.space());
        let adag = creation::<f64>(spec.space());
        let times = [0.0, 0.3, 1.0];

        let lehmann = correlator(&spec, &a_op, &adag, &times, Connectedness::Full).unwrap();

        let x0 = adag.matmul(spec.steady_state());
        let evolved = propagate_oracle(&model, &x0, &times, 1e-11).unwrap();
        for (i, state) in evolved.iter().enumerate() {
            let direct = a_op.trace_product(state);
            assert!(
                (lehmann[i] - direct).norm() < 1e-7,
                "t={}: lehmann {} vs direct {}",
                times[i],
                lehmann[i],
                direct
            );
        }
    }

    #[test]
    fn connected_correlator_drops_the_steady_product() {
        let params = vdp(2.0, 5.0, 10);
        let spec = diagonalize_vdp(&params).unwrap();
        let n_op = number::<f64>(spec.space());
        let times = [0.0, 0.7, 30.0];
        let full = correlator(&spec, &n_op, &n_op, &times, Connectedness::Full).unwrap();
        let connected = correlator(&spec, &n_op, &n_op, &times, Connectedness::Connected).unwrap();
        let mean_n = n_op.trace_product(spec.steady_state());
        for i in 0..times.len() {
            let expected = full[i] - mean_n * mean_n;
            assert!((connected[i] - expected).norm() < 1e-10);
        }
        // At long times the connected part dies out.
        assert!(connected[2].norm() < 1e-8);
    }

    #[test]
    fn correlator_rejects_negative_times() {
        let spec = diagonalize_vdp(&vdp(1.0, 2.0, 5)).unwrap();
        let n_op = number::<f64>(spec.space());
        let err = correlator(&spec, &n_op, &n_op, &[-0.5], Connectedness::Full);
        assert!(matches!(err, Err(Error::InvalidTimeGrid)));
    }

    #[test]
    fn effective_temperature_masks_gaps_and_weak_weight() {
        let params = vdp(2.0, 5.0, 12);
        let spec = diagonalize_vdp(&params).unwrap();
        let grid = default_omega_grid(&params);
        let result = spectral_result(&spec, &grid, 0.0).unwrap();
        let some_count = result.t_eff.iter().filter(|t| t.is_some()).count();
        assert!(some_count > 0, "no temperature points survived masking");
        let a_max = result.a.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for i in 0..grid.len() {
            if result.t_eff[i].is_some() {
                let x = -result.gk_im[i] / (2.0 * std::f64::consts::PI * result.a[i]);
                assert!(x.abs() > 1.0);
                assert!(result.a[i].abs() >= 1e-6 * a_max);
            }
        }
    }

    #[test]
    fn equilibrium_input_inverts_to_a_constant_temperature() {
        // X(omega) = coth(omega/2T0) is the fluctuation-dissipation locus;
        // the inversion must return T0 at every frequency, on both signs.
        let t0 = 1.0;
        let grid = OmegaGrid::linspace(-3.0, 3.0, 400).unwrap();
        let a: Vec<f64> = grid
            .points()
            .iter()
            .map(|&w| 1.0 / (1.0 + (w - 1.3) * (w - 1.3)))
            .collect();
        let gk_im: Vec<f64> = grid
            .points()
            .iter()
            .zip(&a)
            .map(|(&w, &aw)| -2.0 * std::f64::consts::PI * aw / (w / (2.0 * t0)).tanh())
            .collect();
        let t_eff = effective_temperature(&grid, &a, &gk_im).unwrap();
        for (i, value) in t_eff.iter().enumerate() {
            let t = value.expect("every off-zero point is defined");
            assert!(
                (t - t0).abs() < 1e-10,
                "T_eff {} at {}",
                t,
                grid.points()[i]
            );
            // Sign rule: positive A means T_eff carries the sign structure
            // sign(T) = sign(omega) * sign(A); here that is always positive.
            assert!(t > 0.0);
        }
    }

    #[test]
    fn closed_form_area_tracks_quadrature() {
        let params = vdp(2.0, 5.0, 12);
        let spec = diagonalize_vdp(&params).unwrap();
        let grid = default_omega_grid(&params);
        let result = spectral_result(&spec, &grid, 0.0).unwrap();
        assert!(
            (result.area_grid - result.area_closed).abs() < 1e-3,
            "grid {} vs closed {}",
            result.area_grid,
            result.area_closed
        );
    }

    #[test]
    fn eta_floor_broadens_without_changing_total_weight() {
        let poles = vec![PoleData {
            k: 1,
            lambda: Complex64::new(-0.01, -3.0),
            weight: Complex64::new(1.0, 0.0),
        }];
        let grid = OmegaGrid::linspace(-50.0, 56.0, 2001).unwrap();
        let sharp = spectral_function(&retarded_gf(&poles, &grid, 0.0).unwrap());
        let wide = spectral_function(&retarded_gf(&poles, &grid, 0.5).unwrap());
        let max_sharp = sharp.iter().fold(0.0f64, |m, &v| m.max(v));
        let max_wide = wide.iter().fold(0.0f64, |m, &v| m.max(v));
        assert!(max_wide < max_sharp / 10.0);
        let area_sharp = spectral_area(&poles, -1e9, 1e9, 0.0).unwrap();
        let area_wide = spectral_area(&poles, -1e9, 1e9, 0.5).unwrap();
        assert!((area_sharp - 1.0).abs() < 1e-6);
        assert!((area_wide - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_eta_is_rejected() {
        let spec = diagonalize_vdp(&vdp(1.0, 2.0, 5)).unwrap();
        let poles = pole_weights(&spec).unwrap();
        let grid = OmegaGrid::linspace(-1.0, 1.0, 11).unwrap();
        assert!(retarded_gf(&poles, &grid, -0.1).is_err());
        assert!(keldysh_gf(&spec, &grid, -0.1).is_err());
    }

    #[test]
    fn find_peaks_locates_local_maxima() {
        let grid = OmegaGrid::linspace(0.0, 6.0, 7).unwrap();
        let values = vec![0.0, 2.0, 1.0, 0.5, 3.0, 1.0, 0.0];
        let peaks = find_peaks(&grid, &values);
        assert_eq!(peaks.len(), 2);
        assert_eq!(peaks[0].0, 1.0);
        assert_eq!(peaks[1].0, 4.0);
    }
}
