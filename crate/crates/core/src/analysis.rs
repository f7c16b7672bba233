//! Steady-state population oracle, inversion and spectral-negativity
//! detection, threshold curves, and the pump/interaction phase diagram.
//!
//! The population oracle solves the classical birth-death rate equation that
//! the Fock-diagonal sector of the Liouvillian reduces to. It never touches
//! the superoperator, which makes it an independent cross-check for the
//! eigenmode pipeline: the two must agree on every steady-state population
//! regardless of the interaction strength.

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greens::{
    default_omega_grid_sized, pole_weights, retarded_gf, spectral_function, OmegaGrid,
};
use crate::lindblad::VdpParams;
use crate::perturbation::{lifetime_spectral_function, LinewidthSource};
use crate::scalar::{solve_dense, Float};
use crate::spectrum::diagonalize_vdp;

/// Steady-state Fock populations from the classical rate equation.
#[derive(Clone, Debug)]
pub struct PopulationOracle<T: Float> {
    p: Vec<T>,
}

impl<T: Float> PopulationOracle<T> {
    pub fn populations(&self) -> &[T] {
        &self.p
    }

    pub fn mean_occupation(&self) -> T {
        self.p.iter().enumerate().fold(T::zero(), |acc, (n, &p)| {
            acc + T::from_usize(n).unwrap() * p
        })
    }
}

/// Classical rate matrix on the truncated ladder: gain n -> n+1 at rate
/// r gamma (n+1) and two-photon loss n -> n-2 at rate gamma n(n-1). The pump
/// out of the top level is absent, mirroring the truncated creation
/// operator, so the null vector matches the Liouvillian steady state
/// exactly rather than just asymptotically.
fn rate_matrix<T: Float>(n_max: usize, r: T) -> Array2<T> {
    let d = n_max + 1;
    let mut w = Array2::from_elem((d, d), T::zero());
    for n in 0..d {
        let nf = T::from_usize(n).unwrap();
        if n < n_max {
            let pump = r * (nf + T::one());
            w[(n + 1, n)] += pump;
            w[(n, n)] -= pump;
        }
        if n >= 2 {
            let loss = nf * (nf - T::one());
            w[(n - 2, n)] += loss;
            w[(n, n)] -= loss;
        }
    }
    w
}

/// Solve the rate equation for its unique steady distribution.
pub fn classical_steady_state<T: Float>(n_max: usize, r: T) -> Result<PopulationOracle<T>> {
    if n_max < 1 {
        return Err(Error::InvalidParams("n_max must be at least 1".to_string()));
    }
    if !r.is_finite() || r < T::zero() {
        return Err(Error::InvalidParams(format!(
            "pump ratio must be finite and nonnegative, got {r}"
        )));
    }
    let d = n_max + 1;
    let w = rate_matrix(n_max, r);

    // The null space must be one-dimensional for the distribution to be
    // well defined; at r = 0 the vacuum and the trapped |1> state both
    // survive, so the count is reported instead of picking one arbitrarily.
    let complex = Array2::from_shape_fn((d, d), |(i, j)| Complex::new(w[(i, j)], T::zero()));
    let eigs = T::eig_dense(&complex)?;
    let scale = eigs
        .values
        .iter()
        .fold(T::zero(), |m, v| if v.norm() > m { v.norm() } else { m });
    let zero_count = eigs
        .values
        .iter()
        .filter(|v| v.norm() <= T::zero_mode_tol() * scale)
        .count();
    if zero_count != 1 {
        return Err(Error::DegenerateSteadyState(zero_count));
    }

    // Replace the top row with the normalization constraint sum p = 1.
    let mut system = complex;
    for j in 0..d {
        system[(0, j)] = Complex::new(T::one(), T::zero());
    }
    let mut rhs = vec![Complex::new(T::zero(), T::zero()); d];
    rhs[0] = Complex::new(T::one(), T::zero());
    let solution = solve_dense(&system, &rhs)
        .ok_or_else(|| Error::InvalidSteadyState("rate-equation system is singular".to_string()))?;

    let mut p: Vec<T> = solution.iter().map(|z| z.re).collect();
    for (n, &value) in p.iter().enumerate() {
        if value < -T::lit(1e-12) {
            return Err(Error::InvalidSteadyState(format!(
                "negative population p_{n} = {value:e}"
            )));
        }
    }
    let total = p.iter().fold(T::zero(), |a, &b| a + b);
    for value in &mut p {
        *value /= total;
    }

    // Residual of the original (unconstrained) equation.
    let mut residual = T::zero();
    for i in 0..d {
        let mut acc = T::zero();
        for j in 0..d {
            acc += w[(i, j)] * p[j];
        }
        if acc.abs() > residual {
            residual = acc.abs();
        }
    }
    let rate_scale = (T::one() + r) * T::from_usize(d * d).unwrap();
    if residual > T::structure_tol() * rate_scale {
        return Err(Error::InvalidSteadyState(format!(
            "rate-equation residual {residual:e}"
        )));
    }
    Ok(PopulationOracle { p })
}

/// True when some higher-energy level carries more population than a lower
/// one. Requires a strictly increasing energy ladder, i.e. u > 0, or u = 0
/// with omega0 > 0; otherwise "higher energy" is meaningless and the
/// question is rejected.
pub fn detect_inversion<T: Float>(omega0: T, u: T, populations: &[T]) -> Result<bool> {
    let increasing = u >= T::zero() && omega0 + u * T::lit(0.5) > T::zero();
    if !increasing {
        return Err(Error::InversionUndefined);
    }
    let margin = T::lit(1e-10);
    Ok(populations
        .windows(2)
        .any(|pair| pair[1] > pair[0] + margin))
}

/// Verdict of a spectral-negativity scan.
#[derive(Clone, Copy, Debug)]
pub struct NdosOutcome<T: Float> {
    pub negative: bool,
    /// Frequency interval over which A(omega) stays below -threshold.
    pub witness: Option<(T, T)>,
    pub min_value: T,
    pub threshold: T,
}

/// Scan A(omega) for negativity at omega > 1e-3 gamma. The sign change
/// across omega = 0 is allowed even in equilibrium, so a margin around zero
/// is excluded; the threshold 1e-6 max|A| guards against quadrature noise.
pub fn detect_ndos<T: Float>(a: &[T], grid: &OmegaGrid<T>, gamma: T) -> Result<NdosOutcome<T>> {
    if a.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} spectral values on a {}-point grid",
            a.len(),
            grid.len()
        )));
    }
    if !gamma.is_finite() || gamma <= T::zero() {
        return Err(Error::InvalidParams(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let omega_min = T::lit(1e-3) * gamma;
    let a_scale = a
        .iter()
        .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m });
    let threshold = T::lit(1e-6) * a_scale;

    let mut min_value = T::infinity();
    let mut min_index = None;
    for (i, &w) in grid.points().iter().enumerate() {
        if w <= omega_min {
            continue;
        }
        if a[i] < min_value {
            min_value = a[i];
            min_index = Some(i);
        }
    }
    let min_index = min_index.ok_or_else(|| {
        Error::InvalidGrid("no grid points above the omega > 0 exclusion zone".to_string())
    })?;

    let negative = min_value < -threshold;
    let witness = if negative {
        let mut lo = min_index;
        while lo > 0 && a[lo - 1] < -threshold && grid.points()[lo - 1] > omega_min {
            lo -= 1;
        }
        let mut hi = min_index;
        while hi + 1 < a.len() && a[hi + 1] < -threshold {
            hi += 1;
        }
        Some((grid.points()[lo], grid.points()[hi]))
    } else {
        None
    };
    Ok(NdosOutcome {
        negative,
        witness,
        min_value,
        threshold,
    })
}

/// Warn when a grid cannot resolve the resonance ladder it is meant to scan.
pub fn check_ndos_grid<T: Float>(grid: &OmegaGrid<T>, params: &VdpParams<T>) -> Option<String> {
    if params.u <= T::zero() {
        return None;
    }
    let mut warnings = Vec::new();
    let top = params.u * T::from_usize(params.n_max - 1).unwrap();
    if grid.max() < top {
        warnings.push(format!(
            "grid ends at {:e} but the ladder reaches {:e}",
            grid.max(),
            top
        ));
    }
    if grid.max_spacing() > params.u * T::lit(0.25) {
        warnings.push(format!(
            "grid spacing {:e} under-resolves the resonance spacing {:e}",
            grid.max_spacing(),
            params.u
        ));
    }
    if warnings.is_empty() {
        None
    } else {
        Some(warnings.join("; "))
    }
}

/// Which spectral function the negativity scan uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NdosMethod {
    /// Full eigenmode pipeline.
    Exact,
    /// Lorentzian lifetime approximation on oracle populations.
    Lifetime,
}

/// Run one negativity scan at the given parameters on the default window.
pub fn ndos_flag<T: Float>(
    params: &VdpParams<T>,
    method: NdosMethod,
    omega_points: usize,
) -> Result<NdosOutcome<T>> {
    params.validate()?;
    let grid = default_omega_grid_sized(params, omega_points)?;
    let a = match method {
        NdosMethod::Exact => {
            let spectrum = diagonalize_vdp(params)?;
            let poles = pole_weights(&spectrum)?;
            spectral_function(&retarded_gf(&poles, &grid, T::zero())?)
        }
        NdosMethod::Lifetime => {
            let oracle = classical_steady_state(params.n_max, params.r)?;
            lifetime_spectral_function(
                params,
                oracle.populations(),
                &grid,
                LinewidthSource::default(),
            )?
        }
    };
    detect_ndos(&a, &grid, params.gamma)
}

/// Search window and resolution for a threshold scan in u.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdScan<T: Float> {
    pub omega0: T,
    pub gamma: T,
    pub n_max: usize,
    pub u_min: T,
    pub u_max: T,
    pub omega_points: usize,
    /// Fallback scan resolution when the window endpoints agree.
    pub scan_points: usize,
}

/// Smallest interaction strength at which the negativity flag turns on,
/// assuming the flag is monotone in u across the window (a single boundary
/// in the phase diagram). If the endpoints agree the window is swept instead
/// and the lowest onset is refined; None means no negativity anywhere in
/// the window.
pub fn threshold_uc<T: Float>(
    scan: &ThresholdScan<T>,
    r: T,
    method: NdosMethod,
) -> Result<Option<T>> {
    if !(scan.u_min >= T::zero() && scan.u_max > scan.u_min) || scan.scan_points < 2 {
        return Err(Error::InvalidParams(format!(
            "threshold window [{}, {}] with {} scan points is invalid",
            scan.u_min, scan.u_max, scan.scan_points
        )));
    }
    let flag = |u: T| -> Result<bool> {
        let params = VdpParams {
            omega0: scan.omega0,
            u,
            gamma: scan.gamma,
            r,
            n_max: scan.n_max,
        };
        Ok(ndos_flag(&params, method, scan.omega_points)?.negative)
    };
    let rel_tol = T::lit(1e-3);
    let bisect = |mut lo: T, mut hi: T, flag: &dyn Fn(T) -> Result<bool>| -> Result<T> {
        while hi - lo > rel_tol * (T::lit(0.5) * (hi + lo)).max(T::epsilon()) {
            let mid = T::lit(0.5) * (lo + hi);
            if flag(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(T::lit(0.5) * (lo + hi))
    };

    let at_min = flag(scan.u_min)?;
    if at_min {
        // Negativity persists down to the window edge; the onset is at or
        // below u_min, and this window cannot resolve it further.
        return Ok(Some(scan.u_min));
    }
    if flag(scan.u_max)? {
        return Ok(Some(bisect(scan.u_min, scan.u_max, &flag)?));
    }

    // Endpoints agree (both negative-free): sweep for a re-entrant pocket.
    let probes = if scan.u_min > T::zero() {
        log_grid(scan.u_min, scan.u_max, scan.scan_points)?
    } else {
        linear_grid(scan.u_min, scan.u_max, scan.scan_points)?
    };
    let mut previous = scan.u_min;
    for &u in &probes[1..] {
        if flag(u)? {
            return Ok(Some(bisect(previous, u, &flag)?));
        }
        previous = u;
    }
    Ok(None)
}

/// Logarithmically spaced grid with exact endpoints.
pub fn log_grid<T: Float>(min: T, max: T, count: usize) -> Result<Vec<T>> {
    if !(min > T::zero() && max > min) || count < 2 {
        return Err(Error::InvalidGrid(format!(
            "cannot log-space [{min}, {max}] with {count} points"
        )));
    }
    let (ln_min, ln_max) = (min.ln(), max.ln());
    let step = (ln_max - ln_min) / T::from_usize(count - 1).unwrap();
    Ok((0..count)
        .map(|i| {
            if i == 0 {
                min
            } else if i == count - 1 {
                max
            } else {
                (ln_min + step * T::from_usize(i).unwrap()).exp()
            }
        })
        .collect())
}

/// Linearly spaced grid with exact endpoints.
pub fn linear_grid<T: Float>(min: T, max: T, count: usize) -> Result<Vec<T>> {
    if min.is_nan() || max.is_nan() || max <= min || count < 2 {
        return Err(Error::InvalidGrid(format!(
            "cannot span [{min}, {max}] with {count} points"
        )));
    }
    let step = (max - min) / T::from_usize(count - 1).unwrap();
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                max
            } else {
                min + step * T::from_usize(i).unwrap()
            }
        })
        .collect())
}

/// Inputs of a phase-diagram sweep. Frequencies are in units of gamma when
/// gamma = 1; nothing here assumes that, but the CLI always passes it.
#[derive(Clone, Debug)]
pub struct PhaseDiagramConfig<T: Float> {
    pub omega0: T,
    pub gamma: T,
    pub n_max: usize,
    pub r_values: Vec<T>,
    pub u_values: Vec<T>,
    pub omega_points: usize,
    pub threshold_scan_points: usize,
}

/// Sweep result. Cell vectors are row-major over (r, u): index ir * nu + iu.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDiagram<T: Float> {
    pub r_values: Vec<T>,
    pub u_values: Vec<T>,
    /// Per r: population inversion (independent of u by construction).
    pub inversion: Vec<bool>,
    pub ndos_exact: Vec<bool>,
    pub ndos_lifetime: Vec<bool>,
    /// Per r: negativity onset within the swept u window, per method.
    pub u_c_exact: Vec<Option<T>>,
    pub u_c_lifetime: Vec<Option<T>>,
    /// Human-readable notes for cells or rows that failed; empty on a
    /// clean sweep. Failed cells report `false` flags.
    pub diagnostics: Vec<String>,
}

/// Run the full sweep. Each (r, u) cell is an independent pipeline; cell
/// failures are recorded as diagnostics without aborting the sweep, and the
/// output is deterministic regardless of the worker count.
pub fn phase_diagram<T: Float>(config: &PhaseDiagramConfig<T>) -> Result<PhaseDiagram<T>> {
    if config.r_values.is_empty() || config.u_values.is_empty() {
        return Err(Error::InvalidGrid(
            "phase diagram needs nonempty r and u grids".to_string(),
        ));
    }
    let nr = config.r_values.len();
    let nu = config.u_values.len();

    struct Cell {
        exact: bool,
        lifetime: bool,
        note: Option<String>,
    }
    let cells: Vec<Cell> = (0..nr * nu)
        .into_par_iter()
        .map(|idx| {
            let r = config.r_values[idx / nu];
            let u = config.u_values[idx % nu];
            let params = VdpParams {
                omega0: config.omega0,
                u,
                gamma: config.gamma,
                r,
                n_max: config.n_max,
            };
            let mut note = None;
            let mut run = |method: NdosMethod| match ndos_flag(&params, method, config.omega_points)
            {
                Ok(outcome) => outcome.negative,
                Err(err) => {
                    note = Some(format!("r={r}, u={u}, {method:?}: {err}"));
                    false
                }
            };
            let exact = run(NdosMethod::Exact);
            let lifetime = run(NdosMethod::Lifetime);
            Cell {
                exact,
                lifetime,
                note,
            }
        })
        .collect();

    struct Row<T: Float> {
        inversion: bool,
        u_c_exact: Option<T>,
        u_c_lifetime: Option<T>,
        notes: Vec<String>,
    }
    let u_ref = config
        .u_values
        .iter()
        .copied()
        .find(|&u| u > T::zero())
        .unwrap_or(T::zero());
    let window = (config.u_values[0], *config.u_values.last().unwrap());
    let rows: Vec<Row<T>> = config
        .r_values
        .par_iter()
        .map(|&r| {
            let mut notes = Vec::new();
            let inversion = match classical_steady_state(config.n_max, r)
                .and_then(|oracle| detect_inversion(config.omega0, u_ref, oracle.populations()))
            {
                Ok(flag) => flag,
                Err(err) => {
                    notes.push(format!("r={r}, inversion: {err}"));
                    false
                }
            };
            let mut threshold = |method: NdosMethod| {
                if window.1 <= window.0 {
                    return None;
                }
                let scan = ThresholdScan {
                    omega0: config.omega0,
                    gamma: config.gamma,
                    n_max: config.n_max,
                    u_min: window.0,
                    u_max: window.1,
                    omega_points: config.omega_points,
                    scan_points: config.threshold_scan_points,
                };
                match threshold_uc(&scan, r, method) {
                    Ok(result) => result,
                    Err(err) => {
                        notes.push(format!("r={r}, threshold {method:?}: {err}"));
                        None
                    }
                }
            };
            let u_c_exact = threshold(NdosMethod::Exact);
            let u_c_lifetime = threshold(NdosMethod::Lifetime);
            Row {
                inversion,
                u_c_exact,
                u_c_lifetime,
                notes,
            }
        })
        .collect();

    let mut diagnostics: Vec<String> = cells.iter().filter_map(|c| c.note.clone()).collect();
    diagnostics.extend(rows.iter().flat_map(|row| row.notes.iter().cloned()));
    Ok(PhaseDiagram {
        r_values: config.r_values.clone(),
        u_values: config.u_values.clone(),
        inversion: rows.iter().map(|row| row.inversion).collect(),
        ndos_exact: cells.iter().map(|c| c.exact).collect(),
        ndos_lifetime: cells.iter().map(|c| c.lifetime).collect(),
        u_c_exact: rows.iter().map(|row| row.u_c_exact).collect(),
        u_c_lifetime: rows.iter().map(|row| row.u_c_lifetime).collect(),
        diagnostics,
    })
}
