//! Adaptive time propagation of the master equation.
//!
//! This is the oracle route used to cross-check everything spectral: a
//! Dormand-Prince 5(4) integrator driving the direct (non-vectorized)
//! evaluation of the Lindblad right-hand side. It shares no code with the
//! superoperator assembly or the eigendecomposition.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::FockOperator;
use crate::lindblad::{liouvillian_rhs, LindbladModel};
use crate::scalar::Float;

struct Tableau<T> {
    a: [[T; 6]; 6],
    b5: [T; 7],
    b4: [T; 7],
    c: [T; 6],
}

fn dormand_prince<T: Float>() -> Tableau<T> {
    let l = T::lit;
    Tableau {
        a: [
            [l(1.0 / 5.0), l(0.0), l(0.0), l(0.0), l(0.0), l(0.0)],
            [l(3.0 / 40.0), l(9.0 / 40.0), l(0.0), l(0.0), l(0.0), l(0.0)],
            [
                l(44.0 / 45.0),
                l(-56.0 / 15.0),
                l(32.0 / 9.0),
                l(0.0),
                l(0.0),
                l(0.0),
            ],
            [
                l(19372.0 / 6561.0),
                l(-25360.0 / 2187.0),
                l(64448.0 / 6561.0),
                l(-212.0 / 729.0),
                l(0.0),
                l(0.0),
            ],
            [
                l(9017.0 / 3168.0),
                l(-355.0 / 33.0),
                l(46732.0 / 5247.0),
                l(49.0 / 176.0),
                l(-5103.0 / 18656.0),
                l(0.0),
            ],
            [
                l(35.0 / 384.0),
                l(0.0),
                l(500.0 / 1113.0),
                l(125.0 / 192.0),
                l(-2187.0 / 6784.0),
                l(11.0 / 84.0),
            ],
        ],
        b5: [
            l(35.0 / 384.0),
            l(0.0),
            l(500.0 / 1113.0),
            l(125.0 / 192.0),
            l(-2187.0 / 6784.0),
            l(11.0 / 84.0),
            l(0.0),
        ],
        b4: [
            l(5179.0 / 57600.0),
            l(0.0),
            l(7571.0 / 16695.0),
            l(393.0 / 640.0),
            l(-92097.0 / 339200.0),
            l(187.0 / 2100.0),
            l(1.0 / 40.0),
        ],
        c: [
            l(1.0 / 5.0),
            l(3.0 / 10.0),
            l(4.0 / 5.0),
            l(8.0 / 9.0),
            l(1.0),
            l(1.0),
        ],
    }
}

fn axpy<T: Float>(
    y: &Array2<Complex<T>>,
    terms: &[(T, &Array2<Complex<T>>)],
    h: T,
) -> Array2<Complex<T>> {
    let mut out = y.clone();
    for (coeff, k) in terms {
        if *coeff == T::zero() {
            continue;
        }
        let factor = Complex::new(h * *coeff, T::zero());
        out.zip_mut_with(k, |o, slope| *o += factor * *slope);
    }
    out
}

/// Propagate d X / dt = L(X) from `rho0`, sampling the solution at the
/// requested times. `rel_tol` controls the local error per step; the
/// absolute floor is tied to it since the states handled here are O(1).
pub fn propagate_oracle<T: Float>(
    model: &LindbladModel<T>,
    rho0: &FockOperator<T>,
    t_grid: &[T],
    rel_tol: T,
) -> Result<Vec<FockOperator<T>>> {
    let space = model.space();
    if rho0.space() != space {
        return Err(Error::DimensionMismatch(
            "initial state lives on a different space".to_string(),
        ));
    }
    if t_grid.is_empty() {
        return Ok(Vec::new());
    }
    let mut prev = T::zero();
    for &t in t_grid {
        if t.is_nan() || t < prev {
            return Err(Error::InvalidTimeGrid);
        }
        prev = t;
    }
    if rel_tol.is_nan() || rel_tol <= T::zero() {
        return Err(Error::InvalidParams("rel_tol must be positive".to_string()));
    }

    let tableau = dormand_prince::<T>();
    let abs_tol = rel_tol * T::lit(1e-2);
    let t_end = *t_grid.last().unwrap();
    let rhs = |x: &Array2<Complex<T>>| -> Array2<Complex<T>> {
        let op = FockOperator::from_elements(space, x.clone()).expect("shape fixed");
        liouvillian_rhs(model, &op).into_elements()
    };

    let mut samples = Vec::with_capacity(t_grid.len());
    let mut t = T::zero();
    let mut y = rho0.elements().clone();
    let mut k0 = rhs(&y);
    let mut next_sample = 0;

    // Emit samples requested at t = 0 (and degenerate duplicates).
    while next_sample < t_grid.len() && t_grid[next_sample] <= t {
        samples.push(FockOperator::from_elements(space, y.clone())?);
        next_sample += 1;
    }

    let rhs_scale = k0
        .iter()
        .map(|z| z.norm())
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let mut h = if rhs_scale > T::zero() {
        (T::lit(0.1) / rhs_scale).min(t_end.max(T::lit(1e-6)))
    } else {
        t_end.max(T::lit(1e-6))
    };
    let h_floor = T::lit(1e-14) * t_end.max(T::one());

    while next_sample < t_grid.len() {
        let target = t_grid[next_sample];
        if h > target - t {
            h = target - t;
        }
        if h < h_floor {
            return Err(Error::StepSizeUnderflow(t.to_f64().unwrap_or(f64::NAN)));
        }

        let mut stages: Vec<Array2<Complex<T>>> = Vec::with_capacity(7);
        stages.push(k0.clone());
        for s in 0..6 {
            let terms: Vec<(T, &Array2<Complex<T>>)> =
                (0..=s).map(|j| (tableau.a[s][j], &stages[j])).collect();
            let y_stage = axpy(&y, &terms, h);
            let _ = tableau.c[s];
            stages.push(rhs(&y_stage));
        }

        let terms5: Vec<(T, &Array2<Complex<T>>)> =
            (0..7).map(|j| (tableau.b5[j], &stages[j])).collect();
        let y5 = axpy(&y, &terms5, h);
        let terms4: Vec<(T, &Array2<Complex<T>>)> =
            (0..7).map(|j| (tableau.b4[j], &stages[j])).collect();
        let y4 = axpy(&y, &terms4, h);

        let mut err = T::zero();
        for ((e5, e4), y_old) in y5.iter().zip(y4.iter()).zip(y.iter()) {
            let scale = abs_tol + rel_tol * e5.norm().max(y_old.norm());
            let local = (*e5 - *e4).norm() / scale;
            if local > err {
                err = local;
            }
        }

        if err <= T::one() {
            t += h;
            y = y5;
            // First-same-as-last property of the pair.
            k0 = stages[6].clone();
            while next_sample < t_grid.len() && t_grid[next_sample] <= t {
                samples.push(FockOperator::from_elements(space, y.clone())?);
                next_sample += 1;
            }
        }

        let exponent = T::lit(-0.2);
        let factor = if err > T::zero() {
            (T::lit(0.9) * err.powf(exponent))
                .max(T::lit(0.2))
                .min(T::lit(5.0))
        } else {
            T::lit(5.0)
        };
        h *= factor;
    }

    Ok(samples)
}
