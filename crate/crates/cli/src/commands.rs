//! The five pipelines behind the subcommands.
//!
//! Each command is an ordinary function over a parsed config so the
//! integration tests can drive it in-process; the binary only adds argument
//! parsing and the thread-pool setup. All computation happens before any
//! file is written, and files are written from this single thread.

use std::path::Path;

use liouvspec::analysis::{classical_steady_state, log_grid, phase_diagram, PhaseDiagramConfig};
use liouvspec::greens::spectral_result;
use liouvspec::lindblad::VdpParams;
use liouvspec::perturbation::{
    beyond_lifetime_spectral_function, lifetime_spectral_function, perturbative_modes,
    poles_from_perturbative, LinewidthSource,
};
use liouvspec::spectrum::{cutoff_stability, diagonalize_vdp, export_eigenvalues};

use crate::config::{CommandName, RunConfig, GAMMA};
use crate::format::{render_csv, Cell};
use crate::manifest::{write_output, CutoffStabilityRecord, RunManifest, StageClock};
use crate::{svg, CliError};

/// How far the cutoff check enlarges the basis and how many slow k=1
/// eigenvalues it compares.
const CUTOFF_CHECK_EXTRA: usize = 5;
const CUTOFF_CHECK_COUNT: usize = 10;
const CUTOFF_CHECK_TOL: f64 = 1e-6;

fn cutoff_record(params: &VdpParams<f64>) -> Result<CutoffStabilityRecord, CliError> {
    let check = cutoff_stability(params, CUTOFF_CHECK_EXTRA, CUTOFF_CHECK_COUNT)?;
    Ok(CutoffStabilityRecord {
        n_max: check.n_max,
        n_max_check: check.n_max_check,
        compared: check.compared,
        max_shift: check.max_shift,
        pass: check.max_shift < CUTOFF_CHECK_TOL * GAMMA,
    })
}

pub fn cmd_steady_state(
    config: &RunConfig,
    out_dir: &Path,
    with_svg: bool,
) -> Result<RunManifest, CliError> {
    config.check_command(CommandName::SteadyState)?;
    let params = config.model()?;
    let mut manifest = RunManifest::new("steady-state", config);
    let mut clock = StageClock::start();

    let spectrum = diagonalize_vdp(&params)?;
    let exact = spectrum.populations();
    let oracle = classical_steady_state(params.n_max, params.r)?;
    clock.mark(&mut manifest, "diagonalize");

    let worst = exact
        .iter()
        .zip(oracle.populations())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if worst >= 1e-10 {
        return Err(CliError::InvariantViolated {
            name: "steady-state oracle agreement",
            detail: format!("max |delta p_n| = {worst:.3e} exceeds 1e-10"),
        });
    }
    manifest.cutoff_stability = Some(cutoff_record(&params)?);
    manifest
        .summary
        .insert("mean_occupation", oracle.mean_occupation());
    manifest
        .summary
        .insert("top_population", exact[params.n_max]);
    manifest.summary.insert("oracle_max_delta", worst);
    clock.mark(&mut manifest, "check");

    let rows: Vec<Vec<Cell>> = exact
        .iter()
        .zip(oracle.populations())
        .enumerate()
        .map(|(n, (p, p_oracle))| {
            vec![Cell::Int(n as i64), Cell::Float(*p), Cell::Float(*p_oracle)]
        })
        .collect();
    write_output(
        &mut manifest,
        out_dir,
        "populations.csv",
        &render_csv("n,p_n,p_n_oracle", &rows),
    )?;
    if with_svg {
        let points: Vec<(f64, f64)> = exact
            .iter()
            .enumerate()
            .map(|(n, &p)| (n as f64, p))
            .collect();
        let art = svg::line_plot(
            &format!(
                "steady-state populations, r={}, n_max={}",
                params.r, params.n_max
            ),
            "n",
            "p_n",
            &[svg::Series {
                label: "p_n",
                color: "#3b6cc2",
                points,
            }],
        );
        write_output(&mut manifest, out_dir, "populations.svg", &art)?;
    }
    clock.mark(&mut manifest, "write");
    Ok(manifest)
}

pub fn cmd_eigvals(
    config: &RunConfig,
    out_dir: &Path,
    with_svg: bool,
) -> Result<RunManifest, CliError> {
    config.check_command(CommandName::Eigvals)?;
    let params = config.model()?;
    let mut manifest = RunManifest::new("eigvals", config);
    let mut clock = StageClock::start();

    let spectrum = diagonalize_vdp(&params)?;
    let rows_data = export_eigenvalues(&spectrum);
    manifest.cutoff_stability = Some(cutoff_record(&params)?);
    manifest
        .summary
        .insert("mode_count", rows_data.len() as f64);
    clock.mark(&mut manifest, "diagonalize");

    let rows: Vec<Vec<Cell>> = rows_data
        .iter()
        .map(|(k, re, im)| vec![Cell::Int(*k), Cell::Float(*re), Cell::Float(*im)])
        .collect();
    write_output(
        &mut manifest,
        out_dir,
        "eigvals.csv",
        &render_csv("k,re_lambda,im_lambda", &rows),
    )?;
    if with_svg {
        let points: Vec<(f64, f64)> = rows_data.iter().map(|(_, re, im)| (*re, *im)).collect();
        let art = svg::scatter_plot(
            &format!("Liouvillian spectrum, r={}, u={}", params.r, params.u),
            "Re lambda",
            "Im lambda",
            &points,
        );
        write_output(&mut manifest, out_dir, "eigvals.svg", &art)?;
    }
    clock.mark(&mut manifest, "write");
    Ok(manifest)
}

/// Shared by `spectrum` and its U=0 reference: evaluate, gate the pointwise
/// identities, and lay out the CSV rows.
struct SpectrumTable {
    rows: Vec<Vec<Cell>>,
    a_points: Vec<(f64, f64)>,
    sum_rule_re: f64,
    sum_rule_im: f64,
    area_grid: f64,
    area_closed: f64,
    occupation: f64,
    identity_residual: f64,
    pole_rows: Vec<Vec<Cell>>,
}

fn evaluate_spectrum(
    params: &VdpParams<f64>,
    config: &RunConfig,
) -> Result<SpectrumTable, CliError> {
    let spectrum = diagonalize_vdp(params)?;
    let grid = config.omega_grid(params)?;
    let result = spectral_result(&spectrum, &grid, config.eta_floor)?;

    let a_scale = result.a.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if result.identity_residual > 1e-9 * (1.0 + a_scale) {
        return Err(CliError::InvariantViolated {
            name: "spectral identity",
            detail: format!(
                "-Im G^R/pi vs (S_> - S_<)/2pi residual {:.3e}",
                result.identity_residual
            ),
        });
    }
    if let Some(&worst) = result
        .gk_im
        .iter()
        .max_by(|a, b| a.partial_cmp(b).expect("gk values are finite"))
    {
        if worst > 1e-10 {
            return Err(CliError::InvariantViolated {
                name: "keldysh positivity",
                detail: format!("Im G^K reaches {worst:.3e} > 1e-10"),
            });
        }
    }

    let mut rows = Vec::with_capacity(grid.len());
    let mut a_points = Vec::with_capacity(grid.len());
    for (i, &omega) in grid.points().iter().enumerate() {
        rows.push(vec![
            Cell::Float(omega),
            Cell::Float(result.a[i]),
            Cell::Float(result.gr[i].re),
            Cell::Float(result.gr[i].im),
            Cell::Float(result.gk_im[i]),
            Cell::from(result.t_eff[i]),
        ]);
        a_points.push((omega, result.a[i]));
    }
    let pole_rows: Vec<Vec<Cell>> = result
        .poles
        .iter()
        .map(|p| {
            vec![
                Cell::Int(p.k),
                Cell::Float(p.lambda.re),
                Cell::Float(p.lambda.im),
                Cell::Float(p.weight.re),
                Cell::Float(p.weight.im),
            ]
        })
        .collect();
    Ok(SpectrumTable {
        rows,
        a_points,
        sum_rule_re: result.sum_rule.re,
        sum_rule_im: result.sum_rule.im,
        area_grid: result.area_grid,
        area_closed: result.area_closed,
        occupation: result.occupation.total,
        identity_residual: result.identity_residual,
        pole_rows,
    })
}

const SPECTRUM_HEADER: &str = "omega,a_omega,re_gr,im_gr,im_gk,t_eff";

pub fn cmd_spectrum(
    config: &RunConfig,
    out_dir: &Path,
    with_svg: bool,
) -> Result<RunManifest, CliError> {
    config.check_command(CommandName::Spectrum)?;
    let params = config.model()?;
    let block = config.spectrum.clone().unwrap_or_default();
    let mut manifest = RunManifest::new("spectrum", config);
    let mut clock = StageClock::start();

    if let Some(warning) =
        liouvspec::analysis::check_ndos_grid(&config.omega_grid(&params)?, &params)
    {
        eprintln!("warning: {warning}");
        manifest.warnings.push(warning);
    }

    let table = evaluate_spectrum(&params, config)?;
    println!("Σ Re w = {:.6}", table.sum_rule_re);
    manifest.summary.insert("sum_rule_re", table.sum_rule_re);
    manifest.summary.insert("sum_rule_im", table.sum_rule_im);
    manifest.summary.insert("area_grid", table.area_grid);
    manifest.summary.insert("area_closed", table.area_closed);
    manifest.summary.insert("occupation", table.occupation);
    manifest
        .summary
        .insert("identity_residual", table.identity_residual);
    manifest.cutoff_stability = Some(cutoff_record(&params)?);
    clock.mark(&mut manifest, "evaluate");

    write_output(
        &mut manifest,
        out_dir,
        "spectrum.csv",
        &render_csv(SPECTRUM_HEADER, &table.rows),
    )?;
    write_output(
        &mut manifest,
        out_dir,
        "poles.csv",
        &render_csv("k,re_lambda,im_lambda,re_w,im_w", &table.pole_rows),
    )?;

    let mut reference_points = None;
    if block.include_u0_reference {
        let u0_params = VdpParams { u: 0.0, ..params };
        let u0_table = evaluate_spectrum(&u0_params, config)?;
        write_output(
            &mut manifest,
            out_dir,
            "spectrum_u0.csv",
            &render_csv(SPECTRUM_HEADER, &u0_table.rows),
        )?;
        reference_points = Some(u0_table.a_points);
    }

    if with_svg {
        let mut series = vec![svg::Series {
            label: "A(omega)",
            color: "#c23b22",
            points: table.a_points,
        }];
        if let Some(points) = reference_points {
            series.push(svg::Series {
                label: "A(omega), U=0",
                color: "#3b6cc2",
                points,
            });
        }
        let art = svg::line_plot(
            &format!(
                "spectral function, r={}, u={}, n_max={}",
                params.r, params.u, params.n_max
            ),
            "omega",
            "A",
            &series,
        );
        write_output(&mut manifest, out_dir, "spectrum.svg", &art)?;
    }
    clock.mark(&mut manifest, "write");
    Ok(manifest)
}

pub fn cmd_perturbative(
    config: &RunConfig,
    out_dir: &Path,
    with_svg: bool,
) -> Result<RunManifest, CliError> {
    config.check_command(CommandName::Perturbative)?;
    let params = config.model()?;
    let block = config.perturbative.clone().unwrap_or_default();
    let source: LinewidthSource = block.linewidth_source.into();
    let mut manifest = RunManifest::new("perturbative", config);
    let mut clock = StageClock::start();

    let spectrum = diagonalize_vdp(&params)?;
    let grid = config.omega_grid(&params)?;
    let exact = spectral_result(&spectrum, &grid, config.eta_floor)?;
    let populations = spectrum.populations();
    let a_lifetime = lifetime_spectral_function(&params, &populations, &grid, source)?;
    let a_beyond = beyond_lifetime_spectral_function(&params, &spectrum, &grid, source)?;

    // The corrected weights no longer telescope, so their sum-rule drift is
    // a quality figure worth reporting.
    let modes = perturbative_modes(&params)?;
    let beyond_poles =
        poles_from_perturbative(&params, &modes, spectrum.steady_state(), source, true)?;
    let beyond_sum = liouvspec::greens::sum_rule(&beyond_poles);
    manifest.summary.insert("sum_rule_re", exact.sum_rule.re);
    manifest.summary.insert("beyond_sum_rule_re", beyond_sum.re);
    manifest.summary.insert("beyond_sum_rule_im", beyond_sum.im);
    manifest.cutoff_stability = Some(cutoff_record(&params)?);
    clock.mark(&mut manifest, "evaluate");

    let rows: Vec<Vec<Cell>> = grid
        .points()
        .iter()
        .enumerate()
        .map(|(i, &omega)| {
            vec![
                Cell::Float(omega),
                Cell::Float(a_lifetime[i]),
                Cell::Float(a_beyond[i]),
                Cell::Float(exact.a[i]),
            ]
        })
        .collect();
    write_output(
        &mut manifest,
        out_dir,
        "perturbative_spectrum.csv",
        &render_csv("omega,a_lifetime,a_beyond,a_exact", &rows),
    )?;

    if with_svg {
        let to_points = |values: &[f64]| -> Vec<(f64, f64)> {
            grid.points()
                .iter()
                .zip(values)
                .map(|(&w, &v)| (w, v))
                .collect()
        };
        let art = svg::line_plot(
            &format!(
                "perturbative vs exact spectral function, r={}, u={}",
                params.r, params.u
            ),
            "omega",
            "A",
            &[
                svg::Series {
                    label: "lifetime",
                    color: "#3b6cc2",
                    points: to_points(&a_lifetime),
                },
                svg::Series {
                    label: "beyond-lifetime",
                    color: "#2b9c4f",
                    points: to_points(&a_beyond),
                },
                svg::Series {
                    label: "exact",
                    color: "#c23b22",
                    points: to_points(&exact.a),
                },
            ],
        );
        write_output(&mut manifest, out_dir, "perturbative.svg", &art)?;
    }
    clock.mark(&mut manifest, "write");
    Ok(manifest)
}

pub fn cmd_phase_diagram(
    config: &RunConfig,
    out_dir: &Path,
    with_svg: bool,
) -> Result<RunManifest, CliError> {
    config.check_command(CommandName::PhaseDiagram)?;
    let block = config.phase_diagram.clone().unwrap_or_default();
    let mut manifest = RunManifest::new("phase-diagram", config);
    let mut clock = StageClock::start();

    let sweep_config = PhaseDiagramConfig {
        omega0: config.omega0,
        gamma: GAMMA,
        n_max: config.n_max,
        r_values: log_grid(block.r_min, block.r_max, block.r_points)?,
        u_values: log_grid(block.u_min, block.u_max, block.u_points)?,
        omega_points: block.omega_points,
        threshold_scan_points: block.threshold_scan_points,
    };
    let sweep = phase_diagram(&sweep_config)?;
    for note in &sweep.diagnostics {
        eprintln!("warning: {note}");
        manifest.warnings.push(note.clone());
    }
    // The cutoff diagnostic at the most demanding corner of the sweep.
    let corner = VdpParams {
        omega0: config.omega0,
        u: block.u_max,
        r: block.r_max,
        gamma: GAMMA,
        n_max: config.n_max,
    };
    manifest.cutoff_stability = Some(cutoff_record(&corner)?);
    manifest
        .summary
        .insert("cells", (block.r_points * block.u_points) as f64);
    manifest
        .summary
        .insert("cell_failures", sweep.diagnostics.len() as f64);
    clock.mark(&mut manifest, "sweep");

    let nu = sweep.u_values.len();
    let mut rows = Vec::with_capacity(sweep.r_values.len() * nu);
    for (ir, &r) in sweep.r_values.iter().enumerate() {
        for (iu, &u) in sweep.u_values.iter().enumerate() {
            let flat = ir * nu + iu;
            rows.push(vec![
                Cell::Float(r),
                Cell::Float(u),
                Cell::Flag(sweep.inversion[ir]),
                Cell::Flag(sweep.ndos_exact[flat]),
                Cell::Flag(sweep.ndos_lifetime[flat]),
            ]);
        }
    }
    write_output(
        &mut manifest,
        out_dir,
        "phase.csv",
        &render_csv("r,u_over_gamma,inversion,ndos_exact,ndos_lifetime", &rows),
    )?;

    let threshold_rows: Vec<Vec<Cell>> = sweep
        .r_values
        .iter()
        .enumerate()
        .map(|(ir, &r)| {
            vec![
                Cell::Float(r),
                Cell::from(sweep.u_c_exact[ir]),
                Cell::from(sweep.u_c_lifetime[ir]),
            ]
        })
        .collect();
    write_output(
        &mut manifest,
        out_dir,
        "threshold.csv",
        &render_csv("r,u_c_exact,u_c_lifetime", &threshold_rows),
    )?;

    if with_svg {
        let art = svg::phase_map(
            "negative density of states across the pump-interaction plane",
            &sweep.r_values,
            &sweep.u_values,
            &sweep.ndos_exact,
            &sweep.ndos_lifetime,
        );
        write_output(&mut manifest, out_dir, "phase.svg", &art)?;
    }
    clock.mark(&mut manifest, "write");
    Ok(manifest)
}
