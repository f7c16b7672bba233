//! Run configuration: one JSON document per run.
//!
//! All physical inputs are dimensionless in units of the two-particle loss
//! rate, which is pinned to 1. Top-level keys name the model and the
//! frequency window; per-command blocks hold the switches only that command
//! reads. A `command` key, when present, must match the subcommand actually
//! invoked, so a config written for one pipeline cannot silently drive
//! another.

use liouvspec::greens::{default_omega_grid_sized, OmegaGrid};
use liouvspec::lindblad::VdpParams;
use liouvspec::perturbation::LinewidthSource;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const GAMMA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    SteadyState,
    Spectrum,
    Perturbative,
    PhaseDiagram,
    Eigvals,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::SteadyState => "steady-state",
            CommandName::Spectrum => "spectrum",
            CommandName::Perturbative => "perturbative",
            CommandName::PhaseDiagram => "phase-diagram",
            CommandName::Eigvals => "eigvals",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    /// Also emit `spectrum_u0.csv`, the same pipeline at U = 0.
    #[serde(default)]
    pub include_u0_reference: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinewidthSourceKey {
    TraceFormula,
    ClosedForm,
}

impl From<LinewidthSourceKey> for LinewidthSource {
    fn from(key: LinewidthSourceKey) -> Self {
        match key {
            LinewidthSourceKey::TraceFormula => LinewidthSource::TraceFormula,
            LinewidthSourceKey::ClosedForm => LinewidthSource::ClosedForm,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbativeBlock {
    #[serde(default = "default_linewidth_source")]
    pub linewidth_source: LinewidthSourceKey,
}

fn default_linewidth_source() -> LinewidthSourceKey {
    LinewidthSourceKey::TraceFormula
}

impl Default for PerturbativeBlock {
    fn default() -> Self {
        PerturbativeBlock {
            linewidth_source: default_linewidth_source(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramBlock {
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_grid_points")]
    pub r_points: usize,
    #[serde(default = "default_u_min")]
    pub u_min: f64,
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    #[serde(default = "default_grid_points")]
    pub u_points: usize,
    /// Frequency resolution of each cell's negativity scan.
    #[serde(default = "default_cell_omega_points")]
    pub omega_points: usize,
    #[serde(default = "default_threshold_scan_points")]
    pub threshold_scan_points: usize,
}

fn default_r_min() -> f64 {
    0.2
}
fn default_r_max() -> f64 {
    8.0
}
fn default_u_min() -> f64 {
    0.5
}
fn default_u_max() -> f64 {
    200.0
}
fn default_grid_points() -> usize {
    40
}
fn default_cell_omega_points() -> usize {
    2001
}
fn default_threshold_scan_points() -> usize {
    12
}

impl Default for PhaseDiagramBlock {
    fn default() -> Self {
        PhaseDiagramBlock {
            r_min: default_r_min(),
            r_max: default_r_max(),
            r_points: default_grid_points(),
            u_min: default_u_min(),
            u_max: default_u_max(),
            u_points: default_grid_points(),
            omega_points: default_cell_omega_points(),
            threshold_scan_points: default_threshold_scan_points(),
        }
    }
}

/// The raw document as written by the user.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(default)]
    pub omega0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
    /// Uniform broadening added to every pole width for plotted curves.
    /// The sum rule and integral diagnostics never see it.
    #[serde(default)]
    pub eta_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbative: Option<PerturbativeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_diagram: Option<PhaseDiagramBlock>,
}

fn default_n_max() -> usize {
    15
}
fn default_omega_points() -> usize {
    4001
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.omega_points < 2 {
            return Err(CliError::Config(
                "omega_points must be at least 2".to_string(),
            ));
        }
        match (self.omega_min, self.omega_max) {
            (Some(min), Some(max)) if min >= max => {
                return Err(CliError::Config(format!(
                    "omega window is empty: min {min} >= max {max}"
                )));
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(CliError::Config(
                    "omega_min and omega_max must be given together".to_string(),
                ));
            }
            _ => {}
        }
        if !self.eta_floor.is_finite() || self.eta_floor < 0.0 {
            return Err(CliError::Config(
                "eta_floor must be finite and nonnegative".to_string(),
            ));
        }
        if let Some(block) = &self.phase_diagram {
            if block.r_points < 1 || block.u_points < 1 {
                return Err(CliError::Config(
                    "phase_diagram grids need at least one point per axis".to_string(),
                ));
            }
            if !(block.r_min > 0.0 && block.r_max >= block.r_min) {
                return Err(CliError::Config(
                    "phase_diagram r range must satisfy 0 < r_min <= r_max".to_string(),
                ));
            }
            if !(block.u_min > 0.0 && block.u_max >= block.u_min) {
                return Err(CliError::Config(
                    "phase_diagram u range must satisfy 0 < u_min <= u_max".to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Enforce the `command` cross-check against the invoked subcommand.
    pub fn check_command(&self, invoked: CommandName) -> Result<(), CliError> {
        match self.command {
            Some(declared) if declared != invoked => Err(CliError::Config(format!(
                "config declares command \"{}\" but \"{}\" was invoked",
                declared.as_str(),
                invoked.as_str()
            ))),
            _ => Ok(()),
        }
    }

    /// Model parameters for the single-point commands.
    pub fn model(&self) -> Result<VdpParams<f64>, CliError> {
        let u = self
            .u
            .ok_or_else(|| CliError::Config("key \"u\" is required".to_string()))?;
        let r = self
            .r
            .ok_or_else(|| CliError::Config("key \"r\" is required".to_string()))?;
        let params = VdpParams {
            omega0: self.omega0,
            u,
            r,
            gamma: GAMMA,
            n_max: self.n_max,
        };
        params.validate()?;
        Ok(params)
    }

    /// The frequency grid: explicit window if configured, otherwise the
    /// model-sized default.
    pub fn omega_grid(&self, params: &VdpParams<f64>) -> Result<OmegaGrid<f64>, CliError> {
        match (self.omega_min, self.omega_max) {
            (Some(min), Some(max)) => Ok(OmegaGrid::linspace(min, max, self.omega_points)?),
            _ => Ok(default_omega_grid_sized(params, self.omega_points)?),
        }
    }
}
