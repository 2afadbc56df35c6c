//! The `cmd_params.json` format shared by `tune` and `simulate`.

use std::path::Path;

use ctd_core::circuits::{CmdParams, Dynamics};
use ctd_core::scenario::Scenario;
use ctd_core::tuning::{calibrate_for_ranges, BandSpec, RangeBands};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(flatten)]
    pub cmd: CmdParams,
    #[serde(default = "default_leak")]
    pub leak: f64,
    /// Step length the weights were solved for, in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<BandSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_f2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

fn default_leak() -> f64 {
    Dynamics::CMD.leak
}

impl ParamsFile {
    pub fn bare(cmd: CmdParams, leak: f64) -> Self {
        Self {
            cmd,
            leak,
            dt: None,
            bands: None,
            measured_f1: None,
            measured_f2: None,
            pass: None,
        }
    }

    pub fn dynamics(&self) -> Dynamics {
        Dynamics {
            leak: self.leak,
            ..Dynamics::CMD
        }
    }
}

/// Where `simulate` and `compare` take CMD parameters from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamsSource {
    /// Built-in placeholder parameters.
    Default,
    /// Range calibration against the scenario's own sensor layout.
    Tune,
    File(String),
}

impl std::str::FromStr for ParamsSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "default" => ParamsSource::Default,
            "tune" => ParamsSource::Tune,
            "" => return Err("empty params source".into()),
            path => ParamsSource::File(path.to_string()),
        })
    }
}

pub const PROXIMITY_WINDOW: usize = 50;

pub fn resolve(source: &ParamsSource, scenario: &Scenario) -> CliResult<ParamsFile> {
    match source {
        ParamsSource::Default => Ok(ParamsFile::bare(CmdParams::default(), default_leak())),
        ParamsSource::Tune => {
            let leak = default_leak();
            let cmd = calibrate_for_ranges(
                &scenario.layout,
                &RangeBands::default(),
                leak,
                scenario.dt,
                PROXIMITY_WINDOW,
            )
            .map_err(|e| CliError::Infeasible(e.to_string()))?;
            let mut p = ParamsFile::bare(cmd, leak);
            p.dt = Some(scenario.dt);
            Ok(p)
        }
        ParamsSource::File(path) => {
            let p = load(Path::new(path))?;
            if let Some(dt) = p.dt {
                if (dt - scenario.dt).abs() > 1e-12 {
                    return Err(CliError::Input(format!(
                        "{path}: parameters were solved for dt = {dt} s, scenario uses {} s",
                        scenario.dt
                    )));
                }
            }
            Ok(p)
        }
    }
}

pub fn load(path: &Path) -> CliResult<ParamsFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let p: ParamsFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    p.cmd
        .validate()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if !(0.0..=1.0).contains(&p.leak) {
        return Err(CliError::Input(format!(
            "{}: leak {} outside [0, 1]",
            path.display(),
            p.leak
        )));
    }
    Ok(p)
}
