//! Resolves `--linkage` and friends into a validated run configuration.
//!
//! `--linkage` takes inline JSON `{"l1":..,"l2":..,"l3":..,"L":..}` or a path
//! to a JSON file. The file holds either a bare linkage or a run
//! configuration with a `linkage` key plus any of the command flags; flags
//! given on the command line override the file.

use std::fs;
use std::path::PathBuf;

use popdyn::{AngleConfig, Bars, Error, Linkage, Pop};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLinkage {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    #[serde(rename = "L")]
    pub ground: Option<f64>,
}

impl RawLinkage {
    pub fn bars(&self) -> Result<Bars, CliError> {
        Ok(Bars::new(self.l1, self.l2, self.l3).map_err(infeasible)?)
    }

    pub fn linkage(&self) -> Result<Linkage, CliError> {
        let ground = self
            .ground
            .ok_or_else(|| CliError::Usage("linkage needs a ground length \"L\"".into()))?;
        Ok(Linkage::new(self.l1, self.l2, self.l3, ground)?)
    }
}

/// Bad bar lengths make the linkage infeasible, whatever the ground length.
fn infeasible(e: Error) -> Error {
    match e {
        Error::InvalidInput(bound) => Error::Infeasible { bound },
        other => other,
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
pub struct RawAngles {
    pub theta1: f64,
    pub theta2: f64,
}

/// Every field a configuration file may set.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub linkage: Option<RawLinkage>,
    pub start_theta: Option<RawAngles>,
    pub start_phi: Option<f64>,
    pub n: Option<usize>,
    pub first: Option<String>,
    pub grid: Option<String>,
    pub qmax: Option<u64>,
    pub tol: Option<f64>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub renormalize: Option<bool>,
    pub resolution: Option<usize>,
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("cannot parse {what}: {e}")))
}

/// Reads `--linkage` as inline JSON or as a file, returning the file's other
/// settings alongside.
pub fn load(arg: &str) -> Result<(RawLinkage, FileConfig), CliError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok((parse_json(trimmed, "--linkage")?, FileConfig::default()));
    }
    let text = fs::read_to_string(arg)
        .map_err(|e| CliError::Usage(format!("cannot read linkage file {arg}: {e}")))?;
    let value: serde_json::Value = parse_json(&text, arg)?;
    if value.get("linkage").is_some() {
        let mut file: FileConfig = parse_json(&text, arg)?;
        let linkage = file.linkage.take().expect("checked above");
        Ok((linkage, file))
    } else {
        Ok((parse_json(&text, arg)?, FileConfig::default()))
    }
}

pub fn parse_start_theta(arg: &str) -> Result<RawAngles, CliError> {
    parse_json(arg, "--start-theta")
}

pub fn parse_pop(s: &str) -> Result<Pop, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "p12" => Ok(Pop::P12),
        "p23" => Ok(Pop::P23),
        _ => Err(CliError::Usage(format!("--first must be p12 or p23, got {s}"))),
    }
}

/// `min:max:count` with `count >= 1`.
pub fn parse_grid(s: &str) -> Result<(f64, f64, usize), CliError> {
    let bad = || CliError::Usage(format!("--grid must look like min:max:count, got {s}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [min, max, count] = parts.as_slice() else {
        return Err(bad());
    };
    let min: f64 = min.trim().parse().map_err(|_| bad())?;
    let max: f64 = max.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if count == 0 || !min.is_finite() || !max.is_finite() || (count > 1 && max <= min) {
        return Err(bad());
    }
    Ok((min, max, count))
}

/// How the orbit start was given.
#[derive(Clone, Copy, Debug)]
pub enum Start {
    Theta(AngleConfig),
    Phi(f64),
}

/// Picks the single start representation; both at once is an error.
pub fn start(theta: Option<RawAngles>, phi: Option<f64>) -> Result<Option<Start>, CliError> {
    match (theta, phi) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give either --start-theta or --start-phi, not both".into(),
        )),
        (Some(a), None) => {
            if !(a.theta1.is_finite() && a.theta2.is_finite()) {
                return Err(CliError::Usage("start angles must be finite".into()));
            }
            Ok(Some(Start::Theta(AngleConfig::new(a.theta1, a.theta2))))
        }
        (None, Some(p)) if !p.is_finite() => Err(CliError::Usage("start phi must be finite".into())),
        (None, Some(p)) => Ok(Some(Start::Phi(p))),
        (None, None) => Ok(None),
    }
}
