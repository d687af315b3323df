//! TOML scenario files.
//!
//! ```toml
//! [domain]
//! lengths = [1.0]
//! cells = [128]
//!
//! [time]
//! final = 1.0
//! steps = 1024
//!
//! [kernel]
//! kind = "gaussian"
//! amplitude = 1.0
//! width = 0.1
//!
//! [nonlinearity]
//! pi_b = 0.5
//! pi_c = 0.0
//! [nonlinearity.beta]
//! 3 = 1.0
//!
//! [forcing]
//! time = { preset = "polynomial", coefficients = [1.0] }
//!
//! [initial.theta]
//! preset = "cosine"
//! amplitude = 1.0
//! modes = [1]
//!
//! [study]
//! steps = [64, 128, 256]
//! reference_steps = 4096
//! ```
//!
//! Every section except `[domain]` and `[time]` is optional. Missing
//! sections default to a zero kernel, `beta(r) = r^3` with `pi = 0`, zero
//! forcing and zero initial data.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::{KernelSpec, PlanChoice};
use crate::presets::{FieldPreset, ForcingSpec};
use crate::resolvent::{Nonlinearity, OddPolynomial, DEFAULT_CHECK_RADIUS};
use crate::scheme::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub domain: DomainSection,
    pub time: TimeSection,
    #[serde(default = "zero_kernel")]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default = "ForcingSpec::zero")]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySection>,
}

fn zero_kernel() -> KernelSpec {
    KernelSpec::Constant { value: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "final")]
    pub t_final: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default)]
    pub convolution: PlanChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    /// Coefficient of `r^p`, keyed by the odd power `p`.
    #[serde(default = "default_beta")]
    pub beta: BTreeMap<String, f64>,
    #[serde(default)]
    pub pi_b: f64,
    #[serde(default)]
    pub pi_c: f64,
    #[serde(default = "default_radius")]
    pub check_radius: f64,
}

fn default_beta() -> BTreeMap<String, f64> {
    BTreeMap::from([("3".to_string(), 1.0)])
}

fn default_radius() -> f64 {
    DEFAULT_CHECK_RADIUS
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        NonlinearitySection {
            beta: default_beta(),
            pi_b: 0.0,
            pi_c: 0.0,
            check_radius: DEFAULT_CHECK_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "zero_preset")]
    pub theta: FieldPreset,
    #[serde(default = "zero_preset")]
    pub phi: FieldPreset,
    #[serde(default = "zero_preset")]
    pub v: FieldPreset,
}

fn zero_preset() -> FieldPreset {
    FieldPreset::Zero
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            theta: FieldPreset::Zero,
            phi: FieldPreset::Zero,
            v: FieldPreset::Zero,
        }
    }
}

/// Step counts for a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub steps: Vec<usize>,
    pub reference_steps: usize,
}

/// A parsed and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub file: ConfigFile,
    pub scenario: Scenario,
}

impl Config {
    pub fn study(&self) -> Option<&StudySection> {
        self.file.study.as_ref()
    }

    /// Canonical TOML text that parses back to the same scenario.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.file)
            .map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the header of `section`, if present.
fn section_line(text: &str, section: &str) -> Option<usize> {
    let header = format!("[{section}");
    text.lines()
        .position(|l| l.trim_start().starts_with(&header))
        .map(|i| i + 1)
}

fn in_section(text: &str, section: &str, e: Error) -> Error {
    let message = match e {
        Error::Config { message, .. } => message,
        other => other.to_string(),
    };
    Error::Config {
        line: section_line(text, section),
        message: format!("[{section}] {message}"),
    }
}

pub fn parse_config_str(text: &str) -> Result<Config> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let scenario = build_scenario(&file, text)?;
    Ok(Config { file, scenario })
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::config(format!("{what} must be finite, got {v}"))),
        None => Ok(()),
    }
}

fn build_nonlinearity(section: &NonlinearitySection) -> Result<Nonlinearity> {
    let mut terms = Vec::with_capacity(section.beta.len());
    for (key, &coeff) in &section.beta {
        let power: u32 = key.trim().parse().map_err(|_| {
            Error::config(format!(
                "beta key {key:?} is not a nonnegative integer power"
            ))
        })?;
        terms.push((power, coeff));
    }
    Nonlinearity::new(
        OddPolynomial::new(&terms)?,
        section.pi_b,
        section.pi_c,
        section.check_radius,
    )
}

fn build_scenario(file: &ConfigFile, text: &str) -> Result<Scenario> {
    let d = &file.domain;
    if let Some(dim) = d.dim {
        if dim != d.lengths.len() || dim != d.cells.len() {
            return Err(in_section(
                text,
                "domain",
                Error::config(format!(
                    "dim = {dim} but {} lengths and {} cell counts given",
                    d.lengths.len(),
                    d.cells.len()
                )),
            ));
        }
    }
    let grid = Grid::new(&d.lengths, &d.cells).map_err(|e| in_section(text, "domain", e))?;

    let t = &file.time;
    if !(t.t_final.is_finite() && t.t_final > 0.0) {
        return Err(in_section(
            text,
            "time",
            Error::config(format!(
                "final time must be positive and finite, got {}",
                t.t_final
            )),
        ));
    }
    if t.steps == 0 {
        return Err(in_section(
            text,
            "time",
            Error::config("steps must be at least 1"),
        ));
    }

    let nl = &file.nonlinearity;
    check_finite(
        &[nl.pi_b, nl.pi_c, nl.check_radius],
        "pi coefficients and check radius",
    )
    .map_err(|e| in_section(text, "nonlinearity", e))?;
    let nonlinearity = build_nonlinearity(nl).map_err(|e| in_section(text, "nonlinearity", e))?;
    nonlinearity
        .admissible_h()
        .check(t.t_final / t.steps as f64)
        .map_err(|e| in_section(text, "time", e))?;

    // builds the kernel once so asymmetric tables are rejected here
    crate::kernel::build_kernel(&file.kernel, &grid, PlanChoice::Direct)
        .map_err(|e| in_section(text, "kernel", e))?;

    let sample = |preset: &FieldPreset, name: &str| {
        preset
            .sample(&grid)
            .map_err(|e| in_section(text, &format!("initial.{name}"), e))
    };
    let scenario = Scenario {
        grid,
        t_final: t.t_final,
        steps: t.steps,
        kernel: file.kernel.clone(),
        plan: file.numerics.convolution,
        nonlinearity: nonlinearity.clone(),
        forcing: file.forcing.clone(),
        theta0: sample(&file.initial.theta, "theta")?,
        phi0: sample(&file.initial.phi, "phi")?,
        v0: sample(&file.initial.v, "v")?,
    };
    crate::presets::Forcing::new(&scenario.forcing, &grid)
        .map_err(|e| in_section(text, "forcing", e))?;
    scenario
        .validate()
        .map_err(|e| in_section(text, "initial", e))?;

    if let Some(study) = &file.study {
        crate::analysis::check_study_steps(&study.steps, study.reference_steps)
            .map_err(|e| in_section(text, "study", e))?;
        for &n in study.steps.iter().chain([&study.reference_steps]) {
            nonlinearity
                .admissible_h()
                .check(t.t_final / n as f64)
                .map_err(|e| in_section(text, "study", e))?;
        }
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "[domain]\nlengths = [1.0]\ncells = [8]\n\n[time]\nfinal = 1.0\nsteps = 4\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        let s = &c.scenario;
        assert_eq!(s.grid.cells(), &[8]);
        assert_eq!(s.steps, 4);
        assert_eq!(s.kernel, KernelSpec::Constant { value: 0.0 });
        assert_eq!(s.nonlinearity, Nonlinearity::cubic(1.0, 0.0, 0.0).unwrap());
        assert_eq!(s.theta0.linf_norm(), 0.0);
        assert!(c.study().is_none());
    }

    #[test]
    fn admissibility_error_names_the_bound() {
        let text =
            format!("{MINIMAL}\n[nonlinearity]\npi_b = 2.0\n").replace("steps = 4", "steps = 2");
        let err = parse_config_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("min{1, 1/|pi'|}"), "{msg}");
        assert!(msg.contains("line 5"), "{msg}");
        let ok = text.replace("steps = 2", "steps = 3");
        assert!(parse_config_str(&ok).is_ok());
    }

    #[test]
    fn even_power_is_rejected() {
        let text = format!("{MINIMAL}\n[nonlinearity.beta]\n2 = 1.0\n");
        let msg = parse_config_str(&text).unwrap_err().to_string();
        assert!(msg.contains("[nonlinearity]"), "{msg}");
        assert!(msg.contains("even"), "{msg}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = MINIMAL.replace("steps = 4", "steps = 4\nstep_size = 0.1");
        match parse_config_str(&text).unwrap_err() {
            Error::Config { line, message } => {
                assert_eq!(line, Some(8));
                assert!(message.contains("step_size"), "{message}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let text = MINIMAL.replace("final = 1.0", "final = nan");
        assert!(parse_config_str(&text).is_err());
        let text = format!("{MINIMAL}\n[nonlinearity]\npi_c = inf\n");
        assert!(parse_config_str(&text).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text = r#"
[domain]
lengths = [1.0, 2.0]
cells = [6, 4]

[time]
final = 0.5
steps = 3

[kernel]
kind = "gaussian"
amplitude = 0.7
width = 0.15

[numerics]
convolution = "fft"

[nonlinearity]
pi_b = -0.25
pi_c = 0.1
[nonlinearity.beta]
3 = 1.0
5 = 0.125

[forcing]
space = { preset = "cosine", amplitude = 1.0, modes = [1, 0] }
time = { preset = "cosine", amplitude = 2.0, omega = 3.0 }

[initial.theta]
preset = "gaussian"
amplitude = 0.3
center = [0.5, 1.0]
width = 0.2

[initial.phi]
preset = "constant"
value = 0.1

[study]
steps = [3, 6]
reference_steps = 24
"#;
        let first = parse_config_str(text).unwrap();
        let echo = first.to_toml().unwrap();
        let second = parse_config_str(&echo).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn study_steps_must_divide_reference() {
        let text = format!("{MINIMAL}\n[study]\nsteps = [4, 6]\nreference_steps = 16\n");
        assert!(parse_config_str(&text).is_err());
    }
}
