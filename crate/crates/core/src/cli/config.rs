use std::fmt::Write as _;
use std::io::BufRead;
use std::path::PathBuf;

use serde::Serialize;

use crate::adaptivity::{Diagnostics, LoopConfig, MarkingParams, RefinementMode};
use crate::error::{Error, Result};
use crate::problem::quadrature::DEFAULT_DEGREE;
use crate::problem::{problem_by_key, FluxRule, Quadrature};

/// Fully resolved settings of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub mode: RefinementMode,
    pub theta: f64,
    pub theta_prime: f64,
    pub max_elements: usize,
    pub max_iterations: usize,
    pub quad_degree: usize,
    pub flux_rule: FluxRule,
    pub initial_subdivisions: usize,
    pub out: PathBuf,
    pub diagnostics: Diagnostics,
    pub threads: usize,
    pub timing: bool,
    pub write_mesh: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let lc = LoopConfig::default();
        Self {
            problem: String::new(),
            mode: lc.mode,
            theta: lc.marking.theta,
            theta_prime: lc.marking.theta_prime,
            max_elements: lc.max_elements,
            max_iterations: lc.max_iterations,
            quad_degree: DEFAULT_DEGREE,
            flux_rule: FluxRule::default(),
            initial_subdivisions: lc.initial_subdivisions,
            out: PathBuf::from("out"),
            diagnostics: Diagnostics::default(),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timing: true,
            write_mesh: false,
        }
    }
}

/// Settings given on the command line or in a config file; unset fields
/// keep the value underneath.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigOverrides {
    pub problem: Option<String>,
    pub mode: Option<RefinementMode>,
    pub theta: Option<f64>,
    pub theta_prime: Option<f64>,
    pub max_elements: Option<usize>,
    pub max_iterations: Option<usize>,
    pub quad_degree: Option<usize>,
    pub flux_rule: Option<FluxRule>,
    pub initial_subdivisions: Option<usize>,
    pub out: Option<PathBuf>,
    pub diagnostics: Option<Diagnostics>,
    pub threads: Option<usize>,
    pub timing: Option<bool>,
    pub write_mesh: Option<bool>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse {key} = '{value}'")))
}

/// `orthogonality,fem_comparison`, `all` or `none`.
pub fn parse_diagnostics<S: AsRef<str>>(names: &[S]) -> Result<Diagnostics> {
    let mut d = Diagnostics::default();
    for name in names
        .iter()
        .flat_map(|n| n.as_ref().split(','))
        .map(str::trim)
    {
        if name != "none" && !name.is_empty() {
            d.enable(name)?;
        }
    }
    Ok(d)
}

impl ConfigOverrides {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_reader<R: BufRead>(input: R) -> Result<Self> {
        let mut o = Self::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_error = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_error(format!("expected key = value, found '{line}'")))?;
            o.set(key.trim(), value.trim())
                .map_err(|e| parse_error(e.to_string()))?;
        }
        Ok(o)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "problem" => self.problem = Some(value.to_string()),
            "mode" => self.mode = Some(value.parse()?),
            "theta" => self.theta = Some(parse_value(key, value)?),
            "theta_prime" => self.theta_prime = Some(parse_value(key, value)?),
            "max_elements" => self.max_elements = Some(parse_value(key, value)?),
            "max_iterations" => self.max_iterations = Some(parse_value(key, value)?),
            "quad_degree" => self.quad_degree = Some(parse_value(key, value)?),
            "flux_rule" => self.flux_rule = Some(value.parse()?),
            "initial_subdivisions" => self.initial_subdivisions = Some(parse_value(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "diagnostics" => self.diagnostics = Some(parse_diagnostics(&[value])?),
            "threads" => self.threads = Some(parse_value(key, value)?),
            "timing" => self.timing = Some(parse_value(key, value)?),
            "write_mesh" => self.write_mesh = Some(parse_value(key, value)?),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown config key '{key}'"
                )))
            }
        }
        Ok(())
    }

    /// Applies `self` on top of `base`.
    pub fn apply(self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            problem: self.problem.unwrap_or(base.problem),
            mode: self.mode.unwrap_or(base.mode),
            theta: self.theta.unwrap_or(base.theta),
            theta_prime: self.theta_prime.unwrap_or(base.theta_prime),
            max_elements: self.max_elements.unwrap_or(base.max_elements),
            max_iterations: self.max_iterations.unwrap_or(base.max_iterations),
            quad_degree: self.quad_degree.unwrap_or(base.quad_degree),
            flux_rule: self.flux_rule.unwrap_or(base.flux_rule),
            initial_subdivisions: self
                .initial_subdivisions
                .unwrap_or(base.initial_subdivisions),
            out: self.out.unwrap_or(base.out),
            diagnostics: self.diagnostics.unwrap_or(base.diagnostics),
            threads: self.threads.unwrap_or(base.threads),
            timing: self.timing.unwrap_or(base.timing),
            write_mesh: self.write_mesh.unwrap_or(base.write_mesh),
        }
    }
}

impl ExperimentConfig {
    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        if self.problem.is_empty() {
            return Err(Error::InvalidParameter(
                "no problem given (--problem)".into(),
            ));
        }
        problem_by_key(&self.problem)?;
        MarkingParams::new(self.theta, self.theta_prime)?;
        Quadrature::new(self.quad_degree)?;
        if self.max_elements == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_elements and max_iterations must be positive".into(),
            ));
        }
        if self.threads == 0 {
            return Err(Error::InvalidParameter("threads must be positive".into()));
        }
        if self.initial_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "initial_subdivisions must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn loop_config(&self) -> Result<LoopConfig> {
        Ok(LoopConfig {
            marking: MarkingParams::new(self.theta, self.theta_prime)?,
            mode: self.mode,
            max_elements: self.max_elements,
            max_iterations: self.max_iterations,
            quadrature: Quadrature::new(self.quad_degree)?.with_flux(self.flux_rule),
            initial_subdivisions: self.initial_subdivisions,
            diagnostics: self.diagnostics,
            region: crate::adaptivity::benchmark_region(&self.problem),
            keep_snapshots: false,
            record_timing: self.timing,
        })
    }

    /// The config in the `key = value` form read by [`ConfigOverrides::from_reader`].
    pub fn to_key_values(&self) -> String {
        let d = &self.diagnostics;
        let on: Vec<&str> = Diagnostics::NAMES
            .iter()
            .zip([
                d.orthogonality,
                d.defect_identity,
                d.quasi_orthogonality,
                d.fem_comparison,
            ])
            .filter_map(|(n, on)| on.then_some(*n))
            .collect();
        let flux = match self.flux_rule {
            FluxRule::Midpoint => "midpoint",
            FluxRule::Gauss => "gauss",
        };
        let mut s = String::new();
        let _ = writeln!(s, "problem = {}", self.problem);
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "theta = {}", self.theta);
        let _ = writeln!(s, "theta_prime = {}", self.theta_prime);
        let _ = writeln!(s, "max_elements = {}", self.max_elements);
        let _ = writeln!(s, "max_iterations = {}", self.max_iterations);
        let _ = writeln!(s, "quad_degree = {}", self.quad_degree);
        let _ = writeln!(s, "flux_rule = {flux}");
        let _ = writeln!(s, "initial_subdivisions = {}", self.initial_subdivisions);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(
            s,
            "diagnostics = {}",
            if on.is_empty() {
                "none".to_string()
            } else {
                on.join(",")
            }
        );
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "timing = {}", self.timing);
        let _ = writeln!(s, "write_mesh = {}", self.write_mesh);
        s
    }
}
