//! Run configuration: a flat `key = value` file with `#` comments, or the same
//! keys as a JSON object. Every key has an explicit default.

use std::fmt::Write as _;
use std::path::PathBuf;

use gravfringe::action_engine::{CouplingForm, IntegralOptions, RelKernelPlacement};
use gravfringe::format_float;
use gravfringe::trap_modes::TrapParams;
use gravfringe::visibility::{ExperimentConfig, DEFAULT_DETECTOR_PHASE};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(format!("unknown format '{s}' (expected csv, json or svg)")),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

/// Which wave packets make up the density run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Components {
    /// Equal superposition of `+alpha` and `-alpha`.
    Pair,
    /// The `+alpha` packet alone.
    Single,
}

/// Oscillation frequency used to schedule sampling times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Corrected,
    Uncorrected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub omega: f64,
    pub kappa: f64,
    pub n_particles: u32,
    pub alpha: f64,
    pub crossing_count: usize,
    pub detector_phase: f64,
    pub f_as_printed: bool,
    pub rel_kernel_outer: bool,
    pub quad_tol: f64,
    pub tail_tol: f64,
    pub grid_points: usize,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub density_components: Components,
    pub density_sampling: Sampling,
    pub density_crossings: Vec<usize>,
    pub density_times: Vec<f64>,
    pub freq_periods: usize,
    pub sweep_omegas: Vec<f64>,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub threads: usize,
    pub normalize: bool,
    pub verify: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega: 5e-4,
            kappa: 1e-3,
            n_particles: 1,
            alpha: 5.0,
            crossing_count: 15,
            detector_phase: DEFAULT_DETECTOR_PHASE,
            f_as_printed: false,
            rel_kernel_outer: false,
            quad_tol: 1e-10,
            tail_tol: 1e-10,
            grid_points: 2048,
            grid_min: None,
            grid_max: None,
            density_components: Components::Pair,
            density_sampling: Sampling::Corrected,
            density_crossings: vec![0],
            density_times: Vec::new(),
            freq_periods: 10,
            sweep_omegas: vec![1e-3, 1e-4, 1e-5, 1e-6],
            out_dir: PathBuf::from("out"),
            formats: vec![Format::Csv],
            threads: 0,
            normalize: false,
            verify: false,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("{key}: '{v}' is not a number"))?;
    if !x.is_finite() {
        return Err(format!("{key}: '{v}' is not finite"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, String> {
    v.parse()
        .map_err(|_| format!("{key}: '{v}' is not a non-negative integer"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("{key}: '{v}' is not true or false")),
    }
}

fn parse_list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn parse_bound(key: &str, v: &str) -> Result<Option<f64>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_f64(key, v).map(Some)
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn join_floats(items: &[f64]) -> String {
    items.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "omega" => self.omega = parse_f64(key, v)?,
            "kappa" => self.kappa = parse_f64(key, v)?,
            "n_particles" => {
                self.n_particles = v
                    .parse()
                    .map_err(|_| format!("{key}: '{v}' is not a positive integer"))?
            }
            "alpha" => self.alpha = parse_f64(key, v)?,
            "crossing_count" => self.crossing_count = parse_usize(key, v)?,
            "detector_phase" => self.detector_phase = parse_f64(key, v)?,
            "f_as_printed" => self.f_as_printed = parse_bool(key, v)?,
            "rel_kernel_outer" => self.rel_kernel_outer = parse_bool(key, v)?,
            "quad_tol" => self.quad_tol = parse_f64(key, v)?,
            "tail_tol" => self.tail_tol = parse_f64(key, v)?,
            "grid_points" => self.grid_points = parse_usize(key, v)?,
            "grid_min" => self.grid_min = parse_bound(key, v)?,
            "grid_max" => self.grid_max = parse_bound(key, v)?,
            "density_components" => {
                self.density_components = match v {
                    "pair" => Components::Pair,
                    "single" => Components::Single,
                    _ => return Err(format!("{key}: '{v}' is not pair or single")),
                }
            }
            "density_sampling" => {
                self.density_sampling = match v {
                    "corrected" => Sampling::Corrected,
                    "uncorrected" => Sampling::Uncorrected,
                    _ => return Err(format!("{key}: '{v}' is not corrected or uncorrected")),
                }
            }
            "density_crossings" => self.density_crossings = parse_list(v, |s| parse_usize(key, s))?,
            "density_times" => self.density_times = parse_list(v, |s| parse_f64(key, s))?,
            "freq_periods" => self.freq_periods = parse_usize(key, v)?,
            "sweep_omegas" => self.sweep_omegas = parse_list(v, |s| parse_f64(key, s))?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "formats" => self.formats = parse_list(v, Format::parse)?,
            "threads" => self.threads = parse_usize(key, v)?,
            "normalize" => self.normalize = parse_bool(key, v)?,
            "verify" => self.verify = parse_bool(key, v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Parse either format; text starting with `{` is read as JSON.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
            let object = value
                .as_object()
                .ok_or_else(|| CliError::Config("JSON configuration must be an object".into()))?;
            for (key, v) in object {
                let text = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::Bool(b) => b.to_string(),
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|i| match i {
                            serde_json::Value::String(s) => s.clone(),
                            other => other.to_string(),
                        })
                        .collect::<Vec<_>>()
                        .join(","),
                    serde_json::Value::Null => "auto".into(),
                    serde_json::Value::Object(_) => {
                        return Err(CliError::Config(format!("{key}: nested objects are not supported")))
                    }
                };
                config.set(key, &text).map_err(CliError::Config)?;
            }
        } else {
            for (number, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", number + 1)))?;
                config
                    .set(key.trim(), v.trim())
                    .map_err(|e| CliError::Config(format!("line {}: {e}", number + 1)))?;
            }
        }
        Ok(config)
    }

    /// Canonical text form; parsing it back gives an identical configuration.
    pub fn render(&self) -> String {
        let bound = |b: Option<f64>| b.map_or("auto".to_string(), format_float);
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("omega", format_float(self.omega));
        line("kappa", format_float(self.kappa));
        line("n_particles", self.n_particles.to_string());
        line("alpha", format_float(self.alpha));
        line("crossing_count", self.crossing_count.to_string());
        line("detector_phase", format_float(self.detector_phase));
        line("f_as_printed", self.f_as_printed.to_string());
        line("rel_kernel_outer", self.rel_kernel_outer.to_string());
        line("quad_tol", format_float(self.quad_tol));
        line("tail_tol", format_float(self.tail_tol));
        line("grid_points", self.grid_points.to_string());
        line("grid_min", bound(self.grid_min));
        line("grid_max", bound(self.grid_max));
        line(
            "density_components",
            match self.density_components {
                Components::Pair => "pair",
                Components::Single => "single",
            }
            .into(),
        );
        line(
            "density_sampling",
            match self.density_sampling {
                Sampling::Corrected => "corrected",
                Sampling::Uncorrected => "uncorrected",
            }
            .into(),
        );
        line("density_crossings", join(&self.density_crossings));
        line("density_times", join_floats(&self.density_times));
        line("freq_periods", self.freq_periods.to_string());
        line("sweep_omegas", join_floats(&self.sweep_omegas));
        line("out_dir", self.out_dir.display().to_string());
        line(
            "formats",
            self.formats.iter().map(|f| f.name()).collect::<Vec<_>>().join(","),
        );
        line("threads", self.threads.to_string());
        line("normalize", self.normalize.to_string());
        line("verify", self.verify.to_string());
        s
    }

    /// SHA-256 of the canonical text, in hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.render().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Checks that do not depend on which command runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.formats.is_empty() {
            return bad("formats must name at least one of csv, json, svg".into());
        }
        if !(self.quad_tol > 0.0 && self.quad_tol <= 1e-8) {
            return bad(format!("quad_tol must lie in (0, 1e-8], got {}", self.quad_tol));
        }
        if self.grid_points < 16 {
            return bad(format!("grid_points must be at least 16, got {}", self.grid_points));
        }
        if let (Some(lo), Some(hi)) = (self.grid_min, self.grid_max) {
            if lo >= hi {
                return bad(format!("grid_min {lo} must be below grid_max {hi}"));
            }
        }
        if self.grid_min.is_some() != self.grid_max.is_some() {
            return bad("grid_min and grid_max must both be set or both be auto".into());
        }
        if self.alpha < 0.0 {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        // The shifted oscillation frequency ω - ω²α² must stay positive.
        if self.omega * self.alpha * self.alpha >= 1.0 {
            return bad(format!(
                "omega * alpha^2 = {} must be below 1 for a positive oscillation frequency",
                self.omega * self.alpha * self.alpha
            ));
        }
        self.trap()?;
        Ok(())
    }

    pub fn trap(&self) -> Result<TrapParams, CliError> {
        Ok(TrapParams::new(self.omega, self.kappa, self.n_particles)?)
    }

    pub fn integral_options(&self) -> IntegralOptions {
        IntegralOptions {
            coupling: if self.f_as_printed {
                CouplingForm::AsPrinted
            } else {
                CouplingForm::Symmetric
            },
            rel_kernel: if self.rel_kernel_outer {
                RelKernelPlacement::Outer
            } else {
                RelKernelPlacement::Inner
            },
            tol: self.quad_tol,
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut e = ExperimentConfig::new(self.trap()?, self.alpha, self.crossing_count)?;
        e.detector_phase = self.detector_phase;
        e.integrals = self.integral_options();
        e.validate()?;
        Ok(e)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn edited_config_round_trips() {
        let text = "omega = 2.5e-3 # trap\nalpha=1.4142135623730951\n\nformats = csv, svg\ngrid_min = -10\ngrid_max = 10\ndensity_times = 1.5,2.25\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.omega, 2.5e-3);
        assert_eq!(c.formats, vec![Format::Csv, Format::Svg]);
        assert_eq!(c.density_times, vec![1.5, 2.25]);
        assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn json_accepted() {
        let c =
            RunConfig::parse(r#"{"omega": 0.001, "verify": true, "sweep_omegas": [0.001, 0.0001], "grid_min": null}"#)
                .unwrap();
        assert_eq!(c.omega, 1e-3);
        assert!(c.verify);
        assert_eq!(c.sweep_omegas, vec![1e-3, 1e-4]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::parse("omgea = 1e-3"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse(r#"{"colour": 1}"#), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("just a line"), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.alpha = 4.0;
        assert_eq!(a.hash(), RunConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
