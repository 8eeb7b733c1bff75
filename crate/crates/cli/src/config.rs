//! Run configuration: a compiled-in preset plus scalar overrides from a flat
//! `key = value` file, `--set` pairs and explicit flags, applied in that order.

use std::path::PathBuf;

use ocfem::presets::{preset, PRESET_NAMES};
use ocfem::{NewtonOptions, OcpOptions, ProblemSpec};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: String,
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub level: u32,
    pub levels: (u32, u32),
    pub tol: f64,
    pub newton_tol: f64,
    pub linear_tol: f64,
    pub max_outer: usize,
    pub out: Option<PathBuf>,
    pub emit_fields: bool,
}

pub const KEYS: [&str; 11] =
    ["nu", "alpha", "beta", "level", "levels", "tol", "newton_tol", "linear_tol", "max_outer", "out", "emit_fields"];

impl RunConfig {
    pub fn new(preset_name: &str) -> Result<Self, CliError> {
        if preset(preset_name).is_none() {
            return Err(CliError::UnknownPreset(preset_name.to_string()));
        }
        let ocp = OcpOptions::default();
        Ok(Self {
            preset: preset_name.to_string(),
            nu: None,
            alpha: None,
            beta: None,
            level: 4,
            levels: (3, 8),
            tol: ocp.tol,
            newton_tol: ocp.newton.tol,
            linear_tol: ocp.newton.linear_tol,
            max_outer: ocp.max_outer,
            out: None,
            emit_fields: true,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = || CliError::Config(format!("invalid value `{value}` for `{key}`"));
        let real = || value.parse::<f64>().ok().filter(|v| !v.is_nan()).ok_or_else(bad);
        match key {
            "nu" => self.nu = Some(real()?),
            "alpha" => self.alpha = Some(real()?),
            "beta" => self.beta = Some(real()?),
            "level" => self.level = value.parse().map_err(|_| bad())?,
            "levels" => self.levels = parse_levels(value)?,
            "tol" => self.tol = real()?,
            "newton_tol" => self.newton_tol = real()?,
            "linear_tol" => self.linear_tol = real()?,
            "max_outer" => self.max_outer = value.parse().map_err(|_| bad())?,
            "out" => self.out = Some(PathBuf::from(value)),
            "emit_fields" => self.emit_fields = value.parse().map_err(|_| bad())?,
            _ => return Err(CliError::Config(format!("unknown key `{key}` (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Applies every `key = value` line; blank lines and `#` comments are
    /// skipped.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", n + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| CliError::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k.trim(), v.trim())
    }

    /// The preset with ν, α and β overridden.
    pub fn problem(&self) -> Result<ProblemSpec, CliError> {
        let mut spec = preset(&self.preset).ok_or_else(|| CliError::UnknownPreset(self.preset.clone()))?;
        if let Some(nu) = self.nu {
            spec.nu = nu;
        }
        if let Some(a) = self.alpha {
            spec.bounds.lower = a;
        }
        if let Some(b) = self.beta {
            spec.bounds.upper = b;
        }
        Ok(spec)
    }

    pub fn ocp_options(&self) -> OcpOptions {
        OcpOptions {
            tol: self.tol,
            max_outer: self.max_outer,
            newton: NewtonOptions { tol: self.newton_tol, linear_tol: self.linear_tol, ..NewtonOptions::default() },
            ..OcpOptions::default()
        }
    }
}

/// Parses `A..B` with `A < B`.
pub fn parse_levels(text: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Config(format!("levels must look like A..B with A < B, got `{text}`"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn preset_list() -> String {
    PRESET_NAMES.join(", ")
}

/// Worker cap from `OCFEM_THREADS`, else the available parallelism.
pub fn thread_cap(env: Option<&str>) -> usize {
    env.and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}
