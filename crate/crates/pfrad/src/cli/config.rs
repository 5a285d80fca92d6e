//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PhysicalParams;
use crate::resolvent::PhotonSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Whether grid bounds are times or multiples of 1/λ_e.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridUnits {
    Time,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub units: GridUnits,
}

impl GridSpec {
    /// Grid times for runaway rate `lambda_e`.
    pub fn times(&self, lambda_e: f64) -> Vec<f64> {
        let scale = match self.units {
            GridUnits::Time => 1.0,
            GridUnits::Lambda => 1.0 / lambda_e,
        };
        let n = self.points;
        (0..n)
            .map(|k| {
                let f = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
                let v = match self.spacing {
                    Spacing::Linear => self.start + f * (self.stop - self.start),
                    Spacing::Log => self.start * (self.stop / self.start).powf(f),
                };
                v * scale
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative closed-form vs oracle gap for survival rows and the Stone check.
    pub oracle: f64,
    /// Relative agreement of the two spectral representations.
    pub double_form: f64,
    pub overlap: f64,
    pub cut: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { oracle: 1e-5, double_form: 1e-4, overlap: 1e-8, cut: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub physical: PhysicalParams,
    pub photon: Option<PhotonSpec>,
    /// Polarization ζ of the initial oscillator level.
    pub level: [Complex64; 3],
    pub grid: GridSpec,
    pub output: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            physical: PhysicalParams { e: 0.3, m: 1.0, c: 1.0, omega0: 1.0, hbar: 1.0 },
            photon: None,
            level: [zero, Complex64::new(1.0, 0.0), zero],
            grid: GridSpec { start: 0.1, stop: 100.0, points: 100, spacing: Spacing::Log, units: GridUnits::Lambda },
            output: None,
            tolerances: Tolerances::default(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| config_error(format!("{key}: expected a number, got '{v}'")))
}

fn vector3<T>(key: &str, v: &str, parse: impl Fn(&str) -> Option<T>) -> Result<[T; 3]> {
    let parts: Vec<T> = v
        .split(',')
        .map(|s| parse(s.trim()).ok_or_else(|| config_error(format!("{key}: cannot parse entry '{}'", s.trim()))))
        .collect::<Result<_>>()?;
    parts.try_into().map_err(|_| config_error(format!("{key}: expected three comma-separated entries")))
}

fn complex3(key: &str, v: &str) -> Result<[Complex64; 3]> {
    vector3(key, v, |s| s.parse::<Complex64>().ok())
}

/// Parses `section.key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| config_error(format!("line {}: expected key = value", lineno + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if entries.insert(k.clone(), v).is_some() {
            return Err(config_error(format!("line {}: duplicate key '{k}'", lineno + 1)));
        }
    }

    let mut cfg = RunConfig::default();
    let mut photon_nu = None;
    let mut photon_eps = 0.01;
    let mut photon_k = [0.0, 0.0, 1.0];
    let mut photon_zeta = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut photon_keys = false;
    for (k, v) in &entries {
        let key = k.as_str();
        match key {
            "physical.e" => cfg.physical.e = number(key, v)?,
            "physical.m" => cfg.physical.m = number(key, v)?,
            "physical.c" => cfg.physical.c = number(key, v)?,
            "physical.omega0" => cfg.physical.omega0 = number(key, v)?,
            "physical.hbar" => cfg.physical.hbar = number(key, v)?,
            "photon.nu" => photon_nu = Some(number(key, v)?),
            "photon.eps" => {
                photon_eps = number(key, v)?;
                photon_keys = true;
            }
            "photon.k" => {
                photon_k = vector3(key, v, |s| s.parse::<f64>().ok())?;
                photon_keys = true;
            }
            "photon.zeta" => {
                photon_zeta = complex3(key, v)?;
                photon_keys = true;
            }
            "level.zeta" => cfg.level = complex3(key, v)?,
            "grid.start" => cfg.grid.start = number(key, v)?,
            "grid.stop" => cfg.grid.stop = number(key, v)?,
            "grid.points" => {
                cfg.grid.points =
                    v.parse().map_err(|_| config_error(format!("{key}: expected a positive integer, got '{v}'")))?
            }
            "grid.spacing" => {
                cfg.grid.spacing = match v.as_str() {
                    "linear" => Spacing::Linear,
                    "log" => Spacing::Log,
                    _ => return Err(config_error(format!("{key}: expected linear or log, got '{v}'"))),
                }
            }
            "grid.units" => {
                cfg.grid.units = match v.as_str() {
                    "time" => GridUnits::Time,
                    "lambda" => GridUnits::Lambda,
                    _ => return Err(config_error(format!("{key}: expected time or lambda, got '{v}'"))),
                }
            }
            "output.path" => cfg.output = Some(PathBuf::from(v)),
            "tolerance.oracle" => cfg.tolerances.oracle = number(key, v)?,
            "tolerance.double_form" => cfg.tolerances.double_form = number(key, v)?,
            "tolerance.overlap" => cfg.tolerances.overlap = number(key, v)?,
            "tolerance.cut" => cfg.tolerances.cut = number(key, v)?,
            _ => return Err(config_error(format!("unknown key '{key}'"))),
        }
    }
    match photon_nu {
        Some(nu) => {
            cfg.photon = Some(
                PhotonSpec::new(nu, photon_eps, photon_k, photon_zeta)
                    .map_err(|e| config_error(format!("photon block: {e}")))?,
            )
        }
        None if photon_keys => return Err(config_error("photon block needs photon.nu")),
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        parse_config(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate().map_err(|e| config_error(format!("physical block: {e}")))?;
        let g = &self.grid;
        if g.points == 0 {
            return Err(config_error("grid.points must be positive"));
        }
        if !(g.start.is_finite() && g.stop.is_finite()) || g.start == 0.0 || g.stop == 0.0 {
            return Err(config_error("grid bounds must be finite and nonzero"));
        }
        if g.points > 1 && !(g.stop > g.start) {
            return Err(config_error("grid.stop must exceed grid.start"));
        }
        if g.spacing == Spacing::Linear && g.points > 1 && g.start < 0.0 && g.stop > 0.0 {
            let step = (g.stop - g.start) / (g.points - 1) as f64;
            let k = -g.start / step;
            if (k - k.round()).abs() < 1e-9 {
                return Err(config_error("linear grid would contain t = 0"));
            }
        }
        if g.spacing == Spacing::Log && !(g.start > 0.0 && g.stop > 0.0) {
            return Err(config_error("log grid needs positive bounds"));
        }
        let t = &self.tolerances;
        if [t.oracle, t.double_form, t.overlap, t.cut].iter().any(|v| !(*v > 0.0)) {
            return Err(config_error("tolerances must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg =
            parse_config("# run\nphysical.e = 0.1\ngrid.points=5 # short\nphoton.nu=1.0\nphoton.zeta=0,1,0\n").unwrap();
        assert_eq!(cfg.physical.e, 0.1);
        assert_eq!(cfg.grid.points, 5);
        let p = cfg.photon.unwrap();
        assert_eq!(p.eps, 0.01);
        assert_eq!(p.zeta[1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn complex_entries() {
        let cfg = parse_config("level.zeta = 1+2i, 0, -0.5i").unwrap();
        assert_eq!(cfg.level[0], Complex64::new(1.0, 2.0));
        assert_eq!(cfg.level[2], Complex64::new(0.0, -0.5));
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "physical.e 0.3",
            "physical.e = abc",
            "physical.q = 1",
            "physical.e = 0.3\nphysical.e = 0.2",
            "photon.eps = 0.1",
            "grid.spacing = cubic",
            "grid.start = 0",
            "grid.spacing = linear\ngrid.start = -1\ngrid.stop = 1\ngrid.points = 3",
            "tolerance.oracle = -1",
            "physical.m = -1",
            "photon.nu = 1\nphoton.k = 1,1,0",
        ] {
            assert!(matches!(parse_config(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn log_grid_in_lambda_units() {
        let g = GridSpec { start: 0.1, stop: 100.0, points: 4, spacing: Spacing::Log, units: GridUnits::Lambda };
        let t = g.times(10.0);
        assert!((t[0] - 0.01).abs() < 1e-15 && (t[3] - 10.0).abs() < 1e-12);
        assert!((t[1] - 0.1).abs() < 1e-14);
    }
}
