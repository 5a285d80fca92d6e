//! The poles, survival and transition workflows.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::amplitudes::{
    survival_terms, transition_constants, transition_eps, transition_limit_point, SurvivalBreakdown,
    TransitionBreakdown,
};
use crate::error::{Error, Result};
use crate::model::{lambda_cubic_residual, perturbative_resonances, PhysicalParams, Setup, SpectralData};
use crate::oracle::{stone_survival, stone_transition};

/// Full double precision, 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

/// CSV text plus row bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<(Vec<f64>, String)>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { header: columns.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push_str(",status\n");
        for (values, status) in &self.rows {
            let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
            out.push_str(&cells.join(","));
            out.push(',');
            out.push_str(status);
            out.push('\n');
        }
        out
    }

    /// Rows whose computation failed.
    pub fn numerical_failures(&self) -> usize {
        self.rows.iter().filter(|r| r.1.starts_with("failed")).count()
    }

    /// Rows whose oracle comparison exceeded its tolerance.
    pub fn oracle_failures(&self) -> usize {
        self.rows.iter().filter(|r| r.1 == "oracle-gap").count()
    }
}

fn status_of(e: &Error) -> String {
    let kind = match e {
        Error::Domain(_) => "domain",
        Error::Pole { .. } => "pole",
        Error::Cut { .. } => "cut",
        Error::Branch(_) => "branch",
        Error::Accuracy { .. } => "accuracy",
        Error::Conditioning(_) => "conditioning",
        Error::Size(_) => "size",
        Error::Singular(_) => "singular",
        Error::Construction(_) => "construction",
        Error::Config(_) => "config",
    };
    format!("failed-{kind}")
}

fn push_c(row: &mut Vec<f64>, z: Complex64) {
    row.push(z.re);
    row.push(z.im);
}

/// Spectral summary with the perturbative values and their discrepancy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolesReport {
    pub params: PhysicalParams,
    /// Absent in the uncoupled limit e = 0, where λ_e is infinite.
    pub lambda_e: Option<f64>,
    pub lambda_cubic_residual: Option<f64>,
    pub z_plus: Complex64,
    pub z_minus: Complex64,
    pub omega_e: f64,
    pub gamma_e: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa: f64,
    pub kappa_literature: f64,
    pub projection_weight: f64,
    pub omega_e_literature: f64,
    pub gamma_e_literature: f64,
    pub discrepancy: Discrepancy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discrepancy {
    /// γ_e(literature)/γ_e; NaN at e = 0.
    pub gamma_ratio: f64,
    pub omega_shift: f64,
    pub omega_shift_literature: f64,
    /// (ω_e − ω₀)(literature)/(ω_e − ω₀); NaN at e = 0.
    pub omega_shift_ratio: f64,
    /// κ(literature)/κ.
    pub kappa_ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::NAN
    } else {
        a / b
    }
}

pub fn cmd_poles(cfg: &RunConfig) -> Result<PolesReport> {
    let p = cfg.physical;
    let (omega_lit, gamma_lit) = perturbative_resonances(&p);
    let (lambda_e, residual, s) = if p.e == 0.0 {
        let kappa0 = 4.0 * std::f64::consts::PI * p.c * p.c / (p.m * p.omega0 * p.omega0);
        let s = SpectralData {
            lambda_e: f64::INFINITY,
            z_plus: Complex64::new(p.omega0, 0.0),
            z_minus: Complex64::new(-p.omega0, 0.0),
            omega_e: p.omega0,
            gamma_e: 0.0,
            kappa0,
            kappa1: 0.0,
            kappa2: 0.0,
            kappa: kappa0.sqrt(),
            kappa_literature: kappa0.sqrt(),
        };
        (None, None, s)
    } else {
        let s = Setup::new(p)?.spectral;
        (Some(s.lambda_e), Some(lambda_cubic_residual(&p, s.lambda_e)), s)
    };
    let projection_weight = if p.e == 0.0 { 0.0 } else { s.projection_weight() };
    let shift = s.omega_e - p.omega0;
    let shift_lit = omega_lit - p.omega0;
    Ok(PolesReport {
        params: p,
        lambda_e,
        lambda_cubic_residual: residual,
        z_plus: s.z_plus,
        z_minus: s.z_minus,
        omega_e: s.omega_e,
        gamma_e: s.gamma_e,
        kappa0: s.kappa0,
        kappa1: s.kappa1,
        kappa2: s.kappa2,
        kappa: s.kappa,
        kappa_literature: s.kappa_literature,
        projection_weight,
        omega_e_literature: omega_lit,
        gamma_e_literature: gamma_lit,
        discrepancy: Discrepancy {
            gamma_ratio: ratio(gamma_lit, s.gamma_e),
            omega_shift: shift,
            omega_shift_literature: shift_lit,
            omega_shift_ratio: ratio(shift_lit, shift),
            kappa_ratio: s.kappa_literature / s.kappa,
        },
    })
}

const SURVIVAL_COLUMNS: &[&str] = &[
    "t",
    "re_s",
    "im_s",
    "abs_s",
    "re_s_hat",
    "im_s_hat",
    "re_runaway",
    "im_runaway",
    "re_oscillatory",
    "im_oscillatory",
    "re_j1",
    "im_j1",
    "re_j2",
    "im_j2",
    "re_j2_decomposed",
    "im_j2_decomposed",
    "error",
];

fn survival_row(b: &SurvivalBreakdown) -> Vec<f64> {
    let mut row = vec![b.t];
    push_c(&mut row, b.s);
    row.push(b.s.norm());
    push_c(&mut row, b.s_hat);
    for z in [b.resonance_runaway, b.resonance_oscillatory, b.j1, b.j2, b.j2_decomposed] {
        push_c(&mut row, z);
    }
    row.push(b.error);
    row
}

/// One row per grid time; each row is a single independent library call.
pub fn cmd_survival(cfg: &RunConfig, setup: &Setup, verify: bool) -> Table {
    let mut cols = SURVIVAL_COLUMNS.to_vec();
    if verify {
        cols.push("oracle_gap");
    }
    let mut table = Table::new(&cols);
    let times = cfg.grid.times(setup.spectral.lambda_e);
    let width = cols.len();
    table.rows = times
        .par_iter()
        .map(|&t| match survival_terms(t, setup) {
            Ok(b) => {
                let mut row = survival_row(&b);
                let mut status = "ok".to_string();
                if verify {
                    match stone_survival(t, setup) {
                        Ok(r) => {
                            let gap = (r.value - b.s).norm() / b.s.norm();
                            row.push(gap);
                            if !(gap < cfg.tolerances.oracle) || !r.converged {
                                status = "oracle-gap".into();
                            }
                        }
                        Err(e) => {
                            row.push(f64::NAN);
                            status = status_of(&e);
                        }
                    }
                }
                (row, status)
            }
            Err(e) => {
                let mut row = vec![f64::NAN; width];
                row[0] = t;
                (row, status_of(&e))
            }
        })
        .collect();
    table
}

const TRANSITION_COLUMNS: &[&str] = &[
    "t",
    "re_a",
    "im_a",
    "abs_a",
    "re_runaway",
    "im_runaway",
    "re_resonance",
    "im_resonance",
    "re_photon_pole",
    "im_photon_pole",
    "re_s_integral",
    "im_s_integral",
    "re_cut",
    "im_cut",
    "re_total",
    "im_total",
    "error",
];

fn transition_row(b: &TransitionBreakdown) -> Vec<f64> {
    let mut row = vec![b.t];
    push_c(&mut row, b.amplitude);
    row.push(b.amplitude.norm());
    for z in [b.runaway, b.resonance, b.photon_pole, b.s_integral, b.cut, b.total] {
        push_c(&mut row, z);
    }
    row.push(b.error);
    row
}

/// Emission amplitude rows; for ε > 0 the ε = 0 amplitude is added for comparison.
pub fn cmd_transition(cfg: &RunConfig, setup: &Setup, verify: bool) -> Result<Table> {
    let photon = cfg.photon.ok_or_else(|| Error::Config("transition needs a photon block (photon.nu)".into()))?;
    let regularized = photon.eps > 0.0;
    let mut cols = TRANSITION_COLUMNS.to_vec();
    if regularized {
        cols.extend(["re_a_limit", "im_a_limit"]);
    }
    if verify {
        cols.push("oracle_gap");
    }
    let width = cols.len();
    let mut table = Table::new(&cols);
    let times = cfg.grid.times(setup.spectral.lambda_e);
    let level = cfg.level;
    table.rows = times
        .par_iter()
        .map(|&t| {
            let main = if regularized {
                transition_eps(t, &photon, &level, setup)
            } else {
                transition_limit_point(t, &photon, &level, setup)
            };
            let limit = if regularized { Some(transition_limit_point(t, &photon, &level, setup)) } else { None };
            let b = match (main, limit.transpose()) {
                (Ok(b), Ok(l)) => (b, l),
                (Err(e), _) | (_, Err(e)) => {
                    let mut row = vec![f64::NAN; width];
                    row[0] = t;
                    return (row, status_of(&e));
                }
            };
            let mut row = transition_row(&b.0);
            if let Some(l) = b.1 {
                push_c(&mut row, l.amplitude);
            }
            let mut status = "ok".to_string();
            if verify {
                let checked = if regularized { Some(stone_transition(t, &photon, setup)) } else { None };
                match checked {
                    Some(Ok(r)) => {
                        let gap = (r.value - b.0.total).norm() / b.0.total.norm();
                        row.push(gap);
                        if !(gap < cfg.tolerances.oracle) || !r.converged {
                            status = "oracle-gap".into();
                        }
                    }
                    Some(Err(e)) => {
                        row.push(f64::NAN);
                        status = status_of(&e);
                    }
                    None => row.push(f64::NAN),
                }
            }
            (row, status)
        })
        .collect();
    Ok(table)
}

/// Frequency sweep `nu:START:STOP:POINTS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("expected nu:START:STOP:POINTS, got '{s}'");
        if parts.len() != 4 || parts[0] != "nu" {
            return Err(bad());
        }
        let start: f64 = parts[1].parse().map_err(|_| bad())?;
        let stop: f64 = parts[2].parse().map_err(|_| bad())?;
        let points: usize = parts[3].parse().map_err(|_| bad())?;
        if !(start > 0.0 && stop > start && points >= 2) {
            return Err(format!("sweep needs 0 < START < STOP and POINTS >= 2, got '{s}'"));
        }
        Ok(Self { start, stop, points })
    }
}

impl Sweep {
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.points;
        (0..n).map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64).collect()
    }
}

/// Line-shape table: C₁, C₂, C₃ and |C₃|² at each ν.
pub fn cmd_sweep(setup: &Setup, sweep: &Sweep) -> Table {
    let mut table = Table::new(&["nu", "re_c1", "im_c1", "re_c2", "im_c2", "re_c3", "im_c3", "abs_c3", "abs_c3_sq"]);
    table.rows = sweep
        .frequencies()
        .par_iter()
        .map(|&nu| match transition_constants(nu, setup) {
            Ok(c) => {
                let mut row = vec![nu];
                for z in [c.c1, c.c2, c.c3] {
                    push_c(&mut row, z);
                }
                row.push(c.c3.norm());
                row.push(c.c3.norm_sqr());
                (row, "ok".to_string())
            }
            Err(e) => {
                let mut row = vec![f64::NAN; 9];
                row[0] = nu;
                (row, status_of(&e))
            }
        })
        .collect();
    table
}
