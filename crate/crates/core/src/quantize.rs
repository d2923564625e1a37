//! Eigenvalue production: two-sided real-axis shooting locates each level,
//! then the contour action is evaluated there and required to equal `nℏ`.
//!
//! Shooting works with the Prüfer phase `θ = atan2(ψ, ψ'/k)` rather than
//! with `ψ` itself, so neither overflow nor poles of the mismatch occur and
//! the unwrapped phase counts nodes directly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::turning_points;
use crate::error::{Error, Result};
use crate::numeric::ode::Stepper;
use crate::numeric::roots::brent;
use crate::oracle::{oracle_eigenvalue, OracleConfig};
use crate::potentials::{PotentialModel, SolverConfig};
use crate::qmf::{build_contour, quantum_action, transport_with_retry, ActionResult, ContourSpec, QmfTrace};
use crate::wkb::{local_spacing, wkb_energy};

/// Decay exponent `∫κ dx` accumulated beyond the outer turning points
/// before shooting starts.
const SHOOT_DECAY: f64 = 30.0;

/// Prüfer phases of the left- and right-decaying solutions at the well minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub left: f64,
    pub right: f64,
}

impl PhasePair {
    /// `θ₋ - θ₊`; an eigenvalue sits at every multiple of π.
    pub fn mismatch(&self) -> f64 {
        self.left - self.right
    }

    /// Eigenvalues strictly below `E`.
    pub fn count_below(&self) -> i64 {
        (self.mismatch() / PI).floor() as i64 + 1
    }

    /// Real nodes of the matched solution at an eigenvalue: the left phase
    /// passes `floor(θ₋/π)` multiples of π and the right one `-floor(θ₊/π)`,
    /// which sums to `(θ₋ - θ₊)/π` once the phases agree modulo π. Rounding
    /// keeps a node sitting exactly on the matching point from being lost.
    pub fn nodes(&self) -> i64 {
        (self.mismatch() / PI).round() as i64
    }
}

fn q_real(model: &PotentialModel, energy: f64, x: f64, hbar: f64) -> f64 {
    model.f(energy, Complex64::new(x, 0.0)).re / (hbar * hbar)
}

/// Walks outward from the well minimum until the solution decaying in that
/// direction has fallen by `e^{-decay}` past the last allowed point.
fn shooting_start(model: &PotentialModel, energy: f64, hbar: f64, dir: f64, decay: f64) -> Result<f64> {
    let (xc, _) = model.well_minimum();
    let mut x = xc;
    let mut dx = 1e-3;
    let mut acc = 0.0;
    for _ in 0..1_000_000 {
        let q = q_real(model, energy, x, hbar);
        if q >= 0.0 {
            acc = 0.0;
        } else {
            let kappa = (-q).sqrt();
            acc += kappa * dx;
            if acc >= decay {
                return Ok(x);
            }
            dx = dx.min(0.5 / kappa);
        }
        x += dir * dx;
        dx *= 1.02;
        if !x.is_finite() {
            break;
        }
    }
    Err(Error::DomainTooWide)
}

fn phase_scale(model: &PotentialModel, energy: f64, hbar: f64) -> Result<f64> {
    let (_, vm) = model.well_minimum();
    if !(energy > vm) {
        return Err(Error::NoClassicalRegion { energy });
    }
    if let Some(ceiling) = model.ceiling() {
        if energy >= ceiling {
            return Err(Error::NoClassicalRegion { energy });
        }
    }
    Ok((2.0 * model.mass * (energy - vm)).sqrt() / hbar)
}

/// Integrates `θ' = k cos²θ + (Q/k) sin²θ` from a decaying seed at the
/// shooting start on side `dir` to `target`.
fn shoot_phase(model: &PotentialModel, energy: f64, cfg: &SolverConfig, k: f64, dir: f64, target: f64) -> Result<f64> {
    let hbar = cfg.hbar;
    let start = shooting_start(model, energy, hbar, dir, SHOOT_DECAY)?;
    let q0 = q_real(model, energy, start, hbar);
    let kappa = (-q0).sqrt();
    let fp = model.f_prime(Complex64::new(start, 0.0)).re;
    let f = q0 * hbar * hbar;
    // decaying away from the well: ψ'/ψ = -dir κ - F'/(4F)
    let g = -dir * kappa - fp / (4.0 * f);
    let theta0 = 1f64.atan2(g / k);
    let mut y = [Complex64::new(theta0, 0.0)];
    let mut stepper = Stepper::new(0.1 * cfg.energy_tol, 1.0);
    stepper.abs_floor = 1.0;
    stepper.advance(
        |x, y: &[Complex64; 1]| {
            let (s, c) = y[0].re.sin_cos();
            let q = q_real(model, energy, x, hbar);
            [Complex64::new(k * c * c + q / k * s * s, 0.0)]
        },
        start,
        target,
        &mut y,
        |_, _| Ok(()),
    )?;
    Ok(y[0].re)
}

pub fn shoot(model: &PotentialModel, energy: f64, cfg: &SolverConfig) -> Result<PhasePair> {
    let k = phase_scale(model, energy, cfg.hbar)?;
    let (xc, _) = model.well_minimum();
    Ok(PhasePair {
        left: shoot_phase(model, energy, cfg, k, -1.0, xc)?,
        right: shoot_phase(model, energy, cfg, k, 1.0, xc)?,
    })
}

/// `|sin θ|` of the left-decaying solution at `x`: zero exactly at its nodes.
pub fn node_proximity(model: &PotentialModel, energy: f64, x: f64, cfg: &SolverConfig) -> Result<f64> {
    let k = phase_scale(model, energy, cfg.hbar)?;
    Ok(shoot_phase(model, energy, cfg, k, -1.0, x)?.sin().abs())
}

/// Normalized Wronskian of the two decaying solutions at the well minimum,
/// `sin(θ₋ - θ₊)`. Bounded, zero exactly at eigenvalues, and of alternating
/// sign between consecutive levels.
pub fn matching_discriminant(model: &PotentialModel, energy: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(shoot(model, energy, cfg)?.mismatch().sin())
}

/// Number of eigenvalues strictly below `E` (the node count of the
/// decaying solution, by Sturm oscillation).
pub fn node_count(model: &PotentialModel, energy: f64, cfg: &SolverConfig) -> Result<usize> {
    let phases = shoot(model, energy, cfg)?;
    let r = phases.mismatch() / PI;
    if (r - r.round()).abs() < 1e-8 {
        return Err(Error::AmbiguousCount { energy });
    }
    Ok(phases.count_below().max(0) as usize)
}

/// Real nodes of the bound state at (or numerically at) eigenvalue `E`.
pub fn eigenfunction_nodes(model: &PotentialModel, energy: f64, cfg: &SolverConfig) -> Result<usize> {
    Ok(shoot(model, energy, cfg)?.nodes().max(0) as usize)
}

/// A solved level with the contour evidence behind it.
#[derive(Debug, Clone)]
pub struct QhjLevel {
    pub n: usize,
    pub energy: f64,
    pub action: ActionResult,
    pub contour: ContourSpec,
    pub trace: QmfTrace,
}

fn check_capacity(model: &PotentialModel, n: usize, hbar: f64) -> Result<()> {
    match model.bound_state_count(hbar) {
        Some(capacity) if n >= capacity => Err(Error::NoBoundState { n, capacity }),
        _ => Ok(()),
    }
}

/// Locates level `n` by shooting, bracketed around the WKB estimate.
pub fn shooting_energy(model: &PotentialModel, n: usize, cfg: &SolverConfig) -> Result<f64> {
    check_capacity(model, n, cfg.hbar)?;
    let (_, vm) = model.well_minimum();
    let e_wkb = wkb_energy(model, n, cfg)?;
    let spacing = local_spacing(model, n, cfg)?;
    let floor = vm + 1e-9 * (e_wkb - vm);
    let clamp_hi = |e: f64| match model.ceiling() {
        Some(d) => e.min(e_wkb + 0.5 * (d - e_wkb)),
        None => e,
    };
    let mut lo = (e_wkb - spacing).max(floor);
    let mut hi = clamp_hi(e_wkb + spacing);
    let count = |e: f64| -> Result<i64> { Ok(shoot(model, e, cfg)?.count_below()) };
    let mut tries = 0;
    loop {
        let (cl, ch) = (count(lo)?, count(hi)?);
        if cl <= n as i64 && ch > n as i64 {
            break;
        }
        tries += 1;
        if tries > 20 {
            return Err(Error::BracketFailure(format!(
                "level {n}: counts {cl}..{ch} on [{lo}, {hi}]"
            )));
        }
        if cl > n as i64 {
            lo = (lo - spacing).max(floor);
        }
        if ch <= n as i64 {
            let grown = clamp_hi(hi + spacing);
            if grown <= hi {
                return Err(Error::NoBoundState {
                    n,
                    capacity: ch.max(0) as usize,
                });
            }
            hi = grown;
        }
    }
    let target = n as f64 * PI;
    let g = |e: f64| -> Result<f64> { Ok(shoot(model, e, cfg)?.mismatch() - target) };
    // the bracket may hold neighboring levels when the WKB guess is poor
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::BracketFailure(format!("level {n}: mismatch {glo}..{ghi}")));
    }
    brent(g, lo, hi, cfg.energy_tol, cfg.max_iterations)
}

/// Level `n` with its contour verification: `J = nℏ` is a hard postcondition.
pub fn qhj_level(model: &PotentialModel, n: usize, cfg: &SolverConfig) -> Result<QhjLevel> {
    let energy = shooting_energy(model, n, cfg)?;
    let tp = turning_points(model, energy)?;
    let contour = build_contour(model, &tp, cfg)?;
    let (trace, contour) = transport_with_retry(model, energy, &contour, cfg)?;
    let action = quantum_action(&trace, &contour, cfg)?;
    if action.n_est != n as i64 || action.quantization_residual > 1e-6 * cfg.hbar {
        return Err(Error::QuantizationMismatch {
            expected: n,
            action: Box::new(action),
        });
    }
    Ok(QhjLevel {
        n,
        energy,
        action,
        contour,
        trace,
    })
}

pub fn qhj_energy(model: &PotentialModel, n: usize, cfg: &SolverConfig) -> Result<(f64, ActionResult)> {
    qhj_level(model, n, cfg).map(|l| (l.energy, l.action))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Methods {
    pub qhj: bool,
    pub wkb: bool,
    pub oracle: bool,
    pub closed: bool,
}

impl Methods {
    pub const ALL: Methods = Methods {
        qhj: true,
        wkb: true,
        oracle: true,
        closed: true,
    };

    /// Parses a comma-separated subset of `qhj,wkb,oracle,closed`.
    pub fn parse(list: &str) -> Result<Self> {
        let mut m = Methods {
            qhj: false,
            wkb: false,
            oracle: false,
            closed: false,
        };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "qhj" => m.qhj = true,
                "wkb" => m.wkb = true,
                "oracle" => m.oracle = true,
                "closed" => m.closed = true,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown method '{other}'")));
                }
            }
        }
        if m == (Methods { qhj: false, wkb: false, oracle: false, closed: false }) {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: usize,
    #[serde(rename = "E_qhj")]
    pub e_qhj: Option<f64>,
    #[serde(rename = "E_wkb")]
    pub e_wkb: Option<f64>,
    #[serde(rename = "E_oracle")]
    pub e_oracle: Option<f64>,
    #[serde(rename = "E_closed_form")]
    pub e_closed_form: Option<f64>,
    #[serde(rename = "J_over_hbar")]
    pub j_over_hbar: Option<f64>,
    pub node_count: Option<usize>,
    pub residual_quantization: Option<f64>,
    pub residual_im: Option<f64>,
    pub residual_closure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-level outcome: the row (possibly partial) and the errors met on the way.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub row: SpectrumRow,
    pub errors: Vec<Error>,
}

fn level_outcome(model: &PotentialModel, n: usize, methods: Methods, cfg: &SolverConfig, ocfg: &OracleConfig) -> LevelOutcome {
    let mut row = SpectrumRow {
        n,
        e_qhj: None,
        e_wkb: None,
        e_oracle: None,
        e_closed_form: None,
        j_over_hbar: None,
        node_count: None,
        residual_quantization: None,
        residual_im: None,
        residual_closure: None,
        error: None,
    };
    let mut errors = Vec::new();
    if let Err(e) = check_capacity(model, n, cfg.hbar) {
        row.error = Some(format!("level {n}: {e}"));
        return LevelOutcome { row, errors: vec![e] };
    }
    if methods.qhj {
        match qhj_level(model, n, cfg) {
            Ok(level) => {
                row.e_qhj = Some(level.energy);
                row.j_over_hbar = Some(level.action.j_over_hbar());
                row.residual_quantization = Some(level.action.quantization_residual);
                row.residual_im = Some(level.action.im_residual);
                row.residual_closure = Some(level.action.closure_residual);
                match eigenfunction_nodes(model, level.energy, cfg) {
                    Ok(c) => row.node_count = Some(c),
                    Err(e) => errors.push(e),
                }
            }
            Err(e) => errors.push(e),
        }
    }
    if methods.wkb {
        match wkb_energy(model, n, cfg) {
            Ok(e) => row.e_wkb = Some(e),
            Err(e) => errors.push(e),
        }
    }
    if methods.oracle {
        match oracle_eigenvalue(model, n, cfg.hbar, ocfg) {
            Ok(e) => row.e_oracle = Some(e),
            Err(e) => errors.push(e),
        }
    }
    if methods.closed {
        match model.closed_form_energy(n, cfg.hbar) {
            Ok(e) => row.e_closed_form = e,
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        let msgs: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
        row.error = Some(format!("level {n}: {}", msgs.join("; ")));
    }
    LevelOutcome { row, errors }
}

/// Levels `0..=n_max`, computed concurrently and returned in level order.
/// A failing level keeps whatever its other methods produced.
pub fn spectrum(
    model: &PotentialModel,
    n_max: usize,
    methods: Methods,
    cfg: &SolverConfig,
    ocfg: &OracleConfig,
) -> Vec<LevelOutcome> {
    (0..=n_max)
        .into_par_iter()
        .map(|n| level_outcome(model, n, methods, cfg, ocfg))
        .collect()
}
