//! WKB quantization `S(E) = (n + 1/2) h`, the first two terms of the ℏ
//! expansion of the QMF, and a numerical check of the turning-point residue
//! identity `(iℏ/4) ∮ F'/F dz = -h/2` that produces the half-integer shift.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::classical::{classical_action, turning_points};
use crate::error::{Error, Result};
use crate::numeric::roots::brent;
use crate::potentials::{PotentialModel, SolverConfig};
use crate::qmf::ContourSpec;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionTerms {
    /// Classical momentum `sqrt(F)`, principal branch.
    pub q0: Complex64,
    /// `(i/4) F'/F`
    pub q1: Complex64,
    /// `q0 + ℏ q1`
    pub p_first_order: Complex64,
}

pub fn expansion_terms(
    model: &PotentialModel,
    energy: f64,
    z: Complex64,
    hbar: f64,
) -> Result<ExpansionTerms> {
    let f = model.eval_f(energy, z)?;
    if f.norm() < 1e-12 {
        return Err(Error::TurningPointSingularity);
    }
    let q0 = f.sqrt();
    let q1 = I / 4.0 * model.f_prime(z) / f;
    Ok(ExpansionTerms {
        q0,
        q1,
        p_first_order: q0 + hbar * q1,
    })
}

/// Picks the sign of `current` continuous with `previous`: a square root
/// that jumps by more than its own magnitude has crossed a branch cut.
pub fn continue_branch(previous: Complex64, current: Complex64) -> Complex64 {
    if (current - previous).norm() > current.norm() {
        -current
    } else {
        current
    }
}

/// Expansion terms along a path, with `q0` continued node to node starting
/// from the principal branch at the first point.
pub fn expansion_along(
    model: &PotentialModel,
    energy: f64,
    path: &[Complex64],
    hbar: f64,
) -> Result<Vec<ExpansionTerms>> {
    let mut out: Vec<ExpansionTerms> = Vec::with_capacity(path.len());
    for &z in path {
        let mut t = expansion_terms(model, energy, z, hbar)?;
        if let Some(prev) = out.last() {
            t.q0 = continue_branch(prev.q0, t.q0);
            t.p_first_order = t.q0 + hbar * t.q1;
        }
        out.push(t);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidueReport {
    /// `(iℏ/4) ∮ F'/F dz`
    pub value: Complex64,
    /// `-h/2`
    pub target: f64,
    pub deviation: f64,
    pub passed: bool,
}

/// Evaluates `(iℏ/4) ∮ F'/F dz` by the trapezoid rule and compares it with
/// `-h/2`, the value implied by unit residues at two simple turning points.
pub fn residue_identity_check(
    model: &PotentialModel,
    energy: f64,
    contour: &ContourSpec,
    cfg: &SolverConfig,
) -> Result<ResidueReport> {
    let tp = turning_points(model, energy)?;
    if !contour.encloses(&tp) {
        return Err(Error::InvalidConfig(
            "contour does not enclose both turning points".into(),
        ));
    }
    let n = contour.nodes;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let theta = contour.node_angle(k);
        let z = contour.z(theta);
        let f = model.eval_f(energy, z)?;
        sum += model.f_prime(z) / f * contour.dz(theta);
    }
    let integral = sum * (2.0 * PI / n as f64);
    let value = I * cfg.hbar / 4.0 * integral;
    let target = -0.5 * cfg.h();
    let deviation = (value - target).norm();
    Ok(ResidueReport {
        value,
        target,
        deviation,
        passed: deviation <= 1e-8 * cfg.h(),
    })
}

/// Energy solving `S(E) = (n + 1/2) h`.
pub fn wkb_energy(model: &PotentialModel, n: usize, cfg: &SolverConfig) -> Result<f64> {
    let target = (n as f64 + 0.5) * cfg.h();
    let (_, vm) = model.well_minimum();
    let action = |e: f64| classical_action(model, e, cfg);

    let hi = match model.ceiling() {
        Some(ceiling) => {
            if let Some(capacity) = model.bound_state_count(cfg.hbar) {
                if n >= capacity {
                    return Err(Error::LevelBeyondCapacity { n });
                }
            }
            // S stays finite up to the dissociation limit; approach it geometrically
            let mut found = None;
            for k in 1..=40 {
                let e = ceiling - (ceiling - vm) * 0.5f64.powi(k);
                match action(e) {
                    Ok(s) if s > target => {
                        found = Some(e);
                        break;
                    }
                    Ok(_) => {}
                    Err(_) => break,
                }
            }
            found.ok_or(Error::LevelBeyondCapacity { n })?
        }
        None => {
            let mut span = cfg.hbar.max(1e-3);
            let mut grown = 0;
            while action(vm + span)? <= target {
                span *= 2.0;
                grown += 1;
                if grown > 200 {
                    return Err(Error::LevelBeyondCapacity { n });
                }
            }
            vm + span
        }
    };
    let lo = vm;
    let residual = |e: f64| -> Result<f64> {
        if e <= vm {
            Ok(-target)
        } else {
            Ok(action(e)? - target)
        }
    };
    let xtol = 1e-15 * hi.abs().max(hi - lo);
    let e = brent(residual, lo, hi, xtol, cfg.max_iterations)?;
    let miss = (action(e)? - target).abs();
    if miss > cfg.action_tol {
        return Err(Error::BracketFailure(format!(
            "WKB action residual {miss:e} exceeds action_tol at level {n}"
        )));
    }
    Ok(e)
}

/// Half the WKB energy gap between the neighbors of level `n` (one-sided at `n = 0`).
pub fn local_spacing(model: &PotentialModel, n: usize, cfg: &SolverConfig) -> Result<f64> {
    let e = wkb_energy(model, n, cfg)?;
    let below = if n == 0 {
        model.well_minimum().1.max(e - (wkb_energy(model, 1, cfg).unwrap_or(2.0 * e) - e))
    } else {
        wkb_energy(model, n - 1, cfg)?
    };
    let above = match wkb_energy(model, n + 1, cfg) {
        Ok(v) => v,
        Err(Error::LevelBeyondCapacity { .. }) => e + (e - below),
        Err(err) => return Err(err),
    };
    Ok(0.5 * (above - below))
}
