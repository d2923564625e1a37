//! Per-loop quantization `(1/2π) ∮ Σ p_i dq_i = n_i ℏ` for separable systems,
//! next to its semiclassical counterpart `∮ p_cl,i dq_i = (n_i + 1/2) h`.
//!
//! For a product wavefunction each fundamental loop moves a single
//! coordinate; the frozen coordinates contribute nothing because their
//! `dq_j` vanishes along the loop, so every loop reduces to a 1D contour
//! action in its own coordinate plane.

use serde::Serialize;

use crate::classical::{classical_action, turning_points};
use crate::error::{Error, Result};
use crate::potentials::{PotentialModel, SolverConfig};
use crate::qmf::{build_contour, quantum_action, transport_with_retry, ActionResult, ContourSpec};
use crate::quantize::{node_proximity, qhj_energy, shoot};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparableSystem {
    pub coordinates: Vec<(String, PotentialModel)>,
}

impl SeparableSystem {
    pub fn new(coordinates: Vec<(String, PotentialModel)>) -> Result<Self> {
        if coordinates.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "a separable system needs at least 2 coordinates, got {}",
                coordinates.len()
            )));
        }
        Ok(Self { coordinates })
    }

    pub fn dimension(&self) -> usize {
        self.coordinates.len()
    }

    pub fn label(&self, i: usize) -> String {
        self.coordinates[i].0.clone()
    }
}

/// A fundamental loop: coordinate `coordinate_index` runs around `contour`
/// while the others sit at `fixed_points` (listed in coordinate order,
/// skipping the moving one).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopSpec {
    pub coordinate_index: usize,
    pub contour: ContourSpec,
    pub fixed_points: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuantumNumbers {
    pub n: Vec<usize>,
}

impl QuantumNumbers {
    pub fn new(values: &[i64]) -> Result<Self> {
        let n = values
            .iter()
            .map(|&v| {
                usize::try_from(v)
                    .map_err(|_| Error::InvalidConfig(format!("quantum numbers must be nonnegative, got {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n })
    }
}

/// Relative closeness to an integer of `(θ₋ - θ₊)/π` accepted as on-shell.
const ON_SHELL: f64 = 1e-6;

fn on_shell(model: &PotentialModel, energy: f64, cfg: &SolverConfig) -> Result<bool> {
    let r = shoot(model, energy, cfg)?.mismatch() / std::f64::consts::PI;
    Ok((r - r.round()).abs() <= ON_SHELL)
}

fn frozen_point(model: &PotentialModel, energy: f64, cfg: &SolverConfig) -> Result<f64> {
    let (xm, _) = model.well_minimum();
    if node_proximity(model, energy, xm, cfg)? > 1e-6 {
        return Ok(xm);
    }
    let tp = turning_points(model, energy)?;
    Ok(xm + 0.1 * tp.width())
}

/// The standard loop for coordinate `i`: its own contour around the
/// classical region, other coordinates frozen at regular points near
/// their well minima.
pub fn default_loop(system: &SeparableSystem, energies: &[f64], i: usize, cfg: &SolverConfig) -> Result<LoopSpec> {
    let model = &system.coordinates[i].1;
    let tp = turning_points(model, energies[i])?;
    let contour = build_contour(model, &tp, cfg)?;
    let fixed_points = (0..system.dimension())
        .filter(|&j| j != i)
        .map(|j| frozen_point(&system.coordinates[j].1, energies[j], cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(LoopSpec {
        coordinate_index: i,
        contour,
        fixed_points,
    })
}

/// `(1/2π) ∮ Σ_j p_j dq_j` along `lp`.
pub fn loop_action(
    system: &SeparableSystem,
    energies: &[f64],
    lp: &LoopSpec,
    cfg: &SolverConfig,
) -> Result<ActionResult> {
    let d = system.dimension();
    if energies.len() != d || lp.coordinate_index >= d || lp.fixed_points.len() != d - 1 {
        return Err(Error::InvalidConfig(format!(
            "loop over coordinate {} needs {d} energies and {} fixed points",
            lp.coordinate_index,
            d - 1
        )));
    }
    let others = (0..d).filter(|&j| j != lp.coordinate_index);
    for (j, &x) in others.zip(&lp.fixed_points) {
        let model = &system.coordinates[j].1;
        if !on_shell(model, energies[j], cfg)? {
            return Err(Error::OffShellLoop { coordinate: j });
        }
        if node_proximity(model, energies[j], x, cfg)? <= 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "fixed point {x} of coordinate {} is a node",
                system.label(j)
            )));
        }
    }
    let i = lp.coordinate_index;
    let model = &system.coordinates[i].1;
    if !on_shell(model, energies[i], cfg)? {
        return Err(Error::OffShellLoop { coordinate: i });
    }
    if lp.contour.is_degenerate() {
        return Ok(ActionResult::contracted(cfg.hbar));
    }
    let (trace, contour) = transport_with_retry(model, energies[i], &lp.contour, cfg)?;
    let action = quantum_action(&trace, &contour, cfg)?;
    if action.quantization_residual > 1e-6 * cfg.hbar {
        return Err(Error::QuantizationMismatch {
            expected: action.n_est.max(0) as usize,
            action: Box::new(action),
        });
    }
    Ok(action)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EbkResult {
    pub energy: f64,
    pub coordinate_energies: Vec<f64>,
    pub loop_actions: Vec<ActionResult>,
    /// `∮ p_cl dq` per loop, in the same units as `h`.
    pub semiclassical_actions: Vec<f64>,
    pub h: f64,
}

impl EbkResult {
    /// `(S_i - 2π J_i)/h` per loop; the half-integer shift when both conditions hold.
    pub fn loop_gaps(&self) -> Vec<f64> {
        self.semiclassical_actions
            .iter()
            .zip(&self.loop_actions)
            .map(|(s, a)| (s - 2.0 * std::f64::consts::PI * a.j.re) / self.h)
            .collect()
    }
}

fn labeled<T>(system: &SeparableSystem, i: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Coordinate {
        label: system.label(i),
        source: Box::new(e),
    })
}

pub fn ebk_spectrum(system: &SeparableSystem, qn: &QuantumNumbers, cfg: &SolverConfig) -> Result<EbkResult> {
    let d = system.dimension();
    if qn.n.len() != d {
        return Err(Error::InvalidConfig(format!(
            "{} quantum numbers given for {d} coordinates",
            qn.n.len()
        )));
    }
    let mut energies = Vec::with_capacity(d);
    for (i, (_, model)) in system.coordinates.iter().enumerate() {
        let (e, _) = labeled(system, i, qhj_energy(model, qn.n[i], cfg))?;
        energies.push(e);
    }
    let mut loop_actions = Vec::with_capacity(d);
    let mut semiclassical_actions = Vec::with_capacity(d);
    for i in 0..d {
        let lp = labeled(system, i, default_loop(system, &energies, i, cfg))?;
        let action = labeled(system, i, loop_action(system, &energies, &lp, cfg))?;
        if action.n_est != qn.n[i] as i64 {
            return labeled(
                system,
                i,
                Err(Error::QuantizationMismatch {
                    expected: qn.n[i],
                    action: Box::new(action),
                }),
            );
        }
        loop_actions.push(action);
        let model = &system.coordinates[i].1;
        semiclassical_actions.push(labeled(system, i, classical_action(model, energies[i], cfg))?);
    }
    Ok(EbkResult {
        energy: energies.iter().sum(),
        coordinate_energies: energies,
        loop_actions,
        semiclassical_actions,
        h: cfg.h(),
    })
}
