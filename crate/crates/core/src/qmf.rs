//! Contours, transport of the wavefunction and of the quantum momentum
//! function `p = -iℏ ψ'/ψ` around them, and the quantum action
//! `J = (1/2π) ∮ p dz`.
//!
//! `p` has a simple pole of residue `-iℏ` at every zero of `ψ`, so `J`
//! counts the zeros of `ψ` enclosed by the contour in units of `ℏ`.
//!
//! The eigenfunction decays on both real half-lines but is dominant in the
//! imaginary directions. Carrying it once around the contour from a single
//! anchor would require integrating it back into a recessive region, which
//! amplifies integration error exponentially with the level. Instead the
//! right half of the contour is fed from the right anchor and the left half
//! from the left anchor; each half is integrated from recessive towards
//! dominant, and the two halves meet at the top and bottom of the ellipse.
//! The mismatch of `p` at those seams is the closure defect.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::classical::TurningPair;
use crate::error::{Error, Result};
use crate::numeric::ode::Stepper;
use crate::potentials::{PotentialModel, SolverConfig};
use crate::wkb;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Counterclockwise axis-aligned ellipse `z(θ) = c + a cos θ + i b sin θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSpec {
    pub center: f64,
    pub semi_axis_real: f64,
    pub semi_axis_imag: f64,
    pub nodes: usize,
}

impl ContourSpec {
    pub fn new(center: f64, semi_axis_real: f64, semi_axis_imag: f64, nodes: usize) -> Result<Self> {
        if nodes < 64 || !nodes.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "contour nodes must be even and >= 64, got {nodes}"
            )));
        }
        if !(semi_axis_real >= 0.0 && semi_axis_imag >= 0.0) || !center.is_finite() {
            return Err(Error::InvalidConfig("contour semi-axes must be nonnegative".into()));
        }
        Ok(Self {
            center,
            semi_axis_real,
            semi_axis_imag,
            nodes,
        })
    }

    /// A loop contracted to the single point `center`.
    pub fn point(center: f64, nodes: usize) -> Result<Self> {
        Self::new(center, 0.0, 0.0, nodes)
    }

    pub fn is_degenerate(&self) -> bool {
        self.semi_axis_real == 0.0 || self.semi_axis_imag == 0.0
    }

    pub fn z(&self, theta: f64) -> Complex64 {
        Complex64::new(
            self.center + self.semi_axis_real * theta.cos(),
            self.semi_axis_imag * theta.sin(),
        )
    }

    /// `dz/dθ`
    pub fn dz(&self, theta: f64) -> Complex64 {
        Complex64::new(
            -self.semi_axis_real * theta.sin(),
            self.semi_axis_imag * theta.cos(),
        )
    }

    pub fn node_angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.nodes as f64
    }

    pub fn encloses(&self, tp: &TurningPair) -> bool {
        self.center - self.semi_axis_real < tp.x1 && self.center + self.semi_axis_real > tp.x2
    }

    fn mean_speed(&self) -> f64 {
        (0.5 * (self.semi_axis_real.powi(2) + self.semi_axis_imag.powi(2))).sqrt()
    }
}

/// Ellipse around the classical region: semi-axes `margin·(x2-x1)/2` and half that.
pub fn build_contour(
    model: &PotentialModel,
    tp: &TurningPair,
    cfg: &SolverConfig,
) -> Result<ContourSpec> {
    let a = cfg.contour_margin * 0.5 * tp.width();
    let b = 0.5 * a;
    if b > model.strip_half_width {
        return Err(Error::ContourExceedsDomain);
    }
    ContourSpec::new(tp.center(), a, b, cfg.contour_nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QmfSample {
    pub z: Complex64,
    /// Wavefunction (absent for the Riccati backend).
    pub psi: Option<Complex64>,
    pub dpsi: Option<Complex64>,
    pub p: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QmfTrace {
    /// One sample per contour node, node `k` at `θ = 2πk/N`.
    pub samples: Vec<QmfSample>,
    pub closure_defect: Complex64,
}

impl QmfTrace {
    /// `max_k |p(conj z_k) + conj p(z_k)|` over mirrored node pairs.
    pub fn schwarz_deviation(&self) -> f64 {
        let n = self.samples.len();
        (1..n / 2)
            .map(|k| (self.samples[n - k].p + self.samples[k].p.conj()).norm())
            .chain([
                (self.samples[0].p + self.samples[0].p.conj()).norm(),
                (self.samples[n / 2].p + self.samples[n / 2].p.conj()).norm(),
            ])
            .fold(0.0, f64::max)
    }

    /// Largest pointwise `|Δp|` against another trace on the same nodes.
    pub fn max_deviation(&self, other: &QmfTrace) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a.p - b.p).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionResult {
    /// `J = (1/2π) ∮ p dz`.
    pub j: Complex64,
    pub hbar: f64,
    /// `round(Re J / ℏ)`
    pub n_est: i64,
    pub im_residual: f64,
    pub quantization_residual: f64,
    pub closure_residual: f64,
}

impl ActionResult {
    pub fn j_over_hbar(&self) -> f64 {
        self.j.re / self.hbar
    }

    /// Result for a loop contracted to a point: `dz` vanishes identically.
    pub fn contracted(hbar: f64) -> Self {
        Self {
            j: Complex64::new(0.0, 0.0),
            hbar,
            n_est: 0,
            im_residual: 0.0,
            quantization_residual: 0.0,
            closure_residual: 0.0,
        }
    }
}

/// Wavefunction state in log-scaled form: `(ψ, ψ') · exp(log_scale)`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    y: [Complex64; 2],
    log_scale: f64,
}

impl Scaled {
    fn renormalize(&mut self) {
        let n = self.y[0].norm().max(self.y[1].norm());
        if n > 1e100 || (n < 1e-100 && n > 0.0) {
            self.y[0] /= n;
            self.y[1] /= n;
            self.log_scale += n.ln();
        }
    }
}

struct RawSample {
    k: usize,
    z: Complex64,
    state: Scaled,
    p: Complex64,
}

/// `-F(z)/ℏ²`, so that `ψ'' = -(F/ℏ²) ψ`.
fn schrodinger_coefficient(model: &PotentialModel, energy: f64, z: Complex64, hbar: f64) -> Complex64 {
    -model.f(energy, z) / (hbar * hbar)
}

/// First-order seed `ψ'/ψ = i p₁/ℏ` at a real anchor in the forbidden
/// region, choosing the branch that decays away from the well in the
/// direction `outward` (+1 right, -1 left).
fn seed_log_derivative(model: &PotentialModel, energy: f64, x: f64, hbar: f64, outward: f64) -> Result<Complex64> {
    let z = Complex64::new(x, 0.0);
    let f = model.f(energy, z);
    if !(f.re < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "anchor x = {x} is not in the classically forbidden region"
        )));
    }
    let kappa = (-f.re).sqrt() / hbar;
    let correction = (model.f_prime(z) / f).re / 4.0;
    Ok(Complex64::new(-outward * kappa - correction, 0.0))
}

/// Decay exponent `∫κ dx` between a seed anchor and the contour.
const ANCHOR_DECAY: f64 = 20.0;

/// Real anchor for the seed on side `outward` (+1 right, -1 left): far
/// enough beyond the contour that contamination of the seed by the growing
/// solution is suppressed by `e^{-2·ANCHOR_DECAY}` on arrival. A fixed
/// multiple of the semi-axis is too close for low levels and needlessly
/// deep on steep walls.
pub fn seed_anchor(model: &PotentialModel, energy: f64, contour: &ContourSpec, hbar: f64, outward: f64) -> Result<f64> {
    let edge = contour.center + outward * contour.semi_axis_real;
    let mut x = edge;
    let mut dx = 1e-3 * contour.semi_axis_real.max(1e-3);
    let mut acc = 0.0;
    for _ in 0..1_000_000 {
        let f = model.f(energy, Complex64::new(x, 0.0)).re;
        if f >= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "no forbidden region between the contour and x = {x}"
            )));
        }
        let kappa = (-f).sqrt() / hbar;
        acc += kappa * dx;
        if acc >= ANCHOR_DECAY {
            return Ok(x);
        }
        dx = (dx * 1.02).min(0.5 / kappa);
        x += outward * dx;
    }
    Err(Error::StiffTransport { at: x })
}

/// Carries `(ψ, ψ')` along the real axis from `from` to `to`.
fn transport_real(
    model: &PotentialModel,
    energy: f64,
    hbar: f64,
    tol: f64,
    from: f64,
    to: f64,
    state: &mut Scaled,
) -> Result<()> {
    let mut stepper = Stepper::new(tol, 1.0);
    let mut log_acc = 0.0;
    stepper.advance(
        |x, y: &[Complex64; 2]| {
            let q = schrodinger_coefficient(model, energy, Complex64::new(x, 0.0), hbar);
            [y[1], q * y[0]]
        },
        from,
        to,
        &mut state.y,
        |_, y| {
            let mut s = Scaled { y: *y, log_scale: 0.0 };
            s.renormalize();
            *y = s.y;
            log_acc += s.log_scale;
            Ok(())
        },
    )?;
    state.log_scale += log_acc;
    Ok(())
}

/// Carries `(ψ, ψ')` along the ellipse from `theta0` to `theta1`, sampling
/// the listed nodes (ordered in the direction of travel).
#[allow(clippy::too_many_arguments)]
fn transport_arc(
    model: &PotentialModel,
    energy: f64,
    hbar: f64,
    tol: f64,
    contour: &ContourSpec,
    theta0: f64,
    theta1: f64,
    nodes: &[(usize, f64)],
    state: &mut Scaled,
    out: &mut Vec<RawSample>,
) -> Result<()> {
    let mut stepper = Stepper::new(tol, contour.mean_speed());
    let rhs = |theta: f64, y: &[Complex64; 2]| {
        let z = contour.z(theta);
        let dz = contour.dz(theta);
        let q = schrodinger_coefficient(model, energy, z, hbar);
        [y[1] * dz, q * y[0] * dz]
    };
    let mut t = theta0;
    let mut targets: Vec<(Option<usize>, f64)> = nodes.iter().map(|&(k, th)| (Some(k), th)).collect();
    targets.push((None, theta1));
    for (k, target) in targets {
        let mut log_acc = 0.0;
        stepper.advance(rhs, t, target, &mut state.y, |_, y| {
            let mut s = Scaled { y: *y, log_scale: 0.0 };
            s.renormalize();
            *y = s.y;
            log_acc += s.log_scale;
            Ok(())
        })?;
        state.log_scale += log_acc;
        t = target;
        if let Some(k) = k {
            let z = contour.z(target);
            let [psi, dpsi] = state.y;
            if psi.norm() == 0.0 {
                return Err(Error::NodeOnContour { re: z.re, im: z.im });
            }
            let p = -I * hbar * dpsi / psi;
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(Error::NodeOnContour { re: z.re, im: z.im });
            }
            out.push(RawSample {
                k,
                z,
                state: *state,
                p,
            });
        }
    }
    Ok(())
}

fn p_of(state: &Scaled, hbar: f64) -> Complex64 {
    -I * hbar * state.y[1] / state.y[0]
}

/// Nodes with angles in `[lo, hi]` (angles taken in `[0, 2π)` and shifted by
/// `-2π` when `lo < 0`), ordered from `start` towards the far end.
fn nodes_between(contour: &ContourSpec, lo: f64, hi: f64, ascending: bool, include_lo: bool, include_hi: bool) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = (0..contour.nodes)
        .filter_map(|k| {
            let mut th = contour.node_angle(k);
            if th > hi + 1e-12 {
                th -= 2.0 * PI;
            }
            let above = if include_lo { th >= lo - 1e-12 } else { th > lo + 1e-12 };
            let below = if include_hi { th <= hi + 1e-12 } else { th < hi - 1e-12 };
            (above && below).then_some((k, th))
        })
        .collect();
    v.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    if !ascending {
        v.reverse();
    }
    v
}

/// Transports the decaying wavefunction around `contour` and records
/// `p = -iℏ ψ'/ψ` at every node.
pub fn transport_wavefunction(
    model: &PotentialModel,
    energy: f64,
    contour: &ContourSpec,
    cfg: &SolverConfig,
) -> Result<QmfTrace> {
    if contour.is_degenerate() {
        return Err(Error::InvalidConfig("cannot transport along a degenerate contour".into()));
    }
    if contour.semi_axis_imag > model.strip_half_width {
        return Err(Error::ContourExceedsDomain);
    }
    let hbar = cfg.hbar;
    let tol = cfg.quadrature_tol;
    let a = contour.semi_axis_real;

    let mut raw = Vec::with_capacity(contour.nodes);
    let mut seam_states = [[None; 2]; 2];

    for (side, outward) in [(0usize, 1.0f64), (1, -1.0)] {
        let anchor = seed_anchor(model, energy, contour, hbar, outward)?;
        let start = contour.center + outward * a;
        let g = seed_log_derivative(model, energy, anchor, hbar, outward)?;
        let mut state = Scaled {
            y: [Complex64::new(1.0, 0.0), g],
            log_scale: 0.0,
        };
        transport_real(model, energy, hbar, tol, anchor, start, &mut state)?;
        // measure the contour part relative to its starting point
        let n = state.y[0].norm();
        state.y[0] /= n;
        state.y[1] /= n;
        state.log_scale = 0.0;

        let theta_start = if side == 0 { 0.0 } else { PI };
        for (arm, dir) in [(0usize, 1.0f64), (1, -1.0)] {
            let theta_end = theta_start + dir * FRAC_PI_2;
            let (lo, hi) = if dir > 0.0 {
                (theta_start, theta_end)
            } else {
                (theta_end, theta_start)
            };
            // the start node belongs to the upward arm; seams at ±π/2 belong to the right half
            let (inc_lo, inc_hi) = match (side, arm) {
                (0, 0) => (true, true),
                (0, _) => (true, false),
                (_, 0) => (true, false),
                _ => (false, false),
            };
            let nodes = nodes_between(contour, lo, hi, dir > 0.0, inc_lo, inc_hi);
            let mut s = state;
            transport_arc(model, energy, hbar, tol, contour, theta_start, theta_end, &nodes, &mut s, &mut raw)?;
            seam_states[side][arm] = Some(s);
        }
    }

    let take = |side: usize, arm: usize| seam_states[side][arm].expect("seam state");
    let (r_top, r_bottom) = (take(0, 0), take(0, 1));
    // left half: arm 0 runs π -> 3π/2 (bottom), arm 1 runs π -> π/2 (top)
    let (l_bottom, l_top) = (take(1, 0), take(1, 1));
    let top_defect = p_of(&l_top, hbar) - p_of(&r_top, hbar);
    let bottom_defect = p_of(&l_bottom, hbar) - p_of(&r_bottom, hbar);
    let closure_defect = if top_defect.norm() >= bottom_defect.norm() {
        top_defect
    } else {
        bottom_defect
    };

    // Complex log of the factor matching the left half to the right half at a seam.
    let log_match = |r: &Scaled, l: &Scaled| -> Complex64 {
        (r.y[0] / l.y[0]).ln() + Complex64::new(r.log_scale - l.log_scale, 0.0)
    };
    let top_match = log_match(&r_top, &l_top);
    let bottom_match = log_match(&r_bottom, &l_bottom);

    raw.sort_by_key(|s| s.k);
    if raw.len() != contour.nodes {
        return Err(Error::InvalidConfig(format!(
            "internal: sampled {} of {} nodes",
            raw.len(),
            contour.nodes
        )));
    }
    let logs: Vec<Complex64> = raw
        .iter()
        .map(|s| {
            let th = contour.node_angle(s.k);
            let base = s.state.y[0].ln() + Complex64::new(s.state.log_scale, 0.0);
            if th > FRAC_PI_2 + 1e-12 && th < 1.5 * PI - 1e-12 {
                base + if th <= PI { top_match } else { bottom_match }
            } else {
                base
            }
        })
        .collect();
    let max_log = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let mut samples = Vec::with_capacity(raw.len());
    for (s, l) in raw.iter().zip(&logs) {
        if l.re - max_log < (1e-300f64).ln() {
            return Err(Error::NodeOnContour { re: s.z.re, im: s.z.im });
        }
        let psi = (l - max_log).exp();
        let dpsi = psi * s.state.y[1] / s.state.y[0];
        samples.push(QmfSample {
            z: s.z,
            psi: Some(psi),
            dpsi: Some(dpsi),
            p: s.p,
        });
    }
    Ok(QmfTrace {
        samples,
        closure_defect,
    })
}

/// As [`transport_wavefunction`], retrying with the imaginary semi-axis
/// scaled by 1.1 (up to three times) when a node of `ψ` sits on the contour.
pub fn transport_with_retry(
    model: &PotentialModel,
    energy: f64,
    contour: &ContourSpec,
    cfg: &SolverConfig,
) -> Result<(QmfTrace, ContourSpec)> {
    let mut c = *contour;
    let mut attempt = 0;
    loop {
        match transport_wavefunction(model, energy, &c, cfg) {
            Err(Error::NodeOnContour { .. }) if attempt < 3 => {
                attempt += 1;
                c.semi_axis_imag *= 1.1;
            }
            other => return other.map(|t| (t, c)),
        }
    }
}

/// `J = (1/2π) ∮ p dz` by the periodic trapezoid rule over the contour nodes.
pub fn quantum_action(trace: &QmfTrace, contour: &ContourSpec, cfg: &SolverConfig) -> Result<ActionResult> {
    if trace.samples.len() != contour.nodes {
        return Err(Error::InvalidConfig(format!(
            "trace has {} samples but contour has {} nodes",
            trace.samples.len(),
            contour.nodes
        )));
    }
    let hbar = cfg.hbar;
    let sum: Complex64 = trace
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| s.p * contour.dz(contour.node_angle(k)))
        .sum();
    let j = sum / contour.nodes as f64;
    let n_est = (j.re / hbar).round() as i64;
    let quantization_residual = (j.re - n_est as f64 * hbar).abs();
    if quantization_residual > 0.4 * hbar {
        return Err(Error::AmbiguousPoleCount {
            residual: quantization_residual,
        });
    }
    Ok(ActionResult {
        j,
        hbar,
        n_est,
        im_residual: j.im.abs(),
        quantization_residual,
        closure_residual: trace.closure_defect.norm(),
    })
}

/// Experimental backend: integrates the quantum Hamilton-Jacobi equation
/// `p² - iℏ p' = F` directly once around the contour, seeded with the
/// first-order expansion at the right anchor.
pub fn riccati_transport(
    model: &PotentialModel,
    energy: f64,
    contour: &ContourSpec,
    cfg: &SolverConfig,
) -> Result<QmfTrace> {
    if contour.is_degenerate() {
        return Err(Error::InvalidConfig("cannot transport along a degenerate contour".into()));
    }
    let hbar = cfg.hbar;
    let anchor = seed_anchor(model, energy, contour, hbar, 1.0)?;
    let seed = wkb::expansion_terms(model, energy, Complex64::new(anchor, 0.0), hbar)?;
    let mut p = [seed.p_first_order];
    let blowup = |y: &mut [Complex64; 1], z: Complex64| {
        if y[0].norm() > 1e12 || !y[0].re.is_finite() {
            Err(Error::RiccatiPole { re: z.re, im: z.im })
        } else {
            Ok(())
        }
    };

    let mut real = Stepper::new(cfg.quadrature_tol, 1.0);
    real.abs_floor = 1e-3 * hbar / contour.semi_axis_real;
    real.advance(
        |x, y: &[Complex64; 1]| {
            let f = model.f(energy, Complex64::new(x, 0.0));
            [-I * (y[0] * y[0] - f) / hbar]
        },
        anchor,
        contour.center + contour.semi_axis_real,
        &mut p,
        |x, y| blowup(y, Complex64::new(x, 0.0)),
    )?;

    let mut arc = Stepper::new(cfg.quadrature_tol, contour.mean_speed());
    arc.abs_floor = real.abs_floor;
    let rhs = |theta: f64, y: &[Complex64; 1]| {
        let z = contour.z(theta);
        let f = model.f(energy, z);
        [-I * (y[0] * y[0] - f) / hbar * contour.dz(theta)]
    };
    let mut samples = Vec::with_capacity(contour.nodes);
    let mut t = 0.0;
    for k in 0..=contour.nodes {
        let target = contour.node_angle(k);
        arc.advance(rhs, t, target, &mut p, |th, y| blowup(y, contour.z(th)))?;
        t = target;
        if k < contour.nodes {
            samples.push(QmfSample {
                z: contour.z(target),
                psi: None,
                dpsi: None,
                p: p[0],
            });
        }
    }
    let closure_defect = p[0] - samples[0].p;
    Ok(QmfTrace {
        samples,
        closure_defect,
    })
}
