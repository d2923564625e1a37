//! Classical-limit quantities: turning points, the classical momentum
//! `p_cl = sqrt(F)`, and the action `S(E) = ∮ p_cl dx = 2 ∫ p_cl dx`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::quadrature::{tanh_sinh, tanh_sinh_at_level};
use crate::numeric::roots::bisect;
use crate::potentials::{PotentialModel, SolverConfig};

/// Samples per half-box in the turning-point scan.
const SCAN_POINTS: usize = 1024;

/// The two simple real zeros of `F` bounding the single classical region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPair {
    pub x1: f64,
    pub x2: f64,
}

impl TurningPair {
    pub fn center(&self) -> f64 {
        0.5 * (self.x1 + self.x2)
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }
}

fn f_real(model: &PotentialModel, energy: f64, x: f64) -> f64 {
    model.f(energy, Complex64::new(x, 0.0)).re
}

/// Locates the classical region at energy `E`.
///
/// The search box around the well minimum doubles until `V > E` at both
/// edges; each half is scanned on a uniform grid and sign changes of `F`
/// are refined by bisection.
pub fn turning_points(model: &PotentialModel, energy: f64) -> Result<TurningPair> {
    let (xm, vm) = model.well_minimum();
    if !(energy > vm) {
        return Err(Error::NoClassicalRegion { energy });
    }
    if let Some(ceiling) = model.ceiling() {
        // at or above the dissociation limit the region is unbounded
        if energy >= ceiling {
            return Err(Error::NoClassicalRegion { energy });
        }
    }
    // every other critical point must lie inside the box so that extra
    // classical regions cannot hide beyond it
    let mut w = 1.0f64.max(model.critical_radius() + xm.abs());
    let mut grown = 0;
    while model.v_real(xm - w) <= energy || model.v_real(xm + w) <= energy {
        w *= 2.0;
        grown += 1;
        if grown > 200 || !w.is_finite() {
            return Err(Error::NoClassicalRegion { energy });
        }
    }

    let f = |x: f64| f_real(model, energy, x);
    let scale = f(xm);
    let step = w / SCAN_POINTS as f64;
    let mut crossings = Vec::new();
    let mut interior_min = (f64::INFINITY, xm);
    for dir in [-1.0, 1.0] {
        let mut prev = (xm, scale);
        let mut before_prev = f64::INFINITY;
        let mut first_run = true;
        for i in 1..=SCAN_POINTS {
            let x = xm + dir * step * i as f64;
            let fx = f(x);
            if (fx > 0.0) != (prev.1 > 0.0) {
                crossings.push((prev.0, x));
                first_run = false;
            }
            // local minimum of F inside the region: candidate double zero
            if first_run && prev.1 < before_prev && prev.1 <= fx && prev.1 < interior_min.0 {
                interior_min = (prev.1, prev.0);
            }
            before_prev = prev.1;
            prev = (x, fx);
        }
    }
    if crossings.len() > 2 {
        return Err(Error::MultipleClassicalRegions {
            energy,
            crossings: crossings.len(),
        });
    }
    if crossings.len() < 2 {
        return Err(Error::NoClassicalRegion { energy });
    }
    let refine = |(a, b): (f64, f64)| bisect(f, a, b, 0.0);
    let x1 = refine(crossings[0])?;
    let x2 = refine(crossings[1])?;
    let pair = TurningPair { x1, x2 };

    // A double zero of F (touching the axis) makes the turning point
    // non-linear; it shows up either at an end or in the interior.
    for x in [x1, x2] {
        if model.f_prime(Complex64::new(x, 0.0)).norm() * pair.width() <= 1e-6 * scale {
            return Err(Error::NonLinearTurningPoint { x });
        }
    }
    if interior_min.0.is_finite() {
        // polish the sampled minimum: a tangency hides between grid points
        let (mut lo, mut hi) = (interior_min.1 - step, interior_min.1 + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        while hi - lo > 1e-12 * step {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let x = 0.5 * (lo + hi);
        if f(x) <= 1e-9 * scale {
            return Err(Error::NonLinearTurningPoint { x });
        }
    }
    Ok(pair)
}

/// Classical momentum `sqrt(F(x))` on the nonnegative branch.
pub fn classical_momentum(model: &PotentialModel, energy: f64, x: f64) -> Result<f64> {
    let tp = turning_points(model, energy)?;
    let slack = 1e-12 * tp.width();
    if x < tp.x1 - slack || x > tp.x2 + slack {
        return Err(Error::ClassicallyForbidden { x });
    }
    Ok(f_real(model, energy, x).max(0.0).sqrt())
}

/// `S(E) = 2 ∫_{x1}^{x2} sqrt(F) dx` by double-exponential quadrature.
pub fn classical_action(model: &PotentialModel, energy: f64, cfg: &SolverConfig) -> Result<f64> {
    let tp = turning_points(model, energy)?;
    action_between(model, energy, &tp, cfg)
}

pub(crate) fn action_between(
    model: &PotentialModel,
    energy: f64,
    tp: &TurningPair,
    cfg: &SolverConfig,
) -> Result<f64> {
    let levels = cfg.max_iterations.min(16);
    let q = tanh_sinh(
        |x| f_real(model, energy, x).max(0.0).sqrt(),
        tp.x1,
        tp.x2,
        cfg.quadrature_tol,
        levels,
    )?;
    Ok(2.0 * q.value)
}

/// `S(E)` at a fixed quadrature refinement level (step `2^-(level+1)`).
pub fn classical_action_at_level(
    model: &PotentialModel,
    energy: f64,
    level: usize,
) -> Result<f64> {
    let tp = turning_points(model, energy)?;
    Ok(2.0
        * tanh_sinh_at_level(
            |x| f_real(model, energy, x).max(0.0).sqrt(),
            tp.x1,
            tp.x2,
            level,
        ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn harmonic() -> PotentialModel {
        PotentialModel::harmonic(1.0, 1.0).unwrap()
    }

    fn morse() -> PotentialModel {
        PotentialModel::morse(1.0, 8.0, 1.0, 0.0).unwrap()
    }

    fn catalog() -> Vec<PotentialModel> {
        vec![
            harmonic(),
            PotentialModel::harmonic(1.7, 0.6).unwrap(),
            morse(),
            PotentialModel::quartic(1.0, 1.0).unwrap(),
            PotentialModel::polynomial(1.0, vec![0.0, 0.3, 1.0, 0.0, 0.2, 0.0, 0.05]).unwrap(),
        ]
    }

    #[test]
    fn harmonic_turning_points() {
        let tp = turning_points(&harmonic(), 0.5).unwrap();
        assert!((tp.x1 + 1.0).abs() < 1e-14 && (tp.x2 - 1.0).abs() < 1e-14);
        let tp = turning_points(&harmonic(), 2.0).unwrap();
        assert!((tp.x1 + 2.0).abs() < 1e-14 && (tp.x2 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn morse_turning_points_match_analytic_inversion() {
        let e = 1.875;
        let tp = turning_points(&morse(), e).unwrap();
        let r = (e / 8.0f64).sqrt();
        let x1 = -(1.0 + r).ln();
        let x2 = -(1.0 - r).ln();
        assert!(tp.x1 < 0.0 && tp.x2 > 0.0);
        assert!((tp.x1 - x1).abs() < 1e-13, "{} vs {x1}", tp.x1);
        assert!((tp.x2 - x2).abs() < 1e-13, "{} vs {x2}", tp.x2);
    }

    #[test]
    fn turning_point_residual_is_tiny() {
        for m in catalog() {
            let (_, vm) = m.well_minimum();
            for e in [vm + 0.3, vm + 1.7, vm + 5.0] {
                let tp = turning_points(&m, e).unwrap();
                for x in [tp.x1, tp.x2] {
                    let f = f_real(&m, e, x);
                    assert!(f.abs() <= 1e-12 * e.abs().max(1.0), "{} {f}", m.name());
                }
            }
        }
    }

    #[test]
    fn turning_point_errors() {
        assert!(matches!(
            turning_points(&harmonic(), -0.1),
            Err(Error::NoClassicalRegion { .. })
        ));
        assert!(matches!(
            turning_points(&harmonic(), 0.0),
            Err(Error::NoClassicalRegion { .. })
        ));
        // double well (x^2 - 1)^2 below its barrier
        let dw = PotentialModel::polynomial(1.0, vec![1.0, 0.0, -2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            turning_points(&dw, 0.5),
            Err(Error::MultipleClassicalRegions { crossings: 4, .. })
        ));
        // exactly at the barrier top F has a double zero at x = 0
        assert!(matches!(
            turning_points(&dw, 1.0),
            Err(Error::NonLinearTurningPoint { .. }) | Err(Error::MultipleClassicalRegions { .. })
        ));
        assert!(turning_points(&dw, 1.5).is_ok());
        assert!(matches!(
            turning_points(&morse(), 8.5),
            Err(Error::NoClassicalRegion { .. })
        ));
    }

    #[test]
    fn momentum_examples() {
        assert_eq!(classical_momentum(&harmonic(), 0.5, 0.0).unwrap(), 1.0);
        assert_eq!(classical_momentum(&harmonic(), 0.5, 1.0).unwrap(), 0.0);
        let flat = PotentialModel::quartic(1.0, 0.0).unwrap();
        assert_eq!(classical_momentum(&flat, 2.0, 0.0).unwrap(), 2.0);
        assert!(matches!(
            classical_momentum(&harmonic(), 0.5, 1.5),
            Err(Error::ClassicallyForbidden { .. })
        ));
    }

    #[test]
    fn harmonic_action_closed_form() {
        let cfg = SolverConfig::default();
        assert!((classical_action(&harmonic(), 0.5, &cfg).unwrap() - PI).abs() < 1e-12);
        assert!((classical_action(&harmonic(), 2.0, &cfg).unwrap() - 4.0 * PI).abs() < 1e-12);
        let h2 = PotentialModel::harmonic(2.3, 0.8).unwrap();
        for k in 0..11 {
            let e = 0.5 + k as f64;
            let s = classical_action(&h2, e, &cfg).unwrap();
            assert!((s - 2.0 * PI * e / 0.8).abs() <= 1e-10, "E={e}: {s}");
            let s1 = classical_action(&harmonic(), e, &cfg).unwrap();
            assert!((s1 - 2.0 * PI * e).abs() <= 1e-10);
        }
    }

    #[test]
    fn action_vanishes_at_well_bottom() {
        let cfg = SolverConfig::default();
        for m in catalog() {
            let (_, vm) = m.well_minimum();
            let s = classical_action(&m, vm + 1e-8, &cfg).unwrap();
            assert!(s < 1e-6, "{}: {s}", m.name());
        }
    }

    #[test]
    fn action_is_monotone() {
        let cfg = SolverConfig::default();
        for m in catalog() {
            let (_, vm) = m.well_minimum();
            let top = m.ceiling().map(|c| c - vm).unwrap_or(15.0);
            let mut last = 0.0;
            for k in 1..=20 {
                let e = vm + top * k as f64 / 21.0;
                let s = classical_action(&m, e, &cfg).unwrap();
                assert!(s > last, "{} at E={e}", m.name());
                last = s;
            }
        }
    }

    #[test]
    fn refinement_doubling_is_self_consistent() {
        let cfg = SolverConfig::default();
        for m in catalog() {
            let (_, vm) = m.well_minimum();
            let e = vm + 2.5;
            let reference = classical_action(&m, e, &cfg).unwrap();
            let a = classical_action_at_level(&m, e, 6).unwrap();
            let b = classical_action_at_level(&m, e, 7).unwrap();
            assert!((a - b).abs() <= cfg.quadrature_tol * reference, "{}", m.name());
            assert!((b - reference).abs() <= cfg.quadrature_tol * reference);
        }
    }

    #[test]
    fn action_matches_trapezoid_oracle_on_substituted_variable() {
        // With x = c + w cos(t), F = w² sin²(t) G(x) for smooth positive G, so
        // the integrand w² sin²(t) sqrt(G) is smooth and periodic and the
        // midpoint rule converges geometrically.
        let cfg = SolverConfig::default();
        for m in catalog() {
            let (_, vm) = m.well_minimum();
            let e = vm + 1.3;
            let tp = turning_points(&m, e).unwrap();
            let (c, w) = (tp.center(), 0.5 * tp.width());
            let n = 400;
            let mut sum = 0.0;
            for i in 0..n {
                let t = PI * (i as f64 + 0.5) / n as f64;
                let x = c + w * t.cos();
                let g = f_real(&m, e, x) / ((x - tp.x1) * (tp.x2 - x));
                sum += w * w * t.sin().powi(2) * g.sqrt();
            }
            let oracle = 2.0 * sum * PI / n as f64;
            let s = classical_action(&m, e, &cfg).unwrap();
            assert!((s - oracle).abs() < 1e-8 * oracle, "{}: {s} vs {oracle}", m.name());
        }
    }
}
