//! Catalog of analytic one-dimensional wells and the solver configuration.
//!
//! Every catalog potential is an entire function with real coefficients, so
//! `V(conj z) = conj V(z)` and any closed contour is legal. Confinement is
//! checked at construction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialKind {
    /// `V = m ω² x² / 2`
    Harmonic { omega: f64 },
    /// `V = D (1 - exp(-a (x - x0)))²`
    Morse { depth: f64, width: f64, center: f64 },
    /// `V = x²/2 + λ x⁴`
    Quartic { lambda: f64 },
    /// `V = Σ c_k x^k`, ascending powers.
    Polynomial { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    pub mass: f64,
    /// Half-width of the strip `|Im z| < w` on which `V` is analytic.
    pub strip_half_width: f64,
    #[serde(skip)]
    minimum: (f64, f64),
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidModel(format!("{name} must be finite, got {v}")))
    }
}

impl PotentialModel {
    pub fn new(kind: PotentialKind, mass: f64) -> Result<Self> {
        if !(finite("mass", mass)? > 0.0) {
            return Err(Error::InvalidModel(format!("mass must be positive, got {mass}")));
        }
        let minimum = match &kind {
            PotentialKind::Harmonic { omega } => {
                if !(finite("omega", *omega)? > 0.0) {
                    return Err(Error::InvalidModel("omega must be positive".into()));
                }
                (0.0, 0.0)
            }
            PotentialKind::Morse {
                depth,
                width,
                center,
            } => {
                if !(finite("D", *depth)? > 0.0) || !(finite("a", *width)? > 0.0) {
                    return Err(Error::InvalidModel("Morse requires D > 0 and a > 0".into()));
                }
                (finite("x0", *center)?, 0.0)
            }
            PotentialKind::Quartic { lambda } => {
                if finite("lambda", *lambda)? < 0.0 {
                    return Err(Error::InvalidModel(
                        "quartic requires lambda >= 0 (confining well)".into(),
                    ));
                }
                (0.0, 0.0)
            }
            PotentialKind::Polynomial { coefficients } => {
                for c in coefficients {
                    finite("coefficient", *c)?;
                }
                let degree = coefficients.len().saturating_sub(1);
                let lead = coefficients.last().copied().unwrap_or(0.0);
                if degree == 0 || degree % 2 != 0 || !(lead > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "polynomial must have even degree >= 2 and positive leading coefficient \
                         (degree {degree}, leading {lead})"
                    )));
                }
                polynomial_minimum(coefficients)
            }
        };
        Ok(Self {
            kind,
            mass,
            strip_half_width: f64::INFINITY,
            minimum,
        })
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(PotentialKind::Harmonic { omega }, mass)
    }

    pub fn morse(mass: f64, depth: f64, width: f64, center: f64) -> Result<Self> {
        Self::new(
            PotentialKind::Morse {
                depth,
                width,
                center,
            },
            mass,
        )
    }

    pub fn quartic(mass: f64, lambda: f64) -> Result<Self> {
        Self::new(PotentialKind::Quartic { lambda }, mass)
    }

    pub fn polynomial(mass: f64, coefficients: Vec<f64>) -> Result<Self> {
        Self::new(PotentialKind::Polynomial { coefficients }, mass)
    }

    /// Declares a finite analyticity strip. Catalog potentials are entire;
    /// this exists so that domain checks can be exercised and future
    /// singular potentials can state their strip.
    pub fn with_strip_half_width(mut self, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidModel("strip half-width must be positive".into()));
        }
        self.strip_half_width = half_width;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PotentialKind::Harmonic { .. } => "harmonic",
            PotentialKind::Morse { .. } => "morse",
            PotentialKind::Quartic { .. } => "quartic",
            PotentialKind::Polynomial { .. } => "polynomial",
        }
    }

    fn check_domain(&self, z: Complex64) -> Result<()> {
        if z.im.abs() > self.strip_half_width {
            return Err(Error::OutsideAnalyticDomain {
                imag: z.im,
                half_width: self.strip_half_width,
            });
        }
        Ok(())
    }

    /// `V(z)` with the analytic-domain check.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.check_domain(z)?;
        Ok(self.v(z))
    }

    /// `F(z) = 2m (E - V(z))`, zero exactly at turning points.
    pub fn eval_f(&self, energy: f64, z: Complex64) -> Result<Complex64> {
        self.check_domain(z)?;
        Ok(self.f(energy, z))
    }

    /// `F'(z) = -2m V'(z)` with the analytic-domain check.
    pub fn eval_f_prime(&self, z: Complex64) -> Result<Complex64> {
        self.check_domain(z)?;
        Ok(self.f_prime(z))
    }

    pub(crate) fn v(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            PotentialKind::Harmonic { omega } => z * z * (0.5 * self.mass * omega * omega),
            PotentialKind::Morse {
                depth,
                width,
                center,
            } => {
                let s = Complex64::new(1.0, 0.0) - (-(z - center) * width).exp();
                s * s * depth
            }
            PotentialKind::Quartic { lambda } => {
                let z2 = z * z;
                z2 * 0.5 + z2 * z2 * lambda
            }
            PotentialKind::Polynomial { coefficients } => coefficients
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c),
        }
    }

    pub(crate) fn dv(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            PotentialKind::Harmonic { omega } => z * (self.mass * omega * omega),
            PotentialKind::Morse {
                depth,
                width,
                center,
            } => {
                let e = (-(z - center) * width).exp();
                e * (Complex64::new(1.0, 0.0) - e) * (2.0 * depth * width)
            }
            PotentialKind::Quartic { lambda } => z + z * z * z * (4.0 * lambda),
            PotentialKind::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc * z + c * k as f64),
        }
    }

    pub(crate) fn v_real(&self, x: f64) -> f64 {
        self.v(Complex64::new(x, 0.0)).re
    }

    pub(crate) fn f(&self, energy: f64, z: Complex64) -> Complex64 {
        (Complex64::new(energy, 0.0) - self.v(z)) * (2.0 * self.mass)
    }

    pub(crate) fn f_prime(&self, z: Complex64) -> Complex64 {
        -self.dv(z) * (2.0 * self.mass)
    }

    /// Radius around the origin containing every real critical point of `V`
    /// (zero when the only critical point is the well minimum).
    pub(crate) fn critical_radius(&self) -> f64 {
        match &self.kind {
            PotentialKind::Polynomial { coefficients } => cauchy_radius(&derivative(coefficients)),
            _ => 0.0,
        }
    }

    /// Location and value of the global minimum of `V` on the real line.
    pub fn well_minimum(&self) -> (f64, f64) {
        self.minimum
    }

    /// Supremum of bound-state energies when the well is not confining
    /// (the Morse dissociation limit); `None` for confining wells.
    pub fn ceiling(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Morse { depth, .. } => Some(depth),
            _ => None,
        }
    }

    /// Number of bound states when it is finite and known in closed form.
    pub fn bound_state_count(&self, hbar: f64) -> Option<usize> {
        match self.kind {
            PotentialKind::Morse { depth, width, .. } => {
                let s = (2.0 * self.mass * depth).sqrt() / (width * hbar) - 0.5;
                Some(if s <= 0.0 { 0 } else { s.ceil() as usize })
            }
            _ => None,
        }
    }

    /// Closed-form level energy where one is registered (harmonic, Morse).
    pub fn closed_form_energy(&self, n: usize, hbar: f64) -> Result<Option<f64>> {
        let level = n as f64 + 0.5;
        match self.kind {
            PotentialKind::Harmonic { omega } => Ok(Some(level * hbar * omega)),
            PotentialKind::Morse { depth, width, .. } => {
                let capacity = self.bound_state_count(hbar).unwrap_or(0);
                if n >= capacity {
                    return Err(Error::NoBoundState { n, capacity });
                }
                let omega = width * (2.0 * depth / self.mass).sqrt();
                let x = hbar * omega * level;
                Ok(Some(x - x * x / (4.0 * depth)))
            }
            _ => Ok(None),
        }
    }

    /// Point transformation `q -> s q`: the returned model describes the same
    /// system in the stretched coordinate (mass `m / s²`, `V'(q') = V(q'/s)`).
    pub fn rescaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidModel("scale must be positive".into()));
        }
        let mass = self.mass / (s * s);
        match &self.kind {
            PotentialKind::Harmonic { omega } => Self::harmonic(mass, *omega),
            PotentialKind::Morse {
                depth,
                width,
                center,
            } => Self::morse(mass, *depth, width / s, center * s),
            PotentialKind::Quartic { lambda } => {
                Self::polynomial(mass, vec![0.0, 0.0, 0.5 / (s * s), 0.0, lambda / s.powi(4)])
            }
            PotentialKind::Polynomial { coefficients } => Self::polynomial(
                mass,
                coefficients
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c / s.powi(k as i32))
                    .collect(),
            ),
        }
    }
}

fn poly_real(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn derivative(coefficients: &[f64]) -> Vec<f64> {
    coefficients
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// Cauchy bound on the magnitude of the roots of a polynomial.
fn cauchy_radius(coefficients: &[f64]) -> f64 {
    let lead = *coefficients.last().unwrap();
    1.0 + coefficients[..coefficients.len() - 1]
        .iter()
        .map(|d| (d / lead).abs())
        .fold(0.0, f64::max)
}

/// Global minimum of a confining polynomial: dense scan inside the Cauchy
/// bound of the critical points, then golden-section refinement.
fn polynomial_minimum(coefficients: &[f64]) -> (f64, f64) {
    let radius = cauchy_radius(&derivative(coefficients));
    let samples = 4096;
    let step = 2.0 * radius / samples as f64;
    let (mut best_x, mut best_v) = (-radius, poly_real(coefficients, -radius));
    for i in 1..=samples {
        let x = -radius + i as f64 * step;
        let v = poly_real(coefficients, x);
        if v < best_v {
            best_x = x;
            best_v = v;
        }
    }
    let (mut lo, mut hi) = (best_x - step, best_x + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + best_x.abs()) {
            break;
        }
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if poly_real(coefficients, a) < poly_real(coefficients, b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, poly_real(coefficients, x))
}

/// Numerical controls shared by the solvers. `h = 2π ℏ` is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub hbar: f64,
    pub energy_tol: f64,
    pub action_tol: f64,
    pub quadrature_tol: f64,
    pub contour_margin: f64,
    pub contour_nodes: usize,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            energy_tol: 1e-12,
            action_tol: 1e-10,
            quadrature_tol: 1e-12,
            contour_margin: 1.3,
            contour_nodes: 256,
            max_iterations: 200,
        }
    }
}

impl SolverConfig {
    pub fn with_hbar(hbar: f64) -> Self {
        Self {
            hbar,
            ..Self::default()
        }
    }

    /// Planck's constant `h = 2π ℏ`.
    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hbar", self.hbar),
            ("energy_tol", self.energy_tol),
            ("action_tol", self.action_tol),
            ("quadrature_tol", self.quadrature_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.contour_margin > 1.0 && self.contour_margin.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "contour_margin must exceed 1, got {}",
                self.contour_margin
            )));
        }
        if self.contour_nodes < 64 || !self.contour_nodes.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "contour_nodes must be even and >= 64, got {}",
                self.contour_nodes
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn catalog() -> Vec<PotentialModel> {
        vec![
            PotentialModel::harmonic(1.0, 1.0).unwrap(),
            PotentialModel::harmonic(2.0, 0.7).unwrap(),
            PotentialModel::morse(1.0, 8.0, 1.0, 0.0).unwrap(),
            PotentialModel::morse(1.5, 5.0, 0.8, 0.3).unwrap(),
            PotentialModel::quartic(1.0, 1.0).unwrap(),
            PotentialModel::quartic(1.0, 0.0).unwrap(),
            PotentialModel::polynomial(1.0, vec![0.3, 0.2, 1.0, -0.1, 0.5]).unwrap(),
        ]
    }

    #[test]
    fn potential_examples() {
        let h = PotentialModel::harmonic(1.0, 1.0).unwrap();
        assert_eq!(h.eval(c(2.0, 0.0)).unwrap(), c(2.0, 0.0));
        assert_eq!(h.eval(c(0.0, 1.0)).unwrap(), c(-0.5, 0.0));
        let m = PotentialModel::morse(1.0, 8.0, 1.0, 0.0).unwrap();
        assert_eq!(m.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn f_examples() {
        let h = PotentialModel::harmonic(1.0, 1.0).unwrap();
        assert_eq!(h.eval_f(0.5, c(1.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(h.eval_f(0.5, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let q = PotentialModel::quartic(1.0, 1.0).unwrap();
        assert_eq!(q.eval_f(1.0, c(0.0, 0.0)).unwrap(), c(2.0, 0.0));
    }

    #[test]
    fn closed_form_examples() {
        let h = PotentialModel::harmonic(1.0, 1.0).unwrap();
        assert_eq!(h.closed_form_energy(3, 1.0).unwrap(), Some(3.5));
        let m = PotentialModel::morse(1.0, 8.0, 1.0, 0.0).unwrap();
        assert_eq!(m.closed_form_energy(0, 1.0).unwrap(), Some(1.875));
        assert_eq!(m.closed_form_energy(3, 1.0).unwrap(), Some(7.875));
        assert!(matches!(
            m.closed_form_energy(4, 1.0),
            Err(Error::NoBoundState { n: 4, capacity: 4 })
        ));
        let q = PotentialModel::quartic(1.0, 1.0).unwrap();
        assert_eq!(q.closed_form_energy(0, 1.0).unwrap(), None);
    }

    #[test]
    fn harmonic_closed_form_is_linear() {
        let h = PotentialModel::harmonic(1.3, 0.9).unwrap();
        let e: Vec<f64> = (0..20)
            .map(|n| h.closed_form_energy(n, 0.7).unwrap().unwrap())
            .collect();
        let d0 = e[1] - e[0];
        for w in e.windows(2) {
            assert!(((w[1] - w[0]) - d0).abs() <= 1e-15 * 16.0);
        }
    }

    #[test]
    fn rejects_bad_models() {
        assert!(PotentialModel::harmonic(0.0, 1.0).is_err());
        assert!(PotentialModel::harmonic(1.0, -1.0).is_err());
        assert!(PotentialModel::morse(1.0, -8.0, 1.0, 0.0).is_err());
        assert!(PotentialModel::morse(1.0, 8.0, 0.0, 0.0).is_err());
        assert!(PotentialModel::quartic(1.0, -0.1).is_err());
        assert!(PotentialModel::polynomial(1.0, vec![0.0, 0.0, 0.0, 1.0]).is_err());
        assert!(PotentialModel::polynomial(1.0, vec![0.0, 0.0, -1.0]).is_err());
        assert!(PotentialModel::polynomial(1.0, vec![1.0]).is_err());
    }

    #[test]
    fn outside_strip_is_rejected() {
        let h = PotentialModel::harmonic(1.0, 1.0)
            .unwrap()
            .with_strip_half_width(0.5)
            .unwrap();
        assert!(matches!(
            h.eval(c(0.0, 0.6)),
            Err(Error::OutsideAnalyticDomain { .. })
        ));
        assert!(h.eval(c(3.0, 0.4)).is_ok());
    }

    #[test]
    fn polynomial_minimum_found() {
        // (x^2 - 1)^2 + 0.1 x has its global minimum near x = -1
        let p = PotentialModel::polynomial(1.0, vec![1.0, 0.1, -2.0, 0.0, 1.0]).unwrap();
        let (x, v) = p.well_minimum();
        assert!(p.dv(c(x, 0.0)).norm() < 1e-7);
        assert!(x < 0.0);
        for i in -300..300 {
            assert!(p.v_real(i as f64 * 0.01) >= v - 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for m in catalog() {
            for &z in &[c(0.3, 0.2), c(-1.1, 0.7), c(0.8, -0.4)] {
                let h = 1e-5;
                let fd = (m.v(z + h) - m.v(z - h)) / (2.0 * h);
                assert!((fd - m.dv(z)).norm() < 1e-7 * (1.0 + fd.norm()), "{}", m.name());
            }
        }
    }

    #[test]
    fn sign_of_f_inside_and_outside_classical_region() {
        for m in catalog() {
            let (x0, v0) = m.well_minimum();
            let top = m.ceiling().unwrap_or(v0 + 20.0);
            for k in 1..8 {
                let e = v0 + (top - v0) * k as f64 / 9.0;
                let tp = crate::classical::turning_points(&m, e).unwrap();
                for i in 1..50 {
                    let x = tp.x1 + (tp.x2 - tp.x1) * i as f64 / 50.0;
                    assert!(m.f(e, c(x, 0.0)).re > 0.0);
                }
                let w = tp.x2 - tp.x1;
                for i in 1..20 {
                    let d = w * i as f64 / 10.0;
                    assert!(m.f(e, c(tp.x2 + d, 0.0)).re < 0.0);
                    assert!(m.f(e, c(tp.x1 - d, 0.0)).re < 0.0);
                }
                let _ = x0;
            }
        }
    }

    proptest! {
        #[test]
        fn schwarz_reflection(re in -3.0f64..3.0, im in -2.0f64..2.0) {
            let z = c(re, im);
            for m in catalog() {
                let lhs = m.eval(z.conj()).unwrap();
                let rhs = m.eval(z).unwrap().conj();
                prop_assert!((lhs - rhs).norm() <= 1e-12);
            }
        }

        #[test]
        fn real_on_real_axis(x in -4.0f64..4.0) {
            for m in catalog() {
                prop_assert_eq!(m.eval(c(x, 0.0)).unwrap().im, 0.0);
            }
        }
    }
}
