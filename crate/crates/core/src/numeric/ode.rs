//! Embedded Dormand-Prince 5(4) integrator for complex-valued systems along
//! a real parameter.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus the embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State<const N: usize> = [Complex64; N];

fn axpy<const N: usize>(y: &State<N>, terms: &[(f64, &State<N>)], h: f64) -> State<N> {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (c * h);
        }
    }
    out
}

/// Adaptive stepper. The step size persists between calls to [`Stepper::advance`],
/// so integrating node to node along a path does not restart step selection.
#[derive(Debug, Clone)]
pub struct Stepper {
    /// Allowed local error per unit path length, relative to the state magnitude.
    pub tol: f64,
    /// Path length traversed per unit of the integration parameter.
    pub length_per_param: f64,
    /// Components smaller than this fraction of the largest one are measured
    /// against that fraction instead of their own magnitude.
    pub relative_floor: f64,
    /// Absolute magnitude below which components are not measured relatively.
    pub abs_floor: f64,
    pub max_steps: usize,
    pub steps: usize,
    h: Option<f64>,
}

impl Stepper {
    pub fn new(tol: f64, length_per_param: f64) -> Self {
        Self {
            tol,
            length_per_param,
            relative_floor: 1e-6,
            abs_floor: 0.0,
            max_steps: 2_000_000,
            steps: 0,
            h: None,
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) in place.
    /// `observer` runs after every accepted step and may rescale the state
    /// (valid for linear systems) or abort.
    pub fn advance<const N: usize, F, G>(
        &mut self,
        mut f: F,
        t0: f64,
        t1: f64,
        y: &mut State<N>,
        mut observer: G,
    ) -> Result<()>
    where
        F: FnMut(f64, &State<N>) -> State<N>,
        G: FnMut(f64, &mut State<N>) -> Result<()>,
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut h = self
            .h
            .map(|h| h.abs())
            .unwrap_or(span.abs() / 64.0)
            .min(span.abs());
        let h_min = 1e-13 * span.abs().max(1e-300);
        let mut t = t0;
        let mut k1 = f(t, y);
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;

            let k2 = f(t + C2 * hs, &axpy(y, &[(A21, &k1)], hs));
            let k3 = f(t + C3 * hs, &axpy(y, &[(A31, &k1), (A32, &k2)], hs));
            let k4 = f(
                t + C4 * hs,
                &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs),
            );
            let k5 = f(
                t + C5 * hs,
                &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
            );
            let k6 = f(
                t + hs,
                &axpy(
                    y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    hs,
                ),
            );
            let y_new = axpy(
                y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                hs,
            );
            let k7 = f(t + hs, &y_new);

            let ymax = y
                .iter()
                .chain(y_new.iter())
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            let len = hs.abs() * self.length_per_param;
            let mut ratio: f64 = 0.0;
            for i in 0..N {
                let err = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6
                    + k7[i] * E7)
                    * hs;
                let scale = y[i]
                    .norm()
                    .max(y_new[i].norm())
                    .max(self.relative_floor * ymax)
                    .max(self.abs_floor);
                let denom = self.tol * len.max(1e-300) * scale;
                ratio = ratio.max(err.norm() / denom);
            }
            if !ratio.is_finite() {
                ratio = 1e10;
            }

            if ratio <= 1.0 {
                self.steps += 1;
                if self.steps > self.max_steps {
                    return Err(Error::StiffTransport { at: t });
                }
                t = if last { t1 } else { t + hs };
                *y = y_new;
                let before = *y;
                observer(t, y)?;
                k1 = if *y == before {
                    k7
                } else {
                    f(t, y)
                };
                let grow = if ratio == 0.0 {
                    5.0
                } else {
                    (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a truncated final step says little about the natural step size
                if !last {
                    h = hs.abs() * grow;
                }
                self.h = Some(h);
            } else {
                h = hs.abs() * (0.9 * ratio.powf(-0.25)).clamp(0.1, 0.9);
                if h < h_min {
                    return Err(Error::StiffTransport { at: t });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_growth_along_real_parameter() {
        let mut s = Stepper::new(1e-12, 1.0);
        let mut y = [c(1.0, 0.0)];
        s.advance(|_, y| [y[0]], 0.0, 2.0, &mut y, |_, _| Ok(()))
            .unwrap();
        assert!((y[0].re - 2f64.exp()).abs() < 1e-10 * 2f64.exp());
    }

    #[test]
    fn complex_rotation_backward() {
        // y' = i y integrated from 1 back to 0 recovers the initial value.
        let mut s = Stepper::new(1e-12, 1.0);
        let start = c(0.0, 1.0).exp();
        let mut y = [start];
        s.advance(|_, y| [c(0.0, 1.0) * y[0]], 1.0, 0.0, &mut y, |_, _| Ok(()))
            .unwrap();
        assert!((y[0] - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn harmonic_second_order_system() {
        // psi'' = -psi, psi(0) = 0, psi'(0) = 1 -> sin
        let mut s = Stepper::new(1e-12, 1.0);
        let mut y = [c(0.0, 0.0), c(1.0, 0.0)];
        s.advance(|_, y| [y[1], -y[0]], 0.0, 10.0, &mut y, |_, _| Ok(()))
            .unwrap();
        assert!((y[0].re - 10f64.sin()).abs() < 1e-9);
        assert!((y[1].re - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn observer_rescaling_is_honored() {
        let mut s = Stepper::new(1e-10, 1.0);
        let mut y = [c(1.0, 0.0)];
        let mut log_scale = 0.0;
        s.advance(
            |_, y| [y[0] * 50.0],
            0.0,
            20.0,
            &mut y,
            |_, y| {
                if y[0].norm() > 1e50 {
                    log_scale += y[0].norm().ln();
                    y[0] /= y[0].norm();
                }
                Ok(())
            },
        )
        .unwrap();
        let total = log_scale + y[0].norm().ln();
        assert!((total - 1000.0).abs() < 1e-6, "{total}");
    }
}
