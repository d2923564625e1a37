//! Brute-force reference eigenvalues by Numerov shooting on the real axis.
//!
//! Deliberately self-contained: its own minimum search, domain selection,
//! integrator and root finder, so agreement with the contour engine is
//! evidence rather than a shared bug.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialModel;

/// Decay exponent required between the outer turning point and the grid edge.
const EDGE_DECAY: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Fixed half-width around the well minimum; automatic when absent.
    pub domain_halfwidth: Option<f64>,
    pub grid_points: usize,
    /// Grid doublings after the base grid.
    pub refinement_rounds: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            domain_halfwidth: None,
            grid_points: 8192,
            refinement_rounds: 3,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 1024 {
            return Err(Error::InvalidConfig(format!(
                "oracle grid_points must be >= 1024, got {}",
                self.grid_points
            )));
        }
        if self.refinement_rounds == 0 {
            return Err(Error::InvalidConfig("oracle refinement_rounds must be >= 1".into()));
        }
        if let Some(w) = self.domain_halfwidth {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig("oracle domain_halfwidth must be positive".into()));
            }
        }
        Ok(())
    }
}

struct Problem<'a> {
    model: &'a PotentialModel,
    hbar: f64,
    xmin: f64,
    vmin: f64,
}

impl<'a> Problem<'a> {
    fn new(model: &'a PotentialModel, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) {
            return Err(Error::InvalidConfig("hbar must be positive".into()));
        }
        let v = |x: f64| model.v_real(x);
        // coarse scan over growing windows, then golden-section polish
        let mut radius = 1.0;
        let (mut best, mut step);
        loop {
            let samples = 4000;
            step = 2.0 * radius / samples as f64;
            best = -radius;
            for i in 0..=samples {
                let x = -radius + i as f64 * step;
                if v(x) < v(best) {
                    best = x;
                }
            }
            if (best.abs() - radius).abs() > 2.0 * step || radius > 1e6 {
                break;
            }
            radius *= 4.0;
        }
        let (mut lo, mut hi) = (best - step, best + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        while hi - lo > 1e-14 * (1.0 + best.abs()) {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if v(a) < v(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let xmin = 0.5 * (lo + hi);
        Ok(Self {
            model,
            hbar,
            xmin,
            vmin: v(xmin),
        })
    }

    /// `Q = 2m(E - V)/ℏ²` so that `ψ'' = -Q ψ`.
    fn q(&self, energy: f64, x: f64) -> f64 {
        2.0 * self.model.mass * (energy - self.model.v_real(x)) / (self.hbar * self.hbar)
    }

    /// Edge reached after the solution decaying outward has lost `e^{-decay}`.
    fn edge(&self, energy: f64, dir: f64) -> Result<f64> {
        let mut x = self.xmin;
        let mut dx = 1e-3;
        let mut acc = 0.0;
        for _ in 0..2_000_000 {
            let q = self.q(energy, x);
            if q >= 0.0 {
                acc = 0.0;
            } else {
                let kappa = (-q).sqrt();
                acc += kappa * dx;
                if acc >= EDGE_DECAY {
                    return Ok(x);
                }
                dx = dx.min(0.25 / kappa);
            }
            x += dir * dx;
            dx *= 1.01;
        }
        Err(Error::OracleNotConverged(format!("no decaying edge at E = {energy}")))
    }

    fn domain(&self, energy: f64, ocfg: &OracleConfig) -> Result<(f64, f64)> {
        match ocfg.domain_halfwidth {
            Some(w) => Ok((self.xmin - w, self.xmin + w)),
            None => Ok((self.edge(energy, -1.0)?, self.edge(energy, 1.0)?)),
        }
    }
}

struct Grid {
    a: f64,
    h: f64,
    points: usize,
}

impl Grid {
    fn new(a: f64, b: f64, points: usize) -> Self {
        Self {
            a,
            h: (b - a) / (points - 1) as f64,
            points,
        }
    }

    fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h
    }
}

/// Numerov recursion from the left edge with `ψ(a) = 0`; returns the
/// number of sign changes (Dirichlet count of levels below `E`).
fn dirichlet_count(p: &Problem, energy: f64, grid: &Grid) -> usize {
    let h2 = grid.h * grid.h / 12.0;
    let w = |i: usize| 1.0 + h2 * p.q(energy, grid.x(i));
    let (mut y0, mut y1) = (0.0f64, 1e-20f64);
    let (mut w0, mut w1) = (w(0), w(1));
    let mut count = 0;
    for i in 2..grid.points {
        let w2 = w(i);
        let y2 = ((12.0 - 10.0 * w1) * y1 - w0 * y0) / w2;
        if y2 == 0.0 || (y2 < 0.0) != (y1 < 0.0) {
            count += 1;
        }
        y0 = y1;
        y1 = y2;
        w0 = w1;
        w1 = w2;
        if y1.abs() > 1e200 {
            y0 *= 1e-200;
            y1 *= 1e-200;
        }
    }
    count
}

/// Numerov solutions from both edges, each with `ψ(edge) = 0`, meeting at
/// grid index `m` nearest the well minimum. Values before scaling to each other.
fn sweep(p: &Problem, energy: f64, grid: &Grid) -> (Vec<f64>, Vec<f64>, usize) {
    let n = grid.points;
    let h2 = grid.h * grid.h / 12.0;
    let w: Vec<f64> = (0..n).map(|i| 1.0 + h2 * p.q(energy, grid.x(i))).collect();
    let m = (((p.xmin - grid.a) / grid.h).round() as usize).clamp(2, n - 3);

    let mut left = vec![0.0; m + 2];
    left[1] = 1e-20;
    for i in 1..=m {
        left[i + 1] = ((12.0 - 10.0 * w[i]) * left[i] - w[i - 1] * left[i - 1]) / w[i + 1];
        if left[i + 1].abs() > 1e200 {
            for v in left.iter_mut().take(i + 2) {
                *v *= 1e-200;
            }
        }
    }
    let mut right = vec![0.0; n];
    right[n - 2] = 1e-20;
    for i in (m..n - 1).rev() {
        right[i - 1] = ((12.0 - 10.0 * w[i]) * right[i] - w[i + 1] * right[i + 1]) / w[i - 1];
        if right[i - 1].abs() > 1e200 {
            for v in right.iter_mut().skip(i - 1) {
                *v *= 1e-200;
            }
        }
    }
    (left, right, m)
}

/// Normalized discrete Wronskian of the two edge solutions at the matching
/// point; vanishes exactly at eigenvalues of the discrete problem.
fn mismatch(p: &Problem, energy: f64, grid: &Grid) -> f64 {
    let (left, right, m) = sweep(p, energy, grid);
    let (l0, l1) = (left[m], left[m + 1]);
    let (r0, r1) = (right[m], right[m + 1]);
    (l1 * r0 - l0 * r1) / ((l0 * l0 + l1 * l1).sqrt() * (r0 * r0 + r1 * r1).sqrt())
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn illinois<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::OracleNotConverged("refinement bracket lost".into()));
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * c.abs().max(1e-300) {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= 1e-15 * a.abs().max(b.abs()) {
            return Ok(0.5 * (a + b));
        }
    }
    Ok(0.5 * (a + b))
}

/// Energy window `[lo, hi]` holding level `n` and no other, isolated by
/// bisection on the Dirichlet count.
fn isolate(p: &Problem, n: usize, ocfg: &OracleConfig) -> Result<(f64, f64)> {
    let ceiling = p.model.ceiling();
    let count_at = |e: f64| -> Result<usize> {
        let (a, b) = p.domain(e, ocfg)?;
        Ok(dirichlet_count(p, e, &Grid::new(a, b, ocfg.grid_points)))
    };
    let mut hi = None;
    match ceiling {
        Some(d) => {
            for k in 1..=10 {
                let e = d - (d - p.vmin) * 0.5f64.powi(k);
                if count_at(e)? > n {
                    hi = Some(e);
                    break;
                }
            }
        }
        None => {
            let mut span = p.hbar;
            for _ in 0..200 {
                let e = p.vmin + span;
                if count_at(e)? > n {
                    hi = Some(e);
                    break;
                }
                span *= 2.0;
            }
        }
    }
    let mut hi = hi.ok_or(Error::OracleNotConverged(format!("level {n} not found below the well top")))?;
    let mut lo = p.vmin;
    // bisection keeps count(lo) <= n < count(hi); stop once lo sits above level n-1
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = count_at(mid)?;
        if c > n {
            hi = mid;
        } else {
            lo = mid;
        }
        if c == n && (hi - lo) < 1e-3 * (hi - p.vmin) {
            break;
        }
    }
    if count_at(lo)? != n {
        return Err(Error::OracleNotConverged(format!("could not isolate level {n}")));
    }
    Ok((lo, hi))
}

fn refine_on(p: &Problem, window: (f64, f64), grid: &Grid) -> Result<f64> {
    let (mut lo, mut hi) = window;
    let mut pad = hi - lo;
    let f = |e: f64| mismatch(p, e, grid);
    // the level on this grid may sit outside the window found on the count grid;
    // widen geometrically, so the nearest sign change is met first
    for _ in 0..40 {
        if f(lo).signum() != f(hi).signum() {
            return illinois(f, lo, hi);
        }
        lo = (lo - pad).max(p.vmin + 1e-15 * (1.0 + p.vmin.abs()));
        hi += pad;
        pad *= 2.0;
    }
    Err(Error::OracleNotConverged("no sign change of the matching Wronskian".into()))
}

/// Level `n` of `model` at the given ℏ, with Richardson-extrapolated grid doubling.
pub fn oracle_eigenvalue(model: &PotentialModel, n: usize, hbar: f64, ocfg: &OracleConfig) -> Result<f64> {
    ocfg.validate()?;
    let p = Problem::new(model, hbar)?;
    let window = isolate(&p, n, ocfg)?;
    let (a, b) = p.domain(window.1, ocfg)?;
    let mut raw = Vec::new();
    let mut extrapolated: Vec<f64> = Vec::new();
    for round in 0..=ocfg.refinement_rounds {
        let grid = Grid::new(a, b, (ocfg.grid_points - 1) * (1 << round) + 1);
        let e = refine_on(&p, window, &grid)?;
        if let Some(&prev) = raw.last() {
            extrapolated.push((16.0 * e - prev) / 15.0);
        }
        raw.push(e);
    }
    let scale = (raw[raw.len() - 1] - p.vmin).abs().max(hbar);
    match extrapolated.as_slice() {
        [.., x, y] => {
            if (y - x).abs() > 1e-8 * scale {
                return Err(Error::OracleNotConverged(format!(
                    "level {n}: refinements differ by {:e}",
                    (y - x).abs()
                )));
            }
            Ok(*y)
        }
        [y] => Ok(*y),
        [] => Ok(raw[0]),
    }
}

/// Interior sign changes of the matched eigenfunction at `energy`.
pub fn oracle_nodes(model: &PotentialModel, energy: f64, hbar: f64, ocfg: &OracleConfig) -> Result<usize> {
    ocfg.validate()?;
    let p = Problem::new(model, hbar)?;
    let (a, b) = p.domain(energy, ocfg)?;
    let grid = Grid::new(a, b, ocfg.grid_points);
    let (left, right, m) = sweep(&p, energy, &grid);
    let scale = if left[m].abs() > left[m + 1].abs() {
        left[m] / right[m]
    } else {
        left[m + 1] / right[m + 1]
    };
    let psi: Vec<f64> = left[..=m]
        .iter()
        .copied()
        .chain(right[m + 1..].iter().map(|r| r * scale))
        .collect();
    let peak = psi.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let significant: Vec<f64> = psi.into_iter().filter(|v| v.abs() > 1e-10 * peak).collect();
    Ok(significant
        .windows(2)
        .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
        .count())
}
