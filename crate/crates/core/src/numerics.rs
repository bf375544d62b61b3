//! Small numerical kernels shared by the other modules: composite and
//! cumulative trapezoid rules on uniform grids, adaptive Simpson quadrature,
//! monotone bisection, monotone cubic (Fritsch–Carlson) interpolation and
//! the quintic smoothstep used by the cutoff functional.

use crate::error::CoreError;
use crate::Result;

/// Composite trapezoid of uniformly spaced samples.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    dx * (0.5 * (values[0] + values[values.len() - 1]) + interior)
}

/// Cumulative trapezoid from the left edge; `out[0] = 0`.
pub fn cumulative_trapezoid(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Tail trapezoid from the right edge; `out[n-1] = 0` and
/// `out[i] = ∫ from x_i to x_last`.
pub fn tail_trapezoid(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n.saturating_sub(1)).rev() {
        acc += 0.5 * dx * (values[i] + values[i + 1]);
        out[i] = acc;
    }
    out
}

/// Maximum recursion depth for adaptive Simpson subdivision.
const SIMPSON_MAX_DEPTH: u32 = 60;

/// Adaptive Simpson quadrature with a relative tolerance.
///
/// The absolute budget is `rel_tol * max(|coarse estimate|, floor)` so the
/// rule behaves sanely when the integral is close to zero.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_rule(a, b, fa, fm, fb);
    let budget = rel_tol * whole.abs().max(1e-300);
    simpson_recurse(f, a, b, fa, fm, fb, whole, budget.max(rel_tol * 1e-12), SIMPSON_MAX_DEPTH)
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

/// Bisection for the root of a monotone function on `[lo, hi]`.
///
/// Converges unconditionally on a sign change, which is why the wave-speed
/// inverses use it instead of Newton: G and G̃ are flat near the degeneracy
/// point and Newton steps there are unbounded.
pub fn bisect_monotone<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, x_tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(CoreError::Bracket(format!(
            "no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}"
        )));
    }
    let increasing = fhi > 0.0;
    while hi - lo > x_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        let fmid = f(mid);
        if (fmid > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Monotone cubic interpolant (Fritsch–Carlson slopes, Hermite evaluation).
///
/// For monotone node data the interpolant is monotone; this is what lets a
/// tabulated wave speed certify c′ > 0 where a linear spline could not.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(CoreError::Config(format!(
                "interpolation table length mismatch: {} abscissae, {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(CoreError::Config("interpolation table needs >= 2 points".into()));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::Config(format!(
                    "interpolation abscissae must strictly increase, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::Config("interpolation table contains non-finite values".into()));
        }

        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

        let mut slopes = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // Weighted harmonic mean keeps (alpha, beta) strictly inside
                // the Fritsch-Carlson monotonicity region.
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        slopes[0] = endpoint_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], delta.get(1).copied().unwrap_or(delta[0]));
        slopes[n - 1] = endpoint_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n >= 3 { delta[n - 3] } else { delta[n - 2] },
        );

        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), slopes })
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|probe| probe.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    /// Interpolated value at `x` (must lie inside the table range).
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    /// Derivative of the interpolant at `x`.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let d_h00 = (6.0 * t * t - 6.0 * t) / h;
        let d_h10 = 3.0 * t * t - 4.0 * t + 1.0;
        let d_h01 = (-6.0 * t * t + 6.0 * t) / h;
        let d_h11 = 3.0 * t * t - 2.0 * t;
        d_h00 * self.ys[i] + d_h10 * self.slopes[i] + d_h01 * self.ys[i + 1] + d_h11 * self.slopes[i + 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min() && x <= self.x_max()
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

/// Non-centered three-point endpoint slope with the usual monotonicity clamp.
fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let slope = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if slope * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && slope.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        slope
    }
}

/// C² smoothstep ramp: s(0) = 1, s(1) = 0 with s′ = s″ = 0 at both ends.
pub fn quintic_ramp(r: f64) -> f64 {
    if r <= 0.0 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        1.0 - (6.0 * r.powi(5) - 15.0 * r.powi(4) + 10.0 * r.powi(3))
    }
}

pub fn quintic_ramp_d1(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        -(30.0 * r.powi(4) - 60.0 * r.powi(3) + 30.0 * r.powi(2))
    }
}

pub fn quintic_ramp_d2(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        -(120.0 * r.powi(3) - 180.0 * r.powi(2) + 60.0 * r)
    }
}
