//! The wave speed c(θ) and the antiderivative functionals built from it.
//!
//! Admissible wave speeds vanish at θ = −1 and are positive and strictly
//! increasing above it. Everything downstream is phrased through the three
//! antiderivatives
//!
//! G(u)  = ∫_{−1}^u c(θ) dθ,
//! G̃(u) = ∫_{−1}^u √(c(θ)c′(θ)) dθ,
//! G₂(u) = ∫_{−1}^u c(θ)² dθ,
//!
//! which are strictly increasing, hence invertible, on [−1, ∞). The
//! power-law family c(θ) = (1+θ)^a has closed forms for all of them; the
//! tabulated family falls back to adaptive quadrature and monotone
//! bisection.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::numerics::{adaptive_simpson, bisect_monotone, MonotoneCubic};
use crate::Result;

/// Degeneracy point of the wave speed.
pub const DOMAIN_FLOOR: f64 = -1.0;

/// Largest admissible power-law exponent. Larger exponents overflow the
/// threshold experiments long before they add generality.
pub const MAX_EXPONENT: f64 = 10.0;

/// Relative tolerance of the quadrature fallback.
pub const QUAD_REL_TOL: f64 = 1e-10;

/// Absolute tolerance (in u) of the bisection inverses.
pub const INVERSE_X_TOL: f64 = 1e-12;

/// Serialized form of a wave-speed model, as it appears in scenario JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WaveSpeedSpec {
    PowerLaw { a: f64 },
    Tabulated { theta: Vec<f64>, c: Vec<f64> },
}

impl WaveSpeedSpec {
    pub fn build(&self) -> Result<WaveSpeedModel> {
        match self {
            WaveSpeedSpec::PowerLaw { a } => WaveSpeedModel::power_law(*a),
            WaveSpeedSpec::Tabulated { theta, c } => WaveSpeedModel::tabulated(theta, c),
        }
    }
}

#[derive(Debug, Clone)]
enum Family {
    PowerLaw { a: f64 },
    Tabulated { interp: MonotoneCubic, theta_max: f64 },
}

/// The wave speed together with its derivative and antiderivatives.
///
/// Immutable after construction; shared freely across concurrent runs.
#[derive(Debug, Clone)]
pub struct WaveSpeedModel {
    family: Family,
}

/// Outcome of checking the admissibility conditions on a model.
///
/// For tabulated families only the sampled points are certified; smoothness
/// between samples is an assumption of the interpolant, not a verified
/// property, and `smoothness_certified` records that.
#[derive(Debug, Clone, Serialize)]
pub struct WaveSpeedValidation {
    pub family: String,
    pub positive_above_floor: bool,
    pub zero_at_floor: bool,
    pub derivative_positive: bool,
    pub antiderivatives_increasing: bool,
    pub smoothness_certified: bool,
}

impl WaveSpeedValidation {
    pub fn admissible(&self) -> bool {
        self.positive_above_floor
            && self.zero_at_floor
            && self.derivative_positive
            && self.antiderivatives_increasing
    }
}

impl WaveSpeedModel {
    /// Power-law wave speed c(θ) = (1+θ)^a with a in (0, MAX_EXPONENT].
    pub fn power_law(a: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 || a > MAX_EXPONENT {
            return Err(CoreError::Config(format!(
                "power-law exponent must lie in (0, {MAX_EXPONENT}], got {a}"
            )));
        }
        Ok(Self { family: Family::PowerLaw { a } })
    }

    /// Tabulated wave speed, interpolated with a monotone cubic.
    ///
    /// The table must start at θ = −1 with c = 0 and be strictly increasing
    /// in both columns; this certifies the admissibility conditions at the
    /// sample points.
    pub fn tabulated(theta: &[f64], c: &[f64]) -> Result<Self> {
        if theta.len() != c.len() {
            return Err(CoreError::Config(format!(
                "tabulated model: {} thetas vs {} speeds",
                theta.len(),
                c.len()
            )));
        }
        if theta.len() < 4 {
            return Err(CoreError::Config("tabulated model needs >= 4 samples".into()));
        }
        if (theta[0] - DOMAIN_FLOOR).abs() > 1e-9 {
            return Err(CoreError::Config(format!(
                "tabulated model must start at theta = -1, got {}",
                theta[0]
            )));
        }
        if c[0].abs() > 1e-12 {
            return Err(CoreError::Config(format!("c(-1) must vanish, got {}", c[0])));
        }
        for (i, w) in c.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(CoreError::Config(format!(
                    "c samples must strictly increase (c' > 0), violated at index {i}"
                )));
            }
        }
        if c[1..].iter().any(|v| !(*v > 0.0)) {
            return Err(CoreError::Config("c must be positive above theta = -1".into()));
        }
        let interp = MonotoneCubic::new(theta, c)?;
        let theta_max = *theta.last().unwrap();
        Ok(Self { family: Family::Tabulated { interp, theta_max } })
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::PowerLaw { .. } => "power_law",
            Family::Tabulated { .. } => "tabulated",
        }
    }

    /// Power-law exponent, if this is a power-law model.
    pub fn exponent(&self) -> Option<f64> {
        match self.family {
            Family::PowerLaw { a } => Some(a),
            Family::Tabulated { .. } => None,
        }
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if !theta.is_finite() || theta < DOMAIN_FLOOR {
            return Err(CoreError::Domain(format!(
                "theta = {theta} below the degeneracy point -1; the solution left the physical range"
            )));
        }
        if let Family::Tabulated { theta_max, .. } = self.family {
            if theta > theta_max {
                return Err(CoreError::Domain(format!(
                    "theta = {theta} beyond tabulated range (max {theta_max})"
                )));
            }
        }
        Ok(())
    }

    /// c(θ).
    pub fn c(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match &self.family {
            Family::PowerLaw { a } => pow_1p(theta, *a),
            Family::Tabulated { interp, .. } => interp.eval(theta).max(0.0),
        })
    }

    /// c′(θ). Power laws with a < 1 are singular at θ = −1.
    pub fn c_prime(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        match &self.family {
            Family::PowerLaw { a } => {
                if *a < 1.0 && theta <= DOMAIN_FLOOR {
                    return Err(CoreError::Domain(format!(
                        "c' is singular at theta = -1 for exponent a = {a} < 1"
                    )));
                }
                Ok(*a * pow_1p(theta, *a - 1.0))
            }
            Family::Tabulated { interp, .. } => Ok(interp.eval_derivative(theta)),
        }
    }

    /// G(u) = ∫_{−1}^u c.
    pub fn big_g(&self, u: f64) -> Result<f64> {
        self.check_theta(u)?;
        Ok(match &self.family {
            Family::PowerLaw { a } => pow_1p(u, a + 1.0) / (a + 1.0),
            Family::Tabulated { .. } => self.quad(u, |t| self.c(t).unwrap_or(0.0)),
        })
    }

    /// G̃(u) = ∫_{−1}^u √(c c′).
    pub fn big_g_tilde(&self, u: f64) -> Result<f64> {
        self.check_theta(u)?;
        Ok(match &self.family {
            Family::PowerLaw { a } => {
                2.0 * a.sqrt() / (2.0 * a + 1.0) * pow_1p(u, a + 0.5)
            }
            Family::Tabulated { .. } => self.quad(u, |t| {
                let c = self.c(t).unwrap_or(0.0);
                let cp = self.c_prime(t).unwrap_or(0.0).max(0.0);
                (c * cp).sqrt()
            }),
        })
    }

    /// G₂(u) = ∫_{−1}^u c².
    pub fn big_g2(&self, u: f64) -> Result<f64> {
        self.check_theta(u)?;
        Ok(match &self.family {
            Family::PowerLaw { a } => pow_1p(u, 2.0 * a + 1.0) / (2.0 * a + 1.0),
            Family::Tabulated { .. } => self.quad(u, |t| {
                let c = self.c(t).unwrap_or(0.0);
                c * c
            }),
        })
    }

    fn quad<F: Fn(f64) -> f64>(&self, u: f64, f: F) -> f64 {
        adaptive_simpson(&f, DOMAIN_FLOOR, u, QUAD_REL_TOL)
    }

    /// Inverse of G: the u ≥ −1 with G(u) = g.
    pub fn inv_big_g(&self, g: f64) -> Result<f64> {
        self.check_inverse_arg(g)?;
        match &self.family {
            Family::PowerLaw { a } => Ok((g * (a + 1.0)).powf(1.0 / (a + 1.0)) - 1.0),
            Family::Tabulated { theta_max, .. } => {
                self.invert_by_bisection(g, *theta_max, |u| self.big_g(u))
            }
        }
    }

    /// Inverse of G̃.
    pub fn inv_big_g_tilde(&self, g: f64) -> Result<f64> {
        self.check_inverse_arg(g)?;
        match &self.family {
            Family::PowerLaw { a } => {
                Ok((g * (2.0 * a + 1.0) / (2.0 * a.sqrt())).powf(1.0 / (a + 0.5)) - 1.0)
            }
            Family::Tabulated { theta_max, .. } => {
                self.invert_by_bisection(g, *theta_max, |u| self.big_g_tilde(u))
            }
        }
    }

    fn check_inverse_arg(&self, g: f64) -> Result<()> {
        if !g.is_finite() || g < 0.0 {
            Err(CoreError::Domain(format!("antiderivative inverses need g >= 0, got {g}")))
        } else {
            Ok(())
        }
    }

    fn invert_by_bisection<F: Fn(f64) -> Result<f64>>(
        &self,
        g: f64,
        theta_max: f64,
        f: F,
    ) -> Result<f64> {
        let top = f(theta_max)?;
        if g > top {
            return Err(CoreError::Domain(format!(
                "g = {g} exceeds the tabulated antiderivative range (max {top})"
            )));
        }
        bisect_monotone(&|u| f(u).unwrap_or(f64::MAX) - g, DOMAIN_FLOOR, theta_max, INVERSE_X_TOL)
    }

    /// Check the admissibility conditions on a sample grid over
    /// `[−1, theta_hi]`, plus midpoints for tabulated families.
    pub fn validate(&self, theta_hi: f64, samples: usize) -> WaveSpeedValidation {
        let samples = samples.max(8);
        let step = (theta_hi - DOMAIN_FLOOR) / (samples - 1) as f64;
        let thetas: Vec<f64> = (0..samples).map(|i| DOMAIN_FLOOR + step * i as f64).collect();

        let mut positive = true;
        let mut derivative_positive = true;
        let mut increasing = true;

        let mut prev: Option<(f64, f64, f64)> = None;
        for &t in &thetas {
            let c = match self.c(t) {
                Ok(v) => v,
                Err(_) => {
                    positive = false;
                    continue;
                }
            };
            if t > DOMAIN_FLOOR + 1e-12 {
                if !(c > 0.0) {
                    positive = false;
                }
                if let Ok(cp) = self.c_prime(t) {
                    if !(cp > 0.0) {
                        derivative_positive = false;
                    }
                }
                let g = self.big_g(t).unwrap_or(f64::NAN);
                let gt = self.big_g_tilde(t).unwrap_or(f64::NAN);
                let g2 = self.big_g2(t).unwrap_or(f64::NAN);
                if let Some((pg, pgt, pg2)) = prev {
                    if !(g > pg && gt > pgt && g2 > pg2) {
                        increasing = false;
                    }
                }
                prev = Some((g, gt, g2));
            }
        }

        let zero_at_floor = self.c(DOMAIN_FLOOR).map(|v| v.abs() <= 1e-12).unwrap_or(false);

        WaveSpeedValidation {
            family: self.family_name().to_string(),
            positive_above_floor: positive,
            zero_at_floor,
            derivative_positive,
            antiderivatives_increasing: increasing,
            smoothness_certified: matches!(self.family, Family::PowerLaw { .. }),
        }
    }
}

/// (1+θ)^p with fast paths for the exponents the experiments live on.
#[inline]
fn pow_1p(theta: f64, p: f64) -> f64 {
    let base = 1.0 + theta;
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        base
    } else if p == 2.0 {
        base * base
    } else if p == 3.0 {
        base * base * base
    } else if p == 0.5 {
        base.sqrt()
    } else if p == 1.5 {
        base * base.sqrt()
    } else {
        base.powf(p)
    }
}
