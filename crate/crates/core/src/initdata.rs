//! Initial-data profiles and admissibility checks.
//!
//! A data pair (u₀, u₁) is admissible when c(u₀) is bounded away from zero,
//! u₁ is not identically zero, and the sign condition
//!
//! u₁(x) ± c(u₀(x)) ∂xu₀(x) ≤ 0
//!
//! holds everywhere, which makes both Riemann variables non-positive at
//! t = 0. The canonical admissible profile is u₀ ≡ 0 with a negative
//! gaussian velocity bump.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::grid::{derivative_centered, DiscreteField, GridSpec};
use crate::numerics::{quintic_ramp, MonotoneCubic};
use crate::wavespeed::WaveSpeedModel;
use crate::Result;

/// Fields with sup-norm below this are treated as identically zero.
pub const TRIVIAL_SUP_NORM: f64 = 1e-14;

/// Fraction of nodes (per side) inspected by the tail-decay proxy.
const TAIL_BAND_FRACTION: f64 = 0.05;

/// Relative tail mass above which the discrete L¹ integral is considered
/// unconverged at the boundary.
const TAIL_CONVERGED_REL: f64 = 1e-6;

/// Initial-data profile as declared in scenario JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// u₀ = u0_amp·exp(−x²), u₁ = −A·exp(−x²).
    Gaussian {
        #[serde(rename = "A")]
        a: f64,
        #[serde(default)]
        u0_amp: f64,
    },
    /// Standard compactly supported bump on `support`, scaled by −A for u₁.
    BumpCompact {
        #[serde(rename = "A")]
        a: f64,
        #[serde(default = "default_support")]
        support: (f64, f64),
        #[serde(default)]
        u0_amp: f64,
    },
    /// u₀ ≡ u0_level; u₁ = −A on |x| ≤ core with a C² ramp to zero over
    /// `ramp`. A huge core yields spatially constant data.
    Plateau {
        #[serde(rename = "A")]
        a: f64,
        #[serde(default)]
        u0_level: f64,
        #[serde(default = "default_core")]
        core: f64,
        #[serde(default = "default_ramp")]
        ramp: f64,
    },
    /// u₀ ≡ 0, u₁ = −A/(1+x²)^beta. With beta ≤ 1/2 this is the discrete
    /// stand-in for u₁ ∉ L¹.
    SlowTail {
        #[serde(rename = "A")]
        a: f64,
        beta: f64,
    },
    /// Fields resampled from two-column CSV tables (x,value); a missing
    /// table means the field is identically zero.
    CustomTable {
        #[serde(default)]
        u0_csv: Option<String>,
        #[serde(default)]
        u1_csv: Option<String>,
    },
}

fn default_support() -> (f64, f64) {
    (-1.0, 1.0)
}

fn default_core() -> f64 {
    2.0
}

fn default_ramp() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn canonical_gaussian(amplitude: f64) -> Self {
        ProfileSpec::Gaussian { a: amplitude, u0_amp: 0.0 }
    }

    /// Sample the profile onto `grid`. Relative CSV paths resolve against
    /// `base_dir`.
    pub fn build(
        &self,
        grid: GridSpec,
        base_dir: Option<&Path>,
    ) -> Result<(DiscreteField, DiscreteField)> {
        match self {
            ProfileSpec::Gaussian { a, u0_amp } => {
                check_finite(&[*a, *u0_amp])?;
                let u0 = DiscreteField::from_fn(grid, |x| u0_amp * (-x * x).exp())?;
                let u1 = DiscreteField::from_fn(grid, |x| -a * (-x * x).exp())?;
                Ok((u0, u1))
            }
            ProfileSpec::BumpCompact { a, support, u0_amp } => {
                check_finite(&[*a, support.0, support.1, *u0_amp])?;
                if !(support.1 > support.0) {
                    return Err(CoreError::Config(format!(
                        "bump support must be a nonempty interval, got [{}, {}]",
                        support.0, support.1
                    )));
                }
                let mid = 0.5 * (support.0 + support.1);
                let half = 0.5 * (support.1 - support.0);
                let bump = move |x: f64| {
                    let xi = (x - mid) / half;
                    if xi.abs() < 1.0 {
                        (-1.0 / (1.0 - xi * xi)).exp()
                    } else {
                        0.0
                    }
                };
                let u0 = DiscreteField::from_fn(grid, |x| u0_amp * bump(x))?;
                let u1 = DiscreteField::from_fn(grid, |x| -a * bump(x))?;
                Ok((u0, u1))
            }
            ProfileSpec::Plateau { a, u0_level, core, ramp } => {
                check_finite(&[*a, *u0_level, *core, *ramp])?;
                if !(*core > 0.0) || !(*ramp > 0.0) {
                    return Err(CoreError::Config(format!(
                        "plateau needs positive core and ramp, got core={core}, ramp={ramp}"
                    )));
                }
                let shape = move |x: f64| quintic_ramp((x.abs() - core) / ramp);
                let u0 = DiscreteField::constant(grid, *u0_level)?;
                let u1 = DiscreteField::from_fn(grid, |x| -a * shape(x))?;
                Ok((u0, u1))
            }
            ProfileSpec::SlowTail { a, beta } => {
                check_finite(&[*a, *beta])?;
                let u0 = DiscreteField::constant(grid, 0.0)?;
                let u1 = DiscreteField::from_fn(grid, |x| -a / (1.0 + x * x).powf(*beta))?;
                Ok((u0, u1))
            }
            ProfileSpec::CustomTable { u0_csv, u1_csv } => {
                let u0 = match u0_csv {
                    Some(path) => resample_csv(&resolve(path, base_dir), grid)?,
                    None => DiscreteField::constant(grid, 0.0)?,
                };
                let u1 = match u1_csv {
                    Some(path) => resample_csv(&resolve(path, base_dir), grid)?,
                    None => DiscreteField::constant(grid, 0.0)?,
                };
                Ok((u0, u1))
            }
        }
    }
}

fn check_finite(params: &[f64]) -> Result<()> {
    if params.iter().any(|p| !p.is_finite()) {
        Err(CoreError::Config("profile parameters must be finite".into()))
    } else {
        Ok(())
    }
}

fn resolve(path: &str, base_dir: Option<&Path>) -> std::path::PathBuf {
    let p = Path::new(path);
    match base_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

/// Load a two-column CSV (x,value) and resample it onto `grid` with the
/// monotone cubic interpolant. Outside the table range the field is held at
/// the edge value.
fn resample_csv(path: &Path, grid: GridSpec) -> Result<DiscreteField> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(c0), Some(c1)) = (cols.next(), cols.next()) else {
            return Err(CoreError::Config(format!(
                "{}:{}: expected two comma-separated columns",
                path.display(),
                lineno + 1
            )));
        };
        match (c0.trim().parse::<f64>(), c1.trim().parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if lineno == 0 => continue, // header row
            _ => {
                return Err(CoreError::Config(format!(
                    "{}:{}: could not parse '{line}' as numbers",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    let interp = MonotoneCubic::new(&xs, &ys)?;
    DiscreteField::from_fn(grid, |x| interp.eval(x.clamp(interp.x_min(), interp.x_max())))
}

/// What the admissibility check saw.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    /// inf over the grid of c(u₀).
    pub c0: f64,
    /// max over the grid of u₁ + c(u₀)∂xu₀.
    pub sign_violation_plus: f64,
    /// max over the grid of u₁ − c(u₀)∂xu₀.
    pub sign_violation_minus: f64,
    /// trapezoid of u₁.
    pub u1_mass: f64,
    pub u1_is_trivial: bool,
    /// true when the discrete tail integral of |u₁| has converged at the
    /// boundary (false for slow-tail data standing in for u₁ ∉ L¹).
    pub u1_l1_finite_proxy: bool,
    /// tolerance the sign conditions were checked against.
    pub tol: f64,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.c0 > 0.0
            && self.sign_violation_plus <= self.tol
            && self.sign_violation_minus <= self.tol
            && !self.u1_is_trivial
    }
}

/// Default sign-condition tolerance: discretization noise must not flip
/// the verdict, so it scales with the field.
pub fn default_sign_tol(u1: &DiscreteField) -> f64 {
    1e-10 * (1.0 + u1.max_abs())
}

/// Check the admissibility hypotheses on a sampled data pair.
pub fn check_admissibility(
    u0: &DiscreteField,
    u1: &DiscreteField,
    model: &WaveSpeedModel,
    tol: f64,
) -> Result<AdmissibilityReport> {
    if !u0.same_grid(u1) {
        return Err(CoreError::GridMismatch("u0 and u1 sampled on different grids".into()));
    }
    let dux = derivative_centered(&u0.values, u0.grid.dx);

    let mut c0 = f64::INFINITY;
    let mut viol_plus = f64::NEG_INFINITY;
    let mut viol_minus = f64::NEG_INFINITY;
    for i in 0..u0.len() {
        let c = model.c(u0.values[i])?;
        c0 = c0.min(c);
        viol_plus = viol_plus.max(u1.values[i] + c * dux[i]);
        viol_minus = viol_minus.max(u1.values[i] - c * dux[i]);
    }

    let u1_mass = u1.integral();
    let u1_is_trivial = u1.max_abs() < TRIVIAL_SUP_NORM;

    Ok(AdmissibilityReport {
        c0,
        sign_violation_plus: viol_plus,
        sign_violation_minus: viol_minus,
        u1_mass,
        u1_is_trivial,
        u1_l1_finite_proxy: tail_integral_converged(u1),
        tol,
    })
}

/// Tail-decay proxy: the outermost band on each side must carry a
/// negligible share of ∫|u₁|.
fn tail_integral_converged(u1: &DiscreteField) -> bool {
    let n = u1.len();
    let band = ((n as f64 * TAIL_BAND_FRACTION).ceil() as usize).clamp(2, n / 2);
    let dx = u1.grid.dx;
    let total: f64 = u1.values.iter().map(|v| v.abs()).sum::<f64>() * dx;
    let tail: f64 = u1.values[..band]
        .iter()
        .chain(u1.values[n - band..].iter())
        .map(|v| v.abs())
        .sum::<f64>()
        * dx;
    tail <= TAIL_CONVERGED_REL * (1.0 + total)
}

/// Rescale u₁ so its trapezoid mass hits `target_mass` exactly.
pub fn scale_to_mass(u1: &DiscreteField, target_mass: f64) -> Result<DiscreteField> {
    let current = u1.integral();
    if current == 0.0 {
        return Err(CoreError::DegenerateInput(
            "cannot rescale a field with zero mass".into(),
        ));
    }
    if target_mass * current <= 0.0 {
        return Err(CoreError::SignFlip(format!(
            "target mass {target_mass} and current mass {current} differ in sign"
        )));
    }
    let alpha = target_mass / current;
    DiscreteField::new(u1.grid, u1.values.iter().map(|v| alpha * v).collect())
}
