//! Explicit solver for the first-order system in (u, R, S):
//!
//! ∂tR − c(u)∂xR = (c′/2c)(RS − S²) + λ(c′/4c)(R − S)²,
//! ∂tS + c(u)∂xS = (c′/2c)(SR − R²) + λ(c′/4c)(S − R)²,
//! ∂tu = (R + S)/2,          ∂xu = (R − S)/(2c(u)).
//!
//! R rides the left-going characteristic (speed −c) and S the right-going
//! one, so their transport terms are upwinded toward the side the signal
//! comes from. Sources are pointwise. Time stepping is Heun's two-stage
//! method under a CFL bound, with an extra clamp that keeps a single step
//! from driving u through the degeneracy point when the sources, not the
//! transport, set the fastest timescale.
//!
//! A run ends in one of four ways, mirroring the continuation trichotomy:
//! the wave speed sinks under `eps_degeneracy` (Degenerated), the Riemann
//! variables exceed a fixed multiple of their initial size (BlewUp), the
//! horizon is reached (ReachedTmax), or the state stops being finite
//! (SolverFault).

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::grid::{derivative_centered, DiscreteField, GridSpec};
use crate::numerics::trapezoid;
use crate::wavespeed::WaveSpeedModel;
use crate::Result;

/// Fraction of `eps_degeneracy` below which spatial reconstruction refuses
/// to divide by c(u).
pub const GUARD_FRACTION: f64 = 0.25;

/// Absolute change at the outermost nodes that marks a run as tainted.
pub const TAINT_TOL: f64 = 1e-8;

/// Fraction of nodes (per side) watched by the taint monitor.
const TAINT_BAND_FRACTION: f64 = 0.05;

/// Boundary treatment. Only outflow (copy from the nearest interior node)
/// is implemented; it approximates the whole-line problem for data that
/// stays away from the edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Outflow,
}

/// Solver parameters. `mu` is always derived as `2 - lambda`, never stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_eps_degeneracy")]
    pub eps_degeneracy: f64,
    #[serde(default = "default_blowup_factor")]
    pub blowup_factor: f64,
    pub t_max: f64,
    #[serde(default = "default_snapshot_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_store_snapshots")]
    pub store_snapshots: bool,
    /// Exponents p for the recorded ‖R‖ₚᵖ+‖S‖ₚᵖ series. Empty means the
    /// default set {1, 2, max(2, 2/λ)}.
    #[serde(default)]
    pub lp_exponents: Vec<f64>,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_cfl() -> f64 {
    0.45
}
fn default_eps_degeneracy() -> f64 {
    0.02
}
fn default_blowup_factor() -> f64 {
    20.0
}
fn default_snapshot_stride() -> usize {
    8
}
fn default_store_snapshots() -> bool {
    true
}

impl SolverConfig {
    pub fn new(lambda: f64, t_max: f64) -> Self {
        Self {
            lambda,
            cfl: default_cfl(),
            eps_degeneracy: default_eps_degeneracy(),
            blowup_factor: default_blowup_factor(),
            t_max,
            snapshot_stride: default_snapshot_stride(),
            store_snapshots: default_store_snapshots(),
            lp_exponents: Vec::new(),
            boundary: Boundary::Outflow,
        }
    }

    /// μ = 2 − λ.
    pub fn mu(&self) -> f64 {
        2.0 - self.lambda
    }

    /// Lemma exponent max{2, 2/λ}; 2 when λ = 0 (the lemma needs λ > 0).
    pub fn lemma_p(&self) -> f64 {
        if self.lambda > 0.0 {
            (2.0 / self.lambda).max(2.0)
        } else {
            2.0
        }
    }

    /// The p-exponents actually recorded by a run.
    pub fn effective_lp(&self) -> Vec<f64> {
        let mut ps = if self.lp_exponents.is_empty() {
            vec![1.0, 2.0, self.lemma_p()]
        } else {
            self.lp_exponents.clone()
        };
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        ps
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.lambda) {
            return Err(CoreError::Config(format!(
                "lambda must lie in [0, 2], got {}",
                self.lambda
            )));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(CoreError::Config(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.eps_degeneracy > 0.0) {
            return Err(CoreError::Config("eps_degeneracy must be positive".into()));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(CoreError::Config("blowup_factor must exceed 1".into()));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(CoreError::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.snapshot_stride == 0 {
            return Err(CoreError::Config("snapshot_stride must be >= 1".into()));
        }
        // keeps characteristic tracing between snapshots faithful
        if self.snapshot_stride as f64 * self.cfl > 5.0 {
            return Err(CoreError::Config(format!(
                "snapshot_stride * cfl = {} exceeds 5; snapshots too sparse for tracing",
                self.snapshot_stride as f64 * self.cfl
            )));
        }
        if self.lp_exponents.iter().any(|p| !(*p >= 1.0)) {
            return Err(CoreError::Config("lp exponents must be >= 1".into()));
        }
        Ok(())
    }
}

/// Solver snapshot at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub grid: GridSpec,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
}

impl State {
    pub fn new(t: f64, grid: GridSpec, u: Vec<f64>, r: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n || r.len() != grid.n || s.len() != grid.n {
            return Err(CoreError::GridMismatch("state arrays must match the grid".into()));
        }
        Ok(Self { t, grid, u, r, s })
    }

    /// ∂tu = (R + S)/2 at the nodes.
    pub fn du_dt(&self) -> Vec<f64> {
        self.r.iter().zip(self.s.iter()).map(|(r, s)| 0.5 * (r + s)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.r.iter()).chain(self.s.iter()).all(|v| v.is_finite())
    }
}

/// Why and where a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationReason {
    Degenerated,
    BlewUp,
    ReachedTmax,
    SolverFault,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TerminationReason::Degenerated => "Degenerated",
            TerminationReason::BlewUp => "BlewUp",
            TerminationReason::ReachedTmax => "ReachedTmax",
            TerminationReason::SolverFault => "SolverFault",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminationReport {
    pub reason: TerminationReason,
    /// Numerical stand-in for the blow-down time T*; depends on
    /// `eps_degeneracy` for degenerate runs.
    pub t_final: f64,
    /// Leftmost argmin of c(u) for degenerate runs.
    pub location: Option<f64>,
    pub min_c_final: f64,
    pub max_rs_final: f64,
    /// Human-readable cause for SolverFault runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

/// Scalar series recorded at every accepted step.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub t: Vec<f64>,
    pub min_c: Vec<f64>,
    /// Signed nodewise maximum of R (Lemma-style sign check).
    pub max_r: Vec<f64>,
    pub max_s: Vec<f64>,
    pub lp_exponents: Vec<f64>,
    /// `lp_rs[k]` is the series of ‖R‖ₚᵖ+‖S‖ₚᵖ for `lp_exponents[k]`.
    pub lp_rs: Vec<Vec<f64>>,
    /// ∫ ∂tu dx.
    pub mass_ut: Vec<f64>,
    /// ∫ ẽ dx with ẽ = c′(u)c(u)(∂xu)²; NaN on rows under the division
    /// guard (only possible on the final row of a degenerating run).
    pub e_total: Vec<f64>,
    /// F(t) = −∫ (u − u₀) dx.
    pub f: Vec<f64>,
    pub boundary_taint: bool,
}

impl DiagnosticSeries {
    fn new(lp_exponents: Vec<f64>) -> Self {
        Self { lp_exponents, lp_rs: Vec::new(), ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Series of ‖R‖ₚᵖ+‖S‖ₚᵖ for exponent `p`, if recorded.
    pub fn lp_series(&self, p: f64) -> Option<&[f64]> {
        self.lp_exponents
            .iter()
            .position(|q| (q - p).abs() < 1e-12)
            .map(|k| self.lp_rs[k].as_slice())
    }
}

/// Stored state with the step index it belongs to (the index into the
/// per-step diagnostic series).
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub state: State,
}

/// A finished run: sparse snapshots, dense scalar diagnostics and the
/// termination report.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub lambda: f64,
    pub eps_degeneracy: f64,
    pub model: WaveSpeedModel,
    pub u_initial: Vec<f64>,
    pub u1_initial: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub diag: DiagnosticSeries,
    pub termination: TerminationReport,
}

impl Trajectory {
    pub fn mu(&self) -> f64 {
        2.0 - self.lambda
    }

    pub fn t_first(&self) -> f64 {
        self.snapshots.first().map(|s| s.state.t).unwrap_or(0.0)
    }

    pub fn t_last(&self) -> f64 {
        self.snapshots.last().map(|s| s.state.t).unwrap_or(0.0)
    }

    pub fn final_state(&self) -> &State {
        &self.snapshots.last().expect("trajectory has at least one snapshot").state
    }
}

/// Wave speed at every node plus its minimum, with the division guard.
fn speeds(state: &State, model: &WaveSpeedModel, guard: f64) -> Result<(Vec<f64>, f64)> {
    let mut cu = Vec::with_capacity(state.u.len());
    let mut min_c = f64::INFINITY;
    for &u in &state.u {
        let c = model.c(u)?;
        min_c = min_c.min(c);
        cu.push(c);
    }
    if min_c < guard {
        return Err(CoreError::NearDegenerate { min_c, guard });
    }
    Ok((cu, min_c))
}

/// Reconstruct ∂xu = (R − S)/(2c) and return it with c(u).
///
/// Errors with `NearDegenerate` when min c(u) < eps_degeneracy/4; between
/// that floor and eps_degeneracy the run is already terminating, and the
/// guard keeps 1/c overflow from masking the verdict as a fault.
pub fn derive_spatial(
    state: &State,
    model: &WaveSpeedModel,
    eps_degeneracy: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (cu, _) = speeds(state, model, GUARD_FRACTION * eps_degeneracy)?;
    let ux = state
        .r
        .iter()
        .zip(state.s.iter())
        .zip(cu.iter())
        .map(|((r, s), c)| (r - s) / (2.0 * c))
        .collect();
    Ok((ux, cu))
}

/// Time derivatives of (u, R, S).
#[derive(Debug, Clone)]
pub struct Rhs {
    pub du: Vec<f64>,
    pub dr: Vec<f64>,
    pub ds: Vec<f64>,
}

/// Evaluate the right-hand side of the first-order system.
pub fn rhs(state: &State, model: &WaveSpeedModel, config: &SolverConfig) -> Result<Rhs> {
    let (cu, _) = speeds(state, model, GUARD_FRACTION * config.eps_degeneracy)?;
    rhs_with_speeds(state, model, config, &cu)
}

fn rhs_with_speeds(
    state: &State,
    model: &WaveSpeedModel,
    config: &SolverConfig,
    cu: &[f64],
) -> Result<Rhs> {
    let n = state.grid.n;
    let dx = state.grid.dx;
    let lambda = config.lambda;
    let (r, s) = (&state.r, &state.s);

    let mut du = vec![0.0; n];
    let mut dr = vec![0.0; n];
    let mut ds = vec![0.0; n];

    for i in 0..n {
        let c = cu[i];
        let cp = model.c_prime(state.u[i])?;
        let ri = r[i];
        let si = s[i];

        // R moves left: transport +c ∂x R discretized with the
        // right-biased difference; S moves right: left-biased.
        let transport_r = if i + 1 < n { c * (r[i + 1] - ri) / dx } else { 0.0 };
        let transport_s = if i > 0 { -c * (si - s[i - 1]) / dx } else { 0.0 };

        let quad = lambda * cp / (4.0 * c) * (ri - si) * (ri - si);
        let src_r = cp / (2.0 * c) * (ri * si - si * si) + quad;
        let src_s = cp / (2.0 * c) * (si * ri - ri * ri) + quad;

        du[i] = 0.5 * (ri + si);
        dr[i] = transport_r + src_r;
        ds[i] = transport_s + src_s;
    }

    if du.iter().chain(dr.iter()).chain(ds.iter()).any(|v| !v.is_finite()) {
        return Err(CoreError::SolverFault("non-finite right-hand side".into()));
    }
    Ok(Rhs { du, dr, ds })
}

fn apply_outflow(state: &mut State) {
    let n = state.grid.n;
    state.u[0] = state.u[1];
    state.r[0] = state.r[1];
    state.s[0] = state.s[1];
    state.u[n - 1] = state.u[n - 2];
    state.r[n - 1] = state.r[n - 2];
    state.s[n - 1] = state.s[n - 2];
}

/// Stable step size: the CFL bound, further clamped so the fastest
/// approach toward u = −1 covers at most half the remaining gap. The
/// clamp is inert while any node keeps the wave speed near its initial
/// size; it matters for near-uniform states whose CFL bound grows as
/// c(u) decays.
fn stable_dt(state: &State, config: &SolverConfig, max_c: f64) -> Result<f64> {
    let mut dt = config.cfl * state.grid.dx / max_c;
    for i in 0..state.grid.n {
        let rate = -0.5 * (state.r[i] + state.s[i]); // −∂tu
        if rate > 0.0 {
            dt = dt.min(0.5 * (1.0 + state.u[i]) / rate);
        }
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::SolverFault(format!("step size degenerate: dt = {dt}")));
    }
    Ok(dt)
}

/// One Heun (two-stage second-order) step with outflow boundaries.
pub fn step(state: &State, model: &WaveSpeedModel, config: &SolverConfig) -> Result<State> {
    let guard = GUARD_FRACTION * config.eps_degeneracy;
    let (cu, _) = speeds(state, model, guard)?;
    let max_c = cu.iter().fold(0.0_f64, |m, c| m.max(*c));
    let dt = stable_dt(state, config, max_c)?;

    let k1 = rhs_with_speeds(state, model, config, &cu)?;

    let n = state.grid.n;
    let mut pred = state.clone();
    for i in 0..n {
        pred.u[i] += dt * k1.du[i];
        pred.r[i] += dt * k1.dr[i];
        pred.s[i] += dt * k1.ds[i];
    }
    apply_outflow(&mut pred);
    pred.t = state.t + dt;

    let k2 = match rhs(&pred, model, config) {
        Ok(k2) => k2,
        Err(CoreError::Domain(msg)) => {
            // the predictor left the physical range: a genuine fault
            return Err(CoreError::SolverFault(format!("predictor left domain: {msg}")));
        }
        Err(e) => return Err(e),
    };

    let mut next = state.clone();
    for i in 0..n {
        next.u[i] += 0.5 * dt * (k1.du[i] + k2.du[i]);
        next.r[i] += 0.5 * dt * (k1.dr[i] + k2.dr[i]);
        next.s[i] += 0.5 * dt * (k1.ds[i] + k2.ds[i]);
    }
    apply_outflow(&mut next);
    next.t = state.t + dt;

    if !next.is_finite() {
        return Err(CoreError::SolverFault("non-finite state after step".into()));
    }
    if next.u.iter().any(|&u| u < -1.0) {
        return Err(CoreError::SolverFault("u dropped below the physical floor -1".into()));
    }
    Ok(next)
}

/// Watches the outermost node bands for any change from the initial data.
struct TaintMonitor {
    band: usize,
    initial: Vec<f64>,
    tainted: bool,
}

impl TaintMonitor {
    fn new(state: &State) -> Self {
        let n = state.grid.n;
        let band = ((n as f64 * TAINT_BAND_FRACTION).ceil() as usize).clamp(2, n / 2);
        Self { band, initial: Self::collect(state, band), tainted: false }
    }

    fn collect(state: &State, band: usize) -> Vec<f64> {
        let n = state.grid.n;
        let mut vals = Vec::with_capacity(6 * band);
        for arr in [&state.u, &state.r, &state.s] {
            vals.extend_from_slice(&arr[..band]);
            vals.extend_from_slice(&arr[n - band..]);
        }
        vals
    }

    fn check(&mut self, state: &State) {
        if self.tainted {
            return;
        }
        let now = Self::collect(state, self.band);
        if now
            .iter()
            .zip(self.initial.iter())
            .any(|(a, b)| (a - b).abs() > TAINT_TOL)
        {
            self.tainted = true;
        }
    }
}

/// Build the initial (u, R, S) state from sampled data.
pub fn initial_state(
    model: &WaveSpeedModel,
    u0: &DiscreteField,
    u1: &DiscreteField,
) -> Result<State> {
    if !u0.same_grid(u1) {
        return Err(CoreError::GridMismatch("u0 and u1 on different grids".into()));
    }
    let grid = u0.grid;
    let dux = derivative_centered(&u0.values, grid.dx);
    let mut r = Vec::with_capacity(grid.n);
    let mut s = Vec::with_capacity(grid.n);
    for i in 0..grid.n {
        let c = model.c(u0.values[i])?;
        r.push(u1.values[i] + c * dux[i]);
        s.push(u1.values[i] - c * dux[i]);
    }
    State::new(0.0, grid, u0.values.clone(), r, s)
}

/// March the system from sampled initial data until one of the stopping
/// rules fires, recording diagnostics at every step and states every
/// `snapshot_stride` steps.
pub fn run_fields(
    model: &WaveSpeedModel,
    config: &SolverConfig,
    u0: &DiscreteField,
    u1: &DiscreteField,
) -> Result<Trajectory> {
    config.validate()?;
    let state = initial_state(model, u0, u1)?;
    run_from_state(model, config, state, u1.values.clone())
}

fn run_from_state(
    model: &WaveSpeedModel,
    config: &SolverConfig,
    mut state: State,
    u1_initial: Vec<f64>,
) -> Result<Trajectory> {
    let grid = state.grid;
    let dx = grid.dx;
    let lp_exponents = config.effective_lp();
    let mut diag = DiagnosticSeries::new(lp_exponents.clone());
    diag.lp_rs = vec![Vec::new(); lp_exponents.len()];

    let u_initial = state.u.clone();
    let u0_integral = trapezoid(&u_initial, dx);
    let initial_max_rs = max_abs2(&state.r, &state.s);
    let blowup_threshold = config.blowup_factor * initial_max_rs;

    let mut taint = TaintMonitor::new(&state);
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut step_idx = 0usize;

    let guard = GUARD_FRACTION * config.eps_degeneracy;

    let record = |state: &State,
                  diag: &mut DiagnosticSeries,
                  taint: &mut TaintMonitor|
     -> Result<(f64, f64)> {
        let mut min_c = f64::INFINITY;
        let mut cu = Vec::with_capacity(state.u.len());
        for &u in &state.u {
            let c = model.c(u)?;
            min_c = min_c.min(c);
            cu.push(c);
        }
        taint.check(state);

        diag.t.push(state.t);
        diag.min_c.push(min_c);
        diag.max_r.push(state.r.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        diag.max_s.push(state.s.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        for (k, p) in lp_exponents.iter().enumerate() {
            let sums: Vec<f64> = state
                .r
                .iter()
                .zip(state.s.iter())
                .map(|(r, s)| r.abs().powf(*p) + s.abs().powf(*p))
                .collect();
            diag.lp_rs[k].push(trapezoid(&sums, dx));
        }
        let dudt = state.du_dt();
        diag.mass_ut.push(trapezoid(&dudt, dx));

        let e_total = if min_c >= guard {
            let mut e = Vec::with_capacity(state.u.len());
            for i in 0..state.u.len() {
                let c = cu[i];
                let cp = model.c_prime(state.u[i])?;
                let ux = (state.r[i] - state.s[i]) / (2.0 * c);
                e.push(cp * c * ux * ux);
            }
            trapezoid(&e, dx)
        } else {
            f64::NAN
        };
        diag.e_total.push(e_total);
        diag.f.push(u0_integral - trapezoid(&state.u, dx));

        Ok((min_c, max_abs2(&state.r, &state.s)))
    };

    let termination;
    loop {
        let (min_c, max_rs) = match record(&state, &mut diag, &mut taint) {
            Ok(v) => v,
            Err(e) => {
                termination = fault_report(&state, e.to_string());
                break;
            }
        };
        if step_idx % config.snapshot_stride == 0 && config.store_snapshots {
            snapshots.push(Snapshot { step: step_idx, state: state.clone() });
        }

        if min_c < config.eps_degeneracy {
            termination = TerminationReport {
                reason: TerminationReason::Degenerated,
                t_final: state.t,
                location: Some(argmin_c_location(&state)),
                min_c_final: min_c,
                max_rs_final: max_rs,
                fault: None,
            };
            break;
        }
        if max_rs > blowup_threshold {
            termination = TerminationReport {
                reason: TerminationReason::BlewUp,
                t_final: state.t,
                location: None,
                min_c_final: min_c,
                max_rs_final: max_rs,
                fault: None,
            };
            break;
        }
        if state.t >= config.t_max {
            termination = TerminationReport {
                reason: TerminationReason::ReachedTmax,
                t_final: state.t,
                location: None,
                min_c_final: min_c,
                max_rs_final: max_rs,
                fault: None,
            };
            break;
        }

        match step(&state, model, config) {
            Ok(next) => {
                state = next;
                step_idx += 1;
            }
            Err(CoreError::NearDegenerate { min_c: guard_c, .. }) => {
                // imminent degeneracy surfaced mid-step
                termination = TerminationReport {
                    reason: TerminationReason::Degenerated,
                    t_final: state.t,
                    location: Some(argmin_c_location(&state)),
                    min_c_final: guard_c.min(min_c),
                    max_rs_final: max_rs,
                    fault: None,
                };
                break;
            }
            Err(e) => {
                termination = fault_report(&state, e.to_string());
                break;
            }
        }
    }

    // the terminal state is always stored
    let store_final = match snapshots.last() {
        Some(last) => last.step != step_idx,
        None => true,
    };
    if store_final {
        snapshots.push(Snapshot { step: step_idx, state: state.clone() });
    }

    diag.boundary_taint = taint.tainted;

    Ok(Trajectory {
        grid,
        lambda: config.lambda,
        eps_degeneracy: config.eps_degeneracy,
        model: model.clone(),
        u_initial,
        u1_initial,
        snapshots,
        diag,
        termination,
    })
}

fn fault_report(state: &State, fault: String) -> TerminationReport {
    TerminationReport {
        reason: TerminationReason::SolverFault,
        t_final: state.t,
        location: None,
        min_c_final: f64::NAN,
        max_rs_final: f64::NAN,
        fault: Some(fault),
    }
}

/// Leftmost position of the minimum wave speed (ties break left for
/// deterministic regression output). c is increasing, so this is the
/// leftmost argmin of u.
fn argmin_c_location(state: &State) -> f64 {
    let mut best = 0;
    for i in 1..state.u.len() {
        if state.u[i] < state.u[best] {
            best = i;
        }
    }
    state.grid.x(best)
}

fn max_abs2(r: &[f64], s: &[f64]) -> f64 {
    r.iter().chain(s.iter()).fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initdata::ProfileSpec;

    fn model(a: f64) -> WaveSpeedModel {
        WaveSpeedModel::power_law(a).unwrap()
    }

    fn small_grid() -> GridSpec {
        GridSpec::from_box(-20.0, 20.0, 64).unwrap()
    }

    fn uniform_state(grid: GridSpec, u: f64, r: f64, s: f64) -> State {
        State::new(0.0, grid, vec![u; grid.n], vec![r; grid.n], vec![s; grid.n]).unwrap()
    }

    #[test]
    fn derive_spatial_zero_when_r_equals_s() {
        let st = uniform_state(small_grid(), 0.3, -0.7, -0.7);
        let (ux, _) = derive_spatial(&st, &model(1.0), 0.02).unwrap();
        assert!(ux.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn derive_spatial_unit_slope() {
        let st = uniform_state(small_grid(), 0.0, 0.0, -2.0);
        let (ux, cu) = derive_spatial(&st, &model(1.0), 0.02).unwrap();
        assert!(ux.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(cu.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn derive_spatial_matches_centered_difference_at_t0() {
        let grid = GridSpec::from_box(-10.0, 10.0, 512).unwrap();
        let u0 = DiscreteField::from_fn(grid, |x| 0.4 * (-x * x / 3.0).exp()).unwrap();
        let u1 = DiscreteField::from_fn(grid, |x| -(-x * x).exp()).unwrap();
        let st = initial_state(&model(1.0), &u0, &u1).unwrap();
        let (ux, _) = derive_spatial(&st, &model(1.0), 0.02).unwrap();
        let dux = derivative_centered(&u0.values, grid.dx);
        for i in 0..grid.n {
            assert!((ux[i] - dux[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn derive_spatial_guards_near_degeneracy() {
        let st = uniform_state(small_grid(), -0.999, -0.1, -0.1);
        assert!(matches!(
            derive_spatial(&st, &model(1.0), 0.02),
            Err(CoreError::NearDegenerate { .. })
        ));
    }

    #[test]
    fn rhs_homogeneous_state_translates_u() {
        let cfg = SolverConfig::new(1.0, 10.0);
        let st = uniform_state(small_grid(), 0.4, -0.3, -0.3);
        let k = rhs(&st, &model(2.0), &cfg).unwrap();
        for i in 0..st.grid.n {
            assert!((k.du[i] + 0.3).abs() < 1e-15);
            assert!(k.dr[i].abs() < 1e-15);
            assert!(k.ds[i].abs() < 1e-15);
        }
    }

    #[test]
    fn rhs_lambda_two_cancellation() {
        // R = 0: the two source pieces cancel exactly at lambda = 2
        let grid = small_grid();
        let s: Vec<f64> = grid.nodes().map(|x| -(-x * x / 9.0).exp()).collect();
        let st = State::new(0.0, grid, vec![0.3; grid.n], vec![0.0; grid.n], s).unwrap();
        let cfg = SolverConfig::new(2.0, 10.0);
        let k = rhs(&st, &model(1.0), &cfg).unwrap();
        for v in &k.dr {
            assert!(v.abs() < 1e-14, "dr = {v}");
        }
    }

    #[test]
    fn rhs_lambda_zero_point_source() {
        let grid = small_grid();
        let mut s = vec![0.0; grid.n];
        s[30] = -1.0;
        let st = State::new(0.0, grid, vec![0.0; grid.n], vec![0.0; grid.n], s).unwrap();
        let cfg = SolverConfig::new(0.0, 10.0);
        let k = rhs(&st, &model(1.0), &cfg).unwrap();
        assert!((k.dr[30] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_fixed_point_for_zero_state() {
        let st = uniform_state(small_grid(), 0.0, 0.0, 0.0);
        let cfg = SolverConfig::new(1.0, 10.0);
        let next = step(&st, &model(1.0), &cfg).unwrap();
        assert!(next.t > 0.0);
        assert!(next.u.iter().all(|v| *v == 0.0));
        assert!(next.r.iter().all(|v| *v == 0.0));
        assert!(next.s.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn step_homogeneous_drift() {
        let st = uniform_state(small_grid(), 0.5, -0.1, -0.1);
        let cfg = SolverConfig::new(1.0, 10.0);
        let next = step(&st, &model(1.0), &cfg).unwrap();
        let dt = next.t;
        assert!((dt - 0.45 * st.grid.dx / 1.5).abs() < 1e-15);
        for i in 0..st.grid.n {
            assert!((next.u[i] - (0.5 - 0.1 * dt)).abs() < 1e-14);
            assert!((next.r[i] + 0.1).abs() < 1e-13);
            assert!((next.s[i] + 0.1).abs() < 1e-13);
        }
    }

    #[test]
    fn cfl_arithmetic_canonical() {
        let grid = GridSpec::from_box(-20.0, 20.0, 4096).unwrap();
        let st = uniform_state(grid, 0.0, 0.0, 0.0);
        let cfg = SolverConfig::new(1.0, 50.0);
        let next = step(&st, &model(1.0), &cfg).unwrap();
        assert!((next.t - 0.45 * (40.0 / 4096.0)).abs() < 1e-12);
    }

    #[test]
    fn run_zero_data_reaches_tmax() {
        let grid = small_grid();
        let u0 = DiscreteField::constant(grid, 0.0).unwrap();
        let u1 = DiscreteField::constant(grid, 0.0).unwrap();
        let mut cfg = SolverConfig::new(1.0, 1.0);
        cfg.snapshot_stride = 4;
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        assert_eq!(traj.termination.reason, TerminationReason::ReachedTmax);
        let last = traj.final_state();
        assert!(last.u.iter().all(|v| *v == 0.0));
        assert!(!traj.diag.boundary_taint);
    }

    #[test]
    fn run_homogeneous_decay_is_exact_ode_until_degeneracy() {
        // constant data: u(t) = -0.1 t exactly (sources and transport vanish)
        let grid = small_grid();
        let spec = ProfileSpec::Plateau { a: 0.1, u0_level: 0.0, core: 100.0, ramp: 1.0 };
        let (u0, u1) = spec.build(grid, None).unwrap();
        let mut cfg = SolverConfig::new(2.0, 30.0);
        cfg.snapshot_stride = 1;
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        assert_eq!(traj.termination.reason, TerminationReason::Degenerated);
        // c(u) = 1 + u < 0.02 at u < -0.98, i.e. t just above 9.8
        assert!(traj.termination.t_final > 9.7 && traj.termination.t_final < 10.0,
            "t_final = {}", traj.termination.t_final);
        for snap in &traj.snapshots {
            let expect = -0.1 * snap.state.t;
            for v in &snap.state.u {
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn canonical_run_degenerates_and_keeps_signs() {
        let grid = GridSpec::from_box(-20.0, 20.0, 512).unwrap();
        let (u0, u1) = ProfileSpec::canonical_gaussian(1.0).build(grid, None).unwrap();
        let cfg = SolverConfig::new(1.0, 50.0);
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        assert_eq!(traj.termination.reason, TerminationReason::Degenerated);
        assert!(traj.termination.location.is_some());
        assert!(traj.termination.min_c_final < 0.02);
        let worst_r = traj.diag.max_r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst_s = traj.diag.max_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(worst_r <= 2e-8, "sign violation in R: {worst_r}");
        assert!(worst_s <= 2e-8, "sign violation in S: {worst_s}");
        // u decays monotonically at the center node
        let mid = grid.n / 2;
        let mut prev = f64::INFINITY;
        for snap in &traj.snapshots {
            assert!(snap.state.u[mid] <= prev + 1e-8);
            prev = snap.state.u[mid];
        }
    }

    #[test]
    fn finite_propagation_speed() {
        let grid = GridSpec::from_box(-20.0, 20.0, 2048).unwrap();
        let spec = ProfileSpec::BumpCompact { a: 1.0, support: (-1.0, 1.0), u0_amp: 0.0 };
        let (u0, u1) = spec.build(grid, None).unwrap();
        let mut cfg = SolverConfig::new(1.0, 3.0);
        cfg.eps_degeneracy = 0.001; // run to t=3 undisturbed
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        let last = traj.final_state();
        let t = last.t;
        // max c <= 1, plus a numerical margin for the upwind stencil tail
        let cone = 1.0 + t + 3.0;
        for (i, x) in grid.nodes().enumerate() {
            if x.abs() >= cone {
                assert!((last.u[i] - u0.values[i]).abs() < 1e-10, "u leaked to x={x}");
                assert!((last.r[i] - traj.snapshots[0].state.r[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::new(3.0, 10.0);
        assert!(cfg.validate().is_err());
        cfg.lambda = 1.0;
        assert!(cfg.validate().is_ok());
        cfg.cfl = 1.5;
        assert!(cfg.validate().is_err());
        cfg.cfl = 0.45;
        cfg.snapshot_stride = 40; // 40 * 0.45 > 5
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mu_is_derived() {
        let cfg = SolverConfig::new(0.75, 1.0);
        assert!((cfg.mu() - 1.25).abs() < 1e-15);
        assert!((cfg.lemma_p() - 8.0 / 3.0).abs() < 1e-12);
    }
}
