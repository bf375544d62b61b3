//! Characteristic curves dx/dt = ±c(u) through a stored trajectory, and the
//! transport identities of the integrated Riemann invariants along them:
//!
//! w₁(t, x₋(t)) = w₁(t₀, x₋(t₀)) − μ ∫_{t₀}^t ∫_{−∞}^{x₋(s)} ẽ dy ds,
//!
//! and likewise w₂ along x₊, v₁ along x₋, v₂ along x₊ with the inner
//! integral over [x(s), ∞) for the v pair. At μ = 0 the invariants are
//! exactly conserved along their characteristics.
//!
//! Tracing is diagnostic only: it reads a finished trajectory with bilinear
//! interpolation (linear in t between snapshots, linear in x between
//! nodes) and never feeds back into the solver.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{etilde, riemann_v, riemann_w};
use crate::error::CoreError;
use crate::grid::linear_interp;
use crate::numerics::cumulative_trapezoid;
use crate::solver::Trajectory;
use crate::Result;

/// Which family of characteristics: dx/dt = +c (plus) or −c (minus).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSign {
    Plus,
    Minus,
}

impl PathSign {
    fn factor(self) -> f64 {
        match self {
            PathSign::Plus => 1.0,
            PathSign::Minus => -1.0,
        }
    }
}

/// The four integrated Riemann invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    W1,
    W2,
    V1,
    V2,
}

impl Invariant {
    /// The characteristic family the invariant is transported along.
    pub fn transported_along(self) -> PathSign {
        match self {
            Invariant::W1 | Invariant::V1 => PathSign::Minus,
            Invariant::W2 | Invariant::V2 => PathSign::Plus,
        }
    }

    /// Whether the source integral runs over (−∞, x] (w pair) or [x, ∞)
    /// (v pair).
    fn integrates_from_left(self) -> bool {
        matches!(self, Invariant::W1 | Invariant::W2)
    }
}

impl std::str::FromStr for Invariant {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w1" => Ok(Invariant::W1),
            "w2" => Ok(Invariant::W2),
            "v1" => Ok(Invariant::V1),
            "v2" => Ok(Invariant::V2),
            other => Err(CoreError::Config(format!("unknown invariant '{other}'"))),
        }
    }
}

/// A traced characteristic curve, sampled at snapshot times.
#[derive(Debug, Clone)]
pub struct CharacteristicPath {
    pub sign: PathSign,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

impl CharacteristicPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// u interpolated bilinearly in (t, x) between stored snapshots.
pub fn interp_u(traj: &Trajectory, t: f64, x: f64) -> Result<f64> {
    let snaps = &traj.snapshots;
    if snaps.len() < 2 {
        return Err(CoreError::MissingDiagnostics("need at least two snapshots".into()));
    }
    if t < traj.t_first() - 1e-12 || t > traj.t_last() + 1e-12 {
        return Err(CoreError::OutOfBox(format!(
            "t = {t} outside stored range [{}, {}]",
            traj.t_first(),
            traj.t_last()
        )));
    }
    if !traj.grid.contains(x) {
        return Err(CoreError::OutOfBox(format!("x = {x} outside the grid")));
    }
    let k = match snaps.binary_search_by(|s| s.state.t.partial_cmp(&t).unwrap()) {
        Ok(k) => k.min(snaps.len() - 2),
        Err(k) => k.saturating_sub(1).min(snaps.len() - 2),
    };
    let (t0, t1) = (snaps[k].state.t, snaps[k + 1].state.t);
    let w = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
    let u0 = linear_interp(&snaps[k].state.u, &traj.grid, x);
    let u1 = linear_interp(&snaps[k + 1].state.u, &traj.grid, x);
    Ok(u0 * (1.0 - w) + u1 * w)
}

/// Integrate dx/dt = ±c(u) with explicit midpoint steps between snapshot
/// times, starting at (t_start, x_start). The path stops at the end of the
/// trajectory or when it would leave the grid.
pub fn trace(
    traj: &Trajectory,
    x_start: f64,
    t_start: f64,
    sign: PathSign,
) -> Result<CharacteristicPath> {
    if !traj.grid.contains(x_start) {
        return Err(CoreError::OutOfBox(format!("x_start = {x_start} outside the grid")));
    }
    if t_start < traj.t_first() - 1e-12 || t_start > traj.t_last() + 1e-12 {
        return Err(CoreError::OutOfBox(format!("t_start = {t_start} outside the stored run")));
    }
    let factor = sign.factor();
    let mut times = vec![t_start];
    let mut positions = vec![x_start];
    let mut t = t_start;
    let mut x = x_start;

    for snap in traj.snapshots.iter() {
        let t_next = snap.state.t;
        if t_next <= t + 1e-15 {
            continue;
        }
        let dt = t_next - t;
        let v0 = factor * traj.model.c(interp_u(traj, t, x)?)?;
        let x_mid = x + 0.5 * dt * v0;
        if !traj.grid.contains(x_mid) {
            break;
        }
        let v_mid = factor * traj.model.c(interp_u(traj, t + 0.5 * dt, x_mid)?)?;
        let x_next = x + dt * v_mid;
        if !traj.grid.contains(x_next) {
            break;
        }
        t = t_next;
        x = x_next;
        times.push(t);
        positions.push(x);
    }

    Ok(CharacteristicPath { sign, times, positions })
}

/// Transport-identity residual along a traced path.
#[derive(Debug, Clone)]
pub struct TransportSeries {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// Invariant value interpolated at (t, x(t)).
    pub invariant: Vec<f64>,
    /// inv(t) − inv(t₀) + μ ∫∫ ẽ over the transported domain.
    pub residual: Vec<f64>,
    /// True when the series stops early at a near-degenerate snapshot.
    pub truncated: bool,
}

/// Evaluate the transport identity for `invariant` along `path`.
///
/// The path must run along the matching characteristic family and must have
/// been traced through `traj` starting at a snapshot time.
pub fn transport_residual(
    traj: &Trajectory,
    path: &CharacteristicPath,
    invariant: Invariant,
) -> Result<TransportSeries> {
    if traj.diag.boundary_taint {
        return Err(CoreError::Tainted(
            "boundary contamination detected; invariants are unreliable".into(),
        ));
    }
    if invariant.transported_along() != path.sign {
        return Err(CoreError::Config(format!(
            "{invariant:?} is transported along {:?} characteristics, path is {:?}",
            invariant.transported_along(),
            path.sign
        )));
    }
    if path.is_empty() {
        return Err(CoreError::OutOfBox("empty path".into()));
    }

    // locate the snapshot the path starts on
    let snaps = &traj.snapshots;
    let t0 = path.times[0];
    let k0 = snaps
        .iter()
        .position(|s| (s.state.t - t0).abs() <= 1e-10 * (1.0 + t0.abs()))
        .ok_or_else(|| {
            CoreError::OutOfBox("path does not start on a snapshot time".into())
        })?;

    let mu = traj.mu();
    let dx = traj.grid.dx;
    let mut out = TransportSeries {
        t: Vec::new(),
        x: Vec::new(),
        invariant: Vec::new(),
        residual: Vec::new(),
        truncated: false,
    };

    let mut acc = 0.0; // ∫ inner ds so far
    let mut prev: Option<(f64, f64)> = None; // (t, inner)
    for (j, (&t, &x)) in path.times.iter().zip(path.positions.iter()).enumerate() {
        let Some(snap) = snaps.get(k0 + j) else { break };
        if (snap.state.t - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(CoreError::OutOfBox(
                "path times do not line up with snapshot times".into(),
            ));
        }
        let state = &snap.state;

        let field = match invariant {
            Invariant::W1 => riemann_w(state, &traj.model)?.0,
            Invariant::W2 => riemann_w(state, &traj.model)?.1,
            Invariant::V1 => riemann_v(state, &traj.model)?.0,
            Invariant::V2 => riemann_v(state, &traj.model)?.1,
        };
        let inv_here = linear_interp(&field, &traj.grid, x);

        let e = match etilde(state, &traj.model, traj.eps_degeneracy) {
            Ok(e) => e,
            Err(CoreError::NearDegenerate { .. }) => {
                out.truncated = true;
                break;
            }
            Err(other) => return Err(other),
        };
        let cum = cumulative_trapezoid(&e, dx);
        let total = cum[cum.len() - 1];
        let from_left = linear_interp(&cum, &traj.grid, x);
        let inner = if invariant.integrates_from_left() { from_left } else { total - from_left };

        if let Some((tp, ip)) = prev {
            acc += 0.5 * (t - tp) * (ip + inner);
        }
        prev = Some((t, inner));

        let inv0 = if out.invariant.is_empty() { inv_here } else { out.invariant[0] };
        out.t.push(t);
        out.x.push(x);
        out.invariant.push(inv_here);
        out.residual.push(inv_here - inv0 + mu * acc);
    }

    Ok(out)
}

/// First time two paths (sharing times) swap order, if they ever do.
pub fn first_crossing(a: &CharacteristicPath, b: &CharacteristicPath) -> Option<f64> {
    let n = a.len().min(b.len());
    if n == 0 {
        return None;
    }
    let initial = (b.positions[0] - a.positions[0]).signum();
    for j in 1..n {
        if (a.times[j] - b.times[j]).abs() > 1e-9 {
            return None; // paths not time-aligned
        }
        let now = b.positions[j] - a.positions[j];
        if now.signum() != initial && now != 0.0 {
            return Some(a.times[j]);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DiscreteField, GridSpec};
    use crate::initdata::ProfileSpec;
    use crate::solver::{run_fields, SolverConfig};
    use crate::wavespeed::WaveSpeedModel;

    fn model(a: f64) -> WaveSpeedModel {
        WaveSpeedModel::power_law(a).unwrap()
    }

    fn constant_run(u_level: f64, t_max: f64) -> Trajectory {
        let grid = GridSpec::from_box(-20.0, 20.0, 128).unwrap();
        let u0 = DiscreteField::constant(grid, u_level).unwrap();
        let u1 = DiscreteField::constant(grid, 0.0).unwrap();
        let mut cfg = SolverConfig::new(1.0, t_max);
        cfg.snapshot_stride = 1;
        run_fields(&model(1.0), &cfg, &u0, &u1).unwrap()
    }

    #[test]
    fn trace_unit_speed_lines() {
        let traj = constant_run(0.0, 2.0);
        let plus = trace(&traj, 0.0, 0.0, PathSign::Plus).unwrap();
        let minus = trace(&traj, 0.0, 0.0, PathSign::Minus).unwrap();
        for (t, x) in plus.times.iter().zip(plus.positions.iter()) {
            assert!((x - t).abs() < 1e-12, "x+({t}) = {x}");
        }
        for (t, x) in minus.times.iter().zip(minus.positions.iter()) {
            assert!((x + t).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_speed_four() {
        // c(3) = 4 for the linear wave speed
        let traj = constant_run(3.0, 2.0);
        let plus = trace(&traj, 0.0, 0.0, PathSign::Plus).unwrap();
        let last_t = *plus.times.last().unwrap();
        let last_x = *plus.positions.last().unwrap();
        assert!(last_t > 0.5); // stops near the edge x = 20 - dx
        assert!((last_x - 4.0 * last_t).abs() < 1e-10);
    }

    #[test]
    fn trace_rejects_outside_box() {
        let traj = constant_run(0.0, 1.0);
        assert!(matches!(trace(&traj, 50.0, 0.0, PathSign::Plus), Err(CoreError::OutOfBox(_))));
        assert!(matches!(trace(&traj, 0.0, 5.0, PathSign::Plus), Err(CoreError::OutOfBox(_))));
    }

    #[test]
    fn residual_zero_on_zero_solution() {
        let traj = constant_run(0.0, 1.0);
        let path = trace(&traj, 1.0, 0.0, PathSign::Minus).unwrap();
        let series = transport_residual(&traj, &path, Invariant::W1).unwrap();
        for v in &series.residual {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn pairing_enforced() {
        let traj = constant_run(0.0, 1.0);
        let path = trace(&traj, 0.0, 0.0, PathSign::Plus).unwrap();
        assert!(transport_residual(&traj, &path, Invariant::W1).is_err());
        assert!(transport_residual(&traj, &path, Invariant::W2).is_ok());
    }

    fn canonical_run(lambda: f64, n: usize) -> Trajectory {
        let grid = GridSpec::from_box(-20.0, 20.0, n).unwrap();
        let (u0, u1) = ProfileSpec::canonical_gaussian(1.0).build(grid, None).unwrap();
        let mut cfg = SolverConfig::new(lambda, 50.0);
        cfg.snapshot_stride = 4;
        run_fields(&model(1.0), &cfg, &u0, &u1).unwrap()
    }

    #[test]
    fn mu_zero_conserves_w1_along_minus() {
        let traj = canonical_run(2.0, 512);
        let path = trace(&traj, 0.0, 0.0, PathSign::Minus).unwrap();
        let series = transport_residual(&traj, &path, Invariant::W1).unwrap();
        // mu = 0: residual is pure conservation drift (scheme error)
        let worst = series.residual.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(worst < 0.05, "w1 drift {worst}");
    }

    #[test]
    fn plus_characteristics_stay_ordered() {
        let traj = canonical_run(1.0, 512);
        let a = trace(&traj, -1.0, 0.0, PathSign::Plus).unwrap();
        let b = trace(&traj, 1.0, 0.0, PathSign::Plus).unwrap();
        assert!(first_crossing(&a, &b).is_none());
    }

    #[test]
    fn ode_residual_bound() {
        let traj = canonical_run(1.0, 512);
        let path = trace(&traj, 2.0, 0.0, PathSign::Plus).unwrap();
        let dx = traj.grid.dx;
        let mut worst = 0.0_f64;
        for j in 1..path.len() {
            let dt = path.times[j] - path.times[j - 1];
            let slope = (path.positions[j] - path.positions[j - 1]) / dt;
            let t_mid = 0.5 * (path.times[j] + path.times[j - 1]);
            let x_mid = 0.5 * (path.positions[j] + path.positions[j - 1]);
            let c_mid = traj.model.c(interp_u(&traj, t_mid, x_mid).unwrap()).unwrap();
            worst = worst.max((slope - c_mid).abs() / (dt + dx));
        }
        assert!(worst < 10.0, "ODE residual constant {worst}");
    }
}
