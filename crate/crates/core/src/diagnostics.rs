//! The functionals behind the continuum arguments, evaluated on states and
//! trajectories: the energy density ẽ = c′(u)c(u)(∂xu)², the integrated
//! Riemann invariants
//!
//! w₁ = ∫_{−∞}^x ∂tu + G(u),   w₂ = ∫_{−∞}^x ∂tu − G(u),
//! v₁ = ∫_x^{∞} ∂tu − G(u),    v₂ = ∫_x^{∞} ∂tu + G(u),
//!
//! the Lᵖ power sums of (R, S), the mean functional F(t) = −∫(u − u₀) with
//! its once-integrated identity F′(t) − F′(0) = μ∫₀ᵗ∫ẽ, and the
//! cutoff-localized functional F_ε used when u₁ has no integrable tail.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::grid::DiscreteField;
use crate::numerics::{
    cumulative_trapezoid, quintic_ramp, quintic_ramp_d1, quintic_ramp_d2, tail_trapezoid,
    trapezoid,
};
use crate::solver::{derive_spatial, State, Trajectory};
use crate::wavespeed::WaveSpeedModel;
use crate::Result;

/// ẽ = c′(u) c(u) (∂xu)² at the nodes, with ∂xu reconstructed from (R−S)/2c.
pub fn etilde(state: &State, model: &WaveSpeedModel, eps_degeneracy: f64) -> Result<Vec<f64>> {
    let (ux, cu) = derive_spatial(state, model, eps_degeneracy)?;
    let mut out = Vec::with_capacity(state.u.len());
    for i in 0..state.u.len() {
        let cp = model.c_prime(state.u[i])?;
        out.push(cp * cu[i] * ux[i] * ux[i]);
    }
    Ok(out)
}

/// Left-anchored invariants (w₁, w₂) on a state.
pub fn riemann_w(state: &State, model: &WaveSpeedModel) -> Result<(Vec<f64>, Vec<f64>)> {
    let cum = cumulative_trapezoid(&state.du_dt(), state.grid.dx);
    let mut w1 = Vec::with_capacity(cum.len());
    let mut w2 = Vec::with_capacity(cum.len());
    for (i, &m) in cum.iter().enumerate() {
        let g = model.big_g(state.u[i])?;
        w1.push(m + g);
        w2.push(m - g);
    }
    Ok((w1, w2))
}

/// Right-anchored invariants (v₁, v₂) on a state.
pub fn riemann_v(state: &State, model: &WaveSpeedModel) -> Result<(Vec<f64>, Vec<f64>)> {
    let tail = tail_trapezoid(&state.du_dt(), state.grid.dx);
    let mut v1 = Vec::with_capacity(tail.len());
    let mut v2 = Vec::with_capacity(tail.len());
    for (i, &m) in tail.iter().enumerate() {
        let g = model.big_g(state.u[i])?;
        v1.push(m - g);
        v2.push(m + g);
    }
    Ok((v1, v2))
}

fn check_untainted(traj: &Trajectory) -> Result<()> {
    if traj.diag.boundary_taint {
        Err(CoreError::Tainted(
            "boundary contamination detected; line integrals are unreliable".into(),
        ))
    } else {
        Ok(())
    }
}

/// (w₁, w₂) at a stored snapshot, refusing tainted runs.
pub fn riemann_w_snapshot(traj: &Trajectory, snapshot: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_untainted(traj)?;
    riemann_w(&traj.snapshots[snapshot].state, &traj.model)
}

/// (v₁, v₂) at a stored snapshot, refusing tainted runs.
pub fn riemann_v_snapshot(traj: &Trajectory, snapshot: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_untainted(traj)?;
    riemann_v(&traj.snapshots[snapshot].state, &traj.model)
}

/// Discrete ‖R‖ₚᵖ + ‖S‖ₚᵖ (the p-th power sum, not the norm).
pub fn lp_norms(state: &State, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    let sums: Vec<f64> = state
        .r
        .iter()
        .zip(state.s.iter())
        .map(|(r, s)| r.abs().powf(p) + s.abs().powf(p))
        .collect();
    trapezoid(&sums, state.grid.dx)
}

/// Signed nodewise maxima of R and S (both should stay ≤ 0 for admissible
/// data).
pub fn sign_check(state: &State) -> (f64, f64) {
    let max_r = state.r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_s = state.s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max_r, max_s)
}

/// Reference state for the mean functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FReference {
    InitialData,
    /// Measure against u(T, ·); T snaps to the first recorded time ≥ T.
    Time(f64),
}

/// F(t), F′(t) and the once-integrated identity residual
/// [F′(t) − F′(t₀)] − μ∫_{t₀}^t ∫ẽ, all on the per-step series.
#[derive(Debug, Clone)]
pub struct FunctionalF {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    /// F′(t) = −∫ ∂tu dx, computed from the state rather than by
    /// differencing F.
    pub f_prime: Vec<f64>,
    pub identity_residual: Vec<f64>,
}

pub fn functional_f(traj: &Trajectory, reference: FReference) -> Result<FunctionalF> {
    check_untainted(traj)?;
    let d = &traj.diag;
    if d.is_empty() {
        return Err(CoreError::MissingDiagnostics("empty diagnostic series".into()));
    }
    let k0 = match reference {
        FReference::InitialData => 0,
        FReference::Time(t_ref) => d
            .t
            .iter()
            .position(|&t| t >= t_ref)
            .ok_or_else(|| CoreError::OutOfBox(format!("reference time {t_ref} past run end")))?,
    };

    let f_ref = d.f[k0];
    let mu = traj.mu();
    let n = d.len();

    let mut f = Vec::with_capacity(n);
    let mut f_prime = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);

    // cumulative ∫ e_total ds from t_is[k0], trapezoid in time
    let mut acc = 0.0;
    let mut prev_t = d.t[k0];
    let mut prev_e = d.e_total[k0];
    for k in 0..n {
        f.push(d.f[k] - f_ref);
        f_prime.push(-d.mass_ut[k]);
        if k <= k0 {
            residual.push(if k == k0 { 0.0 } else { f64::NAN });
            continue;
        }
        let (t, e) = (d.t[k], d.e_total[k]);
        acc += 0.5 * (t - prev_t) * (prev_e + e);
        prev_t = t;
        prev_e = e;
        residual.push((-d.mass_ut[k]) - (-d.mass_ut[k0]) - mu * acc);
    }

    Ok(FunctionalF { t: d.t.clone(), f, f_prime, identity_residual: residual })
}

/// Cutoff profile ψ_ε(x) = ψ(εx): plateau 1 on |x| ≤ 1, C² quintic ramp to
/// 0 on 1 < |x| < 2, 0 beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub eps: f64,
}

impl CutoffSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(CoreError::Config(format!("cutoff eps must be positive, got {eps}")));
        }
        Ok(Self { eps })
    }

    /// ψ(x) (the unscaled profile).
    pub fn psi(x: f64) -> f64 {
        quintic_ramp(x.abs() - 1.0)
    }

    /// ψ′(x).
    pub fn psi_d1(x: f64) -> f64 {
        x.signum() * quintic_ramp_d1(x.abs() - 1.0)
    }

    /// ψ″(x) (even, continuous, vanishes at |x| = 1 and 2).
    pub fn psi_d2(x: f64) -> f64 {
        quintic_ramp_d2(x.abs() - 1.0)
    }

    pub fn psi_eps(&self, x: f64) -> f64 {
        Self::psi(self.eps * x)
    }

    /// Half-width of supp ψ_ε.
    pub fn support_halfwidth(&self) -> f64 {
        2.0 / self.eps
    }
}

/// Cutoff functional series over the stored snapshots.
#[derive(Debug, Clone)]
pub struct CutoffSeries {
    pub t: Vec<f64>,
    /// F_ε(t) = −∫ ψ_ε u dx.
    pub f_eps: Vec<f64>,
    /// F′_ε(t) = −∫ ψ_ε ∂tu dx.
    pub f_prime_eps: Vec<f64>,
    /// Identity right-hand side −∫(∂x²ψ_ε)G₂(u) + μ∫ψ_ε ẽ.
    pub rhs: Vec<f64>,
    /// [F′_ε(t) − F′_ε(t₀)] − ∫_{t₀}^t rhs ds.
    pub identity_residual: Vec<f64>,
    /// True when late near-degenerate snapshots were dropped.
    pub truncated: bool,
}

/// Evaluate the cutoff functional and its once-integrated identity.
///
/// The ∫ψ″(εx)·G₂ term is realized as the discrete second difference of
/// the sampled ψ_ε against G₂(u) (a summation-by-parts form): it telescopes
/// to exactly zero for spatially constant u, which the continuous ψ″
/// sampled pointwise would only do up to O(dx²).
pub fn cutoff_functional(
    traj: &Trajectory,
    spec: &CutoffSpec,
    model: &WaveSpeedModel,
) -> Result<CutoffSeries> {
    let grid = traj.grid;
    let half_domain = (-grid.x_min).min(grid.x_last());
    if spec.support_halfwidth() > half_domain {
        return Err(CoreError::Support(format!(
            "cutoff support half-width {} exceeds half-domain {half_domain}",
            spec.support_halfwidth()
        )));
    }
    if traj.snapshots.len() < 2 {
        return Err(CoreError::MissingDiagnostics("need at least two snapshots".into()));
    }

    let dx = grid.dx;
    let psi: Vec<f64> = grid.nodes().map(|x| spec.psi_eps(x)).collect();
    let mu = traj.mu();

    let mut out = CutoffSeries {
        t: Vec::new(),
        f_eps: Vec::new(),
        f_prime_eps: Vec::new(),
        rhs: Vec::new(),
        identity_residual: Vec::new(),
        truncated: false,
    };

    for snap in &traj.snapshots {
        let state = &snap.state;
        let e = match etilde(state, model, traj.eps_degeneracy) {
            Ok(e) => e,
            Err(CoreError::NearDegenerate { .. }) => {
                out.truncated = true;
                break;
            }
            Err(other) => return Err(other),
        };

        let weighted_u: Vec<f64> =
            psi.iter().zip(state.u.iter()).map(|(p, u)| p * u).collect();
        let dudt = state.du_dt();
        let weighted_ut: Vec<f64> = psi.iter().zip(dudt.iter()).map(|(p, v)| p * v).collect();
        let weighted_e: Vec<f64> = psi.iter().zip(e.iter()).map(|(p, v)| p * v).collect();

        let mut laplace_term = 0.0;
        for i in 1..grid.n - 1 {
            let d2 = psi[i + 1] - 2.0 * psi[i] + psi[i - 1];
            if d2 != 0.0 {
                laplace_term += d2 * model.big_g2(state.u[i])?;
            }
        }
        laplace_term /= dx;

        out.t.push(state.t);
        out.f_eps.push(-trapezoid(&weighted_u, dx));
        out.f_prime_eps.push(-trapezoid(&weighted_ut, dx));
        out.rhs.push(-laplace_term + mu * trapezoid(&weighted_e, dx));
    }

    // once-integrated identity over the kept times
    let mut acc = 0.0;
    for k in 0..out.t.len() {
        if k > 0 {
            acc += 0.5 * (out.t[k] - out.t[k - 1]) * (out.rhs[k] + out.rhs[k - 1]);
        }
        out.identity_residual.push(out.f_prime_eps[k] - out.f_prime_eps[0] - acc);
    }
    Ok(out)
}

/// The slow-tail lower-bound quantity −∫ ψ(x/(1+t)) u₁ dx.
pub fn slow_tail_quantity(u1: &DiscreteField, t: f64) -> f64 {
    let scale = 1.0 / (1.0 + t);
    let weighted: Vec<f64> = u1
        .grid
        .nodes()
        .zip(u1.values.iter())
        .map(|(x, v)| CutoffSpec::psi(scale * x) * v)
        .collect();
    -trapezoid(&weighted, u1.grid.dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::initdata::ProfileSpec;
    use crate::solver::{run_fields, SolverConfig};

    const SQRT_PI: f64 = 1.7724538509055159;

    fn model(a: f64) -> WaveSpeedModel {
        WaveSpeedModel::power_law(a).unwrap()
    }

    fn grid(n: usize) -> GridSpec {
        GridSpec::from_box(-20.0, 20.0, n).unwrap()
    }

    fn state_from(g: GridSpec, u: Vec<f64>, r: Vec<f64>, s: Vec<f64>) -> State {
        State::new(0.0, g, u, r, s).unwrap()
    }

    #[test]
    fn etilde_zero_when_r_equals_s() {
        let g = grid(64);
        let st = state_from(g, vec![0.2; g.n], vec![-0.5; g.n], vec![-0.5; g.n]);
        let e = etilde(&st, &model(1.0), 0.02).unwrap();
        assert!(e.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn etilde_unit_case() {
        let g = grid(64);
        let st = state_from(g, vec![0.0; g.n], vec![1.0; g.n], vec![-1.0; g.n]);
        let e = etilde(&st, &model(1.0), 0.02).unwrap();
        assert!(e.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn etilde_nonnegative() {
        let g = grid(128);
        let r: Vec<f64> = g.nodes().map(|x| -(x * 0.3).sin().abs()).collect();
        let s: Vec<f64> = g.nodes().map(|x| -(x * 0.2).cos().abs()).collect();
        let st = state_from(g, vec![0.5; g.n], r, s);
        let e = etilde(&st, &model(2.0), 0.02).unwrap();
        assert!(e.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn riemann_invariants_zero_state() {
        let g = grid(64);
        let st = state_from(g, vec![0.0; g.n], vec![0.0; g.n], vec![0.0; g.n]);
        let (w1, w2) = riemann_w(&st, &model(1.0)).unwrap();
        let (v1, v2) = riemann_v(&st, &model(1.0)).unwrap();
        for i in 0..g.n {
            assert!((w1[i] - 0.5).abs() < 1e-15);
            assert!((w2[i] + 0.5).abs() < 1e-15);
            assert!((v1[i] + 0.5).abs() < 1e-15);
            assert!((v2[i] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn riemann_algebraic_identities() {
        let g = grid(256);
        let u: Vec<f64> = g.nodes().map(|x| 0.4 * (-x * x / 7.0).exp() - 0.1).collect();
        let r: Vec<f64> = g.nodes().map(|x| -(-x * x / 3.0).exp()).collect();
        let s: Vec<f64> = g.nodes().map(|x| -0.5 * (-x * x / 5.0).exp()).collect();
        let m = model(1.5);
        let st = state_from(g, u.clone(), r, s);
        let (w1, w2) = riemann_w(&st, &m).unwrap();
        let (v1, v2) = riemann_v(&st, &m).unwrap();
        for i in 0..g.n {
            let two_g = 2.0 * m.big_g(u[i]).unwrap();
            assert!((w1[i] - w2[i] - two_g).abs() < 1e-12);
            assert!((v2[i] - v1[i] - two_g).abs() < 1e-12);
        }
        // last node of the cumulative integral equals the full-line trapezoid
        let full = trapezoid(&st.du_dt(), g.dx);
        assert!((w1[g.n - 1] - (full + m.big_g(u[g.n - 1]).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn lp_norms_gaussian_values() {
        let g = grid(4096);
        let field: Vec<f64> = g.nodes().map(|x| -(-x * x).exp()).collect();
        let st = state_from(g, vec![0.0; g.n], field.clone(), field);
        // p = 2: 2 * sqrt(pi/2); p = 1: 2 * sqrt(pi)
        let l2 = lp_norms(&st, 2.0);
        let l1 = lp_norms(&st, 1.0);
        assert!((l2 - 2.0 * (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-9, "l2 = {l2}");
        assert!((l1 - 2.0 * SQRT_PI).abs() < 1e-9, "l1 = {l1}");
        let zero = state_from(g, vec![0.0; g.n], vec![0.0; g.n], vec![0.0; g.n]);
        assert_eq!(lp_norms(&zero, 2.0), 0.0);
    }

    #[test]
    fn sign_check_values() {
        let g = grid(64);
        let zero = state_from(g, vec![0.0; g.n], vec![0.0; g.n], vec![0.0; g.n]);
        assert_eq!(sign_check(&zero), (0.0, 0.0));
        let bad: Vec<f64> = g.nodes().map(|x| (-x * x).exp()).collect();
        let st = state_from(g, vec![0.0; g.n], bad.clone(), bad);
        let (mr, ms) = sign_check(&st);
        assert!((mr - 1.0).abs() < 1e-12 && (ms - 1.0).abs() < 1e-12);
    }

    #[test]
    fn functional_f_initial_slope_and_mu_zero_conservation() {
        let g = grid(512);
        let (u0, u1) = ProfileSpec::canonical_gaussian(1.0).build(g, None).unwrap();
        let mut cfg = SolverConfig::new(2.0, 2.0);
        cfg.store_snapshots = false;
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        let ff = functional_f(&traj, FReference::InitialData).unwrap();
        assert!((ff.f_prime[0] - SQRT_PI).abs() < 1e-4, "F'(0) = {}", ff.f_prime[0]);
        // mu = 0: residual is the drift of F', which stays at scheme error
        let worst = ff
            .identity_residual
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(worst < 5e-3, "worst mu=0 residual {worst}");
    }

    #[test]
    fn functional_f_time_reference() {
        let g = grid(256);
        let (u0, u1) = ProfileSpec::canonical_gaussian(1.0).build(g, None).unwrap();
        let cfg = SolverConfig::new(1.0, 0.5);
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        let ff = functional_f(&traj, FReference::Time(0.2)).unwrap();
        let k0 = ff.identity_residual.iter().position(|v| v.is_finite()).unwrap();
        assert!(ff.t[k0] >= 0.2);
        assert!((ff.identity_residual[k0]).abs() < 1e-14);
        assert!(functional_f(&traj, FReference::Time(99.0)).is_err());
    }

    #[test]
    fn cutoff_profile_shape() {
        assert_eq!(CutoffSpec::psi(0.5), 1.0);
        assert_eq!(CutoffSpec::psi(-0.99), 1.0);
        assert_eq!(CutoffSpec::psi(2.0), 0.0);
        assert_eq!(CutoffSpec::psi(-2.4), 0.0);
        let p = CutoffSpec::psi(1.5);
        assert!(p > 0.0 && p < 1.0);
        assert_eq!(CutoffSpec::psi_d1(1.0), 0.0);
        assert_eq!(CutoffSpec::psi_d1(2.0), 0.0);
        // psi'' integrates to ~0 over the support
        let quad = crate::numerics::adaptive_simpson(&CutoffSpec::psi_d2, -3.0, 3.0, 1e-12);
        assert!(quad.abs() < 1e-10);
    }

    #[test]
    fn cutoff_constant_state_residual_is_zero() {
        let g = grid(512);
        let spec = ProfileSpec::Plateau { a: 0.0, u0_level: 0.25, core: 100.0, ramp: 1.0 };
        let (u0, u1) = spec.build(g, None).unwrap();
        let cfg = SolverConfig::new(1.0, 2.0);
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        let cut = cutoff_functional(&traj, &CutoffSpec::new(0.2).unwrap(), &model(1.0)).unwrap();
        // F_eps = -k * 3/eps for the plateau value k
        let expect = -0.25 * 3.0 / 0.2;
        assert!((cut.f_eps[0] - expect).abs() < 2e-3, "F_eps = {}", cut.f_eps[0]);
        for v in &cut.identity_residual {
            assert!(v.abs() < 1e-12, "residual {v}");
        }
    }

    #[test]
    fn cutoff_zero_solution() {
        let g = grid(128);
        let u0 = DiscreteField::constant(g, 0.0).unwrap();
        let u1 = DiscreteField::constant(g, 0.0).unwrap();
        let cfg = SolverConfig::new(1.0, 1.0);
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        let cut = cutoff_functional(&traj, &CutoffSpec::new(0.5).unwrap(), &model(1.0)).unwrap();
        assert!(cut.f_eps.iter().all(|v| v.abs() < 1e-14));
        assert!(cut.identity_residual.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn cutoff_support_error() {
        let g = grid(128); // half-domain 20
        let u0 = DiscreteField::constant(g, 0.0).unwrap();
        let u1 = DiscreteField::constant(g, 0.0).unwrap();
        let cfg = SolverConfig::new(1.0, 0.5);
        let traj = run_fields(&model(1.0), &cfg, &u0, &u1).unwrap();
        let res = cutoff_functional(&traj, &CutoffSpec::new(0.05).unwrap(), &model(1.0));
        assert!(matches!(res, Err(CoreError::Support(_))));
    }

    #[test]
    fn slow_tail_quantity_grows_with_domain() {
        // the quantity -∫ psi(x/(1+t)) u1 grows with domain size for a
        // non-integrable tail
        let mut prev = 0.0;
        for half in [50.0, 100.0, 200.0] {
            let g = GridSpec::from_box(-half, half, 4096).unwrap();
            let (_, u1) = ProfileSpec::SlowTail { a: 1.0, beta: 0.4 }.build(g, None).unwrap();
            let q = slow_tail_quantity(&u1, half / 2.0);
            assert!(q > prev, "q({half}) = {q} <= {prev}");
            prev = q;
        }
    }
}
