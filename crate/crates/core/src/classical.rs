//! Classical evolution of action-angle states under the perturbed Hamiltonian
//! `H(I) + I_k Λ^k_α(σ, φ) σ̇^α`.
//!
//! Two routes are provided: direct fixed-step RK4 integration of the Hamilton
//! equation, and the ordered-exponential transport operators for the angle
//! characters and for the actions.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::connection::ControlConnection;
use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::HamiltonianPoly;
use crate::linalg::{self, CMatrix, Propagator};
use crate::operator::LinearOperator;
use crate::path::ParameterPath;
use crate::torus::{wrap_scalar, wrap_to_pi, ActionAngleState, TruncatedBasis, C64};

/// Sampled solution curve over `t ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<ActionAngleState>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<ActionAngleState>) -> Result<Self> {
        check_dim("trajectory states", times.len(), states.len())?;
        if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "trajectory times must be non-empty and strictly increasing".into(),
            ));
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[ActionAngleState] {
        &self.states
    }

    pub fn final_state(&self) -> &ActionAngleState {
        self.states.last().expect("trajectory is non-empty")
    }

    /// CSV with header `t,I_1..I_m,phi_1..phi_m`; floats with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let m = self.states[0].dim();
        let mut out = String::from("t");
        for k in 1..=m {
            let _ = write!(out, ",I_{k}");
        }
        for k in 1..=m {
            let _ = write!(out, ",phi_{k}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.16e}");
            for x in s.actions().iter().chain(s.angles()) {
                let _ = write!(out, ",{x:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

fn check_setup(conn: &ControlConnection, path: &ParameterPath, m: usize) -> Result<()> {
    check_dim("connection parameter dimension", path.dim(), conn.p())?;
    check_dim("connection torus dimension", m, conn.m())
}

// (dI/dt, dφ/dt) at raw (unwrapped) coordinates
fn rhs_raw(
    conn: &ControlConnection,
    h: &HamiltonianPoly,
    actions: &[f64],
    angles: &[f64],
    sigma: &[f64],
    sigma_dot: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let m = conn.m();
    let mut d_actions = vec![0.0; m];
    let mut d_angles = h.gradient(actions);
    for k in 0..m {
        for (alpha, &v) in sigma_dot.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (n, c) in conn.modes_at(k, alpha, sigma) {
                let e = c * C64::from_polar(1.0, n.dot(angles));
                d_angles[k] += e.re * v;
                // ∂_i of the mode is i n_i e; İ_i picks up −I_k ∂_iΛ^k σ̇
                for (i, di) in d_actions.iter_mut().enumerate() {
                    let n_i = n[i];
                    if n_i != 0 {
                        *di += actions[k] * n_i as f64 * e.im * v;
                    }
                }
            }
        }
    }
    (d_actions, d_angles)
}

/// Right-hand side of the Hamilton equation:
/// `İ_k = −I_j ∂_kΛ^j_α σ̇^α`, `φ̇^k = ∂H/∂I_k + Λ^k_α σ̇^α`.
pub fn control_rhs(
    state: &ActionAngleState,
    conn: &ControlConnection,
    sigma: &[f64],
    sigma_dot: &[f64],
    h: &HamiltonianPoly,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = state.dim();
    check_dim("connection torus dimension", m, conn.m())?;
    check_dim("hamiltonian dimension", m, h.dim())?;
    check_dim("sigma", conn.p(), sigma.len())?;
    check_dim("sigma velocity", conn.p(), sigma_dot.len())?;
    Ok(rhs_raw(conn, h, state.actions(), state.angles(), sigma, sigma_dot))
}

/// Fixed-step classical RK4 integration over `t ∈ [0, 1]`.
///
/// Piecewise-linear knots are step boundaries; angles are wrapped after every step.
pub fn integrate_direct(
    state0: &ActionAngleState,
    conn: &ControlConnection,
    path: &ParameterPath,
    h: &HamiltonianPoly,
    steps: usize,
) -> Result<Trajectory> {
    let m = state0.dim();
    check_setup(conn, path, m)?;
    check_dim("hamiltonian dimension", m, h.dim())?;
    let grid = path.step_grid(steps)?;

    let mut actions = state0.actions().to_vec();
    let mut angles = state0.angles().to_vec();
    let mut states = Vec::with_capacity(grid.len());
    states.push(state0.clone());

    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };

    for (step, w) in grid.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        let dt = t1 - t0;
        let tm = t0 + 0.5 * dt;
        let f = |t: f64, ia: &[f64], ph: &[f64]| {
            let (s, v) = path.eval_on_step(t, t0, t1);
            rhs_raw(conn, h, ia, ph, &s, &v)
        };
        let (k1a, k1p) = f(t0, &actions, &angles);
        let (k2a, k2p) = f(tm, &axpy(&actions, &k1a, 0.5 * dt), &axpy(&angles, &k1p, 0.5 * dt));
        let (k3a, k3p) = f(tm, &axpy(&actions, &k2a, 0.5 * dt), &axpy(&angles, &k2p, 0.5 * dt));
        let (k4a, k4p) = f(t1, &axpy(&actions, &k3a, dt), &axpy(&angles, &k3p, dt));
        for k in 0..m {
            actions[k] += dt / 6.0 * (k1a[k] + 2.0 * k2a[k] + 2.0 * k3a[k] + k4a[k]);
            angles[k] += dt / 6.0 * (k1p[k] + 2.0 * k2p[k] + 2.0 * k3p[k] + k4p[k]);
        }
        if actions.iter().chain(&angles).any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step, t: t1 });
        }
        angles.iter_mut().for_each(|a| *a = wrap_scalar(*a));
        states.push(ActionAngleState::new(actions.clone(), angles.clone())?);
    }
    Trajectory::new(grid, states)
}

/// Midpoint position and increment `Δξ` for every step of the grid.
pub(crate) fn step_samples(path: &ParameterPath, grid: &[f64]) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
    grid.windows(2)
        .map(|w| {
            let (t0, t1) = (w[0], w[1]);
            let tm = 0.5 * (t0 + t1);
            let (a, _) = path.eval_on_step(t0, t0, t1);
            let (b, _) = path.eval_on_step(t1, t0, t1);
            let (mid, _) = path.eval_on_step(tm, t0, t1);
            let delta = b.iter().zip(&a).map(|(x, y)| x - y).collect();
            (mid, delta, t1 - t0)
        })
        .collect()
}

/// Per-step exponents along `path`.
///
/// `gen(σ, w, dt)` must be linear in the displacement `w` and the elapsed
/// time `dt` jointly; it is sampled at the step midpoint with `w = Δξ`, or at
/// the two Gauss nodes with `w = ξ̇ h` for [`Propagator::Magnus4`].
pub(crate) fn step_exponents<F>(
    path: &ParameterPath,
    steps: usize,
    propagator: Propagator,
    mut gen: F,
) -> Result<Vec<CMatrix>>
where
    F: FnMut(&[f64], &[f64], f64) -> Result<CMatrix>,
{
    let grid = path.step_grid(steps)?;
    match propagator {
        Propagator::Midpoint => step_samples(path, &grid)
            .into_iter()
            .map(|(mid, delta, dt)| gen(&mid, &delta, dt))
            .collect(),
        Propagator::Magnus4 => grid
            .windows(2)
            .map(|w| {
                let (t0, t1) = (w[0], w[1]);
                let h = t1 - t0;
                let mut a = Vec::with_capacity(2);
                for c in linalg::GAUSS_NODES {
                    let (pos, vel) = path.eval_on_step(t0 + c * h, t0, t1);
                    let disp: Vec<f64> = vel.iter().map(|v| v * h).collect();
                    a.push(gen(&pos, &disp, h)?);
                }
                Ok(linalg::magnus4(&a[0], &a[1]))
            })
            .collect(),
    }
}

/// Ordered exponential `U(1) = T exp[i ∫ M_α dσ^α]` for the angle characters.
///
/// Row `n` of the result holds the Fourier coefficients (in the initial angle)
/// of `exp(i n·φ(1))`, up to truncation.
pub fn angle_mode_evolution(
    conn: &ControlConnection,
    path: &ParameterPath,
    basis: &TruncatedBasis,
    steps: usize,
) -> Result<LinearOperator> {
    angle_mode_evolution_with(conn, path, basis, steps, Propagator::Midpoint)
}

pub fn angle_mode_evolution_with(
    conn: &ControlConnection,
    path: &ParameterPath,
    basis: &TruncatedBasis,
    steps: usize,
    propagator: Propagator,
) -> Result<LinearOperator> {
    check_setup(conn, path, basis.m())?;
    let support = conn.max_support();
    if basis.margin() < support {
        return Err(Error::MarginTooSmall {
            margin: basis.margin(),
            support,
        });
    }
    let generators = step_exponents(path, steps, propagator, |sigma, disp, _| {
        let ms = conn.build_m(sigma, basis)?;
        let mut g = CMatrix::zeros((basis.len(), basis.len()));
        for (m_alpha, d) in ms.iter().zip(disp) {
            if *d != 0.0 {
                g.scaled_add(C64::new(0.0, *d), m_alpha);
            }
        }
        Ok(g)
    })?;
    LinearOperator::new(*basis, linalg::ordered_exponential(basis.len(), generators))
}

/// Ordered exponential `T exp[−∫ L_α dσ^α]` evaluated along `angle_traj`,
/// mapping `I(0)` to `I(1)`.
pub fn action_transport(
    conn: &ControlConnection,
    path: &ParameterPath,
    angle_traj: &Trajectory,
    steps: usize,
) -> Result<Array2<f64>> {
    let m = conn.m();
    check_dim("parameter dimension", conn.p(), path.dim())?;
    check_dim("trajectory dimension", m, angle_traj.states[0].dim())?;
    let grid = path.step_grid(steps)?;
    if grid.len() != angle_traj.times.len()
        || grid
            .iter()
            .zip(&angle_traj.times)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::TrajectoryMismatch(format!(
            "expected {} grid points, trajectory has {}",
            grid.len(),
            angle_traj.times.len()
        )));
    }
    let mut u = linalg::identity(m);
    for (j, (mid, delta, _)) in step_samples(path, &grid).into_iter().enumerate() {
        let a = angle_traj.states[j].angles();
        let b = angle_traj.states[j + 1].angles();
        let phi_mid: Vec<f64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| wrap_scalar(x + 0.5 * wrap_to_pi(y - x)))
            .collect();
        let ls = conn.build_l(&mid, &phi_mid)?;
        let mut g = Array2::<f64>::zeros((m, m));
        for (l_alpha, d) in ls.iter().zip(&delta) {
            g.scaled_add(-*d, l_alpha);
        }
        u = linalg::expm(&linalg::from_real(&g)).dot(&u);
    }
    Ok(u.mapv(|z| z.re))
}

/// Time-dependent canonical shift `I' = I`, `φ' = φ + t ∂F/∂I`.
pub fn canonical_shift(state: &ActionAngleState, t: f64, f: &HamiltonianPoly) -> Result<ActionAngleState> {
    check_dim("generating function dimension", state.dim(), f.dim())?;
    let grad = f.gradient(state.actions());
    let angles = state
        .angles()
        .iter()
        .zip(&grad)
        .map(|(p, g)| p + t * g)
        .collect();
    ActionAngleState::new(state.actions().to_vec(), angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Polynomial;
    use crate::torus::MultiIndex;
    use std::f64::consts::PI;

    fn cosine(eps: f64) -> ControlConnection {
        ControlConnection::new(1, 1)
            .unwrap()
            .with_cos(0, 0, &MultiIndex::new(vec![1]), Polynomial::constant(1, eps))
            .unwrap()
    }

    fn line() -> ParameterPath {
        ParameterPath::line(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn rhs_for_angle_independent_connection() {
        let c = ControlConnection::new(2, 1)
            .unwrap()
            .with_constant(0, 0, Polynomial::constant(1, 0.7))
            .unwrap();
        let s = ActionAngleState::new(vec![1.0, 2.0], vec![0.3, 0.4]).unwrap();
        let (di, dp) = control_rhs(&s, &c, &[0.0], &[2.0], &HamiltonianPoly::zero(2)).unwrap();
        assert_eq!(di, vec![0.0, 0.0]);
        assert_eq!(dp, vec![1.4, 0.0]);
    }

    #[test]
    fn rhs_unperturbed() {
        let c = cosine(0.3);
        let h = HamiltonianPoly::zero(1).with_term(vec![2], 0.5).unwrap();
        let s = ActionAngleState::new(vec![1.3], vec![0.9]).unwrap();
        let (di, dp) = control_rhs(&s, &c, &[0.0], &[0.0], &h).unwrap();
        assert_eq!(di, vec![0.0]);
        assert!((dp[0] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn rhs_cosine_matches_symbolic_derivative() {
        let eps = 0.3;
        let c = cosine(eps);
        for &(i, phi, v) in &[(1.0, 0.4, 1.0), (2.5, 3.0, -0.7), (0.2, 5.5, 2.0)] {
            let s = ActionAngleState::new(vec![i], vec![phi]).unwrap();
            let (di, dp) = control_rhs(&s, &c, &[0.0], &[v], &HamiltonianPoly::zero(1)).unwrap();
            assert!((di[0] - i * eps * phi.sin() * v).abs() < 1e-14);
            assert!((dp[0] - eps * phi.cos() * v).abs() < 1e-14);
        }
    }

    #[test]
    fn rhs_agrees_with_build_l_and_eval_lambda() {
        let c = ControlConnection::new(2, 2)
            .unwrap()
            .with_cos(0, 0, &MultiIndex::new(vec![1, 1]), Polynomial::linear(2, 1, 0.4))
            .unwrap()
            .with_sin(1, 1, &MultiIndex::new(vec![0, 2]), Polynomial::constant(2, -0.3))
            .unwrap()
            .with_sin(1, 0, &MultiIndex::new(vec![1, -1]), Polynomial::constant(2, 0.2))
            .unwrap();
        let sigma = [0.3, 1.2];
        let vel = [0.8, -0.5];
        let s = ActionAngleState::new(vec![1.1, -0.4], vec![0.7, 2.2]).unwrap();
        let (di, dp) = control_rhs(&s, &c, &sigma, &vel, &HamiltonianPoly::zero(2)).unwrap();
        let lam = c.eval_lambda(&sigma, s.angles()).unwrap();
        let ls = c.build_l(&sigma, s.angles()).unwrap();
        for k in 0..2 {
            let mut want_i = 0.0;
            let mut want_p = 0.0;
            for a in 0..2 {
                want_p += lam[[k, a]] * vel[a];
                for j in 0..2 {
                    want_i -= ls[a][[k, j]] * s.actions()[j] * vel[a];
                }
            }
            assert!((di[k] - want_i).abs() < 1e-14);
            assert!((dp[k] - want_p).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_connection_is_constant() {
        let c = ControlConnection::new(1, 1).unwrap();
        let s = ActionAngleState::new(vec![1.0], vec![0.5]).unwrap();
        let tr = integrate_direct(&s, &c, &line(), &HamiltonianPoly::zero(1), 50).unwrap();
        assert!(tr.states().iter().all(|x| x == &s));
        assert_eq!(tr.times().len(), 51);
    }

    #[test]
    fn divergence_is_reported() {
        let c = ControlConnection::new(1, 1).unwrap();
        let h = HamiltonianPoly::zero(1).with_analytic(std::sync::Arc::new(|x: &[f64]| {
            if x[0] > 0.0 { f64::NAN } else { 0.0 }
        }));
        let s = ActionAngleState::new(vec![1.0], vec![0.5]).unwrap();
        let err = integrate_direct(&s, &c, &line(), &h, 10).unwrap_err();
        assert!(matches!(err, Error::Divergence { step: 0, .. }));
    }

    #[test]
    fn csv_layout() {
        let c = cosine(0.3);
        let s = ActionAngleState::new(vec![1.0], vec![0.0]).unwrap();
        let tr = integrate_direct(&s, &c, &line(), &HamiltonianPoly::zero(1), 4).unwrap();
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,I_1,phi_1");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0"));
    }

    #[test]
    fn margin_is_enforced() {
        let c = cosine(0.3);
        let b = TruncatedBasis::new(1, 4, 0).unwrap();
        assert!(matches!(
            angle_mode_evolution(&c, &line(), &b, 10),
            Err(Error::MarginTooSmall { margin: 0, support: 1 })
        ));
    }

    #[test]
    fn zero_connection_gives_identity_evolution() {
        let c = ControlConnection::new(1, 1).unwrap();
        let b = TruncatedBasis::new(1, 3, 0).unwrap();
        let u = angle_mode_evolution(&c, &line(), &b, 10).unwrap();
        assert_eq!(u.matrix(), &linalg::identity(b.len()));
    }

    #[test]
    fn transport_rejects_mismatched_trajectory() {
        let c = cosine(0.3);
        let s = ActionAngleState::new(vec![1.0], vec![0.0]).unwrap();
        let tr = integrate_direct(&s, &c, &line(), &HamiltonianPoly::zero(1), 10).unwrap();
        assert!(matches!(
            action_transport(&c, &line(), &tr, 20),
            Err(Error::TrajectoryMismatch(_))
        ));
        let u = action_transport(&c, &line(), &tr, 10).unwrap();
        assert_eq!(u.dim(), (1, 1));
    }

    #[test]
    fn canonical_shift_cases() {
        let s = ActionAngleState::new(vec![0.4, 1.5], vec![0.2, 6.0]).unwrap();
        assert_eq!(canonical_shift(&s, 3.0, &HamiltonianPoly::zero(2)).unwrap(), s);
        let shifted = canonical_shift(&s, PI, &HamiltonianPoly::action(2, 0)).unwrap();
        assert!((shifted.angles()[0] - (0.2 + PI)).abs() < 1e-15);
        assert_eq!(shifted.angles()[1], 6.0);
        assert_eq!(shifted.actions(), s.actions());
    }
}
