//! Search over Fourier control loops for a prescribed holonomy.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classical::{action_transport, integrate_direct};
use crate::connection::ControlConnection;
use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::HamiltonianPoly;
use crate::linalg::{self, CMatrix, Propagator};
use crate::path::ParameterPath;
use crate::quantization::QuantizationScheme;
use crate::quantum::holonomy_block;
use crate::torus::{ActionAngleState, TruncatedBasis};

/// Objective value reported for candidates whose holonomy is not finite.
pub const PENALTY: f64 = 1e6;

#[derive(Clone, Debug)]
pub enum SynthesisTarget {
    /// `U₂` restricted to the eigenspace `n₁ = block` of `Î₁`.
    QuantumBlock {
        scheme: QuantizationScheme,
        basis: TruncatedBasis,
        block: i64,
        matrix: CMatrix,
    },
    /// Action-transport matrix for the trajectory started at `initial`.
    Classical {
        initial: ActionAngleState,
        hamiltonian: HamiltonianPoly,
        matrix: Array2<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct SynthesisProblem {
    pub target: SynthesisTarget,
    pub conn: ControlConnection,
    /// Loop center; the search runs over harmonic amplitudes only.
    pub center: Vec<f64>,
    /// Harmonic order `K` per axis.
    pub order: usize,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Steps for each ordered exponential.
    pub steps: usize,
    pub propagator: Propagator,
    /// Half-width of the box restart points are drawn from.
    pub restart_scale: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Residual counted as converged.
    pub tolerance: f64,
}

impl SynthesisProblem {
    pub fn new(target: SynthesisTarget, conn: ControlConnection, order: usize) -> Self {
        let p = conn.p();
        Self {
            target,
            conn,
            center: vec![0.0; p],
            order,
            budget: 5000,
            seed: 0,
            restarts: 8,
            steps: 200,
            propagator: Propagator::Midpoint,
            restart_scale: 0.5,
            initial_step: 0.25,
            tolerance: 1e-8,
        }
    }

    /// Length `2·K·p` of the loop parameter vector.
    pub fn param_len(&self) -> usize {
        2 * self.order * self.conn.p()
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidConfig("harmonic order K must be >= 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be >= 1".into()));
        }
        check_dim("loop center", self.conn.p(), self.center.len())?;
        match &self.target {
            SynthesisTarget::QuantumBlock { scheme, basis, block, matrix } => {
                check_dim("scheme dimension", basis.m(), scheme.dim())?;
                check_dim("connection dimension", basis.m(), self.conn.m())?;
                if block.unsigned_abs() as usize > basis.n_max() {
                    return Err(Error::InvalidConfig(format!("block n1 = {block} outside the basis")));
                }
                let dim = basis.len() / basis.side();
                check_dim("target rows", dim, matrix.nrows())?;
                check_dim("target columns", dim, matrix.ncols())?;
            }
            SynthesisTarget::Classical { initial, hamiltonian, matrix } => {
                let m = self.conn.m();
                check_dim("initial state dimension", m, initial.dim())?;
                check_dim("hamiltonian dimension", m, hamiltonian.dim())?;
                check_dim("target rows", m, matrix.nrows())?;
                check_dim("target columns", m, matrix.ncols())?;
            }
        }
        Ok(())
    }

    pub fn loop_path(&self, params: &[f64]) -> Result<ParameterPath> {
        check_dim("loop parameters", self.param_len(), params.len())?;
        ParameterPath::fourier_loop_from_params(self.center.clone(), self.order, params)
    }

    /// Realized holonomy for the loop `params`, as a complex matrix.
    pub fn realized(&self, params: &[f64]) -> Result<CMatrix> {
        let path = self.loop_path(params)?;
        match &self.target {
            SynthesisTarget::QuantumBlock { scheme, basis, .. } => {
                holonomy_block(&self.conn, scheme, &path, basis, self.steps, self.propagator)
            }
            SynthesisTarget::Classical { initial, hamiltonian, .. } => {
                let traj = integrate_direct(initial, &self.conn, &path, hamiltonian, self.steps)?;
                let t = action_transport(&self.conn, &path, &traj, self.steps)?;
                Ok(linalg::from_real(&t))
            }
        }
    }

    fn target_matrix(&self) -> CMatrix {
        match &self.target {
            SynthesisTarget::QuantumBlock { matrix, .. } => matrix.clone(),
            SynthesisTarget::Classical { matrix, .. } => linalg::from_real(matrix),
        }
    }
}

/// `‖U(params) − T‖_F / dim`, or [`PENALTY`] when the holonomy is not finite.
pub fn holonomy_objective(problem: &SynthesisProblem, params: &[f64]) -> Result<f64> {
    let target = problem.target_matrix();
    let value = match problem.realized(params) {
        Ok(u) => linalg::frobenius(&(u - &target)) / target.nrows() as f64,
        Err(Error::Divergence { .. }) => f64::NAN,
        Err(e) => return Err(e),
    };
    if value.is_finite() {
        Ok(value)
    } else {
        log::warn!("non-finite holonomy objective at {params:?}; penalized");
        Ok(PENALTY)
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub path: ParameterPath,
    pub params: Vec<f64>,
    pub residual: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best residual after each evaluation.
    pub history: Vec<f64>,
    /// Restart that produced the best point.
    pub restart: usize,
}

struct Search<'a> {
    problem: &'a SynthesisProblem,
    best: (f64, Vec<f64>, usize),
    history: Vec<f64>,
    restart: usize,
}

impl Search<'_> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let f = holonomy_objective(self.problem, x)?;
        if f < self.best.0 {
            self.best = (f, x.to_vec(), self.restart);
        }
        self.history.push(self.best.0);
        Ok(f)
    }

    fn used(&self) -> usize {
        self.history.len()
    }

    fn done(&self) -> bool {
        self.used() >= self.problem.budget || self.best.0 <= self.problem.tolerance
    }

    /// Nelder–Mead from `x0` until `limit` total evaluations, convergence, or collapse.
    fn nelder_mead(&mut self, x0: Vec<f64>, limit: usize) -> Result<()> {
        const ALPHA: f64 = 1.0;
        const GAMMA: f64 = 2.0;
        const RHO: f64 = 0.5;
        const SHRINK: f64 = 0.5;
        let n = x0.len();
        let stop = |s: &Self| s.done() || s.used() >= limit;

        let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
        let f0 = self.eval(&x0)?;
        simplex.push((f0, x0.clone()));
        for i in 0..n {
            if stop(self) {
                return Ok(());
            }
            let mut x = x0.clone();
            x[i] += self.problem.initial_step;
            let f = self.eval(&x)?;
            simplex.push((f, x));
        }

        while !stop(self) {
            simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (f_best, f_worst) = (simplex[0].0, simplex[n].0);
            let size = simplex[1..]
                .iter()
                .flat_map(|(_, x)| x.iter().zip(&simplex[0].1).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if f_worst - f_best <= 1e-15 * f_best.abs().max(1e-300) || size < 1e-12 {
                return Ok(());
            }
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(_, x)| x[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].1)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(ALPHA);
            let fr = self.eval(&xr)?;
            if fr < simplex[0].0 {
                if stop(self) {
                    simplex[n] = (fr, xr);
                    break;
                }
                let xe = along(GAMMA);
                let fe = self.eval(&xe)?;
                simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
            } else if fr < simplex[n - 1].0 {
                simplex[n] = (fr, xr);
            } else {
                if stop(self) {
                    break;
                }
                let (xc, fc) = if fr < simplex[n].0 {
                    let xc = along(ALPHA * RHO);
                    let fc = self.eval(&xc)?;
                    (xc, fc)
                } else {
                    let xc = along(-RHO);
                    let fc = self.eval(&xc)?;
                    (xc, fc)
                };
                if fc < fr.min(simplex[n].0) {
                    simplex[n] = (fc, xc);
                } else {
                    let x_best = simplex[0].1.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        if stop(self) {
                            return Ok(());
                        }
                        let x: Vec<f64> = x_best
                            .iter()
                            .zip(&vertex.1)
                            .map(|(b, v)| b + SHRINK * (v - b))
                            .collect();
                        let f = self.eval(&x)?;
                        *vertex = (f, x);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Derivative-free loop search with seeded restarts.
///
/// Restart 0 starts at the zero-amplitude loop; later restarts draw their
/// starting amplitudes uniformly from `[−restart_scale, restart_scale]`.
/// Each restart gets an equal share of the evaluations left.
pub fn synthesize_loop(problem: &SynthesisProblem) -> Result<SynthesisResult> {
    problem.validate()?;
    let n = problem.param_len();
    let restarts = problem.restarts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut search = Search {
        problem,
        best: (f64::INFINITY, vec![0.0; n], 0),
        history: Vec::new(),
        restart: 0,
    };
    for r in 0..restarts {
        let x0: Vec<f64> = if r == 0 {
            vec![0.0; n]
        } else {
            (0..n)
                .map(|_| rng.random_range(-problem.restart_scale..=problem.restart_scale))
                .collect()
        };
        if search.done() {
            break;
        }
        search.restart = r;
        let remaining = problem.budget - search.used();
        let limit = search.used() + remaining.div_ceil(restarts - r);
        search.nelder_mead(x0, limit)?;
    }
    let (residual, params, restart) = search.best;
    Ok(SynthesisResult {
        path: problem.loop_path(&params)?,
        converged: residual <= problem.tolerance,
        evaluations: search.history.len(),
        history: search.history,
        params,
        residual,
        restart,
    })
}
