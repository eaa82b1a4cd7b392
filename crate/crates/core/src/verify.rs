//! Numerical invariant checks run against one configured system.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{action_transport, integrate_direct};
use crate::connection::ControlConnection;
use crate::error::Result;
use crate::hamiltonian::HamiltonianPoly;
use crate::linalg::{self, CMatrix, Propagator};
use crate::operator::StateVector;
use crate::path::ParameterPath;
use crate::quantization::{
    action_operator, dirac_residual, gauge_conjugate, gauge_overlap, quantize_affine, twist_reduce,
    AffineObservable, QuantizationScheme,
};
use crate::quantum::{
    build_delta, dynamic_factor, eigenspace_blocks, factorization_residual, full_evolution, holonomy_operator,
    holonomy_operator_with, schrodinger_evolve,
};
use crate::torus::{ActionAngleState, FourierSeries, TruncatedBasis, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// System the suite runs on.
#[derive(Clone, Debug)]
pub struct VerifySetup {
    pub conn: ControlConnection,
    pub scheme: QuantizationScheme,
    pub basis: TruncatedBasis,
    pub path: ParameterPath,
    pub hamiltonian: HamiltonianPoly,
    pub steps: usize,
    pub seed: u64,
}

/// Random real series with modes in the box `|n_k| ≤ support`.
pub fn random_series<R: Rng>(rng: &mut R, m: usize, support: usize, scale: f64) -> FourierSeries {
    let box_basis = TruncatedBasis::new(m, support, 0).expect("small box");
    let mut out = FourierSeries::zero(m);
    for n in box_basis.iter() {
        let c = rng.random_range(-scale..scale);
        let s = rng.random_range(-scale..scale);
        out = out
            .add(&FourierSeries::cos(&n, c))
            .and_then(|f| f.add(&FourierSeries::sin(&n, s)))
            .expect("matching dimensions");
    }
    out
}

pub fn random_affine<R: Rng>(rng: &mut R, m: usize, support: usize) -> AffineObservable {
    let a = (0..m).map(|_| random_series(rng, m, support, 1.0)).collect();
    let b = random_series(rng, m, support, 1.0);
    AffineObservable::new(a, b).expect("real series of matching dimension")
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::max_abs(&(a - b))
}

fn algebra_checks(s: &VerifySetup, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) -> Result<()> {
    let basis = &s.basis;
    let m = basis.m();
    let side = basis.side();

    let i1 = action_operator(&s.scheme, basis, 0)?;
    let mut counts = std::collections::BTreeMap::new();
    for e in i1.matrix().diag() {
        *counts.entry(e.re.to_bits()).or_insert(0usize) += 1;
    }
    let expected = basis.len() / side;
    let worst = counts.values().map(|&c| c.abs_diff(expected)).max().unwrap_or(0);
    out.push(Check::new("i1_degeneracy", worst as f64, 0.0));

    let lambda = s.scheme.lambda();
    let twisted = QuantizationScheme::new(&lambda, &vec![0.5; m])?;
    let mut twist_gap = 0.0f64;
    for k in 0..m {
        let a = action_operator(&twisted, basis, k)?;
        let b = action_operator(&twist_reduce(&twisted), basis, k)?;
        twist_gap = twist_gap.max(max_abs_diff(a.matrix(), b.matrix()));
    }
    out.push(Check::new("twist_equivalence", twist_gap, 0.0));

    let mut gauge_gap = 0.0f64;
    for d0 in [-1i64, 1, 2] {
        let mut d = vec![0i64; m];
        d[m - 1] = d0;
        let (shifted, v) = gauge_conjugate(&s.scheme, basis, &d)?;
        let overlap = gauge_overlap(basis, &d);
        for k in 0..m {
            let lhs = v.adjoint().compose(&action_operator(&s.scheme, basis, k)?)?.compose(&v)?;
            let rhs = action_operator(&shifted, basis, k)?;
            let diff = linalg::restrict(&(lhs.matrix() - rhs.matrix()), &overlap);
            gauge_gap = gauge_gap.max(linalg::max_abs(&diff));
        }
    }
    out.push(Check::new("gauge_conjugacy", gauge_gap, 0.0));

    if basis.n_max() >= 2 {
        let wide = basis.with_margin(2)?;
        let (mut herm, mut dirac) = (0.0f64, 0.0f64);
        for _ in 0..10 {
            let f = random_affine(rng, m, 1);
            let g = random_affine(rng, m, 1);
            let q = quantize_affine(&s.scheme, &wide, &f)?;
            let block = q.interior_block();
            herm = herm.max(linalg::frobenius(&(&block - &linalg::dagger(&block))));
            dirac = dirac.max(dirac_residual(&s.scheme, &wide, &f, &g)?);
        }
        out.push(Check::new("hermiticity", herm, 1e-12));
        out.push(Check::new("dirac_condition", dirac, 1e-10));
    }

    let psi: Vec<C64> = (0..basis.len())
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let psi = StateVector::new(*basis, psi.into_iter().map(|z| z / norm).collect())?;
    let evolved = schrodinger_evolve(&s.scheme, basis, &s.hamiltonian, &psi, 1.3)?;
    let n1: f64 = evolved.coeff().iter().map(|z| z.norm_sqr()).sum();
    out.push(Check::new("schrodinger_norm", (n1 - 1.0).abs(), 1e-14));
    Ok(())
}

fn quantum_checks(s: &VerifySetup, out: &mut Vec<Check>) -> Result<()> {
    let basis = &s.basis;
    let sigma = s.path.position(0.5)?;
    let mut gap = 0.0f64;
    for (beta, d) in build_delta(&s.conn, &s.scheme, &sigma, basis)?.iter().enumerate() {
        let a = (0..basis.m())
            .map(|i| s.conn.series(i, beta, &sigma))
            .collect::<Result<Vec<_>>>()?;
        let f = AffineObservable::new(a, FourierSeries::zero(basis.m()))?;
        let q = quantize_affine(&s.scheme, basis, &f)?;
        let diff = linalg::restrict(&(d.matrix() - q.matrix()), &basis.interior_positions());
        gap = gap.max(linalg::max_abs(&diff));
    }
    out.push(Check::new("delta_consistency", gap, 1e-12));

    let h = holonomy_operator(&s.conn, &s.scheme, &s.path, basis, s.steps)?;
    out.push(Check::new("holonomy_unitarity", h.unitarity_residual, 1e-8));
    out.push(Check::new("holonomy_block_commutator", h.block_residual, 1e-10));
    let leakage = eigenspace_blocks(&s.scheme, &h.operator)?.leakage;
    out.push(Check::new("holonomy_block_leakage", leakage, 1e-10));

    let u1 = dynamic_factor(&s.scheme, basis, 1.0)?;
    let full = full_evolution(&s.conn, &s.scheme, &s.path, basis, s.steps, 1.0)?;
    out.push(Check::new(
        "factorization",
        factorization_residual(&full, &u1, &h.operator)?,
        1e-8,
    ));

    let slow = s.path.reparametrize(3.0)?;
    let fine = s.steps.max(2000);
    let a = holonomy_operator_with(&s.conn, &s.scheme, &s.path, basis, fine, Propagator::Magnus4)?;
    let b = holonomy_operator_with(&s.conn, &s.scheme, &slow, basis, fine, Propagator::Magnus4)?;
    out.push(Check::new(
        "holonomy_reparametrization",
        linalg::frobenius(&(a.operator.matrix() - b.operator.matrix())),
        1e-8,
    ));
    out.push(Check::new(
        "reparametrization_keeps_loop_flag",
        f64::from(u8::from(s.path.is_loop() != slow.is_loop())),
        0.0,
    ));
    Ok(())
}

fn classical_checks(s: &VerifySetup, out: &mut Vec<Check>) -> Result<()> {
    let m = s.conn.m();
    let steps = s.steps.max(8000);
    let i0: Vec<f64> = (1..=m).map(|k| k as f64).collect();
    let state0 = ActionAngleState::new(i0.clone(), vec![0.0; m])?;
    let traj = integrate_direct(&state0, &s.conn, &s.path, &s.hamiltonian, steps)?;
    let t = action_transport(&s.conn, &s.path, &traj, steps)?;
    let predicted = t.dot(&ndarray::Array1::from(i0));
    let gap = predicted
        .iter()
        .zip(traj.final_state().actions())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(Check::new("classical_transport", gap, 1e-6));
    Ok(())
}

/// Runs every check; errors only on configuration problems.
pub fn run_suite(setup: &VerifySetup) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let mut checks = Vec::new();
    algebra_checks(setup, &mut rng, &mut checks)?;
    quantum_checks(setup, &mut checks)?;
    classical_checks(setup, &mut checks)?;
    Ok(VerifyReport { checks })
}
