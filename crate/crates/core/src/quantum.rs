//! Quantum evolution with `Ĥ = Î₁`: dynamic factor, control generators `Δ̂_β`
//! acting on axes `2..m`, and the holonomy operator.

use ndarray::{s, Array1};
use serde::{Deserialize, Serialize};

use crate::classical::step_exponents;
use crate::connection::ControlConnection;
use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::HamiltonianPoly;
use crate::linalg::{self, CMatrix, Propagator};
use crate::operator::{LinearOperator, StateVector};
use crate::path::ParameterPath;
use crate::quantization::{action_operator, hamiltonian_spectrum, QuantizationScheme};
use crate::torus::{TruncatedBasis, C64};

/// Eigenvalues of `Î₁` closer than this share a block.
pub const DEGENERACY_TOL: f64 = 1e-9;

const COMMUTATION_TOL: f64 = 1e-12;

fn check_generators(conn: &ControlConnection, scheme: &QuantizationScheme, basis: &TruncatedBasis) -> Result<()> {
    check_dim("connection dimension", basis.m(), conn.m())?;
    check_dim("scheme dimension", basis.m(), scheme.dim())?;
    if conn.has_fiber(0) || conn.depends_on_angle(0) {
        return Err(Error::InvalidConfig(
            "control connection must not touch the first axis (it carries the Hamiltonian)".into(),
        ));
    }
    let support = conn.max_support();
    if basis.margin() < support {
        return Err(Error::MarginTooSmall {
            margin: basis.margin(),
            support,
        });
    }
    Ok(())
}

/// Number of basis states sharing one value of `n₁`.
fn block_len(basis: &TruncatedBasis) -> usize {
    basis.len() / basis.side()
}

/// `Δ̂_β(σ)` restricted to the leading `dim` positions of the basis.
///
/// Modes never change `n₁`, so with `dim` equal to one block this is the
/// matrix on any fixed-`n₁` slice.
fn delta_matrices(
    conn: &ControlConnection,
    scheme: &QuantizationScheme,
    sigma: &[f64],
    basis: &TruncatedBasis,
    dim: usize,
) -> Vec<CMatrix> {
    let mut out = vec![CMatrix::zeros((dim, dim)); conn.p()];
    for a in 1..conn.m() {
        for (beta, target) in out.iter_mut().enumerate() {
            let modes: Vec<_> = conn.modes_at(a, beta, sigma).collect();
            if modes.is_empty() {
                continue;
            }
            for col in 0..dim {
                let k = basis.index(col);
                for (mode, c) in &modes {
                    if let Some(row) = basis.index_of(&(&k + *mode)) {
                        target[[row, col]] += c * scheme.half_shifted(a, 2 * k[a] + mode[a]);
                    }
                }
            }
        }
    }
    out
}

/// Control generators `Δ̂_β(σ)`, one per parameter axis, on the full basis.
pub fn build_delta(
    conn: &ControlConnection,
    scheme: &QuantizationScheme,
    sigma: &[f64],
    basis: &TruncatedBasis,
) -> Result<Vec<LinearOperator>> {
    check_generators(conn, scheme, basis)?;
    check_dim("sigma", conn.p(), sigma.len())?;
    delta_matrices(conn, scheme, sigma, basis, basis.len())
        .into_iter()
        .map(|m| LinearOperator::new(*basis, m))
        .collect()
}

/// `U₁ = exp(−i Î₁ t)`, diagonal with phases `exp[−i(n₁ + ε₁ − λ₁)t]`.
pub fn dynamic_factor(scheme: &QuantizationScheme, basis: &TruncatedBasis, t: f64) -> Result<LinearOperator> {
    let i1 = action_operator(scheme, basis, 0)?;
    let diag: Array1<C64> = i1
        .matrix()
        .diag()
        .mapv(|e| C64::from_polar(1.0, -e.re * t));
    LinearOperator::new(*basis, CMatrix::from_diag(&diag))
}

/// Holonomy operator together with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyResult {
    pub operator: LinearOperator,
    pub steps: usize,
    /// Interior block of `U†U − 1`, Frobenius norm.
    pub unitarity_residual: f64,
    /// `‖[U, Î₁]‖_F`.
    pub block_residual: f64,
    pub is_loop: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomySummary {
    pub steps: usize,
    pub unitarity_residual: f64,
    pub block_residual: f64,
    #[serde(rename = "loop")]
    pub is_loop: bool,
    /// `‖U − 1‖_F` on the interior block.
    pub identity_deviation: f64,
}

impl HolonomyResult {
    pub fn summary(&self) -> HolonomySummary {
        HolonomySummary {
            steps: self.steps,
            unitarity_residual: self.unitarity_residual,
            block_residual: self.block_residual,
            is_loop: self.is_loop,
            identity_deviation: linalg::identity_deviation(&self.operator.interior_block()),
        }
    }
}

/// `U₂` on a single fixed-`n₁` block, ordered product of
/// `exp(−i Δ̂_β(σ(t_mid)) Δξ^β)`.
pub fn holonomy_block(
    conn: &ControlConnection,
    scheme: &QuantizationScheme,
    path: &ParameterPath,
    basis: &TruncatedBasis,
    steps: usize,
    propagator: Propagator,
) -> Result<CMatrix> {
    check_generators(conn, scheme, basis)?;
    check_dim("parameter dimension", conn.p(), path.dim())?;
    let dim = block_len(basis);
    let generators = step_exponents(path, steps, propagator, |sigma, disp, _| {
        let mut g = CMatrix::zeros((dim, dim));
        for (d_beta, dxi) in delta_matrices(conn, scheme, sigma, basis, dim).iter().zip(disp) {
            if *dxi != 0.0 {
                g.scaled_add(C64::new(0.0, -dxi), d_beta);
            }
        }
        Ok(g)
    })?;
    Ok(linalg::ordered_exponential(dim, generators))
}

/// Holonomy operator `U₂ = T exp[−i ∫ Δ̂_β dσ^β]` on the full basis.
pub fn holonomy_operator(
    conn: &ControlConnection,
    scheme: &QuantizationScheme,
    path: &ParameterPath,
    basis: &TruncatedBasis,
    steps: usize,
) -> Result<HolonomyResult> {
    holonomy_operator_with(conn, scheme, path, basis, steps, Propagator::Midpoint)
}

pub fn holonomy_operator_with(
    conn: &ControlConnection,
    scheme: &QuantizationScheme,
    path: &ParameterPath,
    basis: &TruncatedBasis,
    steps: usize,
    propagator: Propagator,
) -> Result<HolonomyResult> {
    let block = holonomy_block(conn, scheme, path, basis, steps, propagator)?;
    let b = block.nrows();
    let mut u = CMatrix::zeros((basis.len(), basis.len()));
    for j in 0..basis.side() {
        u.slice_mut(s![j * b..(j + 1) * b, j * b..(j + 1) * b]).assign(&block);
    }
    let u = LinearOperator::new(*basis, u)?;
    let gram = linalg::dagger(u.matrix()).dot(u.matrix());
    let unitarity_residual = linalg::identity_deviation(&linalg::restrict(&gram, &basis.interior_positions()));
    let i1 = action_operator(scheme, basis, 0)?;
    let block_residual = linalg::frobenius(&linalg::commutator(u.matrix(), i1.matrix()));
    Ok(HolonomyResult {
        operator: u,
        steps: path.step_grid(steps)?.len() - 1,
        unitarity_residual,
        block_residual,
        is_loop: path.is_loop(),
    })
}

/// Ordered exponential of the full generator `Î₁ + Δ̂_β ξ̇^β` over the horizon
/// `t`, with the path traversed once over the normalized time `[0, 1]`.
pub fn full_evolution(
    conn: &ControlConnection,
    scheme: &QuantizationScheme,
    path: &ParameterPath,
    basis: &TruncatedBasis,
    steps: usize,
    t: f64,
) -> Result<LinearOperator> {
    full_evolution_with(conn, scheme, path, basis, steps, t, Propagator::Midpoint)
}

pub fn full_evolution_with(
    conn: &ControlConnection,
    scheme: &QuantizationScheme,
    path: &ParameterPath,
    basis: &TruncatedBasis,
    steps: usize,
    t: f64,
    propagator: Propagator,
) -> Result<LinearOperator> {
    check_generators(conn, scheme, basis)?;
    check_dim("parameter dimension", conn.p(), path.dim())?;
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite horizon {t}")));
    }
    let i1 = action_operator(scheme, basis, 0)?;
    let mut checked = false;
    let generators = step_exponents(path, steps, propagator, |sigma, disp, dt| {
        let deltas = delta_matrices(conn, scheme, sigma, basis, basis.len());
        if !checked {
            for d in &deltas {
                let r = linalg::frobenius(&linalg::commutator(d, i1.matrix()));
                if r > COMMUTATION_TOL {
                    return Err(Error::Commutation(r));
                }
            }
            checked = true;
        }
        let mut g = i1.matrix().mapv(|z| z * C64::new(0.0, -t * dt));
        for (d_beta, dxi) in deltas.iter().zip(disp) {
            if *dxi != 0.0 {
                g.scaled_add(C64::new(0.0, -dxi), d_beta);
            }
        }
        Ok(g)
    })?;
    LinearOperator::new(*basis, linalg::ordered_exponential(basis.len(), generators))
}

/// `‖U_full − U₁U₂‖_F` on the interior block.
pub fn factorization_residual(full: &LinearOperator, u1: &LinearOperator, u2: &LinearOperator) -> Result<f64> {
    let product = u1.compose(u2)?;
    if full.basis() != product.basis() {
        return Err(Error::BasisMismatch);
    }
    let diff = full.matrix() - product.matrix();
    Ok(linalg::frobenius(&linalg::restrict(&diff, &full.basis().interior_positions())))
}

/// Phases `exp(−i E_n t)` applied to each coefficient.
pub fn schrodinger_evolve(
    scheme: &QuantizationScheme,
    basis: &TruncatedBasis,
    h: &HamiltonianPoly,
    psi0: &StateVector,
    t: f64,
) -> Result<StateVector> {
    if psi0.basis() != basis {
        return Err(Error::BasisMismatch);
    }
    let energies = hamiltonian_spectrum(scheme, basis, h)?;
    let coeff = psi0
        .coeff()
        .iter()
        .zip(&energies)
        .map(|(c, e)| c * C64::from_polar(1.0, -e * t))
        .collect();
    StateVector::new(*basis, coeff)
}

/// One degenerate eigenspace of `Î₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBlock {
    pub eigenvalue: f64,
    pub positions: Vec<usize>,
    pub matrix: CMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockReport {
    pub blocks: Vec<EigenBlock>,
    /// Frobenius norm of the entries coupling different blocks.
    pub leakage: f64,
}

/// Partition of the basis by `Î₁` eigenvalue, with the sub-matrices of `u`.
pub fn eigenspace_blocks(scheme: &QuantizationScheme, u: &LinearOperator) -> Result<BlockReport> {
    let basis = u.basis();
    let i1 = action_operator(scheme, basis, 0)?;
    let mut order: Vec<(f64, usize)> = i1
        .matrix()
        .diag()
        .iter()
        .enumerate()
        .map(|(j, e)| (e.re, j))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (e, j) in order {
        match groups.last_mut() {
            Some((e0, members)) if (e - *e0).abs() <= DEGENERACY_TOL => members.push(j),
            _ => groups.push((e, vec![j])),
        }
    }
    let mut label = vec![0usize; basis.len()];
    for (g, (_, members)) in groups.iter().enumerate() {
        for &j in members {
            label[j] = g;
        }
    }
    let leakage = u
        .matrix()
        .indexed_iter()
        .filter(|((r, c), _)| label[*r] != label[*c])
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let blocks = groups
        .into_iter()
        .map(|(eigenvalue, positions)| EigenBlock {
            eigenvalue,
            matrix: linalg::restrict(u.matrix(), &positions),
            positions,
        })
        .collect();
    Ok(BlockReport { blocks, leakage })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Polynomial;
    use crate::quantization::{quantize_affine, AffineObservable};
    use crate::torus::{FourierSeries, MultiIndex};

    fn idx(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    /// `Λ²_1 = c cos φ²`, `Λ²_2 = d`: non-commuting generators.
    fn two_parameter(c: f64, d: f64) -> ControlConnection {
        ControlConnection::new(2, 2)
            .unwrap()
            .with_cos(1, 0, &idx(&[0, 1]), Polynomial::constant(2, c))
            .unwrap()
            .with_constant(1, 1, Polynomial::constant(2, d))
            .unwrap()
    }

    fn circle(r: f64) -> ParameterPath {
        ParameterPath::fourier_loop(vec![0.0, 0.0], vec![vec![[r, 0.0]], vec![[0.0, r]]]).unwrap()
    }

    #[test]
    fn zero_connection_gives_zero_generators_and_identity() {
        let b = TruncatedBasis::new(2, 2, 1).unwrap();
        let s = QuantizationScheme::standard(2);
        let conn = ControlConnection::new(2, 2).unwrap();
        for d in build_delta(&conn, &s, &[0.1, 0.2], &b).unwrap() {
            assert!(d.matrix().iter().all(|z| *z == C64::new(0.0, 0.0)));
        }
        let h = holonomy_operator(&conn, &s, &circle(1.0), &b, 50).unwrap();
        assert_eq!(h.operator, LinearOperator::identity(b));
        assert_eq!(h.unitarity_residual, 0.0);
        assert_eq!(h.block_residual, 0.0);
        assert!(h.is_loop);
    }

    #[test]
    fn single_mode_matrix_element() {
        let c = 0.7;
        let conn = ControlConnection::new(2, 1)
            .unwrap()
            .with_cos(1, 0, &idx(&[0, 1]), Polynomial::constant(1, 2.0 * c))
            .unwrap();
        // cos with amplitude 2c has mode-(+1) coefficient c
        let b = TruncatedBasis::new(2, 3, 1).unwrap();
        let s = QuantizationScheme::standard(2);
        let d = &build_delta(&conn, &s, &[0.0], &b).unwrap()[0];
        for n1 in -3..=3 {
            for k2 in -3..3 {
                let col = b.index_of(&idx(&[n1, k2])).unwrap();
                let row = b.index_of(&idx(&[n1, k2 + 1])).unwrap();
                assert!((d.matrix()[[row, col]].re - (k2 as f64 + 0.5) * c).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn angle_independent_connection_is_diagonal() {
        let conn = ControlConnection::new(2, 1)
            .unwrap()
            .with_constant(1, 0, Polynomial::constant(1, 1.5))
            .unwrap();
        let b = TruncatedBasis::new(2, 2, 0).unwrap();
        let s = QuantizationScheme::untwisted(&[0.0, 0.25]).unwrap();
        let d = &build_delta(&conn, &s, &[0.0], &b).unwrap()[0];
        for (j, n) in b.iter().enumerate() {
            for k in 0..b.len() {
                let expected = if j == k { (n[1] as f64 - 0.25) * 1.5 } else { 0.0 };
                assert_eq!(d.matrix()[[k, j]].re, expected);
            }
        }
    }

    #[test]
    fn first_axis_is_rejected() {
        let b = TruncatedBasis::new(2, 2, 1).unwrap();
        let s = QuantizationScheme::standard(2);
        let fiber = ControlConnection::new(2, 1)
            .unwrap()
            .with_constant(0, 0, Polynomial::constant(1, 1.0))
            .unwrap();
        assert!(matches!(build_delta(&fiber, &s, &[0.0], &b), Err(Error::InvalidConfig(_))));
        let angle = ControlConnection::new(2, 1)
            .unwrap()
            .with_cos(1, 0, &idx(&[1, 0]), Polynomial::constant(1, 1.0))
            .unwrap();
        assert!(matches!(build_delta(&angle, &s, &[0.0], &b), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn delta_matches_quantized_affine_function() {
        let conn = ControlConnection::new(2, 2)
            .unwrap()
            .with_cos(1, 0, &idx(&[0, 1]), Polynomial::linear(2, 1, 0.8))
            .unwrap()
            .with_sin(1, 0, &idx(&[0, 2]), Polynomial::constant(2, -0.3))
            .unwrap()
            .with_constant(1, 1, Polynomial::constant(2, 0.5))
            .unwrap();
        let b = TruncatedBasis::new(2, 4, 2).unwrap();
        let s = QuantizationScheme::new(&[0.2, -0.35], &[0.0, 0.5]).unwrap();
        let sigma = [0.4, -1.3];
        let deltas = build_delta(&conn, &s, &sigma, &b).unwrap();
        for (beta, d) in deltas.iter().enumerate() {
            let f = AffineObservable::new(
                vec![FourierSeries::zero(2), conn.series(1, beta, &sigma).unwrap()],
                FourierSeries::zero(2),
            )
            .unwrap();
            let q = quantize_affine(&s, &b, &f).unwrap();
            let diff = linalg::restrict(&(d.matrix() - q.matrix()), &b.interior_positions());
            assert!(linalg::max_abs(&diff) < 1e-12);
        }
    }

    #[test]
    fn dynamic_factor_phases() {
        let b = TruncatedBasis::new(1, 3, 0).unwrap();
        let s = QuantizationScheme::standard(1);
        assert_eq!(dynamic_factor(&s, &b, 0.0).unwrap(), LinearOperator::identity(b));
        let u = dynamic_factor(&s, &b, 2.0 * std::f64::consts::PI).unwrap();
        assert!(linalg::identity_deviation(u.matrix()) < 1e-13);
        let s = QuantizationScheme::untwisted(&[0.5]).unwrap();
        let u = dynamic_factor(&s, &b, 1.0).unwrap();
        let j = b.index_of(&idx(&[3])).unwrap();
        assert!((u.matrix()[[j, j]] - C64::from_polar(1.0, -2.5)).norm() < 1e-15);
    }

    #[test]
    fn flat_loop_is_identity() {
        let conn = ControlConnection::new(2, 2)
            .unwrap()
            .with_constant(1, 0, Polynomial::constant(2, 0.9))
            .unwrap()
            .with_constant(1, 1, Polynomial::constant(2, -0.4))
            .unwrap();
        let b = TruncatedBasis::new(2, 3, 0).unwrap();
        let s = QuantizationScheme::untwisted(&[0.1, 0.3]).unwrap();
        let h = holonomy_operator(&conn, &s, &circle(0.8), &b, 200).unwrap();
        assert!(linalg::identity_deviation(h.operator.matrix()) < 1e-10);
    }

    // RK4 on dψ/dt = −i Δ̂_β(σ) ξ̇^β ψ with a fine step, block by block
    fn time_stepped(conn: &ControlConnection, s: &QuantizationScheme, path: &ParameterPath, b: &TruncatedBasis, n: usize) -> CMatrix {
        let gen = |t: f64| -> CMatrix {
            let (sigma, vel) = path.eval(t).unwrap();
            let ds = build_delta(conn, s, &sigma, b).unwrap();
            let mut g = CMatrix::zeros((b.len(), b.len()));
            for (d, v) in ds.iter().zip(&vel) {
                g.scaled_add(C64::new(0.0, -v), d.matrix());
            }
            g
        };
        let h = 1.0 / n as f64;
        let mut u = linalg::identity(b.len());
        for j in 0..n {
            let t = j as f64 * h;
            let (g0, g1, g2) = (gen(t), gen(t + 0.5 * h), gen(t + h));
            let k1 = g0.dot(&u);
            let k2 = g1.dot(&(&u + &k1.mapv(|z| z * (0.5 * h))));
            let k3 = g1.dot(&(&u + &k2.mapv(|z| z * (0.5 * h))));
            let k4 = g2.dot(&(&u + &k3.mapv(|z| z * h)));
            u = u + (k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (h / 6.0));
        }
        u
    }

    #[test]
    fn non_commuting_loop_matches_time_stepping() {
        let conn = two_parameter(0.6, 0.9);
        let b = TruncatedBasis::new(2, 2, 1).unwrap();
        let s = QuantizationScheme::untwisted(&[0.0, 0.2]).unwrap();
        let path = circle(0.7);
        let h = holonomy_operator(&conn, &s, &path, &b, 1000).unwrap();
        assert!(linalg::identity_deviation(&h.operator.interior_block()) > 1e-2);
        let oracle = time_stepped(&conn, &s, &path, &b, 4000);
        let coarse = holonomy_operator(&conn, &s, &path, &b, 500).unwrap();
        let diff = linalg::frobenius(&(h.operator.matrix() - &oracle));
        let diff_coarse = linalg::frobenius(&(coarse.operator.matrix() - &oracle));
        // second-order product formula
        assert!(diff < 5e-5, "diff {diff}");
        let ratio = diff_coarse / diff;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        assert!(h.unitarity_residual < 1e-8);
        assert!(h.block_residual < 1e-12);
    }

    #[test]
    fn magnus_is_fourth_order() {
        let conn = two_parameter(0.6, 0.9);
        let b = TruncatedBasis::new(2, 2, 1).unwrap();
        let s = QuantizationScheme::untwisted(&[0.0, 0.2]).unwrap();
        let path = circle(0.7);
        let run = |n| holonomy_operator_with(&conn, &s, &path, &b, n, Propagator::Magnus4).unwrap().operator;
        let reference = run(1600);
        let e1 = linalg::frobenius(&(run(100).matrix() - reference.matrix()));
        let e2 = linalg::frobenius(&(run(200).matrix() - reference.matrix()));
        let ratio = e1 / e2;
        assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn factorization_holds() {
        let conn = two_parameter(0.5, 0.8);
        let b = TruncatedBasis::new(2, 2, 1).unwrap();
        let s = QuantizationScheme::untwisted(&[0.3, 0.1]).unwrap();
        let path = circle(0.6);
        let u2 = holonomy_operator(&conn, &s, &path, &b, 400).unwrap().operator;
        let u1 = dynamic_factor(&s, &b, 1.0).unwrap();
        let full = full_evolution(&conn, &s, &path, &b, 400, 1.0).unwrap();
        assert!(factorization_residual(&full, &u1, &u2).unwrap() < 1e-8);

        let zero = ControlConnection::new(2, 2).unwrap();
        let full0 = full_evolution(&zero, &s, &path, &b, 10, 1.3).unwrap();
        let diff = full0.matrix() - dynamic_factor(&s, &b, 1.3).unwrap().matrix();
        assert!(linalg::max_abs(&diff) < 1e-13);
    }

    #[test]
    fn schrodinger_phases_and_norm() {
        let b = TruncatedBasis::new(2, 2, 0).unwrap();
        let s = QuantizationScheme::untwisted(&[0.3, 0.0]).unwrap();
        let h = HamiltonianPoly::zero(2)
            .with_term(vec![2, 0], 1.0)
            .unwrap()
            .with_term(vec![0, 1], 2.0)
            .unwrap();
        let n = idx(&[2, 1]);
        let psi = StateVector::basis_state(b, &n).unwrap();
        assert_eq!(schrodinger_evolve(&s, &b, &h, &psi, 0.0).unwrap(), psi);
        let out = schrodinger_evolve(&s, &b, &h, &psi, 0.7).unwrap();
        let j = b.index_of(&n).unwrap();
        assert!((out.coeff()[j] - C64::from_polar(1.0, -4.89 * 0.7)).norm() < 1e-14);
        let other = StateVector::zeros(TruncatedBasis::new(2, 1, 0).unwrap());
        assert_eq!(schrodinger_evolve(&s, &b, &h, &other, 1.0), Err(Error::BasisMismatch));
    }

    #[test]
    fn blocks_of_box() {
        let b = TruncatedBasis::new(2, 3, 0).unwrap();
        let s = QuantizationScheme::standard(2);
        let rep = eigenspace_blocks(&s, &dynamic_factor(&s, &b, 0.4).unwrap()).unwrap();
        assert_eq!(rep.blocks.len(), 7);
        assert!(rep.blocks.iter().all(|bl| bl.positions.len() == 7));
        assert_eq!(rep.leakage, 0.0);

        let conn = two_parameter(0.6, 0.9);
        let b = TruncatedBasis::new(2, 3, 1).unwrap();
        let u = holonomy_operator(&conn, &s, &circle(0.5), &b, 200).unwrap().operator;
        assert!(eigenspace_blocks(&s, &u).unwrap().leakage < 1e-10);
    }
}
