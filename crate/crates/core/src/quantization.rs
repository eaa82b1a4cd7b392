//! Quantization of the affine observables `f = a^k(φ) I_k + b(φ)` in the angle
//! polarization.
//!
//! A representation is fixed by real numbers `λ_k` and a half-form twist
//! `ε_k ∈ {0, ½}` per axis. The action operators are diagonal on the characters
//! with eigenvalues `n_k + ε_k − λ_k`, and an affine observable acts as
//! `f̂ψ_k = Σ_m [(k_j + ½m_j + ε_j − λ_j) a^j_m + b_m] ψ_{k+m}`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::HamiltonianPoly;
use crate::linalg::{self, CMatrix};
use crate::operator::{LinearOperator, StateVector};
use crate::torus::{FourierSeries, MultiIndex, TruncatedBasis, C64};

/// `λ = halves/2 + frac` with `frac ∈ [0, ½)`.
///
/// Integer and half-integer shifts only touch `halves`, so gauge and twist
/// equivalences hold bit-for-bit.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Lambda {
    halves: i64,
    frac: f64,
}

impl Lambda {
    fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite lambda {x}")));
        }
        let mut halves = (2.0 * x).floor() as i64;
        let mut frac = x - halves as f64 * 0.5;
        if frac >= 0.5 {
            halves += 1;
            frac -= 0.5;
        } else if frac < 0.0 {
            halves -= 1;
            frac += 0.5;
        }
        Ok(Self { halves, frac })
    }

    fn value(self) -> f64 {
        self.halves as f64 * 0.5 + self.frac
    }
}

/// Representation data `(λ, ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizationScheme {
    lambda: Vec<Lambda>,
    twisted: Vec<bool>,
}

/// Text form `{lambda: [...], twist: [0 | 0.5, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub twist: Vec<f64>,
}

impl QuantizationScheme {
    /// `twist` entries must be exactly 0 or 0.5; an empty slice means untwisted.
    pub fn new(lambda: &[f64], twist: &[f64]) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidConfig("lambda must have m >= 1 entries".into()));
        }
        let twisted = if twist.is_empty() {
            vec![false; lambda.len()]
        } else {
            check_dim("twist length", lambda.len(), twist.len())?;
            twist
                .iter()
                .map(|&e| match e {
                    x if x == 0.0 => Ok(false),
                    x if x == 0.5 => Ok(true),
                    x => Err(Error::InvalidConfig(format!("twist entry {x} is not 0 or 0.5"))),
                })
                .collect::<Result<_>>()?
        };
        let lambda = lambda
            .iter()
            .map(|&x| Lambda::from_f64(x))
            .collect::<Result<_>>()?;
        Ok(Self { lambda, twisted })
    }

    pub fn untwisted(lambda: &[f64]) -> Result<Self> {
        Self::new(lambda, &[])
    }

    /// `λ = 0`, `ε = 0` on `m` axes.
    pub fn standard(m: usize) -> Self {
        Self::untwisted(&vec![0.0; m.max(1)]).expect("zero lambda is valid")
    }

    pub fn from_config(cfg: &SchemeConfig) -> Result<Self> {
        Self::new(&cfg.lambda, &cfg.twist)
    }

    pub fn to_config(&self) -> SchemeConfig {
        SchemeConfig {
            lambda: self.lambda(),
            twist: (0..self.dim()).map(|k| self.twist(k)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| l.value()).collect()
    }

    pub fn twist(&self, k: usize) -> f64 {
        if self.twisted[k] {
            0.5
        } else {
            0.0
        }
    }

    pub fn is_twisted(&self) -> bool {
        self.twisted.iter().any(|&t| t)
    }

    /// `(d/2) + ε_k − λ_k` for an integer `d` (twice an index value).
    pub(crate) fn half_shifted(&self, k: usize, doubled: i64) -> f64 {
        let l = self.lambda[k];
        let eff = doubled + i64::from(self.twisted[k]) - l.halves;
        eff as f64 * 0.5 - l.frac
    }

    /// Eigenvalue `n_k + ε_k − λ_k` of the k-th action operator.
    pub fn action_eigenvalue(&self, k: usize, n_k: i64) -> f64 {
        self.half_shifted(k, 2 * n_k)
    }

    /// Vector of action eigenvalues at the character `n`.
    pub fn action_values(&self, n: &MultiIndex) -> Vec<f64> {
        (0..self.dim()).map(|k| self.action_eigenvalue(k, n[k])).collect()
    }

    fn check_basis(&self, basis: &TruncatedBasis) -> Result<()> {
        check_dim("scheme dimension", basis.m(), self.dim())
    }
}

/// Gauge-conjugated scheme `λ − d`.
fn shifted_scheme(scheme: &QuantizationScheme, d: &[i64]) -> QuantizationScheme {
    let mut out = scheme.clone();
    for (l, &dk) in out.lambda.iter_mut().zip(d) {
        l.halves -= 2 * dk;
    }
    out
}

/// Twist-free scheme with `λ_j → λ_j − ½` on every twisted axis.
pub fn twist_reduce(scheme: &QuantizationScheme) -> QuantizationScheme {
    let mut out = scheme.clone();
    for (l, t) in out.lambda.iter_mut().zip(out.twisted.iter_mut()) {
        if *t {
            l.halves -= 1;
            *t = false;
        }
    }
    out
}

/// Diagonal action operator `Î_k`.
pub fn action_operator(scheme: &QuantizationScheme, basis: &TruncatedBasis, k: usize) -> Result<LinearOperator> {
    scheme.check_basis(basis)?;
    if k >= basis.m() {
        return Err(Error::AxisOutOfRange { axis: k, dim: basis.m() });
    }
    let diag: Vec<C64> = basis
        .iter()
        .map(|n| C64::new(scheme.action_eigenvalue(k, n[k]), 0.0))
        .collect();
    LinearOperator::new(*basis, CMatrix::from_diag(&ndarray::Array1::from(diag)))
}

/// Real affine observable `a^k(φ) I_k + b(φ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineObservable {
    a: Vec<FourierSeries>,
    b: FourierSeries,
}

impl AffineObservable {
    pub fn new(a: Vec<FourierSeries>, b: FourierSeries) -> Result<Self> {
        let m = b.dim();
        check_dim("affine coefficient count", m, a.len())?;
        for s in a.iter().chain(std::iter::once(&b)) {
            check_dim("affine coefficient dimension", m, s.dim())?;
            if !s.is_real() {
                return Err(Error::InvalidInput(
                    "affine observables need real coefficient series".into(),
                ));
            }
        }
        Ok(Self { a, b })
    }

    /// `f = I_k`.
    pub fn action(m: usize, k: usize) -> Self {
        let a = (0..m)
            .map(|j| {
                if j == k {
                    FourierSeries::constant(m, 1.0)
                } else {
                    FourierSeries::zero(m)
                }
            })
            .collect();
        Self {
            a,
            b: FourierSeries::zero(m),
        }
    }

    /// `f = b(φ)`.
    pub fn function(b: FourierSeries) -> Result<Self> {
        let m = b.dim();
        Self::new(vec![FourierSeries::zero(m); m], b)
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn a(&self) -> &[FourierSeries] {
        &self.a
    }

    pub fn b(&self) -> &FourierSeries {
        &self.b
    }

    pub fn support(&self) -> usize {
        self.a
            .iter()
            .chain(std::iter::once(&self.b))
            .map(FourierSeries::support)
            .max()
            .unwrap_or(0)
    }

    /// Value at `(I, φ)`.
    pub fn eval(&self, actions: &[f64], phi: &[f64]) -> Result<f64> {
        let mut v = self.b.eval_real(phi)?;
        for (a, i) in self.a.iter().zip(actions) {
            v += a.eval_real(phi)? * i;
        }
        Ok(v)
    }

    /// Poisson bracket `{f, g} = ∂^i f ∂_i g − ∂_i f ∂^i g`, again affine.
    pub fn poisson_bracket(&self, other: &Self) -> Result<Self> {
        let m = self.dim();
        check_dim("bracket operand dimension", m, other.dim())?;
        let mut a_out = vec![FourierSeries::zero(m); m];
        let mut b_out = FourierSeries::zero(m);
        for i in 0..m {
            for (k, slot) in a_out.iter_mut().enumerate() {
                let lhs = self.a[i].mul(&other.a[k].derivative(i)?)?;
                let rhs = other.a[i].mul(&self.a[k].derivative(i)?)?;
                *slot = slot.add(&lhs.sub(&rhs)?)?;
            }
            let lhs = self.a[i].mul(&other.b.derivative(i)?)?;
            let rhs = other.a[i].mul(&self.b.derivative(i)?)?;
            b_out = b_out.add(&lhs.sub(&rhs)?)?;
        }
        Self::new(a_out, b_out)
    }
}

/// Matrix of `f̂ = −i a^k∂_k − (i/2)∂_k a^k − a^kλ_k + b` on the truncated basis.
pub fn quantize_affine(
    scheme: &QuantizationScheme,
    basis: &TruncatedBasis,
    f: &AffineObservable,
) -> Result<LinearOperator> {
    scheme.check_basis(basis)?;
    check_dim("observable dimension", basis.m(), f.dim())?;
    let support = f.support();
    if support > basis.margin() {
        return Err(Error::MarginTooSmall {
            margin: basis.margin(),
            support,
        });
    }
    let dim = basis.len();
    let mut mat = CMatrix::zeros((dim, dim));
    for col in 0..dim {
        let k = basis.index(col);
        for (j, a) in f.a.iter().enumerate() {
            for (mode, c) in a.modes() {
                if let Some(row) = basis.index_of(&(&k + mode)) {
                    mat[[row, col]] += c * scheme.half_shifted(j, 2 * k[j] + mode[j]);
                }
            }
        }
        for (mode, c) in f.b.modes() {
            if let Some(row) = basis.index_of(&(&k + mode)) {
                mat[[row, col]] += c;
            }
        }
    }
    LinearOperator::new(*basis, mat)
}

/// Eigenvalues `E_n = H(n + ε − λ)` in basis order.
pub fn hamiltonian_spectrum(
    scheme: &QuantizationScheme,
    basis: &TruncatedBasis,
    h: &HamiltonianPoly,
) -> Result<Vec<f64>> {
    scheme.check_basis(basis)?;
    check_dim("hamiltonian dimension", basis.m(), h.dim())?;
    Ok(basis.iter().map(|n| h.eval(&scheme.action_values(&n))).collect())
}

/// Interior-block Frobenius norm of `[f̂, ĝ] + i·{f,g}^`.
///
/// The Frobenius norm bounds the operator norm from above.
pub fn dirac_residual(
    scheme: &QuantizationScheme,
    basis: &TruncatedBasis,
    f: &AffineObservable,
    g: &AffineObservable,
) -> Result<f64> {
    let fq = quantize_affine(scheme, basis, f)?;
    let gq = quantize_affine(scheme, basis, g)?;
    let bracket = quantize_affine(scheme, basis, &f.poisson_bracket(g)?)?;
    let mut r = linalg::commutator(fq.matrix(), gq.matrix());
    r.scaled_add(C64::new(0.0, 1.0), bracket.matrix());
    Ok(linalg::frobenius(&linalg::restrict(&r, &basis.interior_positions())))
}

/// Positions `n` with `n + d` also in the box.
pub fn gauge_overlap(basis: &TruncatedBasis, d: &[i64]) -> Vec<usize> {
    let shift = MultiIndex::new(d.to_vec());
    (0..basis.len())
        .filter(|&j| basis.contains(&(&basis.index(j) + &shift)))
        .collect()
}

/// Scheme `λ − d` together with the multiplication-by-`ψ_d` intertwiner `V`,
/// `V ψ_n = ψ_{n+d}` (dropped outside the box). On the overlap,
/// `V† Î_k^λ V = Î_k^{λ−d}`.
pub fn gauge_conjugate(
    scheme: &QuantizationScheme,
    basis: &TruncatedBasis,
    d: &[i64],
) -> Result<(QuantizationScheme, LinearOperator)> {
    scheme.check_basis(basis)?;
    check_dim("gauge shift", basis.m(), d.len())?;
    let overlap = gauge_overlap(basis, d);
    if overlap.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let shift = MultiIndex::new(d.to_vec());
    let dim = basis.len();
    let mut v = CMatrix::zeros((dim, dim));
    for col in overlap {
        let row = basis
            .index_of(&(&basis.index(col) + &shift))
            .expect("overlap positions stay in the box");
        v[[row, col]] = C64::new(1.0, 0.0);
    }
    Ok((shifted_scheme(scheme, d), LinearOperator::new(*basis, v)?))
}

/// Hermitian form `⟨u|v⟩ = Σ_n u_n conj(v_n)`.
pub fn inner_product(u: &StateVector, v: &StateVector) -> Result<C64> {
    if u.basis() != v.basis() {
        return Err(Error::BasisMismatch);
    }
    Ok(u.coeff().iter().zip(v.coeff()).map(|(a, b)| a * b.conj()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn lambda_split_round_trips() {
        for &x in &[0.0, 0.25, 0.5, 0.7, -0.3, -0.5, 5.3, -12.75, 1e-17] {
            let l = Lambda::from_f64(x).unwrap();
            assert!((0.0..0.5).contains(&l.frac), "{x}: {l:?}");
            assert!((l.value() - x).abs() <= 1e-15 * x.abs().max(1.0), "{x}");
        }
        assert!(Lambda::from_f64(f64::NAN).is_err());
    }

    #[test]
    fn integer_spectrum_at_zero_lambda() {
        let b = TruncatedBasis::new(2, 2, 0).unwrap();
        let s = QuantizationScheme::standard(2);
        let i1 = action_operator(&s, &b, 1).unwrap();
        for (j, n) in b.iter().enumerate() {
            assert_eq!(i1.matrix()[[j, j]].re, n[1] as f64);
        }
        assert!(action_operator(&s, &b, 2).is_err());
    }

    #[test]
    fn shifted_and_twisted_eigenvalues() {
        let s = QuantizationScheme::untwisted(&[0.25]).unwrap();
        assert_eq!(s.action_eigenvalue(0, 1), 0.75);
        let t = QuantizationScheme::new(&[0.0, 0.0], &[0.0, 0.5]).unwrap();
        assert_eq!(t.action_eigenvalue(1, 0), 0.5);
        assert_eq!(t.action_eigenvalue(0, 0), 0.0);
        assert!(QuantizationScheme::new(&[0.0], &[0.3]).is_err());
        assert!(QuantizationScheme::new(&[0.0], &[0.5, 0.0]).is_err());
    }

    #[test]
    fn twist_reduction() {
        let s = QuantizationScheme::untwisted(&[0.4, 1.2]).unwrap();
        assert_eq!(twist_reduce(&s), s);
        let t = QuantizationScheme::new(&[0.0], &[0.5]).unwrap();
        let r = twist_reduce(&t);
        assert_eq!(r.lambda(), vec![-0.5]);
        assert_eq!(r.twist(0), 0.0);
        let b = TruncatedBasis::new(1, 3, 0).unwrap();
        assert_eq!(
            action_operator(&t, &b, 0).unwrap(),
            action_operator(&r, &b, 0).unwrap()
        );
    }

    #[test]
    fn action_observable_quantizes_to_action_operator() {
        let b = TruncatedBasis::new(2, 3, 1).unwrap();
        let s = QuantizationScheme::new(&[0.3, -1.1], &[0.5, 0.0]).unwrap();
        for k in 0..2 {
            let q = quantize_affine(&s, &b, &AffineObservable::action(2, k)).unwrap();
            assert_eq!(q, action_operator(&s, &b, k).unwrap());
        }
    }

    #[test]
    fn constant_observable_is_scalar() {
        let b = TruncatedBasis::new(1, 3, 0).unwrap();
        let s = QuantizationScheme::untwisted(&[0.7]).unwrap();
        let f = AffineObservable::function(FourierSeries::constant(1, 2.5)).unwrap();
        let q = quantize_affine(&s, &b, &f).unwrap();
        assert_eq!(q.matrix(), &linalg::identity(b.len()).mapv(|z| z * 2.5));
    }

    #[test]
    fn cos_times_action_matrix_elements() {
        // (k + m/2 − λ)·a_m with a_{±1} = 1/2
        let b = TruncatedBasis::new(1, 4, 1).unwrap();
        let s = QuantizationScheme::standard(1);
        let f = AffineObservable::new(
            vec![FourierSeries::cos(&idx(&[1]), 1.0)],
            FourierSeries::zero(1),
        )
        .unwrap();
        let q = quantize_affine(&s, &b, &f).unwrap();
        for n in -3..=3i64 {
            let col = b.index_of(&idx(&[n])).unwrap();
            let up = b.index_of(&idx(&[n + 1])).unwrap();
            let down = b.index_of(&idx(&[n - 1])).unwrap();
            assert_eq!(q.matrix()[[up, col]].re, n as f64 / 2.0 + 0.25);
            assert_eq!(q.matrix()[[down, col]].re, n as f64 / 2.0 - 0.25);
        }
    }

    #[test]
    fn support_beyond_margin_is_rejected() {
        let b = TruncatedBasis::new(1, 4, 1).unwrap();
        let f = AffineObservable::function(FourierSeries::cos(&idx(&[2]), 1.0)).unwrap();
        assert!(matches!(
            quantize_affine(&QuantizationScheme::standard(1), &b, &f),
            Err(Error::MarginTooSmall { margin: 1, support: 2 })
        ));
    }

    #[test]
    fn spectrum_substitution() {
        let h = HamiltonianPoly::zero(2)
            .with_term(vec![2, 0], 1.0)
            .unwrap()
            .with_term(vec![0, 1], 2.0)
            .unwrap();
        let s = QuantizationScheme::untwisted(&[0.3, 0.0]).unwrap();
        let b = TruncatedBasis::new(2, 3, 0).unwrap();
        let e = hamiltonian_spectrum(&s, &b, &h).unwrap();
        let j = b.index_of(&idx(&[2, 1])).unwrap();
        assert!((e[j] - 4.89).abs() < 1e-12);

        let e1 = hamiltonian_spectrum(&QuantizationScheme::standard(1), &TruncatedBasis::new(1, 2, 0).unwrap(), &HamiltonianPoly::action(1, 0)).unwrap();
        assert_eq!(e1, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn dirac_for_action_and_constant() {
        let b = TruncatedBasis::new(1, 6, 2).unwrap();
        let s = QuantizationScheme::untwisted(&[0.37]).unwrap();
        let f = AffineObservable::action(1, 0);
        let g = AffineObservable::function(FourierSeries::constant(1, 3.0)).unwrap();
        assert_eq!(dirac_residual(&s, &b, &f, &g).unwrap(), 0.0);
    }

    #[test]
    fn bracket_of_action_and_sine() {
        let f = AffineObservable::action(1, 0);
        let g = AffineObservable::function(FourierSeries::sin(&idx(&[1]), 1.0)).unwrap();
        let br = f.poisson_bracket(&g).unwrap();
        assert_eq!(br.b(), &FourierSeries::cos(&idx(&[1]), 1.0));
        assert!(br.a()[0].is_empty());
        let b = TruncatedBasis::new(1, 6, 2).unwrap();
        let s = QuantizationScheme::untwisted(&[0.37]).unwrap();
        assert!(dirac_residual(&s, &b, &f, &g).unwrap() < 1e-10);
    }

    #[test]
    fn gauge_conjugation_cases() {
        let b = TruncatedBasis::new(1, 3, 0).unwrap();
        let s = QuantizationScheme::untwisted(&[0.3]).unwrap();
        let (s0, v0) = gauge_conjugate(&s, &b, &[0]).unwrap();
        assert_eq!(s0, s);
        assert_eq!(v0.matrix(), &linalg::identity(b.len()));

        let (s1, _) = gauge_conjugate(&s, &b, &[1]).unwrap();
        assert!((s1.lambda()[0] + 0.7).abs() < 1e-15);
        for n in -3..3 {
            assert_eq!(s.action_eigenvalue(0, n + 1), s1.action_eigenvalue(0, n));
        }
        assert_eq!(gauge_conjugate(&s, &b, &[7]).unwrap_err(), Error::EmptyOverlap);
        assert!(gauge_conjugate(&s, &b, &[1, 0]).is_err());
    }

    #[test]
    fn orthonormal_characters() {
        let b = TruncatedBasis::new(2, 2, 0).unwrap();
        let u = StateVector::basis_state(b, &idx(&[1, -2])).unwrap();
        let v = StateVector::basis_state(b, &idx(&[0, -2])).unwrap();
        assert_eq!(inner_product(&u, &u).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(inner_product(&u, &v).unwrap(), C64::new(0.0, 0.0));
        let w = StateVector::zeros(TruncatedBasis::new(2, 1, 0).unwrap());
        assert_eq!(inner_product(&u, &w), Err(Error::BasisMismatch));
    }

    #[test]
    fn affine_observable_validation() {
        let complex = FourierSeries::character(idx(&[1]), C64::new(1.0, 0.0));
        assert!(AffineObservable::function(complex).is_err());
        assert!(AffineObservable::new(vec![], FourierSeries::zero(1)).is_err());
        let f = AffineObservable::new(
            vec![FourierSeries::cos(&idx(&[1]), 2.0)],
            FourierSeries::constant(1, 1.0),
        )
        .unwrap();
        assert!((f.eval(&[3.0], &[0.0]).unwrap() - 7.0).abs() < 1e-15);
    }
}
