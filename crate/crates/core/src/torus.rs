//! Multi-index bookkeeping, angle arithmetic and sparse Fourier series on the m-torus.
//!
//! Characters `ψ_n(φ) = exp(i n·φ)` are indexed by integer multi-indices. Every
//! operator matrix and state vector in the crate uses the lexicographic order of
//! [`TruncatedBasis`] (last axis varies fastest).

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub type C64 = Complex64;

/// Imaginary residue allowed when a series is declared real.
pub const REALITY_TOL: f64 = 1e-12;

/// Integer mode vector `(n_1, …, n_m)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(n: Vec<i64>) -> Self {
        Self(n)
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0; m])
    }

    /// Unit index along `axis`, scaled by `k`.
    pub fn axis(m: usize, axis: usize, k: i64) -> Self {
        let mut n = vec![0; m];
        n[axis] = k;
        Self(n)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }

    /// Largest absolute component (0 for the zero index).
    pub fn max_abs(&self) -> usize {
        self.0.iter().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// `n·φ` as a real number.
    pub fn dot(&self, phi: &[f64]) -> f64 {
        self.0.iter().zip(phi).map(|(&n, &p)| n as f64 * p).sum()
    }
}

impl std::ops::Index<usize> for MultiIndex {
    type Output = i64;
    fn index(&self, k: usize) -> &i64 {
        &self.0[k]
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), rhs.dim());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &MultiIndex {
    type Output = MultiIndex;
    fn sub(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), rhs.dim());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &MultiIndex {
    type Output = MultiIndex;
    fn neg(self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| -a).collect())
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(n: Vec<i64>) -> Self {
        Self(n)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// Wraps a single angle into `[0, 2π)`.
pub fn wrap_scalar(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid of a tiny negative number rounds up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Maps an angle difference into `(-π, π]`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let r = wrap_scalar(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Wraps every component into `[0, 2π)`.
pub fn wrap_angle(phi: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = phi.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite angle {bad}")));
    }
    Ok(phi.iter().map(|&x| wrap_scalar(x)).collect())
}

/// Box `|n_k| ≤ n_max` of torus characters in lexicographic order.
///
/// `margin` marks the interior sub-box `|n_k| ≤ n_max − margin`, where operator
/// identities are free of truncation effects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedBasis {
    m: usize,
    n_max: usize,
    margin: usize,
}

impl TruncatedBasis {
    pub fn new(m: usize, n_max: usize, margin: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("torus dimension m must be >= 1".into()));
        }
        if margin > n_max {
            return Err(Error::InvalidConfig(format!(
                "margin {margin} exceeds n_max {n_max}"
            )));
        }
        let side = 2 * n_max + 1;
        if side.checked_pow(m as u32).is_none_or(|s| s > 1 << 24) {
            return Err(Error::InvalidConfig(format!(
                "basis (2*{n_max}+1)^{m} is too large"
            )));
        }
        Ok(Self { m, n_max, margin })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Same box, different interior margin.
    pub fn with_margin(&self, margin: usize) -> Result<Self> {
        Self::new(self.m, self.n_max, margin)
    }

    pub fn side(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.m as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index at position `j` of the canonical order.
    pub fn index(&self, mut j: usize) -> MultiIndex {
        debug_assert!(j < self.len());
        let side = self.side();
        let mut n = vec![0i64; self.m];
        for k in (0..self.m).rev() {
            n[k] = (j % side) as i64 - self.n_max as i64;
            j /= side;
        }
        MultiIndex(n)
    }

    /// Position of `n` in the canonical order, `None` outside the box.
    pub fn index_of(&self, n: &MultiIndex) -> Option<usize> {
        if n.dim() != self.m {
            return None;
        }
        let side = self.side() as i64;
        let mut j = 0i64;
        for &c in n.as_slice() {
            let shifted = c + self.n_max as i64;
            if !(0..side).contains(&shifted) {
                return None;
            }
            j = j * side + shifted;
        }
        Some(j as usize)
    }

    pub fn contains(&self, n: &MultiIndex) -> bool {
        self.index_of(n).is_some()
    }

    pub fn is_interior(&self, n: &MultiIndex) -> bool {
        let lim = (self.n_max - self.margin) as i64;
        n.dim() == self.m && n.as_slice().iter().all(|c| c.abs() <= lim)
    }

    pub fn iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.len()).map(move |j| self.index(j))
    }

    /// Positions of the interior sub-box, in canonical order.
    pub fn interior_positions(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.is_interior(&self.index(j)))
            .collect()
    }
}

/// Convenience constructor mirroring the enumeration operation.
pub fn enumerate_basis(m: usize, n_max: usize, margin: usize) -> Result<TruncatedBasis> {
    TruncatedBasis::new(m, n_max, margin)
}

/// One stored Fourier mode in text form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierRecord {
    pub mode: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Sparse Fourier series `Σ_n c_n exp(i n·φ)` on the m-torus.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    m: usize,
    coeffs: BTreeMap<MultiIndex, C64>,
    is_real: bool,
}

impl FourierSeries {
    /// The zero series (trivially real).
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            coeffs: BTreeMap::new(),
            is_real: true,
        }
    }

    pub fn constant(m: usize, c: f64) -> Self {
        let mut s = Self::zero(m);
        s.insert(MultiIndex::zeros(m), C64::new(c, 0.0));
        s
    }

    /// A single character `c·ψ_n`; complex in general.
    pub fn character(n: MultiIndex, c: C64) -> Self {
        let m = n.dim();
        let mut s = Self::zero(m);
        s.is_real = n.is_zero() && c.im == 0.0;
        s.insert(n, c);
        s
    }

    /// `amp·cos(n·φ)`.
    pub fn cos(n: &MultiIndex, amp: f64) -> Self {
        let m = n.dim();
        if n.is_zero() {
            return Self::constant(m, amp);
        }
        let mut s = Self::zero(m);
        s.insert(n.clone(), C64::new(0.5 * amp, 0.0));
        s.insert(-n, C64::new(0.5 * amp, 0.0));
        s
    }

    /// `amp·sin(n·φ)`.
    pub fn sin(n: &MultiIndex, amp: f64) -> Self {
        let m = n.dim();
        let mut s = Self::zero(m);
        if n.is_zero() {
            return s;
        }
        s.insert(n.clone(), C64::new(0.0, -0.5 * amp));
        s.insert(-n, C64::new(0.0, 0.5 * amp));
        s
    }

    /// Builds a series from explicit modes; if `is_real` the reality condition
    /// `c_{-n} = conj(c_n)` is validated.
    pub fn from_modes<I>(m: usize, modes: I, is_real: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, C64)>,
    {
        let mut s = Self::zero(m);
        for (n, c) in modes {
            check_dim("fourier mode", m, n.dim())?;
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coefficient at {n}")));
            }
            s.insert(n, c);
        }
        s.is_real = is_real;
        if is_real && !s.satisfies_reality(REALITY_TOL) {
            return Err(Error::InvalidInput(
                "series declared real violates c(-n) = conj(c(n))".into(),
            ));
        }
        Ok(s)
    }

    pub fn from_records(m: usize, records: &[FourierRecord], is_real: bool) -> Result<Self> {
        Self::from_modes(
            m,
            records
                .iter()
                .map(|r| (MultiIndex::new(r.mode.clone()), C64::new(r.re, r.im))),
            is_real,
        )
    }

    pub fn to_records(&self) -> Vec<FourierRecord> {
        self.coeffs
            .iter()
            .map(|(n, c)| FourierRecord {
                mode: n.as_slice().to_vec(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    // accumulates, dropping exact zeros
    fn insert(&mut self, n: MultiIndex, c: C64) {
        use std::collections::btree_map::Entry;
        let zero = C64::new(0.0, 0.0);
        match self.coeffs.entry(n) {
            Entry::Vacant(v) => {
                if c != zero {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == zero {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient(&self, n: &MultiIndex) -> C64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn modes(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.coeffs.iter()
    }

    /// Largest `|n_k|` over stored modes.
    pub fn support(&self) -> usize {
        self.coeffs.keys().map(MultiIndex::max_abs).max().unwrap_or(0)
    }

    /// True if only modes with `n_axis = 0` are stored.
    pub fn independent_of(&self, axis: usize) -> bool {
        self.coeffs.keys().all(|n| n[axis] == 0)
    }

    pub fn satisfies_reality(&self, tol: f64) -> bool {
        self.coeffs
            .iter()
            .all(|(n, c)| (self.coefficient(&-n) - c.conj()).norm() <= tol)
    }

    fn value_at(&self, phi: &[f64]) -> C64 {
        self.coeffs
            .iter()
            .map(|(n, c)| c * C64::from_polar(1.0, n.dot(phi)))
            .sum()
    }

    /// `Σ_n c_n exp(i n·φ)`.
    pub fn eval(&self, phi: &[f64]) -> Result<C64> {
        check_dim("angle vector", self.m, phi.len())?;
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite angle".into()));
        }
        Ok(self.value_at(phi))
    }

    /// Real part of the value; for real series the imaginary part is rounding noise.
    pub fn eval_real(&self, phi: &[f64]) -> Result<f64> {
        self.eval(phi).map(|z| z.re)
    }

    /// Convolution of coefficient maps, i.e. the pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_dim("fourier product", self.m, other.m)?;
        let mut out = Self::zero(self.m);
        for (n, a) in &self.coeffs {
            for (k, b) in &other.coeffs {
                out.insert(n + k, a * b);
            }
        }
        out.is_real = self.is_real && other.is_real;
        Ok(out)
    }

    /// `∂f/∂φ^axis`: coefficient `n ↦ i n_axis c_n`.
    pub fn derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.m {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.m,
            });
        }
        let mut out = Self::zero(self.m);
        for (n, c) in &self.coeffs {
            let k = n[axis];
            if k != 0 {
                out.insert(n.clone(), C64::new(0.0, k as f64) * c);
            }
        }
        out.is_real = self.is_real;
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim("fourier sum", self.m, other.m)?;
        let mut out = self.clone();
        for (n, c) in &other.coeffs {
            out.insert(n.clone(), *c);
        }
        out.is_real = self.is_real && other.is_real;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.m);
        for (n, c) in &self.coeffs {
            out.insert(n.clone(), c * s);
        }
        out.is_real = self.is_real;
        out
    }
}

/// Classical state: actions `I ∈ ℝ^m` and angles `φ ∈ [0, 2π)^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionAngleState {
    actions: Vec<f64>,
    angles: Vec<f64>,
}

impl ActionAngleState {
    pub fn new(actions: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        check_dim("angle vector", actions.len(), angles.len())?;
        if actions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite action".into()));
        }
        let angles = wrap_angle(&angles)?;
        Ok(Self { actions, angles })
    }

    pub fn dim(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}
