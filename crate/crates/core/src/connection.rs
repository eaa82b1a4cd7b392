//! The control connection `Λ^i_α(σ, φ)` and its generator matrices.
//!
//! Each coefficient is a finite Fourier series on the torus whose mode
//! coefficients are polynomials in the parameters `σ ∈ ℝ^p`. Indices are
//! zero-based: fiber index `i ∈ 0..m`, parameter index `α ∈ 0..p`.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::CMatrix;
use crate::torus::{FourierSeries, MultiIndex, TruncatedBasis, C64, REALITY_TOL};

/// Complex polynomial in `σ`, stored as exponent vector → coefficient.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Vec<u32>, C64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(p: usize, c: f64) -> Self {
        Self::monomial(vec![0; p], C64::new(c, 0.0))
    }

    /// `c·σ_axis`.
    pub fn linear(p: usize, axis: usize, c: f64) -> Self {
        let mut powers = vec![0; p];
        powers[axis] = 1;
        Self::monomial(powers, C64::new(c, 0.0))
    }

    pub fn monomial(powers: Vec<u32>, c: C64) -> Self {
        let mut s = Self::zero();
        s.add_term(powers, c);
        s
    }

    fn add_term(&mut self, powers: Vec<u32>, c: C64) {
        let e = self.terms.entry(powers.clone()).or_default();
        *e += c;
        if *e == C64::default() {
            self.terms.remove(&powers);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (pw, c) in &other.terms {
            out.add_term(pw.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero();
        for (pw, c) in &self.terms {
            out.add_term(pw.clone(), c * s);
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(p, c)| (p.clone(), c.conj())).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, sigma: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|(powers, c)| {
                let mono: f64 = powers
                    .iter()
                    .zip(sigma)
                    .map(|(&k, &x)| x.powi(k as i32))
                    .product();
                c * mono
            })
            .sum()
    }

    fn distance(&self, other: &Self) -> f64 {
        let mut keys: Vec<&Vec<u32>> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.dedup();
        keys.iter()
            .map(|k| {
                let a = self.terms.get(*k).copied().unwrap_or_default();
                let b = other.terms.get(*k).copied().unwrap_or_default();
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }

    fn records(&self) -> Vec<MonomialRecord> {
        self.terms
            .iter()
            .map(|(powers, c)| MonomialRecord {
                powers: powers.clone(),
                coeff: c.re,
                im: c.im,
            })
            .collect()
    }
}

/// How the loader treats a connection that violates `c_{-n} = conj(c_n)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealityPolicy {
    /// Replace `c_n` by `(c_n + conj(c_{-n}))/2`.
    Symmetrize,
    #[default]
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialRecord {
    /// Exponent per parameter axis; empty means the constant monomial.
    #[serde(default)]
    pub powers: Vec<u32>,
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "is_zero_f64")]
    pub im: f64,
}

fn is_zero_f64(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionTermRecord {
    pub i: usize,
    pub alpha: usize,
    pub mode: Vec<i64>,
    pub poly: Vec<MonomialRecord>,
}

/// Text form `{m, p, terms: [{i, alpha, mode, poly}], reality}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionConfig {
    pub m: usize,
    pub p: usize,
    #[serde(default)]
    pub terms: Vec<ConnectionTermRecord>,
    #[serde(default)]
    pub reality: RealityPolicy,
}

type ModeMap = BTreeMap<MultiIndex, Polynomial>;

/// Time-independent control connection on `S × T^m → S`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlConnection {
    m: usize,
    p: usize,
    terms: BTreeMap<(usize, usize), ModeMap>,
}

impl ControlConnection {
    /// The zero connection.
    pub fn new(m: usize, p: usize) -> Result<Self> {
        if m == 0 || p == 0 {
            return Err(Error::InvalidConfig(
                "connection needs m >= 1 and p >= 1".into(),
            ));
        }
        Ok(Self {
            m,
            p,
            terms: BTreeMap::new(),
        })
    }

    fn check_slot(&self, i: usize, alpha: usize) -> Result<()> {
        if i >= self.m {
            return Err(Error::AxisOutOfRange { axis: i, dim: self.m });
        }
        if alpha >= self.p {
            return Err(Error::AxisOutOfRange {
                axis: alpha,
                dim: self.p,
            });
        }
        Ok(())
    }

    fn push(&mut self, i: usize, alpha: usize, mode: MultiIndex, poly: Polynomial) {
        let map = self.terms.entry((i, alpha)).or_default();
        let e = map.entry(mode.clone()).or_default();
        *e = e.add(&poly);
        if e.is_zero() {
            map.remove(&mode);
        }
    }

    /// Adds `poly(σ)·cos(n·φ)` to `Λ^i_α`.
    pub fn with_cos(mut self, i: usize, alpha: usize, n: &MultiIndex, poly: Polynomial) -> Result<Self> {
        self.check_slot(i, alpha)?;
        check_dim("connection mode", self.m, n.dim())?;
        if n.is_zero() {
            self.push(i, alpha, n.clone(), poly);
        } else {
            let half = poly.scale(C64::new(0.5, 0.0));
            self.push(i, alpha, n.clone(), half.clone());
            self.push(i, alpha, -n, half);
        }
        Ok(self)
    }

    /// Adds `poly(σ)·sin(n·φ)` to `Λ^i_α`.
    pub fn with_sin(mut self, i: usize, alpha: usize, n: &MultiIndex, poly: Polynomial) -> Result<Self> {
        self.check_slot(i, alpha)?;
        check_dim("connection mode", self.m, n.dim())?;
        if !n.is_zero() {
            self.push(i, alpha, n.clone(), poly.scale(C64::new(0.0, -0.5)));
            self.push(i, alpha, -n, poly.scale(C64::new(0.0, 0.5)));
        }
        Ok(self)
    }

    /// Adds a `σ`-polynomial zero mode to `Λ^i_α`.
    pub fn with_constant(self, i: usize, alpha: usize, poly: Polynomial) -> Result<Self> {
        let zero = MultiIndex::zeros(self.m);
        self.with_cos(i, alpha, &zero, poly)
    }

    pub fn from_config(cfg: &ConnectionConfig) -> Result<Self> {
        let mut conn = Self::new(cfg.m, cfg.p)?;
        for (t, term) in cfg.terms.iter().enumerate() {
            conn.check_slot(term.i, term.alpha)?;
            check_dim("connection mode", cfg.m, term.mode.len())?;
            let mut poly = Polynomial::zero();
            for mono in &term.poly {
                let powers = if mono.powers.is_empty() {
                    vec![0; cfg.p]
                } else {
                    mono.powers.clone()
                };
                check_dim("monomial powers", cfg.p, powers.len())?;
                if !mono.coeff.is_finite() || !mono.im.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "terms[{t}]: non-finite coefficient"
                    )));
                }
                poly.add_term(powers, C64::new(mono.coeff, mono.im));
            }
            conn.push(term.i, term.alpha, MultiIndex::new(term.mode.clone()), poly);
        }
        match cfg.reality {
            RealityPolicy::Reject => {
                let v = conn.reality_violation();
                if v > REALITY_TOL {
                    return Err(Error::InvalidConfig(format!(
                        "connection violates the reality condition by {v:e}"
                    )));
                }
            }
            RealityPolicy::Symmetrize => conn.symmetrize(),
        }
        Ok(conn)
    }

    pub fn to_config(&self) -> ConnectionConfig {
        let terms = self
            .terms
            .iter()
            .flat_map(|(&(i, alpha), modes)| {
                modes.iter().map(move |(n, poly)| ConnectionTermRecord {
                    i,
                    alpha,
                    mode: n.as_slice().to_vec(),
                    poly: poly.records(),
                })
            })
            .collect();
        ConnectionConfig {
            m: self.m,
            p: self.p,
            terms,
            reality: RealityPolicy::Reject,
        }
    }

    /// Largest coefficient-wise deviation from `c_{-n} = conj(c_n)`.
    pub fn reality_violation(&self) -> f64 {
        self.terms
            .values()
            .flat_map(|modes| {
                modes.iter().map(move |(n, poly)| {
                    let partner = modes.get(&-n).cloned().unwrap_or_default();
                    poly.distance(&partner.conj())
                })
            })
            .fold(0.0, f64::max)
    }

    fn symmetrize(&mut self) {
        for modes in self.terms.values_mut() {
            let keys: Vec<MultiIndex> = modes
                .keys()
                .flat_map(|n| [n.clone(), -n])
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let old = std::mem::take(modes);
            for n in keys {
                let a = old.get(&n).cloned().unwrap_or_default();
                let b = old.get(&-&n).cloned().unwrap_or_default();
                let sym = a.add(&b.conj()).scale(C64::new(0.5, 0.0));
                if !sym.is_zero() {
                    modes.insert(n, sym);
                }
            }
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|modes| modes.is_empty())
    }

    /// Largest `|n_k|` over all stored modes.
    pub fn max_support(&self) -> usize {
        self.terms
            .values()
            .flat_map(|modes| modes.keys())
            .map(MultiIndex::max_abs)
            .max()
            .unwrap_or(0)
    }

    /// True if some `Λ^axis_α` is nonzero.
    pub fn has_fiber(&self, axis: usize) -> bool {
        self.terms
            .iter()
            .any(|(&(i, _), modes)| i == axis && !modes.is_empty())
    }

    /// True if some stored mode has a nonzero component along `axis`.
    pub fn depends_on_angle(&self, axis: usize) -> bool {
        self.terms
            .values()
            .flat_map(|modes| modes.keys())
            .any(|n| n[axis] != 0)
    }

    /// Stored modes of `Λ^i_α` evaluated at `σ`.
    pub(crate) fn modes_at<'a>(
        &'a self,
        i: usize,
        alpha: usize,
        sigma: &'a [f64],
    ) -> impl Iterator<Item = (&'a MultiIndex, C64)> + 'a {
        self.terms
            .get(&(i, alpha))
            .into_iter()
            .flat_map(move |modes| modes.iter().map(move |(n, poly)| (n, poly.eval(sigma))))
    }

    /// `Λ^i_α(σ, ·)` as a real Fourier series.
    pub fn series(&self, i: usize, alpha: usize, sigma: &[f64]) -> Result<FourierSeries> {
        self.check_slot(i, alpha)?;
        check_dim("sigma", self.p, sigma.len())?;
        FourierSeries::from_modes(
            self.m,
            self.modes_at(i, alpha, sigma).map(|(n, c)| (n.clone(), c)),
            true,
        )
    }

    fn check_point(&self, sigma: &[f64], phi: &[f64]) -> Result<()> {
        check_dim("sigma", self.p, sigma.len())?;
        check_dim("phi", self.m, phi.len())?;
        if sigma.iter().chain(phi).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite sigma or phi".into()));
        }
        Ok(())
    }

    /// Complex values of `Λ^i_α(σ, φ)` before the real projection.
    pub fn eval_lambda_complex(&self, sigma: &[f64], phi: &[f64]) -> Result<Array2<C64>> {
        self.check_point(sigma, phi)?;
        let mut out = Array2::zeros((self.m, self.p));
        for (&(i, alpha), _) in &self.terms {
            out[[i, alpha]] = self
                .modes_at(i, alpha, sigma)
                .map(|(n, c)| c * C64::from_polar(1.0, n.dot(phi)))
                .sum();
        }
        Ok(out)
    }

    /// Real `m × p` matrix `Λ^i_α(σ, φ)`.
    pub fn eval_lambda(&self, sigma: &[f64], phi: &[f64]) -> Result<Array2<f64>> {
        Ok(self.eval_lambda_complex(sigma, phi)?.mapv(|z| z.re))
    }

    /// Angle-mode generators, one per parameter axis.
    ///
    /// Row `n`, column `k` of the `α`-th matrix holds
    /// `Σ_i n_i Λ^i_{α(k−n)}(σ)`, so that `d/dt ψ_n = i Σ_k M_{nk} σ̇^α ψ_k`
    /// for the characters transported along the angle flow. Couplings that
    /// leave the box are dropped.
    pub fn build_m(&self, sigma: &[f64], basis: &TruncatedBasis) -> Result<Vec<CMatrix>> {
        check_dim("basis dimension", self.m, basis.m())?;
        check_dim("sigma", self.p, sigma.len())?;
        let dim = basis.len();
        let mut out = vec![CMatrix::zeros((dim, dim)); self.p];
        for (&(i, alpha), _) in &self.terms {
            let modes: Vec<(&MultiIndex, C64)> = self.modes_at(i, alpha, sigma).collect();
            let target = &mut out[alpha];
            for row in 0..dim {
                let n = basis.index(row);
                let weight = n[i] as f64;
                if weight == 0.0 {
                    continue;
                }
                for (mode, c) in &modes {
                    if let Some(col) = basis.index_of(&(&n + mode)) {
                        target[[row, col]] += c * weight;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Action-transport generators `L_α` with entry `(i, k) = ∂Λ^k_α/∂φ^i`,
    /// so that `dI/dt = −Σ_α σ̇^α L_α I`.
    pub fn build_l(&self, sigma: &[f64], phi: &[f64]) -> Result<Vec<Array2<f64>>> {
        self.check_point(sigma, phi)?;
        let mut out = vec![Array2::zeros((self.m, self.m)); self.p];
        for (&(k, alpha), _) in &self.terms {
            let series = self.series(k, alpha, sigma)?;
            for i in 0..self.m {
                out[alpha][[i, k]] = series.derivative(i)?.eval(phi)?.re;
            }
        }
        Ok(out)
    }
}
