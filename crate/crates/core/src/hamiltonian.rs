//! Hamiltonians `H(I)` that depend on the action variables only.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub type AnalyticFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianTerm {
    pub powers: Vec<u32>,
    pub coeff: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    #[serde(default)]
    pub terms: Vec<HamiltonianTerm>,
}

/// Real polynomial in the actions plus an optional analytic part.
#[derive(Clone)]
pub struct HamiltonianPoly {
    m: usize,
    terms: BTreeMap<Vec<u32>, f64>,
    analytic: Option<AnalyticFn>,
}

impl fmt::Debug for HamiltonianPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianPoly")
            .field("m", &self.m)
            .field("terms", &self.terms)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl HamiltonianPoly {
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            terms: BTreeMap::new(),
            analytic: None,
        }
    }

    /// `H = I_axis`.
    pub fn action(m: usize, axis: usize) -> Self {
        let mut powers = vec![0; m];
        powers[axis] = 1;
        Self::zero(m).with_term(powers, 1.0).expect("valid unit term")
    }

    pub fn with_term(mut self, powers: Vec<u32>, coeff: f64) -> Result<Self> {
        check_dim("hamiltonian powers", self.m, powers.len())?;
        if !coeff.is_finite() {
            return Err(Error::InvalidConfig("non-finite hamiltonian coefficient".into()));
        }
        let e = self.terms.entry(powers.clone()).or_insert(0.0);
        *e += coeff;
        if *e == 0.0 {
            self.terms.remove(&powers);
        }
        Ok(self)
    }

    /// Adds an analytic function of the actions (used for spectra; its gradient
    /// is taken by central differences).
    pub fn with_analytic(mut self, f: AnalyticFn) -> Self {
        self.analytic = Some(f);
        self
    }

    pub fn from_config(m: usize, cfg: &HamiltonianConfig) -> Result<Self> {
        cfg.terms
            .iter()
            .try_fold(Self::zero(m), |h, t| h.with_term(t.powers.clone(), t.coeff))
    }

    pub fn to_config(&self) -> HamiltonianConfig {
        HamiltonianConfig {
            terms: self
                .terms
                .iter()
                .map(|(p, c)| HamiltonianTerm {
                    powers: p.clone(),
                    coeff: *c,
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(p, c)| (p.as_slice(), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.analytic.is_none()
    }

    /// `H(I)`. Monomials are evaluated by repeated multiplication, axis by axis.
    pub fn eval(&self, actions: &[f64]) -> f64 {
        debug_assert_eq!(actions.len(), self.m);
        let mut total = 0.0;
        for (powers, &c) in &self.terms {
            let mut term = c;
            for (k, &p) in powers.iter().enumerate() {
                for _ in 0..p {
                    term *= actions[k];
                }
            }
            total += term;
        }
        if let Some(f) = &self.analytic {
            total += f(actions);
        }
        total
    }

    /// `∂H/∂I_k` for every k.
    pub fn gradient(&self, actions: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.m];
        for (powers, &c) in &self.terms {
            for (k, gk) in g.iter_mut().enumerate() {
                if powers[k] == 0 {
                    continue;
                }
                let mut term = c * powers[k] as f64;
                for (j, &p) in powers.iter().enumerate() {
                    let e = if j == k { p - 1 } else { p };
                    term *= actions[j].powi(e as i32);
                }
                *gk += term;
            }
        }
        if let Some(f) = &self.analytic {
            let mut x = actions.to_vec();
            for (k, gk) in g.iter_mut().enumerate() {
                let h = 1e-6 * actions[k].abs().max(1.0);
                x[k] = actions[k] + h;
                let up = f(&x);
                x[k] = actions[k] - h;
                let down = f(&x);
                x[k] = actions[k];
                *gk += (up - down) / (2.0 * h);
            }
        }
        g
    }
}
