//! Dense operators and state vectors over a [`TruncatedBasis`].

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::torus::{MultiIndex, TruncatedBasis, C64};

/// Coefficient vector over the character basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: TruncatedBasis,
    coeff: Array1<C64>,
}

impl StateVector {
    pub fn new(basis: TruncatedBasis, coeff: Array1<C64>) -> Result<Self> {
        check_dim("state vector length", basis.len(), coeff.len())?;
        Ok(Self { basis, coeff })
    }

    pub fn zeros(basis: TruncatedBasis) -> Self {
        Self {
            basis,
            coeff: Array1::zeros(basis.len()),
        }
    }

    /// The character `ψ_n`.
    pub fn basis_state(basis: TruncatedBasis, n: &MultiIndex) -> Result<Self> {
        let j = basis
            .index_of(n)
            .ok_or_else(|| Error::InvalidInput(format!("index {n} outside the basis box")))?;
        let mut s = Self::zeros(basis);
        s.coeff[j] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn basis(&self) -> &TruncatedBasis {
        &self.basis
    }

    pub fn coeff(&self) -> &Array1<C64> {
        &self.coeff
    }

    /// Value of `Σ_n c_n exp(i n·φ)` at `φ`.
    pub fn eval(&self, phi: &[f64]) -> Result<C64> {
        check_dim("angle vector", self.basis.m(), phi.len())?;
        Ok(self
            .coeff
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() != 0.0)
            .map(|(j, c)| c * C64::from_polar(1.0, self.basis.index(j).dot(phi)))
            .sum())
    }
}

/// Dense complex matrix acting on coefficient vectors over `basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    basis: TruncatedBasis,
    matrix: CMatrix,
}

/// Export form `{basis: {m, n_max}, matrix: row-major [re, im] pairs}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorRecord {
    pub basis: BasisRecord,
    pub matrix: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub m: usize,
    pub n_max: usize,
}

impl LinearOperator {
    pub fn new(basis: TruncatedBasis, matrix: CMatrix) -> Result<Self> {
        check_dim("operator rows", basis.len(), matrix.nrows())?;
        check_dim("operator columns", basis.len(), matrix.ncols())?;
        Ok(Self { basis, matrix })
    }

    pub fn identity(basis: TruncatedBasis) -> Self {
        Self {
            basis,
            matrix: linalg::identity(basis.len()),
        }
    }

    pub fn basis(&self) -> &TruncatedBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.basis != self.basis {
            return Err(Error::BasisMismatch);
        }
        StateVector::new(self.basis, self.matrix.dot(&v.coeff))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if other.basis != self.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(Self {
            basis: self.basis,
            matrix: self.matrix.dot(&other.matrix),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis,
            matrix: linalg::dagger(&self.matrix),
        }
    }

    /// Restriction to the interior sub-box.
    pub fn interior_block(&self) -> CMatrix {
        linalg::restrict(&self.matrix, &self.basis.interior_positions())
    }

    /// Row `n` as a function of the initial angle.
    pub fn row_series(&self, n: &MultiIndex) -> Result<crate::torus::FourierSeries> {
        let row = self
            .basis
            .index_of(n)
            .ok_or_else(|| Error::InvalidInput(format!("index {n} outside the basis box")))?;
        crate::torus::FourierSeries::from_modes(
            self.basis.m(),
            (0..self.basis.len())
                .map(|k| (self.basis.index(k), self.matrix[[row, k]])),
            false,
        )
    }

    pub fn to_record(&self) -> OperatorRecord {
        OperatorRecord {
            basis: BasisRecord {
                m: self.basis.m(),
                n_max: self.basis.n_max(),
            },
            matrix: self.matrix.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}
