//! Holonomy control of integrable systems on the torus `T^m`.
//!
//! Classical flows are driven by a control connection `Λ(φ, σ)` along a path
//! `σ(t)` in parameter space; quantum evolution acts on the character basis
//! `exp(i n·φ)` under a chosen quantization scheme.

pub mod classical;
pub mod connection;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod operator;
pub mod path;
pub mod quantization;
pub mod quantum;
pub mod synthesis;
pub mod torus;
pub mod verify;

pub use classical::{action_transport, angle_mode_evolution, angle_mode_evolution_with, canonical_shift, control_rhs, integrate_direct, Trajectory};
pub use connection::{ConnectionConfig, ControlConnection, RealityPolicy};
pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianConfig, HamiltonianPoly};
pub use linalg::{CMatrix, Propagator};
pub use operator::{LinearOperator, OperatorRecord, StateVector};
pub use path::{ParameterPath, PathConfig};
pub use quantization::{
    action_operator, dirac_residual, gauge_conjugate, hamiltonian_spectrum, inner_product, quantize_affine,
    twist_reduce, AffineObservable, QuantizationScheme, SchemeConfig,
};
pub use quantum::{
    build_delta, dynamic_factor, eigenspace_blocks, factorization_residual, full_evolution, full_evolution_with,
    holonomy_block, holonomy_operator, holonomy_operator_with, schrodinger_evolve, BlockReport, HolonomyResult, HolonomySummary,
};
pub use synthesis::{holonomy_objective, synthesize_loop, SynthesisProblem, SynthesisResult, SynthesisTarget};
pub use torus::{
    enumerate_basis, wrap_angle, ActionAngleState, FourierSeries, MultiIndex, TruncatedBasis, C64,
};
