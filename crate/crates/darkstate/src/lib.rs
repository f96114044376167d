//! Single-excitation dynamics of two qubits coupled to a common Lorentzian
//! reservoir.
//!
//! The library solves the same three-amplitude problem along three
//! independent routes and cross-checks them against each other:
//!
//! * [`spectral`] — closed-form Laplace solution: the reduced cubic
//!   denominator, its poles and residues, and amplitudes at arbitrary times.
//!   This is the authoritative backend.
//! * [`ode`] — exact pseudomode reformulation as a 3-component linear ODE,
//!   integrated with an adaptive Runge-Kutta pair. Cross-check and fallback
//!   for degenerate spectra.
//! * [`volterra`] — direct second-order discretization of the memory-kernel
//!   integro-differential equations, validating the other two from first
//!   principles.
//!
//! On top of those, [`steady`] classifies surviving poles into a steady-state
//! concurrence and runs coupling-perturbation scans, while [`sweep`] maps the
//! steady-state concurrence over rectangular coupling grids in parallel.

pub mod model;
pub mod ode;
pub mod spectral;
pub mod steady;
pub mod sweep;
pub mod volterra;

pub use model::{
    concurrence, kernel_eval, AmplitudeState, InitialState, NamedState, SystemParams, Tolerances,
    Trajectory,
};
pub use ode::{build_generator, integrate, Generator};
pub use spectral::{amplitudes_at, assemble, find_poles, PoleDecomposition, RationalSolution};
pub use steady::{
    dark_state_ssc, instability_scan, steady_concurrence, InstabilityScan, ScanMode, ScanPoint,
    SolutionMethod, SteadyStateResult,
};
pub use sweep::{run_detuning_comparison, run_sweep, GridRange, SweepCell, SweepResult, SweepSpec};
pub use volterra::{solve_volterra, ConvolutionAccumulator};

/// Errors shared by all solver backends.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("initial state norm^2 = {norm_sq} is not 1 within 1e-12")]
    NotNormalized { norm_sq: f64 },
    #[error("unknown initial state name `{0}`")]
    UnknownState(String),
    #[error("kernel lag must be non-negative, got {0}")]
    NegativeLag(f64),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error(
        "pole decomposition is near-degenerate (min separation {min_separation:.3e}); \
         use the ODE backend"
    )]
    DegeneratePoles { min_separation: f64 },
    #[error(
        "near-defective pole decomposition: residues up to {max_residue:.3e} at pole \
         separation {min_separation:.3e}; use the ODE backend"
    )]
    NearDefective {
        min_separation: f64,
        max_residue: f64,
    },
    #[error("step size {h:.3e} too large for these rates; require h <= {max_h:.3e}")]
    StepTooLarge { h: f64, max_h: f64 },
    #[error("integrator stalled at t = {t:.6e} with step size {h:.3e}")]
    IntegratorStall { t: f64, h: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
