//! Crank-Nicolson / product-integration (CN-PI) time stepping on graded meshes
//! for Volterra integrodifferential equations with tempered multi-term kernels
//!
//! ```text
//! u_t + A u + sum_j (beta_j * B_j u)(t) = f(t),   beta_j(t) = exp(-kappa t) t^(alpha_j - 1) / Gamma(alpha_j)
//! ```
//!
//! The problem is solved in the tempered variable `v = exp(kappa t) u`, which turns each
//! `beta_j` into the Abel kernel and adds a reaction term `-kappa v`. The memory terms are
//! discretised by product integration against a piecewise-constant reconstruction of the
//! history, the rest by Crank-Nicolson.
//!
//! Modules:
//! - [`mesh`]: graded time meshes `t_n = (n k)^gamma` and checks of the grading hypotheses.
//! - [`quadrature`]: Gamma function, kernels, product-integration weights.
//! - [`operators`]: finite-difference operators and shifted solves.
//! - [`stepper`]: the time-stepping scheme, history management, energy functional.
//! - [`manufactured`]: closed-form test problems with known solutions.
//! - [`harness`]: convergence and stability studies, report output.

pub mod error;
pub mod harness;
pub mod manufactured;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod stepper;

pub use error::{Error, Result};
pub use harness::{
    convergence_rate, l2_error, run_stability_experiment, run_study, ConvergenceReport,
    ConvergenceRow, EigenSource, ExampleId, GammaRule, InitialData, OutputFormat, StabilityConfig,
    StabilityReport, StudyConfig,
};
pub use manufactured::{frac_int_power, ManufacturedCase};
pub use mesh::{GradedMesh, MeshHypothesisReport};
pub use operators::{Descriptor, Operator, OperatorBundle, SpatialGrid};
pub use quadrature::{
    discrete_fractional_integral, gamma_function, pi_weight, pi_weight_row, tempered_kernel,
    KernelSpec, PiWeightRow, PiWeightTable,
};
pub use stepper::{ProblemSpec, SchemeState, SourceRule};
