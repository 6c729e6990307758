//! Replica-symmetric analysis of the Sherrington–Kirkpatrick model with general
//! symmetric spin laws on `[-1, 1]`, together with an exact-enumeration lab
//! for small systems.

pub mod error;
pub mod gaussian;
pub mod lab;
mod quadrature;
pub mod rs;
pub mod spins;

pub use error::{LabError, Result};
pub use gaussian::{HermiteRule, LinearModel};
pub use rs::{alpha_infinity, f_scan, solve_fixed_point, t_c_estimate, FPoint, RsSolution, RsSolver};
pub use spins::{Atom, PhiEvaluator, PhiPartials, PsiMoments, SpinDistribution, SpinKind};
