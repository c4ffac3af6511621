//! Equation discovery from a derivative jet: candidate term libraries,
//! sparse regression and a small multi-objective evolutionary search.

mod equation;
mod evolution;
mod library;
mod sindy;
mod terms;

pub use equation::{normalize_equation, support_from_text, CandidateEquation, Convention, EquationFlags, POOR_FIT_THRESHOLD};
pub use evolution::{evolutionary_discover, EvoConfig};
pub use library::{build_library, LibraryConfig, TermLibrary};
pub use sindy::{sindy_fit, sindy_fit_restricted, sindy_select_target, SindyConfig, Sparsifier};
pub use terms::{Factor, TermSpec};
