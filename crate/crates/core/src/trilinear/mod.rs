//! Invariant trilinear forms on triples of representations and the test-vector
//! computations built on them.
//!
//! Everything is normalized through the torus functional `phi` on the third
//! representation, so values are meaningful up to one overall scalar per
//! context. The kernel integral in [`kernel`] is an independent realization of
//! the same form for triples of principal series.

pub mod context;
pub mod descent;
pub mod drivers;
pub mod epsilon;
pub mod hfun;
pub mod kernel;
pub mod phi;

pub use context::{Role, Settings, TrilinearContext};





pub use phi::{build_phi, Phi, PhiValue};
pub use descent::{build_ledger, descent_solve, Ledger, Tensor};
pub use drivers::{evaluate_form, verify_theorem, CaseId, FormValue, TheoremReport};
pub use epsilon::{epsilon_obstruction, is_minimal_triple};
pub use hfun::{verify_lambda12, Lambda12Report};
pub use kernel::{kernel_oracle, KernelValue};
