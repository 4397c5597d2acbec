//! Test vectors for trilinear forms on irreducible admissible representations of GL2 over Q_p.

pub mod characters;
pub mod error;
pub mod gl2;
pub mod induced_reps;
pub mod kirillov;
pub mod local_field;
pub mod tree;
pub mod verify;
pub mod trilinear;

pub use characters::{BorelChar, MultChar, UnitChar};
pub use error::{Error, Result};
pub use gl2::{Mat2, Subgroup};
pub use induced_reps::{InducedVector, RepKind, RepSpec};
pub use local_field::{Field, Qp};
