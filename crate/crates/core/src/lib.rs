//! Exact analysis of three-branch piecewise Moebius interval maps.
//!
//! The maps studied here have two linear outer branches and one
//! fractional-linear middle branch. The crate builds the map `T` and its
//! jump transformation `S` (equal to `T` on the middle cell and `T∘T` on the
//! outer cells), decides whether `S` admits a natural dual through the
//! vanishing of a 3×3 determinant, produces the invariant density in closed
//! form, and checks every claim two ways: by exact rational-function
//! identities and by floating-point orbit simulation.
//!
//! Module map:
//!
//! * [`exactnum`]: rationals, polynomials and rational functions over `Q`.
//! * [`moebius`]: Moebius maps with canonical integer coefficients.
//! * [`systems`]: the map `T`, the jump system `S`, reflection `x ↦ 1 − x`.
//! * [`dual`]: symmetry rows, the determinant criterion, `M`, dual intervals.
//! * [`density`]: transfer operators, invariance residuals, the lift to `T`,
//!   closed-form normalization.
//! * [`simulate`]: orbits, histograms and KS distances.
//! * [`report`]: serializable reports shared by the CLI.

pub mod density;
pub mod dual;
mod error;
pub mod exactnum;
pub mod moebius;
pub mod quad;
pub mod report;
pub mod simulate;
pub mod systems;

pub use density::{PiecewiseDensity, RationalDensity};
pub use dual::{DualCandidate, ProjInterval, SymmetryRow};
pub use error::{Error, Result};
pub use exactnum::{Polynomial, Rational, RationalFunction};
pub use moebius::{MoebiusMap, ProjPoint};
pub use systems::{BranchSet, JumpSystem, Orientation, SystemSpec, TypeVector};
