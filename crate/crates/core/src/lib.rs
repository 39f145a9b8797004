//! Numerical dynamics of quadratic rational maps near the boundary of the
//! Cantor locus.
//!
//! The crate is organised in layers:
//!
//! * [`maps`]: moduli coordinates, normal forms, fixed points, orbits;
//! * [`linearize`]: Koenigs coordinates of an attracting fixed point;
//! * [`fatou`]: parabolic Fatou coordinates and petal bookkeeping;
//! * [`star`]: strip and wire geometry in log-linearizer coordinates;
//! * [`parametrize`]: the transfer from parabolic to attracting basins and
//!   the root solve that realises it as a parameter;
//! * [`experiments`]: boundary sequences, rescaling limits, wire landing.

pub use num_complex;

/// Complex numbers used throughout.
pub type C64 = num_complex::Complex64;

pub mod error;
pub mod experiments;
pub mod fatou;
pub mod linearize;
pub mod maps;
pub mod parametrize;
pub mod series;
pub mod star;

pub use error::{Error, Result};
pub use fatou::{FatouAtlas, ParabolicGerm, PetalIndex, Rotation, SectorClass, SectorScope};
pub use linearize::{CriticalChoice, InverseBranch, KoenigsChart};
pub use maps::{MapClass, MapKind, Point, Rational, Relatedness, Representative};
pub use parametrize::{ModelPoint, PhiSolve, SeedSource, SolveBranch};
pub use star::StarGeometry;

