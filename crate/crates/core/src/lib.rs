//! Periodic pseudo-spectral solver for the two-dimensional tropical climate
//! model with zero thermal diffusion, together with a Littlewood-Paley
//! toolkit for dyadic blocks, Besov norms and the associated diagnostics.
//!
//! All fields live on the torus `[0, L)^2` (default `L = 2 pi`) and are
//! carried as Fourier coefficients; see [`field::SpectralField`].

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod gfunc;
pub mod grid;
pub mod initial;
pub mod lp;
pub mod model;
pub mod ops;
pub mod sink;
pub mod snapshot;
pub mod stepper;
pub mod testing;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use gfunc::GFunction;
pub use grid::Grid;
pub use model::{DissipationSpec, Model, TcmState, Tendency};
pub use initial::InitialData;
pub use stepper::{Checkpoint, RunSink, Scheme, SchemeConfig, Stepper};
