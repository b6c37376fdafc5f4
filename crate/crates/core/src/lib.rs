//! Numerical toolkit for G₂ three-forms and the symplectic geometry of
//! loops: Cayley algebra, structure reconstruction, the transgressed
//! 2-form on loops, Maslov indices and the filament flow.

pub mod cayley;
pub mod error;
pub mod filament;
pub mod g2struct;
pub mod loopspace;
pub mod maslov;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
