//! Finite topologies, diagonal topologies over indexed families, fractal
//! families of finite spaces, and the mean hierarchy of rough generator
//! functions that the families model.
//!
//! ```
//! use fractopo::{lambda, FiniteTopology};
//!
//! assert_eq!(lambda(2).unwrap().len(), 8);
//! let t: FiniteTopology = "n=2; opens={},{0},{0,1}".parse().unwrap();
//! assert_eq!(t.opens().len(), 3);
//! ```

pub mod diagonal;
pub mod error;
pub mod family;
pub mod label;
pub mod mean;
pub mod sign;
pub mod topology;
pub mod tree;

pub use diagonal::{check_diagonal_axioms, enumerate_diagonal_opens, DiagonalOpen, DiagonalReport, IndexedFamily};
pub use error::{Error, Result};
pub use family::{check_fractal_family, FamilyReport, FractalFamilySpec, Mutation, Property};
pub use label::IndexLabel;
pub use mean::{DeltaVector, Generator, MeanSpec, Method};
pub use sign::{lambda, Sign, SignString};
pub use topology::{FiniteTopology, SetSystem};
