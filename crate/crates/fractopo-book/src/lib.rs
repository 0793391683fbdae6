//! The guide's chapters as modules, so `cargo test` runs every snippet in the
//! book as a doctest.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/finite-topologies.md")]
pub mod finite_topologies {}
#[doc = include_str!("../../../book/src/diagonal-topologies.md")]
pub mod diagonal_topologies {}
#[doc = include_str!("../../../book/src/fractal-families.md")]
pub mod fractal_families {}
#[doc = include_str!("../../../book/src/mean-hierarchy.md")]
pub mod mean_hierarchy {}
#[doc = include_str!("../../../book/src/expansion-tree.md")]
pub mod expansion_tree {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
