//! Runs the code blocks of the guide in `book/` as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/decision.md")]
pub mod decision {}

#[doc = include_str!("../../../book/src/cartan.md")]
pub mod cartan {}

#[doc = include_str!("../../../book/src/proximal.md")]
pub mod proximal {}

#[doc = include_str!("../../../book/src/schottky.md")]
pub mod schottky {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
