//! Compiles the guide's code snippets as doc-tests, so `cargo test` keeps
//! the book and the library in sync. One module per chapter makes a failing
//! snippet easy to locate.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/oblivious-keys.md")]
pub mod oblivious_keys {}

#[doc = include_str!("../../../book/src/dilution.md")]
pub mod dilution {}

#[doc = include_str!("../../../book/src/aks-attack.md")]
pub mod aks_attack {}

#[doc = include_str!("../../../book/src/rank-attack.md")]
pub mod rank_attack {}

#[doc = include_str!("../../../book/src/error-correction.md")]
pub mod error_correction {}

#[doc = include_str!("../../../book/src/analysis.md")]
pub mod analysis {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
