// The guide chapters under book/src are plain mdbook markdown, but their
// code fences are real doctests: including them here makes `cargo test --doc`
// compile and run every snippet, so the book can never drift from the API.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/preprocessing.md")]
pub mod preprocessing {}

#[doc = include_str!("../../../book/src/texture-features.md")]
pub mod texture_features {}

#[doc = include_str!("../../../book/src/classification.md")]
pub mod classification {}

#[doc = include_str!("../../../book/src/fusion.md")]
pub mod fusion_rules {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod command_line {}
