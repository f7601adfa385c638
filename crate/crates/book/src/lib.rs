//! The guide lives in `book/` and is built with mdbook. Each chapter is
//! included here as module documentation so that `cargo test` runs its Rust
//! snippets as doc-tests against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/quickstart.md")]
pub mod quickstart {}
#[doc = include_str!("../../../book/src/rotations.md")]
pub mod rotations {}
#[doc = include_str!("../../../book/src/palm_frame.md")]
pub mod palm_frame {}
#[doc = include_str!("../../../book/src/intent.md")]
pub mod intent {}
#[doc = include_str!("../../../book/src/hand_model.md")]
pub mod hand_model {}
#[doc = include_str!("../../../book/src/robot_tripod.md")]
pub mod robot_tripod {}
#[doc = include_str!("../../../book/src/retargeting.md")]
pub mod retargeting {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}
