//! Compiles the guide's code snippets as doctests so `cargo test --doc`
//! keeps `book/` in sync with the library.

#[doc = include_str!("../../../book/src/model.md")]
mod model {}

#[doc = include_str!("../../../book/src/actuation.md")]
mod actuation {}

#[doc = include_str!("../../../book/src/control.md")]
mod control {}

#[doc = include_str!("../../../book/src/contact.md")]
mod contact {}

#[doc = include_str!("../../../book/src/simulation.md")]
mod simulation {}

#[doc = include_str!("../../../book/src/scenarios.md")]
mod scenarios {}
