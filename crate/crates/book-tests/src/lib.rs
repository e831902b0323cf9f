//! Compiles every guide chapter as rustdoc so its snippets run under
//! `cargo test --doc`. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/panel-data.md")]
pub mod panel_data {}

#[doc = include_str!("../../../book/src/unit-roots.md")]
pub mod unit_roots {}

#[doc = include_str!("../../../book/src/lag-selection.md")]
pub mod lag_selection {}

#[doc = include_str!("../../../book/src/cointegration.md")]
pub mod cointegration {}

#[doc = include_str!("../../../book/src/vecm.md")]
pub mod vecm {}

#[doc = include_str!("../../../book/src/specification-search.md")]
pub mod specification_search {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/reference-data.md")]
pub mod reference_data {}

#[doc = include_str!("../../../book/src/mission-planner.md")]
pub mod mission_planner {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
