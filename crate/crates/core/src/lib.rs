pub mod error;
pub mod johansen;
pub mod lag_selection;
pub mod mission;
pub mod numerics;
pub mod panel;
pub mod report;
pub mod reference_data;
pub mod spec_search;
pub mod synthetic;
pub mod unit_root;
pub mod vecm;
