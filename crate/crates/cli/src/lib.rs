//! Command-line front end and HTTP session service.

pub mod api;
pub mod simulate;
pub mod spec;
