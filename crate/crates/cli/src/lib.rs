//! Front end for the qpot laboratory: config and expression parsing, command
//! dispatch and JSON reports.

pub mod commands;
pub mod config;
pub mod expr;
pub mod report;

pub use commands::{run, Command, Options};
pub use config::Config;
pub use expr::{parse_field, ParseError};
pub use report::{RunReport, Verdict};
