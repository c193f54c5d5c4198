//! Library side of the `stratasheaf` command-line tool.

pub mod commands;
pub mod document;

pub use commands::{cmd_classify, cmd_count, cmd_torus, cmd_validate, ClassifyOptions, CliError, CountRequest, Input, Outcome};
pub use document::{DocError, GroupDocument, ModelDocument};
