//! File formats, report rendering and subcommands behind the `tvdisc`
//! binary.

pub mod commands;
pub mod formats;
pub mod report;
