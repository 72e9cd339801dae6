//! Command-line front end for `adiacheck-core`: configuration files, sampled
//! schedules, report files and the `analyze`, `exact`, `sweep` and `verify`
//! subcommands.

pub mod commands;
pub mod config;
pub mod report;
pub mod schedule;
