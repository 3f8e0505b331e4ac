//! Library surface of the experiment driver, so integration tests can invoke
//! commands in-process with the exact code path the binary uses.

pub mod commands;
pub mod config;
