//! Command-line front end: configuration, content-addressed cache, reports and
//! the acceptance verifier.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod lab;
pub mod report;
pub mod tolerances;
pub mod verify;
