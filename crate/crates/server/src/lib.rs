//! Service layer for `itil-forge`: TOML configuration, the HTTP API, a
//! blocking client, and the admin CLI used by the `itil-forge` binary.

pub mod api;
pub mod cli;
pub mod client;
pub mod config;
