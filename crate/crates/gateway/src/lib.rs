//! External surfaces of the simulator: the `bwim` command line, the HTTP
//! session API and the subprocess adapter protocol.

pub mod adapter;
pub mod commands;
pub mod protocol;
pub mod server;
