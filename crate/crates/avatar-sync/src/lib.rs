//! Session server, log replay and simulator for shared-avatar rooms.
//!
//! The room logic lives in [`avatar_sync_core`]; this crate adds sockets,
//! files and the command line.

pub mod config;
pub mod harness;
pub mod log;
pub mod server;

pub use avatar_sync_core as core;
