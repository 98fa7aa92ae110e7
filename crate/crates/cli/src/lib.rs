//! Command-line front end for the curvecast simulator.

pub mod report;
pub mod serve;

/// Process exit codes shared by every subcommand.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const RUNTIME: i32 = 3;
}
