//! Library side of the `supertransfer` command-line tool: scenario files,
//! the operations behind each subcommand, and the artifact writers. The
//! binary in `main.rs` is a thin argument-parsing shell over [`runner`].

pub mod output;
pub mod runner;
pub mod scenario;
