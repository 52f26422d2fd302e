//! Image, seed and result file formats, the `ffp` command line and the HTTP session service.

pub mod cli;
pub mod io;
pub mod server;
