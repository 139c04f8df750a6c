//! File formats, distribution generators and the `optsample` command line
//! built on [`optsample_core`].

pub mod app;
pub mod dists;
pub mod formats;
pub mod pipeline;

pub use formats::FormatError;
