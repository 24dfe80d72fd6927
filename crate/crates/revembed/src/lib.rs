//! File formats, experiment configuration, pipelines and the command
//! line around `revembed-core`.

pub mod cli;
pub mod compare;
pub mod config;
pub mod formats;
pub mod pipeline;
pub mod report;
pub mod run;
