//! Datasets and run configuration.

pub mod config;
pub mod dataset;

pub use config::{ConfigError, DataSources, Language, RunConfig};
pub use dataset::{
    load_attributes, load_log, load_matrix, parse_attributes, parse_log, parse_matrix, write_log,
    Context, DataError, Dataset, DatasetKind, Request,
};
