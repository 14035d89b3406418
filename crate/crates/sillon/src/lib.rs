//! Collection, storage, annotation service and command-line workflow for
//! the sillon corpus. The algorithms live in [`sillon_core`].

pub use sillon_core as core;

pub mod config;
pub mod domain;
pub mod fixtures;
pub mod ingest;
pub mod jsonl;
pub mod models;
pub mod pipeline;
pub mod service;
pub mod store;
