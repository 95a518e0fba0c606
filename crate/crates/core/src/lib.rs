//! Pure schema-bridging machinery: schemas and paths, structural mismatch
//! detection, field mappings, the sandboxed adapter language, deterministic
//! safeguards and evaluation metrics.
//!
//! Everything here is `no_std` with `alloc` and performs no I/O.

#![no_std]

extern crate alloc;

pub mod adapter;
pub mod contract;
pub mod fallback;
pub mod fixture;
pub mod mapping;
pub mod metrics;
pub mod mismatch;
pub mod path;
pub mod registry;
pub mod schema;
pub mod similarity;
pub mod units;
pub mod validate;
pub mod vote;

pub use adapter::{AdapterProgram, Expr, ValidatedAdapter};
pub use contract::{ContractKind, ContractResponse, TokenUsage};
pub use mapping::{FieldMapping, SchemaMapping};
pub use mismatch::{Mismatch, MismatchKind, MismatchReport};
pub use path::Path;
pub use registry::{RouteConfig, SchemaRegistry, Strategy};
pub use schema::{HashPair, Schema, SchemaHash};
