//! Random-walk model of social annotation.
//!
//! A post is modelled as a random walk on a substrate graph ("semantic
//! space") that starts from a fixed focus node. Ensembles of walks give a
//! vocabulary growth curve, and projecting every walk onto a clique gives a
//! weighted co-occurrence network whose statistics can be compared with
//! those of real tagging data.
//!
//! Modules:
//! - [`substrate`]: substrate graph generators and ring profiles.
//! - [`walker`]: walk-length laws, single walks and seeded walk ensembles.
//! - [`cooc`]: clique projection of traces or posts into weighted networks.
//! - [`observables`]: distributions, correlations, similarity, fitting.
//! - [`theory`]: expected vocabulary size under the ring approximation.
//! - [`ingest`]: JSON-Lines post logs, cleaning and per-tag streams.
//! - [`experiment`]: config-driven pipelines and artifact comparison.

pub mod cooc;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod observables;
pub mod substrate;
pub mod theory;
pub mod walker;

pub use error::{Error, Result};

/// Dense 0-based node identifier.
pub type NodeId = u32;
