//! Personalized search service.
//!
//! Results for a repeated search are re-ranked by how much the user used
//! each link before: clicks and dwell time recorded per (user, query, link).
//! Links the user never opened stay in the list, after the used ones.
//!
//! The ranking, mining and text algorithms live in [`clickrank_core`]; this
//! crate adds persistence (profiles, JSON-lines event log, corpus
//! manifests), configuration, the HTTP API and the `clickrank` CLI.

pub mod config;
pub mod corpus;
pub mod engine;
pub mod eventlog;
pub mod http;
pub mod report;
pub mod users;

pub use config::ServiceConfig;
pub use engine::{Algorithm, Clock, Engine, ManualClock, ServiceError, SystemClock};
