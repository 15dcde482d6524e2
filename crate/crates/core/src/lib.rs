//! Context-corrective note generation for image-text posts.
//!
//! A data organizer filters and clusters retrieved context, one reasoner per
//! cluster drafts a note, and a judge picks the final one. The [`metrics`]
//! module scores generated notes against community-written ones.

pub mod agent;
pub mod error;
pub mod gateway;
pub mod judge;
pub mod metrics;
pub mod model;
pub mod organizer;
pub mod pipeline;
pub mod prompts;
pub mod reasoner;

pub use agent::ModelSettings;
pub use error::{AgentError, DataError, GatewayError, MetricError, ParseError, PipelineError};
pub use gateway::{ChatClient, Gateway};
pub use model::{ContextItem, DataEntry, Label, Note, PipelineTrace, Post, Provenance, ResultRecord};
pub use pipeline::{run_batch, run_entry, BatchSummary, PipelineConfig};
