//! Reputation assessment under FIRE and TRAVOS, and argument-based
//! explanations of why one provider outranks another.

pub mod beta;
pub mod example;
pub mod explain;
pub mod fire;
pub mod model;
pub mod render;
pub mod simulate;
pub mod store;
pub mod travos;

pub use model::{AgentId, Assessment, ComponentTrust, Preferences, Rating, ReputationType, Term};
