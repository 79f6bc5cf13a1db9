//! ITIL lifecycle engine: phase-gated projects, procurement approvals,
//! asset and license records, change management, incident tickets, vendor
//! SLA scoring and notifications, all driven through an event-sourced
//! command layer.
//!
//! Domain modules are usable on their own; [`engine::Engine`] ties them
//! together and turns each [`engine::Command`] into an audit-log batch.

pub mod assets;
pub mod audit;
pub mod change;
pub mod common;
pub mod engine;
pub mod error;
pub mod exact;
pub mod lifecycle;
pub mod notifications;
pub mod period;
pub mod procurement;
pub mod service_desk;
pub mod sla;

pub use common::{ActorId, Timestamp};
pub use engine::{Command, Ctx, Engine, EngineConfig};
pub use error::{Error, ErrorClass, Result};
