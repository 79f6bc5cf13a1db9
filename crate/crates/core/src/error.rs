//! Error type shared by every module.
//!
//! Each variant belongs to one [`ErrorClass`]; the HTTP layer maps classes to
//! status codes and the CLI maps them to exit codes.

use serde::Serialize;
use thiserror::Error;

use crate::lifecycle::{EvidenceKind, Phase};
use crate::procurement::DeviceCategory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    /// Malformed or missing input.
    Validation,
    /// A referenced entity does not exist.
    NotFound,
    /// The entity is in the wrong state, or the change would mutate frozen data.
    Conflict,
    /// A process rule (time window, gate, authorization, competition) is violated.
    Rule,
    /// Log persistence failed or the log is unreadable.
    Storage,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "code", content = "details", rename_all = "snake_case")]
pub enum Error {
    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("missing required criteria: {}", .missing.join(", "))]
    MissingCriteria { missing: Vec<String> },

    #[error("{entity} {id} not found")]
    NotFound { entity: String, id: String },

    #[error("{entity} {id} already exists")]
    Duplicate { entity: String, id: String },

    #[error("{entity} {id} is immutable: {reason}")]
    Immutable {
        entity: String,
        id: String,
        reason: String,
    },

    #[error("{entity} {id} is {state}; cannot {action}")]
    InvalidState {
        entity: String,
        id: String,
        state: String,
        action: String,
    },

    #[error("phase {requested} is not the current phase {current}")]
    OutOfOrder { current: Phase, requested: Phase },

    #[error("{phase} gate incomplete; missing evidence: {}", display_list(.missing))]
    GateIncomplete {
        phase: Phase,
        missing: Vec<EvidenceKind>,
    },

    #[error("{phase} gate is still open; the next phase cannot start")]
    PhaseBlocked { phase: Phase },

    #[error("CSI is the terminal phase")]
    TerminalPhase,

    #[error("vendor {vendor} is not an authorized dealer for {category}")]
    VendorNotAuthorized {
        vendor: String,
        category: DeviceCategory,
    },

    #[error("at least {required} vendor quotations are required, found {found}")]
    InsufficientCompetition { required: usize, found: usize },

    #[error("{entity} {id} is blocked: {reason}")]
    Blocked {
        entity: String,
        id: String,
        reason: String,
    },

    #[error("license pool {product} exhausted: all {total} licenses allocated")]
    PoolExhausted { product: String, total: u32 },

    #[error("scheduling window violated: {required}; requested lead time {lead_minutes} minutes")]
    ScheduleWindow { required: String, lead_minutes: i64 },

    #[error("stale test run: {reason}; record a fresh test run")]
    StaleTest { reason: String },

    #[error("{rule}")]
    RuleViolation { rule: String },

    #[error("identifier space for {prefix} exhausted")]
    CounterExhausted { prefix: String },

    #[error("storage failure: {message}")]
    Storage { message: String },

    #[error("corrupt audit log at line {line}: {message}")]
    CorruptLog { line: usize, message: String },
}

fn display_list<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation { .. } | Error::MissingCriteria { .. } => ErrorClass::Validation,
            Error::NotFound { .. } => ErrorClass::NotFound,
            Error::Duplicate { .. }
            | Error::Immutable { .. }
            | Error::InvalidState { .. }
            | Error::OutOfOrder { .. }
            | Error::PoolExhausted { .. }
            | Error::CounterExhausted { .. } => ErrorClass::Conflict,
            Error::GateIncomplete { .. }
            | Error::PhaseBlocked { .. }
            | Error::TerminalPhase
            | Error::VendorNotAuthorized { .. }
            | Error::InsufficientCompetition { .. }
            | Error::Blocked { .. }
            | Error::ScheduleWindow { .. }
            | Error::StaleTest { .. }
            | Error::RuleViolation { .. } => ErrorClass::Rule,
            Error::Storage { .. } | Error::CorruptLog { .. } => ErrorClass::Storage,
        }
    }

    /// Stable snake_case identifier of the variant.
    pub fn code(&self) -> String {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(map)) => map
                .get("code")
                .and_then(|c| c.as_str())
                .unwrap_or("error")
                .to_string(),
            _ => "error".to_string(),
        }
    }

    /// Structured details of the variant, `null` for unit variants.
    pub fn details(&self) -> serde_json::Value {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(mut map)) => {
                map.remove("details").unwrap_or(serde_json::Value::Null)
            }
            _ => serde_json::Value::Null,
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn not_found(entity: &str, id: impl ToString) -> Self {
        Error::NotFound {
            entity: entity.to_string(),
            id: id.to_string(),
        }
    }

    pub(crate) fn duplicate(entity: &str, id: impl ToString) -> Self {
        Error::Duplicate {
            entity: entity.to_string(),
            id: id.to_string(),
        }
    }

    pub(crate) fn immutable(entity: &str, id: impl ToString, reason: impl Into<String>) -> Self {
        Error::Immutable {
            entity: entity.to_string(),
            id: id.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid_state(
        entity: &str,
        id: impl ToString,
        state: impl ToString,
        action: &str,
    ) -> Self {
        Error::InvalidState {
            entity: entity.to_string(),
            id: id.to_string(),
            state: state.to_string(),
            action: action.to_string(),
        }
    }

    pub(crate) fn blocked(entity: &str, id: impl ToString, reason: impl Into<String>) -> Self {
        Error::Blocked {
            entity: entity.to_string(),
            id: id.to_string(),
            reason: reason.into(),
        }
    }
}

/// Rejects blank text fields.
pub(crate) fn require_text(field: &str, value: &str) -> Result<()> {
    if value.trim().is_empty() {
        Err(Error::validation(field, "must not be empty"))
    } else {
        Ok(())
    }
}
