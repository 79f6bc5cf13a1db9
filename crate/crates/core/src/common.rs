//! Identifiers, timestamps and counters used across modules.

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Timestamp = DateTime<Utc>;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Self {
                Self(value.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(value: &str) -> Self {
                Self(value.to_string())
            }
        }

        impl From<String> for $name {
            fn from(value: String) -> Self {
                Self(value)
            }
        }
    };
}

string_id!(
    /// Who performed an action, taken from the request's bearer token.
    ActorId
);
string_id!(
    /// Opaque reference to an uploaded document (sheet, report, LOP).
    DocRef
);
string_id!(ProjectId);
string_id!(VendorId);
string_id!(ProcurementId);
string_id!(ChangeId);
string_id!(NotificationId);
string_id!(
    /// Address a notification is delivered to (department, contact number, mailbox).
    Recipient
);

/// Monotone allocator behind the formatted identifiers (`AST000001`, `prj000001`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counter {
    prefix: String,
    width: usize,
    last: u64,
}

impl Counter {
    pub fn new(prefix: &str, width: usize) -> Self {
        Self {
            prefix: prefix.to_string(),
            width,
            last: 0,
        }
    }

    pub fn last(&self) -> u64 {
        self.last
    }

    /// Formatted form of the value `next` would hand out.
    pub fn peek(&self) -> Result<String> {
        let value = self.last + 1;
        if value >= 10u64.pow(self.width as u32) {
            return Err(Error::CounterExhausted {
                prefix: self.prefix.clone(),
            });
        }
        Ok(format!("{}{:0width$}", self.prefix, value, width = self.width))
    }

    pub fn next(&mut self) -> Result<String> {
        let id = self.peek()?;
        self.last += 1;
        Ok(id)
    }
}
