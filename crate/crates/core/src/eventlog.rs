//! Traces and event logs.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub activities: Vec<String>,
}

impl Trace {
    pub fn new<S: Into<String>>(case_id: impl Into<String>, activities: impl IntoIterator<Item = S>) -> Self {
        Trace {
            case_id: case_id.into(),
            activities: activities.into_iter().map(Into::into).collect(),
        }
    }

    /// Parses a comma-separated activity list; the empty string is the empty trace.
    pub fn from_csv_spec(case_id: impl Into<String>, spec: &str) -> Self {
        let activities = if spec.trim().is_empty() {
            Vec::new()
        } else {
            spec.split(',').map(|a| a.trim().to_string()).collect()
        };
        Trace {
            case_id: case_id.into(),
            activities,
        }
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }
}

/// Ordered traces; case ids may repeat.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub source_name: String,
}

impl EventLog {
    pub fn new(source_name: impl Into<String>, traces: Vec<Trace>) -> Self {
        EventLog {
            traces,
            source_name: source_name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}
