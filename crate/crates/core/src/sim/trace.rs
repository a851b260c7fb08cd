use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::replica::ReplicaId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Update,
    Send,
    Drop,
    Dup,
    Deliver,
    Alert,
    Converge,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Update => "update",
            EventKind::Send => "send",
            EventKind::Drop => "drop",
            EventKind::Dup => "dup",
            EventKind::Deliver => "deliver",
            EventKind::Alert => "alert",
            EventKind::Converge => "converge",
        }
    }
}

/// One simulator event. Fields serialize in declaration order and the payload
/// object has sorted keys, so traces are byte-stable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub node: ReplicaId,
    pub event: EventKind,
    pub payload: Value,
}

impl TraceRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "round={} node={} event={} {}",
            self.round,
            self.node,
            self.event.name(),
            self.payload
        )
    }
}

/// Renders a trace as line-delimited JSON (`structured`) or `key=value` text.
pub fn render(trace: &[TraceRecord], structured: bool) -> String {
    let mut out = String::new();
    for record in trace {
        if structured {
            out.push_str(&record.to_json_line());
        } else {
            out.push_str(&record.to_string());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_field_order_is_fixed() {
        let r = TraceRecord {
            round: 3,
            node: ReplicaId(1),
            event: EventKind::Send,
            payload: json!({"to": 2, "kind": "push"}),
        };
        assert_eq!(
            r.to_json_line(),
            r#"{"round":3,"node":1,"event":"send","payload":{"kind":"push","to":2}}"#
        );
        assert_eq!(
            r.to_string(),
            r#"round=3 node=n1 event=send {"kind":"push","to":2}"#
        );
    }
}
