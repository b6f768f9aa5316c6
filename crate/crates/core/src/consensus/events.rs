use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::chain::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// Status change from the failure plan.
    Status,
    /// A creator built and stored its block.
    Create,
    /// A creator's turn passed without a block.
    Skip,
    /// One transmission from actor to target.
    Send,
    /// Target's verdict on a transmission.
    Receive,
    /// Chain restored from neighbors.
    Recover,
    /// Window pruned at a cycle boundary.
    Prune,
    /// Majority tally for one turn.
    Finalize,
    /// A transmission from outside the queue.
    Rogue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    Accepted,
    Rejected,
    Unreachable,
    Lost,
    Alive,
    Failed,
    Isolated,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub iteration: u64,
    pub actor: NodeId,
    pub action: Action,
    pub target: Option<NodeId>,
    pub outcome: Outcome,
    pub reason: Option<String>,
    pub bytes: u64,
}

impl Event {
    pub fn new(iteration: u64, actor: NodeId, action: Action, outcome: Outcome) -> Self {
        Event {
            iteration,
            actor,
            action,
            target: None,
            outcome,
            reason: None,
            bytes: 0,
        }
    }

    pub fn target(mut self, target: NodeId) -> Self {
        self.target = Some(target);
        self
    }

    pub fn reason(mut self, reason: impl ToString) -> Self {
        self.reason = Some(reason.to_string());
        self
    }

    pub fn bytes(mut self, bytes: u64) -> Self {
        self.bytes = bytes;
        self
    }
}

/// Writes events as newline-delimited JSON.
pub fn write_ndjson<W: Write>(mut out: W, events: &[Event]) -> io::Result<()> {
    for event in events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ndjson_line_shape() {
        let e = Event::new(3, NodeId(2), Action::Send, Outcome::Ok)
            .target(NodeId(4))
            .bytes(147);
        let mut out = Vec::new();
        write_ndjson(&mut out, &[e]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "{\"iteration\":3,\"actor\":2,\"action\":\"send\",\"target\":4,\"outcome\":\"ok\",\"reason\":null,\"bytes\":147}\n"
        );
    }
}
