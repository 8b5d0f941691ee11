//! Append-only JSON-lines log, one file per session. The first line
//! creates the session; every later line is one recorded vote. Replaying
//! the votes through a fresh session reproduces its state exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::session::{PairOutcome, Session, SessionError, VoteOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    Created {
        session_id: String,
        manifest: String,
        ids: Vec<String>,
        seed: u64,
        loops: usize,
        created_at: u64,
    },
    Vote {
        pair_token: String,
        winner: String,
    },
}

impl Event {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("events serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, thiserror::Error)]
#[error("session log line {line}: {message}")]
pub struct LogError {
    pub line: usize,
    pub message: String,
}

fn at(line: usize, message: impl Into<String>) -> LogError {
    LogError {
        line,
        message: message.into(),
    }
}

/// Parses a log; blank lines are ignored.
pub fn parse_log(text: &str) -> Result<Vec<(usize, Event)>, LogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|e| (i + 1, e))
                .map_err(|e| at(i + 1, e.to_string()))
        })
        .collect()
}

/// Rebuilds a session by re-issuing and re-answering every logged pair.
pub fn replay(text: &str) -> Result<Session, LogError> {
    let events = parse_log(text)?;
    let mut iter = events.into_iter();
    let mut session = match iter.next() {
        Some((
            line,
            Event::Created {
                session_id,
                manifest,
                ids,
                seed,
                loops,
                created_at,
            },
        )) => Session::create(session_id, manifest, ids, seed, loops, created_at).map_err(|e| at(line, e.to_string()))?,
        Some((line, _)) => return Err(at(line, "log must start with a `created` event")),
        None => return Err(at(0, "empty session log")),
    };
    for (line, event) in iter {
        let Event::Vote { pair_token, winner } = event else {
            return Err(at(line, "duplicate `created` event"));
        };
        match session.next_pair() {
            PairOutcome::Pair { token, .. } if token == pair_token => {}
            PairOutcome::Pair { token, .. } => {
                return Err(at(line, format!("vote for `{pair_token}` but the design issues `{token}`")))
            }
            PairOutcome::Complete { .. } => return Err(at(line, "vote after the session completed")),
        }
        match session.record_vote(&pair_token, &winner) {
            Ok(VoteOutcome::Recorded { .. }) => {}
            Ok(VoteOutcome::Duplicate) => return Err(at(line, "duplicate vote in log")),
            Err(e @ (SessionError::Contract(_) | SessionError::Conflict(_) | SessionError::Precondition(_))) => {
                return Err(at(line, e.to_string()))
            }
            Err(SessionError::Scaling(e)) => return Err(at(line, e.to_string())),
        }
    }
    Ok(session)
}

pub fn replay_file(path: &Path) -> Result<Session, LogError> {
    let text = std::fs::read_to_string(path).map_err(|e| at(0, format!("{}: {e}", path.display())))?;
    replay(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn created(n: usize) -> Event {
        Event::Created {
            session_id: "abc".into(),
            manifest: "m".into(),
            ids: (0..n).map(|i| format!("s{i}")).collect(),
            seed: 5,
            loops: 2,
            created_at: 1,
        }
    }

    #[test]
    fn replay_matches_live_session() {
        let Event::Created { ids, .. } = created(5) else { unreachable!() };
        let mut live = Session::create("abc", "m", ids, 5, 2, 1).unwrap();
        let mut log = created(5).to_line();
        while let PairOutcome::Pair { left, right, token, .. } = live.next_pair() {
            let winner = if left < right { left } else { right };
            live.record_vote(&token, &winner).unwrap();
            log.push_str(&Event::Vote { pair_token: token, winner }.to_line());
        }
        let back = replay(&log).unwrap();
        assert!(back.is_complete());
        assert_eq!(back.votes(), live.votes());
        assert_eq!(back.scores(false).unwrap(), live.scores(false).unwrap());
    }

    #[test]
    fn malformed_logs_are_located() {
        assert_eq!(replay("").unwrap_err().line, 0);
        assert_eq!(replay("{\"event\":\"vote\",\"pair_token\":\"t0\",\"winner\":\"s0\"}").unwrap_err().line, 1);
        let bad = format!("{}\nnot json\n", created(3).to_line().trim_end());
        assert_eq!(replay(&bad).unwrap_err().line, 2);
        let wrong_token = format!("{}{}", created(3).to_line(), Event::Vote { pair_token: "t7".into(), winner: "s0".into() }.to_line());
        assert!(replay(&wrong_token).unwrap_err().message.contains("t7"));
    }
}
