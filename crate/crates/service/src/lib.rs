//! Pairwise-comparison experiment service.
//!
//! Each session is one observer working through an adaptive square design
//! over a manifest's stimuli. Votes are appended to a per-session event log
//! so a session can be resumed or audited by replay.

pub mod eventlog;
pub mod http;
pub mod session;

pub use eventlog::{parse_log, replay, replay_file, Event, LogError};
pub use http::{router, serve, AppState, ServiceConfig};
pub use session::{PairOutcome, Session, SessionError, VoteOutcome};
