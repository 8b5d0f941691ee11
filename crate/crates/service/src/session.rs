use std::collections::{HashSet, VecDeque};

use colorfulness::scaling::{asd_init, asd_next_pairs, asd_update, map_to_scale, thurstone_scale, AsdState, PwcMatrix};
use colorfulness::stats::ScoreVector;

/// Upper bound on loops per session; keeps replayed logs bounded.
pub const MAX_LOOPS: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("{0}")]
    Contract(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Scaling(#[from] colorfulness::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Issued {
    token: String,
    left: usize,
    right: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PairOutcome {
    Pair {
        left: String,
        right: String,
        token: String,
        progress: f64,
    },
    Complete {
        progress: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VoteOutcome {
    Recorded { winner: String, loser: String },
    /// The same vote was already recorded for this token.
    Duplicate,
}

/// One observer's run through the design. Pure state machine; persistence
/// and transport live elsewhere.
#[derive(Clone, Debug)]
pub struct Session {
    id: String,
    manifest: String,
    seed: u64,
    created_at: u64,
    asd: AsdState,
    votes: PwcMatrix,
    queue: VecDeque<(usize, usize)>,
    current: Option<Issued>,
    last_vote: Option<(String, usize)>,
    issued: usize,
    voted: usize,
}

impl Session {
    pub fn create(
        id: impl Into<String>,
        manifest: impl Into<String>,
        ids: Vec<String>,
        seed: u64,
        loops: usize,
        created_at: u64,
    ) -> Result<Self, SessionError> {
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(SessionError::Contract(format!("duplicate stimulus id `{dup}`")));
        }
        if loops > MAX_LOOPS {
            return Err(SessionError::Contract(format!("at most {MAX_LOOPS} loops, got {loops}")));
        }
        let votes = PwcMatrix::zeros(ids.clone());
        let asd = asd_init(ids, seed, loops).map_err(|e| SessionError::Contract(e.to_string()))?;
        let queue = asd_next_pairs(&asd).unwrap_or_default().into();
        Ok(Self {
            id: id.into(),
            manifest: manifest.into(),
            seed,
            created_at,
            asd,
            votes,
            queue,
            current: None,
            last_vote: None,
            issued: 0,
            voted: 0,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn manifest(&self) -> &str {
        &self.manifest
    }

    pub fn ids(&self) -> &[String] {
        &self.asd.ids
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn loops(&self) -> usize {
        self.asd.loops
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    pub fn votes(&self) -> &PwcMatrix {
        &self.votes
    }

    pub fn design(&self) -> &AsdState {
        &self.asd
    }

    pub fn votes_recorded(&self) -> usize {
        self.voted
    }

    pub fn total_pairs(&self) -> usize {
        self.asd.loops * self.asd.pairs_per_loop()
    }

    pub fn progress(&self) -> f64 {
        self.voted as f64 / self.total_pairs() as f64
    }

    pub fn is_complete(&self) -> bool {
        self.asd.is_complete() && self.queue.is_empty() && self.current.is_none()
    }

    /// The outstanding pair, issuing a new one if the last was answered.
    /// Asking again before voting returns the same pair and token.
    pub fn next_pair(&mut self) -> PairOutcome {
        if self.current.is_none() {
            if let Some((left, right)) = self.queue.pop_front() {
                self.current = Some(Issued {
                    token: format!("t{}", self.issued),
                    left,
                    right,
                });
                self.issued += 1;
            }
        }
        match &self.current {
            Some(c) => PairOutcome::Pair {
                left: self.asd.ids[c.left].clone(),
                right: self.asd.ids[c.right].clone(),
                token: c.token.clone(),
                progress: self.progress(),
            },
            None => PairOutcome::Complete {
                progress: self.progress(),
            },
        }
    }

    pub fn record_vote(&mut self, token: &str, winner: &str) -> Result<VoteOutcome, SessionError> {
        let Some(cur) = self.current.clone().filter(|c| c.token == token) else {
            return match &self.last_vote {
                Some((t, w)) if t == token => {
                    if self.asd.ids[*w] == winner {
                        Ok(VoteOutcome::Duplicate)
                    } else {
                        Err(SessionError::Conflict(format!("pair `{token}` was already answered differently")))
                    }
                }
                _ => Err(SessionError::Conflict(format!("pair `{token}` is not the outstanding pair"))),
            };
        };
        let (w, l) = if self.asd.ids[cur.left] == winner {
            (cur.left, cur.right)
        } else if self.asd.ids[cur.right] == winner {
            (cur.right, cur.left)
        } else {
            return Err(SessionError::Contract(format!("winner `{winner}` is not part of pair `{token}`")));
        };

        let mut votes = self.votes.clone();
        votes.record(w, l)?;
        let mut asd = None;
        let mut queue = None;
        if self.queue.is_empty() {
            // last vote of the loop: re-rank and schedule the next loop
            let next = asd_update(&self.asd, &votes)?;
            queue = Some(asd_next_pairs(&next).unwrap_or_default());
            asd = Some(next);
        }
        self.votes = votes;
        if let Some(a) = asd {
            self.asd = a;
        }
        if let Some(q) = queue {
            self.queue = q.into();
        }
        self.current = None;
        self.last_vote = Some((token.to_string(), w));
        self.voted += 1;
        Ok(VoteOutcome::Recorded {
            winner: self.asd.ids[w].clone(),
            loser: self.asd.ids[l].clone(),
        })
    }

    /// Thurstone scores of all votes so far, mapped onto [1, 9].
    pub fn scores(&self, partial: bool) -> Result<ScoreVector, SessionError> {
        if !partial && !self.is_complete() {
            return Err(SessionError::Precondition(format!(
                "session incomplete ({} of {} votes); pass partial=true for interim scores",
                self.voted,
                self.total_pairs()
            )));
        }
        let scaled = thurstone_scale(&self.votes)?;
        Ok(map_to_scale(&scaled, 1.0, 9.0)?)
    }
}
