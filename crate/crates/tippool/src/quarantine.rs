//! Timed opinion pipeline for value transactions.
//!
//! An arriving transaction is held back for a quarantine time `d_Q` before it
//! may enter the tip pool. Two checkpoints drive its state:
//!
//! * at `arrival + d_Q/2` its initial opinion is set: *liked* if no
//!   conflicting transaction (same consumed output) arrived within that
//!   window, *disliked* otherwise. A transaction that arrives while a
//!   conflicting one already exists is disliked immediately.
//! * at `arrival + d_Q` it passes the tip inclusion check: with no conflict
//!   on record it is admitted directly; otherwise the conflict set is handed
//!   to a [`ConflictResolver`], which admits at most one member.
//!
//! The pipeline never reads a clock; callers drive it with timestamped calls
//! whose arrival times must be non-decreasing. Checkpoint decisions depend
//! only on recorded arrivals, so late checkpoint processing is harmless.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuarantineError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("transaction {0:?} was already registered")]
    DuplicateTx(TxId),
    #[error("unknown transaction {0:?}")]
    UnknownTx(TxId),
    #[error("arrival time {got} is before an earlier call at {last}")]
    TimeRegression { got: f64, last: f64 },
    #[error("checkpoint for {tx:?} invoked at {got}, due at {due}")]
    OutOfOrder { tx: TxId, got: f64, due: f64 },
    #[error("opinion of {0:?} was already decided")]
    AlreadyDecided(TxId),
    #[error("no directly admitted transactions on record")]
    NoDirectAdmissions,
}

/// Transaction identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct TxId(pub u64);

/// Identifier of the consumed output; transactions sharing it conflict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct ConflictKey(pub u64);

/// Initial like-status of a transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Opinion {
    Unknown,
    Liked,
    Disliked,
}

/// Final fate of a transaction in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Outcome {
    Pending,
    AdmittedDirect,
    AdmittedByResolver,
    Rejected,
}

/// One transaction tracked by the pipeline.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QuarantineEntry {
    tx_id: TxId,
    conflict_key: ConflictKey,
    arrival_time: f64,
    opinion: Opinion,
    opinion_due: f64,
    inclusion_due: f64,
    outcome: Outcome,
    admission_time: Option<f64>,
}

impl QuarantineEntry {
    pub fn tx_id(&self) -> TxId {
        self.tx_id
    }

    pub fn conflict_key(&self) -> ConflictKey {
        self.conflict_key
    }

    pub fn arrival_time(&self) -> f64 {
        self.arrival_time
    }

    pub fn opinion(&self) -> Opinion {
        self.opinion
    }

    pub fn opinion_due(&self) -> f64 {
        self.opinion_due
    }

    pub fn inclusion_due(&self) -> f64 {
        self.inclusion_due
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn admission_time(&self) -> Option<f64> {
        self.admission_time
    }
}

/// Decides the winner of a conflict set. Implementations must be
/// deterministic for a given input and admit at most one transaction.
pub trait ConflictResolver {
    fn resolve(&self, conflict_set: &[&QuarantineEntry]) -> Option<TxId>;
}

/// Default resolver: admits the unique liked transaction if exactly one
/// member is liked, otherwise rejects the whole set.
#[derive(Debug, Clone, Copy, Default)]
pub struct LikedWinsResolver;

impl ConflictResolver for LikedWinsResolver {
    fn resolve(&self, conflict_set: &[&QuarantineEntry]) -> Option<TxId> {
        let mut liked = conflict_set.iter().filter(|e| e.opinion == Opinion::Liked);
        match (liked.next(), liked.next()) {
            (Some(winner), None) => Some(winner.tx_id),
            _ => None,
        }
    }
}

/// State change reported by the pipeline (`Arrived` is synthesized by
/// harnesses from the [`QuarantinePipeline::on_arrival`] return value).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum PipelineEvent {
    Arrived {
        tx: TxId,
        key: ConflictKey,
        at: f64,
        opinion: Opinion,
    },
    OpinionSet {
        tx: TxId,
        at: f64,
        opinion: Opinion,
    },
    AdmittedDirect {
        tx: TxId,
        at: f64,
    },
    AdmittedByResolver {
        tx: TxId,
        at: f64,
    },
    Rejected {
        tx: TxId,
        at: f64,
    },
}

impl PipelineEvent {
    pub fn at(&self) -> f64 {
        match self {
            PipelineEvent::Arrived { at, .. }
            | PipelineEvent::OpinionSet { at, .. }
            | PipelineEvent::AdmittedDirect { at, .. }
            | PipelineEvent::AdmittedByResolver { at, .. }
            | PipelineEvent::Rejected { at, .. } => *at,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum CheckpointKind {
    Opinion,
    Inclusion,
}

#[derive(Debug, Clone, Copy)]
struct Checkpoint {
    due: f64,
    kind: CheckpointKind,
    tx: TxId,
}

impl Checkpoint {
    fn key(&self) -> (f64, CheckpointKind, TxId) {
        (self.due, self.kind, self.tx)
    }
}

impl PartialEq for Checkpoint {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Checkpoint {}

impl PartialOrd for Checkpoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Checkpoint {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.due
            .total_cmp(&other.due)
            .then(self.kind.cmp(&other.kind))
            .then(self.tx.cmp(&other.tx))
    }
}

/// The quarantine state machine. Single writer; arrival times must be
/// non-decreasing.
#[derive(Debug)]
pub struct QuarantinePipeline {
    quarantine: f64,
    half_window: f64,
    entries: HashMap<TxId, QuarantineEntry>,
    // Arrival order per conflict set and globally; all statistics and
    // resolver inputs iterate these, never the hash map.
    conflict_sets: HashMap<ConflictKey, Vec<TxId>>,
    arrival_order: Vec<TxId>,
    checkpoints: std::collections::BinaryHeap<std::cmp::Reverse<Checkpoint>>,
    last_arrival: f64,
}

impl QuarantinePipeline {
    pub fn new(quarantine: f64) -> Result<Self, QuarantineError> {
        if !quarantine.is_finite() || quarantine < 0.0 {
            return Err(QuarantineError::InvalidParameter(format!(
                "quarantine must be finite and >= 0, got {quarantine}"
            )));
        }
        Ok(Self {
            quarantine,
            half_window: 0.5 * quarantine,
            entries: HashMap::new(),
            conflict_sets: HashMap::new(),
            arrival_order: Vec::new(),
            checkpoints: std::collections::BinaryHeap::new(),
            last_arrival: f64::NEG_INFINITY,
        })
    }

    pub fn quarantine(&self) -> f64 {
        self.quarantine
    }

    pub fn entry(&self, tx: TxId) -> Option<&QuarantineEntry> {
        self.entries.get(&tx)
    }

    /// All entries, oldest arrival first.
    pub fn entries(&self) -> impl Iterator<Item = &QuarantineEntry> {
        self.arrival_order.iter().map(|tx| &self.entries[tx])
    }

    pub fn conflict_set(&self, key: ConflictKey) -> &[TxId] {
        self.conflict_sets
            .get(&key)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Registers a transaction. Its opinion starts `Unknown` unless a
    /// conflicting transaction is already on record, in which case it is
    /// disliked on arrival.
    pub fn on_arrival(
        &mut self,
        tx: TxId,
        key: ConflictKey,
        t: f64,
    ) -> Result<&QuarantineEntry, QuarantineError> {
        if !t.is_finite() {
            return Err(QuarantineError::InvalidParameter(format!(
                "non-finite time {t}"
            )));
        }
        if t < self.last_arrival {
            return Err(QuarantineError::TimeRegression {
                got: t,
                last: self.last_arrival,
            });
        }
        if self.entries.contains_key(&tx) {
            return Err(QuarantineError::DuplicateTx(tx));
        }
        self.last_arrival = t;
        let conflicted = !self.conflict_set(key).is_empty();
        let opinion_due = t + self.half_window;
        let entry = QuarantineEntry {
            tx_id: tx,
            conflict_key: key,
            arrival_time: t,
            opinion: if conflicted {
                Opinion::Disliked
            } else {
                Opinion::Unknown
            },
            opinion_due,
            // Computed from the arrival directly so direct admission lands
            // bit-exactly on arrival + d_Q.
            inclusion_due: t + self.quarantine,
            outcome: Outcome::Pending,
            admission_time: None,
        };
        let inclusion_due = entry.inclusion_due;
        self.entries.insert(tx, entry);
        self.conflict_sets.entry(key).or_default().push(tx);
        self.arrival_order.push(tx);
        if !conflicted {
            self.checkpoints.push(std::cmp::Reverse(Checkpoint {
                due: opinion_due,
                kind: CheckpointKind::Opinion,
                tx,
            }));
        }
        self.checkpoints.push(std::cmp::Reverse(Checkpoint {
            due: inclusion_due,
            kind: CheckpointKind::Inclusion,
            tx,
        }));
        Ok(&self.entries[&tx])
    }

    /// The initial-opinion checkpoint, to be invoked at exactly
    /// `entry.opinion_due` on a transaction whose opinion is still unknown.
    pub fn on_opinion_due(&mut self, tx: TxId, t: f64) -> Result<Opinion, QuarantineError> {
        let entry = self
            .entries
            .get(&tx)
            .ok_or(QuarantineError::UnknownTx(tx))?;
        if t != entry.opinion_due {
            return Err(QuarantineError::OutOfOrder {
                tx,
                got: t,
                due: entry.opinion_due,
            });
        }
        if entry.opinion != Opinion::Unknown {
            return Err(QuarantineError::AlreadyDecided(tx));
        }
        Ok(self
            .decide_opinion(tx)
            .expect("entry exists and is undecided"))
    }

    /// The tip-inclusion checkpoint, to be invoked at exactly
    /// `entry.inclusion_due`. Returns the resulting state changes; empty if
    /// the entry's outcome was already decided by an earlier set resolution.
    pub fn on_inclusion_due(
        &mut self,
        tx: TxId,
        t: f64,
        resolver: &dyn ConflictResolver,
    ) -> Result<Vec<PipelineEvent>, QuarantineError> {
        let entry = self
            .entries
            .get(&tx)
            .ok_or(QuarantineError::UnknownTx(tx))?;
        if t != entry.inclusion_due {
            return Err(QuarantineError::OutOfOrder {
                tx,
                got: t,
                due: entry.inclusion_due,
            });
        }
        Ok(self.run_inclusion_check(tx, resolver))
    }

    /// Processes every checkpoint due at or before `t`, in due order
    /// (opinions before inclusion checks at equal times). Call this *after*
    /// any arrival at the same timestamp: an arrival exactly on a window
    /// boundary counts as inside the window.
    pub fn advance_to(&mut self, t: f64, resolver: &dyn ConflictResolver) -> Vec<PipelineEvent> {
        self.advance(t, true, resolver)
    }

    /// Processes checkpoints strictly before `t`; the form to use just ahead
    /// of an arrival at `t`, so boundary arrivals land inside windows.
    pub fn advance_before(
        &mut self,
        t: f64,
        resolver: &dyn ConflictResolver,
    ) -> Vec<PipelineEvent> {
        self.advance(t, false, resolver)
    }

    fn advance(
        &mut self,
        t: f64,
        inclusive: bool,
        resolver: &dyn ConflictResolver,
    ) -> Vec<PipelineEvent> {
        let mut events = Vec::new();
        while let Some(std::cmp::Reverse(next)) = self.checkpoints.peek().copied() {
            if if inclusive {
                next.due > t
            } else {
                next.due >= t
            } {
                break;
            }
            self.checkpoints.pop();
            match next.kind {
                CheckpointKind::Opinion => {
                    if let Some(opinion) = self.decide_opinion(next.tx) {
                        events.push(PipelineEvent::OpinionSet {
                            tx: next.tx,
                            at: next.due,
                            opinion,
                        });
                    }
                }
                CheckpointKind::Inclusion => {
                    events.extend(self.run_inclusion_check(next.tx, resolver));
                }
            }
        }
        events
    }

    /// Processes every remaining checkpoint.
    pub fn drain(&mut self, resolver: &dyn ConflictResolver) -> Vec<PipelineEvent> {
        self.advance_to(f64::INFINITY, resolver)
    }

    /// Mean `admission_time - arrival_time` over directly admitted
    /// transactions. For conflict-free traffic this equals the quarantine
    /// time: direct admission happens exactly at `arrival + d_Q`.
    pub fn effective_delay_check(&self) -> Result<f64, QuarantineError> {
        let mut sum = 0.0;
        let mut count = 0u64;
        for entry in self.entries() {
            if entry.outcome == Outcome::AdmittedDirect {
                sum += entry.admission_time.expect("admitted entries carry a time")
                    - entry.arrival_time;
                count += 1;
            }
        }
        if count == 0 {
            return Err(QuarantineError::NoDirectAdmissions);
        }
        Ok(sum / count as f64)
    }

    /// Applies the initial-opinion rule; `None` when the opinion was already
    /// decided (disliked on arrival, typically).
    fn decide_opinion(&mut self, tx: TxId) -> Option<Opinion> {
        let entry = &self.entries[&tx];
        if entry.opinion != Opinion::Unknown {
            return None;
        }
        let arrival = entry.arrival_time;
        let window_end = entry.opinion_due;
        let key = entry.conflict_key;
        let conflicted = self.conflict_sets[&key]
            .iter()
            .filter(|&&other| other != tx)
            .any(|other| {
                let o = &self.entries[other];
                o.arrival_time > arrival && o.arrival_time <= window_end
            });
        let opinion = if conflicted {
            Opinion::Disliked
        } else {
            Opinion::Liked
        };
        self.entries.get_mut(&tx).unwrap().opinion = opinion;
        Some(opinion)
    }

    /// Applies the tip-inclusion rule at time `t = entry.inclusion_due`.
    ///
    /// A lone member of its conflict set is admitted directly. Any recorded
    /// conflict (whether it arrived before this transaction or within its
    /// quarantine window) sends the whole set to the resolver, which keeps
    /// the at-most-one-admission guarantee.
    fn run_inclusion_check(
        &mut self,
        tx: TxId,
        resolver: &dyn ConflictResolver,
    ) -> Vec<PipelineEvent> {
        let entry = &self.entries[&tx];
        if entry.outcome != Outcome::Pending {
            return Vec::new();
        }
        let t = entry.inclusion_due;
        let key = entry.conflict_key;
        let members = self.conflict_sets[&key].clone();
        if members.len() == 1 {
            let entry = self.entries.get_mut(&tx).unwrap();
            entry.outcome = Outcome::AdmittedDirect;
            entry.admission_time = Some(t);
            return vec![PipelineEvent::AdmittedDirect { tx, at: t }];
        }
        let refs: Vec<&QuarantineEntry> = members.iter().map(|m| &self.entries[m]).collect();
        let winner = resolver.resolve(&refs);
        let mut events = Vec::new();
        for member in members {
            let e = self.entries.get_mut(&member).unwrap();
            if e.outcome != Outcome::Pending {
                continue;
            }
            if winner == Some(member) {
                // Only admit once the member's own quarantine has elapsed;
                // an earlier-due sibling check must not release it early.
                if e.inclusion_due <= t {
                    e.outcome = Outcome::AdmittedByResolver;
                    e.admission_time = Some(t);
                    events.push(PipelineEvent::AdmittedByResolver { tx: member, at: t });
                }
            } else {
                e.outcome = Outcome::Rejected;
                events.push(PipelineEvent::Rejected { tx: member, at: t });
            }
        }
        events
    }
}
