//! Shared test support: a brute-force oracle that applies the quarantine
//! rules literally to a whole timeline at once, plus random timeline
//! generation and a pipeline driver.
//!
//! The oracle never looks at the pipeline's state machine; it re-derives
//! every transaction's fate from the arrival list alone, so the two paths
//! are independent.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tippool::quarantine::{
    ConflictKey, ConflictResolver, LikedWinsResolver, Outcome, PipelineEvent, QuarantinePipeline,
    TxId,
};

#[derive(Debug, Clone, Copy)]
pub struct TimelineArrival {
    pub tx: u64,
    pub key: u64,
    pub at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleVerdict {
    pub liked: bool,
    pub outcome: Outcome,
}

/// Applies the rules to a timeline sorted by (time, tx):
///
/// 1. a transaction is disliked on arrival if an earlier same-key arrival
///    exists, otherwise liked at `+d_Q/2` unless a same-key arrival lands in
///    `(t, t + d_Q/2]`;
/// 2. it is admitted directly at `+d_Q` if no other same-key arrival has
///    `at <= t + d_Q`; otherwise the set's unique liked member (if any) is
///    admitted and the rest are rejected.
pub fn timeline_oracle(d_q: f64, arrivals: &[TimelineArrival]) -> BTreeMap<u64, OracleVerdict> {
    let half = 0.5 * d_q;
    let mut liked: BTreeMap<u64, bool> = BTreeMap::new();
    for (i, a) in arrivals.iter().enumerate() {
        let disliked_on_arrival = arrivals[..i].iter().any(|e| e.key == a.key);
        let conflict_in_window = arrivals
            .iter()
            .any(|o| o.tx != a.tx && o.key == a.key && o.at > a.at && o.at <= a.at + half);
        liked.insert(a.tx, !disliked_on_arrival && !conflict_in_window);
    }
    let mut sets: BTreeMap<u64, Vec<&TimelineArrival>> = BTreeMap::new();
    for a in arrivals {
        sets.entry(a.key).or_default().push(a);
    }
    let mut verdicts = BTreeMap::new();
    for members in sets.values() {
        let winner: Option<u64> = {
            let mut liked_members = members.iter().filter(|m| liked[&m.tx]);
            match (liked_members.next(), liked_members.next()) {
                (Some(w), None) => Some(w.tx),
                _ => None,
            }
        };
        for m in members {
            let lone = members.iter().all(|o| o.tx == m.tx || o.at > m.at + d_q);
            let outcome = if lone {
                Outcome::AdmittedDirect
            } else if winner == Some(m.tx) {
                Outcome::AdmittedByResolver
            } else {
                Outcome::Rejected
            };
            verdicts.insert(
                m.tx,
                OracleVerdict {
                    liked: liked[&m.tx],
                    outcome,
                },
            );
        }
    }
    verdicts
}

/// Feeds a sorted timeline through the real pipeline: checkpoints strictly
/// before each arrival run first, then the arrival, then a final drain.
pub fn drive_pipeline(
    d_q: f64,
    arrivals: &[TimelineArrival],
) -> (QuarantinePipeline, Vec<PipelineEvent>) {
    let resolver = LikedWinsResolver;
    let mut pipeline = QuarantinePipeline::new(d_q).expect("valid quarantine");
    let mut events = Vec::new();
    for a in arrivals {
        events.extend(pipeline.advance_before(a.at, &resolver));
        pipeline
            .on_arrival(TxId(a.tx), ConflictKey(a.key), a.at)
            .expect("timeline arrivals are unique and sorted");
    }
    events.extend(pipeline.drain(&resolver));
    (pipeline, events)
}

/// Random timeline: up to `max_len` arrivals over a handful of conflict
/// keys (small key space forces conflicts), with occasional exact-boundary
/// and zero-quarantine cases.
pub fn random_timeline(rng: &mut ChaCha8Rng, max_len: usize) -> (f64, Vec<TimelineArrival>) {
    let d_q: f64 = match rng.random_range(0..10u32) {
        0 => 0.0,
        1 => 0.5,
        _ => rng.random_range(0.5..6.0),
    };
    let len = rng.random_range(1..=max_len.max(1));
    let horizon = 3.0 * d_q.max(1.0);
    let mut arrivals: Vec<TimelineArrival> = (0..len as u64)
        .map(|tx| TimelineArrival {
            tx,
            key: rng.random_range(0..5),
            at: rng.random_range(0.0..horizon),
        })
        .collect();
    // Occasionally pin an arrival exactly on another's window boundary.
    if d_q > 0.0 && len >= 2 && rng.random_range(0..4u32) == 0 {
        let target = arrivals[0];
        arrivals[1] = TimelineArrival {
            tx: arrivals[1].tx,
            key: target.key,
            at: target.at + 0.5 * d_q,
        };
    }
    arrivals.sort_by(|a, b| a.at.total_cmp(&b.at).then(a.tx.cmp(&b.tx)));
    (d_q, arrivals)
}

/// Checks one random timeline against the oracle and the set-level
/// guarantees; returns the per-set admission counts for extra assertions.
pub fn check_timeline(d_q: f64, arrivals: &[TimelineArrival]) {
    let verdicts = timeline_oracle(d_q, arrivals);
    let (pipeline, _events) = drive_pipeline(d_q, arrivals);
    let mut liked_per_set: BTreeMap<u64, usize> = BTreeMap::new();
    let mut admitted_per_set: BTreeMap<u64, usize> = BTreeMap::new();
    for a in arrivals {
        let entry = pipeline.entry(TxId(a.tx)).expect("entry exists");
        let verdict = verdicts[&a.tx];
        assert_eq!(
            entry.outcome(),
            verdict.outcome,
            "outcome mismatch for tx{} (key {}, at {}) with d_q {d_q}: timeline {arrivals:?}",
            a.tx,
            a.key,
            a.at
        );
        let is_liked = entry.opinion() == tippool::Opinion::Liked;
        assert_eq!(
            is_liked, verdict.liked,
            "liked mismatch for tx{} with d_q {d_q}: timeline {arrivals:?}",
            a.tx
        );
        if is_liked {
            *liked_per_set.entry(a.key).or_insert(0) += 1;
        }
        match entry.outcome() {
            Outcome::AdmittedDirect => {
                *admitted_per_set.entry(a.key).or_insert(0) += 1;
                assert_eq!(
                    entry.admission_time(),
                    Some(a.at + d_q),
                    "direct admission must happen exactly at arrival + d_Q"
                );
            }
            Outcome::AdmittedByResolver => {
                *admitted_per_set.entry(a.key).or_insert(0) += 1;
            }
            Outcome::Rejected => {}
            Outcome::Pending => panic!("tx{} left pending after drain", a.tx),
        }
    }
    for (key, count) in liked_per_set {
        assert!(count <= 1, "conflict set {key} has {count} liked members");
    }
    for (key, count) in admitted_per_set {
        assert!(
            count <= 1,
            "conflict set {key} has {count} admitted members"
        );
    }
}

/// The resolver contract: exactly one liked member is always the winner.
#[allow(dead_code)] // not every test binary that includes this module uses it
pub fn resolver_contract_holds(pipeline: &QuarantinePipeline, key: u64) -> bool {
    let resolver = LikedWinsResolver;
    let members: Vec<_> = pipeline
        .conflict_set(ConflictKey(key))
        .iter()
        .map(|tx| pipeline.entry(*tx).unwrap())
        .collect();
    let liked: Vec<_> = members
        .iter()
        .filter(|e| e.opinion() == tippool::Opinion::Liked)
        .collect();
    let winner = resolver.resolve(&members);
    match liked.len() {
        1 => winner == Some(liked[0].tx_id()),
        _ => winner.is_none(),
    }
}
