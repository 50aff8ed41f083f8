//! Discrete-event simulation of DAG growth under Poisson arrivals with
//! per-class visibility delays.
//!
//! Arrivals form a Poisson process of the model's total rate; each arrival
//! is assigned a class by an independent draw (thinning). A message selects
//! its parents uniformly from the current tip pool at issue time and is
//! revealed — added to the pool, removing its still-present parents — one
//! class delay later. Removal times measured per removed tip are
//! `child.reveal_time - parent.reveal_time`.
//!
//! Everything is driven by a seeded ChaCha8 generator: identical config and
//! seed give bit-identical results. Exponential interarrivals use the
//! inverse transform `-ln(1 - u) / rate`; per-sweep-point seeds are the
//! SplitMix64 stream of the base seed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::ModelParams;
use crate::quarantine::{ConflictKey, LikedWinsResolver, PipelineEvent, QuarantinePipeline, TxId};
use crate::stats::{mean_and_stddev, splitmix64, EmpiricalCdf};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("no removal times were recorded")]
    EmptyRemovalTimes,
    #[error("operation requires a two-class model, got {0} classes")]
    NotTwoClass(usize),
    #[error(transparent)]
    Quarantine(#[from] crate::quarantine::QuarantineError),
}

/// One simulated DAG message.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: u64,
    pub class_index: usize,
    pub issue_time: f64,
    pub reveal_time: f64,
    pub parent_ids: Vec<u64>,
}

/// Reserved id of the bootstrap message that seeds the pool at time zero.
pub const GENESIS_ID: u64 = 0;

/// The set of visible, not-yet-referenced messages.
///
/// Backed by a dense slot vector for O(1) insert, removal and uniform
/// sampling; ids enter exactly once and leave at most once, which is
/// enforced in debug builds.
#[derive(Debug)]
pub struct TipPool {
    ids: Vec<u64>,
    slot: Vec<u32>,
    #[cfg(debug_assertions)]
    entered: Vec<bool>,
}

const NO_SLOT: u32 = u32::MAX;

impl TipPool {
    fn with_capacity(max_id: u64) -> Self {
        Self {
            ids: Vec::new(),
            slot: vec![NO_SLOT; max_id as usize + 1],
            #[cfg(debug_assertions)]
            entered: vec![false; max_id as usize + 1],
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.slot[id as usize] != NO_SLOT
    }

    fn insert(&mut self, id: u64) {
        #[cfg(debug_assertions)]
        {
            assert!(
                !self.entered[id as usize],
                "message {id} entered the pool twice"
            );
            self.entered[id as usize] = true;
        }
        debug_assert!(!self.contains(id));
        self.slot[id as usize] = self.ids.len() as u32;
        self.ids.push(id);
    }

    /// Removes `id` if present; removal of an absent id is a no-op so that
    /// a late reveal whose parents are already gone removes nothing.
    fn remove(&mut self, id: u64) -> bool {
        let pos = self.slot[id as usize];
        if pos == NO_SLOT {
            return false;
        }
        self.ids.swap_remove(pos as usize);
        if let Some(&moved) = self.ids.get(pos as usize) {
            self.slot[moved as usize] = pos;
        }
        self.slot[id as usize] = NO_SLOT;
        true
    }

    /// `amount` distinct members chosen uniformly at random.
    fn sample(&self, rng: &mut ChaCha8Rng, amount: usize) -> Vec<u64> {
        debug_assert!(amount <= self.ids.len());
        rand::seq::index::sample(rng, self.ids.len(), amount)
            .iter()
            .map(|i| self.ids[i])
            .collect()
    }
}

/// Simulation parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: ModelParams,
    pub total_arrivals: u64,
    pub seed: u64,
    /// Fraction of simulated time discarded before statistics start.
    pub warmup_fraction: f64,
    pub record_removal_times: bool,
}

impl SimConfig {
    pub fn new(params: ModelParams, total_arrivals: u64, seed: u64) -> Self {
        Self {
            params,
            total_arrivals,
            seed,
            warmup_fraction: 0.2,
            record_removal_times: false,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.total_arrivals < 1 {
            return Err(SimError::InvalidConfig(
                "total_arrivals must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(SimError::InvalidConfig(format!(
                "warmup_fraction must be in [0, 1), got {}",
                self.warmup_fraction
            )));
        }
        Ok(())
    }
}

/// Summary of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Mean tip pool size over post-warmup reveal-event samples.
    pub mean_pool_size: f64,
    pub pool_size_stddev: f64,
    /// Pool size after every reveal event, over the whole run.
    pub pool_size_series: Vec<(f64, u32)>,
    /// Post-warmup removal times (if recording was enabled).
    pub removal_times: Vec<f64>,
    pub arrivals_by_class: Vec<u64>,
}

impl SimResult {
    /// Pool size after the final event.
    pub fn final_pool_size(&self) -> u32 {
        self.pool_size_series.last().map(|&(_, s)| s).unwrap_or(0)
    }

    /// Step CDF of the recorded removal times.
    pub fn removal_cdf(&self) -> Result<EmpiricalCdf, SimError> {
        if self.removal_times.is_empty() {
            return Err(SimError::EmptyRemovalTimes);
        }
        Ok(EmpiricalCdf::from_samples(&self.removal_times))
    }
}

/// Fraction of recorded removal times `<= x`.
pub fn empirical_removal_cdf(result: &SimResult, x: f64) -> Result<f64, SimError> {
    Ok(result.removal_cdf()?.eval(x))
}

/// Decides how many parents the next issued message references.
///
/// The fixed default returns the class's own parent count; the adaptive
/// controller plugs in here.
pub trait ParentCountPolicy {
    fn parent_count(&mut self, class_index: usize, issue_time: f64, class_k: u32) -> u32;
}

/// Uses each class's configured parent count unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedParentPolicy;

impl ParentCountPolicy for FixedParentPolicy {
    fn parent_count(&mut self, _class_index: usize, _issue_time: f64, class_k: u32) -> u32 {
        class_k
    }
}

enum Event {
    /// A message becomes visible: enters the pool and removes its parents.
    Reveal { time: f64, msg: Message },
    /// A value message reaches the node and enters the quarantine pipeline.
    QuarantineArrive { time: f64, msg: Message },
    /// A value message's inclusion checkpoint; admission reveals it.
    QuarantineRelease { time: f64, msg: Message },
    /// The next Poisson arrival issues a message.
    Arrival { time: f64 },
}

impl Event {
    fn time(&self) -> f64 {
        match self {
            Event::Reveal { time, .. }
            | Event::QuarantineArrive { time, .. }
            | Event::QuarantineRelease { time, .. }
            | Event::Arrival { time } => *time,
        }
    }

    // Reveals sort before arrivals at equal timestamps so a new issuer sees
    // the maximal pool; ties beyond that break by message id.
    fn key(&self) -> (f64, u8, u64) {
        match self {
            Event::Reveal { time, msg } => (*time, 0, msg.id),
            Event::QuarantineRelease { time, msg } => (*time, 0, msg.id),
            Event::QuarantineArrive { time, msg } => (*time, 1, msg.id),
            Event::Arrival { time } => (*time, 2, u64::MAX),
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (t1, k1, i1) = self.key();
        let (t2, k2, i2) = other.key();
        t1.total_cmp(&t2).then(k1.cmp(&k2)).then(i1.cmp(&i2))
    }
}

struct QuarantineLane {
    pipeline: QuarantinePipeline,
    resolver: LikedWinsResolver,
    network_delay: f64,
}

struct Engine<'a> {
    config: &'a SimConfig,
    delays: Vec<f64>,
    parent_counts: Vec<u32>,
    cumulative_fractions: Vec<f64>,
    rng: ChaCha8Rng,
    events: BinaryHeap<Reverse<Event>>,
    pool: TipPool,
    reveal_times: Vec<f64>,
    series: Vec<(f64, u32)>,
    removals: Vec<(f64, f64)>,
    arrivals_by_class: Vec<u64>,
    issued: u64,
    revealed: u64,
    removed: u64,
    quarantine: Option<QuarantineLane>,
    last_time: f64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig, quarantine: Option<QuarantineLane>) -> Self {
        let classes = config.params.classes();
        let mut cumulative = 0.0;
        let cumulative_fractions = classes
            .iter()
            .map(|c| {
                cumulative += c.fraction();
                cumulative
            })
            .collect();
        let mut pool = TipPool::with_capacity(config.total_arrivals);
        let mut reveal_times = vec![f64::NAN; config.total_arrivals as usize + 1];
        reveal_times[GENESIS_ID as usize] = 0.0;
        pool.insert(GENESIS_ID);
        Self {
            config,
            delays: classes.iter().map(|c| c.delay()).collect(),
            parent_counts: classes.iter().map(|c| c.parent_count()).collect(),
            cumulative_fractions,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            events: BinaryHeap::new(),
            pool,
            reveal_times,
            series: vec![(0.0, 1)],
            removals: Vec::new(),
            arrivals_by_class: vec![0; classes.len()],
            issued: 0,
            revealed: 1,
            removed: 0,
            quarantine,
            last_time: 0.0,
        }
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        sample_interarrival(&mut self.rng, rate)
    }

    fn draw_class(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let last = self.cumulative_fractions.len() - 1;
        self.cumulative_fractions
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last)
    }

    fn run(mut self, policy: &mut dyn ParentCountPolicy) -> SimResult {
        let first = self.exponential(self.config.params.rate());
        self.events.push(Reverse(Event::Arrival { time: first }));
        while let Some(Reverse(event)) = self.events.pop() {
            self.last_time = event.time();
            match event {
                Event::Arrival { time } => self.handle_arrival(time, policy),
                Event::Reveal { time, msg } => self.reveal(time, msg),
                Event::QuarantineArrive { time, msg } => {
                    let lane = self.quarantine.as_mut().expect("lane exists");
                    let entry = lane
                        .pipeline
                        .on_arrival(TxId(msg.id), ConflictKey(msg.id), time)
                        .expect("value arrivals are unique and time-ordered");
                    let due = entry.inclusion_due();
                    self.events
                        .push(Reverse(Event::QuarantineRelease { time: due, msg }));
                }
                Event::QuarantineRelease { time, msg } => {
                    let lane = self.quarantine.as_mut().expect("lane exists");
                    let events = lane.pipeline.advance_to(time, &lane.resolver);
                    debug_assert!(
                        events.contains(&PipelineEvent::AdmittedDirect {
                            tx: TxId(msg.id),
                            at: time
                        }),
                        "conflict-free value message must be admitted directly at its checkpoint"
                    );
                    self.reveal(time, msg);
                }
            }
        }
        self.finish()
    }

    fn handle_arrival(&mut self, time: f64, policy: &mut dyn ParentCountPolicy) {
        self.issued += 1;
        let id = self.issued;
        let class_index = self.draw_class();
        self.arrivals_by_class[class_index] += 1;
        let requested = policy.parent_count(class_index, time, self.parent_counts[class_index]);
        let parent_ids = if self.pool.is_empty() {
            vec![GENESIS_ID]
        } else {
            let amount = (requested as usize).min(self.pool.len());
            self.pool.sample(&mut self.rng, amount)
        };
        let msg = Message {
            id,
            class_index,
            issue_time: time,
            reveal_time: time + self.delays[class_index],
            parent_ids,
        };
        match &self.quarantine {
            Some(lane) if class_index == 1 => {
                self.events.push(Reverse(Event::QuarantineArrive {
                    time: time + lane.network_delay,
                    msg,
                }));
            }
            _ => {
                self.events.push(Reverse(Event::Reveal {
                    time: msg.reveal_time,
                    msg,
                }));
            }
        }
        if self.issued < self.config.total_arrivals {
            let gap = self.exponential(self.config.params.rate());
            self.events
                .push(Reverse(Event::Arrival { time: time + gap }));
        }
    }

    fn reveal(&mut self, time: f64, msg: Message) {
        debug_assert!(msg.issue_time <= time);
        self.reveal_times[msg.id as usize] = time;
        self.pool.insert(msg.id);
        self.revealed += 1;
        for &parent in &msg.parent_ids {
            let parent_reveal = self.reveal_times[parent as usize];
            debug_assert!(
                parent_reveal <= msg.issue_time,
                "parent {parent} was not visible when message {} selected it",
                msg.id
            );
            if self.pool.remove(parent) {
                self.removed += 1;
                if self.config.record_removal_times {
                    self.removals.push((time, time - parent_reveal));
                }
            }
        }
        debug_assert_eq!(
            self.revealed - self.removed,
            self.pool.len() as u64,
            "revealed minus removed must equal the pool size"
        );
        self.series.push((time, self.pool.len() as u32));
    }

    fn finish(self) -> SimResult {
        let cutoff = self.config.warmup_fraction * self.last_time;
        let post: Vec<f64> = self
            .series
            .iter()
            .filter(|&&(t, _)| t >= cutoff)
            .map(|&(_, s)| s as f64)
            .collect();
        let (mean_pool_size, pool_size_stddev) = mean_and_stddev(&post);
        let removal_times = self
            .removals
            .into_iter()
            .filter(|&(t, _)| t >= cutoff)
            .map(|(_, d)| d)
            .collect();
        SimResult {
            mean_pool_size,
            pool_size_stddev,
            pool_size_series: self.series,
            removal_times,
            arrivals_by_class: self.arrivals_by_class,
        }
    }
}

/// Runs one simulation with fixed per-class parent counts.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult, SimError> {
    run_simulation_with_policy(config, &mut FixedParentPolicy)
}

/// Runs one simulation with a caller-supplied parent-count policy, consulted
/// once per issued message.
pub fn run_simulation_with_policy(
    config: &SimConfig,
    policy: &mut dyn ParentCountPolicy,
) -> Result<SimResult, SimError> {
    config.validate()?;
    Ok(Engine::new(config, None).run(policy))
}

/// Two-class run where the long-delay class is realized by the quarantine
/// pipeline instead of a fixed delay: a value message issued at `t` reaches
/// the node at `t + h`, spends `d_Q = d_2 - d_1` in quarantine, and is
/// revealed at its admission. With conflict-free traffic this reproduces
/// the fixed-delay simulation.
pub fn run_simulation_quarantined(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let classes = config.params.classes();
    if classes.len() != 2 {
        return Err(SimError::NotTwoClass(classes.len()));
    }
    let network_delay = classes[0].delay();
    let quarantine = classes[1].delay() - classes[0].delay();
    let lane = QuarantineLane {
        pipeline: QuarantinePipeline::new(quarantine)?,
        resolver: LikedWinsResolver,
        network_delay,
    };
    Ok(Engine::new(config, Some(lane)).run(&mut FixedParentPolicy))
}

/// The engine's interarrival sampler: inverse-transform exponential,
/// `-ln(1 - u) / rate` with `u` uniform in [0, 1).
pub fn sample_interarrival(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Seed of the `index`-th sweep point: the SplitMix64 stream of the base
/// seed.
pub fn sweep_point_seed(base_seed: u64, index: usize) -> u64 {
    splitmix64(base_seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn two_class_point(base: &SimConfig, p: f64, index: usize) -> Result<SimConfig, SimError> {
    let classes = base.params.classes();
    if classes.len() != 2 {
        return Err(SimError::NotTwoClass(classes.len()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::InvalidConfig(format!(
            "sweep fraction must be in [0, 1], got {p}"
        )));
    }
    let rebuilt = ModelParams::new(
        base.params.rate(),
        vec![
            crate::model::DelayClass::new(classes[0].delay(), classes[0].parent_count(), 1.0 - p)
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?,
            crate::model::DelayClass::new(classes[1].delay(), classes[1].parent_count(), p)
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?,
        ],
    )
    .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    Ok(SimConfig {
        params: rebuilt,
        seed: sweep_point_seed(base.seed, index),
        ..base.clone()
    })
}

/// Independent simulations over a list of value fractions, one per point,
/// with per-point seeds derived from the base seed. Points run in parallel;
/// results keep the input order.
pub fn sweep(base: &SimConfig, fractions: &[f64]) -> Result<Vec<(f64, SimResult)>, SimError> {
    let runs = sweep_with_policy(base, fractions, |_| FixedParentPolicy)?;
    Ok(runs.into_iter().map(|(p, result, _)| (p, result)).collect())
}

/// [`sweep`] with a fresh parent-count policy per point; returns each
/// point's policy for inspection.
pub fn sweep_with_policy<P, F>(
    base: &SimConfig,
    fractions: &[f64],
    make_policy: F,
) -> Result<Vec<(f64, SimResult, P)>, SimError>
where
    P: ParentCountPolicy + Send,
    F: Fn(usize) -> P + Sync,
{
    base.validate()?;
    let configs: Vec<SimConfig> = fractions
        .iter()
        .enumerate()
        .map(|(i, &p)| two_class_point(base, p, i))
        .collect::<Result<_, _>>()?;
    Ok(configs
        .par_iter()
        .enumerate()
        .map(|(i, config)| {
            let mut policy = make_policy(i);
            let result = Engine::new(config, None).run(&mut policy);
            (fractions[i], result, policy)
        })
        .collect())
}
