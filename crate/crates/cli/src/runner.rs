//! Builds algorithms and sources from a spec and runs them under audit.

use std::cell::RefCell;
use std::collections::BTreeMap;

use brp_core::adversaries::{
    order_preserving_costs, parse_trace, K2Phase, PagingReduction, PlantedPartition, RandomPairs,
    Ring, Theorem2, Trace,
};
use brp_core::baseline::ThresholdSwap;
use brp_core::offline::reference_strategies_k2;
use brp_core::{
    run, Configuration, Crep, Greedy, Move, NodeId, NullAlgorithm, OnlineAlgorithm, Params, Request,
    RequestSource, Result, RunOptions, Transcript,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::spec::{AlgSpec, RunSpec, SourceSpec};

pub enum Algorithm {
    Crep(Box<Crep>),
    Greedy(Greedy),
    Threshold(ThresholdSwap),
    Null(NullAlgorithm),
}

impl Algorithm {
    /// The algorithm and the configuration the online side starts from.
    pub fn build(spec: &RunSpec, initial: &Configuration) -> Result<(Self, Configuration)> {
        let params = &spec.params;
        Ok(match spec.alg {
            AlgSpec::Crep => {
                let crep = Crep::new(params, initial)?;
                let start = crep.configuration();
                (Self::Crep(Box::new(crep)), start)
            }
            AlgSpec::Greedy { lambda } => {
                (Self::Greedy(Greedy::new(params, initial, lambda)?), initial.clone())
            }
            AlgSpec::Threshold { tau } => {
                (Self::Threshold(ThresholdSwap::new(params, initial, tau)?), initial.clone())
            }
            AlgSpec::Null => (Self::Null(NullAlgorithm), initial.clone()),
        })
    }

    fn inner(&self) -> &dyn OnlineAlgorithm {
        match self {
            Self::Crep(a) => a.as_ref(),
            Self::Greedy(a) => a,
            Self::Threshold(a) => a,
            Self::Null(a) => a,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn OnlineAlgorithm {
        match self {
            Self::Crep(a) => a.as_mut(),
            Self::Greedy(a) => a,
            Self::Threshold(a) => a,
            Self::Null(a) => a,
        }
    }

    /// Named invariant checks for the current state.
    pub fn checks(&self) -> Vec<(&'static str, std::result::Result<(), String>)> {
        match self {
            Self::Crep(c) => {
                let pending = c.pending_merge();
                vec![
                    ("structure", c.check_structure()),
                    ("costs", c.check_costs()),
                    ("epoch", c.check_epoch()),
                    (
                        "no-cascade",
                        if pending.is_empty() {
                            Ok(())
                        } else {
                            Err(format!("merge set {pending:?} left unmerged"))
                        },
                    ),
                ]
            }
            Self::Greedy(g) => vec![("counters", g.check())],
            Self::Threshold(_) | Self::Null(_) => Vec::new(),
        }
    }

    fn details(&self) -> Value {
        match self {
            Self::Crep(c) => json!({ "epochs": c.epochs().len() }),
            Self::Greedy(g) => json!({ "swaps": g.swaps(), "threshold": g.threshold() }),
            Self::Threshold(_) | Self::Null(_) => json!({}),
        }
    }
}

impl OnlineAlgorithm for Algorithm {
    fn name(&self) -> &str {
        self.inner().name()
    }

    fn before_serve(&mut self, config: &Configuration, request: &Request) -> Result<Vec<Move>> {
        self.inner_mut().before_serve(config, request)
    }

    fn after_serve(&mut self, config: &Configuration, request: &Request) -> Result<Vec<Move>> {
        self.inner_mut().after_serve(config, request)
    }

    fn dump_state(&self) -> String {
        self.inner().dump_state()
    }
}

pub enum Source {
    Random(RandomPairs),
    Planted(PlantedPartition),
    K2(K2Phase),
    Theorem2(Theorem2),
    Ring(Ring),
    Paging(PagingReduction, Vec<NodeId>),
    Trace(Trace),
}

impl Source {
    /// The source and the starting placement it wants.
    pub fn build(spec: &RunSpec) -> Result<(Self, Configuration)> {
        let p = &spec.params;
        let blocks = || Configuration::initial(&spec.offline_params());
        Ok(match &spec.source {
            SourceSpec::RandomPairs => (Self::Random(RandomPairs::new(spec.seed, p.n, spec.steps)?), blocks()?),
            SourceSpec::Planted { p_in, p_out } => (
                Self::Planted(PlantedPartition::new(spec.seed, p, *p_in, *p_out, spec.steps)?),
                blocks()?,
            ),
            SourceSpec::K2Phase { phases } => (Self::K2(K2Phase::new(*phases)?), blocks()?),
            SourceSpec::Theorem2 => {
                let adversary = Theorem2::new(p.k, p.alpha)?;
                let start = adversary.initial_placement();
                (Self::Theorem2(adversary), start)
            }
            SourceSpec::Ring => (Self::Ring(Ring::new(p.n)?), blocks()?),
            SourceSpec::Paging { pages } => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                let items: Vec<NodeId> = (0..*pages).map(|_| rng.random_range(0..p.k)).collect();
                let adversary = PagingReduction::new(p.k, p.alpha, items.clone())?;
                let start = adversary.initial_placement();
                (Self::Paging(adversary, items), start)
            }
            SourceSpec::Trace { path } => (Self::Trace(parse_trace(path, p.n)?), blocks()?),
        })
    }

    fn details(&self, transcript: &Transcript, params: &Params) -> Value {
        match self {
            Self::Random(_) | Self::Trace(_) => json!({}),
            Self::Planted(s) => json!({ "groups": s.groups() }),
            Self::K2(s) => {
                let refs = reference_strategies_k2(s.profile(), params.alpha).ok().map(|(never, once, each)| {
                    json!({ "never_move": never, "move_first": once, "move_every_phase": each })
                });
                json!({ "profile": s.profile(), "completed": s.completed(), "reference_costs": refs })
            }
            Self::Theorem2(s) => json!({
                "profile": s.profile(),
                "drops_first": s.drops_first(),
                "finished": s.finished(),
            }),
            Self::Ring(_) => {
                let costs = order_preserving_costs(&transcript.requests(), params.n, params.k);
                let t = transcript.steps.len() as u64;
                let bound = num_rational::Ratio::new(t + params.alpha * (params.n * params.k) as u64, params.k as u64);
                json!({
                    "order_preserving_costs": costs,
                    "offline_upper_bound": format!("{}/{}", bound.numer(), bound.denom()),
                })
            }
            Self::Paging(s, items) => json!({
                "pages": items,
                "dummy": s.dummy(),
                "expected_requests": PagingReduction::expected_len(items.len(), params.alpha),
            }),
        }
    }
}

impl RequestSource for Source {
    fn next_request(&mut self, online: &Configuration) -> Result<Option<Request>> {
        match self {
            Self::Random(s) => s.next_request(online),
            Self::Planted(s) => s.next_request(online),
            Self::K2(s) => s.next_request(online),
            Self::Theorem2(s) => s.next_request(online),
            Self::Ring(s) => s.next_request(online),
            Self::Paging(s, _) => s.next_request(online),
            Self::Trace(s) => s.next_request(online),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InvariantTally {
    pub checked: u64,
    pub failures: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_step: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_message: Option<String>,
    #[serde(skip)]
    pub first_dump: Option<String>,
}

/// State corruption applied right after the algorithm handles a given step.
pub type Fault = (u64, Box<dyn FnMut(&mut Algorithm)>);

/// Wraps an algorithm and records every invariant check after every step.
pub struct Audited {
    pub alg: Algorithm,
    step: u64,
    fault: Option<Fault>,
    tallies: RefCell<BTreeMap<&'static str, InvariantTally>>,
}

impl Audited {
    pub fn new(alg: Algorithm, fault: Option<Fault>) -> Self {
        let tallies = alg.checks().into_iter().map(|(name, _)| (name, InvariantTally::default())).collect();
        Self { alg, step: 0, fault, tallies: RefCell::new(tallies) }
    }

    pub fn tallies(&self) -> BTreeMap<&'static str, InvariantTally> {
        self.tallies.borrow().clone()
    }
}

impl OnlineAlgorithm for Audited {
    fn name(&self) -> &str {
        self.alg.name()
    }

    fn before_serve(&mut self, config: &Configuration, request: &Request) -> Result<Vec<Move>> {
        self.step += 1;
        let moves = self.alg.before_serve(config, request)?;
        if let Some((at, corrupt)) = &mut self.fault {
            if *at == self.step {
                corrupt(&mut self.alg);
            }
        }
        Ok(moves)
    }

    fn after_serve(&mut self, config: &Configuration, request: &Request) -> Result<Vec<Move>> {
        self.alg.after_serve(config, request)
    }

    fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut tallies = self.tallies.borrow_mut();
        for (name, result) in self.alg.checks() {
            let tally = tallies.entry(name).or_default();
            tally.checked += 1;
            if let Err(message) = result {
                tally.failures += 1;
                if tally.first_step.is_none() {
                    tally.first_step = Some(self.step);
                    tally.first_message = Some(message);
                    tally.first_dump = Some(self.alg.dump_state());
                }
            }
        }
        Ok(())
    }
}

pub struct Execution {
    pub spec: RunSpec,
    pub transcript: Transcript,
    /// The offline oracle's starting placement.
    pub offline_initial: Configuration,
    pub invariants: BTreeMap<&'static str, InvariantTally>,
    pub details: Value,
}

impl Execution {
    pub fn invariants_hold(&self) -> bool {
        self.invariants.values().all(|t| t.failures == 0)
    }
}

pub fn execute(spec: &RunSpec, fault: Option<Fault>) -> Result<Execution> {
    let (mut source, initial) = Source::build(spec)?;
    let (alg, start) = Algorithm::build(spec, &initial)?;
    let mut audited = Audited::new(alg, fault);
    let transcript = run(&mut audited, &mut source, spec.params, start, RunOptions::checked(spec.steps))?;
    let mut details = source.details(&transcript, &spec.params);
    if let (Value::Object(map), Value::Object(extra)) = (&mut details, audited.alg.details()) {
        map.extend(extra);
    }
    Ok(Execution {
        spec: spec.clone(),
        transcript,
        offline_initial: initial,
        invariants: audited.tallies(),
        details,
    })
}
