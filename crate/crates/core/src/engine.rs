//! Drives one online algorithm against one request source and records what
//! happened.
//!
//! Each step: the source picks a request from the online configuration, the
//! algorithm may migrate nodes, the request is served, and the algorithm may
//! migrate again before the next request is chosen. Migrations in both
//! windows are charged to the step.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_rational::Ratio;

use crate::error::{BrpError, Result};
use crate::model::{Configuration, CostLedger, Move, Params, Request};

/// Full configuration copies are kept every this many steps.
pub const CHECKPOINT_INTERVAL: u64 = 64;

pub trait OnlineAlgorithm {
    fn name(&self) -> &str;

    /// Moves to apply before `request` is served.
    fn before_serve(&mut self, config: &Configuration, request: &Request) -> Result<Vec<Move>>;

    /// Moves to apply after `request` was served, before the next request is
    /// drawn. `config` already reflects the pre-serve moves.
    fn after_serve(&mut self, _config: &Configuration, _request: &Request) -> Result<Vec<Move>> {
        Ok(Vec::new())
    }

    /// Algorithm-specific invariants, checked after every step when the run
    /// asks for it.
    fn check_invariants(&self) -> std::result::Result<(), String> {
        Ok(())
    }

    fn dump_state(&self) -> String {
        String::new()
    }
}

pub trait RequestSource {
    /// The next request, or `None` at end of stream. Adaptive sources may
    /// inspect the online configuration; oblivious ones ignore it.
    fn next_request(&mut self, online: &Configuration) -> Result<Option<Request>>;
}

impl<A: OnlineAlgorithm + ?Sized> OnlineAlgorithm for Box<A> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn before_serve(&mut self, config: &Configuration, request: &Request) -> Result<Vec<Move>> {
        (**self).before_serve(config, request)
    }
    fn after_serve(&mut self, config: &Configuration, request: &Request) -> Result<Vec<Move>> {
        (**self).after_serve(config, request)
    }
    fn check_invariants(&self) -> std::result::Result<(), String> {
        (**self).check_invariants()
    }
    fn dump_state(&self) -> String {
        (**self).dump_state()
    }
}

impl<S: RequestSource + ?Sized> RequestSource for Box<S> {
    fn next_request(&mut self, online: &Configuration) -> Result<Option<Request>> {
        (**self).next_request(online)
    }
}

/// Never migrates.
#[derive(Debug, Default, Clone)]
pub struct NullAlgorithm;

impl OnlineAlgorithm for NullAlgorithm {
    fn name(&self) -> &str {
        "null"
    }
    fn before_serve(&mut self, _: &Configuration, _: &Request) -> Result<Vec<Move>> {
        Ok(Vec::new())
    }
}

/// Replays a fixed list of requests, ignoring the online configuration.
#[derive(Debug, Clone)]
pub struct FixedSequence {
    requests: Vec<Request>,
    cursor: usize,
}

impl FixedSequence {
    pub fn new(requests: Vec<Request>) -> Self {
        Self {
            requests,
            cursor: 0,
        }
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let requests = pairs
            .iter()
            .map(|&(u, v)| Request::new(u, v))
            .collect::<Result<_>>()?;
        Ok(Self::new(requests))
    }
}

impl RequestSource for FixedSequence {
    fn next_request(&mut self, _: &Configuration) -> Result<Option<Request>> {
        let next = self.requests.get(self.cursor).copied();
        self.cursor += usize::from(next.is_some());
        Ok(next)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub max_steps: u64,
    pub check_invariants: bool,
}

impl RunOptions {
    pub fn steps(max_steps: u64) -> Self {
        Self {
            max_steps,
            check_invariants: false,
        }
    }

    pub fn checked(max_steps: u64) -> Self {
        Self {
            max_steps,
            check_invariants: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub t: u64,
    pub request: Request,
    pub before: Vec<Move>,
    pub after: Vec<Move>,
    pub comm: u64,
    pub mig: u64,
    /// Canonical digest of the configuration after the step.
    pub digest: u64,
}

impl StepRecord {
    /// `t,u,v,moves,comm,mig` where `moves` is `pre|post` and each side is a
    /// `;`-separated list of `node>cluster`.
    pub fn to_line(&self) -> String {
        let side = |moves: &[Move]| {
            moves
                .iter()
                .map(|m| format!("{}>{}", m.node, m.to))
                .join(";")
        };
        format!(
            "{},{},{},{}|{},{},{}",
            self.t,
            self.request.u,
            self.request.v,
            side(&self.before),
            side(&self.after),
            self.comm,
            self.mig
        )
    }
}

/// One parsed line of the step-record format. Digests are not serialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepLine {
    pub t: u64,
    pub u: usize,
    pub v: usize,
    pub before: Vec<Move>,
    pub after: Vec<Move>,
    pub comm: u64,
    pub mig: u64,
}

impl FromStr for StepLine {
    type Err = BrpError;

    fn from_str(line: &str) -> Result<Self> {
        let err = |message: String| BrpError::Parse { line: 0, message };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, got {}", fields.len())));
        }
        let num = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| err(format!("bad integer {s:?}: {e}")))
        };
        let (pre, post) = fields[3]
            .split_once('|')
            .ok_or_else(|| err("moves field lacks '|'".into()))?;
        let side = |s: &str| -> Result<Vec<Move>> {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split(';')
                .map(|entry| {
                    let (node, to) = entry
                        .split_once('>')
                        .ok_or_else(|| err(format!("bad move {entry:?}")))?;
                    Ok(Move::new(num(node)? as usize, num(to)? as usize))
                })
                .collect()
        };
        Ok(StepLine {
            t: num(fields[0])?,
            u: num(fields[1])? as usize,
            v: num(fields[2])? as usize,
            before: side(pre)?,
            after: side(post)?,
            comm: num(fields[4])?,
            mig: num(fields[5])?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Transcript {
    pub params: Params,
    pub initial: Configuration,
    pub steps: Vec<StepRecord>,
    pub checkpoints: Vec<(u64, Configuration)>,
    pub ledger: CostLedger,
    pub final_config: Configuration,
}

impl Transcript {
    pub fn requests(&self) -> Vec<Request> {
        self.steps.iter().map(|s| s.request).collect()
    }

    pub fn total(&self) -> u64 {
        self.ledger.total()
    }

    /// Step records in the line-delimited format, one per line.
    pub fn to_lines(&self) -> String {
        self.steps
            .iter()
            .map(|s| s.to_line() + "\n")
            .collect()
    }

    /// Re-applies the recorded moves to the initial configuration and
    /// recomputes every charge.
    pub fn replay(&self) -> Result<CostLedger> {
        let alpha = self.params.alpha;
        let mut config = self.initial.clone();
        let mut ledger = CostLedger::default();
        for step in &self.steps {
            let (next, pre) = config.apply_moves(&step.before, alpha)?;
            let comm = next.serve_cost(&step.request)?;
            let (next, post) = next.apply_moves(&step.after, alpha)?;
            ledger.record(comm, pre + post);
            config = next;
        }
        Ok(ledger)
    }
}

/// Runs `alg` against `src` from `initial` for at most `options.max_steps`
/// requests.
pub fn run(
    alg: &mut dyn OnlineAlgorithm,
    src: &mut dyn RequestSource,
    params: Params,
    initial: Configuration,
    options: RunOptions,
) -> Result<Transcript> {
    let alpha = params.alpha;
    let mut config = initial.clone();
    let mut ledger = CostLedger::default();
    let mut steps = Vec::new();
    let mut checkpoints = vec![(0, initial.clone())];

    for t in 1..=options.max_steps {
        let Some(mut request) = src.next_request(&config)? else {
            break;
        };
        request.t = t;
        request.validate(config.n())?;

        let before = alg.before_serve(&config, &request)?;
        let (served_in, pre) = config.apply_moves(&before, alpha)?;
        let comm = served_in.serve_cost(&request)?;
        let after = alg.after_serve(&served_in, &request)?;
        let (next, post) = served_in.apply_moves(&after, alpha)?;
        config = next;
        ledger.record(comm, pre + post);

        if options.check_invariants {
            alg.check_invariants().map_err(|message| BrpError::Invariant {
                step: t,
                message,
                dump: alg.dump_state(),
            })?;
        }

        steps.push(StepRecord {
            t,
            request,
            before,
            after,
            comm,
            mig: pre + post,
            digest: config.digest(),
        });
        if t % CHECKPOINT_INTERVAL == 0 {
            checkpoints.push((t, config.clone()));
        }
    }

    Ok(Transcript {
        params,
        initial,
        steps,
        checkpoints,
        ledger,
        final_config: config,
    })
}

/// Online cost over offline cost, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompetitiveRatio {
    Finite(Ratio<u64>),
    /// Positive online cost against zero offline cost.
    Infinite,
    /// Both costs zero.
    Undefined,
}

impl CompetitiveRatio {
    pub fn as_f64(&self) -> f64 {
        match self {
            Self::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Self::Infinite => f64::INFINITY,
            Self::Undefined => f64::NAN,
        }
    }

    /// Exact `self >= bound`; infinite ratios exceed every bound.
    pub fn at_least(&self, bound: Ratio<u64>) -> bool {
        match self {
            Self::Finite(r) => *r >= bound,
            Self::Infinite => true,
            Self::Undefined => false,
        }
    }

    /// Exact `self <= bound`; an undefined ratio (0/0) counts as within.
    pub fn at_most(&self, bound: Ratio<u64>) -> bool {
        match self {
            Self::Finite(r) => *r <= bound,
            Self::Infinite => false,
            Self::Undefined => true,
        }
    }
}

impl fmt::Display for CompetitiveRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Self::Infinite => f.write_str("inf"),
            Self::Undefined => f.write_str("undefined"),
        }
    }
}

pub fn ratio(online_total: u64, offline_total: u64) -> CompetitiveRatio {
    match (online_total, offline_total) {
        (0, 0) => CompetitiveRatio::Undefined,
        (_, 0) => CompetitiveRatio::Infinite,
        (on, off) => CompetitiveRatio::Finite(Ratio::new(on, off)),
    }
}
