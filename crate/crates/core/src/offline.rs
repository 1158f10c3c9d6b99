//! Exact offline costs on small instances.
//!
//! The offline agent has `l` clusters of capacity `k` and no augmentation.
//! Costs depend only on which nodes share a cluster, so states are partitions
//! with unlabeled groups, and moving between two partitions costs `alpha`
//! times the nodes that must change group under the best matching of groups.

use std::collections::HashMap;

use crate::error::{BrpError, Result};
use crate::model::{min_migration_cost, Configuration, NodeId, Params, Request};

/// Default cap on the number of partitions enumerated.
pub const PARTITION_CAP: u128 = 100_000;
/// Largest partition count for which the full transition matrix is built.
pub const TRANSITION_CAP: usize = 4096;
/// Longest sequence the exhaustive oracle accepts.
pub const EXHAUSTIVE_MAX_LEN: usize = 8;
/// Largest partition count the exhaustive oracle accepts.
pub const EXHAUSTIVE_MAX_STATES: usize = 30;
/// Cap on the number of state sequences the exhaustive oracle walks.
pub const EXHAUSTIVE_MAX_SEQUENCES: u128 = 50_000_000;

/// `n! / ((k!)^l * l!)`: partitions of `n = k * l` nodes into `l` unlabeled
/// groups of `k`.
pub fn partition_count(k: usize, l: usize) -> u128 {
    // Product over groups of C(remaining - 1, k - 1): the group holding the
    // lowest remaining node picks its other k - 1 members.
    let mut total: u128 = 1;
    for g in 0..l {
        let remaining = (l - g) * k;
        total = total.saturating_mul(binomial(remaining as u128 - 1, k as u128 - 1));
    }
    total
}

fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Every partition of `0..n` into `l` groups of `k`, as canonical labelings:
/// groups are numbered in order of their lowest node.
#[derive(Debug, Clone)]
pub struct PartitionSpace {
    n: usize,
    k: usize,
    l: usize,
    labels: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// Row-major node-move counts, when small enough to store.
    moves: Option<Vec<u8>>,
}

impl PartitionSpace {
    pub fn new(k: usize, l: usize) -> Result<Self> {
        Self::with_cap(k, l, PARTITION_CAP)
    }

    pub fn with_cap(k: usize, l: usize, cap: u128) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(BrpError::InvalidParams("k and l must be positive".into()));
        }
        let n = k * l;
        if n > usize::from(u8::MAX) {
            return Err(BrpError::TooLarge {
                what: "node count",
                count: n as u128,
                cap: u128::from(u8::MAX),
            });
        }
        let count = partition_count(k, l);
        if count > cap {
            return Err(BrpError::TooLarge {
                what: "partition count",
                count,
                cap,
            });
        }
        let mut labels = Vec::with_capacity(count as usize);
        let mut current = vec![0u8; n];
        let mut sizes = vec![0usize; l];
        enumerate(0, 0, k, l, &mut current, &mut sizes, &mut labels);
        let index = labels.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut space = Self {
            n,
            k,
            l,
            labels,
            index,
            moves: None,
        };
        let p = space.len();
        if p <= TRANSITION_CAP {
            let mut table = vec![0u8; p * p];
            for i in 0..p {
                for j in i + 1..p {
                    let m = space.compute_moves(i, j) as u8;
                    table[i * p + j] = m;
                    table[j * p + i] = m;
                }
            }
            space.moves = Some(table);
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Group label of every node in partition `i`.
    pub fn labels(&self, i: usize) -> &[u8] {
        &self.labels[i]
    }

    pub fn groups(&self, i: usize) -> Vec<Vec<NodeId>> {
        let mut groups = vec![Vec::new(); self.l];
        for (node, &g) in self.labels[i].iter().enumerate() {
            groups[g as usize].push(node);
        }
        groups
    }

    pub fn configuration(&self, i: usize) -> Configuration {
        let assignment = self.labels[i].iter().map(|&g| g as usize).collect();
        Configuration::from_assignment(assignment, self.l, self.k)
            .expect("partitions fill every group exactly")
    }

    /// Index of the partition `config` induces. Fails unless `config` is an
    /// offline-shaped placement of the same nodes.
    pub fn index_of(&self, config: &Configuration) -> Result<usize> {
        if config.n() != self.n || config.capacity() != self.k || config.cluster_count() != self.l
        {
            return Err(BrpError::ShapeMismatch(format!(
                "expected {} nodes in {} clusters of {}, got {} in {} of {}",
                self.n,
                self.l,
                self.k,
                config.n(),
                config.cluster_count(),
                config.capacity()
            )));
        }
        let mut relabel = vec![u8::MAX; self.l];
        let mut next = 0u8;
        let key: Vec<u8> = config
            .assignment()
            .iter()
            .map(|&c| {
                if relabel[c] == u8::MAX {
                    relabel[c] = next;
                    next += 1;
                }
                relabel[c]
            })
            .collect();
        Ok(self.index[&key])
    }

    /// Nodes that must change cluster to go from partition `i` to `j`.
    pub fn moves(&self, i: usize, j: usize) -> usize {
        match &self.moves {
            Some(table) => usize::from(table[i * self.len() + j]),
            None => self.compute_moves(i, j),
        }
    }

    fn compute_moves(&self, i: usize, j: usize) -> usize {
        let l = self.l;
        let mut overlap = vec![vec![0usize; l]; l];
        for (&a, &b) in self.labels[i].iter().zip(&self.labels[j]) {
            overlap[a as usize][b as usize] += 1;
        }
        // Best matching of groups by subset DP over the groups of `j`.
        let mut best = vec![usize::MAX; 1 << l];
        best[0] = 0;
        for mask in 0usize..1 << l {
            if best[mask] == usize::MAX {
                continue;
            }
            let a = mask.count_ones() as usize;
            if a == l {
                continue;
            }
            for b in 0..l {
                if mask >> b & 1 == 0 {
                    let next = mask | 1 << b;
                    let value = best[mask] + overlap[a][b];
                    if best[next] == usize::MAX || value > best[next] {
                        best[next] = value;
                    }
                }
            }
        }
        self.n - best[(1 << l) - 1]
    }

    /// 1 if `request` crosses groups in partition `i`, else 0.
    pub fn serve_cost(&self, i: usize, request: &Request) -> u64 {
        let (u, v) = request.pair();
        u64::from(self.labels[i][u] != self.labels[i][v])
    }

    fn require_matrix(&self) -> Result<()> {
        if self.moves.is_none() {
            return Err(BrpError::TooLarge {
                what: "transition matrix states",
                count: self.len() as u128,
                cap: TRANSITION_CAP as u128,
            });
        }
        Ok(())
    }
}

fn enumerate(
    node: usize,
    used: usize,
    k: usize,
    l: usize,
    current: &mut Vec<u8>,
    sizes: &mut Vec<usize>,
    out: &mut Vec<Vec<u8>>,
) {
    if node == current.len() {
        out.push(current.clone());
        return;
    }
    for g in 0..(used + 1).min(l) {
        if sizes[g] == k {
            continue;
        }
        current[node] = g as u8;
        sizes[g] += 1;
        enumerate(node + 1, used.max(g + 1), k, l, current, sizes, out);
        sizes[g] -= 1;
    }
}

/// The spec-level name for building the state space.
pub fn enumerate_partitions(n: usize, k: usize, l: usize) -> Result<PartitionSpace> {
    if n != k * l {
        return Err(BrpError::InvalidParams(format!("n={n} is not k*l={}", k * l)));
    }
    PartitionSpace::new(k, l)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfflineSolution {
    pub cost: u64,
    /// `schedule[t]` is the partition serving the `t`-th request.
    pub schedule: Vec<Configuration>,
}

fn check_requests(requests: &[Request], n: usize) -> Result<()> {
    requests.iter().try_for_each(|r| r.validate(n))
}

/// Minimum total cost over all offline schedules, by value iteration over
/// partition classes.
pub fn optimal_cost(
    requests: &[Request],
    params: &Params,
    initial: &Configuration,
) -> Result<OfflineSolution> {
    let space = PartitionSpace::new(params.k, params.l)?;
    optimal_cost_in(&space, requests, params.alpha, initial)
}

/// As [`optimal_cost`], reusing a prebuilt space.
pub fn optimal_cost_in(
    space: &PartitionSpace,
    requests: &[Request],
    alpha: u64,
    initial: &Configuration,
) -> Result<OfflineSolution> {
    check_requests(requests, space.n())?;
    space.require_matrix()?;
    let p = space.len();
    let start = space.index_of(initial)?;
    let mut value: Vec<u64> = (0..p).map(|s| if s == start { 0 } else { u64::MAX }).collect();
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(requests.len());

    for request in requests {
        let mut next = vec![u64::MAX; p];
        let mut parent = vec![0u32; p];
        for (s, slot) in next.iter_mut().enumerate() {
            for (prev, &v) in value.iter().enumerate() {
                if v == u64::MAX {
                    continue;
                }
                let c = v + alpha * space.moves(prev, s) as u64;
                if c < *slot {
                    *slot = c;
                    parent[s] = prev as u32;
                }
            }
            *slot += space.serve_cost(s, request);
        }
        value = next;
        parents.push(parent);
    }

    let (mut state, &cost) = value
        .iter()
        .enumerate()
        .min_by_key(|&(s, &v)| (v, s))
        .expect("space is non-empty");
    let mut schedule = vec![space.configuration(state); requests.len()];
    for t in (0..requests.len()).rev() {
        schedule[t] = space.configuration(state);
        state = parents[t][state] as usize;
    }
    Ok(OfflineSolution { cost, schedule })
}

/// Best single partition: migrate once before the first request, then serve
/// everything from it.
pub fn static_optimal(
    requests: &[Request],
    params: &Params,
    initial: &Configuration,
) -> Result<(Configuration, u64)> {
    let space = PartitionSpace::new(params.k, params.l)?;
    check_requests(requests, space.n())?;
    let start = space.index_of(initial)?;
    let (best, cost) = (0..space.len())
        .map(|s| {
            let serve: u64 = requests.iter().map(|r| space.serve_cost(s, r)).sum();
            (s, params.alpha * space.moves(start, s) as u64 + serve)
        })
        .min_by_key(|&(s, c)| (c, s))
        .expect("space is non-empty");
    Ok((space.configuration(best), cost))
}

/// Brute force over every state sequence. Transition costs come from
/// [`min_migration_cost`] rather than the partition space's own matching.
pub fn exhaustive_optimal(
    requests: &[Request],
    params: &Params,
    initial: &Configuration,
) -> Result<u64> {
    if requests.len() > EXHAUSTIVE_MAX_LEN {
        return Err(BrpError::TooLarge {
            what: "sequence length",
            count: requests.len() as u128,
            cap: EXHAUSTIVE_MAX_LEN as u128,
        });
    }
    let count = partition_count(params.k, params.l);
    if count > EXHAUSTIVE_MAX_STATES as u128 {
        return Err(BrpError::TooLarge {
            what: "partition count",
            count,
            cap: EXHAUSTIVE_MAX_STATES as u128,
        });
    }
    let sequences = count.saturating_pow(requests.len() as u32);
    if sequences > EXHAUSTIVE_MAX_SEQUENCES {
        return Err(BrpError::TooLarge {
            what: "state sequences",
            count: sequences,
            cap: EXHAUSTIVE_MAX_SEQUENCES,
        });
    }
    let space = PartitionSpace::new(params.k, params.l)?;
    check_requests(requests, space.n())?;
    let start = space.index_of(initial)?;
    let configs: Vec<Configuration> = (0..space.len()).map(|s| space.configuration(s)).collect();
    let p = configs.len();
    let mut transition = vec![vec![0u64; p]; p];
    for i in 0..p {
        for j in 0..p {
            transition[i][j] = min_migration_cost(&configs[i], &configs[j], params.alpha)?;
        }
    }
    let serve: Vec<Vec<u64>> = configs
        .iter()
        .map(|c| requests.iter().map(|r| c.serve_cost(r)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    // Odometer over sequences; every sequence is costed from scratch.
    let len = requests.len();
    let mut seq = vec![0usize; len];
    let mut best = u64::MAX;
    loop {
        let mut cost = 0;
        let mut prev = start;
        for (t, &s) in seq.iter().enumerate() {
            cost += transition[prev][s] + serve[s][t];
            prev = s;
        }
        best = best.min(cost);
        let mut pos = 0;
        while pos < len {
            seq[pos] += 1;
            if seq[pos] < p {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
        if pos == len {
            break;
        }
    }
    Ok(best)
}

/// Costs of the three comparison schedules for a k=2 phase profile: never
/// move, move once at the start, move at every phase.
pub fn reference_strategies_k2(profile: &[u64], alpha: u64) -> Result<(u64, u64, u64)> {
    if profile.is_empty() {
        return Err(BrpError::MalformedProfile("no phases".into()));
    }
    if let Some(p) = profile.iter().position(|&w| w == 0) {
        return Err(BrpError::MalformedProfile(format!("phase {} has no requests", p + 1)));
    }
    let odd: u64 = profile.iter().step_by(2).sum();
    let even: u64 = profile.iter().skip(1).step_by(2).sum();
    Ok((odd, even + 2 * alpha, 2 * alpha * profile.len() as u64))
}
