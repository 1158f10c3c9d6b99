//! Greedy rematching for clusters of two.
//!
//! Every cluster counts the remote requests its nodes take part in. Once a
//! cluster `C1` reaches `lambda * alpha`, it is matched with the cluster it
//! talked to most, the heaviest pair across the two is collocated by one swap,
//! and the counters of both clusters start over.

use std::collections::BTreeMap;

use crate::engine::OnlineAlgorithm;
use crate::error::{BrpError, Result};
use crate::model::{ClusterId, Configuration, Move, NodeId, Params, Request};

pub const DEFAULT_LAMBDA: u64 = 3;

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone)]
pub struct Greedy {
    lambda: u64,
    alpha: u64,
    assignment: Vec<ClusterId>,
    members: Vec<Vec<NodeId>>,
    outgoing: Vec<u64>,
    pairs: BTreeMap<(NodeId, NodeId), u64>,
    swaps: u64,
}

impl Greedy {
    pub fn new(params: &Params, initial: &Configuration, lambda: u64) -> Result<Self> {
        if lambda == 0 {
            return Err(BrpError::InvalidParams("lambda must be positive".into()));
        }
        if params.k != 2 || initial.capacity() != 2 {
            return Err(BrpError::GeometryError(format!(
                "greedy needs clusters of two, got k={} and capacity {}",
                params.k,
                initial.capacity()
            )));
        }
        if initial.n() != params.n || initial.cluster_count() != params.l {
            return Err(BrpError::GeometryError(format!(
                "greedy needs {} nodes in {} clusters",
                params.n, params.l
            )));
        }
        let members: Vec<Vec<NodeId>> = (0..params.l).map(|c| initial.members(c)).collect();
        Ok(Self {
            lambda,
            alpha: params.alpha,
            assignment: initial.assignment().to_vec(),
            members,
            outgoing: vec![0; params.l],
            pairs: BTreeMap::new(),
            swaps: 0,
        })
    }

    pub fn threshold(&self) -> u64 {
        self.lambda * self.alpha
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    pub fn outgoing(&self) -> &[u64] {
        &self.outgoing
    }

    pub fn pair_count(&self, a: NodeId, b: NodeId) -> u64 {
        self.pairs.get(&key(a, b)).copied().unwrap_or(0)
    }

    pub fn swaps(&self) -> u64 {
        self.swaps
    }

    /// Records a served request and returns the swaps it triggers. Intra-cluster
    /// requests change nothing.
    pub fn handle_request(&mut self, request: &Request) -> Result<Vec<Move>> {
        request.validate(self.assignment.len())?;
        let (u, v) = request.pair();
        let (cu, cv) = (self.assignment[u], self.assignment[v]);
        if cu == cv {
            return Ok(Vec::new());
        }
        self.outgoing[cu] += 1;
        self.outgoing[cv] += 1;
        *self.pairs.entry(key(u, v)).or_default() += 1;

        let mut moves = Vec::new();
        while let Some(c1) = (0..self.outgoing.len()).find(|&c| self.outgoing[c] >= self.threshold())
        {
            moves.extend(self.rematch(c1));
        }
        Ok(moves)
    }

    fn cluster_pair_sum(&self, c1: ClusterId, c2: ClusterId) -> u64 {
        let mut sum = 0;
        for &x in &self.members[c1] {
            for &y in &self.members[c2] {
                sum += self.pair_count(x, y);
            }
        }
        sum
    }

    fn rematch(&mut self, c1: ClusterId) -> Vec<Move> {
        let best = (0..self.members.len())
            .filter(|&c| c != c1)
            .map(|c| (self.cluster_pair_sum(c1, c), c))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let Some((sum, c2)) = best.filter(|&(sum, _)| sum > 0) else {
            // Every request that filled the counter involved pairs that were
            // since reset by other swaps; nothing left to act on.
            self.outgoing[c1] = 0;
            return Vec::new();
        };
        debug_assert!(sum > 0);

        let mut heaviest: Option<(u64, NodeId, NodeId)> = None;
        for &x in &self.members[c1] {
            for &y in &self.members[c2] {
                let count = self.pair_count(x, y);
                let better = heaviest.is_none_or(|(c, bx, by)| {
                    count > c || (count == c && (x, y) < (bx, by))
                });
                if better {
                    heaviest = Some((count, x, y));
                }
            }
        }
        let (_, x, y) = heaviest.expect("both clusters are non-empty");
        let mate = self.members[c1]
            .iter()
            .copied()
            .find(|&m| m != x)
            .expect("clusters hold two nodes");

        let touched: Vec<NodeId> = self.members[c1]
            .iter()
            .chain(&self.members[c2])
            .copied()
            .collect();
        self.pairs
            .retain(|&(a, b), _| !touched.contains(&a) && !touched.contains(&b));
        self.outgoing[c1] = 0;
        self.outgoing[c2] = 0;

        self.assignment[y] = c1;
        self.assignment[mate] = c2;
        self.members[c1] = vec![x.min(y), x.max(y)];
        let other = self.members[c2].iter().copied().find(|&m| m != y).expect("two nodes");
        self.members[c2] = vec![mate.min(other), mate.max(other)];
        self.swaps += 1;
        vec![Move::new(y, c1), Move::new(mate, c2)]
    }

    /// Counter sanity: no cluster at or past the threshold, and every live
    /// pair counter belongs to a split pair.
    pub fn check(&self) -> std::result::Result<(), String> {
        let threshold = self.threshold();
        if let Some(c) = (0..self.outgoing.len()).find(|&c| self.outgoing[c] >= threshold) {
            return Err(format!(
                "cluster {c} counter {} reached threshold {threshold}",
                self.outgoing[c]
            ));
        }
        for (&(a, b), &count) in &self.pairs {
            if count > 0 && self.assignment[a] == self.assignment[b] {
                return Err(format!("collocated pair ({a},{b}) still counts {count}"));
            }
        }
        for (c, &out) in self.outgoing.iter().enumerate() {
            let crossing: u64 = self
                .pairs
                .iter()
                .filter(|(&(a, b), _)| (self.assignment[a] == c) != (self.assignment[b] == c))
                .map(|(_, &count)| count)
                .sum();
            if crossing > out {
                return Err(format!(
                    "cluster {c} pair counters sum to {crossing} above its counter {out}"
                ));
            }
        }
        Ok(())
    }
}

impl OnlineAlgorithm for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn before_serve(&mut self, config: &Configuration, _: &Request) -> Result<Vec<Move>> {
        if config.assignment() != self.assignment.as_slice() {
            return Err(BrpError::GeometryError(
                "engine configuration diverged from greedy's placement".into(),
            ));
        }
        Ok(Vec::new())
    }

    /// The swap is decided once the request that filled the counter has been
    /// paid for.
    fn after_serve(&mut self, _: &Configuration, request: &Request) -> Result<Vec<Move>> {
        self.handle_request(request)
    }

    fn check_invariants(&self) -> std::result::Result<(), String> {
        self.check()
    }

    fn dump_state(&self) -> String {
        let clusters: Vec<String> = self
            .members
            .iter()
            .zip(&self.outgoing)
            .map(|(m, out)| format!("{m:?}:{out}"))
            .collect();
        let pairs: Vec<String> = self
            .pairs
            .iter()
            .map(|(&(a, b), c)| format!("{a}~{b}={c}"))
            .collect();
        format!("clusters {}\npairs {}\n", clusters.join(" "), pairs.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, FixedSequence, RunOptions};

    fn setup(l: usize, alpha: u64) -> (Params, Configuration) {
        let params = Params::unaugmented(2, l, alpha).unwrap();
        let initial = Configuration::initial(&params).unwrap();
        (params, initial)
    }

    #[test]
    fn third_remote_request_triggers_swap() {
        let (params, initial) = setup(2, 1);
        let mut g = Greedy::new(&params, &initial, 3).unwrap();
        assert!(g.handle_request(&Request::new(0, 2).unwrap()).unwrap().is_empty());
        assert!(g.handle_request(&Request::new(0, 2).unwrap()).unwrap().is_empty());
        let moves = g.handle_request(&Request::new(0, 2).unwrap()).unwrap();
        assert_eq!(moves, vec![Move::new(2, 0), Move::new(1, 1)]);
        assert_eq!(g.outgoing(), &[0, 0]);
        assert_eq!(g.pair_count(0, 2), 0);
        g.check().unwrap();
    }

    #[test]
    fn engine_charges_threshold_requests_then_swap() {
        let (params, initial) = setup(2, 2);
        let mut g = Greedy::new(&params, &initial, 3).unwrap();
        let mut src = FixedSequence::from_pairs(&[(1, 3); 8]).unwrap();
        let t = run(&mut g, &mut src, params, initial, RunOptions::checked(100)).unwrap();
        assert_eq!(t.ledger.comm, 6);
        assert_eq!(t.ledger.mig, 4);
    }

    #[test]
    fn intra_cluster_request_is_ignored() {
        let (params, initial) = setup(2, 1);
        let mut g = Greedy::new(&params, &initial, 3).unwrap();
        assert!(g.handle_request(&Request::new(0, 1).unwrap()).unwrap().is_empty());
        assert_eq!(g.outgoing(), &[0, 0]);
        assert!(g.pairs.is_empty());
    }

    #[test]
    fn heaviest_cluster_wins() {
        // C1 = {0,1} talks twice with C2 = {2,3} and once with C3 = {4,5}.
        let (params, initial) = setup(3, 1);
        let mut g = Greedy::new(&params, &initial, 3).unwrap();
        g.handle_request(&Request::new(0, 4).unwrap()).unwrap();
        g.handle_request(&Request::new(1, 2).unwrap()).unwrap();
        let moves = g.handle_request(&Request::new(1, 2).unwrap()).unwrap();
        assert_eq!(moves, vec![Move::new(2, 0), Move::new(0, 1)]);
        // C3's counter survives, but its pair with node 0 was reset.
        assert_eq!(g.outgoing(), &[0, 0, 1]);
        assert_eq!(g.pair_count(0, 4), 0);
        g.check().unwrap();
    }

    #[test]
    fn rejects_larger_clusters() {
        let params = Params::unaugmented(3, 2, 1).unwrap();
        let initial = Configuration::initial(&params).unwrap();
        assert!(matches!(
            Greedy::new(&params, &initial, 3),
            Err(BrpError::GeometryError(_))
        ));
    }
}
