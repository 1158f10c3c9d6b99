//! Problem instances, node placements and the cost model shared by every
//! online algorithm and offline oracle.
//!
//! Serving a request costs 1 when its endpoints sit in different clusters and
//! 0 otherwise; every node that changes cluster costs `alpha`. Cluster labels
//! carry no meaning for cost, so [`min_migration_cost`] is the one place where
//! two placements are compared modulo relabeling.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use itertools::Itertools;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{BrpError, Result};

pub type NodeId = usize;
pub type ClusterId = usize;

/// Cluster counts up to this size are relabeled by exhaustive permutation;
/// beyond it the max-overlap assignment is solved instead.
pub const EXHAUSTIVE_RELABEL_LIMIT: usize = 8;

/// Instance constants: `n = k * l` nodes, `l` clusters of capacity `k`,
/// migration price `alpha`, and the online augmentation factor `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Params {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub alpha: u64,
    pub delta: u32,
}

impl Params {
    pub fn new(n: usize, k: usize, l: usize, alpha: u64, delta: u32) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(BrpError::InvalidParams("k and l must be positive".into()));
        }
        if n != k * l {
            return Err(BrpError::InvalidParams(format!(
                "n = {n} but k * l = {}",
                k * l
            )));
        }
        if alpha == 0 {
            return Err(BrpError::InvalidParams("alpha must be >= 1".into()));
        }
        if delta == 0 {
            return Err(BrpError::InvalidParams("delta must be >= 1".into()));
        }
        Ok(Self {
            n,
            k,
            l,
            alpha,
            delta,
        })
    }

    /// Unaugmented instance with `n = k * l`.
    pub fn unaugmented(k: usize, l: usize, alpha: u64) -> Result<Self> {
        Self::new(k * l, k, l, alpha, 1)
    }

    pub fn with_delta(mut self, delta: u32) -> Result<Self> {
        if delta == 0 {
            return Err(BrpError::InvalidParams("delta must be >= 1".into()));
        }
        self.delta = delta;
        Ok(self)
    }
}

/// A communication request between two distinct nodes. `t` is the 1-based
/// position in the sequence; sources may leave it at 0 and let the engine
/// stamp it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    pub t: u64,
    pub u: NodeId,
    pub v: NodeId,
}

impl Request {
    pub fn new(u: NodeId, v: NodeId) -> Result<Self> {
        Self::at(0, u, v)
    }

    pub fn at(t: u64, u: NodeId, v: NodeId) -> Result<Self> {
        if u == v {
            return Err(BrpError::SelfPair(u));
        }
        Ok(Self { t, u, v })
    }

    /// Endpoints as an ordered pair `(min, max)`.
    pub fn pair(&self) -> (NodeId, NodeId) {
        (self.u.min(self.v), self.u.max(self.v))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.u == self.v {
            return Err(BrpError::SelfPair(self.u));
        }
        for node in [self.u, self.v] {
            if node >= n {
                return Err(BrpError::UnknownNode { node, n });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.u, self.v)
    }
}

/// Relocate `node` to cluster `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub node: NodeId,
    pub to: ClusterId,
}

impl Move {
    pub fn new(node: NodeId, to: ClusterId) -> Self {
        Self { node, to }
    }
}

/// Node to cluster assignment with per-cluster capacity bookkeeping.
///
/// A valid configuration places every node exactly once and never exceeds
/// `capacity` in any cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    assignment: Vec<ClusterId>,
    cluster_count: usize,
    capacity: usize,
    occupancy: Vec<usize>,
}

impl Configuration {
    /// Builds a configuration from `assignment[node] = cluster`.
    pub fn from_assignment(
        assignment: Vec<ClusterId>,
        cluster_count: usize,
        capacity: usize,
    ) -> Result<Self> {
        let mut occupancy = vec![0; cluster_count];
        for &cluster in &assignment {
            if cluster >= cluster_count {
                return Err(BrpError::UnknownCluster {
                    cluster,
                    count: cluster_count,
                });
            }
            occupancy[cluster] += 1;
        }
        if let Some((cluster, &occupancy)) = occupancy
            .iter()
            .enumerate()
            .find(|(_, &occ)| occ > capacity)
        {
            return Err(BrpError::CapacityExceeded {
                cluster,
                occupancy,
                capacity,
            });
        }
        Ok(Self {
            assignment,
            cluster_count,
            capacity,
            occupancy,
        })
    }

    /// Builds a configuration from per-cluster member lists. Nodes must be
    /// exactly `0..n` for some `n`.
    pub fn from_clusters(
        clusters: &[Vec<NodeId>],
        cluster_count: usize,
        capacity: usize,
    ) -> Result<Self> {
        if clusters.len() > cluster_count {
            return Err(BrpError::UnknownCluster {
                cluster: clusters.len() - 1,
                count: cluster_count,
            });
        }
        let n: usize = clusters.iter().map(Vec::len).sum();
        let mut assignment = vec![None; n];
        for (cluster, members) in clusters.iter().enumerate() {
            for &node in members {
                let slot = assignment
                    .get_mut(node)
                    .ok_or(BrpError::UnknownNode { node, n })?;
                if slot.is_some() {
                    return Err(BrpError::DuplicateNode(node));
                }
                *slot = Some(cluster);
            }
        }
        // n slots filled by n entries with no duplicates means none are empty.
        let assignment = assignment.into_iter().map(Option::unwrap).collect();
        Self::from_assignment(assignment, cluster_count, capacity)
    }

    /// Node `i` goes to cluster `i / capacity`; the standard unaugmented
    /// starting placement.
    pub fn blocks(n: usize, cluster_count: usize, capacity: usize) -> Result<Self> {
        let assignment = (0..n).map(|node| node / capacity.max(1)).collect();
        Self::from_assignment(assignment, cluster_count, capacity)
    }

    /// Offline-shaped `l x k` block placement for `params`.
    pub fn initial(params: &Params) -> Result<Self> {
        Self::blocks(params.n, params.l, params.k)
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn assignment(&self) -> &[ClusterId] {
        &self.assignment
    }

    pub fn occupancy(&self, cluster: ClusterId) -> usize {
        self.occupancy[cluster]
    }

    pub fn cluster_of(&self, node: NodeId) -> Result<ClusterId> {
        self.assignment
            .get(node)
            .copied()
            .ok_or(BrpError::UnknownNode { node, n: self.n() })
    }

    pub fn members(&self, cluster: ClusterId) -> Vec<NodeId> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == cluster)
            .map(|(node, _)| node)
            .collect()
    }

    pub fn collocated(&self, u: NodeId, v: NodeId) -> Result<bool> {
        Ok(self.cluster_of(u)? == self.cluster_of(v)?)
    }

    /// 0 if the endpoints share a cluster, 1 otherwise.
    pub fn serve_cost(&self, request: &Request) -> Result<u64> {
        if request.u == request.v {
            return Err(BrpError::SelfPair(request.u));
        }
        Ok(u64::from(!self.collocated(request.u, request.v)?))
    }

    /// Applies a batch of moves atomically: capacities are checked only once
    /// the whole batch is in place, so swaps work without augmentation.
    /// Returns the new configuration and `alpha` times the number of nodes
    /// whose cluster changed.
    pub fn apply_moves(&self, moves: &[Move], alpha: u64) -> Result<(Configuration, u64)> {
        let mut assignment = self.assignment.clone();
        for mv in moves {
            if mv.to >= self.cluster_count {
                return Err(BrpError::UnknownCluster {
                    cluster: mv.to,
                    count: self.cluster_count,
                });
            }
            let slot = assignment.get_mut(mv.node).ok_or(BrpError::UnknownNode {
                node: mv.node,
                n: self.n(),
            })?;
            *slot = mv.to;
        }
        let next = Self::from_assignment(assignment, self.cluster_count, self.capacity)?;
        let changed = self.hamming(&next);
        Ok((next, alpha * changed as u64))
    }

    /// Number of nodes whose cluster label differs.
    pub fn hamming(&self, other: &Configuration) -> usize {
        self.assignment
            .iter()
            .zip(&other.assignment)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Non-empty clusters as sorted member lists, ordered by smallest member.
    /// Two configurations have equal groups iff they differ by relabeling.
    pub fn canonical_groups(&self) -> Vec<Vec<NodeId>> {
        let mut groups = vec![Vec::new(); self.cluster_count];
        for (node, &cluster) in self.assignment.iter().enumerate() {
            groups[cluster].push(node);
        }
        groups.retain(|g| !g.is_empty());
        groups.sort();
        groups
    }

    pub fn digest(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        self.canonical_groups().hash(&mut hasher);
        hasher.finish()
    }

    /// The same placement viewed in a geometry with more or larger clusters.
    pub fn widen(&self, cluster_count: usize, capacity: usize) -> Result<Configuration> {
        Self::from_assignment(self.assignment.clone(), cluster_count, capacity)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let clusters = (0..self.cluster_count)
            .map(|c| {
                self.members(c)
                    .iter()
                    .map(|n| n.to_string())
                    .join(",")
            })
            .join(" | ");
        write!(f, "{clusters}")
    }
}

/// `alpha` times the fewest node moves that turn `from` into `to` when the
/// clusters of `to` may be relabeled freely.
pub fn min_migration_cost(from: &Configuration, to: &Configuration, alpha: u64) -> Result<u64> {
    if from.n() != to.n()
        || from.capacity != to.capacity
        || from.cluster_count != to.cluster_count
    {
        return Err(BrpError::ShapeMismatch(format!(
            "n {} vs {}, capacity {} vs {}, clusters {} vs {}",
            from.n(),
            to.n(),
            from.capacity,
            to.capacity,
            from.cluster_count,
            to.cluster_count
        )));
    }
    let count = from.cluster_count;
    let mut overlap = vec![vec![0i64; count]; count];
    for (a, b) in from.assignment.iter().zip(&to.assignment) {
        overlap[*a][*b] += 1;
    }
    let kept = if count <= EXHAUSTIVE_RELABEL_LIMIT {
        (0..count)
            .permutations(count)
            .map(|perm| perm.iter().enumerate().map(|(i, &j)| overlap[i][j]).sum())
            .max()
            .unwrap_or(0)
    } else {
        let matrix = Matrix::from_rows(overlap).expect("square overlap matrix");
        kuhn_munkres(&matrix).0
    };
    Ok(alpha * (from.n() as u64 - kept as u64))
}

/// Cumulative communication and migration charges of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostLedger {
    pub comm: u64,
    pub mig: u64,
    pub per_step: Vec<(u64, u64)>,
}

impl CostLedger {
    pub fn record(&mut self, comm: u64, mig: u64) {
        self.comm += comm;
        self.mig += mig;
        self.per_step.push((comm, mig));
    }

    pub fn total(&self) -> u64 {
        self.comm + self.mig
    }

    pub fn steps(&self) -> usize {
        self.per_step.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(clusters: &[&[NodeId]], count: usize, cap: usize) -> Configuration {
        let clusters: Vec<Vec<NodeId>> = clusters.iter().map(|c| c.to_vec()).collect();
        Configuration::from_clusters(&clusters, count, cap).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(4, 2, 2, 1, 1).is_ok());
        assert!(Params::new(5, 2, 2, 1, 1).is_err());
        assert!(Params::new(4, 2, 2, 0, 1).is_err());
        assert!(Params::new(4, 2, 2, 1, 0).is_err());
    }

    #[test]
    fn exact_fit_configuration() {
        let c = cfg(&[&[0, 1], &[2, 3]], 2, 2);
        assert_eq!(c.cluster_of(2).unwrap(), 1);
        assert_eq!(c.occupancy(0), 2);
    }

    #[test]
    fn overfull_cluster_rejected() {
        let err = Configuration::from_clusters(&[vec![0, 1, 2], vec![3]], 2, 2).unwrap_err();
        assert!(matches!(err, BrpError::CapacityExceeded { cluster: 0, .. }));
    }

    #[test]
    fn augmented_layout_leaves_empty_clusters() {
        let c = cfg(&[&[0, 1], &[2, 3]], 4, 2);
        assert_eq!(c.occupancy(2), 0);
        assert_eq!(c.occupancy(3), 0);
    }

    #[test]
    fn duplicate_and_unknown_cluster() {
        let err = Configuration::from_clusters(&[vec![0, 1], vec![1, 2]], 2, 2).unwrap_err();
        assert_eq!(err, BrpError::DuplicateNode(1));
        let err = Configuration::from_assignment(vec![0, 3], 2, 2).unwrap_err();
        assert!(matches!(err, BrpError::UnknownCluster { cluster: 3, .. }));
    }

    #[test]
    fn serve_cost_cases() {
        let c = cfg(&[&[0, 1], &[2, 3]], 2, 2);
        assert_eq!(c.serve_cost(&Request::new(0, 1).unwrap()).unwrap(), 0);
        assert_eq!(c.serve_cost(&Request::new(1, 2).unwrap()).unwrap(), 1);
        assert_eq!(c.serve_cost(&Request::new(2, 1).unwrap()).unwrap(), 1);
        assert!(Request::new(3, 3).is_err());
        let bad = Request { t: 0, u: 1, v: 1 };
        assert_eq!(c.serve_cost(&bad), Err(BrpError::SelfPair(1)));
        let far = Request { t: 0, u: 1, v: 9 };
        assert!(matches!(c.serve_cost(&far), Err(BrpError::UnknownNode { node: 9, .. })));
    }

    #[test]
    fn apply_moves_cases() {
        let c = cfg(&[&[0, 1], &[2, 3]], 2, 2);
        let (swapped, cost) = c.apply_moves(&[Move::new(1, 1), Move::new(2, 0)], 1).unwrap();
        assert_eq!(cost, 2);
        assert!(swapped.collocated(0, 2).unwrap());

        let (same, cost) = c.apply_moves(&[], 5).unwrap();
        assert_eq!((same, cost), (c.clone(), 0));

        let (same, cost) = c.apply_moves(&[Move::new(0, 0)], 5).unwrap();
        assert_eq!((same, cost), (c.clone(), 0));

        // A lone move without augmentation overfills the target.
        let err = c.apply_moves(&[Move::new(0, 1)], 1).unwrap_err();
        assert!(matches!(err, BrpError::CapacityExceeded { cluster: 1, .. }));
    }

    #[test]
    fn relabeling_is_free() {
        let a = cfg(&[&[0, 1], &[2, 3]], 2, 2);
        let b = cfg(&[&[2, 3], &[0, 1]], 2, 2);
        assert_eq!(min_migration_cost(&a, &a, 1).unwrap(), 0);
        assert_eq!(min_migration_cost(&a, &b, 1).unwrap(), 0);
    }

    #[test]
    fn min_migration_matches_brute_force() {
        // Brute force over both relabelings of {0,2|1,3}:
        // identity differs on nodes 1 and 2, the swap on nodes 0 and 3.
        let a = cfg(&[&[0, 1], &[2, 3]], 2, 2);
        let b = cfg(&[&[0, 2], &[1, 3]], 2, 2);
        assert_eq!(min_migration_cost(&a, &b, 1).unwrap(), 2);
        assert_eq!(min_migration_cost(&a, &b, 3).unwrap(), 6);
    }

    #[test]
    fn shape_mismatch() {
        let a = cfg(&[&[0, 1], &[2, 3]], 2, 2);
        let b = cfg(&[&[0, 1], &[2, 3]], 4, 2);
        assert!(matches!(
            min_migration_cost(&a, &b, 1),
            Err(BrpError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn assignment_solver_agrees_with_permutations() {
        // 10 clusters forces the assignment path; rotating labels is free and
        // one swap on top costs exactly two moves.
        let n = 20;
        let base = Configuration::blocks(n, 10, 2).unwrap();
        let rotated: Vec<_> = (0..n).map(|v| (v / 2 + 3) % 10).collect();
        let rotated = Configuration::from_assignment(rotated, 10, 2).unwrap();
        assert_eq!(min_migration_cost(&base, &rotated, 1).unwrap(), 0);
        let (swapped, _) = rotated
            .apply_moves(&[Move::new(0, rotated.cluster_of(2).unwrap()), Move::new(2, rotated.cluster_of(0).unwrap())], 1)
            .unwrap();
        assert_eq!(min_migration_cost(&base, &swapped, 7).unwrap(), 14);
    }

    #[test]
    fn ledger_totals() {
        let mut ledger = CostLedger::default();
        ledger.record(1, 0);
        ledger.record(0, 4);
        assert_eq!((ledger.comm, ledger.mig, ledger.total()), (1, 4, 5));
        assert_eq!(ledger.steps(), 2);
    }

    #[test]
    fn digest_ignores_labels() {
        let a = cfg(&[&[0, 1], &[2, 3]], 2, 2);
        let b = cfg(&[&[2, 3], &[0, 1]], 2, 2);
        let c = cfg(&[&[0, 2], &[1, 3]], 2, 2);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }
}
