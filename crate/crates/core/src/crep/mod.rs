//! Component-based repartitioning with 4-augmentation.
//!
//! The online side runs on `2l` clusters of capacity `2k`. Nodes that
//! communicate enough are merged into components, which always sit in a
//! single cluster; reservations let a component grow in place until it has
//! doubled. When a set of components grows past `k` with enough internal
//! traffic, its epoch ends and the set is split back into singletons.

mod graph;
mod search;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use graph::{ComponentGraph, ComponentId};
pub use search::{find_epoch_set, find_epoch_set_through, find_merge_set, find_merge_set_through};

use crate::engine::OnlineAlgorithm;
use crate::error::{BrpError, Result};
use crate::model::{ClusterId, Configuration, Move, NodeId, Params, Request};

/// Augmentation the online geometry is built for.
pub const REQUIRED_DELTA: u32 = 4;

fn pair_key(a: ComponentId, b: ComponentId) -> (ComponentId, ComponentId) {
    (a.min(b), a.max(b))
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: usize) -> u32 {
    usize::BITS - x.saturating_sub(1).leading_zeros()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: ComponentId,
    /// Sorted.
    pub nodes: Vec<NodeId>,
    pub cluster: ClusterId,
    /// Reserved space still available to this component in its cluster.
    pub reserved: usize,
    /// Remote requests paid among this component's nodes this epoch.
    pub paid: u64,
}

impl Component {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClusterSpace {
    pub occupied: usize,
    pub reserved: usize,
}

/// Occupied and reserved space per cluster; spare is whatever remains of the
/// capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLedger {
    capacity: usize,
    clusters: Vec<ClusterSpace>,
}

impl ClusterLedger {
    pub fn new(cluster_count: usize, capacity: usize) -> Self {
        Self {
            capacity,
            clusters: vec![ClusterSpace::default(); cluster_count],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn get(&self, cluster: ClusterId) -> ClusterSpace {
        self.clusters[cluster]
    }

    pub fn get_mut(&mut self, cluster: ClusterId) -> &mut ClusterSpace {
        &mut self.clusters[cluster]
    }

    /// Signed, so that over-commitment during an epoch end shows up.
    pub fn spare(&self, cluster: ClusterId) -> isize {
        let s = self.clusters[cluster];
        self.capacity as isize - (s.occupied + s.reserved) as isize
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClusterId, ClusterSpace)> + '_ {
        self.clusters.iter().copied().enumerate()
    }
}

/// What happened to the component set whose epoch just ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochReport {
    pub step: u64,
    pub nodes: Vec<NodeId>,
    pub component_count: usize,
    /// Merge migrations of these nodes during the epoch.
    pub merge_migrations: u64,
    /// Singletons moved to restore capacity after the split.
    pub evictions: usize,
    /// Remote requests paid between nodes of the set during the epoch.
    pub remote_serves: u64,
}

impl EpochReport {
    pub fn vol(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepOutcome {
    /// Net moves of the step; a node appears at most once.
    pub moves: Vec<Move>,
    /// Components merged this step, if any.
    pub merged: Vec<ComponentId>,
    pub epoch: Option<EpochReport>,
    pub served_remotely: bool,
}

#[derive(Debug, Clone)]
pub struct Crep {
    k: usize,
    alpha: u64,
    graph: ComponentGraph,
    components: BTreeMap<ComponentId, Component>,
    node_component: Vec<ComponentId>,
    node_cluster: Vec<ClusterId>,
    node_migrations: Vec<u32>,
    ledger: ClusterLedger,
    paid_between: BTreeMap<(ComponentId, ComponentId), u64>,
    next_id: ComponentId,
    step: u64,
    epochs: Vec<EpochReport>,
    last_epoch_step: Option<u64>,
}

impl Crep {
    /// Starts from the offline-shaped placement `initial` (at most `l`
    /// clusters of `k` nodes), viewed in the augmented `2l x 2k` geometry.
    pub fn new(params: &Params, initial: &Configuration) -> Result<Self> {
        if params.delta < REQUIRED_DELTA {
            return Err(BrpError::InsufficientAugmentation(params.delta));
        }
        if initial.n() != params.n {
            return Err(BrpError::ShapeMismatch(format!(
                "initial placement has {} nodes, params say {}",
                initial.n(),
                params.n
            )));
        }
        let k = params.k;
        let wide = initial.widen(2 * params.l, 2 * k)?;
        let reserve = 1.min(k - 1);
        let mut ledger = ClusterLedger::new(2 * params.l, 2 * k);
        let mut graph = ComponentGraph::new();
        let mut components = BTreeMap::new();
        for node in 0..params.n {
            let cluster = wide.assignment()[node];
            let space = ledger.get_mut(cluster);
            space.occupied += 1;
            space.reserved += reserve;
            graph.insert(node, 1);
            components.insert(
                node,
                Component {
                    id: node,
                    nodes: vec![node],
                    cluster,
                    reserved: reserve,
                    paid: 0,
                },
            );
        }
        if let Some((cluster, _)) = ledger.iter().find(|&(c, _)| ledger.spare(c) < 0) {
            return Err(BrpError::CapacityExceeded {
                cluster,
                occupancy: wide.occupancy(cluster),
                capacity: k,
            });
        }
        Ok(Self {
            k,
            alpha: params.alpha,
            graph,
            components,
            node_component: (0..params.n).collect(),
            node_cluster: wide.assignment().to_vec(),
            node_migrations: vec![0; params.n],
            ledger,
            paid_between: BTreeMap::new(),
            next_id: params.n,
            step: 0,
            epochs: Vec::new(),
            last_epoch_step: None,
        })
    }

    /// The current placement in the augmented geometry.
    pub fn configuration(&self) -> Configuration {
        Configuration::from_assignment(
            self.node_cluster.clone(),
            self.ledger.len(),
            self.ledger.capacity(),
        )
        .expect("ledger keeps every cluster within capacity")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn graph(&self) -> &ComponentGraph {
        &self.graph
    }

    pub fn ledger(&self) -> &ClusterLedger {
        &self.ledger
    }

    /// Exposed so invariant checks can be exercised against corrupted state.
    #[doc(hidden)]
    pub fn ledger_mut(&mut self) -> &mut ClusterLedger {
        &mut self.ledger
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.components.values()
    }

    pub fn component_of(&self, node: NodeId) -> &Component {
        &self.components[&self.node_component[node]]
    }

    /// Merge migrations of `node` in its current epoch.
    pub fn migrations(&self, node: NodeId) -> u32 {
        self.node_migrations[node]
    }

    /// Every ended epoch, oldest first.
    pub fn epochs(&self) -> &[EpochReport] {
        &self.epochs
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Processes one request: weight update, at most one merge, at most one
    /// epoch end. Moves are returned net of the step and have already been
    /// applied to the internal state.
    pub fn handle_request(&mut self, request: &Request) -> Result<StepOutcome> {
        let n = self.node_cluster.len();
        request.validate(n)?;
        self.step += 1;
        let start = self.node_cluster.clone();
        let (u, v) = request.pair();

        // Only sets holding both endpoint components can start to qualify.
        let (cu, cv) = (self.node_component[u], self.node_component[v]);
        let mut merged = Vec::new();
        let mut ending = Vec::new();
        if cu != cv {
            self.graph.add_weight(cu, cv, 1);
            merged = find_merge_set_through(&self.graph, self.k, self.alpha, cu, cv);
            if merged.len() > 1 {
                self.merge(&merged)?;
                ending = find_epoch_set(&self.graph, self.k, self.alpha);
            } else {
                ending = find_epoch_set_through(&self.graph, self.k, self.alpha, cu, cv);
            }
        }
        let mut epoch = None;
        if !ending.is_empty() {
            epoch = Some(self.end_epoch(&ending)?);
        }

        let served_remotely = self.node_cluster[u] != self.node_cluster[v];
        if served_remotely {
            match epoch.as_mut() {
                Some(report)
                    if report.nodes.binary_search(&u).is_ok()
                        && report.nodes.binary_search(&v).is_ok() =>
                {
                    report.remote_serves += 1;
                }
                _ => {
                    let key = pair_key(self.node_component[u], self.node_component[v]);
                    *self.paid_between.entry(key).or_default() += 1;
                }
            }
        }
        if let Some(report) = &epoch {
            self.epochs.push(report.clone());
            self.last_epoch_step = Some(self.step);
        }

        let moves = (0..n)
            .filter(|&node| self.node_cluster[node] != start[node])
            .map(|node| Move::new(node, self.node_cluster[node]))
            .collect();
        Ok(StepOutcome {
            moves,
            merged,
            epoch,
            served_remotely,
        })
    }

    fn vacate(&mut self, c: &Component) {
        let space = self.ledger.get_mut(c.cluster);
        space.occupied -= c.size();
        space.reserved -= c.reserved;
    }

    fn merge(&mut self, set: &[ComponentId]) -> Result<()> {
        let members: Vec<Component> = set
            .iter()
            .map(|id| self.components.remove(id).expect("merge set holds live components"))
            .collect();
        let vol: usize = members.iter().map(Component::size).sum();
        let anchor = members
            .iter()
            .max_by(|a, b| {
                a.reserved
                    .cmp(&b.reserved)
                    .then(a.size().cmp(&b.size()))
                    .then(b.id.cmp(&a.id))
            })
            .expect("merge set is non-empty")
            .clone();
        let id = self.next_id;
        self.next_id += 1;

        let mut paid: u64 = members.iter().map(|c| c.paid).sum();
        let accounts = std::mem::take(&mut self.paid_between);
        for ((a, b), p) in accounts {
            match (set.contains(&a), set.contains(&b)) {
                (true, true) => paid += p,
                (true, false) => *self.paid_between.entry(pair_key(id, b)).or_default() += p,
                (false, true) => *self.paid_between.entry(pair_key(a, id)).or_default() += p,
                (false, false) => {
                    self.paid_between.insert((a, b), p);
                }
            }
        }

        let growth = vol - anchor.size();
        let (target, reserved) = if anchor.reserved >= growth {
            for c in members.iter().filter(|c| c.id != anchor.id) {
                self.vacate(c);
            }
            let space = self.ledger.get_mut(anchor.cluster);
            space.reserved -= growth;
            space.occupied += growth;
            (anchor.cluster, anchor.reserved - growth)
        } else {
            for c in &members {
                self.vacate(c);
            }
            let needed = self.k.min(2 * vol);
            let reserved = (self.k - vol).min(vol);
            let target = (0..self.ledger.len())
                .filter(|&s| self.ledger.spare(s) >= needed as isize)
                .max_by_key(|&s| {
                    let present = members
                        .iter()
                        .filter(|c| c.cluster == s)
                        .map(Component::size)
                        .sum::<usize>();
                    (present, std::cmp::Reverse(s))
                })
                .ok_or(BrpError::NoEligibleCluster { size: vol, needed })?;
            let space = self.ledger.get_mut(target);
            space.occupied += vol;
            space.reserved += reserved;
            (target, reserved)
        };

        let mut nodes: Vec<NodeId> = members.iter().flat_map(|c| c.nodes.iter().copied()).collect();
        nodes.sort_unstable();
        for &node in &nodes {
            if self.node_cluster[node] != target {
                self.node_cluster[node] = target;
                self.node_migrations[node] += 1;
            }
            self.node_component[node] = id;
        }
        self.graph.contract(set, id);
        self.components.insert(
            id,
            Component {
                id,
                nodes,
                cluster: target,
                reserved,
                paid,
            },
        );
        Ok(())
    }

    fn end_epoch(&mut self, set: &[ComponentId]) -> Result<EpochReport> {
        let members: Vec<Component> = set
            .iter()
            .map(|id| self.components.remove(id).expect("epoch set holds live components"))
            .collect();
        let mut remote_serves: u64 = members.iter().map(|c| c.paid).sum();
        self.paid_between.retain(|&(a, b), p| {
            let (ia, ib) = (set.contains(&a), set.contains(&b));
            if ia && ib {
                remote_serves += *p;
            }
            !(ia || ib)
        });

        let reserve = 1.min(self.k - 1);
        let mut nodes = Vec::new();
        let mut fresh = Vec::new();
        for c in &members {
            self.graph.remove(c.id);
            self.ledger.get_mut(c.cluster).reserved -= c.reserved;
            for &node in &c.nodes {
                let id = self.next_id;
                self.next_id += 1;
                self.graph.insert(id, 1);
                self.ledger.get_mut(c.cluster).reserved += reserve;
                self.components.insert(
                    id,
                    Component {
                        id,
                        nodes: vec![node],
                        cluster: c.cluster,
                        reserved: reserve,
                        paid: 0,
                    },
                );
                self.node_component[node] = id;
                nodes.push(node);
                fresh.push(id);
            }
        }
        nodes.sort_unstable();
        let merge_migrations = nodes
            .iter()
            .map(|&node| u64::from(std::mem::take(&mut self.node_migrations[node])))
            .sum();

        let mut evictions = 0;
        loop {
            let Some(source) = (0..self.ledger.len())
                .filter(|&s| self.ledger.spare(s) < 0)
                .min_by_key(|&s| (self.ledger.spare(s), s))
            else {
                break;
            };
            let singleton_here = |id: &ComponentId| {
                let c = &self.components[id];
                c.cluster == source && c.size() == 1
            };
            let evicted = fresh
                .iter()
                .copied()
                .filter(singleton_here)
                .min_by_key(|id| self.components[id].nodes[0])
                .or_else(|| {
                    self.components
                        .keys()
                        .copied()
                        .filter(singleton_here)
                        .min_by_key(|id| self.components[id].nodes[0])
                })
                .ok_or(BrpError::NoEligibleCluster {
                    size: 1,
                    needed: 1 + reserve,
                })?;
            let carried = self.components[&evicted].reserved;
            let target = (0..self.ledger.len())
                .filter(|&s| s != source)
                .min_by_key(|&s| (-self.ledger.spare(s), s))
                .filter(|&s| self.ledger.spare(s) >= (1 + carried) as isize)
                .ok_or(BrpError::NoEligibleCluster {
                    size: 1,
                    needed: 1 + carried,
                })?;
            let c = self.components.get_mut(&evicted).expect("evicted component is live");
            c.cluster = target;
            let node = c.nodes[0];
            self.node_cluster[node] = target;
            let from = self.ledger.get_mut(source);
            from.occupied -= 1;
            from.reserved -= carried;
            let to = self.ledger.get_mut(target);
            to.occupied += 1;
            to.reserved += carried;
            evictions += 1;
        }

        Ok(EpochReport {
            step: self.step,
            nodes,
            component_count: members.len(),
            merge_migrations,
            evictions,
            remote_serves,
        })
    }

    /// Checks every structural and cost invariant of the current state.
    pub fn check(&self) -> std::result::Result<(), String> {
        self.check_structure()?;
        self.check_costs()?;
        self.check_epoch()?;
        let pending = self.pending_merge();
        if !pending.is_empty() {
            return Err(format!("merge set {pending:?} left unmerged"));
        }
        Ok(())
    }

    /// A qualifying merge set that was not merged; empty when none exists.
    pub fn pending_merge(&self) -> Vec<ComponentId> {
        find_merge_set(&self.graph, self.k, self.alpha)
    }

    /// Component placement, the space ledger, and a cluster with `k` spare.
    pub fn check_structure(&self) -> std::result::Result<(), String> {
        let cap = self.ledger.capacity();
        let mut occupied = vec![0; self.ledger.len()];
        let mut reserved = vec![0; self.ledger.len()];
        for (&id, c) in &self.components {
            if c.id != id || c.nodes.is_empty() {
                return Err(format!("component {id} is malformed"));
            }
            if self.graph.size(id) != c.size() {
                return Err(format!("component {id} has size {} in the graph", self.graph.size(id)));
            }
            if c.reserved > self.k.saturating_sub(1) {
                return Err(format!("component {id} reserves {} > k-1", c.reserved));
            }
            for &node in &c.nodes {
                if self.node_component[node] != id {
                    return Err(format!("node {node} not mapped to component {id}"));
                }
                if self.node_cluster[node] != c.cluster {
                    return Err(format!(
                        "node {node} of component {id} sits in cluster {} not {}",
                        self.node_cluster[node], c.cluster
                    ));
                }
            }
            occupied[c.cluster] += c.size();
            reserved[c.cluster] += c.reserved;
        }
        if self.graph.len() != self.components.len() {
            return Err("component graph and component table disagree".into());
        }
        if occupied.iter().sum::<usize>() != self.node_cluster.len() {
            return Err("components do not cover every node".into());
        }
        for (s, space) in self.ledger.iter() {
            if space.occupied != occupied[s] || space.reserved != reserved[s] {
                return Err(format!(
                    "ledger of cluster {s} says o={} r={}, components say o={} r={}",
                    space.occupied, space.reserved, occupied[s], reserved[s]
                ));
            }
            if space.occupied + space.reserved > cap {
                return Err(format!(
                    "cluster {s}: o={} r={} exceed {cap}",
                    space.occupied, space.reserved
                ));
            }
        }
        if !(0..self.ledger.len()).any(|s| self.ledger.spare(s) >= self.k as isize) {
            return Err(format!("no cluster has {} spare", self.k));
        }
        Ok(())
    }

    /// Paid communication, per-node migrations, and edge weight caps.
    pub fn check_costs(&self) -> std::result::Result<(), String> {
        let alpha = self.alpha;
        for c in self.components.values() {
            let size = c.size();
            if c.paid > (size as u64 - 1) * alpha {
                return Err(format!(
                    "component {} paid {} > ({size}-1)*{alpha}",
                    c.id, c.paid
                ));
            }
            let cap = ceil_log2(size.max(2));
            if let Some(&node) = c.nodes.iter().find(|&&node| self.node_migrations[node] > cap) {
                return Err(format!(
                    "node {node} migrated {} times, component size {size} allows {cap}",
                    self.node_migrations[node]
                ));
            }
        }
        for ((a, b), w) in self.graph.edges() {
            let combined = self.graph.size(a) + self.graph.size(b);
            let bound = if combined <= self.k {
                alpha
            } else {
                combined as u64 * alpha
            };
            if w >= bound {
                return Err(format!("edge ({a},{b}) weight {w} reaches bound {bound}"));
            }
        }
        Ok(())
    }

    /// No epoch set left open, and the migration, eviction and remote-serve
    /// totals of an epoch that ended in the latest step.
    pub fn check_epoch(&self) -> std::result::Result<(), String> {
        let open = find_epoch_set(&self.graph, self.k, self.alpha);
        if !open.is_empty() {
            return Err(format!("epoch set {open:?} left open"));
        }
        if self.last_epoch_step != Some(self.step) {
            return Ok(());
        }
        let report = self.epochs.last().expect("epoch recorded");
        let vol = report.vol();
        let mig_cap = vol as u64 * u64::from(ceil_log2(self.k));
        if report.merge_migrations > mig_cap {
            return Err(format!(
                "epoch of {vol} nodes migrated {} > {mig_cap}",
                report.merge_migrations
            ));
        }
        if report.evictions > vol / 2 + 1 {
            return Err(format!("epoch of {vol} nodes evicted {}", report.evictions));
        }
        let serve_cap = 2 * vol as u64 * self.alpha;
        if report.remote_serves > serve_cap {
            return Err(format!(
                "epoch of {vol} nodes served {} remote > {serve_cap}",
                report.remote_serves
            ));
        }
        Ok(())
    }

    /// Canonical text form: components by node list, weights between them,
    /// and the space ledger. Independent of component ids.
    pub fn dump(&self) -> String {
        let mut comps: Vec<&Component> = self.components.values().collect();
        comps.sort_by_key(|c| c.nodes[0]);
        let mut out = String::new();
        let _ = writeln!(out, "step {}", self.step);
        for c in &comps {
            let _ = writeln!(
                out,
                "component {:?} cluster {} reserved {} paid {} migrations {:?}",
                c.nodes,
                c.cluster,
                c.reserved,
                c.paid,
                c.nodes.iter().map(|&n| self.node_migrations[n]).collect::<Vec<_>>()
            );
        }
        let mut weights: Vec<(NodeId, NodeId, u64)> = self
            .graph
            .edges()
            .map(|((a, b), w)| {
                let (x, y) = (self.components[&a].nodes[0], self.components[&b].nodes[0]);
                (x.min(y), x.max(y), w)
            })
            .collect();
        weights.sort_unstable();
        for (a, b, w) in weights {
            let _ = writeln!(out, "weight {a}~{b} {w}");
        }
        for (s, space) in self.ledger.iter() {
            let _ = writeln!(
                out,
                "cluster {s} o={} r={} f={}",
                space.occupied,
                space.reserved,
                self.ledger.spare(s)
            );
        }
        out
    }
}

impl OnlineAlgorithm for Crep {
    fn name(&self) -> &str {
        "crep"
    }

    fn before_serve(&mut self, config: &Configuration, request: &Request) -> Result<Vec<Move>> {
        if config.assignment() != self.node_cluster.as_slice() {
            return Err(BrpError::GeometryError(
                "engine configuration diverged from CREP's placement".into(),
            ));
        }
        Ok(self.handle_request(request)?.moves)
    }

    fn check_invariants(&self) -> std::result::Result<(), String> {
        self.check()
    }

    fn dump_state(&self) -> String {
        self.dump()
    }
}
