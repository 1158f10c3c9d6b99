//! Subset searches over the component graph.
//!
//! Both searches are exact on arbitrary graphs. The merge search enumerates
//! connected subsets of the positive-weight graph within the volume bound and
//! combines non-adjacent ones; the epoch search rejects graphs with no
//! qualifying set via a max-closure cut and otherwise scans subsets by
//! cardinality.

use std::cmp::Ordering;

use itertools::Itertools;
use pathfinding::directed::edmonds_karp::edmonds_karp_sparse;

use super::graph::{ComponentGraph, ComponentId};

/// Dense index view of a component graph; index order is id order.
struct Indexed {
    ids: Vec<ComponentId>,
    size: Vec<usize>,
    weight: Vec<Vec<u64>>,
    adj: Vec<Vec<usize>>,
}

impl Indexed {
    fn new(g: &ComponentGraph) -> Self {
        let ids: Vec<ComponentId> = g.ids().collect();
        let size = ids.iter().map(|&id| g.size(id)).collect();
        let n = ids.len();
        let mut weight = vec![vec![0; n]; n];
        let mut adj = vec![Vec::new(); n];
        for ((a, b), w) in g.edges() {
            let i = ids.binary_search(&a).expect("edge endpoint is a component");
            let j = ids.binary_search(&b).expect("edge endpoint is a component");
            weight[i][j] = w;
            weight[j][i] = w;
            adj[i].push(j);
            adj[j].push(i);
        }
        Self {
            ids,
            size,
            weight,
            adj,
        }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn com(&self, members: &[usize]) -> u64 {
        members
            .iter()
            .tuple_combinations()
            .map(|(&a, &b)| self.weight[a][b])
            .sum()
    }

    fn vol(&self, members: &[usize]) -> usize {
        members.iter().map(|&i| self.size[i]).sum()
    }

    fn to_ids(&self, members: &[usize]) -> Vec<ComponentId> {
        let mut out: Vec<ComponentId> = members.iter().map(|&i| self.ids[i]).collect();
        out.sort_unstable();
        out
    }
}

/// A connected subset considered as one building block of a merge set.
struct Piece {
    members: Vec<usize>,
    vol: usize,
    com: u64,
    /// `com - (|members| - 1) * alpha`.
    gain: i128,
}

/// Connected subsets containing `root` as their smallest index, with
/// volume at most `cap` (ESU enumeration: each subset is produced once).
fn connected_subsets(
    g: &Indexed,
    root: usize,
    cap: usize,
    out: &mut Vec<Vec<usize>>,
) {
    fn extend(
        g: &Indexed,
        root: usize,
        cap: usize,
        sub: &mut Vec<usize>,
        vol: usize,
        mut ext: Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        out.push(sub.clone());
        while let Some(w) = ext.pop() {
            if vol + g.size[w] > cap {
                continue;
            }
            let mut next = ext.clone();
            for &u in &g.adj[w] {
                let excluded = u <= root
                    || sub.contains(&u)
                    || next.contains(&u)
                    || sub.iter().any(|&s| g.weight[s][u] > 0);
                if !excluded {
                    next.push(u);
                }
            }
            sub.push(w);
            extend(g, root, cap, sub, vol + g.size[w], next, out);
            sub.pop();
        }
    }

    if g.size[root] > cap {
        return;
    }
    let ext: Vec<usize> = g.adj[root].iter().copied().filter(|&u| u > root).collect();
    extend(g, root, cap, &mut vec![root], g.size[root], ext, out);
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct MergeCandidate {
    count: usize,
    com: u64,
    ids: Vec<ComponentId>,
}

impl MergeCandidate {
    /// `Greater` means preferred: more components, then more weight, then
    /// the lexicographically smaller id tuple.
    fn preference(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then(self.com.cmp(&other.com))
            .then_with(|| other.ids.cmp(&self.ids))
    }
}

/// The largest-cardinality set `X` of components with `vol(X) <= k` and
/// `com(X) >= (|X| - 1) * alpha`. Ties prefer larger `com(X)`, then the
/// lexicographically smallest sorted id tuple. Returns an empty vector when
/// no set of two or more components qualifies.
pub fn find_merge_set(g: &ComponentGraph, k: usize, alpha: u64) -> Vec<ComponentId> {
    let ix = Indexed::new(g);
    let alpha_i = i128::from(alpha);

    let mut sets = Vec::new();
    // Isolated components are interchangeable up to size; the smallest ids
    // of each size dominate the rest.
    let mut isolated_taken: std::collections::BTreeMap<usize, usize> = Default::default();
    for root in 0..ix.len() {
        if ix.adj[root].is_empty() {
            let size = ix.size[root];
            let taken = isolated_taken.entry(size).or_default();
            if size <= k && *taken < k / size.max(1) {
                *taken += 1;
                sets.push(vec![root]);
            }
        } else {
            connected_subsets(&ix, root, k, &mut sets);
        }
    }
    let pieces: Vec<Piece> = sets
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            let com = ix.com(&members);
            let gain = i128::from(com) - (members.len() as i128 - 1) * alpha_i;
            Piece {
                vol: ix.vol(&members),
                com,
                gain,
                members,
            }
        })
        .collect();

    // Best achievable increase of the budget from pieces at or after i.
    let mut surplus_after = vec![0i128; pieces.len() + 1];
    for i in (0..pieces.len()).rev() {
        surplus_after[i] = surplus_after[i + 1] + (pieces[i].gain - alpha_i).max(0);
    }

    struct Search<'a> {
        ix: &'a Indexed,
        pieces: &'a [Piece],
        surplus_after: &'a [i128],
        k: usize,
        alpha: i128,
        // Chosen members and their neighbours; a piece touching one of these
        // would merge with a chosen piece.
        blocked: Vec<u32>,
        chosen: Vec<usize>,
        best: Option<MergeCandidate>,
    }

    impl Search<'_> {
        fn block(&mut self, piece: usize, delta: i32) {
            for &m in &self.pieces[piece].members {
                self.blocked[m] = self.blocked[m].wrapping_add_signed(delta);
                for &u in &self.ix.adj[m] {
                    self.blocked[u] = self.blocked[u].wrapping_add_signed(delta);
                }
            }
        }

        // `budget` is alpha + sum(gain - alpha) over chosen pieces; the
        // chosen union qualifies iff budget >= 0.
        fn descend(&mut self, start: usize, count: usize, vol: usize, com: u64, budget: i128) {
            for i in start..self.pieces.len() {
                let piece = &self.pieces[i];
                let vol_next = vol + piece.vol;
                if vol_next > self.k {
                    continue;
                }
                if piece.members.iter().any(|&m| self.blocked[m] > 0) {
                    continue;
                }
                let budget_next = budget + piece.gain - self.alpha;
                if budget_next + self.surplus_after[i + 1] < 0 {
                    continue;
                }
                let count_next = count + piece.members.len();
                let best_count = self.best.as_ref().map_or(0, |b| b.count);
                if count_next + (self.k - vol_next) < best_count {
                    continue;
                }
                let com_next = com + piece.com;
                self.chosen.push(i);
                if budget_next >= 0 && count_next >= 2 {
                    let members: Vec<usize> = self
                        .chosen
                        .iter()
                        .flat_map(|&p| self.pieces[p].members.iter().copied())
                        .collect();
                    let candidate = MergeCandidate {
                        count: count_next,
                        com: com_next,
                        ids: self.ix.to_ids(&members),
                    };
                    let better = self
                        .best
                        .as_ref()
                        .is_none_or(|b| candidate.preference(b) == Ordering::Greater);
                    if better {
                        self.best = Some(candidate);
                    }
                }
                self.block(i, 1);
                self.descend(i + 1, count_next, vol_next, com_next, budget_next);
                self.block(i, -1);
                self.chosen.pop();
            }
        }
    }

    let mut search = Search {
        ix: &ix,
        pieces: &pieces,
        surplus_after: &surplus_after,
        k,
        alpha: alpha_i,
        blocked: vec![0; ix.len()],
        chosen: Vec::new(),
        best: None,
    };
    search.descend(0, 0, 0, 0, alpha_i);
    search.best.map(|b| b.ids).unwrap_or_default()
}

/// Whether some non-empty set `Y` has `com(Y) >= vol(Y) * alpha`, ignoring
/// the volume floor. Solved as a max-weight closure: with `m` exceeding any
/// volume, `com * m - vol * (alpha * m - 1) > 0` holds exactly for such
/// sets, and its maximum over all sets is read off a minimum cut.
fn dense_set_exists(ix: &Indexed, alpha: u64) -> bool {
    let n = ix.len();
    if n < 2 || ix.adj.iter().all(Vec::is_empty) {
        return false;
    }
    let m = ix.size.iter().sum::<usize>() as i64 + 1;
    let alpha = alpha as i64;
    let source = n;
    let sink = n + 1;
    let mut caps = Vec::new();
    let mut offset = 0i64;
    for v in 0..n {
        let degree: i64 = ix.adj[v].iter().map(|&u| ix.weight[v][u] as i64 * m).sum();
        let cost = ix.size[v] as i64 * (alpha * m - 1);
        let a = 2 * cost - degree;
        match a.cmp(&0) {
            Ordering::Greater => caps.push(((v, sink), a)),
            Ordering::Less => {
                caps.push(((source, v), -a));
                offset += -a;
            }
            Ordering::Equal => {}
        }
        for &u in &ix.adj[v] {
            caps.push(((v, u), ix.weight[v][u] as i64 * m));
        }
    }
    let vertices: Vec<usize> = (0..n + 2).collect();
    let (_, cut, _) = edmonds_karp_sparse(&vertices, &source, &sink, caps);
    offset - cut > 0
}

/// The set `Y` with `vol(Y) > k` and `com(Y) >= vol(Y) * alpha` of fewest
/// components, then least volume, then lexicographically smallest ids. Such a
/// set is inclusion-minimal. Returns an empty vector when none exists.
pub fn find_epoch_set(g: &ComponentGraph, k: usize, alpha: u64) -> Vec<ComponentId> {
    let ix = Indexed::new(g);
    if !dense_set_exists(&ix, alpha) {
        return Vec::new();
    }
    for cardinality in 2..=ix.len() {
        let mut best: Option<(usize, Vec<usize>)> = None;
        for members in (0..ix.len()).combinations(cardinality) {
            let vol = ix.vol(&members);
            if vol <= k || ix.com(&members) < vol as u64 * alpha {
                continue;
            }
            // Combinations arrive in lexicographic order, so only a strictly
            // smaller volume displaces the incumbent.
            if best.as_ref().is_none_or(|(v, _)| vol < *v) {
                best = Some((vol, members));
            }
        }
        if let Some((_, members)) = best {
            return ix.to_ids(&members);
        }
    }
    Vec::new()
}

/// Connected supersets of the connected set `seed` with volume at most
/// `cap`, each visited once together with its communication cost.
fn connected_supersets(g: &Indexed, seed: &[usize], cap: usize, visit: &mut dyn FnMut(&[usize], u64)) {
    fn extend(
        g: &Indexed,
        cap: usize,
        sub: &mut Vec<usize>,
        vol: usize,
        com: u64,
        mut ext: Vec<usize>,
        visit: &mut dyn FnMut(&[usize], u64),
    ) {
        visit(sub, com);
        while let Some(w) = ext.pop() {
            if vol + g.size[w] > cap {
                continue;
            }
            let mut next = ext.clone();
            for &u in &g.adj[w] {
                let excluded = sub.contains(&u)
                    || next.contains(&u)
                    || sub.iter().any(|&s| g.weight[s][u] > 0);
                if !excluded {
                    next.push(u);
                }
            }
            let gained: u64 = sub.iter().map(|&s| g.weight[s][w]).sum();
            sub.push(w);
            extend(g, cap, sub, vol + g.size[w], com + gained, next, visit);
            sub.pop();
        }
    }

    let vol = g.vol(seed);
    if vol > cap {
        return;
    }
    let mut ext: Vec<usize> = seed
        .iter()
        .flat_map(|&s| g.adj[s].iter().copied())
        .filter(|u| !seed.contains(u))
        .collect();
    ext.sort_unstable();
    ext.dedup();
    extend(g, cap, &mut seed.to_vec(), vol, g.com(seed), ext, visit);
}

fn seed_pair(ix: &Indexed, a: ComponentId, b: ComponentId) -> Option<[usize; 2]> {
    let ia = ix.ids.binary_search(&a).ok()?;
    let ib = ix.ids.binary_search(&b).ok()?;
    (ia != ib && ix.weight[ia][ib] > 0).then_some([ia, ib])
}

/// The merge set among connected sets holding both `a` and `b`, chosen as in
/// [`find_merge_set`].
///
/// If no merge set existed before the weight between `a` and `b` grew by
/// one, every merge set is of this form and the result equals
/// `find_merge_set`.
pub fn find_merge_set_through(
    g: &ComponentGraph,
    k: usize,
    alpha: u64,
    a: ComponentId,
    b: ComponentId,
) -> Vec<ComponentId> {
    let ix = Indexed::new(g);
    let Some(seed) = seed_pair(&ix, a, b) else {
        return Vec::new();
    };
    let mut best: Option<MergeCandidate> = None;
    connected_supersets(&ix, &seed, k, &mut |members, com| {
        let count = members.len();
        if com < (count as u64 - 1) * alpha || best.as_ref().is_some_and(|b| b.count > count) {
            return;
        }
        let candidate = MergeCandidate {
            count,
            com,
            ids: ix.to_ids(members),
        };
        if best
            .as_ref()
            .is_none_or(|b| candidate.preference(b) == Ordering::Greater)
        {
            best = Some(candidate);
        }
    });
    best.map(|b| b.ids).unwrap_or_default()
}

/// The epoch set when it must hold both `a` and `b`.
///
/// If neither a merge set nor an epoch set existed before the weight between
/// `a` and `b` grew by one, and no merge set exists now, then
/// `com(Y) - alpha * vol(Y)` is at most zero over sets holding both, the
/// qualifying sets are exactly its maximizers, and the least maximizer is
/// the answer of [`find_epoch_set`]. It is read off a minimum cut. If the
/// cut contradicts that premise, the exhaustive search decides.
pub fn find_epoch_set_through(
    g: &ComponentGraph,
    k: usize,
    alpha: u64,
    a: ComponentId,
    b: ComponentId,
) -> Vec<ComponentId> {
    let ix = Indexed::new(g);
    let Some(seed) = seed_pair(&ix, a, b) else {
        return Vec::new();
    };
    if !dense_set_exists(&ix, alpha) {
        return Vec::new();
    }
    let n = ix.len();
    let edges: Vec<(usize, usize, i64)> = (0..n)
        .flat_map(|i| ix.adj[i].iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
        .map(|(i, j)| (i, j, ix.weight[i][j] as i64))
        .collect();
    let total: i64 = edges.iter().map(|e| e.2).sum();
    let alpha = alpha as i64;
    let infinite = total + alpha * ix.size.iter().sum::<usize>() as i64 + 1;
    let source = n + edges.len();
    let sink = source + 1;
    let mut caps = Vec::with_capacity(3 * edges.len() + n + 2);
    for (e, &(i, j, w)) in edges.iter().enumerate() {
        caps.push(((source, n + e), w));
        caps.push(((n + e, i), infinite));
        caps.push(((n + e, j), infinite));
    }
    for v in 0..n {
        caps.push(((v, sink), alpha * ix.size[v] as i64));
    }
    for s in seed {
        caps.push(((source, s), infinite));
    }
    let vertices: Vec<usize> = (0..sink + 1).collect();
    let (_, flow, cut) = edmonds_karp_sparse(&vertices, &source, &sink, caps);
    let best = total - flow;
    let mut members: Vec<usize> = cut
        .iter()
        .filter(|((from, to), _)| *to == sink && *from < n)
        .map(|((from, _), _)| *from)
        .collect();
    members.sort_unstable();
    match best.cmp(&0) {
        Ordering::Less => Vec::new(),
        Ordering::Equal if ix.vol(&members) > k => ix.to_ids(&members),
        _ => find_epoch_set(g, k, alpha as u64),
    }
}

#[cfg(test)]
mod oracle {
    //! Naive enumeration over every subset, independent of the searches above.
    use super::*;

    fn subsets(g: &ComponentGraph) -> Vec<Vec<ComponentId>> {
        let ids: Vec<ComponentId> = g.ids().collect();
        (0u64..1 << ids.len())
            .map(|mask| {
                ids.iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &id)| id)
                    .collect()
            })
            .collect()
    }

    pub fn merge_set(g: &ComponentGraph, k: usize, alpha: u64) -> Vec<ComponentId> {
        subsets(g)
            .into_iter()
            .filter(|x| {
                x.len() >= 2
                    && g.vol(x) <= k
                    && g.com(x) >= (x.len() as u64 - 1) * alpha
            })
            .min_by(|a, b| {
                b.len()
                    .cmp(&a.len())
                    .then(g.com(b).cmp(&g.com(a)))
                    .then(a.cmp(b))
            })
            .unwrap_or_default()
    }

    pub fn epoch_set(g: &ComponentGraph, k: usize, alpha: u64) -> Vec<ComponentId> {
        let qualifying: Vec<Vec<ComponentId>> = subsets(g)
            .into_iter()
            .filter(|y| g.vol(y) > k && g.com(y) >= g.vol(y) as u64 * alpha)
            .collect();
        // Keep inclusion-minimal sets, then order by cardinality, volume, ids.
        qualifying
            .iter()
            .filter(|y| {
                !qualifying
                    .iter()
                    .any(|z| z.len() < y.len() && z.iter().all(|id| y.contains(id)))
            })
            .min_by(|a, b| {
                a.len()
                    .cmp(&b.len())
                    .then(g.vol(a).cmp(&g.vol(b)))
                    .then(a.cmp(b))
            })
            .cloned()
            .unwrap_or_default()
    }
}
