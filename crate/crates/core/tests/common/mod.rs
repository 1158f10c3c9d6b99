//! Helpers shared by the integration tests.
#![allow(dead_code)]

use brp_core::crep::{ComponentGraph, ComponentId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn all_subsets(ids: &[ComponentId]) -> Vec<Vec<ComponentId>> {
    (0u32..1 << ids.len())
        .map(|mask| {
            ids.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &id)| id)
                .collect()
        })
        .collect()
}

fn com(g: &ComponentGraph, set: &[ComponentId]) -> u64 {
    let mut total = 0;
    for (i, &a) in set.iter().enumerate() {
        for &b in &set[i + 1..] {
            total += g.weight(a, b);
        }
    }
    total
}

fn vol(g: &ComponentGraph, set: &[ComponentId]) -> usize {
    set.iter().map(|&id| g.size(id)).sum()
}

/// Largest qualifying merge set by plain enumeration, with the same
/// tie-breaks as the library: more weight, then smaller ids.
pub fn naive_merge_set(g: &ComponentGraph, k: usize, alpha: u64) -> Vec<ComponentId> {
    let ids: Vec<ComponentId> = g.ids().collect();
    let mut best: Option<Vec<ComponentId>> = None;
    for x in all_subsets(&ids) {
        if x.len() < 2 || vol(g, &x) > k || com(g, &x) < (x.len() as u64 - 1) * alpha {
            continue;
        }
        let replace = match &best {
            None => true,
            Some(b) => (x.len(), com(g, &x), std::cmp::Reverse(&x))
                > (b.len(), com(g, b), std::cmp::Reverse(b)),
        };
        if replace {
            best = Some(x);
        }
    }
    best.unwrap_or_default()
}

/// Inclusion-minimal qualifying epoch set of fewest components, then least
/// volume, then smallest ids.
pub fn naive_epoch_set(g: &ComponentGraph, k: usize, alpha: u64) -> Vec<ComponentId> {
    let ids: Vec<ComponentId> = g.ids().collect();
    let qualifying: Vec<Vec<ComponentId>> = all_subsets(&ids)
        .into_iter()
        .filter(|y| vol(g, y) > k && com(g, y) >= vol(g, y) as u64 * alpha)
        .collect();
    let minimal = qualifying.iter().filter(|y| {
        !qualifying
            .iter()
            .any(|z| z.len() < y.len() && z.iter().all(|id| y.contains(id)))
    });
    minimal
        .min_by_key(|y| (y.len(), vol(g, y), (*y).clone()))
        .cloned()
        .unwrap_or_default()
}

/// A random component graph with at most `max_components` components of
/// size at most `k`, with sparse, non-contiguous ids.
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    max_components: usize,
    k: usize,
    alpha: u64,
) -> ComponentGraph {
    let count = rng.random_range(1..=max_components);
    let ids: Vec<ComponentId> = (0..count).map(|i| 5 * i + rng.random_range(0..5)).collect();
    let density = rng.random_range(0.1..0.9);
    let mut g = ComponentGraph::new();
    for &id in &ids {
        g.insert(id, rng.random_range(1..=k));
    }
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            if rng.random_bool(density) {
                g.set_weight(a, b, rng.random_range(1..=2 * alpha * k as u64));
            }
        }
    }
    g
}
