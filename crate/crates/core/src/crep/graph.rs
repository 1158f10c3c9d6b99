use std::collections::BTreeMap;

pub type ComponentId = usize;

fn key(a: ComponentId, b: ComponentId) -> (ComponentId, ComponentId) {
    (a.min(b), a.max(b))
}

/// Weighted graph over components. Only positive weights are stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentGraph {
    sizes: BTreeMap<ComponentId, usize>,
    weights: BTreeMap<(ComponentId, ComponentId), u64>,
}

impl ComponentGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph over components with the given sizes and pairwise weights.
    /// Zero weights are dropped.
    pub fn from_parts(
        sizes: impl IntoIterator<Item = (ComponentId, usize)>,
        weights: impl IntoIterator<Item = ((ComponentId, ComponentId), u64)>,
    ) -> Self {
        let mut g = Self::new();
        for (id, size) in sizes {
            g.insert(id, size);
        }
        for ((a, b), w) in weights {
            g.set_weight(a, b, w);
        }
        g
    }

    pub fn insert(&mut self, id: ComponentId, size: usize) {
        self.sizes.insert(id, size);
    }

    /// Removes a component together with every edge touching it.
    pub fn remove(&mut self, id: ComponentId) {
        self.sizes.remove(&id);
        self.weights.retain(|&(a, b), _| a != id && b != id);
    }

    pub fn contains(&self, id: ComponentId) -> bool {
        self.sizes.contains_key(&id)
    }

    pub fn size(&self, id: ComponentId) -> usize {
        self.sizes[&id]
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Component ids in increasing order.
    pub fn ids(&self) -> impl Iterator<Item = ComponentId> + '_ {
        self.sizes.keys().copied()
    }

    pub fn sizes(&self) -> &BTreeMap<ComponentId, usize> {
        &self.sizes
    }

    pub fn weight(&self, a: ComponentId, b: ComponentId) -> u64 {
        self.weights.get(&key(a, b)).copied().unwrap_or(0)
    }

    pub fn set_weight(&mut self, a: ComponentId, b: ComponentId, w: u64) {
        assert_ne!(a, b, "self loops carry no weight");
        if w == 0 {
            self.weights.remove(&key(a, b));
        } else {
            self.weights.insert(key(a, b), w);
        }
    }

    pub fn add_weight(&mut self, a: ComponentId, b: ComponentId, delta: u64) {
        let w = self.weight(a, b) + delta;
        self.set_weight(a, b, w);
    }

    /// Positive-weight edges, keyed `(min, max)`, in increasing key order.
    pub fn edges(&self) -> impl Iterator<Item = ((ComponentId, ComponentId), u64)> + '_ {
        self.weights.iter().map(|(&k, &w)| (k, w))
    }

    pub fn vol(&self, set: &[ComponentId]) -> usize {
        set.iter().map(|id| self.sizes[id]).sum()
    }

    pub fn com(&self, set: &[ComponentId]) -> u64 {
        let mut total = 0;
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                total += self.weight(a, b);
            }
        }
        total
    }

    /// Replaces the components in `set` by one component `into` whose weight
    /// to every outside component is the sum of the members' weights.
    pub fn contract(&mut self, set: &[ComponentId], into: ComponentId) {
        let size = self.vol(set);
        let mut outside: BTreeMap<ComponentId, u64> = BTreeMap::new();
        for (&(a, b), &w) in &self.weights {
            match (set.contains(&a), set.contains(&b)) {
                (true, false) => *outside.entry(b).or_default() += w,
                (false, true) => *outside.entry(a).or_default() += w,
                _ => {}
            }
        }
        for &id in set {
            self.remove(id);
        }
        self.insert(into, size);
        for (other, w) in outside {
            self.set_weight(into, other, w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contract_sums_outside_weights() {
        let mut g = ComponentGraph::from_parts(
            [(0, 1), (1, 1), (2, 2), (3, 1)],
            [((0, 1), 3), ((0, 2), 1), ((1, 2), 2), ((1, 3), 5)],
        );
        assert_eq!(g.vol(&[0, 1, 2]), 4);
        assert_eq!(g.com(&[0, 1, 2]), 6);
        g.contract(&[0, 1], 9);
        assert_eq!(g.size(9), 2);
        assert_eq!(g.weight(9, 2), 3);
        assert_eq!(g.weight(3, 9), 5);
        assert!(!g.contains(0));
        assert_eq!(g.edges().count(), 2);
    }

    #[test]
    fn zero_weights_are_not_edges() {
        let mut g = ComponentGraph::from_parts([(0, 1), (1, 1)], [((0, 1), 0)]);
        assert_eq!(g.edges().count(), 0);
        g.add_weight(1, 0, 2);
        assert_eq!(g.weight(0, 1), 2);
        g.remove(1);
        assert_eq!(g.edges().count(), 0);
    }
}
