use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::RequestSource;
use crate::error::{BrpError, Result};
use crate::model::{Configuration, NodeId, Params, Request};

/// Uniform random pairs.
#[derive(Debug, Clone)]
pub struct RandomPairs {
    rng: ChaCha8Rng,
    n: usize,
    left: u64,
}

impl RandomPairs {
    pub fn new(seed: u64, n: usize, steps: u64) -> Result<Self> {
        if n < 2 {
            return Err(BrpError::InvalidParams(format!("pairs need n >= 2, got {n}")));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            left: steps,
        })
    }
}

fn uniform_pair(rng: &mut ChaCha8Rng, n: usize) -> (NodeId, NodeId) {
    let u = rng.random_range(0..n);
    let mut v = rng.random_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    (u, v)
}

impl RequestSource for RandomPairs {
    fn next_request(&mut self, _: &Configuration) -> Result<Option<Request>> {
        if self.left == 0 {
            return Ok(None);
        }
        self.left -= 1;
        let (u, v) = uniform_pair(&mut self.rng, self.n);
        Request::new(u, v).map(Some)
    }
}

/// Random pairs biased towards a hidden partition into `l` groups of `k`.
/// Each request is intra-group with probability proportional to `p_in`
/// times the number of intra-group pairs, and uniform within its class.
#[derive(Debug, Clone)]
pub struct PlantedPartition {
    rng: ChaCha8Rng,
    groups: Vec<Vec<NodeId>>,
    group_of: Vec<usize>,
    intra_share: f64,
    left: u64,
}

impl PlantedPartition {
    pub fn new(seed: u64, params: &Params, p_in: f64, p_out: f64, steps: u64) -> Result<Self> {
        for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(BrpError::BadProbability(format!("{name} = {p} outside [0, 1]")));
            }
        }
        let (k, l) = (params.k, params.l);
        let n_in = (l * k * (k - 1) / 2) as f64;
        let n_out = (params.n * (params.n - 1) / 2) as f64 - n_in;
        let w_in = p_in * n_in;
        let w_out = p_out * n_out;
        if w_in + w_out <= 0.0 {
            return Err(BrpError::BadProbability(
                "no pair has positive weight".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes: Vec<NodeId> = (0..params.n).collect();
        nodes.shuffle(&mut rng);
        let mut groups: Vec<Vec<NodeId>> = nodes.chunks(k).map(<[NodeId]>::to_vec).collect();
        for g in &mut groups {
            g.sort_unstable();
        }
        let mut group_of = vec![0; params.n];
        for (i, g) in groups.iter().enumerate() {
            for &x in g {
                group_of[x] = i;
            }
        }
        Ok(Self {
            rng,
            groups,
            group_of,
            intra_share: w_in / (w_in + w_out),
            left: steps,
        })
    }

    /// The hidden groups, each sorted.
    pub fn groups(&self) -> &[Vec<NodeId>] {
        &self.groups
    }

    pub fn same_group(&self, u: NodeId, v: NodeId) -> bool {
        self.group_of[u] == self.group_of[v]
    }
}

impl RequestSource for PlantedPartition {
    fn next_request(&mut self, _: &Configuration) -> Result<Option<Request>> {
        if self.left == 0 {
            return Ok(None);
        }
        self.left -= 1;
        let n = self.group_of.len();
        let intra = self.rng.random_bool(self.intra_share);
        // Rejection sampling keeps each class uniform over its pairs.
        loop {
            let (u, v) = if intra {
                let g = &self.groups[self.rng.random_range(0..self.groups.len())];
                let (i, j) = uniform_pair(&mut self.rng, g.len());
                (g[i], g[j])
            } else {
                uniform_pair(&mut self.rng, n)
            };
            if intra || !self.same_group(u, v) {
                return Request::new(u, v).map(Some);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn drain(src: &mut dyn RequestSource, n: usize) -> Vec<(NodeId, NodeId)> {
        let dummy = Configuration::blocks(n, n, 1).unwrap();
        std::iter::from_fn(|| src.next_request(&dummy).unwrap())
            .map(|r| r.pair())
            .collect()
    }

    #[test]
    fn same_seed_same_stream() {
        let a = drain(&mut RandomPairs::new(7, 6, 200).unwrap(), 6);
        let b = drain(&mut RandomPairs::new(7, 6, 200).unwrap(), 6);
        assert_eq!(a.len(), 200);
        assert_eq!(a, b);
        let params = Params::unaugmented(3, 3, 1).unwrap();
        let c = drain(&mut PlantedPartition::new(7, &params, 0.9, 0.1, 200).unwrap(), 9);
        let d = drain(&mut PlantedPartition::new(7, &params, 0.9, 0.1, 200).unwrap(), 9);
        assert_eq!(c, d);
    }

    #[test]
    fn no_outside_traffic_when_p_out_is_zero() {
        let params = Params::unaugmented(3, 4, 1).unwrap();
        let mut src = PlantedPartition::new(3, &params, 1.0, 0.0, 2000).unwrap();
        let groups = src.clone();
        for (u, v) in drain(&mut src, 12) {
            assert!(groups.same_group(u, v));
        }
    }

    #[test]
    fn probability_guards() {
        let params = Params::unaugmented(2, 2, 1).unwrap();
        assert!(matches!(
            PlantedPartition::new(0, &params, 1.5, 0.0, 1),
            Err(BrpError::BadProbability(_))
        ));
        assert!(matches!(
            PlantedPartition::new(0, &params, 0.0, 0.0, 1),
            Err(BrpError::BadProbability(_))
        ));
    }

    #[test]
    fn equal_weights_match_uniform_pairs() {
        let params = Params::unaugmented(3, 3, 1).unwrap();
        let n = params.n;
        let draws = 100_000;
        let mut src = PlantedPartition::new(11, &params, 0.4, 0.4, draws).unwrap();
        let mut counts = vec![vec![0u64; n]; n];
        for (u, v) in drain(&mut src, n) {
            counts[u.min(v)][u.max(v)] += 1;
        }
        let cells = n * (n - 1) / 2;
        let expected = draws as f64 / cells as f64;
        let stat: f64 = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .map(|(u, v)| {
                let d = counts[u][v] as f64 - expected;
                d * d / expected
            })
            .sum();
        let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "chi-square {stat} >= {critical}");
    }
}
