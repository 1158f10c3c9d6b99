use crate::engine::RequestSource;
use crate::error::{BrpError, Result};
use crate::model::{Configuration, Request};

/// Always requests the cut ring edge `{i, i+1 mod n}` with the least `i`.
#[derive(Debug, Clone)]
pub struct Ring {
    n: usize,
}

impl Ring {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(BrpError::InvalidParams(format!("a ring needs 3 nodes, got {n}")));
        }
        Ok(Self { n })
    }
}

impl RequestSource for Ring {
    fn next_request(&mut self, online: &Configuration) -> Result<Option<Request>> {
        let a = online.assignment();
        let i = (0..self.n)
            .find(|&i| a[i] != a[(i + 1) % self.n])
            .ok_or_else(|| BrpError::AdversaryStuck("the whole ring shares one cluster".into()))?;
        Request::new(i, (i + 1) % self.n).map(Some)
    }
}

/// Zero-based index of the ring edge `request` lies on, if any.
pub fn ring_edge(request: &Request, n: usize) -> Option<usize> {
    let (u, v) = request.pair();
    if (u + 1) % n == v {
        Some(u)
    } else if (v + 1) % n == u {
        Some(v)
    } else {
        None
    }
}

/// Requests cut by each of the `k` contiguous-block partitions of the ring;
/// partition `m` cuts edge `i` iff `i mod k == m`. Off-ring requests are
/// ignored.
pub fn order_preserving_costs(requests: &[Request], n: usize, k: usize) -> Vec<u64> {
    let mut costs = vec![0; k];
    for r in requests {
        if let Some(i) = ring_edge(r, n) {
            costs[i % k] += 1;
        }
    }
    costs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_cut_edge() {
        let mut ring = Ring::new(4).unwrap();
        let on = Configuration::blocks(4, 2, 2).unwrap();
        assert_eq!(ring.next_request(&on).unwrap(), Some(Request::new(1, 2).unwrap()));
    }

    #[test]
    fn whole_ring_in_one_cluster_is_stuck() {
        let mut ring = Ring::new(4).unwrap();
        let on = Configuration::blocks(4, 2, 4).unwrap();
        assert!(matches!(ring.next_request(&on), Err(BrpError::AdversaryStuck(_))));
    }

    #[test]
    fn order_preserving_cuts_partition_the_edges() {
        let n = 6;
        let reqs: Vec<Request> = (0..n)
            .map(|i| Request::new(i, (i + 1) % n).unwrap())
            .collect();
        assert_eq!(order_preserving_costs(&reqs, n, 3), vec![2, 2, 2]);
        assert_eq!(ring_edge(&Request::new(0, 5).unwrap(), n), Some(5));
        assert_eq!(ring_edge(&Request::new(0, 2).unwrap(), n), None);
    }
}
