//! A naive unaugmented online algorithm for any `k`.
//!
//! After a remote request `{u, v}` is served, the pair's counter grows; once it
//! reaches `tau`, `v` is swapped into `u`'s cluster against the member of that
//! cluster with the least traffic to the rest of it.

use crate::engine::OnlineAlgorithm;
use crate::error::{BrpError, Result};
use crate::model::{ClusterId, Configuration, Move, NodeId, Params, Request};

#[derive(Debug, Clone)]
pub struct ThresholdSwap {
    tau: u64,
    assignment: Vec<ClusterId>,
    /// Remote requests per pair since the pair was last touched by a swap.
    pending: Vec<Vec<u64>>,
    /// All requests per pair, never reset.
    traffic: Vec<Vec<u64>>,
}

impl ThresholdSwap {
    pub fn new(params: &Params, initial: &Configuration, tau: u64) -> Result<Self> {
        if tau == 0 {
            return Err(BrpError::InvalidParams("tau must be positive".into()));
        }
        if initial.n() != params.n || initial.capacity() != params.k {
            return Err(BrpError::GeometryError(format!(
                "threshold swap runs unaugmented: {} nodes in clusters of {}",
                params.n, params.k
            )));
        }
        let n = params.n;
        Ok(Self {
            tau,
            assignment: initial.assignment().to_vec(),
            pending: vec![vec![0; n]; n],
            traffic: vec![vec![0; n]; n],
        })
    }

    pub fn handle_request(&mut self, request: &Request) -> Result<Vec<Move>> {
        let n = self.assignment.len();
        request.validate(n)?;
        let (u, v) = request.pair();
        self.traffic[u][v] += 1;
        self.traffic[v][u] += 1;
        let (cu, cv) = (self.assignment[u], self.assignment[v]);
        if cu == cv {
            return Ok(Vec::new());
        }
        self.pending[u][v] += 1;
        self.pending[v][u] += 1;
        if self.pending[u][v] < self.tau {
            return Ok(Vec::new());
        }

        let cluster: Vec<NodeId> = (0..n).filter(|&x| self.assignment[x] == cu).collect();
        let evicted = cluster
            .iter()
            .copied()
            .filter(|&w| w != u)
            .min_by_key(|&w| {
                let inside: u64 = cluster.iter().map(|&x| self.traffic[w][x]).sum();
                (inside, w)
            })
            .ok_or_else(|| BrpError::GeometryError("clusters of one cannot swap".into()))?;
        self.assignment[v] = cu;
        self.assignment[evicted] = cv;
        for x in 0..n {
            for node in [v, evicted] {
                self.pending[node][x] = 0;
                self.pending[x][node] = 0;
            }
        }
        Ok(vec![Move::new(v, cu), Move::new(evicted, cv)])
    }
}

impl OnlineAlgorithm for ThresholdSwap {
    fn name(&self) -> &str {
        "threshold-swap"
    }

    fn before_serve(&mut self, config: &Configuration, _: &Request) -> Result<Vec<Move>> {
        if config.assignment() != self.assignment.as_slice() {
            return Err(BrpError::GeometryError(
                "engine configuration diverged from threshold-swap's placement".into(),
            ));
        }
        Ok(Vec::new())
    }

    fn after_serve(&mut self, _: &Configuration, request: &Request) -> Result<Vec<Move>> {
        self.handle_request(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swaps_after_tau_remote_requests() {
        let params = Params::unaugmented(3, 2, 1).unwrap();
        let initial = Configuration::initial(&params).unwrap();
        let mut alg = ThresholdSwap::new(&params, &initial, 2).unwrap();
        alg.handle_request(&Request::new(0, 1).unwrap()).unwrap();
        assert!(alg.handle_request(&Request::new(1, 4).unwrap()).unwrap().is_empty());
        // Node 2 has no traffic inside cluster 0, so it makes room for 4.
        let moves = alg.handle_request(&Request::new(1, 4).unwrap()).unwrap();
        assert_eq!(moves, vec![Move::new(4, 0), Move::new(2, 1)]);
    }
}
