//! Fixtures shared by the benchmarks.

use brp_core::adversaries::RandomPairs;
use brp_core::{Configuration, Crep, Params, Request, RequestSource};

/// `steps` uniform random requests on `n` nodes.
pub fn uniform_requests(seed: u64, n: usize, steps: u64) -> Vec<Request> {
    let mut src = RandomPairs::new(seed, n, steps).expect("valid workload");
    let placeholder = Configuration::blocks(n, 1, n).expect("one big cluster");
    std::iter::from_fn(|| src.next_request(&placeholder).expect("oblivious source"))
        .collect()
}

/// A CREP instance that has already handled `warmup` random requests.
pub fn warmed_crep(k: usize, l: usize, alpha: u64, warmup: u64) -> Crep {
    let params = Params::new(k * l, k, l, alpha, 4).expect("valid params");
    let mut crep = Crep::new(&params, &Configuration::initial(&params).expect("blocks"))
        .expect("augmented geometry");
    for request in uniform_requests(17, params.n, warmup) {
        crep.handle_request(&request).expect("warmup step");
    }
    crep
}
