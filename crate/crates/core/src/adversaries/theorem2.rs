use crate::engine::RequestSource;
use crate::error::{BrpError, Result};
use crate::model::{Configuration, NodeId, Request};

/// Phase adversary on two clusters. Nodes `u_i = i - 1` and `v_i = k + i - 1`
/// for `i = 1..=k`. Phase `p` cycles requests from `u_{p+1}` to `u_p`,
/// `u_{p-1}`, ... until the online algorithm holds all of them in one
/// cluster. If the first phase took fewer than `2 alpha` requests, `u_1` is
/// left out of every later phase.
#[derive(Debug, Clone)]
pub struct Theorem2 {
    k: usize,
    alpha: u64,
    phase: usize,
    cursor: usize,
    drop_first: bool,
    profile: Vec<u64>,
    done: bool,
}

impl Theorem2 {
    pub fn new(k: usize, alpha: u64) -> Result<Self> {
        if k < 2 {
            return Err(BrpError::InvalidParams(format!("phases need k >= 2, got {k}")));
        }
        Ok(Self {
            k,
            alpha,
            phase: 1,
            cursor: 0,
            drop_first: false,
            profile: vec![0],
            done: false,
        })
    }

    pub fn u(i: usize) -> NodeId {
        i - 1
    }

    pub fn v(&self, i: usize) -> NodeId {
        self.k + i - 1
    }

    /// `{v_1, u_2..u_k}` and `{u_1, v_2..v_k}`.
    pub fn initial_placement(&self) -> Configuration {
        let k = self.k;
        let first: Vec<NodeId> = std::iter::once(self.v(1)).chain((2..=k).map(Self::u)).collect();
        let second: Vec<NodeId> = std::iter::once(Self::u(1)).chain((2..=k).map(|i| self.v(i))).collect();
        Configuration::from_clusters(&[first, second], 2, k).expect("two full clusters")
    }

    /// Requests issued per phase so far.
    pub fn profile(&self) -> &[u64] {
        &self.profile
    }

    pub fn drops_first(&self) -> bool {
        self.drop_first
    }

    pub fn finished(&self) -> bool {
        self.done
    }

    fn lowest(&self) -> usize {
        if self.drop_first && self.phase > 1 {
            2
        } else {
            1
        }
    }

    fn phase_nodes(&self) -> impl Iterator<Item = NodeId> {
        (self.lowest()..=self.phase + 1).map(Self::u)
    }
}

impl RequestSource for Theorem2 {
    fn next_request(&mut self, online: &Configuration) -> Result<Option<Request>> {
        if self.done {
            return Ok(None);
        }
        loop {
            let a = online.assignment();
            let target = a[Self::u(self.phase + 1)];
            if !self.phase_nodes().all(|x| a[x] == target) {
                break;
            }
            if self.phase == 1 && self.profile[0] < 2 * self.alpha {
                self.drop_first = true;
            }
            if self.phase == self.k - 1 {
                self.done = true;
                return Ok(None);
            }
            self.phase += 1;
            self.cursor = 0;
            self.profile.push(0);
        }
        // Partners u_p, u_{p-1}, ..., u_lowest in turn.
        let span = self.phase + 1 - self.lowest();
        let partner = self.phase - self.cursor % span;
        self.cursor += 1;
        *self.profile.last_mut().expect("current phase") += 1;
        Request::new(Self::u(partner), Self::u(self.phase + 1)).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prescribed_start() {
        let adv = Theorem2::new(3, 1).unwrap();
        let start = adv.initial_placement();
        assert_eq!(start.members(0), vec![1, 2, 3]);
        assert_eq!(start.members(1), vec![0, 4, 5]);
    }

    #[test]
    fn round_robin_within_a_phase() {
        let mut adv = Theorem2::new(4, 1).unwrap();
        let start = adv.initial_placement();
        assert_eq!(adv.next_request(&start).unwrap(), Some(Request::new(0, 1).unwrap()));
        assert_eq!(adv.next_request(&start).unwrap(), Some(Request::new(0, 1).unwrap()));
        // Collocate u1 with u2 (and u3): phase 1 took 2 requests = 2 alpha.
        let moved = Configuration::from_clusters(&[vec![0, 1, 2, 3], vec![4, 5, 6, 7]], 2, 4).unwrap();
        // u1..u4 all together: phases 2 and 3 are already satisfied.
        assert_eq!(adv.next_request(&moved).unwrap(), None);
        assert!(!adv.drops_first());
        assert_eq!(adv.profile(), &[2, 0, 0]);

        let mut adv = Theorem2::new(4, 1).unwrap();
        adv.next_request(&start).unwrap();
        let phase2 = Configuration::from_clusters(&[vec![0, 1, 2, 7], vec![3, 4, 5, 6]], 2, 4).unwrap();
        let got: Vec<Request> = (0..3).map(|_| adv.next_request(&phase2).unwrap().unwrap()).collect();
        assert_eq!(got[0], Request::new(2, 3).unwrap());
        assert_eq!(got[1], Request::new(1, 3).unwrap());
        assert_eq!(got[2], Request::new(2, 3).unwrap());
        assert!(adv.drops_first());
    }

    #[test]
    fn exactly_two_alpha_keeps_u1() {
        let mut adv = Theorem2::new(3, 2).unwrap();
        let start = adv.initial_placement();
        for _ in 0..4 {
            adv.next_request(&start).unwrap();
        }
        let together = Configuration::from_clusters(&[vec![0, 1, 3], vec![2, 4, 5]], 2, 3).unwrap();
        let r = adv.next_request(&together).unwrap().unwrap();
        assert_eq!(r, Request::new(1, 2).unwrap());
        assert!(!adv.drops_first());
        let r = adv.next_request(&together).unwrap().unwrap();
        assert_eq!(r, Request::new(0, 2).unwrap());
    }
}
