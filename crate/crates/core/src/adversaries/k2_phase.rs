use crate::engine::RequestSource;
use crate::error::{BrpError, Result};
use crate::model::{Configuration, NodeId, Request};

/// Phase adversary for clusters of two. Each phase repeats one split pair
/// until the online algorithm collocates it. The first pair is the least
/// split pair; afterwards the pair is `{b, z}` where `b` is the second node of
/// the previous pair and `z` was `b`'s cluster-mate when that phase began.
#[derive(Debug, Clone)]
pub struct K2Phase {
    phases: usize,
    pair: Option<(NodeId, NodeId)>,
    /// Online placement when the current phase began.
    phase_start: Option<Configuration>,
    profile: Vec<u64>,
}

impl K2Phase {
    pub fn new(phases: usize) -> Result<Self> {
        if phases == 0 {
            return Err(BrpError::InvalidParams("at least one phase".into()));
        }
        Ok(Self {
            phases,
            pair: None,
            phase_start: None,
            profile: Vec::new(),
        })
    }

    /// Requests issued per phase so far.
    pub fn profile(&self) -> &[u64] {
        &self.profile
    }

    /// Phases whose pair the online algorithm has collocated.
    pub fn completed(&self) -> usize {
        match self.pair {
            Some(_) => self.profile.len() - 1,
            None => self.profile.len(),
        }
    }

    fn least_split_pair(online: &Configuration) -> Result<(NodeId, NodeId)> {
        let a = online.assignment();
        (0..a.len())
            .flat_map(|u| (u + 1..a.len()).map(move |v| (u, v)))
            .find(|&(u, v)| a[u] != a[v])
            .ok_or_else(|| BrpError::AdversaryStuck("no split pair".into()))
    }

    fn mate(config: &Configuration, node: NodeId) -> Option<NodeId> {
        let cluster = config.assignment()[node];
        config.members(cluster).into_iter().find(|&m| m != node)
    }
}

impl RequestSource for K2Phase {
    fn next_request(&mut self, online: &Configuration) -> Result<Option<Request>> {
        if let Some((a, b)) = self.pair {
            if online.assignment()[a] == online.assignment()[b] {
                self.pair = None;
                if self.profile.len() == self.phases {
                    return Ok(None);
                }
                let before = self.phase_start.as_ref().expect("phase started");
                let next = Self::mate(before, b)
                    .map(|z| (b, z))
                    .filter(|&(b, z)| online.assignment()[b] != online.assignment()[z]);
                let next = match next {
                    Some(p) => p,
                    None => Self::least_split_pair(online)?,
                };
                self.begin(next, online);
            }
        } else if self.profile.len() == self.phases {
            return Ok(None);
        } else {
            let first = Self::least_split_pair(online)?;
            self.begin(first, online);
        }
        let (a, b) = self.pair.expect("phase in progress");
        *self.profile.last_mut().expect("phase in progress") += 1;
        Request::new(a, b).map(Some)
    }
}

impl K2Phase {
    fn begin(&mut self, pair: (NodeId, NodeId), online: &Configuration) {
        self.pair = Some(pair);
        self.phase_start = Some(online.clone());
        self.profile.push(0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn next_phase_pairs_with_former_mate() {
        let mut adv = K2Phase::new(3).unwrap();
        let start = Configuration::blocks(4, 2, 2).unwrap();
        assert_eq!(adv.next_request(&start).unwrap(), Some(Request::new(0, 2).unwrap()));
        assert_eq!(adv.next_request(&start).unwrap(), Some(Request::new(0, 2).unwrap()));
        // 2 joins 0; its former mate 3 is now apart from it.
        let swapped = Configuration::from_clusters(&[vec![0, 2], vec![1, 3]], 2, 2).unwrap();
        assert_eq!(adv.next_request(&swapped).unwrap(), Some(Request::new(2, 3).unwrap()));
        assert_eq!(adv.profile(), &[2, 1]);
        assert_eq!(adv.completed(), 1);
    }

    #[test]
    fn stops_after_configured_phases() {
        let mut adv = K2Phase::new(1).unwrap();
        let start = Configuration::blocks(4, 2, 2).unwrap();
        adv.next_request(&start).unwrap();
        let swapped = Configuration::from_clusters(&[vec![0, 2], vec![1, 3]], 2, 2).unwrap();
        assert_eq!(adv.next_request(&swapped).unwrap(), None);
        assert_eq!(adv.profile(), &[1]);
    }
}
