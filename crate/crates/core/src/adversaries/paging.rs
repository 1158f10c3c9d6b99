use std::collections::VecDeque;

use crate::engine::RequestSource;
use crate::error::{BrpError, Result};
use crate::model::{Configuration, NodeId, Request};

/// Encodes a paging sequence over `k` items as requests on two clusters of
/// `k`. Items are nodes `0..k`, the dummy is node `k`, and nodes above it are
/// never requested. Each page request becomes `2 alpha + 1` requests between
/// the item and the dummy; between consecutive pages, `alpha` filler requests
/// pair the dummy with the lowest other node sharing its cluster.
#[derive(Debug, Clone)]
pub struct PagingReduction {
    k: usize,
    alpha: u64,
    pages: VecDeque<NodeId>,
    /// Item requests still to emit for the current page.
    item_left: u64,
    current: Option<NodeId>,
    filler_left: u64,
}

impl PagingReduction {
    pub fn new(k: usize, alpha: u64, pages: Vec<NodeId>) -> Result<Self> {
        if k < 2 {
            return Err(BrpError::MalformedPagingSequence(format!(
                "k = {k} leaves no cache slot"
            )));
        }
        if let Some((i, &page)) = pages.iter().enumerate().find(|(_, &p)| p >= k) {
            return Err(BrpError::MalformedPagingSequence(format!(
                "page {i} requests item {page}, only {k} items exist"
            )));
        }
        Ok(Self {
            k,
            alpha,
            pages: pages.into(),
            item_left: 0,
            current: None,
            filler_left: 0,
        })
    }

    pub fn dummy(&self) -> NodeId {
        self.k
    }

    /// Items `0..k-1` and the dummy in the first cluster, the last item and
    /// the unused nodes in the second.
    pub fn initial_placement(&self) -> Configuration {
        let k = self.k;
        let first: Vec<NodeId> = (0..k - 1).chain(std::iter::once(k)).collect();
        let second: Vec<NodeId> = std::iter::once(k - 1).chain(k + 1..2 * k).collect();
        Configuration::from_clusters(&[first, second], 2, k).expect("two full clusters")
    }

    /// Number of requests a paging sequence of length `m` turns into.
    pub fn expected_len(m: usize, alpha: u64) -> u64 {
        let m = m as u64;
        (2 * alpha + 1) * m + alpha * m.saturating_sub(1)
    }
}

impl RequestSource for PagingReduction {
    fn next_request(&mut self, online: &Configuration) -> Result<Option<Request>> {
        let d = self.dummy();
        if self.item_left == 0 && self.filler_left == 0 {
            let Some(page) = self.pages.pop_front() else {
                return Ok(None);
            };
            if self.current.is_some() {
                self.filler_left = self.alpha;
            }
            self.current = Some(page);
            self.item_left = 2 * self.alpha + 1;
        }
        if self.filler_left > 0 {
            self.filler_left -= 1;
            let a = online.assignment();
            let partner = (0..a.len())
                .find(|&x| x != d && a[x] == a[d])
                .unwrap_or(0);
            return Request::new(partner, d).map(Some);
        }
        self.item_left -= 1;
        Request::new(self.current.expect("page in progress"), d).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_items_and_fillers() {
        let mut adv = PagingReduction::new(3, 1, vec![2, 0]).unwrap();
        let start = adv.initial_placement();
        assert_eq!(start.members(0), vec![0, 1, 3]);
        let mut got = Vec::new();
        while let Some(r) = adv.next_request(&start).unwrap() {
            got.push(r.pair());
        }
        assert_eq!(got, vec![(2, 3), (2, 3), (2, 3), (0, 3), (0, 3), (0, 3), (0, 3)]);
        assert_eq!(got.len() as u64, PagingReduction::expected_len(2, 1));
    }

    #[test]
    fn empty_sequence_ends_immediately() {
        let mut adv = PagingReduction::new(3, 1, vec![]).unwrap();
        let start = adv.initial_placement();
        assert_eq!(adv.next_request(&start).unwrap(), None);
    }

    #[test]
    fn rejects_unknown_items() {
        assert!(matches!(
            PagingReduction::new(3, 1, vec![3]),
            Err(BrpError::MalformedPagingSequence(_))
        ));
    }
}
