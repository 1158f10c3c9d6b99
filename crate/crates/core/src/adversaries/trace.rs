use std::collections::VecDeque;
use std::path::Path;

use crate::engine::RequestSource;
use crate::error::{BrpError, Result};
use crate::model::{Configuration, Request};

/// A fixed request sequence read from text.
#[derive(Debug, Clone)]
pub struct Trace {
    requests: VecDeque<Request>,
}

impl Trace {
    pub fn requests(&self) -> impl Iterator<Item = &Request> {
        self.requests.iter()
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}

impl RequestSource for Trace {
    fn next_request(&mut self, _: &Configuration) -> Result<Option<Request>> {
        Ok(self.requests.pop_front())
    }
}

/// Reads `u,v` or `t,u,v` lines. Blank lines are skipped; the time column,
/// when present, is ignored in favour of the position.
pub fn parse_trace(path: impl AsRef<Path>, n: usize) -> Result<Trace> {
    parse_trace_str(&std::fs::read_to_string(path)?, n)
}

pub fn parse_trace_str(text: &str, n: usize) -> Result<Trace> {
    let mut requests = VecDeque::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let fields = raw
            .split(',')
            .map(|f| f.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| BrpError::Parse {
                line,
                message: e.to_string(),
            })?;
        let (u, v) = match fields.as_slice() {
            [u, v] | [_, u, v] => (*u, *v),
            _ => {
                return Err(BrpError::Parse {
                    line,
                    message: format!("expected 2 or 3 fields, got {}", fields.len()),
                })
            }
        };
        if let Some(node) = [u, v].into_iter().find(|&x| x >= n) {
            return Err(BrpError::NodeOutOfRange { line, node, n });
        }
        let request = Request::new(u, v).map_err(|e| BrpError::Parse {
            line,
            message: e.to_string(),
        })?;
        requests.push_back(request);
    }
    Ok(Trace { requests })
}
