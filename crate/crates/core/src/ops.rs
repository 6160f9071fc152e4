//! Elementary-operation accounting.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("operation budget of {0} exhausted")]
pub struct BudgetExhausted(pub u64);

/// Counts distance checks, classifications and point-location steps, with
/// an optional ceiling. Counts are deterministic, unlike wall-clock time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Ops {
    pub count: u64,
    limit: Option<u64>,
}

impl Ops {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_limit(limit: u64) -> Self {
        Ops {
            count: 0,
            limit: Some(limit),
        }
    }

    #[inline]
    pub fn charge(&mut self, k: u64) -> Result<(), BudgetExhausted> {
        self.count += k;
        match self.limit {
            Some(l) if self.count > l => Err(BudgetExhausted(l)),
            _ => Ok(()),
        }
    }

    /// Adds `k` without checking the limit.
    #[inline]
    pub fn add(&mut self, k: u64) {
        self.count += k;
    }
}
