//! Wealth ledger for donation procedures.
//!
//! Maintains the donable surplus of a stream split into two parts:
//!
//! * rejected indices, stored in an [`OrderStatTree`] keyed by γ_i(E_i − 1)
//!   with subtree sums of γ_iE_i and γ_i, and
//! * a scalar accumulator for the unrejected mass Σ γ_i (E_i ∧ 1).
//!
//! For a threshold θ = 1/(δ(r + 1)) the rejected surplus is
//! Σ_i γ_i ∧ (γ_iE_i − θ), which splits on the key: nodes with
//! γ_i(E_i − 1) ≤ θ contribute γ_iE_i − θ and the rest contribute γ_i. One
//! tree split answers the whole query in O(log |R|).

use crate::error::{Error, Result};
use crate::ostree::OrderStatTree;
use std::collections::HashSet;

#[derive(Debug, Clone, Default)]
pub struct WealthLedger {
    tree: OrderStatTree,
    unrejected_mass: f64,
    indices: HashSet<usize>,
}

impl WealthLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of rejected indices in the ledger.
    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn unrejected_mass(&self) -> f64 {
        self.unrejected_mass
    }

    /// Adds an unrejected index's capped mass γ(e ∧ 1).
    pub fn add_unrejected(&mut self, gamma: f64, e: f64) {
        self.unrejected_mass += gamma * e.min(1.0);
    }

    /// Inserts a rejected index keyed by γ(e − 1). O(log size).
    pub fn insert(&mut self, index: usize, gamma: f64, e: f64) -> Result<()> {
        if !self.indices.insert(index) {
            return Err(Error::Logic(format!(
                "index {index} already present in wealth ledger"
            )));
        }
        self.tree
            .insert(gamma * (e - 1.0), index as u32, gamma * e, gamma);
        Ok(())
    }

    /// Moves an index previously counted in the unrejected mass into the
    /// rejected tree, removing its capped contribution first.
    pub fn promote(&mut self, index: usize, gamma: f64, e: f64) -> Result<()> {
        self.unrejected_mass -= gamma * e.min(1.0);
        self.insert(index, gamma, e)
    }

    /// Wealth at `threshold` = 1/(δ(r + 1)):
    ///
    /// Σ_{key ≤ θ} (γ_iE_i − θ) + Σ_{key > θ} γ_i + unrejected mass.
    pub fn wealth(&self, threshold: f64) -> f64 {
        let below = self.tree.prefix_leq(threshold);
        let total = self.tree.totals();
        let rejected_part =
            (below.sum_a - threshold * below.count as f64) + (total.sum_b - below.sum_b);
        rejected_part + self.unrejected_mass
    }

    /// Node visits performed by the underlying tree (instrumentation).
    pub fn visits(&self) -> u64 {
        self.tree.visits()
    }

    pub fn reset_visits(&self) {
        self.tree.reset_visits();
    }

    /// Recomputes the tree invariants; test/debug hook.
    pub fn validate(&self) -> bool {
        self.tree.validate()
    }
}
