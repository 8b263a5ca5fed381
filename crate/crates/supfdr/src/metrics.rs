//! False discovery proportion and its running supremum over a stream.

use std::collections::BTreeSet;

/// FDP_S(R) = |S ∩ R| / (|R| ∨ 1).
///
/// `candidate_nulls` plays the role of S: any candidate set of nulls, not
/// necessarily the true ones.
pub fn fdp(candidate_nulls: &BTreeSet<usize>, rejections: &BTreeSet<usize>) -> f64 {
    let inter = candidate_nulls.intersection(rejections).count();
    inter as f64 / rejections.len().max(1) as f64
}

/// sup_t FDP(R_t) over a nested trajectory of rejection sets.
pub fn sup_fdp(null_set: &BTreeSet<usize>, trajectory: &[BTreeSet<usize>]) -> f64 {
    trajectory
        .iter()
        .map(|r| fdp(null_set, r))
        .fold(0.0, f64::max)
}

/// Incremental FDP/sup-FDP tracker for a stream with known truth labels.
///
/// Feed the indices newly rejected at each step; the tracker maintains the
/// running counts so a full trajectory of sets never has to be stored.
#[derive(Debug, Clone)]
pub struct FdpTracker {
    is_null: Vec<bool>,
    false_rejections: usize,
    total_rejections: usize,
    sup: f64,
    trajectory: Vec<f64>,
}

impl FdpTracker {
    pub fn new(is_null: Vec<bool>) -> Self {
        FdpTracker {
            is_null,
            false_rejections: 0,
            total_rejections: 0,
            sup: 0.0,
            trajectory: Vec::new(),
        }
    }

    /// Absorbs one step's new rejections (1-based indices) and returns FDP_t.
    pub fn observe_step(&mut self, newly_rejected: &[usize]) -> f64 {
        for &i in newly_rejected {
            self.total_rejections += 1;
            if self.is_null.get(i - 1).copied().unwrap_or(false) {
                self.false_rejections += 1;
            }
        }
        let fdp_t = self.false_rejections as f64 / self.total_rejections.max(1) as f64;
        if fdp_t > self.sup {
            self.sup = fdp_t;
        }
        self.trajectory.push(fdp_t);
        fdp_t
    }

    pub fn sup_fdp(&self) -> f64 {
        self.sup
    }

    pub fn final_fdp(&self) -> f64 {
        self.trajectory.last().copied().unwrap_or(0.0)
    }

    pub fn trajectory(&self) -> &[f64] {
        &self.trajectory
    }

    pub fn total_rejections(&self) -> usize {
        self.total_rejections
    }
}
