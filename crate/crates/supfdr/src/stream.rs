//! Stream element types and the per-stream decision log.

use crate::error::{Error, Result};
use std::collections::BTreeSet;

/// Which statistic a procedure consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceKind {
    EValue,
    PValue,
}

impl EvidenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvidenceKind::EValue => "e",
            EvidenceKind::PValue => "p",
        }
    }
}

/// One piece of per-hypothesis evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evidence {
    /// Nonnegative; expectation at most 1 under the null.
    EValue(f64),
    /// In [0, 1]; stochastically dominates uniform under the null.
    PValue(f64),
}

impl Evidence {
    pub fn kind(&self) -> EvidenceKind {
        match self {
            Evidence::EValue(_) => EvidenceKind::EValue,
            Evidence::PValue(_) => EvidenceKind::PValue,
        }
    }

    pub fn e_value(&self) -> Result<f64> {
        match self {
            Evidence::EValue(e) => Ok(*e),
            Evidence::PValue(_) => Err(Error::Input(
                "procedure expects e-values but received a p-value".into(),
            )),
        }
    }

    pub fn p_value(&self) -> Result<f64> {
        match self {
            Evidence::PValue(p) => Ok(*p),
            Evidence::EValue(_) => Err(Error::Input(
                "procedure expects p-values but received an e-value".into(),
            )),
        }
    }
}

/// Latest time at which a hypothesis may still be rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deadline {
    At(usize),
    Never,
}

/// One stream element: evidence at time `index`, optionally labelled with
/// the ground truth and a decision deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// 1-based arrival time t.
    pub index: usize,
    pub evidence: Evidence,
    pub is_null: Option<bool>,
    pub deadline: Option<Deadline>,
}

impl Observation {
    pub fn new(
        index: usize,
        evidence: Evidence,
        is_null: Option<bool>,
        deadline: Option<Deadline>,
    ) -> Result<Self> {
        if index == 0 {
            return Err(Error::Domain("observation index must be >= 1".into()));
        }
        match evidence {
            Evidence::EValue(e) => {
                if e.is_nan() || e < 0.0 {
                    return Err(Error::Domain(format!("e-value {e} must be nonnegative")));
                }
            }
            Evidence::PValue(p) => {
                if p.is_nan() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::Domain(format!("p-value {p} must lie in [0, 1]")));
                }
            }
        }
        if let Some(Deadline::At(d)) = deadline {
            if d < index {
                return Err(Error::Input(format!(
                    "deadline {d} precedes arrival index {index}"
                )));
            }
        }
        Ok(Observation {
            index,
            evidence,
            is_null,
            deadline,
        })
    }

    pub fn evalue(index: usize, e: f64) -> Result<Self> {
        Self::new(index, Evidence::EValue(e), None, None)
    }

    pub fn pvalue(index: usize, p: f64) -> Result<Self> {
        Self::new(index, Evidence::PValue(p), None, None)
    }
}

/// Per-step output of a procedure.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: usize,
    /// Test level applied at this step. May be `f64::INFINITY` (auto-reject
    /// for e-values); p-value levels are capped at 1.
    pub alpha: f64,
    /// Indices newly added to the rejection set at this step.
    pub newly_rejected: Vec<usize>,
    /// |R_t| after the step.
    pub num_rejections: usize,
    /// Donation wealth available at this step, for procedures that keep one.
    pub wealth: Option<f64>,
}

/// Full decision log of a run: levels, per-step decisions, and the growing
/// rejection set. Rejection sets are nested by construction since steps only
/// ever add indices.
#[derive(Debug, Clone, Default)]
pub struct RejectionRecord {
    alphas: Vec<f64>,
    newly: Vec<Vec<usize>>,
    wealth: Vec<Option<f64>>,
    rejected: BTreeSet<usize>,
}

impl RejectionRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: &StepRecord) {
        self.alphas.push(step.alpha);
        self.newly.push(step.newly_rejected.clone());
        self.wealth.push(step.wealth);
        for &i in &step.newly_rejected {
            self.rejected.insert(i);
        }
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn wealth(&self) -> &[Option<f64>] {
        &self.wealth
    }

    pub fn rejected_set(&self) -> &BTreeSet<usize> {
        &self.rejected
    }

    pub fn is_rejected(&self, t: usize) -> bool {
        self.rejected.contains(&t)
    }

    /// Decision at t under the final set: true iff t was ever rejected.
    pub fn decisions(&self) -> Vec<bool> {
        (1..=self.len()).map(|t| self.is_rejected(t)).collect()
    }

    /// Rejection sets R_1 ⊆ R_2 ⊆ … reconstructed from the per-step additions.
    pub fn trajectory(&self) -> Vec<BTreeSet<usize>> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = BTreeSet::new();
        for step in &self.newly {
            cur.extend(step.iter().copied());
            out.push(cur.clone());
        }
        out
    }
}
