//! Baseline online procedures: e-LOND, r-LOND, online e-BH, e-TOAD, and
//! offline e-BH.
//!
//! Each online procedure is a sequential state machine: one call per arriving
//! hypothesis, emitting the test level applied and the updated rejection set.
//! Rejections are final, so rejection sets are nested over time.

use crate::error::{Error, Result};
use crate::gamma::{GammaRule, GammaSequence, HarmonicTable};
use crate::stream::{Deadline, StepRecord};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!("delta {delta} must lie in (0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_evalue(e: f64) -> Result<()> {
    if e.is_nan() || e < 0.0 {
        return Err(Error::Domain(format!("e-value {e} must be nonnegative")));
    }
    Ok(())
}

pub(crate) fn check_pvalue(p: f64) -> Result<()> {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p-value {p} must lie in [0, 1]")));
    }
    Ok(())
}

/// Reject an e-value at level α, i.e. E ≥ 1/α with exact comparison.
#[inline]
pub(crate) fn reject_evalue(e: f64, alpha: f64) -> bool {
    e >= 1.0 / alpha
}

// ---------------------------------------------------------------------------
// e-LOND
// ---------------------------------------------------------------------------

/// e-LOND: α_t = δ γ_t (|R_{t−1}| ∨ 1). Controls SupFDR under arbitrary
/// dependence between the e-values.
#[derive(Debug, Clone)]
pub struct ELond {
    delta: f64,
    gamma: GammaSequence,
    t: usize,
    rejected: Vec<usize>,
}

impl ELond {
    pub fn new(delta: f64, gamma: GammaRule) -> Result<Self> {
        check_delta(delta)?;
        Ok(ELond {
            delta,
            gamma: GammaSequence::new(gamma),
            t: 0,
            rejected: Vec::new(),
        })
    }

    pub fn step(&mut self, e: f64) -> Result<StepRecord> {
        check_evalue(e)?;
        self.t += 1;
        let t = self.t;
        let r_prev = self.rejected.len();
        let alpha = self.delta * self.gamma.gamma(t) * (r_prev.max(1) as f64);
        let reject = reject_evalue(e, alpha);
        let mut newly = Vec::new();
        if reject {
            self.rejected.push(t);
            newly.push(t);
        }
        Ok(StepRecord {
            t,
            alpha,
            newly_rejected: newly,
            num_rejections: self.rejected.len(),
            wealth: None,
        })
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

// ---------------------------------------------------------------------------
// r-LOND
// ---------------------------------------------------------------------------

/// r-LOND: α_t = δ γ_t β_t(|R_{t−1}| ∨ 1) with the reshaping function
/// β_t(r) = (⌊r⌋ ∧ t)/ℓ_t, capped at 1. Valid for arbitrarily dependent
/// p-values.
#[derive(Debug, Clone)]
pub struct RLond {
    delta: f64,
    gamma: GammaSequence,
    harmonic: HarmonicTable,
    t: usize,
    rejected: Vec<usize>,
}

impl RLond {
    pub fn new(delta: f64, gamma: GammaRule) -> Result<Self> {
        check_delta(delta)?;
        Ok(RLond {
            delta,
            gamma: GammaSequence::new(gamma),
            harmonic: HarmonicTable::new(),
            t: 0,
            rejected: Vec::new(),
        })
    }

    pub fn step(&mut self, p: f64) -> Result<StepRecord> {
        check_pvalue(p)?;
        self.t += 1;
        let t = self.t;
        let r_prev = self.rejected.len().max(1);
        let ell = self.harmonic.ell(t);
        let beta = (r_prev.min(t)) as f64 / ell;
        let alpha = (self.delta * self.gamma.gamma(t) * beta).min(1.0);
        let reject = p <= alpha;
        let mut newly = Vec::new();
        if reject {
            self.rejected.push(t);
            newly.push(t);
        }
        Ok(StepRecord {
            t,
            alpha,
            newly_rejected: newly,
            num_rejections: self.rejected.len(),
            wealth: None,
        })
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

// ---------------------------------------------------------------------------
// Shared machinery for the step-up (e-BH / e-TOAD) family
// ---------------------------------------------------------------------------

/// Sorted index over active hypotheses keyed by γ_iE_i, with a parallel list
/// restricted to the not-yet-rejected ones so new rejections can be drained
/// off the tail without rescanning the stream.
#[derive(Debug, Clone, Default)]
struct ActiveIndex {
    all: Vec<(f64, u32)>,
    unrejected: Vec<(f64, u32)>,
}

impl ActiveIndex {
    fn insert(&mut self, key: f64, idx: u32) {
        let pos = self.all.partition_point(|x| *x < (key, idx));
        self.all.insert(pos, (key, idx));
        let pos = self.unrejected.partition_point(|x| *x < (key, idx));
        self.unrejected.insert(pos, (key, idx));
    }

    fn remove(&mut self, key: f64, idx: u32) {
        if let Ok(pos) = self.all.binary_search_by(|x| x.partial_cmp(&(key, idx)).unwrap()) {
            self.all.remove(pos);
        }
        if let Ok(pos) = self
            .unrejected
            .binary_search_by(|x| x.partial_cmp(&(key, idx)).unwrap())
        {
            self.unrejected.remove(pos);
        }
    }

    fn len(&self) -> usize {
        self.all.len()
    }

    /// #{active i : γ_iE_i ≥ θ}, one binary search.
    fn count_geq(&self, theta: f64) -> usize {
        self.all.len() - self.all.partition_point(|x| x.0 < theta)
    }

    /// Removes and returns all unrejected actives with key ≥ θ.
    fn drain_rejections(&mut self, theta: f64) -> Vec<u32> {
        let cut = self.unrejected.partition_point(|x| x.0 < theta);
        let mut out: Vec<u32> = self.unrejected.drain(cut..).map(|(_, i)| i).collect();
        out.sort_unstable();
        out
    }
}

/// Greatest r in {base, …, cap} with `base + count(1/(δ(r ∨ 1))) ≥ r`,
/// found by iterating the monotone count map downward from the cap. Each
/// probe is one binary search; the iterate decreases strictly until it
/// lands on the greatest fixed point, which is the step-up count.
fn step_up_count(
    base: usize,
    cap: usize,
    delta: f64,
    count_geq: impl Fn(f64) -> usize,
) -> usize {
    let mut r = cap;
    loop {
        let theta = 1.0 / (delta * (r.max(1) as f64));
        let reachable = base + count_geq(theta);
        if reachable >= r {
            return r;
        }
        r = reachable;
    }
}

// ---------------------------------------------------------------------------
// Online e-BH
// ---------------------------------------------------------------------------

/// Online e-BH for the acceptance-to-rejection setting:
/// r_t = max{r ∈ [t] : #{i ≤ t : γ_iE_i ≥ 1/(δr)} ≥ r}, rejecting every
/// index over the implied threshold. Rejection sets are nested because r_t
/// never decreases.
#[derive(Debug, Clone)]
pub struct OnlineEbh {
    delta: f64,
    gamma: GammaSequence,
    t: usize,
    active: ActiveIndex,
    rejected: Vec<usize>,
    last_r: usize,
}

impl OnlineEbh {
    pub fn new(delta: f64, gamma: GammaRule) -> Result<Self> {
        check_delta(delta)?;
        Ok(OnlineEbh {
            delta,
            gamma: GammaSequence::new(gamma),
            t: 0,
            active: ActiveIndex::default(),
            rejected: Vec::new(),
            last_r: 0,
        })
    }

    pub fn step(&mut self, e: f64) -> Result<StepRecord> {
        check_evalue(e)?;
        self.t += 1;
        let t = self.t;
        let key = self.gamma.gamma(t) * e;
        self.active.insert(key, t as u32);
        let r = step_up_count(0, t, self.delta, |theta| self.active.count_geq(theta));
        self.last_r = r;
        let mut newly = Vec::new();
        if r > 0 {
            let theta = 1.0 / (self.delta * r as f64);
            for idx in self.active.drain_rejections(theta) {
                newly.push(idx as usize);
                self.rejected.push(idx as usize);
            }
        }
        self.rejected.sort_unstable();
        let alpha = self.delta * self.gamma.gamma(t) * (r as f64);
        Ok(StepRecord {
            t,
            alpha,
            newly_rejected: newly,
            num_rejections: self.rejected.len(),
            wealth: None,
        })
    }

    /// Step-up count r_t from the most recent step.
    pub fn last_r(&self) -> usize {
        self.last_r
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

// ---------------------------------------------------------------------------
// e-TOAD
// ---------------------------------------------------------------------------

/// e-TOAD: the decision-deadline procedure. Hypothesis i stays active while
/// t ≤ d_i; the step-up count ranges over the totals reachable given the
/// already-settled rejections:
///
/// r_t = max{r ∈ {k, …, max(k, m_t)} : #{i ∈ A_t : γ_iE_i ≥ 1/(δ(r ∨ 1))} ≥ r − k},
///
/// where A_t is the active set, m_t = |A_t| and k = |R_{t−1} \ A_t|. With
/// d_i = i this reduces exactly to e-LOND, and with d_i = ∞ to online e-BH.
#[derive(Debug, Clone)]
pub struct EToad {
    delta: f64,
    gamma: GammaSequence,
    t: usize,
    active: ActiveIndex,
    deaths: BinaryHeap<Reverse<(usize, u32)>>,
    keys: Vec<f64>,
    is_rejected: Vec<bool>,
    rejected: Vec<usize>,
    dead_rejected: usize,
    last_r: usize,
}

impl EToad {
    pub fn new(delta: f64, gamma: GammaRule) -> Result<Self> {
        check_delta(delta)?;
        Ok(EToad {
            delta,
            gamma: GammaSequence::new(gamma),
            t: 0,
            active: ActiveIndex::default(),
            deaths: BinaryHeap::new(),
            keys: Vec::new(),
            is_rejected: Vec::new(),
            rejected: Vec::new(),
            dead_rejected: 0,
            last_r: 0,
        })
    }

    fn retire_expired(&mut self, now: usize) {
        while let Some(&Reverse((d, idx))) = self.deaths.peek() {
            if d >= now {
                break;
            }
            self.deaths.pop();
            let i = idx as usize;
            self.active.remove(self.keys[i - 1], idx);
            if self.is_rejected[i - 1] {
                self.dead_rejected += 1;
            }
        }
    }

    pub fn step_with_deadline(&mut self, e: f64, deadline: Deadline) -> Result<StepRecord> {
        check_evalue(e)?;
        self.t += 1;
        let t = self.t;
        if let Deadline::At(d) = deadline {
            if d < t {
                self.t -= 1;
                return Err(Error::Input(format!(
                    "deadline {d} for arrival {t} is already past"
                )));
            }
            self.deaths.push(Reverse((d, t as u32)));
        }
        let key = self.gamma.gamma(t) * e;
        self.keys.push(key);
        self.is_rejected.push(false);
        self.active.insert(key, t as u32);
        self.retire_expired(t);

        let k = self.dead_rejected;
        let m_t = self.active.len();
        let cap = m_t.max(k);
        let r = step_up_count(k, cap, self.delta, |theta| {
            // Count condition: actives over θ must cover the r − k new slots.
            self.active.count_geq(theta)
        });
        self.last_r = r;
        let mut newly = Vec::new();
        let theta = 1.0 / (self.delta * (r.max(1) as f64));
        for idx in self.active.drain_rejections(theta) {
            let i = idx as usize;
            self.is_rejected[i - 1] = true;
            newly.push(i);
            self.rejected.push(i);
        }
        self.rejected.sort_unstable();
        let alpha = self.delta * self.gamma.gamma(t) * (r.max(1) as f64);
        Ok(StepRecord {
            t,
            alpha,
            newly_rejected: newly,
            num_rejections: self.rejected.len(),
            wealth: None,
        })
    }

    pub fn last_r(&self) -> usize {
        self.last_r
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

// ---------------------------------------------------------------------------
// Offline e-BH
// ---------------------------------------------------------------------------

/// Offline e-BH on a batch of m e-values:
/// r = max{r : #{i : E_i ≥ m/(δr)} ≥ r}, rejecting {i : E_i ≥ m/(δr)}.
/// Returns the 1-based rejected indices in ascending order.
pub fn ebh_offline(e_values: &[f64], delta: f64) -> Result<Vec<usize>> {
    check_delta(delta)?;
    if e_values.is_empty() {
        return Err(Error::Domain("offline e-BH needs at least one e-value".into()));
    }
    for &e in e_values {
        check_evalue(e)?;
    }
    let m = e_values.len();
    let mut sorted: Vec<f64> = e_values.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let mut best = 0usize;
    for r in 1..=m {
        if sorted[r - 1] >= m as f64 / (delta * r as f64) {
            best = r;
        }
    }
    if best == 0 {
        return Ok(Vec::new());
    }
    let threshold = m as f64 / (delta * best as f64);
    Ok((1..=m).filter(|&i| e_values[i - 1] >= threshold).collect())
}
