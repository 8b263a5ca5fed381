//! Donation procedures: compound e-values built by redistributing surplus
//! evidence across the stream.
//!
//! The wealth W̄_t aggregates, over past indices, the donable part of each
//! e-value: rejected indices contribute γ_i ∧ (γ_iE_i − 1/(δ(|R_{t−1}|+1)))
//! and unrejected ones γ_i(E_i ∧ 1). Inflating the e-LOND level by
//! 1/(1 − (δ(|R_{t−1}|+1)W̄_t ∧ 1)) preserves SupFDR control and never
//! shrinks the level, so every donation procedure dominates its baseline.
//! The rejected part of the wealth is served by an augmented search tree in
//! O(log t) per query; the step-up variants (online e-BH, e-TOAD, offline
//! e-BH) evaluate their candidate counts against a Fenwick split of the
//! same keyed surplus.

use crate::baselines::{check_delta, check_evalue, check_pvalue, reject_evalue};
use crate::calibrate::calibrate_p_with_ell;
use crate::error::{Error, Result};
use crate::gamma::{GammaRule, GammaSequence, HarmonicTable};
use crate::ledger::WealthLedger;
use crate::stream::{Deadline, StepRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Tolerance below which a wealth value is flagged as a genuine negativity
/// rather than float noise.
pub const WEALTH_NEGATIVITY_TOL: f64 = -1e-9;

// ---------------------------------------------------------------------------
// Donation e-LOND
// ---------------------------------------------------------------------------

/// Donation e-LOND: α_t = δγ_t(|R_{t−1}|+1) / (1 − (δ(|R_{t−1}|+1)W̄_t ∧ 1)),
/// with α_t = +∞ (auto-reject) when the capped term reaches 1. The wealth is
/// read from the ledger in O(log t); a rejection inserts the index, anything
/// else accrues capped unrejected mass.
#[derive(Debug, Clone)]
pub struct DonationELond {
    delta: f64,
    gamma: GammaSequence,
    t: usize,
    ledger: WealthLedger,
    rejected: Vec<usize>,
    negative_wealth_events: usize,
}

impl DonationELond {
    pub fn new(delta: f64, gamma: GammaRule) -> Result<Self> {
        check_delta(delta)?;
        Ok(DonationELond {
            delta,
            gamma: GammaSequence::new(gamma),
            t: 0,
            ledger: WealthLedger::new(),
            rejected: Vec::new(),
            negative_wealth_events: 0,
        })
    }

    pub fn step(&mut self, e: f64) -> Result<StepRecord> {
        check_evalue(e)?;
        self.t += 1;
        let t = self.t;
        let gamma_t = self.gamma.gamma(t);
        let rp1 = (self.rejected.len() + 1) as f64;
        let threshold = 1.0 / (self.delta * rp1);
        let wealth = self.ledger.wealth(threshold);
        if wealth < WEALTH_NEGATIVITY_TOL {
            // Passed through verbatim; the diagnostic counter surfaces it.
            self.negative_wealth_events += 1;
        }
        let capped = (self.delta * rp1 * wealth).min(1.0);
        let alpha = if capped >= 1.0 {
            f64::INFINITY
        } else {
            self.delta * gamma_t * rp1 / (1.0 - capped)
        };
        let reject = reject_evalue(e, alpha);
        let mut newly = Vec::new();
        if reject {
            self.ledger.insert(t, gamma_t, e)?;
            self.rejected.push(t);
            newly.push(t);
        } else {
            self.ledger.add_unrejected(gamma_t, e);
        }
        Ok(StepRecord {
            t,
            alpha,
            newly_rejected: newly,
            num_rejections: self.rejected.len(),
            wealth: Some(wealth),
        })
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Times the wealth dipped below the negativity tolerance.
    pub fn negative_wealth_events(&self) -> usize {
        self.negative_wealth_events
    }

    pub fn ledger(&self) -> &WealthLedger {
        &self.ledger
    }
}

// ---------------------------------------------------------------------------
// Donation r-LOND
// ---------------------------------------------------------------------------

/// Donation r-LOND: the p-value twin of donation e-LOND, with the wealth
/// built from calibrated e-values f_i(P_i) and the level
/// α_t = (δγ_t/ℓ_t)·(⌊(|R_{t−1}|+1)/(1 − (δ(|R_{t−1}|+1)W̄_t ∧ 1))⌋ ∧ t),
/// capped at 1. Decisions coincide exactly with donation e-LOND applied to
/// the calibrated stream.
#[derive(Debug, Clone)]
pub struct DonationRLond {
    delta: f64,
    gamma: GammaSequence,
    harmonic: HarmonicTable,
    t: usize,
    ledger: WealthLedger,
    rejected: Vec<usize>,
    negative_wealth_events: usize,
}

impl DonationRLond {
    pub fn new(delta: f64, gamma: GammaRule) -> Result<Self> {
        check_delta(delta)?;
        Ok(DonationRLond {
            delta,
            gamma: GammaSequence::new(gamma),
            harmonic: HarmonicTable::new(),
            t: 0,
            ledger: WealthLedger::new(),
            rejected: Vec::new(),
            negative_wealth_events: 0,
        })
    }

    pub fn step(&mut self, p: f64) -> Result<StepRecord> {
        check_pvalue(p)?;
        self.t += 1;
        let t = self.t;
        let gamma_t = self.gamma.gamma(t);
        let ell_t = self.harmonic.ell(t);
        let rp1 = (self.rejected.len() + 1) as f64;
        let threshold = 1.0 / (self.delta * rp1);
        let wealth = self.ledger.wealth(threshold);
        if wealth < WEALTH_NEGATIVITY_TOL {
            self.negative_wealth_events += 1;
        }
        let capped = (self.delta * rp1 * wealth).min(1.0);
        let ratio = if capped >= 1.0 {
            f64::INFINITY
        } else {
            rp1 / (1.0 - capped)
        };
        let alpha = (self.delta * gamma_t / ell_t * ratio.floor().min(t as f64)).min(1.0);
        let reject = p <= alpha;
        let calibrated = calibrate_p_with_ell(p, t, gamma_t, self.delta, ell_t);
        let mut newly = Vec::new();
        if reject {
            self.ledger.insert(t, gamma_t, calibrated)?;
            self.rejected.push(t);
            newly.push(t);
        } else {
            self.ledger.add_unrejected(gamma_t, calibrated);
        }
        Ok(StepRecord {
            t,
            alpha,
            newly_rejected: newly,
            num_rejections: self.rejected.len(),
            wealth: Some(wealth),
        })
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn negative_wealth_events(&self) -> usize {
        self.negative_wealth_events
    }
}

// ---------------------------------------------------------------------------
// Fenwick scaffolding for the step-up scans
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
struct Fenwick {
    cnt: Vec<f64>,
    sum: Vec<f64>,
}

impl Fenwick {
    fn reset(&mut self, n: usize) {
        self.cnt.clear();
        self.cnt.resize(n + 1, 0.0);
        self.sum.clear();
        self.sum.resize(n + 1, 0.0);
    }

    fn add(&mut self, mut pos: usize, c: f64, s: f64) {
        while pos < self.cnt.len() {
            self.cnt[pos] += c;
            self.sum[pos] += s;
            pos += pos & pos.wrapping_neg();
        }
    }

    /// (count, sum) over coordinates 1..=pos.
    fn prefix(&self, mut pos: usize) -> (f64, f64) {
        let mut c = 0.0;
        let mut s = 0.0;
        while pos > 0 {
            c += self.cnt[pos];
            s += self.sum[pos];
            pos -= pos & pos.wrapping_neg();
        }
        (c, s)
    }
}

/// Per-item quantities for the step-up donation procedures.
#[derive(Debug, Clone, Copy)]
struct DItem {
    /// γ_iE_i
    ge: f64,
    /// γ_i(E_i − 1), the wealth split key
    key: f64,
    /// γ_i(E_i ∧ 1)
    ge1: f64,
}

impl DItem {
    fn new(gamma: f64, e: f64) -> Self {
        DItem {
            ge: gamma * e,
            key: gamma * (e - 1.0),
            ge1: gamma * e.min(1.0),
        }
    }
}

/// Scratch buffers for one step-up scan, rebuilt each step.
///
/// The scan needs, for every candidate count r (descending), the donation
/// balance of rejecting the top r items by γE:
///
///   D(r) = Σ_{i ≤ r} (γ_(i)E_(i) − θ_r) ∧ γ_(i) + Σ_{i > r} γ_(i)(E_(i) ∧ 1) + extra(θ_r)
///
/// Using (a ∧ b) = a − (a − b)⁺, the top block becomes
/// prefix_γE(r) − r·θ_r − Σ_{top r}(key_i − θ_r)⁺, and the positive-part sum
/// splits on key ≤ θ_r: a Fenwick tree over key order, holding exactly the
/// current top-r set, answers it in O(log t). Walking r downward removes one
/// item at a time, so a full scan costs O(t log t).
#[derive(Debug, Clone, Default)]
struct StepUpScan {
    order: Vec<u32>,
    ge_prefix: Vec<f64>,
    ge1_prefix: Vec<f64>,
    k_sorted: Vec<(f64, u32)>,
    coord: Vec<usize>,
    fen: Fenwick,
}

impl StepUpScan {
    /// Prepares the scan over `member_ids` (item indices into `items`).
    fn build(&mut self, items: &[DItem], member_ids: &[u32]) {
        let n = member_ids.len();
        self.order.clear();
        self.order.extend_from_slice(member_ids);
        self.order.sort_unstable_by(|&a, &b| {
            let (ia, ib) = (&items[a as usize], &items[b as usize]);
            ib.ge
                .partial_cmp(&ia.ge)
                .unwrap()
                .then_with(|| a.cmp(&b))
        });
        self.ge_prefix.clear();
        self.ge_prefix.resize(n + 1, 0.0);
        self.ge1_prefix.clear();
        self.ge1_prefix.resize(n + 1, 0.0);
        for (pos, &id) in self.order.iter().enumerate() {
            let it = &items[id as usize];
            self.ge_prefix[pos + 1] = self.ge_prefix[pos] + it.ge;
            self.ge1_prefix[pos + 1] = self.ge1_prefix[pos] + it.ge1;
        }
        self.k_sorted.clear();
        self.k_sorted
            .extend(member_ids.iter().map(|&id| (items[id as usize].key, id)));
        self.k_sorted
            .sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        self.coord.clear();
        self.coord.resize(items.len(), 0);
        for (pos, &(_, id)) in self.k_sorted.iter().enumerate() {
            self.coord[id as usize] = pos + 1;
        }
        self.fen.reset(n);
        for &(k, id) in &self.k_sorted {
            self.fen.add(self.coord[id as usize], 1.0, k);
        }
    }

    /// Greatest r in {base, …, base + n} whose donation balance is
    /// nonnegative; 0 if none. `extra` supplies the θ-dependent balance of
    /// items outside the scanned membership (settled rejections and expired
    /// unrejected mass).
    fn scan(
        &mut self,
        items: &[DItem],
        base: usize,
        delta: f64,
        extra: impl Fn(f64) -> f64,
    ) -> usize {
        let n = self.order.len();
        let mut set_cnt = n as f64;
        let mut set_ksum: f64 = self.k_sorted.iter().map(|&(k, _)| k).sum();
        let total_ge1 = self.ge1_prefix[n];
        let mut j = n;
        loop {
            let r = base + j;
            let theta = 1.0 / (delta * (r.max(1) as f64));
            // Σ_{top j}(key − θ)⁺ via the key split restricted to the set.
            let cut = self.k_sorted.partition_point(|&(k, _)| k <= theta);
            let (cnt_leq, sum_leq) = self.fen.prefix(cut);
            let plus_part = (set_ksum - sum_leq) - theta * (set_cnt - cnt_leq);
            let top = self.ge_prefix[j] - j as f64 * theta - plus_part;
            let tail = total_ge1 - self.ge1_prefix[j];
            let balance = top + tail + extra(theta);
            if balance >= 0.0 {
                return r;
            }
            if j == 0 {
                return 0;
            }
            // Drop the rank-j item: the next candidate rejects one fewer.
            let id = self.order[j - 1];
            let key = items[id as usize].key;
            self.fen.add(self.coord[id as usize], -1.0, -key);
            set_cnt -= 1.0;
            set_ksum -= key;
            j -= 1;
        }
    }

    /// Top `count` member ids by γE (ties by arrival order).
    fn top(&self, count: usize) -> &[u32] {
        &self.order[..count.min(self.order.len())]
    }
}

// ---------------------------------------------------------------------------
// Donation online e-BH
// ---------------------------------------------------------------------------

/// Donation online e-BH for the acceptance-to-rejection setting: at each
/// step the largest r whose donation balance over the top-r weighted
/// e-values is nonnegative is claimed, and those r indices are rejected.
/// Strictly improves online e-BH.
#[derive(Debug, Clone)]
pub struct DonationOnlineEbh {
    delta: f64,
    gamma: GammaSequence,
    t: usize,
    items: Vec<DItem>,
    all_ids: Vec<u32>,
    is_rejected: Vec<bool>,
    rejected: Vec<usize>,
    last_r: usize,
    scan: StepUpScan,
}

impl DonationOnlineEbh {
    pub fn new(delta: f64, gamma: GammaRule) -> Result<Self> {
        check_delta(delta)?;
        Ok(DonationOnlineEbh {
            delta,
            gamma: GammaSequence::new(gamma),
            t: 0,
            items: Vec::new(),
            all_ids: Vec::new(),
            is_rejected: Vec::new(),
            rejected: Vec::new(),
            last_r: 0,
            scan: StepUpScan::default(),
        })
    }

    pub fn step(&mut self, e: f64) -> Result<StepRecord> {
        check_evalue(e)?;
        self.t += 1;
        let t = self.t;
        let gamma_t = self.gamma.gamma(t);
        self.items.push(DItem::new(gamma_t, e));
        self.all_ids.push((t - 1) as u32);
        self.is_rejected.push(false);

        self.scan.build(&self.items, &self.all_ids);
        let r = self.scan.scan(&self.items, 0, self.delta, |_| 0.0);
        self.last_r = r;
        let mut newly = Vec::new();
        for &id in self.scan.top(r) {
            let idx = id as usize + 1;
            if !self.is_rejected[id as usize] {
                self.is_rejected[id as usize] = true;
                self.rejected.push(idx);
                newly.push(idx);
            }
        }
        newly.sort_unstable();
        self.rejected.sort_unstable();
        Ok(StepRecord {
            t,
            alpha: self.delta * gamma_t * r as f64,
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
// Donation e-TOAD
// ---------------------------------------------------------------------------

/// Donation e-TOAD: decision deadlines with donated surplus. The candidate
/// total r runs over {k, …, k + m_t} (k settled rejections past their
/// deadline, m_t actives); the balance adds the settled indices' surplus at
/// the candidate threshold and the expired unrejected mass. With d_i = i
/// this reduces to donation e-LOND, and with d_i = ∞ to donation online
/// e-BH.
#[derive(Debug, Clone)]
pub struct DonationEToad {
    delta: f64,
    gamma: GammaSequence,
    t: usize,
    items: Vec<DItem>,
    deadlines: BinaryHeap<Reverse<(usize, u32)>>,
    alive: Vec<bool>,
    is_rejected: Vec<bool>,
    rejected: Vec<usize>,
    active_ids: Vec<u32>,
    // Settled rejections (deadline passed), kept sorted by wealth key with
    // prefix sums of γE and γ for the θ split.
    dead_rejected: Vec<(f64, u32)>,
    dr_ge_prefix: Vec<f64>,
    dr_g_prefix: Vec<f64>,
    dead_unrejected_mass: f64,
    gammas: Vec<f64>,
    last_r: usize,
    scan: StepUpScan,
}

impl DonationEToad {
    pub fn new(delta: f64, gamma: GammaRule) -> Result<Self> {
        check_delta(delta)?;
        Ok(DonationEToad {
            delta,
            gamma: GammaSequence::new(gamma),
            t: 0,
            items: Vec::new(),
            deadlines: BinaryHeap::new(),
            alive: Vec::new(),
            is_rejected: Vec::new(),
            rejected: Vec::new(),
            active_ids: Vec::new(),
            dead_rejected: Vec::new(),
            dr_ge_prefix: vec![0.0],
            dr_g_prefix: vec![0.0],
            dead_unrejected_mass: 0.0,
            gammas: Vec::new(),
            last_r: 0,
            scan: StepUpScan::default(),
        })
    }

    fn retire_expired(&mut self, now: usize) {
        let mut changed = false;
        while let Some(&Reverse((d, id))) = self.deadlines.peek() {
            if d >= now {
                break;
            }
            self.deadlines.pop();
            let i = id as usize;
            self.alive[i] = false;
            let item = self.items[i];
            if self.is_rejected[i] {
                let pos = self
                    .dead_rejected
                    .partition_point(|&(k, j)| (k, j) < (item.key, id));
                self.dead_rejected.insert(pos, (item.key, id));
                changed = true;
            } else {
                self.dead_unrejected_mass += item.ge1;
            }
        }
        if changed {
            self.dr_ge_prefix.clear();
            self.dr_ge_prefix.resize(self.dead_rejected.len() + 1, 0.0);
            self.dr_g_prefix.clear();
            self.dr_g_prefix.resize(self.dead_rejected.len() + 1, 0.0);
            for (pos, &(_, id)) in self.dead_rejected.iter().enumerate() {
                let it = &self.items[id as usize];
                self.dr_ge_prefix[pos + 1] = self.dr_ge_prefix[pos] + it.ge;
                self.dr_g_prefix[pos + 1] = self.dr_g_prefix[pos] + self.gammas[id as usize];
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
            self.deadlines.push(Reverse((d, (t - 1) as u32)));
        }
        let gamma_t = self.gamma.gamma(t);
        self.items.push(DItem::new(gamma_t, e));
        self.gammas.push(gamma_t);
        self.alive.push(true);
        self.is_rejected.push(false);
        self.retire_expired(t);

        self.active_ids.clear();
        self.active_ids
            .extend((0..self.items.len()).filter(|&i| self.alive[i]).map(|i| i as u32));
        let k = self.dead_rejected.len();

        self.scan.build(&self.items, &self.active_ids);
        let dead_mass = self.dead_unrejected_mass;
        let r = {
            let dr = &self.dead_rejected;
            let ge = &self.dr_ge_prefix;
            let g = &self.dr_g_prefix;
            // Settled rejections' surplus at the candidate threshold, plus
            // the expired unrejected mass.
            let extra = move |theta: f64| {
                let n = dr.len();
                let cut = dr.partition_point(|&(kk, _)| kk <= theta);
                ge[cut] - theta * cut as f64 + (g[n] - g[cut]) + dead_mass
            };
            self.scan.scan(&self.items, k, self.delta, extra)
        };
        self.last_r = r;
        let new_count = r.saturating_sub(k);
        let mut newly = Vec::new();
        for &id in self.scan.top(new_count) {
            let idx = id as usize + 1;
            if !self.is_rejected[id as usize] {
                self.is_rejected[id as usize] = true;
                self.rejected.push(idx);
                newly.push(idx);
            }
        }
        newly.sort_unstable();
        self.rejected.sort_unstable();
        Ok(StepRecord {
            t,
            alpha: self.delta * gamma_t * r as f64,
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
// Offline donation e-BH
// ---------------------------------------------------------------------------

/// Offline donation e-BH on a batch of m e-values with uniform weights 1/m:
///
/// r = max{r : Σ_{i≤r}((E_(i)/m − 1/(δr)) ∧ 1/m) + Σ_{i>r}(E_(i) ∧ 1)/m ≥ 0},
///
/// rejecting the r largest e-values (ties by arrival order). Runs in
/// O(m log m): one sort plus a descending scan whose per-candidate split
/// point is found by binary search. Always a superset of offline e-BH.
pub fn donation_ebh_offline(e_values: &[f64], delta: f64) -> Result<Vec<usize>> {
    check_delta(delta)?;
    if e_values.is_empty() {
        return Err(Error::Domain(
            "offline donation e-BH needs at least one e-value".into(),
        ));
    }
    for &e in e_values {
        check_evalue(e)?;
    }
    let m = e_values.len();
    let mf = m as f64;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        e_values[b]
            .partial_cmp(&e_values[a])
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    let sorted: Vec<f64> = order.iter().map(|&i| e_values[i]).collect();
    let mut pref_e = vec![0.0; m + 1];
    let mut pref_e1 = vec![0.0; m + 1];
    for (i, &e) in sorted.iter().enumerate() {
        pref_e[i + 1] = pref_e[i] + e;
        pref_e1[i + 1] = pref_e1[i] + e.min(1.0);
    }
    let mut best = 0usize;
    for r in (1..=m).rev() {
        let theta = mf / (delta * r as f64);
        // Within the top r, entries with E ≥ 1 + θ cap at 1/m; they form a
        // prefix of the descending sort.
        let q = sorted.partition_point(|&e| e >= 1.0 + theta).min(r);
        let top = q as f64 + (pref_e[r] - pref_e[q]) - (r - q) as f64 * theta;
        let tail = pref_e1[m] - pref_e1[r];
        if (top + tail) / mf >= 0.0 {
            best = r;
            break;
        }
    }
    let mut out: Vec<usize> = order[..best].iter().map(|&i| i + 1).collect();
    out.sort_unstable();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Restricted stochastic rounding and randomized donation e-LOND
// ---------------------------------------------------------------------------

/// Restricted stochastic rounding: only the surplus above 1 that the
/// donation framework cannot use is rounded.
///
/// Returns x unchanged when x ≤ 1 or x ≥ 1/α̂; otherwise rounds to 1 or 1/α̂
/// with the mean preserved. α̂ ≥ 1 degenerates to the identity.
pub fn restricted_round(x: f64, alpha_hat: f64, u: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("rounding input {x} must be >= 0")));
    }
    if u.is_nan() || !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("uniform draw {u} must lie in [0, 1]")));
    }
    if alpha_hat.is_nan() || alpha_hat <= 0.0 {
        return Err(Error::Domain(format!(
            "rounding level {alpha_hat} must be positive"
        )));
    }
    if alpha_hat >= 1.0 {
        return Ok(x);
    }
    let inv = 1.0 / alpha_hat;
    if x <= 1.0 || x >= inv {
        return Ok(x);
    }
    let fire = u <= alpha_hat * (x - 1.0) / (1.0 - alpha_hat);
    Ok(if fire { inv } else { 1.0 })
}

/// Randomized donation e-LOND: donation e-LOND applied to restricted
/// stochastically rounded e-values, with the per-step uniform draw also
/// inflating the level from α̂_t to α̂_t/(u(1 − α̂_t) + α̂_t). Rejections are
/// a superset of donation e-LOND's on the same stream.
#[derive(Debug, Clone)]
pub struct RandomizedDonationELond {
    delta: f64,
    gamma: GammaSequence,
    t: usize,
    ledger: WealthLedger,
    rejected: Vec<usize>,
    rng: ChaCha8Rng,
    negative_wealth_events: usize,
}

impl RandomizedDonationELond {
    pub fn new(delta: f64, gamma: GammaRule, seed: u64) -> Result<Self> {
        check_delta(delta)?;
        Ok(RandomizedDonationELond {
            delta,
            gamma: GammaSequence::new(gamma),
            t: 0,
            ledger: WealthLedger::new(),
            rejected: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            negative_wealth_events: 0,
        })
    }

    /// One step with an externally supplied uniform draw.
    pub fn step_with_uniform(&mut self, e: f64, u: f64) -> Result<StepRecord> {
        check_evalue(e)?;
        if u.is_nan() || !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("uniform draw {u} must lie in [0, 1]")));
        }
        self.t += 1;
        let t = self.t;
        let gamma_t = self.gamma.gamma(t);
        let rp1 = (self.rejected.len() + 1) as f64;
        let threshold = 1.0 / (self.delta * rp1);
        let wealth = self.ledger.wealth(threshold);
        if wealth < WEALTH_NEGATIVITY_TOL {
            self.negative_wealth_events += 1;
        }
        let capped = (self.delta * rp1 * wealth).min(1.0);
        let alpha_hat = if capped >= 1.0 {
            f64::INFINITY
        } else {
            self.delta * gamma_t * rp1 / (1.0 - capped)
        };
        let alpha = if alpha_hat >= 1.0 {
            alpha_hat
        } else {
            alpha_hat / (u * (1.0 - alpha_hat) + alpha_hat)
        };
        let reject = reject_evalue(e, alpha);
        let mut newly = Vec::new();
        if reject {
            // Store the rounded value; the same draw decides the rounding.
            let stored = restricted_round(e, alpha_hat, u)?;
            self.ledger.insert(t, gamma_t, stored)?;
            self.rejected.push(t);
            newly.push(t);
        } else {
            self.ledger.add_unrejected(gamma_t, e);
        }
        Ok(StepRecord {
            t,
            alpha,
            newly_rejected: newly,
            num_rejections: self.rejected.len(),
            wealth: Some(wealth),
        })
    }

    /// One step drawing the uniform from the owned generator. The draw is
    /// consumed on every step, including deterministic branches, so decision
    /// traces replay identically under hypothesis insertion.
    pub fn step(&mut self, e: f64) -> Result<StepRecord> {
        let u = self.rng.gen::<f64>();
        self.step_with_uniform(e, u)
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn negative_wealth_events(&self) -> usize {
        self.negative_wealth_events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{ebh_offline, ELond, OnlineEbh, RLond};
    use crate::oracles::{brute_r_scan, naive_wealth, ScanMode};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_evalue(rng: &mut ChaCha8Rng) -> f64 {
        if rng.gen_bool(0.3) {
            rng.gen_range(0.0..80.0)
        } else {
            rng.gen_range(0.0..1.5)
        }
    }

    #[test]
    fn donation_elond_empty_wealth_level() {
        // W̄_t = 0 gives the e-LOND-plus-one level δγ_t(|R|+1).
        let mut p = DonationELond::new(0.1, GammaRule::Default).unwrap();
        let rec = p.step(0.0).unwrap();
        assert_relative_eq!(rec.alpha, 0.1 * 0.5, max_relative = 1e-15);
        assert_eq!(rec.wealth, Some(0.0));
    }

    #[test]
    fn donation_elond_worked_example() {
        // γ = (1/2, 1/6), δ = 0.1, E_1 = 20 rejected at the boundary:
        // W̄_2 = 0.5 and α_2 = 0.2·(1/6)/0.9 ≈ 0.037037.
        let delta = 0.1;
        let mut p = DonationELond::new(delta, GammaRule::Default).unwrap();
        let rec = p.step(20.0).unwrap();
        assert_eq!(rec.newly_rejected, vec![1]);
        let rec2 = p.step(0.0).unwrap();
        assert_relative_eq!(rec2.wealth.unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(
            rec2.alpha,
            0.2 * (1.0 / 6.0) / 0.9,
            max_relative = 1e-12
        );
        // Strictly above the e-LOND level at the same state.
        assert!(rec2.alpha > delta * (1.0 / 6.0));
    }

    #[test]
    fn donation_elond_levels_match_naive_wealth() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let delta = 0.1;
        let mut p = DonationELond::new(delta, GammaRule::Default).unwrap();
        let mut gamma = GammaSequence::default_rule();
        let mut gammas = Vec::new();
        let mut evals = Vec::new();
        let mut rejected = Vec::new();
        for t in 1..=200usize {
            gammas.push(gamma.gamma(t));
            let e = random_evalue(&mut rng);
            let rec = p.step(e).unwrap();
            let naive = naive_wealth(&gammas[..t - 1], &evals, &rejected, delta);
            let got = rec.wealth.unwrap();
            assert!(
                (got - naive).abs() <= 1e-9 * (1.0 + naive.abs()),
                "t = {t}: {got} vs {naive}"
            );
            evals.push(e);
            rejected.push(!rec.newly_rejected.is_empty());
        }
        assert!(p.ledger().validate());
        assert_eq!(p.negative_wealth_events(), 0);
    }

    #[test]
    fn ledger_visits_stay_logarithmic_during_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(119);
        let mut p = DonationELond::new(0.1, GammaRule::Default).unwrap();
        const C: f64 = 12.0;
        for _ in 0..5000 {
            p.ledger().reset_visits();
            p.step(random_evalue(&mut rng)).unwrap();
            // One wealth query plus at most one insert per step.
            let bound = C * ((p.ledger().len() + 2) as f64).log2() + C;
            assert!(
                (p.ledger().visits() as f64) <= bound,
                "step {} took {} visits",
                p.t(),
                p.ledger().visits()
            );
        }
    }

    #[test]
    fn randomized_same_seed_same_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        let evs: Vec<f64> = (0..200).map(|_| random_evalue(&mut rng)).collect();
        let mut a = RandomizedDonationELond::new(0.1, GammaRule::Default, 42).unwrap();
        let mut b = RandomizedDonationELond::new(0.1, GammaRule::Default, 42).unwrap();
        for &e in &evs {
            let ra = a.step(e).unwrap();
            let rb = b.step(e).unwrap();
            assert_eq!(ra.alpha, rb.alpha);
            assert_eq!(ra.newly_rejected, rb.newly_rejected);
        }
    }

    #[test]
    fn donation_dominates_elond() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..100 {
            let mut don = DonationELond::new(0.1, GammaRule::Default).unwrap();
            let mut base = ELond::new(0.1, GammaRule::Default).unwrap();
            for _ in 0..80 {
                let e = random_evalue(&mut rng);
                let a = don.step(e).unwrap();
                let b = base.step(e).unwrap();
                assert!(a.wealth.unwrap() >= WEALTH_NEGATIVITY_TOL);
                assert!(a.alpha >= b.alpha);
            }
            let dr = don.rejected();
            assert!(base.rejected().iter().all(|i| dr.contains(i)));
        }
    }

    #[test]
    fn donation_rlond_trivial_level() {
        // W̄ = 0, |R| = 0: α_t = δγ_t/ℓ_t.
        let mut p = DonationRLond::new(0.1, GammaRule::Default).unwrap();
        let rec = p.step(1.0).unwrap();
        assert_relative_eq!(rec.alpha, 0.1 * 0.5, max_relative = 1e-15);
    }

    #[test]
    fn donation_rlond_witness_doubles_level() {
        // After rejecting P_1 ≤ δγ_1 with nonnegative wealth,
        // α_2 = 2δγ_2/ℓ_2 > r-LOND's δγ_2/ℓ_2.
        let delta = 0.1;
        let mut p = DonationRLond::new(delta, GammaRule::Default).unwrap();
        p.step(delta * 0.5).unwrap();
        assert_eq!(p.rejected(), &[1]);
        let rec = p.step(1.0).unwrap();
        let expected = 2.0 * delta * (1.0 / 6.0) / 1.5;
        assert_relative_eq!(rec.alpha, expected, max_relative = 1e-12);
    }

    #[test]
    fn donation_rlond_equals_calibrated_donation_elond() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let delta = 0.1;
        for _ in 0..100 {
            let mut rside = DonationRLond::new(delta, GammaRule::Default).unwrap();
            let mut eside = DonationELond::new(delta, GammaRule::Default).unwrap();
            let mut gamma = GammaSequence::default_rule();
            let mut harmonic = HarmonicTable::new();
            for t in 1..=60usize {
                let p = if rng.gen_bool(0.35) {
                    rng.gen_range(0.0..0.02)
                } else {
                    rng.gen_range(0.0..1.0)
                };
                let cal = calibrate_p_with_ell(p, t, gamma.gamma(t), delta, harmonic.ell(t));
                let a = rside.step(p).unwrap();
                let b = eside.step(cal).unwrap();
                assert_eq!(a.newly_rejected, b.newly_rejected, "t = {t}");
            }
        }
    }

    #[test]
    fn donation_online_ebh_examples() {
        let mut p = DonationOnlineEbh::new(0.5, GammaRule::Default).unwrap();
        for _ in 0..4 {
            let rec = p.step(0.0).unwrap();
            assert_eq!(p.last_r(), 0);
            assert!(rec.newly_rejected.is_empty());
        }
        let mut p = DonationOnlineEbh::new(0.5, GammaRule::Default).unwrap();
        let rec = p.step(1.0 / (0.5 * 0.5)).unwrap();
        assert_eq!(p.last_r(), 1);
        assert_eq!(rec.newly_rejected, vec![1]);
    }

    #[test]
    fn donation_online_ebh_matches_brute_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..120 {
            let delta = rng.gen_range(0.05..0.5);
            let mut p = DonationOnlineEbh::new(delta, GammaRule::Default).unwrap();
            let mut gamma = GammaSequence::default_rule();
            let mut pairs = Vec::new();
            for t in 1..=40usize {
                let e = if rng.gen_bool(0.3) {
                    rng.gen_range(0.0..4.0 / delta)
                } else {
                    rng.gen_range(0.0..1.5)
                };
                pairs.push((gamma.gamma(t), e));
                p.step(e).unwrap();
                let want = brute_r_scan(&pairs, delta, ScanMode::DonationEbh).unwrap();
                assert_eq!(p.last_r(), want, "t = {t}");
            }
        }
    }

    #[test]
    fn donation_etoad_immediate_deadlines_match_donation_elond() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..150 {
            let mut toad = DonationEToad::new(0.1, GammaRule::Default).unwrap();
            let mut lond = DonationELond::new(0.1, GammaRule::Default).unwrap();
            for t in 1..=60usize {
                let e = random_evalue(&mut rng);
                let a = toad.step_with_deadline(e, Deadline::At(t)).unwrap();
                let b = lond.step(e).unwrap();
                assert_eq!(a.newly_rejected, b.newly_rejected, "t = {t}");
            }
            assert_eq!(toad.rejected(), lond.rejected());
        }
    }

    #[test]
    fn donation_etoad_infinite_deadlines_match_donation_online_ebh() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..150 {
            let mut toad = DonationEToad::new(0.2, GammaRule::Default).unwrap();
            let mut ebh = DonationOnlineEbh::new(0.2, GammaRule::Default).unwrap();
            for _ in 1..=50usize {
                let e = if rng.gen_bool(0.3) {
                    rng.gen_range(0.0..40.0)
                } else {
                    rng.gen_range(0.0..1.5)
                };
                let a = toad.step_with_deadline(e, Deadline::Never).unwrap();
                let b = ebh.step(e).unwrap();
                assert_eq!(a.newly_rejected, b.newly_rejected);
                assert_eq!(toad.last_r(), ebh.last_r());
            }
        }
    }

    #[test]
    fn donation_etoad_matches_brute_scan_with_random_deadlines() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..80 {
            let delta = 0.15;
            let mut toad = DonationEToad::new(delta, GammaRule::Default).unwrap();
            let mut gamma = GammaSequence::default_rule();
            let mut pairs = Vec::new();
            let mut deadlines = Vec::new();
            for t in 1..=30usize {
                let e = if rng.gen_bool(0.35) {
                    rng.gen_range(0.0..6.0 / delta)
                } else {
                    rng.gen_range(0.0..1.5)
                };
                let d = if rng.gen_bool(0.3) {
                    Deadline::Never
                } else {
                    Deadline::At(t + rng.gen_range(0..6))
                };
                pairs.push((gamma.gamma(t), e));
                deadlines.push(d);
                let rec = toad.step_with_deadline(e, d).unwrap();
                let active: Vec<bool> = deadlines
                    .iter()
                    .map(|d| match d {
                        Deadline::Never => true,
                        Deadline::At(dd) => *dd >= t,
                    })
                    .collect();
                // R_{t-1} for the oracle is R_t minus this step's additions.
                let mut rejected_prev = vec![false; t];
                for &i in toad.rejected() {
                    rejected_prev[i - 1] = true;
                }
                for &i in &rec.newly_rejected {
                    rejected_prev[i - 1] = false;
                }
                let want = brute_r_scan(
                    &pairs,
                    delta,
                    ScanMode::DonationEtoad {
                        active: &active,
                        rejected_prev: &rejected_prev,
                    },
                )
                .unwrap();
                assert_eq!(toad.last_r(), want, "t = {t}");
            }
        }
    }

    #[test]
    fn offline_donation_examples() {
        assert!(donation_ebh_offline(&[0.0, 0.0], 0.3).unwrap().is_empty());
        // Superset of e-BH on random batches, with strict improvement seen.
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut strict = 0;
        for _ in 0..300 {
            let m = rng.gen_range(1..40usize);
            let delta = rng.gen_range(0.05..0.6);
            let evs: Vec<f64> = (0..m)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        rng.gen_range(0.0..3.0 * m as f64 / delta)
                    } else {
                        rng.gen_range(0.0..2.0)
                    }
                })
                .collect();
            let base = ebh_offline(&evs, delta).unwrap();
            let don = donation_ebh_offline(&evs, delta).unwrap();
            assert!(base.iter().all(|i| don.contains(i)));
            if don.len() > base.len() {
                strict += 1;
            }
        }
        assert!(strict > 0, "expected at least one strict improvement");
    }

    #[test]
    fn offline_donation_matches_brute_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for _ in 0..200 {
            let m = rng.gen_range(1..=20usize);
            let delta = rng.gen_range(0.05..0.6);
            let evs: Vec<f64> = (0..m)
                .map(|_| {
                    if rng.gen_bool(0.4) {
                        rng.gen_range(0.0..2.0 * m as f64 / delta)
                    } else {
                        rng.gen_range(0.0..2.0)
                    }
                })
                .collect();
            let pairs: Vec<(f64, f64)> = evs.iter().map(|&e| (1.0 / m as f64, e)).collect();
            let want = brute_r_scan(&pairs, delta, ScanMode::DonationEbh).unwrap();
            let got = donation_ebh_offline(&evs, delta).unwrap().len();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn restricted_round_cases() {
        assert_eq!(restricted_round(0.7, 0.3, 0.9).unwrap(), 0.7);
        // x = 1/α̂ boundary passes through.
        assert_eq!(restricted_round(2.0, 0.5, 0.0).unwrap(), 2.0);
        assert_eq!(restricted_round(1.5, 0.5, 0.4).unwrap(), 2.0);
        assert_eq!(restricted_round(1.5, 0.5, 0.6).unwrap(), 1.0);
        // α̂ ≥ 1 is the identity; α̂ ≤ 0 is a domain error.
        assert_eq!(restricted_round(5.0, 1.2, 0.1).unwrap(), 5.0);
        assert!(restricted_round(5.0, 0.0, 0.1).is_err());
        assert!(restricted_round(5.0, 0.5, 1.5).is_err());
    }

    #[test]
    fn restricted_round_preserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        for &(x, a) in &[(1.5, 0.5), (3.0, 0.2), (1.01, 0.9), (8.0, 0.05)] {
            let n = 100_000;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let v = restricted_round(x, a, rng.gen()).unwrap();
                sum += v;
                sumsq += v * v;
            }
            let mean = sum / n as f64;
            let var = (sumsq / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                mean <= x + 3.0 * se,
                "x = {x}, α̂ = {a}: mean {mean} (se {se})"
            );
        }
    }

    #[test]
    fn randomized_level_boundaries() {
        // u = 1 leaves α̂ unchanged; u = 0 inflates the level to 1.
        let mut p = RandomizedDonationELond::new(0.1, GammaRule::Default, 1).unwrap();
        let rec = p.step_with_uniform(0.0, 1.0).unwrap();
        assert_relative_eq!(rec.alpha, 0.1 * 0.5, max_relative = 1e-15);
        let mut p = RandomizedDonationELond::new(0.1, GammaRule::Default, 1).unwrap();
        let rec = p.step_with_uniform(0.0, 0.0).unwrap();
        assert_eq!(rec.alpha, 1.0);
    }

    #[test]
    fn randomized_rejections_superset_of_donation() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for seed in 0..100u64 {
            let mut rand_p = RandomizedDonationELond::new(0.1, GammaRule::Default, seed).unwrap();
            let mut don = DonationELond::new(0.1, GammaRule::Default).unwrap();
            for _ in 0..60 {
                let e = random_evalue(&mut rng);
                rand_p.step(e).unwrap();
                don.step(e).unwrap();
            }
            let rr = rand_p.rejected();
            assert!(
                don.rejected().iter().all(|i| rr.contains(i)),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn rlond_chain_superset_via_calibration() {
        // donation r-LOND ⊇ r-LOND stream-by-stream.
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        for _ in 0..100 {
            let mut don = DonationRLond::new(0.1, GammaRule::Default).unwrap();
            let mut base = RLond::new(0.1, GammaRule::Default).unwrap();
            for _ in 0..60 {
                let p = if rng.gen_bool(0.35) {
                    rng.gen_range(0.0..0.02)
                } else {
                    rng.gen_range(0.0..1.0)
                };
                let a = don.step(p).unwrap();
                let b = base.step(p).unwrap();
                assert!(a.alpha >= b.alpha * (1.0 - 1e-12));
            }
            let dr = don.rejected();
            assert!(base.rejected().iter().all(|i| dr.contains(i)));
        }
    }

    #[test]
    fn donation_online_ebh_superset_of_online_ebh() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..100 {
            let mut don = DonationOnlineEbh::new(0.2, GammaRule::Default).unwrap();
            let mut base = OnlineEbh::new(0.2, GammaRule::Default).unwrap();
            for _ in 0..50 {
                let e = if rng.gen_bool(0.3) {
                    rng.gen_range(0.0..40.0)
                } else {
                    rng.gen_range(0.0..1.5)
                };
                don.step(e).unwrap();
                base.step(e).unwrap();
                assert!(don.last_r() >= base.last_r());
            }
            let dr = don.rejected();
            assert!(base.rejected().iter().all(|i| dr.contains(i)));
        }
    }
}
