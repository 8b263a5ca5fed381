//! Slow, obviously-correct reference implementations.
//!
//! Every fast path in the crate (the closed dynamic programs, the wealth
//! ledger, the step-up scans) is validated at desk scale against the
//! literal definition it implements. The oracles enumerate or re-sum
//! directly and are deliberately unoptimized; they never feed benchmarks.
//!
//! The closure oracle accumulates each subset's denominator with exactly
//! the same expression and ordering as the dynamic programs, so equality
//! tests are immune to float-rounding boundary flips on the discrete parts
//! (ceilings, floors, indicator thresholds).

use crate::calibrate::calibrator_unit;
use crate::closure::{CollectionEnv, ECollectionKind};
use crate::error::{Error, Result};
use crate::gamma::GammaSequence;

/// Caps on the oracles' exhaustive work.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    /// Largest t for 2^t subset enumeration.
    pub max_t_exhaustive: usize,
    /// Largest instance for the O(n²) candidate scans.
    pub max_t_scan: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_t_exhaustive: 16,
            max_t_scan: 4096,
        }
    }
}

/// Exhaustive closed test level at time t: the minimum over all S ⊆ [t−1]
/// with a positive denominator, +∞ (or 1 for the calibrated kind) when every
/// constraint is vacuous.
///
/// `evidence[i-1]` and `rejected[i-1]` describe the first t−1 arrivals;
/// `rejected` is R_{t−1}.
pub fn brute_closure_level(
    t: usize,
    kind: ECollectionKind,
    evidence: &[f64],
    rejected: &[bool],
    delta: f64,
    gamma: &mut GammaSequence,
    budget: &OracleBudget,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("time t must be >= 1".into()));
    }
    if t > budget.max_t_exhaustive {
        return Err(Error::Capability(format!(
            "exhaustive closure level at t = {t} exceeds cap {}",
            budget.max_t_exhaustive
        )));
    }
    let n = t - 1;
    if evidence.len() < n || rejected.len() < n {
        return Err(Error::Domain("history shorter than t - 1".into()));
    }
    let env = CollectionEnv::new(gamma, t, delta);
    let rp1 = (rejected.iter().filter(|&&b| b).count() + 1) as f64;

    let mut alpha = match kind {
        ECollectionKind::CalibratedReset => 1.0f64,
        _ => f64::INFINITY,
    };
    for mask in 0u64..(1u64 << n) {
        // Accumulate the denominator along the chain in ascending index
        // order, mirroring the DP transitions term for term.
        let mut acc = 0.0f64;
        let mut size = 0usize;
        let mut last = 0usize;
        for i in 1..=n {
            if mask & (1 << (i - 1)) == 0 {
                continue;
            }
            size += 1;
            let ind = if rejected[i - 1] { 1.0 } else { 0.0 };
            let x = evidence[i - 1];
            let contribution = match kind {
                ECollectionKind::Reset => ind - delta * env.gamma(size) * x * rp1,
                ECollectionKind::Gap => {
                    ind - delta * rp1 * (env.prefix(i) - env.prefix(last)) * x
                }
                ECollectionKind::CalibratedReset => {
                    ind - rp1 * calibrator_unit(x, size, env.gamma(size), env.ell(size), delta)
                }
            };
            acc += contribution;
            last = i;
        }
        let denom = 1.0 + acc;
        if denom <= 0.0 {
            continue;
        }
        let term = match kind {
            ECollectionKind::Reset => delta * env.gamma(size + 1) * rp1 / denom,
            ECollectionKind::Gap => delta * (env.prefix(t) - env.prefix(last)) * rp1 / denom,
            ECollectionKind::CalibratedReset => {
                let raw = rp1 / denom;
                let floored = raw.min((size + 1) as f64).floor();
                delta * env.gamma(size + 1) / env.ell(size + 1) * floored
            }
        };
        if term < alpha {
            alpha = term;
        }
    }
    Ok(alpha)
}

/// Direct two-sum wealth: Σ_{rejected} γ ∧ (γE − θ) + Σ_{unrejected} γ(E ∧ 1)
/// with θ = 1/(δ(|R|+1)). Arrays describe the first t−1 arrivals.
pub fn naive_wealth(gammas: &[f64], evalues: &[f64], rejected: &[bool], delta: f64) -> f64 {
    let r = rejected.iter().filter(|&&b| b).count();
    let theta = 1.0 / (delta * (r + 1) as f64);
    let mut total = 0.0;
    for i in 0..evalues.len() {
        let (g, e) = (gammas[i], evalues[i]);
        if rejected[i] {
            total += g.min(g * e - theta);
        } else {
            total += g * e.min(1.0);
        }
    }
    total
}

/// Which step-up rule the scan evaluates.
#[derive(Debug, Clone, Copy)]
pub enum ScanMode<'a> {
    /// Online e-BH: count condition over all items.
    Ebh,
    /// Donation online e-BH (also offline with uniform weights).
    DonationEbh,
    /// e-TOAD: counts restricted to actives, totals offset by settled
    /// rejections.
    Etoad {
        active: &'a [bool],
        rejected_prev: &'a [bool],
    },
    /// Donation e-TOAD.
    DonationEtoad {
        active: &'a [bool],
        rejected_prev: &'a [bool],
    },
}

/// Evaluates the defining predicate for every candidate count r and returns
/// the largest satisfying one (0 if none). `items[i] = (γ_{i+1}, E_{i+1})`.
/// Refuses instances beyond the default scan budget.
pub fn brute_r_scan(items: &[(f64, f64)], delta: f64, mode: ScanMode) -> Result<usize> {
    let n = items.len();
    let cap = OracleBudget::default().max_t_scan;
    if n > cap {
        return Err(Error::Capability(format!(
            "brute r-scan on {n} items exceeds the scan cap {cap}"
        )));
    }
    let keys: Vec<f64> = items.iter().map(|&(g, e)| g * e).collect();
    match mode {
        ScanMode::Ebh => {
            let mut best = 0;
            for r in 1..=n {
                let thr = 1.0 / (delta * r as f64);
                if keys.iter().filter(|&&k| k >= thr).count() >= r {
                    best = r;
                }
            }
            Ok(best)
        }
        ScanMode::DonationEbh => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| keys[b].partial_cmp(&keys[a]).unwrap().then(a.cmp(&b)));
            let mut best = 0;
            for r in 1..=n {
                let theta = 1.0 / (delta * r as f64);
                let mut balance = 0.0;
                for (pos, &id) in order.iter().enumerate() {
                    let (g, e) = items[id];
                    if pos < r {
                        balance += (g * e - theta).min(g);
                    } else {
                        balance += g * e.min(1.0);
                    }
                }
                if balance >= 0.0 {
                    best = r;
                }
            }
            Ok(best)
        }
        ScanMode::Etoad {
            active,
            rejected_prev,
        } => {
            let k = (0..n).filter(|&i| rejected_prev[i] && !active[i]).count();
            let m = (0..n).filter(|&i| active[i]).count();
            let mut best = 0;
            for r in k..=k.max(m) {
                let thr = 1.0 / (delta * (r.max(1) as f64));
                let count = (0..n).filter(|&i| active[i] && keys[i] >= thr).count();
                if count + k >= r {
                    best = r;
                }
            }
            Ok(best)
        }
        ScanMode::DonationEtoad {
            active,
            rejected_prev,
        } => {
            let k = (0..n).filter(|&i| rejected_prev[i] && !active[i]).count();
            let mut actives: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
            actives.sort_by(|&a, &b| keys[b].partial_cmp(&keys[a]).unwrap().then(a.cmp(&b)));
            let m = actives.len();
            let mut best = 0;
            for r in k..=(k + m) {
                let theta = 1.0 / (delta * (r.max(1) as f64));
                let take = r - k;
                let mut balance = 0.0;
                for (pos, &id) in actives.iter().enumerate() {
                    let (g, e) = items[id];
                    if pos < take {
                        balance += (g * e - theta).min(g);
                    } else {
                        balance += g * e.min(1.0);
                    }
                }
                for i in 0..n {
                    if active[i] {
                        continue;
                    }
                    let (g, e) = items[i];
                    if rejected_prev[i] {
                        balance += (g * e - theta).min(g);
                    } else {
                        balance += g * e.min(1.0);
                    }
                }
                if balance >= 0.0 {
                    best = r;
                }
            }
            Ok(best)
        }
    }
}

/// Weighted self-consistency: Ẽ_t ≥ 1/(δ γ_t |R|) for every t ∈ R
/// (vacuously true for the empty set). γ_t = 0 with a finite Ẽ_t fails.
pub fn self_consistency_check(
    rejected: &[usize],
    gammas: &[f64],
    e_tilde: &[f64],
    delta: f64,
) -> bool {
    let r = rejected.len();
    if r == 0 {
        return true;
    }
    rejected.iter().all(|&t| {
        let need = 1.0 / (delta * gammas[t - 1] * r as f64);
        e_tilde[t - 1] >= need
    })
}
