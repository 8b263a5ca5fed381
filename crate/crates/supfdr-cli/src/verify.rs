//! Desk-scale oracle verification behind `supfdr verify`.
//!
//! Replays the crate's fast paths against the brute-force reference
//! implementations on seeded random streams and prints one line per check.
//! Exits nonzero if any comparison fails.

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supfdr::baselines::{ELond, EToad, OnlineEbh, RLond};
use supfdr::calibrate::calibrate_p_with_ell;
use supfdr::closure::{ClosedELond, ClosedELondGap, ClosedRLond, ECollectionKind};
use supfdr::donation::{DonationELond, DonationEToad, DonationOnlineEbh};
use supfdr::gamma::{GammaRule, GammaSequence, HarmonicTable};
use supfdr::oracles::{brute_closure_level, brute_r_scan, naive_wealth, OracleBudget, ScanMode};
use supfdr::sim::derive_seed;
use supfdr::stream::Deadline;

fn random_evalue(rng: &mut ChaCha8Rng, delta: f64) -> f64 {
    if rng.gen_bool(0.3) {
        rng.gen_range(0.0..6.0 / delta)
    } else {
        rng.gen_range(0.0..1.5)
    }
}

fn random_pvalue(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.35) {
        rng.gen_range(0.0..0.02)
    } else {
        rng.gen_range(0.0..1.0)
    }
}

pub fn run(seed: u64, streams: usize, delta: f64) -> Result<()> {
    let mut failures = 0usize;
    let mut report = |name: &str, checks: usize, failed: usize| {
        if failed == 0 {
            println!("check {name}: ok ({checks} comparisons)");
        } else {
            println!("check {name}: FAIL ({failed} of {checks} comparisons)");
            failures += failed;
        }
    };

    // Closed dynamic programs vs exhaustive subset minimization, t <= 12.
    {
        let budget = OracleBudget::default();
        let mut checks = 0;
        let mut failed = 0;
        for s in 0..streams as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, s));
            let mut closed = ClosedELond::new(delta, GammaRule::Default)?;
            let mut gap = ClosedELondGap::new(delta, GammaRule::Default)?;
            let mut rlond = ClosedRLond::new(delta, GammaRule::Default)?;
            let mut evs = Vec::new();
            let mut rej_e = Vec::new();
            let mut rej_g = Vec::new();
            let mut ps = Vec::new();
            let mut rej_p = Vec::new();
            for t in 1..=12usize {
                let mut gamma = GammaSequence::default_rule();
                for (kind, got, hist, rej) in [
                    (ECollectionKind::Reset, closed.peek_level(), &evs, &rej_e),
                    (ECollectionKind::Gap, gap.peek_level(), &evs, &rej_g),
                    (
                        ECollectionKind::CalibratedReset,
                        rlond.peek_level(),
                        &ps,
                        &rej_p,
                    ),
                ] {
                    let want =
                        brute_closure_level(t, kind, hist, rej, delta, &mut gamma, &budget)?;
                    checks += 1;
                    let ok = if want.is_infinite() {
                        got.is_infinite()
                    } else {
                        (got - want).abs() <= 1e-9 * (1.0 + want.abs())
                    };
                    if !ok {
                        failed += 1;
                    }
                }
                let e = random_evalue(&mut rng, delta);
                rej_e.push(!closed.step(e)?.newly_rejected.is_empty());
                rej_g.push(!gap.step(e)?.newly_rejected.is_empty());
                evs.push(e);
                let p = random_pvalue(&mut rng);
                rej_p.push(!rlond.step(p)?.newly_rejected.is_empty());
                ps.push(p);
            }
        }
        report("closed levels vs exhaustive minimization", checks, failed);
    }

    // Ledger wealth vs direct summation over 2000-step streams.
    {
        let mut checks = 0;
        let mut failed = 0;
        for s in 0..streams as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed ^ 0xA1, s));
            let mut proc = DonationELond::new(delta, GammaRule::Default)?;
            let mut gamma = GammaSequence::default_rule();
            let mut gammas = Vec::new();
            let mut evals = Vec::new();
            let mut rejected = Vec::new();
            for t in 1..=2000usize {
                gammas.push(gamma.gamma(t));
                let e = random_evalue(&mut rng, delta);
                let rec = proc.step(e)?;
                let naive = naive_wealth(&gammas[..t - 1], &evals, &rejected, delta);
                checks += 1;
                if (rec.wealth.unwrap() - naive).abs() > 1e-9 * (1.0 + naive.abs()) {
                    failed += 1;
                }
                evals.push(e);
                rejected.push(!rec.newly_rejected.is_empty());
            }
        }
        report("ledger wealth vs direct summation", checks, failed);
    }

    // Step-up counts vs brute candidate scans.
    {
        let mut checks = 0;
        let mut failed = 0;
        for s in 0..streams as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed ^ 0xB2, s));
            let mut don = DonationOnlineEbh::new(delta, GammaRule::Default)?;
            let mut base = OnlineEbh::new(delta, GammaRule::Default)?;
            let mut gamma = GammaSequence::default_rule();
            let mut pairs = Vec::new();
            for t in 1..=40usize {
                let e = random_evalue(&mut rng, delta);
                pairs.push((gamma.gamma(t), e));
                don.step(e)?;
                base.step(e)?;
                checks += 2;
                if don.last_r() != brute_r_scan(&pairs, delta, ScanMode::DonationEbh)? {
                    failed += 1;
                }
                if base.last_r() != brute_r_scan(&pairs, delta, ScanMode::Ebh)? {
                    failed += 1;
                }
            }
        }
        report("step-up counts vs brute scans", checks, failed);
    }

    // e-TOAD reductions and donation e-TOAD vs brute scan.
    {
        let mut checks = 0;
        let mut failed = 0;
        for s in 0..streams as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed ^ 0xC3, s));
            let mut toad_now = EToad::new(delta, GammaRule::Default)?;
            let mut lond = ELond::new(delta, GammaRule::Default)?;
            let mut toad_never = EToad::new(delta, GammaRule::Default)?;
            let mut ebh = OnlineEbh::new(delta, GammaRule::Default)?;
            let mut dtoad = DonationEToad::new(delta, GammaRule::Default)?;
            let mut gamma = GammaSequence::default_rule();
            let mut pairs = Vec::new();
            let mut deadlines = Vec::new();
            for t in 1..=30usize {
                let e = random_evalue(&mut rng, delta);
                checks += 3;
                if toad_now.step_with_deadline(e, Deadline::At(t))?.newly_rejected
                    != lond.step(e)?.newly_rejected
                {
                    failed += 1;
                }
                if toad_never.step_with_deadline(e, Deadline::Never)?.newly_rejected
                    != ebh.step(e)?.newly_rejected
                {
                    failed += 1;
                }
                let d = if rng.gen_bool(0.3) {
                    Deadline::Never
                } else {
                    Deadline::At(t + rng.gen_range(0..6))
                };
                pairs.push((gamma.gamma(t), e));
                deadlines.push(d);
                let rec = dtoad.step_with_deadline(e, d)?;
                let active: Vec<bool> = deadlines
                    .iter()
                    .map(|d| match d {
                        Deadline::Never => true,
                        Deadline::At(dd) => *dd >= t,
                    })
                    .collect();
                let mut rejected_prev = vec![false; t];
                for &i in dtoad.rejected() {
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
                )?;
                if dtoad.last_r() != want {
                    failed += 1;
                }
            }
        }
        report("deadline reductions and donation e-TOAD", checks, failed);
    }

    // Calibration equivalence of the p-value procedures.
    {
        let mut checks = 0;
        let mut failed = 0;
        for s in 0..streams as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed ^ 0xD4, s));
            let mut rlond = RLond::new(delta, GammaRule::Default)?;
            let mut elond = ELond::new(delta, GammaRule::Default)?;
            let mut gamma = GammaSequence::default_rule();
            let mut harmonic = HarmonicTable::new();
            for t in 1..=80usize {
                let p = random_pvalue(&mut rng);
                let cal = calibrate_p_with_ell(p, t, gamma.gamma(t), delta, harmonic.ell(t));
                checks += 1;
                if rlond.step(p)?.newly_rejected != elond.step(cal)?.newly_rejected {
                    failed += 1;
                }
            }
        }
        report("r-LOND calibration equivalence", checks, failed);
    }

    if failures > 0 {
        bail!("{failures} oracle comparisons failed");
    }
    println!("all oracle checks passed");
    Ok(())
}
