//! p-value → e-value calibration and reshaping.
//!
//! The calibrator is the step-function dual of the Benjamini–Yekutieli
//! style reshaping correction: rejecting p-values at the reshaped LOND
//! level is exactly the same as calibrating them and rejecting at the
//! e-value LOND level. Every p-value procedure in this crate is wired
//! through these two functions so that the equivalence stays exact.

use crate::error::{Error, Result};
use crate::gamma::harmonic;

/// Core of the calibrator with δγ_t factored out:
///
/// `unit = 1{p ≤ δ γ_t t / ℓ_t} / ⌈(p ℓ_t / (δ γ_t)) ∨ 1⌉`
///
/// so that the calibrated e-value is `unit / (δ γ_t)` and a weighted
/// collection contribution `γ_t f_t(p)` is `unit / δ`. All callers (the
/// calibrator, the closed dynamic programs, the exhaustive oracles) share
/// this single float route, so their indicator and ceiling decisions are
/// bit-identical.
#[inline]
pub fn calibrator_unit(p: f64, t: usize, gamma_t: f64, ell_t: f64, delta: f64) -> f64 {
    if gamma_t <= 0.0 {
        return 0.0;
    }
    let dg = delta * gamma_t;
    if p <= dg * (t as f64) / ell_t {
        1.0 / (p * ell_t / dg).max(1.0).ceil()
    } else {
        0.0
    }
}

/// Calibrated e-value f_t(p) with ℓ_t supplied by the caller.
#[inline]
pub fn calibrate_p_with_ell(p: f64, t: usize, gamma_t: f64, delta: f64, ell_t: f64) -> f64 {
    if gamma_t <= 0.0 {
        // Empty threshold set: the calibrator never fires.
        return 0.0;
    }
    calibrator_unit(p, t, gamma_t, ell_t, delta) / (delta * gamma_t)
}

/// Calibrated e-value f_t(p) = 1{p ≤ δγ_t t/ℓ_t} / (δγ_t ⌈(p ℓ_t/(δγ_t)) ∨ 1⌉).
///
/// Takes values in {0} ∪ {1/(δγ_t k) : k ∈ 1..=t} and is nonincreasing in p.
pub fn calibrate_p(p: f64, t: usize, gamma_t: f64, delta: f64) -> Result<f64> {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p-value {p} must lie in [0, 1]")));
    }
    if t == 0 {
        return Err(Error::Domain("calibrator index t must be >= 1".into()));
    }
    let ell = harmonic(t)?;
    Ok(calibrate_p_with_ell(p, t, gamma_t, delta, ell))
}

/// Reshaping function β_t(r) = (⌊r⌋ ∧ t) / ℓ_t.
pub fn reshape_beta(r: f64, t: usize) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("reshape argument {r} must be >= 0")));
    }
    let ell = harmonic(t)?;
    Ok(r.floor().min(t as f64) / ell)
}
