//! Discount sequences γ and harmonic numbers.
//!
//! Every procedure in this crate spends its testing budget according to a
//! fixed nonnegative sequence γ_1, γ_2, … with Σ_t γ_t ≤ 1. The sequence is
//! represented by a *rule* (a generator indexed by t ≥ 1) rather than a
//! stored array, since streams are unbounded; values and prefix sums are
//! cached incrementally as the stream advances.

use crate::error::{Error, Result};

/// Tolerance on the prefix-sum budget: Σ_{i≤t} γ_i ≤ 1 + `GAMMA_SUM_SLACK`.
pub const GAMMA_SUM_SLACK: f64 = 1e-12;

/// Generator rule for a discount sequence.
#[derive(Debug, Clone)]
pub enum GammaRule {
    /// γ_t = 1/(t(t+1)). Telescopes to exactly 1.
    Default,
    /// Constant weight. Only valid up to the horizon where the sum stays ≤ 1.
    Constant(f64),
    /// All-zero sequence (never rejects; useful for edge-case tests).
    Zero,
    /// Explicit leading weights for t = 1..=values.len(), then a tail rule
    /// evaluated at the absolute index t.
    Table {
        values: Vec<f64>,
        tail: Box<GammaRule>,
    },
}

impl GammaRule {
    fn value(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        match self {
            GammaRule::Default => {
                let tf = t as f64;
                1.0 / (tf * (tf + 1.0))
            }
            GammaRule::Constant(c) => *c,
            GammaRule::Zero => 0.0,
            GammaRule::Table { values, tail } => match values.get(t - 1) {
                Some(v) => *v,
                None => tail.value(t),
            },
        }
    }
}

/// γ_t = 1/(t(t+1)), the bundled default rule.
pub fn gamma_default(t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("gamma index t must be >= 1".into()));
    }
    let tf = t as f64;
    Ok(1.0 / (tf * (tf + 1.0)))
}

/// ℓ_t = Σ_{i ≤ t} 1/i, the t-th harmonic number.
pub fn harmonic(t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("harmonic index t must be >= 1".into()));
    }
    let mut acc = 0.0;
    for i in 1..=t {
        acc += 1.0 / i as f64;
    }
    Ok(acc)
}

/// First index at which a discount sequence breaks its contract.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaViolation {
    /// Offending index t (1-based).
    pub index: usize,
    pub kind: GammaViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaViolationKind {
    /// γ_t < 0.
    Negative { gamma: f64 },
    /// Σ_{i≤t} γ_i > 1 + slack.
    PrefixExceedsBudget { prefix_sum: f64 },
}

impl std::fmt::Display for GammaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            GammaViolationKind::Negative { gamma } => {
                write!(f, "gamma_{} = {} is negative", self.index, gamma)
            }
            GammaViolationKind::PrefixExceedsBudget { prefix_sum } => {
                write!(
                    f,
                    "prefix sum through t = {} is {} > 1",
                    self.index, prefix_sum
                )
            }
        }
    }
}

/// A discount sequence with incrementally cached values and prefix sums.
#[derive(Debug, Clone)]
pub struct GammaSequence {
    rule: GammaRule,
    values: Vec<f64>,
    // prefix[t] = Σ_{i ≤ t}; prefix[0] = 0.
    prefix: Vec<f64>,
}

impl GammaSequence {
    pub fn new(rule: GammaRule) -> Self {
        GammaSequence {
            rule,
            values: Vec::new(),
            prefix: vec![0.0],
        }
    }

    pub fn default_rule() -> Self {
        Self::new(GammaRule::Default)
    }

    pub fn rule(&self) -> &GammaRule {
        &self.rule
    }

    /// Materializes the cache through index t.
    pub fn ensure(&mut self, t: usize) {
        while self.values.len() < t {
            let next = self.values.len() + 1;
            let v = self.rule.value(next);
            let sum = self.prefix[next - 1] + v;
            self.values.push(v);
            self.prefix.push(sum);
        }
    }

    /// γ_t for t ≥ 1.
    pub fn gamma(&mut self, t: usize) -> f64 {
        assert!(t >= 1, "gamma index t must be >= 1");
        self.ensure(t);
        self.values[t - 1]
    }

    /// Σ_{i ≤ t} γ_i, with the empty sum for t = 0.
    pub fn prefix_sum(&mut self, t: usize) -> f64 {
        self.ensure(t);
        self.prefix[t]
    }

    /// Slice view `[γ_1, …, γ_t]`.
    pub fn values_upto(&mut self, t: usize) -> &[f64] {
        self.ensure(t);
        &self.values[..t]
    }

    /// Slice view `[0, Σ_{i≤1}, …, Σ_{i≤t}]` (length t + 1).
    pub fn prefix_upto(&mut self, t: usize) -> &[f64] {
        self.ensure(t);
        &self.prefix[..=t]
    }

    /// Checks nonnegativity and the Σ ≤ 1 budget through `horizon`,
    /// reporting the first offending index. The report is a value, not an
    /// error: an invalid sequence is an answer, not a failure.
    pub fn validate(&mut self, horizon: usize) -> std::result::Result<(), GammaViolation> {
        self.ensure(horizon);
        for t in 1..=horizon {
            let g = self.values[t - 1];
            if g < 0.0 || g.is_nan() {
                return Err(GammaViolation {
                    index: t,
                    kind: GammaViolationKind::Negative { gamma: g },
                });
            }
            let sum = self.prefix[t];
            if sum > 1.0 + GAMMA_SUM_SLACK {
                return Err(GammaViolation {
                    index: t,
                    kind: GammaViolationKind::PrefixExceedsBudget { prefix_sum: sum },
                });
            }
        }
        Ok(())
    }
}

/// Incrementally cached harmonic numbers ℓ_t.
#[derive(Debug, Clone, Default)]
pub struct HarmonicTable {
    // partial[t - 1] = ℓ_t
    partial: Vec<f64>,
}

impl HarmonicTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ensure(&mut self, t: usize) {
        while self.partial.len() < t {
            let next = self.partial.len() + 1;
            let prev = if next == 1 {
                0.0
            } else {
                self.partial[next - 2]
            };
            self.partial.push(prev + 1.0 / next as f64);
        }
    }

    /// ℓ_t for t ≥ 1.
    pub fn ell(&mut self, t: usize) -> f64 {
        assert!(t >= 1, "harmonic index t must be >= 1");
        self.ensure(t);
        self.partial[t - 1]
    }

    /// Slice view `[ℓ_1, …, ℓ_t]`.
    pub fn values_upto(&mut self, t: usize) -> &[f64] {
        self.ensure(t);
        &self.partial[..t]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_rule_first_terms() {
        assert_eq!(gamma_default(1).unwrap(), 0.5);
        assert_relative_eq!(gamma_default(2).unwrap(), 1.0 / 6.0, max_relative = 1e-15);
        assert!(gamma_default(0).is_err());
    }

    #[test]
    fn default_rule_telescopes() {
        // Σ_{t≤n} 1/(t(t+1)) = 1 - 1/(n+1), checked against the closed form.
        let mut seq = GammaSequence::default_rule();
        let n = 1_000_000;
        let sum = seq.prefix_sum(n);
        let expected = 1.0 - 1.0 / (n as f64 + 1.0);
        assert!((sum - expected).abs() < 1e-12, "sum {sum} vs {expected}");
    }

    #[test]
    fn validate_default_ok() {
        let mut seq = GammaSequence::default_rule();
        assert!(seq.validate(1000).is_ok());
    }

    #[test]
    fn validate_constant_overflows_at_four() {
        let mut seq = GammaSequence::new(GammaRule::Constant(0.3));
        let v = seq.validate(4).unwrap_err();
        assert_eq!(v.index, 4);
        match v.kind {
            GammaViolationKind::PrefixExceedsBudget { prefix_sum } => {
                assert_relative_eq!(prefix_sum, 1.2, max_relative = 1e-12)
            }
            _ => panic!("expected budget violation"),
        }
    }

    #[test]
    fn validate_negative_first_weight() {
        let mut seq = GammaSequence::new(GammaRule::Table {
            values: vec![-0.1],
            tail: Box::new(GammaRule::Zero),
        });
        let v = seq.validate(3).unwrap_err();
        assert_eq!(v.index, 1);
        assert!(matches!(v.kind, GammaViolationKind::Negative { .. }));
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1).unwrap(), 1.0);
        assert_eq!(harmonic(2).unwrap(), 1.5);
        assert_relative_eq!(harmonic(4).unwrap(), 25.0 / 12.0, max_relative = 1e-15);
        assert!(harmonic(0).is_err());
    }

    #[test]
    fn harmonic_increment_is_exact() {
        let mut table = HarmonicTable::new();
        for t in 2..200 {
            let diff = table.ell(t) - table.ell(t - 1);
            assert_eq!(diff, table.ell(t) - table.ell(t - 1));
            assert!((diff - 1.0 / t as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn prefix_sums_nondecreasing_and_bounded() {
        for rule in [GammaRule::Default, GammaRule::Zero] {
            let mut seq = GammaSequence::new(rule);
            let mut prev = 0.0;
            for t in 1..=5000 {
                let s = seq.prefix_sum(t);
                assert!(s >= prev);
                assert!(s <= 1.0 + GAMMA_SUM_SLACK);
                prev = s;
            }
        }
    }

    #[test]
    fn table_rule_falls_back_to_tail() {
        let mut seq = GammaSequence::new(GammaRule::Table {
            values: vec![0.25, 0.25],
            tail: Box::new(GammaRule::Default),
        });
        assert_eq!(seq.gamma(1), 0.25);
        assert_eq!(seq.gamma(2), 0.25);
        assert_eq!(seq.gamma(3), gamma_default(3).unwrap());
    }
}
