//! Uniform driver interface over every streaming procedure.

use crate::baselines::{ELond, EToad, OnlineEbh, RLond};
use crate::closure::{ClosedELond, ClosedELondGap, ClosedRLond};
use crate::donation::{
    DonationELond, DonationEToad, DonationOnlineEbh, DonationRLond, RandomizedDonationELond,
};
use crate::error::{Error, Result};
use crate::gamma::GammaRule;
use crate::stream::{Deadline, EvidenceKind, Observation, StepRecord};

/// A sequential testing procedure driven one observation at a time.
pub trait Procedure: Send {
    fn name(&self) -> &str;
    fn evidence_kind(&self) -> EvidenceKind;
    fn step(&mut self, obs: &Observation) -> Result<StepRecord>;
    /// Current rejection set, ascending.
    fn rejected(&self) -> Vec<usize>;
    fn t(&self) -> usize;
}

macro_rules! impl_procedure {
    ($ty:ty, $name:expr, EvidenceKind::EValue) => {
        impl Procedure for $ty {
            fn name(&self) -> &str {
                $name
            }
            fn evidence_kind(&self) -> EvidenceKind {
                EvidenceKind::EValue
            }
            fn step(&mut self, obs: &Observation) -> Result<StepRecord> {
                self.step(obs.evidence.e_value()?)
            }
            fn rejected(&self) -> Vec<usize> {
                self.rejected().to_vec()
            }
            fn t(&self) -> usize {
                self.t()
            }
        }
    };
    ($ty:ty, $name:expr, EvidenceKind::PValue) => {
        impl Procedure for $ty {
            fn name(&self) -> &str {
                $name
            }
            fn evidence_kind(&self) -> EvidenceKind {
                EvidenceKind::PValue
            }
            fn step(&mut self, obs: &Observation) -> Result<StepRecord> {
                self.step(obs.evidence.p_value()?)
            }
            fn rejected(&self) -> Vec<usize> {
                self.rejected().to_vec()
            }
            fn t(&self) -> usize {
                self.t()
            }
        }
    };
}

impl_procedure!(ELond, "e-lond", EvidenceKind::EValue);
impl_procedure!(ClosedELond, "closed-e-lond", EvidenceKind::EValue);
impl_procedure!(ClosedELondGap, "closed-e-lond-gap", EvidenceKind::EValue);
impl_procedure!(DonationELond, "donation-e-lond", EvidenceKind::EValue);
impl_procedure!(OnlineEbh, "online-e-bh", EvidenceKind::EValue);
impl_procedure!(DonationOnlineEbh, "donation-online-e-bh", EvidenceKind::EValue);
impl_procedure!(RLond, "r-lond", EvidenceKind::PValue);
impl_procedure!(ClosedRLond, "closed-r-lond", EvidenceKind::PValue);
impl_procedure!(DonationRLond, "donation-r-lond", EvidenceKind::PValue);

impl Procedure for RandomizedDonationELond {
    fn name(&self) -> &str {
        "randomized-donation-e-lond"
    }
    fn evidence_kind(&self) -> EvidenceKind {
        EvidenceKind::EValue
    }
    fn step(&mut self, obs: &Observation) -> Result<StepRecord> {
        self.step(obs.evidence.e_value()?)
    }
    fn rejected(&self) -> Vec<usize> {
        self.rejected().to_vec()
    }
    fn t(&self) -> usize {
        self.t()
    }
}

impl Procedure for EToad {
    fn name(&self) -> &str {
        "e-toad"
    }
    fn evidence_kind(&self) -> EvidenceKind {
        EvidenceKind::EValue
    }
    fn step(&mut self, obs: &Observation) -> Result<StepRecord> {
        let d = obs.deadline.unwrap_or(Deadline::Never);
        self.step_with_deadline(obs.evidence.e_value()?, d)
    }
    fn rejected(&self) -> Vec<usize> {
        self.rejected().to_vec()
    }
    fn t(&self) -> usize {
        self.t()
    }
}

impl Procedure for DonationEToad {
    fn name(&self) -> &str {
        "donation-e-toad"
    }
    fn evidence_kind(&self) -> EvidenceKind {
        EvidenceKind::EValue
    }
    fn step(&mut self, obs: &Observation) -> Result<StepRecord> {
        let d = obs.deadline.unwrap_or(Deadline::Never);
        self.step_with_deadline(obs.evidence.e_value()?, d)
    }
    fn rejected(&self) -> Vec<usize> {
        self.rejected().to_vec()
    }
    fn t(&self) -> usize {
        self.t()
    }
}

/// Streaming procedures the registry can build, in presentation order.
pub const STREAMING_PROCEDURES: &[&str] = &[
    "e-lond",
    "closed-e-lond",
    "closed-e-lond-gap",
    "donation-e-lond",
    "randomized-donation-e-lond",
    "r-lond",
    "closed-r-lond",
    "donation-r-lond",
    "online-e-bh",
    "donation-online-e-bh",
    "e-toad",
    "donation-e-toad",
];

/// Offline batch procedures exposed through the CLI.
pub const OFFLINE_PROCEDURES: &[&str] = &["e-bh", "donation-e-bh"];

pub fn is_offline(name: &str) -> bool {
    OFFLINE_PROCEDURES.contains(&name)
}

/// Builds a streaming procedure by registry name. The seed only matters for
/// the randomized variant.
pub fn build_procedure(
    name: &str,
    delta: f64,
    gamma: GammaRule,
    seed: u64,
) -> Result<Box<dyn Procedure>> {
    Ok(match name {
        "e-lond" => Box::new(ELond::new(delta, gamma)?),
        "closed-e-lond" => Box::new(ClosedELond::new(delta, gamma)?),
        "closed-e-lond-gap" => Box::new(ClosedELondGap::new(delta, gamma)?),
        "donation-e-lond" => Box::new(DonationELond::new(delta, gamma)?),
        "randomized-donation-e-lond" => {
            Box::new(RandomizedDonationELond::new(delta, gamma, seed)?)
        }
        "r-lond" => Box::new(RLond::new(delta, gamma)?),
        "closed-r-lond" => Box::new(ClosedRLond::new(delta, gamma)?),
        "donation-r-lond" => Box::new(DonationRLond::new(delta, gamma)?),
        "online-e-bh" => Box::new(OnlineEbh::new(delta, gamma)?),
        "donation-online-e-bh" => Box::new(DonationOnlineEbh::new(delta, gamma)?),
        "e-toad" => Box::new(EToad::new(delta, gamma)?),
        "donation-e-toad" => Box::new(DonationEToad::new(delta, gamma)?),
        other => return Err(Error::UnknownProcedure(other.to_string())),
    })
}
