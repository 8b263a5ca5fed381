//! Online multiple hypothesis testing with SupFDR control.
//!
//! The crate implements three families of sequential testing procedures for
//! streams of e-values or p-values under arbitrary dependence:
//!
//! * **baselines** — e-LOND and r-LOND, online e-BH for the
//!   acceptance-to-rejection setting, e-TOAD for decision deadlines, and
//!   offline e-BH;
//! * **closed procedures** — uniform improvements obtained by testing every
//!   candidate rejection set against an increasing e-collection, computed
//!   with O(t²)-per-step dynamic programs; and
//! * **donation procedures** — compound e-values built by redistributing
//!   the capped surplus of past evidence, computed in O(log t) per step with
//!   an augmented order-statistic tree.
//!
//! Every fast path ships with a slow oracle ([`oracles`]) that evaluates
//! the defining formula directly, a simulation lab ([`sim`]) with the
//! locally dependent Gaussian and bounded Hoeffding stream models, and a
//! CSV-driven runner ([`io`]) behind the `supfdr` command-line tool.

pub mod baselines;
pub mod calibrate;
pub mod closure;
pub mod donation;
pub mod error;
pub mod gamma;
pub mod io;
pub mod ledger;
pub mod metrics;
pub mod oracles;
pub mod ostree;
pub mod registry;
pub mod sim;
pub mod stream;

pub use error::{Error, Result};
pub use gamma::{gamma_default, harmonic, GammaRule, GammaSequence, HarmonicTable};
pub use metrics::{fdp, sup_fdp, FdpTracker};
pub use registry::{build_procedure, Procedure, OFFLINE_PROCEDURES, STREAMING_PROCEDURES};
pub use stream::{Deadline, Evidence, EvidenceKind, Observation, RejectionRecord, StepRecord};
