//! Fusion of precise and imprecise generalized basic belief assignments
//! over hyper-power sets, using the DSm classic and hybrid combination
//! rules.
//!
//! The crate is organised bottom-up:
//!
//! * [`interval_sets`] — exact arithmetic on sub-unitary sets (unions of
//!   intervals and points with open/closed endpoints),
//! * [`hyper_power_set`] — propositions under union and intersection,
//!   canonical forms, and enumeration of the full lattice,
//! * [`models`] — hybrid models: integrity constraints that force
//!   propositions to be empty,
//! * [`fusion`] — the combination rules themselves plus completeness and
//!   admissibility analysis,
//! * [`cli`] — the JSON problem-file format, run orchestration, and
//!   output rendering used by the `dsmt` binary.
//!
//! Fusing two interval-valued sources over a two-atom frame:
//!
//! ```
//! use dsmt::{dsm_classic_imprecise, Frame, ImpreciseMass};
//!
//! let frame = Frame::new(["rain", "sun"])?;
//! let rain = frame.parse_proposition("rain")?;
//! let sun = frame.parse_proposition("sun")?;
//! let m1 = ImpreciseMass::from_pairs([
//!     (rain.clone(), "[0.4,0.6]".parse()?),
//!     (sun.clone(), "[0.3,0.5]".parse()?),
//! ])?;
//! let m2 = ImpreciseMass::from_pairs([
//!     (rain.clone(), "[0.5,0.7]".parse()?),
//!     (sun.clone(), "{0.3}".parse()?),
//! ])?;
//!
//! let result = dsm_classic_imprecise(&[m1, m2])?;
//! let fused = result.imprecise().unwrap();
//! assert!((fused.get(&rain).inf() - 0.2).abs() < 1e-12);
//! assert!(fused.get(&rain.meet(&sun)).contains(0.3));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod fusion;
pub mod hyper_power_set;
pub mod interval_sets;
pub mod models;

pub use fusion::{
    check_admissibility, dsm_classic_imprecise, dsm_classic_precise, dsm_hybrid_imprecise,
    dsm_hybrid_precise, fuse_pointwise_sample, interval_bounds_fusion, AdmissibilityReport,
    ClampEvent, Completeness, CompletenessReport, FusedMass, FusionError, FusionResult,
    ImpreciseMass, MassMatrix, PreciseMass,
};
pub use hyper_power_set::{Frame, HyperPowerSet, LatticeError, Proposition, SymbolStyle};
pub use interval_sets::{Bound, Piece, SetValue, SetValueError};
pub use models::{HybridModel, ModelError};
