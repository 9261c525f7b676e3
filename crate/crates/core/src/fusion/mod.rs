//! Combination of belief assignments with the DSm classic and hybrid
//! rules, for both precise (scalar) and imprecise (set-valued) masses,
//! plus completeness classification and admissibility analysis.
//!
//! Inputs need not sum to one: incomplete and paraconsistent sources
//! are combined as-is and the fused totals are classified, never
//! silently rescaled. Set-valued fusion clamps each fused mass back
//! into the unit interval after summation and logs every clamp;
//! scalar fusion reports raw sums so that the total of the fused
//! masses is exactly the product of the source totals.

mod admissibility;
mod rules;

pub use admissibility::check_admissibility;
pub use rules::{
    dsm_classic_imprecise, dsm_classic_precise, dsm_hybrid_imprecise, dsm_hybrid_precise,
    fuse_pointwise_sample, interval_bounds_fusion,
};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::hyper_power_set::Proposition;
use crate::interval_sets::{Piece, SetValue};

/// Fused sums within this distance of 1 count as complete.
pub const COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("fusion needs at least two sources, got {0}")]
    TooFewSources(usize),
    #[error("each selection must pair with a source: {sources} sources, {selections} selections")]
    SelectionCountMismatch { sources: usize, selections: usize },
    #[error("mass on the empty proposition is not allowed")]
    MassOnEmpty,
    #[error("mass value {0} is outside [0, 1]")]
    MassOutOfRange(f64),
    #[error("mass set {0} is not inside [0, 1]")]
    MassSetOutOfRange(SetValue),
    #[error("a mass set must be nonempty; use the point {{0}} for no mass")]
    EmptyMassSet,
    #[error("interval-bounds fusion needs single-interval masses, got {0}")]
    MultiPieceMass(SetValue),
    #[error("source {source_index} uses atom index {atom} but the frame has {n} atoms")]
    ForeignProposition {
        source_index: usize,
        atom: usize,
        n: usize,
    },
    #[error("selected value {value} for source {source_index} lies outside its mass set {set}")]
    SelectionOutsideSet {
        source_index: usize,
        value: f64,
        set: SetValue,
    },
}

/// A scalar belief assignment: proposition to mass in `[0, 1]`.
///
/// Totals are not forced to 1; completeness is classified instead.
/// Fused results are also carried in this type and may exceed 1 per
/// proposition when the sources were paraconsistent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreciseMass {
    entries: BTreeMap<Proposition, f64>,
}

impl PreciseMass {
    /// Validates an input assignment: no mass on the empty proposition,
    /// every value in `[0, 1]`.
    pub fn new(entries: BTreeMap<Proposition, f64>) -> Result<Self, FusionError> {
        for (p, &v) in &entries {
            if p.is_empty() {
                return Err(FusionError::MassOnEmpty);
            }
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(FusionError::MassOutOfRange(v));
            }
        }
        Ok(PreciseMass { entries })
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self, FusionError>
    where
        I: IntoIterator<Item = (Proposition, f64)>,
    {
        Self::new(pairs.into_iter().collect())
    }

    pub(crate) fn from_fused(entries: BTreeMap<Proposition, f64>) -> Self {
        PreciseMass { entries }
    }

    pub fn entries(&self) -> &BTreeMap<Proposition, f64> {
        &self.entries
    }

    pub fn get(&self, p: &Proposition) -> f64 {
        self.entries.get(p).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn completeness(&self) -> CompletenessReport {
        CompletenessReport::Precise {
            total: self.total(),
            class: Completeness::classify(self.total()),
        }
    }
}

/// A set-valued belief assignment: proposition to a nonempty
/// sub-unitary [`SetValue`]. Omitted propositions mean the point `{0}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImpreciseMass {
    entries: BTreeMap<Proposition, SetValue>,
}

impl ImpreciseMass {
    pub fn new(entries: BTreeMap<Proposition, SetValue>) -> Result<Self, FusionError> {
        for (p, s) in &entries {
            if p.is_empty() {
                return Err(FusionError::MassOnEmpty);
            }
            if s.is_empty() {
                return Err(FusionError::EmptyMassSet);
            }
            if s.inf() < 0.0 || s.sup() > 1.0 {
                return Err(FusionError::MassSetOutOfRange(s.clone()));
            }
        }
        Ok(ImpreciseMass { entries })
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self, FusionError>
    where
        I: IntoIterator<Item = (Proposition, SetValue)>,
    {
        Self::new(pairs.into_iter().collect())
    }

    /// Wraps each scalar mass as a degenerate point set.
    pub fn from_precise(precise: &PreciseMass) -> Self {
        ImpreciseMass {
            entries: precise
                .entries()
                .iter()
                .map(|(p, &v)| (p.clone(), SetValue::point(v)))
                .collect(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<Proposition, SetValue> {
        &self.entries
    }

    /// The mass set for `p`; the point `{0}` when none was assigned.
    pub fn get(&self, p: &Proposition) -> SetValue {
        self.entries
            .get(p)
            .cloned()
            .unwrap_or_else(|| SetValue::point(0.0))
    }

    /// Sums of the lower and upper endpoints, classified separately.
    pub fn completeness(&self) -> CompletenessReport {
        let inf_total: f64 = self.entries.values().map(SetValue::inf).sum();
        let sup_total: f64 = self.entries.values().map(SetValue::sup).sum();
        CompletenessReport::Imprecise {
            inf_total,
            inf_class: Completeness::classify(inf_total),
            sup_total,
            sup_class: Completeness::classify(sup_total),
        }
    }
}

/// How a mass total compares to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    Incomplete,
    Complete,
    Paraconsistent,
}

impl Completeness {
    pub fn classify(total: f64) -> Self {
        if (total - 1.0).abs() <= COMPLETENESS_TOL {
            Completeness::Complete
        } else if total < 1.0 {
            Completeness::Incomplete
        } else {
            Completeness::Paraconsistent
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Completeness::Incomplete => "incomplete",
            Completeness::Complete => "complete",
            Completeness::Paraconsistent => "paraconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompletenessReport {
    Precise {
        total: f64,
        class: Completeness,
    },
    Imprecise {
        inf_total: f64,
        inf_class: Completeness,
        sup_total: f64,
        sup_class: Completeness,
    },
}

/// Sources of one fusion run, all reduced to single intervals, viewed
/// as matrices of lower and upper bound rows.
#[derive(Debug, Clone)]
pub struct MassMatrix {
    rows: Vec<BTreeMap<Proposition, Piece>>,
}

impl MassMatrix {
    /// Fails on any mass set that is not one piece: multi-piece inputs
    /// must go through full set-valued fusion instead.
    pub fn from_sources(sources: &[ImpreciseMass]) -> Result<Self, FusionError> {
        let mut rows = Vec::with_capacity(sources.len());
        for src in sources {
            let mut row = BTreeMap::new();
            for (p, s) in src.entries() {
                let pieces = s.pieces();
                if pieces.len() != 1 {
                    return Err(FusionError::MultiPieceMass(s.clone()));
                }
                row.insert(p.clone(), pieces[0]);
            }
            rows.push(row);
        }
        Ok(MassMatrix { rows })
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn rows(&self) -> &[BTreeMap<Proposition, Piece>] {
        &self.rows
    }
}

/// One fused mass truncated back into the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampEvent {
    pub proposition: Proposition,
    pub before: SetValue,
    pub after: SetValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// One exact point per proposition, summing to 1, when admissible.
    pub witness: Option<BTreeMap<Proposition, f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FusedMass {
    Precise(PreciseMass),
    Imprecise(ImpreciseMass),
}

/// Everything a fusion run produces: the fused assignment, the
/// completeness classification of its totals, the clamp log, and the
/// admissibility verdict once requested.
#[derive(Debug, Clone)]
pub struct FusionResult {
    pub fused: FusedMass,
    pub completeness: CompletenessReport,
    pub clamps: Vec<ClampEvent>,
    pub admissibility: Option<AdmissibilityReport>,
}

impl FusionResult {
    pub fn precise(&self) -> Option<&PreciseMass> {
        match &self.fused {
            FusedMass::Precise(m) => Some(m),
            FusedMass::Imprecise(_) => None,
        }
    }

    pub fn imprecise(&self) -> Option<&ImpreciseMass> {
        match &self.fused {
            FusedMass::Imprecise(m) => Some(m),
            FusedMass::Precise(_) => None,
        }
    }

    /// The fused set for `p` as it stood before unit clamping.
    pub fn unclamped(&self, p: &Proposition) -> SetValue {
        if let Some(ev) = self.clamps.iter().find(|ev| &ev.proposition == p) {
            return ev.before.clone();
        }
        match &self.fused {
            FusedMass::Imprecise(m) => m.get(p),
            FusedMass::Precise(m) => SetValue::point(m.get(p)),
        }
    }

    /// Computes (once) and caches the admissibility verdict. A precise
    /// result is admissible exactly when it is complete, witnessed by
    /// itself; an imprecise result is searched for a witness.
    pub fn evaluate_admissibility(&mut self) -> &AdmissibilityReport {
        if self.admissibility.is_none() {
            let report = match &self.fused {
                FusedMass::Precise(m) => {
                    let admissible = Completeness::classify(m.total()) == Completeness::Complete;
                    AdmissibilityReport {
                        admissible,
                        witness: admissible.then(|| m.entries().clone()),
                    }
                }
                FusedMass::Imprecise(m) => check_admissibility(m),
            };
            self.admissibility = Some(report);
        }
        self.admissibility.as_ref().expect("just filled")
    }
}
