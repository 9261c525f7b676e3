//! Hybrid models: a frame together with integrity constraints that
//! force chosen propositions to be empty.
//!
//! Emptiness propagates: anything below a constrained proposition is
//! empty, and a union is empty exactly when all of its terms are. The
//! characteristic function `phi` is 1 on surviving propositions and 0
//! on the empty closure; `reduce` rewrites a proposition to its
//! surviving part, which is the representative the fusion rules key
//! their output on.

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::hyper_power_set::{HyperPowerSet, Proposition};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("constraints force the union of all atoms to be empty; no mass can survive")]
    DegenerateModel,
    #[error("constraint uses atom index {atom} but the frame has {n} atoms")]
    ForeignConstraint { atom: usize, n: usize },
}

/// A frame with its forced-empty propositions and their closure.
#[derive(Debug, Clone)]
pub struct HybridModel {
    hps: Arc<HyperPowerSet>,
    constraints: Vec<Proposition>,
    closure: HashSet<Proposition>,
}

impl HybridModel {
    /// The free model: nothing is empty except the empty proposition.
    pub fn free(hps: Arc<HyperPowerSet>) -> Self {
        HybridModel::with_constraints(hps, Vec::new()).expect("free model is never degenerate")
    }

    /// Shafer's model: all pairwise atom intersections are empty, which
    /// collapses the lattice onto the ordinary power set.
    pub fn shafer(hps: Arc<HyperPowerSet>) -> Self {
        let n = hps.frame().n();
        let mut constraints = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                constraints.push(Proposition::atom(i).meet(&Proposition::atom(j)));
            }
        }
        HybridModel::with_constraints(hps, constraints)
            .expect("atoms survive under Shafer's model")
    }

    /// Builds a model from explicit forced-empty propositions. Rejects
    /// constraint sets that empty the union of all atoms, since no
    /// fusion target would remain.
    pub fn with_constraints(
        hps: Arc<HyperPowerSet>,
        constraints: Vec<Proposition>,
    ) -> Result<Self, ModelError> {
        let n = hps.frame().n();
        for c in &constraints {
            if let Some(atom) = c.max_atom() {
                if atom >= n {
                    return Err(ModelError::ForeignConstraint { atom, n });
                }
            }
        }
        let mut constraints: Vec<Proposition> =
            constraints.into_iter().filter(|c| !c.is_empty()).collect();
        constraints.sort_by(crate::hyper_power_set::enumeration_order);
        constraints.dedup();
        let model = HybridModel {
            closure: HashSet::new(),
            hps,
            constraints,
        };
        if model.reduce(&model.hps.total_ignorance()).is_empty() {
            return Err(ModelError::DegenerateModel);
        }
        // Eager closure: membership is queried inside the fusion tuple
        // loops.
        let closure = model
            .hps
            .elements()
            .iter()
            .filter(|p| model.reduce(p).is_empty())
            .cloned()
            .collect();
        Ok(HybridModel { closure, ..model })
    }

    pub fn hyper_power_set(&self) -> &HyperPowerSet {
        &self.hps
    }

    pub fn shared_hyper_power_set(&self) -> Arc<HyperPowerSet> {
        Arc::clone(&self.hps)
    }

    pub fn frame(&self) -> &crate::hyper_power_set::Frame {
        self.hps.frame()
    }

    /// The forced-empty propositions as given (canonicalized, sorted).
    pub fn constraints(&self) -> &[Proposition] {
        &self.constraints
    }

    pub fn is_free(&self) -> bool {
        self.constraints.is_empty()
    }

    /// True when every term of `p` sits below some constraint; the
    /// empty proposition is vacuously empty.
    pub fn is_empty(&self, p: &Proposition) -> bool {
        if self.closure.contains(p) {
            return true;
        }
        // Propositions from this lattice are all in the eager closure;
        // recompute only for foreign values.
        p.is_empty() || (!self.hps.contains(p) && self.reduce(p).is_empty())
    }

    /// Characteristic function of non-emptiness: 0 on the empty
    /// closure, 1 elsewhere.
    pub fn phi(&self, p: &Proposition) -> u8 {
        u8::from(!self.is_empty(p))
    }

    /// Drops every forced-empty term, keeping the surviving union. The
    /// result is the canonical representative of `p` under the model:
    /// `reduce(p)` is empty exactly when `p` is.
    pub fn reduce(&self, p: &Proposition) -> Proposition {
        if self.constraints.is_empty() {
            return p.clone();
        }
        Proposition::from_terms(p.term_masks().iter().copied().filter(|&term| {
            !self
                .constraints
                .iter()
                .any(|c| c.term_masks().iter().any(|&ct| ct & term == ct))
        }))
    }

    /// Every proposition equivalent to empty under this model.
    pub fn empty_closure(&self) -> &HashSet<Proposition> {
        &self.closure
    }
}
