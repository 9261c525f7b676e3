//! The combination core shared by every rule variant.
//!
//! All variants enumerate tuples over the cartesian product of source
//! supports, multiply the tuple's masses, and add the product into a
//! bucket chosen from the tuple's propositions. The classic rule
//! buckets by conjunction. The hybrid rule reroutes mass that the
//! model forces onto an empty conjunction: to the disjunction of the
//! tuple when some member is non-empty, otherwise to the union of the
//! atoms the tuple mentions, falling back to total ignorance. Every
//! bucket is reduced modulo the model before use, so a target such as
//! `t3 u (t1 n t2)` lands on `t3` when `t1 n t2` is forced empty.
//!
//! One generic fold serves scalar masses, set-valued masses, and the
//! single-endpoint runs of the interval-bounds path; only the value
//! arithmetic differs.

use std::collections::BTreeMap;

use super::{
    ClampEvent, FusedMass, FusionError, FusionResult, ImpreciseMass, MassMatrix, PreciseMass,
};
use crate::hyper_power_set::Proposition;
use crate::interval_sets::{add_bounds, feq, mul_bounds, Bound, Piece, SetValue};
use crate::models::HybridModel;

pub(crate) trait MassArith: Clone {
    fn is_zero(&self) -> bool;
    fn mul(&self, other: &Self) -> Self;
    fn add(&self, other: &Self) -> Self;
}

impl MassArith for f64 {
    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn add(&self, other: &Self) -> Self {
        self + other
    }
}

impl MassArith for SetValue {
    fn is_zero(&self) -> bool {
        self.is_zero_point()
    }

    fn mul(&self, other: &Self) -> Self {
        SetValue::mul(self, other)
    }

    fn add(&self, other: &Self) -> Self {
        SetValue::add(self, other)
    }
}

/// One endpoint of a mass interval, combined with the same openness
/// bookkeeping the full set arithmetic uses. An open zero is kept in
/// the support so its openness can propagate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BoundVal(pub(crate) Bound);

impl MassArith for BoundVal {
    fn is_zero(&self) -> bool {
        self.0.value == 0.0 && !self.0.open
    }

    fn mul(&self, other: &Self) -> Self {
        BoundVal(mul_bounds(self.0, other.0))
    }

    fn add(&self, other: &Self) -> Self {
        BoundVal(add_bounds(self.0, other.0))
    }
}

fn add_to<V: MassArith>(acc: &mut BTreeMap<Proposition, V>, key: Proposition, v: &V) {
    match acc.entry(key) {
        std::collections::btree_map::Entry::Occupied(mut e) => {
            let sum = e.get().add(v);
            *e.get_mut() = sum;
        }
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(v.clone());
        }
    }
}

/// Folds the cartesian product of source supports into fused buckets.
/// `model == None` selects the classic rule on the free lattice.
///
/// Iteration order is fixed (sources in order, supports in proposition
/// order), so results are reproducible to the last bit.
fn combine<V: MassArith>(
    sources: &[&BTreeMap<Proposition, V>],
    model: Option<&HybridModel>,
) -> BTreeMap<Proposition, V> {
    let supports: Vec<Vec<(&Proposition, &V)>> = sources
        .iter()
        .map(|m| m.iter().filter(|(_, v)| !v.is_zero()).collect())
        .collect();
    let mut acc = BTreeMap::new();
    if supports.iter().any(Vec::is_empty) {
        // A source with no support contributes a zero factor everywhere.
        return acc;
    }
    let mut idx = vec![0usize; supports.len()];
    'tuples: loop {
        let (p0, v0) = supports[0][idx[0]];
        let mut product = v0.clone();
        let mut meet = p0.clone();
        for (s, &i) in supports.iter().zip(&idx).skip(1) {
            let (p, v) = s[i];
            product = product.mul(v);
            meet = meet.meet(p);
        }
        match model {
            None => add_to(&mut acc, meet, &product),
            Some(m) => {
                let meet_r = m.reduce(&meet);
                if !meet_r.is_empty() {
                    add_to(&mut acc, meet_r, &product);
                } else {
                    let all_empty = supports
                        .iter()
                        .zip(&idx)
                        .all(|(s, &i)| m.is_empty(s[i].0));
                    if all_empty {
                        // Disjunctions of empty members stay empty, so
                        // the mass goes to the atoms the tuple mentions.
                        let mut atoms = p0.atom_union();
                        for (s, &i) in supports.iter().zip(&idx).skip(1) {
                            atoms = atoms.join(&s[i].0.atom_union());
                        }
                        let atoms_r = m.reduce(&atoms);
                        let target = if atoms_r.is_empty() {
                            m.reduce(&m.hyper_power_set().total_ignorance())
                        } else {
                            atoms_r
                        };
                        add_to(&mut acc, target, &product);
                    } else {
                        let mut join = p0.clone();
                        for (s, &i) in supports.iter().zip(&idx).skip(1) {
                            join = join.join(s[i].0);
                        }
                        let join_r = m.reduce(&join);
                        debug_assert!(!join_r.is_empty(), "join of a non-empty member is kept");
                        if !join_r.is_empty() {
                            add_to(&mut acc, join_r, &product);
                        }
                    }
                }
            }
        }
        let mut i = idx.len();
        loop {
            if i == 0 {
                break 'tuples;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < supports[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
    acc
}

fn ensure_k(k: usize) -> Result<(), FusionError> {
    if k < 2 {
        return Err(FusionError::TooFewSources(k));
    }
    Ok(())
}

fn ensure_frame_fit<'a, I>(rows: I, n: usize) -> Result<(), FusionError>
where
    I: IntoIterator<Item = (usize, &'a Proposition)>,
{
    for (source, p) in rows {
        if let Some(atom) = p.max_atom() {
            if atom >= n {
                return Err(FusionError::ForeignProposition {
                    source_index: source,
                    atom,
                    n,
                });
            }
        }
    }
    Ok(())
}

fn finish_precise(acc: BTreeMap<Proposition, f64>) -> FusionResult {
    let fused = PreciseMass::from_fused(acc);
    let completeness = fused.completeness();
    FusionResult {
        fused: FusedMass::Precise(fused),
        completeness,
        clamps: Vec::new(),
        admissibility: None,
    }
}

fn finish_imprecise(acc: BTreeMap<Proposition, SetValue>) -> FusionResult {
    let mut clamps = Vec::new();
    let mut entries = BTreeMap::new();
    for (p, s) in acc {
        let clamped = s.clamp_unit();
        if clamped != s {
            clamps.push(ClampEvent {
                proposition: p.clone(),
                before: s,
                after: clamped.clone(),
            });
        }
        entries.insert(p, clamped);
    }
    let fused = ImpreciseMass::new(entries).expect("clamped masses stay sub-unitary");
    let completeness = fused.completeness();
    FusionResult {
        fused: FusedMass::Imprecise(fused),
        completeness,
        clamps,
        admissibility: None,
    }
}

/// Classic combination of scalar sources on the free lattice: every
/// tuple's product lands on its conjunction.
pub fn dsm_classic_precise(sources: &[PreciseMass]) -> Result<FusionResult, FusionError> {
    ensure_k(sources.len())?;
    let maps: Vec<&BTreeMap<Proposition, f64>> = sources.iter().map(PreciseMass::entries).collect();
    Ok(finish_precise(combine(&maps, None)))
}

/// Hybrid combination of scalar sources under `model`'s constraints.
pub fn dsm_hybrid_precise(
    sources: &[PreciseMass],
    model: &HybridModel,
) -> Result<FusionResult, FusionError> {
    ensure_k(sources.len())?;
    let n = model.frame().n();
    ensure_frame_fit(
        sources
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.entries().keys().map(move |p| (i, p))),
        n,
    )?;
    let maps: Vec<&BTreeMap<Proposition, f64>> = sources.iter().map(PreciseMass::entries).collect();
    Ok(finish_precise(combine(&maps, Some(model))))
}

/// Classic combination of set-valued sources. Fused sets are clamped
/// back into `[0, 1]` after summation; each clamp is logged.
pub fn dsm_classic_imprecise(sources: &[ImpreciseMass]) -> Result<FusionResult, FusionError> {
    ensure_k(sources.len())?;
    let maps: Vec<&BTreeMap<Proposition, SetValue>> =
        sources.iter().map(ImpreciseMass::entries).collect();
    Ok(finish_imprecise(combine(&maps, None)))
}

/// Hybrid combination of set-valued sources under `model`.
pub fn dsm_hybrid_imprecise(
    sources: &[ImpreciseMass],
    model: &HybridModel,
) -> Result<FusionResult, FusionError> {
    ensure_k(sources.len())?;
    let n = model.frame().n();
    ensure_frame_fit(
        sources
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.entries().keys().map(move |p| (i, p))),
        n,
    )?;
    let maps: Vec<&BTreeMap<Proposition, SetValue>> =
        sources.iter().map(ImpreciseMass::entries).collect();
    Ok(finish_imprecise(combine(&maps, Some(model))))
}

/// Fuses single-interval sources by running the scalar fold twice,
/// once over lower endpoints and once over upper endpoints. Endpoint
/// values match the corresponding scalar fusions exactly; endpoint
/// openness is carried through the same attainability rules as full
/// set arithmetic.
pub fn interval_bounds_fusion(
    matrix: &MassMatrix,
    model: Option<&HybridModel>,
) -> Result<FusionResult, FusionError> {
    ensure_k(matrix.k())?;
    if let Some(m) = model {
        let n = m.frame().n();
        ensure_frame_fit(
            matrix
                .rows()
                .iter()
                .enumerate()
                .flat_map(|(i, r)| r.keys().map(move |p| (i, p))),
            n,
        )?;
    }
    let lo_maps: Vec<BTreeMap<Proposition, BoundVal>> = matrix
        .rows()
        .iter()
        .map(|r| r.iter().map(|(p, pc)| (p.clone(), BoundVal(pc.lo()))).collect())
        .collect();
    let hi_maps: Vec<BTreeMap<Proposition, BoundVal>> = matrix
        .rows()
        .iter()
        .map(|r| r.iter().map(|(p, pc)| (p.clone(), BoundVal(pc.hi()))).collect())
        .collect();
    let lo_refs: Vec<&BTreeMap<Proposition, BoundVal>> = lo_maps.iter().collect();
    let hi_refs: Vec<&BTreeMap<Proposition, BoundVal>> = hi_maps.iter().collect();
    let lo_acc = combine(&lo_refs, model);
    let hi_acc = combine(&hi_refs, model);
    debug_assert!(lo_acc.keys().all(|p| hi_acc.contains_key(p)));
    let mut acc = BTreeMap::new();
    for (p, hi) in hi_acc {
        let lo = lo_acc
            .get(&p)
            .map(|b| b.0)
            .unwrap_or_else(|| Bound::closed(0.0));
        let piece = if feq(lo.value, hi.0.value) {
            // A degenerate span is a single attained value.
            Piece::point(lo.value)
        } else {
            Piece::new(lo, hi.0).expect("lower endpoint run stays below upper run")
        };
        acc.insert(p, SetValue::from_pieces([piece]));
    }
    Ok(finish_imprecise(acc))
}

/// Fuses one scalar selection per source, after checking every selected
/// value sits inside that source's mass set (omitted propositions must
/// admit 0). The result is the scalar fusion of the selections.
pub fn fuse_pointwise_sample(
    sources: &[ImpreciseMass],
    selections: &[BTreeMap<Proposition, f64>],
    model: Option<&HybridModel>,
) -> Result<PreciseMass, FusionError> {
    ensure_k(sources.len())?;
    if selections.len() != sources.len() {
        return Err(FusionError::SelectionCountMismatch {
            sources: sources.len(),
            selections: selections.len(),
        });
    }
    let mut maps = Vec::with_capacity(sources.len());
    for (i, (src, sel)) in sources.iter().zip(selections).enumerate() {
        let mut map = BTreeMap::new();
        for (p, set) in src.entries() {
            let x = sel.get(p).copied().unwrap_or(0.0);
            if !set.contains(x) {
                return Err(FusionError::SelectionOutsideSet {
                    source_index: i,
                    value: x,
                    set: set.clone(),
                });
            }
            map.insert(p.clone(), x);
        }
        for (p, &x) in sel {
            if !src.entries().contains_key(p) && x != 0.0 {
                return Err(FusionError::SelectionOutsideSet {
                    source_index: i,
                    value: x,
                    set: SetValue::point(0.0),
                });
            }
        }
        maps.push(map);
    }
    if let Some(m) = model {
        let n = m.frame().n();
        ensure_frame_fit(
            maps.iter()
                .enumerate()
                .flat_map(|(i, r)| r.keys().map(move |p| (i, p))),
            n,
        )?;
    }
    let refs: Vec<&BTreeMap<Proposition, f64>> = maps.iter().collect();
    Ok(PreciseMass::from_fused(combine(&refs, model)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::Completeness;
    use crate::hyper_power_set::Frame;
    use proptest::prelude::*;

    fn frame(n: usize) -> Frame {
        Frame::of_size(n).unwrap()
    }

    fn prop(f: &Frame, s: &str) -> Proposition {
        f.parse_proposition(s).unwrap()
    }

    fn pm(f: &Frame, pairs: &[(&str, f64)]) -> PreciseMass {
        PreciseMass::from_pairs(pairs.iter().map(|(s, v)| (prop(f, s), *v))).unwrap()
    }

    fn im(f: &Frame, pairs: &[(&str, &str)]) -> ImpreciseMass {
        ImpreciseMass::from_pairs(
            pairs
                .iter()
                .map(|(s, v)| (prop(f, s), v.parse::<SetValue>().unwrap())),
        )
        .unwrap()
    }

    fn two_scalar_sources(f: &Frame) -> Vec<PreciseMass> {
        vec![
            pm(
                f,
                &[("t1", 0.1), ("t2", 0.2), ("t3", 0.3), ("t1 n t2", 0.4)],
            ),
            pm(
                f,
                &[("t1", 0.5), ("t2", 0.3), ("t3", 0.1), ("t1 n t2", 0.1)],
            ),
        ]
    }

    #[test]
    fn classic_two_sources_lands_on_conjunctions() {
        let f = frame(3);
        let out = dsm_classic_precise(&two_scalar_sources(&f)).unwrap();
        let m = out.precise().unwrap();
        let expect = [
            ("t1", 0.05),
            ("t2", 0.06),
            ("t3", 0.03),
            ("t1 n t2", 0.52),
            ("t1 n t3", 0.16),
            ("t2 n t3", 0.11),
            ("t1 n t2 n t3", 0.07),
        ];
        assert_eq!(m.entries().len(), expect.len());
        for (s, v) in expect {
            assert!((m.get(&prop(&f, s)) - v).abs() <= 1e-12, "{s}: {}", m.get(&prop(&f, s)));
        }
        assert!((m.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn hybrid_reroutes_mass_from_a_forced_empty_conjunction() {
        let f = frame(3);
        let hps = crate::hyper_power_set::HyperPowerSet::enumerate(&f).unwrap();
        let model = HybridModel::with_constraints(
            std::sync::Arc::new(hps),
            vec![prop(&f, "t1 n t2")],
        )
        .unwrap();
        let out = dsm_hybrid_precise(&two_scalar_sources(&f), &model).unwrap();
        let m = out.precise().unwrap();
        let expect = [
            ("t1", 0.26),
            ("t2", 0.20),
            ("t3", 0.10),
            ("t1 n t3", 0.16),
            ("t2 n t3", 0.11),
            ("t1 u t2", 0.17),
        ];
        assert_eq!(m.entries().len(), expect.len());
        for (s, v) in expect {
            assert!((m.get(&prop(&f, s)) - v).abs() <= 1e-12, "{s}: {}", m.get(&prop(&f, s)));
        }
        assert!((m.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn conflicting_certainties_meet_classically_and_disjoin_under_shafer() {
        let f = frame(2);
        let sources = vec![pm(&f, &[("t1", 1.0)]), pm(&f, &[("t2", 1.0)])];
        let classic = dsm_classic_precise(&sources).unwrap();
        assert_eq!(
            classic.precise().unwrap().get(&prop(&f, "t1 n t2")),
            1.0
        );

        let hps = crate::hyper_power_set::HyperPowerSet::enumerate(&f).unwrap();
        let model = HybridModel::shafer(std::sync::Arc::new(hps));
        let hybrid = dsm_hybrid_precise(&sources, &model).unwrap();
        assert_eq!(hybrid.precise().unwrap().get(&prop(&f, "t1 u t2")), 1.0);
        assert_eq!(hybrid.precise().unwrap().entries().len(), 1);
    }

    #[test]
    fn free_model_hybrid_equals_classic_exactly() {
        let f = frame(3);
        let sources = two_scalar_sources(&f);
        let hps = crate::hyper_power_set::HyperPowerSet::enumerate(&f).unwrap();
        let model = HybridModel::free(std::sync::Arc::new(hps));
        let classic = dsm_classic_precise(&sources).unwrap();
        let hybrid = dsm_hybrid_precise(&sources, &model).unwrap();
        assert_eq!(
            classic.precise().unwrap().entries(),
            hybrid.precise().unwrap().entries()
        );
    }

    #[test]
    fn all_empty_tuples_land_on_their_atoms_or_what_remains_of_ignorance() {
        let f = frame(2);
        let hps = std::sync::Arc::new(
            crate::hyper_power_set::HyperPowerSet::enumerate(&f).unwrap(),
        );
        // Both sources put everything on the forced-empty conjunction:
        // the atom union t1 u t2 survives and takes all the mass.
        let model =
            HybridModel::with_constraints(hps.clone(), vec![prop(&f, "t1 n t2")]).unwrap();
        let sources = vec![pm(&f, &[("t1 n t2", 1.0)]), pm(&f, &[("t1 n t2", 1.0)])];
        let out = dsm_hybrid_precise(&sources, &model).unwrap();
        assert_eq!(out.precise().unwrap().get(&prop(&f, "t1 u t2")), 1.0);

        // With t1 itself forced empty, mass on t1 cannot land on its own
        // atom union; it falls back to what remains of total ignorance.
        let model = HybridModel::with_constraints(hps, vec![prop(&f, "t1")]).unwrap();
        let sources = vec![
            pm(&f, &[("t1", 0.5), ("t2", 0.5)]),
            pm(&f, &[("t1", 0.5), ("t2", 0.5)]),
        ];
        let out = dsm_hybrid_precise(&sources, &model).unwrap();
        let m = out.precise().unwrap();
        assert_eq!(m.entries().len(), 1);
        assert!((m.get(&prop(&f, "t2")) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn completeness_of_fused_totals_follows_the_product_of_source_totals() {
        let f = frame(2);
        let cases: [(f64, f64, f64, f64, Completeness); 3] = [
            (0.5, 0.49, 0.5, 0.51, Completeness::Incomplete),
            (0.5, 0.4, 0.6, 0.6, Completeness::Paraconsistent),
            (0.4, 0.4, 0.75, 0.5, Completeness::Complete),
        ];
        for (a1, a2, b1, b2, class) in cases {
            let sources = vec![
                pm(&f, &[("t1", a1), ("t2", a2)]),
                pm(&f, &[("t1", b1), ("t2", b2)]),
            ];
            let out = dsm_classic_precise(&sources).unwrap();
            let total = out.precise().unwrap().total();
            let product = (a1 + a2) * (b1 + b2);
            assert!((total - product).abs() <= 1e-12);
            assert_eq!(Completeness::classify(total), class, "total {total}");
        }
    }

    #[test]
    fn set_valued_classic_keeps_fused_sets_inside_the_unit_interval() {
        let f = frame(2);
        let sources = vec![
            im(&f, &[("t1", "[0.9,1]"), ("t2", "[0.9,1]")]),
            im(&f, &[("t1", "[0.9,1]"), ("t2", "[0.9,1]")]),
        ];
        let out = dsm_classic_imprecise(&sources).unwrap();
        let m = out.imprecise().unwrap();
        let conj = prop(&f, "t1 n t2");
        assert!(!m.get(&conj).is_zero_point());
        assert_eq!(m.get(&conj), SetValue::point(1.0));
        assert_eq!(out.clamps.len(), 1);
        assert_eq!(out.clamps[0].proposition, conj);
        assert!(out.clamps[0]
            .before
            .approx_eq(&"[1.62,2]".parse().unwrap(), 1e-12));
        assert!(out
            .unclamped(&conj)
            .approx_eq(&"[1.62,2]".parse().unwrap(), 1e-12));
        // Unclamped propositions pass through the accessor untouched.
        assert_eq!(out.unclamped(&prop(&f, "t1")), m.get(&prop(&f, "t1")));
    }

    #[test]
    fn pointwise_selections_fuse_like_the_scalars_they_pick() {
        let f = frame(3);
        let sources = vec![
            im(
                &f,
                &[
                    ("t1", "[0.05,0.15]"),
                    ("t2", "[0.1,0.3]"),
                    ("t3", "[0.15,0.45]"),
                    ("t1 n t2", "[0.2,0.6]"),
                ],
            ),
            im(
                &f,
                &[
                    ("t1", "[0.4,0.6]"),
                    ("t2", "[0.1,0.5]"),
                    ("t3", "[0,0.2]"),
                    ("t1 n t2", "[0.05,0.15]"),
                ],
            ),
        ];
        let selections = vec![
            [
                (prop(&f, "t1"), 0.1),
                (prop(&f, "t2"), 0.2),
                (prop(&f, "t3"), 0.3),
                (prop(&f, "t1 n t2"), 0.4),
            ]
            .into_iter()
            .collect::<BTreeMap<_, _>>(),
            [
                (prop(&f, "t1"), 0.5),
                (prop(&f, "t2"), 0.3),
                (prop(&f, "t3"), 0.1),
                (prop(&f, "t1 n t2"), 0.1),
            ]
            .into_iter()
            .collect(),
        ];
        let fused = fuse_pointwise_sample(&sources, &selections, None).unwrap();
        assert!((fused.get(&prop(&f, "t1 n t2")) - 0.52).abs() <= 1e-12);
        assert!((fused.total() - 1.0).abs() <= 1e-12);

        let bad = vec![selections[0].clone(), {
            let mut s = selections[1].clone();
            s.insert(prop(&f, "t1"), 0.7);
            s
        }];
        let err = fuse_pointwise_sample(&sources, &bad, None).unwrap_err();
        assert!(matches!(
            err,
            FusionError::SelectionOutsideSet { source_index: 1, .. }
        ));

        let err = fuse_pointwise_sample(&sources, &selections[..1].to_vec(), None).unwrap_err();
        assert!(matches!(err, FusionError::SelectionCountMismatch { .. }));
    }

    #[test]
    fn omitted_selection_needs_the_mass_set_to_admit_zero() {
        let f = frame(2);
        let sources = vec![
            im(&f, &[("t1", "[0.3,0.5]"), ("t2", "[0,0.7]")]),
            im(&f, &[("t1", "[0.2,0.4]")]),
        ];
        // t1 omitted from the first selection: its set excludes 0.
        let selections = vec![
            [(prop(&f, "t2"), 0.6)].into_iter().collect::<BTreeMap<_, _>>(),
            [(prop(&f, "t1"), 0.3)].into_iter().collect(),
        ];
        let err = fuse_pointwise_sample(&sources, &selections, None).unwrap_err();
        assert!(matches!(
            err,
            FusionError::SelectionOutsideSet { source_index: 0, .. }
        ));
        // A selection on a proposition with no mass set must be zero.
        let selections = vec![
            [(prop(&f, "t1"), 0.4), (prop(&f, "t2"), 0.6)]
                .into_iter()
                .collect::<BTreeMap<_, _>>(),
            [(prop(&f, "t1"), 0.3), (prop(&f, "t1 u t2"), 0.1)]
                .into_iter()
                .collect(),
        ];
        let err = fuse_pointwise_sample(&sources, &selections, None).unwrap_err();
        assert!(matches!(
            err,
            FusionError::SelectionOutsideSet { source_index: 1, .. }
        ));
    }

    #[test]
    fn bounds_path_on_point_masses_equals_the_scalar_fusion_exactly() {
        let f = frame(3);
        let scalar = two_scalar_sources(&f);
        let as_sets: Vec<ImpreciseMass> =
            scalar.iter().map(ImpreciseMass::from_precise).collect();
        let matrix = MassMatrix::from_sources(&as_sets).unwrap();
        let bounds = interval_bounds_fusion(&matrix, None).unwrap();
        let scalar_out = dsm_classic_precise(&scalar).unwrap();
        let m = bounds.imprecise().unwrap();
        let s = scalar_out.precise().unwrap();
        assert_eq!(m.entries().len(), s.entries().len());
        for (p, set) in m.entries() {
            assert_eq!(set.pieces().len(), 1);
            assert!(set.pieces()[0].is_point());
            // Bitwise equality: both paths run the same multiplications
            // and additions in the same order.
            assert_eq!(set.inf(), s.get(p));
        }
    }

    #[test]
    fn bounds_path_carries_endpoint_openness() {
        let f = frame(1);
        let sources = vec![im(&f, &[("t1", "(0,1]")]), im(&f, &[("t1", "(0,1]")])];
        let matrix = MassMatrix::from_sources(&sources).unwrap();
        let out = interval_bounds_fusion(&matrix, None).unwrap();
        assert_eq!(
            out.imprecise().unwrap().get(&prop(&f, "t1")),
            "(0,1]".parse().unwrap()
        );
    }

    #[test]
    fn matrix_rejects_multi_piece_masses_and_short_source_lists() {
        let f = frame(2);
        let src = im(&f, &[("t1", "[0.1,0.2] U {0.3}")]);
        let err = MassMatrix::from_sources(&[src.clone(), src.clone()]).unwrap_err();
        assert!(matches!(err, FusionError::MultiPieceMass(_)));

        let one = im(&f, &[("t1", "[0.1,0.2]")]);
        assert!(matches!(
            dsm_classic_imprecise(&[one.clone()]),
            Err(FusionError::TooFewSources(1))
        ));
        assert!(matches!(
            dsm_classic_precise(&[pm(&f, &[("t1", 1.0)])]),
            Err(FusionError::TooFewSources(1))
        ));
        let matrix = MassMatrix::from_sources(&[one]).unwrap();
        assert!(matches!(
            interval_bounds_fusion(&matrix, None),
            Err(FusionError::TooFewSources(1))
        ));
    }

    #[test]
    fn sources_must_fit_the_model_frame() {
        let f2 = frame(2);
        let f3 = frame(3);
        let hps = std::sync::Arc::new(
            crate::hyper_power_set::HyperPowerSet::enumerate(&f2).unwrap(),
        );
        let model = HybridModel::free(hps);
        let sources = vec![pm(&f3, &[("t3", 1.0)]), pm(&f3, &[("t3", 1.0)])];
        let err = dsm_hybrid_precise(&sources, &model).unwrap_err();
        assert!(matches!(
            err,
            FusionError::ForeignProposition { atom: 2, n: 2, .. }
        ));
    }

    #[test]
    fn input_validation_rejects_bad_masses() {
        let f = frame(2);
        assert!(matches!(
            PreciseMass::from_pairs([(Proposition::empty(), 0.5)]),
            Err(FusionError::MassOnEmpty)
        ));
        assert!(matches!(
            PreciseMass::from_pairs([(prop(&f, "t1"), 1.5)]),
            Err(FusionError::MassOutOfRange(_))
        ));
        assert!(matches!(
            ImpreciseMass::from_pairs([(prop(&f, "t1"), SetValue::empty())]),
            Err(FusionError::EmptyMassSet)
        ));
        assert!(matches!(
            ImpreciseMass::from_pairs([(prop(&f, "t1"), "[0.5,1.2]".parse().unwrap())]),
            Err(FusionError::MassSetOutOfRange(_))
        ));
    }

    fn arb_precise_source(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0..1.0f64, n)
    }

    proptest! {
        #[test]
        fn classic_total_is_the_product_of_source_totals(
            a in arb_precise_source(4),
            b in arb_precise_source(4),
        ) {
            let f = frame(2);
            let props = ["t1", "t2", "t1 n t2", "t1 u t2"];
            let mk = |vals: &[f64]| {
                pm(&f, &props.iter().zip(vals).map(|(s, v)| (*s, *v)).collect::<Vec<_>>())
            };
            let m1 = mk(&a);
            let m2 = mk(&b);
            let out = dsm_classic_precise(&[m1.clone(), m2.clone()]).unwrap();
            let total = out.precise().unwrap().total();
            prop_assert!((total - m1.total() * m2.total()).abs() <= 1e-12);
        }

        #[test]
        fn hybrid_conserves_the_product_of_source_totals(
            a in arb_precise_source(5),
            b in arb_precise_source(5),
            which in 0usize..3,
        ) {
            let f = frame(3);
            let props = ["t1", "t2", "t3", "t1 n t2", "t2 u t3"];
            let mk = |vals: &[f64]| {
                pm(&f, &props.iter().zip(vals).map(|(s, v)| (*s, *v)).collect::<Vec<_>>())
            };
            let m1 = mk(&a);
            let m2 = mk(&b);
            let hps = std::sync::Arc::new(
                crate::hyper_power_set::HyperPowerSet::enumerate(&f).unwrap(),
            );
            let constraint = ["t1 n t2", "t1 n t3", "t1 n t2 n t3"][which];
            let model = HybridModel::with_constraints(hps, vec![prop(&f, constraint)]).unwrap();
            let out = dsm_hybrid_precise(&[m1.clone(), m2.clone()], &model).unwrap();
            let total = out.precise().unwrap().total();
            prop_assert!((total - m1.total() * m2.total()).abs() <= 1e-12);
            for p in out.precise().unwrap().entries().keys() {
                prop_assert!(!model.is_empty(p));
            }
        }

        #[test]
        fn classic_fusion_is_commutative(
            a in arb_precise_source(3),
            b in arb_precise_source(3),
        ) {
            let f = frame(2);
            let props = ["t1", "t2", "t1 u t2"];
            let mk = |vals: &[f64]| {
                pm(&f, &props.iter().zip(vals).map(|(s, v)| (*s, *v)).collect::<Vec<_>>())
            };
            let ab = dsm_classic_precise(&[mk(&a), mk(&b)]).unwrap();
            let ba = dsm_classic_precise(&[mk(&b), mk(&a)]).unwrap();
            let ma = ab.precise().unwrap();
            let mb = ba.precise().unwrap();
            prop_assert_eq!(ma.entries().len(), mb.entries().len());
            for (p, v) in ma.entries() {
                prop_assert!((v - mb.get(p)).abs() <= 1e-12);
            }
        }

        #[test]
        fn pointwise_fusions_stay_inside_the_unclamped_fused_sets(
            t in proptest::collection::vec(0.0..=1.0f64, 8),
        ) {
            let f = frame(3);
            let rows = [
                [("t1", 0.05, 0.15), ("t2", 0.1, 0.3), ("t3", 0.15, 0.45), ("t1 n t2", 0.2, 0.6)],
                [("t1", 0.4, 0.6), ("t2", 0.1, 0.5), ("t3", 0.0, 0.2), ("t1 n t2", 0.05, 0.15)],
            ];
            let sources: Vec<ImpreciseMass> = rows
                .iter()
                .map(|row| {
                    ImpreciseMass::from_pairs(row.iter().map(|(s, lo, hi)| {
                        (prop(&f, s), SetValue::from_pieces([Piece::closed(*lo, *hi)]))
                    }))
                    .unwrap()
                })
                .collect();
            let selections: Vec<BTreeMap<Proposition, f64>> = rows
                .iter()
                .zip(t.chunks(4))
                .map(|(row, ts)| {
                    row.iter()
                        .zip(ts)
                        .map(|((s, lo, hi), t)| (prop(&f, s), lo + t * (hi - lo)))
                        .collect()
                })
                .collect();
            let fused = fuse_pointwise_sample(&sources, &selections, None).unwrap();
            let sets = dsm_classic_imprecise(&sources).unwrap();
            for (p, v) in fused.entries() {
                prop_assert!(sets.unclamped(p).contains(*v), "{p:?} {v}");
            }
        }
    }
}
