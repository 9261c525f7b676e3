//! Whether a set-valued assignment can be instantiated by scalars
//! that sum to one, and construction of such an instantiation.

use std::collections::BTreeMap;

use super::{AdmissibilityReport, ImpreciseMass};
use crate::hyper_power_set::Proposition;
use crate::interval_sets::{Piece, SetValue, ENDPOINT_TOL};

/// A witness must sum to 1 within this tolerance.
pub(crate) const WITNESS_TOL: f64 = 1e-9;

/// Decides admissibility from the set sum of all masses: the
/// assignment is admissible exactly when that sum contains 1. On a
/// positive verdict a witness is searched: one piece per proposition,
/// then a point inside each chosen piece, together summing to 1.
pub fn check_admissibility(mass: &ImpreciseMass) -> AdmissibilityReport {
    let total = mass
        .entries()
        .values()
        .fold(SetValue::point(0.0), |acc, s| acc.add(s));
    if !total.contains(1.0) {
        return AdmissibilityReport {
            admissible: false,
            witness: None,
        };
    }
    let witness = find_witness(mass);
    debug_assert!(witness.is_some(), "a containing set sum should be witnessed");
    AdmissibilityReport {
        admissible: true,
        witness,
    }
}

fn find_witness(mass: &ImpreciseMass) -> Option<BTreeMap<Proposition, f64>> {
    let props: Vec<&Proposition> = mass.entries().keys().collect();
    let lists: Vec<&[Piece]> = mass.entries().values().map(SetValue::pieces).collect();
    let k = lists.len();
    // Extreme achievable suffix sums, for pruning piece choices.
    let mut min_lo = vec![0.0; k + 1];
    let mut max_hi = vec![0.0; k + 1];
    for i in (0..k).rev() {
        min_lo[i] = min_lo[i + 1]
            + lists[i]
                .iter()
                .map(|p| p.lo().value)
                .fold(f64::INFINITY, f64::min);
        max_hi[i] = max_hi[i + 1]
            + lists[i]
                .iter()
                .map(|p| p.hi().value)
                .fold(f64::NEG_INFINITY, f64::max);
    }
    let mut chosen: Vec<Piece> = Vec::with_capacity(k);
    let xs = search(&lists, &min_lo, &max_hi, 0, 0.0, 0.0, &mut chosen)?;
    Some(props.into_iter().cloned().zip(xs).collect())
}

fn search(
    lists: &[&[Piece]],
    min_lo: &[f64],
    max_hi: &[f64],
    depth: usize,
    lo_sum: f64,
    hi_sum: f64,
    chosen: &mut Vec<Piece>,
) -> Option<Vec<f64>> {
    if lo_sum + min_lo[depth] > 1.0 + ENDPOINT_TOL {
        return None;
    }
    if hi_sum + max_hi[depth] < 1.0 - ENDPOINT_TOL {
        return None;
    }
    if depth == lists.len() {
        if feasible(chosen) {
            return place(chosen);
        }
        return None;
    }
    for piece in lists[depth] {
        chosen.push(*piece);
        let found = search(
            lists,
            min_lo,
            max_hi,
            depth + 1,
            lo_sum + piece.lo().value,
            hi_sum + piece.hi().value,
            chosen,
        );
        chosen.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// One piece per proposition can sum to 1 iff the lower sum is below 1
/// (or attains it exactly) and the upper sum is above 1 (likewise).
fn feasible(chosen: &[Piece]) -> bool {
    let lo_sum: f64 = chosen.iter().map(|p| p.lo().value).sum();
    let hi_sum: f64 = chosen.iter().map(|p| p.hi().value).sum();
    let any_lo_open = chosen.iter().any(|p| p.lo().open);
    let any_hi_open = chosen.iter().any(|p| p.hi().open);
    let lo_ok = if lo_sum < 1.0 - ENDPOINT_TOL {
        true
    } else if lo_sum <= 1.0 + ENDPOINT_TOL {
        !any_lo_open
    } else {
        false
    };
    let hi_ok = if hi_sum > 1.0 + ENDPOINT_TOL {
        true
    } else if hi_sum >= 1.0 - ENDPOINT_TOL {
        !any_hi_open
    } else {
        false
    };
    lo_ok && hi_ok
}

/// Spreads the residual 1 - (sum of lower endpoints) across the chosen
/// pieces by linear interpolation. Open endpoints are first pulled
/// inward by a sliver of the piece width so the interpolated points
/// stay strictly interior; when that margin makes 1 unreachable the
/// sums are on the boundary, where feasibility guarantees the raw
/// endpoints are attained.
fn place(chosen: &[Piece]) -> Option<Vec<f64>> {
    for margined in [true, false] {
        if let Some(xs) = interpolate(chosen, margined) {
            let sum: f64 = xs.iter().sum();
            let inside = xs.iter().zip(chosen).all(|(x, p)| p.contains(*x));
            if (sum - 1.0).abs() <= WITNESS_TOL && inside {
                return Some(xs);
            }
        }
    }
    None
}

fn interpolate(chosen: &[Piece], margined: bool) -> Option<Vec<f64>> {
    let eff: Vec<(f64, f64)> = chosen
        .iter()
        .map(|p| {
            let width = p.hi().value - p.lo().value;
            let m = if margined { width * 1e-6 } else { 0.0 };
            let lo = p.lo().value + if p.lo().open { m } else { 0.0 };
            let hi = p.hi().value - if p.hi().open { m } else { 0.0 };
            (lo, hi)
        })
        .collect();
    let lo_sum: f64 = eff.iter().map(|(lo, _)| lo).sum();
    let hi_sum: f64 = eff.iter().map(|(_, hi)| hi).sum();
    if margined && (lo_sum > 1.0 || hi_sum < 1.0) {
        return None;
    }
    let span = hi_sum - lo_sum;
    let t = if span <= 0.0 {
        0.0
    } else {
        ((1.0 - lo_sum) / span).clamp(0.0, 1.0)
    };
    Some(eff.iter().map(|(lo, hi)| lo + t * (hi - lo)).collect())
}
