//! Sub-unitary set values: finite unions of intervals and points with
//! open or closed endpoints, plus the four set-arithmetic operations
//! (add, sub, mul, div) used when fusing imprecise masses.
//!
//! Every [`SetValue`] is kept in a canonical normal form: pieces sorted,
//! pairwise disjoint, and merged whenever they overlap or touch at a
//! point that at least one side actually contains. Result endpoints are
//! open or closed by attainability: an endpoint is closed exactly when
//! some choice of operand members reaches it.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Endpoint comparisons treat values this close as equal. Golden-value
/// tests key off 1e-9; keeping normalization three orders tighter means
/// merging never masks a real mismatch.
pub const ENDPOINT_TOL: f64 = 1e-12;

pub(crate) fn feq(a: f64, b: f64) -> bool {
    // Covers +inf == +inf; inf - inf is NaN and compares false.
    a == b || (a - b).abs() <= ENDPOINT_TOL
}

#[derive(Debug, Error, PartialEq)]
pub enum SetValueError {
    #[error("piece [{lo}, {hi}] is empty or inverted")]
    InvalidPiece { lo: f64, hi: f64 },
    #[error("degenerate piece at {0} must be closed on both sides")]
    OpenPoint(f64),
    #[error("bounds must be finite (only an upper bound may be +inf)")]
    InfiniteBound,
    #[error("division by the single point {{0}} has no sub-unitary result")]
    UnboundedQuotient,
    #[error("cannot parse set value: {0}")]
    Parse(String),
}

/// One endpoint of a piece. `open` means the value itself is excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub open: bool,
}

impl Bound {
    pub fn closed(value: f64) -> Self {
        Bound { value, open: false }
    }

    pub fn open(value: f64) -> Self {
        Bound { value, open: true }
    }
}

/// A maximal connected run of values: an interval or a single point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    lo: Bound,
    hi: Bound,
}

impl Piece {
    /// Builds a piece, rejecting empty or inverted ranges. A lower bound
    /// must be finite; an infinite upper bound must be open.
    pub fn new(lo: Bound, hi: Bound) -> Result<Self, SetValueError> {
        if lo.value.is_nan() || hi.value.is_nan() || lo.value.is_infinite() {
            return Err(SetValueError::InfiniteBound);
        }
        if hi.value.is_infinite() {
            if hi.value < 0.0 {
                return Err(SetValueError::InfiniteBound);
            }
            return Ok(Piece {
                lo,
                hi: Bound::open(f64::INFINITY),
            });
        }
        if feq(lo.value, hi.value) {
            if lo.open || hi.open {
                return Err(SetValueError::OpenPoint(lo.value));
            }
            // Snap to a single representative value.
            return Ok(Piece {
                lo: Bound::closed(lo.value),
                hi: Bound::closed(lo.value),
            });
        }
        if lo.value > hi.value {
            return Err(SetValueError::InvalidPiece {
                lo: lo.value,
                hi: hi.value,
            });
        }
        Ok(Piece { lo, hi })
    }

    /// `[a, b]`; panics if the range is invalid.
    pub fn closed(a: f64, b: f64) -> Self {
        Piece::new(Bound::closed(a), Bound::closed(b)).expect("invalid closed piece")
    }

    /// `(a, b)`; panics if the range is invalid.
    pub fn open(a: f64, b: f64) -> Self {
        Piece::new(Bound::open(a), Bound::open(b)).expect("invalid open piece")
    }

    /// `[a, b)`; panics if the range is invalid.
    pub fn closed_open(a: f64, b: f64) -> Self {
        Piece::new(Bound::closed(a), Bound::open(b)).expect("invalid piece")
    }

    /// `(a, b]`; panics if the range is invalid.
    pub fn open_closed(a: f64, b: f64) -> Self {
        Piece::new(Bound::open(a), Bound::closed(b)).expect("invalid piece")
    }

    /// The degenerate piece `{a}`.
    pub fn point(a: f64) -> Self {
        Piece::closed(a, a)
    }

    pub fn lo(&self) -> Bound {
        self.lo
    }

    pub fn hi(&self) -> Bound {
        self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo.value == self.hi.value
    }

    pub fn contains(&self, x: f64) -> bool {
        if feq(x, self.lo.value) {
            return !self.lo.open;
        }
        if feq(x, self.hi.value) {
            return !self.hi.open;
        }
        self.lo.value < x && x < self.hi.value
    }

    fn is_zero_point(&self) -> bool {
        self.is_point() && self.lo.value == 0.0
    }

    // Sum endpoints are attained only when both operand endpoints are.
    fn add(&self, other: &Piece) -> Piece {
        Piece {
            lo: Bound {
                value: self.lo.value + other.lo.value,
                open: self.lo.open || other.lo.open,
            },
            hi: Bound {
                value: self.hi.value + other.hi.value,
                open: self.hi.open || other.hi.open,
            },
        }
    }

    fn sub(&self, other: &Piece) -> Piece {
        assert!(
            self.hi.value.is_finite() && other.hi.value.is_finite(),
            "sub requires finite operands"
        );
        Piece {
            lo: Bound {
                value: self.lo.value - other.hi.value,
                open: self.lo.open || other.hi.open,
            },
            hi: Bound {
                value: self.hi.value - other.lo.value,
                open: self.hi.open || other.lo.open,
            },
        }
    }

    // Nonnegative operands only. A product endpoint of zero is attained
    // as soon as either factor attains zero, even if the other factor's
    // endpoint is open.
    fn mul(&self, other: &Piece) -> Piece {
        if self.is_zero_point() || other.is_zero_point() {
            return Piece::point(0.0);
        }
        Piece {
            lo: mul_bounds(self.lo, other.lo),
            hi: mul_bounds(self.hi, other.hi),
        }
    }
}

/// Multiplies two like-side endpoint bounds of nonnegative pieces,
/// deciding openness by attainability.
pub(crate) fn mul_bounds(a: Bound, b: Bound) -> Bound {
    let attained =
        (!a.open && !b.open) || (a.value == 0.0 && !a.open) || (b.value == 0.0 && !b.open);
    Bound {
        value: a.value * b.value,
        open: !attained,
    }
}

/// Adds two like-side endpoint bounds; the sum is attained only when
/// both addends are.
pub(crate) fn add_bounds(a: Bound, b: Bound) -> Bound {
    Bound {
        value: a.value + b.value,
        open: a.open || b.open,
    }
}

/// A set of reals in canonical normal form: sorted, disjoint pieces
/// with any touching pieces merged when the shared point is a member.
///
/// The empty set is representable (and propagates through arithmetic)
/// but never denotes a mass: fusion layers encode "no mass" as the
/// point `{0}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetValue {
    pieces: Vec<Piece>,
}

impl SetValue {
    pub fn empty() -> Self {
        SetValue { pieces: Vec::new() }
    }

    /// The single point `{a}`.
    pub fn point(a: f64) -> Self {
        SetValue {
            pieces: vec![Piece::point(a)],
        }
    }

    /// Normalizes an arbitrary collection of pieces into canonical form.
    pub fn from_pieces<I: IntoIterator<Item = Piece>>(pieces: I) -> Self {
        let mut raw: Vec<Piece> = pieces.into_iter().collect();
        if raw.is_empty() {
            return SetValue::empty();
        }
        raw.sort_by(|a, b| {
            a.lo
                .value
                .partial_cmp(&b.lo.value)
                .expect("NaN bound")
                .then(a.lo.open.cmp(&b.lo.open)) // closed sorts first
        });
        let mut out: Vec<Piece> = Vec::with_capacity(raw.len());
        let mut cur = raw[0];
        for next in raw.into_iter().skip(1) {
            if next.lo.value > cur.hi.value + ENDPOINT_TOL {
                out.push(cur); // disjoint
                cur = next;
            } else if feq(next.lo.value, cur.hi.value) && cur.hi.open && next.lo.open {
                out.push(cur); // touching, but the shared point belongs to neither
                cur = next;
            } else {
                cur.hi = max_upper(cur.hi, next.hi); // overlap or membered touch
            }
        }
        out.push(cur);
        SetValue { pieces: out }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// True when the set is exactly the point `{0}`.
    pub fn is_zero_point(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0].is_zero_point()
    }

    /// Greatest lower bound. Panics on the empty set.
    pub fn inf(&self) -> f64 {
        self.pieces.first().expect("inf of empty set").lo.value
    }

    /// Least upper bound (`+inf` possible). Panics on the empty set.
    pub fn sup(&self) -> f64 {
        self.pieces.last().expect("sup of empty set").hi.value
    }

    pub fn contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    /// Minkowski sum: every `s1 + s2` with `s1` here and `s2` in `other`.
    pub fn add(&self, other: &SetValue) -> SetValue {
        self.pairwise(other, Piece::add)
    }

    /// Minkowski difference `s1 - s2`. Results may be negative; operands
    /// must be finite.
    pub fn sub(&self, other: &SetValue) -> SetValue {
        self.pairwise(other, Piece::sub)
    }

    /// Minkowski product. Panics if either operand contains a negative
    /// value: the endpoint product laws only hold on nonnegative sets,
    /// and fusion never produces negatives.
    pub fn mul(&self, other: &SetValue) -> SetValue {
        assert!(
            (self.is_empty() || self.inf() >= 0.0) && (other.is_empty() || other.inf() >= 0.0),
            "mul requires nonnegative operands"
        );
        self.pairwise(other, Piece::mul)
    }

    /// Quotient `s1 / s2` over nonnegative sets. When `other` contains 0
    /// the quotient is the half-line from `inf(self) / sup(other)` to
    /// `+inf`; when `other` is exactly `{0}` there is no set result at
    /// all. Fusion itself never divides; this completes the arithmetic.
    pub fn div(&self, other: &SetValue) -> Result<SetValue, SetValueError> {
        assert!(
            (self.is_empty() || self.inf() >= 0.0) && (other.is_empty() || other.inf() >= 0.0),
            "div requires nonnegative operands"
        );
        if self.is_empty() || other.is_empty() {
            return Ok(SetValue::empty());
        }
        if other.is_zero_point() {
            return Err(SetValueError::UnboundedQuotient);
        }
        if other.contains(0.0) {
            let num = self.pieces.first().unwrap().lo;
            let den = self.global_sup_partner(other);
            let attained = (!num.open && !den.open) || (num.value == 0.0 && !num.open);
            let lo = Bound {
                value: num.value / den.value,
                open: !attained,
            };
            let piece = Piece::new(lo, Bound::open(f64::INFINITY)).expect("quotient piece");
            return Ok(SetValue::from_pieces([piece]));
        }
        let mut out = Vec::new();
        for p in &self.pieces {
            if p.is_zero_point() {
                out.push(Piece::point(0.0));
                continue;
            }
            for q in &other.pieces {
                let lo_att = (!p.lo.open && !q.hi.open) || (p.lo.value == 0.0 && !p.lo.open);
                let lo = Bound {
                    value: p.lo.value / q.hi.value,
                    open: !lo_att,
                };
                let hi = if q.lo.value == 0.0 {
                    Bound::open(f64::INFINITY) // open divisor endpoint at 0
                } else {
                    Bound {
                        value: p.hi.value / q.lo.value,
                        open: p.hi.open || q.lo.open,
                    }
                };
                out.push(Piece::new(lo, hi).expect("quotient piece"));
            }
        }
        Ok(SetValue::from_pieces(out))
    }

    fn global_sup_partner(&self, other: &SetValue) -> Bound {
        other.pieces.last().unwrap().hi
    }

    /// Truncates to the unit interval: any portion below 0 collapses to
    /// the point `{0}`, any portion above 1 to `{1}`, the interior is
    /// kept as-is.
    pub fn clamp_unit(&self) -> SetValue {
        let mut out = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            if p.hi.value <= 0.0 || feq(p.hi.value, 0.0) {
                out.push(Piece::point(0.0));
            } else if p.lo.value >= 1.0 || feq(p.lo.value, 1.0) {
                // (1, b] starts above one; [1, b] keeps its 1 either way.
                if feq(p.lo.value, 1.0) && !p.lo.open {
                    out.push(Piece::point(1.0));
                } else {
                    out.push(Piece::point(1.0));
                }
            } else {
                let lo = if p.lo.value < 0.0 {
                    Bound::closed(0.0)
                } else {
                    p.lo
                };
                let hi = if p.hi.value > 1.0 {
                    Bound::closed(1.0)
                } else {
                    p.hi
                };
                out.push(Piece::new(lo, hi).expect("clamped piece"));
            }
        }
        SetValue::from_pieces(out)
    }

    /// Endpoint-wise comparison within `tol`; openness must match
    /// exactly.
    pub fn approx_eq(&self, other: &SetValue, tol: f64) -> bool {
        self.pieces.len() == other.pieces.len()
            && self.pieces.iter().zip(&other.pieces).all(|(a, b)| {
                let lo_ok = (a.lo.value - b.lo.value).abs() <= tol;
                let hi_ok =
                    a.hi.value == b.hi.value || (a.hi.value - b.hi.value).abs() <= tol;
                lo_ok && hi_ok && a.lo.open == b.lo.open && a.hi.open == b.hi.open
            })
    }

    fn pairwise(&self, other: &SetValue, op: impl Fn(&Piece, &Piece) -> Piece) -> SetValue {
        let mut out = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for p in &self.pieces {
            for q in &other.pieces {
                out.push(op(p, q));
            }
        }
        SetValue::from_pieces(out)
    }
}

/// Union of two upper bounds at a merge: larger value wins; at equal
/// values the point is a member if either side is closed.
fn max_upper(a: Bound, b: Bound) -> Bound {
    if feq(a.value, b.value) {
        let open = a.open && b.open;
        let value = match (a.open, b.open) {
            (false, true) => a.value,
            (true, false) => b.value,
            _ => a.value.max(b.value),
        };
        Bound { value, open }
    } else if a.value > b.value {
        a
    } else {
        b
    }
}

impl std::ops::Add for &SetValue {
    type Output = SetValue;
    fn add(self, rhs: &SetValue) -> SetValue {
        SetValue::add(self, rhs)
    }
}

impl std::ops::Sub for &SetValue {
    type Output = SetValue;
    fn sub(self, rhs: &SetValue) -> SetValue {
        SetValue::sub(self, rhs)
    }
}

impl std::ops::Mul for &SetValue {
    type Output = SetValue;
    fn mul(self, rhs: &SetValue) -> SetValue {
        SetValue::mul(self, rhs)
    }
}

fn fmt_value(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v == f64::INFINITY {
        write!(f, "inf")
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{{")?;
            fmt_value(self.lo.value, f)?;
            return write!(f, "}}");
        }
        write!(f, "{}", if self.lo.open { '(' } else { '[' })?;
        fmt_value(self.lo.value, f)?;
        write!(f, ",")?;
        fmt_value(self.hi.value, f)?;
        write!(f, "{}", if self.hi.open { ')' } else { ']' })
    }
}

impl fmt::Display for SetValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " U ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

fn parse_number(text: &str) -> Result<f64, SetValueError> {
    let t = text.trim();
    let v = t
        .parse::<f64>()
        .map_err(|_| SetValueError::Parse(format!("bad number '{t}'")))?;
    if v.is_nan() || v == f64::NEG_INFINITY {
        return Err(SetValueError::Parse(format!("bad number '{t}'")));
    }
    Ok(v)
}

fn parse_piece(text: &str) -> Result<Piece, SetValueError> {
    let t = text.trim();
    let err = || SetValueError::Parse(format!("bad piece '{t}'"));
    if let Some(inner) = t.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
        return Ok(Piece::point(parse_number(inner)?));
    }
    let mut chars = t.chars();
    let first = chars.next().ok_or_else(err)?;
    let last = t.chars().last().ok_or_else(err)?;
    let lo_open = match first {
        '[' => false,
        '(' => true,
        _ => return Err(err()),
    };
    let hi_open = match last {
        ']' => false,
        ')' => true,
        _ => return Err(err()),
    };
    let inner = &t[1..t.len() - 1];
    let (a, b) = inner.split_once(',').ok_or_else(err)?;
    Piece::new(
        Bound {
            value: parse_number(a)?,
            open: lo_open,
        },
        Bound {
            value: parse_number(b)?,
            open: hi_open,
        },
    )
}

impl FromStr for SetValue {
    type Err = SetValueError;

    /// Parses the literal grammar: pieces `[a,b]`, `(a,b)`, `[a,b)`,
    /// `(a,b]`, `{a}` joined by `U`; `{}` is the empty set.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() {
            return Err(SetValueError::Parse("empty literal".into()));
        }
        if t == "{}" {
            return Ok(SetValue::empty());
        }
        // Split on 'U' separators that sit outside any piece brackets.
        let mut pieces = Vec::new();
        let mut depth = 0i32;
        let mut start = 0usize;
        for (i, c) in t.char_indices() {
            match c {
                '[' | '(' | '{' => depth += 1,
                ']' | ')' | '}' => depth -= 1,
                'U' if depth == 0 => {
                    pieces.push(parse_piece(&t[start..i])?);
                    start = i + 1;
                }
                _ => {}
            }
        }
        pieces.push(parse_piece(&t[start..])?);
        Ok(SetValue::from_pieces(pieces))
    }
}
