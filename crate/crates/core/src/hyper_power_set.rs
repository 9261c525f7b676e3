//! Propositions over a finite frame of atoms, closed under union and
//! intersection, together with enumeration of the full lattice they
//! generate.
//!
//! A proposition is stored as a minimal antichain of intersection
//! terms: `(t1 n t2) u t3` keeps the terms `{t1,t2}` and `{t3}`, while
//! any term absorbed by a smaller one is dropped. Two syntactically
//! different expressions that denote the same element always reduce to
//! the same term list, so plain equality is semantic equality.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Frames larger than this are refused by default: the lattice grows as
/// the Dedekind numbers (2, 5, 19, 167, 7580, 7828353, ...).
pub const DEFAULT_FRAME_CAP: usize = 5;

/// Enumeration is never attempted past this size; the next Dedekind
/// number has thirteen digits.
pub const MAX_FRAME_CAP: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("frame must have at least one atom")]
    EmptyFrame,
    #[error("duplicate atom label '{0}'")]
    DuplicateLabel(String),
    #[error("invalid atom label '{0}': labels are single words and may not be 'n' or 'u'")]
    InvalidLabel(String),
    #[error(
        "frame of {n} atoms exceeds the cap of {cap}: the lattice has Dedekind-number growth \
         ({count} elements here); raise --max-frame only up to {max}",
        max = MAX_FRAME_CAP
    )]
    FrameTooLarge { n: usize, cap: usize, count: String },
    #[error("unknown atom '{0}'")]
    UnknownAtom(String),
    #[error("cannot parse proposition '{0}': {1}")]
    Syntax(String, String),
    #[error("proposition uses atom {atom} but the frame has only {n}")]
    ForeignAtom { atom: usize, n: usize },
}

/// The frame of discernment: an ordered list of atom labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    labels: Vec<String>,
}

impl Frame {
    pub fn new<I, S>(labels: I) -> Result<Self, LatticeError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(LatticeError::EmptyFrame);
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty()
                || l == "n"
                || l == "u"
                || l.chars()
                    .any(|c| c.is_whitespace() || "()[]{},∩∪".contains(c))
            {
                return Err(LatticeError::InvalidLabel(l.clone()));
            }
            if labels[..i].contains(l) {
                return Err(LatticeError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Frame { labels })
    }

    /// A frame with labels `t1`, `t2`, ..., `tn`.
    pub fn of_size(n: usize) -> Result<Self, LatticeError> {
        Frame::new((1..=n).map(|i| format!("t{i}")))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The union of all atoms.
    pub fn total_ignorance(&self) -> Proposition {
        Proposition::from_terms((0..self.n()).map(|i| 1u32 << i))
    }

    pub fn atom(&self, index: usize) -> Proposition {
        assert!(index < self.n(), "atom index out of range");
        Proposition::atom(index)
    }

    fn atom_by_name(&self, word: &str) -> Result<usize, LatticeError> {
        if let Some(i) = self.labels.iter().position(|l| l == word) {
            return Ok(i);
        }
        // Fall back to positional names t<k> or θ<k>, 1-based.
        for prefix in ["t", "θ"] {
            if let Some(num) = word.strip_prefix(prefix) {
                if let Ok(k) = num.parse::<usize>() {
                    if k >= 1 && k <= self.n() {
                        return Ok(k - 1);
                    }
                }
            }
        }
        Err(LatticeError::UnknownAtom(word.to_string()))
    }

    /// Parses `expr := term ('u' term)*`, `term := factor ('n' factor)*`,
    /// `factor := atom | '(' expr ')'`, with `∩`/`∪` accepted for
    /// `n`/`u`. Atoms are labels or positional names like `t2`.
    pub fn parse_proposition(&self, text: &str) -> Result<Proposition, LatticeError> {
        let tokens = tokenize(text);
        let mut pos = 0usize;
        let p = self.parse_expr(text, &tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(LatticeError::Syntax(
                text.to_string(),
                format!("unexpected '{}'", tokens[pos]),
            ));
        }
        Ok(p)
    }

    fn parse_expr(
        &self,
        src: &str,
        tokens: &[Token],
        pos: &mut usize,
    ) -> Result<Proposition, LatticeError> {
        let mut acc = self.parse_term(src, tokens, pos)?;
        while matches!(tokens.get(*pos), Some(Token::Union)) {
            *pos += 1;
            let rhs = self.parse_term(src, tokens, pos)?;
            acc = acc.join(&rhs);
        }
        Ok(acc)
    }

    fn parse_term(
        &self,
        src: &str,
        tokens: &[Token],
        pos: &mut usize,
    ) -> Result<Proposition, LatticeError> {
        let mut acc = self.parse_factor(src, tokens, pos)?;
        while matches!(tokens.get(*pos), Some(Token::Intersect)) {
            *pos += 1;
            let rhs = self.parse_factor(src, tokens, pos)?;
            acc = acc.meet(&rhs);
        }
        Ok(acc)
    }

    fn parse_factor(
        &self,
        src: &str,
        tokens: &[Token],
        pos: &mut usize,
    ) -> Result<Proposition, LatticeError> {
        match tokens.get(*pos) {
            Some(Token::Open) => {
                *pos += 1;
                let inner = self.parse_expr(src, tokens, pos)?;
                match tokens.get(*pos) {
                    Some(Token::Close) => {
                        *pos += 1;
                        Ok(inner)
                    }
                    _ => Err(LatticeError::Syntax(src.to_string(), "missing ')'".into())),
                }
            }
            Some(Token::Word(w)) => {
                *pos += 1;
                Ok(Proposition::atom(self.atom_by_name(w)?))
            }
            _ => Err(LatticeError::Syntax(
                src.to_string(),
                "expected an atom or '('".into(),
            )),
        }
    }

    /// Renders a proposition with this frame's labels. Multi-atom terms
    /// are parenthesized inside unions: `(t1 n t2) u t3`.
    pub fn format_proposition(&self, p: &Proposition, style: SymbolStyle) -> String {
        if p.is_empty() {
            return match style {
                SymbolStyle::Unicode => "∅".to_string(),
                SymbolStyle::Ascii => "empty".to_string(),
            };
        }
        let (meet_sym, join_sym) = match style {
            SymbolStyle::Unicode => (" ∩ ", " ∪ "),
            SymbolStyle::Ascii => (" n ", " u "),
        };
        let terms: Vec<String> = p
            .terms
            .iter()
            .map(|&mask| {
                let atoms: Vec<&str> = (0..self.n())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| self.labels[i].as_str())
                    .collect();
                let joined = atoms.join(meet_sym);
                if p.terms.len() > 1 && atoms.len() > 1 {
                    format!("({joined})")
                } else {
                    joined
                }
            })
            .collect();
        terms.join(join_sym)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolStyle {
    Unicode,
    Ascii,
}

#[derive(Debug, PartialEq)]
enum Token {
    Word(String),
    Union,
    Intersect,
    Open,
    Close,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word(w) => write!(f, "{w}"),
            Token::Union => write!(f, "u"),
            Token::Intersect => write!(f, "n"),
            Token::Open => write!(f, "("),
            Token::Close => write!(f, ")"),
        }
    }
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<Token>| {
        if !word.is_empty() {
            out.push(match word.as_str() {
                "u" => Token::Union,
                "n" => Token::Intersect,
                _ => Token::Word(std::mem::take(word)),
            });
            word.clear();
        }
    };
    for c in text.chars() {
        match c {
            '(' => {
                flush(&mut word, &mut out);
                out.push(Token::Open);
            }
            ')' => {
                flush(&mut word, &mut out);
                out.push(Token::Close);
            }
            '∩' => {
                flush(&mut word, &mut out);
                out.push(Token::Intersect);
            }
            '∪' => {
                flush(&mut word, &mut out);
                out.push(Token::Union);
            }
            c if c.is_whitespace() => flush(&mut word, &mut out),
            c => word.push(c),
        }
    }
    flush(&mut word, &mut out);
    out
}

/// An element of the lattice generated by the atoms under union and
/// intersection, plus the empty proposition.
///
/// Terms are bitmasks of atom indices; the term `{i, j}` denotes the
/// intersection of atoms `i` and `j`, and the proposition is the union
/// of its terms. The empty term list is the empty proposition. The term
/// list is always a minimal antichain in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Proposition {
    terms: Vec<u32>,
}

impl Proposition {
    /// The empty proposition.
    pub fn empty() -> Self {
        Proposition { terms: Vec::new() }
    }

    /// The single atom with the given index.
    pub fn atom(index: usize) -> Self {
        assert!(index < 32, "atom index out of range");
        Proposition {
            terms: vec![1u32 << index],
        }
    }

    /// Builds a proposition from intersection-term bitmasks, reducing
    /// to the minimal antichain. Empty (zero) masks are rejected by
    /// debug assertion; they cannot arise from atoms.
    pub fn from_terms<I: IntoIterator<Item = u32>>(terms: I) -> Self {
        let masks: Vec<u32> = terms.into_iter().collect();
        debug_assert!(masks.iter().all(|&m| m != 0), "empty intersection term");
        Proposition {
            terms: minimize(masks),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_masks(&self) -> &[u32] {
        &self.terms
    }

    /// Largest atom index used, if any.
    pub fn max_atom(&self) -> Option<usize> {
        self.terms
            .iter()
            .map(|m| 31 - m.leading_zeros() as usize)
            .max()
    }

    /// Intersection. Distributes over the term unions: every pairwise
    /// term meet survives unless absorbed.
    pub fn meet(&self, other: &Proposition) -> Proposition {
        let mut masks = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &s in &self.terms {
            for &t in &other.terms {
                masks.push(s | t);
            }
        }
        Proposition { terms: minimize(masks) }
    }

    /// Union.
    pub fn join(&self, other: &Proposition) -> Proposition {
        let mut masks = Vec::with_capacity(self.terms.len() + other.terms.len());
        masks.extend_from_slice(&self.terms);
        masks.extend_from_slice(&other.terms);
        Proposition { terms: minimize(masks) }
    }

    /// Lattice order: `self ≤ other` exactly when their meet is `self`.
    /// Terms are join-prime, so each term of `self` must lie inside
    /// some term of `other`.
    pub fn leq(&self, other: &Proposition) -> bool {
        self.terms
            .iter()
            .all(|&s| other.terms.iter().any(|&t| t & s == t))
    }

    /// The union of all atoms mentioned anywhere in the proposition;
    /// empty for the empty proposition.
    pub fn atom_union(&self) -> Proposition {
        let all: u32 = self.terms.iter().fold(0, |acc, m| acc | m);
        Proposition::from_terms((0..32).filter(|i| all & (1 << i) != 0).map(|i| 1u32 << i))
    }
}

/// Keeps only minimal terms under set inclusion of their atom sets (a
/// term intersecting more atoms denotes a smaller set and is absorbed
/// by any subset term), dedupes, and sorts canonically.
fn minimize(mut masks: Vec<u32>) -> Vec<u32> {
    masks.sort_unstable();
    masks.dedup();
    let kept: Vec<u32> = masks
        .iter()
        .copied()
        .filter(|&m| {
            !masks
                .iter()
                .any(|&other| other != m && other & m == other)
        })
        .collect();
    let mut kept = kept;
    kept.sort_by(|&a, &b| term_order(a, b));
    kept
}

/// Canonical term order: more atoms first, then lexicographic on
/// ascending atom indices.
fn term_order(a: u32, b: u32) -> std::cmp::Ordering {
    b.count_ones()
        .cmp(&a.count_ones())
        .then_with(|| atom_lex(a, b))
}

fn atom_lex(a: u32, b: u32) -> std::cmp::Ordering {
    let xs = (0..32).filter(|i| a & (1 << i) != 0);
    let ys = (0..32).filter(|i| b & (1 << i) != 0);
    xs.cmp(ys)
}

/// Enumeration order across propositions: fewer terms first, then the
/// canonical term sequences compared term by term.
pub fn enumeration_order(p: &Proposition, q: &Proposition) -> std::cmp::Ordering {
    p.terms
        .len()
        .cmp(&q.terms.len())
        .then_with(|| {
            for (&a, &b) in p.terms.iter().zip(&q.terms) {
                let ord = term_order(a, b);
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        })
}

/// The fully enumerated lattice for one frame, with a stable element
/// order and an index for O(1) lookup.
#[derive(Debug, Clone)]
pub struct HyperPowerSet {
    frame: Frame,
    elements: Vec<Proposition>,
    index: HashMap<Proposition, usize>,
}

impl HyperPowerSet {
    /// Enumerates every element for frames up to [`DEFAULT_FRAME_CAP`]
    /// atoms.
    pub fn enumerate(frame: &Frame) -> Result<Self, LatticeError> {
        Self::enumerate_capped(frame, DEFAULT_FRAME_CAP)
    }

    /// Enumerates with an explicit cap (at most [`MAX_FRAME_CAP`]).
    pub fn enumerate_capped(frame: &Frame, cap: usize) -> Result<Self, LatticeError> {
        let n = frame.n();
        let cap = cap.min(MAX_FRAME_CAP);
        if n > cap {
            let count = match n {
                2 => "5",
                3 => "19",
                4 => "167",
                5 => "7580",
                6 => "7828353",
                _ => "astronomically many",
            }
            .to_string();
            return Err(LatticeError::FrameTooLarge { n, cap, count });
        }
        let mut elements = vec![Proposition::empty()];
        let mut chain: Vec<u32> = Vec::new();
        collect_antichains(1, n, &mut chain, &mut elements);
        elements.sort_by(enumeration_order);
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        Ok(HyperPowerSet {
            frame: frame.clone(),
            elements,
            index,
        })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Number of elements (the Dedekind number for n atoms, minus one).
    pub fn d(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Proposition] {
        &self.elements
    }

    pub fn index_of(&self, p: &Proposition) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &Proposition) -> bool {
        self.index.contains_key(p)
    }

    pub fn total_ignorance(&self) -> Proposition {
        self.frame.total_ignorance()
    }
}

/// Backtracking enumeration of every antichain of nonempty atom
/// subsets: masks are visited in increasing order and a mask joins the
/// chain only when incomparable with everything already chosen.
fn collect_antichains(next: u32, n: usize, chain: &mut Vec<u32>, out: &mut Vec<Proposition>) {
    let limit = 1u32 << n;
    for mask in next..limit {
        if chain
            .iter()
            .any(|&c| c & mask == c || c & mask == mask)
        {
            continue;
        }
        chain.push(mask);
        let mut terms = chain.clone();
        terms.sort_by(|&a, &b| term_order(a, b));
        out.push(Proposition { terms });
        collect_antichains(mask + 1, n, chain, out);
        chain.pop();
    }
}
