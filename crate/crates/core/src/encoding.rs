//! State encodings: injective maps from abstract states to fixed-width bit
//! vectors, kept up to date as cells are split.
//!
//! Two schemes are provided. The log encoding numbers states `1..=|Q|` and
//! writes `q - 1` in binary with the minimum number of bits; a split keeps the
//! parent's number for the first child and gives the second child `|Q| + 1`.
//! The split encoding derives each child's code from its parent: a cell at
//! refinement depth `d` splits into children whose codes differ from the
//! parent's only in bit `k + d + 1` (1-based), where `k` is the width of the
//! initial encoding. When a split reaches a new maximum depth, every code is
//! first widened by a trailing 0 bit.

use std::fmt;

use rustc_hash::FxHashMap;
use splitsynth_bdd::{Bdd, BddManager, VarId};

use crate::error::{Error, Result};
use crate::StateId;

/// Bit vector, most significant bit first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitVec(pub Vec<bool>);

impl BitVec {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<&str> for BitVec {
    /// Parses a string of `0`/`1` characters; anything else is read as 0.
    fn from(s: &str) -> Self {
        BitVec(s.chars().map(|c| c == '1').collect())
    }
}

/// Smallest `n` with `2^n >= count`.
pub fn ceil_log2(count: usize) -> usize {
    if count <= 1 {
        0
    } else {
        (usize::BITS - (count - 1).leading_zeros()) as usize
    }
}

/// Binary representation of `number - 1` in `width` bits.
pub fn log_encode(number: u64, width: usize) -> Result<BitVec> {
    let fits = width >= 64 || number <= 1u64 << width;
    if number == 0 || !fits {
        return Err(Error::EncodingRange { number, width });
    }
    Ok(to_bits(number - 1, width))
}

fn to_bits(value: u64, width: usize) -> BitVec {
    BitVec((0..width).rev().map(|i| i < 64 && (value >> i) & 1 == 1).collect())
}

fn from_bits(bits: &[bool]) -> Option<u64> {
    if bits.len() > 64 {
        if bits[..bits.len() - 64].iter().any(|&b| b) {
            return None;
        }
        return from_bits(&bits[bits.len() - 64..]);
    }
    Some(bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    Log,
    Split,
}

impl EncodingKind {
    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::Log => "log",
            EncodingKind::Split => "split",
        }
    }
}

impl std::str::FromStr for EncodingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "log" => Ok(EncodingKind::Log),
            "split" => Ok(EncodingKind::Split),
            other => Err(format!("unknown encoding `{other}` (expected log or split)")),
        }
    }
}

/// What an edit did to the code space, so that symbolic relations can be
/// patched instead of rebuilt.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Change {
    /// A bit was added to every code.
    pub widened: bool,
    /// The leading bit was dropped from every code.
    pub shrunk: bool,
    /// A state that was renumbered, with its code before the edit.
    pub moved: Option<(StateId, BitVec)>,
}

#[derive(Debug, Clone, Default)]
pub struct LogEncoding {
    width: usize,
    number_of: FxHashMap<StateId, u64>,
    /// `state_of[n - 1]` holds number `n`.
    state_of: Vec<StateId>,
}

impl LogEncoding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_states(states: impl IntoIterator<Item = StateId>) -> Result<Self> {
        let mut enc = Self::new();
        for q in states {
            enc.insert(q)?;
        }
        Ok(enc)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.state_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_of.is_empty()
    }

    pub fn number(&self, q: StateId) -> Option<u64> {
        self.number_of.get(&q).copied()
    }

    pub fn bits(&self, q: StateId) -> Result<BitVec> {
        let n = self.number(q).ok_or(Error::UnknownState(q))?;
        log_encode(n, self.width)
    }

    pub fn decode(&self, bits: &[bool]) -> Option<StateId> {
        if bits.len() != self.width {
            return None;
        }
        let idx = from_bits(bits)? as usize;
        self.state_of.get(idx).copied()
    }

    pub fn insert(&mut self, q: StateId) -> Result<Change> {
        if self.number_of.contains_key(&q) {
            return Err(Error::DuplicateState(q));
        }
        let before = self.width;
        self.state_of.push(q);
        self.number_of.insert(q, self.state_of.len() as u64);
        self.width = ceil_log2(self.len());
        Ok(Change {
            widened: self.width > before,
            ..Change::default()
        })
    }

    /// The first child inherits the parent's number, the second is numbered
    /// `|Q| + 1`. The width grows exactly when `|Q| = 2^n` before the split.
    pub fn split(&mut self, parent: StateId, first: StateId, second: StateId) -> Result<Change> {
        let n = self.number_of.remove(&parent).ok_or(Error::UnknownState(parent))?;
        for child in [first, second] {
            if self.number_of.contains_key(&child) {
                self.number_of.insert(parent, n);
                return Err(Error::DuplicateState(child));
            }
        }
        self.number_of.insert(first, n);
        self.state_of[n as usize - 1] = first;
        self.insert(second)
    }

    /// Removes `q`; the highest-numbered state takes over its number so that
    /// numbers stay dense.
    pub fn remove(&mut self, q: StateId) -> Result<Change> {
        let n = self.number_of.remove(&q).ok_or(Error::UnknownState(q))?;
        let last = self.state_of.pop().expect("nonempty");
        let mut change = Change::default();
        if last != q {
            let old = log_encode(self.state_of.len() as u64 + 1, self.width)?;
            self.state_of[n as usize - 1] = last;
            self.number_of.insert(last, n);
            change.moved = Some((last, old));
        }
        let before = self.width;
        self.width = ceil_log2(self.len());
        change.shrunk = self.width < before;
        Ok(change)
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.state_of.iter().copied()
    }
}

#[derive(Debug, Clone)]
pub struct SplitEncoding {
    k: usize,
    max_depth: u32,
    codes: FxHashMap<StateId, (BitVec, u32)>,
    owner: FxHashMap<BitVec, StateId>,
    /// Root prefixes ever handed out; never reused.
    next_root: u64,
}

impl SplitEncoding {
    /// An empty encoding whose initial cells get `k`-bit codes.
    pub fn new(k: usize) -> Self {
        SplitEncoding {
            k,
            max_depth: 0,
            codes: FxHashMap::default(),
            owner: FxHashMap::default(),
            next_root: 0,
        }
    }

    /// Codes `Bin(0), Bin(1), ...` for the given initial cells, using the
    /// fewest bits that keep them distinct.
    pub fn from_roots(roots: &[StateId]) -> Result<Self> {
        let mut enc = Self::new(ceil_log2(roots.len()));
        for &q in roots {
            enc.insert_root(q)?;
        }
        Ok(enc)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn width(&self) -> usize {
        self.k + self.max_depth as usize
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn depth(&self, q: StateId) -> Option<u32> {
        self.codes.get(&q).map(|(_, d)| *d)
    }

    pub fn bits(&self, q: StateId) -> Result<BitVec> {
        self.codes
            .get(&q)
            .map(|(b, _)| b.clone())
            .ok_or(Error::UnknownState(q))
    }

    pub fn decode(&self, bits: &[bool]) -> Option<StateId> {
        self.owner.get(&BitVec(bits.to_vec())).copied()
    }

    /// Adds a depth-0 state with the next unused `k`-bit root code.
    pub fn insert_root(&mut self, q: StateId) -> Result<Change> {
        if self.codes.contains_key(&q) {
            return Err(Error::DuplicateState(q));
        }
        if self.k < 64 && self.next_root >= 1u64 << self.k {
            return Err(Error::EncodingExhausted(self.k));
        }
        let mut bits = to_bits(self.next_root, self.k);
        self.next_root += 1;
        bits.0.resize(self.width(), false);
        self.owner.insert(bits.clone(), q);
        self.codes.insert(q, (bits, 0));
        Ok(Change::default())
    }

    pub fn split(&mut self, parent: StateId, first: StateId, second: StateId) -> Result<Change> {
        if !self.codes.contains_key(&parent) {
            return Err(Error::UnknownState(parent));
        }
        for child in [first, second] {
            if child != parent && self.codes.contains_key(&child) {
                return Err(Error::DuplicateState(child));
            }
        }
        let depth = self.codes[&parent].1;
        let mut change = Change::default();
        if depth == self.max_depth {
            self.max_depth += 1;
            for (bits, _) in self.codes.values_mut() {
                bits.0.push(false);
            }
            self.owner = self.codes.iter().map(|(&q, (b, _))| (b.clone(), q)).collect();
            change.widened = true;
        }
        let (bits, _) = self.codes.remove(&parent).expect("checked above");
        self.owner.remove(&bits);
        let pos = self.k + depth as usize;
        let mut zero = bits.clone();
        zero.0[pos] = false;
        let mut one = bits;
        one.0[pos] = true;
        self.owner.insert(zero.clone(), first);
        self.owner.insert(one.clone(), second);
        self.codes.insert(first, (zero, depth + 1));
        self.codes.insert(second, (one, depth + 1));
        Ok(change)
    }

    pub fn remove(&mut self, q: StateId) -> Result<Change> {
        let (bits, _) = self.codes.remove(&q).ok_or(Error::UnknownState(q))?;
        self.owner.remove(&bits);
        Ok(Change::default())
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.codes.keys().copied()
    }
}

/// Either encoding behind one interface.
#[derive(Debug, Clone)]
pub enum StateEncoding {
    Log(LogEncoding),
    Split(SplitEncoding),
}

impl StateEncoding {
    /// Encodes the initial states in the given order.
    pub fn new(kind: EncodingKind, initial: &[StateId]) -> Result<Self> {
        Ok(match kind {
            EncodingKind::Log => StateEncoding::Log(LogEncoding::from_states(initial.iter().copied())?),
            EncodingKind::Split => StateEncoding::Split(SplitEncoding::from_roots(initial)?),
        })
    }

    pub fn kind(&self) -> EncodingKind {
        match self {
            StateEncoding::Log(_) => EncodingKind::Log,
            StateEncoding::Split(_) => EncodingKind::Split,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            StateEncoding::Log(e) => e.width(),
            StateEncoding::Split(e) => e.width(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            StateEncoding::Log(e) => e.len(),
            StateEncoding::Split(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether widening adds the new bit in front (log: a new most
    /// significant bit) rather than at the end (split: a new depth bit).
    pub fn widens_in_front(&self) -> bool {
        matches!(self, StateEncoding::Log(_))
    }

    pub fn bits(&self, q: StateId) -> Result<BitVec> {
        match self {
            StateEncoding::Log(e) => e.bits(q),
            StateEncoding::Split(e) => e.bits(q),
        }
    }

    pub fn decode(&self, bits: &[bool]) -> Option<StateId> {
        match self {
            StateEncoding::Log(e) => e.decode(bits),
            StateEncoding::Split(e) => e.decode(bits),
        }
    }

    pub fn insert(&mut self, q: StateId) -> Result<Change> {
        match self {
            StateEncoding::Log(e) => e.insert(q),
            StateEncoding::Split(e) => e.insert_root(q),
        }
    }

    pub fn split(&mut self, parent: StateId, first: StateId, second: StateId) -> Result<Change> {
        match self {
            StateEncoding::Log(e) => e.split(parent, first, second),
            StateEncoding::Split(e) => e.split(parent, first, second),
        }
    }

    pub fn remove(&mut self, q: StateId) -> Result<Change> {
        match self {
            StateEncoding::Log(e) => e.remove(q),
            StateEncoding::Split(e) => e.remove(q),
        }
    }

    pub fn states(&self) -> Vec<StateId> {
        let mut v: Vec<StateId> = match self {
            StateEncoding::Log(e) => e.states().collect(),
            StateEncoding::Split(e) => e.states().collect(),
        };
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupRole {
    StateFrom,
    Action,
    StateTo,
}

/// BDD variables carrying one component of a transition. Bit `i` of a code
/// is carried by `vars[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarGroup {
    pub role: GroupRole,
    pub vars: Vec<VarId>,
}

impl VarGroup {
    pub fn new(role: GroupRole, vars: Vec<VarId>) -> Self {
        VarGroup { role, vars }
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }
}

/// Conjunction of literals fixing the group's variables to `bits`.
pub fn state_to_bdd(mgr: &BddManager, bits: &BitVec, group: &VarGroup) -> Result<Bdd> {
    if bits.len() != group.width() {
        return Err(Error::WidthMismatch {
            expected: group.width(),
            got: bits.len(),
        });
    }
    Ok(mgr.minterm(&group.vars, bits.bits()))
}

/// Characteristic function of `states` over `group`.
pub fn set_to_bdd(
    mgr: &BddManager,
    states: impl IntoIterator<Item = StateId>,
    enc: &StateEncoding,
    group: &VarGroup,
) -> Result<Bdd> {
    let mut terms = Vec::new();
    for q in states {
        terms.push(state_to_bdd(mgr, &enc.bits(q)?, group)?);
    }
    Ok(disjoin(mgr, terms))
}

/// Balanced disjunction, which keeps intermediate diagrams small.
pub fn disjoin(mgr: &BddManager, mut terms: Vec<Bdd>) -> Bdd {
    if terms.is_empty() {
        return mgr.zero();
    }
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.or(&b)),
                None => next.push(a),
            }
        }
        terms = next;
    }
    terms.pop().expect("nonempty")
}
