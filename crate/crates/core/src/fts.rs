//! Finite transition systems `(Q, U, →, L)` with an explicit transition
//! list, and the controllable predecessor operators on it.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

pub use splitsynth_bdd::Quantifier;

use crate::error::{Error, Result};
use crate::{ActionId, StateId, StateSet};

pub type Triple = (StateId, ActionId, StateId);

/// Quantifier pair of a predecessor operator: the first ranges over
/// actions, the second over the nondeterministic successors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quant(pub Quantifier, pub Quantifier);

impl Quant {
    pub const EE: Quant = Quant(Quantifier::Exists, Quantifier::Exists);
    pub const EA: Quant = Quant(Quantifier::Exists, Quantifier::Forall);
    pub const AE: Quant = Quant(Quantifier::Forall, Quantifier::Exists);
    pub const AA: Quant = Quant(Quantifier::Forall, Quantifier::Forall);
    pub const ALL: [Quant; 4] = [Quant::EE, Quant::EA, Quant::AE, Quant::AA];
}

impl fmt::Display for Quant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |q: Quantifier| match q {
            Quantifier::Exists => "∃",
            Quantifier::Forall => "∀",
        };
        write!(f, "({},{})", s(self.0), s(self.1))
    }
}

/// Range of the action quantifier.
///
/// In both modes a universally quantified successor set must be nonempty,
/// so an action without successors never certifies membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PreMode {
    /// Actions range over those with at least one successor. A state with
    /// no outgoing transitions is in no predecessor set.
    #[default]
    Enabled,
    /// A universal action quantifier ranges over all of `U`.
    Strict,
}

/// Explicit transition system. Outgoing transitions of each state are kept
/// sorted by `(u, q')`, so the successor set of every `(q, u)` is a
/// contiguous run.
#[derive(Debug, Default)]
pub struct Fts {
    n_actions: usize,
    live: StateSet,
    next_id: StateId,
    out: Vec<Vec<(ActionId, StateId)>>,
    inc: Vec<Vec<(StateId, ActionId)>>,
    n_transitions: usize,
    labels: BTreeMap<String, StateSet>,
    touches: AtomicU64,
}

impl Clone for Fts {
    fn clone(&self) -> Self {
        Fts {
            n_actions: self.n_actions,
            live: self.live.clone(),
            next_id: self.next_id,
            out: self.out.clone(),
            inc: self.inc.clone(),
            n_transitions: self.n_transitions,
            labels: self.labels.clone(),
            touches: AtomicU64::new(0),
        }
    }
}

impl PartialEq for Fts {
    fn eq(&self, other: &Self) -> bool {
        let nonempty = |l: &BTreeMap<String, StateSet>| -> Vec<(String, StateSet)> {
            l.iter()
                .filter(|(_, s)| !s.is_empty())
                .map(|(k, s)| (k.clone(), s.clone()))
                .collect()
        };
        self.n_actions == other.n_actions
            && self.live == other.live
            && self.transitions().eq(other.transitions())
            && nonempty(&self.labels) == nonempty(&other.labels)
    }
}

impl Fts {
    pub fn new(n_actions: usize) -> Self {
        Fts {
            n_actions,
            next_id: 1,
            ..Default::default()
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.live.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.n_transitions
    }

    pub fn contains_state(&self, q: StateId) -> bool {
        self.live.contains(q)
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.live.iter()
    }

    pub fn state_set(&self) -> &StateSet {
        &self.live
    }

    /// Adds a state with a fresh id.
    pub fn add_state(&mut self) -> StateId {
        let q = self.next_id;
        self.insert_state(q).expect("fresh id");
        q
    }

    /// Adds a state with the given id.
    pub fn insert_state(&mut self, q: StateId) -> Result<()> {
        if self.live.contains(q) {
            return Err(Error::DuplicateState(q));
        }
        self.live.insert(q);
        self.next_id = self.next_id.max(q + 1);
        let need = q as usize + 1;
        if self.out.len() < need {
            self.out.resize_with(need, Vec::new);
            self.inc.resize_with(need, Vec::new);
        }
        Ok(())
    }

    /// Removes `q` with its incident transitions and labels. Returns the
    /// removed transitions.
    pub fn remove_state(&mut self, q: StateId) -> Result<Vec<Triple>> {
        self.check_state(q)?;
        let mut removed = Vec::new();
        let out = std::mem::take(&mut self.out[q as usize]);
        for &(u, r) in &out {
            removed.push((q, u, r));
            if r != q {
                let inc = &mut self.inc[r as usize];
                let i = inc.iter().position(|&e| e == (q, u)).expect("index in sync");
                inc.swap_remove(i);
            }
        }
        let inc = std::mem::take(&mut self.inc[q as usize]);
        for &(p, u) in &inc {
            if p != q {
                removed.push((p, u, q));
                let out = &mut self.out[p as usize];
                let i = out.binary_search(&(u, q)).expect("index in sync");
                out.remove(i);
            }
        }
        self.n_transitions -= removed.len();
        self.live.remove(q);
        for set in self.labels.values_mut() {
            set.remove(q);
        }
        removed.sort_unstable();
        Ok(removed)
    }

    fn check_state(&self, q: StateId) -> Result<()> {
        if self.live.contains(q) {
            Ok(())
        } else {
            Err(Error::UnknownState(q))
        }
    }

    fn check_action(&self, u: ActionId) -> Result<()> {
        if (u as usize) < self.n_actions {
            Ok(())
        } else {
            Err(Error::UnknownAction(u, self.n_actions))
        }
    }

    /// Returns whether the transition was new.
    pub fn add_transition(&mut self, q: StateId, u: ActionId, r: StateId) -> Result<bool> {
        self.check_state(q)?;
        self.check_state(r)?;
        self.check_action(u)?;
        let out = &mut self.out[q as usize];
        match out.binary_search(&(u, r)) {
            Ok(_) => Ok(false),
            Err(i) => {
                out.insert(i, (u, r));
                self.inc[r as usize].push((q, u));
                self.n_transitions += 1;
                Ok(true)
            }
        }
    }

    /// Returns whether the transition was present.
    pub fn remove_transition(&mut self, q: StateId, u: ActionId, r: StateId) -> Result<bool> {
        self.check_state(q)?;
        self.check_state(r)?;
        self.check_action(u)?;
        let out = &mut self.out[q as usize];
        match out.binary_search(&(u, r)) {
            Err(_) => Ok(false),
            Ok(i) => {
                out.remove(i);
                let inc = &mut self.inc[r as usize];
                let j = inc.iter().position(|&e| e == (q, u)).expect("index in sync");
                inc.swap_remove(j);
                self.n_transitions -= 1;
                Ok(true)
            }
        }
    }

    pub fn has_transition(&self, q: StateId, u: ActionId, r: StateId) -> bool {
        self.live.contains(q) && self.out[q as usize].binary_search(&(u, r)).is_ok()
    }

    /// All transitions in `(q, u, q')` order.
    pub fn transitions(&self) -> impl Iterator<Item = Triple> + '_ {
        self.live
            .iter()
            .flat_map(move |q| self.out[q as usize].iter().map(move |&(u, r)| (q, u, r)))
    }

    /// Outgoing `(u, q')` pairs of `q`, sorted.
    pub fn out_edges(&self, q: StateId) -> &[(ActionId, StateId)] {
        self.out.get(q as usize).map_or(&[], |v| v.as_slice())
    }

    /// Incoming `(p, u)` pairs of `q`, unordered.
    pub fn in_edges(&self, q: StateId) -> &[(StateId, ActionId)] {
        self.inc.get(q as usize).map_or(&[], |v| v.as_slice())
    }

    /// Successor set of `(q, u)`, sorted.
    pub fn successors(&self, q: StateId, u: ActionId) -> impl Iterator<Item = StateId> + '_ {
        let out = self.out_edges(q);
        let start = out.partition_point(|&(a, _)| a < u);
        out[start..].iter().take_while(move |&&(a, _)| a == u).map(|&(_, r)| r)
    }

    /// Actions with at least one successor from `q`, ascending.
    pub fn enabled_actions(&self, q: StateId) -> Vec<ActionId> {
        let mut acts: Vec<ActionId> = self.out_edges(q).iter().map(|&(u, _)| u).collect();
        acts.dedup();
        acts
    }

    /// Groups the outgoing transitions of `q` by action.
    pub fn action_groups(&self, q: StateId) -> impl Iterator<Item = (ActionId, &[(ActionId, StateId)])> + '_ {
        self.out_edges(q)
            .chunk_by(|a, b| a.0 == b.0)
            .map(|run| (run[0].0, run))
    }

    pub fn set_label(&mut self, prop: &str, states: StateSet) {
        let states = states.intersection(&self.live);
        self.labels.insert(prop.to_string(), states);
    }

    pub fn add_label(&mut self, prop: &str, q: StateId) -> Result<()> {
        self.check_state(q)?;
        self.labels.entry(prop.to_string()).or_default().insert(q);
        Ok(())
    }

    pub fn label(&self, prop: &str) -> Option<&StateSet> {
        self.labels.get(prop)
    }

    pub fn propositions(&self) -> impl Iterator<Item = &str> + '_ {
        self.labels.keys().map(|s| s.as_str())
    }

    pub fn labels_of(&self, q: StateId) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, s)| s.contains(q))
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// Number of transition entries visited by predecessor computations.
    pub fn touches(&self) -> u64 {
        self.touches.load(Ordering::Relaxed)
    }

    pub fn reset_touches(&self) {
        self.touches.store(0, Ordering::Relaxed);
    }

    /// Predecessor operator with enabled-action semantics.
    pub fn pre(&self, x: &StateSet, quant: Quant) -> StateSet {
        self.list_pre(x, quant, PreMode::Enabled)
    }

    /// `q` is in the result iff (♯₁ u)(♯₂ q' ∈ succ(q, u)) q' ∈ X.
    ///
    /// Only predecessors of `X` can qualify, so they are collected first
    /// from the incoming index; each candidate's outgoing runs are then
    /// scanned once.
    pub fn list_pre(&self, x: &StateSet, quant: Quant, mode: PreMode) -> StateSet {
        let mut touched = 0u64;
        let mut result = StateSet::with_capacity(self.next_id as usize);
        let strict_forall = mode == PreMode::Strict && quant.0 == Quantifier::Forall;
        if strict_forall && self.n_actions == 0 {
            return self.live.clone();
        }
        let mut candidates = StateSet::with_capacity(self.next_id as usize);
        for r in x.iter().filter(|&r| self.live.contains(r)) {
            for &(p, _) in &self.inc[r as usize] {
                touched += 1;
                candidates.insert(p);
            }
        }
        for p in candidates.iter() {
            let mut groups = 0usize;
            let mut any = false;
            let mut all = true;
            for (_, run) in self.action_groups(p) {
                touched += run.len() as u64;
                groups += 1;
                let hits = run.iter().filter(|&&(_, r)| x.contains(r)).count();
                let ok = match quant.1 {
                    Quantifier::Exists => hits > 0,
                    Quantifier::Forall => hits == run.len(),
                };
                any |= ok;
                all &= ok;
            }
            let member = match quant.0 {
                Quantifier::Exists => any,
                Quantifier::Forall => all && (!strict_forall || groups == self.n_actions),
            };
            if member {
                result.insert(p);
            }
        }
        self.touches.fetch_add(touched, Ordering::Relaxed);
        result
    }

    /// Text form: a `states:` line, an `actions:` line, one `q u q'` line per
    /// transition and one `label P:` line per proposition. `#` starts a
    /// comment.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let states: Vec<String> = self.states().map(|q| q.to_string()).collect();
        writeln!(s, "states: {}", states.join(" ")).unwrap();
        writeln!(s, "actions: {}", self.n_actions).unwrap();
        for (q, u, r) in self.transitions() {
            writeln!(s, "{q} {u} {r}").unwrap();
        }
        for (prop, set) in &self.labels {
            let members: Vec<String> = set.iter().map(|q| q.to_string()).collect();
            writeln!(s, "label {prop}: {}", members.join(" ")).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Fts> {
        let err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut fts: Option<Fts> = None;
        let mut states: Vec<StateId> = Vec::new();
        let mut pending: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let n = i + 1;
            if let Some(rest) = line.strip_prefix("states:") {
                states = parse_ids(rest).map_err(|m| err(n, m))?;
            } else if let Some(rest) = line.strip_prefix("actions:") {
                let k = rest.trim().parse::<usize>().map_err(|e| err(n, format!("bad action count: {e}")))?;
                fts = Some(Fts::new(k));
            } else {
                pending.push((n, line));
            }
        }
        let mut fts = fts.ok_or_else(|| err(0, "missing `actions:` line".into()))?;
        for q in states {
            fts.insert_state(q)?;
        }
        for (n, line) in pending {
            if let Some(rest) = line.strip_prefix("label") {
                let (name, members) = rest
                    .split_once(':')
                    .ok_or_else(|| err(n, "label line needs `:`".into()))?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(err(n, "empty proposition name".into()));
                }
                let ids = parse_ids(members).map_err(|m| err(n, m))?;
                fts.labels.entry(name.to_string()).or_default();
                for q in ids {
                    fts.add_label(name, q).map_err(|e| err(n, e.to_string()))?;
                }
            } else {
                let ids = parse_ids(line).map_err(|m| err(n, m))?;
                let [q, u, r] = ids[..] else {
                    return Err(err(n, format!("expected `q u q'`, got `{line}`")));
                };
                fts.add_transition(q, u, r).map_err(|e| err(n, e.to_string()))?;
            }
        }
        Ok(fts)
    }
}

fn parse_ids(s: &str) -> std::result::Result<Vec<u32>, String> {
    s.split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|e| format!("bad id `{t}`: {e}")))
        .collect()
}

impl FromStr for Fts {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fts::parse(s)
    }
}

impl fmt::Display for Fts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
