//! BDD view of a transition system: the relation `B_T` over
//! `(state, action, next state)` variables plus the domains `B_Q`, `B_U`.

use std::cell::RefCell;

use splitsynth_bdd::{Bdd, BddManager, ReorderMethod, ReorderReport, VarId};

use crate::encoding::{
    ceil_log2, disjoin, log_encode, set_to_bdd, state_to_bdd, BitVec, Change, GroupRole, StateEncoding, VarGroup,
};
use crate::error::{Error, Result};
use crate::fts::{Fts, PreMode, Quant, Triple};
use crate::{StateId, StateSet};

#[derive(Debug)]
pub struct SymbolicFts {
    mgr: BddManager,
    enc: StateEncoding,
    from: VarGroup,
    to: VarGroup,
    act: VarGroup,
    n_actions: usize,
    bt: Bdd,
    bq: Bdd,
    bu: Bdd,
    /// `∃Q'. B_T` and `∃U ∃Q'. B_T`, dropped on every edit.
    enabled: RefCell<Option<(Bdd, Bdd)>>,
    n_widenings: usize,
}

impl SymbolicFts {
    /// An empty relation whose state groups are sized for `enc`. Variables
    /// are created interleaved (`z_q1, z_q'1, z_q2, z_q'2, ...`), followed by
    /// the action variables.
    pub fn new(mgr: &BddManager, enc: StateEncoding, n_actions: usize) -> Result<Self> {
        let width = enc.width();
        Self::with_layout(mgr, enc, n_actions, width)
    }

    /// Like [`SymbolicFts::new`], but creates the state variables in the
    /// order an incremental run starting at `initial_width` bits would have:
    /// the initial interleaved pairs, the action variables, then one pair per
    /// widening.
    pub fn with_layout(mgr: &BddManager, enc: StateEncoding, n_actions: usize, initial_width: usize) -> Result<Self> {
        let width = enc.width();
        let initial_width = initial_width.min(width);
        let pair = || (mgr.new_var(), mgr.new_var());
        let initial: Vec<(VarId, VarId)> = (0..initial_width).map(|_| pair()).collect();
        let act: Vec<VarId> = (0..ceil_log2(n_actions)).map(|_| mgr.new_var()).collect();
        let late: Vec<(VarId, VarId)> = (initial_width..width).map(|_| pair()).collect();
        // a log widening prepends a new most significant bit
        let pairs: Vec<(VarId, VarId)> = if enc.widens_in_front() {
            late.iter().rev().chain(&initial).copied().collect()
        } else {
            initial.iter().chain(&late).copied().collect()
        };
        let from = VarGroup::new(GroupRole::StateFrom, pairs.iter().map(|p| p.0).collect());
        let to = VarGroup::new(GroupRole::StateTo, pairs.iter().map(|p| p.1).collect());
        let act = VarGroup::new(GroupRole::Action, act);
        let mut terms = Vec::with_capacity(n_actions);
        for u in 0..n_actions {
            terms.push(state_to_bdd(mgr, &log_encode(u as u64 + 1, act.width())?, &act)?);
        }
        let bu = disjoin(mgr, terms);
        let bq = set_to_bdd(mgr, enc.states(), &enc, &from)?;
        Ok(SymbolicFts {
            mgr: mgr.clone(),
            enc,
            from,
            to,
            act,
            n_actions,
            bt: mgr.zero(),
            bq,
            bu,
            enabled: RefCell::new(None),
            n_widenings: late.len(),
        })
    }

    /// Encodes every state and transition of `fts` under `enc`, which must
    /// cover exactly the states of `fts`.
    pub fn from_fts(mgr: &BddManager, fts: &Fts, enc: StateEncoding) -> Result<Self> {
        let width = enc.width();
        Self::from_fts_with_layout(mgr, fts, enc, width)
    }

    pub fn from_fts_with_layout(mgr: &BddManager, fts: &Fts, enc: StateEncoding, initial_width: usize) -> Result<Self> {
        let mut sym = SymbolicFts::with_layout(mgr, enc, fts.n_actions(), initial_width)?;
        sym.add_transitions(fts.transitions())?;
        Ok(sym)
    }

    pub fn manager(&self) -> &BddManager {
        &self.mgr
    }

    pub fn encoding(&self) -> &StateEncoding {
        &self.enc
    }

    pub fn from_group(&self) -> &VarGroup {
        &self.from
    }

    pub fn to_group(&self) -> &VarGroup {
        &self.to
    }

    pub fn action_group(&self) -> &VarGroup {
        &self.act
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_widenings(&self) -> usize {
        self.n_widenings
    }

    pub fn relation(&self) -> &Bdd {
        &self.bt
    }

    pub fn state_domain(&self) -> &Bdd {
        &self.bq
    }

    pub fn action_domain(&self) -> &Bdd {
        &self.bu
    }

    /// Variables in use: `2n + m`.
    pub fn n_vars(&self) -> usize {
        self.from.width() + self.to.width() + self.act.width()
    }

    /// Distinct internal nodes shared by `B_T`, `B_Q` and `B_U`.
    pub fn bdd_nodes(&self) -> usize {
        let shared = self.mgr.shared_node_count(&[&self.bt, &self.bq, &self.bu]);
        shared.saturating_sub(2)
    }

    pub fn nodes_per_var(&self) -> f64 {
        match self.n_vars() {
            0 => 0.0,
            n => self.bdd_nodes() as f64 / n as f64,
        }
    }

    pub fn reorder(&self, method: &ReorderMethod) -> ReorderReport {
        self.enabled.borrow_mut().take();
        self.mgr.reorder(method)
    }

    fn touched(&mut self) {
        self.enabled.get_mut().take();
    }

    fn code(&self, q: StateId, group: &VarGroup) -> Result<Bdd> {
        state_to_bdd(&self.mgr, &self.enc.bits(q)?, group)
    }

    fn triple(&self, (q, u, r): Triple) -> Result<Bdd> {
        let mut vars = self.from.vars.clone();
        let mut bits = self.enc.bits(q)?.0;
        vars.extend_from_slice(&self.act.vars);
        if u as usize >= self.n_actions {
            return Err(Error::UnknownAction(u, self.n_actions));
        }
        bits.extend(log_encode(u as u64 + 1, self.act.width())?.0);
        vars.extend_from_slice(&self.to.vars);
        bits.extend(self.enc.bits(r)?.0);
        Ok(self.mgr.minterm(&vars, &bits))
    }

    pub fn add_transition(&mut self, t: Triple) -> Result<()> {
        let m = self.triple(t)?;
        self.bt = self.bt.or(&m);
        self.touched();
        Ok(())
    }

    pub fn add_transitions(&mut self, ts: impl IntoIterator<Item = Triple>) -> Result<()> {
        let mut terms = Vec::new();
        for t in ts {
            terms.push(self.triple(t)?);
        }
        if !terms.is_empty() {
            let new = disjoin(&self.mgr, terms);
            self.bt = self.bt.or(&new);
            self.touched();
        }
        Ok(())
    }

    pub fn remove_transition(&mut self, t: Triple) -> Result<()> {
        let m = self.triple(t)?;
        self.bt = self.bt.diff(&m);
        self.touched();
        Ok(())
    }

    /// Adds one state variable pair and pads every code with 0 there.
    fn widen(&mut self) {
        let f = self.mgr.new_var();
        let t = self.mgr.new_var();
        if self.enc.widens_in_front() {
            self.from.vars.insert(0, f);
            self.to.vars.insert(0, t);
        } else {
            self.from.vars.push(f);
            self.to.vars.push(t);
        }
        let nf = self.mgr.nvar(f);
        let nt = self.mgr.nvar(t);
        self.bt = self.bt.and(&nf).and(&nt);
        self.bq = self.bq.and(&nf);
        self.n_widenings += 1;
    }

    /// Drops the leading state bit, which is 0 in every code.
    fn shrink(&mut self) {
        let f = self.from.vars.remove(0);
        let t = self.to.vars.remove(0);
        self.bt = self.bt.cofactor(f, false).cofactor(t, false);
        self.bq = self.bq.cofactor(f, false);
    }

    fn apply_change(&mut self, change: &Change) -> Result<()> {
        if change.widened {
            self.widen();
        }
        if let Some((moved, old)) = &change.moved {
            // the groups still have the pre-shrink width here
            let mut new = self.enc.bits(*moved)?;
            if change.shrunk {
                new.0.insert(0, false);
            }
            self.recode(old, &new)?;
        }
        if change.shrunk {
            self.shrink();
        }
        Ok(())
    }

    /// Moves every transition and the domain entry from code `old` to `new`.
    fn recode(&mut self, old: &BitVec, new: &BitVec) -> Result<()> {
        let mgr = self.mgr.clone();
        let of = state_to_bdd(&mgr, old, &self.from)?;
        let ot = state_to_bdd(&mgr, old, &self.to)?;
        let nf = state_to_bdd(&mgr, new, &self.from)?;
        let nt = state_to_bdd(&mgr, new, &self.to)?;
        let retarget_to = |g: &Bdd| g.diff(&ot).or(&g.and_exists(&ot, &self.to.vars).and(&nt));
        let retarget_from = |g: &Bdd| g.diff(&of).or(&g.and_exists(&of, &self.from.vars).and(&nf));
        let outgoing = retarget_to(&self.bt.and_exists(&of, &self.from.vars));
        let incoming = retarget_from(&self.bt.and_exists(&ot, &self.to.vars));
        let rest = self.bt.diff(&of).diff(&ot);
        self.bt = rest.or(&nf.and(&outgoing)).or(&nt.and(&incoming));
        self.bq = self.bq.diff(&of).or(&nf);
        Ok(())
    }

    /// Removes `q` from the domain together with all incident transitions.
    fn detach(&mut self, q: StateId) -> Result<()> {
        let f = self.code(q, &self.from)?;
        let t = self.code(q, &self.to)?;
        self.bt = self.bt.diff(&f).diff(&t);
        self.bq = self.bq.diff(&f);
        self.touched();
        Ok(())
    }

    fn attach(&mut self, q: StateId) -> Result<()> {
        let f = self.code(q, &self.from)?;
        self.bq = self.bq.or(&f);
        self.touched();
        Ok(())
    }

    pub fn add_state(&mut self, q: StateId) -> Result<()> {
        let change = self.enc.insert(q)?;
        self.apply_change(&change)?;
        self.attach(q)
    }

    pub fn remove_state(&mut self, q: StateId) -> Result<()> {
        self.detach(q)?;
        let change = self.enc.remove(q)?;
        self.apply_change(&change)?;
        self.touched();
        Ok(())
    }

    /// Replaces `parent` by two children without transitions; the caller
    /// adds the children's transitions afterwards.
    pub fn split_state(&mut self, parent: StateId, first: StateId, second: StateId) -> Result<()> {
        self.detach(parent)?;
        let change = self.enc.split(parent, first, second)?;
        self.apply_change(&change)?;
        self.attach(first)?;
        self.attach(second)
    }

    /// Characteristic function of `states` over the current-state variables.
    pub fn set_bdd(&self, states: &StateSet) -> Result<Bdd> {
        set_to_bdd(&self.mgr, states.iter(), &self.enc, &self.from)
    }

    /// States encoded in `b`, a function of the current-state variables.
    pub fn decode(&self, b: &Bdd) -> Result<StateSet> {
        let restricted = b.and(&self.bq);
        let mut out = StateSet::new();
        for bits in restricted.sat_iter(&self.from.vars)? {
            if let Some(q) = self.enc.decode(&bits) {
                out.insert(q);
            }
        }
        Ok(out)
    }

    /// Number of domain states in `b`.
    pub fn count(&self, b: &Bdd) -> usize {
        b.and(&self.bq).sat_count(&self.from.vars).map(|c| c as usize).unwrap_or(0)
    }

    pub fn to_next(&self, b: &Bdd) -> Result<Bdd> {
        Ok(b.rename(&self.from.vars, &self.to.vars)?)
    }

    pub fn to_current(&self, b: &Bdd) -> Result<Bdd> {
        Ok(b.rename(&self.to.vars, &self.from.vars)?)
    }

    fn enabled(&self) -> (Bdd, Bdd) {
        let mut cache = self.enabled.borrow_mut();
        if cache.is_none() {
            let e = self.bt.exists(&self.to.vars);
            let any = e.exists(&self.act.vars);
            *cache = Some((e, any));
        }
        cache.clone().expect("just filled")
    }

    /// Predecessors of a set given over the current-state variables.
    pub fn pre(&self, x: &Bdd, quant: Quant, mode: PreMode) -> Result<Bdd> {
        let next = self.to_next(x)?;
        self.sym_pre(&next, quant, mode)
    }

    /// Predecessors of `x_next`, a function of the next-state variables.
    /// The result is over the current-state variables.
    pub fn sym_pre(&self, x_next: &Bdd, quant: Quant, mode: PreMode) -> Result<Bdd> {
        if x_next.support().iter().any(|v| !self.to.vars.contains(v)) {
            return Err(Error::SupportMismatch);
        }
        let (e, any_enabled) = self.enabled();
        let mut ua: Vec<VarId> = self.act.vars.clone();
        ua.extend_from_slice(&self.to.vars);
        // hit(q, u): some successor lies in X; bad(q, u): some successor does not
        let result = match (quant, mode) {
            (Quant::EE, _) => self.bt.and_exists(x_next, &ua),
            (Quant::EA, _) => {
                let bad = self.bt.and_exists(&x_next.not(), &self.to.vars);
                e.and_exists(&bad.not(), &self.act.vars)
            }
            (Quant::AE, PreMode::Enabled) => {
                let hit = self.bt.and_exists(x_next, &self.to.vars);
                let miss = e.and_exists(&hit.not(), &self.act.vars);
                self.bq.and(&any_enabled).diff(&miss)
            }
            (Quant::AA, PreMode::Enabled) => {
                let bad = self.bt.and_exists(&x_next.not(), &self.to.vars);
                let miss = e.and_exists(&bad, &self.act.vars);
                self.bq.and(&any_enabled).diff(&miss)
            }
            (Quant::AE, PreMode::Strict) => {
                let hit = self.bt.and_exists(x_next, &self.to.vars);
                self.bq.and(&self.bu.imp(&hit).forall(&self.act.vars))
            }
            (Quant::AA, PreMode::Strict) => {
                let bad = self.bt.and_exists(&x_next.not(), &self.to.vars);
                let good = e.diff(&bad);
                self.bq.and(&self.bu.imp(&good).forall(&self.act.vars))
            }
        };
        Ok(result)
    }

    /// Every encoded transition, decoded; used by consistency checks.
    pub fn transitions(&self) -> Result<Vec<Triple>> {
        let mut vars = self.from.vars.clone();
        vars.extend_from_slice(&self.act.vars);
        vars.extend_from_slice(&self.to.vars);
        let (nf, na) = (self.from.width(), self.act.width());
        let mut out = Vec::new();
        for bits in self.bt.sat_iter(&vars)? {
            let q = self.enc.decode(&bits[..nf]);
            let r = self.enc.decode(&bits[nf + na..]);
            let u = bits[nf..nf + na].iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
            match (q, r) {
                (Some(q), Some(r)) => out.push((q, u, r)),
                _ => return Err(Error::Config("relation holds an unassigned code".into())),
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}
