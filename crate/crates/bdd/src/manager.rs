use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::handle::Bdd;
use crate::reorder::{self, ReorderMethod, ReorderReport};
use crate::{BddError, BoolOp, Quantifier};

pub(crate) type NodeId = u32;

pub(crate) const ZERO: NodeId = 0;
pub(crate) const ONE: NodeId = 1;

const TERMINAL_VAR: u32 = u32::MAX;
const FREE_VAR: u32 = u32::MAX - 1;
const TERMINAL_LEVEL: u32 = u32::MAX;

/// A declared BDD variable. Ids are dense and never reused; the position of a
/// variable in the evaluation order is tracked separately and changes under
/// reordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}", self.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BddConfig {
    /// Allocated-node count above which a sweep runs before the next
    /// top-level operation. Doubles whenever a sweep frees less than a
    /// quarter of the store.
    pub gc_threshold: usize,
    /// The operation cache is flushed once it holds this many entries.
    pub cache_limit: usize,
}

impl Default for BddConfig {
    fn default() -> Self {
        BddConfig {
            gc_threshold: 1 << 18,
            cache_limit: 1 << 21,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BddStats {
    pub allocated_nodes: usize,
    pub peak_nodes: usize,
    pub cache_entries: usize,
    pub cache_lookups: u64,
    pub cache_hits: u64,
    pub gc_runs: u64,
    pub reorderings: u64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub var: u32,
    pub lo: NodeId,
    pub hi: NodeId,
    pub rc: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
enum Tag {
    And,
    Or,
    Xor,
    Not,
    Ite,
    Exists,
    Forall,
    AndExists,
    Cofactor,
}

type CacheKey = (Tag, NodeId, NodeId, NodeId);

pub(crate) struct Inner {
    pub nodes: Vec<Node>,
    free: Vec<NodeId>,
    /// One unique table per variable, keyed by (lo, hi).
    pub unique: Vec<FxHashMap<(NodeId, NodeId), NodeId>>,
    pub var_to_level: Vec<u32>,
    pub level_to_var: Vec<u32>,
    cache: FxHashMap<CacheKey, NodeId>,
    config: BddConfig,
    gc_threshold: usize,
    pub stats: BddStats,
}

impl Inner {
    fn new(config: BddConfig) -> Self {
        let terminal = |_| Node {
            var: TERMINAL_VAR,
            lo: ZERO,
            hi: ZERO,
            rc: 0,
        };
        Inner {
            nodes: vec![terminal(0), terminal(1)],
            free: Vec::new(),
            unique: Vec::new(),
            var_to_level: Vec::new(),
            level_to_var: Vec::new(),
            cache: FxHashMap::default(),
            gc_threshold: config.gc_threshold,
            config,
            stats: BddStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_to_level.len()
    }

    /// Allocated non-terminal nodes, dead or alive.
    pub fn allocated(&self) -> usize {
        self.nodes.len() - self.free.len() - 2
    }

    #[inline]
    pub fn is_terminal(n: NodeId) -> bool {
        n <= ONE
    }

    #[inline]
    pub fn level(&self, n: NodeId) -> u32 {
        let v = self.nodes[n as usize].var;
        if v == TERMINAL_VAR {
            TERMINAL_LEVEL
        } else {
            self.var_to_level[v as usize]
        }
    }

    #[inline]
    pub fn node(&self, n: NodeId) -> Node {
        self.nodes[n as usize]
    }

    pub fn new_var(&mut self) -> VarId {
        let id = self.num_vars() as u32;
        self.var_to_level.push(id);
        self.level_to_var.push(id);
        self.unique.push(FxHashMap::default());
        VarId(id)
    }

    pub fn check_var(&self, v: VarId) -> Result<(), BddError> {
        if v.index() < self.num_vars() {
            Ok(())
        } else {
            Err(BddError::UnknownVar(v.0))
        }
    }

    #[inline]
    pub fn inc(&mut self, n: NodeId) {
        if !Self::is_terminal(n) {
            self.nodes[n as usize].rc += 1;
        }
    }

    /// Drops one reference. The node stays in the store until the next sweep.
    #[inline]
    pub fn dec(&mut self, n: NodeId) {
        if !Self::is_terminal(n) {
            let node = &mut self.nodes[n as usize];
            debug_assert!(node.rc > 0, "reference count underflow");
            node.rc -= 1;
        }
    }

    /// Drops one reference and frees the node (and, transitively, its
    /// children) immediately when it becomes unreferenced. Only valid while
    /// the operation cache is empty, i.e. during reordering.
    pub fn dec_free(&mut self, n: NodeId) {
        let mut stack = vec![n];
        while let Some(n) = stack.pop() {
            if Self::is_terminal(n) {
                continue;
            }
            let node = &mut self.nodes[n as usize];
            node.rc -= 1;
            if node.rc == 0 {
                let Node { var, lo, hi, .. } = *node;
                self.unique[var as usize].remove(&(lo, hi));
                self.release(n);
                stack.push(lo);
                stack.push(hi);
            }
        }
    }

    fn release(&mut self, n: NodeId) {
        self.nodes[n as usize].var = FREE_VAR;
        self.free.push(n);
    }

    /// Finds or creates the node `(var, lo, hi)`; returns `lo` when both
    /// children coincide.
    pub fn mk(&mut self, var: u32, lo: NodeId, hi: NodeId) -> NodeId {
        if lo == hi {
            return lo;
        }
        debug_assert!(self.var_to_level[var as usize] < self.level(lo));
        debug_assert!(self.var_to_level[var as usize] < self.level(hi));
        if let Some(&n) = self.unique[var as usize].get(&(lo, hi)) {
            return n;
        }
        let node = Node { var, lo, hi, rc: 0 };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as NodeId
            }
        };
        self.inc(lo);
        self.inc(hi);
        self.unique[var as usize].insert((lo, hi), id);
        let alloc = self.allocated();
        if alloc > self.stats.peak_nodes {
            self.stats.peak_nodes = alloc;
        }
        id
    }

    pub fn literal(&mut self, v: VarId, positive: bool) -> NodeId {
        if positive {
            self.mk(v.0, ZERO, ONE)
        } else {
            self.mk(v.0, ONE, ZERO)
        }
    }

    /// Positive cube over `vars`, used as the quantification set.
    pub fn cube(&mut self, vars: &[VarId]) -> NodeId {
        let mut sorted: Vec<u32> = vars.iter().map(|v| v.0).collect();
        sorted.sort_unstable_by_key(|&v| std::cmp::Reverse(self.var_to_level[v as usize]));
        sorted.dedup();
        let mut acc = ONE;
        for v in sorted {
            acc = self.mk(v, ZERO, acc);
        }
        acc
    }

    fn cache_get(&mut self, key: &CacheKey) -> Option<NodeId> {
        self.stats.cache_lookups += 1;
        let r = self.cache.get(key).copied();
        if r.is_some() {
            self.stats.cache_hits += 1;
        }
        r
    }

    fn cache_put(&mut self, key: CacheKey, value: NodeId) {
        if self.cache.len() >= self.config.cache_limit {
            self.cache.clear();
        }
        self.cache.insert(key, value);
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    #[inline]
    fn cofactors_at(&self, n: NodeId, level: u32) -> (NodeId, NodeId) {
        if self.level(n) == level {
            let node = self.node(n);
            (node.lo, node.hi)
        } else {
            (n, n)
        }
    }

    pub fn apply(&mut self, op: BoolOp, f: NodeId, g: NodeId) -> NodeId {
        match op {
            BoolOp::And => {
                if f == ZERO || g == ZERO {
                    return ZERO;
                }
                if f == ONE || f == g {
                    return g;
                }
                if g == ONE {
                    return f;
                }
            }
            BoolOp::Or => {
                if f == ONE || g == ONE {
                    return ONE;
                }
                if f == ZERO || f == g {
                    return g;
                }
                if g == ZERO {
                    return f;
                }
            }
            BoolOp::Xor => {
                if f == g {
                    return ZERO;
                }
                if f == ZERO {
                    return g;
                }
                if g == ZERO {
                    return f;
                }
                if f == ONE {
                    return self.not(g);
                }
                if g == ONE {
                    return self.not(f);
                }
            }
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        let tag = match op {
            BoolOp::And => Tag::And,
            BoolOp::Or => Tag::Or,
            BoolOp::Xor => Tag::Xor,
        };
        let key = (tag, f, g, 0);
        if let Some(r) = self.cache_get(&key) {
            return r;
        }
        let top = self.level(f).min(self.level(g));
        let var = self.level_to_var[top as usize];
        let (f0, f1) = self.cofactors_at(f, top);
        let (g0, g1) = self.cofactors_at(g, top);
        let r0 = self.apply(op, f0, g0);
        let r1 = self.apply(op, f1, g1);
        let r = self.mk(var, r0, r1);
        self.cache_put(key, r);
        r
    }

    pub fn not(&mut self, f: NodeId) -> NodeId {
        match f {
            ZERO => return ONE,
            ONE => return ZERO,
            _ => {}
        }
        let key = (Tag::Not, f, 0, 0);
        if let Some(r) = self.cache_get(&key) {
            return r;
        }
        let node = self.node(f);
        let r0 = self.not(node.lo);
        let r1 = self.not(node.hi);
        let r = self.mk(node.var, r0, r1);
        self.cache_put(key, r);
        r
    }

    pub fn ite(&mut self, f: NodeId, g: NodeId, h: NodeId) -> NodeId {
        if f == ONE || g == h {
            return g;
        }
        if f == ZERO {
            return h;
        }
        if g == ONE && h == ZERO {
            return f;
        }
        if g == ZERO && h == ONE {
            return self.not(f);
        }
        if g == ONE {
            return self.apply(BoolOp::Or, f, h);
        }
        if h == ZERO {
            return self.apply(BoolOp::And, f, g);
        }
        let key = (Tag::Ite, f, g, h);
        if let Some(r) = self.cache_get(&key) {
            return r;
        }
        let top = self.level(f).min(self.level(g)).min(self.level(h));
        let var = self.level_to_var[top as usize];
        let (f0, f1) = self.cofactors_at(f, top);
        let (g0, g1) = self.cofactors_at(g, top);
        let (h0, h1) = self.cofactors_at(h, top);
        let r0 = self.ite(f0, g0, h0);
        let r1 = self.ite(f1, g1, h1);
        let r = self.mk(var, r0, r1);
        self.cache_put(key, r);
        r
    }

    /// Skips cube variables that sit above `level`.
    #[inline]
    fn advance_cube(&self, mut cube: NodeId, level: u32) -> NodeId {
        while cube != ONE && self.level(cube) < level {
            cube = self.node(cube).hi;
        }
        cube
    }

    pub fn quantify(&mut self, kind: Quantifier, f: NodeId, cube: NodeId) -> NodeId {
        if Self::is_terminal(f) || cube == ONE {
            return f;
        }
        let lf = self.level(f);
        let cube = self.advance_cube(cube, lf);
        if cube == ONE {
            return f;
        }
        let tag = match kind {
            Quantifier::Exists => Tag::Exists,
            Quantifier::Forall => Tag::Forall,
        };
        let key = (tag, f, cube, 0);
        if let Some(r) = self.cache_get(&key) {
            return r;
        }
        let node = self.node(f);
        let r = if self.level(cube) == lf {
            let rest = self.node(cube).hi;
            let r0 = self.quantify(kind, node.lo, rest);
            match (kind, r0) {
                (Quantifier::Exists, ONE) => ONE,
                (Quantifier::Forall, ZERO) => ZERO,
                _ => {
                    let r1 = self.quantify(kind, node.hi, rest);
                    let op = match kind {
                        Quantifier::Exists => BoolOp::Or,
                        Quantifier::Forall => BoolOp::And,
                    };
                    self.apply(op, r0, r1)
                }
            }
        } else {
            let r0 = self.quantify(kind, node.lo, cube);
            let r1 = self.quantify(kind, node.hi, cube);
            self.mk(node.var, r0, r1)
        };
        self.cache_put(key, r);
        r
    }

    /// `exists cube. f & g` without building the conjunction.
    pub fn and_exists(&mut self, f: NodeId, g: NodeId, cube: NodeId) -> NodeId {
        if f == ZERO || g == ZERO {
            return ZERO;
        }
        if f == ONE && g == ONE {
            return ONE;
        }
        if cube == ONE {
            return self.apply(BoolOp::And, f, g);
        }
        if f == ONE || f == g {
            return self.quantify(Quantifier::Exists, g, cube);
        }
        if g == ONE {
            return self.quantify(Quantifier::Exists, f, cube);
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        let top = self.level(f).min(self.level(g));
        let cube = self.advance_cube(cube, top);
        if cube == ONE {
            return self.apply(BoolOp::And, f, g);
        }
        let key = (Tag::AndExists, f, g, cube);
        if let Some(r) = self.cache_get(&key) {
            return r;
        }
        let var = self.level_to_var[top as usize];
        let (f0, f1) = self.cofactors_at(f, top);
        let (g0, g1) = self.cofactors_at(g, top);
        let r = if self.level(cube) == top {
            let rest = self.node(cube).hi;
            let r0 = self.and_exists(f0, g0, rest);
            if r0 == ONE {
                ONE
            } else {
                let r1 = self.and_exists(f1, g1, rest);
                self.apply(BoolOp::Or, r0, r1)
            }
        } else {
            let r0 = self.and_exists(f0, g0, cube);
            let r1 = self.and_exists(f1, g1, cube);
            self.mk(var, r0, r1)
        };
        self.cache_put(key, r);
        r
    }

    pub fn cofactor(&mut self, f: NodeId, v: VarId, value: bool) -> NodeId {
        let lv = self.var_to_level[v.index()];
        let lf = self.level(f);
        if lf > lv {
            return f;
        }
        let node = self.node(f);
        if lf == lv {
            return if value { node.hi } else { node.lo };
        }
        let key = (Tag::Cofactor, f, v.0, value as NodeId);
        if let Some(r) = self.cache_get(&key) {
            return r;
        }
        let r0 = self.cofactor(node.lo, v, value);
        let r1 = self.cofactor(node.hi, v, value);
        let r = self.mk(node.var, r0, r1);
        self.cache_put(key, r);
        r
    }

    pub fn rename(
        &mut self,
        f: NodeId,
        map: &FxHashMap<u32, u32>,
        memo: &mut FxHashMap<NodeId, NodeId>,
    ) -> NodeId {
        if Self::is_terminal(f) {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let node = self.node(f);
        let r0 = self.rename(node.lo, map, memo);
        let r1 = self.rename(node.hi, map, memo);
        let target = map.get(&node.var).copied().unwrap_or(node.var);
        let tl = self.var_to_level[target as usize];
        let r = if tl < self.level(r0) && tl < self.level(r1) {
            self.mk(target, r0, r1)
        } else {
            let lit = self.mk(target, ZERO, ONE);
            self.ite(lit, r1, r0)
        };
        memo.insert(f, r);
        r
    }

    pub fn node_count(&self, f: NodeId) -> usize {
        let mut seen = FxHashSet::default();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if !Self::is_terminal(n) {
                let node = self.node(n);
                stack.push(node.lo);
                stack.push(node.hi);
            }
        }
        seen.len()
    }

    /// Shared node count of several roots, terminals included.
    pub fn shared_count(&self, roots: &[NodeId]) -> usize {
        let mut seen = FxHashSet::default();
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if !Self::is_terminal(n) {
                let node = self.node(n);
                stack.push(node.lo);
                stack.push(node.hi);
            }
        }
        seen.len()
    }

    pub fn support(&self, f: NodeId) -> Vec<VarId> {
        let mut seen = FxHashSet::default();
        let mut vars = FxHashSet::default();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if Self::is_terminal(n) || !seen.insert(n) {
                continue;
            }
            let node = self.node(n);
            vars.insert(node.var);
            stack.push(node.lo);
            stack.push(node.hi);
        }
        let mut out: Vec<VarId> = vars.into_iter().map(VarId).collect();
        out.sort_by_key(|v| self.var_to_level[v.index()]);
        out
    }

    pub fn eval(&self, mut f: NodeId, assignment: &dyn Fn(VarId) -> bool) -> bool {
        while !Self::is_terminal(f) {
            let node = self.node(f);
            f = if assignment(VarId(node.var)) {
                node.hi
            } else {
                node.lo
            };
        }
        f == ONE
    }

    /// Frees every node with a zero reference count and flushes the cache.
    pub fn gc(&mut self) {
        let mut stack: Vec<NodeId> = (2..self.nodes.len() as NodeId)
            .filter(|&n| {
                let node = self.nodes[n as usize];
                node.var != FREE_VAR && node.rc == 0
            })
            .collect();
        while let Some(n) = stack.pop() {
            let node = self.nodes[n as usize];
            if node.var == FREE_VAR || node.rc != 0 {
                continue;
            }
            self.unique[node.var as usize].remove(&(node.lo, node.hi));
            self.release(n);
            for c in [node.lo, node.hi] {
                if !Self::is_terminal(c) {
                    let child = &mut self.nodes[c as usize];
                    child.rc -= 1;
                    if child.rc == 0 {
                        stack.push(c);
                    }
                }
            }
        }
        self.cache.clear();
        self.stats.gc_runs += 1;
    }

    pub fn maybe_gc(&mut self) {
        if self.allocated() > self.gc_threshold {
            self.gc();
            if self.allocated() * 4 > self.gc_threshold * 3 {
                self.gc_threshold *= 2;
            }
        }
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        let mut in_tables = 0usize;
        for (var, table) in self.unique.iter().enumerate() {
            for (&(lo, hi), &n) in table {
                in_tables += 1;
                let node = self.nodes[n as usize];
                if node.var != var as u32 {
                    return Err(format!("node {n} filed under z{var} but labelled z{}", node.var));
                }
                if (node.lo, node.hi) != (lo, hi) {
                    return Err(format!("node {n} key does not match its children"));
                }
                if lo == hi {
                    return Err(format!("node {n} is redundant (lo == hi)"));
                }
                let l = self.level(n);
                if l >= self.level(lo) || l >= self.level(hi) {
                    return Err(format!("node {n} violates the variable order"));
                }
                for c in [lo, hi] {
                    if self.nodes[c as usize].var == FREE_VAR {
                        return Err(format!("node {n} points at freed node {c}"));
                    }
                }
            }
        }
        if in_tables != self.allocated() {
            return Err(format!(
                "{} allocated nodes but {} unique-table entries",
                self.allocated(),
                in_tables
            ));
        }
        for (level, &var) in self.level_to_var.iter().enumerate() {
            if self.var_to_level[var as usize] != level as u32 {
                return Err(format!("order maps are not inverse at level {level}"));
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> BddStats {
        BddStats {
            allocated_nodes: self.allocated(),
            cache_entries: self.cache.len(),
            ..self.stats
        }
    }
}

/// Shared handle to a BDD node store. Cloning the manager clones the handle,
/// not the store.
#[derive(Clone)]
pub struct BddManager {
    pub(crate) inner: Rc<RefCell<Inner>>,
}

impl Default for BddManager {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for BddManager {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.inner.borrow();
        f.debug_struct("BddManager")
            .field("vars", &inner.num_vars())
            .field("allocated", &inner.allocated())
            .finish()
    }
}

impl BddManager {
    pub fn new() -> Self {
        Self::with_config(BddConfig::default())
    }

    pub fn with_config(config: BddConfig) -> Self {
        BddManager {
            inner: Rc::new(RefCell::new(Inner::new(config))),
        }
    }

    pub(crate) fn wrap(&self, root: NodeId) -> Bdd {
        self.inner.borrow_mut().inc(root);
        Bdd::from_parts(self.inner.clone(), root)
    }

    pub(crate) fn owns(&self, f: &Bdd) -> bool {
        Rc::ptr_eq(&self.inner, f.inner())
    }

    pub fn same_as(&self, other: &BddManager) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    /// Declares a fresh variable at the bottom of the current order.
    pub fn new_var(&self) -> VarId {
        self.inner.borrow_mut().new_var()
    }

    pub fn num_vars(&self) -> usize {
        self.inner.borrow().num_vars()
    }

    /// Variables listed from the top of the order to the bottom.
    pub fn order(&self) -> Vec<VarId> {
        self.inner
            .borrow()
            .level_to_var
            .iter()
            .map(|&v| VarId(v))
            .collect()
    }

    pub fn level_of(&self, v: VarId) -> usize {
        self.inner.borrow().var_to_level[v.index()] as usize
    }

    pub fn constant(&self, value: bool) -> Bdd {
        self.wrap(if value { ONE } else { ZERO })
    }

    pub fn zero(&self) -> Bdd {
        self.constant(false)
    }

    pub fn one(&self) -> Bdd {
        self.constant(true)
    }

    /// The projection function of `v`. Panics on an undeclared variable.
    pub fn var(&self, v: VarId) -> Bdd {
        self.literal(v, true)
    }

    pub fn nvar(&self, v: VarId) -> Bdd {
        self.literal(v, false)
    }

    pub fn literal(&self, v: VarId, positive: bool) -> Bdd {
        let root = {
            let mut m = self.inner.borrow_mut();
            if let Err(e) = m.check_var(v) {
                panic!("{e}");
            }
            m.literal(v, positive)
        };
        self.wrap(root)
    }

    /// Conjunction of literals: `bits[i]` fixes `vars[i]`.
    pub fn minterm(&self, vars: &[VarId], bits: &[bool]) -> Bdd {
        assert_eq!(vars.len(), bits.len(), "minterm width mismatch");
        let root = {
            let mut m = self.inner.borrow_mut();
            m.maybe_gc();
            let mut lits: Vec<(u32, bool)> = vars.iter().map(|v| v.0).zip(bits.iter().copied()).collect();
            lits.sort_unstable_by_key(|&(v, _)| std::cmp::Reverse(m.var_to_level[v as usize]));
            assert!(lits.windows(2).all(|w| w[0].0 != w[1].0), "minterm repeats a variable");
            let mut acc = ONE;
            for (v, b) in lits {
                acc = if b { m.mk(v, ZERO, acc) } else { m.mk(v, acc, ZERO) };
            }
            acc
        };
        self.wrap(root)
    }

    pub fn apply(&self, op: BoolOp, a: &Bdd, b: &Bdd) -> Result<Bdd, BddError> {
        if !self.owns(a) || !self.owns(b) {
            return Err(BddError::ManagerMismatch);
        }
        let root = {
            let mut m = self.inner.borrow_mut();
            m.maybe_gc();
            m.apply(op, a.root(), b.root())
        };
        Ok(self.wrap(root))
    }

    pub fn negate(&self, a: &Bdd) -> Result<Bdd, BddError> {
        if !self.owns(a) {
            return Err(BddError::ManagerMismatch);
        }
        Ok(a.not())
    }

    pub fn quantify(&self, kind: Quantifier, vars: &[VarId], a: &Bdd) -> Result<Bdd, BddError> {
        if !self.owns(a) {
            return Err(BddError::ManagerMismatch);
        }
        {
            let m = self.inner.borrow();
            for &v in vars {
                m.check_var(v)?;
            }
        }
        Ok(a.quantify(kind, vars))
    }

    pub fn cofactor(&self, a: &Bdd, v: VarId, value: bool) -> Result<Bdd, BddError> {
        if !self.owns(a) {
            return Err(BddError::ManagerMismatch);
        }
        self.inner.borrow().check_var(v)?;
        Ok(a.cofactor(v, value))
    }

    /// Runs a sweep now.
    pub fn gc(&self) {
        self.inner.borrow_mut().gc();
    }

    /// Nodes currently allocated, including unreferenced ones awaiting the
    /// next sweep (terminals excluded).
    pub fn total_nodes(&self) -> usize {
        self.inner.borrow().allocated()
    }

    /// Sweeps, then reports the number of nodes reachable from live handles.
    pub fn live_nodes(&self) -> usize {
        let mut m = self.inner.borrow_mut();
        m.gc();
        m.allocated()
    }

    pub fn stats(&self) -> BddStats {
        self.inner.borrow().stats()
    }

    /// Shared node count of a group of functions, terminals included.
    pub fn shared_node_count(&self, roots: &[&Bdd]) -> usize {
        let ids: Vec<NodeId> = roots.iter().map(|b| b.root()).collect();
        self.inner.borrow().shared_count(&ids)
    }

    pub fn reorder(&self, method: &ReorderMethod) -> ReorderReport {
        let mut m = self.inner.borrow_mut();
        reorder::run(&mut m, method)
    }

    /// Moves variables into the given top-to-bottom order. `order` must be a
    /// permutation of all declared variables.
    pub fn set_order(&self, order: &[VarId]) {
        let mut m = self.inner.borrow_mut();
        assert_eq!(order.len(), m.num_vars(), "order must list every variable");
        let mut seen = vec![false; order.len()];
        for v in order {
            assert!(!std::mem::replace(&mut seen[v.index()], true), "duplicate {v} in order");
        }
        m.gc();
        reorder::set_order(&mut m, &order.iter().map(|v| v.0).collect::<Vec<_>>());
    }

    /// Verifies reduction, ordering and unique-table consistency of the
    /// whole store.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.inner.borrow().check_invariants()
    }
}
