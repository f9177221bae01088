use std::cell::RefCell;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use rustc_hash::FxHashMap;

use crate::manager::{BddManager, Inner, NodeId, ONE, ZERO};
use crate::{BddError, BoolOp, Quantifier, VarId};

/// A boolean function owned by a [`BddManager`].
///
/// Handles are reference counted: cloning protects the root node, dropping
/// releases it. Equality is root identity, which by canonicity is semantic
/// equality for handles of the same manager.
pub struct Bdd {
    mgr: Rc<RefCell<Inner>>,
    root: NodeId,
}

impl Bdd {
    pub(crate) fn from_parts(mgr: Rc<RefCell<Inner>>, root: NodeId) -> Self {
        Bdd { mgr, root }
    }

    pub(crate) fn inner(&self) -> &Rc<RefCell<Inner>> {
        &self.mgr
    }

    pub(crate) fn root(&self) -> NodeId {
        self.root
    }

    /// Raw node index, stable until the node is freed.
    pub fn root_id(&self) -> u32 {
        self.root
    }

    pub fn manager(&self) -> BddManager {
        BddManager {
            inner: self.mgr.clone(),
        }
    }

    pub fn is_false(&self) -> bool {
        self.root == ZERO
    }

    pub fn is_true(&self) -> bool {
        self.root == ONE
    }

    fn same_manager(&self, other: &Bdd) {
        assert!(
            Rc::ptr_eq(&self.mgr, &other.mgr),
            "{}",
            BddError::ManagerMismatch
        );
    }

    fn unary(&self, f: impl FnOnce(&mut Inner) -> NodeId) -> Bdd {
        let root = {
            let mut m = self.mgr.borrow_mut();
            m.maybe_gc();
            let r = f(&mut m);
            m.inc(r);
            r
        };
        Bdd::from_parts(self.mgr.clone(), root)
    }

    fn binary(&self, op: BoolOp, other: &Bdd) -> Bdd {
        self.same_manager(other);
        let (a, b) = (self.root, other.root);
        self.unary(|m| m.apply(op, a, b))
    }

    /// Panics if `other` belongs to another manager; see
    /// [`BddManager::apply`] for the checked form.
    pub fn and(&self, other: &Bdd) -> Bdd {
        self.binary(BoolOp::And, other)
    }

    pub fn or(&self, other: &Bdd) -> Bdd {
        self.binary(BoolOp::Or, other)
    }

    pub fn xor(&self, other: &Bdd) -> Bdd {
        self.binary(BoolOp::Xor, other)
    }

    /// `self & !other`
    pub fn diff(&self, other: &Bdd) -> Bdd {
        self.same_manager(other);
        let (a, b) = (self.root, other.root);
        self.unary(|m| {
            let nb = m.not(b);
            m.apply(BoolOp::And, a, nb)
        })
    }

    /// `!self | other`
    pub fn imp(&self, other: &Bdd) -> Bdd {
        self.same_manager(other);
        let (a, b) = (self.root, other.root);
        self.unary(|m| {
            let na = m.not(a);
            m.apply(BoolOp::Or, na, b)
        })
    }

    pub fn not(&self) -> Bdd {
        let a = self.root;
        self.unary(|m| m.not(a))
    }

    pub fn ite(&self, then: &Bdd, otherwise: &Bdd) -> Bdd {
        self.same_manager(then);
        self.same_manager(otherwise);
        let (f, g, h) = (self.root, then.root, otherwise.root);
        self.unary(|m| m.ite(f, g, h))
    }

    pub fn quantify(&self, kind: Quantifier, vars: &[VarId]) -> Bdd {
        let a = self.root;
        self.unary(|m| {
            let cube = m.cube(vars);
            m.quantify(kind, a, cube)
        })
    }

    pub fn exists(&self, vars: &[VarId]) -> Bdd {
        self.quantify(Quantifier::Exists, vars)
    }

    pub fn forall(&self, vars: &[VarId]) -> Bdd {
        self.quantify(Quantifier::Forall, vars)
    }

    /// Relational product `exists vars. self & other`.
    pub fn and_exists(&self, other: &Bdd, vars: &[VarId]) -> Bdd {
        self.same_manager(other);
        let (a, b) = (self.root, other.root);
        self.unary(|m| {
            let cube = m.cube(vars);
            m.and_exists(a, b, cube)
        })
    }

    pub fn cofactor(&self, v: VarId, value: bool) -> Bdd {
        let a = self.root;
        self.unary(|m| m.cofactor(a, v, value))
    }

    /// Simultaneous substitution of `from[i]` by `to[i]`.
    pub fn rename(&self, from: &[VarId], to: &[VarId]) -> Result<Bdd, BddError> {
        if from.len() != to.len() {
            return Err(BddError::RenameWidth(from.len(), to.len()));
        }
        {
            let m = self.mgr.borrow();
            for &v in from.iter().chain(to) {
                m.check_var(v)?;
            }
        }
        let map: FxHashMap<u32, u32> = from.iter().zip(to).map(|(a, b)| (a.0, b.0)).collect();
        let a = self.root;
        Ok(self.unary(|m| {
            let mut memo = FxHashMap::default();
            m.rename(a, &map, &mut memo)
        }))
    }

    /// Nodes reachable from the root, terminals included.
    pub fn node_count(&self) -> usize {
        self.mgr.borrow().node_count(self.root)
    }

    /// Variables the function depends on, top of the order first.
    pub fn support(&self) -> Vec<VarId> {
        self.mgr.borrow().support(self.root)
    }

    /// Evaluates under `assignment`, indexed by variable id.
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.mgr.borrow().eval(self.root, &|v| assignment[v.index()])
    }

    pub fn eval_with(&self, assignment: impl Fn(VarId) -> bool) -> bool {
        self.mgr.borrow().eval(self.root, &assignment)
    }

    /// Satisfying assignments restricted to `support`, each reported in the
    /// order of `support`. Fails if the function depends on a variable
    /// outside `support`.
    pub fn sat_iter(&self, support: &[VarId]) -> Result<SatIter, BddError> {
        let m = self.mgr.borrow();
        for &v in support {
            m.check_var(v)?;
        }
        let dependent = m.support(self.root);
        if let Some(v) = dependent.iter().find(|v| !support.contains(v)) {
            return Err(BddError::SupportMissing(v.0));
        }
        // positions of the support, sorted by level
        let mut by_level: Vec<(u32, usize)> = support
            .iter()
            .enumerate()
            .map(|(i, v)| (m.var_to_level[v.index()], i))
            .collect();
        by_level.sort_unstable();
        let mut out = Vec::new();
        let mut current = vec![false; support.len()];
        enumerate(&m, self.root, &by_level, 0, &mut current, &mut out);
        Ok(SatIter {
            inner: out.into_iter(),
        })
    }

    /// Number of satisfying assignments over `support`.
    pub fn sat_count(&self, support: &[VarId]) -> Result<u128, BddError> {
        let m = self.mgr.borrow();
        let dependent = m.support(self.root);
        if let Some(v) = dependent.iter().find(|v| !support.contains(v)) {
            return Err(BddError::SupportMissing(v.0));
        }
        let mut levels: Vec<u32> = support.iter().map(|v| m.var_to_level[v.index()]).collect();
        levels.sort_unstable();
        levels.dedup();
        let mut memo = FxHashMap::default();
        Ok(count(&m, self.root, &levels, 0, &mut memo))
    }
}

fn enumerate(
    m: &Inner,
    node: NodeId,
    by_level: &[(u32, usize)],
    pos: usize,
    current: &mut Vec<bool>,
    out: &mut Vec<Vec<bool>>,
) {
    if node == ZERO {
        return;
    }
    if pos == by_level.len() {
        debug_assert_eq!(node, ONE);
        out.push(current.clone());
        return;
    }
    let (level, slot) = by_level[pos];
    let (lo, hi) = if m.level(node) == level {
        let n = m.node(node);
        (n.lo, n.hi)
    } else {
        (node, node)
    };
    current[slot] = false;
    enumerate(m, lo, by_level, pos + 1, current, out);
    current[slot] = true;
    enumerate(m, hi, by_level, pos + 1, current, out);
    current[slot] = false;
}

fn count(m: &Inner, node: NodeId, levels: &[u32], pos: usize, memo: &mut FxHashMap<(NodeId, usize), u128>) -> u128 {
    if node == ZERO {
        return 0;
    }
    if pos == levels.len() {
        return 1;
    }
    if let Some(&c) = memo.get(&(node, pos)) {
        return c;
    }
    let (lo, hi) = if m.level(node) == levels[pos] {
        let n = m.node(node);
        (n.lo, n.hi)
    } else {
        (node, node)
    };
    let c = count(m, lo, levels, pos + 1, memo) + count(m, hi, levels, pos + 1, memo);
    memo.insert((node, pos), c);
    c
}

/// Iterator over satisfying assignments, see [`Bdd::sat_iter`].
#[derive(Debug)]
pub struct SatIter {
    inner: std::vec::IntoIter<Vec<bool>>,
}

impl Iterator for SatIter {
    type Item = Vec<bool>;

    fn next(&mut self) -> Option<Vec<bool>> {
        self.inner.next()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

impl ExactSizeIterator for SatIter {}

impl Clone for Bdd {
    fn clone(&self) -> Self {
        self.mgr.borrow_mut().inc(self.root);
        Bdd {
            mgr: self.mgr.clone(),
            root: self.root,
        }
    }
}

impl Drop for Bdd {
    fn drop(&mut self) {
        // A handle dropped while the manager is mutably borrowed keeps its
        // node pinned; that only leaks memory.
        if let Ok(mut m) = self.mgr.try_borrow_mut() {
            m.dec(self.root);
        }
    }
}

impl PartialEq for Bdd {
    fn eq(&self, other: &Self) -> bool {
        Rc::ptr_eq(&self.mgr, &other.mgr) && self.root == other.root
    }
}

impl Eq for Bdd {}

impl Hash for Bdd {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (Rc::as_ptr(&self.mgr) as usize).hash(state);
        self.root.hash(state);
    }
}

impl fmt::Debug for Bdd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.root {
            ZERO => write!(f, "Bdd(false)"),
            ONE => write!(f, "Bdd(true)"),
            n => write!(f, "Bdd(#{n}, {} nodes)", self.node_count()),
        }
    }
}
