//! Fixed-point computation of winning sets for `□A ∧ ◇□B ∧ ⋀ᵢ □◇Gⁱ`:
//!
//! ```text
//! Win = μV₂. νV₁. ⋂ᵢ μV₀. A ∩ (pre(V₂) ∪ (B ∩ Gⁱ ∩ pre(V₁)) ∪ (B ∩ pre(V₀)))
//! ```
//!
//! The engine is generic over [`SetAlgebra`], with an explicit and a BDD
//! implementation, and records every iterate so that refinement and
//! controller extraction can inspect the computation afterwards.

use serde::{Deserialize, Serialize};
use splitsynth_bdd::Bdd;

use crate::error::{Error, Result};
use crate::fts::{Fts, PreMode, Quant};
use crate::symbolic::SymbolicFts;
use crate::StateSet;

/// Set operations and a predecessor operator over one representation.
pub trait SetAlgebra {
    type Set: Clone + PartialEq + std::fmt::Debug;

    fn empty(&self) -> Self::Set;
    fn union(&self, a: &Self::Set, b: &Self::Set) -> Self::Set;
    fn intersect(&self, a: &Self::Set, b: &Self::Set) -> Self::Set;
    fn diff(&self, a: &Self::Set, b: &Self::Set) -> Self::Set;
    fn is_subset(&self, a: &Self::Set, b: &Self::Set) -> bool;
    fn pre(&self, x: &Self::Set, quant: Quant) -> Self::Set;
    fn to_states(&self, s: &Self::Set) -> Result<StateSet>;
}

pub struct Explicit<'a> {
    pub fts: &'a Fts,
    pub mode: PreMode,
}

impl<'a> Explicit<'a> {
    pub fn new(fts: &'a Fts) -> Self {
        Explicit {
            fts,
            mode: PreMode::Enabled,
        }
    }
}

impl SetAlgebra for Explicit<'_> {
    type Set = StateSet;

    fn empty(&self) -> StateSet {
        StateSet::new()
    }

    fn union(&self, a: &StateSet, b: &StateSet) -> StateSet {
        a.union(b)
    }

    fn intersect(&self, a: &StateSet, b: &StateSet) -> StateSet {
        a.intersection(b)
    }

    fn diff(&self, a: &StateSet, b: &StateSet) -> StateSet {
        a.difference(b)
    }

    fn is_subset(&self, a: &StateSet, b: &StateSet) -> bool {
        a.is_subset(b)
    }

    fn pre(&self, x: &StateSet, quant: Quant) -> StateSet {
        self.fts.list_pre(x, quant, self.mode)
    }

    fn to_states(&self, s: &StateSet) -> Result<StateSet> {
        Ok(s.clone())
    }
}

pub struct Symbolic<'a> {
    pub sym: &'a SymbolicFts,
    pub mode: PreMode,
}

impl<'a> Symbolic<'a> {
    pub fn new(sym: &'a SymbolicFts) -> Self {
        Symbolic {
            sym,
            mode: PreMode::Enabled,
        }
    }
}

impl SetAlgebra for Symbolic<'_> {
    type Set = Bdd;

    fn empty(&self) -> Bdd {
        self.sym.manager().zero()
    }

    fn union(&self, a: &Bdd, b: &Bdd) -> Bdd {
        a.or(b)
    }

    fn intersect(&self, a: &Bdd, b: &Bdd) -> Bdd {
        a.and(b)
    }

    fn diff(&self, a: &Bdd, b: &Bdd) -> Bdd {
        a.diff(b)
    }

    fn is_subset(&self, a: &Bdd, b: &Bdd) -> bool {
        a.diff(b).is_false()
    }

    fn pre(&self, x: &Bdd, quant: Quant) -> Bdd {
        self.sym
            .pre(x, quant, self.mode)
            .expect("iterates are functions of the current-state variables")
    }

    fn to_states(&self, s: &Bdd) -> Result<StateSet> {
        self.sym.decode(s)
    }
}

/// Specification by proposition names. A missing safety or persistence
/// proposition means "all states"; an empty goal list means the single goal
/// `B`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spec {
    #[serde(default)]
    pub safe: Option<String>,
    #[serde(default)]
    pub persist: Option<String>,
    #[serde(default)]
    pub goals: Vec<String>,
}

impl Spec {
    pub fn new(safe: Option<&str>, persist: Option<&str>, goals: &[&str]) -> Self {
        Spec {
            safe: safe.map(str::to_string),
            persist: persist.map(str::to_string),
            goals: goals.iter().map(|g| g.to_string()).collect(),
        }
    }

    /// Looks the propositions up in the labeling of `fts`.
    pub fn resolve(&self, fts: &Fts) -> Result<SpecSets<StateSet>> {
        let lookup = |name: &Option<String>| -> Result<StateSet> {
            match name {
                None => Ok(fts.state_set().clone()),
                Some(p) => fts
                    .label(p)
                    .cloned()
                    .ok_or_else(|| Error::UnknownProposition(p.clone())),
            }
        };
        let safe = lookup(&self.safe)?;
        let persist = lookup(&self.persist)?;
        let mut goals = Vec::new();
        for g in &self.goals {
            goals.push(lookup(&Some(g.clone()))?);
        }
        if goals.is_empty() {
            goals.push(persist.clone());
        }
        Ok(SpecSets { safe, persist, goals })
    }
}

/// Resolved specification; `goals` is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecSets<S> {
    pub safe: S,
    pub persist: S,
    pub goals: Vec<S>,
}

impl<S> SpecSets<S> {
    pub fn try_map<T>(&self, mut f: impl FnMut(&S) -> Result<T>) -> Result<SpecSets<T>> {
        Ok(SpecSets {
            safe: f(&self.safe)?,
            persist: f(&self.persist)?,
            goals: self.goals.iter().map(f).collect::<Result<_>>()?,
        })
    }
}

/// Greatest fixed point from `top`. Returns the fixed point and the iterates
/// `V₀ = top, V₁, ..., V_k` where `V_k` is the first repeated value.
pub fn gfp<S: Clone + PartialEq>(top: S, f: impl FnMut(&S) -> S) -> (S, Vec<S>) {
    iterate(top, f)
}

/// Least fixed point from `bottom`; same iterate convention as [`gfp`].
pub fn lfp<S: Clone + PartialEq>(bottom: S, f: impl FnMut(&S) -> S) -> (S, Vec<S>) {
    iterate(bottom, f)
}

fn iterate<S: Clone + PartialEq>(start: S, mut f: impl FnMut(&S) -> S) -> (S, Vec<S>) {
    let mut iterates = vec![start];
    loop {
        let next = f(iterates.last().expect("nonempty"));
        if &next == iterates.last().expect("nonempty") {
            return (next, iterates);
        }
        iterates.push(next);
    }
}

/// One iteration of the outer least fixed point.
#[derive(Debug, Clone)]
pub struct OuterStep<S> {
    /// `V₂` entering this step.
    pub v2: S,
    /// Iterates of the greatest fixed point over `V₁`.
    pub nu: Vec<S>,
    /// `inner[pass][goal]`: iterates of the innermost least fixed point in
    /// each pass of the greatest fixed point.
    pub inner: Vec<Vec<Vec<S>>>,
}

impl<S: Clone> OuterStep<S> {
    /// `V₂` leaving this step.
    pub fn result(&self) -> &S {
        self.nu.last().expect("nonempty")
    }

    /// Inner iterates of the last pass, which ran with `V₁` at its fixed
    /// point.
    pub fn final_inner(&self) -> &[Vec<S>] {
        self.inner.last().expect("at least one pass")
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointTrace<S> {
    pub steps: Vec<OuterStep<S>>,
    /// Number of predecessor computations.
    pub pre_calls: usize,
}

impl<S: Clone + PartialEq> FixedPointTrace<S> {
    pub fn win(&self) -> &S {
        self.steps.last().expect("nonempty").result()
    }

    /// Iterates of the outer least fixed point: `V₂⁰ = ∅, V₂¹, ...`.
    pub fn outer_iterates(&self) -> Vec<S> {
        let mut v: Vec<S> = self.steps.iter().map(|s| s.v2.clone()).collect();
        v.push(self.win().clone());
        v.dedup();
        v
    }

    pub fn try_map<T>(&self, mut f: impl FnMut(&S) -> Result<T>) -> Result<FixedPointTrace<T>> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            steps.push(OuterStep {
                v2: f(&s.v2)?,
                nu: s.nu.iter().map(&mut f).collect::<Result<_>>()?,
                inner: s
                    .inner
                    .iter()
                    .map(|pass| {
                        pass.iter()
                            .map(|its| its.iter().map(&mut f).collect::<Result<Vec<T>>>())
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?,
            });
        }
        Ok(FixedPointTrace {
            steps,
            pre_calls: self.pre_calls,
        })
    }

    /// Checks that least fixed point iterates grow, greatest fixed point
    /// iterates shrink, and every sequence has at most `n_states + 1`
    /// members.
    pub fn verify<A: SetAlgebra<Set = S>>(&self, alg: &A, n_states: usize) -> std::result::Result<(), String> {
        let bound = n_states + 1;
        let chain = |its: &[S], grows: bool, what: &str| -> std::result::Result<(), String> {
            if its.len() > bound {
                return Err(format!("{what}: {} iterates exceed the bound {bound}", its.len()));
            }
            for (k, w) in its.windows(2).enumerate() {
                let ok = if grows {
                    alg.is_subset(&w[0], &w[1])
                } else {
                    alg.is_subset(&w[1], &w[0])
                };
                if !ok {
                    let dir = if grows { "shrinks" } else { "grows" };
                    return Err(format!("{what}: iterate {} {dir}", k + 1));
                }
            }
            Ok(())
        };
        chain(&self.outer_iterates(), true, "outer μ")?;
        for (j, step) in self.steps.iter().enumerate() {
            chain(&step.nu, false, &format!("ν at outer step {j}"))?;
            if step.inner.len() != step.nu.len() {
                return Err(format!("outer step {j}: {} passes for {} ν iterates", step.inner.len(), step.nu.len()));
            }
            for (p, pass) in step.inner.iter().enumerate() {
                for (i, its) in pass.iter().enumerate() {
                    chain(its, true, &format!("inner μ, step {j}, pass {p}, goal {i}"))?;
                }
            }
        }
        Ok(())
    }
}

/// Evaluates the winning set. `spec.safe` restricts the state universe: all
/// sets are intersected with it while the transition relation is left
/// intact, so an action that may leave `A` is never safe.
pub fn win<A: SetAlgebra>(alg: &A, spec: &SpecSets<A::Set>, quant: Quant) -> (A::Set, FixedPointTrace<A::Set>) {
    let qa = &spec.safe;
    let qb = alg.intersect(qa, &spec.persist);
    let goals: Vec<A::Set> = spec.goals.iter().map(|g| alg.intersect(&qb, g)).collect();
    let mut pre_calls = 0usize;
    let mut pre = |x: &A::Set| {
        pre_calls += 1;
        alg.pre(x, quant)
    };
    let mut steps: Vec<OuterStep<A::Set>> = Vec::new();
    let mut v2 = alg.empty();
    loop {
        let p2 = alg.intersect(qa, &pre(&v2));
        let mut inner: Vec<Vec<Vec<A::Set>>> = Vec::new();
        let (v1, nu) = gfp(qa.clone(), |v1| {
            let p1 = pre(v1);
            let mut pass = Vec::with_capacity(goals.len());
            let mut meet: Option<A::Set> = None;
            for g in &goals {
                let target = alg.union(&p2, &alg.intersect(g, &p1));
                let (v0, its) = lfp(alg.empty(), |v0| alg.union(&target, &alg.intersect(&qb, &pre(v0))));
                pass.push(its);
                meet = Some(match meet {
                    None => v0,
                    Some(m) => alg.intersect(&m, &v0),
                });
            }
            inner.push(pass);
            meet.expect("goal list is nonempty")
        });
        steps.push(OuterStep {
            v2: v2.clone(),
            nu,
            inner,
        });
        if v1 == v2 {
            break;
        }
        v2 = v1;
    }
    let trace = FixedPointTrace { steps, pre_calls };
    (trace.win().clone(), trace)
}

/// Winning set on the explicit representation.
pub fn win_explicit(fts: &Fts, spec: &Spec) -> Result<(StateSet, FixedPointTrace<StateSet>)> {
    let sets = spec.resolve(fts)?;
    Ok(win(&Explicit::new(fts), &sets, Quant::EA))
}

/// Winning set on the BDD representation; `fts` supplies the labels.
pub fn win_symbolic(sym: &SymbolicFts, fts: &Fts, spec: &Spec) -> Result<(Bdd, FixedPointTrace<Bdd>)> {
    let sets = spec.resolve(fts)?.try_map(|s| sym.set_bdd(s))?;
    Ok(win(&Symbolic::new(sym), &sets, Quant::EA))
}
