//! Strategies extracted from a fixed-point trace, and closed-loop simulation
//! on the concrete dynamics.
//!
//! For goal `i`, a state's entry records the first outer iteration `j`
//! whose inner least fixed point for `i` contains it (its level) and the
//! index of the first inner iterate containing it (its rank). Rank-1 states
//! either descend to `V₂` of iteration `j − 1` or, inside `B ∩ Gⁱ`, move
//! into `V₂` of iteration `j` and advance the goal counter. Higher ranks
//! move to the previous inner iterate. Along any controlled play the pair
//! (level, rank) decreases lexicographically except on goal moves, and the
//! level never increases, which gives the guarantee with the goal index as
//! the only memory.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstraction::{Abstraction, Rect};
use crate::error::{Error, Result};
use crate::fts::Fts;
use crate::synthesis::{FixedPointTrace, SpecSets};
use crate::{ActionId, StateId, StateSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    /// Outer iteration, from 1.
    pub level: usize,
    /// Inner iterate index, from 1.
    pub rank: usize,
    /// Admissible actions, ascending.
    pub actions: Vec<ActionId>,
    /// Whether taking an action completes the current goal.
    pub advance: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    tables: Vec<BTreeMap<StateId, Entry>>,
    win: StateSet,
}

/// Actions `u` with `∅ ≠ succ(q, u) ⊆ target`.
fn safe_actions(fts: &Fts, q: StateId, target: &StateSet) -> Vec<ActionId> {
    fts.action_groups(q)
        .filter(|(_, run)| run.iter().all(|&(_, r)| target.contains(r)))
        .map(|(u, _)| u)
        .collect()
}

/// Builds the controller from an explicit trace of `fts`.
pub fn extract(fts: &Fts, spec: &SpecSets<StateSet>, trace: &FixedPointTrace<StateSet>) -> Result<Controller> {
    let win = trace.win().clone();
    if win.is_empty() {
        return Err(Error::EmptyWinningSet);
    }
    let qb = spec.safe.intersection(&spec.persist);
    let mut tables = Vec::with_capacity(spec.goals.len());
    for (i, goal) in spec.goals.iter().enumerate() {
        let bg = qb.intersection(goal);
        let mut table: BTreeMap<StateId, Entry> = BTreeMap::new();
        for (j, step) in trace.steps.iter().enumerate() {
            let lower = &step.v2;
            let upper = step.result();
            let its = &step.final_inner()[i];
            for k in 1..its.len() {
                for q in its[k].difference(&its[k - 1]).iter() {
                    if table.contains_key(&q) {
                        continue;
                    }
                    let (actions, advance) = if k == 1 {
                        let down = safe_actions(fts, q, lower);
                        if !down.is_empty() {
                            (down, false)
                        } else if bg.contains(q) {
                            (safe_actions(fts, q, upper), true)
                        } else {
                            (Vec::new(), false)
                        }
                    } else {
                        (safe_actions(fts, q, &its[k - 1]), false)
                    };
                    if actions.is_empty() {
                        return Err(Error::Trace(format!("state {q} has no admissible action for goal {i}")));
                    }
                    table.insert(
                        q,
                        Entry {
                            level: j + 1,
                            rank: k,
                            actions,
                            advance,
                        },
                    );
                }
            }
        }
        tables.push(table);
    }
    Ok(Controller { tables, win })
}

impl Controller {
    pub fn n_goals(&self) -> usize {
        self.tables.len()
    }

    pub fn win(&self) -> &StateSet {
        &self.win
    }

    pub fn entry(&self, q: StateId, phase: usize) -> Option<&Entry> {
        self.tables.get(phase)?.get(&q)
    }

    /// One line `state phase level rank advance action...` per entry,
    /// ordered by state, then phase.
    pub fn export(&self) -> String {
        let mut rows: Vec<(StateId, usize, &Entry)> = Vec::new();
        for (phase, t) in self.tables.iter().enumerate() {
            rows.extend(t.iter().map(|(&q, e)| (q, phase, e)));
        }
        rows.sort_by_key(|&(q, p, _)| (q, p));
        let mut s = String::from("# state phase level rank advance actions\n");
        for (q, p, e) in rows {
            let acts: Vec<String> = e.actions.iter().map(|u| u.to_string()).collect();
            writeln!(s, "{q} {p} {} {} {} {}", e.level, e.rank, e.advance as u8, acts.join(" ")).unwrap();
        }
        s
    }
}

/// How disturbances are drawn during simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceModel {
    Zero,
    /// Uniform over the disturbance box.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopReport {
    pub x0: Vec<f64>,
    /// States after each step.
    pub trajectory: Vec<Vec<f64>>,
    /// Cell of the state before each step.
    pub cells: Vec<StateId>,
    pub actions: Vec<ActionId>,
    /// Completed visits per goal.
    pub goal_visits: Vec<usize>,
    /// Step at which the state left the domain, if it did.
    pub exit_step: Option<usize>,
}

impl ClosedLoopReport {
    pub fn safety_violations(&self) -> usize {
        self.exit_step.is_some() as usize
    }

    /// First index `t` such that every state from `x_t` on lies in `b`
    /// (`x_0` is index 0).
    pub fn confined_from(&self, b: &Rect) -> Option<usize> {
        let all: Vec<&Vec<f64>> = std::iter::once(&self.x0).chain(&self.trajectory).collect();
        let mut first = None;
        for (t, x) in all.iter().enumerate().rev() {
            if b.contains_point(x) {
                first = Some(t);
            } else {
                break;
            }
        }
        first
    }
}

/// Runs the controller on the concrete dynamics for `horizon` steps. The
/// first admissible action is always taken. Deterministic for a given seed.
pub fn simulate(
    ctrl: &Controller,
    abs: &Abstraction,
    x0: &[f64],
    horizon: usize,
    disturbance: DisturbanceModel,
    seed: u64,
) -> Result<ClosedLoopReport> {
    let q0 = abs.locate(x0).filter(|q| ctrl.win.contains(*q));
    if q0.is_none() {
        return Err(Error::NotWinning(x0.to_vec()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = &abs.disturbance;
    let mut report = ClosedLoopReport {
        x0: x0.to_vec(),
        trajectory: Vec::with_capacity(horizon),
        cells: Vec::with_capacity(horizon),
        actions: Vec::with_capacity(horizon),
        goal_visits: vec![0; ctrl.n_goals()],
        exit_step: None,
    };
    let mut x = x0.to_vec();
    let mut phase = 0;
    for t in 0..horizon {
        let Some(q) = abs.locate(&x) else {
            report.exit_step = Some(t);
            break;
        };
        let entry = ctrl.entry(q, phase).ok_or(Error::NoControl { state: q, phase })?;
        let u = entry.actions[0];
        if entry.advance {
            report.goal_visits[phase] += 1;
            phase = (phase + 1) % ctrl.n_goals();
        }
        let d: Vec<f64> = match disturbance {
            DisturbanceModel::Zero => vec![0.0; dist.dim()],
            DisturbanceModel::Uniform => (0..dist.dim())
                .map(|i| {
                    if dist.hi[i] > dist.lo[i] {
                        rng.random_range(dist.lo[i]..=dist.hi[i])
                    } else {
                        dist.lo[i]
                    }
                })
                .collect(),
        };
        x = abs.modes[u as usize].step(&x, &d);
        report.cells.push(q);
        report.actions.push(u);
        report.trajectory.push(x.clone());
        if !abs.partition.domain().contains_point(&x) {
            report.exit_step = Some(t + 1);
            break;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{win_explicit, Spec};

    #[test]
    fn self_loops_rank_one_everywhere() {
        let mut fts = Fts::new(2);
        for q in 1..=3 {
            fts.insert_state(q).unwrap();
            fts.add_transition(q, 0, q).unwrap();
            fts.add_transition(q, 1, q).unwrap();
        }
        let spec = Spec::default();
        let (_, trace) = win_explicit(&fts, &spec).unwrap();
        let ctrl = extract(&fts, &spec.resolve(&fts).unwrap(), &trace).unwrap();
        for q in 1..=3 {
            let e = ctrl.entry(q, 0).unwrap();
            assert_eq!((e.rank, e.actions.clone(), e.advance), (1, vec![0, 1], true));
        }
    }

    #[test]
    fn ladder_ranks() {
        // 1 -> 2 -> 3 -> 3 with goal {3}
        let mut fts = Fts::new(1);
        for q in 1..=3 {
            fts.insert_state(q).unwrap();
        }
        for (q, r) in [(1, 2), (2, 3), (3, 3)] {
            fts.add_transition(q, 0, r).unwrap();
        }
        fts.set_label("G", [3].into_iter().collect());
        let spec = Spec::new(None, None, &["G"]);
        let (w, trace) = win_explicit(&fts, &spec).unwrap();
        assert_eq!(w.len(), 3);
        let ctrl = extract(&fts, &spec.resolve(&fts).unwrap(), &trace).unwrap();
        let ranks: Vec<usize> = (1..=3).map(|q| ctrl.entry(q, 0).unwrap().rank).collect();
        assert_eq!(ranks, vec![3, 2, 1]);
        assert!(ctrl.entry(3, 0).unwrap().advance);
        assert!(ctrl.export().starts_with("# state phase level rank advance actions\n1 0 1 3 0 0\n"));
    }

    #[test]
    fn empty_win_is_rejected() {
        let mut fts = Fts::new(1);
        fts.insert_state(1).unwrap();
        let spec = Spec::default();
        let (_, trace) = win_explicit(&fts, &spec).unwrap();
        assert!(matches!(
            extract(&fts, &spec.resolve(&fts).unwrap(), &trace),
            Err(Error::EmptyWinningSet)
        ));
    }
}
