//! The synthesis-refinement loop: solve, pick cells from the fixed-point
//! iterates, split them, patch the abstraction, repeat.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use splitsynth_bdd::{BddManager, ReorderMethod};

use crate::abstraction::{Abstraction, AbstractionConfig, Rect, SplitDelta, SINK};
use crate::encoding::{EncodingKind, StateEncoding};
use crate::error::{Error, Result};
use crate::fts::{Fts, Quant};
use crate::symbolic::SymbolicFts;
use crate::synthesis::{win, Explicit, FixedPointTrace, SetAlgebra, Spec, SpecSets, Symbolic};
use crate::{StateId, StateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    List,
    Bdd,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::List => "list",
            Backend::Bdd => "bdd",
        }
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "list" => Ok(Backend::List),
            "bdd" => Ok(Backend::Bdd),
            other => Err(format!("unknown backend `{other}` (expected list or bdd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Reorder {
    #[default]
    None,
    Sift,
    Anneal,
}

impl Reorder {
    pub fn name(self) -> &'static str {
        match self {
            Reorder::None => "none",
            Reorder::Sift => "sift",
            Reorder::Anneal => "anneal",
        }
    }

    pub fn method(self) -> Option<ReorderMethod> {
        match self {
            Reorder::None => None,
            Reorder::Sift => Some(ReorderMethod::sift()),
            Reorder::Anneal => Some(ReorderMethod::anneal()),
        }
    }
}

impl FromStr for Reorder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Reorder::None),
            "sift" => Ok(Reorder::Sift),
            "anneal" => Ok(Reorder::Anneal),
            other => Err(format!("unknown reordering `{other}` (expected none, sift or anneal)")),
        }
    }
}

/// How the transition system is stored during synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Representation {
    pub backend: Backend,
    pub encoding: EncodingKind,
    pub reorder: Reorder,
}

impl Representation {
    pub const LIST: Representation = Representation {
        backend: Backend::List,
        encoding: EncodingKind::Log,
        reorder: Reorder::None,
    };

    pub fn bdd(encoding: EncodingKind, reorder: Reorder) -> Self {
        Representation {
            backend: Backend::Bdd,
            encoding,
            reorder,
        }
    }

    /// `list`, `bdd-log` or `bdd-split`.
    pub fn label(&self) -> String {
        match self.backend {
            Backend::List => "list".into(),
            Backend::Bdd => format!("bdd-{}", self.encoding.name()),
        }
    }
}

/// Refinement knobs that belong in the system configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineSettings {
    /// Cells split per iteration.
    pub max_splits: usize,
    /// Cells whose longest side is at most this are never split.
    pub min_width: f64,
    /// Stop once every cell inside this box is winning.
    pub target: Option<Rect>,
}

impl Default for RefineSettings {
    fn default() -> Self {
        RefineSettings {
            max_splits: 1,
            min_width: 0.0,
            target: None,
        }
    }
}

/// Complete system description as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(flatten)]
    pub abstraction: AbstractionConfig,
    #[serde(default)]
    pub spec: Spec,
    #[serde(default)]
    pub refine: RefineSettings,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Config::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Fixed-point level that proposed a cell for refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    /// Dropped by the greatest fixed point after its first iterate.
    Nu,
    /// Just outside the inner least fixed point for a goal.
    InnerMu(usize),
    /// Just outside the winning set.
    OuterMu,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefinePlan {
    /// Cells to split, in split order.
    pub cells: Vec<StateId>,
    pub origin: BTreeMap<StateId, Level>,
}

impl RefinePlan {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Candidate regions of the last outer iteration:
///
/// * the greatest fixed point contributes `V₁⁽¹⁾ \ V₁^∞`;
/// * each innermost least fixed point of its final pass contributes
///   `pre∃∃(V₀^∞) \ V₀^∞`;
/// * the outer least fixed point contributes `pre∃∃(Win) \ Win`.
///
/// The sink is never proposed. Each state keeps the first level listed.
pub fn plan_regions(fts: &Fts, trace: &FixedPointTrace<StateSet>) -> BTreeMap<StateId, Level> {
    let mut out = BTreeMap::new();
    let step = trace.steps.last().expect("trace has a step");
    let win = step.result();
    let mut add = |set: StateSet, level: Level| {
        for q in set.iter().filter(|&q| q != SINK) {
            out.entry(q).or_insert(level);
        }
    };
    if step.nu.len() > 1 {
        add(step.nu[1].difference(win), Level::Nu);
    }
    for (i, its) in step.final_inner().iter().enumerate() {
        let fixed = its.last().expect("nonempty");
        add(fts.pre(fixed, Quant::EE).difference(fixed), Level::InnerMu(i));
    }
    add(fts.pre(win, Quant::EE).difference(win), Level::OuterMu);
    out
}

/// Filters and throttles the candidate regions: cells at or below
/// `min_width` are dropped, then at most `max_splits` cells are kept,
/// largest volume first and lowest id on ties.
pub fn plan_from_trace(abs: &Abstraction, trace: &FixedPointTrace<StateSet>, settings: &RefineSettings) -> RefinePlan {
    let regions = plan_regions(&abs.fts, trace);
    let mut ranked: Vec<(f64, StateId)> = regions
        .keys()
        .filter_map(|&q| abs.partition.cell(q).map(|c| (c, q)))
        .filter(|(c, _)| c.rect.max_width() > settings.min_width)
        .map(|(c, q)| (c.rect.volume(), q))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.truncate(settings.max_splits);
    RefinePlan {
        cells: ranked.iter().map(|&(_, q)| q).collect(),
        origin: ranked.iter().map(|&(_, q)| (q, regions[&q])).collect(),
    }
}

/// Outcome of one synthesis call.
#[derive(Debug, Clone)]
pub struct Solution {
    pub win: StateSet,
    pub trace: FixedPointTrace<StateSet>,
    pub spec: SpecSets<StateSet>,
    /// Wall-clock time of the fixed-point evaluation alone.
    pub synth_time: Duration,
}

/// An abstraction plus, for the BDD backend, its symbolic relation kept in
/// sync with every split.
#[derive(Debug)]
pub struct Engine {
    pub abs: Abstraction,
    pub spec: Spec,
    pub repr: Representation,
    sym: Option<SymbolicFts>,
    nodes_at_reorder: usize,
}

impl Engine {
    pub fn new(abs: Abstraction, spec: Spec, repr: Representation) -> Result<Self> {
        let mut engine = Engine {
            abs,
            spec,
            repr,
            sym: None,
            nodes_at_reorder: 0,
        };
        if repr.backend == Backend::Bdd {
            let states: Vec<StateId> = engine.abs.fts.states().collect();
            let enc = StateEncoding::new(repr.encoding, &states)?;
            engine.sym = Some(SymbolicFts::from_fts(&BddManager::new(), &engine.abs.fts, enc)?);
        }
        Ok(engine)
    }

    /// Builds the symbolic relation for the current abstraction from scratch,
    /// replaying the split history on the encoding so that state codes and
    /// variable order match an incremental run.
    pub fn with_replayed_encoding(abs: Abstraction, spec: Spec, repr: Representation, initial: &[StateId]) -> Result<Self> {
        let mut engine = Engine {
            abs,
            spec,
            repr,
            sym: None,
            nodes_at_reorder: 0,
        };
        if repr.backend == Backend::Bdd {
            let mut enc = StateEncoding::new(repr.encoding, initial)?;
            let initial_width = enc.width();
            for rec in engine.abs.partition.history() {
                enc.split(rec.parent, rec.first, rec.second)?;
            }
            engine.sym = Some(SymbolicFts::from_fts_with_layout(
                &BddManager::new(),
                &engine.abs.fts,
                enc,
                initial_width,
            )?);
        }
        Ok(engine)
    }

    pub fn symbolic(&self) -> Option<&SymbolicFts> {
        self.sym.as_ref()
    }

    pub fn fts(&self) -> &Fts {
        &self.abs.fts
    }

    pub fn bdd_nodes(&self) -> usize {
        self.sym.as_ref().map_or(0, |s| s.bdd_nodes())
    }

    pub fn nodes_per_var(&self) -> f64 {
        self.sym.as_ref().map_or(0.0, |s| s.nodes_per_var())
    }

    /// Reorders when enabled and the relation has grown by half since the
    /// last reordering.
    pub fn maybe_reorder(&mut self) {
        let Some(method) = self.repr.reorder.method() else { return };
        let Some(sym) = &self.sym else { return };
        let nodes = sym.bdd_nodes();
        if self.nodes_at_reorder == 0 || nodes * 2 > self.nodes_at_reorder * 3 {
            sym.reorder(&method);
            self.nodes_at_reorder = sym.bdd_nodes().max(1);
        }
    }

    /// Computes the winning set. Only the fixed point itself is timed; the
    /// trace is checked afterwards and a failed check is an error.
    pub fn solve(&mut self) -> Result<Solution> {
        self.maybe_reorder();
        let spec = self.spec.resolve(&self.abs.fts)?;
        let n = self.abs.fts.n_states();
        match &self.sym {
            None => {
                let alg = Explicit::new(&self.abs.fts);
                let start = Instant::now();
                let (w, trace) = win(&alg, &spec, Quant::EA);
                let synth_time = start.elapsed();
                trace.verify(&alg, n).map_err(Error::Trace)?;
                Ok(Solution {
                    win: w,
                    trace,
                    spec,
                    synth_time,
                })
            }
            Some(sym) => {
                let alg = Symbolic::new(sym);
                let sets = spec.try_map(|s| sym.set_bdd(s))?;
                let start = Instant::now();
                let (w, trace) = win(&alg, &sets, Quant::EA);
                let synth_time = start.elapsed();
                trace.verify(&alg, n).map_err(Error::Trace)?;
                let trace = trace.try_map(|b| alg.to_states(b))?;
                Ok(Solution {
                    win: alg.to_states(&w)?,
                    trace,
                    spec,
                    synth_time,
                })
            }
        }
    }

    pub fn split(&mut self, q: StateId) -> Result<SplitDelta> {
        let delta = self.abs.split(q)?;
        if let Some(sym) = &mut self.sym {
            let s = delta.split;
            sym.split_state(s.parent, s.first, s.second)?;
            sym.add_transitions(delta.added.iter().copied())?;
        }
        Ok(delta)
    }
}

/// Limits for [`refine_loop`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
}

impl Budget {
    pub fn iterations(n: usize) -> Self {
        Budget {
            max_iterations: n,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    /// No cell qualifies for refinement.
    Stable,
    /// The target box is winning.
    Covered,
}

impl StopReason {
    pub fn describe(self) -> &'static str {
        match self {
            StopReason::Budget => "budget exhausted",
            StopReason::Stable => "fixed point stable",
            StopReason::Covered => "target covered",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub iter: usize,
    pub n_states: usize,
    pub n_transitions: usize,
    pub synth_time_ms: f64,
    pub win_volume: f64,
    pub bdd_nodes: usize,
    pub nodes_per_var: f64,
    pub encoding: String,
    pub backend: String,
}

pub const RUN_HEADER: &str = "iter,n_states,n_transitions,synth_time_ms,win_volume,bdd_nodes,nodes_per_var,encoding,backend";

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<RunRow>,
    pub stop: StopReason,
    /// Wall-clock duration of each iteration, synthesis and refinement
    /// together.
    pub iteration_times: Vec<Duration>,
    pub last: Solution,
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{RUN_HEADER}").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{:.3},{},{},{:.4},{},{}",
                r.iter, r.n_states, r.n_transitions, r.synth_time_ms, r.win_volume, r.bdd_nodes, r.nodes_per_var, r.encoding, r.backend
            )
            .unwrap();
        }
        s
    }
}

fn row(engine: &Engine, iter: usize, sol: &Solution) -> RunRow {
    let encoding = match engine.repr.backend {
        Backend::List => "none".to_string(),
        Backend::Bdd => engine.repr.encoding.name().to_string(),
    };
    RunRow {
        iter,
        n_states: engine.abs.fts.n_states(),
        n_transitions: engine.abs.fts.n_transitions(),
        synth_time_ms: sol.synth_time.as_secs_f64() * 1e3,
        win_volume: engine.abs.partition.volume_of(&sol.win),
        bdd_nodes: engine.bdd_nodes(),
        nodes_per_var: engine.nodes_per_var(),
        encoding,
        backend: engine.repr.backend.name().to_string(),
    }
}

fn covered(engine: &Engine, target: &Rect, win: &StateSet) -> bool {
    engine
        .abs
        .partition
        .cells()
        // cells overlapping the target's interior
        .filter(|(_, c)| (0..target.dim()).all(|i| c.rect.lo[i] < target.hi[i] && target.lo[i] < c.rect.hi[i]))
        .all(|(q, _)| win.contains(q))
}

/// Alternates synthesis and refinement until the budget runs out, no cell
/// qualifies for splitting, or the target is covered. Row 0 is the initial
/// synthesis.
pub fn refine_loop(engine: &mut Engine, settings: &RefineSettings, budget: Budget) -> Result<RunReport> {
    let start = Instant::now();
    let mut tick = Instant::now();
    let mut sol = engine.solve()?;
    let mut rows = vec![row(engine, 0, &sol)];
    let mut iteration_times = vec![tick.elapsed()];
    let mut iter = 0;
    let stop = loop {
        if let Some(t) = &settings.target {
            if covered(engine, t, &sol.win) {
                break StopReason::Covered;
            }
        }
        if iter >= budget.max_iterations || budget.time_limit.is_some_and(|t| start.elapsed() >= t) {
            break StopReason::Budget;
        }
        tick = Instant::now();
        let plan = plan_from_trace(&engine.abs, &sol.trace, settings);
        if plan.is_empty() {
            break StopReason::Stable;
        }
        for &q in &plan.cells {
            engine.split(q)?;
        }
        iter += 1;
        sol = engine.solve()?;
        rows.push(row(engine, iter, &sol));
        iteration_times.push(tick.elapsed());
        log::debug!("iteration {iter}: |Q| = {}, |Win| = {}", engine.abs.fts.n_states(), sol.win.len());
    };
    Ok(RunReport {
        rows,
        stop,
        iteration_times,
        last: sol,
    })
}
