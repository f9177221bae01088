//! Thermal benchmark layouts and the timing and memory experiments run on
//! them.
//!
//! Every experiment refines with the explicit backend first (it is the
//! cheapest to keep in sync), then rebuilds each representation from the
//! refined partition with [`Engine::with_replayed_encoding`], so all
//! representations are timed on the same abstraction.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::abstraction::{Abstraction, AbstractionConfig, Dynamics, FixedNode, Link, Rect, Slab, ThermalConfig, Zone, SINK};
use crate::encoding::EncodingKind;
use crate::error::Result;
use crate::refine::{plan_from_trace, Backend, Config, Engine, RefineSettings, Reorder, Representation};
use crate::synthesis::Spec;
use crate::StateId;

pub const OUTSIDE: f64 = 28.0;
pub const WATER: f64 = 16.0;
pub const ROOM_BAND: (f64, f64) = (22.0, 25.0);
pub const SLAB_BAND: (f64, f64) = (21.0, 27.0);
pub const DOMAIN: (f64, f64) = (20.0, 28.0);

/// Shape of a thermal building model.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub name: String,
    pub rooms: usize,
    /// Room index of each slab.
    pub slabs: Vec<usize>,
    /// Room pairs sharing a wall.
    pub walls: Vec<(usize, usize)>,
    /// Rooms exposed to the outside.
    pub exterior: Vec<usize>,
    /// Initial cells per axis.
    pub grid: usize,
    /// Half-width of the uncertainty on each room's heat gain.
    pub uncertainty: f64,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.rooms + self.slabs.len()
    }

    /// Euler step keeping every diagonal entry of every mode at least 1/2,
    /// capped at 0.2.
    fn tau(&self, links: &[Link]) -> f64 {
        let mut load: BTreeMap<&str, f64> = BTreeMap::new();
        for l in links {
            *load.entry(&l.a).or_default() += 1.0 / l.resistance;
            *load.entry(&l.b).or_default() += 1.0 / l.resistance;
        }
        let mut tau: f64 = 0.2;
        for r in 0..self.rooms {
            let g = load.get(format!("room{r}").as_str()).copied().unwrap_or(0.0);
            tau = tau.min(0.5 / g.max(1e-9));
        }
        for s in 0..self.slabs.len() {
            // the water coupling adds 1/R_water = 1 when on; slab capacitance is 2
            let g = load.get(format!("slab{s}").as_str()).copied().unwrap_or(0.0) + 1.0;
            tau = tau.min(0.5 * 2.0 / g);
        }
        tau
    }

    /// System description: rooms first, then slabs; the persistence box is
    /// the comfort band of every zone.
    pub fn config(&self) -> Config {
        let mut zones = Vec::new();
        for r in 0..self.rooms {
            zones.push(Zone {
                name: format!("room{r}"),
                kind: "room".into(),
                capacitance: 1.0,
                // only rooms with floor cooling carry an internal load
                gain: if self.slabs.contains(&r) { 1.0 } else { 0.0 },
                gain_uncertainty: self.uncertainty,
            });
        }
        for s in 0..self.slabs.len() {
            zones.push(Zone {
                name: format!("slab{s}"),
                kind: "slab".into(),
                capacitance: 2.0,
                gain: 0.0,
                gain_uncertainty: 0.0,
            });
        }
        let mut links = Vec::new();
        for &r in &self.exterior {
            links.push(Link {
                a: format!("room{r}"),
                b: "outside".into(),
                resistance: 4.0,
            });
        }
        for &(a, b) in &self.walls {
            links.push(Link {
                a: format!("room{a}"),
                b: format!("room{b}"),
                resistance: 2.0,
            });
        }
        for (s, &r) in self.slabs.iter().enumerate() {
            links.push(Link {
                a: format!("room{r}"),
                b: format!("slab{s}"),
                resistance: 0.25,
            });
        }
        let slabs = (0..self.slabs.len())
            .map(|s| Slab {
                zone: format!("slab{s}"),
                water: "water".into(),
                resistance: 1.0,
            })
            .collect();
        let thermal = ThermalConfig {
            zones,
            fixed: vec![
                FixedNode {
                    name: "outside".into(),
                    temperature: OUTSIDE,
                },
                FixedNode {
                    name: "water".into(),
                    temperature: WATER,
                },
            ],
            tau: self.tau(&links),
            links,
            slabs,
        };
        let n = self.dim();
        let mut lo = vec![ROOM_BAND.0; n];
        let mut hi = vec![ROOM_BAND.1; n];
        for i in self.rooms..n {
            lo[i] = SLAB_BAND.0;
            hi[i] = SLAB_BAND.1;
        }
        let mut props = BTreeMap::new();
        props.insert("B".to_string(), Rect::new(lo, hi));
        Config {
            abstraction: AbstractionConfig {
                dynamics: Dynamics::Thermal(thermal),
                domain: Rect::new(vec![DOMAIN.0; n], vec![DOMAIN.1; n]),
                grid: vec![self.grid; n],
                propositions: props,
            },
            spec: Spec::new(None, Some("B"), &[]),
            refine: RefineSettings {
                max_splits: 1,
                min_width: 0.0,
                target: None,
            },
        }
    }
}

/// One room with one slab; the desk-scale case.
pub fn desk() -> Layout {
    Layout {
        name: "r1s1".into(),
        rooms: 1,
        slabs: vec![0],
        walls: vec![],
        exterior: vec![0],
        grid: 8,
        uncertainty: 0.2,
    }
}

/// Two rooms, the second without a slab of its own.
pub fn two_rooms_one_slab() -> Layout {
    Layout {
        name: "r2s1".into(),
        rooms: 2,
        slabs: vec![0],
        walls: vec![(0, 1)],
        exterior: vec![0],
        grid: 2,
        uncertainty: 0.0,
    }
}

/// The benchmark suite, smallest first.
pub fn layouts() -> Vec<Layout> {
    let l = |name: &str, rooms, slabs: &[usize], walls: &[(usize, usize)], exterior: &[usize]| Layout {
        name: name.into(),
        rooms,
        slabs: slabs.to_vec(),
        walls: walls.to_vec(),
        exterior: exterior.to_vec(),
        grid: 2,
        uncertainty: 0.0,
    };
    vec![
        Layout {
            grid: 2,
            uncertainty: 0.0,
            ..desk()
        },
        two_rooms_one_slab(),
        l("r2s2", 2, &[0, 1], &[(0, 1)], &[0, 1]),
        l("r3s1", 3, &[1], &[(0, 1), (1, 2)], &[0, 2]),
        l("r3s2", 3, &[0, 2], &[(0, 1), (1, 2)], &[0, 1, 2]),
        l("r2s2-shared", 2, &[0, 0], &[(0, 1)], &[0, 1]),
    ]
}

/// Refines `abs` by `splits` cell splits using the explicit backend. Each
/// round splits up to `batch` cells chosen from the fixed-point trace; once
/// the trace selects nothing, the largest cells are split instead so the
/// requested depth is always reached.
pub fn refine_explicit(abs: Abstraction, spec: &Spec, splits: usize, batch: usize) -> Result<Abstraction> {
    let mut engine = Engine::new(abs, spec.clone(), Representation::LIST)?;
    let settings = RefineSettings {
        max_splits: batch.max(1),
        ..RefineSettings::default()
    };
    let mut done = 0;
    while done < splits {
        let sol = engine.solve()?;
        let mut cells = plan_from_trace(&engine.abs, &sol.trace, &settings).cells;
        if cells.is_empty() {
            cells = largest_cells(&engine.abs, settings.max_splits);
        }
        cells.truncate(splits - done);
        for q in cells {
            engine.split(q)?;
            done += 1;
        }
    }
    Ok(engine.abs)
}

fn largest_cells(abs: &Abstraction, n: usize) -> Vec<StateId> {
    let mut cells: Vec<(f64, StateId)> = abs.partition.cells().map(|(q, c)| (c.rect.volume(), q)).collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    cells.into_iter().take(n).map(|c| c.1).collect()
}

/// Initial cells of a refined abstraction, the sink included.
pub fn initial_states(abs: &Abstraction) -> Vec<StateId> {
    std::iter::once(SINK).chain(abs.partition.roots().iter().copied()).collect()
}

/// The representations compared in the benchmarks.
pub fn representations() -> Vec<Representation> {
    let mut out = vec![Representation::LIST];
    for enc in [EncodingKind::Log, EncodingKind::Split] {
        for reorder in [Reorder::None, Reorder::Sift] {
            out.push(Representation::bdd(enc, reorder));
        }
    }
    out
}

pub const SUMMARY_HEADER: &str =
    "layout,representation,encoding,reorder,n_states,n_transitions,synth_time_ms,bdd_nodes,nodes_per_var";

/// One final-synthesis measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub layout: String,
    pub representation: String,
    pub encoding: String,
    pub reorder: String,
    pub n_states: usize,
    pub n_transitions: usize,
    /// Median over the repetitions.
    pub synth_time_ms: f64,
    pub bdd_nodes: usize,
    pub nodes_per_var: f64,
    /// Refinement splits applied before measuring.
    #[serde(skip)]
    pub splits: usize,
    #[serde(skip)]
    pub win_states: usize,
}

impl Measurement {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3},{},{:.4}",
            self.layout,
            self.representation,
            self.encoding,
            self.reorder,
            self.n_states,
            self.n_transitions,
            self.synth_time_ms,
            self.bdd_nodes,
            self.nodes_per_var
        )
    }
}

pub fn summary_csv(rows: &[Measurement]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        writeln!(s, "{}", r.csv_row()).unwrap();
    }
    s
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Builds `repr` for the refined abstraction and times `repeats` winning-set
/// evaluations. Reordering, when enabled, happens once before the first
/// evaluation and is not timed.
pub fn measure(layout: &str, abs: &Abstraction, spec: &Spec, repr: Representation, repeats: usize) -> Result<Measurement> {
    let initial = initial_states(abs);
    let mut engine = Engine::with_replayed_encoding(abs.clone(), spec.clone(), repr, &initial)?;
    let mut times = Vec::with_capacity(repeats);
    let mut win_states = 0;
    for _ in 0..repeats.max(1) {
        let sol = engine.solve()?;
        win_states = sol.win.len();
        times.push(sol.synth_time.as_secs_f64() * 1e3);
    }
    let encoding = match repr.backend {
        Backend::List => "none".to_string(),
        Backend::Bdd => repr.encoding.name().to_string(),
    };
    Ok(Measurement {
        layout: layout.to_string(),
        representation: repr.label(),
        encoding,
        reorder: repr.reorder.name().to_string(),
        n_states: engine.fts().n_states(),
        n_transitions: engine.fts().n_transitions(),
        synth_time_ms: median(times),
        bdd_nodes: engine.bdd_nodes(),
        nodes_per_var: engine.nodes_per_var(),
        splits: abs.partition.history().len(),
        win_states,
    })
}

/// Table 1: every layout refined by `splits`, then one final synthesis per
/// representation.
pub fn table1(layouts: &[Layout], reprs: &[Representation], splits: usize, repeats: usize) -> Result<Vec<Measurement>> {
    let mut out = Vec::new();
    for layout in layouts {
        let cfg = layout.config();
        let abs = Abstraction::from_config(&cfg.abstraction)?;
        let abs = refine_explicit(abs, &cfg.spec, splits, splits.div_ceil(20).max(1))?;
        for &repr in reprs {
            out.push(measure(&layout.name, &abs, &cfg.spec, repr, repeats)?);
        }
    }
    Ok(out)
}

/// Table 2: one layout measured at increasing refinement levels.
pub fn sweep(layout: &Layout, reprs: &[Representation], levels: &[usize], repeats: usize) -> Result<Vec<Measurement>> {
    let cfg = layout.config();
    let mut abs = Abstraction::from_config(&cfg.abstraction)?;
    let mut out = Vec::new();
    let mut done = 0;
    for &level in levels {
        if level > done {
            let step = level - done;
            abs = refine_explicit(abs, &cfg.spec, step, step.div_ceil(10).max(1))?;
            done = level;
        }
        for &repr in reprs {
            out.push(measure(&layout.name, &abs, &cfg.spec, repr, repeats)?);
        }
    }
    Ok(out)
}

/// Outcome of a wall-clock-limited refinement run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRun {
    pub layout: String,
    pub representation: String,
    pub reorder: String,
    pub iterations: usize,
    /// Winning-set evaluations performed, one per iteration.
    pub synth_runs: usize,
    pub n_states: usize,
    /// Mean and variance of the iteration times, in ms, per block of 50
    /// iterations.
    pub buckets: Vec<(f64, f64)>,
    pub bdd_nodes: usize,
    pub nodes_per_var: f64,
}

/// Table 3: refine one cell per iteration with `repr` kept in sync until
/// `limit` elapses.
pub fn budget_run(layout: &Layout, repr: Representation, limit: Duration) -> Result<BudgetRun> {
    let cfg = layout.config();
    let abs = Abstraction::from_config(&cfg.abstraction)?;
    let mut engine = Engine::new(abs, cfg.spec.clone(), repr)?;
    let settings = RefineSettings::default();
    let start = Instant::now();
    let mut times = Vec::new();
    let mut synth_runs = 0;
    while start.elapsed() < limit {
        let tick = Instant::now();
        let sol = engine.solve()?;
        synth_runs += 1;
        let mut cells = plan_from_trace(&engine.abs, &sol.trace, &settings).cells;
        if cells.is_empty() {
            cells = largest_cells(&engine.abs, 1);
        }
        for q in cells {
            engine.split(q)?;
        }
        times.push(tick.elapsed().as_secs_f64() * 1e3);
    }
    let buckets = times
        .chunks(50)
        .map(|c| {
            let n = c.len() as f64;
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
            (mean, var)
        })
        .collect();
    Ok(BudgetRun {
        layout: layout.name.clone(),
        representation: repr.label(),
        reorder: repr.reorder.name().to_string(),
        iterations: times.len(),
        synth_runs,
        n_states: engine.fts().n_states(),
        buckets,
        bdd_nodes: engine.bdd_nodes(),
        nodes_per_var: engine.nodes_per_var(),
    })
}

pub const BUDGET_HEADER: &str =
    "layout,representation,reorder,iterations,synth_runs,n_states,bucket,mean_ms,var_ms2,bdd_nodes,nodes_per_var";

pub fn budget_csv(runs: &[BudgetRun]) -> String {
    let mut s = format!("{BUDGET_HEADER}\n");
    for r in runs {
        for (b, (mean, var)) in r.buckets.iter().enumerate() {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{:.3},{:.3},{},{:.4}",
                r.layout,
                r.representation,
                r.reorder,
                r.iterations,
                r.synth_runs,
                r.n_states,
                b,
                mean,
                var,
                r.bdd_nodes,
                r.nodes_per_var
            )
            .unwrap();
        }
    }
    s
}
