//! Rectangular partitions of a box-shaped domain and the finite abstraction
//! of discrete-time affine dynamics `x⁺ = A x + K + E d` with a box of
//! disturbances `d`.
//!
//! A transition `(q, u, q')` is present iff the interval image of cell `q`
//! under mode `u` meets the closed cell `q'`. Images that leave the domain
//! add a transition to the sink state [`SINK`], which has no outgoing
//! transitions and carries no proposition.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fts::{Fts, Triple};
use crate::{ActionId, StateId, StateSet};

/// State id of the out-of-domain sink.
pub const SINK: StateId = 0;

/// Relative slack added around computed images so that floating-point
/// rounding never drops a successor.
const SLACK: f64 = 1e-9;

fn slack(v: f64) -> f64 {
    SLACK * (1.0 + v.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "bounds of different dimension");
        Rect { lo, hi }
    }

    /// The zero-dimensional box.
    pub fn point0() -> Self {
        Rect::new(Vec::new(), Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    /// Longest side; ties go to the lowest axis.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for i in 1..self.dim() {
            if self.width(i) > self.width(best) {
                best = i;
            }
        }
        best
    }

    pub fn max_width(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| self.lo[i] <= v && v <= self.hi[i])
    }

    pub fn contains(&self, other: &Rect) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Closed intersection test: touching boundaries count.
    pub fn intersects(&self, other: &Rect) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    pub fn inflate(&self, f: impl Fn(f64) -> f64) -> Rect {
        Rect {
            lo: self.lo.iter().map(|&v| v - f(v)).collect(),
            hi: self.hi.iter().map(|&v| v + f(v)).collect(),
        }
    }

    /// Halves along `axis`.
    pub fn bisect(&self, axis: usize) -> (Rect, Rect) {
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let mut a = self.clone();
        let mut b = self.clone();
        a.hi[axis] = mid;
        b.lo[axis] = mid;
        (a, b)
    }
}

/// One control mode: `x⁺ = A x + K + E d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMode {
    pub a: Vec<Vec<f64>>,
    pub k: Vec<f64>,
    /// `n × n_d`; empty when there is no disturbance.
    #[serde(default)]
    pub e: Vec<Vec<f64>>,
}

impl AffineMode {
    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn n_dist(&self) -> usize {
        self.e.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self, n: usize, n_dist: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k.len() != n || self.a.len() != n || self.a.iter().any(|r| r.len() != n) {
            return bad(format!("mode dynamics must be {n}-dimensional"));
        }
        if n_dist > 0 && (self.e.len() != n || self.e.iter().any(|r| r.len() != n_dist)) {
            return bad(format!("disturbance matrix must be {n}×{n_dist}"));
        }
        if n_dist == 0 && self.e.iter().any(|r| !r.is_empty()) {
            return bad("disturbance matrix given without a disturbance box".into());
        }
        let finite = self.a.iter().chain(&self.e).flatten().chain(&self.k).all(|v| v.is_finite());
        if !finite {
            return bad("mode entries must be finite".into());
        }
        Ok(())
    }

    /// Successor of `x` under disturbance `d`.
    pub fn step(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let ax: f64 = self.a[i].iter().zip(x).map(|(a, x)| a * x).sum();
                let ed: f64 = self.e.get(i).map_or(0.0, |r| r.iter().zip(d).map(|(e, d)| e * d).sum());
                ax + self.k[i] + ed
            })
            .collect()
    }
}

/// Bounding box of `{A x + K + E d : x ∈ cell, d ∈ dist}`, exact up to
/// rounding: each row's positive coefficients take the matching bound and
/// its negative ones the opposite bound.
pub fn reach(cell: &Rect, mode: &AffineMode, dist: &Rect) -> Rect {
    let n = mode.dim();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let row = |coef: &[f64], bounds: &Rect, lo: &mut f64, hi: &mut f64| {
        for (j, &c) in coef.iter().enumerate() {
            if c >= 0.0 {
                *lo += c * bounds.lo[j];
                *hi += c * bounds.hi[j];
            } else {
                *lo += c * bounds.hi[j];
                *hi += c * bounds.lo[j];
            }
        }
    };
    for i in 0..n {
        lo[i] = mode.k[i];
        hi[i] = mode.k[i];
        row(&mode.a[i], cell, &mut lo[i], &mut hi[i]);
        if let Some(e) = mode.e.get(i) {
            row(e, dist, &mut lo[i], &mut hi[i]);
        }
    }
    Rect { lo, hi }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub rect: Rect,
    pub depth: u32,
}

/// A recorded split, enough to replay the refinement on an encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub parent: StateId,
    pub first: StateId,
    pub second: StateId,
    pub axis: usize,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf,
    Split { axis: usize, at: f64, first: StateId, second: StateId },
}

/// Nonuniform rectangular partition built from a uniform grid by repeated
/// bisection. Cell ids start at 1; [`SINK`] is never a cell.
#[derive(Debug, Clone)]
pub struct Partition {
    domain: Rect,
    grid: Vec<usize>,
    roots: Vec<StateId>,
    cells: BTreeMap<StateId, Cell>,
    /// Every cell ever created, with its box, including split ones.
    nodes: FxHashMap<StateId, (Rect, Node)>,
    history: Vec<SplitRecord>,
    next_id: StateId,
}

impl Partition {
    /// Uniform grid with `counts[i]` cells along axis `i`, numbered in
    /// row-major order with the last axis fastest.
    pub fn grid(domain: Rect, counts: &[usize]) -> Result<Self> {
        if counts.len() != domain.dim() || counts.contains(&0) {
            return Err(Error::Config(format!(
                "grid needs one positive count per axis ({} axes)",
                domain.dim()
            )));
        }
        if (0..domain.dim()).any(|i| !(domain.width(i) > 0.0)) {
            return Err(Error::Config("domain must have positive width on every axis".into()));
        }
        let mut p = Partition {
            domain,
            grid: counts.to_vec(),
            roots: Vec::new(),
            cells: BTreeMap::new(),
            nodes: FxHashMap::default(),
            history: Vec::new(),
            next_id: 1,
        };
        let total: usize = counts.iter().product();
        for flat in 0..total {
            let idx = p.unflatten(flat);
            let rect = p.grid_rect(&idx);
            let id = p.next_id;
            p.next_id += 1;
            p.roots.push(id);
            p.nodes.insert(id, (rect.clone(), Node::Leaf));
            p.cells.insert(id, Cell { rect, depth: 0 });
        }
        Ok(p)
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.grid.len()];
        for i in (0..self.grid.len()).rev() {
            idx[i] = flat % self.grid[i];
            flat /= self.grid[i];
        }
        idx
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.grid).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    fn grid_rect(&self, idx: &[usize]) -> Rect {
        let d = &self.domain;
        let mut lo = Vec::with_capacity(idx.len());
        let mut hi = Vec::with_capacity(idx.len());
        for (i, &k) in idx.iter().enumerate() {
            let w = d.width(i) / self.grid[i] as f64;
            lo.push(d.lo[i] + k as f64 * w);
            // the last cell ends exactly on the domain boundary
            hi.push(if k + 1 == self.grid[i] { d.hi[i] } else { d.lo[i] + (k + 1) as f64 * w });
        }
        Rect { lo, hi }
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    pub fn grid_counts(&self) -> &[usize] {
        &self.grid
    }

    pub fn roots(&self) -> &[StateId] {
        &self.roots
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, q: StateId) -> Option<&Cell> {
        self.cells.get(&q)
    }

    pub fn cells(&self) -> impl Iterator<Item = (StateId, &Cell)> + '_ {
        self.cells.iter().map(|(&q, c)| (q, c))
    }

    pub fn history(&self) -> &[SplitRecord] {
        &self.history
    }

    /// Bisects cell `q` along its longest side.
    pub fn split(&mut self, q: StateId) -> Result<SplitRecord> {
        if q == SINK {
            return Err(Error::SinkSplit);
        }
        let cell = self.cells.remove(&q).ok_or(Error::UnknownState(q))?;
        let axis = cell.rect.longest_axis();
        let (ra, rb) = cell.rect.bisect(axis);
        let at = ra.hi[axis];
        let (first, second) = (self.next_id, self.next_id + 1);
        self.next_id += 2;
        self.nodes.get_mut(&q).expect("cell has a node").1 = Node::Split { axis, at, first, second };
        for (id, rect) in [(first, ra), (second, rb)] {
            self.nodes.insert(id, (rect.clone(), Node::Leaf));
            self.cells.insert(
                id,
                Cell {
                    rect,
                    depth: cell.depth + 1,
                },
            );
        }
        let rec = SplitRecord {
            parent: q,
            first,
            second,
            axis,
        };
        self.history.push(rec);
        Ok(rec)
    }

    /// Cell containing `x`; points on a shared face go to the upper cell.
    pub fn locate(&self, x: &[f64]) -> Option<StateId> {
        if x.len() != self.domain.dim() || !self.domain.contains_point(x) {
            return None;
        }
        let idx: Vec<usize> = (0..x.len())
            .map(|i| {
                let w = self.domain.width(i) / self.grid[i] as f64;
                (((x[i] - self.domain.lo[i]) / w).floor().max(0.0) as usize).min(self.grid[i] - 1)
            })
            .collect();
        let mut q = self.roots[self.flatten(&idx)];
        loop {
            match &self.nodes[&q].1 {
                Node::Leaf => return Some(q),
                Node::Split { axis, at, first, second } => {
                    q = if x[*axis] < *at { *first } else { *second };
                }
            }
        }
    }

    /// Cells whose closure meets `r`, ascending.
    pub fn intersecting(&self, r: &Rect) -> Vec<StateId> {
        let d = &self.domain;
        let mut ranges = Vec::with_capacity(d.dim());
        for i in 0..d.dim() {
            if r.hi[i] < d.lo[i] || r.lo[i] > d.hi[i] {
                return Vec::new();
            }
            let w = d.width(i) / self.grid[i] as f64;
            let n = self.grid[i] as isize;
            // one cell of margin; the exact test happens below
            let a = (((r.lo[i] - d.lo[i]) / w).floor() as isize - 1).clamp(0, n - 1) as usize;
            let b = (((r.hi[i] - d.lo[i]) / w).floor() as isize + 1).clamp(0, n - 1) as usize;
            ranges.push((a, b));
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            let root = self.roots[self.flatten(&idx)];
            self.collect(root, r, &mut out);
            for i in (0..idx.len()).rev() {
                if idx[i] < ranges[i].1 {
                    idx[i] += 1;
                    continue 'outer;
                }
                idx[i] = ranges[i].0;
            }
            break;
        }
        out.sort_unstable();
        out
    }

    fn collect(&self, q: StateId, r: &Rect, out: &mut Vec<StateId>) {
        let (rect, node) = &self.nodes[&q];
        if !rect.intersects(r) {
            return;
        }
        match node {
            Node::Leaf => out.push(q),
            Node::Split { first, second, .. } => {
                self.collect(*first, r, out);
                self.collect(*second, r, out);
            }
        }
    }

    /// Cells contained in `b`.
    pub fn cells_within(&self, b: &Rect) -> StateSet {
        self.cells().filter(|(_, c)| b.contains(&c.rect)).map(|(q, _)| q).collect()
    }

    pub fn volume_of(&self, states: &StateSet) -> f64 {
        states.iter().filter_map(|q| self.cells.get(&q)).fold(0.0, |acc, c| acc + c.rect.volume())
    }
}

/// Over-approximated image of `cell` under `mode`, padded for rounding.
fn padded_reach(cell: &Rect, mode: &AffineMode, dist: &Rect) -> Rect {
    reach(cell, mode, dist).inflate(slack)
}

fn leaves_domain(domain: &Rect, image: &Rect) -> bool {
    // the padding is not counted against the domain
    !domain.inflate(|v| 2.0 * slack(v)).contains(image)
}

/// Proposition labels by containment: a cell carries `P` iff it lies inside
/// `box(P)`. The sink carries none.
pub fn label_cells(partition: &Partition, props: &BTreeMap<String, Rect>) -> BTreeMap<String, StateSet> {
    props
        .iter()
        .map(|(name, b)| (name.clone(), partition.cells_within(b)))
        .collect()
}

/// Full abstraction of `partition` under `modes`.
pub fn build_fts(partition: &Partition, modes: &[AffineMode], dist: &Rect, props: &BTreeMap<String, Rect>) -> Fts {
    let mut fts = Fts::new(modes.len());
    fts.insert_state(SINK).expect("fresh");
    for (q, _) in partition.cells() {
        fts.insert_state(q).expect("fresh");
    }
    for (q, cell) in partition.cells() {
        for (u, mode) in modes.iter().enumerate() {
            let image = padded_reach(&cell.rect, mode, dist);
            if leaves_domain(partition.domain(), &image) {
                fts.add_transition(q, u as ActionId, SINK).expect("live");
            }
            for r in partition.intersecting(&image) {
                fts.add_transition(q, u as ActionId, r).expect("live");
            }
        }
    }
    for (name, set) in label_cells(partition, props) {
        fts.set_label(&name, set);
    }
    fts
}

/// Transitions added by one split; everything incident to the parent is
/// gone.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDelta {
    pub split: SplitRecord,
    pub added: Vec<Triple>,
}

/// A partition together with its dynamics and abstraction, updated
/// incrementally as cells are split.
#[derive(Debug, Clone)]
pub struct Abstraction {
    pub partition: Partition,
    pub modes: Vec<AffineMode>,
    pub disturbance: Rect,
    pub props: BTreeMap<String, Rect>,
    pub fts: Fts,
    images: FxHashMap<(StateId, ActionId), Rect>,
}

impl Abstraction {
    pub fn new(partition: Partition, modes: Vec<AffineMode>, disturbance: Rect, props: BTreeMap<String, Rect>) -> Result<Self> {
        let n = partition.domain().dim();
        if modes.is_empty() {
            return Err(Error::Config("at least one mode is required".into()));
        }
        for m in &modes {
            m.validate(n, disturbance.dim())?;
        }
        for (name, b) in &props {
            if b.dim() != n {
                return Err(Error::Config(format!("proposition `{name}` must be {n}-dimensional")));
            }
        }
        let fts = build_fts(&partition, &modes, &disturbance, &props);
        let mut images = FxHashMap::default();
        for (q, cell) in partition.cells() {
            for (u, mode) in modes.iter().enumerate() {
                images.insert((q, u as ActionId), padded_reach(&cell.rect, mode, &disturbance));
            }
        }
        Ok(Abstraction {
            partition,
            modes,
            disturbance,
            props,
            fts,
            images,
        })
    }

    pub fn from_config(cfg: &AbstractionConfig) -> Result<Self> {
        let (modes, dist) = cfg.dynamics.modes()?;
        let partition = Partition::grid(cfg.domain.clone(), &cfg.grid)?;
        Abstraction::new(partition, modes, dist, cfg.propositions.clone())
    }

    /// Padded image of cell `q` under mode `u`.
    pub fn image(&self, q: StateId, u: ActionId) -> Option<&Rect> {
        self.images.get(&(q, u))
    }

    /// Splits `q` and patches the abstraction: the children get fresh
    /// outgoing transitions, and every `(p, u)` that reached the parent is
    /// retargeted to the children its image meets.
    pub fn split(&mut self, q: StateId) -> Result<SplitDelta> {
        let rec = self.partition.split(q)?;
        let preds: Vec<(StateId, ActionId)> = self
            .fts
            .in_edges(q)
            .iter()
            .copied()
            .filter(|&(p, _)| p != q)
            .collect();
        self.fts.remove_state(q)?;
        for u in 0..self.modes.len() as ActionId {
            self.images.remove(&(q, u));
        }
        let children = [rec.first, rec.second];
        for c in children {
            self.fts.insert_state(c)?;
        }
        let mut added = Vec::new();
        for c in children {
            let rect = self.partition.cell(c).expect("just created").rect.clone();
            for (u, mode) in self.modes.iter().enumerate() {
                let u = u as ActionId;
                let image = padded_reach(&rect, mode, &self.disturbance);
                if leaves_domain(self.partition.domain(), &image) {
                    added.push((c, u, SINK));
                }
                for r in self.partition.intersecting(&image) {
                    added.push((c, u, r));
                }
                self.images.insert((c, u), image);
            }
            for (name, b) in &self.props {
                if b.contains(&rect) {
                    self.fts.add_label(name, c)?;
                }
            }
        }
        for (p, u) in preds {
            let image = &self.images[&(p, u)];
            for c in children {
                if image.intersects(&self.partition.cell(c).expect("live").rect) {
                    added.push((p, u, c));
                }
            }
        }
        added.sort_unstable();
        added.dedup();
        for &(a, u, b) in &added {
            self.fts.add_transition(a, u, b)?;
        }
        Ok(SplitDelta { split: rec, added })
    }

    pub fn locate(&self, x: &[f64]) -> Option<StateId> {
        self.partition.locate(x)
    }
}

/// Zone of a thermal RC network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub name: String,
    /// Free-form type tag, e.g. `room` or `slab`.
    #[serde(default)]
    pub kind: String,
    pub capacitance: f64,
    /// Constant heat input `k_i`.
    #[serde(default)]
    pub gain: f64,
    /// Half-width of a bounded perturbation of the heat input.
    #[serde(default)]
    pub gain_uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedNode {
    pub name: String,
    pub temperature: f64,
}

/// Thermal resistance between two nodes (zones or fixed nodes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: String,
    pub b: String,
    pub resistance: f64,
}

/// A slab whose coupling to a supply-water node is switched by the control
/// input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub zone: String,
    pub water: String,
    pub resistance: f64,
}

/// RC network `c_i dT_i/dt = Σ_j (T_j − T_i)/R_ij + k_i`, discretised by
/// forward Euler with step `tau`. Mode `m` switches the flow of slab `s` on
/// iff bit `s` of `m` is set, giving `2^{n_s}` modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalConfig {
    pub zones: Vec<Zone>,
    #[serde(default)]
    pub fixed: Vec<FixedNode>,
    #[serde(default)]
    pub links: Vec<Link>,
    #[serde(default)]
    pub slabs: Vec<Slab>,
    pub tau: f64,
}

enum Endpoint {
    Zone(usize),
    Fixed(f64),
}

impl ThermalConfig {
    fn endpoint(&self, name: &str) -> Result<Endpoint> {
        if let Some(i) = self.zones.iter().position(|z| z.name == name) {
            return Ok(Endpoint::Zone(i));
        }
        if let Some(f) = self.fixed.iter().find(|f| f.name == name) {
            return Ok(Endpoint::Fixed(f.temperature));
        }
        Err(Error::Config(format!("unknown thermal node `{name}`")))
    }

    fn zone(&self, name: &str) -> Result<usize> {
        match self.endpoint(name)? {
            Endpoint::Zone(i) => Ok(i),
            Endpoint::Fixed(_) => Err(Error::Config(format!("`{name}` is a fixed node, not a zone"))),
        }
    }

    /// One affine mode per on/off slab combination, and the disturbance box
    /// (one dimension per zone with a nonzero gain uncertainty).
    pub fn modes(&self) -> Result<(Vec<AffineMode>, Rect)> {
        let n = self.zones.len();
        if n == 0 {
            return Err(Error::Config("thermal network has no zones".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be positive".into()));
        }
        for z in &self.zones {
            if !(z.capacitance > 0.0) {
                return Err(Error::Config(format!("zone `{}` needs a positive capacitance", z.name)));
            }
        }
        let mut links = Vec::new();
        for l in &self.links {
            if !(l.resistance > 0.0) {
                return Err(Error::Config(format!("link {}–{} needs a positive resistance", l.a, l.b)));
            }
            links.push((self.endpoint(&l.a)?, self.endpoint(&l.b)?, l.resistance));
        }
        let mut slabs = Vec::new();
        for s in &self.slabs {
            if !(s.resistance > 0.0) {
                return Err(Error::Config(format!("slab `{}` needs a positive resistance", s.zone)));
            }
            slabs.push((self.zone(&s.zone)?, self.endpoint(&s.water)?, s.resistance));
        }
        if slabs.len() > 16 {
            return Err(Error::Config("at most 16 switched slabs are supported".into()));
        }
        let uncertain: Vec<usize> = (0..n).filter(|&i| self.zones[i].gain_uncertainty > 0.0).collect();
        let mut modes = Vec::with_capacity(1 << slabs.len());
        for m in 0..1usize << slabs.len() {
            // continuous-time generator and affine part
            let mut gen = vec![vec![0.0; n]; n];
            let mut aff: Vec<f64> = self.zones.iter().map(|z| z.gain).collect();
            let mut couple = |a: &Endpoint, b: &Endpoint, r: f64| match (a, b) {
                (Endpoint::Zone(i), Endpoint::Zone(j)) => {
                    gen[*i][*i] -= 1.0 / r;
                    gen[*i][*j] += 1.0 / r;
                    gen[*j][*j] -= 1.0 / r;
                    gen[*j][*i] += 1.0 / r;
                }
                (Endpoint::Zone(i), Endpoint::Fixed(t)) | (Endpoint::Fixed(t), Endpoint::Zone(i)) => {
                    gen[*i][*i] -= 1.0 / r;
                    aff[*i] += t / r;
                }
                (Endpoint::Fixed(_), Endpoint::Fixed(_)) => {}
            };
            for (a, b, r) in &links {
                couple(a, b, *r);
            }
            for (s, (zone, water, r)) in slabs.iter().enumerate() {
                if m >> s & 1 == 1 {
                    couple(&Endpoint::Zone(*zone), water, *r);
                }
            }
            let mut a = vec![vec![0.0; n]; n];
            let mut k = vec![0.0; n];
            let mut e = vec![vec![0.0; uncertain.len()]; if uncertain.is_empty() { 0 } else { n }];
            for i in 0..n {
                let scale = self.tau / self.zones[i].capacitance;
                for j in 0..n {
                    a[i][j] = scale * gen[i][j] + if i == j { 1.0 } else { 0.0 };
                }
                if a[i][i] < 0.0 {
                    return Err(Error::Config(format!(
                        "tau = {} is too large: zone `{}` gets a negative self-coefficient in mode {m}",
                        self.tau, self.zones[i].name
                    )));
                }
                k[i] = scale * aff[i];
                if let Some(col) = uncertain.iter().position(|&z| z == i) {
                    e[i][col] = scale;
                }
            }
            modes.push(AffineMode { a, k, e });
        }
        let dist = Rect::new(
            uncertain.iter().map(|&i| -self.zones[i].gain_uncertainty).collect(),
            uncertain.iter().map(|&i| self.zones[i].gain_uncertainty).collect(),
        );
        Ok((modes, dist))
    }
}

/// Shorthand for [`ThermalConfig::modes`].
pub fn thermal_modes(cfg: &ThermalConfig) -> Result<(Vec<AffineMode>, Rect)> {
    cfg.modes()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Dynamics {
    Affine {
        modes: Vec<AffineMode>,
        #[serde(default)]
        disturbance: Option<Rect>,
    },
    Thermal(ThermalConfig),
}

impl Dynamics {
    pub fn modes(&self) -> Result<(Vec<AffineMode>, Rect)> {
        match self {
            Dynamics::Affine { modes, disturbance } => {
                Ok((modes.clone(), disturbance.clone().unwrap_or_else(Rect::point0)))
            }
            Dynamics::Thermal(t) => t.modes(),
        }
    }
}

/// Dynamics, domain, initial grid and proposition boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionConfig {
    pub dynamics: Dynamics,
    pub domain: Rect,
    pub grid: Vec<usize>,
    #[serde(default)]
    pub propositions: BTreeMap<String, Rect>,
}
