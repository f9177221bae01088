//! Variable reordering by adjacent level swaps.
//!
//! Swaps rewrite nodes in place so that node ids held by live handles keep
//! denoting the same functions. Before any swap the store is swept, so every
//! remaining node is reachable from a handle and the allocated count is the
//! live count that the heuristics minimise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manager::{Inner, NodeId};
use crate::VarId;

#[derive(Debug, Clone, PartialEq)]
pub enum ReorderMethod {
    /// Rudell sifting: each variable is moved through every level and left
    /// where the store was smallest.
    Sift {
        /// Abandon a sifting direction once the store grows past this factor
        /// of the best size seen for the current variable.
        max_growth: f64,
    },
    /// Simulated annealing over adjacent swaps.
    Anneal(AnnealConfig),
}

impl ReorderMethod {
    pub fn sift() -> Self {
        ReorderMethod::Sift { max_growth: 1.2 }
    }

    pub fn anneal() -> Self {
        ReorderMethod::Anneal(AnnealConfig::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReorderMethod::Sift { .. } => "sift",
            ReorderMethod::Anneal(_) => "anneal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    /// Starting temperature as a fraction of the initial node count.
    pub initial_temp: f64,
    /// Geometric cooling factor applied after every move.
    pub cooling: f64,
    /// Number of proposed moves; 0 means `8 * n_vars^2`.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            initial_temp: 0.05,
            cooling: 0.995,
            iterations: 0,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReorderReport {
    pub method: &'static str,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub swaps: usize,
    pub order: Vec<VarId>,
}

pub(crate) fn run(m: &mut Inner, method: &ReorderMethod) -> ReorderReport {
    m.gc();
    let nodes_before = m.allocated();
    let mut swaps = 0;
    if m.num_vars() > 1 {
        swaps = match method {
            ReorderMethod::Sift { max_growth } => sift(m, *max_growth),
            ReorderMethod::Anneal(cfg) => anneal(m, cfg),
        };
    }
    m.clear_cache();
    m.stats.reorderings += 1;
    ReorderReport {
        method: method.name(),
        nodes_before,
        nodes_after: m.allocated(),
        swaps,
        order: m.level_to_var.iter().map(|&v| VarId(v)).collect(),
    }
}

/// Exchanges the variables at `level` and `level + 1`.
pub(crate) fn swap_levels(m: &mut Inner, level: usize) {
    let x = m.level_to_var[level];
    let y = m.level_to_var[level + 1];
    let upper: Vec<NodeId> = m.unique[x as usize].values().copied().collect();
    for f in upper {
        let node = m.node(f);
        let lo_y = m.node(node.lo).var == y;
        let hi_y = m.node(node.hi).var == y;
        if !lo_y && !hi_y {
            // independent of y: the node keeps its var and simply sinks a level
            continue;
        }
        m.unique[x as usize].remove(&(node.lo, node.hi));
        let (f00, f01) = if lo_y {
            let c = m.node(node.lo);
            (c.lo, c.hi)
        } else {
            (node.lo, node.lo)
        };
        let (f10, f11) = if hi_y {
            let c = m.node(node.hi);
            (c.lo, c.hi)
        } else {
            (node.hi, node.hi)
        };
        // f = y ? (x ? f11 : f01) : (x ? f10 : f00), with x now below y.
        // The grandchildren all sit below both levels, so the stale level
        // map is still consistent for these nodes.
        let new_lo = m.mk(x, f00, f10);
        let new_hi = m.mk(x, f01, f11);
        m.inc(new_lo);
        m.inc(new_hi);
        m.dec_free(node.lo);
        m.dec_free(node.hi);
        let slot = &mut m.nodes[f as usize];
        slot.var = y;
        slot.lo = new_lo;
        slot.hi = new_hi;
        m.unique[y as usize].insert((new_lo, new_hi), f);
    }
    m.level_to_var[level] = y;
    m.level_to_var[level + 1] = x;
    m.var_to_level[y as usize] = level as u32;
    m.var_to_level[x as usize] = level as u32 + 1;
}

fn sift(m: &mut Inner, max_growth: f64) -> usize {
    let n = m.num_vars();
    let mut vars: Vec<u32> = (0..n as u32).collect();
    vars.sort_by_key(|&v| std::cmp::Reverse(m.unique[v as usize].len()));
    let mut swaps = 0;
    for v in vars {
        let mut pos = m.var_to_level[v as usize] as usize;
        let mut best = m.allocated();
        let mut best_pos = pos;
        let limit = |best: usize| (best as f64 * max_growth).ceil() as usize;
        // go toward the nearer end first
        let down_first = pos >= n / 2;
        for phase in 0..2 {
            let downward = (phase == 0) == down_first;
            loop {
                if downward {
                    if pos + 1 >= n {
                        break;
                    }
                    swap_levels(m, pos);
                    pos += 1;
                } else {
                    if pos == 0 {
                        break;
                    }
                    swap_levels(m, pos - 1);
                    pos -= 1;
                }
                swaps += 1;
                let size = m.allocated();
                if size < best {
                    best = size;
                    best_pos = pos;
                }
                if size > limit(best) {
                    break;
                }
            }
        }
        while pos < best_pos {
            swap_levels(m, pos);
            pos += 1;
            swaps += 1;
        }
        while pos > best_pos {
            swap_levels(m, pos - 1);
            pos -= 1;
            swaps += 1;
        }
        debug_assert_eq!(m.allocated(), best);
    }
    swaps
}

fn anneal(m: &mut Inner, cfg: &AnnealConfig) -> usize {
    let n = m.num_vars();
    let iterations = if cfg.iterations == 0 { 8 * n * n } else { cfg.iterations };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = m.allocated();
    let mut best = current;
    let mut best_order = m.level_to_var.clone();
    let mut temp = (cfg.initial_temp * current as f64).max(1e-9);
    let mut swaps = 0;
    for _ in 0..iterations {
        let level = rng.random_range(0..n - 1);
        swap_levels(m, level);
        swaps += 1;
        let size = m.allocated();
        let delta = size as f64 - current as f64;
        if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
            current = size;
            if size < best {
                best = size;
                best_order = m.level_to_var.clone();
            }
        } else {
            swap_levels(m, level);
            swaps += 1;
        }
        temp *= cfg.cooling;
    }
    swaps + set_order(m, &best_order)
}

/// Bubbles variables into `order` (top first). Returns the number of swaps.
pub(crate) fn set_order(m: &mut Inner, order: &[u32]) -> usize {
    let mut swaps = 0;
    for (target, &v) in order.iter().enumerate() {
        let mut pos = m.var_to_level[v as usize] as usize;
        while pos > target {
            swap_levels(m, pos - 1);
            pos -= 1;
            swaps += 1;
        }
    }
    swaps
}
