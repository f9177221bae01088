//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitsynth::controller::Controller;
use splitsynth::fts::{Fts, PreMode, Quant, Quantifier};
use splitsynth::synthesis::Spec;
use splitsynth::{StateId, StateSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random system over states `1..=n`: each `(q, u)` is enabled with
/// probability `p_enabled` and then gets 1 to `max_succ` successors.
pub fn random_fts(rng: &mut impl Rng, n: usize, m: usize, p_enabled: f64, max_succ: usize) -> Fts {
    let mut fts = Fts::new(m);
    for q in 1..=n as StateId {
        fts.insert_state(q).unwrap();
    }
    for q in 1..=n as StateId {
        for u in 0..m as u32 {
            if rng.random_bool(p_enabled) {
                let k = rng.random_range(1..=max_succ);
                for _ in 0..k {
                    let r = rng.random_range(1..=n as StateId);
                    fts.add_transition(q, u, r).unwrap();
                }
            }
        }
    }
    fts
}

pub fn random_subset(rng: &mut impl Rng, states: impl Iterator<Item = StateId>, p: f64) -> StateSet {
    states.filter(|_| rng.random_bool(p)).collect()
}

/// Predecessor operator evaluated straight from its definition.
pub fn brute_pre(fts: &Fts, x: &StateSet, quant: Quant, mode: PreMode) -> StateSet {
    let mut out = StateSet::new();
    for q in fts.states() {
        let actions: Vec<u32> = match (mode, quant.0) {
            (PreMode::Strict, Quantifier::Forall) => (0..fts.n_actions() as u32).collect(),
            _ => (0..fts.n_actions() as u32)
                .filter(|&u| fts.successors(q, u).next().is_some())
                .collect(),
        };
        let ok_action = |u: u32| {
            let succ: Vec<StateId> = fts.successors(q, u).collect();
            match quant.1 {
                Quantifier::Exists => succ.iter().any(|&r| x.contains(r)),
                Quantifier::Forall => !succ.is_empty() && succ.iter().all(|&r| x.contains(r)),
            }
        };
        let member = match quant.0 {
            Quantifier::Exists => actions.iter().any(|&u| ok_action(u)),
            Quantifier::Forall => match mode {
                PreMode::Enabled => !actions.is_empty() && actions.iter().all(|&u| ok_action(u)),
                PreMode::Strict => actions.iter().all(|&u| ok_action(u)),
            },
        };
        if member {
            out.insert(q);
        }
    }
    out
}

/// States from which `target` can be forced, by worklist: a state joins
/// once some enabled action has all its successors already inside.
pub fn controllable_closure(fts: &Fts, target: &StateSet) -> StateSet {
    let mut inside = target.clone();
    let mut queue: VecDeque<StateId> = target.iter().collect();
    while let Some(r) = queue.pop_front() {
        for &(p, u) in fts.in_edges(r) {
            if inside.contains(p) {
                continue;
            }
            if fts.successors(p, u).all(|s| inside.contains(s)) {
                inside.insert(p);
                queue.push_back(p);
            }
        }
    }
    inside
}

/// Turn-based game graph with max-parity winning condition for player 0.
pub struct Game {
    pub owner: Vec<u8>,
    pub priority: Vec<u32>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl Game {
    fn new() -> Self {
        Game {
            owner: Vec::new(),
            priority: Vec::new(),
            succ: Vec::new(),
            pred: Vec::new(),
        }
    }

    fn node(&mut self, owner: u8, priority: u32) -> usize {
        self.owner.push(owner);
        self.priority.push(priority);
        self.succ.push(Vec::new());
        self.pred.push(Vec::new());
        self.owner.len() - 1
    }

    fn edge(&mut self, a: usize, b: usize) {
        self.succ[a].push(b);
        self.pred[b].push(a);
    }

    fn attractor(&self, alive: &[bool], target: &[usize], player: u8) -> Vec<bool> {
        let n = self.owner.len();
        let mut attr = vec![false; n];
        let mut count: Vec<usize> = (0..n)
            .map(|v| self.succ[v].iter().filter(|&&w| alive[w]).count())
            .collect();
        let mut queue = VecDeque::new();
        for &t in target {
            if alive[t] && !attr[t] {
                attr[t] = true;
                queue.push_back(t);
            }
        }
        while let Some(w) = queue.pop_front() {
            for &v in &self.pred[w] {
                if !alive[v] || attr[v] {
                    continue;
                }
                if self.owner[v] == player {
                    attr[v] = true;
                    queue.push_back(v);
                } else {
                    count[v] -= 1;
                    if count[v] == 0 {
                        attr[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        attr
    }

    /// Zielonka's recursive algorithm; returns player 0's winning region.
    pub fn solve(&self) -> Vec<bool> {
        let alive = vec![true; self.owner.len()];
        self.zielonka(&alive).0
    }

    fn zielonka(&self, alive: &[bool]) -> (Vec<bool>, Vec<bool>) {
        let n = self.owner.len();
        let nodes: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
        if nodes.is_empty() {
            return (vec![false; n], vec![false; n]);
        }
        let p = nodes.iter().map(|&v| self.priority[v]).max().unwrap();
        let player = (p % 2) as u8;
        let top: Vec<usize> = nodes.iter().copied().filter(|&v| self.priority[v] == p).collect();
        let a = self.attractor(alive, &top, player);
        let rest: Vec<bool> = (0..n).map(|v| alive[v] && !a[v]).collect();
        let (w0, w1) = self.zielonka(&rest);
        let opp_win = if player == 0 { &w1 } else { &w0 };
        if !opp_win.iter().any(|&b| b) {
            let all = alive.to_vec();
            return if player == 0 { (all, vec![false; n]) } else { (vec![false; n], all) };
        }
        let opp_targets: Vec<usize> = (0..n).filter(|&v| opp_win[v]).collect();
        let b = self.attractor(alive, &opp_targets, 1 - player);
        let rest: Vec<bool> = (0..n).map(|v| alive[v] && !b[v]).collect();
        let (mut w0, mut w1) = self.zielonka(&rest);
        let opp = if player == 0 { &mut w1 } else { &mut w0 };
        for v in 0..n {
            if b[v] {
                opp[v] = true;
            }
        }
        (w0, w1)
    }
}

/// Product of `fts` with the goal counter, as a parity game. Player-0 nodes
/// `(q, i)` get priority 3 outside `B`, 2 in `B ∩ Gⁱ` (where the counter
/// advances) and 1 otherwise; player-1 nodes `(q, i, u)` pick a successor.
/// States outside `A` and states without enabled actions lose.
pub struct Product {
    pub game: Game,
    /// `index[q][i]`: player-0 node of state `q` in phase `i`.
    pub index: Vec<Vec<usize>>,
}

pub fn product_game(fts: &Fts, a: &StateSet, b: &StateSet, goals: &[StateSet]) -> Product {
    let n_phase = goals.len().max(1);
    let max_q = fts.states().max().unwrap_or(0) as usize;
    let mut game = Game::new();
    let mut index = vec![vec![usize::MAX; n_phase]; max_q + 1];
    let goal = |i: usize| goals.get(i).unwrap_or(b);
    for q in fts.states() {
        for (i, slot) in index[q as usize].iter_mut().enumerate() {
            let prio = if !a.contains(q) || !b.contains(q) {
                3
            } else if goal(i).contains(q) {
                2
            } else {
                1
            };
            *slot = game.node(0, prio);
        }
    }
    for q in fts.states() {
        for i in 0..n_phase {
            let v = index[q as usize][i];
            let acts = fts.enabled_actions(q);
            if !a.contains(q) || acts.is_empty() {
                game.priority[v] = 3;
                game.edge(v, v);
                continue;
            }
            let next_phase = if b.contains(q) && goal(i).contains(q) { (i + 1) % n_phase } else { i };
            for u in acts {
                let w = game.node(1, 0);
                game.edge(v, w);
                for r in fts.successors(q, u) {
                    game.edge(w, index[r as usize][next_phase]);
                }
            }
        }
    }
    Product { game, index }
}

/// Winning states by the parity-game oracle, starting in phase 0.
pub fn game_win(fts: &Fts, a: &StateSet, b: &StateSet, goals: &[StateSet]) -> StateSet {
    let prod = product_game(fts, a, b, goals);
    let w = prod.game.solve();
    fts.states().filter(|&q| w[prod.index[q as usize][0]]).collect()
}

/// Player 0's winning nodes found by trying every positional strategy.
/// Only feasible for very small games.
pub fn enumerate_strategies(game: &Game) -> Vec<bool> {
    let n = game.owner.len();
    let choice_nodes: Vec<usize> = (0..n).filter(|&v| game.owner[v] == 0).collect();
    let mut won = vec![false; n];
    let mut pick = vec![0usize; choice_nodes.len()];
    loop {
        // graph where player 0 follows `pick`
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                if game.owner[v] == 0 {
                    let k = choice_nodes.binary_search(&v).unwrap();
                    vec![game.succ[v][pick[k]]]
                } else {
                    game.succ[v].clone()
                }
            })
            .collect();
        let bad = odd_cycle_reach(&succ, &game.priority);
        for v in 0..n {
            if !bad[v] {
                won[v] = true;
            }
        }
        // next strategy
        let mut k = 0;
        loop {
            if k == pick.len() {
                return won;
            }
            pick[k] += 1;
            if pick[k] < game.succ[choice_nodes[k]].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// Nodes from which some path reaches a cycle whose largest priority is odd.
fn odd_cycle_reach(succ: &[Vec<usize>], priority: &[u32]) -> Vec<bool> {
    let n = succ.len();
    let mut bad_cycle = vec![false; n];
    for v in 0..n {
        let p = priority[v];
        if p.is_multiple_of(2) {
            continue;
        }
        // is there a cycle through v using only nodes of priority <= p?
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = succ[v].iter().copied().filter(|&w| priority[w] <= p).collect();
        while let Some(w) = stack.pop() {
            if w == v {
                bad_cycle[v] = true;
                break;
            }
            if seen[w] {
                continue;
            }
            seen[w] = true;
            stack.extend(succ[w].iter().copied().filter(|&x| priority[x] <= p));
        }
    }
    // backward reachability to a bad cycle node
    let mut bad = bad_cycle.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..n {
            if !bad[v] && succ[v].iter().any(|&w| bad[w]) {
                bad[v] = true;
                changed = true;
            }
        }
    }
    bad
}

/// Exhaustive check that every play compatible with `ctrl` from the
/// winning set stays in `A`, is eventually confined to `B`, and completes
/// goals forever. Returns a description of the first problem found.
pub fn lasso_check(fts: &Fts, ctrl: &Controller, a: &StateSet, b: &StateSet) -> Result<usize, String> {
    let g = ctrl.n_goals();
    let mut nodes: Vec<(StateId, usize)> = Vec::new();
    let mut id = std::collections::HashMap::new();
    let mut edges: Vec<Vec<(usize, bool)>> = Vec::new();
    let mut queue = VecDeque::new();
    for q in ctrl.win().iter() {
        id.insert((q, 0usize), nodes.len());
        nodes.push((q, 0));
        edges.push(Vec::new());
        queue.push_back((q, 0usize));
    }
    while let Some((q, i)) = queue.pop_front() {
        if !a.contains(q) {
            return Err(format!("state {q} outside A is reachable"));
        }
        let e = ctrl
            .entry(q, i)
            .ok_or_else(|| format!("no entry for state {q} in phase {i}"))?;
        let next = if e.advance { (i + 1) % g } else { i };
        let from = id[&(q, i)];
        for &u in &e.actions {
            let succ: Vec<StateId> = fts.successors(q, u).collect();
            if succ.is_empty() {
                return Err(format!("action {u} of state {q} has no successor"));
            }
            for r in succ {
                let key = (r, next);
                let to = *id.entry(key).or_insert_with(|| {
                    nodes.push(key);
                    edges.push(Vec::new());
                    queue.push_back(key);
                    nodes.len() - 1
                });
                edges[from].push((to, e.advance));
            }
        }
    }
    // without advancing edges the graph must be acyclic
    let plain: Vec<Vec<usize>> = edges
        .iter()
        .map(|es| es.iter().filter(|e| !e.1).map(|e| e.0).collect())
        .collect();
    if has_cycle(&plain) {
        return Err("a cycle completes no goal".into());
    }
    // every state on a cycle must be in B
    let all: Vec<Vec<usize>> = edges.iter().map(|es| es.iter().map(|e| e.0).collect()).collect();
    let comp = scc(&all);
    let mut size = vec![0usize; nodes.len()];
    for &c in &comp {
        size[c] += 1;
    }
    for (v, &(q, _)) in nodes.iter().enumerate() {
        let on_cycle = size[comp[v]] > 1 || all[v].contains(&v);
        if on_cycle && !b.contains(q) {
            return Err(format!("state {q} outside B lies on a cycle"));
        }
    }
    Ok(nodes.len())
}

fn has_cycle(succ: &[Vec<usize>]) -> bool {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &w in s {
            indeg[w] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop_front() {
        seen += 1;
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    seen < n
}

/// Strongly connected components (Kosaraju); returns a component id per node.
fn scc(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut stack = vec![(s, 0usize)];
        seen[s] = true;
        while let Some((v, k)) = stack.pop() {
            if k < succ[v].len() {
                stack.push((v, k + 1));
                let w = succ[v][k];
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut pred = vec![Vec::new(); n];
    for (v, s) in succ.iter().enumerate() {
        for &w in s {
            pred[w].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut c = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = c;
        while let Some(v) = stack.pop() {
            for &w in &pred[v] {
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    stack.push(w);
                }
            }
        }
        c += 1;
    }
    comp
}

/// Transition triples as an ordered set, for backend comparisons.
pub fn triples(fts: &Fts) -> BTreeSet<(u32, u32, u32)> {
    fts.transitions().collect()
}

/// Runs `splits` random splits on a log encoding and checks the width
/// after each one. Returns the number of checks.
pub fn log_width_run(rng: &mut impl Rng, initial: usize, splits: usize) -> Result<usize, String> {
    use splitsynth::encoding::{ceil_log2, LogEncoding};
    let mut enc = LogEncoding::from_states(1..=initial as StateId).map_err(|e| e.to_string())?;
    let mut live: Vec<StateId> = (1..=initial as StateId).collect();
    let mut next = initial as StateId + 1;
    let mut checks = 0;
    for _ in 0..splits {
        let i = rng.random_range(0..live.len());
        let parent = live.swap_remove(i);
        enc.split(parent, next, next + 1).map_err(|e| e.to_string())?;
        live.push(next);
        live.push(next + 1);
        next += 2;
        if enc.width() != ceil_log2(live.len()) {
            return Err(format!("width {} for {} states", enc.width(), live.len()));
        }
        checks += 1;
    }
    Ok(checks)
}

/// Random split sequence on a split encoding, checking injectivity,
/// zero padding past each state's depth, and that a split only changes
/// the parent's code (other codes are merely padded).
pub fn split_laws_run(rng: &mut impl Rng, roots: usize, splits: usize) -> Result<(), String> {
    use splitsynth::encoding::SplitEncoding;
    let root_ids: Vec<StateId> = (1..=roots as StateId).collect();
    let mut enc = SplitEncoding::from_roots(&root_ids).map_err(|e| e.to_string())?;
    let mut live = root_ids;
    let mut next = roots as StateId + 1;
    for _ in 0..splits {
        let before: Vec<(StateId, Vec<bool>)> = live.iter().map(|&q| (q, enc.bits(q).unwrap().0)).collect();
        let i = rng.random_range(0..live.len());
        let parent = live.swap_remove(i);
        let depth = enc.depth(parent).unwrap() as usize;
        let parent_bits = enc.bits(parent).unwrap().0;
        enc.split(parent, next, next + 1).map_err(|e| e.to_string())?;
        let (a, b) = (next, next + 1);
        live.push(a);
        live.push(b);
        next += 2;
        let width = enc.width();
        // locality
        for (q, old) in &before {
            if *q == parent {
                continue;
            }
            let now = enc.bits(*q).unwrap().0;
            if now[..old.len()] != old[..] || now[old.len()..].iter().any(|&x| x) {
                return Err(format!("state {q} changed beyond padding"));
            }
        }
        let pos = enc.k() + depth;
        for (child, bit) in [(a, false), (b, true)] {
            let code = enc.bits(child).unwrap().0;
            let mut expect = parent_bits.clone();
            expect.resize(width, false);
            expect[pos] = bit;
            if code != expect {
                return Err(format!("child {child} has code {code:?}"));
            }
        }
        // padding and injectivity
        let mut seen = BTreeSet::new();
        for &q in &live {
            let code = enc.bits(q).unwrap().0;
            let d = enc.depth(q).unwrap() as usize;
            if code.len() != width || code[enc.k() + d..].iter().any(|&x| x) {
                return Err(format!("state {q} at depth {d} has code {code:?}"));
            }
            if enc.decode(&code) != Some(q) || !seen.insert(code) {
                return Err(format!("code of state {q} is not unique"));
            }
        }
    }
    Ok(())
}

/// Random affine system on `[0, 10]^n` with a small disturbance.
pub fn random_affine(rng: &mut impl Rng, n: usize, modes: usize) -> splitsynth::abstraction::Abstraction {
    use splitsynth::abstraction::{AffineMode, Partition, Rect};
    let domain = Rect::new(vec![0.0; n], vec![10.0; n]);
    let mk = |rng: &mut dyn rand::RngCore| {
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let base = if i == j { 0.6 } else { 0.0 };
                        base + rng.random_range(-0.3..0.3)
                    })
                    .collect()
            })
            .collect();
        let k: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
        let e: Vec<Vec<f64>> = (0..n).map(|i| vec![if i == 0 { 1.0 } else { 0.5 }]).collect();
        AffineMode { a, k, e }
    };
    let modes: Vec<AffineMode> = (0..modes).map(|_| mk(rng)).collect();
    let grid = vec![if n == 2 { 4 } else { 3 }; n];
    let partition = Partition::grid(domain, &grid).unwrap();
    let mut props = std::collections::BTreeMap::new();
    props.insert("P".to_string(), Rect::new(vec![2.0; n], vec![7.5; n]));
    splitsynth::abstraction::Abstraction::new(partition, modes, Rect::new(vec![-0.2], vec![0.2]), props).unwrap()
}

/// Samples `samples` concrete steps and returns the number whose outcome
/// the abstraction does not account for.
pub fn soundness_violations(rng: &mut impl Rng, abs: &splitsynth::abstraction::Abstraction, samples: usize) -> usize {
    use splitsynth::abstraction::SINK;
    let cells: Vec<(StateId, splitsynth::abstraction::Rect)> =
        abs.partition.cells().map(|(q, c)| (q, c.rect.clone())).collect();
    let dist = &abs.disturbance;
    let mut bad = 0;
    for _ in 0..samples {
        let (q, rect) = &cells[rng.random_range(0..cells.len())];
        let x: Vec<f64> = (0..rect.dim()).map(|i| rng.random_range(rect.lo[i]..=rect.hi[i])).collect();
        let d: Vec<f64> = (0..dist.dim()).map(|i| rng.random_range(dist.lo[i]..=dist.hi[i])).collect();
        let u = rng.random_range(0..abs.modes.len()) as u32;
        let y = abs.modes[u as usize].step(&x, &d);
        let target = abs.locate(&y).unwrap_or(SINK);
        if !abs.fts.has_transition(*q, u, target) {
            bad += 1;
        }
    }
    bad
}

/// Random game instance with labels `A`, `B`, `G0`, `G1`.
pub fn game_instance(seed: u64) -> (Fts, Spec) {
    let mut r = rng(seed);
    let n = r.random_range(1..=12);
    let m = r.random_range(1..=3);
    let p = r.random_range(0.3..1.0);
    let mut fts = random_fts(&mut r, n, m, p, 3);
    let a = random_subset(&mut r, fts.states(), 0.85);
    let b = random_subset(&mut r, fts.states(), 0.7);
    fts.set_label("A", a);
    fts.set_label("B", b);
    let n_goals = r.random_range(0..=2);
    let mut goals = Vec::new();
    for i in 0..n_goals {
        let g = random_subset(&mut r, fts.states(), 0.4);
        fts.set_label(&format!("G{i}"), g);
        goals.push(format!("G{i}"));
    }
    let goal_refs: Vec<&str> = goals.iter().map(String::as_str).collect();
    (fts, Spec::new(Some("A"), Some("B"), &goal_refs))
}
