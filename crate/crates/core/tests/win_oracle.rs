mod common;

use common::{controllable_closure, enumerate_strategies, game_instance, game_win, lasso_check, product_game, random_fts, random_subset, rng};
use rand::Rng;
use splitsynth::controller::extract;
use splitsynth::encoding::{EncodingKind, StateEncoding};
use splitsynth::fts::{Fts, PreMode, Quant};
use splitsynth::symbolic::SymbolicFts;
use splitsynth::synthesis::{lfp, win_explicit, win_symbolic, Explicit, Spec, Symbolic};
use splitsynth::StateSet;
use splitsynth_bdd::BddManager;

fn oracle(fts: &Fts, spec: &Spec) -> StateSet {
    let s = spec.resolve(fts).unwrap();
    game_win(fts, &s.safe, &s.persist, &s.goals)
}

#[test]
fn explicit_and_symbolic_match_game_oracle() {
    for seed in 0..150 {
        let (fts, spec) = game_instance(seed);
        let expected = oracle(&fts, &spec);
        let (w, trace) = win_explicit(&fts, &spec).unwrap();
        assert_eq!(w, expected, "seed {seed}");
        trace.verify(&Explicit::new(&fts), fts.n_states()).unwrap();
        for kind in [EncodingKind::Log, EncodingKind::Split] {
            let states: Vec<u32> = fts.states().collect();
            let sym = SymbolicFts::from_fts(&BddManager::new(), &fts, StateEncoding::new(kind, &states).unwrap()).unwrap();
            let (wb, strace) = win_symbolic(&sym, &fts, &spec).unwrap();
            assert_eq!(sym.decode(&wb).unwrap(), expected, "seed {seed} {kind:?}");
            strace.verify(&Symbolic::new(&sym), fts.n_states()).unwrap();
        }
    }
}

#[test]
fn game_oracle_agrees_with_strategy_enumeration() {
    let mut checked = 0;
    for seed in 1000..1400 {
        let (fts, spec) = game_instance(seed);
        let s = spec.resolve(&fts).unwrap();
        let prod = product_game(&fts, &s.safe, &s.persist, &s.goals);
        let space: f64 = (0..prod.game.owner.len())
            .filter(|&v| prod.game.owner[v] == 0)
            .map(|v| prod.game.succ[v].len() as f64)
            .product();
        if space > 4096.0 {
            continue;
        }
        assert_eq!(prod.game.solve(), enumerate_strategies(&prod.game), "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 50, "only {checked} instances were small enough");
}

#[test]
fn controllers_pass_lasso_check() {
    let mut nonempty = 0;
    for seed in 0..200 {
        let (fts, spec) = game_instance(seed);
        let (w, trace) = win_explicit(&fts, &spec).unwrap();
        if w.is_empty() {
            continue;
        }
        let sets = spec.resolve(&fts).unwrap();
        let ctrl = extract(&fts, &sets, &trace).unwrap();
        let qb = sets.safe.intersection(&sets.persist);
        if let Err(e) = lasso_check(&fts, &ctrl, &sets.safe, &qb) {
            panic!("seed {seed}: {e}");
        }
        nonempty += 1;
    }
    assert!(nonempty > 20);
}

#[test]
fn winning_set_lies_in_safe_states() {
    for seed in 0..200 {
        let (fts, spec) = game_instance(seed);
        let (w, _) = win_explicit(&fts, &spec).unwrap();
        assert!(w.is_subset(fts.label("A").unwrap()));
    }
}

#[test]
fn reachability_matches_worklist() {
    for seed in 0..300 {
        let mut r = rng(seed);
        let n = r.random_range(1..=40);
        let fts = random_fts(&mut r, n, 3, 0.5, 3);
        let x = random_subset(&mut r, fts.states(), 0.15);
        let (v, its) = lfp(StateSet::new(), |v| x.union(&fts.list_pre(v, Quant::EA, PreMode::Enabled)));
        assert_eq!(v, controllable_closure(&fts, &x), "seed {seed}");
        assert!(its.len() <= n + 1);
    }
}

#[test]
fn trivial_specs() {
    let mut fts = Fts::new(1);
    for q in 1..=4 {
        fts.insert_state(q).unwrap();
        fts.add_transition(q, 0, q).unwrap();
    }
    fts.set_label("none", StateSet::new());
    let (w, _) = win_explicit(&fts, &Spec::default()).unwrap();
    assert_eq!(w.len(), 4);
    let (w, _) = win_explicit(&fts, &Spec::new(None, Some("none"), &[])).unwrap();
    assert!(w.is_empty());
    assert!(win_explicit(&fts, &Spec::new(Some("missing"), None, &[])).is_err());
}
