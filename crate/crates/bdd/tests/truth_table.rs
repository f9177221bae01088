//! Randomized checks of every BDD operation against explicit truth tables.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use splitsynth_bdd::{Bdd, BddError, BddManager, BoolOp, Quantifier, ReorderMethod, VarId};

const N: usize = 6;
const ROWS: usize = 1 << N;

fn bit(row: usize, var: usize) -> bool {
    (row >> var) & 1 == 1
}

fn setup(n: usize) -> (BddManager, Vec<VarId>) {
    let mgr = BddManager::new();
    let vars = (0..n).map(|_| mgr.new_var()).collect();
    (mgr, vars)
}

/// Builds the function whose truth table is `tt` as a disjunction of minterms.
fn from_table(mgr: &BddManager, vars: &[VarId], tt: u64) -> Bdd {
    let mut acc = mgr.zero();
    for row in 0..ROWS {
        if (tt >> row) & 1 == 1 {
            let bits: Vec<bool> = (0..vars.len()).map(|v| bit(row, v)).collect();
            acc = acc.or(&mgr.minterm(vars, &bits));
        }
    }
    acc
}

fn table_of(f: &Bdd, n: usize) -> u64 {
    let mut tt = 0u64;
    for row in 0..(1usize << n) {
        let assignment: Vec<bool> = (0..n).map(|v| bit(row, v)).collect();
        if f.eval(&assignment) {
            tt |= 1 << row;
        }
    }
    tt
}

fn tt_exists(tt: u64, var: usize) -> u64 {
    let mut out = 0u64;
    for row in 0..ROWS {
        let r0 = row & !(1 << var);
        let r1 = row | (1 << var);
        if (tt >> r0) & 1 == 1 || (tt >> r1) & 1 == 1 {
            out |= 1 << row;
        }
    }
    out
}

fn tt_forall(tt: u64, var: usize) -> u64 {
    let mut out = 0u64;
    for row in 0..ROWS {
        let r0 = row & !(1 << var);
        let r1 = row | (1 << var);
        if (tt >> r0) & 1 == 1 && (tt >> r1) & 1 == 1 {
            out |= 1 << row;
        }
    }
    out
}

fn tt_cofactor(tt: u64, var: usize, value: bool) -> u64 {
    let mut out = 0u64;
    for row in 0..ROWS {
        let src = if value { row | (1 << var) } else { row & !(1 << var) };
        if (tt >> src) & 1 == 1 {
            out |= 1 << row;
        }
    }
    out
}

#[test]
fn new_var_is_dense_and_appended() {
    let mgr = BddManager::new();
    assert_eq!(mgr.new_var(), VarId(0));
    assert_eq!(mgr.new_var(), VarId(1));
    mgr.new_var();
    assert_eq!(mgr.order(), vec![VarId(0), VarId(1), VarId(2)]);

    let f = mgr.var(VarId(0)).and(&mgr.var(VarId(2)));
    let before = f.node_count();
    mgr.new_var();
    assert_eq!(f.node_count(), before);
}

#[test]
fn apply_constant_cases() {
    let (mgr, z) = setup(2);
    let z1 = mgr.var(z[0]);
    assert!(z1.and(&z1.not()).is_false());
    let all = [
        mgr.minterm(&z, &[false, false]),
        mgr.minterm(&z, &[false, true]),
        mgr.minterm(&z, &[true, false]),
        mgr.minterm(&z, &[true, true]),
    ];
    let union = all.iter().fold(mgr.zero(), |acc, m| acc.or(m));
    assert!(union.is_true());
}

#[test]
fn apply_matches_truth_tables() {
    let (mgr, vars) = setup(N);
    let mut rng = StdRng::seed_from_u64(1);
    let mut checks = 0;
    for _ in 0..200 {
        let (ta, tb): (u64, u64) = (rng.random(), rng.random());
        let a = from_table(&mgr, &vars, ta);
        let b = from_table(&mgr, &vars, tb);
        assert_eq!(table_of(&a, N), ta);
        for (op, expected) in [(BoolOp::And, ta & tb), (BoolOp::Or, ta | tb), (BoolOp::Xor, ta ^ tb)] {
            let r = mgr.apply(op, &a, &b).unwrap();
            assert_eq!(table_of(&r, N), expected, "{op:?}");
            // canonicity: rebuilding from the table gives the same root
            assert_eq!(r, from_table(&mgr, &vars, expected));
            checks += 1;
        }
    }
    assert!(checks >= 600);
    mgr.check_invariants().unwrap();
}

#[test]
fn mixed_managers_are_rejected() {
    let (m1, a) = setup(1);
    let (m2, b) = setup(1);
    let err = m1.apply(BoolOp::And, &m1.var(a[0]), &m2.var(b[0])).unwrap_err();
    assert_eq!(err, BddError::ManagerMismatch);
}

#[test]
fn negate_is_an_involution_and_keeps_size() {
    let (mgr, vars) = setup(8);
    assert!(mgr.one().not().is_false());
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..100 {
        // random 8-var function as a random DNF
        let mut f = mgr.zero();
        for _ in 0..rng.random_range(1..12) {
            let mut term = mgr.one();
            for &v in &vars {
                match rng.random_range(0..3) {
                    0 => term = term.and(&mgr.var(v)),
                    1 => term = term.and(&mgr.nvar(v)),
                    _ => {}
                }
            }
            f = f.or(&term);
        }
        let g = f.not();
        assert_eq!(g.node_count(), f.node_count());
        assert_eq!(g.not(), f);
    }
}

#[test]
fn cofactor_examples_and_size_bound() {
    let (mgr, z) = setup(N);
    let f = mgr.var(z[0]).and(&mgr.var(z[1]));
    assert_eq!(f.cofactor(z[0], true), mgr.var(z[1]));
    assert!(f.cofactor(z[0], false).is_false());

    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..300 {
        let tt: u64 = rng.random();
        let f = from_table(&mgr, &z, tt);
        let v = rng.random_range(0..N);
        let value = rng.random();
        let g = mgr.cofactor(&f, z[v], value).unwrap();
        assert!(g.node_count() <= f.node_count());
        assert_eq!(table_of(&g, N), tt_cofactor(tt, v, value));
    }
}

#[test]
fn quantify_examples() {
    let (mgr, z) = setup(2);
    let (z1, z2) = (mgr.var(z[0]), mgr.var(z[1]));
    assert_eq!(z1.and(&z2).exists(&[z[0]]), z2);
    assert_eq!(z1.or(&z2).forall(&[z[0]]), z2);
}

#[test]
fn quantify_matches_truth_tables() {
    let (mgr, z) = setup(N);
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..1500 {
        let tt: u64 = rng.random();
        let f = from_table(&mgr, &z, tt);
        let mut chosen: Vec<usize> = (0..N).filter(|_| rng.random_bool(0.4)).collect();
        let mut ex = tt;
        let mut fa = tt;
        for &v in &chosen {
            ex = tt_exists(ex, v);
            fa = tt_forall(fa, v);
        }
        let vars: Vec<VarId> = chosen.iter().map(|&v| z[v]).collect();
        let e = mgr.quantify(Quantifier::Exists, &vars, &f).unwrap();
        let a = mgr.quantify(Quantifier::Forall, &vars, &f).unwrap();
        assert_eq!(table_of(&e, N), ex);
        assert_eq!(table_of(&a, N), fa);
        // elimination order inside the set does not matter
        chosen.reverse();
        let stepwise = chosen.iter().fold(f.clone(), |acc, &v| acc.exists(&[z[v]]));
        assert_eq!(stepwise, e);
        // relational product agrees with conjunction followed by exists
        let g = from_table(&mgr, &z, rng.random());
        assert_eq!(f.and_exists(&g, &vars), f.and(&g).exists(&vars));
    }
    mgr.check_invariants().unwrap();
}

#[test]
fn node_count_and_sat_iter() {
    let (mgr, z) = setup(3);
    assert_eq!(mgr.zero().sat_iter(&z).unwrap().count(), 0);
    let z1 = mgr.var(z[0]);
    assert_eq!(z1.sat_iter(&[z[0]]).unwrap().collect::<Vec<_>>(), vec![vec![true]]);
    let parity = mgr.var(z[0]).xor(&mgr.var(z[1])).xor(&mgr.var(z[2]));
    let sats: Vec<Vec<bool>> = parity.sat_iter(&z).unwrap().collect();
    assert_eq!(sats.len(), 4);
    for s in &sats {
        assert!(s.iter().filter(|&&b| b).count() % 2 == 1);
    }
    assert_eq!(parity.sat_count(&z).unwrap(), 4);
    // 1 + 2 + 2 internal nodes plus both terminals
    assert_eq!(parity.node_count(), 7);
    assert_eq!(
        parity.sat_iter(&z[..2]).unwrap_err(),
        BddError::SupportMissing(z[2].0)
    );
}

#[test]
fn rename_moves_patterns_between_variables() {
    let (mgr, z) = setup(6);
    let (from, to) = (&z[..3], &z[3..]);
    assert!(mgr.one().rename(from, to).unwrap().is_true());
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..50 {
        let mut f = mgr.zero();
        let mut expected = Vec::new();
        for _ in 0..rng.random_range(0..6) {
            let bits: Vec<bool> = (0..3).map(|_| rng.random()).collect();
            f = f.or(&mgr.minterm(from, &bits));
            expected.push(bits);
        }
        expected.sort();
        expected.dedup();
        let g = f.rename(from, to).unwrap();
        let mut got: Vec<Vec<bool>> = g.sat_iter(to).unwrap().collect();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(g.rename(to, from).unwrap(), f);
    }
    assert_eq!(mgr.one().rename(from, &to[..2]).unwrap_err(), BddError::RenameWidth(3, 2));
}

#[test]
fn garbage_is_swept_without_touching_live_functions() {
    let (mgr, z) = setup(N);
    let keep = from_table(&mgr, &z, 0xdead_beef_0bad_f00d);
    let tt = table_of(&keep, N);
    {
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..50 {
            let _ = from_table(&mgr, &z, rng.random());
        }
    }
    let before = mgr.total_nodes();
    let live = mgr.live_nodes();
    assert!(live < before);
    assert_eq!(live, keep.node_count() - 2);
    assert_eq!(table_of(&keep, N), tt);
    mgr.check_invariants().unwrap();
}

/// A function with sampled inputs and the expected outputs.
type Sampled = (Bdd, Vec<Vec<bool>>, Vec<bool>);

fn sample_semantics(funcs: &[Sampled]) {
    for (f, samples, values) in funcs {
        for (s, &v) in samples.iter().zip(values) {
            assert_eq!(f.eval(s), v);
        }
    }
}

#[test]
fn reorder_single_variable_is_a_no_op() {
    let (mgr, z) = setup(1);
    let f = mgr.var(z[0]);
    for method in [ReorderMethod::sift(), ReorderMethod::anneal()] {
        let report = mgr.reorder(&method);
        assert_eq!(report.order, vec![z[0]]);
        assert_eq!(report.nodes_before, report.nodes_after);
    }
    assert_eq!(f, mgr.var(z[0]));
}

#[test]
fn sifting_never_grows_and_keeps_semantics() {
    let (mgr, z) = setup(4);
    // z1 z3 | z2 z4 under the order (1,3,2,4) compared with (1,2,3,4)
    mgr.set_order(&[z[0], z[2], z[1], z[3]]);
    let f = mgr.var(z[0]).and(&mgr.var(z[2])).or(&mgr.var(z[1]).and(&mgr.var(z[3])));
    let good = f.node_count();
    mgr.set_order(&[z[0], z[1], z[2], z[3]]);
    let bad = f.node_count();
    assert!(bad > good, "interleaved order should be worse: {bad} vs {good}");
    let report = mgr.reorder(&ReorderMethod::sift());
    assert!(report.nodes_after <= report.nodes_before);
    assert_eq!(f.node_count() - 2, report.nodes_after);
    for row in 0..16 {
        let a: Vec<bool> = (0..4).map(|v| bit(row, v)).collect();
        assert_eq!(f.eval(&a), (a[0] && a[2]) || (a[1] && a[3]));
    }
    mgr.check_invariants().unwrap();
}

#[test]
fn reordering_preserves_every_live_function() {
    let n = 12;
    let (mgr, z) = setup(n);
    let mut rng = StdRng::seed_from_u64(7);
    let mut funcs = Vec::new();
    for _ in 0..6 {
        let mut f = mgr.zero();
        for _ in 0..rng.random_range(2..10) {
            let mut term = mgr.one();
            for &v in &z {
                match rng.random_range(0..4) {
                    0 => term = term.and(&mgr.var(v)),
                    1 => term = term.and(&mgr.nvar(v)),
                    _ => {}
                }
            }
            f = f.xor(&term);
        }
        let samples: Vec<Vec<bool>> = (0..1000).map(|_| (0..n).map(|_| rng.random()).collect()).collect();
        let values = samples.iter().map(|s| f.eval(s)).collect();
        funcs.push((f, samples, values));
    }
    let roots: Vec<&Bdd> = funcs.iter().map(|(f, _, _)| f).collect();
    let shared = mgr.shared_node_count(&roots);
    let sift = mgr.reorder(&ReorderMethod::sift());
    assert_eq!(sift.nodes_before, shared - 2);
    assert!(sift.nodes_after <= sift.nodes_before);
    mgr.check_invariants().unwrap();
    sample_semantics(&funcs);

    let anneal = mgr.reorder(&ReorderMethod::anneal());
    assert!(anneal.nodes_after <= anneal.nodes_before);
    mgr.check_invariants().unwrap();
    sample_semantics(&funcs);

    // operations keep working after reordering
    let (f0, f1) = (&funcs[0].0, &funcs[1].0);
    let both = f0.and(f1);
    for s in &funcs[0].1 {
        assert_eq!(both.eval(s), f0.eval(s) && f1.eval(s));
    }
}
