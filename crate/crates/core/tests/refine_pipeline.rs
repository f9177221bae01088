mod common;

use splitsynth::abstraction::Abstraction;
use splitsynth::bench::{desk, initial_states, refine_explicit, two_rooms_one_slab};
use splitsynth::controller::{extract, simulate, DisturbanceModel};
use splitsynth::encoding::EncodingKind;
use splitsynth::refine::{refine_loop, Budget, Config, Engine, RefineSettings, Reorder, Representation, StopReason};

fn reprs() -> Vec<Representation> {
    vec![
        Representation::LIST,
        Representation::bdd(EncodingKind::Log, Reorder::None),
        Representation::bdd(EncodingKind::Split, Reorder::None),
        Representation::bdd(EncodingKind::Split, Reorder::Sift),
    ]
}

#[test]
fn backends_follow_the_same_refinement() {
    let cfg = two_rooms_one_slab().config();
    let settings = RefineSettings {
        max_splits: 5,
        ..RefineSettings::default()
    };
    let mut runs = Vec::new();
    for repr in reprs() {
        let abs = Abstraction::from_config(&cfg.abstraction).unwrap();
        let mut engine = Engine::new(abs, cfg.spec.clone(), repr).unwrap();
        let report = refine_loop(&mut engine, &settings, Budget::iterations(40)).unwrap();
        if let Some(sym) = engine.symbolic() {
            let got: std::collections::BTreeSet<_> = sym.transitions().unwrap().into_iter().collect();
            assert_eq!(got, common::triples(engine.fts()), "{}", repr.label());
        }
        let summary: Vec<(usize, usize, String)> = report
            .rows
            .iter()
            .map(|r| (r.n_states, r.n_transitions, format!("{:.6}", r.win_volume)))
            .collect();
        runs.push((repr.label(), summary, report.last.win.clone()));
    }
    for run in &runs[1..] {
        assert_eq!(run.1, runs[0].1, "{} vs {}", run.0, runs[0].0);
        assert_eq!(run.2, runs[0].2);
    }
}

#[test]
fn replayed_encoding_matches_incremental() {
    let cfg = two_rooms_one_slab().config();
    for kind in [EncodingKind::Log, EncodingKind::Split] {
        let repr = Representation::bdd(kind, Reorder::None);
        let abs = Abstraction::from_config(&cfg.abstraction).unwrap();
        let initial = initial_states(&abs);
        let mut engine = Engine::new(abs, cfg.spec.clone(), repr).unwrap();
        let settings = RefineSettings {
            max_splits: 3,
            ..RefineSettings::default()
        };
        refine_loop(&mut engine, &settings, Budget::iterations(30)).unwrap();
        let replay = Engine::with_replayed_encoding(engine.abs.clone(), cfg.spec.clone(), repr, &initial).unwrap();
        let (a, b) = (engine.symbolic().unwrap(), replay.symbolic().unwrap());
        for q in engine.fts().states() {
            assert_eq!(a.encoding().bits(q).unwrap(), b.encoding().bits(q).unwrap(), "{kind:?} state {q}");
        }
        assert_eq!(a.transitions().unwrap(), b.transitions().unwrap());
        assert_eq!(a.bdd_nodes(), b.bdd_nodes(), "{kind:?}");
    }
}

#[test]
fn desk_controller_keeps_simulations_in_band() {
    let cfg = desk().config();
    let abs = Abstraction::from_config(&cfg.abstraction).unwrap();
    let abs = refine_explicit(abs, &cfg.spec, 136, 4).unwrap();
    let mut engine = Engine::new(abs, cfg.spec.clone(), Representation::LIST).unwrap();
    let sol = engine.solve().unwrap();
    assert!(!sol.win.is_empty());
    let ctrl = extract(engine.fts(), &sol.spec, &sol.trace).unwrap();
    let b = &engine.abs.props["B"];
    for (i, q) in sol.win.iter().take(20).enumerate() {
        let x0 = engine.abs.partition.cell(q).unwrap().rect.center();
        let rep = simulate(&ctrl, &engine.abs, &x0, 300, DisturbanceModel::Uniform, i as u64).unwrap();
        assert_eq!(rep.safety_violations(), 0);
        assert!(rep.confined_from(b).is_some_and(|t| t < 300), "from {x0:?}");
        // same seed, same run
        let again = simulate(&ctrl, &engine.abs, &x0, 300, DisturbanceModel::Uniform, i as u64).unwrap();
        assert_eq!(rep, again);
    }
}

#[test]
fn target_box_stops_refinement() {
    let mut cfg = desk().config();
    cfg.refine.target = Some(splitsynth::abstraction::Rect::new(vec![23.0, 22.0], vec![24.0, 23.0]));
    cfg.refine.max_splits = 4;
    let abs = Abstraction::from_config(&cfg.abstraction).unwrap();
    let mut engine = Engine::new(abs, cfg.spec.clone(), Representation::LIST).unwrap();
    let report = refine_loop(&mut engine, &cfg.refine, Budget::iterations(200)).unwrap();
    assert_eq!(report.stop, StopReason::Covered);
    assert!(report.to_csv().starts_with(splitsynth::refine::RUN_HEADER));
}

#[test]
fn config_round_trip() {
    let cfg = two_rooms_one_slab().config();
    let text = serde_json::to_string_pretty(&cfg).unwrap();
    assert_eq!(Config::from_json(&text).unwrap(), cfg);
}
