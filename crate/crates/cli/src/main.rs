use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use splitsynth::abstraction::Abstraction;
use splitsynth::bench::{self, Layout};
use splitsynth::controller::{extract, simulate, DisturbanceModel};
use splitsynth::encoding::{EncodingKind, StateEncoding};
use splitsynth::fts::Fts;
use splitsynth::refine::{refine_loop, Backend, Budget, Config, Engine, Reorder, Representation};
use splitsynth::symbolic::SymbolicFts;
use splitsynth::synthesis::{win_explicit, win_symbolic, Explicit, FixedPointTrace, SetAlgebra, Spec, Symbolic};
use splitsynth::{StateId, StateSet};
use splitsynth_bdd::BddManager;

#[derive(Parser)]
#[command(name = "splitsynth", version, about = "Controller synthesis by abstraction refinement")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone, Copy)]
struct ReprArgs {
    /// Transition system storage.
    #[arg(long, default_value = "list")]
    backend: Backend,
    /// State encoding for the BDD backend.
    #[arg(long, default_value = "log")]
    encoding: EncodingKind,
    /// Variable reordering for the BDD backend.
    #[arg(long, default_value = "none")]
    reorder: Reorder,
}

impl ReprArgs {
    fn repr(self) -> Representation {
        Representation {
            backend: self.backend,
            encoding: self.encoding,
            reorder: self.reorder,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the finite abstraction of a system and write it as an FTS file.
    Abstract {
        #[arg(long)]
        config: PathBuf,
        /// Refinement splits to apply first.
        #[arg(long, default_value_t = 0)]
        refinements: usize,
        /// Output directory (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the winning set of an FTS file or of a system's abstraction.
    Synth {
        #[arg(long, conflicts_with = "fts", required_unless_present = "fts")]
        config: Option<PathBuf>,
        /// FTS text file.
        #[arg(long)]
        fts: Option<PathBuf>,
        /// Specification JSON; overrides the one in the config.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        repr: ReprArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Alternate synthesis and refinement and report every iteration.
    Refine {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        repr: ReprArgs,
        /// Maximum number of refinement iterations.
        #[arg(long, default_value_t = 100)]
        refinements: usize,
        /// Wall-clock limit, e.g. `90s` or `1h`.
        #[arg(long, value_parser = parse_budget, allow_hyphen_values = true)]
        budget: Option<Duration>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the synthesized controller on the concrete dynamics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Refinement splits applied before synthesis.
        #[arg(long, default_value_t = 0)]
        refinements: usize,
        /// Initial state as comma-separated coordinates (default: centre
        /// of the lowest-numbered winning cell).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform")]
        disturbance: Disturbance,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the JSON config of a built-in thermal layout (`desk` or a
    /// benchmark layout name).
    Layout { name: String },
    /// Run one of the benchmark tables on the thermal layouts.
    Bench {
        #[arg(value_enum)]
        test: BenchTest,
        /// Comma-separated layout names (default: all for T1, r2s1 otherwise).
        #[arg(long, value_delimiter = ',')]
        layout: Option<Vec<String>>,
        /// Splits before the final synthesis (T1).
        #[arg(long, default_value_t = 2000)]
        refinements: usize,
        /// Refinement levels to sweep (T2).
        #[arg(long, value_delimiter = ',', default_value = "500,1000,2000,4000")]
        levels: Vec<usize>,
        /// Wall-clock limit per representation (T3).
        #[arg(long, value_parser = parse_budget, allow_hyphen_values = true, default_value = "60s")]
        budget: Duration,
        /// Timed repetitions per measurement; the median is reported.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Disturbance {
    Zero,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchTest {
    #[value(name = "T1", alias = "t1")]
    T1,
    #[value(name = "T2", alias = "t2")]
    T2,
    #[value(name = "T3", alias = "t3")]
    T3,
}

fn parse_budget(s: &str) -> std::result::Result<Duration, String> {
    if s.trim_start().starts_with('-') {
        return Err("budget must be positive".into());
    }
    let d = humantime::parse_duration(s).map_err(|e| e.to_string())?;
    if d.is_zero() {
        return Err("budget must be positive".into());
    }
    Ok(d)
}

/// Writes `content` to `dir/name`, or to standard output without a directory.
fn emit(out: Option<&Path>, name: &str, content: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let path = dir.join(name);
            std::fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn load_config(path: &Path, spec: Option<&Path>) -> Result<Config> {
    let mut cfg = Config::load(path).with_context(|| format!("invalid config {}", path.display()))?;
    if let Some(s) = spec {
        cfg.spec = load_spec(s)?;
    }
    Ok(cfg)
}

fn load_spec(path: &Path) -> Result<Spec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid specification {}", path.display()))
}

fn refined(cfg: &Config, splits: usize) -> Result<Abstraction> {
    let abs = Abstraction::from_config(&cfg.abstraction)?;
    Ok(bench::refine_explicit(abs, &cfg.spec, splits, cfg.refine.max_splits)?)
}

fn ids(set: &StateSet) -> String {
    set.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ")
}

fn trace_summary(fts: &Fts, w: &StateSet, trace: &FixedPointTrace<StateSet>) -> String {
    let mut s = String::new();
    writeln!(s, "win: {}", ids(w)).unwrap();
    writeln!(s, "winning states: {} of {}", w.len(), fts.n_states()).unwrap();
    writeln!(s, "outer iterations: {}", trace.steps.len()).unwrap();
    let nu: Vec<String> = trace.steps.iter().map(|st| st.nu.len().to_string()).collect();
    writeln!(s, "nu iterates per outer iteration: {}", nu.join(" ")).unwrap();
    if let Some(last) = trace.steps.last() {
        let inner: Vec<String> = last.final_inner().iter().map(|its| its.len().to_string()).collect();
        writeln!(s, "inner iterates per goal, final pass: {}", inner.join(" ")).unwrap();
    }
    writeln!(s, "pre calls: {}", trace.pre_calls).unwrap();
    s
}

/// Winning set and trace of an explicit system under `repr`.
fn synth_fts(fts: &Fts, spec: &Spec, repr: Representation) -> Result<(StateSet, FixedPointTrace<StateSet>, Duration)> {
    let n = fts.n_states();
    match repr.backend {
        Backend::List => {
            let start = Instant::now();
            let (w, trace) = win_explicit(fts, spec)?;
            let t = start.elapsed();
            trace.verify(&Explicit::new(fts), n).map_err(anyhow::Error::msg)?;
            Ok((w, trace, t))
        }
        Backend::Bdd => {
            let states: Vec<StateId> = fts.states().collect();
            let enc = StateEncoding::new(repr.encoding, &states)?;
            let sym = SymbolicFts::from_fts(&BddManager::new(), fts, enc)?;
            if let Some(m) = repr.reorder.method() {
                sym.reorder(&m);
            }
            let start = Instant::now();
            let (w, trace) = win_symbolic(&sym, fts, spec)?;
            let t = start.elapsed();
            let alg = Symbolic::new(&sym);
            trace.verify(&alg, n).map_err(anyhow::Error::msg)?;
            Ok((alg.to_states(&w)?, trace.try_map(|b| alg.to_states(b))?, t))
        }
    }
}

fn cells_csv(abs: &Abstraction) -> String {
    let n = abs.partition.domain().dim();
    let mut s = String::from("cell,depth");
    for i in 0..n {
        write!(s, ",lo{i}").unwrap();
    }
    for i in 0..n {
        write!(s, ",hi{i}").unwrap();
    }
    s.push('\n');
    for (q, c) in abs.partition.cells() {
        write!(s, "{q},{}", c.depth).unwrap();
        for v in c.rect.lo.iter().chain(&c.rect.hi) {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

fn bench_layouts(names: Option<&[String]>, default_all: bool) -> Result<Vec<Layout>> {
    let all = bench::layouts();
    match names {
        None if default_all => Ok(all),
        None => Ok(vec![bench::two_rooms_one_slab()]),
        Some(names) => names
            .iter()
            .map(|n| {
                all.iter().find(|l| &l.name == n).cloned().with_context(|| {
                    let known: Vec<&str> = all.iter().map(|l| l.name.as_str()).collect();
                    format!("unknown layout `{n}` (known: {})", known.join(", "))
                })
            })
            .collect(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Abstract { config, refinements, out } => {
            let cfg = load_config(&config, None)?;
            let abs = refined(&cfg, refinements)?;
            emit(out.as_deref(), "abstraction.fts", &abs.fts.to_text())?;
            if out.is_some() {
                emit(out.as_deref(), "cells.csv", &cells_csv(&abs))?;
            }
            eprintln!("{} states, {} transitions", abs.fts.n_states(), abs.fts.n_transitions());
        }
        Command::Synth {
            config,
            fts,
            spec,
            repr,
            out,
        } => {
            let (system, spec) = match (&config, &fts) {
                (_, Some(path)) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
                    let system = Fts::parse(&text).with_context(|| format!("invalid FTS file {}", path.display()))?;
                    let spec = spec.as_deref().map(load_spec).transpose()?.unwrap_or_default();
                    (system, spec)
                }
                (Some(path), None) => {
                    let cfg = load_config(path, spec.as_deref())?;
                    (Abstraction::from_config(&cfg.abstraction)?.fts, cfg.spec)
                }
                (None, None) => bail!("either --config or --fts is required"),
            };
            let (w, trace, t) = synth_fts(&system, &spec, repr.repr())?;
            eprintln!("synthesis took {:.3} ms", t.as_secs_f64() * 1e3);
            emit(out.as_deref(), "synth.txt", &trace_summary(&system, &w, &trace))?;
            if out.is_some() && !w.is_empty() {
                let ctrl = extract(&system, &spec.resolve(&system)?, &trace)?;
                emit(out.as_deref(), "controller.txt", &ctrl.export())?;
            }
        }
        Command::Refine {
            config,
            spec,
            repr,
            refinements,
            budget,
            out,
        } => {
            let cfg = load_config(&config, spec.as_deref())?;
            let abs = Abstraction::from_config(&cfg.abstraction)?;
            let mut engine = Engine::new(abs, cfg.spec.clone(), repr.repr())?;
            let report = refine_loop(
                &mut engine,
                &cfg.refine,
                Budget {
                    max_iterations: refinements,
                    time_limit: budget,
                },
            )?;
            eprintln!(
                "stopped: {}; {} winning of {} states",
                report.stop.describe(),
                report.last.win.len(),
                engine.fts().n_states()
            );
            emit(out.as_deref(), "run.csv", &report.to_csv())?;
            if out.is_some() && !report.last.win.is_empty() {
                let ctrl = extract(engine.fts(), &report.last.spec, &report.last.trace)?;
                emit(out.as_deref(), "controller.txt", &ctrl.export())?;
                emit(out.as_deref(), "cells.csv", &cells_csv(&engine.abs))?;
            }
        }
        Command::Simulate {
            config,
            spec,
            refinements,
            x0,
            horizon,
            seed,
            disturbance,
            out,
        } => {
            let cfg = load_config(&config, spec.as_deref())?;
            let abs = refined(&cfg, refinements)?;
            let mut engine = Engine::new(abs, cfg.spec.clone(), Representation::LIST)?;
            let sol = engine.solve()?;
            if sol.win.is_empty() {
                bail!("the winning set is empty; try more --refinements");
            }
            let ctrl = extract(engine.fts(), &sol.spec, &sol.trace)?;
            let x0 = match x0 {
                Some(x) => x,
                None => {
                    let q = sol.win.iter().next().expect("nonempty");
                    engine.abs.partition.cell(q).expect("live cell").rect.center()
                }
            };
            let model = match disturbance {
                Disturbance::Zero => DisturbanceModel::Zero,
                Disturbance::Uniform => DisturbanceModel::Uniform,
            };
            let rep = simulate(&ctrl, &engine.abs, &x0, horizon, model, seed)?;
            let n = x0.len();
            let mut csv = String::from("step,cell,action");
            for i in 0..n {
                write!(csv, ",x{i}").unwrap();
            }
            csv.push('\n');
            let states = std::iter::once(&rep.x0).chain(&rep.trajectory);
            for (t, x) in states.enumerate() {
                let (cell, act) = match (rep.cells.get(t), rep.actions.get(t)) {
                    (Some(c), Some(a)) => (c.to_string(), a.to_string()),
                    _ => (String::new(), String::new()),
                };
                write!(csv, "{t},{cell},{act}").unwrap();
                for v in x {
                    write!(csv, ",{v}").unwrap();
                }
                csv.push('\n');
            }
            emit(out.as_deref(), "simulation.csv", &csv)?;
            let confined = engine.abs.props.get("B").and_then(|b| rep.confined_from(b));
            eprintln!(
                "{} steps, domain exit: {}, goal visits: {:?}, in B from step: {}",
                rep.trajectory.len(),
                rep.exit_step.map_or("none".to_string(), |t| t.to_string()),
                rep.goal_visits,
                confined.map_or("never".to_string(), |t| t.to_string())
            );
        }
        Command::Layout { name } => {
            let layout = if name == "desk" {
                bench::desk()
            } else {
                bench_layouts(Some(std::slice::from_ref(&name)), false)?.remove(0)
            };
            println!("{}", serde_json::to_string_pretty(&layout.config())?);
        }
        Command::Bench {
            test,
            layout,
            refinements,
            levels,
            budget,
            repeats,
            out,
        } => {
            let reprs = bench::representations();
            match test {
                BenchTest::T1 => {
                    let layouts = bench_layouts(layout.as_deref(), true)?;
                    let rows = bench::table1(&layouts, &reprs, refinements, repeats)?;
                    emit(out.as_deref(), "bench_t1.csv", &bench::summary_csv(&rows))?;
                }
                BenchTest::T2 => {
                    let mut levels = levels;
                    levels.sort_unstable();
                    let mut rows = Vec::new();
                    for l in bench_layouts(layout.as_deref(), false)? {
                        rows.extend(bench::sweep(&l, &reprs, &levels, repeats)?);
                    }
                    emit(out.as_deref(), "bench_t2.csv", &bench::summary_csv(&rows))?;
                }
                BenchTest::T3 => {
                    let mut runs = Vec::new();
                    for l in bench_layouts(layout.as_deref(), false)? {
                        for &r in &reprs {
                            runs.push(bench::budget_run(&l, r, budget)?);
                        }
                    }
                    emit(out.as_deref(), "bench_t3.csv", &bench::budget_csv(&runs))?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
