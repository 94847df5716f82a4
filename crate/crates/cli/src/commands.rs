use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rmm_bench::{run_benches, BenchError, BenchScenario, Mode};
use rmm_core::oracle::{brute_popular_matching, brute_rmm_signature, brute_update_paths};
use rmm_core::{
    check_after_arrival, parse_events, parse_pref_events, popular_solve, popular_update, process_arrival, rmm_solve,
    Instance, Matching, PopularState, PopularVerdict, PreferenceInstance, RmmState, ScenarioParams, UpdateRoute,
    VertexId,
};

use crate::{BenchArgs, Command, ModeArg, OracleCommand};

pub enum Outcome {
    Ok,
    Mismatch,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance> {
    Instance::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_prefs(path: &Path) -> Result<PreferenceInstance> {
    PreferenceInstance::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Solve { instance, dump_phases } => solve(&instance, dump_phases.as_deref()),
        Command::Stream { instance, events, check_only, emit_paths, verify, dump_phases } => {
            stream(&instance, &events, StreamFlags { check_only, emit_paths, verify }, dump_phases.as_deref())
        }
        Command::Popular { preferences } => popular(&preferences),
        Command::PopularStream { preferences, events } => popular_stream(&preferences, &events),
        Command::Oracle { command } => oracle(command),
        Command::Bench(args) => bench(args),
    }
}

fn dump_phases(state: &RmmState, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for i in 1..=state.phases() {
        let path = dir.join(format!("phase_{i}.txt"));
        fs::write(&path, state.phase_dump(i)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn solve(path: &Path, dump: Option<&Path>) -> Result<Outcome> {
    let instance = load_instance(path)?;
    let state = rmm_solve(&instance);
    print!("{}", state.matching().to_text(&instance)?);
    if let Some(dir) = dump {
        dump_phases(&state, dir)?;
    }
    Ok(Outcome::Ok)
}

#[derive(Clone, Copy)]
struct StreamFlags {
    check_only: bool,
    emit_paths: bool,
    verify: bool,
}

fn stream(inst_path: &Path, events_path: &Path, flags: StreamFlags, dump: Option<&Path>) -> Result<Outcome> {
    let instance = load_instance(inst_path)?;
    let events = parse_events(&read(events_path)?).with_context(|| format!("parsing {}", events_path.display()))?;
    let mut state = rmm_solve(&instance);
    let mut outcome = Outcome::Ok;
    for (k, event) in events.iter().enumerate() {
        if flags.check_only {
            let kept = check_after_arrival(&state, event).with_context(|| format!("event {k}"))?;
            println!("event {k}: {}", if kept { "unchanged" } else { "improves" });
        }
        let (next, step) = process_arrival(state, event).with_context(|| format!("event {k}"))?;
        if !flags.check_only {
            println!("event {k}: signature {} path {} edges", next.signature(), step.path.edge_count());
        }
        if flags.emit_paths {
            println!("path {}", step.path.display());
        }
        if flags.verify {
            let fresh = rmm_solve(next.instance());
            if fresh.signature() != next.signature() {
                eprintln!("event {k}: signature {} but recompute gives {}", next.signature(), fresh.signature());
                outcome = Outcome::Mismatch;
            }
            if fresh.label_table() != next.label_table() {
                eprintln!("event {k}: phase labels differ from recompute");
                outcome = Outcome::Mismatch;
            }
        }
        if let Some(dir) = dump {
            dump_phases(&next, &dir.join(format!("event_{k}")))?;
        }
        state = next;
    }
    if !flags.check_only {
        print!("{}", state.matching().to_text(state.instance())?);
    }
    Ok(outcome)
}

fn verdict_text(verdict: &PopularVerdict) -> String {
    match verdict {
        PopularVerdict::Popular(m) => {
            let mut out = String::from("popular\n");
            for (a, p) in m.pairs() {
                let _ = writeln!(out, "a{a} p{p}");
            }
            out
        }
        PopularVerdict::NoPopularMatching => "no popular matching\n".to_string(),
    }
}

fn popular(path: &Path) -> Result<Outcome> {
    print!("{}", verdict_text(&popular_solve(&load_prefs(path)?)));
    Ok(Outcome::Ok)
}

fn popular_stream(pref_path: &Path, events_path: &Path) -> Result<Outcome> {
    let mut state = PopularState::new(load_prefs(pref_path)?);
    let events = parse_pref_events(&read(events_path)?).with_context(|| format!("parsing {}", events_path.display()))?;
    for (k, event) in events.iter().enumerate() {
        let route;
        (state, route) = popular_update(state, event).with_context(|| format!("event {k}"))?;
        let found = matches!(state.verdict(), PopularVerdict::Popular(_));
        let route = match route {
            UpdateRoute::Incremental => "incremental",
            UpdateRoute::Resolved => "resolved",
        };
        println!("event {k}: {} ({route})", if found { "popular" } else { "none" });
    }
    print!("{}", verdict_text(&state.verdict()));
    Ok(Outcome::Ok)
}

fn oracle(command: OracleCommand) -> Result<Outcome> {
    match command {
        OracleCommand::Signature { instance } => {
            let instance = load_instance(&instance)?;
            let (signature, witness) = brute_rmm_signature(&instance)?;
            print!("{}", witness.to_text(&instance)?);
            debug_assert_eq!(signature, rmm_core::signature_of(&instance, &witness)?);
        }
        OracleCommand::Paths { instance, events } => {
            let instance = load_instance(&instance)?;
            let events = parse_events(&read(&events)?)?;
            let Some(event) = events.first() else { bail!("no arrival event given") };
            let m: Matching = rmm_solve(&instance).matching().clone();
            let mut grown = instance;
            grown.apply_arrival(event)?;
            for path in brute_update_paths(&grown, &m, event.vertex)? {
                let names: Vec<String> = path.iter().map(|&v| VertexId::from_flat(v).to_string()).collect();
                println!("{}", names.join(" "));
            }
        }
        OracleCommand::Popular { preferences } => {
            let pref = load_prefs(&preferences)?;
            let verdict = match brute_popular_matching(pref.prefs(), pref.post_count()) {
                Some(m) => PopularVerdict::Popular(m),
                None => PopularVerdict::NoPopularMatching,
            };
            print!("{}", verdict_text(&verdict));
        }
    }
    Ok(Outcome::Ok)
}

fn report_path(out: &Path, seed: u64, several: bool) -> PathBuf {
    if !several {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    let name = match out.extension() {
        Some(ext) => format!("{stem}.seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}.seed{seed}"),
    };
    out.with_file_name(name)
}

fn bench(args: BenchArgs) -> Result<Outcome> {
    let mode = match args.mode {
        ModeArg::Update => Mode::Update,
        ModeArg::Recompute => Mode::Recompute,
        ModeArg::Both => Mode::Both,
    };
    let scenarios: Vec<BenchScenario> = args
        .seed
        .iter()
        .map(|&seed| BenchScenario {
            params: ScenarioParams {
                applicants: args.n,
                posts: args.posts,
                max_rank: args.r,
                density: args.density,
                events: args.events,
                post_arrival_share: args.post_share,
                seed,
            },
            mode,
        })
        .collect();
    let several = scenarios.len() > 1;
    let mut outcome = Outcome::Ok;
    for (scenario, result) in scenarios.iter().zip(run_benches(&scenarios, args.jobs)) {
        let seed = scenario.params.seed;
        let report = match result {
            Ok(report) => report,
            Err(err @ BenchError::Mismatch { .. }) => {
                eprintln!("seed {seed}: {err}");
                outcome = Outcome::Mismatch;
                continue;
            }
            Err(err) => return Err(err).with_context(|| format!("seed {seed}")),
        };
        let path = report_path(&args.out, seed, several);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        report.write_csv(file)?;
        println!("seed {seed}: {}", report.summary());
    }
    Ok(outcome)
}
