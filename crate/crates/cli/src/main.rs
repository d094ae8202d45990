//! Command line front end: list scenarios, run rewrites and searches (plain
//! or dialected), and replay the built-in experiment suite.

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use lingo_core::model::{AgentKind, System};
use lingo_core::props::{parse_goal, GoalParseError};
use lingo_core::scenarios::{build_scenario, scenario_from_str, scenario_names, ScenarioError};
use lingo_core::search::{rewrite, search, SearchError, SearchMode, SearchQuery};
use lingo_core::suite::{report_line, run_entry, suite_set, SUITE_SETS};
use serde::Serialize;
use std::io::Write;
use std::process::ExitCode;

const EXIT_GOAL_PARSE: u8 = 2;
const EXIT_SCENARIO: u8 = 3;
const EXIT_STATE_CAP: u8 = 4;

#[derive(Parser)]
#[command(
    name = "lingo",
    about = "Exhaustive reachability analysis of CoAP messaging under attack, with protocol-dialect protection",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Final,
    Plus,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// List the registered scenarios and suite sets.
    List,
    /// Run one deterministic execution of a scenario.
    Rewrite {
        /// Scenario call, e.g. `iSys2` or `raR1(5,0,10,false)`.
        #[arg(long)]
        scenario: String,
        /// Stop after this many steps instead of at a terminal state.
        #[arg(long)]
        steps: Option<u64>,
        /// Step cap guarding unbounded rewrites.
        #[arg(long, default_value_t = 100_000)]
        cap: u64,
        /// Wrap the initial system with the dialect transform first.
        #[arg(long)]
        dialected: bool,
    },
    /// Exhaustive reachability search for states satisfying a goal.
    Search {
        /// Scenario call; mutually exclusive with --scenario-file.
        #[arg(long)]
        scenario: Option<String>,
        /// Scenario-parameter file (key = value lines).
        #[arg(long)]
        scenario_file: Option<std::path::PathBuf>,
        /// Goal expression, e.g. `checkRsrc dev1 door unlock`.
        #[arg(long)]
        goal: String,
        /// Search for terminal states (`final`) or any reachable state (`plus`).
        #[arg(long, value_enum, default_value = "final")]
        mode: Mode,
        /// Stop after this many solutions.
        #[arg(long)]
        bound: Option<usize>,
        /// Wrap the initial system with the dialect transform first.
        #[arg(long)]
        dialected: bool,
        /// Only report solutions where the attacker used every capability.
        #[arg(long)]
        caps_exhausted: bool,
        /// Write the witness trace of every solution to this file.
        #[arg(long)]
        trace: Option<std::path::PathBuf>,
        /// Abort after discovering this many states.
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
        /// Assert the reachable-state shape invariants while exploring.
        #[arg(long)]
        debug_invariants: bool,
        /// Worker threads for frontier expansion (results are identical).
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Replay the built-in experiment suite and report pass/fail per line.
    Suite {
        /// One of the suite sets, or `all`.
        #[arg(long, default_value = "all")]
        set: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Serialize)]
struct SearchRecord<'a> {
    scenario: &'a str,
    goal: &'a str,
    mode: &'a str,
    dialected: bool,
    solutions: usize,
    visited: usize,
    explored: usize,
}

#[derive(Serialize)]
struct SolutionRecord {
    index: usize,
    state: usize,
    log: Vec<String>,
}

#[derive(Serialize)]
struct SuiteRecord<'a> {
    set: &'a str,
    id: &'a str,
    scenario: &'a str,
    goal: &'a str,
    solutions: usize,
    visited: usize,
    pass: bool,
}

fn exit_for_scenario(err: &ScenarioError) -> ExitCode {
    let _ = err;
    ExitCode::from(EXIT_SCENARIO)
}

fn exit_for_goal(err: &GoalParseError) -> ExitCode {
    let _ = err;
    ExitCode::from(EXIT_GOAL_PARSE)
}

fn print_state_summary(sys: &System) {
    for agent in &sys.agents {
        match &agent.kind {
            AgentKind::Endpoint(e) => {
                println!("  [{}] rsrcs={:?}", agent.id, e.rsrcs);
            }
            AgentKind::Dialect(w) => {
                println!("  [{}] (wrapped) rsrcs={:?}", agent.id, w.inner.rsrcs);
            }
            AgentKind::Attacker(a) => {
                println!(
                    "  [{}] caps left={} kb={} messages",
                    agent.id,
                    a.caps.len(),
                    a.kb.len()
                );
            }
        }
    }
    if let Some(log) = &sys.log {
        let items: Vec<String> = log.iter().map(|l| l.to_string()).collect();
        println!("  log: {}", items.join(" ; "));
    }
}

fn run_rewrite(scenario: &str, steps: Option<u64>, cap: u64, dialected: bool) -> ExitCode {
    let sys = match build_scenario(scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for_scenario(&e);
        }
    };
    let sys = if dialected {
        match lingo_core::dialect::dialect(&sys) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_SCENARIO);
            }
        }
    } else {
        sys
    };
    match rewrite(&sys, steps, cap) {
        Ok((out, taken)) => {
            println!("scenario: {scenario}");
            println!("steps: {taken}");
            print_state_summary(&out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_search(
    scenario_text: String,
    sys: System,
    goal_text: &str,
    mode: Mode,
    bound: Option<usize>,
    dialected: bool,
    caps_exhausted: bool,
    trace: Option<std::path::PathBuf>,
    max_states: usize,
    debug_invariants: bool,
    workers: usize,
    format: Format,
) -> anyhow::Result<ExitCode> {
    let goal = match parse_goal(goal_text) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit_for_goal(&e));
        }
    };
    let mode_enum = match mode {
        Mode::Final => SearchMode::Final,
        Mode::Plus => SearchMode::ReachablePlus,
    };
    let mut q = SearchQuery::new(sys, mode_enum, goal);
    q.bound = bound;
    q.dialected = dialected;
    q.require_caps_exhausted = caps_exhausted;
    q.max_states = max_states;
    q.debug_invariants = debug_invariants;
    q.workers = workers;
    let result = match search(&q) {
        Ok(r) => r,
        Err(e @ SearchError::StateCapExceeded { .. }) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_STATE_CAP));
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::FAILURE);
        }
    };
    let mode_name = match mode {
        Mode::Final => "final",
        Mode::Plus => "plus",
    };
    match format {
        Format::Text => {
            println!("scenario: {scenario_text}");
            println!("goal: {goal_text}");
            println!(
                "mode: {mode_name}{}",
                if dialected { " (dialected)" } else { "" }
            );
            println!("solutions: {}", result.solutions.len());
            println!("visited: {}", result.visited);
            println!("explored: {}", result.explored);
            for (i, sol) in result.solutions.iter().enumerate() {
                let log: Vec<String> = sol.log.iter().map(|l| l.to_string()).collect();
                println!(
                    "solution {} (state {}): log = {}",
                    i + 1,
                    sol.state_ix,
                    if log.is_empty() {
                        "nil".to_string()
                    } else {
                        log.join(" ; ")
                    }
                );
            }
        }
        Format::Records => {
            let rec = SearchRecord {
                scenario: &scenario_text,
                goal: goal_text,
                mode: mode_name,
                dialected,
                solutions: result.solutions.len(),
                visited: result.visited,
                explored: result.explored,
            };
            println!("{}", serde_json::to_string(&rec)?);
            for (i, sol) in result.solutions.iter().enumerate() {
                let rec = SolutionRecord {
                    index: i + 1,
                    state: sol.state_ix,
                    log: sol.log.iter().map(|l| l.to_string()).collect(),
                };
                println!("{}", serde_json::to_string(&rec)?);
            }
        }
    }
    if let Some(path) = trace {
        let mut file = std::fs::File::create(&path)
            .with_context(|| format!("cannot create trace file {}", path.display()))?;
        for (i, sol) in result.solutions.iter().enumerate() {
            writeln!(file, "solution {} (state {})", i + 1, sol.state_ix)?;
            for (label, _) in result.witness_trace(i).expect("solution index in range") {
                writeln!(file, "  {label}")?;
            }
            let log: Vec<String> = sol.log.iter().map(|l| l.to_string()).collect();
            writeln!(file, "  log: {}", log.join(" ; "))?;
        }
        eprintln!("traces written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_suite(set: &str, workers: usize, format: Format) -> anyhow::Result<ExitCode> {
    if set != "all" && !SUITE_SETS.contains(&set) {
        eprintln!("error: unknown suite set {set:?}; sets: {SUITE_SETS:?} or \"all\"");
        return Ok(ExitCode::from(EXIT_SCENARIO));
    }
    let entries = suite_set(set);
    let mut all_pass = true;
    for entry in &entries {
        match run_entry(entry, false, workers) {
            Ok(outcome) => {
                all_pass &= outcome.pass;
                match format {
                    Format::Text => println!("{}", report_line(entry, &outcome)),
                    Format::Records => {
                        let rec = SuiteRecord {
                            set: entry.set,
                            id: &entry.id,
                            scenario: entry.scenario,
                            goal: entry.goal,
                            solutions: outcome.solutions,
                            visited: outcome.visited,
                            pass: outcome.pass,
                        };
                        println!("{}", serde_json::to_string(&rec)?);
                    }
                }
            }
            Err(err) => {
                all_pass = false;
                println!("FAIL {} {}: {err}", entry.set, entry.id);
            }
        }
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            println!("scenarios:");
            for (name, signature) in scenario_names() {
                let _ = name;
                println!("  {signature}");
            }
            println!("suite sets: {} (or \"all\")", SUITE_SETS.join(", "));
            Ok(ExitCode::SUCCESS)
        }
        Command::Rewrite {
            scenario,
            steps,
            cap,
            dialected,
        } => Ok(run_rewrite(&scenario, steps, cap, dialected)),
        Command::Search {
            scenario,
            scenario_file,
            goal,
            mode,
            bound,
            dialected,
            caps_exhausted,
            trace,
            max_states,
            debug_invariants,
            workers,
            format,
        } => {
            let (text, sys) = match (scenario, scenario_file) {
                (Some(call), None) => match build_scenario(&call) {
                    Ok(sys) => (call, sys),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return Ok(exit_for_scenario(&e));
                    }
                },
                (None, Some(path)) => {
                    let contents = std::fs::read_to_string(&path)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    match scenario_from_str(&contents) {
                        Ok(sys) => (path.display().to_string(), sys),
                        Err(e) => {
                            eprintln!("error: {e}");
                            return Ok(exit_for_scenario(&e));
                        }
                    }
                }
                _ => {
                    eprintln!("error: give exactly one of --scenario or --scenario-file");
                    return Ok(ExitCode::from(EXIT_SCENARIO));
                }
            };
            run_search(
                text,
                sys,
                &goal,
                mode,
                bound,
                dialected,
                caps_exhausted,
                trace,
                max_states,
                debug_invariants,
                workers,
                format,
            )
        }
        Command::Suite {
            set,
            workers,
            format,
        } => run_suite(&set, workers, format),
    }
}
