//! Command-line front end: load `.fpl` programs, run queries one-shot or
//! in a small interactive loop, and print answers or whole fixpoint
//! interpretations.
//!
//! Exit status: 0 on success, 1 when loading or parsing reports
//! diagnostics, 2 on runtime errors (engine failures, grounding limits,
//! non-convergence, bad usage).

use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, ValueEnum};

use fpl_core::aggregate::Registry;
use fpl_core::engine::{success_set, Answer, SolveOptions, Strategy, DEFAULT_DEPTH_LIMIT};
use fpl_core::fixpoint::{ground, lfp, GroundAtom, Interpretation, LfpOutcome, DEFAULT_MAX_ITERS};
use fpl_core::syntax::{parse_program, parse_query, PredKind, Program, Query, QueryGoal, Term};

#[derive(Parser)]
#[command(name = "fpl", version, about = "Fuzzy logic programs with default knowledge")]
struct Cli {
    /// Program file to load.
    file: Option<PathBuf>,

    /// Run a single query against the file and exit.
    #[arg(short, long, value_name = "GOAL")]
    query: Option<String>,

    /// How queries are evaluated.
    #[arg(long, value_enum, default_value_t = EngineKind::Topdown)]
    engine: EngineKind,

    /// Search order of the top-down engine.
    #[arg(long, value_enum, default_value_t = StrategyArg::Df)]
    strategy: StrategyArg,

    /// Transitions allowed per derivation (also env FPL_DEPTH).
    #[arg(long, value_name = "N")]
    depth: Option<usize>,

    /// Convergence tolerance of the fixpoint engine.
    #[arg(long, value_name = "X", default_value_t = 1e-9)]
    eps: f64,

    /// Report every rule transition on stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Topdown,
    Fixpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Df,
    Bf,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Df => Strategy::DepthFirst,
            StrategyArg::Bf => Strategy::BreadthFirst,
        }
    }
}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// Die quietly when a downstream reader closes the pipe (`fpl ... | head`)
/// instead of panicking on the failed write.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn run(cli: Cli) -> Result<ExitCode, String> {
    if !(cli.eps > 0.0) {
        return Err(format!("--eps must be positive, got {}", cli.eps));
    }
    let depth = resolve_depth(cli.depth)?;
    let registry = Arc::new(Registry::with_builtins());

    let mut session = Session {
        registry: registry.clone(),
        program: empty_program(&registry),
        engine: cli.engine,
        strategy: cli.strategy.into(),
        depth,
        eps: cli.eps,
        trace: cli.trace,
        fixpoint: None,
    };

    if cli.file.is_none() && cli.query.is_none() {
        session.repl();
        return Ok(ExitCode::SUCCESS);
    }

    if let Some(path) = &cli.file {
        if let Err(code) = session.load(path) {
            return Ok(code);
        }
    }
    match (&cli.query, cli.engine) {
        (None, EngineKind::Topdown) => Ok(ExitCode::SUCCESS),
        (None, EngineKind::Fixpoint) => session.print_fixpoint(),
        (Some(_), EngineKind::Fixpoint) => {
            Err("the fixpoint engine prints the whole interpretation; drop --query".to_string())
        }
        (Some(text), EngineKind::Topdown) => {
            let query = match parse_query(strip_query(text)) {
                Ok(q) => q,
                Err(diags) => {
                    eprintln!("{diags}");
                    return Ok(ExitCode::FAILURE);
                }
            };
            let answers = match session.solve(&query) {
                Ok(answers) => answers,
                Err(e) => return Err(e),
            };
            let mut out = io::stdout().lock();
            render_all(&mut out, &answers).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// `--depth`, then FPL_DEPTH, then the engine default.
fn resolve_depth(flag: Option<usize>) -> Result<usize, String> {
    let depth = match flag {
        Some(n) => n,
        None => match std::env::var("FPL_DEPTH") {
            Ok(text) => text
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("FPL_DEPTH must be a positive integer, got `{text}`"))?,
            Err(_) => DEFAULT_DEPTH_LIMIT,
        },
    };
    if depth == 0 {
        return Err("the depth limit must be positive".to_string());
    }
    Ok(depth)
}

fn empty_program(registry: &Arc<Registry>) -> Program {
    parse_program("", registry.clone()).expect("the empty program loads").0
}

/// Accept goals with or without the `?-` prefix and the final period.
fn strip_query(text: &str) -> &str {
    let text = text.trim();
    let text = text.strip_prefix("?-").unwrap_or(text).trim();
    text.strip_suffix('.').unwrap_or(text).trim()
}

/// One-shot rendering: every grouped answer on its own line, `yes`/`no`
/// for queries without variables.
fn render_all(out: &mut impl Write, answers: &[Answer]) -> io::Result<()> {
    if answers.is_empty() {
        return writeln!(out, "no");
    }
    if answers.len() == 1 && answers[0].terms.is_empty() && answers[0].truths.is_empty() {
        return writeln!(out, "yes");
    }
    for answer in answers {
        writeln!(out, "{answer}")?;
    }
    Ok(())
}

struct Session {
    registry: Arc<Registry>,
    program: Program,
    engine: EngineKind,
    strategy: Strategy,
    depth: usize,
    eps: f64,
    trace: bool,
    /// Converged interpretation of the current program, built on demand.
    fixpoint: Option<Interpretation>,
}

impl Session {
    fn load(&mut self, path: &Path) -> Result<(), ExitCode> {
        let text = match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return Err(ExitCode::FAILURE);
            }
        };
        match parse_program(&text, self.registry.clone()) {
            Ok((program, warnings)) => {
                if !warnings.is_empty() {
                    eprintln!("{warnings}");
                }
                self.program = program;
                self.fixpoint = None;
                Ok(())
            }
            Err(diags) => {
                eprintln!("{diags}");
                Err(ExitCode::FAILURE)
            }
        }
    }

    fn solve(&mut self, query: &Query) -> Result<Vec<Answer>, String> {
        let options = SolveOptions {
            strategy: self.strategy,
            depth_limit: Some(self.depth),
            trace: self
                .trace
                .then(|| Box::new(|line: String| eprintln!("{line}")) as Box<dyn FnMut(String)>),
        };
        success_set(&self.program, query, options).map_err(|e| e.to_string())
    }

    /// Ground the program and run the fixpoint iteration, reporting
    /// divergence atom by atom.
    fn converge(&mut self) -> Result<&Interpretation, String> {
        if self.fixpoint.is_none() {
            let gp = ground(&self.program).map_err(|e| e.to_string())?;
            match lfp(&gp, self.eps, DEFAULT_MAX_ITERS) {
                LfpOutcome::Converged { interpretation, .. } => {
                    self.fixpoint = Some(interpretation);
                }
                LfpOutcome::Diverged { previous, last, discrepancy, iterations } => {
                    let mut report = format!(
                        "no convergence after {iterations} iterations; \
                         interpretations still differ by {discrepancy}"
                    );
                    for (atom, value) in last.explicit() {
                        let before = previous.value_of(atom);
                        if before.discrepancy(value) > self.eps {
                            report.push_str(&format!(
                                "\n  {atom}: {} -> {}",
                                summarize(&before),
                                summarize(value)
                            ));
                        }
                    }
                    return Err(report);
                }
            }
        }
        Ok(self.fixpoint.as_ref().unwrap())
    }

    fn print_fixpoint(&mut self) -> Result<ExitCode, String> {
        let interpretation = self.converge()?;
        print!("{interpretation}");
        Ok(ExitCode::SUCCESS)
    }

    fn repl(&mut self) {
        let interactive = io::stdin().is_terminal();
        let stdin = io::stdin();
        let mut lines = stdin.lock().lines();
        loop {
            if interactive {
                print!("?- ");
                let _ = io::stdout().flush();
            }
            let line = match lines.next() {
                Some(Ok(line)) => line,
                _ => break,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix(':') {
                if self.meta(rest) {
                    break;
                }
                continue;
            }
            let goal = strip_query(line);
            if goal.is_empty() {
                continue;
            }
            match parse_query(goal) {
                Ok(query) => self.answer(&query, &mut lines, interactive),
                Err(diags) => eprintln!("{diags}"),
            }
        }
    }

    /// Handle a `:command`; returns true when the session should end.
    fn meta(&mut self, line: &str) -> bool {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("quit") | Some("q") => return true,
            Some("load") => match words.next() {
                Some(path) => {
                    if self.load(Path::new(path)).is_ok() {
                        eprintln!("loaded {path}");
                    }
                }
                None => eprintln!(":load takes a file path"),
            },
            Some("engine") => match words.next() {
                Some("topdown") => self.engine = EngineKind::Topdown,
                Some("fixpoint") => self.engine = EngineKind::Fixpoint,
                _ => eprintln!(":engine takes `topdown` or `fixpoint`"),
            },
            Some("trace") => {
                self.trace = !self.trace;
                eprintln!("trace {}", if self.trace { "on" } else { "off" });
            }
            _ => eprintln!("commands: :load FILE, :engine topdown|fixpoint, :trace, :quit"),
        }
        false
    }

    fn answer(
        &mut self,
        query: &Query,
        lines: &mut impl Iterator<Item = io::Result<String>>,
        interactive: bool,
    ) {
        if self.engine == EngineKind::Fixpoint {
            self.answer_from_fixpoint(query);
            return;
        }
        let answers = match self.solve(query) {
            Ok(answers) => answers,
            Err(message) => {
                eprintln!("error: {message}");
                return;
            }
        };
        if answers.is_empty() {
            println!("no");
            return;
        }
        if answers.len() == 1 && answers[0].terms.is_empty() && answers[0].truths.is_empty() {
            println!("yes");
            return;
        }
        // Page through the grouped answers: `;` asks for the next one,
        // anything else accepts.
        for (idx, answer) in answers.iter().enumerate() {
            print!("{answer}");
            if idx + 1 == answers.len() {
                println!();
                break;
            }
            if interactive {
                let _ = io::stdout().flush();
            }
            match lines.next() {
                Some(Ok(line)) if line.trim() == ";" => println!(" ;"),
                _ => {
                    println!();
                    break;
                }
            }
        }
    }

    /// In fixpoint mode a query is a single atom at source arity; print
    /// the matching lines of the converged interpretation.
    fn answer_from_fixpoint(&mut self, query: &Query) {
        let goal = match single_atom(query) {
            Some(goal) => goal,
            None => {
                eprintln!("fixpoint queries take a single atom, without truth bounds");
                return;
            }
        };
        let (name, args) = match &goal {
            Term::Const(name) => (name.clone(), Vec::new()),
            Term::Compound(name, args) => (name.clone(), args.clone()),
            other => {
                eprintln!("`{other}` is not a predicate call");
                return;
            }
        };
        // Fuzzy, piecewise, wrapper and default-only predicates all carry a
        // default, so their ground atoms always have a value; resolve this
        // before converging, which borrows the session.
        let defaultable = !matches!(
            self.program.kind(&name, args.len()),
            PredKind::Unknown | PredKind::Crisp
        );
        let interpretation = match self.converge() {
            Ok(i) => i,
            Err(message) => {
                eprintln!("error: {message}");
                return;
            }
        };
        let mut shown = 0;
        for (atom, value) in interpretation.explicit() {
            if atom_matches(atom, &name, &args) {
                println!("{atom} = {value}");
                shown += 1;
            }
        }
        if shown > 0 {
            return;
        }
        // A ground atom of a predicate the program knows answers with its
        // default value even when nothing explicit was derived.
        let known =
            defaultable || interpretation.explicit().any(|(atom, _)| atom.name() == name);
        let ground_args: Option<Vec<String>> =
            args.iter().map(|a| a.is_ground().then(|| render_ground(a))).collect();
        match ground_args {
            Some(rendered) if known => {
                let atom = GroundAtom::new(name, rendered);
                println!("{atom} = {}", interpretation.value_of(&atom));
            }
            _ => println!("no"),
        }
    }
}

/// Divergent iterations can carry thousands of intervals; keep report
/// lines readable.
fn summarize(set: &fpl_core::truth::BorelSet) -> String {
    let parts = set.intervals();
    if parts.len() <= 6 {
        return set.to_string();
    }
    let lo = parts.first().unwrap().lo();
    let hi = parts.last().unwrap().hi();
    format!("{} pieces spanning [{lo},{hi}]", parts.len())
}

fn single_atom(query: &Query) -> Option<Term> {
    match query.goals.as_slice() {
        [QueryGoal::Atom(term, _)] => Some(term.clone()),
        _ => None,
    }
}

/// Ground argument rendering, matching how the grounder names atoms:
/// pairs keep their parentheses.
fn render_ground(term: &Term) -> String {
    match term {
        Term::Compound(name, args) if name == "," && args.len() == 2 => format!("({term})"),
        _ => term.to_string(),
    }
}

fn atom_matches(atom: &GroundAtom, name: &str, args: &[Term]) -> bool {
    if atom.name() != name || atom.args().len() != args.len() {
        return false;
    }
    atom.args().iter().zip(args).all(|(got, want)| match want {
        Term::Var(_) => true,
        term if term.is_ground() => *got == render_ground(term),
        _ => false,
    })
}
