//! The interactive shell: command execution against a session and text
//! rendering of the results.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ground::{
    check_external_safety, check_safety, ground_external, ground_rules, possible_atoms, AtomId, AtomTable, UnsafeError,
};
use crate::query::{project, run_query, Filter, Mode, QueryAnswer, QueryError, Verdict};
use crate::solver::Satisfiability;
use crate::state::{CompositionViolation, DefineOutcome, SystemState, Truth};
use crate::syntax::{parse_command, Atom, BodyElem, Command, Directive, ParseError, Parsed, Program, Rule};

pub const PROMPT: &str = "?- ";
pub const CONTINUATION_PROMPT: &str = "|  ";

const HELP: &str = "\
commands:
  load FILE                 load a program file
  define RULES ?            add rules (may span several lines, end with '?')
  external ATOM [: BODY]    declare input atoms
  assert ATOM               set an input atom to true
  open ATOM                 leave an input atom open (true or false)
  retract ATOM              set an input atom to false
  release ATOM              turn an input atom into a permanently false atom
  assume [not] ATOM         filter models by a literal
  cancel [not] ATOM         withdraw an assumption
  query Q                   query with 'not', '&', '|' and [ ]
  option -n N               number of models to report (0 = all)
  option -e brave|cautious|auto
                            entailment mode (auto = enumerate models)
  state                     show rules, input atoms and assignments
  help                      this text
  exit                      leave the shell";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EntailmentMode {
    #[default]
    Enumerate,
    Brave,
    Cautious,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionOptions {
    /// Models reported per query; 0 reports all.
    pub model_limit: usize,
    pub mode: EntailmentMode,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions { model_limit: 1, mode: EntailmentMode::Enumerate }
    }
}

impl SessionOptions {
    pub fn query_mode(&self) -> Mode {
        match self.mode {
            EntailmentMode::Enumerate => Mode::Enumerate(self.model_limit),
            EntailmentMode::Brave => Mode::Union,
            EntailmentMode::Cautious => Mode::Intersection,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ShellError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("cannot read '{path}': {message}")]
    Io { path: String, message: String },
    #[error("{context}: {source}")]
    Unsafe { context: String, source: UnsafeError },
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("option: {0}")]
    Option(String),
    #[error("incomplete define: missing terminating '?'")]
    IncompleteDefine,
}

/// A query answer with models projected for display.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedAnswer {
    pub verdict: Verdict,
    pub status: Satisfiability,
    pub mode: EntailmentMode,
    pub models: Vec<Vec<Atom>>,
    pub consolidated: Option<Vec<Atom>>,
}

/// The effect of one command.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub messages: Vec<String>,
    pub warnings: Vec<String>,
    pub answer: Option<RenderedAnswer>,
    pub exit: bool,
}

impl Outcome {
    fn message(text: impl Into<String>) -> Self {
        Outcome { messages: vec![text.into()], ..Default::default() }
    }

    fn warning(text: impl Into<String>) -> Self {
        Outcome { warnings: vec![text.into()], ..Default::default() }
    }
}

/// One exploration session: the system state, the atom table and options.
#[derive(Clone, Debug, Default)]
pub struct Session {
    table: AtomTable,
    state: SystemState,
    options: SessionOptions,
    pending: Option<String>,
    base_dir: Option<PathBuf>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resolve relative `load` paths against `dir`.
    pub fn with_base_dir(dir: impl Into<PathBuf>) -> Self {
        Session { base_dir: Some(dir.into()), ..Default::default() }
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn table(&self) -> &AtomTable {
        &self.table
    }

    pub fn options(&self) -> &SessionOptions {
        &self.options
    }

    /// Whether a `define` is waiting for its terminating `?`.
    pub fn awaiting_more(&self) -> bool {
        self.pending.is_some()
    }

    pub fn atom_id(&self, atom: &Atom) -> Option<AtomId> {
        self.table.get(atom)
    }

    /// Feeds one input line. Returns `Ok(None)` while a multi-line define is
    /// incomplete. Blank lines outside a define are ignored.
    pub fn feed(&mut self, line: &str) -> Result<Option<Outcome>, ShellError> {
        if self.pending.is_none() && line.trim().is_empty() {
            return Ok(Some(Outcome::default()));
        }
        let parsed = parse_command(line, self.pending.as_deref());
        match parsed {
            Ok(Parsed::NeedMore(buffer)) => {
                self.pending = Some(buffer);
                Ok(None)
            }
            Ok(Parsed::Command(cmd)) => {
                self.pending = None;
                self.execute(cmd).map(Some)
            }
            Err(e) => {
                self.pending = None;
                Err(e.into())
            }
        }
    }

    /// Parses and executes a complete command text (which may span lines).
    pub fn execute_text(&mut self, text: &str) -> Result<Outcome, ShellError> {
        let mut lines = text.lines();
        let first = lines.next().unwrap_or("");
        let mut parsed = parse_command(first, None)?;
        for line in lines {
            match parsed {
                Parsed::NeedMore(buffer) => parsed = parse_command(line, Some(&buffer))?,
                Parsed::Command(_) => {
                    return Err(ParseError {
                        line: 2,
                        column: 1,
                        kind: crate::syntax::ParseErrorKind::Argument("unexpected input after command".into()),
                    }
                    .into())
                }
            }
        }
        match parsed {
            Parsed::Command(cmd) => self.execute(cmd),
            Parsed::NeedMore(_) => Err(ShellError::IncompleteDefine),
        }
    }

    pub fn execute(&mut self, cmd: Command) -> Result<Outcome, ShellError> {
        match cmd {
            Command::Load(path) => self.load(&path),
            Command::Define { program, directives } => self.add_program(&program, &directives),
            Command::External { atom, condition } => {
                self.add_program(&Program::default(), &[Directive::External { atom, condition }])
            }
            Command::Assert(a) => Ok(self.input_op("assert", &a, SystemState::assert)),
            Command::Open(a) => Ok(self.input_op("open", &a, SystemState::open)),
            Command::Retract(a) => Ok(self.input_op("retract", &a, SystemState::retract)),
            Command::Release(a) => Ok(self.input_op("release", &a, SystemState::release)),
            Command::Assume(lit) => {
                let lit = self.table.ground_literal(&lit);
                self.state.assume(lit);
                Ok(Outcome::default())
            }
            Command::Cancel(lit) => {
                let lit = self.table.ground_literal(&lit);
                self.state.cancel(lit);
                Ok(Outcome::default())
            }
            Command::Query(expr) => {
                let answer =
                    run_query(&expr, self.options.query_mode(), Filter::Identity, &mut self.table, &mut self.state)?;
                Ok(Outcome { answer: Some(self.render_answer(&answer)), ..Default::default() })
            }
            Command::Option(args) => {
                self.options = parse_options(&args, self.options)?;
                Ok(Outcome::default())
            }
            Command::State => Ok(Outcome::message(self.dump_state())),
            Command::Help => Ok(Outcome::message(HELP)),
            Command::Exit => Ok(Outcome { exit: true, ..Default::default() }),
        }
    }

    fn input_op(&mut self, name: &str, atom: &Atom, op: fn(&mut SystemState, AtomId) -> bool) -> Outcome {
        let id = self.table.intern(atom);
        if op(&mut self.state, id) {
            Outcome::default()
        } else {
            Outcome::warning(format!("{name}: {atom} is not an input atom"))
        }
    }

    fn load(&mut self, path: &str) -> Result<Outcome, ShellError> {
        let full = match &self.base_dir {
            Some(dir) if Path::new(path).is_relative() => dir.join(path),
            _ => PathBuf::from(path),
        };
        let text = std::fs::read_to_string(&full)
            .map_err(|e| ShellError::Io { path: path.to_string(), message: e.to_string() })?;
        let (program, directives) = crate::syntax::parse_program(&text)?;
        let mut outcome = self.add_program(&program, &directives)?;
        outcome.messages.push(format!(
            "loaded {path}: {} rules, {} input atoms",
            self.state.rules().len(),
            self.state.inputs().len()
        ));
        Ok(outcome)
    }

    /// Grounds and adds rules and directives: external declarations first,
    /// then the rules via `define`.
    fn add_program(&mut self, program: &Program, directives: &[Directive]) -> Result<Outcome, ShellError> {
        for rule in &program.rules {
            check_safety(rule).map_err(|source| ShellError::Unsafe { context: format!("rule '{rule}'"), source })?;
        }
        let mut externals: Vec<(Atom, Vec<BodyElem>)> = Vec::new();
        for d in directives {
            if let Directive::External { atom, condition } = d {
                check_external_safety(atom, condition)
                    .map_err(|source| ShellError::Unsafe { context: format!("'{d}'"), source })?;
                externals.push((atom.clone(), condition.clone()));
            }
        }

        let mut outcome = Outcome::default();
        for d in directives {
            if let Directive::Show { predicate, arity } = d {
                self.state.add_show(predicate.clone(), *arity);
            }
        }
        if !externals.is_empty() {
            let base = self.base_atoms();
            let possible = possible_atoms(&program.rules, &externals, &base);
            for (atom, condition) in &externals {
                let instances = ground_external(atom, condition, &possible).expect("safety checked above");
                for inst in instances {
                    let id = self.table.intern(&inst);
                    if self.state.released().contains(&id) {
                        outcome.warnings.push(format!("external: {inst} was released"));
                    }
                    self.state.external(id);
                }
            }
        }
        if !program.rules.is_empty() {
            // Rules written ground are passed on verbatim; only instances of
            // non-ground rules are pruned against the possible atoms.
            let (verbatim, schematic): (Vec<Rule>, Vec<Rule>) =
                program.rules.iter().cloned().partition(Rule::is_ground);
            let possible = possible_atoms(&program.rules, &[], &self.base_atoms());
            let instances = ground_rules(&schematic, &possible);
            let verbatim = verbatim.into_iter().filter_map(|r| {
                let holds = r.body.iter().all(|b| match b {
                    BodyElem::Comparison(c) => c.eval() == Some(true),
                    BodyElem::Literal(_) => true,
                });
                holds.then(|| {
                    Rule::new(r.head, r.body.into_iter().filter(|b| matches!(b, BodyElem::Literal(_))).collect())
                })
            });
            let rules: Vec<_> = verbatim.chain(instances.rules).map(|r| self.table.ground_rule(&r)).collect();
            if let DefineOutcome::Vacuous(v) = self.state.define(rules) {
                outcome.warnings.push(self.describe_violation(&v));
            }
        }
        Ok(outcome)
    }

    fn base_atoms(&self) -> BTreeSet<Atom> {
        self.state.atom_base().into_iter().map(|a| self.table.resolve(a).clone()).collect()
    }

    fn describe_violation(&self, v: &CompositionViolation) -> String {
        let names = |set: &BTreeSet<AtomId>| {
            set.iter().map(|&a| self.table.resolve(a).to_string()).collect::<Vec<_>>().join(", ")
        };
        match v {
            CompositionViolation::Redefinition(atoms) => {
                format!("define had no effect: {} already defined", names(atoms))
            }
            CompositionViolation::PositiveCycle(atoms) => {
                format!("define had no effect: positive cycle through {}", names(atoms))
            }
        }
    }

    fn render_answer(&self, answer: &QueryAnswer) -> RenderedAnswer {
        let shows = self.state.shows();
        RenderedAnswer {
            verdict: answer.verdict,
            status: answer.status,
            mode: self.options.mode,
            models: match self.options.mode {
                EntailmentMode::Enumerate => answer.models.iter().map(|m| project(m, &self.table, shows)).collect(),
                _ => Vec::new(),
            },
            consolidated: answer.consolidated.as_ref().map(|m| project(m, &self.table, shows)),
        }
    }

    /// The state in program syntax: rules, then input atoms annotated with
    /// their value, then assumptions and released atoms as comments.
    pub fn dump_state(&self) -> String {
        let mut out = String::new();
        let name = |a: AtomId| self.table.resolve(a).to_string();
        for r in self.state.rules() {
            let _ = writeln!(out, "{}", self.table.rule_syntax(r));
        }
        for &a in self.state.inputs() {
            let v = self.state.input_value(a).unwrap_or(Truth::False);
            let _ = writeln!(out, "#external {}. % {v}", name(a));
        }
        for &a in self.state.j_true() {
            let _ = writeln!(out, "% assume {}.", name(a));
        }
        for &a in self.state.j_false() {
            let _ = writeln!(out, "% assume not {}.", name(a));
        }
        for &a in self.state.released() {
            let _ = writeln!(out, "% released {}.", name(a));
        }
        for (p, n) in self.state.shows() {
            let _ = writeln!(out, "#show {p}/{n}.");
        }
        out.trim_end().to_string()
    }

    /// Runs one line and renders the result; errors are rendered, never
    /// propagated. Returns the empty string while a define is incomplete.
    pub fn repl_step(&mut self, line: &str) -> String {
        match self.feed(line) {
            Ok(Some(outcome)) => render(&outcome),
            Ok(None) => String::new(),
            Err(e) => format!("error: {e}\n"),
        }
    }
}

fn parse_options(args: &[String], current: SessionOptions) -> Result<SessionOptions, ShellError> {
    let mut opts = current;
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let value = it.next().ok_or_else(|| ShellError::Option(format!("'{flag}' expects a value")))?;
        match flag.as_str() {
            "-n" => {
                opts.model_limit = value
                    .parse()
                    .map_err(|_| ShellError::Option(format!("'-n' expects a non-negative integer, got '{value}'")))?;
            }
            "-e" => {
                opts.mode = match value.as_str() {
                    "brave" => EntailmentMode::Brave,
                    "cautious" => EntailmentMode::Cautious,
                    "auto" => EntailmentMode::Enumerate,
                    other => return Err(ShellError::Option(format!("unknown entailment mode '{other}'"))),
                };
            }
            other => return Err(ShellError::Option(format!("unsupported option '{other}' (use -n or -e)"))),
        }
    }
    Ok(opts)
}

fn atoms_line(atoms: &[Atom]) -> String {
    atoms.iter().map(Atom::to_string).collect::<Vec<_>>().join(" ")
}

/// Text form of an outcome: warnings, messages, then the answer.
pub fn render(outcome: &Outcome) -> String {
    let mut out = String::new();
    for w in &outcome.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for m in &outcome.messages {
        let _ = writeln!(out, "{m}");
    }
    if let Some(answer) = &outcome.answer {
        out.push_str(&render_models(answer));
    }
    out
}

/// `Answer: k` blocks for enumerated models, or one consolidated line for
/// brave and cautious reasoning, followed by the satisfiability status.
pub fn render_models(answer: &RenderedAnswer) -> String {
    let mut out = String::new();
    match answer.mode {
        EntailmentMode::Enumerate => {
            for (k, m) in answer.models.iter().enumerate() {
                let _ = writeln!(out, "Answer: {}", k + 1);
                let _ = writeln!(out, "{}", atoms_line(m));
            }
        }
        EntailmentMode::Brave | EntailmentMode::Cautious => {
            let label = if answer.mode == EntailmentMode::Brave { "Brave" } else { "Cautious" };
            if let Some(atoms) = &answer.consolidated {
                let _ = writeln!(out, "{label}: {}", atoms_line(atoms));
            }
            let _ = writeln!(out, "Entailed: {}", answer.verdict);
        }
    }
    let _ = writeln!(out, "{}", answer.status);
    out
}

/// Reads commands from `input` until `exit` or end of input, writing prompts
/// and rendered results to `output`. With `echo`, each input line is copied
/// after its prompt, producing a readable transcript for scripted input.
pub fn run_repl<R: BufRead, W: Write>(session: &mut Session, input: R, mut output: W, echo: bool) -> io::Result<()> {
    let mut lines = input.lines();
    loop {
        let prompt = if session.awaiting_more() { CONTINUATION_PROMPT } else { PROMPT };
        write!(output, "{prompt}")?;
        output.flush()?;
        let Some(line) = lines.next() else {
            writeln!(output)?;
            return Ok(());
        };
        let line = line?;
        if echo {
            writeln!(output, "{line}")?;
        }
        let (text, exit) = match session.feed(&line) {
            Ok(Some(outcome)) => (render(&outcome), outcome.exit),
            Ok(None) => (String::new(), false),
            Err(e) => (format!("error: {e}\n"), false),
        };
        write!(output, "{text}")?;
        if exit {
            return Ok(());
        }
    }
}

/// Replays a script and returns the transcript.
pub fn transcript(session: &mut Session, script: &str) -> String {
    let mut out = Vec::new();
    run_repl(session, script.as_bytes(), &mut out, true).expect("writing to memory");
    String::from_utf8(out).expect("utf-8 output")
}
