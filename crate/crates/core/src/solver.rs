//! Stable-model enumeration for ground programs.
//!
//! The search assigns atoms in ascending id order, true branch first, and
//! propagates on the program's completion: a rule whose body holds forces its
//! head, an atom without a live supporting rule is false, a true atom with a
//! single live support forces that support's body, and a false head (or a
//! constraint) with a body that is true except for one literal forces that
//! literal false. Every total assignment reached this way is a supported
//! model; [`check_stable`] then rejects those with unfounded atoms.
//!
//! A rule `{a} :- B` contributes `a :- B+` to the reduct with respect to `X`
//! only when `a` is in `X`; this makes `{a}.` have exactly the stable models
//! `{}` and `{a}`.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::ground::{AtomId, GroundHead, GroundLiteral, GroundRule};

/// Largest atom count accepted by [`brute_force_models`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

pub type Model = BTreeSet<AtomId>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("program has {0} atoms; exhaustive enumeration is limited to {BRUTE_FORCE_LIMIT}")]
    TooManyAtoms(usize),
    #[error("least model requires a definite program (no negation, no choice)")]
    NotDefinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Satisfiability {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
}

impl std::fmt::Display for Satisfiability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Satisfiability::Sat => "SAT",
            Satisfiability::Unsat => "UNSAT",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub models: Vec<Model>,
    pub status: Satisfiability,
    /// Whether the search space was exhausted (no model was cut off by the
    /// limit).
    pub exhausted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Head {
    Atom(usize),
    Choice(usize),
    Falsity,
}

#[derive(Clone, Debug)]
struct CompiledRule {
    head: Head,
    pos: Vec<usize>,
    neg: Vec<usize>,
}

/// A ground program with atoms renumbered densely and occurrence indices.
#[derive(Clone, Debug)]
pub struct GroundProgram {
    rules: Vec<GroundRule>,
    atoms: Vec<AtomId>,
    local: HashMap<AtomId, usize>,
    compiled: Vec<CompiledRule>,
    /// Rules with the atom in the head (normal or choice).
    supports: Vec<Vec<usize>>,
    pos_body_of: Vec<Vec<usize>>,
    neg_body_of: Vec<Vec<usize>>,
}

impl GroundProgram {
    pub fn new(rules: Vec<GroundRule>) -> Self {
        let atoms: Vec<AtomId> =
            rules.iter().flat_map(GroundRule::atoms).collect::<BTreeSet<_>>().into_iter().collect();
        let local: HashMap<AtomId, usize> = atoms.iter().enumerate().map(|(k, &a)| (a, k)).collect();
        let n = atoms.len();
        let mut supports = vec![Vec::new(); n];
        let mut pos_body_of = vec![Vec::new(); n];
        let mut neg_body_of = vec![Vec::new(); n];
        let compiled: Vec<CompiledRule> = rules
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let head = match r.head {
                    GroundHead::Atom(a) => {
                        supports[local[&a]].push(k);
                        Head::Atom(local[&a])
                    }
                    GroundHead::Choice(a) => {
                        supports[local[&a]].push(k);
                        Head::Choice(local[&a])
                    }
                    GroundHead::Falsity => Head::Falsity,
                };
                let pos: Vec<usize> = r.pos.iter().map(|a| local[a]).collect();
                let neg: Vec<usize> = r.neg.iter().map(|a| local[a]).collect();
                for &p in &pos {
                    pos_body_of[p].push(k);
                }
                for &q in &neg {
                    neg_body_of[q].push(k);
                }
                CompiledRule { head, pos, neg }
            })
            .collect();
        GroundProgram { rules, atoms, local, compiled, supports, pos_body_of, neg_body_of }
    }

    pub fn rules(&self) -> &[GroundRule] {
        &self.rules
    }

    /// Atoms occurring in the program, ascending.
    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    /// Rules with `atom` as (normal or choice) head.
    pub fn head_of(&self, atom: AtomId) -> &[usize] {
        self.local.get(&atom).map(|&k| self.supports[k].as_slice()).unwrap_or(&[])
    }

    pub fn pos_body_of(&self, atom: AtomId) -> &[usize] {
        self.local.get(&atom).map(|&k| self.pos_body_of[k].as_slice()).unwrap_or(&[])
    }

    pub fn neg_body_of(&self, atom: AtomId) -> &[usize] {
        self.local.get(&atom).map(|&k| self.neg_body_of[k].as_slice()).unwrap_or(&[])
    }

    fn to_model(&self, truth: impl Iterator<Item = usize>) -> Model {
        truth.map(|k| self.atoms[k]).collect()
    }

    fn local_set(&self, x: &Model) -> Option<Vec<bool>> {
        let mut v = vec![false; self.atoms.len()];
        for a in x {
            v[*self.local.get(a)?] = true;
        }
        Some(v)
    }
}

impl From<Vec<GroundRule>> for GroundProgram {
    fn from(rules: Vec<GroundRule>) -> Self {
        GroundProgram::new(rules)
    }
}

/// Least model of a definite program via counter-based forward chaining.
fn least_fixpoint<'a>(n: usize, rules: impl Iterator<Item = (usize, &'a [usize])>) -> Vec<bool> {
    let rules: Vec<(usize, &[usize])> = rules.collect();
    let mut missing: Vec<usize> = rules.iter().map(|(_, body)| body.len()).collect();
    let mut watch: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, (_, body)) in rules.iter().enumerate() {
        for &b in *body {
            watch[b].push(k);
        }
    }
    let mut truth = vec![false; n];
    let mut queue: Vec<usize> = Vec::new();
    for (k, (head, _)) in rules.iter().enumerate() {
        if missing[k] == 0 && !truth[*head] {
            truth[*head] = true;
            queue.push(*head);
        }
    }
    while let Some(a) = queue.pop() {
        for &k in &watch[a] {
            missing[k] -= 1;
            if missing[k] == 0 {
                let h = rules[k].0;
                if !truth[h] {
                    truth[h] = true;
                    queue.push(h);
                }
            }
        }
    }
    truth
}

/// Least model of a definite program (normal heads or constraints, no
/// negative literals, no choice heads). Constraints are ignored.
pub fn least_model(program: &GroundProgram) -> Result<Model, SolverError> {
    let mut definite = Vec::new();
    for r in &program.compiled {
        if !r.neg.is_empty() {
            return Err(SolverError::NotDefinite);
        }
        match r.head {
            Head::Atom(h) => definite.push((h, r.pos.as_slice())),
            Head::Choice(_) => return Err(SolverError::NotDefinite),
            Head::Falsity => {}
        }
    }
    let truth = least_fixpoint(program.atoms.len(), definite.into_iter());
    Ok(program.to_model((0..truth.len()).filter(|&k| truth[k])))
}

fn stable_local(program: &GroundProgram, x: &[bool]) -> bool {
    let reduct = program.compiled.iter().filter_map(|r| {
        if r.neg.iter().any(|&q| x[q]) {
            return None;
        }
        match r.head {
            Head::Atom(h) => Some((h, r.pos.as_slice())),
            Head::Choice(h) if x[h] => Some((h, r.pos.as_slice())),
            _ => None,
        }
    });
    if least_fixpoint(x.len(), reduct) != x {
        return false;
    }
    !program
        .compiled
        .iter()
        .any(|r| r.head == Head::Falsity && r.pos.iter().all(|&p| x[p]) && r.neg.iter().all(|&q| !x[q]))
}

/// Whether `x` is a stable model of the program. Atoms of `x` that do not
/// occur in the program make it unstable.
pub fn check_stable(program: &GroundProgram, x: &Model) -> bool {
    match program.local_set(x) {
        Some(v) => stable_local(program, &v),
        None => false,
    }
}

/// All stable models by testing every subset of the program's atoms, sorted
/// lexicographically.
pub fn brute_force_models(program: &GroundProgram) -> Result<Vec<Model>, SolverError> {
    let n = program.atoms.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(SolverError::TooManyAtoms(n));
    }
    let mut models = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let x: Vec<bool> = (0..n).map(|k| mask & (1 << k) != 0).collect();
        if stable_local(program, &x) {
            models.push(program.to_model((0..n).filter(|&k| x[k])));
        }
    }
    models.sort();
    Ok(models)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Val {
    Unknown,
    True,
    False,
}

impl Val {
    fn of(b: bool) -> Val {
        if b {
            Val::True
        } else {
            Val::False
        }
    }
}

/// Outcome of evaluating a rule body under a partial assignment.
enum BodyState {
    False,
    /// Number of unassigned literals, and the last one seen as (atom, sign).
    Open(usize, Option<(usize, bool)>),
}

struct Search<'p> {
    program: &'p GroundProgram,
    limit: usize,
    models: Vec<Model>,
    stopped: bool,
}

impl<'p> Search<'p> {
    fn body_state(&self, rule: &CompiledRule, vals: &[Val]) -> BodyState {
        let mut open = 0;
        let mut last = None;
        for &p in &rule.pos {
            match vals[p] {
                Val::False => return BodyState::False,
                Val::Unknown => {
                    open += 1;
                    last = Some((p, true));
                }
                Val::True => {}
            }
        }
        for &q in &rule.neg {
            match vals[q] {
                Val::True => return BodyState::False,
                Val::Unknown => {
                    open += 1;
                    last = Some((q, false));
                }
                Val::False => {}
            }
        }
        BodyState::Open(open, last)
    }

    /// Assigns `atom := value`; false on conflict.
    fn set(vals: &mut [Val], atom: usize, value: bool, changed: &mut bool) -> bool {
        match vals[atom] {
            Val::Unknown => {
                vals[atom] = Val::of(value);
                *changed = true;
                true
            }
            v => v == Val::of(value),
        }
    }

    /// Makes the literal (atom, sign) false.
    fn falsify(vals: &mut [Val], lit: (usize, bool), changed: &mut bool) -> bool {
        Self::set(vals, lit.0, !lit.1, changed)
    }

    fn propagate(&self, vals: &mut [Val]) -> bool {
        let prog = self.program;
        loop {
            let mut changed = false;
            for rule in &prog.compiled {
                let BodyState::Open(open, last) = self.body_state(rule, vals) else { continue };
                match rule.head {
                    Head::Falsity => {
                        if open == 0 || (open == 1 && !Self::falsify(vals, last.unwrap(), &mut changed)) {
                            return false;
                        }
                    }
                    Head::Atom(h) => {
                        if open == 0 {
                            if !Self::set(vals, h, true, &mut changed) {
                                return false;
                            }
                        } else if open == 1
                            && vals[h] == Val::False
                            && !Self::falsify(vals, last.unwrap(), &mut changed)
                        {
                            return false;
                        }
                    }
                    Head::Choice(_) => {}
                }
            }
            for a in 0..vals.len() {
                if vals[a] == Val::False {
                    continue;
                }
                let mut live = prog.supports[a]
                    .iter()
                    .copied()
                    .filter(|&k| !matches!(self.body_state(&prog.compiled[k], vals), BodyState::False));
                match (live.next(), live.next()) {
                    (None, _) => {
                        if !Self::set(vals, a, false, &mut changed) {
                            return false;
                        }
                    }
                    (Some(k), None) if vals[a] == Val::True => {
                        let rule = &prog.compiled[k];
                        for &p in &rule.pos {
                            if !Self::set(vals, p, true, &mut changed) {
                                return false;
                            }
                        }
                        for &q in &rule.neg {
                            if !Self::set(vals, q, false, &mut changed) {
                                return false;
                            }
                        }
                    }
                    _ => {}
                }
            }
            if !changed {
                // atoms without a well-founded derivation through rules whose
                // bodies are not yet false cannot be true in a stable model
                let reachable = least_fixpoint(
                    vals.len(),
                    prog.compiled.iter().filter_map(|r| match r.head {
                        Head::Atom(h) | Head::Choice(h) if !matches!(self.body_state(r, vals), BodyState::False) => {
                            Some((h, r.pos.as_slice()))
                        }
                        _ => None,
                    }),
                );
                for (a, &ok) in reachable.iter().enumerate() {
                    if !ok && !Self::set(vals, a, false, &mut changed) {
                        return false;
                    }
                }
                if !changed {
                    return true;
                }
            }
        }
    }

    fn run(&mut self, mut vals: Vec<Val>) {
        if self.stopped || !self.propagate(&mut vals) {
            return;
        }
        match vals.iter().position(|&v| v == Val::Unknown) {
            None => {
                let x: Vec<bool> = vals.iter().map(|&v| v == Val::True).collect();
                if stable_local(self.program, &x) {
                    self.models.push(self.program.to_model((0..x.len()).filter(|&k| x[k])));
                    if self.limit > 0 && self.models.len() >= self.limit {
                        self.stopped = true;
                    }
                }
            }
            Some(a) => {
                for value in [true, false] {
                    let mut branch = vals.clone();
                    branch[a] = Val::of(value);
                    self.run(branch);
                    if self.stopped {
                        return;
                    }
                }
            }
        }
    }
}

/// Enumerates stable models containing every positive and no negative
/// assumption atom. `limit == 0` enumerates all models.
pub fn solve(program: &GroundProgram, assumptions: &[GroundLiteral], limit: usize) -> SolveResult {
    let mut vals = vec![Val::Unknown; program.atoms.len()];
    let mut consistent = true;
    for lit in assumptions {
        match program.local.get(&lit.atom) {
            Some(&k) => {
                let mut changed = false;
                consistent &= Search::set(&mut vals, k, lit.positive, &mut changed);
            }
            // an atom outside the program is false in every model
            None => consistent &= !lit.positive,
        }
    }
    let mut search = Search { program, limit, models: Vec::new(), stopped: false };
    if consistent {
        search.run(vals);
    }
    let status = if search.models.is_empty() { Satisfiability::Unsat } else { Satisfiability::Sat };
    SolveResult { models: search.models, status, exhausted: !search.stopped }
}
