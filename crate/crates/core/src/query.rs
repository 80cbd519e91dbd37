//! Query answering over a system state.
//!
//! An atomic ground query is solved directly with the queried atom as an
//! assumption. Any other query is compiled into rules deriving a fresh target
//! atom, and those rules are guarded by a fresh input atom `e`:
//!
//! ```text
//! external(e); define(ext(Q(φ), e)); assert(e); solve for target; release(e)
//! ```
//!
//! After `e` is released the guarded rules can never fire and are removed, so
//! the visible semantics of the state is unchanged. Variables in a
//! conjunctive query are read existentially: every ground instance of
//! `q :- φ` derives the same target.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::{
    check_safety, ground_rules, AtomId, AtomTable, GroundHead, GroundLiteral, GroundRule, UnsafeError,
};
use crate::solver::{solve, GroundProgram, Model, Satisfiability};
use crate::state::{CompositionViolation, DefineOutcome, SystemState};
use crate::syntax::{Atom, BodyElem, Head, Literal, QueryExpr, Rule};

/// How the matching stable models are consolidated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Report up to `n` matching models (`0` for all).
    Enumerate(usize),
    /// Brave reasoning: the union of the models.
    Union,
    /// Cautious reasoning: the intersection of the models.
    Intersection,
}

/// Model filter applied before the mode. Only the identity is available.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Filter {
    #[default]
    Identity,
}

impl Filter {
    pub fn apply(&self, models: Vec<Model>) -> Vec<Model> {
        match self {
            Filter::Identity => models,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
        })
    }
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

/// The consolidated result of a mode over a collection of models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Consolidated {
    Models(Vec<Model>),
    Atoms(Model),
    /// Intersection over an empty collection.
    Unsat,
}

/// Applies `filter`, then `mode`.
pub fn consolidate(models: Vec<Model>, mode: Mode, filter: Filter) -> Consolidated {
    let models = filter.apply(models);
    match mode {
        Mode::Enumerate(0) => Consolidated::Models(models),
        Mode::Enumerate(n) => Consolidated::Models(models.into_iter().take(n).collect()),
        Mode::Union => Consolidated::Atoms(models.into_iter().flatten().collect()),
        Mode::Intersection => {
            let mut it = models.into_iter();
            match it.next() {
                None => Consolidated::Unsat,
                Some(first) => Consolidated::Atoms(it.fold(first, |acc, m| acc.intersection(&m).copied().collect())),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryAnswer {
    pub verdict: Verdict,
    /// Whether some stable model matches the query.
    pub status: Satisfiability,
    /// Matching models, in enumeration order (up to the limit in enumerate
    /// mode, all of them otherwise).
    pub models: Vec<Model>,
    /// Union or intersection of the matching models, for those modes.
    pub consolidated: Option<Model>,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unsafe query: {0}")]
    Unsafe(#[from] UnsafeError),
    #[error("query scaffolding could not be defined: {0:?}")]
    Scaffolding(CompositionViolation),
}

/// A ground Boolean query over atom ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoolQuery {
    Atom(AtomId),
    Not(AtomId),
    And(Vec<BoolQuery>),
    Or(Vec<BoolQuery>),
}

impl BoolQuery {
    /// Interns the atoms of a ground query.
    pub fn from_expr(expr: &QueryExpr, table: &mut AtomTable) -> Self {
        match expr {
            QueryExpr::Atom(a) => BoolQuery::Atom(table.intern(a)),
            QueryExpr::Not(a) => BoolQuery::Not(table.intern(a)),
            QueryExpr::And(cs) => BoolQuery::And(cs.iter().map(|c| BoolQuery::from_expr(c, table)).collect()),
            QueryExpr::Or(cs) => BoolQuery::Or(cs.iter().map(|c| BoolQuery::from_expr(c, table)).collect()),
        }
    }

    /// Truth of the query in a model, read classically.
    pub fn holds(&self, model: &Model) -> bool {
        match self {
            BoolQuery::Atom(a) => model.contains(a),
            BoolQuery::Not(a) => !model.contains(a),
            BoolQuery::And(cs) => cs.iter().all(|c| c.holds(model)),
            BoolQuery::Or(cs) => cs.iter().any(|c| c.holds(model)),
        }
    }
}

/// Allocates a fresh reserved atom `__<prefix><n>`.
pub fn fresh_atom(prefix: &str, table: &mut AtomTable, state: &mut SystemState) -> AtomId {
    loop {
        let atom = Atom::prop(format!("__{prefix}{}", state.next_fresh()));
        if table.get(&atom).is_none() {
            return table.intern(&atom);
        }
    }
}

/// Compiles a Boolean query into rules deriving the returned target atom:
///
/// ```text
/// Q(a)       = { q :- a. }
/// Q(not a)   = { q :- not q_a. } ∪ Q(a)
/// Q(φ1 & φ2) = { q :- q_1, q_2. } ∪ Q(φ1) ∪ Q(φ2)
/// Q(φ1 | φ2) = { q :- q_1.  q :- q_2. } ∪ Q(φ1) ∪ Q(φ2)
/// ```
///
/// Conjunctions and disjunctions may have any number of operands.
pub fn compile_boolean(query: &BoolQuery, fresh: &mut dyn FnMut() -> AtomId) -> (Vec<GroundRule>, AtomId) {
    let mut rules = Vec::new();
    let target = compile_into(query, fresh, &mut rules);
    (rules, target)
}

fn compile_into(query: &BoolQuery, fresh: &mut dyn FnMut() -> AtomId, rules: &mut Vec<GroundRule>) -> AtomId {
    match query {
        BoolQuery::Atom(a) => {
            let q = fresh();
            rules.push(GroundRule::new(GroundHead::Atom(q), vec![*a], vec![]));
            q
        }
        BoolQuery::Not(a) => {
            let inner = compile_into(&BoolQuery::Atom(*a), fresh, rules);
            let q = fresh();
            rules.push(GroundRule::new(GroundHead::Atom(q), vec![], vec![inner]));
            q
        }
        BoolQuery::And(cs) => {
            let parts: Vec<AtomId> = cs.iter().map(|c| compile_into(c, fresh, rules)).collect();
            let q = fresh();
            rules.push(GroundRule::new(GroundHead::Atom(q), parts, vec![]));
            q
        }
        BoolQuery::Or(cs) => {
            let parts: Vec<AtomId> = cs.iter().map(|c| compile_into(c, fresh, rules)).collect();
            let q = fresh();
            rules.extend(parts.into_iter().map(|p| GroundRule::new(GroundHead::Atom(q), vec![p], vec![])));
            q
        }
    }
}

/// Adds `guard` to the positive body of every rule.
pub fn ext_annotate(rules: &[GroundRule], guard: AtomId) -> Vec<GroundRule> {
    rules
        .iter()
        .map(|r| {
            let mut pos = r.pos.clone();
            pos.push(guard);
            GroundRule::new(r.head, pos, r.neg.clone())
        })
        .collect()
}

/// Solves `program` for `target` and consolidates the result.
pub fn evaluate(program: &GroundProgram, target: AtomId, mode: Mode, filter: Filter) -> QueryAnswer {
    match mode {
        Mode::Enumerate(n) => {
            let r = solve(program, &[GroundLiteral::pos(target)], n);
            let models = filter.apply(r.models);
            QueryAnswer {
                verdict: (!models.is_empty()).into(),
                status: sat(!models.is_empty()),
                models,
                consolidated: None,
                mode,
            }
        }
        Mode::Union | Mode::Intersection => {
            let all = filter.apply(solve(program, &[], 0).models);
            let verdict = match consolidate(all.clone(), mode, Filter::Identity) {
                Consolidated::Atoms(set) => set.contains(&target),
                _ => false,
            };
            let matching: Vec<Model> = all.into_iter().filter(|m| m.contains(&target)).collect();
            let consolidated = match consolidate(matching.clone(), mode, Filter::Identity) {
                Consolidated::Atoms(set) => Some(set),
                _ => None,
            };
            QueryAnswer {
                verdict: verdict.into(),
                status: sat(!matching.is_empty()),
                models: matching,
                consolidated,
                mode,
            }
        }
    }
}

fn sat(b: bool) -> Satisfiability {
    if b {
        Satisfiability::Sat
    } else {
        Satisfiability::Unsat
    }
}

/// Builds the rules deriving the query target, optionally guarded.
fn scaffold(
    expr: &QueryExpr,
    guard: Option<AtomId>,
    table: &mut AtomTable,
    state: &mut SystemState,
) -> Result<(Vec<GroundRule>, AtomId), QueryError> {
    if expr.is_ground() {
        let query = BoolQuery::from_expr(expr, table);
        let (rules, target) = compile_boolean(&query, &mut || fresh_atom("q", table, state));
        let rules = match guard {
            Some(e) => ext_annotate(&rules, e),
            None => rules,
        };
        return Ok((rules, target));
    }
    let literals = expr.as_conjunction().expect("parser admits only conjunctive non-ground queries");
    let probe = Rule::new(Head::Falsity, literals.iter().cloned().map(BodyElem::Literal).collect());
    check_safety(&probe)?;

    let target = fresh_atom("q", table, state);
    let mut body: Vec<BodyElem> = literals.into_iter().map(BodyElem::Literal).collect();
    let mut base: BTreeSet<Atom> = state.atom_base().into_iter().map(|a| table.resolve(a).clone()).collect();
    if let Some(e) = guard {
        let e_atom = table.resolve(e).clone();
        base.insert(e_atom.clone());
        body.push(BodyElem::Literal(Literal::pos(e_atom)));
    }
    let rule = Rule::new(Head::Atom(table.resolve(target).clone()), body);
    let ground = ground_rules(std::slice::from_ref(&rule), &base);
    Ok((ground.rules.iter().map(|r| table.ground_rule(r)).collect(), target))
}

/// Answers a query, leaving the visible semantics of the state unchanged.
pub fn run_query(
    expr: &QueryExpr,
    mode: Mode,
    filter: Filter,
    table: &mut AtomTable,
    state: &mut SystemState,
) -> Result<QueryAnswer, QueryError> {
    if let QueryExpr::Atom(a) = expr {
        if a.is_ground() {
            let target = table.intern(a);
            return Ok(evaluate(&GroundProgram::new(state.induced_program()), target, mode, filter));
        }
    }
    let mut work = state.clone();
    let e = fresh_atom("e", table, &mut work);
    work.external(e);
    let (rules, target) = scaffold(expr, Some(e), table, &mut work)?;
    if let DefineOutcome::Vacuous(v) = work.define(rules) {
        return Err(QueryError::Scaffolding(v));
    }
    work.assert(e);
    let answer = evaluate(&GroundProgram::new(work.induced_program()), target, mode, filter);
    work.release(e);
    work.drop_rules_guarded_by(e);
    *state = work;
    Ok(answer)
}

/// Answers a query by defining its unguarded rules on a copy of the state.
/// The state itself is left untouched apart from the fresh-name counter.
pub fn run_query_by_definition(
    expr: &QueryExpr,
    mode: Mode,
    filter: Filter,
    table: &mut AtomTable,
    state: &mut SystemState,
) -> Result<QueryAnswer, QueryError> {
    let (rules, target) = scaffold(expr, None, table, state)?;
    let mut work = state.clone();
    if let DefineOutcome::Vacuous(v) = work.define(rules) {
        return Err(QueryError::Scaffolding(v));
    }
    Ok(evaluate(&GroundProgram::new(work.induced_program()), target, mode, filter))
}

/// Atoms of `model` selected for display: those matching a show signature,
/// or all non-reserved atoms when there is none. Sorted.
pub fn project(model: &Model, table: &AtomTable, shows: &BTreeSet<(String, usize)>) -> Vec<Atom> {
    let mut out: Vec<Atom> = model
        .iter()
        .map(|&a| table.resolve(a))
        .filter(|a| !a.is_reserved())
        .filter(|a| shows.is_empty() || shows.contains(&(a.predicate.clone(), a.arity())))
        .cloned()
        .collect();
    out.sort();
    out
}
