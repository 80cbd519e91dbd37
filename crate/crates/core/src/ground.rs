//! Instantiation of non-ground rules and external declarations, and the
//! ground representation shared by the solver and the system state.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexSet;
use thiserror::Error;

use crate::syntax::{Atom, BodyElem, Head, Literal, Program, Rule, Term};

/// Dense identifier of a ground atom within one [`AtomTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub u32);

/// Bijection between ground atoms and dense ids. Ids are never reused.
#[derive(Clone, Debug, Default)]
pub struct AtomTable {
    atoms: IndexSet<Atom>,
}

impl AtomTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, atom: &Atom) -> AtomId {
        debug_assert!(atom.is_ground(), "interning non-ground atom {atom}");
        if let Some(k) = self.atoms.get_index_of(atom) {
            return AtomId(k as u32);
        }
        let (k, _) = self.atoms.insert_full(atom.clone());
        AtomId(k as u32)
    }

    pub fn get(&self, atom: &Atom) -> Option<AtomId> {
        self.atoms.get_index_of(atom).map(|k| AtomId(k as u32))
    }

    pub fn resolve(&self, id: AtomId) -> &Atom {
        &self.atoms[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn ground_literal(&mut self, lit: &Literal) -> GroundLiteral {
        GroundLiteral { atom: self.intern(&lit.atom), positive: lit.positive }
    }

    /// Converts a ground syntactic rule. Panics on comparisons or variables,
    /// which [`ground_rules`] never emits.
    pub fn ground_rule(&mut self, rule: &Rule) -> GroundRule {
        let head = match &rule.head {
            Head::Atom(a) => GroundHead::Atom(self.intern(a)),
            Head::Choice(a) => GroundHead::Choice(self.intern(a)),
            Head::Falsity => GroundHead::Falsity,
        };
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for b in &rule.body {
            match b {
                BodyElem::Literal(l) if l.positive => pos.push(self.intern(&l.atom)),
                BodyElem::Literal(l) => neg.push(self.intern(&l.atom)),
                BodyElem::Comparison(c) => {
                    assert_eq!(c.eval(), Some(true), "unevaluated comparison {c} in ground rule");
                }
            }
        }
        GroundRule::new(head, pos, neg)
    }

    /// Converts back to the syntactic representation.
    pub fn rule_syntax(&self, rule: &GroundRule) -> Rule {
        let head = match rule.head {
            GroundHead::Atom(a) => Head::Atom(self.resolve(a).clone()),
            GroundHead::Choice(a) => Head::Choice(self.resolve(a).clone()),
            GroundHead::Falsity => Head::Falsity,
        };
        let body = rule
            .pos
            .iter()
            .map(|&a| BodyElem::Literal(Literal::pos(self.resolve(a).clone())))
            .chain(rule.neg.iter().map(|&a| BodyElem::Literal(Literal::neg(self.resolve(a).clone()))))
            .collect();
        Rule::new(head, body)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundLiteral {
    pub atom: AtomId,
    pub positive: bool,
}

impl GroundLiteral {
    pub fn pos(atom: AtomId) -> Self {
        GroundLiteral { atom, positive: true }
    }

    pub fn neg(atom: AtomId) -> Self {
        GroundLiteral { atom, positive: false }
    }

    pub fn complement(self) -> Self {
        GroundLiteral { atom: self.atom, positive: !self.positive }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroundHead {
    Atom(AtomId),
    Choice(AtomId),
    Falsity,
}

/// A ground rule over atom ids. Body atom lists are kept sorted and free of
/// duplicates so that structurally equal rules compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundRule {
    pub head: GroundHead,
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
}

impl GroundRule {
    pub fn new(head: GroundHead, mut pos: Vec<AtomId>, mut neg: Vec<AtomId>) -> Self {
        pos.sort_unstable();
        pos.dedup();
        neg.sort_unstable();
        neg.dedup();
        GroundRule { head, pos, neg }
    }

    pub fn fact(a: AtomId) -> Self {
        GroundRule::new(GroundHead::Atom(a), vec![], vec![])
    }

    pub fn choice(a: AtomId) -> Self {
        GroundRule::new(GroundHead::Choice(a), vec![], vec![])
    }

    pub fn constraint(pos: Vec<AtomId>, neg: Vec<AtomId>) -> Self {
        GroundRule::new(GroundHead::Falsity, pos, neg)
    }

    pub fn head_atom(&self) -> Option<AtomId> {
        match self.head {
            GroundHead::Atom(a) | GroundHead::Choice(a) => Some(a),
            GroundHead::Falsity => None,
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.head_atom().into_iter().chain(self.pos.iter().copied()).chain(self.neg.iter().copied())
    }
}

impl fmt::Display for GroundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.head {
            GroundHead::Atom(a) => write!(f, "#{}", a.0)?,
            GroundHead::Choice(a) => write!(f, "{{#{}}}", a.0)?,
            GroundHead::Falsity => {}
        }
        if !self.pos.is_empty() || !self.neg.is_empty() || self.head == GroundHead::Falsity {
            f.write_str(" :- ")?;
            let lits: Vec<String> = self
                .pos
                .iter()
                .map(|a| format!("#{}", a.0))
                .chain(self.neg.iter().map(|a| format!("not #{}", a.0)))
                .collect();
            f.write_str(&lits.join(", "))?;
        }
        f.write_str(".")
    }
}

/// The constants and integers available for instantiation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HerbrandUniverse {
    pub terms: BTreeSet<Term>,
}

impl HerbrandUniverse {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_atom(&mut self, atom: &Atom) {
        self.terms.extend(atom.args.iter().filter(|t| t.is_ground()).cloned());
    }

    pub fn add_rule(&mut self, rule: &Rule) {
        if let Some(a) = rule.head.atom() {
            self.add_atom(a);
        }
        for b in &rule.body {
            match b {
                BodyElem::Literal(l) => self.add_atom(&l.atom),
                BodyElem::Comparison(c) => {
                    self.terms.extend([&c.left, &c.right].into_iter().filter(|t| t.is_ground()).cloned());
                }
            }
        }
    }

    pub fn from_program(program: &Program) -> Self {
        let mut u = Self::new();
        for r in &program.rules {
            u.add_rule(r);
        }
        u
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unsafe variables {}", .variables.iter().cloned().collect::<Vec<_>>().join(", "))]
pub struct UnsafeError {
    pub variables: BTreeSet<String>,
}

/// Checks that every variable of the rule occurs in a positive, non-builtin
/// body literal.
pub fn check_safety(rule: &Rule) -> Result<(), UnsafeError> {
    let bound: BTreeSet<&str> = rule.positive_body().flat_map(Atom::variables).collect();
    let unsafe_vars: BTreeSet<String> =
        rule.variables().into_iter().filter(|v| !bound.contains(v)).map(str::to_string).collect();
    if unsafe_vars.is_empty() {
        Ok(())
    } else {
        Err(UnsafeError { variables: unsafe_vars })
    }
}

/// Safety of `#external atom : condition`.
pub fn check_external_safety(atom: &Atom, condition: &[BodyElem]) -> Result<(), UnsafeError> {
    check_safety(&Rule::new(Head::Atom(atom.clone()), condition.to_vec()))
}

type Substitution = BTreeMap<String, Term>;

/// Ground atoms indexed by predicate.
#[derive(Default)]
struct AtomIndex<'a> {
    by_pred: HashMap<&'a str, Vec<&'a Atom>>,
}

impl<'a> AtomIndex<'a> {
    fn new(atoms: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut idx = AtomIndex::default();
        for a in atoms {
            idx.by_pred.entry(a.predicate.as_str()).or_default().push(a);
        }
        idx
    }

    fn candidates(&self, pattern: &Atom) -> &[&'a Atom] {
        self.by_pred.get(pattern.predicate.as_str()).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn apply_term(t: &Term, s: &Substitution) -> Term {
    match t {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        _ => t.clone(),
    }
}

fn apply_atom(a: &Atom, s: &Substitution) -> Atom {
    Atom { predicate: a.predicate.clone(), args: a.args.iter().map(|t| apply_term(t, s)).collect() }
}

fn apply_body(body: &[BodyElem], s: &Substitution) -> Vec<BodyElem> {
    body.iter()
        .map(|b| match b {
            BodyElem::Literal(l) => BodyElem::Literal(Literal { positive: l.positive, atom: apply_atom(&l.atom, s) }),
            BodyElem::Comparison(c) => BodyElem::Comparison(crate::syntax::Comparison {
                left: apply_term(&c.left, s),
                op: c.op,
                right: apply_term(&c.right, s),
            }),
        })
        .collect()
}

fn unify(pattern: &Atom, ground: &Atom, s: &Substitution) -> Option<Substitution> {
    if pattern.arity() != ground.arity() {
        return None;
    }
    let mut out = s.clone();
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        match p {
            Term::Var(v) => match out.get(v) {
                Some(bound) if bound != g => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), g.clone());
                }
            },
            _ if p != g => return None,
            _ => {}
        }
    }
    Some(out)
}

/// All substitutions that make every positive body literal match an atom of
/// `index` and every comparison true. Negative literals are ignored. The
/// result is sorted, which fixes the instance order.
fn matches(body: &[BodyElem], index: &AtomIndex<'_>) -> BTreeSet<Substitution> {
    let positives: Vec<&Atom> = body
        .iter()
        .filter_map(|b| match b {
            BodyElem::Literal(l) if l.positive => Some(&l.atom),
            _ => None,
        })
        .collect();
    let mut partial = vec![Substitution::new()];
    for pattern in positives {
        let mut next = Vec::new();
        for s in &partial {
            for cand in index.candidates(pattern) {
                if let Some(s2) = unify(pattern, cand, s) {
                    next.push(s2);
                }
            }
        }
        partial = next;
        if partial.is_empty() {
            break;
        }
    }
    partial
        .into_iter()
        .filter(|s| {
            body.iter().all(|b| match b {
                BodyElem::Comparison(c) => {
                    let inst = crate::syntax::Comparison {
                        left: apply_term(&c.left, s),
                        op: c.op,
                        right: apply_term(&c.right, s),
                    };
                    inst.eval() == Some(true)
                }
                BodyElem::Literal(_) => true,
            })
        })
        .collect()
}

/// Atoms that may become true: the closure of `base` under all rules and
/// external declarations, ignoring negation and treating choices (and
/// externals) as facts.
pub fn possible_atoms(rules: &[Rule], externals: &[(Atom, Vec<BodyElem>)], base: &BTreeSet<Atom>) -> BTreeSet<Atom> {
    let mut possible = base.clone();
    let producers: Vec<(&Atom, &[BodyElem])> = rules
        .iter()
        .filter_map(|r| r.head.atom().map(|h| (h, r.body.as_slice())))
        .chain(externals.iter().map(|(a, c)| (a, c.as_slice())))
        .collect();
    loop {
        let mut fresh = Vec::new();
        {
            let index = AtomIndex::new(possible.iter());
            for (head, body) in &producers {
                for s in matches(body, &index) {
                    let inst = apply_atom(head, &s);
                    if inst.is_ground() && !possible.contains(&inst) {
                        fresh.push(inst);
                    }
                }
            }
        }
        if fresh.is_empty() {
            return possible;
        }
        possible.extend(fresh);
    }
}

/// Instantiates safe rules. Substitutions are drawn from the atoms that may
/// become true (`base` closed under the rules); an instance whose positive
/// body mentions an atom outside that set can never fire and is not emitted.
/// Instances with a false comparison are dropped, and surviving comparisons
/// are removed from the body.
pub fn ground_rules(rules: &[Rule], base: &BTreeSet<Atom>) -> Program {
    let possible = possible_atoms(rules, &[], base);
    let index = AtomIndex::new(possible.iter());
    let mut out = Vec::new();
    for rule in rules {
        debug_assert!(check_safety(rule).is_ok(), "grounding unsafe rule {rule}");
        for s in matches(&rule.body, &index) {
            out.push(instantiate(rule, &s));
        }
    }
    Program::new(out)
}

fn instantiate(rule: &Rule, s: &Substitution) -> Rule {
    let head = match &rule.head {
        Head::Atom(a) => Head::Atom(apply_atom(a, s)),
        Head::Choice(a) => Head::Choice(apply_atom(a, s)),
        Head::Falsity => Head::Falsity,
    };
    let body = apply_body(&rule.body, s).into_iter().filter(|b| matches!(b, BodyElem::Literal(_))).collect();
    Rule::new(head, body)
}

/// Ground instances of `#external atom : condition` whose positive condition
/// literals all occur in `base`. Negative condition literals are ignored.
pub fn ground_external(
    atom: &Atom,
    condition: &[BodyElem],
    base: &BTreeSet<Atom>,
) -> Result<BTreeSet<Atom>, UnsafeError> {
    check_external_safety(atom, condition)?;
    let index = AtomIndex::new(base.iter());
    Ok(matches(condition, &index).iter().map(|s| apply_atom(atom, s)).collect())
}

/// Full instantiation over `universe` without any pruning, except for
/// instances whose comparisons are false. Exponential in the number of
/// variables per rule; intended as a reference for small inputs.
pub fn ground_exhaustive(rules: &[Rule], universe: &HerbrandUniverse) -> Program {
    let terms: Vec<&Term> = universe.terms.iter().collect();
    let mut out = Vec::new();
    for rule in rules {
        let vars: Vec<&str> = rule.variables().into_iter().collect();
        let total = terms.len().pow(vars.len() as u32);
        for mut n in 0..total {
            let mut s = Substitution::new();
            for v in vars.iter().rev() {
                s.insert(v.to_string(), terms[n % terms.len()].clone());
                n /= terms.len();
            }
            let keep = apply_body(&rule.body, &s).iter().all(|b| match b {
                BodyElem::Comparison(c) => c.eval() == Some(true),
                BodyElem::Literal(_) => true,
            });
            if keep {
                out.push(instantiate(rule, &s));
            }
        }
    }
    Program::new(out)
}
