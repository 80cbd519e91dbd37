//! The system state `(R, I, i, j)` and its state-changing operators.
//!
//! `R` is a ground program, `I` the input atoms (never heads of `R`), `i`
//! assigns each input atom true, false or open (false by default), and `j`
//! holds assumptions on arbitrary atoms (unassigned by default). The state
//! induces the program
//!
//! ```text
//! R ∪ {a. | i(a)=t} ∪ {{a}. | i(a)=u} ∪ {:- not a. | j(a)=t} ∪ {:- a. | j(a)=f}
//! ```

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexSet;
use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};

use crate::ground::{AtomId, GroundLiteral, GroundRule};

/// A value of the three-valued assignments `i` and `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Truth {
    True,
    False,
    Open,
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::True => "t",
            Truth::False => "f",
            Truth::Open => "u",
        })
    }
}

/// Why two programs cannot be joined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompositionViolation {
    /// Atoms defined in both programs.
    Redefinition(BTreeSet<AtomId>),
    /// A positive dependency cycle spanning heads of both programs.
    PositiveCycle(BTreeSet<AtomId>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DefineOutcome {
    Applied,
    Vacuous(CompositionViolation),
}

impl DefineOutcome {
    pub fn is_applied(&self) -> bool {
        matches!(self, DefineOutcome::Applied)
    }
}

/// Sizes of the state components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDigest {
    pub rules: usize,
    pub inputs: usize,
    pub i_true: usize,
    pub i_open: usize,
    pub j_true: usize,
    pub j_false: usize,
}

pub fn heads<'a>(rules: impl IntoIterator<Item = &'a GroundRule>) -> BTreeSet<AtomId> {
    rules.into_iter().filter_map(GroundRule::head_atom).collect()
}

/// Checks that `p` and `q` neither define a common atom nor share a strongly
/// connected component of the positive dependency graph of `p ∪ q` that
/// touches heads of both.
pub fn check_compositional(p: &[GroundRule], q: &[GroundRule]) -> Result<(), CompositionViolation> {
    let hp = heads(p);
    let hq = heads(q);
    let shared: BTreeSet<AtomId> = hp.intersection(&hq).copied().collect();
    if !shared.is_empty() {
        return Err(CompositionViolation::Redefinition(shared));
    }
    let mut graph: DiGraphMap<AtomId, ()> = DiGraphMap::new();
    for r in p.iter().chain(q) {
        if let Some(h) = r.head_atom() {
            graph.add_node(h);
            for &b in &r.pos {
                graph.add_edge(h, b, ());
            }
        }
    }
    for component in tarjan_scc(&graph) {
        if component.iter().any(|a| hp.contains(a)) && component.iter().any(|a| hq.contains(a)) {
            return Err(CompositionViolation::PositiveCycle(component.into_iter().collect()));
        }
    }
    Ok(())
}

pub fn compositional(p: &[GroundRule], q: &[GroundRule]) -> bool {
    check_compositional(p, q).is_ok()
}

/// Confines `program` to the atom base `inputs ∪ head(program)`: rules with a
/// positive body atom outside the base are dropped, and negative literals on
/// atoms outside the base are deleted.
pub fn confine(inputs: &BTreeSet<AtomId>, program: impl IntoIterator<Item = GroundRule>) -> Vec<GroundRule> {
    let program: Vec<GroundRule> = program.into_iter().collect();
    let mut base = inputs.clone();
    base.extend(heads(&program));
    program
        .into_iter()
        .filter(|r| r.pos.iter().all(|a| base.contains(a)))
        .map(|r| {
            let neg = r.neg.iter().copied().filter(|a| base.contains(a)).collect();
            GroundRule::new(r.head, r.pos, neg)
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct SystemState {
    rules: IndexSet<GroundRule>,
    inputs: BTreeSet<AtomId>,
    i_true: BTreeSet<AtomId>,
    i_open: BTreeSet<AtomId>,
    j_true: BTreeSet<AtomId>,
    j_false: BTreeSet<AtomId>,
    released: BTreeSet<AtomId>,
    shows: BTreeSet<(String, usize)>,
    fresh: u64,
}

/// Structural equality on `(R, I, i, j)` plus the released atoms. Display
/// settings and the fresh-name counter do not take part.
impl PartialEq for SystemState {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
            && self.inputs == other.inputs
            && self.i_true == other.i_true
            && self.i_open == other.i_open
            && self.j_true == other.j_true
            && self.j_false == other.j_false
            && self.released == other.released
    }
}

impl Eq for SystemState {}

impl SystemState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a state from its components; `i` is restricted to `inputs` and
    /// inputs that are heads of `rules` are dropped.
    pub fn from_parts(
        rules: impl IntoIterator<Item = GroundRule>,
        inputs: impl IntoIterator<Item = AtomId>,
        i: impl IntoIterator<Item = (AtomId, Truth)>,
        j: impl IntoIterator<Item = (AtomId, Truth)>,
    ) -> Self {
        let mut s = SystemState { rules: rules.into_iter().collect(), ..Default::default() };
        let defined = heads(&s.rules);
        s.inputs = inputs.into_iter().filter(|a| !defined.contains(a)).collect();
        for (a, v) in i {
            if s.inputs.contains(&a) {
                match v {
                    Truth::True => s.i_true.insert(a),
                    Truth::Open => s.i_open.insert(a),
                    Truth::False => false,
                };
            }
        }
        for (a, v) in j {
            match v {
                Truth::True => s.j_true.insert(a),
                Truth::False => s.j_false.insert(a),
                Truth::Open => false,
            };
        }
        s
    }

    pub fn rules(&self) -> impl ExactSizeIterator<Item = &GroundRule> {
        self.rules.iter()
    }

    pub fn inputs(&self) -> &BTreeSet<AtomId> {
        &self.inputs
    }

    pub fn released(&self) -> &BTreeSet<AtomId> {
        &self.released
    }

    pub fn head_atoms(&self) -> BTreeSet<AtomId> {
        heads(&self.rules)
    }

    /// `I ∪ head(R)`: the atoms that can be true in some stable model.
    pub fn atom_base(&self) -> BTreeSet<AtomId> {
        let mut b = self.inputs.clone();
        b.extend(self.head_atoms());
        b
    }

    pub fn input_value(&self, a: AtomId) -> Option<Truth> {
        if !self.inputs.contains(&a) {
            None
        } else if self.i_true.contains(&a) {
            Some(Truth::True)
        } else if self.i_open.contains(&a) {
            Some(Truth::Open)
        } else {
            Some(Truth::False)
        }
    }

    pub fn assumption(&self, a: AtomId) -> Truth {
        if self.j_true.contains(&a) {
            Truth::True
        } else if self.j_false.contains(&a) {
            Truth::False
        } else {
            Truth::Open
        }
    }

    pub fn i_true(&self) -> &BTreeSet<AtomId> {
        &self.i_true
    }

    pub fn i_open(&self) -> &BTreeSet<AtomId> {
        &self.i_open
    }

    pub fn j_true(&self) -> &BTreeSet<AtomId> {
        &self.j_true
    }

    pub fn j_false(&self) -> &BTreeSet<AtomId> {
        &self.j_false
    }

    pub fn shows(&self) -> &BTreeSet<(String, usize)> {
        &self.shows
    }

    pub fn add_show(&mut self, predicate: impl Into<String>, arity: usize) {
        self.shows.insert((predicate.into(), arity));
    }

    /// Next value of the fresh-name counter.
    pub fn next_fresh(&mut self) -> u64 {
        self.fresh += 1;
        self.fresh
    }

    pub fn digest(&self) -> StateDigest {
        StateDigest {
            rules: self.rules.len(),
            inputs: self.inputs.len(),
            i_true: self.i_true.len(),
            i_open: self.i_open.len(),
            j_true: self.j_true.len(),
            j_false: self.j_false.len(),
        }
    }

    /// The program induced by the state.
    pub fn induced_program(&self) -> Vec<GroundRule> {
        let mut out: Vec<GroundRule> = self.rules.iter().cloned().collect();
        out.extend(self.i_true.iter().map(|&a| GroundRule::fact(a)));
        out.extend(self.i_open.iter().map(|&a| GroundRule::choice(a)));
        out.extend(self.j_true.iter().map(|&a| GroundRule::constraint(vec![], vec![a])));
        out.extend(self.j_false.iter().map(|&a| GroundRule::constraint(vec![a], vec![])));
        out
    }

    /// Adds an assumption. A positive literal moves its atom into `j^t` and
    /// out of `j^f`; a negative one the other way round.
    pub fn assume(&mut self, lit: GroundLiteral) {
        if lit.positive {
            self.j_true.insert(lit.atom);
            self.j_false.remove(&lit.atom);
        } else {
            self.j_true.remove(&lit.atom);
            self.j_false.insert(lit.atom);
        }
    }

    /// Withdraws an assumption: `a` leaves `j^t`, `not a` leaves `j^f`.
    pub fn cancel(&mut self, lit: GroundLiteral) {
        if lit.positive {
            self.j_true.remove(&lit.atom);
        } else {
            self.j_false.remove(&lit.atom);
        }
    }

    /// Sets an input atom to true. Returns false (and leaves the state
    /// unchanged) if `a` is not an input atom.
    pub fn assert(&mut self, a: AtomId) -> bool {
        if !self.inputs.contains(&a) {
            return false;
        }
        self.i_true.insert(a);
        self.i_open.remove(&a);
        true
    }

    /// Sets an input atom to open.
    pub fn open(&mut self, a: AtomId) -> bool {
        if !self.inputs.contains(&a) {
            return false;
        }
        self.i_true.remove(&a);
        self.i_open.insert(a);
        true
    }

    /// Sets an input atom to false.
    pub fn retract(&mut self, a: AtomId) -> bool {
        if !self.inputs.contains(&a) {
            return false;
        }
        self.i_true.remove(&a);
        self.i_open.remove(&a);
        true
    }

    /// Joins `new_rules` with `R` if the two are compositional, confining the
    /// union to the atom base. Input atoms that become defined leave `I`
    /// (and `i`). A non-compositional join leaves the state unchanged.
    pub fn define(&mut self, new_rules: impl IntoIterator<Item = GroundRule>) -> DefineOutcome {
        let new_rules: Vec<GroundRule> = new_rules.into_iter().collect();
        let current: Vec<GroundRule> = self.rules.iter().cloned().collect();
        if let Err(violation) = check_compositional(&current, &new_rules) {
            return DefineOutcome::Vacuous(violation);
        }
        let confined = confine(&self.inputs, current.into_iter().chain(new_rules));
        self.rules = confined.into_iter().collect();
        let defined = self.head_atoms();
        self.inputs.retain(|a| !defined.contains(a));
        self.i_true.retain(|a| !defined.contains(a));
        self.i_open.retain(|a| !defined.contains(a));
        DefineOutcome::Applied
    }

    /// Makes `a` an input atom unless it is defined, already an input, or
    /// was released. Returns whether `I` changed.
    pub fn external(&mut self, a: AtomId) -> bool {
        if self.released.contains(&a) || self.rules.iter().any(|r| r.head_atom() == Some(a)) {
            return false;
        }
        self.inputs.insert(a)
    }

    /// Turns input atom `a` into a permanently false, defined atom by adding
    /// `a :- a.` Returns false if `a` is not an input atom.
    pub fn release(&mut self, a: AtomId) -> bool {
        if !self.inputs.remove(&a) {
            return false;
        }
        self.rules.insert(GroundRule::new(crate::ground::GroundHead::Atom(a), vec![a], vec![]));
        self.i_true.remove(&a);
        self.i_open.remove(&a);
        self.released.insert(a);
        true
    }

    /// Deletes rules that can no longer fire because their positive body
    /// mentions the released atom `e`; the rule `e :- e.` itself stays.
    pub(crate) fn drop_rules_guarded_by(&mut self, e: AtomId) {
        debug_assert!(self.released.contains(&e));
        self.rules.retain(|r| !r.pos.contains(&e) || r.head_atom() == Some(e));
    }

    /// Checks `I ∩ head(R) = ∅` and `dom(i) ⊆ I`.
    pub fn invariants_hold(&self) -> bool {
        let defined = self.head_atoms();
        self.inputs.is_disjoint(&defined)
            && self.i_true.is_subset(&self.inputs)
            && self.i_open.is_subset(&self.inputs)
            && self.i_true.is_disjoint(&self.i_open)
            && self.j_true.is_disjoint(&self.j_false)
            && self.released.is_disjoint(&self.inputs)
    }
}
