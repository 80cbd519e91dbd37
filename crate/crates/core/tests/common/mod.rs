#![allow(dead_code)]

use aspic::ground::{AtomId, AtomTable, GroundHead, GroundLiteral, GroundRule};
use aspic::solver::{brute_force_models, GroundProgram, Model};
use aspic::state::{SystemState, Truth};
use aspic::syntax::{Atom, QueryExpr};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A table holding propositional atoms `a0 .. a{n-1}` with ids `0 .. n-1`.
pub fn table(n: usize) -> AtomTable {
    let mut t = AtomTable::new();
    for k in 0..n {
        t.intern(&Atom::prop(format!("a{k}")));
    }
    t
}

fn pick(rng: &mut ChaCha8Rng, atoms: &[AtomId], max: usize) -> Vec<AtomId> {
    let k = rng.gen_range(0..=max.min(atoms.len()));
    atoms.choose_multiple(rng, k).copied().collect()
}

/// A random rule over `atoms` with head drawn from `heads`.
pub fn random_rule(rng: &mut ChaCha8Rng, heads: &[AtomId], atoms: &[AtomId]) -> GroundRule {
    let roll = rng.gen_range(0..10);
    let head = if heads.is_empty() || roll < 2 {
        GroundHead::Falsity
    } else {
        let h = *heads.choose(rng).unwrap();
        if roll < 5 {
            GroundHead::Choice(h)
        } else {
            GroundHead::Atom(h)
        }
    };
    let pos = pick(rng, atoms, 3);
    let neg = pick(rng, atoms, 2);
    GroundRule::new(head, pos, neg)
}

/// A program with up to `max_atoms` atoms and up to `max_rules` rules mixing
/// normal, choice and constraint rules.
pub fn random_program(rng: &mut ChaCha8Rng, max_atoms: usize, max_rules: usize) -> Vec<GroundRule> {
    let n = rng.gen_range(1..=max_atoms);
    let atoms: Vec<AtomId> = (0..n as u32).map(AtomId).collect();
    let m = rng.gen_range(0..=max_rules);
    (0..m).map(|_| random_rule(rng, &atoms, &atoms)).collect()
}

fn truth(rng: &mut ChaCha8Rng) -> Truth {
    *[Truth::True, Truth::False, Truth::Open].choose(rng).unwrap()
}

/// A random state: input atoms, rules over the remaining atoms as heads,
/// random assignments and occasionally released atoms.
pub fn random_state(rng: &mut ChaCha8Rng, max_atoms: usize, max_rules: usize) -> SystemState {
    let n = rng.gen_range(1..=max_atoms);
    let atoms: Vec<AtomId> = (0..n as u32).map(AtomId).collect();
    let inputs: Vec<AtomId> = atoms.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
    let heads: Vec<AtomId> = atoms.iter().copied().filter(|a| !inputs.contains(a)).collect();
    let m = rng.gen_range(0..=max_rules);
    let rules: Vec<GroundRule> = (0..m).map(|_| random_rule(rng, &heads, &atoms)).collect();
    let i: Vec<(AtomId, Truth)> = inputs.iter().map(|&a| (a, truth(rng))).collect();
    let mut j: Vec<(AtomId, Truth)> = Vec::new();
    for &a in &atoms {
        if rng.gen_bool(0.3) {
            j.push((a, truth(rng)));
        }
    }
    let mut s = SystemState::from_parts(rules, inputs.clone(), i, j);
    for &a in &inputs {
        if rng.gen_bool(0.1) {
            s.release(a);
        }
    }
    s
}

pub fn random_atom(rng: &mut ChaCha8Rng, n: usize) -> AtomId {
    AtomId(rng.gen_range(0..n as u32))
}

pub fn random_literal(rng: &mut ChaCha8Rng, n: usize) -> GroundLiteral {
    GroundLiteral { atom: random_atom(rng, n), positive: rng.gen_bool(0.5) }
}

/// A random Boolean query in negation normal form over `a0 .. a{n-1}`.
pub fn random_query(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> QueryExpr {
    let leaf = |rng: &mut ChaCha8Rng| {
        let a = Atom::prop(format!("a{}", rng.gen_range(0..n)));
        if rng.gen_bool(0.3) {
            QueryExpr::Not(a)
        } else {
            QueryExpr::Atom(a)
        }
    };
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng);
    }
    let k = rng.gen_range(2..=3);
    let parts = (0..k).map(|_| random_query(rng, n, depth - 1)).collect();
    if rng.gen_bool(0.5) {
        QueryExpr::And(parts)
    } else {
        QueryExpr::Or(parts)
    }
}

/// Stable models of the induced program, by exhaustive enumeration.
pub fn oracle_models(state: &SystemState) -> Vec<Model> {
    brute_force_models(&GroundProgram::new(state.induced_program())).expect("small program")
}

/// Truth of `expr` in `model`, read directly off the query syntax.
pub fn holds(expr: &QueryExpr, model: &Model, table: &AtomTable) -> bool {
    let atom_true = |a: &Atom| table.get(a).is_some_and(|id| model.contains(&id));
    match expr {
        QueryExpr::Atom(a) => atom_true(a),
        QueryExpr::Not(a) => !atom_true(a),
        QueryExpr::And(parts) => parts.iter().all(|p| holds(p, model, table)),
        QueryExpr::Or(parts) => parts.iter().any(|p| holds(p, model, table)),
    }
}
