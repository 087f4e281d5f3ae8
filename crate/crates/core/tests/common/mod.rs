//! Random problems, actions and states shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use tplan_core::analysis::eligible_for_rolling;
use tplan_core::formula::Value;
use tplan_core::model::{
    BoolVar, Comparison, Condition, DurativeAction, Effect, LinearExpr, NumVar, NumericEffect, SnapAction, State,
    TemporalNumericProblem,
};
use tplan_core::rational::{self, Rational};

pub const BOOLS: usize = 2;
pub const NUMS: usize = 3;

pub fn bool_names() -> Vec<String> {
    (0..BOOLS).map(|k| format!("v{k}")).collect()
}

pub fn num_names() -> Vec<String> {
    (0..NUMS).map(|k| format!("x{k}")).collect()
}

fn small(rng: &mut impl Rng, lo: i64, hi: i64) -> Rational {
    rational::int(rng.gen_range(lo..=hi))
}

fn coefficient(rng: &mut impl Rng) -> Rational {
    rational::int(*[-2, -1, 1, 2].choose(rng).unwrap())
}

pub fn random_condition(rng: &mut impl Rng) -> Condition {
    if rng.gen_bool(0.3) {
        return Condition::Bool {
            var: BoolVar(rng.gen_range(0..BOOLS)),
            value: rng.gen(),
        };
    }
    let mut vars: Vec<usize> = (0..NUMS).collect();
    vars.shuffle(rng);
    let n = rng.gen_range(1..=2);
    let terms: Vec<(NumVar, Rational)> = vars[..n].iter().map(|&v| (NumVar(v), coefficient(rng))).collect();
    let cmp = *[Comparison::Gt, Comparison::Ge, Comparison::Eq, Comparison::Le, Comparison::Lt]
        .choose(rng)
        .unwrap();
    // Equalities rarely hold on random states; keep them uncommon.
    let cmp = if cmp == Comparison::Eq && rng.gen_bool(0.7) { Comparison::Ge } else { cmp };
    Condition::Numeric {
        expr: LinearExpr::from_parts(small(rng, -6, 6), terms),
        cmp,
    }
}

pub fn random_conditions(rng: &mut impl Rng, max: usize) -> Vec<Condition> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| random_condition(rng)).collect()
}

/// Effects over distinct variables. `increments_only` restricts numeric
/// effects to `x := x + ψ'`.
pub fn random_effects(rng: &mut impl Rng, increments_only: bool) -> Vec<Effect> {
    let mut out = Vec::new();
    for b in 0..BOOLS {
        if rng.gen_bool(0.3) {
            out.push(Effect::Bool {
                var: BoolVar(b),
                value: rng.gen(),
            });
        }
    }
    for x in 0..NUMS {
        if !rng.gen_bool(0.4) {
            continue;
        }
        let other = (x + rng.gen_range(1..NUMS)) % NUMS;
        let mut expr = LinearExpr::constant(small(rng, -3, 3));
        if rng.gen_bool(0.4) {
            expr.add_term(NumVar(other), coefficient(rng));
        }
        if increments_only || rng.gen_bool(0.5) {
            expr.add_term(NumVar(x), rational::int(1));
        }
        out.push(Effect::Numeric(NumericEffect::new(NumVar(x), expr)));
    }
    out
}

pub fn random_action(rng: &mut impl Rng, name: &str, increments_only: bool) -> DurativeAction {
    DurativeAction {
        name: name.to_string(),
        start: SnapAction::new(random_conditions(rng, 2), random_effects(rng, increments_only)),
        lasting: SnapAction::new(random_conditions(rng, 1), vec![]),
        end: SnapAction::new(random_conditions(rng, 2), random_effects(rng, increments_only)),
        lower: rational::int(1),
        upper: rational::int(1),
        instantaneous: false,
    }
}

pub fn random_eligible_action(rng: &mut impl Rng, increments_only: bool) -> DurativeAction {
    loop {
        let b = random_action(rng, "b", increments_only);
        if eligible_for_rolling(&b) {
            return b;
        }
    }
}

pub fn random_state(rng: &mut impl Rng) -> State {
    State {
        bools: (0..BOOLS).map(|_| rng.gen()).collect(),
        nums: (0..NUMS).map(|_| small(rng, -8, 12)).collect(),
    }
}

pub fn random_problem(rng: &mut impl Rng) -> TemporalNumericProblem {
    loop {
        let n = rng.gen_range(1..=3);
        let actions: Vec<DurativeAction> = (0..n)
            .map(|k| {
                let inc = rng.gen_bool(0.5);
                random_action(rng, &format!("act{k}"), inc)
            })
            .collect();
        let init = random_state(rng);
        if let Ok(p) = TemporalNumericProblem::new(bool_names(), num_names(), actions, init, vec![]) {
            return p;
        }
    }
}

/// Variable lookup over a state plus named extra values.
pub fn lookup<'a>(state: &'a State, extra: &'a [(String, Value)]) -> impl Fn(&str) -> Option<Value> + 'a {
    move |name: &str| {
        if let Some((_, v)) = extra.iter().find(|(n, _)| n == name) {
            return Some(v.clone());
        }
        if let Some(k) = name.strip_prefix('v').and_then(|k| k.parse::<usize>().ok()) {
            return state.bools.get(k).map(|b| Value::Bool(*b));
        }
        if let Some(k) = name.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()) {
            return state.nums.get(k).map(|n| Value::Num(n.clone()));
        }
        None
    }
}
