//! Symbolic states σ_i and the repetition substitution ψ[p, b⊢, q, b⊣].
//!
//! A [`Sigma`] maps every state variable to a term over the initial state
//! variables and the action counts seen so far.

use crate::formula::{Store, TermId};
use crate::model::{Condition, DurativeAction, Effect, LinearExpr, NumVar, SnapAction, Var};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sigma {
    pub bools: Vec<TermId>,
    pub nums: Vec<TermId>,
}

impl Sigma {
    /// σ_0: every variable maps to its own term.
    pub fn initial(bools: Vec<TermId>, nums: Vec<TermId>) -> Self {
        Sigma { bools, nums }
    }

    pub fn var(&self, v: Var) -> TermId {
        match v {
            Var::Bool(b) => self.bools[b.0],
            Var::Num(n) => self.nums[n.0],
        }
    }
}

/// σ_i from σ_{i-1} after `a` executed `count` times.
pub fn sigma_step(store: &mut Store, prev: &Sigma, a: &SnapAction, count: TermId) -> Sigma {
    let mut next = prev.clone();
    if a.eff.is_empty() {
        return next;
    }
    let executed = store.gt_int(count, 0);
    let idle = store.eq_int(count, 0);
    for e in &a.eff {
        match e {
            Effect::Bool { var, value: true } => next.bools[var.0] = store.or2(prev.bools[var.0], executed),
            Effect::Bool { var, value: false } => next.bools[var.0] = store.and2(prev.bools[var.0], idle),
            Effect::Numeric(ne) => {
                let old = prev.nums[ne.var.0];
                next.nums[ne.var.0] = match ne.increment() {
                    Some(inc) => {
                        let delta = apply_linear(store, prev, &inc);
                        let scaled = store.mul(count, delta);
                        store.add(old, scaled)
                    }
                    None => {
                        let value = apply_linear(store, prev, &ne.expr);
                        store.ite(executed, value, old)
                    }
                };
            }
        }
    }
    next
}

/// σ_0..σ_k along a sequence of snap actions with their count terms.
pub fn sigma_table<'a>(
    store: &mut Store,
    initial: Sigma,
    steps: impl IntoIterator<Item = (&'a SnapAction, TermId)>,
) -> Vec<Sigma> {
    let mut table = vec![initial];
    for (a, count) in steps {
        let next = sigma_step(store, table.last().expect("non-empty"), a, count);
        table.push(next);
    }
    table
}

/// σ(ψ) for a linear expression over the state variables.
pub fn apply_linear(store: &mut Store, sigma: &Sigma, psi: &LinearExpr) -> TermId {
    apply_linear_with(store, psi, |_, v| sigma.nums[v.0])
}

fn apply_linear_with(store: &mut Store, psi: &LinearExpr, mut image: impl FnMut(&mut Store, NumVar) -> TermId) -> TermId {
    let mut parts = Vec::new();
    let k = store.num(psi.constant_part().clone());
    parts.push(k);
    for (v, c) in psi.terms() {
        let t = image(store, v);
        parts.push(store.scale(t, c));
    }
    store.sum(parts)
}

/// σ(c) for a condition: `v = ⊤` ↦ σ(v), `v = ⊥` ↦ ¬σ(v), `ψ ⊵ 0` ↦ σ(ψ) ⊵ 0.
pub fn apply_condition(store: &mut Store, sigma: &Sigma, c: &Condition) -> TermId {
    match c {
        Condition::Bool { var, value: true } => sigma.bools[var.0],
        Condition::Bool { var, value: false } => store.not(sigma.bools[var.0]),
        Condition::Numeric { expr, cmp } => {
            let lhs = apply_linear(store, sigma, expr);
            let zero = store.int(0);
            store.cmp(lhs, *cmp, zero)
        }
    }
}

/// σ(ψ[p, b⊢, q, b⊣]) ⊵ 0.
///
/// A variable incremented by `b⊢` (resp. `b⊣`) becomes `x + p·ψ'` (resp.
/// `x + q·ψ'`). A variable assigned `x := ψ''` by `b⊢` (resp. `b⊣`) becomes
/// `ψ''` only when `p > 0` (resp. `q > 0`) and stays `x` otherwise, so that
/// `ψ[0, b⊢, 0, b⊣]` is `ψ` and negative counts rewind only increments.
pub fn repeated_condition(
    store: &mut Store,
    sigma: &Sigma,
    b: &DurativeAction,
    c: &Condition,
    p: TermId,
    q: TermId,
) -> TermId {
    match c {
        Condition::Bool { .. } => apply_condition(store, sigma, c),
        Condition::Numeric { expr, cmp } => {
            let lhs = repeated_linear(store, sigma, b, expr, p, q);
            let zero = store.int(0);
            store.cmp(lhs, *cmp, zero)
        }
    }
}

pub fn repeated_linear(
    store: &mut Store,
    sigma: &Sigma,
    b: &DurativeAction,
    psi: &LinearExpr,
    p: TermId,
    q: TermId,
) -> TermId {
    apply_linear_with(store, psi, |store, x| {
        let old = sigma.nums[x.0];
        let (effect, count) = match (b.start.effect_on(Var::Num(x)), b.end.effect_on(Var::Num(x))) {
            (Some(Effect::Numeric(e)), _) => (e, p),
            (_, Some(Effect::Numeric(e))) => (e, q),
            _ => return old,
        };
        match effect.increment() {
            Some(inc) => {
                let delta = apply_linear(store, sigma, &inc);
                let scaled = store.mul(count, delta);
                store.add(old, scaled)
            }
            None => {
                let value = apply_linear(store, sigma, &effect.expr);
                let positive = store.gt_int(count, 0);
                store.ite(positive, value, old)
            }
        }
    })
}

/// True when `c` mentions a variable that `b` assigns other than by a
/// linear increment. Such conditions are not monotone over the first
/// repetition and need a third guard.
pub fn needs_middle_guard(b: &DurativeAction, c: &Condition) -> bool {
    b.start.eff.iter().chain(&b.end.eff).any(|e| match e {
        Effect::Numeric(ne) => !ne.is_linear_increment() && c.mentions(Var::Num(ne.var)),
        Effect::Bool { .. } => false,
    })
}

/// Integer term `k·a + m`.
pub fn count_term(store: &mut Store, a: TermId, k: i64, m: i64) -> TermId {
    let ka = store.scale(a, &Rational::from_integer(k.into()));
    let mm = store.int(m);
    store.add(ka, mm)
}
