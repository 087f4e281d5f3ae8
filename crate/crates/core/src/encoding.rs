//! Pattern state and time encodings and their assembly into one formula.
//!
//! Variables: `a1..ak` (integer counts), `t0..tk` (times), `dI` for every
//! start entry `I` (durations), the state variables under their problem
//! names and the next-state copies with a trailing `'`.

use std::fmt;

use serde::Serialize;

use crate::analysis::{epsilon_b, Analysis};
use crate::formula::{Sort, Store, TermId};
use crate::model::{Comparison, Condition, Role, SnapAction, SnapId, TemporalNumericProblem};
use crate::pattern::Pattern;
use crate::rational::{self, Rational};
use crate::symbolic::{
    apply_condition, count_term, needs_middle_guard, repeated_condition, sigma_table, Sigma,
};

/// Assertion families, in emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    Domain,
    Init,
    Pre,
    Amo,
    Frame,
    Dur,
    StartEnd,
    Epsilon,
    NoOverlap,
    Lasting,
    Goal,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Group::Domain => "domain",
            Group::Init => "init",
            Group::Pre => "pre",
            Group::Amo => "amo",
            Group::Frame => "frame",
            Group::Dur => "dur",
            Group::StartEnd => "start-end",
            Group::Epsilon => "epsilon",
            Group::NoOverlap => "no-overlap",
            Group::Lasting => "lasting",
            Group::Goal => "goal",
        };
        f.write_str(s)
    }
}

pub fn next_name(name: &str) -> String {
    format!("{name}'")
}

/// Variables and symbolic states for one pattern.
pub struct EncodingContext<'a> {
    pub problem: &'a TemporalNumericProblem,
    pub analysis: &'a Analysis,
    pub pattern: Pattern,
    pub epsilon: Rational,
    pub store: Store,
    pub a: Vec<TermId>,
    pub t: Vec<TermId>,
    pub d: Vec<Option<TermId>>,
    pub t0: TermId,
    pub next: Sigma,
    /// σ_0..σ_k; `sigma[i]` is the state before entry `i` (0-based).
    pub sigma: Vec<Sigma>,
    cross: Vec<Vec<bool>>,
}

impl<'a> EncodingContext<'a> {
    pub fn new(problem: &'a TemporalNumericProblem, analysis: &'a Analysis, pattern: Pattern, epsilon: Rational) -> Self {
        let mut store = Store::new();
        let bools: Vec<TermId> = problem.bool_vars.iter().map(|n| store.var(n, Sort::Bool)).collect();
        let nums: Vec<TermId> = problem.num_vars.iter().map(|n| store.var(n, Sort::Real)).collect();
        let next = Sigma::initial(
            problem.bool_vars.iter().map(|n| store.var(&next_name(n), Sort::Bool)).collect(),
            problem.num_vars.iter().map(|n| store.var(&next_name(n), Sort::Real)).collect(),
        );
        let t0 = store.var("t0", Sort::Real);
        let mut a = Vec::new();
        let mut t = Vec::new();
        let mut d = Vec::new();
        for (i, e) in pattern.entries().iter().enumerate() {
            a.push(store.var(&format!("a{}", i + 1), Sort::Int));
            t.push(store.var(&format!("t{}", i + 1), Sort::Real));
            d.push(e.is_start().then(|| store.var(&format!("d{}", i + 1), Sort::Real)));
        }
        let steps: Vec<(&SnapAction, TermId)> = pattern.snaps().map(|s| problem.snap(s)).zip(a.iter().copied()).collect();
        let sigma = sigma_table(&mut store, Sigma::initial(bools, nums), steps);
        let n = problem.actions.len();
        let mut cross = vec![vec![false; n]; n];
        for b in problem.action_ids() {
            for c in problem.action_ids() {
                cross[b.0][c.0] = [Role::Start, Role::End].iter().any(|&r| {
                    [Role::Start, Role::End]
                        .iter()
                        .any(|&s| analysis.mutex(SnapId::new(b, r), SnapId::new(c, s)))
                });
            }
        }
        EncodingContext {
            problem,
            analysis,
            pattern,
            epsilon,
            store,
            a,
            t,
            d,
            t0,
            next,
            sigma,
            cross,
        }
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    fn snap_id(&self, i: usize) -> SnapId {
        self.pattern.entries()[i].snap
    }

    fn duration(&self, i: usize) -> TermId {
        self.d[i].expect("duration variables exist for start entries")
    }

    fn eps(&mut self) -> TermId {
        self.store.num(self.epsilon.clone())
    }

    fn a_gt(&mut self, i: usize, n: i64) -> TermId {
        self.store.gt_int(self.a[i], n)
    }

    fn a_eq(&mut self, i: usize, n: i64) -> TermId {
        self.store.eq_int(self.a[i], n)
    }

    /// `t_0 + ε`.
    fn earliest(&mut self) -> TermId {
        let e = self.eps();
        self.store.add(self.t0, e)
    }

    /// `t_i + d_i`.
    fn finish(&mut self, i: usize) -> TermId {
        let d = self.duration(i);
        self.store.add(self.t[i], d)
    }

    fn bool_conditions(conds: &[Condition]) -> impl Iterator<Item = &Condition> {
        conds.iter().filter(|c| matches!(c, Condition::Bool { .. }))
    }

    fn numeric_conditions(conds: &[Condition]) -> impl Iterator<Item = &Condition> {
        conds.iter().filter(|c| matches!(c, Condition::Numeric { .. }))
    }
}

/// Executability of every entry.
pub fn encode_pre(ctx: &mut EncodingContext) -> Vec<TermId> {
    let mut out = Vec::new();
    for i in 0..ctx.len() {
        let id = ctx.snap_id(i);
        let b = ctx.problem.action(id.action);
        let pre = &ctx.problem.snap(id).pre;
        if pre.is_empty() {
            continue;
        }
        let executed = ctx.a_gt(i, 0);
        let before = &ctx.sigma[i];
        let bools: Vec<TermId> = EncodingContext::bool_conditions(pre)
            .map(|c| apply_condition(&mut ctx.store, before, c))
            .collect();
        if !bools.is_empty() {
            let conj = ctx.store.and(bools);
            out.push(ctx.store.implies(executed, conj));
        }
        let eligible = ctx.analysis.is_eligible(id.action);
        let a = ctx.a[i];
        for c in EncodingContext::numeric_conditions(pre) {
            if !eligible {
                let g = apply_condition(&mut ctx.store, before, c);
                out.push(ctx.store.implies(executed, g));
                continue;
            }
            // (start count, end count) pairs relative to σ_{i-1} for the
            // first, last and (when needed) second repetition.
            let s = &mut ctx.store;
            let zero = s.int(0);
            let one = s.int(1);
            let (first, last, middle) = match id.role {
                Role::Start => {
                    let am1 = count_term(s, a, 1, -1);
                    ((zero, zero), (am1, am1), (one, one))
                }
                _ => {
                    let rewind = count_term(s, a, -1, 1);
                    let am1 = count_term(s, a, 1, -1);
                    let rewind2 = count_term(s, a, -1, 2);
                    ((rewind, zero), (zero, am1), (rewind2, one))
                }
            };
            let g = repeated_condition(s, before, b, c, first.0, first.1);
            out.push(s.implies(executed, g));
            let many = s.gt_int(a, 1);
            let g = repeated_condition(s, before, b, c, last.0, last.1);
            out.push(s.implies(many, g));
            if needs_middle_guard(b, c) {
                let more = s.gt_int(a, 2);
                let g = repeated_condition(s, before, b, c, middle.0, middle.1);
                out.push(s.implies(more, g));
            }
        }
    }
    out
}

/// `a_i ≤ 1` for starts and ends of actions that cannot roll.
pub fn encode_amo(ctx: &mut EncodingContext) -> Vec<TermId> {
    let capped: Vec<usize> = (0..ctx.len())
        .filter(|&i| !ctx.analysis.is_eligible(ctx.snap_id(i).action))
        .collect();
    capped.into_iter().map(|i| ctx.store.le_int(ctx.a[i], 1)).collect()
}

pub fn encode_frame(ctx: &mut EncodingContext) -> Vec<TermId> {
    let last = ctx.sigma.last().expect("σ_0 always exists").clone();
    let mut out = Vec::new();
    for (x, v) in ctx.next.bools.clone().into_iter().zip(last.bools) {
        out.push(ctx.store.iff(x, v));
    }
    for (x, v) in ctx.next.nums.clone().into_iter().zip(last.nums) {
        out.push(ctx.store.eq(x, v));
    }
    out
}

pub fn encode_dur(ctx: &mut EncodingContext) -> Vec<TermId> {
    let mut out = Vec::new();
    for i in 0..ctx.len() {
        let id = ctx.snap_id(i);
        let idle = ctx.a_eq(i, 0);
        let at_origin = ctx.store.eq(ctx.t[i], ctx.t0);
        if id.role != Role::Start {
            out.push(ctx.store.implies(idle, at_origin));
            continue;
        }
        let b = ctx.problem.action(id.action);
        let eb = epsilon_b(b, &ctx.epsilon);
        let executed = ctx.a_gt(i, 0);
        let earliest = ctx.earliest();
        let late_enough = ctx.store.ge(ctx.t[i], earliest);
        out.push(ctx.store.implies(executed, late_enough));
        let d = ctx.duration(i);
        let no_time = ctx.store.eq_int(d, 0);
        let both = ctx.store.and2(at_origin, no_time);
        out.push(ctx.store.implies(idle, both));
        let s = &mut ctx.store;
        let eb_t = s.num(eb.clone());
        let padded = s.add(d, eb_t);
        let lo = s.scale(ctx.a[i], &(&b.lower + &eb));
        let hi = s.scale(ctx.a[i], &(&b.upper + &eb));
        let lower = s.le(lo, padded);
        let upper = s.le(padded, hi);
        let bounds = s.and2(lower, upper);
        out.push(s.implies(executed, bounds));
    }
    out
}

fn matched(ctx: &mut EncodingContext, i: usize, j: usize) -> TermId {
    let same = ctx.store.eq(ctx.a[i], ctx.a[j]);
    let f = ctx.finish(i);
    let ends = ctx.store.eq(ctx.t[j], f);
    ctx.store.and2(same, ends)
}

pub fn encode_start_end(ctx: &mut EncodingContext) -> Vec<TermId> {
    let mut out = Vec::new();
    for i in 0..ctx.len() {
        let executed = ctx.a_gt(i, 0);
        let options: Vec<TermId> = if ctx.snap_id(i).role == Role::Start {
            let ends = ctx.pattern.matching_ends(i).to_vec();
            ends.into_iter().map(|j| matched(ctx, i, j)).collect()
        } else {
            let starts = ctx.pattern.matching_starts(i).to_vec();
            starts.into_iter().map(|s| matched(ctx, s, i)).collect()
        };
        let any = ctx.store.or(options);
        out.push(ctx.store.implies(executed, any));
    }
    out
}

pub fn encode_epsilon(ctx: &mut EncodingContext) -> Vec<TermId> {
    let mut out = Vec::new();
    for i in 0..ctx.len() {
        let si = ctx.snap_id(i);
        for j in 0..i {
            let sj = ctx.snap_id(j);
            if si == sj || ctx.analysis.mutex(si, sj) {
                let executed = ctx.a_gt(i, 0);
                let e = ctx.eps();
                let after = ctx.store.add(ctx.t[j], e);
                let sep = ctx.store.ge(ctx.t[i], after);
                out.push(ctx.store.implies(executed, sep));
            }
        }
    }
    // A rolled start must not interleave with interfering actions.
    for i in 0..ctx.len() {
        let si = ctx.snap_id(i);
        if si.role != Role::Start || !ctx.analysis.is_eligible(si.action) {
            continue;
        }
        for j in 0..ctx.len() {
            let sj = ctx.snap_id(j);
            if i == j || sj.role != Role::Start || sj.action == si.action || !ctx.cross[si.action.0][sj.action.0] {
                continue;
            }
            let (fi, fj) = (ctx.finish(i), ctx.finish(j));
            let s = &mut ctx.store;
            let before = s.ge(ctx.t[i], fj);
            let after = s.ge(ctx.t[j], fi);
            let single = s.eq_int(ctx.a[j], 1);
            let starts_later = s.ge(ctx.t[i], ctx.t[j]);
            let ends_earlier = s.le(fi, fj);
            let nested = s.and([single, starts_later, ends_earlier]);
            let apart = s.or([before, after, nested]);
            let rolled = s.gt_int(ctx.a[i], 1);
            out.push(s.implies(rolled, apart));
        }
    }
    out
}

pub fn encode_no_overlap(ctx: &mut EncodingContext) -> Vec<TermId> {
    let mut out = Vec::new();
    for i in 0..ctx.len() {
        let prev = ctx.pattern.previous_starts(i).to_vec();
        if prev.is_empty() {
            continue;
        }
        let executed = ctx.a_gt(i, 0);
        let waits: Vec<TermId> = prev
            .into_iter()
            .map(|j| {
                let f = ctx.finish(j);
                ctx.store.ge(ctx.t[i], f)
            })
            .collect();
        let all = ctx.store.and(waits);
        out.push(ctx.store.implies(executed, all));
    }
    out
}

pub fn encode_lasting(ctx: &mut EncodingContext) -> Vec<TermId> {
    let mut out = Vec::new();
    for i in 0..ctx.len() {
        let id = ctx.snap_id(i);
        if id.role != Role::Start {
            continue;
        }
        let b = ctx.problem.action(id.action);
        let conds = &b.lasting.pre;
        if conds.is_empty() {
            continue;
        }
        let eligible = ctx.analysis.is_eligible(id.action);
        let a = ctx.a[i];
        let (before, after) = (&ctx.sigma[i], &ctx.sigma[i + 1]);

        // (a) every repetition satisfies the lasting conditions
        let s = &mut ctx.store;
        let one = s.int(1);
        let two = s.int(2);
        let zero = s.int(0);
        let mut first = Vec::new();
        let mut last = Vec::new();
        let mut middle = Vec::new();
        for c in conds {
            match c {
                Condition::Bool { .. } => first.push(apply_condition(s, after, c)),
                Condition::Numeric { .. } if !eligible => first.push(apply_condition(s, after, c)),
                Condition::Numeric { .. } => {
                    first.push(repeated_condition(s, before, b, c, one, zero));
                    let am1 = count_term(s, a, 1, -1);
                    last.push(repeated_condition(s, before, b, c, a, am1));
                    if needs_middle_guard(b, c) {
                        middle.push(repeated_condition(s, before, b, c, two, one));
                    }
                }
            }
        }
        for (threshold, guards) in [(0, first), (1, last), (2, middle)] {
            if guards.is_empty() {
                continue;
            }
            let cond = s.gt_int(a, threshold);
            let conj = s.and(guards);
            out.push(s.implies(cond, conj));
        }

        // (b) entries that interfere with the lasting conditions
        let lasting = SnapId::new(id.action, Role::Lasting);
        for j in 0..ctx.len() {
            let sj = ctx.snap_id(j);
            if j == i || !ctx.analysis.mutex(sj, lasting) {
                continue;
            }
            if j < i {
                let executed = ctx.a_gt(i, 0);
                let s = &mut ctx.store;
                let ordered = s.ge(ctx.t[i], ctx.t[j]);
                out.push(s.implies(executed, ordered));
                if sj.role == Role::Start {
                    let fj = ctx.finish(j);
                    let s = &mut ctx.store;
                    let rolled = s.gt_int(ctx.a[j], 1);
                    let both = s.and2(executed, rolled);
                    let waits = s.ge(ctx.t[i], fj);
                    out.push(s.implies(both, waits));
                }
            } else {
                let earliest = ctx.earliest();
                let fi = ctx.finish(i);
                let s = &mut ctx.store;
                let from = s.ge(ctx.t[j], earliest);
                let until = s.lt(ctx.t[j], fi);
                let inside = s.and2(from, until);
                let ai = s.le_int(ctx.a[i], 1);
                let aj = s.le_int(ctx.a[j], 1);
                let no_roll = s.and2(ai, aj);
                out.push(s.implies(inside, no_roll));
                let state = &ctx.sigma[j + 1];
                let kept: Vec<TermId> = conds.iter().map(|c| apply_condition(s, state, c)).collect();
                let kept = s.and(kept);
                out.push(s.implies(inside, kept));
            }
        }
    }
    out
}

fn encode_domain(ctx: &mut EncodingContext) -> Vec<TermId> {
    let mut out = Vec::new();
    let zero = ctx.store.int(0);
    out.push(ctx.store.eq(ctx.t0, zero));
    for i in 0..ctx.len() {
        out.push(ctx.store.ge(ctx.a[i], zero));
        out.push(ctx.store.ge(ctx.t[i], zero));
        if let Some(d) = ctx.d[i] {
            out.push(ctx.store.ge(d, zero));
        }
    }
    out
}

fn encode_init(ctx: &mut EncodingContext) -> Vec<TermId> {
    let s0 = ctx.sigma[0].clone();
    let init = &ctx.problem.init;
    let mut out = Vec::new();
    for (&x, &v) in s0.bools.iter().zip(&init.bools) {
        out.push(if v { x } else { ctx.store.not(x) });
    }
    for (&x, v) in s0.nums.iter().zip(&init.nums) {
        let c = ctx.store.num(v.clone());
        out.push(ctx.store.eq(x, c));
    }
    out
}

fn encode_goal(ctx: &mut EncodingContext) -> Vec<TermId> {
    let next = ctx.next.clone();
    ctx.problem
        .goals
        .iter()
        .map(|g| apply_condition(&mut ctx.store, &next, g))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EncodingStats {
    pub entries: usize,
    pub variables: usize,
    pub assertions: usize,
    pub nodes: usize,
}

/// `I(X) ∧ T_s ∧ T_t ∧ G(X')` for one pattern.
pub struct Encoding<'a> {
    pub ctx: EncodingContext<'a>,
    pub assertions: Vec<(Group, TermId)>,
}

impl<'a> Encoding<'a> {
    pub fn stats(&self) -> EncodingStats {
        EncodingStats {
            entries: self.ctx.len(),
            variables: self.ctx.store.vars().len(),
            assertions: self.assertions.len(),
            nodes: self.ctx.store.len(),
        }
    }

    pub fn group(&self, g: Group) -> impl Iterator<Item = TermId> + '_ {
        self.assertions.iter().filter(move |(h, _)| *h == g).map(|(_, t)| *t)
    }

    pub fn contains(&self, t: TermId) -> bool {
        self.assertions.iter().any(|(_, u)| *u == t)
    }

    pub fn roots(&self) -> Vec<TermId> {
        self.assertions.iter().map(|(_, t)| *t).collect()
    }
}

/// Encodes `pattern` as is (callers concatenate for bounds above one).
pub fn assemble<'a>(
    problem: &'a TemporalNumericProblem,
    analysis: &'a Analysis,
    pattern: Pattern,
    epsilon: &Rational,
) -> Encoding<'a> {
    let mut ctx = EncodingContext::new(problem, analysis, pattern, epsilon.clone());
    let mut assertions = Vec::new();
    let families: [(Group, fn(&mut EncodingContext) -> Vec<TermId>); 11] = [
        (Group::Domain, encode_domain),
        (Group::Init, encode_init),
        (Group::Pre, encode_pre),
        (Group::Amo, encode_amo),
        (Group::Frame, encode_frame),
        (Group::Dur, encode_dur),
        (Group::StartEnd, encode_start_end),
        (Group::Epsilon, encode_epsilon),
        (Group::NoOverlap, encode_no_overlap),
        (Group::Lasting, encode_lasting),
        (Group::Goal, encode_goal),
    ];
    let tru = ctx.store.tru();
    for (g, f) in families {
        for t in f(&mut ctx) {
            if t != tru {
                assertions.push((g, t));
            }
        }
    }
    Encoding { ctx, assertions }
}

/// Human-readable listing, one assertion per line, for debugging.
pub fn describe(enc: &Encoding) -> String {
    let mut out = String::new();
    for (g, t) in &enc.assertions {
        out.push_str(&format!("[{g}] {}\n", enc.ctx.store.display(*t)));
    }
    out
}

/// `ψ ⊵ 0` as a term over arbitrary numeric terms, for callers outside the
/// encoder that need the same normal form.
pub fn compare(store: &mut Store, lhs: TermId, op: Comparison, rhs: TermId) -> TermId {
    store.cmp(lhs, op, rhs)
}

pub fn format_epsilon(eps: &Rational) -> String {
    rational::format(eps)
}
