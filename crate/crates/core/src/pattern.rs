//! Patterns: ordered sequences of start and end snap actions.
//!
//! Positions are 0-based here; the encoding names them `a1..ak`.

use std::collections::BTreeSet;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::model::{ActionId, Comparison, Condition, DurativeAction, Effect, LinearExpr, Role, SnapAction, SnapId, TemporalNumericProblem};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternEntry {
    pub snap: SnapId,
    /// Number of earlier occurrences of the same snap action.
    pub copy: usize,
}

impl PatternEntry {
    pub fn action(&self) -> ActionId {
        self.snap.action
    }

    pub fn role(&self) -> Role {
        self.snap.role
    }

    pub fn is_start(&self) -> bool {
        self.snap.role == Role::Start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    entries: Vec<PatternEntry>,
    ends: Vec<Vec<usize>>,
    starts: Vec<Vec<usize>>,
    previous: Vec<Vec<usize>>,
}

impl Pattern {
    /// Builds a pattern from start/end snap ids. Panics on lasting snaps.
    pub fn new(snaps: impl IntoIterator<Item = SnapId>) -> Self {
        let snaps: Vec<SnapId> = snaps.into_iter().collect();
        let mut entries = Vec::with_capacity(snaps.len());
        for (i, &snap) in snaps.iter().enumerate() {
            assert!(snap.role != Role::Lasting, "lasting snap actions do not occur in patterns");
            let copy = snaps[..i].iter().filter(|&&s| s == snap).count();
            entries.push(PatternEntry { snap, copy });
        }
        let k = entries.len();
        let mut ends = vec![Vec::new(); k];
        let mut starts = vec![Vec::new(); k];
        let mut previous = vec![Vec::new(); k];
        for i in 0..k {
            let a = entries[i];
            for (j, b) in entries.iter().enumerate() {
                if a.action() != b.action() {
                    continue;
                }
                match (a.role(), b.role()) {
                    (Role::Start, Role::End) if j > i => ends[i].push(j),
                    (Role::End, Role::Start) if j < i => starts[i].push(j),
                    (Role::Start, Role::Start) if j < i => previous[i].push(j),
                    _ => {}
                }
            }
        }
        Pattern {
            entries,
            ends,
            starts,
            previous,
        }
    }

    pub fn entries(&self) -> &[PatternEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn snaps(&self) -> impl Iterator<Item = SnapId> + '_ {
        self.entries.iter().map(|e| e.snap)
    }

    /// `E_i`: later ends of the action started at `i`.
    pub fn matching_ends(&self, i: usize) -> &[usize] {
        &self.ends[i]
    }

    /// `S_j`: earlier starts of the action ended at `j`.
    pub fn matching_starts(&self, j: usize) -> &[usize] {
        &self.starts[j]
    }

    /// `B_i`: earlier starts of the action started at `i`.
    pub fn previous_starts(&self, i: usize) -> &[usize] {
        &self.previous[i]
    }

    /// Every durative action has a start followed later by an end.
    pub fn is_complete(&self, problem: &TemporalNumericProblem) -> bool {
        problem.action_ids().all(|b| {
            self.entries
                .iter()
                .enumerate()
                .any(|(i, e)| e.action() == b && e.is_start() && !self.ends[i].is_empty())
        })
    }

    /// `≺^n`: `n` copies back to back, index sets computed across copies.
    pub fn concatenate(&self, n: usize) -> Pattern {
        assert!(n >= 1, "a pattern must be repeated at least once");
        let snaps: Vec<SnapId> = self.snaps().collect();
        Pattern::new((0..n).flat_map(|_| snaps.iter().copied()))
    }

    pub fn dump(&self, problem: &TemporalNumericProblem) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            index: usize,
            action: &'a str,
            role: Role,
            copy: usize,
        }
        let list: Vec<Entry> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| Entry {
                index: i + 1,
                action: &problem.action(e.action()).name,
                role: e.role(),
                copy: e.copy,
            })
            .collect();
        serde_json::to_string_pretty(&list).expect("serialising pattern")
    }
}

/// Drops ends without an earlier start, starts without a later end and
/// immediate repetitions, until nothing changes. Returns the simplified
/// pattern and the actions that no longer occur in it.
pub fn simplify(pattern: &Pattern) -> (Pattern, Vec<ActionId>) {
    let mut snaps: Vec<SnapId> = pattern.snaps().collect();
    loop {
        let mut keep = vec![true; snaps.len()];
        for (i, s) in snaps.iter().enumerate() {
            let twin = |r: Role| SnapId::new(s.action, r);
            let pointless = match s.role {
                Role::Start => !snaps[i + 1..].contains(&twin(Role::End)),
                _ => !snaps[..i].contains(&twin(Role::Start)),
            };
            let repeated = i > 0 && snaps[i - 1] == *s;
            if pointless || repeated {
                keep[i] = false;
            }
        }
        if keep.iter().all(|&k| k) {
            break;
        }
        snaps = snaps.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect();
    }
    let before: BTreeSet<ActionId> = pattern.snaps().map(|s| s.action).collect();
    let after: BTreeSet<ActionId> = snaps.iter().map(|s| s.action).collect();
    let dropped = before.difference(&after).copied().collect();
    (Pattern::new(snaps), dropped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    /// Layered relaxed reachability sweep.
    #[default]
    Arpg,
    /// All starts by action id, then all ends by action id.
    StartsEnds,
}

impl FromStr for Ordering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arpg" => Ok(Ordering::Arpg),
            "starts-ends" => Ok(Ordering::StartsEnds),
            _ => Err(format!("unknown pattern ordering `{s}` (expected arpg or starts-ends)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatternConfig {
    pub ordering: Ordering,
    /// Shuffles ties within a layer; `None` keeps action-id order.
    pub seed: Option<u64>,
}

/// A complete pattern with one start and one end per durative action.
pub fn build_base_pattern(problem: &TemporalNumericProblem, config: &PatternConfig) -> Pattern {
    let starts = |ids: &[ActionId]| ids.iter().map(|&b| SnapId::new(b, Role::Start)).collect::<Vec<_>>();
    let ends = |ids: &[ActionId]| ids.iter().map(|&b| SnapId::new(b, Role::End)).collect::<Vec<_>>();
    let all: Vec<ActionId> = problem.action_ids().collect();
    match config.ordering {
        Ordering::StartsEnds => Pattern::new(starts(&all).into_iter().chain(ends(&all))),
        Ordering::Arpg => {
            let mut rng = config.seed.map(rand_chacha::ChaCha8Rng::seed_from_u64);
            let mut layers = relaxed_layers(problem);
            if let Some(rng) = rng.as_mut() {
                for layer in &mut layers {
                    layer.shuffle(rng);
                }
            }
            let mut snaps = Vec::new();
            for (l, layer) in layers.iter().enumerate() {
                snaps.extend(starts(layer));
                if l > 0 {
                    snaps.extend(ends(&layers[l - 1]));
                }
            }
            if let Some(last) = layers.last() {
                snaps.extend(ends(last));
            }
            let reached: BTreeSet<ActionId> = layers.iter().flatten().copied().collect();
            let rest: Vec<ActionId> = all.into_iter().filter(|b| !reached.contains(b)).collect();
            snaps.extend(starts(&rest));
            snaps.extend(ends(&rest));
            Pattern::new(snaps)
        }
    }
}

/// Interval with `None` standing for an infinite bound.
#[derive(Debug, Clone, PartialEq)]
struct Interval {
    lo: Option<Rational>,
    hi: Option<Rational>,
}

impl Interval {
    fn point(v: Rational) -> Self {
        Interval {
            lo: Some(v.clone()),
            hi: Some(v),
        }
    }

    fn add(&self, o: &Interval) -> Interval {
        let sum = |a: &Option<Rational>, b: &Option<Rational>| match (a, b) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Interval {
            lo: sum(&self.lo, &o.lo),
            hi: sum(&self.hi, &o.hi),
        }
    }

    fn scale(&self, k: &Rational) -> Interval {
        let mul = |b: &Option<Rational>| b.as_ref().map(|b| b * k);
        if k.is_negative() {
            Interval {
                lo: mul(&self.hi),
                hi: mul(&self.lo),
            }
        } else if k.is_zero() {
            Interval::point(Rational::zero())
        } else {
            Interval {
                lo: mul(&self.lo),
                hi: mul(&self.hi),
            }
        }
    }

    fn hull(&self, o: &Interval) -> Interval {
        let lo = match (&self.lo, &o.lo) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            _ => None,
        };
        let hi = match (&self.hi, &o.hi) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            _ => None,
        };
        Interval { lo, hi }
    }

    /// Some value `x` in the interval has `x ⊵ 0`.
    fn may_satisfy(&self, cmp: Comparison) -> bool {
        let zero = Rational::zero();
        let hi_ok = |strict: bool| self.hi.as_ref().is_none_or(|h| if strict { *h > zero } else { *h >= zero });
        let lo_ok = |strict: bool| self.lo.as_ref().is_none_or(|l| if strict { *l < zero } else { *l <= zero });
        match cmp {
            Comparison::Gt => hi_ok(true),
            Comparison::Ge => hi_ok(false),
            Comparison::Eq => hi_ok(false) && lo_ok(false),
            Comparison::Le => lo_ok(false),
            Comparison::Lt => lo_ok(true),
        }
    }
}

/// Relaxed state: possible Boolean values and numeric intervals.
#[derive(Debug, Clone, PartialEq)]
struct Relaxed {
    bools: Vec<[bool; 2]>,
    nums: Vec<Interval>,
}

impl Relaxed {
    fn new(problem: &TemporalNumericProblem) -> Self {
        Relaxed {
            bools: problem.init.bools.iter().map(|&b| [!b, b]).collect(),
            nums: problem.init.nums.iter().cloned().map(Interval::point).collect(),
        }
    }

    fn eval(&self, e: &LinearExpr) -> Interval {
        e.terms().fold(Interval::point(e.constant_part().clone()), |acc, (v, c)| {
            acc.add(&self.nums[v.0].scale(c))
        })
    }

    fn holds(&self, c: &Condition) -> bool {
        match c {
            Condition::Bool { var, value } => self.bools[var.0][*value as usize],
            Condition::Numeric { expr, cmp } => self.eval(expr).may_satisfy(*cmp),
        }
    }

    /// Relaxed effects, with increments widened to infinity in their direction.
    fn apply(&self, a: &SnapAction, into: &mut Relaxed) {
        for e in &a.eff {
            match e {
                Effect::Bool { var, value } => into.bools[var.0][*value as usize] = true,
                Effect::Numeric(ne) => {
                    let slot = &mut into.nums[ne.var.0];
                    if let Some(inc) = ne.increment() {
                        let d = self.eval(&inc);
                        if d.hi.as_ref().is_none_or(|h| h.is_positive()) {
                            slot.hi = None;
                        }
                        if d.lo.as_ref().is_none_or(|l| l.is_negative()) {
                            slot.lo = None;
                        }
                    } else {
                        *slot = slot.hull(&self.eval(&ne.expr));
                    }
                }
            }
        }
    }
}

fn relaxed_applicable(r: &Relaxed, b: &DurativeAction) -> bool {
    if !b.start.pre.iter().all(|c| r.holds(c)) {
        return false;
    }
    let mut after = r.clone();
    r.apply(&b.start, &mut after);
    b.lasting.pre.iter().chain(&b.end.pre).all(|c| after.holds(c))
}

/// Actions grouped by the first relaxed layer in which they apply.
fn relaxed_layers(problem: &TemporalNumericProblem) -> Vec<Vec<ActionId>> {
    let mut state = Relaxed::new(problem);
    let mut done = vec![false; problem.actions.len()];
    let mut layers = Vec::new();
    loop {
        let layer: Vec<ActionId> = problem
            .action_ids()
            .filter(|b| !done[b.0] && relaxed_applicable(&state, problem.action(*b)))
            .collect();
        if layer.is_empty() {
            return layers;
        }
        let mut next = state.clone();
        for &b in &layer {
            done[b.0] = true;
            let a = problem.action(b);
            state.apply(&a.start, &mut next);
            state.apply(&a.end, &mut next);
        }
        state = next;
        layers.push(layer);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn names(pb: &TemporalNumericProblem, p: &Pattern) -> Vec<String> {
        p.entries()
            .iter()
            .map(|e| {
                let mark = if e.is_start() { "+" } else { "-" };
                format!("{mark}{}", pb.action(e.action()).name)
            })
            .collect()
    }

    fn eq1_order() -> Vec<String> {
        let nc = |k: usize| format!("uncap b{k}");
        let pr = |i: usize, j: usize| format!("pour b{i} b{j}");
        let mut v = Vec::new();
        for mark in ["+", "-"] {
            v.extend((1..=4).map(|k| format!("{mark}{}", nc(k))));
            for i in 1..=2 {
                v.extend((3..=4).map(|j| format!("{mark}{}", pr(i, j))));
            }
        }
        v
    }

    #[test]
    fn starts_ends_reproduces_display_order() {
        let pb = fixtures::pour(2, 4, &[3, 3]).problem();
        let cfg = PatternConfig {
            ordering: Ordering::StartsEnds,
            seed: None,
        };
        let p = build_base_pattern(&pb, &cfg);
        assert_eq!(p.len(), 16);
        assert_eq!(names(&pb, &p), eq1_order());
    }

    #[test]
    fn arpg_layers_give_the_same_order_on_pour() {
        let pb = fixtures::pour(2, 4, &[3, 3]).problem();
        let p = build_base_pattern(&pb, &PatternConfig::default());
        assert_eq!(names(&pb, &p), eq1_order());
        assert!(p.is_complete(&pb));
    }

    #[test]
    fn index_sets_span_copies() {
        let pb = fixtures::pour(2, 4, &[3, 3]).problem();
        let p = build_base_pattern(&pb, &PatternConfig::default()).concatenate(2);
        assert_eq!(p.len(), 32);
        // pr⊣_{1,3} of the second copy sits at 16 + 12.
        let j = 28;
        assert_eq!(pb.action(p.entries()[j].action()).name, "pour b1 b3");
        assert_eq!(p.matching_starts(j), &[4, 20]);
        assert_eq!(p.matching_ends(4), &[12, 28]);
        assert_eq!(p.matching_ends(20), &[28]);
        assert_eq!(p.previous_starts(20), &[4]);
        assert_eq!(p.entries()[20].copy, 1);
    }

    #[test]
    fn simplify_rules() {
        let b = ActionId(0);
        let s = SnapId::new(b, Role::Start);
        let e = SnapId::new(b, Role::End);
        let (p, dropped) = simplify(&Pattern::new([e, s]));
        assert!(p.is_empty());
        assert_eq!(dropped, [b]);
        let (p, dropped) = simplify(&Pattern::new([s, s, e]));
        assert_eq!(p.snaps().collect::<Vec<_>>(), [s, e]);
        assert!(dropped.is_empty());
        let (again, _) = simplify(&p);
        assert_eq!(again, p);
    }

    #[test]
    fn seeded_shuffle_is_deterministic_and_complete() {
        let pb = fixtures::bottles_instance(2, 4, &[2, 1], &fixtures::Durations::default()).problem();
        let cfg = PatternConfig {
            ordering: Ordering::Arpg,
            seed: Some(11),
        };
        let a = build_base_pattern(&pb, &cfg);
        assert_eq!(a, build_base_pattern(&pb, &cfg));
        assert!(a.is_complete(&pb));
        assert_eq!(a.len(), 2 * pb.actions.len());
    }

    #[test]
    fn match_cellar_lights_before_mends() {
        let pb = fixtures::match_cellar(2).problem();
        let p = build_base_pattern(&pb, &PatternConfig::default());
        let n = names(&pb, &p);
        assert!(n[0].starts_with("+light-match"));
        assert!(n[2].starts_with("+mend-fuse"));
    }
}
