//! Independent plan validator.
//!
//! States are evolved by direct execution of the ground snap actions; none
//! of the formula machinery is involved. Only the problem model and the
//! mutex predicate are shared with the planner.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::mutex;
use crate::model::{Condition, Effect, Role, SnapAction, SnapId, State, TemporalNumericProblem};
use crate::plan::TimedPlan;
use crate::rational::{self, Rational};

/// A snap action occurring in the timeline, tagged with the plan action it
/// belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occurrence {
    pub snap: SnapId,
    pub plan_index: usize,
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: Rational,
    pub snaps: Vec<Occurrence>,
}

/// Events ordered by time, snap actions at equal times grouped together.
pub fn build_timeline(plan: &TimedPlan) -> Vec<Event> {
    let mut at: BTreeMap<Rational, Vec<Occurrence>> = BTreeMap::new();
    for (k, a) in plan.actions.iter().enumerate() {
        at.entry(a.start.clone()).or_default().push(Occurrence {
            snap: SnapId::new(a.action, Role::Start),
            plan_index: k,
        });
        at.entry(a.end()).or_default().push(Occurrence {
            snap: SnapId::new(a.action, Role::End),
            plan_index: k,
        });
    }
    at.into_iter().map(|(time, snaps)| Event { time, snaps }).collect()
}

/// `res(A, s)`; `None` when two members of `actions` are mutex.
pub fn res(actions: &[&SnapAction], state: &State) -> Option<State> {
    for (i, a) in actions.iter().enumerate() {
        for b in &actions[i + 1..] {
            if mutex(a, b) {
                return None;
            }
        }
    }
    let mut next = state.clone();
    for a in actions {
        for e in &a.eff {
            match e {
                Effect::Bool { var, value } => next.bools[var.0] = *value,
                // Non-mutex snaps touching the same variable both increment it.
                Effect::Numeric(ne) => match ne.increment() {
                    Some(inc) => next.nums[ne.var.0] = &next.nums[ne.var.0] + state.eval(&inc),
                    None => next.nums[ne.var.0] = state.eval(&ne.expr),
                },
            }
        }
    }
    Some(next)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Duration { action: String, start: String, duration: String },
    TooEarly { action: String, start: String },
    Precondition { action: String, time: String, role: Role, condition: String },
    Simultaneous { time: String, first: String, second: String },
    Separation { first: String, first_time: String, second: String, second_time: String },
    SelfOverlap { action: String, first: String, second: String },
    Lasting { action: String, start: String, time: String, condition: String },
    Goal { condition: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub events: usize,
    pub makespan: String,
    pub violations: Vec<Violation>,
}

fn describe_condition(problem: &TemporalNumericProblem, c: &Condition) -> String {
    match c {
        Condition::Bool { var, value } => {
            let name = &problem.bool_vars[var.0];
            if *value {
                name.clone()
            } else {
                format!("(not {name})")
            }
        }
        Condition::Numeric { expr, cmp } => format!("{} {} 0", expr.display(problem), cmp.symbol()),
    }
}

fn snap_label(problem: &TemporalNumericProblem, s: SnapId) -> String {
    let name = &problem.action(s.action).name;
    match s.role {
        Role::Start => format!("start({name})"),
        Role::Lasting => format!("lasting({name})"),
        Role::End => format!("end({name})"),
    }
}

pub fn validate(plan: &TimedPlan, problem: &TemporalNumericProblem, epsilon: &Rational) -> ValidationReport {
    let fmt = rational::format_decimal;
    let mut violations = Vec::new();
    let zero = rational::int(0);

    for a in &plan.actions {
        let b = problem.action(a.action);
        if a.duration < b.lower || a.duration > b.upper || a.duration <= zero {
            violations.push(Violation::Duration {
                action: b.name.clone(),
                start: fmt(&a.start),
                duration: fmt(&a.duration),
            });
        }
        if a.start < *epsilon {
            violations.push(Violation::TooEarly {
                action: b.name.clone(),
                start: fmt(&a.start),
            });
        }
    }

    // No two executions of one durative action may overlap.
    for (i, x) in plan.actions.iter().enumerate() {
        for y in &plan.actions[i + 1..] {
            if x.action != y.action {
                continue;
            }
            let (first, second) = if x.start <= y.start { (x, y) } else { (y, x) };
            if second.start < first.end() {
                violations.push(Violation::SelfOverlap {
                    action: problem.action(x.action).name.clone(),
                    first: fmt(&first.start),
                    second: fmt(&second.start),
                });
            }
        }
    }

    let timeline = build_timeline(plan);

    // ε-separation of mutex snap actions in distinct events.
    for (i, e) in timeline.iter().enumerate() {
        for f in &timeline[i + 1..] {
            if &f.time - &e.time >= *epsilon {
                break;
            }
            for x in &e.snaps {
                for y in &f.snaps {
                    if mutex(problem.snap(x.snap), problem.snap(y.snap)) {
                        violations.push(Violation::Separation {
                            first: snap_label(problem, x.snap),
                            first_time: fmt(&e.time),
                            second: snap_label(problem, y.snap),
                            second_time: fmt(&f.time),
                        });
                    }
                }
            }
        }
    }

    // Execute the timeline; `states[i]` is the state after event `i`.
    let mut state = problem.init.clone();
    let mut states = Vec::with_capacity(timeline.len());
    for e in &timeline {
        for x in &e.snaps {
            for c in &problem.snap(x.snap).pre {
                if !c.holds(&state) {
                    violations.push(Violation::Precondition {
                        action: problem.action(x.snap.action).name.clone(),
                        time: fmt(&e.time),
                        role: x.snap.role,
                        condition: describe_condition(problem, c),
                    });
                }
            }
        }
        for (k, x) in e.snaps.iter().enumerate() {
            for y in &e.snaps[k + 1..] {
                if mutex(problem.snap(x.snap), problem.snap(y.snap)) {
                    violations.push(Violation::Simultaneous {
                        time: fmt(&e.time),
                        first: snap_label(problem, x.snap),
                        second: snap_label(problem, y.snap),
                    });
                }
            }
        }
        // Mutex pairs were reported above; fall back to applying in order so
        // the remaining checks still see a state.
        let snaps: Vec<&SnapAction> = e.snaps.iter().map(|x| problem.snap(x.snap)).collect();
        state = res(&snaps, &state).unwrap_or_else(|| snaps.iter().fold(state.clone(), |s, a| a.apply(&s)));
        states.push(state.clone());
    }

    // Lasting conditions over s_i..s_{j-1}, starting after the start event.
    let index_of: BTreeMap<&Rational, usize> = timeline.iter().enumerate().map(|(i, e)| (&e.time, i)).collect();
    for a in &plan.actions {
        let b = problem.action(a.action);
        if b.lasting.pre.is_empty() {
            continue;
        }
        let (i, j) = (index_of[&a.start], index_of[&a.end()]);
        for (k, s) in states.iter().enumerate().take(j).skip(i) {
            for c in &b.lasting.pre {
                if !c.holds(s) {
                    violations.push(Violation::Lasting {
                        action: b.name.clone(),
                        start: fmt(&a.start),
                        time: fmt(&timeline[k].time),
                        condition: describe_condition(problem, c),
                    });
                }
            }
        }
    }

    for g in &problem.goals {
        if !g.holds(&state) {
            violations.push(Violation::Goal {
                condition: describe_condition(problem, g),
            });
        }
    }

    ValidationReport {
        valid: violations.is_empty(),
        events: timeline.len(),
        makespan: fmt(&plan.makespan()),
        violations,
    }
}
