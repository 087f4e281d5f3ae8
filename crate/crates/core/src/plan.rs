//! Timed plans and their text format.
//!
//! One action per line: `<time>: (<action> <args>) [<duration>]`. Times and
//! durations are decimals or fractions `p/q`. Blank lines and lines starting
//! with `;` are ignored.

use std::fmt;

use serde::Serialize;

use crate::model::{ActionId, TemporalNumericProblem};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TimedAction {
    pub start: Rational,
    pub action: ActionId,
    pub duration: Rational,
}

impl TimedAction {
    pub fn end(&self) -> Rational {
        &self.start + &self.duration
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimedPlan {
    pub actions: Vec<TimedAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("line {line}: {message}")]
pub struct PlanParseError {
    pub line: usize,
    pub message: String,
}

impl TimedPlan {
    pub fn new(mut actions: Vec<TimedAction>) -> Self {
        actions.sort();
        TimedPlan { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn makespan(&self) -> Rational {
        self.actions
            .iter()
            .map(TimedAction::end)
            .max()
            .unwrap_or_else(|| rational::int(0))
    }

    pub fn display<'a>(&'a self, problem: &'a TemporalNumericProblem) -> impl fmt::Display + 'a {
        PlanDisplay { plan: self, problem }
    }

    pub fn parse(text: &str, problem: &TemporalNumericProblem) -> Result<Self, PlanParseError> {
        let mut actions = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            let err = |message: String| PlanParseError { line: n + 1, message };
            let (time, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `<time>: (<action>) [<duration>]`".into()))?;
            let start = rational::parse(time).map_err(|e| err(e.to_string()))?;
            let rest = rest.trim();
            let open = rest.find('(').ok_or_else(|| err("missing `(`".into()))?;
            let close = rest.find(')').ok_or_else(|| err("missing `)`".into()))?;
            if open > close {
                return Err(err("misplaced parentheses".into()));
            }
            let name = rest[open + 1..close]
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .to_lowercase();
            let action = problem
                .find_action(&name)
                .ok_or_else(|| err(format!("unknown action `{name}`")))?;
            let tail = rest[close + 1..].trim();
            let duration = match tail.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                Some(d) => rational::parse(d).map_err(|e| err(e.to_string()))?,
                None if tail.is_empty() && problem.action(action).instantaneous => problem.action(action).lower.clone(),
                None => return Err(err("missing `[<duration>]`".into())),
            };
            actions.push(TimedAction {
                start,
                action,
                duration,
            });
        }
        Ok(TimedPlan::new(actions))
    }
}

struct PlanDisplay<'a> {
    plan: &'a TimedPlan,
    problem: &'a TemporalNumericProblem,
}

impl fmt::Display for PlanDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.plan.actions {
            writeln!(
                f,
                "{}: ({}) [{}]",
                rational::format_decimal(&a.start),
                self.problem.action(a.action).name,
                rational::format_decimal(&a.duration)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::ratio;

    #[test]
    fn text_round_trip() {
        let pb = fixtures::pour(1, 2, &[3]).problem();
        let nc = pb.find_action("uncap b1").unwrap();
        let pr = pb.find_action("pour b1 b2").unwrap();
        let plan = TimedPlan::new(vec![
            TimedAction {
                start: ratio(1, 1000),
                action: nc,
                duration: ratio(5, 1),
            },
            TimedAction {
                start: ratio(1, 3),
                action: pr,
                duration: ratio(1, 1),
            },
        ]);
        let text = plan.display(&pb).to_string();
        assert_eq!(text, "0.001: (uncap b1) [5]\n1/3: (pour b1 b2) [1]\n");
        assert_eq!(TimedPlan::parse(&text, &pb).unwrap(), plan);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let pb = fixtures::pour(1, 2, &[3]).problem();
        let e = TimedPlan::parse("; comment\n0.1: (fly b1) [1]", &pb).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(TimedPlan::parse("0.1 (uncap b1) [1]", &pb).is_err());
        assert!(TimedPlan::parse("0.1: (uncap b1)", &pb).is_err());
    }
}
