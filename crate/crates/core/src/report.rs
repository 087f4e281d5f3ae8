//! JSON run summaries.

use serde::Serialize;

use crate::model::TemporalNumericProblem;
use crate::rational;
use crate::solve::{SolveOutcome, Status};

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub status: Status,
    pub bound: usize,
    pub wall_time_s: f64,
    pub variables: usize,
    pub assertions: usize,
    pub solver_calls: usize,
    pub skipped_bounds: Vec<usize>,
    pub plan_actions: Option<usize>,
    pub makespan: Option<String>,
    pub valid: Option<bool>,
}

impl RunReport {
    pub fn new(instance: &str, outcome: &SolveOutcome) -> Self {
        RunReport {
            instance: instance.to_string(),
            status: outcome.status,
            bound: outcome.bound,
            wall_time_s: outcome.wall_time.as_secs_f64(),
            variables: outcome.variables,
            assertions: outcome.assertions,
            solver_calls: outcome.solver_calls,
            skipped_bounds: outcome.skipped.clone(),
            plan_actions: outcome.plan.as_ref().map(|p| p.len()),
            makespan: outcome.plan.as_ref().map(|p| rational::format_decimal(&p.makespan())),
            valid: outcome.validation.as_ref().map(|v| v.valid),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Problem size figures for `dump-problem` style listings.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemSummary {
    pub bool_vars: usize,
    pub num_vars: usize,
    pub actions: usize,
    pub goals: usize,
}

impl ProblemSummary {
    pub fn new(problem: &TemporalNumericProblem) -> Self {
        ProblemSummary {
            bool_vars: problem.bool_vars.len(),
            num_vars: problem.num_vars.len(),
            actions: problem.actions.len(),
            goals: problem.goals.len(),
        }
    }
}

/// Coverage, mean time and mean bound over a batch.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Aggregate {
    pub instances: usize,
    pub solved: usize,
    pub coverage: f64,
    pub mean_time_s: f64,
    pub mean_bound: f64,
}

pub fn aggregate(reports: &[RunReport]) -> Aggregate {
    let solved: Vec<&RunReport> = reports.iter().filter(|r| r.status == Status::Solved).collect();
    let mean = |xs: Vec<f64>| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    Aggregate {
        instances: reports.len(),
        solved: solved.len(),
        coverage: if reports.is_empty() { 0.0 } else { solved.len() as f64 / reports.len() as f64 },
        mean_time_s: mean(solved.iter().map(|r| r.wall_time_s).collect()),
        mean_bound: mean(solved.iter().map(|r| r.bound as f64).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn outcome(status: Status, bound: usize) -> SolveOutcome {
        SolveOutcome {
            status,
            plan: None,
            bound,
            solver_calls: bound,
            wall_time: Duration::from_millis(500),
            variables: 10,
            assertions: 20,
            skipped: vec![],
            validation: None,
        }
    }

    #[test]
    fn fields_serialize() {
        let r = RunReport::new("x", &outcome(Status::Exhausted, 3));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["status"], "exhausted");
        assert_eq!(v["bound"], 3);
        assert_eq!(v["solver_calls"], 3);
    }

    #[test]
    fn aggregate_counts_solved_only() {
        let rs = [
            RunReport::new("a", &outcome(Status::Solved, 1)),
            RunReport::new("b", &outcome(Status::Solved, 3)),
            RunReport::new("c", &outcome(Status::Exhausted, 5)),
        ];
        let a = aggregate(&rs);
        assert_eq!(a.solved, 2);
        assert_eq!(a.mean_bound, 2.0);
        assert!((a.coverage - 2.0 / 3.0).abs() < 1e-12);
    }
}
