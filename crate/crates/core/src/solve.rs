//! Bound iteration: encode `≺^n`, check, extract and validate.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::analysis::{epsilon_b, Analysis};
use crate::encoding::{assemble, Encoding};
use crate::formula::{EvalError, Value};
use crate::model::TemporalNumericProblem;
use crate::pattern::{build_base_pattern, Pattern, PatternConfig};
use crate::plan::{TimedAction, TimedPlan};
use crate::rational::{self, Rational};
use crate::smt::{emit_script, Model, SolverCommand, SolverError, SolverResult};
use crate::validate::{validate, ValidationReport, Violation};

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub pattern: PatternConfig,
    pub epsilon: Rational,
    pub max_bound: usize,
    pub timeout: Option<Duration>,
    /// Bounds checked concurrently; 1 is the plain sequential loop.
    pub parallel_bounds: usize,
    pub solver: SolverCommand,
    /// Directory receiving one `bound-<n>.smt2` per solver call.
    pub dump_smt: Option<PathBuf>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            pattern: PatternConfig::default(),
            epsilon: rational::ratio(1, 1000),
            max_bound: 10,
            timeout: None,
            parallel_bounds: 1,
            solver: SolverCommand::default(),
            dump_smt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Solved,
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: Status,
    pub plan: Option<TimedPlan>,
    /// Bound of the satisfiable call, or the last bound tried.
    pub bound: usize,
    pub solver_calls: usize,
    pub wall_time: Duration,
    pub variables: usize,
    pub assertions: usize,
    /// Bounds whose call ended in `unknown` or a timeout.
    pub skipped: Vec<usize>,
    pub validation: Option<ValidationReport>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("bound {bound}: the solver model violates `{assertion}`")]
    ModelCheck { bound: usize, assertion: String },
    #[error("bound {bound}: cannot read the model: {message}")]
    Extraction { bound: usize, message: String },
    #[error("bound {bound}: extracted plan fails validation: {violations:?}")]
    Unsound { bound: usize, violations: Vec<Violation> },
    #[error("cannot write SMT dump: {0}")]
    Dump(#[from] std::io::Error),
}

/// Result of one solver call at one bound.
#[derive(Debug)]
pub struct BoundResult {
    pub bound: usize,
    pub result: SolverResult,
    pub variables: usize,
    pub assertions: usize,
    pub plan: Option<TimedPlan>,
}

fn model_value(model: &Model, name: &str, bound: usize) -> Result<Rational, SolveError> {
    match model.get(name) {
        Some(Value::Num(n)) => Ok(n.clone()),
        _ => Err(SolveError::Extraction {
            bound,
            message: format!("no numeric value for `{name}`"),
        }),
    }
}

/// Reads every durative action instance off a model of `enc`.
pub fn extract_plan(enc: &Encoding, model: &Model, bound: usize) -> Result<TimedPlan, SolveError> {
    let ctx = &enc.ctx;
    let store = &ctx.store;
    let name = |t| store.var_decl(t).expect("encoding variable").name.clone();
    let mut actions = Vec::new();
    for (i, e) in ctx.pattern.entries().iter().enumerate() {
        if !e.is_start() {
            continue;
        }
        let a = model_value(model, &name(ctx.a[i]), bound)?;
        if !a.is_integer() || a.is_negative() {
            return Err(SolveError::Extraction {
                bound,
                message: format!("count a{} = {} is not a natural number", i + 1, rational::format(&a)),
            });
        }
        if a.is_zero() {
            continue;
        }
        let b = ctx.problem.action(e.action());
        let eb = epsilon_b(b, &ctx.epsilon);
        let t = model_value(model, &name(ctx.t[i]), bound)?;
        let total = model_value(model, &name(ctx.d[i].expect("start entries have durations")), bound)?;
        let d = (&total + &eb) / &a - &eb;
        if d < b.lower || d > b.upper {
            return Err(SolveError::Extraction {
                bound,
                message: format!("duration {} of `{}` is outside its bounds", rational::format(&d), b.name),
            });
        }
        let step = &d + &eb;
        let copies: usize = a.to_integer().try_into().map_err(|_| SolveError::Extraction {
            bound,
            message: "count too large".into(),
        })?;
        for p in 0..copies {
            actions.push(TimedAction {
                start: &t + &step * rational::int(p as i64),
                action: e.action(),
                duration: d.clone(),
            });
        }
    }
    Ok(TimedPlan::new(actions))
}

/// Re-evaluates every assertion under the model with exact arithmetic.
pub fn check_model(enc: &Encoding, model: &Model, bound: usize) -> Result<(), SolveError> {
    let lookup = |n: &str| model.get(n).cloned();
    let mut memo = HashMap::new();
    for (g, t) in &enc.assertions {
        let holds = match enc.ctx.store.eval_memo(*t, &lookup, &mut memo) {
            Ok(Value::Bool(b)) => b,
            Ok(Value::Num(_)) | Err(EvalError::WrongSort { .. }) => false,
            Err(EvalError::Unassigned(v)) => {
                return Err(SolveError::Extraction {
                    bound,
                    message: format!("model has no value for `{v}`"),
                })
            }
        };
        if !holds {
            return Err(SolveError::ModelCheck {
                bound,
                assertion: format!("[{g}] {}", enc.ctx.store.display(*t)),
            });
        }
    }
    Ok(())
}

/// The SMT-LIB script for bound `n`, as sent to the solver.
pub fn script_for(problem: &TemporalNumericProblem, analysis: &Analysis, base: &Pattern, n: usize, epsilon: &Rational) -> String {
    let enc = assemble(problem, analysis, base.concatenate(n), epsilon);
    emit_script(&enc.ctx.store, &enc.roots(), true)
}

/// Encodes and checks a single bound.
pub fn check_bound(
    problem: &TemporalNumericProblem,
    analysis: &Analysis,
    base: &Pattern,
    n: usize,
    config: &SolveConfig,
) -> Result<BoundResult, SolveError> {
    let enc = assemble(problem, analysis, base.concatenate(n), &config.epsilon);
    let stats = enc.stats();
    let script = emit_script(&enc.ctx.store, &enc.roots(), true);
    if let Some(dir) = &config.dump_smt {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("bound-{n}.smt2")), &script)?;
    }
    let result = config.solver.run(&script, config.timeout)?;
    let plan = match &result {
        SolverResult::Sat(model) => {
            check_model(&enc, model, n)?;
            let plan = extract_plan(&enc, model, n)?;
            let report = validate(&plan, problem, &config.epsilon);
            if !report.valid {
                return Err(SolveError::Unsound {
                    bound: n,
                    violations: report.violations,
                });
            }
            Some(plan)
        }
        _ => None,
    };
    Ok(BoundResult {
        bound: n,
        result,
        variables: stats.variables,
        assertions: stats.assertions,
        plan,
    })
}

pub fn solve(problem: &TemporalNumericProblem, config: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    let started = Instant::now();
    let analysis = Analysis::new(problem);
    let base = build_base_pattern(problem, &config.pattern);
    solve_with(problem, &analysis, &base, config, started)
}

pub fn solve_with(
    problem: &TemporalNumericProblem,
    analysis: &Analysis,
    base: &Pattern,
    config: &SolveConfig,
    started: Instant,
) -> Result<SolveOutcome, SolveError> {
    let mut outcome = SolveOutcome {
        status: Status::Exhausted,
        plan: None,
        bound: 0,
        solver_calls: 0,
        wall_time: Duration::ZERO,
        variables: 0,
        assertions: 0,
        skipped: Vec::new(),
        validation: None,
    };
    // Bound 0: the empty plan.
    if problem.init.satisfies(&problem.goals) {
        let plan = TimedPlan::default();
        outcome.validation = Some(validate(&plan, problem, &config.epsilon));
        outcome.status = Status::Solved;
        outcome.plan = Some(plan);
        outcome.wall_time = started.elapsed();
        return Ok(outcome);
    }
    let width = config.parallel_bounds.max(1);
    let mut n = 1;
    while n <= config.max_bound {
        let bounds: Vec<usize> = (n..=(n + width - 1).min(config.max_bound)).collect();
        let results: Vec<Result<BoundResult, SolveError>> = if bounds.len() == 1 {
            vec![check_bound(problem, analysis, base, n, config)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = bounds
                    .iter()
                    .map(|&m| s.spawn(move || check_bound(problem, analysis, base, m, config)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("bound worker panicked")).collect()
            })
        };
        // Least satisfiable bound wins; errors at smaller bounds take precedence.
        for r in results {
            let r = r?;
            outcome.solver_calls += 1;
            outcome.bound = r.bound;
            outcome.variables = r.variables;
            outcome.assertions = r.assertions;
            match r.result {
                SolverResult::Sat(_) if outcome.plan.is_none() => {
                    let plan = r.plan.expect("satisfiable bounds carry a plan");
                    outcome.validation = Some(validate(&plan, problem, &config.epsilon));
                    outcome.plan = Some(plan);
                    outcome.status = Status::Solved;
                }
                SolverResult::Unknown(_) | SolverResult::Timeout => outcome.skipped.push(r.bound),
                _ => {}
            }
            if outcome.plan.is_some() {
                break;
            }
        }
        if outcome.plan.is_some() {
            break;
        }
        n += bounds.len();
    }
    outcome.wall_time = started.elapsed();
    Ok(outcome)
}
