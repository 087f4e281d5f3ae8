//! PDDL2.1 front end: reading, parsing and grounding.

mod ground;
mod lifted;
mod sexpr;

pub use ground::{ground, instant_duration, instantiation_count, GroundConfig};
pub use lifted::{
    ground_key, parse_domain, parse_problem, AssignKind, Atom, Cond, Domain, Eff, Expr, Instance, LiftedAction, Term,
};
pub use sexpr::{Pos, Sexpr, SyntaxError};

use crate::model::{ModelError, TemporalNumericProblem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PddlError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: {message}")]
    Malformed { pos: Pos, message: String },
    #[error("{pos}: unsupported feature: {feature}")]
    Unsupported { pos: Pos, feature: String },
    #[error("{pos}: undeclared {kind} `{name}`")]
    Undeclared { pos: Pos, kind: &'static str, name: String },
    #[error("{pos}: nonlinear arithmetic is not supported")]
    Nonlinear { pos: Pos },
    #[error("numeric fluent `{fluent}` has no initial value")]
    MissingInitialValue { fluent: String, pos: Pos },
    #[error("grounding would produce {count} actions, above the cap of {cap}")]
    GroundingCap { count: usize, cap: usize },
    #[error("invalid grounded problem: {0}")]
    Model(#[from] ModelError),
}

/// Parses and grounds a domain/problem pair.
pub fn load(domain_text: &str, problem_text: &str) -> Result<TemporalNumericProblem, PddlError> {
    load_with(domain_text, problem_text, &GroundConfig::default())
}

pub fn load_with(
    domain_text: &str,
    problem_text: &str,
    config: &GroundConfig,
) -> Result<TemporalNumericProblem, PddlError> {
    let domain = parse_domain(domain_text)?;
    let instance = parse_problem(problem_text, &domain)?;
    ground(&domain, &instance, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoolVar, Comparison, Condition, Effect, LinearExpr, NumericEffect, Role, SnapAction};
    use crate::rational::int;

    const BOTTLES: &str = r#"
    (define (domain bottles)
      (:requirements :typing :durative-actions :fluents :negative-preconditions)
      (:types src dst - bottle)
      (:predicates (capped ?b - bottle))
      (:functions (litres ?b - bottle) (uncap-time) (pour-time))
      (:durative-action uncap
        :parameters (?b - bottle)
        :duration (= ?duration (uncap-time))
        :condition (and (at start (capped ?b)) (at end (not (capped ?b))))
        :effect (and (at start (not (capped ?b))) (at end (capped ?b))))
      (:durative-action pour
        :parameters (?i - src ?j - dst)
        :duration (= ?duration (pour-time))
        :condition (and (at start (not (capped ?i))) (at start (> (litres ?i) 0)) (at start (not (capped ?j)))
                        (over all (not (capped ?i))) (over all (not (capped ?j))))
        :effect (and (at start (decrease (litres ?i) 1)) (at end (increase (litres ?j) 1)))))
    "#;

    fn problem(p: usize, q: usize, litres: i64) -> String {
        let srcs: Vec<String> = (1..=p).map(|i| format!("b{i}")).collect();
        let dsts: Vec<String> = (p + 1..=q).map(|i| format!("b{i}")).collect();
        let mut init: Vec<String> = (1..=q).map(|i| format!("(capped b{i})")).collect();
        for i in 1..=q {
            init.push(format!("(= (litres b{i}) {})", if i <= p { litres } else { 0 }));
        }
        init.push("(= (uncap-time) 5) (= (pour-time) 1)".into());
        let goal: Vec<String> = srcs.iter().map(|s| format!("(= (litres {s}) 0)")).collect();
        format!(
            "(define (problem t) (:domain bottles) (:objects {} - src {} - dst) (:init {}) (:goal (and {})))",
            srcs.join(" "),
            dsts.join(" "),
            init.join(" "),
            goal.join(" ")
        )
    }

    #[test]
    fn grounds_running_example_action_table() {
        let pb = load(BOTTLES, &problem(1, 2, 3)).unwrap();
        let names: Vec<&str> = pb.actions.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["uncap b1", "uncap b2", "pour b1 b2"]);
        assert_eq!(pb.bool_vars, ["(capped b1)", "(capped b2)"]);
        assert_eq!(pb.num_vars, ["(litres b1)", "(litres b2)"]);
        assert_eq!(pb.init.bools, [true, true]);
        assert_eq!(pb.init.nums, [int(3), int(0)]);

        let c1 = BoolVar(0);
        let nc1 = &pb.actions[0];
        assert_eq!(nc1.start, SnapAction::new(vec![Condition::Bool { var: c1, value: true }], vec![Effect::Bool { var: c1, value: false }]));
        assert_eq!(nc1.end, SnapAction::new(vec![Condition::Bool { var: c1, value: false }], vec![Effect::Bool { var: c1, value: true }]));
        assert_eq!((nc1.lower.clone(), nc1.upper.clone()), (int(5), int(5)));

        let pr = &pb.actions[2];
        let l1 = pb.find_num("(litres b1)").unwrap();
        let l2 = pb.find_num("(litres b2)").unwrap();
        match &pr.start.eff[..] {
            [Effect::Numeric(e)] => {
                assert_eq!(e.var, l1);
                assert!(e.is_linear_increment());
                assert_eq!(e.increment().unwrap(), LinearExpr::constant(int(-1)));
            }
            other => panic!("{other:?}"),
        }
        assert!(pr.end.pre.is_empty());
        assert_eq!(pr.end.eff, vec![Effect::Numeric(NumericEffect::new(l2, LinearExpr::var(l2).plus(&LinearExpr::constant(int(1)))))]);
        assert_eq!(pr.lasting.pre.len(), 2);
        assert!(pr.start.pre.contains(&Condition::Numeric { expr: LinearExpr::var(l1), cmp: Comparison::Gt }));
        assert_eq!(pb.goals, vec![Condition::Numeric { expr: LinearExpr::var(l1), cmp: Comparison::Eq }]);
    }

    #[test]
    fn action_count_matches_type_enumeration() {
        let pb = load(BOTTLES, &problem(2, 4, 3)).unwrap();
        let pours = pb.actions.iter().filter(|a| a.name.starts_with("pour")).count();
        let uncaps = pb.actions.iter().filter(|a| a.name.starts_with("uncap")).count();
        assert_eq!((pours, uncaps), (2 * 2, 4));
    }

    #[test]
    fn no_objects_of_a_parameter_type_gives_no_instances() {
        let text = "(define (problem t) (:domain bottles) (:objects b1 - src)
                    (:init (= (litres b1) 1) (= (uncap-time) 5) (= (pour-time) 1)) (:goal (and)))";
        let pb = load(BOTTLES, text).unwrap();
        assert_eq!(pb.actions.len(), 1);
        assert!(pb.goals.is_empty());
    }

    #[test]
    fn missing_numeric_initial_value_is_an_error() {
        let text = "(define (problem t) (:domain bottles) (:objects b1 - src b2 - dst)
                    (:init (= (litres b1) 1) (= (uncap-time) 5) (= (pour-time) 1)) (:goal (and)))";
        match load(BOTTLES, text) {
            Err(PddlError::MissingInitialValue { fluent, .. }) => assert_eq!(fluent, "(litres b2)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grounding_cap_reports_count() {
        let err = load_with(BOTTLES, &problem(2, 4, 1), &GroundConfig { max_actions: 3 }).unwrap_err();
        assert_eq!(err, PddlError::GroundingCap { count: 8, cap: 3 });
    }

    #[test]
    fn instantaneous_actions_are_wrapped() {
        let d = "(define (domain d) (:requirements :fluents) (:functions (x))
                 (:action bump :parameters () :precondition (< (x) 3) :effect (increase (x) 1)))";
        let p = "(define (problem p) (:domain d) (:init (= (x) 0)) (:goal (>= (x) 2)))";
        let pb = load(d, p).unwrap();
        let a = &pb.actions[0];
        assert!(a.instantaneous);
        assert!(a.snap(Role::End).is_noop());
        assert!(a.snap(Role::Lasting).is_noop());
        assert_eq!(a.lower, instant_duration());
    }

    #[test]
    fn dump_round_trip_is_structural_identity() {
        let pb = load(BOTTLES, &problem(2, 4, 3)).unwrap();
        let back = TemporalNumericProblem::from_dump(&pb.dump()).unwrap();
        assert_eq!(back, pb);
        assert_eq!(back.dump(), pb.dump());
    }
}
