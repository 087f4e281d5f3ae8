//! Syntactic interference, mutex and rolling-eligibility analysis.

use serde::Serialize;

use crate::model::{
    ActionId, BoolVar, Condition, DurativeAction, Effect, Role, SnapAction, SnapId, TemporalNumericProblem, Var,
};
use crate::rational::Rational;

/// True when `a` interferes with `other`, i.e. some variable assigned by
/// `a` breaks one of the three non-interference conditions.
pub fn interferes(a: &SnapAction, other: &SnapAction) -> bool {
    a.eff.iter().any(|e| {
        let v = e.assigned();
        if other.pre_mentions(v) {
            return true;
        }
        match (e, v) {
            (Effect::Bool { value, .. }, _) => matches!(
                other.effect_on(v),
                Some(Effect::Bool { value: w, .. }) if w != value
            ),
            (Effect::Numeric(_), Var::Num(_)) => {
                let touched = other.eff.iter().any(|f| f.mentions(v));
                touched && !(only_increments(a, v) && only_increments(other, v))
            }
            _ => unreachable!("numeric effect on a Boolean variable"),
        }
    })
}

/// Every occurrence of `v` in `a` is inside a linear increment of `v`.
fn only_increments(a: &SnapAction, v: Var) -> bool {
    if a.pre_mentions(v) {
        return false;
    }
    a.eff.iter().filter(|e| e.mentions(v)).all(|e| match (e, v) {
        (Effect::Numeric(ne), Var::Num(n)) => ne.var == n && ne.is_linear_increment(),
        _ => false,
    })
}

pub fn mutex(a: &SnapAction, b: &SnapAction) -> bool {
    interferes(a, b) || interferes(b, a)
}

/// Symmetric mutex relation over all snap actions, keyed by [`SnapId::index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutexMatrix {
    size: usize,
    bits: Vec<bool>,
}

impl MutexMatrix {
    pub fn new(problem: &TemporalNumericProblem) -> Self {
        let snaps: Vec<(SnapId, &SnapAction)> = all_snaps(problem).collect();
        let size = snaps.len();
        let mut bits = vec![false; size * size];
        for (i, (x, a)) in snaps.iter().enumerate() {
            for (y, b) in &snaps[i..] {
                if mutex(a, b) {
                    bits[x.index() * size + y.index()] = true;
                    bits[y.index() * size + x.index()] = true;
                }
            }
        }
        MutexMatrix { size, bits }
    }

    pub fn get(&self, a: SnapId, b: SnapId) -> bool {
        self.bits[a.index() * self.size + b.index()]
    }

    /// Number of snap actions covered (three per durative action).
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }
}

fn all_snaps(problem: &TemporalNumericProblem) -> impl Iterator<Item = (SnapId, &SnapAction)> {
    problem.action_ids().flat_map(move |id| {
        [Role::Start, Role::Lasting, Role::End].into_iter().map(move |role| {
            let s = SnapId::new(id, role);
            (s, problem.snap(s))
        })
    })
}

pub fn eligible_for_rolling(b: &DurativeAction) -> bool {
    booleans_allow_repetition(b) && numeric_effects_roll(b) && has_linear_increment(b)
}

fn bool_effect(a: &SnapAction, v: BoolVar) -> Option<bool> {
    match a.effect_on(Var::Bool(v)) {
        Some(Effect::Bool { value, .. }) => Some(*value),
        _ => None,
    }
}

/// Read as an implication: a Boolean precondition of the next repetition
/// must be restored by the opposite snap action or never be falsified.
fn booleans_allow_repetition(b: &DurativeAction) -> bool {
    let restored = |v: BoolVar, value: bool, by: &SnapAction| {
        bool_effect(by, v) == Some(value)
            || (bool_effect(&b.start, v) != Some(!value) && bool_effect(&b.end, v) != Some(!value))
    };
    let bool_pre = |a: &SnapAction| -> Vec<(BoolVar, bool)> {
        a.pre
            .iter()
            .filter_map(|c| match c {
                Condition::Bool { var, value } => Some((*var, *value)),
                Condition::Numeric { .. } => None,
            })
            .collect()
    };
    bool_pre(&b.start).into_iter().all(|(v, val)| restored(v, val, &b.end))
        && bool_pre(&b.lasting)
            .into_iter()
            .chain(bool_pre(&b.end))
            .all(|(v, val)| restored(v, val, &b.start))
}

fn numeric_effects_roll(b: &DurativeAction) -> bool {
    let effects: Vec<&Effect> = b.start.eff.iter().chain(&b.end.eff).collect();
    effects.iter().enumerate().all(|(i, e)| match e {
        Effect::Bool { .. } => true,
        Effect::Numeric(ne) => {
            let v = Var::Num(ne.var);
            let alone = effects
                .iter()
                .enumerate()
                .all(|(j, f)| i == j || !f.mentions(v));
            alone && (ne.is_linear_increment() || !ne.expr.mentions(ne.var))
        }
    })
}

fn has_linear_increment(b: &DurativeAction) -> bool {
    b.start
        .eff
        .iter()
        .chain(&b.end.eff)
        .any(|e| matches!(e, Effect::Numeric(ne) if ne.is_linear_increment()))
}

/// Gap between consecutive rolled executions: `ε` when start and end are
/// mutex, zero otherwise.
pub fn epsilon_b(b: &DurativeAction, epsilon: &Rational) -> Rational {
    if mutex(&b.start, &b.end) {
        epsilon.clone()
    } else {
        Rational::from_integer(0.into())
    }
}

/// Precomputed analysis results for one problem.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub mutex: MutexMatrix,
    pub eligible: Vec<bool>,
}

impl Analysis {
    pub fn new(problem: &TemporalNumericProblem) -> Self {
        Analysis {
            mutex: MutexMatrix::new(problem),
            eligible: problem.actions.iter().map(eligible_for_rolling).collect(),
        }
    }

    pub fn is_eligible(&self, a: ActionId) -> bool {
        self.eligible[a.0]
    }

    pub fn mutex(&self, a: SnapId, b: SnapId) -> bool {
        self.mutex.get(a, b)
    }

    /// Mutex pairs (by snap name) and the rolling-eligible actions as JSON.
    pub fn dump(&self, problem: &TemporalNumericProblem) -> String {
        #[derive(Serialize)]
        struct Dump {
            mutex: Vec<(String, String)>,
            rolling_eligible: Vec<String>,
            not_eligible: Vec<String>,
        }
        let snaps: Vec<SnapId> = all_snaps(problem).map(|(s, _)| s).collect();
        let mut pairs = Vec::new();
        for (i, &a) in snaps.iter().enumerate() {
            for &b in &snaps[i..] {
                if self.mutex(a, b) {
                    pairs.push((snap_name(problem, a), snap_name(problem, b)));
                }
            }
        }
        let (yes, no): (Vec<_>, Vec<_>) = problem.action_ids().partition(|&a| self.is_eligible(a));
        let names = |ids: Vec<ActionId>| ids.into_iter().map(|a| problem.action(a).name.clone()).collect();
        serde_json::to_string_pretty(&Dump {
            mutex: pairs,
            rolling_eligible: names(yes),
            not_eligible: names(no),
        })
        .expect("serialising analysis")
    }
}

/// `start(name)`, `lasting(name)` or `end(name)`.
pub fn snap_name(problem: &TemporalNumericProblem, s: SnapId) -> String {
    let role = match s.role {
        Role::Start => "start",
        Role::Lasting => "lasting",
        Role::End => "end",
    };
    format!("{role}({})", problem.action(s.action).name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    fn snap(pb: &TemporalNumericProblem, name: &str, role: Role) -> SnapId {
        SnapId::new(pb.find_action(name).unwrap(), role)
    }

    #[test]
    fn running_example_mutex_pairs() {
        let pb = fixtures::pour(1, 3, &[3]).problem();
        let an = Analysis::new(&pb);
        let pr_s = snap(&pb, "pour b1 b2", Role::Start);
        let pr_e = snap(&pb, "pour b1 b3", Role::End);
        let nc1_s = snap(&pb, "uncap b1", Role::Start);
        let nc1_e = snap(&pb, "uncap b1", Role::End);
        let nc3_e = snap(&pb, "uncap b3", Role::End);
        assert!(interferes(pb.snap(nc1_s), pb.snap(pr_s)));
        assert!(an.mutex(pr_s, nc1_s));
        assert!(an.mutex(pr_s, nc1_e));
        assert!(!an.mutex(pr_e, nc3_e));
        let pr13 = snap(&pb, "pour b1 b3", Role::Start);
        assert!(an.mutex(pr_s, pr13));
    }

    #[test]
    fn linear_increments_and_same_polarity_do_not_interfere() {
        let pb = fixtures::pour(2, 3, &[3, 3]).problem();
        let l = pb.find_num("(litres b3)").unwrap();
        let inc = Effect::Numeric(crate::model::NumericEffect::new(
            l,
            crate::model::LinearExpr::var(l).plus(&crate::model::LinearExpr::constant(int(1))),
        ));
        let a = SnapAction::new(vec![], vec![inc.clone()]);
        assert!(!interferes(&a, &a.clone()));
        let c = pb.find_bool("(capped b1)").unwrap();
        let set = SnapAction::new(vec![], vec![Effect::Bool { var: c, value: true }]);
        let unset = SnapAction::new(vec![], vec![Effect::Bool { var: c, value: false }]);
        assert!(!interferes(&set, &set.clone()));
        assert!(interferes(&set, &unset));
    }

    #[test]
    fn pour_eligible_uncap_not() {
        let pb = fixtures::pour(2, 4, &[3, 3]).problem();
        for a in &pb.actions {
            assert_eq!(eligible_for_rolling(a), a.name.starts_with("pour"), "{}", a.name);
        }
    }

    #[test]
    fn epsilon_b_values() {
        let pb = fixtures::pour(1, 2, &[3]).problem();
        let eps = ratio(1, 1000);
        let nc = pb.action(pb.find_action("uncap b1").unwrap());
        let pr = pb.action(pb.find_action("pour b1 b2").unwrap());
        assert_eq!(epsilon_b(nc, &eps), eps);
        assert_eq!(epsilon_b(pr, &eps), int(0));
    }

    #[test]
    fn dump_lists_eligibility() {
        let pb = fixtures::pour(1, 2, &[3]).problem();
        let v: serde_json::Value = serde_json::from_str(&Analysis::new(&pb).dump(&pb)).unwrap();
        assert_eq!(v["rolling_eligible"], serde_json::json!(["pour b1 b2"]));
    }
}
