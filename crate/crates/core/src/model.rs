//! Grounded temporal numeric planning problems.
//!
//! A problem holds Boolean and numeric state variables, a set of durative
//! actions (each made of a start, a lasting and an end snap action plus a
//! duration interval), a total initial state and a set of goal conditions.
//! Everything is immutable once [`TemporalNumericProblem::new`] has checked
//! the structural invariants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoolVar(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NumVar(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub usize);

/// A state variable of either kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Bool(BoolVar),
    Num(NumVar),
}

/// `constant + Σ coefficient · variable`, with zero coefficients removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LinearExpr {
    #[serde(with = "rational")]
    constant: Rational,
    #[serde(with = "terms_serde")]
    terms: BTreeMap<NumVar, Rational>,
}

impl LinearExpr {
    pub fn constant(c: Rational) -> Self {
        LinearExpr {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    pub fn var(v: NumVar) -> Self {
        Self::term(v, Rational::one())
    }

    pub fn term(v: NumVar, coefficient: Rational) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coefficient);
        e
    }

    pub fn from_parts(constant: Rational, terms: impl IntoIterator<Item = (NumVar, Rational)>) -> Self {
        let mut e = Self::constant(constant);
        for (v, c) in terms {
            e.add_term(v, c);
        }
        e
    }

    pub fn add_term(&mut self, v: NumVar, coefficient: Rational) {
        let entry = self.terms.entry(v).or_insert_with(Rational::zero);
        *entry += coefficient;
        if entry.is_zero() {
            self.terms.remove(&v);
        }
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (NumVar, &Rational)> + '_ {
        self.terms.iter().map(|(v, c)| (*v, c))
    }

    pub fn coefficient(&self, v: NumVar) -> Rational {
        self.terms.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn mentions(&self, v: NumVar) -> bool {
        self.terms.contains_key(&v)
    }

    pub fn vars(&self) -> impl Iterator<Item = NumVar> + '_ {
        self.terms.keys().copied()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn plus(&self, other: &LinearExpr) -> LinearExpr {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (v, c) in other.terms() {
            out.add_term(v, c.clone());
        }
        out
    }

    pub fn scaled(&self, k: &Rational) -> LinearExpr {
        if k.is_zero() {
            return LinearExpr::zero();
        }
        LinearExpr {
            constant: &self.constant * k,
            terms: self.terms.iter().map(|(v, c)| (*v, c * k)).collect(),
        }
    }

    pub fn minus(&self, other: &LinearExpr) -> LinearExpr {
        self.plus(&other.scaled(&-Rational::one()))
    }

    pub fn eval(&self, value: impl Fn(NumVar) -> Rational) -> Rational {
        let mut acc = self.constant.clone();
        for (v, c) in &self.terms {
            acc += c * value(*v);
        }
        acc
    }

    /// Replaces every variable with an expression.
    pub fn substitute(&self, f: impl Fn(NumVar) -> LinearExpr) -> LinearExpr {
        let mut out = LinearExpr::constant(self.constant.clone());
        for (v, c) in &self.terms {
            out = out.plus(&f(*v).scaled(c));
        }
        out
    }

    pub fn display<'a>(&'a self, problem: &'a TemporalNumericProblem) -> impl fmt::Display + 'a {
        LinearDisplay { expr: self, problem }
    }
}

struct LinearDisplay<'a> {
    expr: &'a LinearExpr,
    problem: &'a TemporalNumericProblem,
}

impl fmt::Display for LinearDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in self.expr.terms() {
            let name = &self.problem.num_vars[v.0];
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag.is_one() {
                write!(f, "{name}")?;
            } else {
                write!(f, "{}*{name}", rational::format(&mag))?;
            }
            first = false;
        }
        let c = &self.expr.constant;
        if first {
            write!(f, "{}", rational::format(c))
        } else if !c.is_zero() {
            let sign = if c.is_negative() { "-" } else { "+" };
            write!(f, " {sign} {}", rational::format(&c.abs()))
        } else {
            Ok(())
        }
    }
}

mod terms_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<NumVar, Rational>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(usize, String)> = m.iter().map(|(k, c)| (k.0, rational::format(c))).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<NumVar, Rational>, D::Error> {
        let v = Vec::<(usize, String)>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (k, c) in v {
            let c = rational::parse(&c).map_err(serde::de::Error::custom)?;
            if c.is_zero() || out.insert(NumVar(k), c).is_some() {
                return Err(serde::de::Error::custom("unnormalized linear expression"));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Comparison {
    /// Whether `value ⊵ 0`.
    pub fn holds(self, value: &Rational) -> bool {
        match self {
            Comparison::Lt => value.is_negative(),
            Comparison::Le => !value.is_positive(),
            Comparison::Eq => value.is_zero(),
            Comparison::Ge => !value.is_negative(),
            Comparison::Gt => value.is_positive(),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Eq => "=",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
        }
    }
}

/// `v = value` for Boolean variables, or `expr ⊵ 0` over numeric ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    Bool { var: BoolVar, value: bool },
    Numeric { expr: LinearExpr, cmp: Comparison },
}

impl Condition {
    pub fn mentions(&self, v: Var) -> bool {
        match (self, v) {
            (Condition::Bool { var, .. }, Var::Bool(b)) => *var == b,
            (Condition::Numeric { expr, .. }, Var::Num(n)) => expr.mentions(n),
            _ => false,
        }
    }

    pub fn holds(&self, state: &State) -> bool {
        match self {
            Condition::Bool { var, value } => state.bools[var.0] == *value,
            Condition::Numeric { expr, cmp } => cmp.holds(&state.eval(expr)),
        }
    }
}

/// `x := expr`. The linear-increment flag is derived from the expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NumericEffect {
    pub var: NumVar,
    pub expr: LinearExpr,
    linear_increment: bool,
}

impl NumericEffect {
    pub fn new(var: NumVar, expr: LinearExpr) -> Self {
        let linear_increment = expr.coefficient(var).is_one();
        NumericEffect {
            var,
            expr,
            linear_increment,
        }
    }

    /// `x := x + ψ'` with `x` absent from `ψ'`.
    pub fn is_linear_increment(&self) -> bool {
        self.linear_increment
    }

    /// The `ψ'` of a linear increment.
    pub fn increment(&self) -> Option<LinearExpr> {
        self.linear_increment
            .then(|| self.expr.minus(&LinearExpr::var(self.var)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Effect {
    Bool { var: BoolVar, value: bool },
    Numeric(NumericEffect),
}

impl Effect {
    pub fn assigned(&self) -> Var {
        match self {
            Effect::Bool { var, .. } => Var::Bool(*var),
            Effect::Numeric(e) => Var::Num(e.var),
        }
    }

    /// Occurrence of `v` anywhere in the effect, on either side of `:=`.
    pub fn mentions(&self, v: Var) -> bool {
        match (self, v) {
            (Effect::Bool { var, .. }, Var::Bool(b)) => *var == b,
            (Effect::Numeric(e), Var::Num(n)) => e.var == n || e.expr.mentions(n),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Start,
    Lasting,
    End,
}

impl Role {
    pub fn index(self) -> usize {
        match self {
            Role::Start => 0,
            Role::Lasting => 1,
            Role::End => 2,
        }
    }
}

/// Identity of a snap action: its owning durative action and its role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SnapId {
    pub action: ActionId,
    pub role: Role,
}

impl SnapId {
    pub fn new(action: ActionId, role: Role) -> Self {
        SnapId { action, role }
    }

    /// Dense index, three per durative action.
    pub fn index(self) -> usize {
        self.action.0 * 3 + self.role.index()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SnapAction {
    pub pre: Vec<Condition>,
    pub eff: Vec<Effect>,
}

impl SnapAction {
    pub fn new(pre: Vec<Condition>, eff: Vec<Effect>) -> Self {
        SnapAction { pre, eff }
    }

    pub fn assigned(&self) -> impl Iterator<Item = Var> + '_ {
        self.eff.iter().map(Effect::assigned)
    }

    pub fn assigns(&self, v: Var) -> bool {
        self.eff.iter().any(|e| e.assigned() == v)
    }

    pub fn effect_on(&self, v: Var) -> Option<&Effect> {
        self.eff.iter().find(|e| e.assigned() == v)
    }

    pub fn pre_mentions(&self, v: Var) -> bool {
        self.pre.iter().any(|c| c.mentions(v))
    }

    pub fn is_noop(&self) -> bool {
        self.pre.is_empty() && self.eff.is_empty()
    }

    /// `res(a, s)` without checking preconditions.
    pub fn apply(&self, state: &State) -> State {
        let mut next = state.clone();
        for e in &self.eff {
            match e {
                Effect::Bool { var, value } => next.bools[var.0] = *value,
                Effect::Numeric(ne) => next.nums[ne.var.0] = state.eval(&ne.expr),
            }
        }
        next
    }

    pub fn applicable(&self, state: &State) -> bool {
        self.pre.iter().all(|c| c.holds(state))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurativeAction {
    pub name: String,
    pub start: SnapAction,
    pub lasting: SnapAction,
    pub end: SnapAction,
    #[serde(with = "rational")]
    pub lower: Rational,
    #[serde(with = "rational")]
    pub upper: Rational,
    /// Wrapped instantaneous action: the lasting and end parts are empty.
    #[serde(default)]
    pub instantaneous: bool,
}

impl DurativeAction {
    pub fn snap(&self, role: Role) -> &SnapAction {
        match role {
            Role::Start => &self.start,
            Role::Lasting => &self.lasting,
            Role::End => &self.end,
        }
    }
}

/// Total assignment over the state variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub bools: Vec<bool>,
    #[serde(with = "rational::vec")]
    pub nums: Vec<Rational>,
}

impl State {
    pub fn eval(&self, expr: &LinearExpr) -> Rational {
        expr.eval(|v| self.nums[v.0].clone())
    }

    pub fn satisfies(&self, conditions: &[Condition]) -> bool {
        conditions.iter().all(|c| c.holds(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("initial state has {got} {kind} values for {expected} variables")]
    InitialStateSize {
        kind: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("{context} references undeclared {kind} variable #{index}")]
    UndeclaredVariable {
        context: String,
        kind: &'static str,
        index: usize,
    },
    #[error("{context} assigns `{var}` more than once")]
    DoubleAssignment { context: String, var: String },
    #[error("lasting part of `{0}` has effects")]
    LastingEffects(String),
    #[error("duration bounds of `{name}` are invalid: [{lower}, {upper}]")]
    DurationBounds {
        name: String,
        lower: String,
        upper: String,
    },
    #[error("duplicate action name `{0}`")]
    DuplicateAction(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalNumericProblem {
    pub bool_vars: Vec<String>,
    pub num_vars: Vec<String>,
    pub actions: Vec<DurativeAction>,
    pub init: State,
    pub goals: Vec<Condition>,
}

impl TemporalNumericProblem {
    pub fn new(
        bool_vars: Vec<String>,
        num_vars: Vec<String>,
        actions: Vec<DurativeAction>,
        init: State,
        goals: Vec<Condition>,
    ) -> Result<Self, ModelError> {
        let p = TemporalNumericProblem {
            bool_vars,
            num_vars,
            actions,
            init,
            goals,
        };
        p.check()?;
        Ok(p)
    }

    /// Re-checks every structural invariant.
    pub fn check(&self) -> Result<(), ModelError> {
        let mut seen = BTreeSet::new();
        for name in self.bool_vars.iter().chain(&self.num_vars) {
            if !seen.insert(name) {
                return Err(ModelError::DuplicateVariable(name.clone()));
            }
        }
        if self.init.bools.len() != self.bool_vars.len() {
            return Err(ModelError::InitialStateSize {
                kind: "Boolean",
                got: self.init.bools.len(),
                expected: self.bool_vars.len(),
            });
        }
        if self.init.nums.len() != self.num_vars.len() {
            return Err(ModelError::InitialStateSize {
                kind: "numeric",
                got: self.init.nums.len(),
                expected: self.num_vars.len(),
            });
        }
        for c in &self.goals {
            self.check_condition(c, "goal")?;
        }
        let mut names = BTreeSet::new();
        for a in &self.actions {
            if !names.insert(&a.name) {
                return Err(ModelError::DuplicateAction(a.name.clone()));
            }
            if !(a.lower.is_positive() && a.lower <= a.upper) {
                return Err(ModelError::DurationBounds {
                    name: a.name.clone(),
                    lower: rational::format(&a.lower),
                    upper: rational::format(&a.upper),
                });
            }
            if !a.lasting.eff.is_empty() {
                return Err(ModelError::LastingEffects(a.name.clone()));
            }
            for role in [Role::Start, Role::Lasting, Role::End] {
                let snap = a.snap(role);
                let ctx = format!("{role:?} of `{}`", a.name);
                for c in &snap.pre {
                    self.check_condition(c, &ctx)?;
                }
                let mut assigned = BTreeSet::new();
                for e in &snap.eff {
                    let v = e.assigned();
                    self.check_var(v, &ctx)?;
                    if let Effect::Numeric(ne) = e {
                        for x in ne.expr.vars() {
                            self.check_var(Var::Num(x), &ctx)?;
                        }
                    }
                    if !assigned.insert(v) {
                        return Err(ModelError::DoubleAssignment {
                            context: ctx,
                            var: self.var_name(v).to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_condition(&self, c: &Condition, ctx: &str) -> Result<(), ModelError> {
        match c {
            Condition::Bool { var, .. } => self.check_var(Var::Bool(*var), ctx),
            Condition::Numeric { expr, .. } => {
                for v in expr.vars() {
                    self.check_var(Var::Num(v), ctx)?;
                }
                Ok(())
            }
        }
    }

    fn check_var(&self, v: Var, ctx: &str) -> Result<(), ModelError> {
        let (kind, index, len) = match v {
            Var::Bool(b) => ("Boolean", b.0, self.bool_vars.len()),
            Var::Num(n) => ("numeric", n.0, self.num_vars.len()),
        };
        if index >= len {
            return Err(ModelError::UndeclaredVariable {
                context: ctx.to_string(),
                kind,
                index,
            });
        }
        Ok(())
    }

    pub fn var_name(&self, v: Var) -> &str {
        match v {
            Var::Bool(b) => &self.bool_vars[b.0],
            Var::Num(n) => &self.num_vars[n.0],
        }
    }

    pub fn action(&self, id: ActionId) -> &DurativeAction {
        &self.actions[id.0]
    }

    pub fn snap(&self, id: SnapId) -> &SnapAction {
        self.actions[id.action.0].snap(id.role)
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len()).map(ActionId)
    }

    pub fn find_action(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a.name == name).map(ActionId)
    }

    pub fn find_bool(&self, name: &str) -> Option<BoolVar> {
        self.bool_vars.iter().position(|n| n == name).map(BoolVar)
    }

    pub fn find_num(&self, name: &str) -> Option<NumVar> {
        self.num_vars.iter().position(|n| n == name).map(NumVar)
    }

    /// Canonical JSON dump; `from_dump` reads it back.
    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    pub fn from_dump(text: &str) -> Result<Self, String> {
        let p: TemporalNumericProblem = serde_json::from_str(text).map_err(|e| e.to_string())?;
        p.check().map_err(|e| e.to_string())?;
        for a in &p.actions {
            for role in [Role::Start, Role::End] {
                for e in &a.snap(role).eff {
                    if let Effect::Numeric(ne) = e {
                        if ne.is_linear_increment() != ne.expr.coefficient(ne.var).is_one() {
                            return Err(format!("inconsistent increment flag in `{}`", a.name));
                        }
                    }
                }
            }
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn linear_expr_normalizes_zero_terms() {
        let mut e = LinearExpr::var(NumVar(0));
        e.add_term(NumVar(0), int(-1));
        assert!(e.is_constant());
        let e = LinearExpr::from_parts(int(2), [(NumVar(1), int(3)), (NumVar(1), int(-3))]);
        assert_eq!(e, LinearExpr::constant(int(2)));
    }

    #[test]
    fn increment_flag_follows_shape() {
        let x = NumVar(0);
        let y = NumVar(1);
        let inc = NumericEffect::new(x, LinearExpr::var(x).plus(&LinearExpr::constant(int(1))));
        assert!(inc.is_linear_increment());
        assert_eq!(inc.increment().unwrap(), LinearExpr::constant(int(1)));
        let doubled = NumericEffect::new(x, LinearExpr::term(x, int(2)));
        assert!(!doubled.is_linear_increment());
        let copy = NumericEffect::new(x, LinearExpr::var(y));
        assert!(!copy.is_linear_increment());
        assert!(copy.increment().is_none());
    }

    #[test]
    fn comparison_semantics() {
        assert!(Comparison::Gt.holds(&int(1)));
        assert!(!Comparison::Gt.holds(&int(0)));
        assert!(Comparison::Ge.holds(&int(0)));
        assert!(Comparison::Eq.holds(&int(0)));
        assert!(Comparison::Le.holds(&int(-3)));
        assert!(!Comparison::Lt.holds(&int(0)));
    }

    fn one_var_problem(actions: Vec<DurativeAction>) -> Result<TemporalNumericProblem, ModelError> {
        TemporalNumericProblem::new(
            vec!["b".into()],
            vec!["x".into()],
            actions,
            State {
                bools: vec![false],
                nums: vec![int(0)],
            },
            vec![],
        )
    }

    fn action(name: &str, start: SnapAction, lower: i64, upper: i64) -> DurativeAction {
        DurativeAction {
            name: name.into(),
            start,
            lasting: SnapAction::default(),
            end: SnapAction::default(),
            lower: int(lower),
            upper: int(upper),
            instantaneous: false,
        }
    }

    #[test]
    fn rejects_double_assignment() {
        let eff = vec![
            Effect::Bool { var: BoolVar(0), value: true },
            Effect::Bool { var: BoolVar(0), value: false },
        ];
        let err = one_var_problem(vec![action("a", SnapAction::new(vec![], eff), 1, 1)]).unwrap_err();
        assert!(matches!(err, ModelError::DoubleAssignment { .. }));
    }

    #[test]
    fn rejects_bad_durations_and_undeclared_vars() {
        let err = one_var_problem(vec![action("a", SnapAction::default(), 2, 1)]).unwrap_err();
        assert!(matches!(err, ModelError::DurationBounds { .. }));
        let err = one_var_problem(vec![action("a", SnapAction::default(), 0, 1)]).unwrap_err();
        assert!(matches!(err, ModelError::DurationBounds { .. }));
        let pre = vec![Condition::Bool { var: BoolVar(4), value: true }];
        let err = one_var_problem(vec![action("a", SnapAction::new(pre, vec![]), 1, 1)]).unwrap_err();
        assert!(matches!(err, ModelError::UndeclaredVariable { .. }));
    }

    #[test]
    fn snap_application_is_simultaneous() {
        let x = NumVar(0);
        let y = NumVar(1);
        let swap = SnapAction::new(
            vec![],
            vec![
                Effect::Numeric(NumericEffect::new(x, LinearExpr::var(y))),
                Effect::Numeric(NumericEffect::new(y, LinearExpr::var(x))),
            ],
        );
        let s = State {
            bools: vec![],
            nums: vec![int(1), int(2)],
        };
        assert_eq!(swap.apply(&s).nums, vec![int(2), int(1)]);
    }
}
