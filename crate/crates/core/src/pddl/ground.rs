//! Grounding of a lifted domain and instance into a [`TemporalNumericProblem`].
//!
//! Every type-consistent parameter tuple is instantiated. Numeric fluents
//! that no action assigns are static: their initial values are folded into
//! conditions and durations, and they do not become state variables.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::lifted::{ground_key, AssignKind, Cond, Domain, Eff, Expr, Instance, LiftedAction, Term};
use super::sexpr::Pos;
use super::PddlError;
use crate::model::{
    BoolVar, Comparison, Condition, DurativeAction, Effect, LinearExpr, NumVar, NumericEffect, SnapAction, State,
    TemporalNumericProblem,
};
use crate::rational::{self, Rational};

/// Duration given to wrapped instantaneous actions. Their end part is a
/// no-op, so the value only bounds how densely they can repeat.
pub fn instant_duration() -> Rational {
    rational::ratio(1, 1000)
}

#[derive(Debug, Clone)]
pub struct GroundConfig {
    pub max_actions: usize,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig { max_actions: 200_000 }
    }
}

/// Linear expression over ground fluent names.
#[derive(Debug, Clone, Default)]
struct FluentLin {
    constant: Rational,
    terms: BTreeMap<String, Rational>,
}

impl FluentLin {
    fn constant(c: Rational) -> Self {
        FluentLin {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    fn fluent(key: String) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(key, Rational::one());
        FluentLin {
            constant: Rational::zero(),
            terms,
        }
    }

    fn plus(mut self, other: FluentLin) -> Self {
        self.constant += other.constant;
        for (k, c) in other.terms {
            let e = self.terms.entry(k.clone()).or_insert_with(Rational::zero);
            *e += c;
            if e.is_zero() {
                self.terms.remove(&k);
            }
        }
        self
    }

    fn scaled(self, k: &Rational) -> Self {
        if k.is_zero() {
            return FluentLin::default();
        }
        FluentLin {
            constant: self.constant * k,
            terms: self.terms.into_iter().map(|(n, c)| (n, c * k)).collect(),
        }
    }

    fn as_constant(&self) -> Option<&Rational> {
        self.terms.is_empty().then_some(&self.constant)
    }
}

enum GCond {
    Fact(String, bool),
    Cmp(FluentLin, Comparison),
}

enum GEff {
    Fact(String, bool),
    Num(String, FluentLin),
}

#[derive(Default)]
struct GSnap {
    pre: Vec<GCond>,
    eff: Vec<GEff>,
}

struct GAction {
    name: String,
    start: GSnap,
    lasting: GSnap,
    end: GSnap,
    duration: Option<(FluentLin, FluentLin)>,
    pos: Pos,
}

struct Binder<'a> {
    binding: &'a BTreeMap<String, String>,
}

impl Binder<'_> {
    fn obj<'t>(&'t self, t: &'t Term) -> &'t str {
        match t {
            Term::Param(p) => self.binding.get(p).map(String::as_str).unwrap_or(p),
            Term::Object(o) => o,
        }
    }

    fn key(&self, name: &str, args: &[Term]) -> String {
        let args: Vec<Term> = args.iter().map(|a| Term::Object(self.obj(a).to_string())).collect();
        ground_key(name, &args)
    }

    fn expr(&self, e: &Expr) -> Result<FluentLin, PddlError> {
        Ok(match e {
            Expr::Num(n) => FluentLin::constant(n.clone()),
            Expr::Fluent(a) => FluentLin::fluent(self.key(&a.name, &a.args)),
            Expr::Add(items) => {
                let mut acc = FluentLin::default();
                for it in items {
                    acc = acc.plus(self.expr(it)?);
                }
                acc
            }
            Expr::Sub(a, b) => self.expr(a)?.plus(self.expr(b)?.scaled(&-Rational::one())),
            Expr::Neg(a) => self.expr(a)?.scaled(&-Rational::one()),
            Expr::Mul(items, pos) => {
                let mut factor = Rational::one();
                let mut variable: Option<FluentLin> = None;
                for it in items {
                    let g = self.expr(it)?;
                    match g.as_constant() {
                        Some(c) => factor *= c,
                        None if variable.is_none() => variable = Some(g),
                        None => return Err(PddlError::Nonlinear { pos: *pos }),
                    }
                }
                match variable {
                    Some(v) => v.scaled(&factor),
                    None => FluentLin::constant(factor),
                }
            }
            Expr::Div(a, b, pos) => {
                let divisor = self.expr(b)?;
                match divisor.as_constant() {
                    Some(d) if !d.is_zero() => self.expr(a)?.scaled(&d.recip()),
                    Some(_) => {
                        return Err(PddlError::Malformed {
                            pos: *pos,
                            message: "division by zero".into(),
                        })
                    }
                    None => return Err(PddlError::Nonlinear { pos: *pos }),
                }
            }
            Expr::Duration(pos) => {
                return Err(PddlError::Unsupported {
                    pos: *pos,
                    feature: "?duration outside the duration constraint".into(),
                })
            }
        })
    }

    /// `None` when a static equality makes the conjunction unsatisfiable.
    fn conds(&self, conds: &[Cond], out: &mut Vec<GCond>) -> Result<bool, PddlError> {
        for c in conds {
            match c {
                Cond::Fact { atom, positive } => out.push(GCond::Fact(self.key(&atom.name, &atom.args), *positive)),
                Cond::Compare { cmp, lhs, rhs } => {
                    let diff = self.expr(lhs)?.plus(self.expr(rhs)?.scaled(&-Rational::one()));
                    out.push(GCond::Cmp(diff, *cmp));
                }
                Cond::Equal { lhs, rhs, positive } => {
                    if (self.obj(lhs) == self.obj(rhs)) != *positive {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    fn effs(&self, effs: &[Eff], out: &mut Vec<GEff>) -> Result<(), PddlError> {
        for e in effs {
            match e {
                Eff::Fact { atom, positive } => out.push(GEff::Fact(self.key(&atom.name, &atom.args), *positive)),
                Eff::Numeric { kind, fluent, expr } => {
                    let key = self.key(&fluent.name, &fluent.args);
                    let rhs = self.expr(expr)?;
                    let current = FluentLin::fluent(key.clone());
                    let value = match kind {
                        AssignKind::Assign => rhs,
                        AssignKind::Increase => current.plus(rhs),
                        AssignKind::Decrease => current.plus(rhs.scaled(&-Rational::one())),
                        AssignKind::ScaleUp | AssignKind::ScaleDown => {
                            let k = rhs.as_constant().cloned().ok_or(PddlError::Nonlinear { pos: fluent.pos })?;
                            if *kind == AssignKind::ScaleUp {
                                current.scaled(&k)
                            } else if k.is_zero() {
                                return Err(PddlError::Malformed {
                                    pos: fluent.pos,
                                    message: "scale-down by zero".into(),
                                });
                            } else {
                                current.scaled(&k.recip())
                            }
                        }
                    };
                    out.push(GEff::Num(key, value));
                }
            }
        }
        Ok(())
    }
}

fn objects_by_type(domain: &Domain, inst: &Instance) -> BTreeMap<String, Vec<String>> {
    let mut all: Vec<(String, String)> = domain.constants.clone();
    for o in &inst.objects {
        if !all.iter().any(|(n, _)| n == &o.0) {
            all.push(o.clone());
        }
    }
    let mut types: BTreeSet<String> = domain.types.keys().cloned().collect();
    types.insert("object".into());
    types
        .into_iter()
        .map(|t| {
            let objs = all
                .iter()
                .filter(|(_, ty)| domain.is_subtype(ty, &t))
                .map(|(n, _)| n.clone())
                .collect();
            (t, objs)
        })
        .collect()
}

/// Number of type-consistent parameter tuples of an action.
pub fn instantiation_count(domain: &Domain, inst: &Instance, action: &LiftedAction) -> usize {
    let by_type = objects_by_type(domain, inst);
    action
        .params
        .iter()
        .map(|(_, t)| by_type.get(t).map(Vec::len).unwrap_or(0))
        .product()
}

fn instantiate(
    action: &LiftedAction,
    by_type: &BTreeMap<String, Vec<String>>,
    out: &mut Vec<GAction>,
) -> Result<(), PddlError> {
    let domains: Vec<&Vec<String>> = action
        .params
        .iter()
        .map(|(_, t)| by_type.get(t).expect("declared type"))
        .collect();
    if domains.iter().any(|d| d.is_empty()) {
        return Ok(());
    }
    let mut idx = vec![0usize; domains.len()];
    loop {
        let binding: BTreeMap<String, String> = action
            .params
            .iter()
            .zip(&idx)
            .zip(&domains)
            .map(|(((p, _), &i), d)| (p.clone(), d[i].clone()))
            .collect();
        let b = Binder { binding: &binding };
        let mut g = GAction {
            name: std::iter::once(action.name.clone())
                .chain(idx.iter().zip(&domains).map(|(&i, d)| d[i].clone()))
                .collect::<Vec<_>>()
                .join(" "),
            start: GSnap::default(),
            lasting: GSnap::default(),
            end: GSnap::default(),
            duration: None,
            pos: action.pos,
        };
        let ok = b.conds(&action.start_pre, &mut g.start.pre)?
            && b.conds(&action.lasting_pre, &mut g.lasting.pre)?
            && b.conds(&action.end_pre, &mut g.end.pre)?;
        if ok {
            b.effs(&action.start_eff, &mut g.start.eff)?;
            b.effs(&action.end_eff, &mut g.end.eff)?;
            if let Some((lo, hi)) = &action.duration {
                g.duration = Some((b.expr(lo)?, b.expr(hi)?));
            }
            out.push(g);
        }
        // odometer
        let mut k = idx.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

struct VarTables {
    bools: BTreeMap<String, BoolVar>,
    nums: BTreeMap<String, NumVar>,
    statics: BTreeMap<String, Rational>,
}

impl VarTables {
    fn lin(&self, l: &FluentLin, pos: Pos) -> Result<LinearExpr, PddlError> {
        let mut out = LinearExpr::constant(l.constant.clone());
        for (k, c) in &l.terms {
            if let Some(v) = self.nums.get(k) {
                out.add_term(*v, c.clone());
            } else if let Some(value) = self.statics.get(k) {
                out = out.plus(&LinearExpr::constant(value * c));
            } else {
                return Err(PddlError::MissingInitialValue { fluent: k.clone(), pos });
            }
        }
        Ok(out)
    }

    fn conds(&self, conds: &[GCond], pos: Pos) -> Result<Vec<Condition>, PddlError> {
        let mut out = Vec::new();
        for c in conds {
            let c = match c {
                GCond::Fact(k, v) => Condition::Bool {
                    var: self.bools[k],
                    value: *v,
                },
                GCond::Cmp(l, cmp) => {
                    let expr = self.lin(l, pos)?;
                    if expr.is_constant() && cmp.holds(expr.constant_part()) {
                        continue;
                    }
                    Condition::Numeric { expr, cmp: *cmp }
                }
            };
            if !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }

    fn snap(&self, s: &GSnap, pos: Pos) -> Result<SnapAction, PddlError> {
        let pre = self.conds(&s.pre, pos)?;
        let mut eff = Vec::new();
        for e in &s.eff {
            eff.push(match e {
                GEff::Fact(k, v) => Effect::Bool {
                    var: self.bools[k],
                    value: *v,
                },
                GEff::Num(k, l) => Effect::Numeric(NumericEffect::new(self.nums[k], self.lin(l, pos)?)),
            });
        }
        Ok(SnapAction::new(pre, eff))
    }
}

pub fn ground(domain: &Domain, inst: &Instance, config: &GroundConfig) -> Result<TemporalNumericProblem, PddlError> {
    let by_type = objects_by_type(domain, inst);
    let total: usize = domain
        .actions
        .iter()
        .map(|a| instantiation_count(domain, inst, a))
        .fold(0usize, |acc, n| acc.saturating_add(n));
    if total > config.max_actions {
        return Err(PddlError::GroundingCap {
            count: total,
            cap: config.max_actions,
        });
    }
    let mut gactions = Vec::new();
    for a in &domain.actions {
        instantiate(a, &by_type, &mut gactions)?;
    }

    let binder_empty = BTreeMap::new();
    let top = Binder { binding: &binder_empty };
    let mut goals = Vec::new();
    let goals_ok = top.conds(&inst.goals, &mut goals)?;

    let mut fact_keys: BTreeSet<String> = BTreeSet::new();
    let mut fluent_refs: BTreeSet<String> = BTreeSet::new();
    let mut assigned: BTreeSet<String> = BTreeSet::new();
    let note_conds = |cs: &[GCond], facts: &mut BTreeSet<String>, fluents: &mut BTreeSet<String>| {
        for c in cs {
            match c {
                GCond::Fact(k, _) => {
                    facts.insert(k.clone());
                }
                GCond::Cmp(l, _) => fluents.extend(l.terms.keys().cloned()),
            }
        }
    };
    for f in &inst.init_facts {
        fact_keys.insert(ground_key(&f.name, &f.args));
    }
    note_conds(&goals, &mut fact_keys, &mut fluent_refs);
    for g in &gactions {
        for s in [&g.start, &g.lasting, &g.end] {
            note_conds(&s.pre, &mut fact_keys, &mut fluent_refs);
            for e in &s.eff {
                match e {
                    GEff::Fact(k, _) => {
                        fact_keys.insert(k.clone());
                    }
                    GEff::Num(k, l) => {
                        assigned.insert(k.clone());
                        fluent_refs.insert(k.clone());
                        fluent_refs.extend(l.terms.keys().cloned());
                    }
                }
            }
        }
        if let Some((lo, hi)) = &g.duration {
            fluent_refs.extend(lo.terms.keys().cloned());
            fluent_refs.extend(hi.terms.keys().cloned());
        }
    }

    let init_values: BTreeMap<String, Rational> = inst
        .init_values
        .iter()
        .map(|(a, v)| (ground_key(&a.name, &a.args), v.clone()))
        .collect();
    let mut tables = VarTables {
        bools: BTreeMap::new(),
        nums: BTreeMap::new(),
        statics: BTreeMap::new(),
    };
    for (i, k) in fact_keys.iter().enumerate() {
        tables.bools.insert(k.clone(), BoolVar(i));
    }
    let mut num_names = Vec::new();
    for k in &fluent_refs {
        if assigned.contains(k) {
            tables.nums.insert(k.clone(), NumVar(num_names.len()));
            num_names.push(k.clone());
        } else if let Some(v) = init_values.get(k) {
            tables.statics.insert(k.clone(), v.clone());
        }
    }
    let mut init_nums = Vec::new();
    for k in &num_names {
        match init_values.get(k) {
            Some(v) => init_nums.push(v.clone()),
            None => {
                return Err(PddlError::MissingInitialValue {
                    fluent: k.clone(),
                    pos: Pos::default(),
                })
            }
        }
    }
    let mut init_bools = vec![false; fact_keys.len()];
    for f in &inst.init_facts {
        init_bools[tables.bools[&ground_key(&f.name, &f.args)].0] = true;
    }

    let mut actions = Vec::new();
    for g in &gactions {
        let (lower, upper, instantaneous) = match &g.duration {
            Some((lo, hi)) => {
                let lo = tables.lin(lo, g.pos)?;
                let hi = tables.lin(hi, g.pos)?;
                if !lo.is_constant() || !hi.is_constant() {
                    return Err(PddlError::Unsupported {
                        pos: g.pos,
                        feature: format!("duration of `{}` depends on a non-static fluent", g.name),
                    });
                }
                (lo.constant_part().clone(), hi.constant_part().clone(), false)
            }
            None => (instant_duration(), instant_duration(), true),
        };
        actions.push(DurativeAction {
            name: g.name.clone(),
            start: tables.snap(&g.start, g.pos)?,
            lasting: tables.snap(&g.lasting, g.pos)?,
            end: tables.snap(&g.end, g.pos)?,
            lower,
            upper,
            instantaneous,
        });
    }
    let mut goal_conds = tables.conds(&goals, Pos::default())?;
    if !goals_ok {
        goal_conds.push(Condition::Numeric {
            expr: LinearExpr::zero(),
            cmp: Comparison::Gt,
        });
    }
    let problem = TemporalNumericProblem::new(
        fact_keys.into_iter().collect(),
        num_names,
        actions,
        State {
            bools: init_bools,
            nums: init_nums,
        },
        goal_conds,
    )?;
    Ok(problem)
}
