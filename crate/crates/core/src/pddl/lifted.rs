//! Lifted PDDL2.1 domain and problem models and their parsers.
//!
//! Supported: typing, numeric fluents, negative preconditions, object
//! equality, durative actions with fixed or interval durations, and plain
//! `:action`s. Conditional, continuous and duration-dependent effects, timed
//! initial literals and disjunctive or quantified conditions are rejected.

use std::collections::{BTreeMap, BTreeSet};

use super::sexpr::{read, Pos, Sexpr};
use super::PddlError;
use crate::model::Comparison;
use crate::rational::{self, Rational};

const SUPPORTED_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":durative-actions",
    ":fluents",
    ":numeric-fluents",
    ":negative-preconditions",
    ":equality",
    ":duration-inequalities",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Param(String),
    Object(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub name: String,
    pub args: Vec<Term>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Rational),
    Fluent(Atom),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Mul(Vec<Expr>, Pos),
    Div(Box<Expr>, Box<Expr>, Pos),
    Duration(Pos),
}

impl Expr {
    fn mentions_duration(&self) -> bool {
        match self {
            Expr::Duration(_) => true,
            Expr::Num(_) | Expr::Fluent(_) => false,
            Expr::Add(v) | Expr::Mul(v, _) => v.iter().any(Expr::mentions_duration),
            Expr::Sub(a, b) | Expr::Div(a, b, _) => a.mentions_duration() || b.mentions_duration(),
            Expr::Neg(a) => a.mentions_duration(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Fact { atom: Atom, positive: bool },
    Compare { cmp: Comparison, lhs: Expr, rhs: Expr },
    Equal { lhs: Term, rhs: Term, positive: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignKind {
    Assign,
    Increase,
    Decrease,
    ScaleUp,
    ScaleDown,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Eff {
    Fact { atom: Atom, positive: bool },
    Numeric { kind: AssignKind, fluent: Atom, expr: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedAction {
    pub name: String,
    pub params: Vec<(String, String)>,
    /// `[lower, upper]`; `None` for instantaneous actions.
    pub duration: Option<(Expr, Expr)>,
    pub start_pre: Vec<Cond>,
    pub lasting_pre: Vec<Cond>,
    pub end_pre: Vec<Cond>,
    pub start_eff: Vec<Eff>,
    pub end_eff: Vec<Eff>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    /// child type → parent type; every chain ends in `object`.
    pub types: BTreeMap<String, String>,
    pub constants: Vec<(String, String)>,
    pub predicates: BTreeMap<String, Vec<String>>,
    pub functions: BTreeMap<String, Vec<String>>,
    pub actions: Vec<LiftedAction>,
}

impl Domain {
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        for _ in 0..=self.types.len() + 1 {
            if cur == ancestor {
                return true;
            }
            match self.types.get(cur) {
                Some(parent) => cur = parent,
                None => return ancestor == "object",
            }
        }
        false
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == "object" || self.types.contains_key(ty)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Instance {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<(String, String)>,
    pub init_facts: Vec<Atom>,
    pub init_values: Vec<(Atom, Rational)>,
    pub goals: Vec<Cond>,
}

fn malformed(pos: Pos, message: impl Into<String>) -> PddlError {
    PddlError::Malformed {
        pos,
        message: message.into(),
    }
}

fn unsupported(pos: Pos, feature: impl Into<String>) -> PddlError {
    PddlError::Unsupported {
        pos,
        feature: feature.into(),
    }
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], PddlError> {
    e.list().ok_or_else(|| malformed(e.pos(), format!("expected a list for {what}, found `{e}`")))
}

fn expect_atom<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, PddlError> {
    e.atom().ok_or_else(|| malformed(e.pos(), format!("expected {what}, found `{e}`")))
}

/// `a b - t c` → `[(a, t), (b, t), (c, object)]`.
fn typed_list(items: &[Sexpr]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let a = expect_atom(&items[i], "a name")?;
        if a == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| malformed(items[i].pos(), "missing type after `-`"))?;
            if ty.head() == Some("either") {
                return Err(unsupported(ty.pos(), "either-types"));
            }
            let ty = expect_atom(ty, "a type name")?;
            out.extend(pending.drain(..).map(|n| (n, ty.to_string())));
            i += 2;
        } else {
            pending.push(a.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let top = read(text)?;
    let items = expect_list(&top, "the domain")?;
    if top.head() != Some("define") || items.len() < 2 || items[1].head() != Some("domain") {
        return Err(malformed(top.pos(), "expected `(define (domain <name>) ...)`"));
    }
    let name = items[1]
        .list()
        .and_then(|l| l.get(1))
        .and_then(Sexpr::atom)
        .ok_or_else(|| malformed(items[1].pos(), "missing domain name"))?;
    let mut domain = Domain {
        name: name.to_string(),
        ..Domain::default()
    };
    let mut action_sections = Vec::new();
    for section in &items[2..] {
        let body = expect_list(section, "a domain section")?;
        let key = section.head().unwrap_or("");
        match key {
            ":requirements" => {
                for r in &body[1..] {
                    let r = expect_atom(r, "a requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(unsupported(section.pos(), format!("requirement {r}")));
                    }
                    domain.requirements.push(r.to_string());
                }
            }
            ":types" => {
                let declared = typed_list(&body[1..])?;
                for (child, parent) in &declared {
                    if child != "object" {
                        domain.types.insert(child.clone(), parent.clone());
                    }
                }
                // A type that only appears as a parent is implicitly an object.
                for (_, parent) in declared {
                    if parent != "object" {
                        domain.types.entry(parent).or_insert_with(|| "object".to_string());
                    }
                }
            }
            ":constants" => domain.constants.extend(typed_list(&body[1..])?),
            ":predicates" => {
                for p in &body[1..] {
                    let (name, args) = signature(p)?;
                    domain.predicates.insert(name, args);
                }
            }
            ":functions" => {
                let mut i = 1;
                while i < body.len() {
                    if body[i].atom() == Some("-") {
                        let ty = body.get(i + 1).and_then(Sexpr::atom).unwrap_or("");
                        if ty != "number" {
                            return Err(unsupported(body[i].pos(), format!("function type `{ty}`")));
                        }
                        i += 2;
                        continue;
                    }
                    let (name, args) = signature(&body[i])?;
                    domain.functions.insert(name, args);
                    i += 1;
                }
            }
            ":durative-action" | ":action" => action_sections.push(section),
            ":derived" => return Err(unsupported(section.pos(), "derived predicates")),
            ":process" | ":event" => return Err(unsupported(section.pos(), "PDDL+ processes and events")),
            other => return Err(malformed(section.pos(), format!("unknown domain section `{other}`"))),
        }
    }
    for t in domain.types.values() {
        if !domain.has_type(t) {
            return Err(PddlError::Undeclared {
                pos: top.pos(),
                kind: "type",
                name: t.clone(),
            });
        }
    }
    for (_, ty) in &domain.constants {
        if !domain.has_type(ty) {
            return Err(PddlError::Undeclared {
                pos: top.pos(),
                kind: "type",
                name: ty.clone(),
            });
        }
    }
    for section in action_sections {
        let action = ActionParser::new(&domain).parse(section)?;
        domain.actions.push(action);
    }
    Ok(domain)
}

fn signature(e: &Sexpr) -> Result<(String, Vec<String>), PddlError> {
    let items = expect_list(e, "a signature")?;
    let name = expect_atom(
        items.first().ok_or_else(|| malformed(e.pos(), "empty signature"))?,
        "a name",
    )?;
    let params = typed_list(&items[1..])?;
    Ok((name.to_string(), params.into_iter().map(|(_, t)| t).collect()))
}

/// Shared machinery for reading conditions, expressions and effects.
struct Scope<'a> {
    domain: &'a Domain,
    params: BTreeMap<String, String>,
    objects: Option<&'a BTreeMap<String, String>>,
}

impl<'a> Scope<'a> {
    fn term(&self, e: &Sexpr) -> Result<Term, PddlError> {
        let a = expect_atom(e, "a term")?;
        if a.starts_with('?') {
            if !self.params.contains_key(a) {
                return Err(PddlError::Undeclared {
                    pos: e.pos(),
                    kind: "parameter",
                    name: a.to_string(),
                });
            }
            return Ok(Term::Param(a.to_string()));
        }
        let known_constant = self.domain.constants.iter().any(|(c, _)| c == a);
        let known_object = self.objects.map(|o| o.contains_key(a)).unwrap_or(false);
        if !known_constant && !known_object {
            return Err(PddlError::Undeclared {
                pos: e.pos(),
                kind: "object",
                name: a.to_string(),
            });
        }
        Ok(Term::Object(a.to_string()))
    }

    fn atom(&self, e: &Sexpr, table: &BTreeMap<String, Vec<String>>, kind: &'static str) -> Result<Atom, PddlError> {
        let items = expect_list(e, kind)?;
        let name = expect_atom(items.first().ok_or_else(|| malformed(e.pos(), "empty atom"))?, "a name")?;
        let sig = table.get(name).ok_or_else(|| PddlError::Undeclared {
            pos: e.pos(),
            kind,
            name: name.to_string(),
        })?;
        if sig.len() != items.len() - 1 {
            return Err(malformed(
                e.pos(),
                format!("`{name}` expects {} arguments, got {}", sig.len(), items.len() - 1),
            ));
        }
        let args = items[1..].iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
        Ok(Atom {
            name: name.to_string(),
            args,
            pos: e.pos(),
        })
    }

    fn expr(&self, e: &Sexpr) -> Result<Expr, PddlError> {
        match e {
            Sexpr::Atom(a, pos) => {
                if a == "?duration" {
                    return Ok(Expr::Duration(*pos));
                }
                if a == "#t" {
                    return Err(unsupported(*pos, "continuous effects (#t)"));
                }
                rational::parse(a)
                    .map(Expr::Num)
                    .map_err(|_| malformed(*pos, format!("expected a number or a fluent, found `{a}`")))
            }
            Sexpr::List(items, pos) => {
                let head = e.head().ok_or_else(|| malformed(*pos, "empty expression"))?;
                let args = || items[1..].iter().map(|x| self.expr(x)).collect::<Result<Vec<_>, _>>();
                match head {
                    "+" => Ok(Expr::Add(args()?)),
                    "*" => Ok(Expr::Mul(args()?, *pos)),
                    "-" => {
                        let mut a = args()?;
                        match a.len() {
                            1 => Ok(Expr::Neg(Box::new(a.remove(0)))),
                            2 => {
                                let rhs = a.pop().unwrap();
                                Ok(Expr::Sub(Box::new(a.pop().unwrap()), Box::new(rhs)))
                            }
                            _ => Err(malformed(*pos, "`-` takes one or two arguments")),
                        }
                    }
                    "/" => {
                        let mut a = args()?;
                        if a.len() != 2 {
                            return Err(malformed(*pos, "`/` takes two arguments"));
                        }
                        let rhs = a.pop().unwrap();
                        Ok(Expr::Div(Box::new(a.pop().unwrap()), Box::new(rhs), *pos))
                    }
                    _ => Ok(Expr::Fluent(self.atom(e, &self.domain.functions, "function")?)),
                }
            }
        }
    }

    /// Conjunctive condition (no temporal qualifiers).
    fn conditions(&self, e: &Sexpr, out: &mut Vec<Cond>) -> Result<(), PddlError> {
        let pos = e.pos();
        match e.head() {
            Some("and") => {
                for c in &e.list().unwrap()[1..] {
                    self.conditions(c, out)?;
                }
                Ok(())
            }
            Some("or") | Some("imply") => Err(unsupported(pos, "disjunctive conditions")),
            Some("exists") | Some("forall") => Err(unsupported(pos, "quantified conditions")),
            Some("not") => {
                let items = e.list().unwrap();
                if items.len() != 2 {
                    return Err(malformed(pos, "`not` takes one argument"));
                }
                let inner = &items[1];
                match inner.head() {
                    Some(op @ ("<" | "<=" | ">" | ">=")) => {
                        let negated = match op {
                            "<" => ">=",
                            "<=" => ">",
                            ">" => "<=",
                            _ => "<",
                        };
                        self.comparison(negated, inner, out)
                    }
                    Some("=") if self.is_term_equality(inner) => {
                        let items = inner.list().unwrap();
                        out.push(Cond::Equal {
                            lhs: self.term(&items[1])?,
                            rhs: self.term(&items[2])?,
                            positive: false,
                        });
                        Ok(())
                    }
                    Some("=") => Err(unsupported(pos, "negated numeric equality")),
                    _ => {
                        let atom = self.atom(inner, &self.domain.predicates, "predicate")?;
                        out.push(Cond::Fact { atom, positive: false });
                        Ok(())
                    }
                }
            }
            Some(op @ ("<" | "<=" | ">" | ">=")) => self.comparison(op, e, out),
            Some("=") if self.is_term_equality(e) => {
                let items = e.list().unwrap();
                out.push(Cond::Equal {
                    lhs: self.term(&items[1])?,
                    rhs: self.term(&items[2])?,
                    positive: true,
                });
                Ok(())
            }
            Some("=") => self.comparison("=", e, out),
            Some("at") | Some("over") => Err(malformed(pos, "temporal qualifier outside a durative action")),
            Some(_) => {
                let atom = self.atom(e, &self.domain.predicates, "predicate")?;
                out.push(Cond::Fact { atom, positive: true });
                Ok(())
            }
            None => Err(malformed(pos, format!("expected a condition, found `{e}`"))),
        }
    }

    fn is_term_equality(&self, e: &Sexpr) -> bool {
        let items = e.list().unwrap_or(&[]);
        items.len() == 3
            && items[1..].iter().all(|x| match x.atom() {
                Some(a) => a != "?duration" && rational::parse(a).is_err(),
                None => false,
            })
    }

    fn comparison(&self, op: &str, e: &Sexpr, out: &mut Vec<Cond>) -> Result<(), PddlError> {
        let items = e.list().unwrap();
        if items.len() != 3 {
            return Err(malformed(e.pos(), format!("`{op}` takes two arguments")));
        }
        let cmp = match op {
            "<" => Comparison::Lt,
            "<=" => Comparison::Le,
            "=" => Comparison::Eq,
            ">=" => Comparison::Ge,
            _ => Comparison::Gt,
        };
        let lhs = self.expr(&items[1])?;
        let rhs = self.expr(&items[2])?;
        if lhs.mentions_duration() || rhs.mentions_duration() {
            return Err(unsupported(e.pos(), "?duration inside conditions"));
        }
        out.push(Cond::Compare { cmp, lhs, rhs });
        Ok(())
    }

    fn effects(&self, e: &Sexpr, out: &mut Vec<Eff>) -> Result<(), PddlError> {
        let pos = e.pos();
        match e.head() {
            Some("and") => {
                for c in &e.list().unwrap()[1..] {
                    self.effects(c, out)?;
                }
                Ok(())
            }
            Some("when") => Err(unsupported(pos, "conditional effects")),
            Some("forall") => Err(unsupported(pos, "universally quantified effects")),
            Some("not") => {
                let items = e.list().unwrap();
                if items.len() != 2 {
                    return Err(malformed(pos, "`not` takes one argument"));
                }
                let atom = self.atom(&items[1], &self.domain.predicates, "predicate")?;
                out.push(Eff::Fact { atom, positive: false });
                Ok(())
            }
            Some(op @ ("increase" | "decrease" | "assign" | "scale-up" | "scale-down")) => {
                let items = e.list().unwrap();
                if items.len() != 3 {
                    return Err(malformed(pos, format!("`{op}` takes two arguments")));
                }
                let kind = match op {
                    "increase" => AssignKind::Increase,
                    "decrease" => AssignKind::Decrease,
                    "assign" => AssignKind::Assign,
                    "scale-up" => AssignKind::ScaleUp,
                    _ => AssignKind::ScaleDown,
                };
                let fluent = self.atom(&items[1], &self.domain.functions, "function")?;
                let expr = self.expr(&items[2])?;
                if expr.mentions_duration() {
                    return Err(unsupported(pos, "duration-dependent effects"));
                }
                out.push(Eff::Numeric { kind, fluent, expr });
                Ok(())
            }
            Some("at") | Some("over") => Err(malformed(pos, "temporal qualifier outside a durative action")),
            Some(_) => {
                let atom = self.atom(e, &self.domain.predicates, "predicate")?;
                out.push(Eff::Fact { atom, positive: true });
                Ok(())
            }
            None => Err(malformed(pos, format!("expected an effect, found `{e}`"))),
        }
    }
}

/// Splits `(at start X)`, `(over all X)`, `(at end X)` under conjunctions.
fn timed_parts<'e>(e: &'e Sexpr, out: &mut Vec<(&'static str, &'e Sexpr)>) -> Result<(), PddlError> {
    match e.head() {
        Some("and") => {
            for c in &e.list().unwrap()[1..] {
                timed_parts(c, out)?;
            }
            Ok(())
        }
        Some("at") | Some("over") => {
            let items = e.list().unwrap();
            if items.len() != 3 {
                return Err(malformed(e.pos(), "expected `(at start|end X)` or `(over all X)`"));
            }
            let when = match (items[0].atom(), items[1].atom()) {
                (Some("at"), Some("start")) => "start",
                (Some("at"), Some("end")) => "end",
                (Some("over"), Some("all")) => "all",
                (Some("at"), _) if items[1].atom().and_then(|a| rational::parse(a).ok()).is_some() => {
                    return Err(unsupported(e.pos(), "timed literals"))
                }
                _ => return Err(malformed(e.pos(), format!("unknown temporal qualifier in `{e}`"))),
            };
            out.push((when, &items[2]));
            Ok(())
        }
        None if e.list().map(|l| l.is_empty()).unwrap_or(false) => Ok(()),
        _ => Err(malformed(e.pos(), format!("durative-action part without a temporal qualifier: `{e}`"))),
    }
}

struct ActionParser<'a> {
    domain: &'a Domain,
}

impl<'a> ActionParser<'a> {
    fn new(domain: &'a Domain) -> Self {
        ActionParser { domain }
    }

    fn parse(&self, section: &Sexpr) -> Result<LiftedAction, PddlError> {
        let items = section.list().unwrap();
        let durative = section.head() == Some(":durative-action");
        let name = expect_atom(
            items.get(1).ok_or_else(|| malformed(section.pos(), "action without a name"))?,
            "an action name",
        )?
        .to_string();
        let mut fields: BTreeMap<&str, &Sexpr> = BTreeMap::new();
        let mut i = 2;
        while i < items.len() {
            let key = expect_atom(&items[i], "an action keyword")?;
            let val = items
                .get(i + 1)
                .ok_or_else(|| malformed(items[i].pos(), format!("missing value for `{key}`")))?;
            fields.insert(key, val);
            i += 2;
        }
        let params = match fields.get(":parameters") {
            Some(p) => typed_list(expect_list(p, "parameters")?)?,
            None => Vec::new(),
        };
        for (p, ty) in &params {
            if !p.starts_with('?') {
                return Err(malformed(section.pos(), format!("parameter `{p}` must start with `?`")));
            }
            if !self.domain.has_type(ty) {
                return Err(PddlError::Undeclared {
                    pos: section.pos(),
                    kind: "type",
                    name: ty.clone(),
                });
            }
        }
        let scope = Scope {
            domain: self.domain,
            params: params.iter().cloned().collect(),
            objects: None,
        };
        let mut action = LiftedAction {
            name,
            params,
            duration: None,
            start_pre: Vec::new(),
            lasting_pre: Vec::new(),
            end_pre: Vec::new(),
            start_eff: Vec::new(),
            end_eff: Vec::new(),
            pos: section.pos(),
        };
        if durative {
            for key in fields.keys() {
                if !matches!(*key, ":parameters" | ":duration" | ":condition" | ":effect") {
                    return Err(malformed(section.pos(), format!("unknown keyword `{key}`")));
                }
            }
            let dur = fields
                .get(":duration")
                .ok_or_else(|| malformed(section.pos(), "durative action without :duration"))?;
            action.duration = Some(self.duration(&scope, dur)?);
            if let Some(cond) = fields.get(":condition") {
                let mut parts = Vec::new();
                timed_parts(cond, &mut parts)?;
                for (when, c) in parts {
                    let target = match when {
                        "start" => &mut action.start_pre,
                        "all" => &mut action.lasting_pre,
                        _ => &mut action.end_pre,
                    };
                    scope.conditions(c, target)?;
                }
            }
            if let Some(eff) = fields.get(":effect") {
                let mut parts = Vec::new();
                timed_parts(eff, &mut parts)?;
                for (when, e) in parts {
                    let target = match when {
                        "start" => &mut action.start_eff,
                        "end" => &mut action.end_eff,
                        _ => return Err(unsupported(e.pos(), "continuous effects (over all)")),
                    };
                    scope.effects(e, target)?;
                }
            }
        } else {
            for key in fields.keys() {
                if !matches!(*key, ":parameters" | ":precondition" | ":effect") {
                    return Err(malformed(section.pos(), format!("unknown keyword `{key}`")));
                }
            }
            if let Some(c) = fields.get(":precondition") {
                scope.conditions(c, &mut action.start_pre)?;
            }
            if let Some(e) = fields.get(":effect") {
                scope.effects(e, &mut action.start_eff)?;
            }
        }
        Ok(action)
    }

    fn duration(&self, scope: &Scope, e: &Sexpr) -> Result<(Expr, Expr), PddlError> {
        let mut lower = None;
        let mut upper = None;
        self.duration_parts(scope, e, &mut lower, &mut upper)?;
        match (lower, upper) {
            (Some(l), Some(u)) => Ok((l, u)),
            (None, _) => Err(unsupported(e.pos(), "duration without a lower bound")),
            (_, None) => Err(unsupported(e.pos(), "duration without an upper bound")),
        }
    }

    fn duration_parts(
        &self,
        scope: &Scope,
        e: &Sexpr,
        lower: &mut Option<Expr>,
        upper: &mut Option<Expr>,
    ) -> Result<(), PddlError> {
        match e.head() {
            Some("and") => {
                for c in &e.list().unwrap()[1..] {
                    self.duration_parts(scope, c, lower, upper)?;
                }
                Ok(())
            }
            Some("at") => {
                let items = e.list().unwrap();
                if items.len() == 3 && matches!(items[1].atom(), Some("start") | Some("end")) {
                    self.duration_parts(scope, &items[2], lower, upper)
                } else {
                    Err(malformed(e.pos(), "malformed duration constraint"))
                }
            }
            Some(op @ ("=" | "<=" | ">=")) => {
                let items = e.list().unwrap();
                if items.len() != 3 || items[1].atom() != Some("?duration") {
                    return Err(unsupported(e.pos(), "duration constraint not of the form (op ?duration e)"));
                }
                let value = scope.expr(&items[2])?;
                if value.mentions_duration() {
                    return Err(malformed(e.pos(), "recursive duration constraint"));
                }
                if op != "<=" {
                    *lower = Some(value.clone());
                }
                if op != ">=" {
                    *upper = Some(value);
                }
                Ok(())
            }
            Some("<") | Some(">") => Err(unsupported(e.pos(), "strict duration inequalities")),
            _ => Err(malformed(e.pos(), format!("malformed duration constraint `{e}`"))),
        }
    }
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Instance, PddlError> {
    let top = read(text)?;
    let items = expect_list(&top, "the problem")?;
    if top.head() != Some("define") || items.len() < 2 || items[1].head() != Some("problem") {
        return Err(malformed(top.pos(), "expected `(define (problem <name>) ...)`"));
    }
    let mut inst = Instance {
        name: items[1]
            .list()
            .and_then(|l| l.get(1))
            .and_then(Sexpr::atom)
            .unwrap_or("")
            .to_string(),
        ..Instance::default()
    };
    let mut objects: BTreeMap<String, String> = domain.constants.iter().cloned().collect();
    let mut init = None;
    let mut goal = None;
    for section in &items[2..] {
        let body = expect_list(section, "a problem section")?;
        match section.head().unwrap_or("") {
            ":domain" => {
                inst.domain_name = body.get(1).and_then(Sexpr::atom).unwrap_or("").to_string();
                if inst.domain_name != domain.name {
                    return Err(malformed(
                        section.pos(),
                        format!("problem is for domain `{}`, not `{}`", inst.domain_name, domain.name),
                    ));
                }
            }
            ":objects" => {
                for (o, ty) in typed_list(&body[1..])? {
                    if !domain.has_type(&ty) {
                        return Err(PddlError::Undeclared {
                            pos: section.pos(),
                            kind: "type",
                            name: ty,
                        });
                    }
                    objects.insert(o.clone(), ty.clone());
                    inst.objects.push((o, ty));
                }
            }
            ":init" => init = Some(section),
            ":goal" => goal = Some(section),
            ":metric" => {}
            ":requirements" => {}
            other => return Err(malformed(section.pos(), format!("unknown problem section `{other}`"))),
        }
    }
    let scope = Scope {
        domain,
        params: BTreeMap::new(),
        objects: Some(&objects),
    };
    if let Some(init) = init {
        let mut seen_values = BTreeSet::new();
        for fact in &init.list().unwrap()[1..] {
            match fact.head() {
                Some("=") => {
                    let items = fact.list().unwrap();
                    if items.len() != 3 {
                        return Err(malformed(fact.pos(), "`=` takes two arguments"));
                    }
                    let fluent = scope.atom(&items[1], &domain.functions, "function")?;
                    let value = expect_atom(&items[2], "a number")
                        .and_then(|a| rational::parse(a).map_err(|_| malformed(items[2].pos(), "expected a number")))?;
                    if !seen_values.insert(ground_key(&fluent.name, &fluent.args)) {
                        return Err(malformed(fact.pos(), "fluent initialized twice"));
                    }
                    inst.init_values.push((fluent, value));
                }
                Some("at") => return Err(unsupported(fact.pos(), "timed initial literals")),
                Some("not") => {}
                _ => inst.init_facts.push(scope.atom(fact, &domain.predicates, "predicate")?),
            }
        }
    }
    if let Some(goal) = goal {
        let body = goal.list().unwrap();
        if body.len() != 2 {
            return Err(malformed(goal.pos(), "`:goal` takes one condition"));
        }
        scope.conditions(&body[1], &mut inst.goals)?;
    }
    for (o, ty) in &inst.objects {
        if !domain.is_subtype(ty, "object") {
            return Err(malformed(goal.map(Sexpr::pos).unwrap_or_default(), format!("bad type for `{o}`")));
        }
    }
    Ok(inst)
}

/// `(name a b)` for a ground atom; the canonical variable name.
pub fn ground_key(name: &str, args: &[Term]) -> String {
    let mut s = format!("({name}");
    for a in args {
        s.push(' ');
        match a {
            Term::Param(p) | Term::Object(p) => s.push_str(p),
        }
    }
    s.push(')');
    s
}
