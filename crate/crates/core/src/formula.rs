//! Hash-consed formula DAG with canonical linear arithmetic.
//!
//! Numeric terms are either atoms (variables, `ite`, nonlinear products) or
//! linear combinations `Σ c·atom + k` over atoms. Comparisons are kept in
//! the form `lin ⊵ 0` with `⊵ ∈ {>, ≥, =}` and scaled so that the first
//! coefficient has absolute value one. Conjunctions and disjunctions are
//! flattened, deduplicated and sorted, so equal formulas built through the
//! API get equal ids.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::model::Comparison;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    Real,
}

impl Sort {
    fn join(self, other: Sort) -> Sort {
        match (self, other) {
            (Sort::Int, Sort::Int) => Sort::Int,
            (Sort::Bool, Sort::Bool) => Sort::Bool,
            _ => Sort::Real,
        }
    }

    pub fn smt(self) -> &'static str {
        match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
            Sort::Real => "Real",
        }
    }
}

/// Relation of a normalised comparison `lin ⊵ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Gt,
    Ge,
    Eq,
}

impl Rel {
    pub fn smt(self) -> &'static str {
        match self {
            Rel::Gt => ">",
            Rel::Ge => ">=",
            Rel::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Const(bool),
    /// Index into [`Store::vars`].
    Var(usize),
    Not(TermId),
    And(Vec<TermId>),
    Or(Vec<TermId>),
    Implies(TermId, TermId),
    Iff(TermId, TermId),
    Num(Rational),
    /// `Σ c·atom + constant` with at least one atom, sorted by atom id.
    Lin(Vec<(TermId, Rational)>, Rational),
    Mul(TermId, TermId),
    Ite(TermId, TermId, TermId),
    Cmp(Rel, TermId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub sort: Sort,
    pub term: TermId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Num(Rational),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Num(_) => None,
        }
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            Value::Num(n) => Some(n),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(n) => write!(f, "{}", rational::format(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no value for variable `{0}`")]
    Unassigned(String),
    #[error("variable `{name}` has a value of the wrong sort")]
    WrongSort { name: String },
}

#[derive(Debug, Default, Clone)]
pub struct Store {
    nodes: Vec<Node>,
    sorts: Vec<Sort>,
    index: HashMap<Node, TermId>,
    vars: Vec<VarDecl>,
    var_index: HashMap<String, TermId>,
}

/// Linear view of a numeric term.
#[derive(Debug, Clone, Default)]
struct Linear {
    terms: BTreeMap<TermId, Rational>,
    constant: Rational,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    fn intern(&mut self, node: Node, sort: Sort) -> TermId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = TermId(u32::try_from(self.nodes.len()).expect("formula store overflow"));
        self.nodes.push(node.clone());
        self.sorts.push(sort);
        self.index.insert(node, id);
        id
    }

    pub fn node(&self, id: TermId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn sort(&self, id: TermId) -> Sort {
        self.sorts[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn var_decl(&self, id: TermId) -> Option<&VarDecl> {
        match self.node(id) {
            Node::Var(k) => Some(&self.vars[*k]),
            _ => None,
        }
    }

    /// Declares (or returns the existing) variable `name`.
    pub fn var(&mut self, name: &str, sort: Sort) -> TermId {
        if let Some(&id) = self.var_index.get(name) {
            assert_eq!(self.sort(id), sort, "variable `{name}` redeclared with another sort");
            return id;
        }
        let k = self.vars.len();
        let term = self.intern(Node::Var(k), sort);
        self.vars.push(VarDecl {
            name: name.to_string(),
            sort,
            term,
        });
        self.var_index.insert(name.to_string(), term);
        term
    }

    pub fn lookup(&self, name: &str) -> Option<TermId> {
        self.var_index.get(name).copied()
    }

    // ---- Boolean connectives -------------------------------------------

    pub fn bool(&mut self, b: bool) -> TermId {
        self.intern(Node::Const(b), Sort::Bool)
    }

    pub fn tru(&mut self) -> TermId {
        self.bool(true)
    }

    pub fn fls(&mut self) -> TermId {
        self.bool(false)
    }

    fn const_bool(&self, id: TermId) -> Option<bool> {
        match self.node(id) {
            Node::Const(b) => Some(*b),
            _ => None,
        }
    }

    pub fn not(&mut self, a: TermId) -> TermId {
        debug_assert_eq!(self.sort(a), Sort::Bool);
        match self.node(a).clone() {
            Node::Const(b) => self.bool(!b),
            Node::Not(x) => x,
            Node::Cmp(Rel::Gt, l) => {
                let neg = self.neg(l);
                self.cmp_zero(neg, Rel::Ge)
            }
            Node::Cmp(Rel::Ge, l) => {
                let neg = self.neg(l);
                self.cmp_zero(neg, Rel::Gt)
            }
            _ => self.intern(Node::Not(a), Sort::Bool),
        }
    }

    fn junction(&mut self, items: impl IntoIterator<Item = TermId>, conj: bool) -> TermId {
        let mut flat = Vec::new();
        for it in items {
            debug_assert_eq!(self.sort(it), Sort::Bool);
            match (self.node(it), conj) {
                (Node::Const(b), _) if *b == conj => {}
                (Node::Const(_), _) => return self.bool(!conj),
                (Node::And(xs), true) | (Node::Or(xs), false) => flat.extend(xs.iter().copied()),
                _ => flat.push(it),
            }
        }
        flat.sort();
        flat.dedup();
        match flat.len() {
            0 => self.bool(conj),
            1 => flat[0],
            _ if conj => self.intern(Node::And(flat), Sort::Bool),
            _ => self.intern(Node::Or(flat), Sort::Bool),
        }
    }

    pub fn and(&mut self, items: impl IntoIterator<Item = TermId>) -> TermId {
        self.junction(items, true)
    }

    pub fn or(&mut self, items: impl IntoIterator<Item = TermId>) -> TermId {
        self.junction(items, false)
    }

    pub fn and2(&mut self, a: TermId, b: TermId) -> TermId {
        self.and([a, b])
    }

    pub fn or2(&mut self, a: TermId, b: TermId) -> TermId {
        self.or([a, b])
    }

    pub fn implies(&mut self, a: TermId, b: TermId) -> TermId {
        match (self.const_bool(a), self.const_bool(b)) {
            (Some(true), _) => b,
            (Some(false), _) | (_, Some(true)) => self.tru(),
            (_, Some(false)) => self.not(a),
            _ if a == b => self.tru(),
            _ => self.intern(Node::Implies(a, b), Sort::Bool),
        }
    }

    pub fn iff(&mut self, a: TermId, b: TermId) -> TermId {
        match (self.const_bool(a), self.const_bool(b)) {
            (Some(true), _) => b,
            (_, Some(true)) => a,
            (Some(false), _) => self.not(b),
            (_, Some(false)) => self.not(a),
            _ if a == b => self.tru(),
            _ => {
                let (x, y) = if a < b { (a, b) } else { (b, a) };
                self.intern(Node::Iff(x, y), Sort::Bool)
            }
        }
    }

    // ---- arithmetic ------------------------------------------------------

    pub fn num(&mut self, r: Rational) -> TermId {
        let sort = if r.is_integer() { Sort::Int } else { Sort::Real };
        self.intern(Node::Num(r), sort)
    }

    pub fn int(&mut self, n: i64) -> TermId {
        self.num(Rational::from_integer(n.into()))
    }

    pub fn const_num(&self, id: TermId) -> Option<&Rational> {
        match self.node(id) {
            Node::Num(r) => Some(r),
            _ => None,
        }
    }

    fn linear(&self, id: TermId) -> Linear {
        debug_assert_ne!(self.sort(id), Sort::Bool);
        match self.node(id) {
            Node::Num(r) => Linear {
                terms: BTreeMap::new(),
                constant: r.clone(),
            },
            Node::Lin(ts, k) => Linear {
                terms: ts.iter().cloned().collect(),
                constant: k.clone(),
            },
            _ => Linear {
                terms: BTreeMap::from([(id, Rational::one())]),
                constant: Rational::zero(),
            },
        }
    }

    fn from_linear(&mut self, lin: Linear) -> TermId {
        let terms: Vec<(TermId, Rational)> = lin.terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if terms.is_empty() {
            return self.num(lin.constant);
        }
        if terms.len() == 1 && terms[0].1.is_one() && lin.constant.is_zero() {
            return terms[0].0;
        }
        let integral = terms.iter().all(|(t, c)| c.is_integer() && self.sort(*t) == Sort::Int)
            && lin.constant.is_integer();
        let sort = if integral { Sort::Int } else { Sort::Real };
        self.intern(Node::Lin(terms, lin.constant), sort)
    }

    pub fn add(&mut self, a: TermId, b: TermId) -> TermId {
        self.sum([a, b])
    }

    pub fn sum(&mut self, items: impl IntoIterator<Item = TermId>) -> TermId {
        let mut acc = Linear::default();
        for it in items {
            let l = self.linear(it);
            acc.constant += l.constant;
            for (t, c) in l.terms {
                *acc.terms.entry(t).or_insert_with(Rational::zero) += c;
            }
        }
        self.from_linear(acc)
    }

    pub fn scale(&mut self, a: TermId, k: &Rational) -> TermId {
        let mut l = self.linear(a);
        l.constant *= k;
        for c in l.terms.values_mut() {
            *c *= k;
        }
        self.from_linear(l)
    }

    pub fn neg(&mut self, a: TermId) -> TermId {
        self.scale(a, &-Rational::one())
    }

    pub fn sub(&mut self, a: TermId, b: TermId) -> TermId {
        let nb = self.neg(b);
        self.add(a, nb)
    }

    /// Product; linear whenever one side is constant.
    pub fn mul(&mut self, a: TermId, b: TermId) -> TermId {
        if let Some(k) = self.const_num(a).cloned() {
            return self.scale(b, &k);
        }
        if let Some(k) = self.const_num(b).cloned() {
            return self.scale(a, &k);
        }
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        let sort = self.sort(x).join(self.sort(y));
        self.intern(Node::Mul(x, y), sort)
    }

    pub fn ite(&mut self, c: TermId, t: TermId, e: TermId) -> TermId {
        debug_assert_eq!(self.sort(c), Sort::Bool);
        match self.const_bool(c) {
            Some(true) => return t,
            Some(false) => return e,
            None => {}
        }
        if t == e {
            return t;
        }
        let sort = self.sort(t).join(self.sort(e));
        self.intern(Node::Ite(c, t, e), sort)
    }

    /// `lin ⊵ 0`, normalised.
    fn cmp_zero(&mut self, lin: TermId, rel: Rel) -> TermId {
        let mut l = self.linear(lin);
        let first = match l.terms.iter().find(|(_, c)| !c.is_zero()) {
            None => {
                let zero = Rational::zero();
                let holds = match rel {
                    Rel::Gt => l.constant > zero,
                    Rel::Ge => l.constant >= zero,
                    Rel::Eq => l.constant == zero,
                };
                return self.bool(holds);
            }
            Some((_, c)) => c.clone(),
        };
        let k = if rel == Rel::Eq { first.recip() } else { first.abs().recip() };
        if !k.is_one() {
            l.constant *= &k;
            for c in l.terms.values_mut() {
                *c *= &k;
            }
        }
        let t = self.from_linear(l);
        self.intern(Node::Cmp(rel, t), Sort::Bool)
    }

    /// `a ⊵ b` for any of the five comparison operators.
    pub fn cmp(&mut self, a: TermId, op: Comparison, b: TermId) -> TermId {
        let (l, rel) = match op {
            Comparison::Gt => (self.sub(a, b), Rel::Gt),
            Comparison::Ge => (self.sub(a, b), Rel::Ge),
            Comparison::Eq => (self.sub(a, b), Rel::Eq),
            Comparison::Le => (self.sub(b, a), Rel::Ge),
            Comparison::Lt => (self.sub(b, a), Rel::Gt),
        };
        self.cmp_zero(l, rel)
    }

    pub fn gt(&mut self, a: TermId, b: TermId) -> TermId {
        self.cmp(a, Comparison::Gt, b)
    }

    pub fn ge(&mut self, a: TermId, b: TermId) -> TermId {
        self.cmp(a, Comparison::Ge, b)
    }

    pub fn lt(&mut self, a: TermId, b: TermId) -> TermId {
        self.cmp(a, Comparison::Lt, b)
    }

    pub fn le(&mut self, a: TermId, b: TermId) -> TermId {
        self.cmp(a, Comparison::Le, b)
    }

    pub fn eq(&mut self, a: TermId, b: TermId) -> TermId {
        self.cmp(a, Comparison::Eq, b)
    }

    /// `a > n` for an integer constant `n`.
    pub fn gt_int(&mut self, a: TermId, n: i64) -> TermId {
        let c = self.int(n);
        self.gt(a, c)
    }

    pub fn le_int(&mut self, a: TermId, n: i64) -> TermId {
        let c = self.int(n);
        self.le(a, c)
    }

    pub fn eq_int(&mut self, a: TermId, n: i64) -> TermId {
        let c = self.int(n);
        self.eq(a, c)
    }

    // ---- traversal and evaluation ----------------------------------------

    pub fn children(&self, id: TermId) -> Vec<TermId> {
        match self.node(id) {
            Node::Const(_) | Node::Var(_) | Node::Num(_) => vec![],
            Node::Not(a) | Node::Cmp(_, a) => vec![*a],
            Node::And(xs) | Node::Or(xs) => xs.clone(),
            Node::Implies(a, b) | Node::Iff(a, b) | Node::Mul(a, b) => vec![*a, *b],
            Node::Lin(ts, _) => ts.iter().map(|(t, _)| *t).collect(),
            Node::Ite(c, t, e) => vec![*c, *t, *e],
        }
    }

    /// True when a nonlinear product is reachable from `roots`.
    pub fn has_nonlinear(&self, roots: &[TermId]) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<TermId> = roots.to_vec();
        while let Some(t) = stack.pop() {
            if std::mem::replace(&mut seen[t.index()], true) {
                continue;
            }
            if matches!(self.node(t), Node::Mul(..)) {
                return true;
            }
            stack.extend(self.children(t));
        }
        false
    }

    /// Evaluates `root` under `assign`, exactly.
    pub fn eval(&self, root: TermId, assign: &dyn Fn(&str) -> Option<Value>) -> Result<Value, EvalError> {
        let mut memo: HashMap<TermId, Value> = HashMap::new();
        self.eval_memo(root, assign, &mut memo)
    }

    pub fn eval_memo(
        &self,
        root: TermId,
        assign: &dyn Fn(&str) -> Option<Value>,
        memo: &mut HashMap<TermId, Value>,
    ) -> Result<Value, EvalError> {
        // Iterative post-order so deep σ chains do not overflow the stack.
        let mut stack = vec![(root, false)];
        while let Some((t, expanded)) = stack.pop() {
            if memo.contains_key(&t) {
                continue;
            }
            if !expanded {
                stack.push((t, true));
                for c in self.children(t) {
                    if !memo.contains_key(&c) {
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let b = |memo: &HashMap<TermId, Value>, x: &TermId| memo[x].as_bool().expect("well-sorted");
            let n = |memo: &HashMap<TermId, Value>, x: &TermId| memo[x].as_num().expect("well-sorted").clone();
            let v = match self.node(t) {
                Node::Const(c) => Value::Bool(*c),
                Node::Num(r) => Value::Num(r.clone()),
                Node::Var(k) => {
                    let decl = &self.vars[*k];
                    let v = assign(&decl.name).ok_or_else(|| EvalError::Unassigned(decl.name.clone()))?;
                    let ok = match (&v, decl.sort) {
                        (Value::Bool(_), Sort::Bool) => true,
                        (Value::Num(r), Sort::Int) => r.is_integer(),
                        (Value::Num(_), Sort::Real) => true,
                        _ => false,
                    };
                    if !ok {
                        return Err(EvalError::WrongSort {
                            name: decl.name.clone(),
                        });
                    }
                    v
                }
                Node::Not(a) => Value::Bool(!b(memo, a)),
                Node::And(xs) => Value::Bool(xs.iter().all(|x| b(memo, x))),
                Node::Or(xs) => Value::Bool(xs.iter().any(|x| b(memo, x))),
                Node::Implies(x, y) => Value::Bool(!b(memo, x) || b(memo, y)),
                Node::Iff(x, y) => Value::Bool(b(memo, x) == b(memo, y)),
                Node::Lin(ts, k) => {
                    let mut acc = k.clone();
                    for (x, c) in ts {
                        acc += n(memo, x) * c;
                    }
                    Value::Num(acc)
                }
                Node::Mul(x, y) => Value::Num(n(memo, x) * n(memo, y)),
                Node::Ite(c, x, y) => {
                    if b(memo, c) {
                        memo[x].clone()
                    } else {
                        memo[y].clone()
                    }
                }
                Node::Cmp(rel, x) => {
                    let v = n(memo, x);
                    let zero = Rational::zero();
                    Value::Bool(match rel {
                        Rel::Gt => v > zero,
                        Rel::Ge => v >= zero,
                        Rel::Eq => v == zero,
                    })
                }
            };
            memo.insert(t, v);
        }
        Ok(memo[&root].clone())
    }

    /// Tree-shaped rendering for debugging and messages.
    pub fn display(&self, id: TermId) -> String {
        let mut out = String::new();
        self.render(id, &mut out);
        out
    }

    fn render(&self, id: TermId, out: &mut String) {
        use std::fmt::Write;
        let list = |store: &Store, head: &str, xs: &[TermId], out: &mut String| {
            out.push('(');
            out.push_str(head);
            for x in xs {
                out.push(' ');
                store.render(*x, out);
            }
            out.push(')');
        };
        match self.node(id) {
            Node::Const(b) => out.push_str(if *b { "true" } else { "false" }),
            Node::Var(k) => out.push_str(&self.vars[*k].name),
            Node::Num(r) => out.push_str(&rational::format(r)),
            Node::Not(a) => list(self, "not", &[*a], out),
            Node::And(xs) => list(self, "and", xs, out),
            Node::Or(xs) => list(self, "or", xs, out),
            Node::Implies(a, b) => list(self, "=>", &[*a, *b], out),
            Node::Iff(a, b) => list(self, "=", &[*a, *b], out),
            Node::Mul(a, b) => list(self, "*", &[*a, *b], out),
            Node::Ite(c, t, e) => list(self, "ite", &[*c, *t, *e], out),
            Node::Cmp(rel, a) => {
                let _ = write!(out, "({} ", rel.smt());
                self.render(*a, out);
                out.push_str(" 0)");
            }
            Node::Lin(ts, k) => {
                out.push_str("(+");
                for (t, c) in ts {
                    out.push(' ');
                    if c.is_one() {
                        self.render(*t, out);
                    } else {
                        let _ = write!(out, "(* {} ", rational::format(c));
                        self.render(*t, out);
                        out.push(')');
                    }
                }
                if !k.is_zero() {
                    let _ = write!(out, " {}", rational::format(k));
                }
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn hash_consing_identifies_equal_linear_terms() {
        let mut s = Store::new();
        let x = s.var("x", Sort::Real);
        let y = s.var("y", Sort::Real);
        let a = s.add(x, y);
        let b = s.add(y, x);
        assert_eq!(a, b);
        let two_x = s.scale(x, &int(2));
        let x_plus_x = s.add(x, x);
        assert_eq!(two_x, x_plus_x);
        let zero = s.sub(a, b);
        assert_eq!(s.const_num(zero), Some(&int(0)));
    }

    #[test]
    fn comparisons_normalise() {
        let mut s = Store::new();
        let x = s.var("x", Sort::Real);
        let y = s.var("y", Sort::Real);
        let lt = s.lt(y, x);
        let gt = s.gt(x, y);
        assert_eq!(lt, gt);
        let two_x = s.scale(x, &int(2));
        let two_y = s.scale(y, &int(2));
        assert_eq!(s.gt(two_x, two_y), gt);
        let e1 = s.eq(x, y);
        let e2 = s.eq(y, x);
        assert_eq!(e1, e2);
        let not_gt = s.not(gt);
        assert_eq!(not_gt, s.le(x, y));
        let three = s.int(3);
        let four = s.int(4);
        assert_eq!(s.lt(three, four), s.tru());
    }

    #[test]
    fn connectives_fold_and_flatten() {
        let mut s = Store::new();
        let p = s.var("p", Sort::Bool);
        let q = s.var("q", Sort::Bool);
        let r = s.var("r", Sort::Bool);
        let t = s.tru();
        let f = s.fls();
        let pq = s.and([p, q]);
        assert_eq!(s.and([r, pq, t]), s.and([q, r, p, p]));
        assert_eq!(s.and([p, f]), f);
        assert_eq!(s.or([p, t]), t);
        assert_eq!(s.implies(t, p), p);
        assert_eq!(s.implies(p, f), s.not(p));
        let np = s.not(p);
        assert_eq!(s.not(np), p);
        assert_eq!(s.iff(p, q), s.iff(q, p));
    }

    #[test]
    fn ite_and_mul_fold_constants() {
        let mut s = Store::new();
        let a = s.var("a", Sort::Int);
        let x = s.var("x", Sort::Real);
        let t = s.tru();
        assert_eq!(s.ite(t, a, x), a);
        let p = s.var("p", Sort::Bool);
        assert_eq!(s.ite(p, x, x), x);
        let three = s.int(3);
        let m = s.mul(three, a);
        assert_eq!(m, s.scale(a, &int(3)));
        assert_eq!(s.sort(m), Sort::Int);
        let ax = s.mul(a, x);
        assert!(matches!(s.node(ax), Node::Mul(..)));
        assert!(s.has_nonlinear(&[ax]));
        let half = s.num(ratio(1, 2));
        let mixed = s.add(a, half);
        assert_eq!(s.sort(mixed), Sort::Real);
    }

    #[test]
    fn evaluation_is_exact() {
        let mut s = Store::new();
        let a = s.var("a", Sort::Int);
        let x = s.var("x", Sort::Real);
        let eps = s.num(ratio(1, 1000));
        let sum = s.add(x, eps);
        let pos = s.gt_int(a, 0);
        let it = s.ite(pos, sum, x);
        let f = s.eq(it, x);
        let assign = |n: &str| match n {
            "a" => Some(Value::Num(int(0))),
            "x" => Some(Value::Num(ratio(1, 3))),
            _ => None,
        };
        assert_eq!(s.eval(f, &assign).unwrap(), Value::Bool(true));
        assert_eq!(s.eval(it, &assign).unwrap(), Value::Num(ratio(1, 3)));
        let bad = |_: &str| None;
        assert!(matches!(s.eval(f, &bad), Err(EvalError::Unassigned(_))));
    }
}
