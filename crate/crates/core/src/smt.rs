//! SMT-LIB emission, the external solver process and model parsing.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};

use crate::formula::{Node, Sort, Store, TermId, Value};
use crate::rational::{self, Rational};

pub const DEFAULT_SOLVER: &str = "z3";

/// A symbol as SMT-LIB accepts it, quoted when needed.
pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn int_literal(r: &Rational) -> String {
    let n = r.numer();
    if n.is_negative() {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

fn real_literal(r: &Rational) -> String {
    let body = if r.is_integer() {
        format!("{}.0", r.numer().abs())
    } else {
        format!("(/ {}.0 {}.0)", r.numer().abs(), r.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

struct Emitter<'s> {
    store: &'s Store,
    /// Shared subterms bound with `define-fun`.
    names: HashMap<TermId, String>,
}

impl Emitter<'_> {
    fn term(&self, id: TermId, real: bool, out: &mut String) {
        let sort = self.store.sort(id);
        if real && sort == Sort::Int {
            if let Node::Num(r) = self.store.node(id) {
                out.push_str(&real_literal(r));
                return;
            }
            out.push_str("(to_real ");
            self.term(id, false, out);
            out.push(')');
            return;
        }
        if let Some(n) = self.names.get(&id) {
            out.push_str(n);
            return;
        }
        self.body(id, out);
    }

    fn body(&self, id: TermId, out: &mut String) {
        let s = self.store;
        let real = s.sort(id) == Sort::Real;
        let list = |head: &str, xs: &[TermId], as_real: bool, out: &mut String| {
            out.push('(');
            out.push_str(head);
            for x in xs {
                out.push(' ');
                self.term(*x, as_real, out);
            }
            out.push(')');
        };
        match s.node(id) {
            Node::Const(b) => out.push_str(if *b { "true" } else { "false" }),
            Node::Var(k) => out.push_str(&symbol(&s.vars()[*k].name)),
            Node::Num(r) if real => out.push_str(&real_literal(r)),
            Node::Num(r) => out.push_str(&int_literal(r)),
            Node::Not(a) => list("not", &[*a], false, out),
            Node::And(xs) => list("and", xs, false, out),
            Node::Or(xs) => list("or", xs, false, out),
            Node::Implies(a, b) => list("=>", &[*a, *b], false, out),
            Node::Iff(a, b) => list("=", &[*a, *b], false, out),
            Node::Mul(a, b) => list("*", &[*a, *b], real, out),
            Node::Ite(c, t, e) => {
                out.push_str("(ite ");
                self.term(*c, false, out);
                out.push(' ');
                self.term(*t, real, out);
                out.push(' ');
                self.term(*e, real, out);
                out.push(')');
            }
            Node::Cmp(rel, a) => {
                let _ = write!(out, "({} ", rel.smt());
                self.term(*a, false, out);
                out.push(' ');
                let zero = Rational::zero();
                out.push_str(&if real_sorted(s, *a) { real_literal(&zero) } else { int_literal(&zero) });
                out.push(')');
            }
            Node::Lin(ts, k) => {
                out.push_str("(+");
                for (t, c) in ts {
                    out.push(' ');
                    if c == &Rational::from_integer(1.into()) {
                        self.term(*t, real, out);
                    } else {
                        out.push_str("(* ");
                        out.push_str(&if real { real_literal(c) } else { int_literal(c) });
                        out.push(' ');
                        self.term(*t, real, out);
                        out.push(')');
                    }
                }
                out.push(' ');
                out.push_str(&if real { real_literal(k) } else { int_literal(k) });
                out.push(')');
            }
        }
    }
}

fn real_sorted(s: &Store, id: TermId) -> bool {
    s.sort(id) == Sort::Real
}

/// Deterministic SMT-LIB script asserting every root.
pub fn emit_script(store: &Store, roots: &[TermId], get_values: bool) -> String {
    // Reference counts over the DAG reachable from the roots.
    let mut refs: HashMap<TermId, usize> = HashMap::new();
    let mut stack: Vec<TermId> = roots.to_vec();
    while let Some(t) = stack.pop() {
        let c = refs.entry(t).or_insert(0);
        *c += 1;
        if *c == 1 {
            stack.extend(store.children(t));
        }
    }
    let mut shared: Vec<TermId> = refs
        .iter()
        .filter(|(t, c)| **c > 1 && !matches!(store.node(**t), Node::Var(_) | Node::Num(_) | Node::Const(_)))
        .map(|(t, _)| *t)
        .collect();
    // Children are interned before parents, so id order is a topological order.
    shared.sort();

    let logic = if store.has_nonlinear(roots) { "QF_NIRA" } else { "QF_LIRA" };
    let mut out = String::new();
    let _ = writeln!(out, "(set-logic {logic})");
    if get_values {
        out.push_str("(set-option :produce-models true)\n");
    }
    let mut decls: Vec<_> = store.vars().iter().collect();
    decls.sort_by(|a, b| a.name.cmp(&b.name));
    for v in &decls {
        let _ = writeln!(out, "(declare-fun {} () {})", symbol(&v.name), v.sort.smt());
    }
    let mut em = Emitter {
        store,
        names: HashMap::new(),
    };
    for t in shared {
        let mut body = String::new();
        em.body(t, &mut body);
        let name = format!("$e{}", t.index());
        let _ = writeln!(out, "(define-fun {name} () {} {body})", store.sort(t).smt());
        em.names.insert(t, name);
    }
    for r in roots {
        out.push_str("(assert ");
        em.term(*r, false, &mut out);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n");
    if get_values && !decls.is_empty() {
        out.push_str("(get-value (");
        for (i, v) in decls.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&symbol(&v.name));
        }
        out.push_str("))\n");
    }
    out.push_str("(exit)\n");
    out
}

pub type Model = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq)]
pub enum SolverResult {
    Sat(Model),
    Unsat,
    Unknown(String),
    Timeout,
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("solver `{0}` not found")]
    NotFound(String),
    #[error("solver exited with {status}: {stderr}")]
    Crashed { status: String, stderr: String },
    #[error("malformed solver output: {0}")]
    Malformed(String),
    #[error("solver i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl Default for SolverCommand {
    fn default() -> Self {
        SolverCommand {
            program: DEFAULT_SOLVER.to_string(),
            args: vec!["-in".to_string(), "-smt2".to_string()],
        }
    }
}

impl SolverCommand {
    /// Parses a whitespace-separated command line such as `z3 -in -smt2`.
    pub fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        let args: Vec<String> = parts.collect();
        let args = if args.is_empty() && program.ends_with("z3") {
            SolverCommand::default().args
        } else {
            args
        };
        Some(SolverCommand { program, args })
    }

    /// Runs `script`, killing the process once `timeout` elapses.
    pub fn run(&self, script: &str, timeout: Option<Duration>) -> Result<SolverResult, SolverError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied => SolverError::NotFound(self.program.clone()),
                _ => SolverError::Io(e),
            })?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let script = script.to_string();
        let writer = thread::spawn(move || {
            // A solver that dies early closes the pipe; the exit status tells.
            let _ = stdin.write_all(script.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        let start = Instant::now();
        let status = loop {
            if let Some(st) = child.try_wait()? {
                break Some(st);
            }
            if timeout.is_some_and(|t| start.elapsed() >= t) {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            thread::sleep(Duration::from_millis(2));
        };
        let _ = writer.join();
        let out = reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        let Some(status) = status else {
            return Ok(SolverResult::Timeout);
        };
        let first = out.lines().map(str::trim).find(|l| !l.is_empty());
        match first {
            Some("sat") => {
                let rest = out.split_once("sat").map(|x| x.1).unwrap_or("");
                Ok(SolverResult::Sat(parse_model(rest)?))
            }
            Some("unsat") => Ok(SolverResult::Unsat),
            Some("unknown") => Ok(SolverResult::Unknown("solver returned unknown".into())),
            _ if !status.success() => Err(SolverError::Crashed {
                status: status.to_string(),
                stderr: if err.trim().is_empty() { out.trim().to_string() } else { err.trim().to_string() },
            }),
            _ => Err(SolverError::Malformed(out.chars().take(200).collect())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<String>, SolverError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                toks.push(c.to_string());
                chars.next();
            }
            '|' => {
                chars.next();
                let mut s = String::from("|");
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(ch) => s.push(ch),
                        None => return Err(SolverError::Malformed("unterminated quoted symbol".into())),
                    }
                }
                toks.push(s);
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '(' || ch == ')' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                toks.push(s);
            }
        }
    }
    Ok(toks)
}

fn parse_sexp(toks: &[String], pos: &mut usize) -> Result<Sexp, SolverError> {
    let t = toks
        .get(*pos)
        .ok_or_else(|| SolverError::Malformed("unexpected end of model".into()))?;
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match toks.get(*pos).map(String::as_str) {
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(parse_sexp(toks, pos)?),
                    None => return Err(SolverError::Malformed("unbalanced parentheses".into())),
                }
            }
        }
        ")" => Err(SolverError::Malformed("unexpected `)`".into())),
        _ => Ok(Sexp::Atom(t.clone())),
    }
}

fn value_of(e: &Sexp) -> Result<Value, SolverError> {
    let bad = || SolverError::Malformed(format!("unsupported value {e:?}"));
    match e {
        Sexp::Atom(a) if a == "true" => Ok(Value::Bool(true)),
        Sexp::Atom(a) if a == "false" => Ok(Value::Bool(false)),
        Sexp::Atom(a) => rational::parse(a).map(Value::Num).map_err(|_| bad()),
        Sexp::List(xs) => {
            let head = match xs.first() {
                Some(Sexp::Atom(h)) => h.as_str(),
                _ => return Err(bad()),
            };
            let num = |e: &Sexp| -> Result<Rational, SolverError> {
                match value_of(e)? {
                    Value::Num(n) => Ok(n),
                    Value::Bool(_) => Err(bad()),
                }
            };
            match (head, xs.len()) {
                ("-", 2) => Ok(Value::Num(-num(&xs[1])?)),
                ("/", 3) => {
                    let d = num(&xs[2])?;
                    if d.is_zero() {
                        return Err(bad());
                    }
                    Ok(Value::Num(num(&xs[1])? / d))
                }
                ("to_real", 2) => Ok(Value::Num(num(&xs[1])?)),
                _ => Err(bad()),
            }
        }
    }
}

/// Parses a `get-value` response.
pub fn parse_model(text: &str) -> Result<Model, SolverError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Ok(Model::new());
    }
    let mut pos = 0;
    let Sexp::List(pairs) = parse_sexp(&toks, &mut pos)? else {
        return Err(SolverError::Malformed("expected a list of bindings".into()));
    };
    let mut model = Model::new();
    for p in pairs {
        match p {
            Sexp::List(kv) if kv.len() == 2 => {
                let Sexp::Atom(name) = &kv[0] else {
                    return Err(SolverError::Malformed("binding without a name".into()));
                };
                let name = name.strip_prefix('|').unwrap_or(name).to_string();
                model.insert(name, value_of(&kv[1])?);
            }
            other => return Err(SolverError::Malformed(format!("bad binding {other:?}"))),
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Sort;
    use crate::rational::ratio;

    #[test]
    fn symbols_are_quoted_when_needed() {
        assert_eq!(symbol("a1"), "a1");
        assert_eq!(symbol("(capped b1)"), "|(capped b1)|");
        assert_eq!(symbol("x'"), "|x'|");
        assert_eq!(symbol("1x"), "|1x|");
    }

    #[test]
    fn model_values_parse() {
        let m = parse_model("((a1 2) (|(l b1)| (/ 3.0 2.0)) (t1 (- 1.5)) (c false) (d (- (/ 1 4))))").unwrap();
        assert_eq!(m["a1"], Value::Num(ratio(2, 1)));
        assert_eq!(m["(l b1)"], Value::Num(ratio(3, 2)));
        assert_eq!(m["t1"], Value::Num(ratio(-3, 2)));
        assert_eq!(m["c"], Value::Bool(false));
        assert_eq!(m["d"], Value::Num(ratio(-1, 4)));
        assert!(parse_model("((a1 (root-obj x 2)))").is_err());
        assert!(parse_model("((a1 2)").is_err());
    }

    #[test]
    fn script_mixes_int_and_real() {
        let mut s = Store::new();
        let a = s.var("a1", Sort::Int);
        let x = s.var("x", Sort::Real);
        let g = s.gt_int(a, 0);
        let half = s.num(ratio(1, 2));
        let ax = s.add(a, half);
        let sum = s.add(ax, x);
        let c = s.gt(sum, half);
        let both = s.and2(g, c);
        let both2 = s.implies(g, c);
        let script = emit_script(&s, &[both, both2], true);
        assert!(script.starts_with("(set-logic QF_LIRA)"));
        assert!(script.contains("(to_real a1)"));
        assert!(script.contains("(get-value (a1 x))"));
    }

    #[test]
    fn missing_solver_is_reported() {
        let cmd = SolverCommand {
            program: "definitely-not-a-solver-binary".into(),
            args: vec![],
        };
        assert!(matches!(cmd.run("(check-sat)", None), Err(SolverError::NotFound(_))));
    }
}
