//! `tplan`: solve, validate and inspect temporal numeric planning problems.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use tplan_core::analysis::Analysis;
use tplan_core::fixtures::{self, Durations, Family, Fixture};
use tplan_core::model::TemporalNumericProblem;
use tplan_core::pattern::{build_base_pattern, Ordering, PatternConfig};
use tplan_core::plan::TimedPlan;
use tplan_core::rational::{self, Rational};
use tplan_core::report::{aggregate, ProblemSummary, RunReport};
use tplan_core::smt::{SolverCommand, SolverError};
use tplan_core::solve::{solve, SolveConfig, SolveError, Status};
use tplan_core::validate::validate;
use tplan_core::pddl;

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_UNAVAILABLE: u8 = 69;
const EX_SOFTWARE: u8 = 70;
const EX_IOERR: u8 = 74;

#[derive(Parser)]
#[command(name = "tplan", version, about = "Temporal numeric planner using pattern-based SMT encodings")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find a plan by iterative deepening over pattern copies.
    Solve {
        domain: PathBuf,
        problem: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        plan_out: Option<PathBuf>,
        /// Write the JSON run summary to this file as well.
        #[arg(long)]
        report_json: Option<PathBuf>,
    },
    /// Check a plan against a problem.
    Validate {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        report_json: Option<PathBuf>,
    },
    /// Dump the mutex relation and rolling eligibility as JSON.
    Analyze { domain: PathBuf, problem: PathBuf },
    /// Dump the base pattern as JSON.
    Pattern {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, default_value = "arpg")]
        pattern: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump the grounded problem in the canonical JSON format.
    DumpProblem {
        domain: PathBuf,
        problem: PathBuf,
        /// Print only the size summary.
        #[arg(long)]
        summary: bool,
    },
    /// Generate benchmark instances.
    Gen(GenArgs),
    /// Solve every instance below a directory, one JSON line each.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Concurrent instances (defaults to the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args, Clone, Default)]
struct SolveOpts {
    /// Pattern ordering: arpg or starts-ends.
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_bound: Option<usize>,
    /// Seconds per solver call.
    #[arg(long)]
    timeout_per_call: Option<f64>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    parallel_bounds: Option<usize>,
    /// Solver command line, e.g. "z3 -in -smt2".
    #[arg(long)]
    solver: Option<String>,
    /// Directory for the SMT-LIB script of every call.
    #[arg(long)]
    dump_smt: Option<PathBuf>,
    /// Key-value file with defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// pour, shake, pack, bottles, matchcellar or corpus.
    family: String,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 2)]
    q: usize,
    /// Comma-separated litres of the source bottles (shake: of every bottle).
    #[arg(long, default_value = "3")]
    litres: String,
    #[arg(long, default_value_t = 1)]
    pairs: usize,
    #[arg(long, default_value_t = 3)]
    fuses: usize,
    #[arg(long)]
    matches: Option<usize>,
    #[arg(long, default_value_t = 5)]
    uncap: i64,
    #[arg(long, default_value_t = 1)]
    pour: i64,
    #[arg(long, default_value_t = 3)]
    shake: i64,
    #[arg(long, default_value_t = 5)]
    hold: i64,
    #[arg(long, default_value_t = 2)]
    pack: i64,
    #[arg(long, default_value_t = 8)]
    light: i64,
    #[arg(long, default_value_t = 5)]
    mend: i64,
    /// Instances for `corpus`.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Error carrying the process exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EX_IOERR, e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match &e {
            SolveError::Solver(SolverError::NotFound(_)) => EX_UNAVAILABLE,
            SolveError::Dump(_) => EX_IOERR,
            _ => EX_SOFTWARE,
        };
        Failure::new(code, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EX_IOERR, format!("{}: {e}", path.display())))
}

fn load(domain: &Path, problem: &Path) -> Result<TemporalNumericProblem, Failure> {
    pddl::load(&read(domain)?, &read(problem)?)
        .map_err(|e| Failure::new(EX_DATAERR, format!("{}: {e}", problem.display())))
}

fn parse_epsilon(text: &str) -> Result<Rational, Failure> {
    let e = rational::parse(text).map_err(|e| Failure::new(EX_USAGE, e.to_string()))?;
    if e <= rational::int(0) {
        return Err(Failure::new(EX_USAGE, "epsilon must be positive"));
    }
    Ok(e)
}

/// `key = value` lines; `#` starts a comment.
fn read_config(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (n, line) in read(path)?.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::new(EX_USAGE, format!("{}:{}: expected `key = value`", path.display(), n + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

impl SolveOpts {
    /// Flags win over the config file, which wins over the defaults.
    fn resolve(&self) -> Result<SolveConfig, Failure> {
        let file = match &self.config {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        let known = [
            "pattern",
            "seed",
            "max-bound",
            "timeout-per-call",
            "epsilon",
            "parallel-bounds",
            "solver",
            "dump-smt",
        ];
        if let Some(k) = file.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Failure::new(EX_USAGE, format!("unknown config key `{k}`")));
        }
        let get = |k: &str| file.get(k).cloned();
        fn num<T: std::str::FromStr>(key: &str, v: String) -> Result<T, Failure> {
            v.parse()
                .map_err(|_| Failure::new(EX_USAGE, format!("invalid value `{v}` for {key}")))
        }
        let mut cfg = SolveConfig::default();
        if let Some(p) = self.pattern.clone().or_else(|| get("pattern")) {
            cfg.pattern.ordering = p.parse::<Ordering>().map_err(|e| Failure::new(EX_USAGE, e))?;
        }
        cfg.pattern.seed = match self.seed {
            Some(s) => Some(s),
            None => get("seed").map(|v| num("seed", v)).transpose()?,
        };
        if let Some(n) = self.max_bound.map(Ok).or_else(|| get("max-bound").map(|v| num("max-bound", v))) {
            cfg.max_bound = n?;
        }
        let timeout = match self.timeout_per_call {
            Some(t) => Some(t),
            None => get("timeout-per-call").map(|v| num::<f64>("timeout-per-call", v)).transpose()?,
        };
        if let Some(t) = timeout {
            if !(t.is_finite() && t > 0.0) {
                return Err(Failure::new(EX_USAGE, "timeout-per-call must be positive"));
            }
            cfg.timeout = Some(Duration::from_secs_f64(t));
        }
        if let Some(e) = self.epsilon.clone().or_else(|| get("epsilon")) {
            cfg.epsilon = parse_epsilon(&e)?;
        }
        if let Some(n) = self
            .parallel_bounds
            .map(Ok)
            .or_else(|| get("parallel-bounds").map(|v| num("parallel-bounds", v)))
        {
            cfg.parallel_bounds = n?;
        }
        if let Some(s) = self.solver.clone().or_else(|| get("solver")) {
            cfg.solver = SolverCommand::parse(&s).ok_or_else(|| Failure::new(EX_USAGE, "empty solver command"))?;
        }
        cfg.dump_smt = self.dump_smt.clone().or_else(|| get("dump-smt").map(PathBuf::from));
        Ok(cfg)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// The problem file stem, or its directory for generated `problem.pddl` files.
fn instance_name(problem: &Path) -> String {
    let stem = problem.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match problem.parent().and_then(Path::file_name) {
        Some(dir) if stem == "problem" => dir.to_string_lossy().into_owned(),
        _ => stem,
    }
}

fn run_solve(
    domain: &Path,
    problem: &Path,
    opts: &SolveOpts,
    plan_out: Option<&Path>,
    report_json: Option<&Path>,
) -> Result<ExitCode, Failure> {
    let cfg = opts.resolve()?;
    let pb = load(domain, problem)?;
    let outcome = solve(&pb, &cfg)?;
    let report = RunReport::new(&instance_name(problem), &outcome);
    let mut text = String::new();
    if let Some(plan) = &outcome.plan {
        text.push_str(&plan.display(&pb).to_string());
    }
    write_or_print(plan_out, &text)?;
    // The summary is a comment line, so stdout stays a readable plan file.
    println!("; {}", report.to_json());
    if let Some(p) = report_json {
        fs::write(p, report.to_json() + "\n")?;
    }
    Ok(if outcome.status == Status::Solved {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_validate(
    domain: &Path,
    problem: &Path,
    plan: &Path,
    epsilon: Option<&str>,
    report_json: Option<&Path>,
) -> Result<ExitCode, Failure> {
    let eps = match epsilon {
        Some(e) => parse_epsilon(e)?,
        None => SolveConfig::default().epsilon,
    };
    let parse_fail = |m: String| Failure::new(2, m);
    let pb = pddl::load(&read(domain)?, &read(problem)?).map_err(|e| parse_fail(e.to_string()))?;
    let plan = TimedPlan::parse(&read(plan)?, &pb).map_err(|e| parse_fail(format!("{}: {e}", plan.display())))?;
    let report = validate(&plan, &pb, &eps);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(p) = report_json {
        fs::write(p, json.clone() + "\n")?;
    }
    if report.valid {
        println!("valid (makespan {})", report.makespan);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("invalid: {} violation(s)", report.violations.len());
        for v in &report.violations {
            println!("  {}", serde_json::to_string(v).expect("violation serializes"));
        }
        Ok(ExitCode::from(1))
    }
}

fn parse_litres(text: &str) -> Result<Vec<i64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Failure::new(EX_USAGE, format!("invalid litre value `{s}`")))
        })
        .collect()
}

fn write_fixture(dir: &Path, f: &Fixture) -> Result<(), Failure> {
    let sub = dir.join(&f.name);
    fs::create_dir_all(&sub)?;
    fs::write(sub.join("domain.pddl"), &f.domain_text)?;
    fs::write(sub.join("problem.pddl"), &f.problem_text)?;
    println!("{}", sub.display());
    Ok(())
}

fn run_gen(g: &GenArgs) -> Result<ExitCode, Failure> {
    let d = Durations {
        uncap: g.uncap,
        pour: g.pour,
        shake: g.shake,
        hold: g.hold,
        pack: g.pack,
    };
    if [d.uncap, d.pour, d.shake, d.hold, d.pack, g.light, g.mend].iter().any(|&x| x <= 0) {
        return Err(Failure::new(EX_USAGE, "durations must be positive"));
    }
    if g.family == "corpus" {
        for f in fixtures::corpus(g.count, g.seed) {
            write_fixture(&g.out, &f)?;
        }
        return Ok(ExitCode::SUCCESS);
    }
    let family: Family = g.family.parse().map_err(|e: String| Failure::new(EX_USAGE, e))?;
    let litres = parse_litres(&g.litres)?;
    let sources_ok = g.p >= 1 && g.q > g.p && litres.len() == g.p;
    let usage = |m: &str| Failure::new(EX_USAGE, m.to_string());
    let f = match family {
        Family::Pour if sources_ok => fixtures::pour_with(g.p, g.q, &litres, &d),
        Family::Bottles if sources_ok => fixtures::bottles_instance(g.p, g.q, &litres, &d),
        Family::Pour | Family::Bottles => return Err(usage("need 1 <= p < q and one litre value per source")),
        Family::Shake if !litres.is_empty() => fixtures::shake(&litres, &d),
        Family::Shake => return Err(usage("need at least one litre value")),
        Family::Pack if g.pairs >= 1 => fixtures::pack(g.pairs, &d),
        Family::Pack => return Err(usage("need at least one pair")),
        Family::MatchCellar if g.fuses >= 1 => {
            fixtures::match_cellar_with(g.fuses, g.matches.unwrap_or(g.fuses).max(1), g.light, g.mend)
        }
        Family::MatchCellar => return Err(usage("need at least one fuse")),
    };
    write_fixture(&g.out, &f)?;
    Ok(ExitCode::SUCCESS)
}

/// Problem files below `dir` paired with a `domain.pddl` in the same
/// directory, sorted by path.
fn find_instances(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>, Failure> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&d)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        let domain = d.join("domain.pddl");
        for p in entries {
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "pddl") && p != domain && domain.exists() {
                out.push((domain.clone(), p));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn run_batch(dir: &Path, opts: &SolveOpts, jobs: Option<usize>) -> Result<ExitCode, Failure> {
    let cfg = opts.resolve()?;
    let instances = find_instances(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::new(EX_SOFTWARE, e.to_string()))?;
    let results: Vec<Result<RunReport, Failure>> = pool.install(|| {
        instances
            .par_iter()
            .map(|(domain, problem)| {
                let name = problem
                    .strip_prefix(dir)
                    .unwrap_or(problem)
                    .with_extension("")
                    .display()
                    .to_string();
                let pb = load(domain, problem)?;
                let started = Instant::now();
                let outcome = solve(&pb, &cfg)?;
                let mut r = RunReport::new(&name, &outcome);
                r.wall_time_s = started.elapsed().as_secs_f64();
                Ok(r)
            })
            .collect()
    });
    let mut reports = Vec::new();
    let mut worst = 0u8;
    for r in results {
        match r {
            Ok(r) => {
                println!("{}", r.to_json());
                reports.push(r);
            }
            Err(f) => {
                eprintln!("tplan: {}", f.message);
                worst = worst.max(f.code);
            }
        }
    }
    println!(
        "{}",
        serde_json::to_string(&serde_json::json!({ "aggregate": aggregate(&reports) })).expect("aggregate serializes")
    );
    Ok(if worst == 0 { ExitCode::SUCCESS } else { ExitCode::from(worst) })
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Cmd::Solve {
            domain,
            problem,
            opts,
            plan_out,
            report_json,
        } => run_solve(&domain, &problem, &opts, plan_out.as_deref(), report_json.as_deref()),
        Cmd::Validate {
            domain,
            problem,
            plan,
            epsilon,
            report_json,
        } => run_validate(&domain, &problem, &plan, epsilon.as_deref(), report_json.as_deref()),
        Cmd::Analyze { domain, problem } => {
            let pb = load(&domain, &problem)?;
            println!("{}", Analysis::new(&pb).dump(&pb));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Pattern {
            domain,
            problem,
            pattern,
            seed,
        } => {
            let pb = load(&domain, &problem)?;
            let ordering = pattern.parse::<Ordering>().map_err(|e| Failure::new(EX_USAGE, e))?;
            let p = build_base_pattern(&pb, &PatternConfig { ordering, seed });
            println!("{}", p.dump(&pb));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::DumpProblem {
            domain,
            problem,
            summary,
        } => {
            let pb = load(&domain, &problem)?;
            if summary {
                println!("{}", serde_json::to_string(&ProblemSummary::new(&pb)).expect("summary serializes"));
            } else {
                println!("{}", pb.dump());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Gen(g) => run_gen(&g),
        Cmd::Batch { dir, opts, jobs } => run_batch(&dir, &opts, jobs),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EX_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("tplan: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
