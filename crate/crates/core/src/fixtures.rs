//! Instance generators for the bottle domains and a match-cellar domain.
//!
//! The domains are reconstructions from one-line descriptions: Pour is the
//! running bottle example, Shake empties an uncapped bottle, Pack needs two
//! bottles held at once, Bottles is their union, and MatchCellar needs a lit
//! match over the whole of each fuse repair.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::TemporalNumericProblem;
use crate::pddl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Pour,
    Shake,
    Pack,
    Bottles,
    MatchCellar,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Pour,
        Family::Shake,
        Family::Pack,
        Family::Bottles,
        Family::MatchCellar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Pour => "pour",
            Family::Shake => "shake",
            Family::Pack => "pack",
            Family::Bottles => "bottles",
            Family::MatchCellar => "matchcellar",
        }
    }

    pub fn domain(self) -> &'static str {
        match self {
            Family::Pour => POUR_DOMAIN,
            Family::Shake => SHAKE_DOMAIN,
            Family::Pack => PACK_DOMAIN,
            Family::Bottles => BOTTLES_DOMAIN,
            Family::MatchCellar => MATCH_DOMAIN,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown family `{s}` (expected pour, shake, pack, bottles or matchcellar)"))
    }
}

/// A generated domain/problem pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub family: Family,
    pub name: String,
    pub domain_text: String,
    pub problem_text: String,
}

impl Fixture {
    /// Grounds the fixture. Generated fixtures always ground.
    pub fn problem(&self) -> TemporalNumericProblem {
        pddl::load(&self.domain_text, &self.problem_text)
            .unwrap_or_else(|e| panic!("fixture {} does not ground: {e}", self.name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Durations {
    pub uncap: i64,
    pub pour: i64,
    pub shake: i64,
    pub hold: i64,
    pub pack: i64,
}

impl Default for Durations {
    fn default() -> Self {
        Durations {
            uncap: 5,
            pour: 1,
            shake: 3,
            hold: 5,
            pack: 2,
        }
    }
}

const POUR_DOMAIN: &str = "(define (domain pour)
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
";

const SHAKE_DOMAIN: &str = "(define (domain shake)
  (:requirements :typing :durative-actions :fluents :negative-preconditions)
  (:types bottle)
  (:predicates (capped ?b - bottle))
  (:functions (litres ?b - bottle) (uncap-time) (shake-time))
  (:durative-action uncap
    :parameters (?b - bottle)
    :duration (= ?duration (uncap-time))
    :condition (and (at start (capped ?b)) (at end (not (capped ?b))))
    :effect (and (at start (not (capped ?b))) (at end (capped ?b))))
  (:durative-action shake
    :parameters (?b - bottle)
    :duration (= ?duration (shake-time))
    :condition (and (at start (not (capped ?b))) (at start (> (litres ?b) 0)) (over all (not (capped ?b))))
    :effect (at end (assign (litres ?b) 0))))
";

const PACK_DOMAIN: &str = "(define (domain pack)
  (:requirements :typing :durative-actions :fluents :negative-preconditions :equality)
  (:types bottle)
  (:predicates (free ?b - bottle) (held ?b - bottle) (packed ?x ?y - bottle))
  (:functions (hold-time) (pack-time))
  (:durative-action hold
    :parameters (?b - bottle)
    :duration (= ?duration (hold-time))
    :condition (and (at start (free ?b)) (at end (held ?b)))
    :effect (and (at start (not (free ?b))) (at start (held ?b)) (at end (not (held ?b))) (at end (free ?b))))
  (:durative-action pack
    :parameters (?x ?y - bottle)
    :duration (= ?duration (pack-time))
    :condition (and (at start (held ?x)) (at start (held ?y)) (at start (not (= ?x ?y)))
                    (over all (held ?x)) (over all (held ?y)))
    :effect (at end (packed ?x ?y))))
";

const BOTTLES_DOMAIN: &str = "(define (domain bottles)
  (:requirements :typing :durative-actions :fluents :negative-preconditions :equality)
  (:types src dst - bottle)
  (:predicates (capped ?b - bottle) (free ?b - bottle) (held ?b - bottle) (packed ?x ?y - bottle))
  (:functions (litres ?b - bottle) (uncap-time) (pour-time) (shake-time) (hold-time) (pack-time))
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
    :effect (and (at start (decrease (litres ?i) 1)) (at end (increase (litres ?j) 1))))
  (:durative-action shake
    :parameters (?b - bottle)
    :duration (= ?duration (shake-time))
    :condition (and (at start (not (capped ?b))) (at start (> (litres ?b) 0)) (over all (not (capped ?b))))
    :effect (at end (assign (litres ?b) 0)))
  (:durative-action hold
    :parameters (?b - bottle)
    :duration (= ?duration (hold-time))
    :condition (and (at start (free ?b)) (at end (held ?b)))
    :effect (and (at start (not (free ?b))) (at start (held ?b)) (at end (not (held ?b))) (at end (free ?b))))
  (:durative-action pack
    :parameters (?x ?y - bottle)
    :duration (= ?duration (pack-time))
    :condition (and (at start (held ?x)) (at start (held ?y)) (at start (not (= ?x ?y)))
                    (over all (held ?x)) (over all (held ?y)))
    :effect (at end (packed ?x ?y))))
";

const MATCH_DOMAIN: &str = "(define (domain matchcellar)
  (:requirements :typing :durative-actions :fluents :negative-preconditions)
  (:types match fuse)
  (:predicates (handfree) (unused ?m - match) (light ?m - match) (mended ?f - fuse))
  (:functions (light-time) (mend-time))
  (:durative-action light-match
    :parameters (?m - match)
    :duration (= ?duration (light-time))
    :condition (at start (unused ?m))
    :effect (and (at start (not (unused ?m))) (at start (light ?m)) (at end (not (light ?m)))))
  (:durative-action mend-fuse
    :parameters (?f - fuse ?m - match)
    :duration (= ?duration (mend-time))
    :condition (and (at start (handfree)) (over all (light ?m)))
    :effect (and (at start (not (handfree))) (at end (mended ?f)) (at end (handfree)))))
";

fn bottles(range: std::ops::RangeInclusive<usize>) -> Vec<String> {
    range.map(|k| format!("b{k}")).collect()
}

fn problem_text(name: &str, domain: &str, objects: &str, init: &[String], goals: &[String]) -> String {
    format!(
        "(define (problem {name}) (:domain {domain})\n  (:objects {objects})\n  (:init\n    {})\n  (:goal (and\n    {})))\n",
        init.join("\n    "),
        goals.join("\n    ")
    )
}

/// Bottles `1..=p` hold `litres[i]`, the rest are empty; all start capped;
/// the goal empties the first `p` bottles.
pub fn pour(p: usize, q: usize, litres: &[i64]) -> Fixture {
    pour_with(p, q, litres, &Durations::default())
}

pub fn pour_with(p: usize, q: usize, litres: &[i64], d: &Durations) -> Fixture {
    assert!(p >= 1 && q > p && litres.len() == p, "pour needs 1 ≤ p < q and p litre values");
    let name = format!("pour-p{p}-q{q}-l{}", join_nums(litres));
    let mut init: Vec<String> = bottles(1..=q).iter().map(|b| format!("(capped {b})")).collect();
    init.extend(litre_facts(q, litres));
    init.push(format!("(= (uncap-time) {}) (= (pour-time) {})", d.uncap, d.pour));
    let goals: Vec<String> = bottles(1..=p).iter().map(|b| format!("(= (litres {b}) 0)")).collect();
    let objects = format!("{} - src {} - dst", bottles(1..=p).join(" "), bottles(p + 1..=q).join(" "));
    Fixture {
        family: Family::Pour,
        problem_text: problem_text(&name, "pour", &objects, &init, &goals),
        name,
        domain_text: POUR_DOMAIN.to_string(),
    }
}

/// Every bottle starts capped with `litres[k]`; the goal empties them all.
pub fn shake(litres: &[i64], d: &Durations) -> Fixture {
    let q = litres.len();
    assert!(q >= 1);
    let name = format!("shake-q{q}-l{}", join_nums(litres));
    let mut init: Vec<String> = bottles(1..=q).iter().map(|b| format!("(capped {b})")).collect();
    init.extend(litre_facts(q, litres));
    init.push(format!("(= (uncap-time) {}) (= (shake-time) {})", d.uncap, d.shake));
    let goals: Vec<String> = bottles(1..=q).iter().map(|b| format!("(= (litres {b}) 0)")).collect();
    Fixture {
        family: Family::Shake,
        problem_text: problem_text(&name, "shake", &format!("{} - bottle", bottles(1..=q).join(" ")), &init, &goals),
        name,
        domain_text: SHAKE_DOMAIN.to_string(),
    }
}

/// `pairs` disjoint pairs `(b1 b2), (b3 b4), ...` must be packed.
pub fn pack(pairs: usize, d: &Durations) -> Fixture {
    assert!(pairs >= 1);
    let q = 2 * pairs;
    let name = format!("pack-n{pairs}");
    let mut init: Vec<String> = bottles(1..=q).iter().map(|b| format!("(free {b})")).collect();
    init.push(format!("(= (hold-time) {}) (= (pack-time) {})", d.hold, d.pack));
    let goals: Vec<String> = (0..pairs)
        .map(|k| format!("(packed b{} b{})", 2 * k + 1, 2 * k + 2))
        .collect();
    Fixture {
        family: Family::Pack,
        problem_text: problem_text(&name, "pack", &format!("{} - bottle", bottles(1..=q).join(" ")), &init, &goals),
        name,
        domain_text: PACK_DOMAIN.to_string(),
    }
}

/// Union of the three bottle domains: sources must be emptied, the last
/// bottle must receive at least one litre when there is any liquid, and
/// bottles 1 and 2 must be packed.
pub fn bottles_instance(p: usize, q: usize, litres: &[i64], d: &Durations) -> Fixture {
    assert!(p >= 1 && q > p && q >= 2 && litres.len() == p);
    let name = format!("bottles-p{p}-q{q}-l{}", join_nums(litres));
    let mut init: Vec<String> = bottles(1..=q)
        .iter()
        .map(|b| format!("(capped {b}) (free {b})"))
        .collect();
    init.extend(litre_facts(q, litres));
    init.push(format!(
        "(= (uncap-time) {}) (= (pour-time) {}) (= (shake-time) {}) (= (hold-time) {}) (= (pack-time) {})",
        d.uncap, d.pour, d.shake, d.hold, d.pack
    ));
    let mut goals: Vec<String> = bottles(1..=p).iter().map(|b| format!("(= (litres {b}) 0)")).collect();
    if litres.iter().any(|&l| l > 0) {
        goals.push(format!("(>= (litres b{q}) 1)"));
    }
    goals.push("(packed b1 b2)".into());
    let objects = format!("{} - src {} - dst", bottles(1..=p).join(" "), bottles(p + 1..=q).join(" "));
    Fixture {
        family: Family::Bottles,
        problem_text: problem_text(&name, "bottles", &objects, &init, &goals),
        name,
        domain_text: BOTTLES_DOMAIN.to_string(),
    }
}

/// `fuses` fuses and as many matches; light lasts 8, a repair takes 5.
pub fn match_cellar(fuses: usize) -> Fixture {
    match_cellar_with(fuses, fuses, 8, 5)
}

pub fn match_cellar_with(fuses: usize, matches: usize, light_time: i64, mend_time: i64) -> Fixture {
    assert!(fuses >= 1 && matches >= 1);
    let name = format!("matchcellar-f{fuses}-m{matches}");
    let ms: Vec<String> = (1..=matches).map(|k| format!("m{k}")).collect();
    let fs: Vec<String> = (1..=fuses).map(|k| format!("f{k}")).collect();
    let mut init = vec!["(handfree)".to_string()];
    init.extend(ms.iter().map(|m| format!("(unused {m})")));
    init.push(format!("(= (light-time) {light_time}) (= (mend-time) {mend_time})"));
    let goals: Vec<String> = fs.iter().map(|f| format!("(mended {f})")).collect();
    Fixture {
        family: Family::MatchCellar,
        problem_text: problem_text(
            &name,
            "matchcellar",
            &format!("{} - match {} - fuse", ms.join(" "), fs.join(" ")),
            &init,
            &goals,
        ),
        name,
        domain_text: MATCH_DOMAIN.to_string(),
    }
}

/// A small random instance of `family`.
pub fn random_instance(family: Family, rng: &mut impl Rng) -> Fixture {
    let d = Durations::default();
    match family {
        Family::Pour => {
            let p = rng.gen_range(1..=2);
            let q = p + rng.gen_range(1..=2);
            let litres: Vec<i64> = (0..p).map(|_| rng.gen_range(1..=6)).collect();
            pour(p, q, &litres)
        }
        Family::Shake => {
            let q = rng.gen_range(1..=3);
            let litres: Vec<i64> = (0..q).map(|_| rng.gen_range(1..=9)).collect();
            shake(&litres, &d)
        }
        Family::Pack => pack(rng.gen_range(1..=2), &d),
        Family::Bottles => {
            let p = rng.gen_range(1..=2);
            let litres: Vec<i64> = (0..p).map(|_| rng.gen_range(1..=4)).collect();
            bottles_instance(p, p + 1, &litres, &d)
        }
        Family::MatchCellar => match_cellar(rng.gen_range(1..=3)),
    }
}

/// `count` random instances cycling through every family, reproducible from
/// `seed`. Names are prefixed with their position so they stay unique.
pub fn corpus(count: usize, seed: u64) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let mut f = random_instance(Family::ALL[k % Family::ALL.len()], &mut rng);
            f.name = format!("{k:03}-{}", f.name);
            f
        })
        .collect()
}

fn litre_facts(q: usize, litres: &[i64]) -> Vec<String> {
    (1..=q)
        .map(|k| format!("(= (litres b{k}) {})", litres.get(k - 1).copied().unwrap_or(0)))
        .collect()
}

fn join_nums(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join("-")
}
