//! Falsifiable checks of the exact-subtraction, reduction and bound
//! theorems, by exhaustive enumeration at small precision and by seeded
//! random campaigns at the preset formats.
//!
//! Every conclusion is decided twice: once by the kernel (the inexact flag
//! of the operation that should be exact) and once by exact rational
//! arithmetic. A case fails if either route disagrees with the theorem.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::realnum::Constant;
use crate::softfp::{Format, Ties};

mod bounds;
mod codywaite;
mod eft;
mod first;
mod radix;
mod second;
mod sweep;

pub use bounds::check_thm7;
pub use codywaite::{demo_codywaite, demo_for, CodyWaiteCase, CodyWaiteReport};
pub use eft::check_eft;
pub use first::{check_correct1, check_correct2, check_correct3, check_thm3};
pub use radix::{check_sterbenz, check_sterbenz_approx2, RadixNumber};
pub use second::check_thm6;

/// Hard cap on the size of an exhaustive case space.
pub const MAX_EXHAUSTIVE_CASES: u64 = 100_000_000;

/// Failures kept in a result; the total is always counted.
pub const MAX_REPORTED_FAILURES: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    /// `y/2 <= x <= 2y` implies `x - y` is representable.
    Sterbenz,
    /// The two-precision extension of the above.
    Sterbenz2,
    /// Structure of `z` produced by the shift-constant trick.
    Thm3,
    /// Exact first step for general `q`, given `q <= ℓ`.
    Correct1,
    /// Exact first step for general `q`, given `R C1 <= 1`.
    Correct2,
    /// Exact first step for `q = 2`.
    Correct3,
    /// Exact nine-operation second step.
    Thm6,
    /// `|C - C1| <= 4 ulp(C1)`.
    Thm7,
    /// Fast2Sum and Fast2Mult recompose exactly.
    Eft,
}

impl Theorem {
    pub const ALL: [Theorem; 9] = [
        Theorem::Sterbenz,
        Theorem::Sterbenz2,
        Theorem::Thm3,
        Theorem::Correct1,
        Theorem::Correct2,
        Theorem::Correct3,
        Theorem::Thm6,
        Theorem::Thm7,
        Theorem::Eft,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Theorem::Sterbenz => "sterbenz",
            Theorem::Sterbenz2 => "sterbenz2",
            Theorem::Thm3 => "thm3",
            Theorem::Correct1 => "correct1",
            Theorem::Correct2 => "correct2",
            Theorem::Correct3 => "correct3",
            Theorem::Thm6 => "thm6",
            Theorem::Thm7 => "thm7",
            Theorem::Eft => "eft",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        let alias = match s.as_str() {
            "thm1" => "sterbenz",
            "thm2" | "sterbenzapprox2" => "sterbenz2",
            "thm4" => "correct1",
            "appendix" => "correct2",
            "thm5" => "correct3",
            other => other,
        };
        Theorem::ALL
            .into_iter()
            .find(|t| t.name() == alias)
            .ok_or_else(|| Error::Parse(format!("unknown theorem `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Mode {
    Exhaustive,
    Randomized { seed: u64, trials: u64 },
}

/// Values for checking a single case, as given on a replay command line.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Case {
    pub x: Option<String>,
    pub y: Option<String>,
    #[serde(rename = "R")]
    pub r: Option<String>,
    pub z: Option<String>,
    #[serde(rename = "C2")]
    pub c2: Option<String>,
}

impl Case {
    fn get(v: &Option<String>, name: &str) -> Result<String> {
        v.clone().ok_or_else(|| Error::Config(format!("single-case check needs --{name}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckConfig {
    pub theorem: Theorem,
    /// Radix, for the exact-subtraction checks only.
    pub beta: u32,
    pub p: u32,
    pub p1: u32,
    pub p2: u32,
    /// Binades enumerated for `x` (and `y`).
    pub window: u32,
    #[serde(rename = "N")]
    pub n: Vec<i32>,
    pub q: Vec<u32>,
    pub mode: Mode,
    pub ties: Ties,
    /// Format of randomized campaigns; small sweeps build their own.
    #[serde(serialize_with = "ser_format")]
    pub format: Format,
    #[serde(serialize_with = "ser_constants")]
    pub constants: Vec<Constant>,
    /// Also sweep a format whose λ is as large as the hypotheses allow.
    pub underflow_tight: bool,
    /// Drop the `q >= 2` hypothesis and mine for counterexamples.
    pub weaken_q: bool,
    /// Check only this case.
    pub case: Option<Case>,
}

fn ser_format<S: serde::Serializer>(f: &Format, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_string())
}

fn ser_constants<S: serde::Serializer>(c: &[Constant], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(c.iter().map(|c| c.name()))
}

impl CheckConfig {
    /// The documented default configuration for `theorem`.
    pub fn new(theorem: Theorem) -> Self {
        let mut cfg = CheckConfig {
            theorem,
            beta: 2,
            p: 8,
            p1: 6,
            p2: 3,
            window: 12,
            n: vec![0, 1, 2],
            q: vec![2],
            mode: Mode::Exhaustive,
            ties: Ties::Even,
            format: Format::double(),
            constants: vec![Constant::Pi, Constant::Ln2],
            underflow_tight: true,
            weaken_q: false,
            case: None,
        };
        match theorem {
            Theorem::Sterbenz => {
                cfg.p = 5;
                cfg.window = 8;
            }
            Theorem::Sterbenz2 => cfg.window = 8,
            Theorem::Correct1 | Theorem::Correct2 => cfg.q = vec![2, 3],
            Theorem::Thm6 => cfg.underflow_tight = false,
            Theorem::Thm7 => cfg.mode = Mode::Randomized { seed: 1, trials: 20_000 },
            Theorem::Eft => cfg.mode = Mode::Randomized { seed: 1, trials: 1_000_000 },
            _ => {}
        }
        cfg
    }

    pub fn randomized(mut self, seed: u64, trials: u64) -> Self {
        self.mode = Mode::Randomized { seed, trials };
        self
    }

    pub fn with_ties(mut self, ties: Ties) -> Self {
        self.ties = ties;
        self
    }

    /// The campaign format with the configured tie rule.
    pub fn campaign_format(&self) -> Format {
        self.format.with_ties(self.ties)
    }

    /// The roomy small-precision format used by sweeps: exponents far from
    /// underflow and overflow.
    pub fn sweep_format(&self) -> Result<Format> {
        Ok(Format::new(self.p, -200, 200)?.with_ties(self.ties))
    }

    /// Command-line flags reproducing this configuration.
    pub fn cli_flags(&self) -> String {
        use Theorem::*;
        let t = self.theorem;
        let list = |v: &[String]| v.join(",");
        let mut s = format!("--theorem {t}");
        match t {
            Sterbenz => s += &format!(" --beta {} --p {} --window {}", self.beta, self.p, self.window),
            Sterbenz2 => s += &format!(" --beta {} --p1 {} --p2 {} --window {}", self.beta, self.p1, self.p2, self.window),
            _ => {}
        }
        let randomized = matches!(self.mode, Mode::Randomized { .. });
        let custom_thm7 = t == Thm7 && self.format.preset_name().is_none();
        if (randomized && matches!(t, Thm3 | Correct3 | Thm6)) || t == Eft || custom_thm7 {
            s += &format!(" {}", format_flag(&self.format));
        } else if matches!(t, Thm3 | Correct1 | Correct2 | Correct3 | Thm6 | Thm7) {
            s += &format!(" --p {}", self.p);
        }
        if matches!(t, Thm3 | Correct1 | Correct2 | Correct3 | Thm6) {
            if !randomized {
                s += &format!(" --window {}", self.window);
            }
            s += &format!(" --N {}", list(&self.n.iter().map(|n| n.to_string()).collect::<Vec<_>>()));
        }
        if matches!(t, Correct1 | Correct2) {
            s += &format!(" --q {}", list(&self.q.iter().map(|q| q.to_string()).collect::<Vec<_>>()));
        }
        if (randomized && matches!(t, Thm3 | Correct3 | Thm6)) || t == Thm7 {
            s += &format!(" --const {}", list(&self.constants.iter().map(|c| c.name()).collect::<Vec<_>>()));
        }
        match self.mode {
            Mode::Exhaustive => s += " --exhaustive",
            Mode::Randomized { seed, trials } => s += &format!(" --trials {trials} --seed {seed}"),
        }
        if self.ties == Ties::Away {
            s += " --ties away";
        }
        if !self.underflow_tight && matches!(t, Thm3 | Correct1 | Correct2 | Correct3) {
            s += " --no-underflow-tight";
        }
        if self.weaken_q {
            s += " --weaken-q";
        }
        s
    }
}

fn format_flag(f: &Format) -> String {
    match f.preset_name() {
        Some(n) => format!("--format {n}"),
        None => format!("--p {} --e-min-q {} --e-max {}", f.p(), f.e_min_q(), f.e_max()),
    }
}

/// One failing case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub what: String,
    pub inputs: BTreeMap<String, String>,
    /// A command line that re-checks just this case.
    pub replay: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub theorem: Theorem,
    pub config: CheckConfig,
    /// Cases enumerated or drawn.
    pub cases: u64,
    /// Cases outside the theorem's hypotheses.
    pub skipped: u64,
    /// Closed-form size of an exhaustive case space.
    pub expected_cases: Option<u64>,
    pub failures_total: u64,
    pub failures: Vec<Failure>,
    /// Found while mining with a weakened hypothesis; not failures.
    pub counterexamples: Vec<Failure>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} [{}]: {} cases, {} outside hypotheses, {} failures{}",
            self.theorem,
            self.config.cli_flags(),
            self.cases,
            self.skipped,
            self.failures_total,
            match self.expected_cases {
                Some(e) if e == self.cases => " (case count matches closed form)".to_string(),
                Some(e) => format!(" (EXPECTED {e} cases)"),
                None => String::new(),
            }
        )?;
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        for c in &self.failures {
            writeln!(f, "  FAIL {}: {:?}\n    replay: {}", c.what, c.inputs, c.replay)?;
        }
        for c in &self.counterexamples {
            writeln!(f, "  counterexample {}: {:?}\n    replay: {}", c.what, c.inputs, c.replay)?;
        }
        write!(f, "  {}", if self.pass { "pass" } else { "FAIL" })
    }
}

/// Partial results of a check, merged associatively.
#[derive(Clone, Debug, Default)]
pub(crate) struct Tally {
    pub cases: u64,
    pub skipped: u64,
    pub failures_total: u64,
    /// `(ordering key, failure)`, so merged lists are deterministic.
    pub failures: Vec<(Vec<u64>, Failure)>,
    /// Observed values of a diagnostic, e.g. `ℓ`.
    pub seen: BTreeSet<i64>,
}

impl Tally {
    pub fn fail(&mut self, key: Vec<u64>, failure: impl FnOnce() -> Failure) {
        self.failures_total += 1;
        if self.failures.len() < MAX_REPORTED_FAILURES || key < self.failures.last().unwrap().0 {
            self.failures.push((key, failure()));
            self.trim();
        }
    }

    fn trim(&mut self) {
        self.failures.sort_by(|a, b| a.0.cmp(&b.0));
        self.failures.truncate(MAX_REPORTED_FAILURES);
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.cases += other.cases;
        self.skipped += other.skipped;
        self.failures_total += other.failures_total;
        self.failures.extend(other.failures);
        self.trim();
        self.seen.extend(other.seen);
        self
    }

    pub fn finish(self, cfg: &CheckConfig, expected: Option<u64>, mut notes: Vec<String>) -> CheckResult {
        let failures: Vec<Failure> = self.failures.into_iter().map(|(_, f)| f).collect();
        let count_ok = expected.map_or(true, |e| e == self.cases);
        if !count_ok {
            notes.push(format!("enumerated {} cases, closed form says {}", self.cases, expected.unwrap()));
        }
        let (failures, counterexamples) = if cfg.weaken_q {
            if self.failures_total == 0 {
                notes.push("no counterexample found in this window (absence proves nothing)".into());
            } else {
                notes.push(format!("{} counterexamples to the weakened statement", self.failures_total));
            }
            (Vec::new(), failures)
        } else {
            (failures, Vec::new())
        };
        let pass = count_ok && failures.is_empty() && (cfg.weaken_q || self.failures_total == 0);
        CheckResult {
            theorem: cfg.theorem,
            config: cfg.clone(),
            cases: self.cases,
            skipped: self.skipped,
            expected_cases: expected,
            failures_total: if cfg.weaken_q { 0 } else { self.failures_total },
            failures,
            counterexamples,
            notes,
            pass,
        }
    }
}

pub(crate) fn inputs<const K: usize>(pairs: [(&str, String); K]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Runs the check selected by `cfg.theorem`.
pub fn run(cfg: &CheckConfig) -> Result<CheckResult> {
    match cfg.theorem {
        Theorem::Sterbenz => check_sterbenz(cfg),
        Theorem::Sterbenz2 => check_sterbenz_approx2(cfg),
        Theorem::Thm3 => check_thm3(cfg),
        Theorem::Correct1 => check_correct1(cfg),
        Theorem::Correct2 => check_correct2(cfg),
        Theorem::Correct3 => check_correct3(cfg),
        Theorem::Thm6 => check_thm6(cfg),
        Theorem::Thm7 => check_thm7(cfg),
        Theorem::Eft => check_eft(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_names_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.name().parse::<Theorem>().unwrap(), t);
        }
        assert_eq!("thm5".parse::<Theorem>().unwrap(), Theorem::Correct3);
        assert!("thm9".parse::<Theorem>().is_err());
    }

    #[test]
    fn tally_keeps_the_smallest_keys() {
        let f = |i: u64| Failure { what: i.to_string(), inputs: BTreeMap::new(), replay: String::new() };
        let mut a = Tally::default();
        let mut b = Tally::default();
        for i in (0..40).rev() {
            if i % 2 == 0 { a.fail(vec![i], || f(i)) } else { b.fail(vec![i], || f(i)) }
        }
        let m1 = a.clone().merge(b.clone());
        let m2 = b.merge(a);
        assert_eq!(m1.failures_total, 40);
        let keys: Vec<_> = m1.failures.iter().map(|x| x.0[0]).collect();
        assert_eq!(keys, (0..MAX_REPORTED_FAILURES as u64).collect::<Vec<_>>());
        assert_eq!(keys, m2.failures.iter().map(|x| x.0[0]).collect::<Vec<_>>());
    }
}
