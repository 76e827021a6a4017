//! `argred`: generate reduction constants, reduce single arguments, run the
//! theorem checks, and show where the two-rounding first step breaks.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use argred::constgen::{adjust_r_for_rc1_le_1, audit, gen_constants, gen_unaudited, rc1_le_1, render_table};
use argred::constgen::{AuditReport, ConstantRecord, ConstantSet};
use argred::realnum::{Constant, RealEnclosure};
use argred::softfp::{Format, Fpn, Ties};
use argred::theorems::{self, Case, CheckConfig, Mode, Theorem};
use argred::{argred as pipeline, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Thread count for verification campaigns when set.
const THREADS_ENV: &str = "ARGRED_THREADS";

/// Writes to stdout, exiting quietly when the reader has gone away.
fn emit(args: std::fmt::Arguments<'_>) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_fmt(args) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write output: {e}");
        std::process::exit(2);
    }
}

macro_rules! out {
    ($($t:tt)*) => { emit(format_args!($($t)*)) };
}

macro_rules! outln {
    () => { emit(format_args!("\n")) };
    ($($t:tt)*) => { emit(format_args!("{}\n", format_args!($($t)*))) };
}

#[derive(Parser, Debug)]
#[command(name = "argred", version, about = "Exact fma-based argument reduction: constants, reductions, checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print R, C1, C2, C3 for a constant and format.
    Constants(ConstantsArgs),
    /// Reduce one argument and show every intermediate.
    Reduce(ReduceArgs),
    /// Run a theorem check; exits 0 iff it passes.
    Verify(VerifyArgs),
    /// Compare the two-rounding first step with the fma first step.
    #[command(name = "demo-codywaite")]
    DemoCodyWaite(DemoArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TiesArg {
    Even,
    Away,
}

impl From<TiesArg> for Ties {
    fn from(t: TiesArg) -> Ties {
        match t {
            TiesArg::Even => Ties::Even,
            TiesArg::Away => Ties::Away,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct FormatArgs {
    /// Preset format: single, double, double-extended, quad.
    #[arg(long)]
    format: Option<String>,
    /// Precision of a custom format (with --e-min-q), or of a small-precision sweep.
    #[arg(long)]
    p: Option<u32>,
    /// Exponent of the smallest subnormal of a custom format.
    #[arg(long = "e-min-q", allow_hyphen_values = true)]
    e_min_q: Option<i32>,
    /// Largest binade exponent of a custom format.
    #[arg(long = "e-max", default_value_t = 16383)]
    e_max: i32,
    /// Tie-breaking rule of round-to-nearest.
    #[arg(long, value_enum, default_value_t = TiesArg::Even)]
    ties: TiesArg,
}

impl FormatArgs {
    /// The selected format, defaulting to double precision.
    fn resolve(&self) -> Result<Format, Error> {
        let fmt = match (&self.format, self.e_min_q) {
            (Some(_), Some(_)) => return Err(Error::Config("give either --format or --e-min-q, not both".into())),
            (Some(name), None) => {
                Format::preset(name).ok_or_else(|| Error::Config(format!("unknown format `{name}`")))?
            }
            (None, Some(e)) => {
                let p = self.p.ok_or_else(|| Error::Config("a custom format needs --p".into()))?;
                Format::new(p, e, self.e_max)?
            }
            (None, None) => match self.p {
                Some(p) => return Err(Error::Config(format!("--p {p} needs --e-min-q, or use --format"))),
                None => Format::double(),
            },
        };
        Ok(fmt.with_ties(self.ties.into()))
    }
}

#[derive(Args, Debug, Clone)]
struct ConstantArgs {
    /// Constant: pi, ln2, power-of-two scalings such as pi/2, or exact:<number>.
    #[arg(long = "const", value_delimiter = ',')]
    constants: Vec<String>,
    /// File holding a user enclosure (`lo = ...` and `hi = ...` lines).
    #[arg(long = "enclosure-file")]
    enclosure_file: Option<PathBuf>,
}

impl ConstantArgs {
    fn resolve(&self, default: &[Constant]) -> Result<Vec<Constant>, Error> {
        let mut out: Vec<Constant> = self.constants.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        if let Some(path) = &self.enclosure_file {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let enclosure: RealEnclosure = text.parse()?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            out.push(Constant::Fixed { name, enclosure });
        }
        if out.is_empty() {
            out = default.to_vec();
        }
        Ok(out)
    }
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[command(flatten)]
    constant: ConstantArgs,
    #[command(flatten)]
    format: FormatArgs,
    /// Table index width: z is a multiple of 2^-N.
    #[arg(long = "N", default_value_t = 0, allow_hyphen_values = true)]
    n: i32,
    /// Trailing zero bits of C1.
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Both constants in all four preset formats.
    #[arg(long)]
    all: bool,
    /// Append the hypothesis audit; exit 1 if any applicable hypothesis fails.
    #[arg(long)]
    audit: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    /// The argument: `m * 2^e`, a fraction, a decimal, or hex; decimals are
    /// rounded to nearest exactly.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    #[command(flatten)]
    constant: ConstantArgs,
    #[command(flatten)]
    format: FormatArgs,
    #[arg(long = "N", default_value_t = 0, allow_hyphen_values = true)]
    n: i32,
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// sterbenz, sterbenz2, thm3, correct1, correct2, correct3, thm6, thm7, eft.
    #[arg(long, value_parser = parse_theorem)]
    theorem: Theorem,
    /// Radix of the exact-subtraction checks.
    #[arg(long)]
    beta: Option<u32>,
    #[arg(long)]
    p1: Option<u32>,
    #[arg(long)]
    p2: Option<u32>,
    /// Binades enumerated for x (and y).
    #[arg(long)]
    window: Option<u32>,
    /// Comma-separated list.
    #[arg(long = "N", value_delimiter = ',', allow_hyphen_values = true)]
    n: Vec<i32>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',')]
    q: Vec<u32>,
    /// Enumerate the whole case space.
    #[arg(long, conflicts_with = "trials")]
    exhaustive: bool,
    /// Random cases to draw.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    constant: ConstantArgs,
    #[command(flatten)]
    format: FormatArgs,
    /// Skip the sweep in the format with the largest allowed λ.
    #[arg(long = "no-underflow-tight")]
    no_underflow_tight: bool,
    /// Drop q >= 2 and report counterexamples instead of failures.
    #[arg(long = "weaken-q")]
    weaken_q: bool,
    /// Single case: x.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Single case: y.
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Single case: R.
    #[arg(long = "R", allow_hyphen_values = true)]
    r: Option<String>,
    /// Single case: z.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Single case: C2.
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[command(flatten)]
    constant: ConstantArgs,
    #[command(flatten)]
    format: FormatArgs,
    #[arg(long = "N", default_value_t = 0, allow_hyphen_values = true)]
    n: i32,
    #[arg(long)]
    json: bool,
}

fn parse_theorem(s: &str) -> Result<Theorem, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Successful runs that still report a negative outcome exit with 1.
enum Outcome {
    Ok,
    Failed,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

#[derive(Serialize)]
struct ConstantsJson {
    constants: Vec<ConstantRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    audits: Option<Vec<AuditReport>>,
}

fn audited_set(c: &Constant, fmt: Format, n: i32, q: u32) -> Result<ConstantSet, Error> {
    let cs = gen_unaudited(c, fmt, n, q)?;
    if q != 2 && !rc1_le_1(&cs.r, &cs.c1) {
        if let Ok(adjusted) = adjust_r_for_rc1_le_1(&cs) {
            return Ok(adjusted);
        }
    }
    Ok(cs)
}

fn cmd_constants(a: &ConstantsArgs) -> Result<Outcome, Error> {
    let defaults = [Constant::Pi];
    let (constants, formats) = if a.all {
        if !a.constant.constants.is_empty() || a.format.format.is_some() || a.format.e_min_q.is_some() {
            return Err(Error::Config("--all selects the constants and formats itself".into()));
        }
        (vec![Constant::Pi, Constant::Ln2], Format::presets().to_vec())
    } else {
        (a.constant.resolve(&defaults)?, vec![a.format.resolve()?])
    };
    let formats: Vec<Format> = formats.into_iter().map(|f| f.with_ties(a.format.ties.into())).collect();

    let mut groups = Vec::new();
    for c in &constants {
        let mut sets = Vec::new();
        for &fmt in &formats {
            sets.push(if a.audit { audited_set(c, fmt, a.n, a.q)? } else { gen_constants(c, fmt, a.n, a.q)? });
        }
        groups.push((c, sets));
    }
    let audits: Option<Vec<AuditReport>> =
        a.audit.then(|| groups.iter().flat_map(|(_, sets)| sets.iter().map(|cs| audit(cs, a.n))).collect());
    let pass = audits.as_ref().map_or(true, |v| v.iter().all(|r| r.pass()));

    if a.json {
        let records = groups.iter().flat_map(|(_, sets)| sets.iter().map(|cs| cs.record())).collect();
        outln!("{}", to_json(&ConstantsJson { constants: records, audits: audits.clone() }));
    } else {
        for (i, (c, sets)) in groups.iter().enumerate() {
            if i > 0 {
                outln!();
            }
            outln!("C = {c}  (N = {}, q = {})", a.n, a.q);
            out!("{}", render_table(sets));
            for cs in sets.iter().filter(|cs| cs.r_nudge != 0) {
                outln!("note: R moved {} ulps from 1/C rounded in {} so that R C1 <= 1", cs.r_nudge, cs.fmt);
            }
        }
        if let Some(reports) = &audits {
            for r in reports {
                outln!("\n{r}");
            }
        }
    }
    if !pass {
        for r in audits.iter().flatten() {
            for item in r.failures() {
                eprintln!("audit failed: {} / {}: {} ({})", r.format, item.theorem, item.hypothesis, item.detail);
            }
        }
        return Ok(Outcome::Failed);
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct ReduceJson {
    constants: ConstantRecord,
    reduction: pipeline::ReductionRecord,
}

fn cmd_reduce(a: &ReduceArgs) -> Result<Outcome, Error> {
    let fmt = a.format.resolve()?;
    let constants = a.constant.resolve(&[Constant::Pi])?;
    let [c] = constants.as_slice() else {
        return Err(Error::Config("reduce takes exactly one constant".into()));
    };
    let x = match Fpn::parse_exact(&a.x, fmt) {
        Ok(x) => x,
        Err(Error::NotRepresentable { .. }) => {
            let x = Fpn::parse_nearest(&a.x, fmt)?;
            eprintln!("note: x = {} is not a {fmt} number; rounded to {x}", a.x);
            x
        }
        Err(e) => return Err(e),
    };
    let cs = gen_constants(c, fmt, a.n, a.q)?;
    let out = pipeline::reduce(&x, &cs, a.n)?;
    if a.json {
        outln!("{}", to_json(&ReduceJson { constants: cs.record(), reduction: out.record() }));
    } else {
        outln!("C = {c} in {fmt}, N = {}, q = {}", a.n, a.q);
        outln!("{out}");
    }
    Ok(Outcome::Ok)
}

fn verify_config(a: &VerifyArgs) -> Result<CheckConfig, Error> {
    let mut cfg = CheckConfig::new(a.theorem);
    if let Some(b) = a.beta {
        cfg.beta = b;
    }
    if let Some(p) = a.format.p {
        cfg.p = p;
    }
    if let Some(p) = a.p1 {
        cfg.p1 = p;
    }
    if let Some(p) = a.p2 {
        cfg.p2 = p;
    }
    if let Some(w) = a.window {
        cfg.window = w;
    }
    if !a.n.is_empty() {
        cfg.n = a.n.clone();
    }
    if !a.q.is_empty() {
        cfg.q = a.q.clone();
    }
    cfg.ties = a.format.ties.into();
    if a.format.format.is_some() || a.format.e_min_q.is_some() {
        cfg.format = a.format.resolve()?;
    }
    cfg.constants = a.constant.resolve(&cfg.constants)?;
    cfg.mode = match (a.exhaustive, a.trials, cfg.mode) {
        (true, _, _) => Mode::Exhaustive,
        (false, Some(trials), _) => Mode::Randomized { seed: a.seed, trials },
        (false, None, Mode::Randomized { trials, .. }) => Mode::Randomized { seed: a.seed, trials },
        (false, None, m) => m,
    };
    cfg.underflow_tight &= !a.no_underflow_tight;
    cfg.weaken_q = a.weaken_q;
    let case = Case { x: a.x.clone(), y: a.y.clone(), r: a.r.clone(), z: a.z.clone(), c2: a.c2.clone() };
    if case != Case::default() {
        cfg.case = Some(case);
    }
    Ok(cfg)
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, Error> {
    let cfg = verify_config(a)?;
    let result = theorems::run(&cfg)?;
    if a.json {
        outln!("{}", to_json(&result));
    } else {
        outln!("{result}");
    }
    Ok(if result.pass { Outcome::Ok } else { Outcome::Failed })
}

fn cmd_demo(a: &DemoArgs) -> Result<Outcome, Error> {
    let fmt = a.format.resolve()?;
    let constants = a.constant.resolve(&[Constant::Pi])?;
    let [c] = constants.as_slice() else {
        return Err(Error::Config("demo-codywaite takes exactly one constant".into()));
    };
    let report = theorems::demo_for(c, fmt, a.n)?;
    if a.json {
        outln!("{}", to_json(&report));
    } else {
        outln!("{report}");
    }
    Ok(if report.found() { Outcome::Ok } else { Outcome::Failed })
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<Outcome, Error> {
        init_threads()?;
        match &cli.command {
            Command::Constants(a) => cmd_constants(a),
            Command::Reduce(a) => cmd_reduce(a),
            Command::Verify(a) => cmd_verify(a),
            Command::DemoCodyWaite(a) => cmd_demo(a),
        }
    };
    match run() {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
