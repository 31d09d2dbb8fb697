//! Command-line front end for the `takagi` crate.
//!
//! Every experiment subcommand writes an [`ExperimentReport`] (CSV or JSON)
//! and exits with status 0 only if all of its tolerance checks pass. Failing
//! statistics are named on stderr.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use takagi::erwvrp::{exact_second_moment, simulate_path, MemoryParameter};
use takagi::experiments::{
    derivative_walk_experiment, k0_tail_experiment, lil_tracker, localization_experiment,
    spectral_experiment, takagi_clt_experiment, walk_clt_experiment, Side, TakagiCltConfig,
    Tolerances, WalkCltConfig,
};
use takagi::report::tool_id;
use takagi::takagi::{eval_f, eval_f_exact, eval_f_point, SeriesTruncation, DEFAULT_ORBIT_LIMIT};
use takagi::{ExperimentReport, RadixPoint, ReportFormat, Statistic, StepSequence};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TAKAGI_OUT_DIR";

/// Exit status when a tolerance check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for invalid configuration or evaluation errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "takagi", version, about = "Takagi functions, correlated walks and their limit laws")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Output format for report files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file; defaults to `<out-dir>/<experiment>.<ext>` when an
    /// output directory is set, else stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Default output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,

    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Right,
    Left,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ToleranceArgs {
    /// Upper bound for KS distances (overrides the per-experiment default).
    #[arg(long, global = true)]
    pub ks_tol: Option<f64>,
    /// Lower bound for negative-control KS distances.
    #[arg(long, global = true)]
    pub negative_ks: Option<f64>,
    /// Band for the LIL median ratio, as `LO,HI`.
    #[arg(long, global = true, value_parser = parse_band)]
    pub lil_band: Option<(f64, f64)>,
    /// Monte Carlo margin in standard errors.
    #[arg(long, global = true)]
    pub sigmas: Option<f64>,
}

impl ToleranceArgs {
    fn resolve(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(v) = self.ks_tol {
            t.walk_ks = v;
            t.takagi_ks = v;
        }
        if let Some(v) = self.negative_ks {
            t.walk_negative_ks = v;
            t.takagi_negative_ks = v;
        }
        if let Some(b) = self.lil_band {
            t.lil_band = b;
        }
        if let Some(s) = self.sigmas {
            t.sigmas = s;
        }
        t
    }
}

fn parse_band(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err("LO must not exceed HI".into());
    }
    Ok((lo, hi))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate f_r at a rational `p/q` or a base-r digit string `0.d1d2...`.
    Eval {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        x: String,
        /// Number of series terms (default: tail bound at most 2^-40).
        #[arg(long)]
        terms: Option<u32>,
        /// Also compute the exact value of the full series (rational input).
        #[arg(long)]
        exact: bool,
    },
    /// Simulate the walk: one path, or a variance summary over many.
    Simulate {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Emit the Var(T_n)/n summary even for a single path.
        #[arg(long)]
        summary: bool,
    },
    /// Walk CLT: KS distance of the rescaled endpoint.
    Clt {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Also check the unrescaled statistic is far from normal.
        #[arg(long)]
        negative_control: bool,
    },
    /// CLT for normalized increments of f_r at h = r^-ell.
    TakagiClt {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SideArg::Right)]
        side: SideArg,
        /// Digits per sample (default 2*ell + 16).
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Running maxima of T_n / sqrt(2 n log log n).
    Lil {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Tail frequencies of m - k0 at h = r^-ell.
    K0tail {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        max_j: u32,
    },
    /// Second moment of weighted walk windows, Monte Carlo against exact.
    Localize {
        #[arg(long)]
        p: f64,
        /// Weight sequence, e.g. `power:0.5`, `geometric:0.9`, `list:1,2`.
        #[arg(long, default_value = "power:0.5")]
        a: String,
        /// Comma-separated walk lengths.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        ns: Vec<u64>,
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Differentiability class of f_{r,a} from the weight sequence.
    Classify {
        #[arg(long, default_value_t = 2)]
        r: u32,
        /// Family name: constant, power or geometric.
        #[arg(long, conflicts_with = "sequence")]
        family: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Full sequence specification, e.g. `power:0.5@1,2`.
        #[arg(long)]
        sequence: Option<String>,
    },
    /// Correlation (2p-1)^j against quadrature of the spectral density.
    Spectral {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        j: u32,
        #[arg(long, default_value_t = 1024)]
        nodes: usize,
    },
    /// Repeat frequency of the derivative-sign walk against p_r.
    DerivativeWalk {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] takagi::Error),
    #[error("{0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// `p/q` followed by a 17-significant-digit decimal.
pub fn render_rational(v: &BigRational) -> String {
    format!("{v} ({})", decimal17(v))
}

/// Correctly rounded 17-significant-digit scientific rendering.
pub fn decimal17(v: &BigRational) -> String {
    if v.is_zero() {
        return "0".into();
    }
    let neg = v.is_negative();
    let a = v.abs();
    let ten = BigInt::from(10);
    let pow10 = |e: i64| -> BigRational {
        if e >= 0 {
            BigRational::from_integer(ten.pow(e as u32))
        } else {
            BigRational::new(BigInt::from(1), ten.pow((-e) as u32))
        }
    };
    // exponent estimate from f64, then corrected exactly
    let mut e = a.to_f64().map(|f| f.log10().floor() as i64).unwrap_or(0);
    while a >= pow10(e + 1) {
        e += 1;
    }
    while a < pow10(e) {
        e -= 1;
    }
    let mut digits = (&a * pow10(16 - e)).round().to_integer();
    if digits >= ten.pow(17) {
        digits /= 10;
        e += 1;
    }
    let s = digits.to_string();
    format!("{}{}.{}e{e}", if neg { "-" } else { "" }, &s[..1], &s[1..])
}

fn parse_rational(text: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::Config(format!("cannot parse {text:?} as p/q"));
    let (n, d) = text.split_once('/').unwrap_or((text, "1"));
    let n: BigInt = n.trim().parse().map_err(|_| bad())?;
    let d: BigInt = d.trim().parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(CliError::Config("zero denominator".into()));
    }
    Ok(BigRational::new(n, d))
}

/// Where and how a command's output goes.
struct Sink<'a> {
    cfg: &'a RunConfig,
}

impl Sink<'_> {
    fn extension(&self) -> &'static str {
        match self.cfg.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    fn write(&self, stem: &str, body: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
        let target = match (&self.cfg.out, &self.cfg.out_dir) {
            (Some(path), _) => Some(path.clone()),
            (None, Some(dir)) => {
                fs::create_dir_all(dir)?;
                Some(dir.join(format!("{stem}.{}", self.extension())))
            }
            (None, None) => None,
        };
        match target {
            Some(path) => {
                fs::write(&path, body)?;
                eprintln!("wrote {}", path.display());
            }
            None => stdout.write_all(body.as_bytes())?,
        }
        Ok(())
    }

    fn report(&self, stem: &str, report: &ExperimentReport, stdout: &mut dyn Write) -> Result<i32, CliError> {
        self.write(stem, &report.render(self.cfg.format.into()), stdout)?;
        for s in report.failures() {
            let bound = match (s.lower, s.upper) {
                (Some(l), Some(u)) => format!("[{l}, {u}]"),
                (Some(l), None) => format!(">= {l}"),
                (None, Some(u)) => format!("<= {u}"),
                (None, None) => String::new(),
            };
            eprintln!("FAIL {}: {} = {} (required {bound})", report.experiment, s.name, s.value);
        }
        Ok(if report.passed { 0 } else { EXIT_CHECK_FAILED })
    }
}

/// Parses arguments and runs; returns the process exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match run(&cfg, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let sink = Sink { cfg };
    let tol = cfg.tolerances.resolve();
    match &cfg.command {
        Command::Eval { r, x, terms, exact } => cmd_eval(&sink, *r, x, *terms, *exact, stdout),
        Command::Simulate {
            p,
            n,
            samples,
            seed,
            summary,
        } => cmd_simulate(&sink, *p, *n, *samples, *seed, *summary, &tol, stdout),
        Command::Clt {
            p,
            n,
            samples,
            seed,
            negative_control,
        } => {
            let c = WalkCltConfig {
                p: *p,
                n: *n,
                samples: *samples,
                seed: *seed,
                negative_control: *negative_control,
            };
            sink.report(&format!("walk_clt_{seed}"), &walk_clt_experiment(&c, &tol)?, stdout)
        }
        Command::TakagiClt {
            r,
            ell,
            samples,
            seed,
            side,
            depth,
        } => {
            let c = TakagiCltConfig {
                base: *r,
                ell: *ell,
                samples: *samples,
                seed: *seed,
                side: match side {
                    SideArg::Right => Side::Right,
                    SideArg::Left => Side::Left,
                },
                depth: *depth,
            };
            sink.report(&format!("takagi_clt_{seed}"), &takagi_clt_experiment(&c, &tol)?, stdout)
        }
        Command::Lil { p, n_max, paths, seed } => sink.report(
            &format!("walk_lil_{seed}"),
            &lil_tracker(*p, *n_max, *paths, *seed, &tol)?,
            stdout,
        ),
        Command::K0tail {
            r,
            ell,
            samples,
            seed,
            max_j,
        } => sink.report(
            &format!("k0_tail_{seed}"),
            &k0_tail_experiment(*r, *ell, *samples, *seed, *max_j, &tol)?,
            stdout,
        ),
        Command::Localize { p, a, ns, paths, seed } => {
            let a: StepSequence = a.parse()?;
            sink.report(
                &format!("localization_{seed}"),
                &localization_experiment(*p, &a, ns, *paths, *seed, &tol)?,
                stdout,
            )
        }
        Command::Classify {
            r,
            family,
            gamma,
            q,
            c,
            sequence,
        } => {
            let a = sequence_from_flags(family.as_deref(), *gamma, *q, *c, sequence.as_deref())?;
            let report = takagi::classify::classify_report(&a, *r)?;
            eprintln!("{}", report.parameters["label"]);
            sink.report("classify", &report, stdout)
        }
        Command::Spectral { p, j, nodes } => {
            sink.report("spectral", &spectral_experiment(*p, *j, *nodes)?, stdout)
        }
        Command::DerivativeWalk { r, n, samples, seed } => sink.report(
            &format!("derivative_walk_{seed}"),
            &derivative_walk_experiment(*r, *n, *samples, *seed, &tol)?,
            stdout,
        ),
    }
}

fn sequence_from_flags(
    family: Option<&str>,
    gamma: Option<f64>,
    q: Option<f64>,
    c: f64,
    text: Option<&str>,
) -> Result<StepSequence, CliError> {
    if let Some(text) = text {
        return Ok(text.parse()?);
    }
    let missing = |flag: &str, fam: &str| CliError::Config(format!("--family {fam} requires --{flag}"));
    match family {
        Some("constant") => Ok(StepSequence::constant(c)),
        Some("power") => Ok(StepSequence::scaled_power(c, gamma.ok_or_else(|| missing("gamma", "power"))?)),
        Some("geometric") => Ok(StepSequence::scaled_geometric(c, q.ok_or_else(|| missing("q", "geometric"))?)),
        Some(other) => Err(CliError::Config(format!("unknown family {other:?}"))),
        None => Err(CliError::Config("give --family or --sequence".into())),
    }
}

fn cmd_eval(
    sink: &Sink<'_>,
    r: u32,
    x: &str,
    terms: Option<u32>,
    exact: bool,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let terms = match terms {
        Some(t) => t,
        None => SeriesTruncation::default_for_base(r)?.terms,
    };
    let (value, exact_value) = if x.contains('.') {
        let depth = x.split_once('.').map(|(_, f)| f.len() as u32).unwrap_or(0).max(1);
        let point = RadixPoint::parse_digits(r, depth, x)?;
        let v = eval_f_point(&point, terms)?;
        // r-adic points have finite expansions: the full series is exact at N >= D
        let e = exact.then(|| eval_f_point(&point, depth).map(|s| s.value)).transpose()?;
        (v, e)
    } else {
        let q = parse_rational(x)?;
        let v = eval_f(r, &q, terms)?;
        let e = exact.then(|| eval_f_exact(r, &q, DEFAULT_ORBIT_LIMIT)).transpose()?;
        (v, e)
    };
    let mut body = String::new();
    body.push_str(&format!("# tool={}\n# command=eval r={r} x={x} terms={terms}\n", tool_id()));
    body.push_str(&format!("value={}\n", render_rational(&value.value)));
    body.push_str(&format!("tail_bound={}\n", render_rational(&value.tail_bound)));
    body.push_str(&format!(
        "enclosure=[{}, {}]\n",
        decimal17(&value.enclosure.lo),
        decimal17(&value.enclosure.hi)
    ));
    if let Some(e) = exact_value {
        body.push_str(&format!("exact={}\n", render_rational(&e)));
    }
    // eval output is text; the format flag applies to reports only
    sink.write(&format!("eval_r{r}"), &body, stdout)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    sink: &Sink<'_>,
    p: f64,
    n: usize,
    samples: usize,
    seed: u64,
    summary: bool,
    tol: &Tolerances,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let mp = MemoryParameter::new(p)?;
    if samples == 0 {
        return Err(CliError::Config("--samples must be at least 1".into()));
    }
    if samples == 1 && !summary {
        let path = simulate_path(&mp, n, seed, 0)?;
        let mut body = format!(
            "# tool={}\n# experiment=simulate\n# seed={seed}\n# param.p={p}\n# param.n={n}\nk,step,sum\n",
            tool_id()
        );
        for (k, (x, s)) in path.steps.iter().zip(&path.sums[1..]).enumerate() {
            body.push_str(&format!("{},{x},{s}\n", k + 1));
        }
        sink.write(&format!("simulate_{seed}"), &body, stdout)?;
        return Ok(0);
    }
    let endpoints: Vec<f64> = (0..samples as u64)
        .map(|i| simulate_path(&mp, n, seed, i).map(|w| w.endpoint() as f64))
        .collect::<takagi::Result<_>>()?;
    let second = endpoints.iter().map(|t| t * t).sum::<f64>() / samples as f64;
    let exact = exact_second_moment(&mp, &StepSequence::constant(1.0), 0, n as u64)? / n as f64;
    let fourth = endpoints.iter().map(|t| t.powi(4)).sum::<f64>() / samples as f64;
    let sigma = ((fourth - second * second).max(0.0) / samples as f64).sqrt() / n as f64;
    let mut report = ExperimentReport::new("simulate", Some(seed))
        .param("p", p)
        .param("n", n)
        .param("samples", samples);
    report.push(Statistic::info("var_over_n", second / n as f64));
    report.push(Statistic::info("exact_var_over_n", exact));
    report.push(Statistic::info("asymptotic_var_over_n", mp.asymptotic_variance()));
    let margin = tol.sigmas * sigma;
    report.push(Statistic::checked(
        "var_over_n_vs_exact",
        second / n as f64 - exact,
        Some(-margin),
        Some(margin),
    ));
    sink.report(&format!("simulate_{seed}"), &report, stdout)
}
