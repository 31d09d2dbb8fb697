//! Acceptance suite. Runs every criterion at full scale, prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use takagi::classify::{classify_sequence, DiffLabel};
use takagi::erwvrp::{
    correlation, correlation_by_quadrature, exact_second_moment, localization_class,
    transition_power, window_second_moment, Localization, MemoryParameter,
};
use takagi::experiments::{
    k0_tail_experiment, lil_tracker, localization_experiment, takagi_clt_experiment,
    walk_clt_experiment, Side, TakagiCltConfig, Tolerances, WalkCltConfig,
};
use takagi::radix::RadixPoint;
use takagi::takagi::{
    eval_f, eval_f_exact, functional_eq_residual, increment, increment_decomposition,
    psi_plus_point, SeriesTruncation, DEFAULT_ORBIT_LIMIT,
};
use takagi::{ExperimentReport, StepSequence};

const SEED: u64 = 20_240_601;

type Job = Box<dyn Fn() -> takagi::Result<ExperimentReport>>;

/// Runs stochastic experiments, writes their reports and keeps the job so
/// it can be replayed for the reproducibility check.
struct Recorder {
    dir: tempfile::TempDir,
    jobs: Vec<(String, Job)>,
}

impl Recorder {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().expect("tempdir"),
            jobs: Vec::new(),
        }
    }

    fn paths(&self, name: &str) -> (PathBuf, PathBuf) {
        (
            self.dir.path().join(format!("{name}.json")),
            self.dir.path().join(format!("{name}.csv")),
        )
    }

    fn run(&mut self, name: &str, job: Job) -> takagi::Result<ExperimentReport> {
        let report = job()?;
        let (json, csv) = self.paths(name);
        fs::write(json, report.to_json()).expect("write json");
        fs::write(csv, report.to_csv()).expect("write csv");
        self.jobs.push((name.to_string(), job));
        Ok(report)
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn failures(report: &ExperimentReport) -> String {
    report
        .failures()
        .map(|s| format!("{}={}", s.name, s.value))
        .collect::<Vec<_>>()
        .join(", ")
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn exact_laws() -> Outcome {
    let mut worst_matrix: f64 = 0.0;
    let mut worst_corr: f64 = 0.0;
    for p in [0.1, 0.25, 0.5, 2.0 / 3.0, 0.9] {
        let mp = MemoryParameter::new(p).unwrap();
        let one_step = [[p, 1.0 - p], [1.0 - p, p]];
        let mut acc = [[1.0, 0.0], [0.0, 1.0]];
        for m in 0..=64 {
            let closed = transition_power(&mp, m);
            for i in 0..2 {
                for j in 0..2 {
                    worst_matrix = worst_matrix.max((closed[i][j] - acc[i][j]).abs());
                }
            }
            acc = mat_mul(acc, one_step);
        }
        for j in 0..=20 {
            let diff = (correlation(&mp, j) - correlation_by_quadrature(&mp, j, 1024)).abs();
            worst_corr = worst_corr.max(diff);
        }
    }

    // a_k = 1: E[T_n^2] = n + 2 sum_{j<n} (n - j) alpha^j, exactly
    let mut exact_ok = true;
    for (num, den) in [(1, 10), (1, 4), (1, 2), (2, 3), (9, 10), (7, 13)] {
        let p = q(num, den);
        let alpha = &p * BigInt::from(2) - BigRational::one();
        for n in [1i64, 2, 5, 17, 60] {
            let weights = vec![BigRational::one(); n as usize];
            let recursion = window_second_moment(&alpha, &weights);
            let mut closed = BigRational::from_integer(n.into());
            let mut power = alpha.clone();
            for j in 1..n {
                closed += &power * BigInt::from(2 * (n - j));
                power *= &alpha;
            }
            exact_ok &= recursion == closed;
            let mp = MemoryParameter::new(num as f64 / den as f64).unwrap();
            let float = exact_second_moment(&mp, &StepSequence::constant(1.0), 0, n as u64).unwrap();
            let closed_f = num_traits::ToPrimitive::to_f64(&closed).unwrap();
            exact_ok &= (float - closed_f).abs() <= 1e-12 * closed_f.abs().max(1.0);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sandwich_ok = 0;
    for _ in 0..200 {
        let p: f64 = rng.random_range(0.02..0.98);
        let mp = MemoryParameter::new(p).unwrap();
        let n: u64 = rng.random_range(2..300);
        let m: u64 = rng.random_range(0..n);
        let a = StepSequence::explicit((0..n).map(|_| rng.random_range(-3.0..3.0)).collect());
        let moment = exact_second_moment(&mp, &a, m, n).unwrap();
        let squares = a.window_sq_sum(m, n);
        let slack = 1e-9 * squares;
        if moment >= squares / mp.k - slack && moment <= squares * mp.k + slack {
            sandwich_ok += 1;
        }
    }
    outcome(
        worst_matrix <= 1e-12 && worst_corr <= 1e-8 && exact_ok && sandwich_ok == 200,
        format!(
            "max |Q^m error| {worst_matrix:.1e}, max |corr error| {worst_corr:.1e}, exact a=1 moments {}, sandwich {sandwich_ok}/200",
            if exact_ok { "equal" } else { "DIFFER" }
        ),
    )
}

fn walk_clt(rec: &mut Recorder) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, p) in [("1/2", 0.5), ("2/3", 2.0 / 3.0), ("0.9", 0.9)] {
        let cfg = WalkCltConfig {
            p,
            n: 10_000,
            samples: 100_000,
            seed: SEED,
            negative_control: p == 0.9,
        };
        let report = rec
            .run(&format!("walk_clt_p{}", label.replace('/', "_")), Box::new(move || {
                walk_clt_experiment(&cfg, &Tolerances::default())
            }))
            .unwrap();
        pass &= report.passed;
        parts.push(format!("p={label} KS {:.4}", report.value("ks_distance").unwrap()));
        if let Some(neg) = report.value("negative_control_ks") {
            parts.push(format!("unscaled KS {neg:.3}"));
        }
        if !report.passed {
            parts.push(format!("failed: {}", failures(&report)));
        }
    }
    outcome(pass, parts.join(", "))
}

fn walk_lil(rec: &mut Recorder) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut medians = Vec::new();
    for (label, p) in [("1/2", 0.5), ("2/3", 2.0 / 3.0)] {
        let report = rec
            .run(&format!("walk_lil_p{}", label.replace('/', "_")), Box::new(move || {
                lil_tracker(p, 1_000_000, 100, SEED, &Tolerances::default())
            }))
            .unwrap();
        pass &= report.passed;
        let m = report.value("running_max_q50").unwrap();
        medians.push(m);
        parts.push(format!(
            "p={label} median/limit {:.3}",
            report.value("median_over_limit").unwrap()
        ));
    }
    parts.push(format!("median ratio {:.3} (limit ratio 1.414)", medians[1] / medians[0]));
    outcome(pass, parts.join(", "))
}

fn localization(rec: &mut Recorder) -> Outcome {
    let converging = [
        StepSequence::geometric(0.5),
        StepSequence::geometric(-0.9),
        StepSequence::power(0.51),
        StepSequence::power(1.0),
        StepSequence::power(2.0),
    ];
    let diverging = [
        StepSequence::power(0.5),
        StepSequence::power(0.3),
        StepSequence::power(0.0),
        StepSequence::constant(1.0),
        StepSequence::constant(-0.25),
    ];
    let labels_ok = converging.iter().all(|a| localization_class(a) == Localization::Converges)
        && diverging.iter().all(|a| localization_class(a) == Localization::Diverges);

    let ns = [100u64, 1_000, 10_000];
    let report = rec
        .run("localization_p0.8", Box::new(move || {
            localization_experiment(0.8, &StepSequence::power(0.5), &ns, 10_000, SEED, &Tolerances::default())
        }))
        .unwrap();
    let mut z = Vec::new();
    let mut growth_ok = true;
    for n in ns {
        z.push(format!("{:.2}", report.value(&format!("z_score_n{n}")).unwrap()));
        let window = report.value(&format!("window_sq_sum_n{n}")).unwrap();
        growth_ok &= (window - std::f64::consts::LN_2).abs() <= 0.01;
        growth_ok &= report.value(&format!("mc_over_lower_n{n}")).unwrap() >= 1.0;
    }
    outcome(
        labels_ok && report.passed && growth_ok,
        format!(
            "labels {}, z-scores [{}], window sums within 0.01 of ln 2: {growth_ok}",
            if labels_ok { "ok" } else { "WRONG" },
            z.join(", ")
        ),
    )
}

/// Exact slope check for `k <= k0_eff` plus defect and tail bounds.
fn decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0usize;
    let mut checked_terms = 0usize;
    let mut cases = 0usize;
    for base in [2u32, 3, 4, 5] {
        for _ in 0..10_000 {
            let ell: u32 = rng.random_range(1..=24);
            let depth = 2 * ell + 16;
            let x = RadixPoint::uniform(base, depth, &mut rng).unwrap();
            let h = RadixPoint::inverse_power(base, depth, ell).unwrap();
            let dec = increment_decomposition(&x, &h, None).unwrap();
            let y = x.checked_add(&h).unwrap();
            // psi_k = w_k / r^(D+k-1) and h = h_u / r^D, so
            // psi_k(y) - psi_k(x) = sign h  <=>  w_k(y) - w_k(x) = sign h_u r^(k-1)
            let hu = BigInt::from(h.mantissa().clone());
            let top = dec.k0_eff.max(0) as u32;
            let pairs = x.tent_numerators(top).zip(y.tent_numerators(top));
            let mut scale = BigInt::one();
            for (k, (wx, wy)) in (1..=top).zip(pairs) {
                let sign = psi_plus_point(&x, k).unwrap().value();
                let lhs = BigInt::from(wy) - BigInt::from(wx);
                if lhs != &hu * &scale * sign {
                    violations += 1;
                }
                scale *= base;
                checked_terms += 1;
            }
            if !dec.defect_within_bound() || !dec.tail_within_bound() {
                violations += 1;
            }
            if dec.total() != takagi::takagi::Interval::point(increment(&x, &h).unwrap()) {
                violations += 1;
            }
            cases += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{cases} cases, {checked_terms} linear terms checked, {violations} violations"),
    )
}

fn k0_tails(rec: &mut Recorder) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for base in [2u32, 3] {
        let report = rec
            .run(&format!("k0_tail_r{base}"), Box::new(move || {
                k0_tail_experiment(base, 16, 100_000, SEED, 8, &Tolerances::default())
            }))
            .unwrap();
        pass &= report.passed;
        parts.push(format!(
            "r={base} freq(j=4) {:.4}",
            report.value("freq_k0_j4").unwrap()
        ));
        if base == 3 {
            parts.push(format!("joint freq(j=3) {:.4}", report.value("freq_k0min_j3").unwrap()));
        }
        if !report.passed {
            parts.push(format!("failed: {}", failures(&report)));
        }
    }
    outcome(pass, parts.join(", "))
}

fn takagi_clt(rec: &mut Recorder) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (base, ell) in [(2u32, 20u32), (3, 14)] {
        let cfg = TakagiCltConfig {
            base,
            ell,
            samples: 100_000,
            seed: SEED,
            side: Side::Right,
            depth: None,
        };
        let report = rec
            .run(&format!("takagi_clt_r{base}"), Box::new(move || {
                takagi_clt_experiment(&cfg, &Tolerances::default())
            }))
            .unwrap();
        pass &= report.passed;
        parts.push(format!(
            "r={base} KS {:.4} var {:.3}",
            report.value("ks_distance").unwrap(),
            report.value("variance").unwrap()
        ));
        if let Some(neg) = report.value("negative_control_ks") {
            parts.push(format!("without odd factor KS {neg:.4}"));
        }
        if !report.passed {
            parts.push(format!("failed: {}", failures(&report)));
        }
    }
    outcome(pass, parts.join(", "))
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut bad = 0;
    for base in [2u32, 3, 10] {
        let trunc = SeriesTruncation::default_for_base(base).unwrap();
        let limit = &trunc.tail_bound * BigInt::from(base + 1);
        for _ in 0..1_000 {
            let depth = rng.random_range(1..=30);
            let x = RadixPoint::uniform(base, depth, &mut rng).unwrap().to_rational();
            let res = functional_eq_residual(base, &x, trunc.terms).unwrap();
            if !res.contains(&BigRational::zero()) || res.width() > limit {
                bad += 1;
            }
        }
    }
    let third = eval_f_exact(2, &q(1, 3), DEFAULT_ORBIT_LIMIT).unwrap() == q(2, 3)
        && eval_f(2, &q(1, 3), 40).unwrap().enclosure.contains(&q(2, 3));
    let half = eval_f_exact(2, &q(1, 2), DEFAULT_ORBIT_LIMIT).unwrap() == q(1, 2)
        && eval_f(2, &q(1, 2), 1).unwrap().value == q(1, 2);
    outcome(
        bad == 0 && third && half,
        format!("{bad} residual failures over 3000 points, f_2(1/3)=2/3: {third}, f_2(1/2)=1/2: {half}"),
    )
}

fn classification() -> Outcome {
    use DiffLabel::*;
    let table = [
        (StepSequence::geometric(0.5), AbsolutelyContinuous),
        (StepSequence::geometric(-0.99), AbsolutelyContinuous),
        (StepSequence::power(0.75), AbsolutelyContinuous),
        (StepSequence::scaled_power(5.0, 2.0), AbsolutelyContinuous),
        (StepSequence::explicit(vec![1.0, -1.0, 4.0]), AbsolutelyContinuous),
        (StepSequence::power(0.5), AlmostEverywhereNondifferentiable),
        (StepSequence::power(0.25), AlmostEverywhereNondifferentiable),
        (StepSequence::scaled_power(-2.0, 0.1), AlmostEverywhereNondifferentiable),
        (StepSequence::power(0.5).with_prefix(vec![9.0; 6]), AlmostEverywhereNondifferentiable),
        (StepSequence::constant(1.0), NowhereFiniteDerivative),
        (StepSequence::geometric(1.5), NowhereFiniteDerivative),
        (StepSequence::power(-0.5), NowhereFiniteDerivative),
    ];
    let mut wrong = Vec::new();
    for (a, expected) in &table {
        let got = classify_sequence(a).unwrap().label;
        if got != *expected {
            wrong.push(format!("{a}: {got}"));
        }
    }
    let ones = StepSequence::constant(1.0);
    let all_bases = (2..=16u32).all(|r| {
        ones.check_summable(r).is_ok() && classify_sequence(&ones).unwrap().label == NowhereFiniteDerivative
    });
    outcome(
        wrong.is_empty() && all_bases,
        format!(
            "{}/12 table rows, a=1 nowhere differentiable for r=2..16: {all_bases}{}",
            12 - wrong.len(),
            if wrong.is_empty() { String::new() } else { format!(" wrong: {}", wrong.join("; ")) }
        ),
    )
}

fn reproducibility(rec: &Recorder) -> Outcome {
    let mut mismatched = Vec::new();
    for (name, job) in &rec.jobs {
        let (json, csv) = rec.paths(name);
        let again = job().unwrap();
        if fs::read(json).unwrap() != again.to_json().into_bytes()
            || fs::read(csv).unwrap() != again.to_csv().into_bytes()
        {
            mismatched.push(name.clone());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{} reports re-run, {} differ{}",
            rec.jobs.len(),
            mismatched.len(),
            if mismatched.is_empty() { String::new() } else { format!(": {}", mismatched.join(", ")) }
        ),
    )
}

fn main() -> ExitCode {
    let mut rec = Recorder::new();
    let mut all = true;
    let mut report = |id: u32, title: &str, limit: Option<Duration>, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = out.pass && in_time;
        all &= pass;
        let budget = limit.map(|l| format!(" / {}s", l.as_secs())).unwrap_or_default();
        println!(
            "[{}] {id:>2} {title}: {} ({:.1}s{budget})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    };
    let secs = |s| Some(Duration::from_secs(s));
    report(1, "exact laws", secs(1), &mut exact_laws);
    report(2, "walk CLT", secs(60), &mut || walk_clt(&mut rec));
    report(3, "walk LIL", secs(120), &mut || walk_lil(&mut rec));
    report(4, "localization", None, &mut || localization(&mut rec));
    report(5, "linearity and decomposition", secs(60), &mut decomposition);
    report(6, "k0 tails", None, &mut || k0_tails(&mut rec));
    report(7, "Takagi CLT", secs(300), &mut || takagi_clt(&mut rec));
    report(8, "function identities", None, &mut identities);
    report(9, "classification", None, &mut classification);
    report(10, "reproducibility", None, &mut || reproducibility(&rec));
    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
