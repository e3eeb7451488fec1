//! Acceptance checks. Prints one line per criterion and exits nonzero if
//! any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use gr_core::bounds::{self, Comparison, HTable, LargeNat, Mode};
use gr_core::certificate::{CertVerdict, Certificate};
use gr_core::coloring::{ColoringOracle, ColoringTable};
use gr_core::exact::{self, CexVerdict, Decider, Minimal, NStatus, Target};
use gr_core::insensitivity::{self, Construction};
use gr_core::solver::{self, BaseSource, MonoVerdict, SolveOutcome, Strategy};
use gr_core::unions::{self, UnionsOutcome};
use gr_core::word::{self, AllWords, Substituted, Symbol, VarWord};
use num_bigint::BigUint;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const PROBE_ARG: &str = "probe-bounds";
const EXACT_BITS: u64 = bounds::DEFAULT_EXACT_BITS;

fn main() -> ExitCode {
    if std::env::args().nth(1).as_deref() == Some(PROBE_ARG) {
        probe_bounds();
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 10] = [
        (1, "word algebra", c1_word_algebra),
        (2, "tight k=1 constructions", c2_tight_k1),
        (3, "tight k=2 constructions", c3_tight_k2),
        (4, "step relation and base plans", c4_steps),
        (5, "H(2,2) by both deciders", c5_h22),
        (6, "GR(1,2,2) equals H(2,2)", c6_gr122),
        (7, "bound arithmetic", c7_bounds),
        (8, "exact values within bounds", c8_consistency),
        (9, "inductive solver", c9_inductive),
        (10, "unions reduction", c10_unions),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, run) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Err(format!("panicked: {}", panic_text(&e))));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n}: PASS {name} ({detail}; {secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL {name} ({why}; {secs:.2}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown".into())
}

fn c1_word_algebra() -> Outcome {
    let start = Instant::now();
    let mut checks = 0u64;
    for k in 1..=2 {
        for n in 1..=4 {
            let words: Vec<VarWord> = (1..=n).flat_map(|m| word::dimensional_words(k, m, n)).collect();
            for w in &words {
                for x in AllWords::new(k, w.dimension()) {
                    let is_var = x.contains(&Symbol::Var(0));
                    match w.substitute(&x).map_err(|e| e.to_string())? {
                        Substituted::Variable(v) => ensure!(is_var && v.len() == n, "{w} at {x:?} reduced wrongly"),
                        Substituted::Constant(c) => ensure!(!is_var && c.len() == n, "{w} at {x:?} lost the variable"),
                    }
                    checks += 1;
                }
                for m2 in 1..=w.dimension() {
                    for inner in word::dimensional_words(k, m2, w.dimension()) {
                        let composed = w.compose(&inner).map_err(|e| e.to_string())?;
                        for x in AllWords::new(k, m2) {
                            let lhs = w.substitute(inner.substitute(&x).unwrap().symbols()).unwrap();
                            let rhs = composed.substitute(&x).unwrap();
                            ensure!(lhs.symbols() == rhs.symbols(), "composition fails for {w} and {inner}");
                            checks += 1;
                        }
                    }
                }
            }
        }
    }
    for k in 1..=3u32 {
        for n in 1..=8usize {
            let listed = word::enumerate_variable_words(k, n).map_err(|e| e.to_string())?;
            let formula = (k as u64 + 1).pow(n as u32) - (k as u64).pow(n as u32);
            ensure!(listed.len() as u64 == formula, "count k={k} n={n}");
            ensure!(word::count_variable_words(k as u64, n as u64).to_u64() == Some(formula), "count k={k} n={n}");
            for (i, u) in AllWords::new(k, n).enumerate().take(4096) {
                ensure!(word::rank(&u, k).unwrap() == i as u64, "rank k={k} n={n} i={i}");
                ensure!(word::unrank(i as u64, k, n).unwrap() == u, "unrank k={k} n={n} i={i}");
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("{checks} substitution checks"))
}

fn construct(k: u32, n: usize, seed: u64) -> Result<(ColoringOracle, Construction), String> {
    let c = ColoringOracle::seeded(seed, k + 1, n, 2).map_err(|e| e.to_string())?;
    let built = insensitivity::construct_insensitive(k, 2, 2, k, k + 1, n, &c, Mode::Tight)
        .map_err(|e| format!("seed {seed}: {e}"))?;
    Ok((c, built))
}

fn run_constructions(k: u32, n: usize, seeds: u64, query_cap: u64, time_cap: Duration, plan: (&[usize], &[usize])) -> Outcome {
    let mut worst_time = Duration::ZERO;
    let mut worst_queries = 0;
    for seed in 0..seeds {
        let start = Instant::now();
        let (c, built) = construct(k, n, seed)?;
        let verdict = insensitivity::verify_insensitive(&c, &built.claim).map_err(|e| e.to_string())?;
        let t = start.elapsed();
        ensure!(verdict.is_pass(), "seed {seed}: {verdict}");
        ensure!(built.plan.q == plan.0 && built.plan.d == plan.1, "plan {:?}", built.plan);
        ensure!(built.queries <= query_cap, "seed {seed}: {} queries", built.queries);
        ensure!(t < time_cap, "seed {seed}: {t:?}");
        worst_time = worst_time.max(t);
        worst_queries = worst_queries.max(built.queries);
    }
    Ok(format!("{seeds} seeds, max {worst_queries} queries, max {:.1} ms", worst_time.as_secs_f64() * 1e3))
}

fn c2_tight_k1() -> Outcome {
    run_constructions(1, 34, 100, 168, Duration::from_secs(1), (&[34, 3, 2], &[32, 2]))
}

fn c3_tight_k2() -> Outcome {
    run_constructions(2, 130, 20, 906, Duration::from_secs(5), (&[130, 3, 2], &[128, 2]))
}

fn c4_steps() -> Outcome {
    let mut steps = 0;
    for (k, n, seeds) in [(1u32, 34usize, 100u64), (2, 130, 20)] {
        for seed in 0..seeds {
            let (c, built) = construct(k, n, seed)?;
            ensure!(built.steps.len() == 2, "seed {seed}: {} steps", built.steps.len());
            for s in &built.steps {
                let v = insensitivity::verify_step_condition(&c, &s.word, s.j, k, k + 1, 1 << 20)
                    .map_err(|e| e.to_string())?;
                ensure!(v.is_pass(), "k={k} seed {seed} step {}: {v}", s.j);
                steps += 1;
            }
        }
    }
    for k in 1..=2 {
        for r in 1..=3 {
            let plan = insensitivity::plan_steps(k, 1, r, Mode::PaperExact).map_err(|e| e.to_string())?;
            ensure!(plan.q0().to_u64() == Some(r), "k={k} r={r}: q0 = {}", bounds::render(plan.q0()));
        }
    }
    Ok(format!("{steps} step relations"))
}

fn c5_h22() -> Outcome {
    let target = Target::H { m: 2, r: 2 };
    let res = exact::exact_minimal(&target, 5, exact::DEFAULT_BUDGET, Decider::Both).map_err(|e| e.to_string())?;
    for rec in &res.records {
        ensure!(rec.deciders.len() == 2, "n={} ran {:?}", rec.n, rec.deciders);
        ensure!(rec.deciders[0].1 == rec.deciders[1].1, "n={} {:?}", rec.n, rec.deciders);
    }
    ensure!(res.minimal == Minimal::Exact(5), "{:?}", res.minimal);
    let Some(NStatus::Counterexample(t)) = res.status(4) else {
        return Err("no counterexample at n=4".into());
    };
    let v = exact::verify_counterexample(&target, t, exact::DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure!(v == CexVerdict::Pass, "{v:?}");
    Ok("minimal 5, n=4 counterexample verified".into())
}

fn c6_gr122() -> Outcome {
    let h = exact::exact_minimal(&Target::H { m: 2, r: 2 }, 6, exact::DEFAULT_BUDGET, Decider::Backtracking)
        .map_err(|e| e.to_string())?;
    let g = exact::exact_minimal(&Target::Gr { k: 1, m: 2, r: 2 }, 6, exact::DEFAULT_BUDGET, Decider::Backtracking)
        .map_err(|e| e.to_string())?;
    ensure!(g.minimal == h.minimal && g.minimal == Minimal::Exact(5), "gr {:?}, h {:?}", g.minimal, h.minimal);
    Ok("both 5".into())
}

/// Straight-line evaluation of the f recursion; `None` once a value
/// passes the exact-arithmetic size limit.
fn reference_f(tight: bool, k: u64, j: u64, m: u64, r: u64) -> Option<BigUint> {
    if k == 0 || m == 0 || r == 0 {
        return Some(BigUint::ZERO);
    }
    let mut f = BigUint::ZERO;
    for i in 0..j {
        let len = (&f + m) - BigUint::from(i + 1);
        let term = if r == 1 {
            BigUint::from(1u32)
        } else {
            let len = u32::try_from(len).ok().filter(|&l| l < 1 << 20)?;
            let count = if tight {
                BigUint::from(k + 2).pow(len) - BigUint::from(k + 1).pow(len)
            } else {
                BigUint::from(k + 2).pow(len)
            };
            let count = u32::try_from(count).ok().filter(|&c| (c as u64) <= EXACT_BITS)?;
            BigUint::from(r).pow(count)
        };
        f += term;
        if f.bits() > EXACT_BITS {
            return None;
        }
    }
    Some(f)
}

fn probe_bounds() {
    let x = bounds::f_paper(1, 3, 3, 2);
    let y = bounds::f_paper(1, 2, 2, 2);
    let status = std::fs::read_to_string("/proc/self/status").unwrap_or_default();
    let hwm = status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .map(|v| v.trim().trim_end_matches("kB").trim().to_string())
        .unwrap_or_default();
    println!("symbolic {}", x.is_symbolic());
    println!("render {}", bounds::render(&x));
    println!("cmp {:?}", bounds::cmp(&y, &x));
    println!("vmhwm-kb {hwm}");
}

fn c7_bounds() -> Outcome {
    let mut compared = 0;
    let mut symbolic = 0;
    for tight in [false, true] {
        for k in 0..=3 {
            for m in 0..=3 {
                for r in 0..=3 {
                    for j in 0..=m {
                        let lib = if tight { bounds::f_tight(k, j, m, r) } else { bounds::f_paper(k, j, m, r) };
                        match reference_f(tight, k, j, m, r) {
                            Some(v) => {
                                ensure!(lib.exact() == Some(&v), "tight={tight} f({k},{j},{m},{r}) mismatch");
                                compared += 1;
                            }
                            None => {
                                ensure!(lib.is_symbolic(), "tight={tight} f({k},{j},{m},{r}) should be symbolic");
                                symbolic += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let expected = BigUint::from(8u32) + (BigUint::from(1u32) << 6561u32);
    ensure!(bounds::f_paper(1, 2, 2, 2).exact() == Some(&expected), "f(1,2,2,2) != 8 + 2^6561");
    ensure!(bounds::sh_bound(1, 2, 2, Mode::Tight).to_u64() == Some(34), "tight Sh(1,2,2)");
    ensure!(bounds::sh_bound(2, 2, 2, Mode::Tight).to_u64() == Some(130), "tight Sh(2,2,2)");
    let h = HTable::new().with(2, 2, 2);
    ensure!(bounds::gr_bound(2, 2, 2, Mode::Tight, &h).ok().and_then(|g| g.to_u64()) == Some(34), "gr bound");

    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let out = Command::new(exe).arg(PROBE_ARG).output().map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let field = |key: &str| text.lines().find_map(|l| l.strip_prefix(key)).map(str::trim).unwrap_or("");
    ensure!(field("symbolic ") == "true", "f(1,3,3,2) not symbolic: {text}");
    ensure!(field("render ").contains("2^(3^513)"), "render {}", field("render "));
    ensure!(field("cmp ") == "Less", "cmp {}", field("cmp "));
    let kb: u64 = field("vmhwm-kb ").parse().map_err(|_| format!("no VmHWM in {text:?}"))?;
    ensure!(kb < 100 * 1024, "peak memory {kb} kB");
    Ok(format!("{compared} exact and {symbolic} symbolic values agree; f(1,3,3,2) peak {} MB", kb / 1024))
}

fn c8_consistency() -> Outcome {
    let sh = exact::exact_minimal(&Target::Sh { k: 1, m: 1, r: 2, a: 1, b: 2 }, 4, exact::DEFAULT_BUDGET, Decider::Both)
        .map_err(|e| e.to_string())?;
    ensure!(sh.minimal == Minimal::Exact(1), "Sh(1,1,2) = {:?}", sh.minimal);
    ensure!(bounds::f_paper(1, 1, 1, 2).to_u64() == Some(2), "f(1,1,1,2)");
    ensure!(bounds::f_tight(1, 1, 1, 2).to_u64() == Some(1), "f_tight(1,1,1,2)");

    let gr1 = exact::exact_minimal(&Target::Gr { k: 1, m: 2, r: 2 }, 6, exact::DEFAULT_BUDGET, Decider::Backtracking)
        .map_err(|e| e.to_string())?;
    let h = HTable::new().with(2, 2, 5);
    ensure!(gr1.minimal == Minimal::Exact(5), "GR(1,2,2) = {:?}", gr1.minimal);
    let b = bounds::gr_bound(1, 2, 2, Mode::PaperExact, &h).map_err(|e| e.to_string())?;
    ensure!(bounds::cmp(&LargeNat::from(5), &b) != Comparison::Greater, "GR(1,2,2) above bound");

    let gr2 = exact::exact_minimal(&Target::Gr { k: 2, m: 1, r: 2 }, 4, exact::DEFAULT_BUDGET, Decider::Both)
        .map_err(|e| e.to_string())?;
    ensure!(gr2.minimal == Minimal::Exact(1), "GR(2,1,2) = {:?}", gr2.minimal);
    for mode in [Mode::PaperExact, Mode::Tight] {
        let b = bounds::gr_bound(2, 1, 2, mode, &HTable::new()).map_err(|e| e.to_string())?;
        ensure!(bounds::cmp(&LargeNat::from(1), &b) != Comparison::Greater, "GR(2,1,2) above {mode} bound");
    }

    // GR(2,2,2) >= 5 against a symbolic bound
    let lower = exact::exact_minimal(&Target::Gr { k: 2, m: 2, r: 2 }, 4, exact::DEFAULT_BUDGET, Decider::Backtracking)
        .map_err(|e| e.to_string())?;
    ensure!(lower.minimal == Minimal::LowerBoundOnly(5), "GR(2,2,2) {:?}", lower.minimal);
    let b = bounds::gr_bound(2, 2, 2, Mode::PaperExact, &h).map_err(|e| e.to_string())?;
    ensure!(b.is_symbolic(), "expected symbolic GR(2,2,2) bound");
    ensure!(bounds::cmp(&LargeNat::from(5), &b) == Comparison::Less, "cmp with symbolic bound");
    Ok("Sh(1,1,2)=1, GR(1,2,2)=5, GR(2,1,2)=1, GR(2,2,2)>=5".into())
}

fn c9_inductive() -> Outcome {
    let s = Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Override(2), strict: true, budget: 1 << 24 };
    let n = solver::required_length(3, 2, 1, &s)
        .map_err(|e| e.to_string())?
        .to_usize()
        .ok_or("required length not machine sized")?;
    let c = Arc::new(ColoringOracle::seeded(0, 3, n, 1).map_err(|e| e.to_string())?);
    let SolveOutcome::Found(claim, _) = solver::solve_gr(3, 2, 1, n, &c, &s).map_err(|e| e.to_string())? else {
        return Err("r=1 run did not complete".into());
    };
    let cert = Certificate::Monochromatic(claim);
    let back: Certificate = cert.to_string().parse().map_err(|e: gr_core::certificate::CertificateError| e.to_string())?;
    ensure!(back == cert, "certificate text round trip");
    ensure!(back.verify(&c).map_err(|e| e.to_string())? == CertVerdict::Pass, "r=1 certificate");

    let s = Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Override(2), strict: false, budget: 1 << 24 };
    let (mut found, mut not_guaranteed) = (0, 0);
    for seed in 0..50 {
        let c = Arc::new(ColoringOracle::seeded(seed, 2, 34, 2).map_err(|e| e.to_string())?);
        match solver::solve_gr(2, 2, 2, 34, &c, &s).map_err(|e| format!("seed {seed}: {e}"))? {
            SolveOutcome::Found(claim, _) => {
                let v = solver::verify_monochromatic(&c, &claim.witness).map_err(|e| e.to_string())?;
                ensure!(v == MonoVerdict::Color(claim.color), "seed {seed}: {v}");
                found += 1;
            }
            SolveOutcome::NotGuaranteed(_) => not_guaranteed += 1,
            SolveOutcome::Exhausted(_) => return Err(format!("seed {seed}: exhausted at k=2")),
        }
    }
    Ok(format!("r=1 at n={n}; override runs: {found} found, {not_guaranteed} not guaranteed"))
}

fn c10_unions() -> Outcome {
    let direct = Strategy::DirectSearch { budget: 1 << 20 };
    let mut with_witness = 0;
    for code in 0u32..128 {
        let colors = (0..7).map(|i| (code >> (6 - i) & 1) + 1).collect();
        let t = ColoringTable { k: 1, n: 3, r: 2, colors };
        let c = Arc::new(ColoringOracle::from_table(&t).map_err(|e| e.to_string())?);
        let d = solver::solve_gr(1, 2, 2, 3, &c, &direct).map_err(|e| e.to_string())?;
        let u = unions::solve_unions(&c, 2, 1 << 20).map_err(|e| e.to_string())?;
        let agree = matches!(
            (&d, &u),
            (SolveOutcome::Found(..), UnionsOutcome::Found(..)) | (SolveOutcome::Exhausted(_), UnionsOutcome::Exhausted)
        );
        ensure!(agree, "coloring {code:07b}: direct {}, unions {u:?}", d.claim().is_some());
        if let UnionsOutcome::Found(seq, col) = u {
            let w = unions::blockseq_to_varword(&seq, 3).map_err(|e| e.to_string())?;
            ensure!(solver::verify_monochromatic(&c, &w).map_err(|e| e.to_string())? == MonoVerdict::Color(col), "{seq}");
            with_witness += 1;
        }
    }
    Ok(format!("128 colorings, {with_witness} with a witness"))
}
