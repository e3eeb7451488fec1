//! Monochromatic `m`-dimensional variable words: verification, direct
//! search, and the inductive pipeline that alternates insensitivity
//! constructions with a pulled-back coloring on a smaller alphabet.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{self, BoundError, HTable, LargeNat, Mode};
use crate::coloring::{ColoringError, ColoringOracle};
use crate::insensitivity::{self, InsensitivityError};
use crate::unions::{self, UnionsError, UnionsOutcome};
use crate::word::{self, Symbol, VarWord, WordError};

const DIRECT_BATCH: usize = 4096;

#[derive(Error, Debug)]
pub enum SolveError {
    #[error("length {n} is below the required {required}")]
    LengthTooSmall { n: usize, required: String },
    #[error("search exceeded the budget of {0}")]
    BudgetExceeded(u64),
    #[error("required length {0} is too large to execute")]
    TooLarge(String),
    #[error("internal error: claim failed re-verification: {0}")]
    Unverified(String),
    #[error("k, m and r must be positive")]
    InvalidParameters,
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Insensitivity(#[from] InsensitivityError),
    #[error(transparent)]
    Unions(#[from] UnionsError),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonochromaticClaim {
    pub k: u32,
    pub m: usize,
    pub n: usize,
    pub r: u32,
    pub witness: VarWord,
    pub color: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonoVerdict {
    Color(u32),
    /// The first reduced argument in rank order and the first one whose
    /// color differs from it.
    Fail(Vec<Symbol>, Vec<Symbol>),
}

impl fmt::Display for MonoVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonoVerdict::Color(c) => write!(f, "monochromatic with color {c}"),
            MonoVerdict::Fail(x, y) => write!(
                f,
                "fail ({}) vs ({})",
                word::format_symbols(x),
                word::format_symbols(y)
            ),
        }
    }
}

/// Where the inductive strategy takes `H(m, r)` from.
#[derive(Clone, Debug)]
pub enum BaseSource {
    Table(HTable),
    /// Assumed base dimension; completion is not guaranteed when it is
    /// below the true value.
    Override(u64),
}

#[derive(Clone, Debug)]
pub enum Strategy {
    Inductive {
        mode: Mode,
        base: BaseSource,
        /// Refuse to run below the required length instead of trying.
        strict: bool,
        budget: u64,
    },
    DirectSearch {
        budget: u64,
    },
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Found(MonochromaticClaim, Vec<String>),
    Exhausted(Vec<String>),
    NotGuaranteed(Vec<String>),
}

impl SolveOutcome {
    pub fn trace(&self) -> &[String] {
        match self {
            SolveOutcome::Found(_, t) | SolveOutcome::Exhausted(t) | SolveOutcome::NotGuaranteed(t) => t,
        }
    }

    pub fn claim(&self) -> Option<&MonochromaticClaim> {
        match self {
            SolveOutcome::Found(c, _) => Some(c),
            _ => None,
        }
    }
}

/// Checks that `c(w(x))` is constant over `x ∈ W^k_v(m)`.
pub fn verify_monochromatic(c: &ColoringOracle, w: &VarWord) -> Result<MonoVerdict, SolveError> {
    if w.alphabet() != c.alphabet() || w.len() != c.length() {
        return Err(ColoringError::ShapeMismatch(format!(
            "word over [{}] of length {} against an oracle over [{}] of length {}",
            w.alphabet(),
            w.len(),
            c.alphabet(),
            c.length()
        ))
        .into());
    }
    let mut first: Option<(Vec<Symbol>, u32)> = None;
    for x in word::variable_word_symbols(w.alphabet(), w.dimension()) {
        let col = c.color_symbols(&w.apply(&x))?;
        match &first {
            None => first = Some((x, col)),
            Some((x0, c0)) if *c0 != col => return Ok(MonoVerdict::Fail(x0.clone(), x)),
            _ => {}
        }
    }
    Ok(MonoVerdict::Color(first.expect("W^k_v(m) is nonempty").1))
}

/// The length from which the inductive strategy is guaranteed to succeed.
pub fn required_length(k: u64, m: u64, r: u64, strategy: &Strategy) -> Result<LargeNat, SolveError> {
    match strategy {
        Strategy::Inductive { mode, base, .. } => {
            let table = match base {
                BaseSource::Table(t) => t.clone(),
                BaseSource::Override(h) => HTable::new().with(m, r, *h),
            };
            Ok(bounds::gr_bound(k, m, r, *mode, &table)?)
        }
        Strategy::DirectSearch { .. } => Err(BoundError::InvalidArgument(
            "required length is defined for the inductive strategy".into(),
        )
        .into()),
    }
}

/// Finds an `m`-dimensional variable word over `[k]` of length `n` all of
/// whose reduced variable words share one color under `c`.
pub fn solve_gr(
    k: u32,
    m: usize,
    r: u32,
    n: usize,
    c: &Arc<ColoringOracle>,
    strategy: &Strategy,
) -> Result<SolveOutcome, SolveError> {
    if k == 0 || m == 0 || r == 0 {
        return Err(SolveError::InvalidParameters);
    }
    if c.alphabet() != k || c.length() != n || c.colors() != r {
        return Err(ColoringError::ShapeMismatch(format!(
            "oracle is ({}, {}, {}), instance is ({k}, {n}, {r})",
            c.alphabet(),
            c.length(),
            c.colors()
        ))
        .into());
    }
    let mut trace = Vec::new();
    let outcome = match strategy {
        Strategy::DirectSearch { budget } => direct_search(k, m, r, c, *budget, &mut trace)?,
        Strategy::Inductive { strict, .. } => {
            let required = required_length(k as u64, m as u64, r as u64, strategy)?;
            let below = match required.to_u64() {
                Some(req) => (n as u64) < req,
                None => true,
            };
            if below && *strict {
                return Err(SolveError::LengthTooSmall {
                    n,
                    required: bounds::render(&required),
                });
            }
            if below {
                trace.push(format!("n={n} is below the required length {}", bounds::render(&required)));
            }
            let out = inductive(k, m, r, c, strategy, &mut trace)?;
            match out {
                SolveOutcome::Exhausted(t) if k >= 2 => SolveOutcome::NotGuaranteed(t),
                other => other,
            }
        }
    };
    if let SolveOutcome::Found(claim, _) = &outcome {
        match verify_monochromatic(c, &claim.witness)? {
            MonoVerdict::Color(col) if col == claim.color => {}
            v => return Err(SolveError::Unverified(v.to_string())),
        }
    }
    Ok(outcome)
}

fn direct_search(
    k: u32,
    m: usize,
    r: u32,
    c: &ColoringOracle,
    budget: u64,
    trace: &mut Vec<String>,
) -> Result<SolveOutcome, SolveError> {
    let n = c.length();
    let mut candidates = word::dimensional_words(k, m, n);
    let mut seen: u64 = 0;
    loop {
        let batch: Vec<VarWord> = candidates.by_ref().take(DIRECT_BATCH).collect();
        if batch.is_empty() {
            trace.push(format!("direct search: {seen} candidates, none monochromatic"));
            return Ok(SolveOutcome::Exhausted(std::mem::take(trace)));
        }
        if seen + batch.len() as u64 > budget {
            return Err(SolveError::BudgetExceeded(budget));
        }
        let hit = batch
            .par_iter()
            .map(|w| verify_monochromatic(c, w))
            .enumerate()
            .find_first(|(_, v)| !matches!(v, Ok(MonoVerdict::Fail(..))));
        if let Some((i, verdict)) = hit {
            let MonoVerdict::Color(color) = verdict? else { unreachable!() };
            trace.push(format!("direct search: witness is candidate {}", seen + i as u64 + 1));
            let claim = MonochromaticClaim {
                k,
                m,
                n,
                r,
                witness: batch[i].clone(),
                color,
            };
            return Ok(SolveOutcome::Found(claim, std::mem::take(trace)));
        }
        seen += batch.len() as u64;
    }
}

fn inductive(
    k: u32,
    m: usize,
    r: u32,
    c: &Arc<ColoringOracle>,
    strategy: &Strategy,
    trace: &mut Vec<String>,
) -> Result<SolveOutcome, SolveError> {
    let Strategy::Inductive { mode, budget, .. } = strategy else {
        unreachable!("inductive strategy")
    };
    let n = c.length();
    if k == 1 {
        return Ok(match unions::solve_unions(c, m, *budget)? {
            UnionsOutcome::Found(t, color) => {
                trace.push(format!("k=1: unions witness {t} at n={n}"));
                let witness = unions::blockseq_to_varword(&t, n)?;
                SolveOutcome::Found(MonochromaticClaim { k, m, n, r, witness, color }, std::mem::take(trace))
            }
            UnionsOutcome::Exhausted => {
                trace.push(format!("k=1: no monochromatic union family at n={n}"));
                SolveOutcome::Exhausted(std::mem::take(trace))
            }
        });
    }

    let k0 = k - 1;
    let big_m = required_length(k0 as u64, m as u64, r as u64, strategy)?;
    let big_m = big_m
        .to_usize()
        .filter(|&x| x as u64 <= insensitivity::MAX_EXECUTABLE_LENGTH)
        .ok_or_else(|| SolveError::TooLarge(bounds::render(&big_m)))?;
    let plan = insensitivity::plan_steps(k0 as u64, big_m as u64, r as u64, *mode)?.executable()?;
    if n < plan.q[0] {
        trace.push(format!(
            "k={k}: insensitivity stage needs n >= {}, have {n}",
            plan.q[0]
        ));
        return Ok(SolveOutcome::NotGuaranteed(std::mem::take(trace)));
    }
    let built = insensitivity::construct_insensitive_within(
        k0, big_m, r, k0, k, n, c, *mode, *budget,
    )?;
    let check = insensitivity::verify_insensitive(c, &built.claim)?;
    if !check.is_pass() {
        return Err(SolveError::Unverified(format!("insensitivity {check}")));
    }
    let w1 = built.claim.witness;
    trace.push(format!(
        "k={k}: ({k0},{k})-insensitive word of dimension {big_m} after {} queries: {w1}",
        built.queries
    ));

    let pulled = Arc::new(ColoringOracle::pullback(c.clone(), w1.clone(), k0)?);
    let sub = inductive(k0, m, r, &pulled, strategy, trace)?;
    *trace = sub.trace().to_vec();
    let SolveOutcome::Found(inner, _) = sub else {
        trace.push(format!("k={k}: base stage failed on the pulled-back coloring"));
        return Ok(SolveOutcome::NotGuaranteed(std::mem::take(trace)));
    };
    let witness = w1.compose(&inner.witness.widen(k)?)?;
    match verify_monochromatic(c, &witness)? {
        MonoVerdict::Color(color) => {
            trace.push(format!("k={k}: composed witness {witness} has color {color}"));
            Ok(SolveOutcome::Found(
                MonochromaticClaim { k, m, n, r, witness, color },
                std::mem::take(trace),
            ))
        }
        v => Err(SolveError::Unverified(v.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::ColoringTable;

    fn direct() -> Strategy {
        Strategy::DirectSearch { budget: 1 << 20 }
    }

    #[test]
    fn verify_examples() {
        let c = ColoringOracle::seeded(9, 2, 3, 3).unwrap();
        let w = VarWord::parse(2, "1 v 2").unwrap();
        let expected = c.color_of(&w).unwrap();
        assert_eq!(verify_monochromatic(&c, &w).unwrap(), MonoVerdict::Color(expected));

        // W^1_v(2) in order: (1,v), (v,1), (v,v)
        let t = ColoringTable { k: 1, n: 2, r: 2, colors: vec![1, 2, 1] };
        let c = ColoringOracle::from_table(&t).unwrap();
        let w = VarWord::parse(1, "v0 v1").unwrap();
        assert_eq!(
            verify_monochromatic(&c, &w).unwrap(),
            MonoVerdict::Fail(vec![Symbol::Letter(1), Symbol::Var(0)], vec![Symbol::Var(0), Symbol::Letter(1)])
        );
    }

    #[test]
    fn direct_singleton() {
        let c = Arc::new(ColoringOracle::seeded(4, 1, 1, 2).unwrap());
        let out = solve_gr(1, 1, 2, 1, &c, &direct()).unwrap();
        assert_eq!(out.claim().unwrap().witness.to_string(), "v");
    }

    #[test]
    fn direct_exhausted_below_m() {
        let t = ColoringTable { k: 1, n: 2, r: 2, colors: vec![1, 1, 2] };
        let c = Arc::new(ColoringOracle::from_table(&t).unwrap());
        assert!(matches!(solve_gr(1, 2, 2, 2, &c, &direct()).unwrap(), SolveOutcome::Exhausted(_)));
    }

    #[test]
    fn required_lengths() {
        let ov = |h| Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Override(h), strict: false, budget: 1 << 20 };
        assert_eq!(required_length(2, 2, 2, &ov(2)).unwrap().to_u64(), Some(34));
        assert_eq!(required_length(2, 2, 1, &ov(2)).unwrap().to_u64(), Some(2));
        assert_eq!(required_length(1, 3, 2, &ov(7)).unwrap().to_u64(), Some(7));
        let paper = Strategy::Inductive { mode: Mode::PaperExact, base: BaseSource::Override(2), strict: false, budget: 1 };
        assert_eq!(required_length(2, 2, 2, &paper).unwrap().bits(), Some(6562));
        let table = Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Table(HTable::new()), strict: false, budget: 1 };
        assert!(matches!(
            required_length(2, 2, 2, &table),
            Err(SolveError::Bound(BoundError::MissingHValue { m: 2, r: 2 }))
        ));
        assert_eq!(required_length(3, 1, 2, &table).unwrap().to_u64(), Some(1));
    }

    #[test]
    fn inductive_one_color() {
        let s = Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Override(2), strict: true, budget: 1 << 20 };
        let c = Arc::new(ColoringOracle::seeded(0, 2, 2, 1).unwrap());
        let out = solve_gr(2, 2, 1, 2, &c, &s).unwrap();
        let claim = out.claim().unwrap();
        assert_eq!(claim.color, 1);
        assert_eq!(claim.witness.dimension(), 2);
    }

    #[test]
    fn inductive_strict_rejects_short() {
        let s = Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Override(2), strict: true, budget: 1 << 20 };
        let c = Arc::new(ColoringOracle::seeded(0, 2, 20, 2).unwrap());
        assert!(matches!(solve_gr(2, 2, 2, 20, &c, &s), Err(SolveError::LengthTooSmall { n: 20, .. })));
        let lax = Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Override(2), strict: false, budget: 1 << 20 };
        assert!(matches!(solve_gr(2, 2, 2, 20, &c, &lax).unwrap(), SolveOutcome::NotGuaranteed(_)));
    }

    #[test]
    fn inductive_override_outcomes() {
        let s = Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Override(2), strict: true, budget: 1 << 20 };
        for seed in 0..8 {
            let c = Arc::new(ColoringOracle::seeded(seed, 2, 34, 2).unwrap());
            match solve_gr(2, 2, 2, 34, &c, &s).unwrap() {
                SolveOutcome::Found(claim, _) => {
                    assert_eq!(verify_monochromatic(&c, &claim.witness).unwrap(), MonoVerdict::Color(claim.color));
                }
                SolveOutcome::NotGuaranteed(_) => {}
                SolveOutcome::Exhausted(_) => panic!("k=2 failures are NotGuaranteed"),
            }
        }
    }

    #[test]
    fn inductive_k1_matches_unions() {
        let s = Strategy::Inductive { mode: Mode::Tight, base: BaseSource::Override(5), strict: false, budget: 1 << 20 };
        for seed in 0..20 {
            let c = Arc::new(ColoringOracle::seeded(seed, 1, 4, 2).unwrap());
            let a = solve_gr(1, 2, 2, 4, &c, &s).unwrap();
            let b = solve_gr(1, 2, 2, 4, &c, &direct()).unwrap();
            assert_eq!(a.claim().is_some(), b.claim().is_some(), "seed {seed}");
        }
    }
}
