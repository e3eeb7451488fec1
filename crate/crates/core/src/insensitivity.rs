//! Constructing `m`-dimensional variable words over `[k+1]` on which a
//! coloring is `(a,b)`-insensitive, and checking insensitivity.
//!
//! The construction runs `m` pigeonhole steps. Step `j` splices a block
//! `a^t b^(d-t)` into coordinate `j-1` of the current word, evaluates the
//! resulting restricted colorings `T_0, ..., T_d`, and collapses the block
//! between the first repeated pair `t1 < t2` into the new variable `v_{j-1}`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::bounds::{cmp, Comparison, Evaluator, LargeNat, Mode};
use crate::coloring::{ColoringError, ColoringOracle};
use crate::word::{self, dimensional_words, Symbol, VarWord, WordError};

/// Largest `q_0` (and so word length) a plan may ask to execute.
pub const MAX_EXECUTABLE_LENGTH: u64 = 1 << 24;

/// Default cap on oracle evaluations in one construction.
pub const DEFAULT_QUERY_BUDGET: u64 = 1 << 26;

#[derive(Error, Debug)]
pub enum InsensitivityError {
    #[error("k, m and r must be positive")]
    InvalidParameters,
    #[error("letters a={a}, b={b} must be distinct members of [{alphabet}]")]
    InvalidLetters { a: u32, b: u32, alphabet: u32 },
    #[error("plan is not executable: q_0 = {q0}")]
    TooLarge { q0: String },
    #[error("length {n} is below the required {required}")]
    LengthTooSmall { n: usize, required: usize },
    #[error("step {step} would need {needed} evaluations, over the budget of {budget}")]
    BudgetExceeded { step: usize, needed: u64, budget: u64 },
    #[error("internal error: no repeated evaluation map at step {0}")]
    PigeonholeFailure(usize),
    #[error("internal error: step relation q_j + d_j = q_(j-1) + 1 fails at step {0}")]
    StepRelation(usize),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// The dimensions `q_0 >= ... >= q_m = m` and block lengths `d_1..d_m`.
#[derive(Clone, Debug)]
pub struct StepPlan {
    pub mode: Mode,
    pub k: u64,
    pub m: u64,
    pub r: u64,
    /// `q[j]` for `j = 0..=m`.
    pub q: Vec<LargeNat>,
    /// `d[j-1]` is `d_j` for `j = 1..=m`.
    pub d: Vec<LargeNat>,
}

/// A plan whose numbers fit in machine words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutablePlan {
    pub q: Vec<usize>,
    pub d: Vec<usize>,
}

impl ExecutablePlan {
    /// `Σ_j (d_j + 1) · |W^{k+1}_v(q_j - 1)|`, the evaluation bound.
    pub fn query_bound(&self, k: u32) -> Option<u64> {
        let mut total: u64 = 0;
        for j in 1..self.q.len() {
            let domain = word::count_variable_words_u64(k as u64 + 1, self.q[j] as u32 - 1)?;
            total = total.checked_add((self.d[j - 1] as u64 + 1).checked_mul(domain)?)?;
        }
        Some(total)
    }
}

impl StepPlan {
    pub fn q0(&self) -> &LargeNat {
        &self.q[0]
    }

    pub fn executable(&self) -> Result<ExecutablePlan, InsensitivityError> {
        let too_large = || InsensitivityError::TooLarge {
            q0: crate::bounds::render(&self.q[0]),
        };
        let q0 = self.q[0].to_u64().ok_or_else(too_large)?;
        if q0 > MAX_EXECUTABLE_LENGTH {
            return Err(too_large());
        }
        let q = self
            .q
            .iter()
            .map(|x| x.to_usize().ok_or_else(too_large))
            .collect::<Result<_, _>>()?;
        let d = self
            .d
            .iter()
            .map(|x| x.to_usize().ok_or_else(too_large))
            .collect::<Result<_, _>>()?;
        Ok(ExecutablePlan { q, d })
    }
}

/// Builds the step plan.
///
/// In paper mode `q_j = f(k, m-j, m, r) + j` and `d_j = r^((k+2)^(q_j - 1))`;
/// in tight mode `d_j = r^|W^{k+1}_v(q_j - 1)|` and `q_{j-1} = q_j + d_j - 1`
/// backwards from `q_m = m`. Plans are returned even when not executable.
pub fn plan_steps(k: u64, m: u64, r: u64, mode: Mode) -> Result<StepPlan, InsensitivityError> {
    if k == 0 || m == 0 || r == 0 {
        return Err(InsensitivityError::InvalidParameters);
    }
    let ev = Evaluator::default();
    let r_big = LargeNat::from(r);
    let mut q = vec![LargeNat::zero(); m as usize + 1];
    let mut d = vec![LargeNat::zero(); m as usize];
    match mode {
        Mode::PaperExact => {
            // f(k, i, m, r) for i = 0..=m in one pass
            let mut f = vec![LargeNat::zero()];
            for i in 1..=m {
                let prev = f.last().unwrap().clone();
                let len = ev.add(&prev, &LargeNat::from(m - i));
                let term = ev.pow(&r_big, &ev.pow(&LargeNat::from(k + 2), &len));
                f.push(ev.add(&prev, &term));
            }
            for j in 0..=m {
                q[j as usize] = ev.add(&f[(m - j) as usize], &LargeNat::from(j));
            }
            for j in 1..=m as usize {
                let len = ev.sub(&q[j], &LargeNat::one()).expect("q_j >= 1");
                d[j - 1] = ev.pow(&r_big, &ev.pow(&LargeNat::from(k + 2), &len));
            }
        }
        Mode::Tight => {
            q[m as usize] = LargeNat::from(m);
            for j in (1..=m as usize).rev() {
                let len = ev.sub(&q[j], &LargeNat::one()).expect("q_j >= 1");
                d[j - 1] = ev.pow(&r_big, &ev.variable_word_count(k + 1, &len));
                let grown = ev.add(&q[j], &d[j - 1]);
                q[j - 1] = ev.sub(&grown, &LargeNat::one()).expect("d_j >= 1");
            }
        }
    }
    let plan = StepPlan { mode, k, m, r, q, d };
    for j in 1..=m as usize {
        if !step_relation_holds(&plan, j) {
            return Err(InsensitivityError::StepRelation(j));
        }
    }
    Ok(plan)
}

/// `q_j + d_j = q_{j-1} + 1`, checked exactly where decidable.
fn step_relation_holds(plan: &StepPlan, j: usize) -> bool {
    let ev = Evaluator::default();
    let lhs = ev.add(&plan.q[j], &plan.d[j - 1]);
    let rhs = ev.add(&plan.q[j - 1], &LargeNat::one());
    cmp(&lhs, &rhs) != Comparison::Less && cmp(&lhs, &rhs) != Comparison::Greater
}

/// A claimed `(a,b)`-insensitive witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InsensitivityClaim {
    pub k: u32,
    pub m: usize,
    pub n: usize,
    pub r: u32,
    pub a: u32,
    pub b: u32,
    pub witness: VarWord,
}

/// What one pigeonhole step chose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub j: usize,
    pub d: usize,
    pub t1: usize,
    pub t2: usize,
    /// `w_j`, of dimension `q_j`.
    pub word: VarWord,
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub claim: InsensitivityClaim,
    pub plan: ExecutablePlan,
    /// `w_0` followed by the per-step words.
    pub initial: VarWord,
    pub steps: Vec<StepRecord>,
    /// Oracle evaluations made by this construction.
    pub queries: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// The first offending pair `(x, y)` in lexicographic order.
    Fail(Vec<Symbol>, Vec<Symbol>),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail(x, y) => write!(
                f,
                "fail ({}) vs ({})",
                word::format_symbols(x),
                word::format_symbols(y)
            ),
        }
    }
}

/// `(v_0, ..., v_{q-2}, v_{q-1}, ..., v_{q-1})` of length `n`.
pub fn initial_word(k: u32, q: usize, n: usize) -> Result<VarWord, WordError> {
    if q == 0 || q > n {
        return Err(WordError::DimensionTooLarge { dim: q, len: n });
    }
    let symbols = (0..n)
        .map(|i| Symbol::Var(i.min(q - 1) as u32))
        .collect();
    VarWord::new(k, q, symbols)
}

fn check_letters(k: u32, a: u32, b: u32) -> Result<(), InsensitivityError> {
    let alphabet = k + 1;
    if a == b || a == 0 || b == 0 || a > alphabet || b > alphabet {
        return Err(InsensitivityError::InvalidLetters { a, b, alphabet });
    }
    Ok(())
}

/// Runs the pigeonhole construction against `c`, a coloring of
/// `W^{k+1}_v(n)` with `r` colors.
#[allow(clippy::too_many_arguments)]
pub fn construct_insensitive(
    k: u32,
    m: usize,
    r: u32,
    a: u32,
    b: u32,
    n: usize,
    c: &ColoringOracle,
    mode: Mode,
) -> Result<Construction, InsensitivityError> {
    construct_insensitive_within(k, m, r, a, b, n, c, mode, DEFAULT_QUERY_BUDGET)
}

#[allow(clippy::too_many_arguments)]
pub fn construct_insensitive_within(
    k: u32,
    m: usize,
    r: u32,
    a: u32,
    b: u32,
    n: usize,
    c: &ColoringOracle,
    mode: Mode,
    query_budget: u64,
) -> Result<Construction, InsensitivityError> {
    check_letters(k, a, b)?;
    if c.alphabet() != k + 1 || c.length() != n || c.colors() != r {
        return Err(ColoringError::ShapeMismatch(format!(
            "oracle is ({}, {}, {}), construction needs ({}, {n}, {r})",
            c.alphabet(),
            c.length(),
            c.colors(),
            k + 1
        ))
        .into());
    }
    let plan = plan_steps(k as u64, m as u64, r as u64, mode)?.executable()?;
    if n < plan.q[0] {
        return Err(InsensitivityError::LengthTooSmall {
            n,
            required: plan.q[0],
        });
    }
    let alphabet = k + 1;
    let start_queries = c.queries();
    let initial = initial_word(alphabet, plan.q[0], n)?;
    let mut current = initial.clone();
    let mut steps = Vec::with_capacity(m);

    for j in 1..=m {
        let (q_prev, q_j, d) = (plan.q[j - 1], plan.q[j], plan.d[j - 1]);
        if q_j + d != q_prev + 1 {
            return Err(InsensitivityError::StepRelation(j));
        }
        let domain: Vec<Vec<Symbol>> = word::variable_word_symbols(alphabet, q_j - 1).collect();
        let needed = (d as u64 + 1).saturating_mul(domain.len() as u64);
        if needed > query_budget {
            return Err(InsensitivityError::BudgetExceeded {
                step: j,
                needed,
                budget: query_budget,
            });
        }

        // T_t(z) = c(w_{j-1}(Q(a_t, z)))
        let mut maps: Vec<Vec<u32>> = Vec::with_capacity(d + 1);
        let mut spliced = vec![Symbol::Letter(a); q_prev];
        for t in 0..=d {
            let mut colors = Vec::with_capacity(domain.len());
            for z in &domain {
                splice(&mut spliced, z, j, t, d, a, b);
                colors.push(c.color_symbols(&current.apply(&spliced))?);
            }
            maps.push(colors);
        }
        let (t1, t2) = first_repeat(&maps).ok_or(InsensitivityError::PigeonholeFailure(j))?;

        // w' = (v_0..v_{j-2}, a^t1, v_{j-1}^(t2-t1), b^(d-t2), v_j..v_{q_j-1})
        let mut reducer = Vec::with_capacity(q_prev);
        reducer.extend((0..j as u32 - 1).map(Symbol::Var));
        reducer.extend(std::iter::repeat_n(Symbol::Letter(a), t1));
        reducer.extend(std::iter::repeat_n(Symbol::Var(j as u32 - 1), t2 - t1));
        reducer.extend(std::iter::repeat_n(Symbol::Letter(b), d - t2));
        reducer.extend((j as u32..q_j as u32).map(Symbol::Var));
        let reducer = VarWord::new(alphabet, q_j, reducer)?;
        current = current.compose(&reducer)?;
        steps.push(StepRecord {
            j,
            d,
            t1,
            t2,
            word: current.clone(),
        });
    }

    Ok(Construction {
        claim: InsensitivityClaim {
            k,
            m,
            n,
            r,
            a,
            b,
            witness: current,
        },
        plan,
        initial,
        steps,
        queries: c.queries() - start_queries,
    })
}

/// Writes `Q(a_t, z) = z[..j-1] ++ a^t b^(d-t) ++ z[j-1..]` into `out`.
fn splice(out: &mut [Symbol], z: &[Symbol], j: usize, t: usize, d: usize, a: u32, b: u32) {
    let head = j - 1;
    out[..head].copy_from_slice(&z[..head]);
    for (i, slot) in out[head..head + d].iter_mut().enumerate() {
        *slot = Symbol::Letter(if i < t { a } else { b });
    }
    out[head + d..].copy_from_slice(&z[head..]);
}

/// First `(t1, t2)` with `t1 < t2` and equal maps, scanning `t1` then `t2`
/// ascending.
fn first_repeat(maps: &[Vec<u32>]) -> Option<(usize, usize)> {
    let mut groups: HashMap<&[u32], Vec<usize>> = HashMap::new();
    for (t, map) in maps.iter().enumerate() {
        groups.entry(map.as_slice()).or_default().push(t);
    }
    (0..maps.len()).find_map(|t1| {
        let g = &groups[maps[t1].as_slice()];
        g.iter().find(|&&t| t > t1).map(|&t2| (t1, t2))
    })
}

/// Whether `x` and `y` agree on every coordinate holding a symbol other
/// than `a` or `b` (the variable included).
pub fn equivalent(x: &[Symbol], y: &[Symbol], a: u32, b: u32) -> bool {
    let free = |s: Symbol| s == Symbol::Letter(a) || s == Symbol::Letter(b);
    x.len() == y.len()
        && x
            .iter()
            .zip(y)
            .all(|(&p, &q)| (free(p) && free(q)) || p == q)
}

/// The `(a,b)`-equivalence class of `x`, in rank order.
fn equivalence_class(x: &[Symbol], a: u32, b: u32) -> Vec<Vec<Symbol>> {
    let free: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Symbol::Letter(a) || **s == Symbol::Letter(b))
        .map(|(i, _)| i)
        .collect();
    let (lo, hi) = (a.min(b), a.max(b));
    let mut out = Vec::with_capacity(1 << free.len());
    for mask in 0u64..(1u64 << free.len()) {
        let mut y = x.to_vec();
        for (bit, &pos) in free.iter().enumerate() {
            // higher free positions are less significant
            let set = mask >> (free.len() - 1 - bit) & 1 == 1;
            y[pos] = Symbol::Letter(if set { hi } else { lo });
        }
        out.push(y);
    }
    out
}

/// Checks `c(w(x)) = c(w(y))` for all `(a,b)`-equivalent variable words
/// `x, y` of length `m` over `[k+1]`.
pub fn verify_insensitive(
    c: &ColoringOracle,
    claim: &InsensitivityClaim,
) -> Result<Verdict, InsensitivityError> {
    check_letters(claim.k, claim.a, claim.b)?;
    let w = &claim.witness;
    let alphabet = claim.k + 1;
    if w.alphabet() != alphabet
        || w.dimension() != claim.m
        || w.len() != claim.n
        || c.alphabet() != alphabet
        || c.length() != claim.n
        || c.colors() != claim.r
    {
        return Err(ColoringError::ShapeMismatch("claim does not match the oracle".into()).into());
    }
    let mut color: HashMap<Vec<Symbol>, u32> = HashMap::new();
    let mut color_of = |x: &[Symbol]| -> Result<u32, InsensitivityError> {
        if let Some(col) = color.get(x) {
            return Ok(*col);
        }
        let col = c.color_symbols(&w.apply(x))?;
        color.insert(x.to_vec(), col);
        Ok(col)
    };
    for x in word::variable_word_symbols(alphabet, claim.m) {
        let cx = color_of(&x)?;
        for y in equivalence_class(&x, claim.a, claim.b) {
            if y != x && color_of(&y)? != cx {
                return Ok(Verdict::Fail(x, y));
            }
        }
    }
    Ok(Verdict::Pass)
}

/// The single-coordinate swap property of step `j`: for variable words
/// `x, y` of length `q_j` equal off coordinate `j-1`, with `x_{j-1} = a`
/// and `y_{j-1} = b`, `c(w_j(x)) = c(w_j(y))`.
pub fn verify_step_condition(
    c: &ColoringOracle,
    w_j: &VarWord,
    j: usize,
    a: u32,
    b: u32,
    budget: u64,
) -> Result<Verdict, InsensitivityError> {
    let q = w_j.dimension();
    if j == 0 || j > q {
        return Err(WordError::IndexOutOfRange(j as u64).into());
    }
    if q == 1 {
        return Ok(Verdict::Pass);
    }
    let alphabet = w_j.alphabet();
    let total = (alphabet as u64 + 1).checked_pow(q as u32 - 1);
    if total.is_none_or(|t| t > budget) {
        return Err(InsensitivityError::BudgetExceeded {
            step: j,
            needed: total.unwrap_or(u64::MAX),
            budget,
        });
    }
    for z in word::variable_word_symbols(alphabet, q - 1) {
        let mut x = z.clone();
        x.insert(j - 1, Symbol::Letter(a));
        let mut y = z;
        y.insert(j - 1, Symbol::Letter(b));
        if c.color_symbols(&w_j.apply(&x))? != c.color_symbols(&w_j.apply(&y))? {
            return Ok(Verdict::Fail(x, y));
        }
    }
    Ok(Verdict::Pass)
}

/// Exhaustive search for an `m`-dimensional word over `[k+1]` of the
/// oracle's length on which it is `(a,b)`-insensitive. First hit in
/// canonical order.
pub fn search_insensitive(
    c: &ColoringOracle,
    k: u32,
    m: usize,
    a: u32,
    b: u32,
) -> Result<Option<VarWord>, InsensitivityError> {
    for w in dimensional_words(k + 1, m, c.length()) {
        let claim = InsensitivityClaim {
            k,
            m,
            n: c.length(),
            r: c.colors(),
            a,
            b,
            witness: w,
        };
        if verify_insensitive(c, &claim)?.is_pass() {
            return Ok(Some(claim.witness));
        }
    }
    Ok(None)
}
