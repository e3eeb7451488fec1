//! Exact and symbolic arithmetic for the insensitivity and Graham–Rothschild
//! bound functions.
//!
//! A [`LargeNat`] is a node in an immutable expression DAG. Every node keeps
//! the operation that produced it; nodes whose value fits under the exact
//! bit limit also carry that value. Nothing above the limit is ever
//! materialized.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Default bit-length above which values stay symbolic.
pub const DEFAULT_EXACT_BITS: u64 = 1 << 20;

/// Longest recursion that is unrolled into an explicit expression.
const MAX_UNROLL: u64 = 4096;

/// Values with at most this many decimal digits render as plain numbers
/// inside expressions.
const INLINE_DIGITS: u64 = 30;

/// `describe` prints full decimals up to this many digits.
const DESCRIBE_DIGITS: u64 = 10_000;

/// Inline renderings longer than this switch to the shared-name form.
const INLINE_RENDER_CAP: usize = 2000;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("no H({m},{r}) value available")]
    MissingHValue { m: u64, r: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot parse H table line {line}: {reason}")]
    HTableParse { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// The coarse count `(k+2)^L` in the exponent.
    PaperExact,
    /// The exact count `|W^{k+1}_v(L)| = (k+2)^L - (k+1)^L`.
    Tight,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::PaperExact => "paper",
            Mode::Tight => "tight",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" | "paper-exact" => Ok(Mode::PaperExact),
            "tight" => Ok(Mode::Tight),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comparison {
    Less,
    Equal,
    Greater,
    Unknown,
}

/// A natural number, exact or as a lazy expression.
#[derive(Clone)]
pub struct LargeNat(Arc<Node>);

struct Node {
    op: Op,
    value: Option<BigUint>,
    mag: OnceLock<Mag>,
}

enum Op {
    Const,
    Add(LargeNat, LargeNat),
    Mul(LargeNat, LargeNat),
    /// Only built when the minuend is known to dominate.
    Sub(LargeNat, LargeNat),
    Pow(LargeNat, LargeNat),
    /// `f(k, j, m, r)` (or its tight variant) with `j` too large to unroll.
    Recur {
        mode: Mode,
        k: u64,
        j: LargeNat,
        m: LargeNat,
        r: u64,
    },
}

impl LargeNat {
    fn node(op: Op, value: Option<BigUint>) -> Self {
        LargeNat(Arc::new(Node {
            op,
            value,
            mag: OnceLock::new(),
        }))
    }

    pub fn zero() -> Self {
        LargeNat::from(0u64)
    }

    pub fn one() -> Self {
        LargeNat::from(1u64)
    }

    pub fn is_exact(&self) -> bool {
        self.0.value.is_some()
    }

    pub fn is_symbolic(&self) -> bool {
        !self.is_exact()
    }

    pub fn exact(&self) -> Option<&BigUint> {
        self.0.value.as_ref()
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.exact().and_then(|v| v.to_u64())
    }

    pub fn to_usize(&self) -> Option<usize> {
        self.exact().and_then(|v| v.to_usize())
    }

    fn is_zero(&self) -> bool {
        self.exact().is_some_and(|v| v.is_zero())
    }

    fn is_one(&self) -> bool {
        self.exact().is_some_and(|v| v.is_one())
    }

    pub fn bits(&self) -> Option<u64> {
        self.exact().map(|v| v.bits())
    }

    fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    /// The `exact <decimal>` / `symbolic <expr>` machine line.
    pub fn machine_line(&self) -> String {
        match self.exact() {
            Some(v) => format!("exact {v}"),
            None => format!("symbolic {}", render(self)),
        }
    }
}

impl From<u64> for LargeNat {
    fn from(v: u64) -> Self {
        LargeNat::node(Op::Const, Some(BigUint::from(v)))
    }
}

impl From<BigUint> for LargeNat {
    fn from(v: BigUint) -> Self {
        LargeNat::node(Op::Const, Some(v))
    }
}

impl fmt::Display for LargeNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str(&render(self)),
        }
    }
}

impl fmt::Debug for LargeNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits().is_some_and(|b| b <= 256) {
            write!(f, "LargeNat({self})")
        } else {
            write!(f, "LargeNat({})", render(self))
        }
    }
}

/// Arithmetic with a configurable exact/symbolic threshold.
#[derive(Clone, Copy, Debug)]
pub struct Evaluator {
    pub exact_bits: u64,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator {
            exact_bits: DEFAULT_EXACT_BITS,
        }
    }
}

impl Evaluator {
    pub fn add(&self, a: &LargeNat, b: &LargeNat) -> LargeNat {
        if a.is_zero() {
            return b.clone();
        }
        if b.is_zero() {
            return a.clone();
        }
        let value = match (a.exact(), b.exact()) {
            (Some(x), Some(y)) => Some(x + y).filter(|v| v.bits() <= self.exact_bits),
            _ => None,
        };
        LargeNat::node(Op::Add(a.clone(), b.clone()), value)
    }

    pub fn mul(&self, a: &LargeNat, b: &LargeNat) -> LargeNat {
        if a.is_zero() || b.is_zero() {
            return LargeNat::zero();
        }
        if a.is_one() {
            return b.clone();
        }
        if b.is_one() {
            return a.clone();
        }
        let value = match (a.exact(), b.exact()) {
            (Some(x), Some(y)) if x.bits() + y.bits() <= self.exact_bits + 1 => {
                Some(x * y).filter(|v| v.bits() <= self.exact_bits)
            }
            _ => None,
        };
        LargeNat::node(Op::Mul(a.clone(), b.clone()), value)
    }

    /// `a - b`; `None` when both are exact and `a < b`.
    ///
    /// For symbolic operands the caller guarantees `a >= b`.
    pub fn sub(&self, a: &LargeNat, b: &LargeNat) -> Option<LargeNat> {
        if b.is_zero() {
            return Some(a.clone());
        }
        let value = match (a.exact(), b.exact()) {
            (Some(x), Some(y)) => {
                if x < y {
                    return None;
                }
                Some(x - y)
            }
            _ => None,
        };
        Some(LargeNat::node(Op::Sub(a.clone(), b.clone()), value))
    }

    pub fn pow(&self, base: &LargeNat, exp: &LargeNat) -> LargeNat {
        if exp.is_zero() || base.is_one() {
            return LargeNat::one();
        }
        if base.is_zero() {
            // exp is nonzero here: exact nonzero or symbolic (huge)
            return LargeNat::zero();
        }
        if exp.is_one() {
            return base.clone();
        }
        let value = match (base.exact(), exp.exact()) {
            (Some(b), Some(e)) => match e.to_u64() {
                Some(e) if e.saturating_mul(b.bits().saturating_sub(1)) <= self.exact_bits => {
                    u32::try_from(e)
                        .ok()
                        .map(|e| b.pow(e))
                        .filter(|v| v.bits() <= self.exact_bits)
                }
                _ => None,
            },
            _ => None,
        };
        LargeNat::node(Op::Pow(base.clone(), exp.clone()), value)
    }

    /// `|W^k_v(n)| = (k+1)^n - k^n` for a possibly symbolic length.
    pub fn variable_word_count(&self, k: u64, n: &LargeNat) -> LargeNat {
        let all = self.pow(&LargeNat::from(k + 1), n);
        let constant = self.pow(&LargeNat::from(k), n);
        self.sub(&all, &constant)
            .expect("(k+1)^n >= k^n")
    }

    fn recursion(&self, mode: Mode, k: u64, j: u64, m: u64, r: u64) -> LargeNat {
        if k == 0 || m == 0 || r == 0 {
            return LargeNat::zero();
        }
        if j > MAX_UNROLL {
            return LargeNat::node(
                Op::Recur {
                    mode,
                    k,
                    j: LargeNat::from(j),
                    m: LargeNat::from(m),
                    r,
                },
                None,
            );
        }
        let r_big = LargeNat::from(r);
        let mut f = LargeNat::zero();
        for i in 0..j {
            let len = if m > i {
                self.add(&f, &LargeNat::from(m - i - 1))
            } else {
                // f(i) >= i, so f(i) + m - i - 1 >= m - 1 >= 0
                self.sub(&f, &LargeNat::from(i + 1 - m))
                    .expect("recursion exponent is nonnegative")
            };
            let count = match mode {
                Mode::PaperExact => self.pow(&LargeNat::from(k + 2), &len),
                Mode::Tight => self.variable_word_count(k + 1, &len),
            };
            let term = self.pow(&r_big, &count);
            f = self.add(&f, &term);
        }
        f
    }

    /// The recursion `f(k, 0, m, r) = 0`,
    /// `f(k, j+1, m, r) = f(k, j, m, r) + r^((k+2)^(m-j-1+f(k, j, m, r)))`,
    /// and `f = 0` whenever one of `k, m, r` is zero.
    pub fn f_paper(&self, k: u64, j: u64, m: u64, r: u64) -> LargeNat {
        self.recursion(Mode::PaperExact, k, j, m, r)
    }

    /// Same shape as [`Evaluator::f_paper`] with exponent
    /// `(k+2)^L - (k+1)^L`.
    pub fn f_tight(&self, k: u64, j: u64, m: u64, r: u64) -> LargeNat {
        self.recursion(Mode::Tight, k, j, m, r)
    }

    pub fn f(&self, mode: Mode, k: u64, j: u64, m: u64, r: u64) -> LargeNat {
        self.recursion(mode, k, j, m, r)
    }

    /// Upper bound `f(k, m, m, r)` for the insensitivity numbers.
    pub fn sh_bound(&self, k: u64, m: u64, r: u64, mode: Mode) -> LargeNat {
        self.recursion(mode, k, m, m, r)
    }

    /// `f(k, M, M, r)` for a possibly symbolic `M`.
    fn sh_bound_large(&self, k: u64, m: &LargeNat, r: u64, mode: Mode) -> LargeNat {
        match m.to_u64() {
            Some(m) => self.sh_bound(k, m, r, mode),
            None => LargeNat::node(
                Op::Recur {
                    mode,
                    k,
                    j: m.clone(),
                    m: m.clone(),
                    r,
                },
                None,
            ),
        }
    }

    /// The chain `GR(1,m,r) = H(m,r)`, `GR(k+1,m,r) <= Sh(k, GR(k,m,r), r)`.
    pub fn gr_bound(
        &self,
        k: u64,
        m: u64,
        r: u64,
        mode: Mode,
        h: &HTable,
    ) -> Result<LargeNat, BoundError> {
        if k == 0 || m == 0 || r == 0 {
            return Err(BoundError::InvalidArgument(
                "k, m and r must be positive".into(),
            ));
        }
        let mut g = LargeNat::from(h.get(m, r).ok_or(BoundError::MissingHValue { m, r })?);
        for level in 1..k {
            g = self.sh_bound_large(level, &g, r, mode);
        }
        Ok(g)
    }
}

pub fn f_paper(k: u64, j: u64, m: u64, r: u64) -> LargeNat {
    Evaluator::default().f_paper(k, j, m, r)
}

pub fn f_tight(k: u64, j: u64, m: u64, r: u64) -> LargeNat {
    Evaluator::default().f_tight(k, j, m, r)
}

pub fn sh_bound(k: u64, m: u64, r: u64, mode: Mode) -> LargeNat {
    Evaluator::default().sh_bound(k, m, r, mode)
}

pub fn gr_bound(k: u64, m: u64, r: u64, mode: Mode, h: &HTable) -> Result<LargeNat, BoundError> {
    Evaluator::default().gr_bound(k, m, r, mode, h)
}

pub(crate) fn variable_word_count(k: u64, n: &LargeNat) -> LargeNat {
    Evaluator::default().variable_word_count(k, n)
}

/// Known values of `H(m, r)`; `H(1, r) = 1` is built in.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HTable {
    values: BTreeMap<(u64, u64), u64>,
}

impl HTable {
    pub fn new() -> Self {
        HTable::default()
    }

    pub fn insert(&mut self, m: u64, r: u64, h: u64) {
        self.values.insert((m, r), h);
    }

    pub fn with(mut self, m: u64, r: u64, h: u64) -> Self {
        self.insert(m, r, h);
        self
    }

    pub fn get(&self, m: u64, r: u64) -> Option<u64> {
        if m == 1 && r >= 1 {
            return Some(1);
        }
        self.values.get(&(m, r)).copied()
    }

    /// Lines `m r H`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, BoundError> {
        let mut table = HTable::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Result<Vec<u64>, _> = line.split_whitespace().map(str::parse).collect();
            match nums.as_deref() {
                Ok([m, r, h]) => table.insert(*m, *r, *h),
                _ => {
                    return Err(BoundError::HTableParse {
                        line: i + 1,
                        reason: "expected `m r H`".into(),
                    })
                }
            }
        }
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, BoundError> {
        let text = std::fs::read_to_string(path).map_err(|e| BoundError::Io(e.to_string()))?;
        HTable::parse(&text)
    }
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

/// Sound comparison: exact when both sides are exact, otherwise decided from
/// interval bounds on iterated logarithms. Never answers wrongly; may answer
/// `Unknown`.
pub fn cmp(x: &LargeNat, y: &LargeNat) -> Comparison {
    if let (Some(a), Some(b)) = (x.exact(), y.exact()) {
        return match a.cmp(b) {
            std::cmp::Ordering::Less => Comparison::Less,
            std::cmp::Ordering::Equal => Comparison::Equal,
            std::cmp::Ordering::Greater => Comparison::Greater,
        };
    }
    if same_expr(x, y) {
        return Comparison::Equal;
    }
    cmp_by_magnitude(x, y)
}

/// The magnitude-only path of [`cmp`], exposed for testing its soundness.
pub fn cmp_by_magnitude(x: &LargeNat, y: &LargeNat) -> Comparison {
    let (mx, my) = (magnitude(x), magnitude(y));
    if let Some(xh) = mx.hi {
        if tower::less(xh, my.lo) {
            return Comparison::Less;
        }
    }
    if let Some(yh) = my.hi {
        if tower::less(yh, mx.lo) {
            return Comparison::Greater;
        }
    }
    Comparison::Unknown
}

fn same_expr(x: &LargeNat, y: &LargeNat) -> bool {
    if x.ptr() == y.ptr() {
        return true;
    }
    if let (Some(a), Some(b)) = (x.exact(), y.exact()) {
        return a == b;
    }
    match (&x.0.op, &y.0.op) {
        (Op::Add(a, b), Op::Add(c, d))
        | (Op::Mul(a, b), Op::Mul(c, d))
        | (Op::Sub(a, b), Op::Sub(c, d))
        | (Op::Pow(a, b), Op::Pow(c, d)) => same_expr(a, c) && same_expr(b, d),
        (
            Op::Recur {
                mode: m1,
                k: k1,
                j: j1,
                m: mm1,
                r: r1,
            },
            Op::Recur {
                mode: m2,
                k: k2,
                j: j2,
                m: mm2,
                r: r2,
            },
        ) => m1 == m2 && k1 == k2 && r1 == r2 && same_expr(j1, j2) && same_expr(mm1, mm2),
        _ => false,
    }
}

/// Bounds on `log2(value + 1)`; `hi = None` means no upper bound is known.
#[derive(Clone, Copy, Debug)]
struct Mag {
    lo: tower::Tower,
    hi: Option<tower::Tower>,
}

fn magnitude(x: &LargeNat) -> Mag {
    if let Some(m) = x.0.mag.get() {
        return *m;
    }
    let m = compute_magnitude(x);
    let _ = x.0.mag.set(m);
    m
}

fn compute_magnitude(x: &LargeNat) -> Mag {
    use tower::{Dir, Tower};
    if let Some(v) = x.exact() {
        let (lo, hi) = log2_plus_one_bounds(v);
        return Mag {
            lo: Tower::real(lo),
            hi: Some(Tower::real(hi)),
        };
    }
    let zero = Tower::real(0.0);
    match &x.0.op {
        Op::Const => unreachable!("constants are exact"),
        Op::Add(a, b) => {
            let (ma, mb) = (magnitude(a), magnitude(b));
            Mag {
                lo: tower::max(ma.lo, mb.lo, Dir::Down),
                hi: both(ma.hi, mb.hi).map(|(p, q)| tower::add(p, q, Dir::Up)),
            }
        }
        Op::Mul(a, b) => {
            let (ma, mb) = (magnitude(a), magnitude(b));
            let one = Tower::real(1.0);
            let lo = if tower::ge(ma.lo, one) && tower::ge(mb.lo, one) {
                tower::sub_const(tower::add(ma.lo, mb.lo, Dir::Down), 2.0)
            } else {
                zero
            };
            Mag {
                lo,
                hi: both(ma.hi, mb.hi).map(|(p, q)| tower::add(p, q, Dir::Up)),
            }
        }
        Op::Sub(a, b) => {
            let (ma, mb) = (magnitude(a), magnitude(b));
            let lo = match mb.hi {
                Some(bh) if tower::ge(ma.lo, tower::add(bh, Tower::real(1.0), Dir::Up)) => {
                    tower::sub_const(ma.lo, 1.0)
                }
                _ => zero,
            };
            Mag { lo, hi: ma.hi }
        }
        Op::Pow(b, e) => {
            let (mb, me) = (magnitude(b), magnitude(e));
            // b >= 2 and e >= 1: log2(b^e + 1) >= e log2 b >= 2^(Le - 1) * Lb / 2,
            // using log2 b >= Lb - log2(1.5) >= Lb / 2 once Lb >= 1.17
            let lo = if tower::ge(mb.lo, Tower::real(1.2))
                && tower::ge(me.lo, Tower::real(1.0))
            {
                let le = tower::sub_const(me.lo, 1.0);
                let lb = tower::log2(mb.lo, Dir::Down);
                tower::exp2(tower::sub_const(tower::add(le, lb, Dir::Down), 1.0), Dir::Down)
            } else {
                zero
            };
            // log2(b^e + 1) <= e log2 b + 1 <= 2^Le * Lb + 1
            let hi = both(mb.hi, me.hi).map(|(bh, eh)| {
                let prod = tower::exp2(
                    tower::add(eh, tower::log2(bh, Dir::Up), Dir::Up),
                    Dir::Up,
                );
                tower::add(prod, Tower::real(1.0), Dir::Up)
            });
            Mag { lo, hi }
        }
        // each recursion step adds at least one
        Op::Recur { j, .. } => Mag {
            lo: magnitude(j).lo,
            hi: None,
        },
    }
}

fn both<T>(a: Option<T>, b: Option<T>) -> Option<(T, T)> {
    Some((a?, b?))
}

/// Bounds on `log2(v + 1)` from the leading bits of `v`.
fn log2_plus_one_bounds(v: &BigUint) -> (f64, f64) {
    if v.is_zero() {
        return (0.0, 0.0);
    }
    let approx = |x: &BigUint| -> f64 {
        let bits = x.bits();
        if bits <= 64 {
            (x.to_u64().unwrap() as f64).log2()
        } else {
            let shift = bits - 64;
            ((x >> shift).to_u64().unwrap() as f64).log2() + shift as f64
        }
    };
    let l = approx(&(v + 1u32));
    (l - 1e-9 * (1.0 + l), l + 1e-9 * (1.0 + l))
}

/// Positive reals of the form `2^2^...^x` with outward rounding.
mod tower {
    /// Level-0 values stay below `2^HIGH`; higher levels keep `x >= HIGH`.
    const HIGH: f64 = 1000.0;
    const REL: f64 = 1e-12;

    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum Dir {
        Up,
        Down,
    }

    /// The value `T(level, x)` with `T(0, x) = x` and `T(l, x) = 2^T(l-1, x)`.
    #[derive(Clone, Copy, Debug)]
    pub struct Tower {
        level: u32,
        x: f64,
    }

    fn nudge(x: f64, dir: Dir) -> f64 {
        let d = x.abs() * REL + 1e-300;
        match dir {
            Dir::Up => x + d,
            Dir::Down => x - d,
        }
    }

    impl Tower {
        pub fn real(x: f64) -> Tower {
            normalize(Tower { level: 0, x }, Dir::Down)
        }
    }

    fn normalize(mut t: Tower, dir: Dir) -> Tower {
        while t.level > 0 && t.x < HIGH {
            t = Tower {
                level: t.level - 1,
                x: nudge(t.x.exp2(), dir),
            };
        }
        if t.level == 0 && t.x > HIGH.exp2() {
            t = Tower {
                level: 1,
                x: nudge(t.x.log2(), dir),
            };
        }
        t
    }

    fn lift(t: Tower, level: u32, dir: Dir) -> Tower {
        let mut t = t;
        while t.level < level {
            let x = if t.x <= 0.0 {
                f64::NEG_INFINITY
            } else {
                nudge(t.x.log2(), dir)
            };
            t = Tower {
                level: t.level + 1,
                x,
            };
        }
        t
    }

    /// `a < b`, decided soundly.
    pub fn less(a: Tower, b: Tower) -> bool {
        let level = a.level.max(b.level);
        let (a, b) = (lift(a, level, Dir::Up), lift(b, level, Dir::Down));
        a.x < b.x
    }

    /// `a >= b`, decided soundly.
    pub fn ge(a: Tower, b: Tower) -> bool {
        let level = a.level.max(b.level);
        let (a, b) = (lift(a, level, Dir::Down), lift(b, level, Dir::Up));
        a.x >= b.x
    }

    pub fn max(a: Tower, b: Tower, dir: Dir) -> Tower {
        let level = a.level.max(b.level);
        let (a, b) = (lift(a, level, dir), lift(b, level, dir));
        let x = if a.x >= b.x { a.x } else { b.x };
        normalize(Tower { level, x }, dir)
    }

    fn double(t: Tower) -> Tower {
        let x = match t.level {
            0 => 2.0 * t.x,
            1 => t.x + 1.0,
            _ => t.x,
        };
        normalize(
            Tower {
                level: t.level,
                x: nudge(x, Dir::Up),
            },
            Dir::Up,
        )
    }

    /// Bound on `a + b` for nonnegative `a, b`.
    pub fn add(a: Tower, b: Tower, dir: Dir) -> Tower {
        if a.level == 0 && b.level == 0 {
            return normalize(
                Tower {
                    level: 0,
                    x: nudge(a.x + b.x, dir),
                },
                dir,
            );
        }
        let m = max(a, b, dir);
        match dir {
            Dir::Down => m,
            Dir::Up => double(m),
        }
    }

    /// Lower bound on `t - c` for a small constant `c >= 0`.
    pub fn sub_const(t: Tower, c: f64) -> Tower {
        let x = match t.level {
            0 => t.x - c,
            // 2^x - c >= 2^(x(1 - REL)) for x >= HIGH and small c
            _ => t.x,
        };
        normalize(
            Tower {
                level: t.level,
                x: nudge(x, Dir::Down),
            },
            Dir::Down,
        )
    }

    pub fn log2(t: Tower, dir: Dir) -> Tower {
        if t.level == 0 {
            let x = if t.x <= 0.0 {
                f64::NEG_INFINITY
            } else {
                nudge(t.x.log2(), dir)
            };
            return Tower { level: 0, x };
        }
        normalize(
            Tower {
                level: t.level - 1,
                x: t.x,
            },
            dir,
        )
    }

    pub fn exp2(t: Tower, dir: Dir) -> Tower {
        if t.level == 0 && t.x <= HIGH {
            return normalize(
                Tower {
                    level: 0,
                    x: nudge(t.x.exp2(), dir),
                },
                dir,
            );
        }
        Tower {
            level: t.level + 1,
            x: t.x,
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn decimal_digits_estimate(bits: u64) -> u64 {
    ((bits as f64) * std::f64::consts::LOG10_2).floor() as u64 + 1
}

fn is_small_exact(x: &LargeNat) -> bool {
    x.bits()
        .is_some_and(|b| decimal_digits_estimate(b) <= INLINE_DIGITS)
}

fn is_atomic(x: &LargeNat, names: &HashMap<*const Node, String>) -> bool {
    is_small_exact(x)
        || names.contains_key(&x.ptr())
        || matches!(x.0.op, Op::Const | Op::Recur { .. })
}

fn render_with(x: &LargeNat, names: &HashMap<*const Node, String>, out: &mut String) {
    if let Some(name) = names.get(&x.ptr()) {
        out.push_str(name);
        return;
    }
    render_body(x, names, out);
}

fn render_body(x: &LargeNat, names: &HashMap<*const Node, String>, out: &mut String) {
    if is_small_exact(x) {
        out.push_str(&x.exact().unwrap().to_string());
        return;
    }
    let wrap = |y: &LargeNat, out: &mut String| {
        if is_atomic(y, names) {
            render_with(y, names, out);
        } else {
            out.push('(');
            render_with(y, names, out);
            out.push(')');
        }
    };
    match &x.0.op {
        Op::Const => {
            let v = x.exact().unwrap();
            let digits = decimal_digits_estimate(v.bits());
            if digits <= DESCRIBE_DIGITS {
                out.push_str(&v.to_string());
            } else {
                out.push_str(&format!("<{}-bit number>", v.bits()));
            }
        }
        Op::Add(a, b) => {
            render_with(a, names, out);
            out.push_str(" + ");
            if matches!(b.0.op, Op::Sub(..)) && !is_atomic(b, names) {
                wrap(b, out);
            } else {
                render_with(b, names, out);
            }
        }
        Op::Sub(a, b) => {
            render_with(a, names, out);
            out.push_str(" - ");
            wrap(b, out);
        }
        Op::Mul(a, b) => {
            for (i, y) in [a, b].into_iter().enumerate() {
                if i > 0 {
                    out.push_str(" * ");
                }
                if matches!(y.0.op, Op::Add(..) | Op::Sub(..)) && !is_atomic(y, names) {
                    wrap(y, out);
                } else {
                    render_with(y, names, out);
                }
            }
        }
        Op::Pow(b, e) => {
            wrap(b, out);
            out.push('^');
            wrap(e, out);
        }
        Op::Recur { mode, k, j, m, r } => {
            let name = match mode {
                Mode::PaperExact => "f",
                Mode::Tight => "f_tight",
            };
            out.push_str(&format!("{name}({k}, "));
            render_with(j, names, out);
            out.push_str(", ");
            render_with(m, names, out);
            out.push_str(&format!(", {r})"));
        }
    }
}

fn children(x: &LargeNat) -> Vec<&LargeNat> {
    match &x.0.op {
        Op::Const => vec![],
        Op::Add(a, b) | Op::Mul(a, b) | Op::Sub(a, b) | Op::Pow(a, b) => vec![a, b],
        Op::Recur { j, m, .. } => vec![j, m],
    }
}

/// One-line expression for `x`; switches to `t1 = ...; t2 = ...; <expr>`
/// naming shared subexpressions when the inline form is too long.
pub fn render(x: &LargeNat) -> String {
    let mut out = String::new();
    let empty = HashMap::new();
    // cheap inline attempt, abandoned once it grows too long
    if inline_size(x, &mut HashMap::new()) <= INLINE_RENDER_CAP as u128 {
        render_with(x, &empty, &mut out);
        return out;
    }
    // count references to each compound node
    let mut refs: HashMap<*const Node, usize> = HashMap::new();
    let mut order: Vec<LargeNat> = Vec::new();
    fn visit(
        x: &LargeNat,
        refs: &mut HashMap<*const Node, usize>,
        order: &mut Vec<LargeNat>,
    ) {
        let seen = refs.contains_key(&x.ptr());
        *refs.entry(x.ptr()).or_insert(0) += 1;
        if seen {
            return;
        }
        for c in children(x) {
            visit(c, refs, order);
        }
        order.push(x.clone());
    }
    visit(x, &mut refs, &mut order);
    let mut names: HashMap<*const Node, String> = HashMap::new();
    let mut defs = Vec::new();
    for node in &order {
        if node.ptr() == x.ptr() || is_small_exact(node) {
            continue;
        }
        if refs[&node.ptr()] >= 2 && !matches!(node.0.op, Op::Const) {
            let mut body = String::new();
            render_body(node, &names, &mut body);
            let name = format!("t{}", defs.len() + 1);
            defs.push(format!("{name} = {body}"));
            names.insert(node.ptr(), name);
        }
    }
    for d in defs {
        out.push_str(&d);
        out.push_str("; ");
    }
    render_body(x, &names, &mut out);
    out
}

/// Rough length of the inline rendering, saturating.
fn inline_size(x: &LargeNat, memo: &mut HashMap<*const Node, u128>) -> u128 {
    if let Some(s) = memo.get(&x.ptr()) {
        return *s;
    }
    let s = if is_small_exact(x) {
        INLINE_DIGITS as u128
    } else {
        children(x)
            .into_iter()
            .map(|c| inline_size(c, memo))
            .fold(8u128, |a, b| a.saturating_add(b))
    };
    memo.insert(x.ptr(), s);
    s
}

/// Human-readable report: the expression form, plus the decimal value when
/// it is exact and short enough.
pub fn describe(x: &LargeNat) -> String {
    let form = render(x);
    match x.exact() {
        Some(v) => {
            let digits = decimal_digits_estimate(v.bits());
            if digits <= DESCRIBE_DIGITS {
                let dec = v.to_string();
                if dec == form {
                    dec
                } else {
                    format!("{form} = {dec}")
                }
            } else {
                format!("{form} (about {digits} decimal digits)")
            }
        }
        None => form,
    }
}
