//! Words over `[k]` and m-dimensional variable words.
//!
//! Letters are 1-based. Variables are `Var(j)` with `j` 0-based; a
//! 1-dimensional variable word uses `Var(0)`, which prints as `v`.
//! The canonical symbol order is `1 < 2 < ... < k < v0 < v1 < ...`, and it
//! fixes both enumeration order and ranks.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bounds::LargeNat;

/// Default cap on `(k+1)^n` for full enumerations.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("empty word")]
    EmptyWord,
    #[error("alphabet size must be positive")]
    EmptyAlphabet,
    #[error("variable v{0} does not occur")]
    MissingVariable(usize),
    #[error("variable v{0} is not in block position with its successor")]
    BlockViolation(usize),
    #[error("letter at position {0} is outside the alphabet")]
    LetterOutOfRange(usize),
    #[error("variable at position {0} is outside the dimension")]
    VariableOutOfRange(usize),
    #[error("dimension {dim} exceeds length {len}")]
    DimensionTooLarge { dim: usize, len: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("index {0} out of range")]
    IndexOutOfRange(u64),
    #[error("enumeration of {alphabet}^{len} words exceeds the budget of {budget}")]
    SizeGuard { alphabet: u64, len: usize, budget: u64 },
    #[error("not reduced: conflict at position {0}")]
    NotReduced(usize),
    #[error("cannot parse token {0:?}")]
    BadToken(String),
    #[error("mixed `v` and `vN` tokens in one word")]
    MixedVariableStyle,
}

/// One entry of a (variable) word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Letter(u32),
    Var(u32),
}

impl Symbol {
    pub fn is_var(self) -> bool {
        matches!(self, Symbol::Var(_))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Letter(a) => write!(f, "{a}"),
            Symbol::Var(j) => write!(f, "v{j}"),
        }
    }
}

/// A constant word over `[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    k: u32,
    symbols: Vec<Symbol>,
}

impl Word {
    pub fn new(k: u32, symbols: Vec<Symbol>) -> Result<Self, WordError> {
        if k == 0 {
            return Err(WordError::EmptyAlphabet);
        }
        if symbols.is_empty() {
            return Err(WordError::EmptyWord);
        }
        for (i, s) in symbols.iter().enumerate() {
            match *s {
                Symbol::Letter(a) if a >= 1 && a <= k => {}
                Symbol::Letter(_) => return Err(WordError::LetterOutOfRange(i)),
                Symbol::Var(_) => return Err(WordError::VariableOutOfRange(i)),
            }
        }
        Ok(Word { k, symbols })
    }

    pub fn alphabet(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tokens(f, &self.symbols, false)
    }
}

/// An m-dimensional variable word over `[k]`.
///
/// Every `Var(j)` with `j < dim` occurs, and the variables are in block
/// position: all occurrences of `v_j` precede all occurrences of `v_{j+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarWord {
    k: u32,
    dim: usize,
    symbols: Vec<Symbol>,
}

/// Result of substituting into a variable word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Substituted {
    Constant(Word),
    Variable(VarWord),
}

impl Substituted {
    pub fn symbols(&self) -> &[Symbol] {
        match self {
            Substituted::Constant(w) => w.symbols(),
            Substituted::Variable(w) => w.symbols(),
        }
    }

    pub fn into_varword(self) -> Option<VarWord> {
        match self {
            Substituted::Variable(w) => Some(w),
            Substituted::Constant(_) => None,
        }
    }
}

impl VarWord {
    /// Validates `symbols` as a `dim`-dimensional variable word over `[k]`.
    pub fn new(k: u32, dim: usize, symbols: Vec<Symbol>) -> Result<Self, WordError> {
        validate(k, dim, &symbols)?;
        Ok(VarWord { k, dim, symbols })
    }

    /// Like [`VarWord::new`], with the dimension read off the symbols.
    pub fn infer(k: u32, symbols: Vec<Symbol>) -> Result<Self, WordError> {
        let dim = symbols
            .iter()
            .filter_map(|s| match s {
                Symbol::Var(j) => Some(*j as usize + 1),
                Symbol::Letter(_) => None,
            })
            .max()
            .ok_or(WordError::MissingVariable(0))?;
        VarWord::new(k, dim, symbols)
    }

    /// `(v_0, v_1, ..., v_{n-1})`.
    pub fn identity(k: u32, n: usize) -> Result<Self, WordError> {
        VarWord::new(k, n, (0..n as u32).map(Symbol::Var).collect())
    }

    pub(crate) fn from_parts_unchecked(k: u32, dim: usize, symbols: Vec<Symbol>) -> Self {
        debug_assert!(validate(k, dim, &symbols).is_ok());
        VarWord { k, dim, symbols }
    }

    /// Parses the space-separated token format, e.g. `v0 1 v1 v1`.
    pub fn parse(k: u32, text: &str) -> Result<Self, WordError> {
        VarWord::infer(k, parse_tokens(text)?)
    }

    pub fn alphabet(&self) -> u32 {
        self.k
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// The same word viewed over a larger alphabet.
    pub fn widen(&self, k: u32) -> Result<Self, WordError> {
        VarWord::new(k, self.dim, self.symbols.clone())
    }

    /// Position-wise substitution `w(x)`.
    pub fn substitute(&self, x: &[Symbol]) -> Result<Substituted, WordError> {
        if x.len() != self.dim {
            return Err(WordError::LengthMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let x_dim = argument_dimension(self.k, x)?;
        let out = self.apply(x);
        Ok(match x_dim {
            0 => Substituted::Constant(Word {
                k: self.k,
                symbols: out,
            }),
            d => Substituted::Variable(VarWord::from_parts_unchecked(self.k, d, out)),
        })
    }

    /// Substitutes another variable word; the result is always variable.
    pub fn compose(&self, inner: &VarWord) -> Result<VarWord, WordError> {
        if inner.k > self.k {
            return Err(WordError::LetterOutOfRange(0));
        }
        match self.substitute(&inner.symbols)? {
            Substituted::Variable(w) => Ok(w),
            Substituted::Constant(_) => unreachable!("variable argument yields a variable word"),
        }
    }

    /// Raw substitution without validating `x`.
    pub(crate) fn apply(&self, x: &[Symbol]) -> Vec<Symbol> {
        debug_assert_eq!(x.len(), self.dim);
        self.symbols
            .iter()
            .map(|s| match *s {
                Symbol::Var(j) => x[j as usize],
                letter => letter,
            })
            .collect()
    }

    /// Positions carrying `v_j`.
    pub fn support(&self, j: usize) -> Result<SupportSet, WordError> {
        if j >= self.dim {
            return Err(WordError::IndexOutOfRange(j as u64));
        }
        let idx = self
            .symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Symbol::Var(j as u32))
            .map(|(i, _)| i)
            .collect();
        Ok(SupportSet(idx))
    }

    /// The unique `x` with `w(x) = u`, if `u` is reduced by `w`.
    pub fn solve_substitution(&self, u: &[Symbol]) -> Result<Vec<Symbol>, WordError> {
        if u.len() != self.len() {
            return Err(WordError::LengthMismatch {
                expected: self.len(),
                found: u.len(),
            });
        }
        let mut x: Vec<Option<Symbol>> = vec![None; self.dim];
        // index of the first position of each variable, for error reporting
        let mut first_pos = vec![0usize; self.dim];
        for (i, (ws, us)) in self.symbols.iter().zip(u).enumerate() {
            match *ws {
                Symbol::Letter(_) => {
                    if ws != us {
                        return Err(WordError::NotReduced(i));
                    }
                }
                Symbol::Var(j) => {
                    let j = j as usize;
                    match x[j] {
                        None => {
                            x[j] = Some(*us);
                            first_pos[j] = i;
                        }
                        Some(prev) if prev != *us => return Err(WordError::NotReduced(i)),
                        Some(_) => {}
                    }
                }
            }
        }
        let x: Vec<Symbol> = x.into_iter().map(|s| s.expect("every variable occurs")).collect();
        if let Err(e) = argument_dimension(self.k, &x) {
            let pos = match e {
                WordError::MissingVariable(_) => 0,
                WordError::BlockViolation(j)
                | WordError::LetterOutOfRange(j)
                | WordError::VariableOutOfRange(j) => first_pos[j.min(self.dim - 1)],
                _ => 0,
            };
            return Err(WordError::NotReduced(pos));
        }
        Ok(x)
    }
}

impl fmt::Display for VarWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tokens(f, &self.symbols, self.dim == 1)
    }
}

/// Positions of one variable, strictly increasing and nonempty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn new(mut idx: Vec<usize>) -> Option<Self> {
        idx.sort_unstable();
        idx.dedup();
        if idx.is_empty() {
            None
        } else {
            Some(SupportSet(idx))
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        self.0[self.0.len() - 1]
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// Checks the variable-word invariants for a given dimension.
pub fn validate(k: u32, dim: usize, symbols: &[Symbol]) -> Result<(), WordError> {
    if k == 0 {
        return Err(WordError::EmptyAlphabet);
    }
    if symbols.is_empty() {
        return Err(WordError::EmptyWord);
    }
    let mut first = vec![usize::MAX; dim];
    let mut last = vec![0usize; dim];
    for (i, s) in symbols.iter().enumerate() {
        match *s {
            Symbol::Letter(a) => {
                if a == 0 || a > k {
                    return Err(WordError::LetterOutOfRange(i));
                }
            }
            Symbol::Var(j) => {
                let j = j as usize;
                if j >= dim {
                    return Err(WordError::VariableOutOfRange(i));
                }
                first[j] = first[j].min(i);
                last[j] = i;
            }
        }
    }
    if let Some(j) = first.iter().position(|&p| p == usize::MAX) {
        return Err(WordError::MissingVariable(j));
    }
    for j in 1..dim {
        if last[j - 1] > first[j] {
            return Err(WordError::BlockViolation(j - 1));
        }
    }
    if dim > symbols.len() {
        return Err(WordError::DimensionTooLarge {
            dim,
            len: symbols.len(),
        });
    }
    Ok(())
}

/// Dimension of a substitution argument: 0 for a constant word, otherwise
/// the dimension of the variable word it forms.
fn argument_dimension(k: u32, x: &[Symbol]) -> Result<usize, WordError> {
    let dim = x
        .iter()
        .filter_map(|s| match s {
            Symbol::Var(j) => Some(*j as usize + 1),
            Symbol::Letter(_) => None,
        })
        .max()
        .unwrap_or(0);
    if dim == 0 {
        Word::new(k, x.to_vec())?;
    } else {
        validate(k, dim, x)?;
    }
    Ok(dim)
}

fn write_tokens(f: &mut fmt::Formatter<'_>, symbols: &[Symbol], bare_v: bool) -> fmt::Result {
    for (i, s) in symbols.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        match s {
            Symbol::Var(0) if bare_v => write!(f, "v")?,
            other => write!(f, "{other}")?,
        }
    }
    Ok(())
}

/// Renders symbols with the 1-dimensional variable as `v`.
pub fn format_symbols(symbols: &[Symbol]) -> String {
    let bare = symbols.iter().all(|s| matches!(s, Symbol::Letter(_) | Symbol::Var(0)));
    struct Tokens<'a>(&'a [Symbol], bool);
    impl fmt::Display for Tokens<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_tokens(f, self.0, self.1)
        }
    }
    Tokens(symbols, bare).to_string()
}

/// Parses `v`, `vN` and decimal letter tokens.
pub fn parse_tokens(text: &str) -> Result<Vec<Symbol>, WordError> {
    let mut out = Vec::new();
    let (mut bare, mut indexed) = (false, false);
    for tok in text.split_whitespace() {
        let sym = if tok == "v" {
            bare = true;
            Symbol::Var(0)
        } else if let Some(rest) = tok.strip_prefix('v') {
            indexed = true;
            Symbol::Var(u32::from_str(rest).map_err(|_| WordError::BadToken(tok.into()))?)
        } else {
            Symbol::Letter(u32::from_str(tok).map_err(|_| WordError::BadToken(tok.into()))?)
        };
        out.push(sym);
    }
    if bare && indexed {
        return Err(WordError::MixedVariableStyle);
    }
    if out.is_empty() {
        return Err(WordError::EmptyWord);
    }
    Ok(out)
}

#[inline]
fn digit(s: Symbol, k: u32) -> Option<u64> {
    match s {
        Symbol::Letter(a) if a >= 1 && a <= k => Some(a as u64 - 1),
        Symbol::Var(0) => Some(k as u64),
        _ => None,
    }
}

/// Mixed-radix rank of a word over `[k] ∪ {v}`: `digit(1)=0, ..., digit(v)=k`.
pub fn rank(symbols: &[Symbol], k: u32) -> Result<u64, WordError> {
    let base = k as u64 + 1;
    let mut acc: u64 = 0;
    for (i, s) in symbols.iter().enumerate() {
        let d = digit(*s, k).ok_or(WordError::LetterOutOfRange(i))?;
        acc = acc
            .checked_mul(base)
            .and_then(|x| x.checked_add(d))
            .ok_or(WordError::IndexOutOfRange(u64::MAX))?;
    }
    Ok(acc)
}

/// The rank reduced modulo 2^64; defined for every length.
pub fn rank_wrapping(symbols: &[Symbol], k: u32) -> Result<u64, WordError> {
    let base = k as u64 + 1;
    let mut acc: u64 = 0;
    for (i, s) in symbols.iter().enumerate() {
        let d = digit(*s, k).ok_or(WordError::LetterOutOfRange(i))?;
        acc = acc.wrapping_mul(base).wrapping_add(d);
    }
    Ok(acc)
}

/// Inverse of [`rank`].
pub fn unrank(mut index: u64, k: u32, n: usize) -> Result<Vec<Symbol>, WordError> {
    let base = k as u64 + 1;
    let total = base.checked_pow(n as u32);
    if let Some(t) = total {
        if index >= t {
            return Err(WordError::IndexOutOfRange(index));
        }
    }
    let mut out = vec![Symbol::Letter(1); n];
    for slot in out.iter_mut().rev() {
        let d = (index % base) as u32;
        index /= base;
        *slot = if d == k {
            Symbol::Var(0)
        } else {
            Symbol::Letter(d + 1)
        };
    }
    Ok(out)
}

/// `|W^k_v(n)| = (k+1)^n - k^n`.
pub fn count_variable_words(k: u64, n: u64) -> LargeNat {
    crate::bounds::variable_word_count(k, &LargeNat::from(n))
}

/// Machine-sized `(k+1)^n - k^n`, if it fits.
pub fn count_variable_words_u64(k: u64, n: u32) -> Option<u64> {
    let all = (k + 1).checked_pow(n)?;
    Some(all - k.pow(n))
}

/// Lexicographic iterator over all words of length `n` over `[k] ∪ {v}`.
#[derive(Clone, Debug)]
pub struct AllWords {
    k: u32,
    digits: Vec<u32>,
    done: bool,
}

impl AllWords {
    pub fn new(k: u32, n: usize) -> Self {
        AllWords {
            k,
            digits: vec![0; n],
            done: n == 0,
        }
    }
}

impl Iterator for AllWords {
    type Item = Vec<Symbol>;

    fn next(&mut self) -> Option<Vec<Symbol>> {
        if self.done {
            return None;
        }
        let k = self.k;
        let out = self
            .digits
            .iter()
            .map(|&d| if d == k { Symbol::Var(0) } else { Symbol::Letter(d + 1) })
            .collect();
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.digits[i] < k {
                self.digits[i] += 1;
                break;
            }
            self.digits[i] = 0;
        }
        Some(out)
    }
}

/// Variable words of length `n` over `[k]` as raw symbol vectors, in rank order.
pub fn variable_word_symbols(k: u32, n: usize) -> impl Iterator<Item = Vec<Symbol>> {
    AllWords::new(k, n).filter(|w| w.contains(&Symbol::Var(0)))
}

/// All of `W^k_v(n)` in lexicographic order, guarded by [`DEFAULT_ENUMERATION_BUDGET`].
pub fn enumerate_variable_words(k: u32, n: usize) -> Result<Vec<VarWord>, WordError> {
    enumerate_variable_words_within(k, n, DEFAULT_ENUMERATION_BUDGET)
}

pub fn enumerate_variable_words_within(
    k: u32,
    n: usize,
    budget: u64,
) -> Result<Vec<VarWord>, WordError> {
    if k == 0 {
        return Err(WordError::EmptyAlphabet);
    }
    if n == 0 {
        return Err(WordError::EmptyWord);
    }
    let guard = WordError::SizeGuard {
        alphabet: k as u64 + 1,
        len: n,
        budget,
    };
    let total = (k as u64 + 1).checked_pow(n as u32).ok_or(guard.clone())?;
    if total > budget {
        return Err(guard);
    }
    Ok(variable_word_symbols(k, n)
        .map(|s| VarWord::from_parts_unchecked(k, 1, s))
        .collect())
}

/// All `m`-dimensional variable words of length `n` over `[k]`, in canonical
/// lexicographic order (letters before variables, variables by index).
pub fn dimensional_words(k: u32, m: usize, n: usize) -> DimensionalWords {
    DimensionalWords::new(k, m, n)
}

/// Depth-first generator behind [`dimensional_words`].
#[derive(Clone, Debug)]
pub struct DimensionalWords {
    k: u32,
    m: usize,
    n: usize,
    // per position: choice index into the position's option list
    stack: Vec<Symbol>,
    started: bool,
    done: bool,
}

impl DimensionalWords {
    fn new(k: u32, m: usize, n: usize) -> Self {
        DimensionalWords {
            k,
            m,
            n,
            stack: Vec::with_capacity(n),
            started: false,
            done: k == 0 || m == 0 || m > n,
        }
    }

    /// Number of variables opened so far in `prefix`.
    fn opened(prefix: &[Symbol]) -> u32 {
        prefix
            .iter()
            .rev()
            .find_map(|s| match s {
                Symbol::Var(j) => Some(j + 1),
                Symbol::Letter(_) => None,
            })
            .unwrap_or(0)
    }

    fn first_option(&self, prefix: &[Symbol]) -> Option<Symbol> {
        let first = Symbol::Letter(1);
        if self.feasible(prefix, first) {
            return Some(first);
        }
        self.next_option(prefix, first)
    }

    fn next_option(&self, prefix: &[Symbol], cur: Symbol) -> Option<Symbol> {
        let opened = Self::opened(prefix);
        let mut cand = cur;
        loop {
            cand = match cand {
                Symbol::Letter(a) if a < self.k => Symbol::Letter(a + 1),
                Symbol::Letter(_) => {
                    if opened == 0 {
                        Symbol::Var(0)
                    } else {
                        Symbol::Var(opened - 1)
                    }
                }
                Symbol::Var(j) if j < opened && (j + 1) < self.m as u32 => Symbol::Var(j + 1),
                Symbol::Var(_) => return None,
            };
            if self.feasible(prefix, cand) {
                return Some(cand);
            }
        }
    }

    /// Whether `prefix ++ [s]` can still be completed.
    fn feasible(&self, prefix: &[Symbol], s: Symbol) -> bool {
        let opened = Self::opened(prefix);
        let after = match s {
            Symbol::Var(j) => {
                if j > opened || j + 1 < opened || j as usize >= self.m {
                    return false;
                }
                j + 1
            }
            Symbol::Letter(_) => opened,
        };
        let remaining = self.n - prefix.len() - 1;
        (self.m as u32 - after) as usize <= remaining
    }
}

impl Iterator for DimensionalWords {
    type Item = VarWord;

    fn next(&mut self) -> Option<VarWord> {
        if self.done {
            return None;
        }
        if self.started {
            // backtrack to the deepest position with a further option
            loop {
                let Some(cur) = self.stack.pop() else {
                    self.done = true;
                    return None;
                };
                if let Some(nx) = self.next_option(&self.stack.clone(), cur) {
                    self.stack.push(nx);
                    break;
                }
            }
        }
        self.started = true;
        while self.stack.len() < self.n {
            match self.first_option(&self.stack) {
                Some(s) => self.stack.push(s),
                None => {
                    self.done = true;
                    return None;
                }
            }
        }
        Some(VarWord::from_parts_unchecked(self.k, self.m, self.stack.clone()))
    }
}
