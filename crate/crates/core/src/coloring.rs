//! Coloring oracles over `W^k_v(n)`.
//!
//! An oracle is total on the 1-dimensional variable words of one shape and
//! deterministic. Evaluations are cached by word and counted, so the number
//! of distinct words a construction looked at is observable.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::word::{self, format_symbols, parse_tokens, rank, rank_wrapping, Symbol, VarWord, WordError};

/// Largest `(k+1)^n` a table may cover.
pub const MAX_TABLE_WORDS: u64 = 1 << 24;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ColoringError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("word `{0}` has no color")]
    IncompleteCover(String),
    #[error("line {0}: color out of range")]
    ColorOutOfRange(usize),
    #[error("line {0}: word listed twice")]
    DuplicateWord(usize),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// One SplitMix64 output step applied to `z`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Color of the word with (wrapped) rank `rank` under seed `seed`: the
/// `rank`-th output of the SplitMix64 stream started at `seed`, reduced
/// into `1..=r`.
pub fn seeded_color(seed: u64, rank: u64, r: u32) -> u32 {
    let z = seed.wrapping_add(rank.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    (splitmix64(z) % r as u64) as u32 + 1
}

/// A complete coloring table, colors listed in enumeration order of
/// `W^k_v(n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoringTable {
    pub k: u32,
    pub n: usize,
    pub r: u32,
    pub colors: Vec<u32>,
}

impl ColoringTable {
    /// Parses the table format: a `k n r` header, then `<word> -> <color>`
    /// lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ColoringError> {
        let mut header: Option<(u32, usize, u32)> = None;
        let mut by_rank: HashMap<u64, (u32, usize)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |reason: &str| ColoringError::ParseError {
                line: lineno,
                reason: reason.to_string(),
            };
            let Some((k, n, r)) = header else {
                let nums: Result<Vec<u64>, _> = line.split_whitespace().map(str::parse).collect();
                match nums.as_deref() {
                    Ok([k, n, r]) if *k >= 1 && *n >= 1 && *r >= 1 => {
                        let (k, n, r) = (*k as u32, *n as usize, *r as u32);
                        if (k as u64 + 1).checked_pow(n as u32).is_none_or(|t| t > MAX_TABLE_WORDS) {
                            return Err(perr("table shape too large"));
                        }
                        header = Some((k, n, r));
                    }
                    _ => return Err(perr("expected header `k n r` with positive entries")),
                }
                continue;
            };
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| perr("expected `<word> -> <color>`"))?;
            let symbols = parse_tokens(lhs).map_err(|e| perr(&e.to_string()))?;
            let w = VarWord::new(k, 1, symbols).map_err(|e| perr(&e.to_string()))?;
            if w.len() != n {
                return Err(perr("word has the wrong length"));
            }
            let color: u32 = rhs.trim().parse().map_err(|_| perr("bad color"))?;
            if color == 0 || color > r {
                return Err(ColoringError::ColorOutOfRange(lineno));
            }
            let rk = rank(w.symbols(), k)?;
            if by_rank.insert(rk, (color, lineno)).is_some() {
                return Err(ColoringError::DuplicateWord(lineno));
            }
        }
        let (k, n, r) = header.ok_or(ColoringError::ParseError {
            line: 0,
            reason: "missing header".into(),
        })?;
        let mut colors = Vec::with_capacity(by_rank.len());
        for w in word::variable_word_symbols(k, n) {
            let rk = rank(&w, k)?;
            match by_rank.get(&rk) {
                Some((c, _)) => colors.push(*c),
                None => return Err(ColoringError::IncompleteCover(format_symbols(&w))),
            }
        }
        Ok(ColoringTable { k, n, r, colors })
    }

    pub fn load(path: &Path) -> Result<Self, ColoringError> {
        let text = std::fs::read_to_string(path).map_err(|e| ColoringError::Io(e.to_string()))?;
        ColoringTable::parse(&text)
    }

    /// Renders the table in the file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.k, self.n, self.r);
        for (w, c) in word::variable_word_symbols(self.k, self.n).zip(&self.colors) {
            let _ = writeln!(out, "{} -> {c}", format_symbols(&w));
        }
        out
    }
}

#[derive(Debug)]
enum Source {
    /// Colors indexed by the rank of the full word; 0 marks constant words.
    Table(Vec<u32>),
    Seeded(u64),
    Pullback { base: Arc<ColoringOracle>, word: VarWord },
}

/// A deterministic coloring of `W^k_v(n)` with `r` colors.
#[derive(Debug)]
pub struct ColoringOracle {
    k: u32,
    n: usize,
    r: u32,
    source: Source,
    cache: Option<Mutex<HashMap<Vec<Symbol>, u32>>>,
    queries: AtomicU64,
}

impl ColoringOracle {
    fn with_source(k: u32, n: usize, r: u32, source: Source) -> Self {
        ColoringOracle {
            k,
            n,
            r,
            source,
            cache: Some(Mutex::new(HashMap::new())),
            queries: AtomicU64::new(0),
        }
    }

    /// SplitMix64-based coloring keyed by word rank.
    pub fn seeded(seed: u64, k: u32, n: usize, r: u32) -> Result<Self, ColoringError> {
        check_shape(k, n, r)?;
        Ok(ColoringOracle::with_source(k, n, r, Source::Seeded(seed)))
    }

    pub fn from_table(table: &ColoringTable) -> Result<Self, ColoringError> {
        check_shape(table.k, table.n, table.r)?;
        let total = (table.k as u64 + 1)
            .checked_pow(table.n as u32)
            .filter(|t| *t <= MAX_TABLE_WORDS)
            .ok_or_else(|| ColoringError::ShapeMismatch("table shape too large".into()))?;
        let mut dense = vec![0u32; total as usize];
        let mut colors = table.colors.iter();
        for w in word::variable_word_symbols(table.k, table.n) {
            let c = *colors
                .next()
                .ok_or_else(|| ColoringError::IncompleteCover(format_symbols(&w)))?;
            if c == 0 || c > table.r {
                return Err(ColoringError::ColorOutOfRange(0));
            }
            dense[rank(&w, table.k)? as usize] = c;
        }
        if colors.next().is_some() {
            return Err(ColoringError::ShapeMismatch("too many colors in table".into()));
        }
        Ok(ColoringOracle::with_source(
            table.k,
            table.n,
            table.r,
            Source::Table(dense),
        ))
    }

    pub fn load_table(path: &Path) -> Result<Self, ColoringError> {
        ColoringOracle::from_table(&ColoringTable::load(path)?)
    }

    /// The coloring `x ↦ base(w(x))` on `W^k_v(M)`, `M = w.dimension()`.
    pub fn pullback(base: Arc<ColoringOracle>, w: VarWord, k: u32) -> Result<Self, ColoringError> {
        if w.alphabet() != base.k || w.len() != base.n {
            return Err(ColoringError::ShapeMismatch(format!(
                "word over {} of length {} does not match oracle over {} of length {}",
                w.alphabet(),
                w.len(),
                base.k,
                base.n
            )));
        }
        if k == 0 || k > base.k {
            return Err(ColoringError::ShapeMismatch(format!(
                "sub-alphabet {k} not within 1..={}",
                base.k
            )));
        }
        let (n, r) = (w.dimension(), base.r);
        Ok(ColoringOracle::with_source(
            k,
            n,
            r,
            Source::Pullback { base, word: w },
        ))
    }

    /// Disables caching; every call then counts as an evaluation.
    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn alphabet(&self) -> u32 {
        self.k
    }

    pub fn length(&self) -> usize {
        self.n
    }

    pub fn colors(&self) -> u32 {
        self.r
    }

    /// Underlying evaluations so far (cache hits excluded).
    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn color_of(&self, u: &VarWord) -> Result<u32, ColoringError> {
        if u.dimension() != 1 {
            return Err(ColoringError::ShapeMismatch(format!(
                "expected a 1-dimensional word, got dimension {}",
                u.dimension()
            )));
        }
        self.color_symbols(u.symbols())
    }

    /// Color of a raw symbol sequence, validated as a variable word of this
    /// oracle's shape.
    pub fn color_symbols(&self, s: &[Symbol]) -> Result<u32, ColoringError> {
        if s.len() != self.n {
            return Err(ColoringError::ShapeMismatch(format!(
                "expected length {}, got {}",
                self.n,
                s.len()
            )));
        }
        let mut has_var = false;
        for sym in s {
            match *sym {
                Symbol::Letter(a) if a >= 1 && a <= self.k => {}
                Symbol::Var(0) => has_var = true,
                other => {
                    return Err(ColoringError::ShapeMismatch(format!(
                        "symbol {other} is not in [{}] ∪ {{v}}",
                        self.k
                    )))
                }
            }
        }
        if !has_var {
            return Err(ColoringError::ShapeMismatch(
                "constant words are not colored".into(),
            ));
        }
        match &self.cache {
            Some(cache) => {
                if let Some(c) = cache.lock().expect("cache poisoned").get(s) {
                    return Ok(*c);
                }
                let c = self.evaluate(s)?;
                let mut guard = cache.lock().expect("cache poisoned");
                // another worker may have raced us; count each word once
                if guard.insert(s.to_vec(), c).is_none() {
                    self.queries.fetch_add(1, Ordering::Relaxed);
                }
                Ok(c)
            }
            None => {
                self.queries.fetch_add(1, Ordering::Relaxed);
                self.evaluate(s)
            }
        }
    }

    fn evaluate(&self, s: &[Symbol]) -> Result<u32, ColoringError> {
        match &self.source {
            Source::Table(dense) => Ok(dense[rank(s, self.k)? as usize]),
            Source::Seeded(seed) => Ok(seeded_color(*seed, rank_wrapping(s, self.k)?, self.r)),
            Source::Pullback { base, word } => base.color_symbols(&word.apply(s)),
        }
    }

    /// The full table of this coloring.
    pub fn to_table(&self) -> Result<ColoringTable, ColoringError> {
        let total = (self.k as u64 + 1).checked_pow(self.n as u32);
        if total.is_none_or(|t| t > MAX_TABLE_WORDS) {
            return Err(ColoringError::ShapeMismatch("shape too large to tabulate".into()));
        }
        let colors = word::variable_word_symbols(self.k, self.n)
            .map(|w| self.color_symbols(&w))
            .collect::<Result<_, _>>()?;
        Ok(ColoringTable {
            k: self.k,
            n: self.n,
            r: self.r,
            colors,
        })
    }
}

fn check_shape(k: u32, n: usize, r: u32) -> Result<(), ColoringError> {
    if k == 0 || n == 0 || r == 0 {
        return Err(ColoringError::ShapeMismatch(
            "k, n and r must be positive".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::enumerate_variable_words;
    use Symbol::{Letter as L, Var as V};

    #[test]
    fn splitmix_reference_vector() {
        // first outputs of SplitMix64 seeded with 0
        assert_eq!(splitmix64(GOLDEN_GAMMA), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(GOLDEN_GAMMA.wrapping_mul(2)), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(seeded_color(0, 0, 2), 2);
    }

    #[test]
    fn seeded_examples() {
        let c = ColoringOracle::seeded(99, 2, 3, 1).unwrap();
        for w in enumerate_variable_words(2, 3).unwrap() {
            assert_eq!(c.color_of(&w).unwrap(), 1);
        }
        let c = ColoringOracle::seeded(0, 1, 2, 2).unwrap();
        // rank 0 word (1,1) is constant; the first variable word has rank 1
        assert_eq!(c.color_symbols(&[L(1), V(0)]).unwrap(), seeded_color(0, 1, 2));
    }

    #[test]
    fn table_examples() {
        let c = ColoringOracle::from_table(&ColoringTable::parse("1 1 2\nv -> 1\n").unwrap()).unwrap();
        assert_eq!(c.color_symbols(&[V(0)]).unwrap(), 1);
        let t = ColoringTable::parse("# c\n1 2 2\nv 1 -> 2\n1 v -> 1\nv v -> 1\n").unwrap();
        let c = ColoringOracle::from_table(&t).unwrap();
        assert_eq!(c.color_symbols(&[V(0), L(1)]).unwrap(), 2);
        assert_eq!(ColoringTable::parse(&t.to_text()).unwrap(), t);

        assert!(matches!(
            ColoringTable::parse("1 2 2\nv 1 -> 2\n1 v -> 1\n"),
            Err(ColoringError::IncompleteCover(w)) if w == "v v"
        ));
        assert_eq!(
            ColoringTable::parse("1 1 2\nv -> 3\n"),
            Err(ColoringError::ColorOutOfRange(2))
        );
        assert_eq!(
            ColoringTable::parse("1 1 2\nv -> 1\nv -> 2\n"),
            Err(ColoringError::DuplicateWord(3))
        );
        assert!(matches!(
            ColoringTable::parse("1 1 2\nv => 1\n"),
            Err(ColoringError::ParseError { line: 2, .. })
        ));
    }

    #[test]
    fn shape_errors() {
        let c = ColoringOracle::seeded(1, 2, 2, 2).unwrap();
        assert!(c.color_symbols(&[L(1), L(2)]).is_err());
        assert!(c.color_symbols(&[V(0)]).is_err());
        assert!(c.color_symbols(&[L(3), V(0)]).is_err());
        let w = VarWord::parse(2, "v0 1 v1").unwrap();
        assert!(c.color_of(&w).is_err());
    }

    #[test]
    fn cache_counts_distinct_words() {
        let c = ColoringOracle::seeded(5, 1, 3, 2).unwrap();
        let w = [V(0), L(1), V(0)];
        c.color_symbols(&w).unwrap();
        c.color_symbols(&w).unwrap();
        assert_eq!(c.queries(), 1);
        let c = ColoringOracle::seeded(5, 1, 3, 2).unwrap().without_cache();
        c.color_symbols(&w).unwrap();
        c.color_symbols(&w).unwrap();
        assert_eq!(c.queries(), 2);
    }

    #[test]
    fn pullback_law_small() {
        let base = Arc::new(ColoringOracle::seeded(11, 2, 4, 3).unwrap());
        let w = VarWord::parse(2, "v0 2 v1 v2").unwrap();
        let c = ColoringOracle::pullback(base.clone(), w.clone(), 1).unwrap();
        assert_eq!((c.alphabet(), c.length()), (1, 3));
        let domain = enumerate_variable_words(1, 3).unwrap();
        assert_eq!(domain.len(), 7);
        for x in domain {
            let direct = base.color_symbols(&w.apply(x.symbols())).unwrap();
            assert_eq!(c.color_of(&x).unwrap(), direct);
        }
        let id = VarWord::identity(2, 4).unwrap();
        let same = ColoringOracle::pullback(base.clone(), id, 2).unwrap();
        for x in enumerate_variable_words(2, 4).unwrap() {
            assert_eq!(same.color_of(&x).unwrap(), base.color_of(&x).unwrap());
        }
        assert!(ColoringOracle::pullback(base, w, 3).is_err());
    }
}
