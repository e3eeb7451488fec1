//! Block sequences of finite sets, their nonempty unions, and a depth-first
//! solver for monochromatic union families.
//!
//! A nonempty set `S ⊆ {0..n-1}` corresponds to the variable word over the
//! one-letter alphabet that carries `v` exactly on `S`; a block sequence of
//! length `m` corresponds to an `m`-dimensional variable word over `[1]`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::coloring::{ColoringError, ColoringOracle};
use crate::word::{Symbol, SupportSet, VarWord, WordError};

/// Largest ground set the bitmask solver accepts.
pub const MAX_GROUND: usize = 64;

/// Default limit on search nodes.
pub const DEFAULT_NODE_BUDGET: u64 = 1 << 28;

#[derive(Error, Debug)]
pub enum UnionsError {
    #[error("a block sequence needs at least one set")]
    Empty,
    #[error("set {0} is empty")]
    EmptySet(usize),
    #[error("set {0} is not in block order with its successor")]
    NotBlock(usize),
    #[error("element {element} lies outside the ground set of size {n}")]
    GroundSetOverflow { element: usize, n: usize },
    #[error("search exceeded the budget of {0} nodes")]
    BudgetExceeded(u64),
    #[error("word is not over the one-letter alphabet")]
    NotUnary,
    #[error("dimension m must be at least 1")]
    ZeroDimension,
    #[error(transparent)]
    Coloring(#[from] ColoringError),
}

impl From<WordError> for UnionsError {
    fn from(e: WordError) -> Self {
        UnionsError::Coloring(ColoringError::Word(e))
    }
}

/// Sets `s_0, ..., s_{m-1}` with `max s_i < min s_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockSequence(Vec<SupportSet>);

impl BlockSequence {
    pub fn new(sets: Vec<Vec<usize>>) -> Result<Self, UnionsError> {
        if sets.is_empty() {
            return Err(UnionsError::Empty);
        }
        let mut out = Vec::with_capacity(sets.len());
        for (i, s) in sets.into_iter().enumerate() {
            out.push(SupportSet::new(s).ok_or(UnionsError::EmptySet(i))?);
        }
        for (i, pair) in out.windows(2).enumerate() {
            if pair[0].last() >= pair[1].first() {
                return Err(UnionsError::NotBlock(i));
            }
        }
        Ok(BlockSequence(out))
    }

    fn from_masks(masks: &[u64]) -> Self {
        BlockSequence(masks.iter().map(|&m| mask_to_set(m)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sets(&self) -> &[SupportSet] {
        &self.0
    }

    /// One past the largest element.
    pub fn span(&self) -> usize {
        self.0.last().map_or(0, |s| s.last() + 1)
    }
}

impl fmt::Display for BlockSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// All `2^m - 1` nonempty unions, ordered by the binary index of the
/// subfamily (`t = {0}` first).
pub fn nu(s: &BlockSequence) -> Vec<SupportSet> {
    let m = s.len();
    (1u64..1 << m)
        .map(|t| {
            let idx = (0..m)
                .filter(|i| t >> i & 1 == 1)
                .flat_map(|i| s.0[i].indices().iter().copied())
                .collect();
            SupportSet::new(idx).expect("nonempty union")
        })
        .collect()
}

pub fn blockseq_to_varword(s: &BlockSequence, n: usize) -> Result<VarWord, UnionsError> {
    if s.span() > n {
        return Err(UnionsError::GroundSetOverflow {
            element: s.span() - 1,
            n,
        });
    }
    let mut symbols = vec![Symbol::Letter(1); n];
    for (j, set) in s.0.iter().enumerate() {
        for &i in set.indices() {
            symbols[i] = Symbol::Var(j as u32);
        }
    }
    Ok(VarWord::new(1, s.len(), symbols)?)
}

pub fn varword_to_blockseq(w: &VarWord) -> Result<BlockSequence, UnionsError> {
    if w.alphabet() != 1 {
        return Err(UnionsError::NotUnary);
    }
    let sets = (0..w.dimension())
        .map(|j| w.support(j).map(|s| s.indices().to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    BlockSequence::new(sets)
}

fn mask_to_set(mask: u64) -> SupportSet {
    SupportSet::new((0..64).filter(|i| mask >> i & 1 == 1).collect()).expect("nonempty mask")
}

/// The word over `[1]` of length `n` carrying `v` exactly on `mask`.
pub(crate) fn mask_word(mask: u64, n: usize) -> Vec<Symbol> {
    (0..n)
        .map(|i| {
            if mask >> i & 1 == 1 {
                Symbol::Var(0)
            } else {
                Symbol::Letter(1)
            }
        })
        .collect()
}

/// Nonempty subsets of `{0..n-1}` as masks, ordered by maximum element and
/// then lexicographically on sorted element lists.
pub fn candidate_sets(n: usize) -> Vec<u64> {
    let mut out = Vec::new();
    for top in 0..n {
        let mut group: Vec<u64> = (0u64..1 << top).map(|low| low | 1 << top).collect();
        group.sort_by_cached_key(|&m| mask_to_set(m).indices().to_vec());
        out.extend(group);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnionsOutcome {
    Found(BlockSequence, u32),
    Exhausted,
}

/// Searches for `t` of length `m` with `NU(t)` monochromatic under `c`,
/// a coloring of variable words over `[1]`.
pub fn solve_unions(
    c: &ColoringOracle,
    m: usize,
    budget: u64,
) -> Result<UnionsOutcome, UnionsError> {
    if c.alphabet() != 1 {
        return Err(ColoringError::ShapeMismatch(format!(
            "unions need an oracle over [1], got [{}]",
            c.alphabet()
        ))
        .into());
    }
    if m == 0 {
        return Err(UnionsError::ZeroDimension);
    }
    let n = c.length();
    if n > MAX_GROUND {
        return Err(UnionsError::GroundSetOverflow { element: n - 1, n: MAX_GROUND });
    }
    if m > n {
        return Ok(UnionsOutcome::Exhausted);
    }
    let mut search = Search {
        c,
        n,
        m,
        budget,
        nodes: 0,
        cache: HashMap::new(),
        candidates: candidate_sets(n),
        chosen: Vec::with_capacity(m),
        unions: Vec::with_capacity(1 << m.min(20)),
    };
    match search.descend(None)? {
        Some(color) => Ok(UnionsOutcome::Found(
            BlockSequence::from_masks(&search.chosen),
            color,
        )),
        None => Ok(UnionsOutcome::Exhausted),
    }
}

struct Search<'a> {
    c: &'a ColoringOracle,
    n: usize,
    m: usize,
    budget: u64,
    nodes: u64,
    cache: HashMap<u64, u32>,
    candidates: Vec<u64>,
    chosen: Vec<u64>,
    /// Unions of the chosen prefix, for extending with the next set.
    unions: Vec<u64>,
}

impl Search<'_> {
    fn color(&mut self, mask: u64) -> Result<u32, UnionsError> {
        if let Some(&col) = self.cache.get(&mask) {
            return Ok(col);
        }
        let col = self.c.color_symbols(&mask_word(mask, self.n))?;
        self.cache.insert(mask, col);
        Ok(col)
    }

    fn descend(&mut self, color: Option<u32>) -> Result<Option<u32>, UnionsError> {
        if self.chosen.len() == self.m {
            return Ok(color);
        }
        let floor = self.chosen.last().map_or(0, |&s| 64 - s.leading_zeros() as usize);
        let still_needed = self.m - self.chosen.len() - 1;
        for idx in 0..self.candidates.len() {
            let s = self.candidates[idx];
            let (lo, hi) = (s.trailing_zeros() as usize, 63 - s.leading_zeros() as usize);
            if lo < floor {
                continue;
            }
            if self.n - 1 - hi < still_needed {
                break;
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(UnionsError::BudgetExceeded(self.budget));
            }
            // new unions: s alone and s joined with every earlier union
            let base = self.unions.len();
            let mut col = color;
            let mut ok = true;
            for i in 0..=base {
                let u = if i == 0 { 0 } else { self.unions[i - 1] };
                let cu = self.color(u | s)?;
                match col {
                    None => col = Some(cu),
                    Some(x) if x != cu => {
                        ok = false;
                        break;
                    }
                    _ => {}
                }
            }
            if !ok {
                continue;
            }
            let added: Vec<u64> = std::iter::once(s)
                .chain((0..base).map(|i| self.unions[i] | s))
                .collect();
            self.unions.extend(added);
            self.chosen.push(s);
            if let Some(found) = self.descend(col)? {
                return Ok(Some(found));
            }
            self.chosen.pop();
            self.unions.truncate(base);
        }
        Ok(None)
    }
}
