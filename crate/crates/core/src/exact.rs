//! Exact minimal lengths on tiny parameters by exhausting colorings.
//!
//! Every target is phrased the same way: a length-`n` instance has a
//! domain of at most 128 variable words and a list of candidates, each
//! candidate being a list of domain subsets ("groups"). A coloring admits a
//! witness iff some candidate has every group monochromatic. Two deciders
//! search the colorings independently; counterexamples are reported as the
//! least coloring in rank order, the first domain word being most
//! significant.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::coloring::{ColoringError, ColoringOracle, ColoringTable};
use crate::insensitivity::{self, InsensitivityError};
use crate::solver::{self, SolveError, SolveOutcome, Strategy};
use crate::unions::{self, BlockSequence, UnionsError, UnionsOutcome};
use crate::word::{self, Symbol};

/// Largest domain the bitmask deciders handle.
pub const MAX_DOMAIN: usize = 128;

/// Default limit on colorings (naive) or search nodes (backtracking) per length.
pub const DEFAULT_BUDGET: u64 = 1 << 32;

#[derive(Error, Debug)]
pub enum ExactError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("deciders disagree at n={n}: naive says {naive}, backtracking says {backtracking}")]
    Disagreement { n: usize, naive: String, backtracking: String },
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Unions(#[from] UnionsError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Insensitivity(#[from] InsensitivityError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// Monochromatic nonempty unions of `m` block sets.
    H { m: usize, r: u32 },
    /// `(a,b)`-insensitive `m`-dimensional words over `[k+1]`.
    Sh { k: u32, m: usize, r: u32, a: u32, b: u32 },
    /// Monochromatic `m`-dimensional words over `[k]`.
    Gr { k: u32, m: usize, r: u32 },
}

impl Target {
    pub fn colors(&self) -> u32 {
        match *self {
            Target::H { r, .. } | Target::Sh { r, .. } | Target::Gr { r, .. } => r,
        }
    }

    /// Alphabet of the colored words.
    pub fn alphabet(&self) -> u32 {
        match *self {
            Target::H { .. } => 1,
            Target::Sh { k, .. } => k + 1,
            Target::Gr { k, .. } => k,
        }
    }

    fn validate(&self) -> Result<(), ExactError> {
        let bad = |s: &str| Err(ExactError::InvalidParameters(s.into()));
        match *self {
            Target::H { m, r } if m == 0 || r == 0 => bad("m and r must be positive"),
            Target::Gr { k, m, r } if k == 0 || m == 0 || r == 0 => bad("k, m and r must be positive"),
            Target::Sh { k, m, r, .. } if k == 0 || m == 0 || r == 0 => bad("k, m and r must be positive"),
            Target::Sh { k, a, b, .. } if a == b || a == 0 || b == 0 || a > k + 1 || b > k + 1 => {
                bad("a and b must be distinct letters of [k+1]")
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Target::H { m, r } => write!(f, "h m={m} r={r}"),
            Target::Sh { k, m, r, a, b } => write!(f, "sh k={k} m={m} r={r} a={a} b={b}"),
            Target::Gr { k, m, r } => write!(f, "gr k={k} m={m} r={r}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decider {
    Naive,
    Backtracking,
    /// Run both and fail on any disagreement.
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NStatus {
    AllColoringsAdmitWitness,
    Counterexample(ColoringTable),
    BudgetExceeded,
}

impl NStatus {
    fn label(&self) -> &'static str {
        match self {
            NStatus::AllColoringsAdmitWitness => "all-colorings-admit-witness",
            NStatus::Counterexample(_) => "counterexample",
            NStatus::BudgetExceeded => "budget-exceeded",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Minimal {
    Exact(usize),
    /// The minimal length is at least this.
    LowerBoundOnly(usize),
}

#[derive(Clone, Debug)]
pub struct NRecord {
    pub n: usize,
    pub status: NStatus,
    /// Per-decider labels, in run order.
    pub deciders: Vec<(Decider, &'static str)>,
}

#[derive(Clone, Debug)]
pub struct ExactResult {
    pub target: Target,
    pub records: Vec<NRecord>,
    pub minimal: Minimal,
}

impl ExactResult {
    pub fn status(&self, n: usize) -> Option<&NStatus> {
        self.records.iter().find(|x| x.n == n).map(|x| &x.status)
    }

    pub fn report(&self) -> String {
        let mut out = format!("# exact search\ntarget {}\n", self.target);
        for rec in &self.records {
            out.push_str(&format!("n {} {}", rec.n, rec.status.label()));
            for (d, label) in &rec.deciders {
                let name = match d {
                    Decider::Naive => "naive",
                    Decider::Backtracking => "backtracking",
                    Decider::Both => "both",
                };
                out.push_str(&format!(" {name}={label}"));
            }
            out.push('\n');
        }
        match self.minimal {
            Minimal::Exact(n) => out.push_str(&format!("minimal {n}\n")),
            Minimal::LowerBoundOnly(n) => out.push_str(&format!("lower-bound {n}\n")),
        }
        out
    }
}

/// One length-`n` instance in group form.
#[derive(Clone, Debug)]
pub struct Instance {
    pub domain: Vec<Vec<Symbol>>,
    /// Groups of candidate `i` are `groups[offsets[i]..offsets[i + 1]]`.
    groups: Vec<u128>,
    offsets: Vec<usize>,
}

impl Instance {
    pub fn candidates(&self) -> usize {
        self.offsets.len() - 1
    }

    fn candidate(&self, i: usize) -> &[u128] {
        &self.groups[self.offsets[i]..self.offsets[i + 1]]
    }

    fn satisfied(&self, i: usize, masks: &[u128]) -> bool {
        self.candidate(i)
            .iter()
            .all(|&g| masks.iter().any(|&mk| g & !mk == 0))
    }

    fn any_satisfied(&self, masks: &[u128]) -> bool {
        (0..self.candidates()).any(|i| self.satisfied(i, masks))
    }
}

/// Builds the group form of `target` at length `n`.
pub fn instance(target: &Target, n: usize) -> Result<Instance, ExactError> {
    target.validate()?;
    if n == 0 {
        return Err(ExactError::InvalidParameters("n must be positive".into()));
    }
    let k = target.alphabet();
    let size = word::count_variable_words_u64(k as u64, n as u32);
    if size.is_none_or(|s| s > MAX_DOMAIN as u64) {
        return Err(ExactError::InvalidParameters(format!(
            "domain W^{k}_v({n}) exceeds {MAX_DOMAIN} words"
        )));
    }
    let domain: Vec<Vec<Symbol>> = word::variable_word_symbols(k, n).collect();
    let index: HashMap<&[Symbol], usize> = domain.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
    let bit = |w: &[Symbol]| 1u128 << index[w];

    let mut groups = Vec::new();
    let mut offsets = vec![0];
    match *target {
        Target::H { m, .. } => {
            for t in block_sequences(n, m) {
                let g = unions::nu(&t).iter().fold(0u128, |acc, s| {
                    let mask = s.indices().iter().fold(0u64, |a, &i| a | 1 << i);
                    acc | bit(&unions::mask_word(mask, n))
                });
                groups.push(g);
                offsets.push(groups.len());
            }
        }
        Target::Gr { m, .. } => {
            let args: Vec<Vec<Symbol>> = word::variable_word_symbols(k, m).collect();
            for w in word::dimensional_words(k, m, n) {
                groups.push(args.iter().fold(0u128, |acc, x| acc | bit(&w.apply(x))));
                offsets.push(groups.len());
            }
        }
        Target::Sh { m, a, b, .. } => {
            // classes of (a,b)-equivalent arguments, keyed by erasing a and b
            let mut classes: HashMap<Vec<Option<Symbol>>, Vec<Vec<Symbol>>> = HashMap::new();
            for x in word::variable_word_symbols(k, m) {
                let key = x
                    .iter()
                    .map(|&s| (s != Symbol::Letter(a) && s != Symbol::Letter(b)).then_some(s))
                    .collect();
                classes.entry(key).or_default().push(x);
            }
            let mut classes: Vec<Vec<Vec<Symbol>>> = classes.into_values().filter(|c| c.len() > 1).collect();
            classes.sort();
            for w in word::dimensional_words(k, m, n) {
                for class in &classes {
                    groups.push(class.iter().fold(0u128, |acc, x| acc | bit(&w.apply(x))));
                }
                offsets.push(groups.len());
            }
        }
    }
    Ok(Instance { domain, groups, offsets })
}

/// All block sequences of length `m` over `{0..n-1}`.
fn block_sequences(n: usize, m: usize) -> Vec<BlockSequence> {
    fn extend(n: usize, m: usize, from: usize, prefix: &mut Vec<Vec<usize>>, out: &mut Vec<BlockSequence>) {
        if prefix.len() == m {
            out.push(BlockSequence::new(prefix.clone()).expect("block by construction"));
            return;
        }
        for lo in from..n {
            for hi in lo..n {
                let inner = hi.saturating_sub(lo + 1);
                for bits in 0u64..1 << inner {
                    let mut set = vec![lo];
                    set.extend((0..inner).filter(|i| bits >> i & 1 == 1).map(|i| lo + 1 + i));
                    if hi > lo {
                        set.push(hi);
                    }
                    prefix.push(set);
                    extend(n, m, hi + 1, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    extend(n, m, 0, &mut Vec::new(), &mut out);
    out
}

/// Outcome of one decider at one length: `Ok(None)` when every coloring
/// admits a witness, `Ok(Some(colors))` for the least counterexample
/// (colors 0-based), `Err(OverBudget)` on budget exhaustion.
pub type Decision = Result<Option<Vec<u32>>, OverBudget>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OverBudget;

/// Enumerates all `r^D` colorings.
pub fn decide_naive(inst: &Instance, r: u32, budget: u64) -> Decision {
    let d = inst.domain.len();
    let total = (r as u128).checked_pow(d as u32);
    if total.is_none_or(|t| t > budget as u128) {
        return Err(OverBudget);
    }
    // split on the leading `t` positions
    let mut t = 0;
    while t < d && (r as u64).pow(t as u32) < 256 {
        t += 1;
    }
    let chunks = (r as u64).pow(t as u32);
    Ok((0..chunks)
        .into_par_iter()
        .map(|p| scan_chunk(inst, r, t, p))
        .find_first(|x| x.is_some())
        .flatten())
}

fn scan_chunk(inst: &Instance, r: u32, t: usize, prefix: u64) -> Option<Vec<u32>> {
    let d = inst.domain.len();
    let mut colors = vec![0u32; d];
    let mut p = prefix;
    for i in (0..t).rev() {
        colors[i] = (p % r as u64) as u32;
        p /= r as u64;
    }
    let mut masks = vec![0u128; r as usize];
    for (i, &c) in colors.iter().enumerate() {
        masks[c as usize] |= 1 << i;
    }
    loop {
        if !inst.any_satisfied(&masks) {
            return Some(colors);
        }
        let mut i = d;
        loop {
            if i == t {
                return None;
            }
            i -= 1;
            let b = 1u128 << i;
            masks[colors[i] as usize] &= !b;
            colors[i] += 1;
            if colors[i] < r {
                masks[colors[i] as usize] |= b;
                break;
            }
            colors[i] = 0;
            masks[0] |= b;
        }
    }
}

/// Assigns colors in domain order, smallest first, abandoning a partial
/// coloring once some candidate is complete and satisfied.
pub fn decide_backtracking(inst: &Instance, r: u32, budget: u64) -> Decision {
    let d = inst.domain.len();
    let mut completes: Vec<Vec<usize>> = vec![Vec::new(); d];
    for i in 0..inst.candidates() {
        let union = inst.candidate(i).iter().fold(0u128, |a, &g| a | g);
        let last = if union == 0 { 0 } else { 127 - union.leading_zeros() as usize };
        completes[last].push(i);
    }
    let mut colors = vec![0u32; d];
    let mut masks = vec![0u128; r as usize];
    let mut nodes: u64 = 0;
    let mut i = 0;
    loop {
        nodes += 1;
        if nodes > budget {
            return Err(OverBudget);
        }
        masks[colors[i] as usize] |= 1 << i;
        let pruned = completes[i].iter().any(|&c| inst.satisfied(c, &masks));
        if !pruned {
            if i + 1 == d {
                return Ok(Some(colors));
            }
            i += 1;
            colors[i] = 0;
            continue;
        }
        loop {
            masks[colors[i] as usize] &= !(1u128 << i);
            colors[i] += 1;
            if colors[i] < r {
                break;
            }
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
        }
    }
}

fn to_status(target: &Target, n: usize, d: &Decision) -> NStatus {
    match d {
        Err(OverBudget) => NStatus::BudgetExceeded,
        Ok(None) => NStatus::AllColoringsAdmitWitness,
        Ok(Some(colors)) => NStatus::Counterexample(ColoringTable {
            k: target.alphabet(),
            n,
            r: target.colors(),
            colors: colors.iter().map(|c| c + 1).collect(),
        }),
    }
}

/// Decides lengths `1..=n_max` in order, stopping at the first length at
/// which every coloring admits a witness (the property is inherited by
/// longer lengths) or at the first exhausted budget.
pub fn exact_minimal(
    target: &Target,
    n_max: usize,
    budget: u64,
    decider: Decider,
) -> Result<ExactResult, ExactError> {
    target.validate()?;
    let r = target.colors();
    let mut records = Vec::new();
    let mut minimal = None;
    for n in 1..=n_max {
        let inst = match instance(target, n) {
            Ok(inst) => inst,
            Err(ExactError::InvalidParameters(_)) if n > 1 => {
                records.push(NRecord { n, status: NStatus::BudgetExceeded, deciders: Vec::new() });
                break;
            }
            Err(e) => return Err(e),
        };
        let mut deciders = Vec::new();
        let status = match decider {
            Decider::Naive | Decider::Backtracking => {
                let d = if decider == Decider::Naive {
                    decide_naive(&inst, r, budget)
                } else {
                    decide_backtracking(&inst, r, budget)
                };
                let s = to_status(target, n, &d);
                deciders.push((decider, s.label()));
                s
            }
            Decider::Both => {
                let a = to_status(target, n, &decide_naive(&inst, r, budget));
                let b = to_status(target, n, &decide_backtracking(&inst, r, budget));
                deciders.push((Decider::Naive, a.label()));
                deciders.push((Decider::Backtracking, b.label()));
                match (&a, &b) {
                    (NStatus::BudgetExceeded, _) => b,
                    (_, NStatus::BudgetExceeded) => a,
                    _ if a == b => a,
                    _ => {
                        return Err(ExactError::Disagreement {
                            n,
                            naive: a.label().into(),
                            backtracking: b.label().into(),
                        })
                    }
                }
            }
        };
        let stop = !matches!(status, NStatus::Counterexample(_));
        if status == NStatus::AllColoringsAdmitWitness {
            minimal = Some(n);
        }
        records.push(NRecord { n, status, deciders });
        if stop {
            break;
        }
    }
    let minimal = match minimal {
        Some(n) => Minimal::Exact(n),
        None => {
            let last_cex = records
                .iter()
                .filter(|x| matches!(x.status, NStatus::Counterexample(_)))
                .map(|x| x.n)
                .max()
                .unwrap_or(0);
            Minimal::LowerBoundOnly(last_cex + 1)
        }
    };
    Ok(ExactResult { target: *target, records, minimal })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CexVerdict {
    Pass,
    /// The table is not a counterexample; a witness is shown.
    Fail(String),
}

/// Checks that `table` admits no witness for `target`, using the witness
/// searches of the other modules rather than the group form.
pub fn verify_counterexample(target: &Target, table: &ColoringTable, budget: u64) -> Result<CexVerdict, ExactError> {
    target.validate()?;
    if table.k != target.alphabet() || table.r != target.colors() {
        return Err(ColoringError::ShapeMismatch(format!(
            "table over [{}] with {} colors, target needs [{}] with {}",
            table.k,
            table.r,
            target.alphabet(),
            target.colors()
        ))
        .into());
    }
    let c = Arc::new(ColoringOracle::from_table(table)?);
    Ok(match *target {
        Target::H { m, .. } => match unions::solve_unions(&c, m, budget)? {
            UnionsOutcome::Found(t, col) => CexVerdict::Fail(format!("{t} has color {col}")),
            UnionsOutcome::Exhausted => CexVerdict::Pass,
        },
        Target::Gr { k, m, r } => {
            match solver::solve_gr(k, m, r, table.n, &c, &Strategy::DirectSearch { budget })? {
                SolveOutcome::Found(claim, _) => {
                    CexVerdict::Fail(format!("{} has color {}", claim.witness, claim.color))
                }
                _ => CexVerdict::Pass,
            }
        }
        Target::Sh { k, m, a, b, .. } => match insensitivity::search_insensitive(&c, k, m, a, b)? {
            Some(w) => CexVerdict::Fail(format!("{w} is insensitive")),
            None => CexVerdict::Pass,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both(target: Target, n_max: usize) -> ExactResult {
        exact_minimal(&target, n_max, 1 << 24, Decider::Both).unwrap()
    }

    #[test]
    fn block_sequence_counts() {
        assert_eq!(block_sequences(5, 2).len(), 49);
        assert_eq!(block_sequences(3, 1).len(), 7);
        assert_eq!(block_sequences(2, 3).len(), 0);
    }

    #[test]
    fn h_m1() {
        let res = both(Target::H { m: 1, r: 2 }, 3);
        assert_eq!(res.minimal, Minimal::Exact(1));
    }

    #[test]
    fn h22_small_lengths() {
        let res = both(Target::H { m: 2, r: 2 }, 4);
        assert_eq!(res.minimal, Minimal::LowerBoundOnly(5));
        for n in 1..=4 {
            let NStatus::Counterexample(t) = res.status(n).unwrap() else { panic!("n={n}") };
            assert_eq!(verify_counterexample(&res.target, t, 1 << 20).unwrap(), CexVerdict::Pass);
        }
    }

    #[test]
    fn h22_n2_counterexample_is_least() {
        // W^1_v(2) order: (1,v)={1}, (v,1)={0}, (v,v)={0,1}
        let res = both(Target::H { m: 2, r: 2 }, 2);
        let NStatus::Counterexample(t) = res.status(2).unwrap() else { panic!() };
        assert_eq!(t.colors, vec![1, 1, 2]);
    }

    #[test]
    fn gr_k1_matches_h() {
        let h = both(Target::H { m: 2, r: 2 }, 4);
        let g = both(Target::Gr { k: 1, m: 2, r: 2 }, 4);
        for n in 1..=4 {
            assert_eq!(h.status(n), g.status(n));
        }
    }

    #[test]
    fn sh_small() {
        let res = both(Target::Sh { k: 1, m: 1, r: 2, a: 1, b: 2 }, 3);
        assert_eq!(res.minimal, Minimal::Exact(1));
        let res = both(Target::Sh { k: 1, m: 2, r: 2, a: 1, b: 2 }, 3);
        for rec in &res.records {
            if let NStatus::Counterexample(t) = &rec.status {
                assert_eq!(verify_counterexample(&res.target, t, 1 << 20).unwrap(), CexVerdict::Pass);
            }
        }
    }

    #[test]
    fn constant_table_is_not_a_counterexample() {
        let t = ColoringTable { k: 1, n: 2, r: 2, colors: vec![1; 3] };
        assert!(matches!(
            verify_counterexample(&Target::H { m: 2, r: 2 }, &t, 100).unwrap(),
            CexVerdict::Fail(_)
        ));
        let t = ColoringTable { k: 1, n: 2, r: 2, colors: vec![1, 1, 2] };
        assert_eq!(verify_counterexample(&Target::H { m: 2, r: 2 }, &t, 100).unwrap(), CexVerdict::Pass);
    }

    #[test]
    fn budget_is_reported() {
        let res = exact_minimal(&Target::H { m: 2, r: 2 }, 5, 16, Decider::Naive).unwrap();
        assert_eq!(res.records.last().unwrap().status, NStatus::BudgetExceeded);
        assert!(matches!(res.minimal, Minimal::LowerBoundOnly(_)));
    }

    #[test]
    fn one_color_is_trivial() {
        let res = both(Target::Gr { k: 2, m: 2, r: 1 }, 3);
        assert_eq!(res.minimal, Minimal::Exact(2));
    }
}
