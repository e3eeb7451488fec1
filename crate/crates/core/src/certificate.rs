//! Two-line witness certificates.
//!
//! ```text
//! insensitive k m n r a b mode
//! <witness tokens>
//! ```
//! or
//! ```text
//! monochromatic k m n r color
//! <witness tokens>
//! ```
//! Blank lines and `#` comments are ignored.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::bounds::Mode;
use crate::coloring::ColoringOracle;
use crate::insensitivity::{self, InsensitivityClaim, InsensitivityError};
use crate::solver::{self, MonoVerdict, MonochromaticClaim, SolveError};
use crate::word::{VarWord, WordError};

#[derive(Error, Debug)]
pub enum CertificateError {
    #[error("certificate line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("witness has dimension {dim} and length {len}, header says {m} and {n}")]
    WitnessShape { dim: usize, len: usize, m: usize, n: usize },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Insensitivity(#[from] InsensitivityError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("cannot read certificate: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    Insensitive { claim: InsensitivityClaim, mode: Mode },
    Monochromatic(MonochromaticClaim),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertVerdict {
    Pass,
    Fail(String),
}

impl Certificate {
    /// `(alphabet, length, colors)` a coloring must have to check this.
    pub fn shape(&self) -> (u32, usize, u32) {
        match self {
            Certificate::Insensitive { claim, .. } => (claim.k + 1, claim.n, claim.r),
            Certificate::Monochromatic(c) => (c.k, c.n, c.r),
        }
    }

    pub fn witness(&self) -> &VarWord {
        match self {
            Certificate::Insensitive { claim, .. } => &claim.witness,
            Certificate::Monochromatic(c) => &c.witness,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CertificateError> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn verify(&self, c: &ColoringOracle) -> Result<CertVerdict, CertificateError> {
        Ok(match self {
            Certificate::Insensitive { claim, .. } => match insensitivity::verify_insensitive(c, claim)? {
                insensitivity::Verdict::Pass => CertVerdict::Pass,
                fail => CertVerdict::Fail(fail.to_string()),
            },
            Certificate::Monochromatic(claim) => match solver::verify_monochromatic(c, &claim.witness)? {
                MonoVerdict::Color(col) if col == claim.color => CertVerdict::Pass,
                MonoVerdict::Color(col) => {
                    CertVerdict::Fail(format!("common color is {col}, certificate says {}", claim.color))
                }
                fail => CertVerdict::Fail(fail.to_string()),
            },
        })
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Insensitive { claim: c, mode } => writeln!(
                f,
                "insensitive {} {} {} {} {} {} {mode}\n{}",
                c.k, c.m, c.n, c.r, c.a, c.b, c.witness
            ),
            Certificate::Monochromatic(c) => writeln!(
                f,
                "monochromatic {} {} {} {} {}\n{}",
                c.k, c.m, c.n, c.r, c.color, c.witness
            ),
        }
    }
}

impl FromStr for Certificate {
    type Err = CertificateError;

    fn from_str(text: &str) -> Result<Self, CertificateError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or(CertificateError::Parse {
            line: 1,
            reason: "empty certificate".into(),
        })?;
        let (wl, witness) = lines.next().ok_or(CertificateError::Parse {
            line: hl + 1,
            reason: "missing witness line".into(),
        })?;
        if let Some((line, _)) = lines.next() {
            return Err(CertificateError::Parse { line, reason: "trailing content".into() });
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad = |reason: &str| CertificateError::Parse { line: hl, reason: reason.into() };
        let num = |i: usize| -> Result<u64, CertificateError> {
            fields
                .get(i)
                .ok_or_else(|| bad("too few header fields"))?
                .parse()
                .map_err(|_| bad(&format!("field {} is not a number", i + 1)))
        };
        let word_err = |e: WordError| CertificateError::Parse { line: wl, reason: e.to_string() };
        let check = |w: &VarWord, m: usize, n: usize| {
            if w.dimension() != m || w.len() != n {
                Err(CertificateError::WitnessShape { dim: w.dimension(), len: w.len(), m, n })
            } else {
                Ok(())
            }
        };
        match fields.first().copied() {
            Some("insensitive") => {
                if fields.len() != 8 {
                    return Err(bad("expected `insensitive k m n r a b mode`"));
                }
                let (k, m, n, r, a, b) = (num(1)? as u32, num(2)? as usize, num(3)? as usize, num(4)? as u32, num(5)? as u32, num(6)? as u32);
                let mode: Mode = fields[7].parse().map_err(|_| bad("unknown mode"))?;
                let w = VarWord::parse(k + 1, witness).map_err(word_err)?;
                check(&w, m, n)?;
                Ok(Certificate::Insensitive {
                    claim: InsensitivityClaim { k, m, n, r, a, b, witness: w },
                    mode,
                })
            }
            Some("monochromatic") => {
                if fields.len() != 6 {
                    return Err(bad("expected `monochromatic k m n r color`"));
                }
                let (k, m, n, r, color) = (num(1)? as u32, num(2)? as usize, num(3)? as usize, num(4)? as u32, num(5)? as u32);
                let w = VarWord::parse(k, witness).map_err(word_err)?;
                check(&w, m, n)?;
                Ok(Certificate::Monochromatic(MonochromaticClaim { k, m, n, r, witness: w, color }))
            }
            _ => Err(bad("unknown certificate kind")),
        }
    }
}
