use std::sync::Arc;

use gr_core::bounds::Mode;
use gr_core::coloring::{ColoringOracle, ColoringTable};
use gr_core::exact::{self, CexVerdict, Decider, NStatus, Target};
use gr_core::insensitivity::{self, InsensitivityClaim};
use gr_core::solver::{self, MonoVerdict, SolveOutcome, Strategy};
use gr_core::unions::{self, UnionsOutcome};
use gr_core::word;

fn all_tables(k: u32, n: usize, r: u32) -> impl Iterator<Item = ColoringTable> {
    let d = word::count_variable_words_u64(k as u64, n as u32).unwrap() as u32;
    (0..(r as u64).pow(d)).map(move |mut code| {
        let mut colors = vec![0; d as usize];
        for c in colors.iter_mut().rev() {
            *c = (code % r as u64) as u32 + 1;
            code /= r as u64;
        }
        ColoringTable { k, n, r, colors }
    })
}

#[test]
fn step_checks_imply_insensitivity() {
    // every 2-dimensional word over [2] of length 2 or 3, against every
    // coloring at n = 2 and a sample at n = 3
    for n in 2..=3usize {
        let tables: Vec<ColoringTable> = if n == 2 {
            all_tables(2, 2, 2).collect()
        } else {
            (0..300).map(|s| ColoringOracle::seeded(s, 2, 3, 2).unwrap().to_table().unwrap()).collect()
        };
        for t in tables {
            let c = ColoringOracle::from_table(&t).unwrap();
            for w in word::dimensional_words(2, 2, n) {
                let steps_pass = (1..=2).all(|j| {
                    insensitivity::verify_step_condition(&c, &w, j, 1, 2, 1 << 10).unwrap().is_pass()
                });
                let claim = InsensitivityClaim { k: 1, m: 2, n, r: 2, a: 1, b: 2, witness: w };
                let full = insensitivity::verify_insensitive(&c, &claim).unwrap().is_pass();
                assert!(!steps_pass || full);
            }
        }
    }
}

#[test]
fn inductive_k1_and_direct_agree_exhaustively() {
    let inductive = Strategy::Inductive {
        mode: Mode::Tight,
        base: solver::BaseSource::Override(5),
        strict: false,
        budget: 1 << 24,
    };
    let direct = Strategy::DirectSearch { budget: 1 << 24 };
    for n in 1..=4 {
        for t in all_tables(1, n, 2) {
            let c = Arc::new(ColoringOracle::from_table(&t).unwrap());
            let a = solver::solve_gr(1, 2, 2, n, &c, &inductive).unwrap();
            let b = solver::solve_gr(1, 2, 2, n, &c, &direct).unwrap();
            assert_eq!(a.claim().is_some(), b.claim().is_some(), "n={n} {:?}", t.colors);
            if let Some(claim) = a.claim() {
                // the unions witness is a valid monochromatic word, and back
                let s = unions::varword_to_blockseq(&claim.witness).unwrap();
                assert_eq!(unions::blockseq_to_varword(&s, n).unwrap(), claim.witness);
                let via_direct = b.claim().unwrap();
                let s2 = unions::varword_to_blockseq(&via_direct.witness).unwrap();
                for u in unions::nu(&s2) {
                    let mask = u.indices().iter().fold(0u64, |a, &i| a | 1 << i);
                    let w: Vec<_> = (0..n)
                        .map(|i| if mask >> i & 1 == 1 { word::Symbol::Var(0) } else { word::Symbol::Letter(1) })
                        .collect();
                    assert_eq!(c.color_symbols(&w).unwrap(), via_direct.color);
                }
            }
        }
    }
}

#[test]
fn deciders_agree_on_grid() {
    let mut targets = Vec::new();
    for m in 1..=2 {
        for r in 1..=2 {
            targets.push(Target::H { m, r });
            for k in 1..=2 {
                targets.push(Target::Gr { k, m, r });
                targets.push(Target::Sh { k, m, r, a: k, b: k + 1 });
            }
        }
    }
    for t in targets {
        for n in 1..=3 {
            let inst = exact::instance(&t, n).unwrap();
            let naive = exact::decide_naive(&inst, t.colors(), 1 << 24);
            let bt = exact::decide_backtracking(&inst, t.colors(), 1 << 24);
            if let (Ok(a), Ok(b)) = (&naive, &bt) {
                assert_eq!(a, b, "{t} n={n}");
            }
            assert!(bt.is_ok(), "{t} n={n}");
        }
    }
}

#[test]
fn counterexamples_round_trip() {
    for t in [
        Target::H { m: 2, r: 2 },
        Target::Gr { k: 1, m: 2, r: 2 },
        Target::Gr { k: 2, m: 2, r: 2 },
        Target::Sh { k: 1, m: 2, r: 2, a: 1, b: 2 },
    ] {
        let res = exact::exact_minimal(&t, 4, 1 << 24, Decider::Backtracking).unwrap();
        for rec in &res.records {
            if let NStatus::Counterexample(table) = &rec.status {
                let text = table.to_text();
                let back = ColoringTable::parse(&text).unwrap();
                assert_eq!(exact::verify_counterexample(&t, &back, 1 << 24).unwrap(), CexVerdict::Pass, "{t} n={}", rec.n);
            }
        }
    }
}

#[test]
fn gr222_lower_bound() {
    let res = exact::exact_minimal(&Target::Gr { k: 2, m: 2, r: 2 }, 4, 1 << 30, Decider::Backtracking).unwrap();
    assert_eq!(res.minimal, exact::Minimal::LowerBoundOnly(5));
    let naive3 = exact::exact_minimal(&Target::Gr { k: 2, m: 2, r: 2 }, 3, 1 << 20, Decider::Both).unwrap();
    assert_eq!(naive3.minimal, exact::Minimal::LowerBoundOnly(4));
}

#[test]
fn unions_solver_matches_exact_grid() {
    // H(2,2) = 5: every coloring at n = 5 has a witness; the n = 4
    // counterexample has none
    let res = exact::exact_minimal(&Target::H { m: 2, r: 2 }, 5, 1 << 24, Decider::Backtracking).unwrap();
    let NStatus::Counterexample(t4) = res.status(4).unwrap() else { panic!() };
    let c = ColoringOracle::from_table(t4).unwrap();
    assert_eq!(unions::solve_unions(&c, 2, 1 << 20).unwrap(), UnionsOutcome::Exhausted);
    for seed in 0..50 {
        let c = ColoringOracle::seeded(seed, 1, 5, 2).unwrap();
        assert!(matches!(unions::solve_unions(&c, 2, 1 << 20).unwrap(), UnionsOutcome::Found(..)));
    }
}

#[test]
fn inductive_r1_certificate() {
    let s = Strategy::Inductive { mode: Mode::Tight, base: solver::BaseSource::Override(2), strict: true, budget: 1 << 20 };
    let n = solver::required_length(3, 2, 1, &s).unwrap().to_usize().unwrap();
    let c = Arc::new(ColoringOracle::seeded(0, 3, n, 1).unwrap());
    let SolveOutcome::Found(claim, _) = solver::solve_gr(3, 2, 1, n, &c, &s).unwrap() else { panic!() };
    assert_eq!(solver::verify_monochromatic(&c, &claim.witness).unwrap(), MonoVerdict::Color(1));
}
