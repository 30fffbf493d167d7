//! End-to-end acceptance checks. Each test pins one advertised guarantee of
//! the crate, with tolerances and runtime budgets stated inline, and prints a
//! single PASS line when it holds.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elldl::bundle_degree::check_degree_expansion;
use elldl::check::CheckReport;
use elldl::coefficients::{Coefficient, ThetaMonomial};
use elldl::dl_operators::{
    a_matrix, a_via_closed_form, check_braid, check_closed_form, check_invmat, check_langlands,
    check_mirror, check_squares, dual_generator, element_residual, with_sample_points,
    zeta_closed_form, OperatorVariant,
};
use elldl::elliptic_classes::{mirror_restriction_check, poincare_duality_check, SectionChoice};
use elldl::root_system::{
    bruhat_leq, build_root_datum, langlands_dual, log_degree, DEFAULT_WEYL_CAP,
};
use elldl::theta::{rel_err, ThetaContext};
use elldl::twisted_algebra::{twisted_product, Setting, TwistedElement};

fn setting(series: &str, rank: usize) -> Setting {
    Setting::new(build_root_datum(series, rank).unwrap(), DEFAULT_WEYL_CAP).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn require(report: &CheckReport) {
    for item in &report.items {
        assert!(
            item.pass,
            "{}: {} (max residual {:.3e})",
            report.name, item.identity, item.max_residual
        );
    }
    assert!(report.pass);
}

/// theta has derivative 1 at the origin, is odd, and picks up a sign under
/// x -> x + 1; 100 random points away from the lattice, relative 1e-10.
/// Budget: under one second.
#[test]
fn criterion_01_theta_normalization_and_periods() {
    let start = Instant::now();
    let ctx = ThetaContext::standard();

    let h = Complex64::new(1e-4, 0.0);
    let near_zero = ctx.theta(h).unwrap();
    assert!(
        (near_zero / h - Complex64::new(1.0, 0.0)).norm() < 1e-6,
        "theta(h)/h = {near_zero:?} at h = 1e-4"
    );

    let mut r = rng(101);
    let mut accepted = 0;
    while accepted < 100 {
        let x = Complex64::new(r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5));
        if ctx.lattice_distance(x) < 1e-2 {
            continue;
        }
        let tx = ctx.theta(x).unwrap();
        assert!(rel_err(ctx.theta(-x).unwrap(), -tx) < 1e-10, "oddness at {x:?}");
        assert!(
            rel_err(ctx.theta(x + 1.0).unwrap(), -tx) < 1e-10,
            "antiperiod at {x:?}"
        );
        accepted += 1;
    }

    assert!(start.elapsed().as_secs_f64() < 1.0, "theta checks exceeded 1 s");
    println!("criterion 1 (theta normalization, oddness, antiperiod): PASS");
}

/// Generator squares in rank one for every coefficient family, including the
/// two dual-side families, and braid relations in A2 (m=3), C2 (m=4),
/// G2 (m=6): 20 random points, relative residual 1e-8.  Budget: 30 s.
#[test]
fn criterion_02_involution_and_braid() {
    let start = Instant::now();
    let ctx = ThetaContext::standard();
    let tol = 1e-8;

    let a1 = setting("A", 1);
    let mut r = rng(202);
    require(&check_squares(&a1, &ctx, &mut r, None, 20, tol).unwrap());

    let dual = Setting::new(langlands_dual(&a1.datum), DEFAULT_WEYL_CAP).unwrap();
    for dynamical in [false, true] {
        let g = dual_generator(&dual, dynamical, 0).unwrap();
        let sq = twisted_product(&dual, &[g.clone(), g]).unwrap();
        let id = TwistedElement::identity(sq.form);
        let mut worst = 0.0f64;
        with_sample_points(&dual, &ctx, &mut r, None, 20, |_p, cache| {
            let res = element_residual(&sq, &id, cache)?;
            worst = worst.max(res);
            Ok(())
        })
        .unwrap();
        assert!(
            worst < tol,
            "dual generator square residual {worst:.3e} (dynamical = {dynamical})"
        );
    }

    for (series, rank) in [("A", 2), ("C", 2), ("G", 2)] {
        let s = setting(series, rank);
        require(&check_braid(&s, &ctx, &mut r, None, 20, tol).unwrap());
    }

    assert!(start.elapsed().as_secs() < 30, "involution/braid checks exceeded 30 s");
    println!("criterion 2 (generator squares and braid relations): PASS");
}

type Atom = (i64, [i64; 2], [i64; 2], i64);

/// Assembles a rank-2 monomial from atom data, optionally swapping the two
/// coordinate directions (the symmetry exchanging the simple reflections).
fn monomial2(atoms: &[Atom], swap: bool) -> ThetaMonomial {
    atoms.iter().fold(ThetaMonomial::one(), |acc, &(h, ch, co, e)| {
        let (ch, co) = if swap {
            (vec![ch[1], ch[0]], vec![co[1], co[0]])
        } else {
            (ch.to_vec(), co.to_vec())
        };
        acc.mul(&ThetaMonomial::atom(h, ch, co, e))
    })
}

/// All four coefficients of the two-step operator along (s1, s2), as printed:
/// a global denominator th(h+lam_{1+2}) th(h+lam_2) and one numerator per
/// Bruhat-interval element.  `swap` produces the (s2, s1) operator instead.
fn two_step_rows(swap: bool) -> Vec<(Vec<usize>, Coefficient)> {
    const DEN: [Atom; 2] = [(1, [0, 0], [1, 1], -1), (1, [0, 0], [0, 1], -1)];
    let entry = |numer: &[Atom]| {
        let mut atoms = numer.to_vec();
        atoms.extend_from_slice(&DEN);
        Coefficient::from_monomial(monomial2(&atoms, swap))
    };
    let relabel = |word: &[usize]| -> Vec<usize> {
        word.iter().map(|&i| if swap { 1 - i } else { i }).collect()
    };
    vec![
        (
            relabel(&[]),
            entry(&[
                (1, [0, 0], [0, 0], 1),
                (1, [0, 0], [0, 0], 1),
                (0, [1, 0], [1, 1], 1),
                (0, [0, 1], [0, 1], 1),
                (0, [1, 0], [0, 0], -1),
                (0, [0, 1], [0, 0], -1),
            ]),
        ),
        (
            relabel(&[0]),
            entry(&[
                (1, [-1, 0], [0, 0], 1),
                (0, [0, 0], [-1, -1], 1),
                (1, [0, 0], [0, 0], 1),
                (0, [1, 1], [0, 1], 1),
                (0, [1, 0], [0, 0], -1),
                (0, [1, 1], [0, 0], -1),
            ]),
        ),
        (
            relabel(&[1]),
            entry(&[
                (1, [0, 0], [0, 0], 1),
                (0, [1, 0], [1, 1], 1),
                (1, [0, -1], [0, 0], 1),
                (0, [0, 0], [0, -1], 1),
                (0, [1, 0], [0, 0], -1),
                (0, [0, 1], [0, 0], -1),
            ]),
        ),
        (
            relabel(&[0, 1]),
            entry(&[
                (1, [-1, 0], [0, 0], 1),
                (0, [0, 0], [-1, -1], 1),
                (1, [-1, -1], [0, 0], 1),
                (0, [0, 0], [0, -1], 1),
                (0, [1, 0], [0, 0], -1),
                (0, [1, 1], [0, 0], -1),
            ]),
        ),
    ]
}

/// The a-coefficients of the two-step operators in both orders and of the
/// longest-word operator match the printed monomial data symbolically; the
/// two-term entries are also confirmed numerically at 20 points (their match
/// is the one that rests on the theta addition rule).
#[test]
fn criterion_03_printed_rank_two_operators() {
    let s = setting("A", 2);
    let g = &s.group;
    let a = a_matrix(&s, OperatorVariant::new(1, 1, false)).unwrap();

    for (swap, row_word) in [(false, vec![0usize, 1]), (true, vec![1usize, 0])] {
        let row = g.word_to_index(&row_word);
        let mut support = Vec::new();
        for (col_word, want) in two_step_rows(swap) {
            let col = g.word_to_index(&col_word);
            assert_eq!(
                a.entries[row][col], want,
                "two-step entry at row {row_word:?}, column {col_word:?}"
            );
            support.push(col);
        }
        for w in 0..g.order() {
            assert!(
                support.contains(&w) || a.entries[row][w].is_zero(),
                "unexpected support at column {w} of row {row_word:?}"
            );
        }
    }

    let th = |h: i64, ch: &[i64], co: &[i64], e: i64| {
        ThetaMonomial::atom(h, ch.to_vec(), co.to_vec(), e)
    };
    let prod = |factors: &[ThetaMonomial]| {
        factors.iter().fold(ThetaMonomial::one(), |acc, f| acc.mul(f))
    };

    let w0 = g.w0();
    let s1 = g.simple(0);
    let den = prod(&[
        th(1, &[0, 0], &[1, 0], -1),
        th(1, &[0, 0], &[0, 1], -1),
        th(1, &[0, 0], &[1, 1], -1),
    ]);
    let e_term1 = prod(&[
        th(1, &[0, 0], &[0, 0], 1),
        th(1, &[0, 0], &[0, 0], 1),
        th(1, &[0, 0], &[0, 0], 1),
        th(0, &[1, 0], &[0, 1], 1),
        th(0, &[0, 1], &[1, 1], 1),
        th(0, &[1, 0], &[1, 0], 1),
        th(0, &[1, 0], &[0, 0], -2),
        th(0, &[0, 1], &[0, 0], -1),
        den.clone(),
    ]);
    let e_term2 = prod(&[
        th(1, &[0, 0], &[0, 0], 1),
        th(1, &[-1, 0], &[0, 0], 1),
        th(0, &[0, 0], &[0, -1], 1),
        th(0, &[1, 1], &[1, 1], 1),
        th(1, &[1, 0], &[0, 0], 1),
        th(0, &[0, 0], &[-1, 0], 1),
        th(0, &[1, 0], &[0, 0], -2),
        th(0, &[1, 1], &[0, 0], -1),
        den.clone(),
    ])
    .neg();
    let s1_term1 = prod(&[
        th(1, &[0, 0], &[0, 0], 1),
        th(1, &[0, 0], &[0, 0], 1),
        th(0, &[1, 0], &[0, 1], 1),
        th(0, &[0, 1], &[1, 1], 1),
        th(1, &[-1, 0], &[0, 0], 1),
        th(0, &[0, 0], &[-1, 0], 1),
        th(0, &[1, 0], &[0, 0], -2),
        th(0, &[0, 1], &[0, 0], -1),
        den.clone(),
    ]);
    let s1_term2 = prod(&[
        th(1, &[0, 0], &[0, 0], 1),
        th(1, &[0, 0], &[0, 0], 1),
        th(1, &[-1, 0], &[0, 0], 1),
        th(0, &[0, 0], &[0, -1], 1),
        th(0, &[1, 1], &[1, 1], 1),
        th(0, &[-1, 0], &[1, 0], 1),
        th(0, &[1, 0], &[0, 0], -2),
        th(0, &[1, 1], &[0, 0], -1),
        den.clone(),
    ])
    .neg();
    let w0_entry = prod(&[
        th(1, &[-1, 0], &[0, 0], 1),
        th(1, &[0, -1], &[0, 0], 1),
        th(1, &[-1, -1], &[0, 0], 1),
        th(0, &[0, 0], &[-1, 0], 1),
        th(0, &[0, 0], &[0, -1], 1),
        th(0, &[0, 0], &[-1, -1], 1),
        th(0, &[1, 0], &[0, 0], -1),
        th(0, &[0, 1], &[0, 0], -1),
        th(0, &[1, 1], &[0, 0], -1),
        den,
    ]);

    let e_want = Coefficient::from_terms(vec![e_term1, e_term2]);
    let s1_want = Coefficient::from_terms(vec![s1_term1, s1_term2]);
    let w0_want = Coefficient::from_monomial(w0_entry);
    assert_eq!(a.entries[w0][g.e()], e_want, "three-step entry at e");
    assert_eq!(a.entries[w0][s1], s1_want, "three-step entry at s1");
    assert_eq!(a.entries[w0][w0], w0_want, "three-step diagonal entry");

    let ctx = ThetaContext::standard();
    let mut r = rng(303);
    let pairs = [
        (a.entries[w0][g.e()].clone(), e_want),
        (a.entries[w0][s1].clone(), s1_want),
    ];
    let mut worst = 0.0f64;
    with_sample_points(&s, &ctx, &mut r, None, 20, |_p, cache| {
        let mut point_worst = 0.0f64;
        for (lhs, rhs) in &pairs {
            let got = lhs.eval_cached(cache)?;
            let want = rhs.eval_cached(cache)?;
            point_worst = point_worst.max(rel_err(got, want));
        }
        worst = worst.max(point_worst);
        Ok(())
    })
    .unwrap();
    assert!(worst < 1e-8, "two-term entry residual {worst:.3e}");

    println!("criterion 3 (printed two- and three-step operator entries): PASS");
}

/// Spectral-dynamical transition matrices invert each other after the index
/// flip, in rank 1 through |W| = 24, including the sign-dressed mixed
/// families: 5 points, sup-norm 1e-7.  Budget: 60 s.
#[test]
fn criterion_04_inverse_transition_matrices() {
    let start = Instant::now();
    let ctx = ThetaContext::standard();
    let mut r = rng(404);
    for (series, rank) in [("A", 1), ("A", 2), ("B", 2), ("A", 3)] {
        let s = setting(series, rank);
        require(&check_invmat(&s, &ctx, &mut r, None, 5, 1e-7).unwrap());
    }
    assert!(start.elapsed().as_secs() < 60, "inversion checks exceeded 60 s");
    println!("criterion 4 (transition-matrix inversion, plain and signed): PASS");
}

/// Full Kronecker pairing tables between classes and opposite classes in A2
/// (36 pairs per table) and C2 (64 pairs per table), under both the direct
/// and the dual-module pairing, for two independent reference sections.
#[test]
fn criterion_05_duality_tables() {
    let ctx = ThetaContext::standard();
    let mut r = rng(505);
    for (series, rank) in [("A", 2), ("C", 2)] {
        let s = setting(series, rank);
        let sections = [SectionChoice::unit(), SectionChoice::random(&mut r, s.rank())];
        for c in &sections {
            require(&poincare_duality_check(&s, &ctx, &mut r, None, 3, 1e-8, c).unwrap());
        }
    }
    println!("criterion 5 (Kronecker duality tables, two reference sections): PASS");
}

/// The coordinate swap carries dynamical transition coefficients to spectral
/// ones, and row-scaled dynamical restrictions match shifted spectral ones,
/// over all Weyl pairs in A2 and B2: 5 points, residual 1e-8.
#[test]
fn criterion_06_mirror_identities() {
    let ctx = ThetaContext::standard();
    let mut r = rng(606);
    for (series, rank) in [("A", 2), ("B", 2)] {
        let s = setting(series, rank);
        require(&check_mirror(&s, &ctx, &mut r, None, 5, 1e-8).unwrap());
        let unit = SectionChoice::unit();
        require(&mirror_restriction_check(&s, &ctx, &mut r, None, 5, 1e-8, &unit).unwrap());
    }
    // the restriction identity is insensitive to the reference section
    let s = setting("A", 2);
    let c = SectionChoice::random(&mut r, s.rank());
    require(&mirror_restriction_check(&s, &ctx, &mut r, None, 5, 1e-8, &c).unwrap());
    println!("criterion 6 (spectral-dynamical mirror identities): PASS");
}

/// The subset-sum closed form reproduces the iteratively expanded
/// coefficients: symbolically for every pair and family in A2 and C2,
/// numerically (1e-8, 2 points) for 50 random comparable pairs per plain
/// family in A3, and the worked rank-3 subset reproduces its printed factors
/// exactly as atom data.
#[test]
fn criterion_07_closed_form_restrictions() {
    for (series, rank) in [("A", 2), ("C", 2)] {
        let s = setting(series, rank);
        require(&check_closed_form(&s, &OperatorVariant::ALL).unwrap());
    }

    let s = setting("A", 3);
    let g = &s.group;
    let ctx = ThetaContext::standard();
    let mut r = rng(707);
    for variant in [OperatorVariant::new(1, 1, false), OperatorVariant::new(1, 1, true)] {
        let a = a_matrix(&s, variant).unwrap();
        let mut pairs = Vec::new();
        while pairs.len() < 50 {
            let v = r.gen_range(0..g.order());
            let lower: Vec<usize> = (0..g.order()).filter(|&w| bruhat_leq(g, w, v)).collect();
            let w = lower[r.gen_range(0..lower.len())];
            let closed = a_via_closed_form(&s, variant, v, w).unwrap();
            pairs.push((closed, a.entries[v][w].clone()));
        }
        let mut worst = 0.0f64;
        with_sample_points(&s, &ctx, &mut r, None, 2, |_p, cache| {
            let mut point_worst = 0.0f64;
            for (lhs, rhs) in &pairs {
                let got = lhs.eval_cached(cache)?;
                let want = rhs.eval_cached(cache)?;
                point_worst = point_worst.max(rel_err(got, want));
            }
            worst = worst.max(point_worst);
            Ok(())
        })
        .unwrap();
        assert!(
            worst < 1e-8,
            "closed-form residual {worst:.3e} for family {}",
            variant.token()
        );
    }

    // worked rank-3 subset along (s1, s2, s1, s3, s2) targeting w = s1 s2
    let th = |h: i64, ch: &[i64], co: &[i64], e: i64| {
        ThetaMonomial::atom(h, ch.to_vec(), co.to_vec(), e)
    };
    let prod = |factors: &[ThetaMonomial]| {
        factors.iter().fold(ThetaMonomial::one(), |acc, f| acc.mul(f))
    };
    let variant = OperatorVariant::new(1, 1, false);
    let word = [0usize, 1, 0, 2, 1];
    let w_target = g.word_to_index(&[0, 1]);

    let mut hits = Vec::new();
    for mask in 0u32..32 {
        let subset: Vec<bool> = (0..5).map(|j| mask & (1 << j) != 0).collect();
        let d = zeta_closed_form(&s, variant, &word, &subset).unwrap();
        if d.w_ij == w_target {
            hits.push((mask, d));
        }
    }
    assert_eq!(hits.len(), 3, "three subsets reach s1 s2");

    let jp = &hits.iter().find(|(mask, _)| *mask == 0b10001).unwrap().1;
    let gamma: Vec<Vec<i64>> = jp.char_args.iter().map(|v| v.coords.clone()).collect();
    assert_eq!(
        gamma,
        vec![
            vec![1, 0, 0],
            vec![1, 1, 0],
            vec![-1, 0, 0],
            vec![0, 0, 1],
            vec![1, 1, 0]
        ],
        "prefix character arguments"
    );
    let expected = prod(&[
        th(1, &[-1, 0, 0], &[0, 0, 0], 1),
        th(0, &[0, 0, 0], &[0, 0, -1], 1),
        th(0, &[1, 0, 0], &[0, 0, 0], -1),
        th(1, &[0, 0, 0], &[0, 0, 1], -1),
        th(1, &[0, 0, 0], &[0, 0, 0], 1),
        th(0, &[1, 1, 0], &[1, 1, 1], 1),
        th(0, &[1, 1, 0], &[0, 0, 0], -1),
        th(1, &[0, 0, 0], &[1, 1, 1], -1),
        th(1, &[0, 0, 0], &[0, 0, 0], 1),
        th(0, &[-1, 0, 0], &[1, 1, 0], 1),
        th(0, &[-1, 0, 0], &[0, 0, 0], -1),
        th(1, &[0, 0, 0], &[1, 1, 0], -1),
        th(1, &[0, 0, 0], &[0, 0, 0], 1),
        th(0, &[0, 0, 1], &[0, 1, 1], 1),
        th(0, &[0, 0, 1], &[0, 0, 0], -1),
        th(1, &[0, 0, 0], &[0, 1, 1], -1),
        th(1, &[-1, -1, 0], &[0, 0, 0], 1),
        th(0, &[0, 0, 0], &[0, -1, 0], 1),
        th(0, &[1, 1, 0], &[0, 0, 0], -1),
        th(1, &[0, 0, 0], &[0, 1, 0], -1),
    ]);
    assert_eq!(jp.zeta, expected, "printed subset monomial");

    println!("criterion 7 (closed-form restriction coefficients): PASS");
}

/// Difference of logarithmic degree tensors expands as a sum of rank-one
/// tensors over every admissible subset: exact integers, every comparable
/// pair in A2 and C2, plus the printed tensor examples in A3, C2, and A2.
#[test]
fn criterion_08_degree_bookkeeping() {
    for (series, rank) in [("A", 2), ("C", 2)] {
        let s = setting(series, rank);
        let g = &s.group;
        for v in 0..g.order() {
            for w in 0..g.order() {
                if bruhat_leq(g, w, v) {
                    require(&check_degree_expansion(&s.datum, g, v, w).unwrap());
                }
            }
        }
    }

    let tensor_diff = |s: &Setting, v: usize, w: usize| -> Vec<Vec<i64>> {
        let tv = log_degree(&s.datum, s.group.elem(v)).tensor;
        let tw = log_degree(&s.datum, s.group.elem(w)).tensor;
        (0..s.rank())
            .map(|a| (0..s.rank()).map(|b| tv[a][b] - tw[a][b]).collect())
            .collect()
    };

    let s = setting("A", 3);
    let v = s.group.word_to_index(&[0, 1, 2, 0, 1, 0]);
    assert_eq!(
        tensor_diff(&s, v, s.group.simple(0)),
        vec![vec![0, 1, 1], vec![1, 2, 1], vec![1, 1, 1]]
    );

    let s = setting("C", 2);
    let v = s.group.word_to_index(&[0, 1, 0]);
    assert_eq!(tensor_diff(&s, v, s.group.e()), vec![vec![2, 2], vec![1, 1]]);

    let s = setting("A", 2);
    let v = s.group.w0();
    let expected: [(&[usize], [[i64; 2]; 2]); 5] = [
        (&[], [[1, 1], [1, 1]]),
        (&[0], [[0, 1], [1, 1]]),
        (&[1], [[1, 1], [1, 0]]),
        (&[0, 1], [[0, 0], [1, 0]]),
        (&[1, 0], [[0, 1], [0, 0]]),
    ];
    for (word, t) in expected {
        let w = s.group.word_to_index(word);
        let want: Vec<Vec<i64>> = t.iter().map(|row| row.to_vec()).collect();
        assert_eq!(tensor_diff(&s, v, w), want, "tensor difference at {word:?}");
    }

    println!("criterion 8 (integer degree expansion and printed tensors): PASS");
}

/// Dual-datum generators with negated hbar match the dynamical generators of
/// the original datum under the coordinate swap, for A2 and the B2/C2 pair:
/// 5 points, residual 1e-9.
#[test]
fn criterion_09_langlands_duality() {
    let ctx = ThetaContext::standard();
    let mut r = rng(909);
    for (series, rank) in [("A", 2), ("B", 2), ("C", 2)] {
        let s = setting(series, rank);
        require(&check_langlands(&s, &ctx, &mut r, None, 5, 1e-9).unwrap());
    }
    println!("criterion 9 (duality transport of generators): PASS");
}
