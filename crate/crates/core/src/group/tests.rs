use super::*;
use crate::oracle::TreeAction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn g(id: &str) -> Group {
    Group::from_id(id).unwrap()
}

fn random_element(group: &Group, len: usize, rng: &mut ChaCha8Rng) -> Element {
    let n = group.generators().len();
    let w = Word((0..len).map(|_| rng.random_range(0..n)).collect());
    group.eval_word(&w)
}

const CATALOG: [&str; 8] = [
    "Z^d:d=2",
    "F:k=2",
    "lamplighter:d=1,f=2",
    "lamplighter:d=1,f=3",
    "heisenberg",
    "BS:1,2",
    "grigorchuk",
    "product:Z^d:d=2|F:k=2",
];

#[test]
fn catalog_ids_parse_and_roundtrip() {
    for id in CATALOG {
        assert_eq!(g(id).id(), id);
    }
    assert!(matches!(Group::from_id("SL3Z"), Err(Error::UnknownGroup(_))));
    assert!(Group::from_id("F:k=0").is_err());
    assert!(Group::from_id("BS:2,3").is_err());
    let pairs = g("product:Z^d:d=1|F:k=2;gens=pairs");
    assert_eq!(pairs.generators().len(), 2 * 4);
}

#[test]
fn multiply_examples() {
    let z2 = g("Z^d:d=2");
    let a = z2.parse_element("[1,0]").unwrap();
    let b = z2.parse_element("[0,1]").unwrap();
    assert_eq!(z2.multiply(&a, &b).unwrap(), Element::Abelian(vec![1, 1]));

    let f2 = g("F:k=2");
    let x = f2.parse_element("a").unwrap();
    let xi = f2.parse_element("A").unwrap();
    assert_eq!(f2.multiply(&x, &xi).unwrap(), f2.identity());

    let gr = g("grigorchuk");
    let bc = gr.parse_element("bc").unwrap();
    assert_eq!(bc, gr.parse_element("d").unwrap());
}

#[test]
fn grigorchuk_bc_is_d_on_tree_to_depth_10() {
    let act = TreeAction::new(10);
    assert_eq!(act.word_permutation(&[1, 2]), act.word_permutation(&[3]));
}

#[test]
fn group_mismatch_is_typed() {
    let z2 = g("Z^d:d=2");
    let f2 = g("F:k=2");
    let err = z2.multiply(&z2.identity(), &f2.identity()).unwrap_err();
    assert!(matches!(err, Error::GroupMismatch { .. }));
    let z3 = g("Z^d:d=3");
    assert!(z2.multiply(&z3.identity(), &z2.identity()).is_err());
    assert!(z2.word_length(&f2.identity()).is_err());
}

#[test]
fn inverse_examples() {
    let z2 = g("Z^d:d=2");
    assert_eq!(z2.inverse(&Element::Abelian(vec![3, -2])), Element::Abelian(vec![-3, 2]));
    let f2 = g("F:k=2");
    assert_eq!(f2.inverse(&f2.parse_element("ab").unwrap()), f2.parse_element("BA").unwrap());
    for grp in CATALOG.map(g) {
        assert_eq!(grp.inverse(&grp.identity()), grp.identity());
    }
}

#[test]
fn lamplighter_inverse_on_random_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for id in ["lamplighter:d=1,f=2", "lamplighter:d=2,f=3"] {
        let grp = g(id);
        for _ in 0..1000 {
            let len = rng.random_range(0..30);
            let a = random_element(&grp, len, &mut rng);
            assert_eq!(grp.mul(&a, &grp.inverse(&a)), grp.identity());
            assert_eq!(grp.mul(&grp.inverse(&a), &a), grp.identity());
        }
    }
}

#[test]
fn group_axioms_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for grp in CATALOG.map(g) {
        for _ in 0..200 {
            let a = random_element(&grp, 12, &mut rng);
            let b = random_element(&grp, 12, &mut rng);
            let c = random_element(&grp, 12, &mut rng);
            assert_eq!(grp.mul(&grp.mul(&a, &b), &c), grp.mul(&a, &grp.mul(&b, &c)), "{}", grp.id());
            assert_eq!(grp.mul(&a, &grp.identity()), a);
            assert_eq!(grp.mul(&grp.identity(), &a), a);
            assert_eq!(grp.mul(&a, &grp.inverse(&a)), grp.identity());
        }
    }
}

#[test]
fn products_are_deterministic_across_runs() {
    for grp in CATALOG.map(g) {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..1000)
                .map(|_| {
                    let a = random_element(&grp, 10, &mut rng);
                    let b = random_element(&grp, 10, &mut rng);
                    grp.mul(&a, &b).encode()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn encoding_is_injective_on_ball() {
    for id in ["lamplighter:d=1,f=2", "grigorchuk", "BS:1,2", "heisenberg"] {
        let grp = g(id);
        let ball = grp.ball(5).unwrap();
        let mut codes: Vec<Vec<u8>> = ball.iter().map(|e| e.encode()).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), ball.len(), "{id}");
        for e in &ball {
            assert_eq!(Element::decode(&e.encode()).as_ref(), Some(e));
        }
    }
}

#[test]
fn word_length_examples() {
    let z2 = g("Z^d:d=2");
    assert_eq!(z2.word_length(&Element::Abelian(vec![3, -2])).unwrap(), 5);
    let f2 = g("F:k=2");
    assert_eq!(f2.word_length(&f2.parse_element("abAAbbA").unwrap()).unwrap(), 7);
    let gr = g("grigorchuk");
    let dad = gr.parse_element("dad").unwrap();
    // dad is a nontrivial conjugate of a; no shorter word is equal to it
    let bfs = gr.bfs_length(&dad).unwrap();
    assert_eq!(gr.word_length(&dad).unwrap(), bfs);
    assert_eq!(bfs, 3);
    assert_eq!(gr.word_length(&gr.identity()).unwrap(), 0);
}

#[test]
fn closed_form_lengths_agree_with_bfs() {
    for id in ["Z^d:d=2", "Z^d:d=3", "F:k=2", "product:Z^d:d=1|F:k=2"] {
        let grp = g(id);
        let ball = grp.ball(6).unwrap();
        for e in &ball {
            assert_eq!(grp.word_length(e).unwrap(), grp.bfs_length(e).unwrap(), "{id} {e}");
        }
    }
    let z = g("Z^d:d=2");
    assert_eq!(z.ball(8).unwrap().len(), 1 + 2 * 8 * 9);
}

#[test]
fn word_length_symmetry_and_subadditivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for id in ["Z^d:d=2", "F:k=2", "lamplighter:d=1,f=2", "heisenberg", "grigorchuk", "BS:1,2"] {
        let grp = g(id);
        for _ in 0..200 {
            let a = random_element(&grp, 4, &mut rng);
            let b = random_element(&grp, 4, &mut rng);
            let la = grp.word_length(&a).unwrap();
            assert_eq!(la, grp.word_length(&grp.inverse(&a)).unwrap());
            let lab = grp.word_length(&grp.mul(&a, &b)).unwrap();
            assert!(lab <= la + grp.word_length(&b).unwrap());
        }
    }
}

#[test]
fn ball_examples() {
    let z = g("Z^d:d=1");
    let b = z.ball(2).unwrap();
    assert_eq!(b, (-2..=2).map(|x| Element::Abelian(vec![x])).collect::<Vec<_>>());
    let f2 = g("F:k=2");
    assert_eq!(f2.ball(2).unwrap().len(), 17);
    let growth = f2.growth(5).unwrap();
    let mut expected = 1;
    for (k, size) in growth.iter().enumerate().skip(1) {
        expected += 4 * 3usize.pow(k as u32 - 1);
        assert_eq!(*size, expected);
    }
    let gr1 = g("grigorchuk");
    let gr2 = g("grigorchuk");
    assert_eq!(gr1.ball(3).unwrap(), gr2.ball(3).unwrap());
    // monotone in r
    let sizes = gr1.growth(6).unwrap();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
    let prod = g("product:Z^d:d=2|F:k=2");
    assert_eq!(prod.ball(1).unwrap().len(), 1 + 4 + 4);
}

#[test]
fn ball_budget_is_enforced() {
    let f2 = Group::from_id_with_budget("F:k=2", 100).unwrap();
    match f2.ball(6) {
        Err(Error::BudgetExceeded { count, limit }) => {
            assert_eq!(limit, 100);
            assert!(count > 100);
        }
        other => panic!("expected budget error, got {other:?}"),
    }
    let gr = Group::from_id_with_budget("grigorchuk", 50).unwrap();
    let far = gr.parse_element("adacabadacabadac").unwrap();
    match gr.word_length(&far) {
        Err(Error::RadiusExceeded { lower_bound, .. }) => assert!(lower_bound >= 2),
        other => panic!("expected radius error, got {other:?}"),
    }
}

#[test]
fn asymmetric_generators_rejected() {
    let z = g("Z^d:d=1");
    let err = z
        .with_generators(vec![Element::Abelian(vec![1])], vec!["x".into()])
        .unwrap_err();
    assert!(matches!(err, Error::AsymmetricGenerators(_)));
    let z = g("Z^d:d=1");
    let z2 = z
        .with_generators(
            vec![Element::Abelian(vec![2]), Element::Abelian(vec![-2]), Element::Abelian(vec![3]), Element::Abelian(vec![-3])],
            vec!["u".into(), "U".into(), "v".into(), "V".into()],
        )
        .unwrap();
    // custom generators use BFS, not the l1 closed form
    assert_eq!(z2.word_length(&Element::Abelian(vec![1])).unwrap(), 2);
}

#[test]
fn direct_product_examples() {
    let zz = g("product:Z^d:d=1|Z^d:d=1");
    let z2 = g("Z^d:d=2");
    let a = zz.parse_element("(x1^3, X1)").unwrap();
    assert_eq!(zz.word_length(&a).unwrap(), z2.word_length(&Element::Abelian(vec![3, -1])).unwrap());
    assert_eq!(zz.ball(3).unwrap().len(), z2.ball(3).unwrap().len());

    let p = g("product:F:k=2|grigorchuk");
    let ae = p.parse_element("(a, e)").unwrap();
    let eb = p.parse_element("(e, b)").unwrap();
    let ab = p.parse_element("(a, b)").unwrap();
    assert_eq!(p.mul(&ae, &eb), ab);
    assert_eq!(p.mul(&eb, &ae), ab);
}

#[test]
fn relators_evaluate_to_identity() {
    for grp in CATALOG.map(g) {
        for r in grp.relators() {
            assert_eq!(grp.eval_word(&r), grp.identity(), "{} {:?}", grp.id(), r);
        }
    }
}

#[test]
fn baumslag_solitar_relation_and_normal_form() {
    let bs = g("BS:1,2");
    let lhs = bs.parse_element("a.b.A").unwrap();
    let rhs = bs.parse_element("b^2").unwrap();
    assert_eq!(lhs, rhs);
    let x = bs.parse_element("A.b.a").unwrap();
    match &x {
        Element::BaumslagSolitar(v) => {
            assert_eq!((v.k, v.j), (0, 1));
            assert_eq!(v.m, BigInt::from(1));
        }
        _ => unreachable!(),
    }
    // two halves make a whole
    assert_eq!(bs.mul(&x, &x), bs.parse_element("b").unwrap());
}

#[test]
fn heisenberg_commutator_is_central() {
    let h = g("heisenberg");
    let c = h.parse_element("x.y.X.Y").unwrap();
    assert_eq!(c, Element::Heisenberg([0, 0, 1]));
    for s in h.generators().elements() {
        assert_eq!(h.mul(&c, s), h.mul(s, &c));
    }
}

#[test]
fn grigorchuk_relators_and_klein_group() {
    let gr = g("grigorchuk");
    let bcd: Vec<Element> = ["b", "c", "d"].iter().map(|s| gr.parse_element(s).unwrap()).collect();
    for x in &bcd {
        for y in &bcd {
            let p = gr.mul(x, y);
            if x == y {
                assert_eq!(p, gr.identity());
            } else {
                assert!(bcd.contains(&p));
            }
        }
    }
    for w in ["aa", "bb", "cc", "dd", "bcd"] {
        assert!(grigorchuk_is_identity(w).unwrap(), "{w}");
    }
    assert!(!grigorchuk_is_identity("ad").unwrap());
}

/// Exhaustive comparison of both solvers against the brute-force tree action
/// on every word of length at most 8.
#[test]
fn grigorchuk_word_problem_matches_tree_action() {
    let act = TreeAction::new(12);
    let gr = g("grigorchuk");
    let size = 1usize << 12;
    let mut checked = 0usize;
    let mut stack: Vec<(Vec<u8>, Vec<u32>)> = vec![(Vec::new(), (0..size as u32).collect())];
    while let Some((word, perm)) = stack.pop() {
        let oracle = crate::oracle::is_identity_perm(&perm);
        let w = Word(word.iter().map(|&l| l as usize).collect());
        assert_eq!(gr.grigorchuk_is_identity(&w).unwrap(), oracle, "{word:?}");
        assert_eq!(gr.eval_word(&w).eq(&gr.identity()), oracle, "{word:?}");
        checked += 1;
        if word.len() < 8 {
            for l in 0..4u8 {
                let mut p = perm.clone();
                act.compose_right(&mut p, l);
                let mut w2 = word.clone();
                w2.push(l);
                stack.push((w2, p));
            }
        }
    }
    assert_eq!(checked, (0..=8).map(|k| 4usize.pow(k)).sum::<usize>());
}

#[test]
fn grigorchuk_orders_match_oracle() {
    let act = TreeAction::new(12);
    let gr = g("grigorchuk");
    for (word, letters) in [("ad", vec![0u8, 3]), ("ac", vec![0, 2]), ("ab", vec![0, 1])] {
        let k = act.order(&letters, 64).unwrap();
        let w = gr.parse_word(word).unwrap();
        for j in 1..k {
            assert!(!gr.grigorchuk_is_identity(&w.repeat(j)).unwrap(), "{word}^{j}");
        }
        assert!(gr.grigorchuk_is_identity(&w.repeat(k)).unwrap(), "{word}^{k}");
    }
    assert_eq!(act.order(&[0, 3], 64), Some(4));
    assert_eq!(act.order(&[0, 2], 64), Some(8));
    assert_eq!(act.order(&[0, 1], 64), Some(16));
}

#[test]
fn parse_errors() {
    let f2 = g("F:k=2");
    assert!(matches!(f2.parse_element("q"), Err(Error::ParseElement { .. })));
    assert_eq!(f2.parse_element("e").unwrap(), f2.identity());
    assert_eq!(f2.parse_element("a^-2").unwrap(), f2.parse_element("AA").unwrap());
    let z = g("Z^d:d=2");
    assert!(z.parse_element("[1,2,3]").is_err());
}
