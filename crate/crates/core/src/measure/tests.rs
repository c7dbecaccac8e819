use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::group::{Element, Group};
use crate::oracle;

fn group(id: &str) -> Arc<Group> {
    Arc::new(Group::from_id(id).unwrap())
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn z(k: i64) -> Element {
    Element::Abelian(vec![k])
}

#[test]
fn identity_is_neutral_for_convolution() {
    let g = group("F:k=2");
    let mu = ExactMeasure::lazy_srw(g.clone());
    let e = ExactMeasure::identity(g);
    let left = convolve(&e, &mu, &Truncation::exact()).unwrap();
    let right = convolve(&mu, &e, &Truncation::exact()).unwrap();
    assert_eq!(left.sorted_entries(), mu.sorted_entries());
    assert_eq!(right.sorted_entries(), mu.sorted_entries());
}

#[test]
fn two_step_return_on_the_line() {
    let g = group("Z^d:d=1");
    let mu = ExactMeasure::srw(g);
    let two = convolve(&mu, &mu, &Truncation::exact()).unwrap();
    assert_eq!(two.get(&z(0)), q(1, 2));
    assert_eq!(two.get(&z(2)), q(1, 4));
    assert_eq!(two.support_len(), 3);
}

#[test]
fn lamplighter_mass_is_conserved_exactly() {
    let g = group("lamplighter:d=1,f=2");
    let mu = ExactMeasure::lazy_srw(g);
    let p = convolution_power(&mu, 9, &Truncation::exact(), None).unwrap();
    assert_eq!(p.mass(), Rational::one());
    assert!(p.is_probability());
}

#[test]
fn srw_on_z_matches_binomials() {
    let g = group("Z^d:d=1");
    let mu = ExactMeasure::srw(g);
    for n in 0..=15u64 {
        let p = convolution_power(&mu, 2 * n, &Truncation::exact(), None).unwrap();
        assert_eq!(p.get(&z(0)), oracle::srw_z_return(2 * n), "n = {n}");
    }
    let p4 = convolution_power(&mu, 4, &Truncation::exact(), None).unwrap();
    assert_eq!(p4.get(&z(0)), q(3, 8));
}

#[test]
fn first_power_is_the_measure_and_free_group_returns() {
    let g = group("F:k=2");
    let mu = ExactMeasure::srw(g.clone());
    let p1 = convolution_power(&mu, 1, &Truncation::exact(), None).unwrap();
    assert_eq!(p1.sorted_entries(), mu.sorted_entries());
    let p2 = convolution_power(&mu, 2, &Truncation::exact(), None).unwrap();
    assert_eq!(p2.get(&g.identity()), q(1, 4));
}

#[test]
fn doubling_agrees_with_stepwise_powers() {
    let g = group("heisenberg");
    let mu = ExactMeasure::lazy_srw(g);
    let seq = power_sequence(&mu, 11, &Truncation::exact()).unwrap();
    for n in [0usize, 1, 2, 5, 8, 11] {
        let p = convolution_power(&mu, n as u64, &Truncation::exact(), None).unwrap();
        assert_eq!(p.sorted_entries(), seq[n].sorted_entries(), "n = {n}");
    }
}

#[test]
fn pointwise_powers() {
    let g = group("Z^d:d=1");
    let mu = ExactMeasure::srw(g);
    let two = convolve(&mu, &mu, &Truncation::exact()).unwrap();
    assert_eq!(two.pointwise_pow(1.0).unwrap().sorted_entries(), two.sorted_entries());
    let ind = two.pointwise_pow(0.0).unwrap();
    assert_eq!(ind.support(), vec![z(-2), z(0), z(2)]);
    assert!(ind.iter().all(|(_, w)| *w == Rational::one()));
    let sq = two.pointwise_pow(2.0).unwrap();
    assert_eq!(sq.get(&z(0)), q(1, 4));
    assert_eq!(two.pointwise_pow(0.5).unwrap_err(), Error::NonIntegerExact(0.5));
    let signed = two.shift_diff(&z(1)).unwrap();
    assert_eq!(signed.pointwise_pow(2.0).unwrap_err(), Error::NegativeWeight);
    let f = two.to_float().pointwise_pow(0.5).unwrap();
    assert!((f.get(&z(0)) - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn norms() {
    let g = group("Z^d:d=1");
    let e = ExactMeasure::identity(g.clone());
    for p in [1.0, 1.5, 2.0, 7.0] {
        assert_eq!(e.lp_norm(NormP::Finite(p)).unwrap(), 1.0);
    }
    let mu = ExactMeasure::srw(g);
    assert_eq!(mu.lp_norm(NormP::Finite(1.0)).unwrap(), 1.0);
    let two = convolve(&mu, &mu, &Truncation::exact()).unwrap();
    // mu*2 lives on even sites and its shift on odd ones
    let d = two.shift_diff(&z(1)).unwrap();
    assert_eq!(d.lp_norm_pow(1), q(2, 1));
    assert_eq!(d.lp_norm(NormP::Card).unwrap(), 6.0);
    let lazy2 = convolution_power(&mu.lazify(), 2, &Truncation::exact(), None).unwrap();
    assert_eq!(lazy2.shift_diff(&z(1)).unwrap().lp_norm_pow(1), q(3, 4));
    assert_eq!(d.lp_norm(NormP::Finite(0.5)), Err(Error::InvalidExponent(0.5)));
    assert_eq!("card".parse::<NormP>().unwrap(), NormP::Card);
    assert!("0.3".parse::<NormP>().is_err());
}

#[test]
fn shift_differences() {
    let g = group("Z^d:d=1");
    let mu = ExactMeasure::lazy_srw(g.clone());
    assert!(mu.shift_diff(&z(0)).unwrap().is_empty());
    let d = mu.shift_diff(&z(3)).unwrap();
    assert!(d.mass().is_zero());
    assert!(d.is_signed());
    let delta = ExactMeasure::identity(g);
    let d = delta.shift_diff(&z(1)).unwrap();
    assert_eq!(d.support(), vec![z(0), z(1)]);
    assert_eq!(d.get(&z(1)), q(-1, 1));
}

#[test]
fn total_variation() {
    let g = group("Z^d:d=1");
    let mu = ExactMeasure::lazy_srw(g.clone());
    let p10 = convolution_power(&mu, 10, &Truncation::exact(), None).unwrap();
    let p20 = convolution_power(&mu, 20, &Truncation::exact(), None).unwrap();
    assert!(tv_half_distance(&p10, &p10).unwrap().0.is_zero());
    let a = ExactMeasure::dirac(g.clone(), z(0)).unwrap();
    let b = ExactMeasure::dirac(g, z(5)).unwrap();
    assert_eq!(tv_half_distance(&a, &b).unwrap().0, q(2, 1));
    let mut expect = Rational::zero();
    for k in -20..=20 {
        let d = oracle::lazy_z_law(10, k) - oracle::lazy_z_law(20, k);
        expect += if d < Rational::zero() { -d } else { d };
    }
    assert_eq!(tv_half_distance(&p10, &p20).unwrap().0, expect);
}

#[test]
fn ball_masses() {
    let g = group("Z^d:d=1");
    let mu = ExactMeasure::lazy_srw(g.clone());
    let p = convolution_power(&mu, 100, &Truncation::exact(), None).unwrap();
    assert_eq!(p.ball_mass(100).unwrap(), Rational::one());
    assert_eq!(p.ball_mass(0).unwrap(), p.get(&z(0)));
    let r10 = p.ball_mass(10).unwrap();
    let mut expect = Rational::zero();
    for k in -10..=10 {
        expect += oracle::lazy_z_law(100, k);
    }
    assert_eq!(r10, expect);
    // X_100 has variance 50; continuity-corrected normal approximation
    let gauss = statrs::function::erf::erf(10.5 / 100f64.sqrt());
    assert!((r10.to_f64() - gauss).abs() < 0.05);
    let mut last = Rational::zero();
    for r in 0..20 {
        let m = p.ball_mass(r).unwrap();
        assert!(m >= last);
        last = m;
    }
}

#[test]
fn lazy_line_gap_profile() {
    let g = group("Z^d:d=1");
    let mu = ExactMeasure::lazy_srw(g);
    let mut engine = PowerEngine::for_measure(&mu, Truncation::exact());
    let (g0, _) = return_gap(&mut engine, 0).unwrap();
    assert_eq!(g0, q(1, 2));
    let prof = gap_ratio_profile(&mut engine, 2..=30).unwrap();
    assert!(prof.values.iter().all(|v| *v > Rational::zero()));
    for w in prof.ratios.windows(2) {
        assert!(w[1] > w[0]);
    }
    for n in 2..=31u64 {
        assert_eq!(engine.return_prob(n as usize).unwrap().value, oracle::lazy_z_return(n));
    }
}

#[test]
fn periodic_walks_are_refused() {
    let g = group("Z^d:d=2");
    let mu = ExactMeasure::srw(g.clone());
    assert!(mu.is_periodic(10_000));
    let mut engine = PowerEngine::for_measure(&mu, Truncation::exact());
    assert_eq!(return_gap(&mut engine, 3).unwrap_err(), Error::Periodic);
    assert!(!mu.lazify().is_periodic(10_000));
    // odd relator a b a^-1 b^-2 makes the walk aperiodic without laziness
    let bs = group("BS:1,2");
    assert!(!ExactMeasure::srw(bs).is_periodic(10_000));
    let grig = group("grigorchuk");
    assert!(!ExactMeasure::srw(grig).is_periodic(10_000));
}

#[test]
fn radial_route_matches_sparse_and_path_counting() {
    let g = group("F:k=2");
    let mu = ExactMeasure::lazy_srw(g.clone());
    let mut radial = FreeRadialWalk::from_measure(&mu).expect("lazy uniform is radial");
    let seq = power_sequence(&mu, 7, &Truncation::exact()).unwrap();
    for (n, p) in seq.iter().enumerate() {
        let r = radial.to_sparse(g.clone(), n).unwrap();
        assert_eq!(r.sorted_entries(), p.sorted_entries(), "n = {n}");
    }
    for t in 0..=60u64 {
        assert_eq!(radial.return_prob(t as usize), oracle::free_group_return(2, &q(1, 2), t));
    }
    let srw = ExactMeasure::srw(g.clone());
    let mut r2 = FreeRadialWalk::from_measure(&srw).unwrap();
    assert!(r2.is_periodic());
    assert_eq!(r2.return_prob(2), q(1, 4));
    let skew = ExactMeasure::from_entries(g.clone(), [(g.parse_element("a").unwrap(), q(1, 1))]).unwrap();
    assert!(FreeRadialWalk::from_measure(&skew).is_none());
    // l1 distances and ball masses against the sparse route
    let (d, _) = tv_half_distance(&seq[3], &seq[6]).unwrap();
    assert_eq!(radial.l1_distance(3, 6), d);
    assert_eq!(radial.ball_mass(6, 2), seq[6].ball_mass(2).unwrap());
}

#[test]
fn free_group_gap_ratio_stays_below_one() {
    let g = group("F:k=2");
    let mu = ExactMeasure::lazy_srw(g);
    let mut engine = PowerEngine::for_measure(&mu, Truncation::exact());
    assert_eq!(engine.route(), "radial");
    let prof = gap_ratio_profile(&mut engine, 2..=30).unwrap();
    let last = prof.ratios.last().unwrap().to_f64();
    let rho = oracle::free_group_spectral_radius(2, 0.5);
    assert!(last < 0.95 && (last - rho).abs() < 0.05, "{last} vs {rho}");
}

#[test]
fn product_engine_factorizes() {
    let g = group("product:Z^d:d=1|F:k=2");
    let spec: MuSpec = "product:lazy|lazy".parse().unwrap();
    let mu = spec.build::<Rational>(&g).unwrap();
    assert!(mu.is_probability() && mu.is_symmetric());
    let mut fact = spec.engine::<Rational>(&g, Truncation::exact()).unwrap();
    assert_eq!(fact.route(), "product");
    let mut generic = PowerEngine::sparse(&mu, Truncation::exact());
    for n in 0..=6 {
        for x in g.ball(2).unwrap() {
            assert_eq!(fact.mass_at(n, &x).unwrap(), generic.mass_at(n, &x).unwrap());
        }
    }
}

#[test]
fn split_evaluation_matches_materialized_power() {
    let g = group("lamplighter:d=1,f=2");
    let mu = ExactMeasure::lazy_srw(g.clone());
    let seq = power_sequence(&mu, 9, &Truncation::exact()).unwrap();
    let mut engine = PowerEngine::sparse(&mu, Truncation::exact());
    for x in g.ball(3).unwrap() {
        assert_eq!(engine.mass_at(9, &x).unwrap().value, seq[9].get(&x));
    }
}

#[test]
fn l2_identity_small() {
    for id in ["Z^d:d=2", "lamplighter:d=1,f=2", "F:k=2"] {
        let g = group(id);
        let mu = ExactMeasure::srw(g.clone());
        let mut engine = PowerEngine::sparse(&mu, Truncation::exact());
        for n in 1..=4 {
            let p = engine.power(n).unwrap().clone();
            let e_mass = engine.mass_at(2 * n, &g.identity()).unwrap().value;
            for x in g.ball(2).unwrap() {
                let lhs = p.shift_diff(&x).unwrap().lp_norm_pow(2);
                let rhs = (e_mass.clone() - engine.mass_at(2 * n, &x).unwrap().value) * q(2, 1);
                assert_eq!(lhs, rhs, "{id} n = {n} g = {x}");
            }
        }
    }
}

impl<W: Weight> PowerEngine<W> {
    fn power(&mut self, n: usize) -> crate::Result<&SparseMeasure<W>> {
        match self {
            PowerEngine::Sparse(p) => p.power(n),
            _ => unreachable!(),
        }
    }
}

#[test]
fn float_and_exact_backends_agree() {
    for id in ["F:k=2", "lamplighter:d=1,f=2", "BS:1,2"] {
        let g = group(id);
        let exact = ExactMeasure::lazy_srw(g.clone());
        let float = FloatMeasure::lazy_srw(g);
        let pe = power_sequence(&exact, 7, &Truncation::exact()).unwrap();
        let pf = power_sequence(&float, 7, &Truncation::exact()).unwrap();
        for (a, b) in pe.iter().zip(&pf) {
            assert_eq!(a.support_len(), b.support_len());
            for (x, w) in a.iter() {
                assert!((w.to_f64() - b.get(x)).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn truncation_accounts_for_dropped_mass() {
    let g = group("F:k=2");
    let mu = FloatMeasure::lazy_srw(g);
    let full = convolution_power(&mu, 8, &Truncation::exact(), None).unwrap();
    let cut = convolution_power(&mu, 8, &Truncation::eps(1e-3), None).unwrap();
    assert!(cut.support_len() < full.support_len());
    let d = cut.ledger().dropped_mass;
    // doubling re-counts early drops, so the total can exceed eps but not n eps
    assert!(d > 0.0 && d <= 8.0 * 1e-3);
    assert!((cut.mass() + d - 1.0).abs() < 1e-12);
    assert!(cut.is_probability());
    for (x, w) in full.iter() {
        let c = cut.get(x);
        assert!(c <= w + 1e-15 && w - c <= d + 1e-15);
    }
}

#[test]
fn smaller_eps_moves_scalars_within_ledger_bounds() {
    let g = group("grigorchuk");
    let mu = FloatMeasure::srw(g.clone());
    let mut coarse = PowerEngine::sparse(&mu, Truncation::eps(1e-5));
    let mut fine = PowerEngine::sparse(&mu, Truncation::eps(1e-8));
    for n in [6usize, 12, 17] {
        for x in [g.identity(), g.parse_element("ad").unwrap()] {
            let c = coarse.mass_at(n, &x).unwrap();
            let f = fine.mass_at(n, &x).unwrap();
            let (ci, fi) = (c.interval(), f.interval());
            assert!(ci.lo <= fi.hi + 1e-12 && fi.lo <= ci.hi + 1e-12, "n = {n}");
        }
    }
}

#[test]
fn backend_and_group_errors() {
    let g = group("Z^d:d=1");
    let h = group("Z^d:d=2");
    let mu = ExactMeasure::srw(g);
    let nu = ExactMeasure::srw(h);
    assert!(matches!(convolve(&mu, &nu, &Truncation::exact()), Err(Error::GroupMismatch { .. })));
    assert_eq!(
        convolve(&mu, &mu, &Truncation::eps(0.1)).unwrap_err(),
        Error::TruncationOnExact(0.1)
    );
    let f2 = group("F:k=2");
    let m = ExactMeasure::srw(f2);
    let err = convolution_power(&m, 12, &Truncation::exact().with_budget(1000), None).unwrap_err();
    assert!(matches!(err, Error::BudgetExceeded { limit: 1000, .. }));
}

#[test]
fn cache_roundtrip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let cache = DiskCache::new(dir.path()).unwrap();
    let g = group("lamplighter:d=1,f=2");
    let mu = ExactMeasure::lazy_srw(g.clone());
    let direct = convolution_power(&mu, 6, &Truncation::exact(), None).unwrap();
    let first = convolution_power(&mu, 6, &Truncation::exact(), Some(&cache)).unwrap();
    assert_eq!(first.sorted_entries(), direct.sorted_entries());
    let hash = mu.content_hash();
    let hit: ExactMeasure = cache.load(&g, &hash, 6, 0.0).expect("stored");
    assert_eq!(hit.sorted_entries(), direct.sorted_entries());

    let path = cache.path_for::<Rational>(&g, &hash, 6, 0.0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(cache::CACHE_FORMAT));
    std::fs::write(&path, text.replacen("1/", "3/", 1)).unwrap();
    assert!(cache.load::<Rational>(&g, &hash, 6, 0.0).is_none());
    let again = convolution_power(&mu, 6, &Truncation::exact(), Some(&cache)).unwrap();
    assert_eq!(again.sorted_entries(), direct.sorted_entries());

    let fmu = FloatMeasure::lazy_srw(g.clone());
    let f = convolution_power(&fmu, 5, &Truncation::eps(1e-4), Some(&cache)).unwrap();
    let f2 = convolution_power(&fmu, 5, &Truncation::eps(1e-4), Some(&cache)).unwrap();
    assert_eq!(f.sorted_entries(), f2.sorted_entries());
    assert_eq!(f.ledger(), f2.ledger());
}

#[test]
fn measure_specs() {
    let g = group("Z^d:d=2");
    for s in ["srw", "lazy", "lazy:1/3", "uniform:x1;X1", "weights:e=1/2;x1=0.25;X1=1/4", "dirac:x1.x2"] {
        let spec: MuSpec = s.parse().unwrap();
        assert_eq!(spec.to_string(), s);
        let m = spec.build::<Rational>(&g).unwrap();
        assert!(m.is_probability(), "{s}");
    }
    let lazy3 = "lazy:1/3".parse::<MuSpec>().unwrap().build::<Rational>(&g).unwrap();
    assert_eq!(lazy3.get(&g.identity()), q(1, 3));
    assert_eq!(lazy3.get(&g.parse_element("x2").unwrap()), q(1, 6));
    assert!("bogus".parse::<MuSpec>().is_err());
    assert!("lazy".parse::<MuSpec>().unwrap().build::<Rational>(&group("F:k=2")).is_ok());
    assert!("product:lazy|lazy".parse::<MuSpec>().unwrap().build::<Rational>(&g).is_err());
}

fn small_measure(g: &Arc<Group>, picks: &[(usize, u8)]) -> ExactMeasure {
    let ball = g.ball(2).unwrap();
    let entries = picks
        .iter()
        .map(|(i, w)| (ball[i % ball.len()].clone(), q(*w as i64 + 1, 1)));
    ExactMeasure::from_entries(g.clone(), entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_convolution_is_associative_and_multiplies_mass(
        a in prop::collection::vec((0usize..64, 0u8..5), 1..5),
        b in prop::collection::vec((0usize..64, 0u8..5), 1..5),
        c in prop::collection::vec((0usize..64, 0u8..5), 1..5),
        which in 0usize..3,
    ) {
        let g = group(["F:k=2", "Z^d:d=2", "lamplighter:d=1,f=2"][which]);
        let (x, y, z) = (small_measure(&g, &a), small_measure(&g, &b), small_measure(&g, &c));
        let t = Truncation::exact();
        let left = convolve(&convolve(&x, &y, &t).unwrap(), &z, &t).unwrap();
        let right = convolve(&x, &convolve(&y, &z, &t).unwrap(), &t).unwrap();
        prop_assert_eq!(left.sorted_entries(), right.sorted_entries());
        prop_assert_eq!(left.mass(), x.mass() * y.mass() * z.mass());
    }

    #[test]
    fn symmetric_measures_have_symmetric_powers(n in 1u64..7, which in 0usize..4) {
        let g = group(["F:k=2", "heisenberg", "lamplighter:d=1,f=3", "grigorchuk"][which]);
        let mu = ExactMeasure::lazy_srw(g);
        prop_assert!(mu.is_symmetric());
        let p = convolution_power(&mu, n, &Truncation::exact(), None).unwrap();
        prop_assert!(p.is_symmetric());
    }

    #[test]
    fn truncation_ledger_balances(eps in 0.0f64..0.05, n in 2u64..7) {
        let g = group("F:k=2");
        let mu = FloatMeasure::lazy_srw(g);
        let p = convolution_power(&mu, n, &Truncation::eps(eps), None).unwrap();
        prop_assert!(p.ledger().dropped_mass <= n as f64 * eps + 1e-15);
        prop_assert!((p.mass() + p.ledger().dropped_mass - 1.0).abs() < 1e-12);
    }
}
