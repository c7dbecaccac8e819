use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

use super::*;
use crate::group::Group;
use crate::measure::SparseMeasure;

fn z(d: usize) -> FiniteDimCocycle {
    catalog_entry(&format!("Z{d}-abelianization")).unwrap().cocycle
}

fn sign_plus_trivial(b: [f64; 2]) -> FiniteDimCocycle {
    let g = Arc::new(Group::from_id("Z^d:d=1").unwrap());
    let mu = SparseMeasure::srw(g.clone());
    let p = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    FiniteDimCocycle::from_generators(g, 2, &[("x1", Some(p), DVector::from_column_slice(&b))], mu).unwrap()
}

#[test]
fn abelianization_evaluates_to_the_image() {
    let b = z(3);
    let v = b.eval_text("x1.x2.x2.X3.x1").unwrap();
    assert_eq!(v, DVector::from_column_slice(&[2.0, 2.0, -1.0]));
    assert_eq!(b.eval(&crate::group::Word(vec![])).unwrap(), DVector::zeros(3));
}

#[test]
fn sign_rep_coboundary_recursion() {
    // b = coboundary of v for pi_n = (-1)^n: b(x^n) = v - (-1)^n v
    let g = Arc::new(Group::from_id("Z^d:d=1").unwrap());
    let mu = SparseMeasure::srw(g.clone());
    let p = DMatrix::from_element(1, 1, -1.0);
    let rep = vec![p.clone(), p];
    let v = DVector::from_element(1, 0.8);
    let b = FiniteDimCocycle::coboundary(g, rep, &v, mu).unwrap();
    for n in 0..7usize {
        let w = "x1.".repeat(n);
        let w = w.trim_end_matches('.');
        let got = if n == 0 { 0.0 } else { b.eval_text(w).unwrap()[0] };
        let expect = 0.8 - (-1f64).powi(n as i32) * 0.8;
        assert!((got - expect).abs() < 1e-15, "n = {n}");
    }
}

#[test]
fn consistency_passes_on_catalog_and_fails_when_corrupted() {
    for entry in catalog().unwrap() {
        let r = entry.cocycle.check_consistency(100, 1);
        assert!(r.passed, "{}: {r:?}", entry.name);
    }
    let b = catalog_entry("heisenberg-abelianization").unwrap().cocycle;
    let comm = b.group().parse_word("x.y.X.Y").unwrap();
    assert!(b.eval(&comm).unwrap().amax() < 1e-15);

    // b(x1) tilted off the trivial cocycle identity: b(x1 x2) != b(x2 x1)
    let g = Arc::new(Group::from_id("Z^d:d=2").unwrap());
    let mu = SparseMeasure::srw(g.clone());
    let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let bad = FiniteDimCocycle::from_generators(
        g,
        2,
        &[
            ("x1", Some(rot), DVector::from_column_slice(&[1.0, 0.0])),
            ("x2", None, DVector::from_column_slice(&[0.0, 1.0])),
        ],
        mu,
    )
    .unwrap();
    let r = bad.check_consistency(10, 1);
    assert!(!r.passed && r.max_defect > 0.1);
    assert!(bad.validated(0).is_err());
}

#[test]
fn construction_rejects_bad_input() {
    let g = Arc::new(Group::from_id("Z^d:d=1").unwrap());
    let mu = SparseMeasure::srw(g.clone());
    let skew = DMatrix::from_row_slice(1, 1, &[0.5]);
    let e = FiniteDimCocycle::from_generators(g.clone(), 1, &[("x1", Some(skew), DVector::from_element(1, 1.0))], mu.clone());
    assert!(matches!(e, Err(Error::InvalidCocycle(_))));
    let e = FiniteDimCocycle::from_generators(g.clone(), 1, &[("q", None, DVector::from_element(1, 1.0))], mu.clone());
    assert_eq!(e.unwrap_err(), Error::UnknownGenerator("q".into()));
    // inconsistent inverse value
    let id = DMatrix::identity(1, 1);
    let e = FiniteDimCocycle::new(
        g.clone(),
        vec![id.clone(), id],
        vec![DVector::from_element(1, 1.0), DVector::from_element(1, 1.0)],
        mu,
    );
    assert!(matches!(e, Err(Error::InvalidCocycle(_))));
    let wide = SparseMeasure::uniform(g.clone(), &[g.parse_element("x1^2").unwrap(), g.parse_element("X1^2").unwrap()]).unwrap();
    assert!(z(1).with_measure(wide).is_err());
}

#[test]
fn harmonic_part_cases() {
    // already harmonic
    let h = z(2).harmonic_part().unwrap();
    assert_eq!(h.v.amax(), 0.0);
    assert_eq!(h.harmonic.value(0), z(2).value(0));

    // pure coboundary
    let g = Arc::new(Group::from_id("F:k=2").unwrap());
    let mu = SparseMeasure::lazy_srw(g.clone());
    let c = (2.0f64 * std::f64::consts::PI / 3.0).cos();
    let s = (2.0f64 * std::f64::consts::PI / 3.0).sin();
    let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let rep = vec![r.clone(), r.transpose(), f.clone(), f];
    let v = DVector::from_column_slice(&[0.4, -1.1]);
    let cob = FiniteDimCocycle::coboundary(g, rep, &v, mu).unwrap();
    let h = cob.harmonic_part().unwrap();
    for i in 0..4 {
        assert!(h.harmonic.value(i).amax() < 1e-12);
    }
    assert!((&h.v - &v).amax() < 1e-12);

    // harmonic (0, t) plus the coboundary of (u, 0) under sign + trivial
    let (u, t) = (0.35, 1.3);
    let b = sign_plus_trivial([2.0 * u, t]);
    let h = b.harmonic_part().unwrap();
    assert!((h.v[0] - u).abs() < 1e-12 && h.v[1].abs() < 1e-12);
    assert!((h.harmonic.value(0) - DVector::from_column_slice(&[0.0, t])).amax() < 1e-12);
    assert!(h.residual < 1e-12);
}

#[test]
fn sign_rep_alone_has_no_harmonic_part() {
    let g = Arc::new(Group::from_id("Z^d:d=1").unwrap());
    let mu = SparseMeasure::srw(g.clone());
    let p = DMatrix::from_element(1, 1, -1.0);
    let b = FiniteDimCocycle::from_generators(g, 1, &[("x1", Some(p), DVector::from_element(1, 0.9))], mu).unwrap();
    assert!(matches!(b.spectral_report(), Err(Error::NotHarmonic(_))));
    let h = b.harmonic_part().unwrap().harmonic;
    let rep = h.spectral_report().unwrap();
    assert!(rep.is_zero() && rep.eigen.is_empty() && rep.beta == 0.0);
    assert_eq!(h.beta_monte_carlo(10, 10, 0).unwrap_err(), Error::ZeroCocycle);
}

#[test]
fn inconsistent_drift_is_obstructed() {
    // T_0 = I, so any drift lies in fix(T_0); an asymmetric value table cannot
    // come from a cocycle
    let g = Arc::new(Group::from_id("Z^d:d=1").unwrap());
    let mu = SparseMeasure::srw(g.clone());
    let mut b = z(1);
    b.values = vec![DVector::from_element(1, 1.0), DVector::from_element(1, -0.5)];
    b.mu = mu;
    assert!(matches!(b.harmonic_part(), Err(Error::Obstructed(_))));
}

#[test]
fn zd_reports() {
    for d in 1..=3usize {
        let r = z(d).spectral_report().unwrap();
        let df = d as f64;
        assert!((&r.t - DMatrix::<f64>::identity(d * d, d * d)).amax() < 1e-14);
        assert!((&r.pw - DMatrix::<f64>::identity(d, d) / df).amax() < 1e-12);
        assert_eq!(r.eigen.len(), 1);
        assert_eq!(r.eigen[0].multiplicity, d);
        assert!((r.eigen[0].lambda - 1.0 / df).abs() < 1e-12);
        assert!((r.beta - 1.0 / df).abs() < 1e-12);
        assert!((r.beta - r.beta_hs()).abs() < 1e-12);
        assert!(r.theta < 1e-6);
        assert!((r.dimension_bound().unwrap() - r.beta).abs() < 1e-12);
        for s in &r.sigmas {
            assert!((s - (1.0 / df).sqrt()).abs() < 1e-12);
        }
        assert!((r.c - 1.0).abs() < 1e-15);
    }
}

#[test]
fn catalog_invariants() {
    for entry in catalog().unwrap() {
        let b = &entry.cocycle;
        b.require_harmonic().unwrap();
        let r = b.spectral_report().unwrap();
        let sum: f64 = r.sigmas.iter().map(|s| s * s).sum::<f64>() + r.theta * r.theta;
        assert!((sum - 1.0).abs() < 1e-8, "{}", entry.name);
        let sym = (&r.pw - r.pw.transpose()).amax();
        assert!(sym < 1e-12);
        assert!(r.eigen.iter().all(|e| e.lambda > 0.0));
        let bound = r.dimension_bound().expect("nonzero Pw");
        assert!(r.beta <= bound + 1e-8, "{}: {} > {}", entry.name, r.beta, bound);
        assert!((r.beta - r.beta_hs()).abs() < 1e-10);
        let ces = r.cesaro_pw(4000);
        assert!((&ces - &r.pw).amax() < 2e-3, "{}: cesaro", entry.name);
    }
}

#[test]
fn one_dimensional_catalog_has_beta_one() {
    for name in ["lamplighter-cursor", "BS12-height", "Z-sign-plus-trivial"] {
        let r = catalog_entry(name).unwrap().cocycle.spectral_report().unwrap();
        assert!((r.beta - 1.0).abs() < 1e-12, "{name}");
        assert_eq!(r.sigmas.len(), 1);
    }
    let r = catalog_entry("lamplighter-cursor").unwrap().cocycle.spectral_report().unwrap();
    assert!((r.c - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn s3_cocycle_is_isotropic() {
    // absolutely irreducible: Pw is a multiple of I
    let r = catalog_entry("F2-S3-standard").unwrap().cocycle.spectral_report().unwrap();
    assert!((&r.pw - DMatrix::<f64>::identity(2, 2) * 0.5).amax() < 1e-10);
    assert!((r.beta - 0.5).abs() < 1e-10);
    let r = catalog_entry("F2-trivial-plus-S3-standard").unwrap().cocycle.spectral_report().unwrap();
    assert_eq!(r.eigen.iter().map(|e| e.multiplicity).sum::<usize>(), 3);
    assert!(r.beta < 1.0);
}

#[test]
fn exact_beta_at_finite_n() {
    // E X_n^4 = 3n^2 - 2n on Z, so beta_n = 1 - 1/n
    let r = z(1).spectral_report().unwrap();
    for n in [1usize, 2, 5, 40] {
        assert!((r.beta_at(n) - (1.0 - 1.0 / n as f64)).abs() < 1e-12);
    }
    let r = z(2).spectral_report().unwrap();
    assert!((r.beta_at(4000) - 0.5).abs() < 1e-3);
}

#[test]
fn beta_monte_carlo_matches_exact_finite_n() {
    for (d, n) in [(1usize, 60usize), (2, 60)] {
        let b = z(d);
        let exact = b.spectral_report().unwrap().beta_at(n);
        let est = b.beta_monte_carlo(n, 40_000, 7).unwrap();
        assert!((est.beta.mean - exact).abs() < 4.0 * est.beta.se, "d = {d}: {est:?} vs {exact}");
        assert!((est.martingale.mean - 1.0).abs() < 4.0 * est.martingale.se);
    }
    // non-trivial representation
    let b = catalog_entry("F2-trivial-plus-S3-standard").unwrap().cocycle;
    let exact = b.spectral_report().unwrap().beta_at(30);
    let est = b.beta_monte_carlo(30, 40_000, 3).unwrap();
    assert!((est.beta.mean - exact).abs() < 4.0 * est.beta.se, "{est:?} vs {exact}");
    assert!((est.martingale.mean - 1.0).abs() < 4.0 * est.martingale.se);
}

#[test]
fn monte_carlo_is_deterministic() {
    let a = z(2).beta_monte_carlo(20, 500, 11).unwrap();
    let b = z(2).beta_monte_carlo(20, 500, 11).unwrap();
    assert_eq!(a, b);
}

#[test]
fn coboundary_energy_respects_ceiling() {
    let b = catalog_entry("F2-S3-standard").unwrap().cocycle;
    let v = DVector::from_column_slice(&[1.0, 0.5]);
    let pts = b.coboundary_profile(&v, &[1, 4, 16, 64], 20_000, 5).unwrap();
    let mut last = f64::INFINITY;
    for p in &pts {
        assert!(p.exact <= p.ceiling + 1e-12);
        assert!((p.estimate.mean - p.exact).abs() < 4.0 * p.estimate.se + 1e-12, "{p:?}");
        assert!(p.exact < last);
        last = p.exact;
    }
}

#[test]
fn chi_basic_moments() {
    let point = ChiMixture::new(1.0, vec![]).unwrap();
    for k in 0..=8 {
        assert!((point.moment(k).unwrap() - 1.0).abs() < 1e-12);
    }
    assert_eq!(point.cdf(0.999), 0.0);
    assert_eq!(point.cdf(1.0), 1.0);

    let half = ChiMixture::new(0.0, vec![1.0]).unwrap();
    assert!((half.moment(2).unwrap() - 1.0).abs() < 1e-14);
    assert!((half.moment(4).unwrap() - 3.0).abs() < 1e-12);
    assert!((half.moment(8).unwrap() - 105.0).abs() < 1e-9);
    let sqrt_2_pi = (2.0 / std::f64::consts::PI).sqrt();
    assert!((half.moment(1).unwrap() - sqrt_2_pi).abs() < 1e-9);
    assert!((half.moment(3).unwrap() - 2.0 * sqrt_2_pi).abs() < 1e-9);
    assert!(half.moment(9).is_err());

    // Q = (g1^2 + g2^2) / 2 is Exp(1), so E X^k = Gamma(1 + k/2)
    let exp = ChiMixture::new(0.0, vec![0.5f64.sqrt(); 2]).unwrap();
    for k in 1..=8u32 {
        let expect = gamma(1.0 + k as f64 / 2.0);
        assert!((exp.moment(k).unwrap() - expect).abs() < 1e-8 * expect, "k = {k}");
    }
    assert!((exp.cdf(1.2) - (1.0 - (-1.44f64).exp())).abs() < 1e-12);
    assert_eq!(exp.cdf_method(), CdfMethod::ClosedForm);
}

#[test]
fn chi_moments_match_simulation() {
    let mix = ChiMixture::new(0.4, vec![0.3, 0.7, 0.7]).unwrap();
    let xs = mix.samples(200_000, 9);
    for k in 1..=4u32 {
        let vals: Vec<f64> = xs.iter().map(|x| f64::powi(*x, k as i32)).collect();
        let e = crate::walk::Estimate::from_samples(&vals).unwrap();
        let m = mix.moment(k).unwrap();
        assert!((e.mean - m).abs() < 4.0 * e.se, "k = {k}: {e:?} vs {m}");
    }
    assert!((mix.moment(2).unwrap() - mix.second_moment()).abs() < 1e-12);
}

#[test]
fn quadrature_cdf_matches_sampling() {
    let mix = ChiMixture::new(0.2, vec![0.5, 1.1, 1.1]).unwrap();
    assert_eq!(mix.cdf_method(), CdfMethod::Quadrature);
    let xs = mix.samples(100_000, 4);
    let ks = mix.ks_distance(&xs).unwrap();
    assert!(ks.statistic < 0.01, "{ks:?}");
    for x in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let f = mix.cdf(x);
        let emp = xs.iter().filter(|&&y| y <= x).count() as f64 / xs.len() as f64;
        assert!((f - emp).abs() < 0.006, "x = {x}: {f} vs {emp}");
    }
    assert!(mix.cdf(0.19) == 0.0 && mix.cdf(50.0) > 1.0 - 1e-9);
}

#[test]
fn simulated_cdf_for_many_sigmas() {
    let mix = ChiMixture::new(0.0, vec![0.2, 0.5, 0.9]).unwrap();
    assert_eq!(mix.cdf_method(), CdfMethod::Simulation);
    let ks = mix.ks_distance(&mix.samples(20_000, 77)).unwrap();
    assert!(ks.statistic < 0.02 && ks.reference_error > 0.0);
}

#[test]
fn ks_statistics() {
    let mix = ChiMixture::new(0.0, vec![1.0]).unwrap();
    assert_eq!(mix.ks_distance(&[]).unwrap_err(), Error::EmptySample);
    let ks = mix.ks_distance(&[5.0]).unwrap();
    assert!((ks.statistic - mix.cdf(5.0)).abs() < 1e-12);
    assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
    assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
    let a = mix.samples(20_000, 1);
    let b = mix.samples(20_000, 2);
    assert!(ks_two_sample(&a, &b).unwrap() < 0.02);
}

#[test]
fn walk_norms_follow_the_limit_law() {
    let b = z(2);
    let chi = b.spectral_report().unwrap().chi_mixture().unwrap();
    let xs = b.normalized_norm_samples(400, 20_000, 21).unwrap();
    let ks = chi.ks_distance(&xs).unwrap();
    assert!(ks.statistic < 0.02, "{ks:?}");
}

#[test]
fn moment_ceiling_on_z2() {
    let m = z(2).moment_profile(200, 20_000, 3, 3).unwrap();
    let double_factorial = [1.0, 3.0, 15.0];
    for (d, e) in m.iter().enumerate() {
        assert!(e.mean <= double_factorial[d] + 0.2, "d = {}: {e:?}", d + 1);
    }
}

#[test]
fn cocycle_file_round_trip() {
    let text = r#"
group = "Z^d:d=2"
dim = 2

[[generator]]
name = "x1"
value = [1.0, 0.0]

[[generator]]
name = "x2"
value = [0.0, 1.0]
"#;
    let f = CocycleFile::from_toml_str(text).unwrap();
    let b = f.build().unwrap();
    assert!((b.spectral_report().unwrap().beta - 0.5).abs() < 1e-12);
    let back = CocycleFile::from_toml_str(&CocycleFile::from_cocycle(&b, Some("srw".into())).to_toml_string()).unwrap();
    let b2 = back.build().unwrap();
    for i in 0..4 {
        assert_eq!(b.value(i), b2.value(i));
        assert_eq!(b.rep(i), b2.rep(i));
    }
    assert!(matches!(CocycleFile::from_toml_str("group = 1"), Err(Error::Config(_))));
    let lazy = CocycleFile {
        harmonic: true,
        mu: Some("lazy".into()),
        ..f
    };
    assert!((lazy.build().unwrap().spectral_report().unwrap().c - 0.5).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_group_cocycles_decompose(vals in proptest::collection::vec(-2.0f64..2.0, 6)) {
        // any values on free generators define a cocycle; its harmonic part
        // satisfies the spectral invariants
        let g = Arc::new(Group::from_id("F:k=2").unwrap());
        let mu = SparseMeasure::srw(g.clone());
        let c = -0.5;
        let s = 3f64.sqrt() / 2.0;
        let mut ra = DMatrix::<f64>::zeros(3, 3);
        ra[(0, 0)] = 1.0;
        ra[(1, 1)] = c; ra[(1, 2)] = -s; ra[(2, 1)] = s; ra[(2, 2)] = c;
        let rb = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, -1.0]));
        let b = FiniteDimCocycle::from_generators(
            g, 3,
            &[("a", Some(ra), DVector::from_column_slice(&vals[..3])), ("b", Some(rb), DVector::from_column_slice(&vals[3..]))],
            mu,
        ).unwrap();
        prop_assert!(b.check_consistency(20, 0).passed);
        let h = b.harmonic_part().unwrap();
        prop_assert!(h.residual < 1e-10);
        let r = h.harmonic.spectral_report().unwrap();
        if !r.is_zero() {
            let sum: f64 = r.sigmas.iter().map(|s| s * s).sum::<f64>() + r.theta * r.theta;
            prop_assert!((sum - 1.0).abs() < 1e-8);
            prop_assert!(r.beta <= r.dimension_bound().unwrap() + 1e-8);
            prop_assert!(r.beta >= 1.0 / 3.0 - 1e-8);
        }
    }

    #[test]
    fn chi_second_moment(theta in 0.0f64..2.0, sig in proptest::collection::vec(0.05f64..2.0, 0..4)) {
        let m = ChiMixture::new(theta, sig).unwrap();
        prop_assert!((m.moment(2).unwrap() - m.second_moment()).abs() < 1e-10 * (1.0 + m.second_moment()));
        // Jensen: (E X)^2 <= E X^2
        let m1 = m.moment(1).unwrap();
        prop_assert!(m1 * m1 <= m.second_moment() * (1.0 + 1e-9) + 1e-12);
    }
}
