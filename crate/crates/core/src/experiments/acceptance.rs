//! The acceptance criteria, each with its measured values and pinned
//! tolerances. Failures are data: a criterion that errors is reported as a
//! failure with the error text.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cocycle::{catalog, catalog_entry};
use crate::empirical::{kesten_diagnostic, concentration_experiment, thin_profile};
use crate::error::{Error, Result};
use crate::group::{Element, Group, Word};
use crate::measure::{MuSpec, NormP, PowerEngine, Rational, SparseMeasure, SparsePowers, Truncation, Weight};
use crate::oracle::{self, TreeAction};
use crate::walk::Estimate;

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "exact-oracle convolution"),
    (2, "l2 identity"),
    (3, "beta limit"),
    (4, "dimension bound"),
    (5, "CLT shape"),
    (6, "martingale constancy"),
    (7, "moment ceiling"),
    (8, "gamma monotonicity"),
    (9, "Kesten diagnostic"),
    (10, "thin subgroup of a direct product"),
    (11, "concentration trend"),
    (12, "Grigorchuk soundness"),
    (13, "determinism"),
];

/// Criteria whose records are computed on the exact backend.
pub const EXACT_MODE: [u8; 6] = [1, 2, 8, 9, 10, 12];

/// Every numeric threshold used by the suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub c1_seconds: f64,
    pub c2_seconds: f64,
    pub c3_spectral: f64,
    pub c3_mc: f64,
    pub c3_seconds: f64,
    pub c4_slack: f64,
    pub c4_equality: f64,
    pub c5_ks: f64,
    pub c5_se: f64,
    pub c6_se: f64,
    pub c7_slack: f64,
    pub c8_slack: f64,
    pub c8_free_ratio: f64,
    pub c9_free: f64,
    pub c9_abelian: f64,
    pub c10_factor: f64,
    pub c10_floor: f64,
    pub c10_seconds: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            c1_seconds: 5.0,
            c2_seconds: 60.0,
            c3_spectral: 1e-8,
            c3_mc: 0.03,
            c3_seconds: 120.0,
            c4_slack: 1e-8,
            c4_equality: 1e-6,
            c5_ks: 0.02,
            c5_se: 3.0,
            c6_se: 3.0,
            c7_slack: 0.2,
            c8_slack: 1e-12,
            c8_free_ratio: 0.95,
            c9_free: 0.02,
            c9_abelian: 0.97,
            c10_factor: 0.5,
            c10_floor: 0.5,
            c10_seconds: 600.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub measured: String,
    pub tolerance: String,
    pub seconds: f64,
    /// Digest of the exact-mode data, for the determinism check.
    pub exact_digest: Option<String>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} | tolerance: {} | {:.1}s",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.measured,
            self.tolerance,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub results: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.results.iter().map(CriterionResult::line).collect()
    }
}

struct Partial {
    passed: bool,
    measured: String,
    tolerance: String,
    digest_input: Option<String>,
}

fn digest(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

fn group(id: &str) -> Result<Arc<Group>> {
    Ok(Arc::new(Group::from_id(id)?))
}

fn engine<W: Weight>(id: &str, spec: &str) -> Result<PowerEngine<W>> {
    let g = group(id)?;
    spec.parse::<MuSpec>()?.engine::<W>(&g, Truncation::exact())
}

/// Runs one criterion; errors become failures.
pub fn run_criterion(id: u8, seed: u64, tol: &Tolerances) -> CriterionResult {
    let title = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, t)| t.to_string())
        .unwrap_or_else(|| format!("unknown criterion {id}"));
    let start = Instant::now();
    let outcome = match id {
        1 => c1(tol, start),
        2 => c2(tol, start),
        3 => c3(seed, tol, start),
        4 => c4(tol),
        5 => c5(seed, tol),
        6 => c6(seed, tol),
        7 => c7(seed, tol),
        8 => c8(tol),
        9 => c9(tol),
        10 => c10(tol, start),
        11 => c11(seed),
        12 => c12(),
        13 => c13(seed, tol),
        _ => Err(Error::InvalidParameter(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(p) => CriterionResult {
            id,
            title,
            passed: p.passed,
            measured: p.measured,
            tolerance: p.tolerance,
            seconds,
            exact_digest: p.digest_input.as_deref().map(digest),
        },
        Err(e) => CriterionResult {
            id,
            title,
            passed: false,
            measured: format!("error: {e}"),
            tolerance: String::new(),
            seconds,
            exact_digest: None,
        },
    }
}

/// Runs every criterion in order.
pub fn acceptance_suite(seed: u64) -> AcceptanceReport {
    acceptance_suite_with(seed, &Tolerances::default(), &CRITERIA.map(|c| c.0))
}

pub fn acceptance_suite_with(seed: u64, tol: &Tolerances, ids: &[u8]) -> AcceptanceReport {
    AcceptanceReport {
        seed,
        results: ids.iter().map(|&id| run_criterion(id, seed, tol)).collect(),
    }
}

fn c1(tol: &Tolerances, start: Instant) -> Result<Partial> {
    let g = group("Z^d:d=1")?;
    let mu = "lazy".parse::<MuSpec>()?.build::<Rational>(&g)?;
    let mut powers = SparsePowers::new(mu, Truncation::exact());
    let e = g.identity();
    let mut mismatches = Vec::new();
    let mut text = String::new();
    for n in 1..=15u64 {
        let v = powers.power(2 * n as usize)?.get(&e);
        if v != oracle::lazy_z_return(2 * n) {
            mismatches.push(n);
        }
        text.push_str(&v.to_text());
        text.push(';');
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Partial {
        passed: mismatches.is_empty() && secs < tol.c1_seconds,
        measured: format!("15 of 15 values checked, mismatches at n = {mismatches:?}, {secs:.2}s; mu^30(0) = {}", powers.power(30)?.get(&e).to_text()),
        tolerance: format!("rational equality, runtime < {} s", tol.c1_seconds),
        digest_input: Some(text),
    })
}

fn c2(tol: &Tolerances, start: Instant) -> Result<Partial> {
    let mut checked = 0usize;
    let mut failures = Vec::new();
    let mut text = String::new();
    for id in ["Z^d:d=2", "lamplighter:d=1,f=2", "F:k=2"] {
        let g = group(id)?;
        let mu = "lazy".parse::<MuSpec>()?.build::<Rational>(&g)?;
        let mut powers = SparsePowers::new(mu.clone(), Truncation::exact());
        // right-hand side from an independent route: radial chain on F_2,
        // materialized mu^{2n} elsewhere
        let mut rhs_engine = PowerEngine::for_measure(&mu, Truncation::exact());
        let materialize_rhs = !matches!(rhs_engine, PowerEngine::Radial { .. }) && id != "lamplighter:d=1,f=2";
        let ball = g.ball(2)?;
        let e = g.identity();
        for n in 1..=10usize {
            let law = powers.power(n)?.clone();
            let (ret, far): (Rational, Vec<Rational>) = if materialize_rhs {
                let l2 = powers.power(2 * n)?;
                (l2.get(&e), ball.iter().map(|x| l2.get(x)).collect())
            } else {
                let r = rhs_engine.mass_at(2 * n, &e)?.value;
                let f = ball.iter().map(|x| rhs_engine.mass_at(2 * n, x).map(|b| b.value)).collect::<Result<Vec<_>>>()?;
                (r, f)
            };
            for (x, far) in ball.iter().zip(far) {
                let lhs = law.shift_diff(x)?.lp_norm_pow(2);
                let rhs = (ret.clone() - far) * Rational::from_integer(2.into());
                if lhs != rhs {
                    failures.push(format!("{id} n={n} g={x}"));
                }
                text.push_str(&lhs.to_text());
                text.push(';');
                checked += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Partial {
        passed: failures.is_empty() && secs < tol.c2_seconds,
        measured: format!(
            "{checked} (group, n, g) cases on Z^2, lamplighter, F_2 (lazy walks), {} mismatches {:?}, {secs:.1}s",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
        tolerance: format!("rational equality, runtime < {} s", tol.c2_seconds),
        digest_input: Some(text),
    })
}

fn c3(seed: u64, tol: &Tolerances, start: Instant) -> Result<Partial> {
    let b = catalog_entry("Z2-abelianization")?.cocycle;
    let r = b.spectral_report()?;
    let h = 0.5f64.sqrt();
    let mut sig = r.sigmas.clone();
    sig.sort_by(f64::total_cmp);
    let spectral_ok = (r.beta - 0.5).abs() <= tol.c3_spectral
        && r.theta.abs() <= tol.c3_spectral
        && sig.len() == 2
        && sig.iter().all(|s| (s - h).abs() <= tol.c3_spectral);
    let mc = b.beta_monte_carlo(400, 100_000, seed)?;
    let mc_ok = (mc.beta.mean - 0.5).abs() <= tol.c3_mc;
    let secs = start.elapsed().as_secs_f64();
    Ok(Partial {
        passed: spectral_ok && mc_ok && secs < tol.c3_seconds,
        measured: format!(
            "beta = {:.12}, theta = {:.1e}, sigma = {:?}; MC n=400, 1e5 trials: {:.4} +- {:.4}; {secs:.1}s",
            r.beta, r.theta, sig, mc.beta.mean, mc.beta.se
        ),
        tolerance: format!(
            "spectral within {:e}; MC in 0.5 +- {}; runtime < {} s",
            tol.c3_spectral, tol.c3_mc, tol.c3_seconds
        ),
        digest_input: None,
    })
}

fn c4(tol: &Tolerances) -> Result<Partial> {
    let mut parts = Vec::new();
    let mut ok = true;
    for entry in catalog()? {
        let r = entry.cocycle.spectral_report()?;
        if r.pw.norm() <= 1e-12 {
            parts.push(format!("{}: Pw = 0", entry.name));
            continue;
        }
        let bound = r.dimension_bound().ok_or_else(|| Error::InvalidParameter(format!("{}: no eigenspace", entry.name)))?;
        let mut good = r.beta <= bound + tol.c4_slack;
        if let Some(d) = entry.name.strip_prefix('Z').and_then(|s| s.strip_suffix("-abelianization")) {
            let d: f64 = d.parse().map_err(|_| Error::InvalidParameter(entry.name.into()))?;
            good &= (r.beta - 1.0 / d).abs() <= tol.c4_equality && (r.beta - bound).abs() <= tol.c4_equality;
        }
        ok &= good;
        parts.push(format!("{}: beta {:.6} <= {:.6}", entry.name, r.beta, bound));
    }
    Ok(Partial {
        passed: ok,
        measured: parts.join("; "),
        tolerance: format!("beta <= 1/min rank + {:e}; Z^d equality within {:e}", tol.c4_slack, tol.c4_equality),
        digest_input: None,
    })
}

fn moment_estimate(xs: &[f64], k: i32) -> Result<Estimate> {
    let ys: Vec<f64> = xs.iter().map(|&x| f64::powi(x, k)).collect();
    Estimate::from_samples(&ys)
}

fn c5(seed: u64, tol: &Tolerances) -> Result<Partial> {
    let b = catalog_entry("Z2-abelianization")?.cocycle;
    let chi = b.spectral_report()?.chi_mixture()?;
    let xs = b.normalized_norm_samples(1000, 100_000, seed)?;
    let ks = chi.ks_distance(&xs)?;
    let reference = chi.samples(100_000, seed ^ 0x5a5a);
    let mut ok = ks.statistic < tol.c5_ks;
    let mut parts = vec![format!("KS = {:.4} ({:?} reference)", ks.statistic, ks.method)];
    for k in [2, 4] {
        let a = moment_estimate(&xs, k)?;
        let r = moment_estimate(&reference, k)?;
        let se = (a.se * a.se + r.se * r.se).sqrt();
        let z = (a.mean - r.mean).abs() / se;
        ok &= z < tol.c5_se;
        parts.push(format!(
            "E X^{k}: walk {:.4}, chi sample {:.4}, exact {:.4}, {z:.2} SE",
            a.mean,
            r.mean,
            chi.moment(k as u32)?
        ));
    }
    Ok(Partial {
        passed: ok,
        measured: parts.join("; "),
        tolerance: format!("KS < {}; moments within {} combined SE", tol.c5_ks, tol.c5_se),
        digest_input: None,
    })
}

fn c6(seed: u64, tol: &Tolerances) -> Result<Partial> {
    let b = catalog_entry("Z2-abelianization")?.cocycle;
    let mut ok = (b.l2_norm_sq() - 1.0).abs() < 1e-12;
    let mut parts = Vec::new();
    for n in [50, 200, 800] {
        let est = b.beta_monte_carlo(n, 100_000, seed)?.martingale;
        let z = (est.mean - 1.0).abs() / est.se;
        ok &= z < tol.c6_se;
        parts.push(format!("n={n}: {:.4} ({z:.2} SE)", est.mean));
    }
    Ok(Partial {
        passed: ok,
        measured: parts.join("; "),
        tolerance: format!("|E|b|^2/n - 1| < {} SE", tol.c6_se),
        digest_input: None,
    })
}

fn c7(seed: u64, tol: &Tolerances) -> Result<Partial> {
    let b = catalog_entry("Z2-abelianization")?.cocycle;
    let prof = b.moment_profile(400, 100_000, seed, 3)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2u32, 3] {
        let ceiling = oracle::odd_double_factorial(d);
        let v = prof[d as usize - 1].mean;
        ok &= v <= ceiling + tol.c7_slack;
        parts.push(format!("d={d}: {v:.4} vs (2d-1)!! = {ceiling}"));
    }
    Ok(Partial {
        passed: ok,
        measured: parts.join("; "),
        tolerance: format!("<= (2d-1)!! + {}", tol.c7_slack),
        digest_input: None,
    })
}

/// `gamma(n) = mu^n(e) - mu^{n+1}(e)` for `n` in `lo..=hi + 1`.
fn gammas(eng: &mut PowerEngine<Rational>, lo: usize, hi: usize) -> Result<Vec<Rational>> {
    let e = eng.group().identity();
    let ret: Vec<Rational> = (lo..=hi + 2).map(|n| eng.mass_at(n, &e).map(|b| b.value)).collect::<Result<_>>()?;
    Ok(ret.windows(2).map(|w| w[0].clone() - w[1].clone()).collect())
}

fn c8(tol: &Tolerances) -> Result<Partial> {
    let slack = Rational::from_float(tol.c8_slack).unwrap_or_default();
    let mut z2 = engine::<Rational>("Z^d:d=2", "lazy")?;
    let g = gammas(&mut z2, 2, 30)?;
    let decreasing = g[..=29].windows(2).all(|w| w[1] < w[0]);
    let ratios: Vec<Rational> = g.windows(2).map(|w| w[1].clone() / w[0].clone()).collect();
    let monotone = ratios[..=28].windows(2).all(|w| w[1].clone() + slack.clone() >= w[0]);
    let mut f2 = engine::<Rational>("F:k=2", "lazy")?;
    let gf = gammas(&mut f2, 2, 30)?;
    let free_ratios: Vec<f64> = gf.windows(2).map(|w| (w[1].clone() / w[0].clone()).to_f64()).collect();
    let free_max = free_ratios[..=28].iter().copied().fold(0.0, f64::max);
    let text: String = g.iter().chain(&gf).map(|x| x.to_text() + ";").collect();
    Ok(Partial {
        passed: decreasing && monotone && free_max < tol.c8_free_ratio,
        measured: format!(
            "Z^2: gamma decreasing = {decreasing}, ratio nondecreasing = {monotone}, ratio {:.6} -> {:.6}; F_2: max ratio {free_max:.6}",
            ratios[0].to_f64(),
            ratios[28].to_f64()
        ),
        tolerance: format!("rational slack {:e}; F_2 ratio < {}", tol.c8_slack, tol.c8_free_ratio),
        digest_input: Some(text),
    })
}

fn c9(tol: &Tolerances) -> Result<Partial> {
    let target = oracle::free_group_spectral_radius(2, 0.5);
    let mut f2 = engine::<Rational>("F:k=2", "lazy")?;
    let rf = kesten_diagnostic(&mut f2, 1..=30)?;
    let mut z2 = engine::<Rational>("Z^d:d=2", "lazy")?;
    let rz = kesten_diagnostic(&mut z2, 1..=40)?;
    let text: String = rf.rows.iter().chain(&rz.rows).filter_map(|r| r.return_exact.clone()).map(|s| s + ";").collect();
    let nan = f64::NAN;
    Ok(Partial {
        passed: (rf.final_raw - target).abs() < tol.c9_free && rz.final_raw > tol.c9_abelian,
        measured: format!(
            "F_2 n=30: mu^60(e)^(1/60) = {:.6} vs oracle {target:.6}, |diff| = {:.4} (polynomial-corrected fit {:.6}); Z^2 n=40: mu^80(e)^(1/80) = {:.6} (corrected fit {:.6})",
            rf.final_raw,
            (rf.final_raw - target).abs(),
            rf.final_corrected.unwrap_or(nan),
            rz.final_raw,
            rz.final_corrected.unwrap_or(nan)
        ),
        tolerance: format!("F_2 within {} of the oracle; Z^2 above {}", tol.c9_free, tol.c9_abelian),
        digest_input: Some(text),
    })
}

fn c10(tol: &Tolerances, start: Instant) -> Result<Partial> {
    let mut eng = engine::<Rational>("product:Z^d:d=2|F:k=2", "product:lazy|lazy")?;
    let g = eng.group().clone();
    let gens = g.generators();
    let els: Vec<Element> = gens.elements().to_vec();
    let ns: Vec<usize> = (6..=30).collect();
    let prof = thin_profile(&mut eng, NormP::Finite(2.0), 1.0, &els, &ns)?;
    let (first, last) = (&prof.rows[0], &prof.rows[prof.rows.len() - 1]);
    let mut ok = true;
    let mut parts = Vec::new();
    let mut best_free = 0.0f64;
    let mut worst = 0.0f64;
    for (i, name) in gens.names().iter().enumerate() {
        if name.starts_with("1:") {
            let ratio = last.scores[i] / first.scores[i];
            ok &= ratio <= tol.c10_factor;
            worst = worst.max(ratio);
            parts.push(format!("{name} {:.4} -> {:.4}", first.scores[i], last.scores[i]));
        } else {
            let low = prof.rows.iter().map(|r| r.scores[i]).fold(f64::INFINITY, f64::min);
            best_free = best_free.max(low);
        }
    }
    ok &= best_free > tol.c10_floor;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < tol.c10_seconds;
    let text: String = prof.rows.iter().flat_map(|r| r.scores.iter().map(|s| format!("{:016x};", s.to_bits()))).collect();
    Ok(Partial {
        passed: ok,
        measured: format!(
            "product lazy x lazy, Z^2 generators at n = 6 -> 30: {}, worst ratio {worst:.4}; min F_2 score over n in [6, 30]: {best_free:.4}; {secs:.1}s",
            parts.join(", ")
        ),
        tolerance: format!(
            "Z^2 score at n=30 <= {} x score at n=6; some F_2 score > {} throughout; runtime < {} s",
            tol.c10_factor, tol.c10_floor, tol.c10_seconds
        ),
        digest_input: Some(text),
    })
}

fn c11(seed: u64) -> Result<Partial> {
    let grig = group("grigorchuk")?;
    let mu = SparseMeasure::<f64>::srw(grig);
    let step = Truncation::eps(1e-6);
    let a = concentration_experiment(&mu, step, 2, 20, 20_000, seed)?;
    let b = concentration_experiment(&mu, step, 4, 40, 20_000, seed)?;
    let decreasing = b.exact_deviation_interval.hi < a.exact_deviation_interval.lo;
    let z = group("Z^d:d=1")?;
    let zmu = SparseMeasure::<f64>::srw(z);
    let za = concentration_experiment(&zmu, Truncation::exact(), 2, 20, 20_000, seed)?;
    let zb = concentration_experiment(&zmu, Truncation::exact(), 4, 40, 20_000, seed)?;
    let control = zb.exact_deviation >= za.exact_deviation;
    let show = |s: &crate::empirical::ConcentrationStat| {
        format!(
            "(m={}, n={}): {:.4} in [{:.4}, {:.4}], MC {:.4} +- {:.4}",
            s.m, s.n, s.exact_deviation, s.exact_deviation_interval.lo, s.exact_deviation_interval.hi, s.deviation.mean, s.deviation.se
        )
    };
    Ok(Partial {
        passed: decreasing && control,
        measured: format!(
            "Grigorchuk E|R-1| {} -> {}; Z control {} -> {}",
            show(&a),
            show(&b),
            show(&za),
            show(&zb)
        ),
        tolerance: "direction only: Grigorchuk intervals strictly decreasing in m, Z not decreasing".into(),
        digest_input: None,
    })
}

fn element_order(g: &Group, x: &Element, max: usize) -> Option<usize> {
    let mut y = x.clone();
    for k in 1..=max {
        if y == g.identity() {
            return Some(k);
        }
        y = g.mul(&y, x);
    }
    None
}

fn c12() -> Result<Partial> {
    let g = group("grigorchuk")?;
    let e = g.identity();
    let relators = g.relators();
    let relators_ok = relators.iter().all(|w| g.eval_word(w) == e);
    let act = TreeAction::new(12);
    let size = 1u32 << 12;
    let mut checked = 0usize;
    let mut disagreements = 0usize;
    let mut stack: Vec<(Vec<u8>, Vec<u32>)> = vec![(Vec::new(), (0..size).collect())];
    while let Some((word, perm)) = stack.pop() {
        let oracle_id = oracle::is_identity_perm(&perm);
        let w = Word(word.iter().map(|&l| l as usize).collect());
        let engine_id = g.grigorchuk_is_identity(&w).unwrap_or(!oracle_id);
        if engine_id != oracle_id || (g.eval_word(&w) == e) != oracle_id {
            disagreements += 1;
        }
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
    let ad = g.parse_element("ad")?;
    let oracle_order = act.order(&[0, 3], 64);
    let order = element_order(&g, &ad, 64);
    let ok = relators_ok && disagreements == 0 && oracle_order.is_some() && order == oracle_order;
    Ok(Partial {
        passed: ok,
        measured: format!(
            "{} relators trivial = {relators_ok}; {checked} words of length <= 8, {disagreements} disagreements with the depth-12 action; order(ad) = {order:?}, oracle {oracle_order:?}",
            relators.len()
        ),
        tolerance: "exact agreement".into(),
        digest_input: Some(format!("{relators_ok};{checked};{disagreements};{order:?}")),
    })
}

fn c13(seed: u64, tol: &Tolerances) -> Result<Partial> {
    let first = acceptance_suite_with(seed, tol, &EXACT_MODE);
    let second = acceptance_suite_with(seed, tol, &EXACT_MODE);
    let mut same = true;
    let mut parts = Vec::new();
    for (a, b) in first.results.iter().zip(&second.results) {
        let eq = a.exact_digest.is_some() && a.exact_digest == b.exact_digest && a.passed == b.passed;
        same &= eq;
        parts.push(format!("{}: {}", a.id, if eq { "identical" } else { "differs" }));
    }
    Ok(Partial {
        passed: same,
        measured: format!("two runs of criteria {EXACT_MODE:?}: {}", parts.join(", ")),
        tolerance: "bitwise identical exact-mode records".into(),
        digest_input: None,
    })
}
