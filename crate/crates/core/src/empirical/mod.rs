//! Finite-`n` quantities built from convolution powers: the empirical cocycle
//! norms `|b_n(g)|^2`, the concentration statistic of normalized return gaps,
//! the two sufficient conditions for `H_FD`, thin-subgroup scores and a
//! spectral radius diagnostic.
//!
//! Limits along ultrafilters are replaced by tables over explicit `n` with a
//! trend classification. The thresholds below are policy of this crate.


use std::ops::RangeInclusive;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Element;
use crate::measure::{convolve_at, Bounded, Interval, NormP, PowerEngine, SparseMeasure, SparsePowers, Truncation, Weight};
use crate::walk::{trial_rng, Estimate, StepSampler};

/// Log-log slope below which a score sequence counts as vanishing.
pub const VANISHING_SLOPE: f64 = -0.2;
/// Scores above this at every `n` count as bounded away from zero.
pub const BOUNDED_AWAY: f64 = 0.5;
/// Ball masses above this at every `n` count as bounded away from zero.
pub const MASS_FLOOR: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Vanishing,
    BoundedAway,
    Inconclusive,
}

impl std::fmt::Display for Trend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trend::Vanishing => "vanishing",
            Trend::BoundedAway => "bounded-away",
            Trend::Inconclusive => "inconclusive",
        })
    }
}

/// Least-squares slope of `ln y` against `ln n` over positive `y`.
pub fn log_log_slope(ns: &[usize], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(ys)
        .filter(|(n, y)| **n > 0 && **y > 0.0)
        .map(|(n, y)| ((*n as f64).ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

fn classify(ns: &[usize], ys: &[f64], floor: f64) -> (Trend, Option<f64>) {
    let slope = log_log_slope(ns, ys);
    if ys.iter().all(|&y| y == 0.0) {
        return (Trend::Vanishing, slope);
    }
    if ys.iter().all(|&y| y > floor) {
        return (Trend::BoundedAway, slope);
    }
    match slope {
        Some(s) if s < VANISHING_SLOPE => (Trend::Vanishing, slope),
        _ => (Trend::Inconclusive, slope),
    }
}

/// Trend of a ball-mass sequence, with `MASS_FLOOR` as the bounded-away level.
pub fn classify_masses(ns: &[usize], ys: &[f64]) -> (Trend, Option<f64>) {
    classify(ns, ys, MASS_FLOOR)
}

// ---------------------------------------------------------------------------
// b_n

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnValue {
    pub g: String,
    pub value: f64,
    /// Exact value as text on the exact backend.
    pub exact: Option<String>,
    pub interval: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnReport {
    pub n: usize,
    pub entries: Vec<BnValue>,
}

fn exact_text<W: Weight>(w: &W) -> Option<String> {
    (W::BACKEND == crate::measure::Backend::Exact).then(|| w.to_text())
}

/// `|b_n(g)|^2 = (mu^n(e) - mu^n(g)) / (mu^n(e) - mu^{n+1}(e))`.
pub fn bn_norm_sq<W: Weight>(engine: &mut PowerEngine<W>, n: usize, g: &Element) -> Result<(W, Interval)> {
    engine.require_aperiodic()?;
    let e = engine.group().identity();
    let pe = engine.mass_at(n, &e)?;
    let pe1 = engine.mass_at(n + 1, &e)?;
    let pg = engine.mass_at(n, g)?;
    let (den, den_iv) = pe.minus(&pe1);
    if den.is_zero() || !den.to_f64().is_normal() {
        return Err(Error::VanishingDenominator("b_n denominator mu^n(e) - mu^{n+1}(e)"));
    }
    let (num, num_iv) = pe.minus(&pg);
    Ok((num.div(&den), num_iv.div(&den_iv)))
}

pub fn bn_report<W: Weight>(engine: &mut PowerEngine<W>, n: usize, elements: &[Element]) -> Result<BnReport> {
    let entries = elements
        .iter()
        .map(|g| {
            let (v, iv) = bn_norm_sq(engine, n, g)?;
            Ok(BnValue {
                g: g.to_string(),
                value: v.to_f64(),
                exact: exact_text(&v),
                interval: iv,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BnReport { n, entries })
}

/// `|b_{2k}(g)|^2` through `2 (mu^{2k}(e) - mu^{2k}(g)) = |g.mu^k - mu^k|_2^2`
/// and `mu^{2k}(e) = |mu^k|_2^2`, for symmetric `mu`.
pub fn bn_norm_sq_l2<W: Weight>(powers: &mut SparsePowers<W>, k: usize, g: &Element) -> Result<W> {
    if !powers.measure().is_symmetric() {
        return Err(Error::InvalidParameter("the l2 route needs a symmetric measure".into()));
    }
    powers.power(k + 1)?;
    let mk = powers.power(k)?.clone();
    let mk1 = powers.power(k + 1)?;
    let e = mk.group().identity();
    let shifted = mk.shift_diff(g)?.lp_norm_pow(2);
    let ret = mk.lp_norm_pow(2);
    let ret1 = convolve_at(mk1, &mk, &e)?;
    let den = ret.sub(&ret1);
    if den.is_zero() {
        return Err(Error::VanishingDenominator("b_n denominator mu^n(e) - mu^{n+1}(e)"));
    }
    Ok(shifted.div(&den.mul(&W::from_ratio(2, 1))))
}

// ---------------------------------------------------------------------------
// concentration of normalized return gaps

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationStat {
    pub group: String,
    pub m: usize,
    pub n: usize,
    /// True when the group has no infinite virtually abelian quotient.
    pub headline: bool,
    /// `alpha(m, n) = mu^{2n}(e) - mu^{2n+2m}(e)`.
    pub alpha: f64,
    pub alpha_exact: Option<String>,
    pub alpha_interval: Interval,
    /// `|sum_g mu^{2m}(g) (mu^{2n}(e) - mu^{2n}(g)) - alpha|`; 0 exactly on
    /// the exact backend.
    pub average_residual: f64,
    pub average_identity_exact: Option<bool>,
    /// `sum_g mu^{2m}(g) |R(g) - 1|` over the whole support of `mu^{2m}`.
    pub exact_deviation: f64,
    pub exact_deviation_interval: Interval,
    /// Monte Carlo `E|R - 1|` with `g = X_{2m}` sampled by walks.
    pub deviation: Estimate,
    pub support_2m: usize,
    pub route: String,
}

/// `R(g) = (mu^{2n}(e) - mu^{2n}(g)) / alpha(m, n)` for `g ~ mu^{2m}`.
pub fn concentration_experiment<W: Weight>(
    mu: &SparseMeasure<W>,
    step: Truncation,
    m: usize,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<ConcentrationStat> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let group = mu.group().clone();
    let headline = !group.has_infinite_virtually_abelian_quotient();
    if !headline {
        log::warn!(
            "{} has an infinite virtually abelian quotient; concentration is not expected",
            group.id()
        );
    }
    let mut small = SparsePowers::new(mu.clone(), Truncation::exact());
    let law = small.power(2 * m)?.clone();
    let mut engine = PowerEngine::for_measure(mu, step);
    let e = group.identity();
    let ret = engine.mass_at(2 * n, &e)?;
    let far = engine.mass_at(2 * n + 2 * m, &e)?;
    let (alpha, alpha_iv) = ret.minus(&far);
    if alpha.is_zero() || !alpha.to_f64().is_normal() {
        return Err(Error::VanishingDenominator("alpha(m, n)"));
    }

    let support: Vec<(Element, W)> = law.sorted_entries().into_iter().map(|(g, w)| (g.clone(), w.clone())).collect();
    // symmetric mu gives mu^{2n}(g) = mu^{2n}(g^-1)
    let symmetric = mu.is_symmetric();
    let mut seen: FxHashMap<Element, (W, Interval)> = FxHashMap::default();
    let mut gaps: Vec<(W, Interval)> = Vec::with_capacity(support.len());
    for (g, _) in &support {
        let gap = match symmetric.then(|| seen.get(&group.inverse(g))).flatten() {
            Some(hit) => hit.clone(),
            None => {
                let v: Bounded<W> = engine.mass_at(2 * n, g)?;
                ret.minus(&v)
            }
        };
        if symmetric {
            seen.insert(g.clone(), gap.clone());
        }
        gaps.push(gap);
    }
    let mut average = W::zero();
    let mut dev = 0.0;
    let mut dev_iv = Interval::point(0.0);
    let mut table: FxHashMap<Element, f64> = FxHashMap::default();
    let a = alpha.to_f64();
    for ((g, w), (gap, gap_iv)) in support.iter().zip(&gaps) {
        average.add_assign(&w.mul(gap));
        let r = gap.to_f64() / a;
        let r_iv = gap_iv.div(&alpha_iv);
        let d_iv = if r_iv.contains(1.0) {
            Interval::new(0.0, (r_iv.lo - 1.0).abs().max((r_iv.hi - 1.0).abs()))
        } else {
            r_iv.map_monotone(|x| (x - 1.0).abs())
        };
        let wf = w.to_f64();
        dev += wf * (r - 1.0).abs();
        dev_iv = dev_iv.add(&d_iv.scale(wf));
        table.insert(g.clone(), r);
    }
    let residual = average.sub(&alpha);
    let average_identity_exact = (W::BACKEND == crate::measure::Backend::Exact).then(|| residual.is_zero());

    let sampler = StepSampler::new(mu)?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, "concentration", i);
            let mut x = group.identity();
            for _ in 0..2 * m {
                x = group.mul(&x, sampler.draw(&mut rng));
            }
            (table[&x] - 1.0).abs()
        })
        .collect();
    Ok(ConcentrationStat {
        group: group.id().to_string(),
        m,
        n,
        headline,
        alpha: a,
        alpha_exact: exact_text(&alpha),
        alpha_interval: alpha_iv,
        average_residual: residual.to_f64().abs(),
        average_identity_exact,
        exact_deviation: dev,
        exact_deviation_interval: dev_iv,
        deviation: Estimate::from_samples(&samples)?,
        support_2m: support.len(),
        route: engine.route().to_string(),
    })
}

// ---------------------------------------------------------------------------
// H_FD conditions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HfdVerdict {
    EvidenceFor,
    NoEvidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hfd1Row {
    pub n: usize,
    pub m: usize,
    pub value: f64,
    pub interval: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hfd1Report {
    pub delta: f64,
    pub rows: Vec<Hfd1Row>,
    pub min: f64,
    pub margin: f64,
    pub verdict: HfdVerdict,
}

/// `|mu^n - mu^{ceil((1+delta) n)}|_1` over `n_range`; evidence for the
/// condition iff the minimum is below `2 - margin`, `margin = 2 ledger + 0.01`.
pub fn hfd_condition1<W: Weight>(
    engine: &mut PowerEngine<W>,
    delta: f64,
    n_range: RangeInclusive<usize>,
) -> Result<Hfd1Report> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be > 0")));
    }
    let mut rows = Vec::new();
    let mut ledger = 0.0f64;
    for n in n_range {
        let m = ((1.0 + delta) * n as f64).ceil() as usize;
        let (value, slack) = match engine {
            PowerEngine::Radial { walk, .. } => (walk.l1_distance(n, m).to_f64(), 0.0),
            _ => {
                let a = engine.materialize(n)?;
                let b = engine.materialize(m)?;
                let d = a.ledger().dropped_mass + b.ledger().dropped_mass;
                (a.difference(&b)?.lp_norm(NormP::Finite(1.0))?, d)
            }
        };
        ledger = ledger.max(slack);
        rows.push(Hfd1Row {
            n,
            m,
            value,
            interval: Interval::new(value - slack, value + slack),
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("empty n range".into()));
    }
    let min = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let margin = 2.0 * ledger + 0.01;
    Ok(Hfd1Report {
        delta,
        rows,
        min,
        margin,
        verdict: if min < 2.0 - margin {
            HfdVerdict::EvidenceFor
        } else {
            HfdVerdict::NoEvidence
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hfd2Row {
    pub c: f64,
    pub n: usize,
    pub radius: u32,
    pub mass: f64,
    pub interval: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hfd2Trend {
    pub c: f64,
    pub trend: Trend,
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hfd2Report {
    pub rows: Vec<Hfd2Row>,
    pub trends: Vec<Hfd2Trend>,
}

/// `mu^n(B(c sqrt n))` per `(c, n)`.
pub fn hfd_condition2<W: Weight>(engine: &mut PowerEngine<W>, cs: &[f64], n_range: RangeInclusive<usize>) -> Result<Hfd2Report> {
    if let Some(c) = cs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter(format!("c = {c} must be > 0")));
    }
    let ns: Vec<usize> = n_range.collect();
    let mut rows = Vec::new();
    let mut trends = Vec::new();
    for &c in cs {
        let mut masses = Vec::new();
        for &n in &ns {
            let radius = (c * (n as f64).sqrt()).floor() as u32;
            let (mass, slack) = match engine {
                PowerEngine::Radial { walk, .. } => (walk.ball_mass(n, radius as usize).to_f64(), 0.0),
                _ => {
                    let law = engine.materialize(n)?;
                    (law.ball_mass(radius)?.to_f64(), law.ledger().dropped_mass)
                }
            };
            masses.push(mass);
            rows.push(Hfd2Row {
                c,
                n,
                radius,
                mass,
                interval: Interval::new(mass, mass + slack),
            });
        }
        let (trend, slope) = classify(&ns, &masses, MASS_FLOOR);
        trends.push(Hfd2Trend { c, trend, slope });
    }
    Ok(Hfd2Report { rows, trends })
}

// ---------------------------------------------------------------------------
// thin subgroups

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinRow {
    pub n: usize,
    /// `alpha^{p,q}(n) = max_{s in S} |F - sF|_p`, `F = (mu^n)^q`.
    pub alpha: f64,
    pub alpha_interval: Interval,
    pub scores: Vec<f64>,
    pub intervals: Vec<Interval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinTrend {
    pub element: String,
    pub trend: Trend,
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinProfile {
    pub p: String,
    pub q: f64,
    pub route: String,
    pub elements: Vec<String>,
    pub rows: Vec<ThinRow>,
    pub trends: Vec<ThinTrend>,
    #[serde(skip)]
    raw_elements: Vec<Element>,
}

impl ThinProfile {
    pub fn score(&self, n: usize, element: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.scores[element])
    }

    /// Largest `rho(gh) - rho(g) - rho(h) - interval slack` over pairs whose
    /// product is also profiled; `<= 0` when the triangle inequality holds.
    pub fn triangle_defect(&self, group: &crate::group::Group) -> Option<f64> {
        let els = &self.raw_elements;
        let mut worst: Option<f64> = None;
        for (i, g) in els.iter().enumerate() {
            for (j, h) in els.iter().enumerate() {
                let gh = group.mul(g, h);
                let Some(k) = els.iter().position(|x| *x == gh) else { continue };
                for r in &self.rows {
                    let slack = r.intervals[k].width() + r.intervals[i].width() + r.intervals[j].width();
                    let d = r.scores[k] - r.scores[i] - r.scores[j] - slack;
                    worst = Some(worst.map_or(d, |w: f64| w.max(d)));
                }
            }
        }
        worst
    }
}

/// Scores `rho(g, n) = |F - gF|_p / alpha^{p,q}(n)` for `F = (mu^n)^q`.
///
/// For `p = 2, q = 1` the norms come from return probabilities,
/// `|F - gF|_2^2 = 2 (mu^{2n}(e) - mu^{2n}(g))`, which works on every engine
/// route and is exact on the exact backend. Other `(p, q)` materialize `mu^n`.
pub fn thin_profile<W: Weight>(
    engine: &mut PowerEngine<W>,
    p: NormP,
    q: f64,
    elements: &[Element],
    ns: &[usize],
) -> Result<ThinProfile> {
    if let NormP::Finite(x) = p {
        if !(x >= 1.0) {
            return Err(Error::InvalidExponent(x));
        }
    }
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q = {q} must be >= 0")));
    }
    let group = engine.group().clone();
    for g in elements {
        if !group.contains(g) {
            return Err(Error::GroupMismatch {
                expected: group.id().to_string(),
                found: g.to_string(),
            });
        }
    }
    let gens = group.generators().elements().to_vec();
    let l2 = p == NormP::Finite(2.0) && q == 1.0;
    if l2 && !engine.is_symmetric() {
        return Err(Error::InvalidParameter("thin scores need a symmetric measure".into()));
    }
    let mut rows = Vec::new();
    for &n in ns {
        // (norm, interval) per generator then per element
        let norms = |targets: &[Element], engine: &mut PowerEngine<W>| -> Result<Vec<(f64, Interval)>> {
            if l2 {
                let e = group.identity();
                let ret = engine.mass_at(2 * n, &e)?;
                targets
                    .iter()
                    .map(|g| {
                        let v = engine.mass_at(2 * n, g)?;
                        let (d, iv) = ret.minus(&v);
                        let two = W::from_ratio(2, 1);
                        let val = d.mul(&two).to_f64().max(0.0).sqrt();
                        Ok((val, iv.scale(2.0).map_monotone(|x| x.max(0.0).sqrt())))
                    })
                    .collect()
            } else {
                let law = engine.materialize(n)?;
                let dropped = law.ledger().dropped_mass;
                let f = law.pointwise_pow(q)?;
                targets
                    .iter()
                    .map(|g| {
                        let v = f.shift_diff(g)?.lp_norm(p)?;
                        let iv = if dropped == 0.0 {
                            Interval::point(v)
                        } else if q == 1.0 {
                            Interval::new((v - 2.0 * dropped).max(0.0), v + 2.0 * dropped)
                        } else {
                            Interval::new(0.0, f64::INFINITY)
                        };
                        Ok((v, iv))
                    })
                    .collect()
            }
        };
        let gen_norms = norms(&gens, engine)?;
        let alpha = gen_norms.iter().map(|x| x.0).fold(0.0, f64::max);
        let alpha_iv = Interval::new(
            gen_norms.iter().map(|x| x.1.lo).fold(0.0, f64::max),
            gen_norms.iter().map(|x| x.1.hi).fold(0.0, f64::max),
        );
        if alpha == 0.0 {
            return Err(Error::FiniteGroup);
        }
        let el_norms = norms(elements, engine)?;
        rows.push(ThinRow {
            n,
            alpha,
            alpha_interval: alpha_iv,
            scores: el_norms.iter().map(|x| x.0 / alpha).collect(),
            intervals: el_norms.iter().map(|x| x.1.div(&alpha_iv)).collect(),
        });
    }
    let trends = elements
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let ys: Vec<f64> = rows.iter().map(|r| r.scores[i]).collect();
            let (trend, slope) = classify(ns, &ys, BOUNDED_AWAY);
            ThinTrend {
                element: g.to_string(),
                trend,
                slope,
            }
        })
        .collect();
    Ok(ThinProfile {
        p: p.to_string(),
        q,
        route: if l2 { "return-probability".into() } else { "materialized".into() },
        elements: elements.iter().map(|g| g.to_string()).collect(),
        rows,
        trends,
        raw_elements: elements.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// spectral radius

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KestenVerdict {
    AmenableConsistent,
    BoundedBelowOne,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KestenRow {
    pub n: usize,
    /// `mu^{2n}(e)`.
    pub return_prob: f64,
    pub return_exact: Option<String>,
    pub return_interval: Interval,
    /// `mu^{2n}(e)^{1/2n}`.
    pub raw: f64,
    /// `rho` from fitting `mu^{2n}(e) ~ C rho^{2n} n^{-a}` to three
    /// consecutive even times.
    pub corrected: Option<f64>,
    pub exponent: Option<f64>,
    /// `gamma(n+1) / gamma(n)` with `gamma(n) = mu^n(e) - mu^{n+1}(e)`.
    pub gamma_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KestenReport {
    pub rows: Vec<KestenRow>,
    pub final_raw: f64,
    pub final_corrected: Option<f64>,
    pub verdict: KestenVerdict,
}

/// Corrected estimates at or above this are amenable-consistent.
pub const KESTEN_AMENABLE: f64 = 0.99;
/// Corrected estimates at or below this are bounded below one.
pub const KESTEN_BELOW: f64 = 0.98;

pub fn kesten_diagnostic<W: Weight>(engine: &mut PowerEngine<W>, n_range: RangeInclusive<usize>) -> Result<KestenReport> {
    if !engine.is_symmetric() {
        return Err(Error::InvalidParameter("the spectral radius diagnostic needs a symmetric measure".into()));
    }
    let (lo, hi) = n_range.into_inner();
    if lo == 0 || hi < lo {
        return Err(Error::InvalidParameter(format!("n range {lo}..={hi} must be nonempty and start at 1")));
    }
    let e = engine.group().identity();
    let mut ret: Vec<Bounded<W>> = Vec::new();
    for k in (lo - 1)..=(hi + 1) {
        ret.push(engine.mass_at(2 * k, &e)?);
    }
    let periodic = engine.is_periodic();
    let mut rows = Vec::new();
    for n in lo..=hi {
        let i = n - (lo - 1);
        let p = ret[i].value.to_f64();
        let raw = p.powf(1.0 / (2 * n) as f64);
        let (mut corrected, mut exponent) = (None, None);
        if n >= 2 {
            let r0 = ret[i].value.div(&ret[i - 1].value).to_f64().ln();
            let r1 = ret[i + 1].value.div(&ret[i].value).to_f64().ln();
            let (l0, l1) = ((1.0 + 1.0 / (n - 1) as f64).ln(), (1.0 + 1.0 / n as f64).ln());
            let a = (r1 - r0) / (l0 - l1);
            exponent = Some(a);
            corrected = Some((0.5 * (r1 + a * l1)).exp());
        }
        let gamma_ratio = if periodic {
            None
        } else {
            let g0 = engine.mass_at(n, &e)?.value.sub(&engine.mass_at(n + 1, &e)?.value);
            let g1 = engine.mass_at(n + 1, &e)?.value.sub(&engine.mass_at(n + 2, &e)?.value);
            (!g0.is_zero()).then(|| g1.div(&g0).to_f64())
        };
        rows.push(KestenRow {
            n,
            return_prob: p,
            return_exact: exact_text(&ret[i].value),
            return_interval: ret[i].interval(),
            raw,
            corrected,
            exponent,
            gamma_ratio,
        });
    }
    let last = rows.last().expect("nonempty range");
    let final_raw = last.raw;
    let final_corrected = last.corrected;
    let verdict = match final_corrected.unwrap_or(final_raw) {
        x if x >= KESTEN_AMENABLE => KestenVerdict::AmenableConsistent,
        x if x <= KESTEN_BELOW => KestenVerdict::BoundedBelowOne,
        _ => KestenVerdict::Inconclusive,
    };
    Ok(KestenReport {
        rows,
        final_raw,
        final_corrected,
        verdict,
    })
}
