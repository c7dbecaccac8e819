//! Seeded Monte Carlo trajectories `X_n = s_1 s_2 ... s_n`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{Element, Group};
use crate::measure::{SparseMeasure, Weight};

/// Generator for trial `index` of the substream `label` under `master`.
/// The label and master seed fix the ChaCha key; the trial index selects the
/// stream, so trials can run in any order on any thread.
pub fn trial_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF sampler over the canonically sorted support of `mu`.
#[derive(Clone, Debug)]
pub struct StepSampler {
    group: Arc<Group>,
    support: Vec<Element>,
    cumulative: Vec<f64>,
}

impl StepSampler {
    pub fn new<W: Weight>(mu: &SparseMeasure<W>) -> Result<Self> {
        mu.require_probability()?;
        if mu.ledger().dropped_mass > 0.0 {
            return Err(Error::NotProbability(mu.mass().to_f64()));
        }
        let mut support = Vec::with_capacity(mu.support_len());
        let mut cumulative = Vec::with_capacity(mu.support_len());
        let mut acc = 0.0;
        for (g, w) in mu.sorted_entries() {
            acc += w.to_f64();
            support.push(g.clone());
            cumulative.push(acc);
        }
        // guard the top against rounding
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(StepSampler {
            group: mu.group().clone(),
            support,
            cumulative,
        })
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn support(&self) -> &[Element] {
        &self.support
    }

    /// Index into `support()` of one increment.
    pub fn draw_index(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|c| *c <= u)
    }

    pub fn draw(&self, rng: &mut impl Rng) -> &Element {
        &self.support[self.draw_index(rng)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub steps: Vec<Element>,
    /// `positions[k] = s_1 ... s_k`; `positions[0] = e`.
    pub positions: Vec<Element>,
}

impl Trajectory {
    pub fn endpoint(&self) -> &Element {
        self.positions.last().expect("positions start at e")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStatistics {
    pub max_length: u32,
    pub endpoint_length: u32,
    pub escape_estimate: f64,
}

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub trials: u64,
}

impl Estimate {
    /// Sample mean and standard error, summed in index order.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Estimate {
            mean,
            se: (var / n).sqrt(),
            trials: xs.len() as u64,
        })
    }

    /// Proportion with the binomial standard error.
    pub fn proportion(successes: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::EmptySample);
        }
        let p = successes as f64 / trials as f64;
        Ok(Estimate {
            mean: p,
            se: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        })
    }
}

pub fn sample_path<W: Weight>(mu: &SparseMeasure<W>, n: usize, seed: u64) -> Result<Trajectory> {
    let sampler = StepSampler::new(mu)?;
    let mut rng = trial_rng(seed, "path", 0);
    Ok(sample_with(&sampler, n, seed, &mut rng))
}

pub fn sample_with(sampler: &StepSampler, n: usize, seed: u64, rng: &mut impl Rng) -> Trajectory {
    let group = &sampler.group;
    let mut steps = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n + 1);
    positions.push(group.identity());
    for _ in 0..n {
        let s = sampler.draw(rng).clone();
        let next = group.mul(positions.last().expect("nonempty"), &s);
        steps.push(s);
        positions.push(next);
    }
    Trajectory { seed, steps, positions }
}

pub fn path_statistics(group: &Group, t: &Trajectory) -> Result<WalkStatistics> {
    let mut max_length = 0;
    for x in &t.positions {
        max_length = max_length.max(group.word_length(x)?);
    }
    let endpoint_length = group.word_length(t.endpoint())?;
    let n = t.steps.len();
    Ok(WalkStatistics {
        max_length,
        endpoint_length,
        escape_estimate: if n == 0 { 0.0 } else { endpoint_length as f64 / n as f64 },
    })
}

/// Endpoint of one trial without storing the path.
fn endpoint(sampler: &StepSampler, n: usize, rng: &mut impl Rng) -> Element {
    let group = &sampler.group;
    let mut x = group.identity();
    for _ in 0..n {
        x = group.mul(&x, sampler.draw(rng));
    }
    x
}

/// Monte Carlo estimate of `P(max_{k <= n} |X_k| < c sqrt(n))`.
pub fn cautiousness_estimate<W: Weight>(
    mu: &SparseMeasure<W>,
    n: usize,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c = {c} must be positive")));
    }
    let sampler = StepSampler::new(mu)?;
    let radius = c * (n as f64).sqrt();
    let group = sampler.group.clone();
    let hits: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, "cautious", i);
            let mut x = group.identity();
            for _ in 0..n {
                x = group.mul(&x, sampler.draw(&mut rng));
                if group.word_length(&x)? as f64 >= radius {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect();
    let mut successes = 0;
    for h in hits {
        successes += u64::from(h?);
    }
    Estimate::proportion(successes, trials)
}

/// Mean of `|X_n| / n`.
pub fn escape_rate<W: Weight>(mu: &SparseMeasure<W>, n: usize, trials: u64, seed: u64) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("escape rate needs n >= 1".into()));
    }
    let sampler = StepSampler::new(mu)?;
    let group = sampler.group.clone();
    let xs: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, "escape", i);
            let x = endpoint(&sampler, n, &mut rng);
            Ok(group.word_length(&x)? as f64 / n as f64)
        })
        .collect();
    let xs = xs.into_iter().collect::<Result<Vec<f64>>>()?;
    Estimate::from_samples(&xs)
}

/// Empirical law of `X_n` over `trials` seeded walks.
pub fn endpoint_counts<W: Weight>(
    mu: &SparseMeasure<W>,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<FxHashMap<Element, u64>> {
    let sampler = StepSampler::new(mu)?;
    let ends: Vec<Element> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, "endpoint", i);
            endpoint(&sampler, n, &mut rng)
        })
        .collect();
    let mut counts = FxHashMap::default();
    for x in ends {
        *counts.entry(x).or_insert(0) += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{convolution_power, ExactMeasure, Rational, Truncation};

    fn group(id: &str) -> Arc<Group> {
        Arc::new(Group::from_id(id).unwrap())
    }

    #[test]
    fn zero_steps_end_at_identity() {
        let g = group("F:k=2");
        let t = sample_path(&ExactMeasure::srw(g.clone()), 0, 7).unwrap();
        assert_eq!(t.endpoint(), &g.identity());
        assert!(t.steps.is_empty());
    }

    #[test]
    fn paths_are_reproducible_and_consistent() {
        let g = group("lamplighter:d=1,f=2");
        let mu = ExactMeasure::lazy_srw(g.clone());
        let a = sample_path(&mu, 200, 42).unwrap();
        let b = sample_path(&mu, 200, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_path(&mu, 200, 43).unwrap());
        for k in 1..=200 {
            assert_eq!(a.positions[k], g.mul(&a.positions[k - 1], &a.steps[k - 1]));
        }
        let s = path_statistics(&g, &a).unwrap();
        assert!(s.max_length >= s.endpoint_length);
    }

    #[test]
    fn non_probability_is_rejected() {
        let g = group("Z^d:d=1");
        let half = ExactMeasure::from_entries(g.clone(), [(g.identity(), Rational::from_ratio(1, 2))]).unwrap();
        assert!(matches!(sample_path(&half, 3, 1), Err(Error::NotProbability(_))));
    }

    #[test]
    fn line_endpoint_mean_is_centred() {
        let g = group("Z^d:d=1");
        let mu = ExactMeasure::srw(g);
        let counts = endpoint_counts(&mu, 100, 100_000, 9).unwrap();
        let mut sum = 0.0;
        for (x, c) in &counts {
            let Element::Abelian(v) = x else { unreachable!() };
            sum += v[0] as f64 * *c as f64;
        }
        let mean = sum / 100_000.0;
        // sd of X_100 is 10
        assert!(mean.abs() < 3.0 * 10.0 / 100_000f64.sqrt(), "{mean}");
    }

    #[test]
    fn empirical_law_matches_exact_law() {
        let g = group("Z^d:d=1");
        let mu = ExactMeasure::srw(g);
        let exact = convolution_power(&mu, 10, &Truncation::exact(), None).unwrap();
        let counts = endpoint_counts(&mu, 10, 100_000, 3).unwrap();
        let mut tv = 0.0;
        for (x, w) in exact.iter() {
            tv += (w.to_f64() - *counts.get(x).unwrap_or(&0) as f64 / 1e5).abs();
        }
        for (x, c) in &counts {
            if exact.get(x).is_zero() {
                tv += *c as f64 / 1e5;
            }
        }
        assert!(tv < 0.02, "{tv}");
    }

    #[test]
    fn cautiousness() {
        let z = group("Z^d:d=1");
        let mu = ExactMeasure::srw(z);
        // c sqrt(n) > n: the walk cannot get that far
        assert_eq!(cautiousness_estimate(&mu, 16, 5.0, 200, 1).unwrap().mean, 1.0);
        let p = cautiousness_estimate(&mu, 400, 3.0, 10_000, 1).unwrap();
        // reflection principle: P(max |S_k| >= 3 sqrt n) ~ 4 P(Z >= 3) ~ 0.0054
        assert!(p.mean > 0.9 && p.mean < 1.0, "{p:?}");
        let f2 = group("F:k=2");
        let p = cautiousness_estimate(&ExactMeasure::srw(f2), 400, 0.5, 2_000, 1).unwrap();
        assert_eq!(p.mean, 0.0);
    }

    #[test]
    fn escape_rates() {
        let z2 = group("Z^d:d=2");
        let e = escape_rate(&ExactMeasure::srw(z2), 10_000, 200, 5).unwrap();
        assert!(e.mean < 0.05, "{e:?}");
        // speed (k-1)/k on F_k
        for k in [2usize, 3] {
            let fk = group(&format!("F:k={k}"));
            let e = escape_rate(&ExactMeasure::srw(fk), 2_000, 400, 5).unwrap();
            let expect = (k as f64 - 1.0) / k as f64;
            assert!((e.mean - expect).abs() < 0.02, "k = {k}: {e:?}");
        }
        let f2 = group("F:k=2");
        let a = f2.parse_element("a").unwrap();
        let delta = ExactMeasure::dirac(f2, a).unwrap();
        assert_eq!(escape_rate(&delta, 50, 10, 1).unwrap().mean, 1.0);
    }

    #[test]
    fn streams_are_independent_of_scheduling() {
        let mut a = trial_rng(1, "x", 5);
        let mut b = trial_rng(1, "x", 5);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
        let mut c = trial_rng(1, "y", 5);
        let mut d = trial_rng(1, "x", 6);
        let v = trial_rng(1, "x", 5).random::<u64>();
        assert_ne!(c.random::<u64>(), v);
        assert_ne!(d.random::<u64>(), v);
    }
}
