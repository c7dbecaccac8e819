//! The law `chi(theta, sigma_k)` of `sqrt(theta^2 + sum sigma_k^2 g_k^2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

use crate::error::{Error, Result};
use crate::walk::trial_rng;

/// Sample size of the simulated reference CDF for three or more distinct sigmas.
pub const REFERENCE_SAMPLES: usize = 100_000;
const SIMPSON_INTERVALS: usize = 4000;
const TABLE_POINTS: usize = 8192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiMixture {
    theta: f64,
    sigmas: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdfMethod {
    /// No Gaussian part.
    PointMass,
    /// One distinct sigma: a scaled chi-square.
    ClosedForm,
    /// Two distinct sigmas: Simpson rule over one chi-square variable.
    Quadrature,
    /// Empirical CDF of `REFERENCE_SAMPLES` seeded draws.
    Simulation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub samples: usize,
    pub method: CdfMethod,
    /// Bound on the error of the reference CDF itself (95% DKW band for
    /// simulation).
    pub reference_error: f64,
}

/// Distinct `sigma^2` values with multiplicities.
fn groups(sigmas: &[f64]) -> Vec<(f64, usize)> {
    let mut s2: Vec<f64> = sigmas.iter().map(|s| s * s).collect();
    s2.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in s2 {
        match out.last_mut() {
            Some((u, k)) if (v - *u).abs() <= 1e-12 * v.max(1.0) => *k += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

/// Raw moments `E[Q^j]`, `j = 0..=m`, of `Q = theta2 + sum s2_k g_k^2`,
/// from the cumulants `kappa_1 = theta2 + sum s2`, `kappa_r = 2^(r-1) (r-1)! sum s2^r`.
fn q_moments(theta2: f64, s2: &[f64], m: usize) -> Vec<f64> {
    let mut kappa = vec![0.0; m + 1];
    let mut fact = 1.0;
    for (r, slot) in kappa.iter_mut().enumerate().skip(1) {
        if r > 1 {
            fact *= (r - 1) as f64;
        }
        let p: f64 = s2.iter().map(|s| s.powi(r as i32)).sum();
        *slot = 2f64.powi(r as i32 - 1) * fact * p;
    }
    if m >= 1 {
        kappa[1] += theta2;
    }
    let mut mom = vec![1.0; m + 1];
    for n in 1..=m {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 1..=n {
            if j > 1 {
                binom = binom * (n - j + 1) as f64 / (j - 1) as f64;
            }
            acc += binom * kappa[j] * mom[n - j];
        }
        mom[n] = acc;
    }
    mom
}

impl ChiMixture {
    pub fn new(theta: f64, sigmas: Vec<f64>) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta = {theta} must be finite and >= 0")));
        }
        if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(format!("sigma = {s} must be finite and > 0")));
        }
        Ok(ChiMixture { theta, sigmas })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// `theta^2 + sum sigma_k^2`.
    pub fn second_moment(&self) -> f64 {
        self.theta * self.theta + self.sigmas.iter().map(|s| s * s).sum::<f64>()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let mut q = self.theta * self.theta;
        for s in &self.sigmas {
            let g: f64 = rng.sample(StandardNormal);
            q += s * s * g * g;
        }
        q.sqrt()
    }

    /// `count` draws; draw `i` uses trial stream `i` of `seed`.
    pub fn samples(&self, count: usize, seed: u64) -> Vec<f64> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample(&mut trial_rng(seed, "chi", i)))
            .collect()
    }

    /// `E X^k` for `k <= 8`. Even `k` from cumulants; odd `k` through
    /// `Q^(-1/2) = pi^(-1/2) int_0^inf t^(-1/2) e^(-tQ) dt` and exponential tilting.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k > 8 {
            return Err(Error::InvalidParameter(format!("moment order {k} > 8")));
        }
        let theta2 = self.theta * self.theta;
        let s2: Vec<f64> = self.sigmas.iter().map(|s| s * s).collect();
        if k % 2 == 0 {
            return Ok(q_moments(theta2, &s2, k as usize / 2)[k as usize / 2]);
        }
        if s2.is_empty() {
            return Ok(self.theta.powi(k as i32));
        }
        let m = (k as usize + 1) / 2;
        let integrand = |u: f64| -> f64 {
            let t = u.exp();
            let mut log_l = -t * theta2;
            let tilted: Vec<f64> = s2
                .iter()
                .map(|s| {
                    log_l -= 0.5 * (1.0 + 2.0 * t * s).ln();
                    s / (1.0 + 2.0 * t * s)
                })
                .collect();
            let mk = q_moments(theta2, &tilted, m)[m];
            (0.5 * u + log_l).exp() * mk
        };
        let (lo, hi, n) = (-80.0, 80.0, 32_000usize);
        let h = (hi - lo) / n as f64;
        let mut acc = 0.5 * (integrand(lo) + integrand(hi));
        for i in 1..n {
            acc += integrand(lo + i as f64 * h);
        }
        Ok(acc * h / std::f64::consts::PI.sqrt())
    }

    pub fn cdf_method(&self) -> CdfMethod {
        match groups(&self.sigmas).len() {
            0 => CdfMethod::PointMass,
            1 => CdfMethod::ClosedForm,
            2 => CdfMethod::Quadrature,
            _ => CdfMethod::Simulation,
        }
    }

    /// `P(X <= x)`. For three or more distinct sigmas this is the empirical
    /// CDF of a fixed simulated reference sample.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_fn()(x)
    }

    fn cdf_fn(&self) -> Box<dyn Fn(f64) -> f64 + Send + Sync> {
        let theta2 = self.theta * self.theta;
        let theta = self.theta;
        let gs = groups(&self.sigmas);
        match gs.len() {
            0 => Box::new(move |x| if x >= theta { 1.0 } else { 0.0 }),
            1 => {
                let (s2, r) = gs[0];
                let chi = ChiSquared::new(r as f64).expect("positive dof");
                Box::new(move |x| {
                    let y = x * x - theta2;
                    if x < 0.0 || y <= 0.0 {
                        0.0
                    } else {
                        chi.cdf(y / s2)
                    }
                })
            }
            2 => {
                let ((s1, r1), (s2, r2)) = (gs[0], gs[1]);
                let a = ChiSquared::new(r1 as f64).expect("positive dof");
                let b = ChiSquared::new(r2 as f64).expect("positive dof");
                Box::new(move |x| {
                    let y = x * x - theta2;
                    if x < 0.0 || y <= 0.0 {
                        return 0.0;
                    }
                    // P(s1 A + s2 B <= y) with A = amax v^2 to tame the density at 0
                    let amax = y / s1;
                    let f = |v: f64| {
                        if v == 0.0 && r1 == 1 {
                            // limit of f_A(amax v^2) 2 amax v as v -> 0
                            let c = 2.0 * amax.sqrt() / (2.0 * std::f64::consts::PI).sqrt();
                            return c * b.cdf(y / s2);
                        }
                        if v == 0.0 {
                            return 0.0;
                        }
                        let av = amax * v * v;
                        a.pdf(av) * 2.0 * amax * v * b.cdf(((y - s1 * av) / s2).max(0.0))
                    };
                    simpson(f, 0.0, 1.0, SIMPSON_INTERVALS).clamp(0.0, 1.0)
                })
            }
            _ => {
                let mut reference = self.samples(REFERENCE_SAMPLES, 0x5eed_c0de);
                reference.sort_by(f64::total_cmp);
                Box::new(move |x| {
                    reference.partition_point(|&r| r <= x) as f64 / reference.len() as f64
                })
            }
        }
    }

    /// One-sample Kolmogorov-Smirnov statistic against this law.
    pub fn ks_distance(&self, sample: &[f64]) -> Result<KsResult> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut xs = sample.to_vec();
        xs.sort_by(f64::total_cmp);
        let method = self.cdf_method();
        let exact = self.cdf_fn();
        let cdf: Box<dyn Fn(f64) -> f64 + Send + Sync> = if method == CdfMethod::Quadrature {
            // tabulate and interpolate; the CDF is smooth here
            let (lo, hi) = (xs[0].max(0.0), xs[xs.len() - 1].max(0.0));
            let h = (hi - lo).max(1e-12) / TABLE_POINTS as f64;
            let table: Vec<f64> = (0..=TABLE_POINTS).into_par_iter().map(|i| exact(lo + i as f64 * h)).collect();
            Box::new(move |x| {
                let t = ((x - lo) / h).clamp(0.0, TABLE_POINTS as f64);
                let i = (t.floor() as usize).min(TABLE_POINTS - 1);
                let f = t - i as f64;
                table[i] * (1.0 - f) + table[i + 1] * f
            })
        } else {
            exact
        };
        let n = xs.len() as f64;
        let statistic = xs
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .reduce(|| 0.0, f64::max);
        let reference_error = match method {
            CdfMethod::Simulation => ((2.0f64 / 0.05).ln() / (2.0 * REFERENCE_SAMPLES as f64)).sqrt(),
            CdfMethod::Quadrature => 1e-5,
            _ => 0.0,
        };
        Ok(KsResult {
            statistic,
            samples: xs.len(),
            method,
            reference_error,
        })
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
