//! Monte Carlo statistics of `b(X_n)` along seeded walks.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FiniteDimCocycle;
use crate::error::{Error, Result};
use crate::walk::{trial_rng, Estimate};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub n: usize,
    pub c: f64,
    /// `(1 / 2c^2) E| |b(X_n)|^2 / n - c |^2`.
    pub beta: Estimate,
    /// `E|b(X_n)|^2 / (n c)`, which is 1 for harmonic `b`.
    pub martingale: Estimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoboundaryPoint {
    pub n: usize,
    /// Monte Carlo `(1/n) E|c(X_n)|^2`.
    pub estimate: Estimate,
    /// `(2/n) <(1 - T_0^n) v, v>`.
    pub exact: f64,
    /// `2 <(1 - T_0) v, v>`.
    pub ceiling: f64,
}

/// Flat copies of the step data for the inner loop.
struct Kernel {
    d: usize,
    cumulative: Vec<f64>,
    /// Row-major `pi(s)` per support point, empty when the rep is trivial.
    mats: Vec<Vec<f64>>,
    vals: Vec<Vec<f64>>,
}

impl Kernel {
    fn new(b: &FiniteDimCocycle) -> Self {
        let d = b.dim();
        let trivial = b.is_trivial_rep();
        let mut cumulative = Vec::new();
        let mut mats = Vec::new();
        let mut vals = Vec::new();
        let mut acc = 0.0;
        for &(w, s) in b.steps() {
            acc += w;
            cumulative.push(acc);
            match s {
                Some(i) => {
                    vals.push(b.value(i).iter().copied().collect());
                    if !trivial {
                        let p = b.rep(i);
                        mats.push((0..d * d).map(|k| p[(k / d, k % d)]).collect());
                    }
                }
                None => {
                    vals.push(vec![0.0; d]);
                    if !trivial {
                        mats.push((0..d * d).map(|k| f64::from(u8::from(k / d == k % d))).collect());
                    }
                }
            }
        }
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Kernel {
            d,
            cumulative,
            mats,
            vals,
        }
    }

    /// `b(X_n)` for one walk.
    fn endpoint(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let d = self.d;
        let mut b = vec![0.0; d];
        if self.mats.is_empty() {
            for _ in 0..n {
                let u: f64 = rng.random();
                let j = self.cumulative.partition_point(|&c| c <= u);
                for (x, y) in b.iter_mut().zip(&self.vals[j]) {
                    *x += y;
                }
            }
            return b;
        }
        let mut p = vec![0.0; d * d];
        for i in 0..d {
            p[i * d + i] = 1.0;
        }
        let mut tmp = vec![0.0; d * d];
        for _ in 0..n {
            let u: f64 = rng.random();
            let j = self.cumulative.partition_point(|&c| c <= u);
            let (m, v) = (&self.mats[j], &self.vals[j]);
            for r in 0..d {
                let row = &p[r * d..(r + 1) * d];
                b[r] += row.iter().zip(v).map(|(a, c)| a * c).sum::<f64>();
                for col in 0..d {
                    tmp[r * d + col] = (0..d).map(|k| row[k] * m[k * d + col]).sum();
                }
            }
            std::mem::swap(&mut p, &mut tmp);
        }
        b
    }
}

impl FiniteDimCocycle {
    /// `|b(X_n)|^2` for `trials` independent walks of length `n`.
    pub fn endpoint_norms_sq(&self, n: usize, trials: u64, seed: u64, label: &str) -> Vec<f64> {
        let kernel = Kernel::new(self);
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(seed, label, i);
                kernel.endpoint(n, &mut rng).iter().map(|x| x * x).sum()
            })
            .collect()
    }

    /// `b(X_n)` itself for `trials` walks.
    pub fn endpoint_values(&self, n: usize, trials: u64, seed: u64) -> Vec<DVector<f64>> {
        let kernel = Kernel::new(self);
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(seed, "cocycle-endpoint", i);
                DVector::from_vec(kernel.endpoint(n, &mut rng))
            })
            .collect()
    }

    fn nonzero_c(&self) -> Result<f64> {
        let c = self.l2_norm_sq();
        if c <= 1e-20 * self.scale() {
            Err(Error::ZeroCocycle)
        } else {
            Ok(c)
        }
    }

    pub fn beta_monte_carlo(&self, n: usize, trials: u64, seed: u64) -> Result<BetaEstimate> {
        if n == 0 {
            return Err(Error::InvalidParameter("beta needs n >= 1".into()));
        }
        self.require_harmonic()?;
        let c = self.nonzero_c()?;
        let ys = self.endpoint_norms_sq(n, trials, seed, "beta");
        let nf = n as f64;
        let stat: Vec<f64> = ys.iter().map(|y| (y / nf - c).powi(2) / (2.0 * c * c)).collect();
        let mart: Vec<f64> = ys.iter().map(|y| y / (nf * c)).collect();
        Ok(BetaEstimate {
            n,
            c,
            beta: Estimate::from_samples(&stat)?,
            martingale: Estimate::from_samples(&mart)?,
        })
    }

    /// `|b(X_n)| / sqrt(n c)`; converges in law to `chi(theta, sigma_k)`.
    pub fn normalized_norm_samples(&self, n: usize, trials: u64, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidParameter("need n >= 1".into()));
        }
        let c = self.nonzero_c()?;
        let scale = n as f64 * c;
        Ok(self
            .endpoint_norms_sq(n, trials, seed, "chi-walk")
            .into_iter()
            .map(|y| (y / scale).sqrt())
            .collect())
    }

    /// `(1/n^d) E|b(X_n)|^(2d)` for the normalized cocycle, `d = 1..=max_d`.
    pub fn moment_profile(&self, n: usize, trials: u64, seed: u64, max_d: u32) -> Result<Vec<Estimate>> {
        let c = self.nonzero_c()?;
        let ys = self.endpoint_norms_sq(n.max(1), trials, seed, "moments");
        let scale = n.max(1) as f64 * c;
        (1..=max_d)
            .map(|d| {
                let xs: Vec<f64> = ys.iter().map(|y| (y / scale).powi(d as i32)).collect();
                Estimate::from_samples(&xs)
            })
            .collect()
    }

    /// Energy of the coboundary of `v` along the walk, with its exact value
    /// and ceiling.
    pub fn coboundary_profile(&self, v: &DVector<f64>, ns: &[usize], trials: u64, seed: u64) -> Result<Vec<CoboundaryPoint>> {
        let rep = (0..self.group().generators().len()).map(|i| self.rep(i).clone()).collect();
        let cob = FiniteDimCocycle::coboundary(self.group().clone(), rep, v, self.measure().clone())?;
        ns.iter()
            .map(|&n| {
                let n = n.max(1);
                let ys = cob.endpoint_norms_sq(n, trials, seed, "coboundary");
                let xs: Vec<f64> = ys.iter().map(|y| y / n as f64).collect();
                let (exact, ceiling) = self.coboundary_energy(v, n);
                Ok(CoboundaryPoint {
                    n,
                    estimate: Estimate::from_samples(&xs)?,
                    exact,
                    ceiling,
                })
            })
            .collect()
    }
}
