//! `w = int b (x) b dmu`, `T = int pi_g (x) pi_g dmu`, the projection `Pw` of
//! `w` onto `T`-invariant Hilbert-Schmidt operators, and its spectrum.
//!
//! Operators on `R^d (x) R^d` are `d x d` matrices; `vec` is column-major, so
//! `vec(pi W pi^T) = (pi (x) pi) vec(W)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::chi::ChiMixture;
use super::FiniteDimCocycle;
use crate::error::Result;

/// Eigenvalues of `Pw` at or below this are dropped.
pub const EIGEN_CUTOFF: f64 = 1e-10;
/// Eigenvalues closer than this share a block.
pub const GROUPING_TOL: f64 = 1e-8;
const UNIT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EigenBlock {
    pub lambda: f64,
    pub projection: DMatrix<f64>,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// Normalized: trace 1 unless `c = 0`.
    pub w: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub mean_op: DMatrix<f64>,
    pub pw: DMatrix<f64>,
    pub eigen: Vec<EigenBlock>,
    pub theta: f64,
    pub sigmas: Vec<f64>,
    pub beta: f64,
    /// `|b|^2_{L^2(mu)}` before normalization.
    pub c: f64,
    /// `E|b(X_1)|^4 / c^2`.
    pub fourth_moment: f64,
}

/// JSON-friendly view of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub dim: usize,
    pub c: f64,
    pub beta: f64,
    pub beta_hs: f64,
    pub theta: f64,
    pub sigmas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub dimension_bound: Option<f64>,
    pub pw: Vec<Vec<f64>>,
}

fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn unvec(v: &DVector<f64>, d: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl SpectralReport {
    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0
    }

    /// `|Pw|_HS^2` computed entrywise; agrees with `beta`.
    pub fn beta_hs(&self) -> f64 {
        self.pw.norm_squared()
    }

    pub fn min_rank(&self) -> Option<usize> {
        self.eigen.iter().map(|e| e.multiplicity).min()
    }

    /// `1 / min rank E_i`, when `Pw != 0`.
    pub fn dimension_bound(&self) -> Option<f64> {
        self.min_rank().map(|r| 1.0 / r as f64)
    }

    /// The limit law `chi(theta, sigma_k)` of `|b(X_n)| / sqrt(n c)`.
    pub fn chi_mixture(&self) -> Result<ChiMixture> {
        ChiMixture::new(self.theta, self.sigmas.clone())
    }

    /// Cesaro average `(1/N) sum_{k < N} T^k w`; tends to `Pw`.
    pub fn cesaro_pw(&self, terms: usize) -> DMatrix<f64> {
        let d = self.dim();
        let mut x = vec_of(&self.w);
        let mut acc = DVector::zeros(d * d);
        for _ in 0..terms.max(1) {
            acc += &x;
            x = &self.t * x;
        }
        unvec(&(acc / terms.max(1) as f64), d)
    }

    /// `(1 / 2c^2) E| |b(X_n)|^2 / n - c |^2` at finite `n`, from
    /// `E|b(X_n)|^4 = 4 <sum_{k=1}^{n-1} (n-k) T^{k-1} w, w> + n E|b(X_1)|^4 + n(n-1)`
    /// for normalized harmonic `b`.
    pub fn beta_at(&self, n: usize) -> f64 {
        if self.is_zero() || n == 0 {
            return 0.0;
        }
        let w = vec_of(&self.w);
        let mut x = w.clone();
        let mut acc = 0.0;
        for k in 1..n {
            acc += (n - k) as f64 * x.dot(&w);
            x = &self.t * x;
        }
        let nf = n as f64;
        let m4 = 4.0 * acc + nf * self.fourth_moment + nf * (nf - 1.0);
        0.5 * (m4 / (nf * nf) - 1.0)
    }

    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            dim: self.dim(),
            c: self.c,
            beta: self.beta,
            beta_hs: self.beta_hs(),
            theta: self.theta,
            sigmas: self.sigmas.clone(),
            lambdas: self.eigen.iter().map(|e| e.lambda).collect(),
            multiplicities: self.eigen.iter().map(|e| e.multiplicity).collect(),
            dimension_bound: self.dimension_bound(),
            pw: rows(&self.pw),
        }
    }
}

impl FiniteDimCocycle {
    /// `T = sum mu(g) pi_g (x) pi_g`.
    pub fn tensor_operator(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut t = DMatrix::zeros(d * d, d * d);
        for &(w, s) in self.steps() {
            match s {
                Some(i) => t += self.rep(i).kronecker(self.rep(i)) * w,
                None => t += DMatrix::<f64>::identity(d * d, d * d) * w,
            }
        }
        t
    }

    /// Spectral data of the harmonic cocycle, normalized to `|b|_{L^2(mu)} = 1`.
    pub fn spectral_report(&self) -> Result<SpectralReport> {
        self.require_symmetric()?;
        self.require_harmonic()?;
        let d = self.dim();
        let c = self.l2_norm_sq();
        let t = self.tensor_operator();
        let mean_op = self.mean_operator();
        if c <= 1e-20 * self.scale() {
            return Ok(SpectralReport {
                w: DMatrix::zeros(d, d),
                t,
                mean_op,
                pw: DMatrix::zeros(d, d),
                eigen: Vec::new(),
                theta: 0.0,
                sigmas: Vec::new(),
                beta: 0.0,
                c: 0.0,
                fourth_moment: 0.0,
            });
        }
        let mut w = DMatrix::zeros(d, d);
        let mut fourth = 0.0;
        for &(m, s) in self.steps() {
            if let Some(i) = s {
                let b = self.value(i);
                w += b * b.transpose() * m;
                fourth += m * b.norm_squared().powi(2);
            }
        }
        w /= c;
        let fourth_moment = fourth / (c * c);

        let te = SymmetricEigen::new((&t + t.transpose()) * 0.5);
        let mut proj = DMatrix::zeros(d * d, d * d);
        for (k, &lam) in te.eigenvalues.iter().enumerate() {
            if (lam - 1.0).abs() <= UNIT_TOL {
                let e = te.eigenvectors.column(k);
                proj += e * e.transpose();
            }
        }
        let pw = unvec(&(&proj * vec_of(&w)), d);
        let pw = (&pw + pw.transpose()) * 0.5;

        let pe = SymmetricEigen::new(pw.clone());
        let mut pairs: Vec<(f64, DVector<f64>)> = pe
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > EIGEN_CUTOFF)
            .map(|(k, &l)| (l, pe.eigenvectors.column(k).into_owned()))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut eigen: Vec<EigenBlock> = Vec::new();
        let mut group: Vec<(f64, DVector<f64>)> = Vec::new();
        let flush = |group: &mut Vec<(f64, DVector<f64>)>, eigen: &mut Vec<EigenBlock>| {
            if group.is_empty() {
                return;
            }
            let lambda = group.iter().map(|g| g.0).sum::<f64>() / group.len() as f64;
            let mut projection = DMatrix::zeros(d, d);
            for (_, v) in group.iter() {
                projection += v * v.transpose();
            }
            eigen.push(EigenBlock {
                lambda,
                projection,
                multiplicity: group.len(),
            });
            group.clear();
        };
        for (l, v) in pairs {
            if let Some(last) = group.last() {
                if (last.0 - l).abs() > GROUPING_TOL {
                    flush(&mut group, &mut eigen);
                }
            }
            group.push((l, v));
        }
        flush(&mut group, &mut eigen);

        let mut sigmas = Vec::new();
        for e in &eigen {
            sigmas.extend(std::iter::repeat_n(e.lambda.sqrt(), e.multiplicity));
        }
        let sum_sq: f64 = eigen.iter().map(|e| e.lambda * e.multiplicity as f64).sum();
        let theta = (1.0 - sum_sq).max(0.0).sqrt();
        let beta = eigen.iter().map(|e| e.lambda * e.lambda * e.multiplicity as f64).sum();
        Ok(SpectralReport {
            w,
            t,
            mean_op,
            pw,
            eigen,
            theta,
            sigmas,
            beta,
            c,
            fourth_moment,
        })
    }
}
