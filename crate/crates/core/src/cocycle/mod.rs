//! Finite-dimensional 1-cocycles `b(gx) = b(g) + pi_g b(x)` for real
//! orthogonal representations, given on generators.

mod catalog;
mod chi;
mod file;
mod sampling;
mod spectral;
#[cfg(test)]
mod tests;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Group, Word};
use crate::measure::{SparseMeasure, Weight};
use crate::walk::trial_rng;

pub use catalog::{catalog, catalog_entry, CatalogCocycle};
pub use chi::{ks_two_sample, CdfMethod, ChiMixture, KsResult};
pub use file::CocycleFile;
pub use sampling::{BetaEstimate, CoboundaryPoint};
pub use spectral::{EigenBlock, SpectralReport, SpectralSummary};

const ORTHO_TOL: f64 = 1e-12;
const INVERSE_TOL: f64 = 1e-10;
/// Pass threshold for null words.
pub const CONSISTENCY_TOL: f64 = 1e-8;
const HARMONIC_TOL: f64 = 1e-8;
const FIX_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct FiniteDimCocycle {
    group: Arc<Group>,
    dim: usize,
    rep: Vec<DMatrix<f64>>,
    values: Vec<DVector<f64>>,
    mu: SparseMeasure<f64>,
    /// `(weight, generator index or None for e)` over the support of `mu`.
    steps: Vec<(f64, Option<usize>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub words_checked: usize,
    /// `max |b(w)|` over the null words.
    pub max_defect: f64,
    /// `max |pi(w) - I|` over the null words.
    pub max_rep_defect: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct HarmonicSplit {
    pub harmonic: FiniteDimCocycle,
    pub v: DVector<f64>,
    /// `|sum mu(g) b_harm(g)|`.
    pub residual: f64,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

impl FiniteDimCocycle {
    /// `rep[i]` and `values[i]` belong to generator `i` of `group`.
    pub fn new(
        group: Arc<Group>,
        rep: Vec<DMatrix<f64>>,
        values: Vec<DVector<f64>>,
        mu: SparseMeasure<f64>,
    ) -> Result<Self> {
        let gens = group.generators();
        if rep.len() != gens.len() || values.len() != gens.len() {
            return Err(Error::InvalidCocycle(format!(
                "{} generators but {} matrices and {} values",
                gens.len(),
                rep.len(),
                values.len()
            )));
        }
        let dim = values.first().map_or(0, |v| v.len());
        if dim == 0 {
            return Err(Error::InvalidCocycle("dimension must be positive".into()));
        }
        let id = DMatrix::<f64>::identity(dim, dim);
        for (i, (p, b)) in rep.iter().zip(&values).enumerate() {
            let name = &gens.names()[i];
            if p.nrows() != dim || p.ncols() != dim || b.len() != dim {
                return Err(Error::InvalidCocycle(format!("generator {name}: expected dimension {dim}")));
            }
            let ortho = max_abs(&(p.transpose() * p - &id));
            if ortho > ORTHO_TOL {
                return Err(Error::InvalidCocycle(format!(
                    "pi({name}) is not orthogonal (|pi^T pi - I| = {ortho:e})"
                )));
            }
            let j = gens.inverse_index(i);
            let inv = max_abs(&(p * &rep[j] - &id));
            if inv > INVERSE_TOL {
                return Err(Error::InvalidCocycle(format!(
                    "pi({name}) pi({}) != I (defect {inv:e})",
                    gens.names()[j]
                )));
            }
            let forced = -(p.transpose() * b);
            let d = (&values[j] - forced).amax();
            if d > INVERSE_TOL {
                return Err(Error::InvalidCocycle(format!(
                    "b({}) != -pi({name})^-1 b({name}) (defect {d:e})",
                    gens.names()[j]
                )));
            }
        }
        let steps = Self::steps_for(&group, &mu)?;
        Ok(FiniteDimCocycle {
            group,
            dim,
            rep,
            values,
            mu,
            steps,
        })
    }

    /// Builds from values on some generators; inverses are filled in by
    /// `b(s^-1) = -pi(s)^T b(s)` and missing matrices default to `I`.
    pub fn from_generators(
        group: Arc<Group>,
        dim: usize,
        entries: &[(&str, Option<DMatrix<f64>>, DVector<f64>)],
        mu: SparseMeasure<f64>,
    ) -> Result<Self> {
        let gens = group.generators();
        let mut rep: Vec<Option<DMatrix<f64>>> = vec![None; gens.len()];
        let mut values: Vec<Option<DVector<f64>>> = vec![None; gens.len()];
        for (name, m, b) in entries {
            let i = gens
                .index_of_name(name)
                .ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
            if b.len() != dim {
                return Err(Error::InvalidCocycle(format!("b({name}) has length {}, expected {dim}", b.len())));
            }
            let m = m.clone().unwrap_or_else(|| DMatrix::identity(dim, dim));
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidCocycle(format!("pi({name}) is not {dim}x{dim}")));
            }
            rep[i] = Some(m);
            values[i] = Some(b.clone());
        }
        for i in 0..gens.len() {
            let j = gens.inverse_index(i);
            if rep[i].is_none() {
                if let (Some(m), Some(b)) = (rep[j].clone(), values[j].clone()) {
                    values[i] = Some(-(m.transpose() * b));
                    rep[i] = Some(m.transpose());
                }
            }
        }
        let rep: Vec<_> = rep
            .into_iter()
            .map(|m| m.unwrap_or_else(|| DMatrix::identity(dim, dim)))
            .collect();
        let values: Vec<_> = values.into_iter().map(|b| b.unwrap_or_else(|| DVector::zeros(dim))).collect();
        FiniteDimCocycle::new(group, rep, values, mu)
    }

    /// The coboundary `g -> v - pi_g v`.
    pub fn coboundary(group: Arc<Group>, rep: Vec<DMatrix<f64>>, v: &DVector<f64>, mu: SparseMeasure<f64>) -> Result<Self> {
        let values = rep.iter().map(|p| v - p * v).collect();
        FiniteDimCocycle::new(group, rep, values, mu)
    }

    fn steps_for(group: &Arc<Group>, mu: &SparseMeasure<f64>) -> Result<Vec<(f64, Option<usize>)>> {
        if mu.group().id() != group.id() {
            return Err(Error::GroupMismatch {
                expected: group.id().to_string(),
                found: mu.group().id().to_string(),
            });
        }
        mu.require_probability()?;
        let e = group.identity();
        let gens = group.generators();
        mu.sorted_entries()
            .into_iter()
            .map(|(g, w)| {
                if *g == e {
                    Ok((*w, None))
                } else {
                    gens.index_of(g).map(|i| (*w, Some(i))).ok_or_else(|| {
                        Error::InvalidCocycle(format!("mu charges {g}, which is neither e nor a generator"))
                    })
                }
            })
            .collect()
    }

    /// Same cocycle with a different reference measure.
    pub fn with_measure(&self, mu: SparseMeasure<f64>) -> Result<Self> {
        let steps = Self::steps_for(&self.group, &mu)?;
        Ok(FiniteDimCocycle {
            mu,
            steps,
            ..self.clone()
        })
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn measure(&self) -> &SparseMeasure<f64> {
        &self.mu
    }

    pub fn rep(&self, i: usize) -> &DMatrix<f64> {
        &self.rep[i]
    }

    pub fn value(&self, i: usize) -> &DVector<f64> {
        &self.values[i]
    }

    pub(crate) fn steps(&self) -> &[(f64, Option<usize>)] {
        &self.steps
    }

    fn step_value(&self, s: Option<usize>) -> DVector<f64> {
        s.map_or_else(|| DVector::zeros(self.dim), |i| self.values[i].clone())
    }

    fn step_rep(&self, s: Option<usize>) -> DMatrix<f64> {
        s.map_or_else(|| DMatrix::identity(self.dim, self.dim), |i| self.rep[i].clone())
    }

    /// True when every `pi(s)` is the identity.
    pub fn is_trivial_rep(&self) -> bool {
        let id = DMatrix::<f64>::identity(self.dim, self.dim);
        self.rep.iter().all(|p| max_abs(&(p - &id)) == 0.0)
    }

    /// `b(s_1 ... s_k)` accumulated left to right.
    pub fn eval(&self, w: &Word) -> Result<DVector<f64>> {
        Ok(self.eval_with_rep(w)?.0)
    }

    /// `(b(w), pi(w))`.
    pub fn eval_with_rep(&self, w: &Word) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let mut b = DVector::zeros(self.dim);
        let mut p = DMatrix::identity(self.dim, self.dim);
        for &i in w.letters() {
            if i >= self.values.len() {
                return Err(Error::UnknownGenerator(format!("#{i}")));
            }
            b += &p * &self.values[i];
            p *= &self.rep[i];
        }
        Ok((b, p))
    }

    /// `b` of a word written with generator names, e.g. `x1.x2^-1`.
    pub fn eval_text(&self, word: &str) -> Result<DVector<f64>> {
        self.eval(&self.group.parse_word(word)?)
    }

    /// Evaluates `b` and `pi` on relators, their rotations and conjugates,
    /// and random `w w^-1`.
    pub fn check_consistency(&self, random_words: usize, seed: u64) -> ConsistencyReport {
        let gens = self.group.generators();
        let mut words: Vec<Word> = Vec::new();
        let relators = self.group.relators();
        for r in &relators {
            let l = r.letters();
            for k in 0..l.len() {
                let mut rot = l[k..].to_vec();
                rot.extend_from_slice(&l[..k]);
                words.push(Word(rot));
            }
            words.push(r.inverse(gens));
        }
        let mut rng = trial_rng(seed, "consistency", 0);
        let random_word = |rng: &mut rand_chacha::ChaCha8Rng, max_len: usize| {
            let len = rng.random_range(1..=max_len);
            Word((0..len).map(|_| rng.random_range(0..gens.len())).collect())
        };
        for _ in 0..random_words {
            let u = random_word(&mut rng, 8);
            words.push(u.concat(&u.inverse(gens)));
            if !relators.is_empty() {
                let r = &relators[rng.random_range(0..relators.len())];
                let u = random_word(&mut rng, 6);
                words.push(u.concat(r).concat(&u.inverse(gens)));
            }
        }
        let id = DMatrix::<f64>::identity(self.dim, self.dim);
        let mut max_defect = 0.0f64;
        let mut max_rep_defect = 0.0f64;
        for w in &words {
            let (b, p) = self.eval_with_rep(w).expect("generator indices are in range");
            max_defect = max_defect.max(b.amax());
            max_rep_defect = max_rep_defect.max(max_abs(&(p - &id)));
        }
        ConsistencyReport {
            words_checked: words.len(),
            max_defect,
            max_rep_defect,
            passed: max_defect < CONSISTENCY_TOL && max_rep_defect < CONSISTENCY_TOL,
        }
    }

    /// Fails with `InvalidCocycle` unless the consistency check passes.
    pub fn validated(self, seed: u64) -> Result<Self> {
        let r = self.check_consistency(200, seed);
        if r.passed {
            Ok(self)
        } else {
            Err(Error::InvalidCocycle(format!(
                "not well defined on the group: |b(null word)| up to {:e}, |pi(null word) - I| up to {:e}",
                r.max_defect, r.max_rep_defect
            )))
        }
    }

    /// `m = sum mu(g) b(g)`.
    pub fn drift(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for &(w, s) in &self.steps {
            m += self.step_value(s) * w;
        }
        m
    }

    /// `T_0 = sum mu(g) pi_g`.
    pub fn mean_operator(&self) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(self.dim, self.dim);
        for &(w, s) in &self.steps {
            t += self.step_rep(s) * w;
        }
        t
    }

    /// `c = sum mu(g) |b(g)|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.steps
            .iter()
            .map(|&(w, s)| w * s.map_or(0.0, |i| self.values[i].norm_squared()))
            .sum()
    }

    fn scale(&self) -> f64 {
        self.values.iter().map(|b| b.amax()).fold(1.0, f64::max)
    }

    fn require_symmetric(&self) -> Result<()> {
        if self.mu.is_symmetric() {
            Ok(())
        } else {
            Err(Error::InvalidParameter("reference measure must be symmetric".into()))
        }
    }

    /// Errors with `NotHarmonic` if `|sum mu(g) b(g)|` exceeds tolerance.
    pub fn require_harmonic(&self) -> Result<()> {
        let m = self.drift().norm();
        if m > HARMONIC_TOL * self.scale() {
            Err(Error::NotHarmonic(m))
        } else {
            Ok(())
        }
    }

    /// Removes the coboundary part: solves `(I - T_0) v = m` off `fix(T_0)`
    /// and returns `b(s) - (v - pi(s) v)`.
    pub fn harmonic_part(&self) -> Result<HarmonicSplit> {
        self.require_symmetric()?;
        let m = self.drift();
        let t0 = self.mean_operator();
        let eig = SymmetricEigen::new((&t0 + t0.transpose()) * 0.5);
        let mut v = DVector::zeros(self.dim);
        let mut blocked = 0.0f64;
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let e = eig.eigenvectors.column(k);
            let coeff = e.dot(&m);
            if (1.0 - lam).abs() <= FIX_TOL {
                blocked = blocked.max(coeff.abs());
            } else {
                v += e * (coeff / (1.0 - lam));
            }
        }
        if blocked > HARMONIC_TOL * self.scale() {
            return Err(Error::Obstructed(blocked));
        }
        let values = self.rep.iter().zip(&self.values).map(|(p, b)| b - (&v - p * &v)).collect();
        let harmonic = FiniteDimCocycle {
            values,
            ..self.clone()
        };
        let residual = harmonic.drift().norm();
        Ok(HarmonicSplit { harmonic, v, residual })
    }

    /// `(1/n) E|c(X_n)|^2 = (2/n) <(1 - T_0^n) v, v>` for the coboundary of `v`,
    /// and its ceiling `2 <(1 - T_0) v, v>`.
    pub fn coboundary_energy(&self, v: &DVector<f64>, n: usize) -> (f64, f64) {
        let t0 = self.mean_operator();
        let mut p = DMatrix::<f64>::identity(self.dim, self.dim);
        for _ in 0..n {
            p *= &t0;
        }
        let id = DMatrix::<f64>::identity(self.dim, self.dim);
        let exact = 2.0 / n as f64 * ((&id - p) * v).dot(v);
        let ceiling = 2.0 * ((&id - &t0) * v).dot(v);
        (exact, ceiling)
    }
}
