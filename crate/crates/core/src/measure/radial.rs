//! Exact powers of radial walks on free groups.
//!
//! A walk on `F_k` that stays put with probability `s` and otherwise moves to
//! a uniform generator only sees `|X_n|`, which is a birth and death chain.
//! Its law at time `n` is constant on spheres, so `mu^{*n}` is stored as the
//! mass of each sphere; the sphere of radius `r >= 1` has `2k (2k-1)^(r-1)`
//! elements.

use num_bigint::BigInt;

use super::sparse::SparseMeasure;
use super::weight::{Rational, Weight};
use crate::error::{Error, Result};
use crate::group::{Element, Group, GroupKind};

#[derive(Clone, Debug)]
pub struct FreeRadialWalk<W: Weight> {
    k: usize,
    stay: W,
    up: W,
    down: W,
    leave_root: W,
    /// `profiles[n][r]` is the mass of the sphere of radius `r` at time `n`.
    profiles: Vec<Vec<W>>,
}

impl<W: Weight> FreeRadialWalk<W> {
    pub fn new(k: usize, stay: W) -> Result<Self> {
        if k == 0 || stay.is_negative() || stay.to_f64() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "radial walk needs k >= 1 and stay in [0, 1] (k = {k}, stay = {})",
                stay.to_text()
            )));
        }
        let moving = W::one().sub(&stay);
        let d = (2 * k) as i64;
        let up = moving.mul(&W::from_ratio(d - 1, d));
        let down = moving.mul(&W::from_ratio(1, d));
        Ok(FreeRadialWalk {
            k,
            stay,
            up,
            down,
            leave_root: moving,
            profiles: vec![vec![W::one()]],
        })
    }

    /// Recognizes `s delta_e + (1 - s) uniform(S)` on a free group with its
    /// standard generators.
    pub fn from_measure(mu: &SparseMeasure<W>) -> Option<Self> {
        let group = mu.group();
        let GroupKind::Free { k } = group.kind() else {
            return None;
        };
        let gens = group.generators().elements();
        if gens.len() != 2 * k || !gens.iter().all(|g| matches!(g, Element::Free(w) if w.len() == 1)) {
            return None;
        }
        let stay = mu.get(&group.identity());
        let w0 = mu.get(&gens[0]);
        if w0.is_zero() || mu.support_len() != gens.len() + usize::from(!stay.is_zero()) {
            return None;
        }
        if gens.iter().any(|g| mu.get(g) != w0) {
            return None;
        }
        FreeRadialWalk::new(*k, stay).ok()
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn stay(&self) -> &W {
        &self.stay
    }

    pub fn is_periodic(&self) -> bool {
        self.stay.is_zero()
    }

    /// Number of elements of length `r`.
    pub fn sphere_size(&self, r: usize) -> W {
        if r == 0 {
            return W::one();
        }
        let d = 2 * self.k as u64;
        let count = BigInt::from(d) * BigInt::from(d - 1).pow(r as u32 - 1);
        W::from_rational(&Rational::from_integer(count))
    }

    fn extend_to(&mut self, n: usize) {
        while self.profiles.len() <= n {
            let p = self.profiles.last().expect("profile at time 0");
            let mut next = vec![W::zero(); p.len() + 1];
            for (r, m) in p.iter().enumerate() {
                if m.is_zero() {
                    continue;
                }
                next[r].add_assign(&m.mul(&self.stay));
                if r == 0 {
                    next[1].add_assign(&m.mul(&self.leave_root));
                } else {
                    next[r + 1].add_assign(&m.mul(&self.up));
                    next[r - 1].add_assign(&m.mul(&self.down));
                }
            }
            self.profiles.push(next);
        }
    }

    /// Sphere masses at time `n`, indexed by radius `0..=n`.
    pub fn profile(&mut self, n: usize) -> &[W] {
        self.extend_to(n);
        &self.profiles[n]
    }

    /// `mu^{*n}(g)` for any `g` with `|g| = r`.
    pub fn mass_at_length(&mut self, n: usize, r: usize) -> W {
        let size = self.sphere_size(r);
        match self.profile(n).get(r) {
            Some(m) => m.div(&size),
            None => W::zero(),
        }
    }

    pub fn mass_at(&mut self, n: usize, g: &Element) -> Result<W> {
        match g {
            Element::Free(w) => Ok(self.mass_at_length(n, w.len())),
            other => Err(Error::GroupMismatch {
                expected: format!("F:k={}", self.k),
                found: format!("{} element {other}", other.kind()),
            }),
        }
    }

    pub fn return_prob(&mut self, n: usize) -> W {
        self.profile(n)[0].clone()
    }

    /// `||mu^{*n} - mu^{*m}||_1`. Both laws are constant on spheres.
    pub fn l1_distance(&mut self, n: usize, m: usize) -> W {
        self.extend_to(n.max(m));
        let (a, b) = (&self.profiles[n], &self.profiles[m]);
        let mut acc = W::zero();
        for r in 0..a.len().max(b.len()) {
            let x = a.get(r).cloned().unwrap_or_else(W::zero);
            let y = b.get(r).cloned().unwrap_or_else(W::zero);
            acc.add_assign(&x.sub(&y).abs());
        }
        acc
    }

    /// `mu^{*n}(B(r))`.
    pub fn ball_mass(&mut self, n: usize, r: usize) -> W {
        let mut acc = W::zero();
        for m in self.profile(n).iter().take(r + 1) {
            acc.add_assign(m);
        }
        acc
    }

    /// The same law as an explicit sparse measure; only sensible for small `n`.
    pub fn to_sparse(&mut self, group: std::sync::Arc<Group>, n: usize) -> Result<SparseMeasure<W>> {
        let ball = group.ball(n as u32)?;
        let mut entries = Vec::with_capacity(ball.len());
        for g in ball {
            let w = self.mass_at(n, &g)?;
            entries.push((g, w));
        }
        SparseMeasure::from_entries(group, entries)
    }
}
