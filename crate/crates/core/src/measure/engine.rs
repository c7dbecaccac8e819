//! Point evaluation of `mu^{*n}(g)` for large `n`.
//!
//! Three routes, chosen from the shape of `mu`:
//! - generic sparse powers, with `mu^{*(a+b)}(g) = sum_x mu^{*a}(x) mu^{*b}(x^-1 g)`
//!   so that only powers up to `ceil(n/2)` are ever materialized;
//! - the radial chain on free groups;
//! - product measures `mu_A x mu_B` on `A x B`, where
//!   `mu^{*n}(g1, g2) = mu_A^{*n}(g1) mu_B^{*n}(g2)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::convolve::{convolve, convolve_at_inverted, Truncation};
use super::radial::FreeRadialWalk;
use super::sparse::SparseMeasure;
use super::weight::Weight;
use crate::error::{Error, Result};
use crate::group::{Element, Group};

/// Closed interval of reals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval {
            lo: lo.min(hi),
            hi: lo.max(hi),
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval::new(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn scale(&self, c: f64) -> Interval {
        Interval::new(self.lo * c, self.hi * c)
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval::new(
            c.iter().copied().fold(f64::INFINITY, f64::min),
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// Quotient; unbounded when the denominator interval touches 0.
    pub fn div(&self, o: &Interval) -> Interval {
        if o.lo <= 0.0 && o.hi >= 0.0 {
            return Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        }
        self.mul(&Interval::new(1.0 / o.hi, 1.0 / o.lo))
    }

    /// Monotone map applied to both ends.
    pub fn map_monotone(&self, f: impl Fn(f64) -> f64) -> Interval {
        Interval::new(f(self.lo), f(self.hi))
    }
}

/// A value computed from truncated data: the truth lies in `[value, value + slack]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounded<W> {
    pub value: W,
    pub slack: f64,
}

impl<W: Weight> Bounded<W> {
    pub fn exact(value: W) -> Self {
        Bounded { value, slack: 0.0 }
    }

    pub fn interval(&self) -> Interval {
        let v = self.value.to_f64();
        Interval::new(v, v + self.slack)
    }

    /// Difference as an interval.
    pub fn minus(&self, other: &Bounded<W>) -> (W, Interval) {
        (self.value.sub(&other.value), self.interval().sub(&other.interval()))
    }
}

/// Stepwise powers `mu^{*0}, mu^{*1}, ...` with a per-step truncation budget.
#[derive(Clone, Debug)]
pub struct SparsePowers<W: Weight> {
    mu: SparseMeasure<W>,
    step: Truncation,
    powers: Vec<SparseMeasure<W>>,
    /// `(x^-1, mu^{*a}(x))` for the last split point `a` used by `mass_at`.
    inverted: Option<(usize, Vec<(Element, W)>)>,
}

impl<W: Weight> SparsePowers<W> {
    pub fn new(mu: SparseMeasure<W>, step: Truncation) -> Self {
        let powers = vec![SparseMeasure::identity(mu.group().clone()), mu.clone()];
        SparsePowers {
            mu,
            step,
            powers,
            inverted: None,
        }
    }

    pub fn measure(&self) -> &SparseMeasure<W> {
        &self.mu
    }

    pub fn materialized(&self) -> usize {
        self.powers.len() - 1
    }

    pub fn power(&mut self, n: usize) -> Result<&SparseMeasure<W>> {
        while self.powers.len() <= n {
            let next = convolve(self.powers.last().expect("nonempty"), &self.mu, &self.step)?;
            self.powers.push(next);
        }
        Ok(&self.powers[n])
    }

    pub fn mass_at(&mut self, n: usize, g: &Element) -> Result<Bounded<W>> {
        if n < self.powers.len() {
            let p = &self.powers[n];
            return Ok(Bounded {
                value: p.get(g),
                slack: p.ledger().dropped_mass,
            });
        }
        let a = n.div_ceil(2);
        let b = n - a;
        self.power(a)?;
        if self.inverted.as_ref().map(|(k, _)| *k) != Some(a) {
            let group = self.mu.group();
            let inv = self.powers[a].map().iter().map(|(x, w)| (group.inverse(x), w.clone())).collect();
            self.inverted = Some((a, inv));
        }
        let (pa, pb) = (&self.powers[a], &self.powers[b]);
        let (da, db) = (pa.ledger().dropped_mass, pb.ledger().dropped_mass);
        // truncated powers sit pointwise below the true ones, so the missing
        // part of the convolution is at most da * max(mu^b) + db * max(mu^a)
        let slack = if da == 0.0 && db == 0.0 {
            0.0
        } else {
            (da * (max_weight(pb) + db) + db * max_weight(pa)).min(da + db)
        };
        Ok(Bounded {
            value: convolve_at_inverted(&self.inverted.as_ref().expect("just set").1, pb, g),
            slack,
        })
    }
}

fn max_weight<W: Weight>(m: &SparseMeasure<W>) -> f64 {
    m.iter().map(|(_, w)| w.to_f64()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub enum PowerEngine<W: Weight> {
    Sparse(SparsePowers<W>),
    Radial {
        group: Arc<Group>,
        walk: FreeRadialWalk<W>,
    },
    Product {
        group: Arc<Group>,
        left: Box<PowerEngine<W>>,
        right: Box<PowerEngine<W>>,
        periodic: bool,
    },
}

impl<W: Weight> PowerEngine<W> {
    /// Radial route when `mu` is a lazy uniform walk on a free group, generic
    /// sparse powers otherwise. `step` is the per-step truncation.
    pub fn for_measure(mu: &SparseMeasure<W>, step: Truncation) -> Self {
        match FreeRadialWalk::from_measure(mu) {
            Some(walk) => PowerEngine::Radial {
                group: mu.group().clone(),
                walk,
            },
            None => PowerEngine::Sparse(SparsePowers::new(mu.clone(), step)),
        }
    }

    /// Generic sparse powers regardless of the shape of `mu`.
    pub fn sparse(mu: &SparseMeasure<W>, step: Truncation) -> Self {
        PowerEngine::Sparse(SparsePowers::new(mu.clone(), step))
    }

    /// Factorized engine for the product measure `mu_A x mu_B` on `group`.
    pub fn product(group: Arc<Group>, mu_a: &SparseMeasure<W>, mu_b: &SparseMeasure<W>, step: Truncation) -> Result<Self> {
        let (ga, gb, _) = group
            .factors()
            .ok_or_else(|| Error::InvalidParameter(format!("{} is not a direct product", group.id())))?;
        if ga.id() != mu_a.group().id() || gb.id() != mu_b.group().id() {
            return Err(Error::GroupMismatch {
                expected: format!("{} x {}", ga.id(), gb.id()),
                found: format!("{} x {}", mu_a.group().id(), mu_b.group().id()),
            });
        }
        let joint = SparseMeasure::product(group.clone(), mu_a, mu_b)?;
        let periodic = joint.is_periodic(20_000);
        Ok(PowerEngine::Product {
            group,
            left: Box::new(PowerEngine::for_measure(mu_a, step)),
            right: Box::new(PowerEngine::for_measure(mu_b, step)),
            periodic,
        })
    }

    pub fn group(&self) -> &Arc<Group> {
        match self {
            PowerEngine::Sparse(p) => p.mu.group(),
            PowerEngine::Radial { group, .. } | PowerEngine::Product { group, .. } => group,
        }
    }

    pub fn route(&self) -> &'static str {
        match self {
            PowerEngine::Sparse(_) => "sparse",
            PowerEngine::Radial { .. } => "radial",
            PowerEngine::Product { .. } => "product",
        }
    }

    pub fn is_periodic(&self) -> bool {
        match self {
            PowerEngine::Sparse(p) => p.mu.is_periodic(20_000),
            PowerEngine::Radial { walk, .. } => walk.is_periodic(),
            PowerEngine::Product { periodic, .. } => *periodic,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            PowerEngine::Sparse(p) => p.mu.is_symmetric(),
            PowerEngine::Radial { .. } => true,
            PowerEngine::Product { left, right, .. } => left.is_symmetric() && right.is_symmetric(),
        }
    }

    /// The full law `mu^{*n}`. Radial engines enumerate the ball of radius
    /// `n`, so this is only for small `n` there.
    pub fn materialize(&mut self, n: usize) -> Result<SparseMeasure<W>> {
        match self {
            PowerEngine::Sparse(p) => Ok(p.power(n)?.clone()),
            PowerEngine::Radial { group, walk } => walk.to_sparse(group.clone(), n),
            PowerEngine::Product { group, left, right, .. } => {
                let a = left.materialize(n)?;
                let b = right.materialize(n)?;
                SparseMeasure::product(group.clone(), &a, &b)
            }
        }
    }

    pub fn require_aperiodic(&self) -> Result<()> {
        if self.is_periodic() {
            Err(Error::Periodic)
        } else {
            Ok(())
        }
    }

    /// `mu^{*n}(g)` with its truncation slack.
    pub fn mass_at(&mut self, n: usize, g: &Element) -> Result<Bounded<W>> {
        match self {
            PowerEngine::Sparse(p) => p.mass_at(n, g),
            PowerEngine::Radial { walk, .. } => Ok(Bounded::exact(walk.mass_at(n, g)?)),
            PowerEngine::Product { group, left, right, .. } => {
                let Element::Product(pair) = g else {
                    return Err(Error::GroupMismatch {
                        expected: group.id().to_string(),
                        found: format!("{} element {g}", g.kind()),
                    });
                };
                let a = left.mass_at(n, &pair.0)?;
                let b = right.mass_at(n, &pair.1)?;
                let value = a.value.mul(&b.value);
                let (va, vb) = (a.value.to_f64(), b.value.to_f64());
                let slack = (va + a.slack) * (vb + b.slack) - va * vb;
                Ok(Bounded { value, slack })
            }
        }
    }

    pub fn return_prob(&mut self, n: usize) -> Result<Bounded<W>> {
        let e = self.group().identity();
        self.mass_at(n, &e)
    }
}
