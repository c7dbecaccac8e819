use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::cache::DiskCache;
use super::sparse::{same_group, SparseMeasure};
use super::weight::{Backend, Weight};
use crate::error::{Error, Result};
use crate::group::Element;

/// Default cap on the support of any intermediate measure.
pub const DEFAULT_SUPPORT_BUDGET: usize = 6_000_000;

// Fixed so that float summation order does not depend on the thread count.
const CHUNKS: usize = 64;

/// Truncation budget `eps` and hard support cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub eps: f64,
    pub max_support: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            eps: 0.0,
            max_support: DEFAULT_SUPPORT_BUDGET,
        }
    }
}

impl Truncation {
    pub fn exact() -> Self {
        Truncation::default()
    }

    pub fn eps(eps: f64) -> Self {
        Truncation {
            eps,
            ..Truncation::default()
        }
    }

    pub fn with_budget(self, max_support: usize) -> Self {
        Truncation { max_support, ..self }
    }

    fn check<W: Weight>(&self) -> Result<()> {
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {} must be >= 0", self.eps)));
        }
        if W::BACKEND == Backend::Exact && self.eps > 0.0 {
            return Err(Error::TruncationOnExact(self.eps));
        }
        Ok(())
    }
}

fn chunk_len(n: usize) -> usize {
    n.div_ceil(CHUNKS).max(1)
}

/// `(mu * nu)(z) = sum_x mu(x) nu(x^-1 z)`, then truncation.
pub fn convolve<W: Weight>(
    mu: &SparseMeasure<W>,
    nu: &SparseMeasure<W>,
    trunc: &Truncation,
) -> Result<SparseMeasure<W>> {
    same_group(mu.group(), nu.group())?;
    trunc.check::<W>()?;
    let group = mu.group();
    let left = mu.sorted_entries();
    let right = nu.sorted_entries();
    let limit = trunc.max_support;

    let partials: Vec<Result<FxHashMap<Element, W>>> = left
        .par_chunks(chunk_len(left.len()))
        .map(|chunk| {
            let mut acc: FxHashMap<Element, W> = FxHashMap::default();
            for (x, a) in chunk {
                for (y, b) in &right {
                    let w = a.mul(b);
                    acc.entry(group.mul(x, y)).or_insert_with(W::zero).add_assign(&w);
                }
                if acc.len() > limit {
                    return Err(Error::BudgetExceeded {
                        count: acc.len(),
                        limit,
                    });
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total: FxHashMap<Element, W> = FxHashMap::default();
    for part in partials {
        let part = part?;
        if total.is_empty() {
            total = part;
            continue;
        }
        for (z, w) in part {
            total.entry(z).or_insert_with(W::zero).add_assign(&w);
        }
        if total.len() > limit {
            return Err(Error::BudgetExceeded {
                count: total.len(),
                limit,
            });
        }
    }
    let ledger = mu.ledger().combine(nu.ledger());
    let mut out = SparseMeasure::from_map(group.clone(), total, ledger);
    truncate(&mut out, trunc.eps);
    Ok(out)
}

/// Drops smallest weights first while the dropped total stays `<= eps`.
/// Ties are broken by canonical element order.
pub fn truncate<W: Weight>(m: &mut SparseMeasure<W>, eps: f64) {
    if eps <= 0.0 || m.is_empty() {
        return;
    }
    let mut order: Vec<(f64, &Element)> = m.iter().map(|(g, w)| (w.to_f64().abs(), g)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let mut dropped = 0.0;
    let mut cut = 0;
    for (w, _) in &order {
        if dropped + w > eps {
            break;
        }
        dropped += w;
        cut += 1;
    }
    if cut == 0 {
        return;
    }
    let victims: Vec<Element> = order[..cut].iter().map(|(_, g)| (*g).clone()).collect();
    let mut map = m.map().clone();
    for g in &victims {
        map.remove(g);
    }
    let mut ledger = m.ledger().clone();
    ledger.dropped_mass += dropped;
    ledger.truncation_events += 1;
    *m = SparseMeasure::from_map(m.group().clone(), map, ledger);
}

/// `(f * h)(z)` without materializing the convolution.
pub fn convolve_at<W: Weight>(f: &SparseMeasure<W>, h: &SparseMeasure<W>, z: &Element) -> Result<W> {
    same_group(f.group(), h.group())?;
    let group = f.group();
    // hash order is deterministic for a given construction history; sorting
    // here would dominate repeated point queries
    let entries: Vec<(&Element, &W)> = f.map().iter().collect();
    let parts: Vec<W> = entries
        .par_chunks(chunk_len(entries.len()))
        .map(|chunk| {
            let mut acc = W::zero();
            for (x, a) in chunk {
                let y = group.mul(&group.inverse(x), z);
                if let Some(b) = h.map().get(&y) {
                    acc.add_assign(&a.mul(b));
                }
            }
            acc
        })
        .collect();
    let mut acc = W::zero();
    for p in parts {
        acc.add_assign(&p);
    }
    Ok(acc)
}

/// `(f * h)(z)` from the pairs `(x^-1, f(x))`, for repeated queries against
/// the same `f`.
pub fn convolve_at_inverted<W: Weight>(f_inv: &[(Element, W)], h: &SparseMeasure<W>, z: &Element) -> W {
    let group = h.group();
    let parts: Vec<W> = f_inv
        .par_chunks(chunk_len(f_inv.len()))
        .map(|chunk| {
            let mut acc = W::zero();
            for (xi, a) in chunk {
                if let Some(b) = h.map().get(&group.mul(xi, z)) {
                    acc.add_assign(&a.mul(b));
                }
            }
            acc
        })
        .collect();
    let mut acc = W::zero();
    for p in parts {
        acc.add_assign(&p);
    }
    acc
}

/// `mu^{*n}` by binary doubling with per-step budget `eps / ceil(log2 n)`.
/// With a cache, intermediate and final powers are looked up and stored,
/// keyed by the per-step budget.
pub fn convolution_power<W: Weight>(
    mu: &SparseMeasure<W>,
    n: u64,
    trunc: &Truncation,
    cache: Option<&DiskCache>,
) -> Result<SparseMeasure<W>> {
    trunc.check::<W>()?;
    if n == 0 {
        return Ok(SparseMeasure::identity(mu.group().clone()));
    }
    if n == 1 {
        return Ok(mu.clone());
    }
    let steps = (64 - (n - 1).leading_zeros()) as f64;
    let step = Truncation {
        eps: trunc.eps / steps,
        max_support: trunc.max_support,
    };
    let key_hash = mu.content_hash();
    let lookup = |k: u64| cache.and_then(|c| c.load::<W>(mu.group(), &key_hash, k, step.eps));
    if let Some(hit) = lookup(n) {
        return Ok(hit);
    }

    // mu^{*k} for k = leading bits of n, doubling then optionally adding one
    let bits = 64 - n.leading_zeros();
    let mut acc = mu.clone();
    let mut k: u64 = 1;
    for i in (0..bits - 1).rev() {
        let doubled = k * 2;
        acc = match lookup(doubled) {
            Some(m) => m,
            None => {
                let m = convolve(&acc, &acc, &step)?;
                store(cache, &m, &key_hash, doubled, step.eps);
                m
            }
        };
        k = doubled;
        if (n >> i) & 1 == 1 {
            k += 1;
            acc = match lookup(k) {
                Some(m) => m,
                None => {
                    let m = convolve(&acc, mu, &step)?;
                    store(cache, &m, &key_hash, k, step.eps);
                    m
                }
            };
        }
    }
    debug_assert_eq!(k, n);
    Ok(acc)
}

fn store<W: Weight>(cache: Option<&DiskCache>, m: &SparseMeasure<W>, hash: &str, n: u64, eps: f64) {
    if let Some(c) = cache {
        if let Err(e) = c.store(m, hash, n, eps) {
            log::warn!("could not write cache entry for n = {n}: {e}");
        }
    }
}

/// `mu^{*0}, ..., mu^{*nmax}` by repeated convolution with `mu`; the total
/// truncation budget `eps` is split evenly over the steps.
pub fn power_sequence<W: Weight>(
    mu: &SparseMeasure<W>,
    nmax: usize,
    trunc: &Truncation,
) -> Result<Vec<SparseMeasure<W>>> {
    trunc.check::<W>()?;
    let step = Truncation {
        eps: trunc.eps / nmax.max(1) as f64,
        max_support: trunc.max_support,
    };
    let mut out = vec![SparseMeasure::identity(mu.group().clone())];
    for i in 1..=nmax {
        let next = if i == 1 {
            mu.clone()
        } else {
            convolve(&out[i - 1], mu, &step)?
        };
        out.push(next);
    }
    Ok(out)
}
