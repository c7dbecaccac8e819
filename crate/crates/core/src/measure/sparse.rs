use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use sha2::{Digest, Sha256};

use super::engine::Interval;
use super::weight::{Backend, Rational, Weight};
use crate::error::{Error, Result};
use crate::group::{Element, Group};

/// Mass removed by truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorLedger {
    pub dropped_mass: f64,
    pub truncation_events: u64,
    pub backend: Backend,
}

impl ErrorLedger {
    pub fn new(backend: Backend) -> Self {
        ErrorLedger {
            dropped_mass: 0.0,
            truncation_events: 0,
            backend,
        }
    }

    /// Ledger of `mu * nu` before any new truncation: a product of measures
    /// missing masses `d1` and `d2` misses `d1 + d2 - d1 d2`.
    pub(crate) fn combine(&self, other: &ErrorLedger) -> ErrorLedger {
        let (a, b) = (self.dropped_mass, other.dropped_mass);
        ErrorLedger {
            dropped_mass: a + b - a * b,
            truncation_events: self.truncation_events + other.truncation_events,
            backend: self.backend,
        }
    }
}

/// Finitely supported function on a group. Zero weights are never stored.
#[derive(Clone)]
pub struct SparseMeasure<W: Weight> {
    group: Arc<Group>,
    entries: FxHashMap<Element, W>,
    signed: bool,
    ledger: ErrorLedger,
}

pub type ExactMeasure = SparseMeasure<Rational>;
pub type FloatMeasure = SparseMeasure<f64>;

impl<W: Weight> fmt::Debug for SparseMeasure<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (g, w) in self.sorted_entries() {
            m.entry(&format_args!("{g}"), &format_args!("{}", w.to_text()));
        }
        m.finish()
    }
}

impl<W: Weight> SparseMeasure<W> {
    /// Builds a measure, merging repeated elements and dropping zeros.
    pub fn from_entries(
        group: Arc<Group>,
        entries: impl IntoIterator<Item = (Element, W)>,
    ) -> Result<Self> {
        let mut map: FxHashMap<Element, W> = FxHashMap::default();
        for (g, w) in entries {
            if !group.contains(&g) {
                return Err(Error::GroupMismatch {
                    expected: group.id().to_string(),
                    found: format!("{} element {g}", g.kind()),
                });
            }
            map.entry(g).or_insert_with(W::zero).add_assign(&w);
        }
        map.retain(|_, w| !w.is_zero());
        let signed = map.values().any(|w| w.is_negative());
        Ok(SparseMeasure {
            group,
            entries: map,
            signed,
            ledger: ErrorLedger::new(W::BACKEND),
        })
    }

    pub(crate) fn from_map(group: Arc<Group>, mut entries: FxHashMap<Element, W>, ledger: ErrorLedger) -> Self {
        entries.retain(|_, w| !w.is_zero());
        let signed = entries.values().any(|w| w.is_negative());
        SparseMeasure {
            group,
            entries,
            signed,
            ledger,
        }
    }

    pub fn zero(group: Arc<Group>) -> Self {
        Self::from_map(group, FxHashMap::default(), ErrorLedger::new(W::BACKEND))
    }

    pub fn dirac(group: Arc<Group>, g: Element) -> Result<Self> {
        Self::from_entries(group, [(g, W::one())])
    }

    pub fn identity(group: Arc<Group>) -> Self {
        let e = group.identity();
        Self::dirac(group, e).expect("identity lies in its group")
    }

    /// Uniform probability on a list of elements (repeats add up).
    pub fn uniform(group: Arc<Group>, elements: &[Element]) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParameter("uniform measure on an empty set".into()));
        }
        let w = W::from_ratio(1, elements.len() as i64);
        Self::from_entries(group, elements.iter().map(|g| (g.clone(), w.clone())))
    }

    /// Simple random walk: uniform on the generating set.
    pub fn srw(group: Arc<Group>) -> Self {
        let gens = group.generators().elements().to_vec();
        Self::uniform(group, &gens).expect("generating sets are nonempty")
    }

    /// `1/2 delta_e + 1/2 srw`.
    pub fn lazy_srw(group: Arc<Group>) -> Self {
        Self::srw(group).lazify()
    }

    /// The lazy modification `1/2 (delta_e + mu)`.
    pub fn lazify(&self) -> Self {
        let half = W::from_ratio(1, 2);
        let mut map: FxHashMap<Element, W> =
            self.entries.iter().map(|(g, w)| (g.clone(), w.mul(&half))).collect();
        map.entry(self.group.identity())
            .or_insert_with(W::zero)
            .add_assign(&half);
        let mut ledger = self.ledger.clone();
        ledger.dropped_mass *= 0.5;
        Self::from_map(self.group.clone(), map, ledger)
    }

    /// Product measure `mu_A x mu_B` on a direct product group.
    pub fn product(group: Arc<Group>, left: &Self, right: &Self) -> Result<Self> {
        let (lg, rg, _) = group.factors().ok_or_else(|| {
            Error::InvalidParameter(format!("{} is not a direct product", group.id()))
        })?;
        if lg.id() != left.group.id() || rg.id() != right.group.id() {
            return Err(Error::GroupMismatch {
                expected: format!("{} x {}", lg.id(), rg.id()),
                found: format!("{} x {}", left.group.id(), right.group.id()),
            });
        }
        let mut map = FxHashMap::default();
        for (a, wa) in &left.entries {
            for (b, wb) in &right.entries {
                map.insert(Element::pair(a.clone(), b.clone()), wa.mul(wb));
            }
        }
        let ledger = left.ledger.combine(&right.ledger);
        Ok(Self::from_map(group, map, ledger))
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn ledger(&self) -> &ErrorLedger {
        &self.ledger
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn get(&self, g: &Element) -> W {
        self.entries.get(g).cloned().unwrap_or_else(W::zero)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, &W)> {
        self.entries.iter()
    }

    pub(crate) fn map(&self) -> &FxHashMap<Element, W> {
        &self.entries
    }

    /// Entries in canonical element order.
    pub fn sorted_entries(&self) -> Vec<(&Element, &W)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn support(&self) -> Vec<Element> {
        self.sorted_entries().into_iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn mass(&self) -> W {
        let mut acc = W::zero();
        for (_, w) in self.sorted_entries() {
            acc.add_assign(w);
        }
        acc
    }

    /// Nonnegative with total mass plus dropped mass equal to 1.
    pub fn is_probability(&self) -> bool {
        if self.signed {
            return false;
        }
        let m = self.mass();
        match W::BACKEND {
            Backend::Exact => m == W::one(),
            Backend::Float => (m.to_f64() + self.ledger.dropped_mass - 1.0).abs() < 1e-9,
        }
    }

    pub fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::NotProbability(self.mass().to_f64()))
        }
    }

    /// `f(g) = f(g^-1)` for every `g` (exactly, or to 1e-12 for floats).
    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|(g, w)| {
            let v = self.get(&self.group.inverse(g));
            match W::BACKEND {
                Backend::Exact => &v == w,
                Backend::Float => (v.to_f64() - w.to_f64()).abs() <= 1e-12 * w.to_f64().abs().max(1.0),
            }
        })
    }

    pub fn to_float(&self) -> FloatMeasure {
        let map = self.entries.iter().map(|(g, w)| (g.clone(), w.to_f64())).collect();
        let mut ledger = self.ledger.clone();
        ledger.backend = Backend::Float;
        SparseMeasure::from_map(self.group.clone(), map, ledger)
    }

    /// Content hash over group, backend and sorted entries.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.group.id().as_bytes());
        h.update([0]);
        h.update(W::BACKEND.as_str().as_bytes());
        for (g, w) in self.sorted_entries() {
            h.update([0]);
            h.update(g.encode());
            h.update([0]);
            h.update(w.to_text().as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Entrywise `f(x)^q` with `0^0 = 0`: `q = 0` gives the indicator of the
    /// support. Exact measures accept integer `q` only.
    pub fn pointwise_pow(&self, q: f64) -> Result<Self> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent q = {q} must be >= 0")));
        }
        if self.signed {
            return Err(Error::NegativeWeight);
        }
        let map: FxHashMap<Element, W> = match W::BACKEND {
            Backend::Exact => {
                if q.fract() != 0.0 || q > u32::MAX as f64 {
                    return Err(Error::NonIntegerExact(q));
                }
                let k = q as u32;
                self.entries.iter().map(|(g, w)| (g.clone(), w.powi(k))).collect()
            }
            Backend::Float => self
                .entries
                .iter()
                .map(|(g, w)| {
                    let x = w.to_f64();
                    let y = if q == 0.0 { 1.0 } else { x.powf(q) };
                    (g.clone(), W::from_f64(y))
                })
                .collect(),
        };
        Ok(Self::from_map(self.group.clone(), map, ErrorLedger::new(W::BACKEND)))
    }

    /// `f - g.f` where `(g.f)(x) = f(g^-1 x)`.
    pub fn shift_diff(&self, g: &Element) -> Result<Self> {
        if !self.group.contains(g) {
            return Err(Error::GroupMismatch {
                expected: self.group.id().to_string(),
                found: format!("{} element {g}", g.kind()),
            });
        }
        let mut map = self.entries.clone();
        for (y, w) in &self.entries {
            map.entry(self.group.mul(g, y))
                .or_insert_with(W::zero)
                .sub_assign(w);
        }
        Ok(Self::from_map(self.group.clone(), map, ErrorLedger::new(W::BACKEND)))
    }

    /// Left translate `g.f`.
    pub fn translate(&self, g: &Element) -> Self {
        let map = self
            .entries
            .iter()
            .map(|(y, w)| (self.group.mul(g, y), w.clone()))
            .collect();
        Self::from_map(self.group.clone(), map, self.ledger.clone())
    }

    /// `sum |f(x)|^p` for integer `p >= 1`, exactly in the measure's backend.
    pub fn lp_norm_pow(&self, p: u32) -> W {
        let mut acc = W::zero();
        for (_, w) in self.sorted_entries() {
            acc.add_assign(&w.abs().powi(p));
        }
        acc
    }

    pub fn lp_norm(&self, p: NormP) -> Result<f64> {
        match p {
            NormP::Card => Ok(self.entries.len() as f64),
            NormP::Finite(p) => {
                if !(p >= 1.0) || !p.is_finite() {
                    return Err(Error::InvalidExponent(p));
                }
                if p.fract() == 0.0 && p <= 64.0 {
                    return Ok(self.lp_norm_pow(p as u32).to_f64().powf(1.0 / p));
                }
                let mut acc = 0.0;
                for (_, w) in self.sorted_entries() {
                    acc += w.to_f64().abs().powf(p);
                }
                Ok(acc.powf(1.0 / p))
            }
        }
    }

    /// `mu - nu` as a signed measure.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        same_group(&self.group, &other.group)?;
        let mut map = self.entries.clone();
        for (g, w) in &other.entries {
            map.entry(g.clone()).or_insert_with(W::zero).sub_assign(w);
        }
        Ok(Self::from_map(self.group.clone(), map, ErrorLedger::new(W::BACKEND)))
    }

    /// `sum_{|x| <= r} f(x)`.
    pub fn ball_mass(&self, r: u32) -> Result<W> {
        let mut acc = W::zero();
        for (g, w) in self.sorted_entries() {
            match self.group.word_length(g) {
                Ok(l) if l <= r => acc.add_assign(w),
                Ok(_) => {}
                Err(Error::RadiusExceeded { lower_bound, .. }) if lower_bound > r => {}
                Err(e) => return Err(e),
            }
        }
        Ok(acc)
    }

    /// Whether a walk driven by this measure can only return at even times.
    /// `mu(e) > 0` settles it; otherwise the Cayley graph of the support is
    /// 2-coloured breadth first until an odd cycle shows up or `max_nodes`
    /// elements have been coloured.
    pub fn is_periodic(&self, max_nodes: usize) -> bool {
        let e = self.group.identity();
        if self.entries.contains_key(&e) {
            return false;
        }
        let steps = self.support();
        let mut colour: FxHashMap<Element, bool> = FxHashMap::default();
        colour.insert(e.clone(), false);
        let mut queue = VecDeque::from([e]);
        while let Some(x) = queue.pop_front() {
            let c = colour[&x];
            for s in &steps {
                let y = self.group.mul(&x, s);
                match colour.get(&y) {
                    Some(&cy) if cy == c => return false,
                    Some(_) => {}
                    None => {
                        if colour.len() < max_nodes {
                            colour.insert(y.clone(), !c);
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        true
    }

    /// Errors with a lazification hint when the walk is periodic.
    pub fn require_aperiodic(&self) -> Result<()> {
        if self.is_periodic(20_000) {
            Err(Error::Periodic)
        } else {
            Ok(())
        }
    }
}

/// `p` for an `l_p` norm, or support cardinality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormP {
    Finite(f64),
    Card,
}

impl std::str::FromStr for NormP {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "card" {
            return Ok(NormP::Card);
        }
        let p: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("p = `{s}` (expected a number or `card`)")))?;
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(NormP::Finite(p))
    }
}

impl fmt::Display for NormP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormP::Card => write!(f, "card"),
            NormP::Finite(p) => write!(f, "{p}"),
        }
    }
}

pub(crate) fn same_group(a: &Arc<Group>, b: &Arc<Group>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.id() == b.id() {
        Ok(())
    } else {
        Err(Error::GroupMismatch {
            expected: a.id().to_string(),
            found: b.id().to_string(),
        })
    }
}

/// `||a - b||_1`, in `[0, 2]` for probability measures, with the interval
/// that truncation leaves for the true value.
pub fn tv_half_distance<W: Weight>(a: &SparseMeasure<W>, b: &SparseMeasure<W>) -> Result<(W, Interval)> {
    let v = a.difference(b)?.lp_norm_pow(1);
    let slack = a.ledger.dropped_mass + b.ledger.dropped_mass;
    let x = v.to_f64();
    Ok((v, Interval::new((x - slack).max(0.0), (x + slack).min(2.0))))
}
