//! Textual measure specifications.
//!
//! ```text
//! srw                         uniform on the generating set
//! lazy                        1/2 delta_e + 1/2 srw
//! lazy:1/3                    1/3 delta_e + 2/3 srw
//! uniform:a;A;b;B             uniform on the listed elements
//! weights:e=1/2;x1=1/4;X1=1/4 explicit weights (fractions or decimals)
//! dirac:a.b                   point mass
//! product:lazy|srw            mu_A x mu_B on a direct product
//! ```

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;

use super::convolve::Truncation;
use super::engine::PowerEngine;
use super::sparse::SparseMeasure;
use super::weight::{Rational, Weight};
use crate::error::{Error, Result};
use crate::group::Group;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MuSpec {
    Srw,
    Lazy(Option<String>),
    Uniform(Vec<String>),
    Weights(Vec<(String, String)>),
    Dirac(String),
    Product(Box<MuSpec>, Box<MuSpec>),
}

fn bad(s: &str, why: &str) -> Error {
    Error::InvalidParameter(format!("measure spec `{s}`: {why}"))
}

impl FromStr for MuSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s.split_once(':').unwrap_or((s, ""));
        let list = || -> Vec<String> {
            body.split(';')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect()
        };
        match head {
            "srw" if body.is_empty() => Ok(MuSpec::Srw),
            "lazy" => Ok(MuSpec::Lazy((!body.is_empty()).then(|| body.trim().to_string()))),
            "uniform" => {
                let items = list();
                if items.is_empty() {
                    return Err(bad(s, "no elements"));
                }
                Ok(MuSpec::Uniform(items))
            }
            "weights" => {
                let mut out = Vec::new();
                for item in list() {
                    let (g, w) = item.rsplit_once('=').ok_or_else(|| bad(s, "expected element=weight"))?;
                    out.push((g.trim().to_string(), w.trim().to_string()));
                }
                if out.is_empty() {
                    return Err(bad(s, "no weights"));
                }
                Ok(MuSpec::Weights(out))
            }
            "dirac" if !body.is_empty() => Ok(MuSpec::Dirac(body.trim().to_string())),
            "product" => {
                let (l, r) = split_bar(body).ok_or_else(|| bad(s, "expected product:<spec>|<spec>"))?;
                Ok(MuSpec::Product(Box::new(l.parse()?), Box::new(r.parse()?)))
            }
            _ => Err(bad(s, "unknown form (srw, lazy, uniform:, weights:, dirac:, product:)")),
        }
    }
}

// first `|` outside brackets
fn split_bar(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            '|' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

impl fmt::Display for MuSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuSpec::Srw => write!(f, "srw"),
            MuSpec::Lazy(None) => write!(f, "lazy"),
            MuSpec::Lazy(Some(p)) => write!(f, "lazy:{p}"),
            MuSpec::Uniform(v) => write!(f, "uniform:{}", v.join(";")),
            MuSpec::Weights(v) => {
                let items: Vec<String> = v.iter().map(|(g, w)| format!("{g}={w}")).collect();
                write!(f, "weights:{}", items.join(";"))
            }
            MuSpec::Dirac(g) => write!(f, "dirac:{g}"),
            MuSpec::Product(a, b) => write!(f, "product:{a}|{b}"),
        }
    }
}

/// Parses `3/8`, `0.375` or `2` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num: BigInt = format!("{int}{frac}").parse().ok()?;
    let den = BigInt::from(10).pow(frac.len() as u32);
    let r = Rational::new(num, den);
    Some(if neg { -r } else { r })
}

impl MuSpec {
    pub fn build<W: Weight>(&self, group: &Arc<Group>) -> Result<SparseMeasure<W>> {
        let weight = |s: &str| -> Result<W> {
            parse_rational(s)
                .map(|r| W::from_rational(&r))
                .ok_or_else(|| bad(s, "weight is not a fraction or decimal"))
        };
        match self {
            MuSpec::Srw => Ok(SparseMeasure::srw(group.clone())),
            MuSpec::Lazy(None) => Ok(SparseMeasure::lazy_srw(group.clone())),
            MuSpec::Lazy(Some(p)) => {
                let stay = weight(p)?;
                if stay.is_negative() || stay.to_f64() > 1.0 {
                    return Err(bad(p, "laziness must lie in [0, 1]"));
                }
                let srw = SparseMeasure::<W>::srw(group.clone());
                let move_p = W::one().sub(&stay);
                let mut entries: Vec<_> = srw.iter().map(|(g, w)| (g.clone(), w.mul(&move_p))).collect();
                entries.push((group.identity(), stay));
                SparseMeasure::from_entries(group.clone(), entries)
            }
            MuSpec::Uniform(items) => {
                let els = items
                    .iter()
                    .map(|t| group.parse_element(t))
                    .collect::<Result<Vec<_>>>()?;
                SparseMeasure::uniform(group.clone(), &els)
            }
            MuSpec::Weights(items) => {
                let mut entries = Vec::new();
                for (g, w) in items {
                    entries.push((group.parse_element(g)?, weight(w)?));
                }
                SparseMeasure::from_entries(group.clone(), entries)
            }
            MuSpec::Dirac(g) => SparseMeasure::dirac(group.clone(), group.parse_element(g)?),
            MuSpec::Product(a, b) => {
                let (ga, gb, _) = group
                    .factors()
                    .ok_or_else(|| bad(&self.to_string(), "group is not a direct product"))?;
                let ma = a.build::<W>(ga)?;
                let mb = b.build::<W>(gb)?;
                SparseMeasure::product(group.clone(), &ma, &mb)
            }
        }
    }

    /// Power engine for this measure, factorized for product specs.
    pub fn engine<W: Weight>(&self, group: &Arc<Group>, step: Truncation) -> Result<PowerEngine<W>> {
        match self {
            MuSpec::Product(a, b) => {
                let (ga, gb, _) = group
                    .factors()
                    .ok_or_else(|| bad(&self.to_string(), "group is not a direct product"))?;
                let ma = a.build::<W>(ga)?;
                let mb = b.build::<W>(gb)?;
                PowerEngine::product(group.clone(), &ma, &mb, step)
            }
            _ => Ok(PowerEngine::for_measure(&self.build::<W>(group)?, step)),
        }
    }
}
