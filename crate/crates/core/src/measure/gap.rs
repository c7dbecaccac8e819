use std::ops::RangeInclusive;

use super::engine::{Interval, PowerEngine};
use super::weight::Weight;
use crate::error::{Error, Result};

/// `gamma(n) = mu^{*n}(e) - mu^{*(n+1)}(e)` over a range, with consecutive
/// ratios `gamma(n+1) / gamma(n)`.
#[derive(Clone, Debug)]
pub struct GapSequence<W> {
    pub n_start: usize,
    pub values: Vec<W>,
    pub intervals: Vec<Interval>,
    pub ratios: Vec<W>,
    pub ratio_intervals: Vec<Interval>,
}

impl<W: Weight> GapSequence<W> {
    pub fn n_values(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).map(move |i| self.n_start + i)
    }
}

pub fn return_gap<W: Weight>(engine: &mut PowerEngine<W>, n: usize) -> Result<(W, Interval)> {
    engine.require_aperiodic()?;
    let a = engine.return_prob(n)?;
    let b = engine.return_prob(n + 1)?;
    Ok(a.minus(&b))
}

pub fn gap_ratio_profile<W: Weight>(
    engine: &mut PowerEngine<W>,
    range: RangeInclusive<usize>,
) -> Result<GapSequence<W>> {
    engine.require_aperiodic()?;
    let (lo, hi) = range.into_inner();
    if hi < lo {
        return Err(Error::InvalidParameter(format!("empty range {lo}..={hi}")));
    }
    let mut returns = Vec::with_capacity(hi - lo + 3);
    for n in lo..=hi + 2 {
        returns.push(engine.return_prob(n)?);
    }
    let mut values = Vec::new();
    let mut intervals = Vec::new();
    for w in returns.windows(2) {
        let (v, iv) = w[0].minus(&w[1]);
        values.push(v);
        intervals.push(iv);
    }
    let mut ratios = Vec::new();
    let mut ratio_intervals = Vec::new();
    for i in 0..values.len() - 1 {
        if values[i].is_zero() {
            return Err(Error::VanishingDenominator("gamma ratio"));
        }
        ratios.push(values[i + 1].div(&values[i]));
        ratio_intervals.push(intervals[i + 1].div(&intervals[i]));
    }
    values.pop();
    intervals.pop();
    Ok(GapSequence {
        n_start: lo,
        values,
        intervals,
        ratios,
        ratio_intervals,
    })
}
