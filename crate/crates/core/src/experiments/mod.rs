//! Config-driven experiment runs and the acceptance suite.
//!
//! A run is described by an [`ExperimentConfig`] (TOML), produces a
//! [`ResultRecord`] and writes `config.toml`, `record.json` and one CSV per
//! series (`n,value,err_lo,err_hi`) under `<out>/<config hash>/`.

pub mod acceptance;
#[cfg(test)]
mod tests;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cocycle::{catalog_entry, CocycleFile, FiniteDimCocycle};
use crate::empirical::{classify_masses, hfd_condition1, hfd_condition2, kesten_diagnostic, concentration_experiment, thin_profile, HfdVerdict, KestenRow};
use crate::error::{Error, Result};
use crate::group::{Element, Group};
use crate::measure::{convolution_power, Backend, DiskCache, Interval, MuSpec, NormP, Rational, Truncation, Weight};
use crate::walk::{cautiousness_estimate, endpoint_counts, escape_rate, Estimate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "conv")]
    Conv,
    #[serde(rename = "walk")]
    Walk,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "chi")]
    Chi,
    #[serde(rename = "thin")]
    Thin,
    #[serde(rename = "thmB")]
    Concentration,
    #[serde(rename = "hfd")]
    Hfd,
    #[serde(rename = "kesten")]
    Kesten,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Conv => "conv",
            ExperimentKind::Walk => "walk",
            ExperimentKind::Beta => "beta",
            ExperimentKind::Chi => "chi",
            ExperimentKind::Thin => "thin",
            ExperimentKind::Concentration => "thmB",
            ExperimentKind::Hfd => "hfd",
            ExperimentKind::Kesten => "kesten",
        }
    }
}

/// Numeric and textual parameters; which ones are read depends on the kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,
    /// Explicit subsequence `n_i`; overrides `nmin..=nmax`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    /// Norm exponent: a number `>= 1` or `card`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Elements in the group's text syntax.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<String>>,
    /// Catalog cocycle name or path to a cocycle TOML file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<String>,
    /// `exact` or `mc` for beta.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// `cautious`, `escape` or `endpoint` for walk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stat: Option<String>,
    /// 1 or 2 for hfd.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cond: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    /// Per-step truncation threshold; 0 keeps every element.
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "default_cap")]
    pub max_support: usize,
}

fn default_cap() -> usize {
    crate::measure::convolve::DEFAULT_SUPPORT_BUDGET
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            eps: 0.0,
            max_support: default_cap(),
        }
    }
}

fn default_mu() -> String {
    "srw".into()
}

fn default_backend() -> String {
    "exact".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub group: String,
    #[serde(default = "default_mu")]
    pub mu: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub budget: Budget,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, group: &str, mu: &str) -> Self {
        ExperimentConfig {
            kind,
            group: group.into(),
            mu: mu.into(),
            seed: 0,
            backend: default_backend(),
            params: Params::default(),
            budget: Budget::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// SHA-256 of the canonical JSON form; every field takes part.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configs serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn backend(&self) -> Result<Backend> {
        self.backend.parse().map_err(|_| invalid("backend", format!("`{}` is not exact or float", self.backend)))
    }

    pub fn truncation(&self) -> Truncation {
        Truncation::eps(self.budget.eps).with_budget(self.budget.max_support)
    }

    fn n_list(&self) -> Result<Vec<usize>> {
        if let Some(ns) = &self.params.ns {
            if ns.is_empty() {
                return Err(invalid("params.ns", "empty"));
            }
            return Ok(ns.clone());
        }
        match (self.params.nmin, self.params.nmax) {
            (Some(lo), Some(hi)) if lo <= hi => Ok((lo..=hi).collect()),
            (Some(lo), Some(hi)) => Err(invalid("params.nmax", format!("{hi} < nmin = {lo}"))),
            _ => Err(invalid("params.nmin", "give nmin and nmax, or ns")),
        }
    }

    fn require<T: Copy>(v: Option<T>, field: &str) -> Result<T> {
        v.ok_or_else(|| invalid(field, "required for this experiment"))
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let backend = self.backend()?;
        let group = Group::from_id(&self.group).map_err(|e| invalid("group", e.to_string()))?;
        let group = Arc::new(group);
        let spec: MuSpec = self.mu.parse().map_err(|e: Error| invalid("mu", e.to_string()))?;
        let mu = spec.build::<Rational>(&group).map_err(|e| invalid("mu", e.to_string()))?;
        if !mu.is_symmetric() {
            return Err(invalid("mu", "measure must be symmetric"));
        }
        let b = &self.budget;
        if !(b.eps >= 0.0 && b.eps.is_finite()) {
            return Err(invalid("budget.eps", format!("{} must be finite and >= 0", b.eps)));
        }
        if b.eps > 0.0 && backend == Backend::Exact {
            return Err(invalid("budget.eps", "truncation needs the float backend"));
        }
        if b.max_support == 0 {
            return Err(invalid("budget.max_support", "must be positive"));
        }
        let p = &self.params;
        if let Some(t) = p.trials {
            if t == 0 {
                return Err(invalid("params.trials", "must be positive"));
            }
        }
        match self.kind {
            ExperimentKind::Conv => {
                Self::require(p.n, "params.n")?;
            }
            ExperimentKind::Walk => {
                Self::require(p.n, "params.n")?;
                match p.stat.as_deref().unwrap_or("escape") {
                    "cautious" => {
                        if p.c.as_ref().is_none_or(|c| c.len() != 1) {
                            return Err(invalid("params.c", "cautious needs exactly one c"));
                        }
                    }
                    "escape" | "endpoint" => {}
                    other => return Err(invalid("params.stat", format!("`{other}` is not cautious, escape or endpoint"))),
                }
            }
            ExperimentKind::Beta | ExperimentKind::Chi => {
                if p.cocycle.is_none() {
                    return Err(invalid("params.cocycle", "required for this experiment"));
                }
                Self::require(p.n, "params.n")?;
                if let Some(mode) = p.mode.as_deref() {
                    if mode != "exact" && mode != "mc" {
                        return Err(invalid("params.mode", format!("`{mode}` is not exact or mc")));
                    }
                }
            }
            ExperimentKind::Thin => {
                self.n_list()?;
                let pp = p.p.as_deref().unwrap_or("2");
                pp.parse::<NormP>().map_err(|e| invalid("params.p", e.to_string()))?;
            }
            ExperimentKind::Concentration => {
                Self::require(p.m, "params.m")?;
                Self::require(p.n, "params.n")?;
            }
            ExperimentKind::Hfd => {
                self.n_list()?;
                match p.cond {
                    Some(1) => {
                        let d = Self::require(p.delta, "params.delta")?;
                        if !(d > 0.0) {
                            return Err(invalid("params.delta", "must be > 0"));
                        }
                    }
                    Some(2) => {
                        if p.c.as_ref().is_none_or(|c| c.is_empty()) {
                            return Err(invalid("params.c", "cond 2 needs at least one c"));
                        }
                    }
                    _ => return Err(invalid("params.cond", "must be 1 or 2")),
                }
            }
            ExperimentKind::Kesten => {
                let ns = self.n_list()?;
                if ns.windows(2).any(|w| w[1] != w[0] + 1) || ns[0] == 0 {
                    return Err(invalid("params.nmin", "kesten needs a contiguous range starting at n >= 1"));
                }
            }
        }
        if let Some(els) = &p.elements {
            for e in els {
                group.parse_element(e).map_err(|err| invalid("params.elements", err.to_string()))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub err_lo: f64,
    pub err_hi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

impl Metric {
    pub fn point(name: impl Into<String>, value: f64) -> Self {
        Metric {
            name: name.into(),
            value,
            err_lo: value,
            err_hi: value,
            exact: None,
        }
    }

    pub fn interval(name: impl Into<String>, value: f64, iv: Interval) -> Self {
        Metric {
            name: name.into(),
            value,
            err_lo: iv.lo,
            err_hi: iv.hi,
            exact: None,
        }
    }

    /// Mean with a two standard error band.
    pub fn estimate(name: impl Into<String>, e: &Estimate) -> Self {
        Metric {
            name: name.into(),
            value: e.mean,
            err_lo: e.mean - 2.0 * e.se,
            err_hi: e.mean + 2.0 * e.se,
            exact: None,
        }
    }

    fn with_exact(mut self, exact: Option<String>) -> Self {
        self.exact = exact;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub n: usize,
    pub value: f64,
    pub err_lo: f64,
    pub err_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend: String,
    pub dropped_mass: f64,
    pub route: Option<String>,
    /// Not part of the record digest.
    pub cache_hits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub group: String,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub series: BTreeMap<String, Vec<SeriesRow>>,
    /// Full report of the underlying computation.
    pub detail: serde_json::Value,
    pub provenance: Provenance,
    /// Set when a budget stopped the run early; the rows present are valid.
    pub incomplete: bool,
    /// Not part of the record digest.
    pub wall_clock_ms: u64,
}

impl ResultRecord {
    /// SHA-256 of the record without wall-clock time and cache hits.
    pub fn digest(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_ms = 0;
        r.provenance.cache_hits = 0;
        let json = serde_json::to_string(&r).expect("records serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

struct Outcome {
    metrics: Vec<Metric>,
    series: BTreeMap<String, Vec<SeriesRow>>,
    detail: serde_json::Value,
    dropped: f64,
    route: Option<String>,
    cache_hits: u64,
    incomplete: bool,
}

impl Outcome {
    fn new(detail: serde_json::Value) -> Self {
        Outcome {
            metrics: Vec::new(),
            series: BTreeMap::new(),
            detail,
            dropped: 0.0,
            route: None,
            cache_hits: 0,
            incomplete: false,
        }
    }
}

fn is_budget(e: &Error) -> bool {
    e.exit_code() == 3
}

fn to_json<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// Runs `f` on the whole list; if a budget stops it, reruns prefix by prefix
/// and keeps the longest prefix that completes.
fn with_partial<T>(ns: &[usize], mut f: impl FnMut(&[usize]) -> Result<T>) -> Result<(T, bool)> {
    match f(ns) {
        Ok(t) => Ok((t, false)),
        Err(e) if is_budget(&e) => {
            let mut best = None;
            for k in 1..ns.len() {
                match f(&ns[..k]) {
                    Ok(t) => best = Some(t),
                    Err(e2) if is_budget(&e2) => break,
                    Err(e2) => return Err(e2),
                }
            }
            match best {
                Some(t) => Ok((t, true)),
                None => Err(e),
            }
        }
        Err(e) => Err(e),
    }
}

/// A catalog name or the path of a cocycle file.
pub fn load_cocycle(spec: &str) -> Result<FiniteDimCocycle> {
    match catalog_entry(spec) {
        Ok(entry) => Ok(entry.cocycle),
        Err(_) if Path::new(spec).exists() => CocycleFile::load(Path::new(spec))?.build(),
        Err(_) => Err(invalid("params.cocycle", format!("`{spec}` is neither a catalog name nor a file"))),
    }
}

fn elements_or(group: &Group, given: &Option<Vec<String>>, default: Vec<Element>) -> Result<Vec<Element>> {
    match given {
        Some(els) => els.iter().map(|e| group.parse_element(e)).collect(),
        None => Ok(default),
    }
}

fn execute<W: Weight>(cfg: &ExperimentConfig, cache: Option<&DiskCache>) -> Result<Outcome> {
    let group = Arc::new(Group::from_id(&cfg.group)?);
    let spec: MuSpec = cfg.mu.parse()?;
    let mu = spec.build::<W>(&group)?;
    let p = &cfg.params;
    let trials = p.trials.unwrap_or(10_000);
    let step = cfg.truncation();
    match cfg.kind {
        ExperimentKind::Conv => {
            let n = p.n.expect("validated");
            let hit = cache.is_some_and(|c| c.path_for::<W>(&group, &mu.content_hash(), n as u64, step.eps).exists());
            let law = convolution_power(&mu, n as u64, &step, cache)?;
            let dropped = law.ledger().dropped_mass;
            let els = elements_or(&group, &p.elements, vec![group.identity()])?;
            let labels = p.elements.clone().unwrap_or_else(|| vec!["e".into()]);
            let mut out = Outcome::new(serde_json::json!({ "support": law.support_len() }));
            for (g, label) in els.iter().zip(&labels) {
                let w = law.get(g);
                let v = w.to_f64();
                out.metrics.push(
                    Metric::interval(format!("mass[{label}]"), v, Interval::new(v, v + dropped))
                        .with_exact((W::BACKEND == Backend::Exact).then(|| w.to_text())),
                );
            }
            out.metrics.push(Metric::point("support", law.support_len() as f64));
            out.metrics.push(Metric::point("mass", law.mass().to_f64()).with_exact((W::BACKEND == Backend::Exact).then(|| law.mass().to_text())));
            let e = law.get(&group.identity()).to_f64();
            out.series.insert(
                "return".into(),
                vec![SeriesRow {
                    n,
                    value: e,
                    err_lo: e,
                    err_hi: e + dropped,
                }],
            );
            out.dropped = dropped;
            out.cache_hits = u64::from(hit);
            Ok(out)
        }
        ExperimentKind::Walk => {
            let n = p.n.expect("validated");
            let mut out = Outcome::new(serde_json::Value::Null);
            match p.stat.as_deref().unwrap_or("escape") {
                "cautious" => {
                    let c = p.c.as_ref().expect("validated")[0];
                    let est = cautiousness_estimate(&mu, n, c, trials, cfg.seed)?;
                    out.metrics.push(Metric::estimate("cautious", &est));
                    out.detail = to_json(&est);
                }
                "escape" => {
                    let est = escape_rate(&mu, n, trials, cfg.seed)?;
                    out.metrics.push(Metric::estimate("escape", &est));
                    out.detail = to_json(&est);
                }
                _ => {
                    let counts = endpoint_counts(&mu, n, trials, cfg.seed)?;
                    let at_e = counts.get(&group.identity()).copied().unwrap_or(0);
                    let est = Estimate::proportion(at_e, trials)?;
                    out.metrics.push(Metric::estimate("return_frequency", &est));
                    out.metrics.push(Metric::point("distinct_endpoints", counts.len() as f64));
                    let mut lengths = Vec::with_capacity(trials as usize);
                    let mut keys: Vec<(&Element, &u64)> = counts.iter().collect();
                    keys.sort();
                    for (x, k) in keys {
                        let l = group.word_length(x)? as f64;
                        lengths.extend(std::iter::repeat_n(l, *k as usize));
                    }
                    out.metrics.push(Metric::estimate("endpoint_length", &Estimate::from_samples(&lengths)?));
                }
            }
            Ok(out)
        }
        ExperimentKind::Beta | ExperimentKind::Chi => {
            let b = load_cocycle(p.cocycle.as_deref().expect("validated"))?;
            if b.group().id() != group.id() {
                return Err(invalid("group", format!("cocycle lives on {}", b.group().id())));
            }
            let b = b.with_measure(spec.build::<f64>(&group)?)?;
            let n = p.n.expect("validated");
            let report = b.spectral_report()?;
            let mut out = Outcome::new(to_json(&report.summary()));
            if cfg.kind == ExperimentKind::Beta {
                out.metrics.push(Metric::point("beta_limit", report.beta));
                out.metrics.push(Metric::point("beta_at_n", report.beta_at(n)));
                if let Some(bound) = report.dimension_bound() {
                    out.metrics.push(Metric::point("dimension_bound", bound));
                }
                if p.mode.as_deref() == Some("mc") {
                    let est = b.beta_monte_carlo(n, trials, cfg.seed)?;
                    out.metrics.push(Metric::estimate("beta_mc", &est.beta));
                    out.metrics.push(Metric::estimate("martingale", &est.martingale));
                }
            } else {
                let chi = report.chi_mixture()?;
                let xs = b.normalized_norm_samples(n, trials, cfg.seed)?;
                let ks = chi.ks_distance(&xs)?;
                out.metrics.push(Metric::interval(
                    "ks",
                    ks.statistic,
                    Interval::new((ks.statistic - ks.reference_error).max(0.0), ks.statistic + ks.reference_error),
                ));
                for k in [2u32, 4] {
                    let ys: Vec<f64> = xs.iter().map(|&x| f64::powi(x, k as i32)).collect();
                    out.metrics.push(Metric::estimate(format!("moment{k}"), &Estimate::from_samples(&ys)?));
                    out.metrics.push(Metric::point(format!("chi_moment{k}"), chi.moment(k)?));
                }
                out.detail = serde_json::json!({ "spectral": report.summary(), "ks": ks, "theta": chi.theta(), "sigmas": chi.sigmas() });
            }
            Ok(out)
        }
        ExperimentKind::Thin => {
            let pnorm: NormP = p.p.as_deref().unwrap_or("2").parse()?;
            let q = p.q.unwrap_or(1.0);
            let ns = cfg.n_list()?;
            let mut engine = spec.engine::<W>(&group, step)?;
            let els = elements_or(&group, &p.elements, group.generators().elements().to_vec())?;
            let (prof, incomplete) = with_partial(&ns, |sub| thin_profile(&mut engine, pnorm, q, &els, sub))?;
            let mut out = Outcome::new(to_json(&prof));
            out.series.insert(
                "alpha".into(),
                prof.rows
                    .iter()
                    .map(|r| SeriesRow {
                        n: r.n,
                        value: r.alpha,
                        err_lo: r.alpha_interval.lo,
                        err_hi: r.alpha_interval.hi,
                    })
                    .collect(),
            );
            for (i, name) in prof.elements.iter().enumerate() {
                out.series.insert(
                    format!("rho[{name}]"),
                    prof.rows
                        .iter()
                        .map(|r| SeriesRow {
                            n: r.n,
                            value: r.scores[i],
                            err_lo: r.intervals[i].lo,
                            err_hi: r.intervals[i].hi,
                        })
                        .collect(),
                );
            }
            if let Some(d) = prof.triangle_defect(&group) {
                out.metrics.push(Metric::point("triangle_defect", d));
            }
            out.route = Some(prof.route.clone());
            out.incomplete = incomplete;
            Ok(out)
        }
        ExperimentKind::Concentration => {
            let stat = concentration_experiment(&mu, step, p.m.expect("validated"), p.n.expect("validated"), trials, cfg.seed)?;
            let mut out = Outcome::new(to_json(&stat));
            out.metrics.push(Metric::interval("alpha", stat.alpha, stat.alpha_interval).with_exact(stat.alpha_exact.clone()));
            out.metrics.push(Metric::interval("exact_deviation", stat.exact_deviation, stat.exact_deviation_interval));
            out.metrics.push(Metric::estimate("deviation", &stat.deviation));
            out.metrics.push(Metric::point("average_residual", stat.average_residual));
            let iv = stat.exact_deviation_interval;
            out.series.insert(
                "exact_deviation".into(),
                vec![SeriesRow {
                    n: stat.n,
                    value: stat.exact_deviation,
                    err_lo: iv.lo,
                    err_hi: iv.hi,
                }],
            );
            out.route = Some(stat.route.clone());
            Ok(out)
        }
        ExperimentKind::Hfd => {
            let ns = cfg.n_list()?;
            let mut engine = spec.engine::<W>(&group, step)?;
            let mut out = Outcome::new(serde_json::Value::Null);
            if p.cond == Some(1) {
                let delta = p.delta.expect("validated");
                let (reps, incomplete) = with_partial(&ns, |sub| {
                    sub.iter().map(|&n| hfd_condition1(&mut engine, delta, n..=n)).collect::<Result<Vec<_>>>()
                })?;
                let rows: Vec<_> = reps.iter().flat_map(|r| r.rows.clone()).collect();
                out.series.insert(
                    "hfd1".into(),
                    rows.iter()
                        .map(|r| SeriesRow {
                            n: r.n,
                            value: r.value,
                            err_lo: r.interval.lo,
                            err_hi: r.interval.hi,
                        })
                        .collect(),
                );
                let min = reps.iter().map(|r| r.min).fold(f64::INFINITY, f64::min);
                let margin = reps.iter().map(|r| r.margin).fold(0.0, f64::max);
                let verdict = if min < 2.0 - margin { HfdVerdict::EvidenceFor } else { HfdVerdict::NoEvidence };
                out.metrics.push(Metric::point("min", min));
                out.metrics.push(Metric::point("margin", margin));
                out.detail = serde_json::json!({ "delta": delta, "rows": rows, "verdict": verdict });
                out.incomplete = incomplete;
            } else {
                let cs = p.c.clone().expect("validated");
                let (rows, incomplete) = with_partial(&ns, |sub| {
                    let mut rows = Vec::new();
                    for &n in sub {
                        rows.extend(hfd_condition2(&mut engine, &cs, n..=n)?.rows);
                    }
                    Ok(rows)
                })?;
                for &c in &cs {
                    let pts: Vec<SeriesRow> = rows
                        .iter()
                        .filter(|r| r.c == c)
                        .map(|r| SeriesRow {
                            n: r.n,
                            value: r.mass,
                            err_lo: r.interval.lo,
                            err_hi: r.interval.hi,
                        })
                        .collect();
                    let ns: Vec<usize> = pts.iter().map(|r| r.n).collect();
                    let ys: Vec<f64> = pts.iter().map(|r| r.value).collect();
                    let (trend, slope) = classify_masses(&ns, &ys);
                    out.metrics.push(Metric::point(format!("slope[c={c}]"), slope.unwrap_or(f64::NAN)));
                    out.detail[format!("trend[c={c}]")] = serde_json::Value::String(trend.to_string());
                    out.series.insert(format!("mass[c={c}]"), pts);
                }
                out.incomplete = incomplete;
            }
            out.route = Some(engine.route().to_string());
            Ok(out)
        }
        ExperimentKind::Kesten => {
            let ns = cfg.n_list()?;
            let mut engine = spec.engine::<W>(&group, step)?;
            let (rep, incomplete) = with_partial(&ns, |sub| kesten_diagnostic(&mut engine, sub[0]..=sub[sub.len() - 1]))?;
            let mut out = Outcome::new(to_json(&rep));
            let pick = |f: &dyn Fn(&KestenRow) -> Option<f64>| -> Vec<SeriesRow> {
                rep.rows
                    .iter()
                    .filter_map(|r| {
                        f(r).map(|v| SeriesRow {
                            n: r.n,
                            value: v,
                            err_lo: v,
                            err_hi: v,
                        })
                    })
                    .collect()
            };
            out.series.insert("raw".into(), pick(&|r| Some(r.raw)));
            out.series.insert("corrected".into(), pick(&|r| r.corrected));
            out.series.insert("gamma_ratio".into(), pick(&|r| r.gamma_ratio));
            out.series.insert(
                "return".into(),
                rep.rows
                    .iter()
                    .map(|r| SeriesRow {
                        n: 2 * r.n,
                        value: r.return_prob,
                        err_lo: r.return_interval.lo,
                        err_hi: r.return_interval.hi,
                    })
                    .collect(),
            );
            out.metrics.push(Metric::point("final_raw", rep.final_raw));
            if let Some(c) = rep.final_corrected {
                out.metrics.push(Metric::point("final_corrected", c));
            }
            out.route = Some(engine.route().to_string());
            out.incomplete = incomplete;
            Ok(out)
        }
    }
}

/// Runs `cfg` in memory, without writing files.
pub fn evaluate(cfg: &ExperimentConfig, cache: Option<&DiskCache>) -> Result<ResultRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let out = match cfg.backend()? {
        Backend::Exact => execute::<Rational>(cfg, cache)?,
        Backend::Float => execute::<f64>(cfg, cache)?,
    };
    Ok(ResultRecord {
        config_hash: cfg.hash(),
        kind: cfg.kind,
        group: cfg.group.clone(),
        seed: cfg.seed,
        metrics: out.metrics,
        series: out.series,
        detail: out.detail,
        provenance: Provenance {
            backend: cfg.backend.clone(),
            dropped_mass: out.dropped,
            route: out.route,
            cache_hits: out.cache_hits,
        },
        incomplete: out.incomplete,
        wall_clock_ms: start.elapsed().as_millis() as u64,
    })
}

/// File name for a series label.
pub fn series_file(name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' || c == '=' { c } else { '_' })
        .collect();
    format!("{clean}.csv")
}

pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut s = String::from("n,value,err_lo,err_hi\n");
    for r in rows {
        s.push_str(&format!("{},{:e},{:e},{:e}\n", r.n, r.value, r.err_lo, r.err_hi));
    }
    s
}

/// Evaluates `cfg` and writes its artifacts under `out_root/<hash>/`.
/// A directory whose stored config hashes differently is never touched.
pub fn run(cfg: &ExperimentConfig, out_root: &Path, cache: Option<&DiskCache>) -> Result<(ResultRecord, PathBuf)> {
    cfg.validate()?;
    let hash = cfg.hash();
    let dir = out_root.join(&hash);
    let stored = dir.join("config.toml");
    if stored.exists() {
        let old = ExperimentConfig::load(&stored)?;
        if old.hash() != hash {
            return Err(Error::Config(format!("{} holds a different config (hash {})", dir.display(), old.hash())));
        }
    }
    let record = evaluate(cfg, cache)?;
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&stored, cfg.to_toml_string())?;
    std::fs::write(dir.join("record.json"), serde_json::to_string_pretty(&record).expect("records serialize"))?;
    for (name, rows) in &record.series {
        std::fs::write(dir.join(series_file(name)), series_csv(rows))?;
    }
    Ok((record, dir))
}
