//! Finitely generated groups with canonical element forms.
//!
//! Every element is normalized when it is constructed, so `Element` values can
//! be hashed and compared directly; this is what makes sparse convolution over
//! group elements possible.

pub mod element;
pub mod grigorchuk;
mod length;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

pub use element::{AffineDyadic, Element, LampState};
use grigorchuk::{Portrait, State, WordProblem};
pub use length::{LengthCache, DEFAULT_BALL_BUDGET};

use crate::error::{Error, Result};

/// How a direct product is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductGens {
    /// `S1 x {e}  union  {e} x S2`
    Union,
    /// `S1 x S2`
    Pairs,
}

#[derive(Debug)]
pub enum GroupKind {
    Abelian { d: usize },
    Free { k: usize },
    Lamplighter { d: usize, f: u32 },
    Heisenberg,
    BaumslagSolitar { n: i64 },
    Grigorchuk,
    Product {
        left: Arc<Group>,
        right: Arc<Group>,
        gens: ProductGens,
    },
}

/// Sequence of generator indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Formal inverse with respect to `gens`.
    pub fn inverse(&self, gens: &GeneratingSet) -> Word {
        Word(self.0.iter().rev().map(|&i| gens.inverse_index(i)).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn repeat(&self, times: usize) -> Word {
        Word(self.0.repeat(times))
    }
}

/// Symmetric finite generating set.
#[derive(Clone, Debug)]
pub struct GeneratingSet {
    elements: Vec<Element>,
    names: Vec<String>,
    inverse: Vec<usize>,
}

impl GeneratingSet {
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn index_of(&self, g: &Element) -> Option<usize> {
        self.elements.iter().position(|x| x == g)
    }
}

/// A finitely generated group from the catalog.
pub struct Group {
    id: String,
    kind: GroupKind,
    gens: GeneratingSet,
    standard_gens: bool,
    lengths: LengthCache,
    word_problem: Option<WordProblem>,
}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Group").field("id", &self.id).finish()
    }
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Group {
    /// Parses a catalog id such as `Z^d:d=2`, `F:k=2`, `lamplighter:d=1,f=2`,
    /// `heisenberg`, `BS:1,2`, `grigorchuk` or `product:<id>|<id>`.
    pub fn from_id(id: &str) -> Result<Group> {
        Group::from_id_with_budget(id, DEFAULT_BALL_BUDGET)
    }

    pub fn from_id_with_budget(id: &str, budget: usize) -> Result<Group> {
        let id = id.trim();
        let bad = || Error::UnknownGroup(id.to_string());
        if let Some(rest) = id.strip_prefix("product:") {
            let (body, gens) = match rest.rsplit_once(";gens=") {
                Some((b, "pairs")) => (b, ProductGens::Pairs),
                Some((b, "union")) => (b, ProductGens::Union),
                Some(_) => return Err(bad()),
                None => (rest, ProductGens::Union),
            };
            let (l, r) = split_top_level(body, '|').ok_or_else(bad)?;
            let left = Arc::new(Group::from_id_with_budget(l, budget)?);
            let right = Arc::new(Group::from_id_with_budget(r, budget)?);
            return Ok(Group::direct_product_with_budget(left, right, gens, budget));
        }
        let (name, params) = id.split_once(':').unwrap_or((id, ""));
        let kv = |key: &str| -> Option<u64> {
            params.split(',').find_map(|p| {
                let (k, v) = p.split_once('=')?;
                (k.trim() == key).then(|| v.trim().parse().ok()).flatten()
            })
        };
        let kind = match name {
            "Z^d" | "Z" => {
                let d = if name == "Z" { kv("d").unwrap_or(1) } else { kv("d").ok_or_else(bad)? };
                if d == 0 || d > 16 {
                    return Err(bad());
                }
                GroupKind::Abelian { d: d as usize }
            }
            "F" => {
                let k = kv("k").ok_or_else(bad)?;
                if k == 0 || k > 26 {
                    return Err(bad());
                }
                GroupKind::Free { k: k as usize }
            }
            "lamplighter" => {
                let d = kv("d").unwrap_or(1);
                let f = kv("f").unwrap_or(2);
                if d == 0 || d > 8 || f < 2 {
                    return Err(bad());
                }
                GroupKind::Lamplighter {
                    d: d as usize,
                    f: f as u32,
                }
            }
            "heisenberg" => GroupKind::Heisenberg,
            "BS" => {
                let mut parts = params.split(',').map(|s| s.trim().parse::<i64>());
                match (parts.next(), parts.next(), parts.next()) {
                    (Some(Ok(1)), Some(Ok(n)), None) if n >= 2 => {
                        GroupKind::BaumslagSolitar { n }
                    }
                    _ => return Err(bad()),
                }
            }
            "grigorchuk" => GroupKind::Grigorchuk,
            _ => return Err(bad()),
        };
        Ok(Group::build(canonical_id(&kind), kind, budget))
    }

    /// Direct product with the default generating set `S1 x {e} union {e} x S2`.
    pub fn direct_product(left: Arc<Group>, right: Arc<Group>, gens: ProductGens) -> Group {
        Group::direct_product_with_budget(left, right, gens, DEFAULT_BALL_BUDGET)
    }

    fn direct_product_with_budget(
        left: Arc<Group>,
        right: Arc<Group>,
        gens: ProductGens,
        budget: usize,
    ) -> Group {
        let kind = GroupKind::Product { left, right, gens };
        Group::build(canonical_id(&kind), kind, budget)
    }

    fn build(id: String, kind: GroupKind, budget: usize) -> Group {
        let (elements, names) = default_generators(&kind);
        let identity = identity_of(&kind);
        let word_problem = matches!(kind, GroupKind::Grigorchuk).then(WordProblem::new);
        let mut g = Group {
            id,
            kind,
            gens: GeneratingSet {
                elements: Vec::new(),
                names: Vec::new(),
                inverse: Vec::new(),
            },
            standard_gens: true,
            lengths: LengthCache::new(identity, budget),
            word_problem,
        };
        g.gens = g
            .make_generating_set(elements, names)
            .expect("catalog generating sets are symmetric");
        g
    }

    /// Replaces the generating set. Asymmetric sets are rejected.
    pub fn with_generators(self, elements: Vec<Element>, names: Vec<String>) -> Result<Group> {
        let gens = self.make_generating_set(elements, names)?;
        let identity = self.identity();
        let budget = self.lengths.budget();
        Ok(Group {
            id: format!("{};custom", self.id),
            gens,
            standard_gens: false,
            lengths: LengthCache::new(identity, budget),
            ..self
        })
    }

    fn make_generating_set(
        &self,
        elements: Vec<Element>,
        names: Vec<String>,
    ) -> Result<GeneratingSet> {
        if elements.len() != names.len() {
            return Err(Error::InvalidParameter(
                "generator names and elements differ in length".into(),
            ));
        }
        let mut inverse = Vec::with_capacity(elements.len());
        for (i, s) in elements.iter().enumerate() {
            if !self.contains(s) {
                return Err(self.mismatch(s));
            }
            let inv = self.inverse(s);
            match elements.iter().position(|x| *x == inv) {
                Some(j) => inverse.push(j),
                None => return Err(Error::AsymmetricGenerators(names[i].clone())),
            }
        }
        Ok(GeneratingSet {
            elements,
            names,
            inverse,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn generators(&self) -> &GeneratingSet {
        &self.gens
    }

    pub fn length_cache(&self) -> &LengthCache {
        &self.lengths
    }

    pub fn identity(&self) -> Element {
        identity_of(&self.kind)
    }

    pub fn factors(&self) -> Option<(&Arc<Group>, &Arc<Group>, ProductGens)> {
        match &self.kind {
            GroupKind::Product { left, right, gens } => Some((left, right, *gens)),
            _ => None,
        }
    }

    /// Amenability of the catalog entry.
    pub fn is_amenable(&self) -> bool {
        match &self.kind {
            GroupKind::Free { k } => *k == 1,
            GroupKind::Product { left, right, .. } => left.is_amenable() && right.is_amenable(),
            _ => true,
        }
    }

    /// Whether the group has an infinite virtually abelian quotient.
    pub fn has_infinite_virtually_abelian_quotient(&self) -> bool {
        match &self.kind {
            GroupKind::Grigorchuk => false,
            GroupKind::Product { left, right, .. } => {
                left.has_infinite_virtually_abelian_quotient()
                    || right.has_infinite_virtually_abelian_quotient()
            }
            _ => true,
        }
    }

    pub fn is_finite(&self) -> bool {
        false
    }

    pub fn contains(&self, g: &Element) -> bool {
        match (&self.kind, g) {
            (GroupKind::Abelian { d }, Element::Abelian(v)) => v.len() == *d,
            (GroupKind::Free { k }, Element::Free(w)) => w
                .iter()
                .all(|l| *l != 0 && (l.unsigned_abs() as usize) <= *k),
            (GroupKind::Lamplighter { d, f }, Element::Lamplighter(l)) => {
                l.cursor.len() == *d
                    && l.lamps
                        .iter()
                        .all(|(p, s)| p.len() == *d && *s > 0 && *s < *f)
            }
            (GroupKind::Heisenberg, Element::Heisenberg(_)) => true,
            (GroupKind::BaumslagSolitar { .. }, Element::BaumslagSolitar(_)) => true,
            (GroupKind::Grigorchuk, Element::Grigorchuk(_)) => true,
            (GroupKind::Product { left, right, .. }, Element::Product(p)) => {
                left.contains(&p.0) && right.contains(&p.1)
            }
            _ => false,
        }
    }

    fn mismatch(&self, g: &Element) -> Error {
        Error::GroupMismatch {
            expected: self.id.clone(),
            found: format!("{} element {}", g.kind(), g),
        }
    }

    /// Checked product `ab`.
    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        for x in [a, b] {
            if !self.contains(x) {
                return Err(self.mismatch(x));
            }
        }
        Ok(self.mul(a, b))
    }

    /// Product `ab` for elements already known to lie in this group.
    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        match (&self.kind, a, b) {
            (GroupKind::Abelian { .. }, Element::Abelian(x), Element::Abelian(y)) => {
                Element::Abelian(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (GroupKind::Free { .. }, Element::Free(x), Element::Free(y)) => {
                let mut w = x.clone();
                let mut rest = y.as_slice();
                while let (Some(&last), Some(&first)) = (w.last(), rest.first()) {
                    if last == -first {
                        w.pop();
                        rest = &rest[1..];
                    } else {
                        break;
                    }
                }
                w.extend_from_slice(rest);
                Element::Free(w)
            }
            (GroupKind::Lamplighter { f, .. }, Element::Lamplighter(x), Element::Lamplighter(y)) => {
                let mut lamps = x.lamps.clone();
                for (pos, s) in &y.lamps {
                    let p: Vec<i64> = pos.iter().zip(&x.cursor).map(|(a, c)| a + c).collect();
                    let v = (lamps.get(&p).copied().unwrap_or(0) + s) % f;
                    if v == 0 {
                        lamps.remove(&p);
                    } else {
                        lamps.insert(p, v);
                    }
                }
                let cursor = x.cursor.iter().zip(&y.cursor).map(|(a, b)| a + b).collect();
                Element::Lamplighter(Box::new(LampState { cursor, lamps }))
            }
            (GroupKind::Heisenberg, Element::Heisenberg(x), Element::Heisenberg(y)) => {
                Element::Heisenberg([x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]])
            }
            (
                GroupKind::BaumslagSolitar { n },
                Element::BaumslagSolitar(x),
                Element::BaumslagSolitar(y),
            ) => {
                let (m2, j2) = scale_by_power(&y.m, y.j, x.k, *n);
                let (m, j) = add_fractions(&x.m, x.j, &m2, j2, *n);
                Element::BaumslagSolitar(Box::new(AffineDyadic { k: x.k + y.k, m, j }))
            }
            (GroupKind::Grigorchuk, Element::Grigorchuk(x), Element::Grigorchuk(y)) => {
                Element::Grigorchuk(x.mul(y))
            }
            (GroupKind::Product { left, right, .. }, Element::Product(x), Element::Product(y)) => {
                Element::pair(left.mul(&x.0, &y.0), right.mul(&x.1, &y.1))
            }
            _ => panic!("element kinds do not match group {}", self.id),
        }
    }

    pub fn inverse(&self, a: &Element) -> Element {
        match (&self.kind, a) {
            (_, Element::Abelian(x)) => Element::Abelian(x.iter().map(|v| -v).collect()),
            (_, Element::Free(w)) => Element::Free(w.iter().rev().map(|l| -l).collect()),
            (GroupKind::Lamplighter { f, .. }, Element::Lamplighter(x)) => {
                let lamps = x
                    .lamps
                    .iter()
                    .map(|(p, s)| {
                        let q: Vec<i64> = p.iter().zip(&x.cursor).map(|(a, c)| a - c).collect();
                        (q, (f - s) % f)
                    })
                    .collect::<BTreeMap<_, _>>();
                let cursor = x.cursor.iter().map(|c| -c).collect();
                Element::Lamplighter(Box::new(LampState { cursor, lamps }))
            }
            (_, Element::Heisenberg(x)) => Element::Heisenberg([-x[0], -x[1], -x[2] + x[0] * x[1]]),
            (GroupKind::BaumslagSolitar { n }, Element::BaumslagSolitar(x)) => {
                let (m, j) = scale_by_power(&(-&x.m), x.j, -x.k, *n);
                Element::BaumslagSolitar(Box::new(AffineDyadic { k: -x.k, m, j }))
            }
            (_, Element::Grigorchuk(p)) => Element::Grigorchuk(p.inverse()),
            (GroupKind::Product { left, right, .. }, Element::Product(x)) => {
                Element::pair(left.inverse(&x.0), right.inverse(&x.1))
            }
            _ => panic!("element kind does not match group {}", self.id),
        }
    }

    pub fn eval_word(&self, w: &Word) -> Element {
        w.letters().iter().fold(self.identity(), |acc, &i| {
            self.mul(&acc, &self.gens.elements[i])
        })
    }

    /// Parses a word such as `x1.x1.X2`, `a^3.b`, `adac`, a literal vector
    /// `[3,-2]` for free abelian groups, or a pair `(w1, w2)` for products.
    pub fn parse_element(&self, text: &str) -> Result<Element> {
        let text = text.trim();
        let err = |reason: &str| Error::ParseElement {
            group: self.id.clone(),
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if let GroupKind::Product { left, right, .. } = &self.kind {
            if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
                let (a, b) = split_top_level(inner, ',').ok_or_else(|| err("expected (w1, w2)"))?;
                return Ok(Element::pair(left.parse_element(a)?, right.parse_element(b)?));
            }
        }
        if let GroupKind::Abelian { d } = &self.kind {
            if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                let v = inner
                    .split(',')
                    .map(|s| s.trim().parse::<i64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| err("bad integer"))?;
                if v.len() != *d {
                    return Err(err("wrong dimension"));
                }
                return Ok(Element::Abelian(v));
            }
        }
        let word = self.parse_word(text)?;
        Ok(self.eval_word(&word))
    }

    /// Parses a word over generator names into generator indices.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        let err = |reason: String| Error::ParseElement {
            group: self.id.clone(),
            text: text.to_string(),
            reason,
        };
        let mut letters = Vec::new();
        if text.is_empty() || text == "e" {
            return Ok(Word(letters));
        }
        for token in text.split(|c: char| c == '.' || c.is_whitespace()) {
            if token.is_empty() || token == "e" {
                continue;
            }
            let (base, power) = match token.split_once('^') {
                Some((b, p)) => (b, p.parse::<i64>().map_err(|_| err(format!("bad power in `{token}`")))?),
                None => (token, 1),
            };
            let indices: Vec<usize> = if let Some(i) = self.gens.index_of_name(base) {
                vec![i]
            } else {
                base.chars()
                    .map(|c| {
                        self.gens
                            .index_of_name(&c.to_string())
                            .ok_or_else(|| err(format!("unknown generator `{base}`")))
                    })
                    .collect::<Result<_>>()?
            };
            let unit = Word(indices);
            let unit = if power < 0 { unit.inverse(&self.gens) } else { unit };
            for _ in 0..power.unsigned_abs() {
                letters.extend_from_slice(unit.letters());
            }
        }
        Ok(Word(letters))
    }

    /// Word length with respect to the generating set.
    pub fn word_length(&self, g: &Element) -> Result<u32> {
        if !self.contains(g) {
            return Err(self.mismatch(g));
        }
        if self.standard_gens {
            if let Some(l) = self.closed_form_length(g)? {
                return Ok(l);
            }
        }
        self.lengths.length(self, g)
    }

    /// Word length via BFS only, ignoring closed forms.
    pub fn bfs_length(&self, g: &Element) -> Result<u32> {
        self.lengths.length(self, g)
    }

    fn closed_form_length(&self, g: &Element) -> Result<Option<u32>> {
        Ok(match (&self.kind, g) {
            (GroupKind::Abelian { .. }, Element::Abelian(v)) => {
                Some(v.iter().map(|x| x.unsigned_abs()).sum::<u64>() as u32)
            }
            (GroupKind::Free { .. }, Element::Free(w)) => Some(w.len() as u32),
            (
                GroupKind::Product {
                    left,
                    right,
                    gens: ProductGens::Union,
                },
                Element::Product(p),
            ) => Some(left.word_length(&p.0)? + right.word_length(&p.1)?),
            _ => None,
        })
    }

    pub fn ball(&self, r: u32) -> Result<Vec<Element>> {
        self.lengths.ball(self, r)
    }

    /// Cumulative ball sizes up to radius `r`.
    pub fn growth(&self, r: u32) -> Result<Vec<usize>> {
        self.lengths.growth(self, r)
    }

    /// Relator words, used to check that cocycles are well defined.
    pub fn relators(&self) -> Vec<Word> {
        let idx = |name: &str| self.gens.index_of_name(name).expect("catalog generator");
        let w = |names: &[&str]| Word(names.iter().map(|n| idx(n)).collect());
        match &self.kind {
            GroupKind::Abelian { d } => {
                let mut out = Vec::new();
                for i in 1..=*d {
                    for j in (i + 1)..=*d {
                        let (a, b) = (format!("x{i}"), format!("x{j}"));
                        let (ai, bi) = (format!("X{i}"), format!("X{j}"));
                        out.push(w(&[&a, &b, &ai, &bi]));
                    }
                }
                out
            }
            GroupKind::Free { .. } => Vec::new(),
            GroupKind::Lamplighter { d, f } => {
                let t_inv = if *f == 2 { "t".to_string() } else { "T".to_string() };
                let mut out = vec![Word(vec![idx("t"); *f as usize])];
                for i in 1..=*d {
                    let (m, mi) = (format!("m{i}"), format!("M{i}"));
                    out.push(w(&["t", &m, "t", &mi, &t_inv, &m, &t_inv, &mi]));
                    for j in (i + 1)..=*d {
                        let (n, ni) = (format!("m{j}"), format!("M{j}"));
                        out.push(w(&[&m, &n, &mi, &ni]));
                    }
                }
                out
            }
            GroupKind::Heisenberg => {
                let comm = ["x", "y", "X", "Y"];
                let comm_inv = ["y", "x", "Y", "X"];
                let mut r1 = vec!["x"];
                r1.extend(comm);
                r1.push("X");
                r1.extend(comm_inv);
                let mut r2 = vec!["y"];
                r2.extend(comm);
                r2.push("Y");
                r2.extend(comm_inv);
                vec![w(&r1), w(&r2)]
            }
            GroupKind::BaumslagSolitar { n } => {
                let mut r = vec!["a", "b", "A"];
                r.extend(std::iter::repeat_n("B", *n as usize));
                vec![w(&r)]
            }
            GroupKind::Grigorchuk => {
                let mut out: Vec<Word> = ["aa", "bb", "cc", "dd", "bcd"]
                    .iter()
                    .map(|s| self.parse_word(s).expect("letters"))
                    .collect();
                out.push(self.parse_word("ad").expect("letters").repeat(4));
                out.push(self.parse_word("adacac").expect("letters").repeat(4));
                out
            }
            GroupKind::Product { left, right, gens } => {
                if *gens == ProductGens::Pairs {
                    return Vec::new();
                }
                let nl = left.generators().len();
                let mut out: Vec<Word> = left.relators();
                out.extend(
                    right
                        .relators()
                        .into_iter()
                        .map(|r| Word(r.0.into_iter().map(|i| i + nl).collect())),
                );
                for i in 0..nl {
                    for j in 0..right.generators().len() {
                        let ii = left.generators().inverse_index(i);
                        let jj = right.generators().inverse_index(j);
                        out.push(Word(vec![i, nl + j, ii, nl + jj]));
                    }
                }
                out
            }
        }
    }

    /// Word problem for the Grigorchuk group via contraction of sections.
    pub fn grigorchuk_is_identity(&self, w: &Word) -> Option<bool> {
        let wp = self.word_problem.as_ref()?;
        let letters: Vec<State> = w
            .letters()
            .iter()
            .map(|&i| match &self.gens.elements[i] {
                Element::Grigorchuk(Portrait::Leaf(s)) => *s,
                _ => unreachable!("grigorchuk generators are nucleus leaves"),
            })
            .collect();
        Some(wp.is_identity(&letters))
    }
}

/// Word problem for words over `{a, b, c, d}` given as a string.
pub fn grigorchuk_is_identity(word: &str) -> Result<bool> {
    let letters = grigorchuk::word_from_str(word).ok_or_else(|| Error::ParseElement {
        group: "grigorchuk".into(),
        text: word.into(),
        reason: "letters must be a, b, c, d".into(),
    })?;
    Ok(WordProblem::new().is_identity(&letters))
}

fn split_top_level(s: &str, sep: char) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => return Some((s[..i].trim(), s[i + 1..].trim())),
            _ => {}
        }
    }
    None
}

fn canonical_id(kind: &GroupKind) -> String {
    match kind {
        GroupKind::Abelian { d } => format!("Z^d:d={d}"),
        GroupKind::Free { k } => format!("F:k={k}"),
        GroupKind::Lamplighter { d, f } => format!("lamplighter:d={d},f={f}"),
        GroupKind::Heisenberg => "heisenberg".into(),
        GroupKind::BaumslagSolitar { n } => format!("BS:1,{n}"),
        GroupKind::Grigorchuk => "grigorchuk".into(),
        GroupKind::Product { left, right, gens } => match gens {
            ProductGens::Union => format!("product:{}|{}", left.id(), right.id()),
            ProductGens::Pairs => format!("product:{}|{};gens=pairs", left.id(), right.id()),
        },
    }
}

fn identity_of(kind: &GroupKind) -> Element {
    match kind {
        GroupKind::Abelian { d } => Element::Abelian(vec![0; *d]),
        GroupKind::Free { .. } => Element::Free(Vec::new()),
        GroupKind::Lamplighter { d, .. } => Element::Lamplighter(Box::new(LampState {
            cursor: vec![0; *d],
            lamps: BTreeMap::new(),
        })),
        GroupKind::Heisenberg => Element::Heisenberg([0; 3]),
        GroupKind::BaumslagSolitar { .. } => Element::BaumslagSolitar(Box::new(AffineDyadic {
            k: 0,
            m: BigInt::zero(),
            j: 0,
        })),
        GroupKind::Grigorchuk => Element::Grigorchuk(Portrait::IDENTITY),
        GroupKind::Product { left, right, .. } => Element::pair(left.identity(), right.identity()),
    }
}

fn default_generators(kind: &GroupKind) -> (Vec<Element>, Vec<String>) {
    let mut els = Vec::new();
    let mut names = Vec::new();
    match kind {
        GroupKind::Abelian { d } => {
            for i in 0..*d {
                for sign in [1i64, -1] {
                    let mut v = vec![0; *d];
                    v[i] = sign;
                    els.push(Element::Abelian(v));
                    names.push(if sign > 0 { format!("x{}", i + 1) } else { format!("X{}", i + 1) });
                }
            }
        }
        GroupKind::Free { k } => {
            for i in 0..*k {
                for sign in [1i8, -1] {
                    els.push(Element::Free(vec![sign * (i as i8 + 1)]));
                    let c = (b'a' + i as u8) as char;
                    names.push(if sign > 0 { c.to_string() } else { c.to_ascii_uppercase().to_string() });
                }
            }
        }
        GroupKind::Lamplighter { d, f } => {
            for i in 0..*d {
                for sign in [1i64, -1] {
                    let mut cursor = vec![0; *d];
                    cursor[i] = sign;
                    els.push(Element::Lamplighter(Box::new(LampState {
                        cursor,
                        lamps: BTreeMap::new(),
                    })));
                    names.push(if sign > 0 { format!("m{}", i + 1) } else { format!("M{}", i + 1) });
                }
            }
            let lamp = |v: u32| {
                let mut lamps = BTreeMap::new();
                lamps.insert(vec![0; *d], v);
                Element::Lamplighter(Box::new(LampState {
                    cursor: vec![0; *d],
                    lamps,
                }))
            };
            els.push(lamp(1));
            names.push("t".into());
            if *f > 2 {
                els.push(lamp(f - 1));
                names.push("T".into());
            }
        }
        GroupKind::Heisenberg => {
            for (e, n) in [
                ([1, 0, 0], "x"),
                ([-1, 0, 0], "X"),
                ([0, 1, 0], "y"),
                ([0, -1, 0], "Y"),
            ] {
                els.push(Element::Heisenberg(e));
                names.push(n.into());
            }
        }
        GroupKind::BaumslagSolitar { .. } => {
            let bs = |k: i64, m: i64| {
                Element::BaumslagSolitar(Box::new(AffineDyadic {
                    k,
                    m: BigInt::from(m),
                    j: 0,
                }))
            };
            els.extend([bs(1, 0), bs(-1, 0), bs(0, 1), bs(0, -1)]);
            names.extend(["a", "A", "b", "B"].map(String::from));
        }
        GroupKind::Grigorchuk => {
            for s in [State::A, State::B, State::C, State::D] {
                els.push(Element::Grigorchuk(Portrait::Leaf(s)));
                names.push(s.letter().to_string());
            }
        }
        GroupKind::Product { left, right, gens } => {
            let (le, re) = (left.identity(), right.identity());
            match gens {
                ProductGens::Union => {
                    for (s, n) in left.generators().elements().iter().zip(left.generators().names()) {
                        els.push(Element::pair(s.clone(), re.clone()));
                        names.push(format!("1:{n}"));
                    }
                    for (s, n) in right.generators().elements().iter().zip(right.generators().names()) {
                        els.push(Element::pair(le.clone(), s.clone()));
                        names.push(format!("2:{n}"));
                    }
                }
                ProductGens::Pairs => {
                    for (s, n) in left.generators().elements().iter().zip(left.generators().names()) {
                        for (t, m) in right.generators().elements().iter().zip(right.generators().names()) {
                            els.push(Element::pair(s.clone(), t.clone()));
                            names.push(format!("({n},{m})"));
                        }
                    }
                }
            }
        }
    }
    (els, names)
}

/// `n^k * m / n^j` as a normalized `(m', j')`.
fn scale_by_power(m: &BigInt, j: u32, k: i64, n: i64) -> (BigInt, u32) {
    if k >= 0 {
        normalize_fraction(m * BigInt::from(n).pow(k as u32), j, n)
    } else {
        normalize_fraction(m.clone(), j + (-k) as u32, n)
    }
}

fn add_fractions(m1: &BigInt, j1: u32, m2: &BigInt, j2: u32, n: i64) -> (BigInt, u32) {
    let j = j1.max(j2);
    let base = BigInt::from(n);
    let sum = m1 * base.pow(j - j1) + m2 * base.pow(j - j2);
    normalize_fraction(sum, j, n)
}

fn normalize_fraction(mut m: BigInt, mut j: u32, n: i64) -> (BigInt, u32) {
    if m.is_zero() {
        return (m, 0);
    }
    let base = BigInt::from(n);
    while j > 0 {
        let (q, r) = m.div_rem(&base);
        if r.is_zero() {
            m = q;
            j -= 1;
        } else {
            break;
        }
    }
    (m, j)
}

#[cfg(test)]
mod tests;
