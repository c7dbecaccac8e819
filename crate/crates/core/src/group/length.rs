use std::sync::RwLock;

use rustc_hash::FxHashMap;

use super::element::Element;
use super::Group;
use crate::error::{Error, Result};

/// Default cap on the number of elements a BFS length table may hold.
pub const DEFAULT_BALL_BUDGET: usize = 4_000_000;

struct BfsTable {
    radius: u32,
    lengths: FxHashMap<Element, u32>,
    sphere: Vec<Element>,
}

/// Grow-only BFS table of word lengths. Growth happens under the write lock
/// and a new sphere is committed only once it is complete, so readers always
/// observe a table that is exact up to `radius`.
pub struct LengthCache {
    table: RwLock<BfsTable>,
    budget: usize,
}

impl LengthCache {
    pub fn new(identity: Element, budget: usize) -> Self {
        let mut lengths = FxHashMap::default();
        lengths.insert(identity.clone(), 0);
        LengthCache {
            table: RwLock::new(BfsTable {
                radius: 0,
                lengths,
                sphere: vec![identity],
            }),
            budget,
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn radius(&self) -> u32 {
        self.table.read().expect("length table").radius
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("length table").lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, g: &Element) -> Option<u32> {
        self.table.read().expect("length table").lengths.get(g).copied()
    }

    /// Extends the table until it is exact up to radius `r`.
    pub fn grow_to(&self, group: &Group, r: u32) -> Result<()> {
        if self.radius() >= r {
            return Ok(());
        }
        let mut t = self.table.write().expect("length table");
        while t.radius < r {
            if t.sphere.is_empty() {
                // finite group exhausted; the table is exact for every radius
                t.radius = r;
                break;
            }
            let next_len = t.radius + 1;
            let mut next = Vec::new();
            let mut fresh: FxHashMap<Element, u32> = FxHashMap::default();
            for x in &t.sphere {
                for s in group.generators().elements() {
                    let y = group.mul(x, s);
                    if !t.lengths.contains_key(&y) && !fresh.contains_key(&y) {
                        fresh.insert(y.clone(), next_len);
                        next.push(y);
                    }
                }
                if t.lengths.len() + fresh.len() > self.budget {
                    return Err(Error::BudgetExceeded {
                        count: t.lengths.len() + fresh.len(),
                        limit: self.budget,
                    });
                }
            }
            next.sort();
            t.lengths.extend(fresh);
            t.sphere = next;
            t.radius = next_len;
        }
        Ok(())
    }

    /// Length by BFS, growing the table on demand. On budget exhaustion the
    /// error carries the lower bound `radius + 1`.
    pub fn length(&self, group: &Group, g: &Element) -> Result<u32> {
        if let Some(l) = self.lookup(g) {
            return Ok(l);
        }
        loop {
            let r = self.radius();
            match self.grow_to(group, r + 1) {
                Ok(()) => {
                    if let Some(l) = self.lookup(g) {
                        return Ok(l);
                    }
                    let t = self.table.read().expect("length table");
                    if t.sphere.is_empty() {
                        return Err(Error::InvalidParameter(format!(
                            "{g} is not reachable from the generating set"
                        )));
                    }
                }
                Err(Error::BudgetExceeded { .. }) => return Err(Error::radius(r + 1)),
                Err(e) => return Err(e),
            }
        }
    }

    /// All elements at distance at most `r`, in canonical order.
    pub fn ball(&self, group: &Group, r: u32) -> Result<Vec<Element>> {
        self.grow_to(group, r)?;
        let t = self.table.read().expect("length table");
        let mut out: Vec<Element> = t
            .lengths
            .iter()
            .filter(|(_, l)| **l <= r)
            .map(|(g, _)| g.clone())
            .collect();
        out.sort();
        Ok(out)
    }

    /// Ball sizes `|B(0)|, ..., |B(r)|`.
    pub fn growth(&self, group: &Group, r: u32) -> Result<Vec<usize>> {
        self.grow_to(group, r)?;
        let t = self.table.read().expect("length table");
        let mut spheres = vec![0usize; r as usize + 1];
        for l in t.lengths.values() {
            if *l <= r {
                spheres[*l as usize] += 1;
            }
        }
        let mut acc = 0;
        Ok(spheres
            .into_iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect())
    }
}
