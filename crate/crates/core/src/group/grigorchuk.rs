//! The first Grigorchuk group, generated by the states `a, b, c, d` of the
//! standard automaton acting on the binary rooted tree.
//!
//! Elements are stored as *portraits*: an element `g` decomposes as
//! `g = (g|0, g|1) sigma^flip`, and the recursion stops as soon as a section
//! is one of the nucleus states `{e, a, b, c, d}`. Because the action is
//! faithful and every node that matches a nucleus decomposition is collapsed
//! to the corresponding leaf, two portraits are equal exactly when the group
//! elements are equal. This gives a hashable canonical form without ever
//! enumerating geodesics.

use std::fmt;
use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;

/// Nucleus states of the automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    E,
    A,
    B,
    C,
    D,
}

impl State {
    pub fn letter(self) -> char {
        match self {
            State::E => 'e',
            State::A => 'a',
            State::B => 'b',
            State::C => 'c',
            State::D => 'd',
        }
    }

    fn tag(self) -> u8 {
        self as u8
    }

    fn from_tag(t: u8) -> Option<Self> {
        Some(match t {
            0 => State::E,
            1 => State::A,
            2 => State::B,
            3 => State::C,
            4 => State::D,
            _ => return None,
        })
    }

    /// `(flip, section at 0, section at 1)`.
    fn decompose(self) -> (bool, State, State) {
        match self {
            State::E => (false, State::E, State::E),
            State::A => (true, State::E, State::E),
            State::B => (false, State::A, State::C),
            State::C => (false, State::A, State::D),
            State::D => (false, State::E, State::B),
        }
    }

    fn is_bcd(self) -> bool {
        matches!(self, State::B | State::C | State::D)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub flip: bool,
    pub left: Portrait,
    pub right: Portrait,
}

/// Canonical form of an element of the Grigorchuk group.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Portrait {
    Leaf(State),
    Node(Arc<Node>),
}

impl fmt::Debug for Portrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Portrait::Leaf(s) => write!(f, "{}", s.letter()),
            Portrait::Node(n) => write!(
                f,
                "[{}|{:?},{:?}]",
                if n.flip { 1 } else { 0 },
                n.left,
                n.right
            ),
        }
    }
}

impl Portrait {
    pub const IDENTITY: Portrait = Portrait::Leaf(State::E);

    pub fn is_identity(&self) -> bool {
        matches!(self, Portrait::Leaf(State::E))
    }

    /// Builds a node, collapsing it to a nucleus leaf when it matches one.
    fn node(flip: bool, left: Portrait, right: Portrait) -> Portrait {
        if let (Portrait::Leaf(l), Portrait::Leaf(r)) = (&left, &right) {
            let collapsed = match (flip, *l, *r) {
                (false, State::E, State::E) => Some(State::E),
                (true, State::E, State::E) => Some(State::A),
                (false, State::A, State::C) => Some(State::B),
                (false, State::A, State::D) => Some(State::C),
                (false, State::E, State::B) => Some(State::D),
                _ => None,
            };
            if let Some(s) = collapsed {
                return Portrait::Leaf(s);
            }
        }
        Portrait::Node(Arc::new(Node { flip, left, right }))
    }

    fn expand(&self) -> (bool, Portrait, Portrait) {
        match self {
            Portrait::Leaf(s) => {
                let (f, l, r) = s.decompose();
                (f, Portrait::Leaf(l), Portrait::Leaf(r))
            }
            Portrait::Node(n) => (n.flip, n.left.clone(), n.right.clone()),
        }
    }

    pub fn flip(&self) -> bool {
        self.expand().0
    }

    pub fn section(&self, x: usize) -> Portrait {
        let (_, l, r) = self.expand();
        if x == 0 {
            l
        } else {
            r
        }
    }

    /// Product `self * other` for the left action `(gh)(v) = g(h(v))`.
    pub fn mul(&self, other: &Portrait) -> Portrait {
        match (self, other) {
            (Portrait::Leaf(u), Portrait::Leaf(v)) => leaf_product(*u, *v),
            _ => {
                if other.is_identity() {
                    return self.clone();
                }
                if self.is_identity() {
                    return other.clone();
                }
                let (pf, p0, p1) = self.expand();
                let (qf, q0, q1) = other.expand();
                // (gh)|x = g|h(x) * h|x
                let (a0, a1) = if qf { (&p1, &p0) } else { (&p0, &p1) };
                Portrait::node(pf ^ qf, a0.mul(&q0), a1.mul(&q1))
            }
        }
    }

    pub fn inverse(&self) -> Portrait {
        match self {
            Portrait::Leaf(_) => self.clone(),
            Portrait::Node(n) => {
                if n.flip {
                    Portrait::node(true, n.right.inverse(), n.left.inverse())
                } else {
                    Portrait::node(false, n.left.inverse(), n.right.inverse())
                }
            }
        }
    }

    pub fn from_word(word: &[State]) -> Portrait {
        word.iter()
            .fold(Portrait::IDENTITY, |acc, s| acc.mul(&Portrait::Leaf(*s)))
    }

    /// Depth of the portrait tree (leaves have depth 0).
    pub fn depth(&self) -> usize {
        match self {
            Portrait::Leaf(_) => 0,
            Portrait::Node(n) => 1 + n.left.depth().max(n.right.depth()),
        }
    }

    /// Preorder byte encoding: leaf tags `0..=4`, node tags `5` (no flip) / `6` (flip).
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Portrait::Leaf(s) => out.push(s.tag()),
            Portrait::Node(n) => {
                out.push(if n.flip { 6 } else { 5 });
                n.left.encode_into(out);
                n.right.encode_into(out);
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Option<(Portrait, &[u8])> {
        let (&tag, rest) = bytes.split_first()?;
        match tag {
            0..=4 => Some((Portrait::Leaf(State::from_tag(tag)?), rest)),
            5 | 6 => {
                let (left, rest) = Portrait::decode(rest)?;
                let (right, rest) = Portrait::decode(rest)?;
                Some((Portrait::node(tag == 6, left, right), rest))
            }
            _ => None,
        }
    }
}

fn leaf_product(u: State, v: State) -> Portrait {
    use State::*;
    match (u, v) {
        (E, x) | (x, E) => Portrait::Leaf(x),
        (A, A) => Portrait::Leaf(E),
        (x, y) if x.is_bcd() && y.is_bcd() => {
            if x == y {
                Portrait::Leaf(E)
            } else {
                // Klein four-group {e, b, c, d}
                let third = [B, C, D]
                    .into_iter()
                    .find(|s| *s != x && *s != y)
                    .expect("three letters");
                Portrait::Leaf(third)
            }
        }
        (A, x) => {
            let (_, l, r) = x.decompose();
            Portrait::node(true, Portrait::Leaf(l), Portrait::Leaf(r))
        }
        (x, A) => {
            let (_, l, r) = x.decompose();
            Portrait::node(true, Portrait::Leaf(r), Portrait::Leaf(l))
        }
        _ => unreachable!("all nucleus pairs covered"),
    }
}

/// Freely reduces a word using `a^2 = b^2 = c^2 = d^2 = e` and the Klein
/// relations among `b, c, d`. The result alternates `a` with letters of
/// `{b, c, d}`.
pub fn reduce_word(word: &[State]) -> Vec<State> {
    let mut out: Vec<State> = Vec::with_capacity(word.len());
    for &s in word {
        if s == State::E {
            continue;
        }
        match out.last().copied() {
            Some(top) if top == s => {
                out.pop();
            }
            Some(top) if top.is_bcd() && s.is_bcd() => {
                out.pop();
                if let Portrait::Leaf(t) = leaf_product(top, s) {
                    out.push(t);
                }
            }
            _ => out.push(s),
        }
    }
    out
}

/// Word problem solver using the contraction of sections, memoized on
/// reduced words.
#[derive(Default)]
pub struct WordProblem {
    memo: Mutex<FxHashMap<Vec<State>, bool>>,
}

impl WordProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_identity(&self, word: &[State]) -> bool {
        let reduced = reduce_word(word);
        self.is_identity_reduced(reduced)
    }

    fn is_identity_reduced(&self, w: Vec<State>) -> bool {
        if w.is_empty() {
            return true;
        }
        if let Some(&known) = self.memo.lock().expect("memo lock").get(&w) {
            return known;
        }
        let a_count = w.iter().filter(|s| **s == State::A).count();
        let answer = if a_count % 2 == 1 || w.len() == 1 {
            false
        } else {
            // Sections of the prefix product, extended one letter at a time:
            // (gh)|x = g|h(x) h|x.
            let mut sections: [Vec<State>; 2] = [Vec::new(), Vec::new()];
            for &s in &w {
                if s == State::A {
                    sections.swap(0, 1);
                } else {
                    let (_, l, r) = s.decompose();
                    if l != State::E {
                        sections[0].push(l);
                    }
                    if r != State::E {
                        sections[1].push(r);
                    }
                }
            }
            let [s0, s1] = sections;
            let r0 = reduce_word(&s0);
            debug_assert!(r0.len() < w.len());
            self.is_identity_reduced(r0) && {
                let r1 = reduce_word(&s1);
                debug_assert!(r1.len() < w.len());
                self.is_identity_reduced(r1)
            }
        };
        self.memo.lock().expect("memo lock").insert(w, answer);
        answer
    }

    pub fn memo_len(&self) -> usize {
        self.memo.lock().expect("memo lock").len()
    }
}

pub fn parse_state(c: char) -> Option<State> {
    Some(match c {
        'e' => State::E,
        'a' => State::A,
        'b' => State::B,
        'c' => State::C,
        'd' => State::D,
        _ => return None,
    })
}

pub fn word_from_str(s: &str) -> Option<Vec<State>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != '.')
        .map(parse_state)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Portrait {
        Portrait::from_word(&word_from_str(s).unwrap())
    }

    #[test]
    fn klein_relations() {
        assert_eq!(p("bc"), p("d"));
        assert_eq!(p("cd"), p("b"));
        assert_eq!(p("db"), p("c"));
        assert!(p("bcd").is_identity());
        for s in ["aa", "bb", "cc", "dd"] {
            assert!(p(s).is_identity(), "{s}");
        }
    }

    #[test]
    fn inverse_and_roundtrip_encoding() {
        let g = p("adacabadac");
        assert!(g.mul(&g.inverse()).is_identity());
        let mut bytes = Vec::new();
        g.encode_into(&mut bytes);
        let (back, rest) = Portrait::decode(&bytes).unwrap();
        assert!(rest.is_empty());
        assert_eq!(back, g);
    }

    #[test]
    fn word_problem_simple() {
        let wp = WordProblem::new();
        assert!(wp.is_identity(&word_from_str("aa").unwrap()));
        assert!(!wp.is_identity(&word_from_str("ad").unwrap()));
        assert!(wp.is_identity(&word_from_str("adadadad").unwrap()));
        assert!(!wp.is_identity(&word_from_str("adad").unwrap()));
    }

    #[test]
    fn reduce_word_alternates() {
        let r = reduce_word(&word_from_str("abcbbaad").unwrap());
        for pair in r.windows(2) {
            assert!((pair[0] == State::A) != (pair[1] == State::A));
        }
    }
}
