use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use super::grigorchuk::Portrait;

/// Version byte prefixed to every canonical encoding.
pub const ENCODING_VERSION: u8 = 1;

/// Lamplighter element `(cursor, lamps)`: lamp states are nonzero residues mod `f`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LampState {
    pub cursor: Vec<i64>,
    pub lamps: BTreeMap<Vec<i64>, u32>,
}

/// Element `(k, m / n^j)` of BS(1, n), acting on the line by `x -> n^k x + m / n^j`.
/// Normalized: `j = 0` when `m = 0`, and `n` does not divide `m` when `j > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineDyadic {
    pub k: i64,
    pub m: BigInt,
    pub j: u32,
}

/// Canonical form of a group element. Equality of values is equality in the group.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Abelian(Vec<i64>),
    /// Freely reduced word; letter `+i` / `-i` is generator `i` (1-based) or its inverse.
    Free(Vec<i8>),
    Lamplighter(Box<LampState>),
    Heisenberg([i64; 3]),
    BaumslagSolitar(Box<AffineDyadic>),
    Grigorchuk(Portrait),
    Product(Box<(Element, Element)>),
}

impl Element {
    pub fn kind(&self) -> &'static str {
        match self {
            Element::Abelian(_) => "abelian",
            Element::Free(_) => "free",
            Element::Lamplighter(_) => "lamplighter",
            Element::Heisenberg(_) => "heisenberg",
            Element::BaumslagSolitar(_) => "baumslag-solitar",
            Element::Grigorchuk(_) => "grigorchuk",
            Element::Product(_) => "product",
        }
    }

    pub fn pair(a: Element, b: Element) -> Element {
        Element::Product(Box::new((a, b)))
    }

    /// Versioned canonical byte string.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![ENCODING_VERSION];
        self.encode_body(&mut out);
        out
    }

    fn encode_body(&self, out: &mut Vec<u8>) {
        match self {
            Element::Abelian(v) => {
                out.push(1);
                put_len(out, v.len());
                v.iter().for_each(|x| put_i64(out, *x));
            }
            Element::Free(w) => {
                out.push(2);
                put_len(out, w.len());
                out.extend(w.iter().map(|x| *x as u8));
            }
            Element::Lamplighter(l) => {
                out.push(3);
                put_len(out, l.cursor.len());
                l.cursor.iter().for_each(|x| put_i64(out, *x));
                put_len(out, l.lamps.len());
                for (pos, state) in &l.lamps {
                    pos.iter().for_each(|x| put_i64(out, *x));
                    out.extend_from_slice(&state.to_le_bytes());
                }
            }
            Element::Heisenberg(h) => {
                out.push(4);
                h.iter().for_each(|x| put_i64(out, *x));
            }
            Element::BaumslagSolitar(b) => {
                out.push(5);
                put_i64(out, b.k);
                let bytes = b.m.to_signed_bytes_le();
                put_len(out, bytes.len());
                out.extend_from_slice(&bytes);
                out.extend_from_slice(&b.j.to_le_bytes());
            }
            Element::Grigorchuk(p) => {
                out.push(6);
                p.encode_into(out);
            }
            Element::Product(pair) => {
                out.push(7);
                pair.0.encode_body(out);
                pair.1.encode_body(out);
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Option<Element> {
        let (&version, body) = bytes.split_first()?;
        if version != ENCODING_VERSION {
            return None;
        }
        let (e, rest) = Element::decode_body(body)?;
        rest.is_empty().then_some(e)
    }

    fn decode_body(bytes: &[u8]) -> Option<(Element, &[u8])> {
        let (&tag, mut rest) = bytes.split_first()?;
        let e = match tag {
            1 => {
                let n = take_len(&mut rest)?;
                let v = (0..n).map(|_| take_i64(&mut rest)).collect::<Option<Vec<_>>>()?;
                Element::Abelian(v)
            }
            2 => {
                let n = take_len(&mut rest)?;
                if rest.len() < n {
                    return None;
                }
                let w = rest[..n].iter().map(|x| *x as i8).collect();
                rest = &rest[n..];
                Element::Free(w)
            }
            3 => {
                let d = take_len(&mut rest)?;
                let cursor = (0..d).map(|_| take_i64(&mut rest)).collect::<Option<Vec<_>>>()?;
                let count = take_len(&mut rest)?;
                let mut lamps = BTreeMap::new();
                for _ in 0..count {
                    let pos = (0..d).map(|_| take_i64(&mut rest)).collect::<Option<Vec<_>>>()?;
                    let state = take_u32(&mut rest)?;
                    lamps.insert(pos, state);
                }
                Element::Lamplighter(Box::new(LampState { cursor, lamps }))
            }
            4 => {
                let x = take_i64(&mut rest)?;
                let y = take_i64(&mut rest)?;
                let z = take_i64(&mut rest)?;
                Element::Heisenberg([x, y, z])
            }
            5 => {
                let k = take_i64(&mut rest)?;
                let n = take_len(&mut rest)?;
                if rest.len() < n {
                    return None;
                }
                let m = BigInt::from_signed_bytes_le(&rest[..n]);
                rest = &rest[n..];
                let j = take_u32(&mut rest)?;
                Element::BaumslagSolitar(Box::new(AffineDyadic { k, m, j }))
            }
            6 => {
                let (p, r) = Portrait::decode(rest)?;
                rest = r;
                Element::Grigorchuk(p)
            }
            7 => {
                let (a, r) = Element::decode_body(rest)?;
                let (b, r) = Element::decode_body(r)?;
                rest = r;
                Element::pair(a, b)
            }
            _ => return None,
        };
        Some((e, rest))
    }
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&(n as u32).to_le_bytes());
}

fn put_i64(out: &mut Vec<u8>, x: i64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn take_u32(rest: &mut &[u8]) -> Option<u32> {
    if rest.len() < 4 {
        return None;
    }
    let v = u32::from_le_bytes(rest[..4].try_into().ok()?);
    *rest = &rest[4..];
    Some(v)
}

fn take_len(rest: &mut &[u8]) -> Option<usize> {
    take_u32(rest).map(|x| x as usize)
}

fn take_i64(rest: &mut &[u8]) -> Option<i64> {
    if rest.len() < 8 {
        return None;
    }
    let v = i64::from_le_bytes(rest[..8].try_into().ok()?);
    *rest = &rest[8..];
    Some(v)
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Abelian(v) => write!(f, "{v:?}"),
            Element::Free(w) => {
                if w.is_empty() {
                    return write!(f, "e");
                }
                for &l in w {
                    let c = (b'a' + (l.unsigned_abs() - 1)) as char;
                    if l > 0 {
                        write!(f, "{c}")?;
                    } else {
                        write!(f, "{}", c.to_ascii_uppercase())?;
                    }
                }
                Ok(())
            }
            Element::Lamplighter(l) => write!(f, "({:?}; {:?})", l.cursor, l.lamps),
            Element::Heisenberg(h) => write!(f, "({}, {}, {})", h[0], h[1], h[2]),
            Element::BaumslagSolitar(b) => write!(f, "({}, {}/n^{})", b.k, b.m, b.j),
            Element::Grigorchuk(p) => write!(f, "{p:?}"),
            Element::Product(p) => write!(f, "({}, {})", p.0, p.1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_roundtrip_examples() {
        let mut lamps = BTreeMap::new();
        lamps.insert(vec![-3], 1);
        lamps.insert(vec![2], 1);
        let samples = vec![
            Element::Abelian(vec![3, -2]),
            Element::Free(vec![1, -2, -2, 1]),
            Element::Lamplighter(Box::new(LampState {
                cursor: vec![4],
                lamps,
            })),
            Element::Heisenberg([1, -1, 7]),
            Element::BaumslagSolitar(Box::new(AffineDyadic {
                k: -2,
                m: BigInt::from(-13),
                j: 5,
            })),
            Element::pair(Element::Abelian(vec![1]), Element::Free(vec![2])),
        ];
        for e in samples {
            let bytes = e.encode();
            assert_eq!(bytes[0], ENCODING_VERSION);
            assert_eq!(Element::decode(&bytes), Some(e));
        }
    }

    #[test]
    fn decode_rejects_garbage() {
        assert_eq!(Element::decode(&[]), None);
        assert_eq!(Element::decode(&[9, 1]), None);
        assert_eq!(Element::decode(&[ENCODING_VERSION, 42]), None);
    }
}
