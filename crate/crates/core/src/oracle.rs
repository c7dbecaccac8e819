//! Independent reference computations.
//!
//! Nothing here goes through the group or measure engines: every function is
//! a direct closed form, enumeration or brute-force action, so it can be used
//! to check those engines.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Action of the Grigorchuk generators on the vertices of level `depth` of the
/// binary tree, by walking the automaton bit by bit.
pub struct TreeAction {
    depth: u32,
    perms: [Vec<u32>; 4],
}

impl TreeAction {
    pub fn new(depth: u32) -> Self {
        assert!(depth <= 20);
        let size = 1u32 << depth;
        let perms = [0u8, 1, 2, 3].map(|letter| {
            (0..size)
                .map(|v| act_letter(letter, v, depth))
                .collect::<Vec<u32>>()
        });
        TreeAction { depth, perms }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Permutation of level-`depth` vertices induced by a word over
    /// `a=0, b=1, c=2, d=3`; the rightmost letter acts first.
    pub fn word_permutation(&self, word: &[u8]) -> Vec<u32> {
        let size = 1usize << self.depth;
        let mut perm: Vec<u32> = (0..size as u32).collect();
        for &l in word {
            self.compose_right(&mut perm, l);
        }
        perm
    }

    /// `perm <- perm o letter`.
    pub fn compose_right(&self, perm: &mut [u32], letter: u8) {
        let p = &self.perms[letter as usize];
        for x in perm.iter_mut() {
            *x = p[*x as usize];
        }
    }

    pub fn is_identity(&self, word: &[u8]) -> bool {
        is_identity_perm(&self.word_permutation(word))
    }

    /// Smallest `k >= 1` with `word^k` acting trivially, up to `max`.
    pub fn order(&self, word: &[u8], max: usize) -> Option<usize> {
        let size = 1usize << self.depth;
        let mut perm: Vec<u32> = (0..size as u32).collect();
        for k in 1..=max {
            for &l in word {
                self.compose_right(&mut perm, l);
            }
            if is_identity_perm(&perm) {
                return Some(k);
            }
        }
        None
    }
}

pub fn is_identity_perm(perm: &[u32]) -> bool {
    perm.iter().enumerate().all(|(i, x)| *x as usize == i)
}

// Bit `i` of a vertex is the letter at level `i` (root first).
fn act_letter(mut state: u8, v: u32, depth: u32) -> u32 {
    let mut out = v;
    for i in 0..depth {
        let bit = (v >> i) & 1;
        match state {
            0 => {
                out ^= 1 << i;
                return out;
            }
            1 => state = if bit == 0 { 0 } else { 2 },
            2 => state = if bit == 0 { 0 } else { 3 },
            3 => {
                if bit == 0 {
                    return out;
                }
                state = 1;
            }
            _ => unreachable!(),
        }
    }
    out
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// Simple random walk on Z: `P(S_{2n} = 0) = C(2n, n) / 4^n`.
pub fn srw_z_return(two_n: u64) -> BigRational {
    if two_n % 2 == 1 {
        return BigRational::zero();
    }
    ratio(binomial(two_n, two_n / 2), BigInt::from(2).pow(two_n as u32))
}

/// Lazy walk `1/2 delta_0 + 1/4 delta_{+1} + 1/4 delta_{-1}` on Z at time `t`:
/// the number of `+1, -1` steps among `t` is binomial, and the position is 0
/// iff they balance. Equivalently `C(2t, t) / 4^t`.
pub fn lazy_z_return(t: u64) -> BigRational {
    // sum over j moving steps with j even: C(t, j) 2^-t * C(j, j/2) 2^-j
    let mut acc = BigRational::zero();
    for j in (0..=t).step_by(2) {
        let num = binomial(t, j) * binomial(j, j / 2);
        acc += ratio(num, BigInt::from(2).pow((t + j) as u32));
    }
    acc
}

/// Law of the lazy walk on Z at time `t`: the lazy step is the sum of two
/// independent fair `{0, 1}` and `{0, -1}` coins, so `P(X_t = k) = C(2t, t + k) / 4^t`.
pub fn lazy_z_law(t: u64, k: i64) -> BigRational {
    let idx = t as i64 + k;
    if idx < 0 || idx > 2 * t as i64 {
        return BigRational::zero();
    }
    ratio(binomial(2 * t, idx as u64), BigInt::from(4).pow(t as u32))
}

/// Number of closed walks of length `2n` from a vertex of the `d`-regular
/// tree (McKay's formula).
pub fn tree_closed_walks(d: u64, n: u64) -> BigInt {
    if n == 0 {
        return BigInt::one();
    }
    let mut acc = BigInt::zero();
    for j in 1..=n {
        // (j / (2n - j)) C(2n - j, n) d^j (d-1)^(n-j)
        let term = BigInt::from(j) * binomial(2 * n - j, n) * BigInt::from(d).pow(j as u32)
            * BigInt::from(d - 1).pow((n - j) as u32);
        acc += term / BigInt::from(2 * n - j);
    }
    acc
}

/// Return probability at time `t` of the walk on the free group `F_k` that
/// stays put with probability `lazy` and otherwise moves to a uniform
/// generator, by path counting in the `2k`-regular tree.
pub fn free_group_return(k: u64, lazy: &BigRational, t: u64) -> BigRational {
    let d = 2 * k;
    let move_p = BigRational::one() - lazy;
    let mut acc = BigRational::zero();
    for j in (0..=t).step_by(2) {
        if move_p.is_zero() && j > 0 {
            break;
        }
        let weight = BigRational::from_integer(binomial(t, j))
            * pow_ratio(lazy, t - j)
            * pow_ratio(&move_p, j);
        let paths = ratio(tree_closed_walks(d, j / 2), BigInt::from(d).pow(j as u32));
        acc += weight * paths;
    }
    acc
}

fn pow_ratio(x: &BigRational, e: u64) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// Spectral radius of the lazy walk on `F_k`: `lazy + (1 - lazy) sqrt(2k-1)/k`.
pub fn free_group_spectral_radius(k: u64, lazy: f64) -> f64 {
    lazy + (1.0 - lazy) * ((2 * k - 1) as f64).sqrt() / k as f64
}

/// Double factorial `(2d - 1)!!`.
pub fn odd_double_factorial(d: u32) -> f64 {
    (1..=d).map(|k| (2 * k - 1) as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mckay_on_the_line_gives_central_binomials() {
        for n in 0..10 {
            assert_eq!(tree_closed_walks(2, n), binomial(2 * n, n));
        }
    }

    #[test]
    fn mckay_small_values_for_four_regular_tree() {
        // closed walks of length 2 and 4 in the 4-regular tree: 4, 4*3 + 4*4 = 28
        assert_eq!(tree_closed_walks(4, 1), BigInt::from(4));
        assert_eq!(tree_closed_walks(4, 2), BigInt::from(28));
    }

    #[test]
    fn lazy_z_matches_central_binomial_form() {
        for t in 0..20 {
            let expected = ratio(binomial(2 * t, t), BigInt::from(4).pow(t as u32));
            assert_eq!(lazy_z_return(t), expected);
        }
    }

    #[test]
    fn tree_action_relations() {
        let act = TreeAction::new(8);
        assert!(act.is_identity(&[0, 0]));
        assert!(act.is_identity(&[1, 2, 3]));
        assert!(!act.is_identity(&[0, 3]));
    }
}
