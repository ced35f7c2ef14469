//! Weak compositions with bounded parts.

use num_bigint::BigUint;
use num_traits::One;

/// Enumerates `(u_1, ..., u_b)` with `sum u_i = total` and every `u_i < bound`,
/// in lexicographic order.
#[derive(Debug, Clone)]
pub struct CompositionIterator {
    total: usize,
    bound: usize,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl CompositionIterator {
    /// Parts in `{0, ..., bound - 1}`. Use `bound = total + 1` for unrestricted parts.
    pub fn new(total: usize, parts: usize, bound: usize) -> Self {
        let mut it = CompositionIterator {
            total,
            bound,
            current: vec![0; parts],
            started: false,
            done: false,
        };
        if !it.fill_from(0, total) {
            it.done = true;
        }
        it
    }

    /// Unrestricted weak compositions of `total` into `parts` parts.
    pub fn unrestricted(total: usize, parts: usize) -> Self {
        Self::new(total, parts, total + 1)
    }

    /// Writes the smallest feasible suffix starting at `from` with sum `rest`.
    fn fill_from(&mut self, from: usize, rest: usize) -> bool {
        let b = self.current.len();
        if b == from {
            return rest == 0;
        }
        let cap = self.bound.saturating_sub(1);
        if rest > cap * (b - from) {
            return false;
        }
        let mut rest = rest;
        for i in from..b {
            let after = cap * (b - i - 1);
            let v = rest.saturating_sub(after);
            self.current[i] = v;
            rest -= v;
        }
        true
    }
}

impl Iterator for CompositionIterator {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current.clone());
        }
        let b = self.current.len();
        if b == 0 {
            self.done = true;
            return None;
        }
        let cap = self.bound.saturating_sub(1);
        let mut prefix: usize = self.total - self.current[b - 1];
        for i in (0..b.saturating_sub(1)).rev() {
            prefix -= self.current[i];
            let v = self.current[i] + 1;
            if v <= cap && prefix + v <= self.total && self.total - prefix - v <= cap * (b - i - 1) {
                self.current[i] = v;
                let rest = self.total - prefix - v;
                self.fill_from(i + 1, rest);
                return Some(self.current.clone());
            }
        }
        self.done = true;
        None
    }
}

/// `C(a + b - 1, b - 1)`, the number of weak compositions of `a` into `b` parts.
pub fn count_unrestricted(a: usize, b: usize) -> BigUint {
    if b == 0 {
        return if a == 0 { BigUint::one() } else { BigUint::default() };
    }
    binomial(a + b - 1, b - 1)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn small_listing() {
        let v: Vec<_> = CompositionIterator::unrestricted(2, 2).collect();
        assert_eq!(v, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let v: Vec<_> = CompositionIterator::new(3, 2, 3).collect();
        assert_eq!(v, vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(CompositionIterator::new(5, 2, 3).count(), 0);
        assert_eq!(CompositionIterator::unrestricted(0, 0).count(), 1);
        assert_eq!(CompositionIterator::unrestricted(1, 0).count(), 0);
    }

    #[test]
    fn counts_match_stars_and_bars() {
        for a in 0..9 {
            for b in 1..6 {
                let all: Vec<_> = CompositionIterator::unrestricted(a, b).collect();
                let uniq: HashSet<_> = all.iter().cloned().collect();
                assert_eq!(uniq.len(), all.len());
                assert!(all.iter().all(|c| c.iter().sum::<usize>() == a));
                assert_eq!(BigUint::from(all.len()), count_unrestricted(a, b), "a={a} b={b}");
            }
        }
    }

    #[test]
    fn bounded_parts_brute_force() {
        for a in 0..8 {
            for b in 1..5 {
                for bound in 1..4 {
                    let got = CompositionIterator::new(a, b, bound).count();
                    let mut want = 0;
                    let total = bound.pow(b as u32);
                    for code in 0..total {
                        let mut c = code;
                        let mut s = 0;
                        for _ in 0..b {
                            s += c % bound;
                            c /= bound;
                        }
                        want += usize::from(s == a);
                    }
                    assert_eq!(got, want, "a={a} b={b} bound={bound}");
                }
            }
        }
    }
}
