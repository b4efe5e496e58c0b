//! Canonical storage of the coefficient tensors F_{g,n|2m}: bosonic slots are
//! symmetric (stored sorted), fermionic slots antisymmetric (stored strictly
//! increasing, the permutation sign applied on access).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::curve::CurveData;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorrKey {
    pub g: u32,
    pub bos: Vec<u32>,
    pub fer: Vec<u32>,
}

impl CorrKey {
    pub fn new(g: u32, bos: Vec<u32>, fer: Vec<u32>) -> CorrKey {
        CorrKey { g, bos, fer }
    }

    /// χ = 2g + n + 2m.
    pub fn chi(&self) -> u32 {
        2 * self.g + self.bos.len() as u32 + self.fer.len() as u32
    }

    pub fn ty(&self) -> Type {
        Type { g: self.g, n: self.bos.len() as u32, f: self.fer.len() as u32 }
    }
}

impl fmt::Display for CorrKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "F_{}({}|{})", self.g, j(&self.bos), j(&self.fer))
    }
}

/// A tensor type (g, n, 2m); `f` is the number of fermionic slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Type {
    pub g: u32,
    pub n: u32,
    pub f: u32,
}

impl Type {
    pub fn new(g: u32, n: u32, f: u32) -> Type {
        Type { g, n, f }
    }

    pub fn chi(&self) -> u32 {
        2 * self.g + self.n + self.f
    }

    pub fn is_stable(&self) -> bool {
        self.chi() > 2
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}|{})", self.g, self.n, self.f)
    }
}

pub fn is_stable(g: u32, n: usize, f: usize) -> bool {
    2 * g as usize + n + f > 2
}

/// Largest total index sum (bosonic plus fermionic) of a nonzero entry at
/// level χ: every recursion step adds at most ε to the pole order through
/// the kernel 1/Δω, and the deformations only add regular terms.
pub fn index_bound(epsilon: u8, chi: u32) -> u32 {
    epsilon as u32 * chi.saturating_sub(2)
}

/// Sort a fermionic index list; `None` on a repeated index, else the sorted
/// list and the sign of the sorting permutation.
pub fn sort_fermions(fer: &[u32]) -> Option<(Vec<u32>, i32)> {
    let mut v = fer.to_vec();
    let mut sign = 1;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// Sign of the permutation rearranging `K` into `(K1, K2)`, where `in_first[p]`
/// tells whether position `p` of `K` goes to `K1`.
pub fn partition_sign(in_first: &[bool]) -> i32 {
    let mut seen_second = 0;
    let mut inv = 0;
    for &b in in_first {
        if b {
            inv += seen_second;
        } else {
            seen_second += 1;
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Same as `partition_sign` with a bitmask of positions.
pub fn partition_sign_mask(mask: u32, len: usize) -> i32 {
    let mut seen_second = 0;
    let mut inv = 0;
    for p in 0..len {
        if mask >> p & 1 == 1 {
            inv += seen_second;
        } else {
            seen_second += 1;
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug)]
pub struct CorrTensor {
    entries: BTreeMap<CorrKey, Scalar>,
    pub chi_max: u32,
    pub curve: Option<Arc<CurveData>>,
}

impl PartialEq for CorrTensor {
    fn eq(&self, o: &CorrTensor) -> bool {
        self.chi_max == o.chi_max && self.entries == o.entries
    }
}

impl CorrTensor {
    pub fn new(chi_max: u32, curve: Option<Arc<CurveData>>) -> CorrTensor {
        CorrTensor { entries: BTreeMap::new(), chi_max, curve }
    }

    pub fn get(&self, g: u32, bos: &[u32], fer: &[u32]) -> Scalar {
        if !is_stable(g, bos.len(), fer.len()) || fer.len() % 2 == 1 {
            return Scalar::zero();
        }
        let (fer, sign) = match sort_fermions(fer) {
            Some(x) => x,
            None => return Scalar::zero(),
        };
        let mut bos = bos.to_vec();
        bos.sort_unstable();
        match self.entries.get(&CorrKey { g, bos, fer }) {
            Some(v) if sign < 0 => -v,
            Some(v) => v.clone(),
            None => Scalar::zero(),
        }
    }

    /// Lookup by an already canonical key.
    pub fn get_key(&self, k: &CorrKey) -> Option<&Scalar> {
        self.entries.get(k)
    }

    pub fn set(&mut self, g: u32, bos: &[u32], fer: &[u32], v: Scalar) -> Result<()> {
        if !is_stable(g, bos.len(), fer.len()) {
            return Err(Error::Stability(format!("2g+n+2m = {} <= 2", 2 * g as usize + bos.len() + fer.len())));
        }
        if fer.len() % 2 == 1 {
            return Err(Error::Parity(format!("odd number of fermionic slots {:?}", fer)));
        }
        if bos.contains(&0) {
            return Err(Error::Parity("bosonic index 0".into()));
        }
        let (fer, sign) = match sort_fermions(fer) {
            Some(x) => x,
            None => {
                if v.is_zero() {
                    return Ok(());
                }
                return Err(Error::Parity(format!("repeated fermionic index {:?}", fer)));
            }
        };
        let mut bos = bos.to_vec();
        bos.sort_unstable();
        let key = CorrKey { g, bos, fer };
        if v.is_zero() {
            self.entries.remove(&key);
            return Ok(());
        }
        if key.bos.iter().any(|i| i % 2 == 0) || key.fer.iter().any(|j| j % 2 == 1) {
            return Err(Error::Parity(format!("{} must vanish", key)));
        }
        self.entries.insert(key, if sign < 0 { -v } else { v });
        Ok(())
    }

    pub fn insert_canonical(&mut self, key: CorrKey, v: Scalar) {
        if v.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, v);
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CorrKey, &Scalar)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of one type.
    pub fn of_type(&self, t: Type) -> Vec<(&CorrKey, &Scalar)> {
        self.entries.iter().filter(|(k, _)| k.ty() == t).collect()
    }

    /// Keep only entries with χ ≤ `chi`.
    pub fn restricted(&self, chi: u32) -> CorrTensor {
        let entries = self.entries.iter().filter(|(k, _)| k.chi() <= chi).map(|(k, v)| (k.clone(), v.clone())).collect();
        CorrTensor { entries, chi_max: chi.min(self.chi_max), curve: self.curve.clone() }
    }

    /// First key on which the two tensors differ (restricted to common χ range).
    pub fn first_difference(&self, o: &CorrTensor) -> Option<(CorrKey, Scalar, Scalar)> {
        let chi = self.chi_max.min(o.chi_max);
        let mut keys: Vec<&CorrKey> = self.entries.keys().chain(o.entries.keys()).filter(|k| k.chi() <= chi).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let a = self.entries.get(k).cloned().unwrap_or_default();
            let b = o.entries.get(k).cloned().unwrap_or_default();
            if a != b {
                return Some((k.clone(), a, b));
            }
        }
        None
    }
}

/// All multisets (sorted, non-decreasing) of `size` elements from `vals`.
pub fn multisets(vals: &[u32], size: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(vals: &[u32], start: usize, size: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..vals.len() {
            cur.push(vals[i]);
            rec(vals, i, size, cur, out);
            cur.pop();
        }
    }
    rec(vals, 0, size, &mut cur, &mut out);
    out
}

/// All strictly increasing subsets of `size` elements from sorted `vals`.
pub fn subsets(vals: &[u32], size: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(vals: &[u32], start: usize, size: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..vals.len() {
            cur.push(vals[i]);
            rec(vals, i + 1, size, cur, out);
            cur.pop();
        }
    }
    rec(vals, 0, size, &mut cur, &mut out);
    out
}

/// Multisets of odd indices of the given size with sum at most `max_sum`.
pub fn odd_multisets(size: usize, max_sum: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: u32, size: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        let rest = (size - cur.len() - 1) as u32;
        let mut a = start;
        // remaining slots need at least `a` each
        while a * (rest + 1) <= left {
            cur.push(a);
            rec(a, size, left - a, cur, out);
            cur.pop();
            a += 2;
        }
    }
    rec(1, size, max_sum, &mut cur, &mut out);
    out
}

/// Strictly increasing lists of even indices (0 allowed) of the given size
/// with sum at most `max_sum`.
pub fn even_subsets(size: usize, max_sum: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: u32, size: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        let rest = (size - cur.len() - 1) as u32;
        let mut a = start;
        // the remaining entries are at least a+2, a+4, ...
        while a * (rest + 1) + rest * (rest + 1) <= left {
            cur.push(a);
            rec(a + 2, size, left - a, cur, out);
            cur.pop();
            a += 2;
        }
    }
    rec(0, size, max_sum, &mut cur, &mut out);
    out
}

/// Odd bosonic indices up to `b`.
pub fn odd_upto(b: u32) -> Vec<u32> {
    (1..=b).step_by(2).collect()
}

/// Even fermionic indices up to `b` (including the zero mode).
pub fn even_upto(b: u32) -> Vec<u32> {
    (0..=b).step_by(2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn get_set_examples() {
        let mut t = CorrTensor::new(3, None);
        t.set(0, &[1, 1, 1], &[], Scalar::from_int(-1)).unwrap();
        assert_eq!(t.get(0, &[1, 1, 1], &[]), Scalar::from_int(-1));
        t.set(0, &[1], &[2, 0], Scalar::frac(-1, 2)).unwrap();
        assert_eq!(t.get(0, &[1], &[0, 2]), Scalar::frac(1, 2));
        assert_eq!(t.get(0, &[1], &[2, 0]), Scalar::frac(-1, 2));
        assert_eq!(t.get(0, &[1], &[2, 2]), Scalar::zero());
        assert!(matches!(t.set(0, &[2], &[0, 2], Scalar::one()), Err(Error::Parity(_))));
        assert!(matches!(t.set(0, &[1], &[0, 3], Scalar::one()), Err(Error::Parity(_))));
        assert!(matches!(t.set(0, &[1], &[], Scalar::one()), Err(Error::Stability(_))));
    }

    #[test]
    fn partition_sign_examples() {
        assert_eq!(partition_sign(&[true, false]), 1);
        assert_eq!(partition_sign(&[false, true]), -1);
        // K=(a,b,c,d), K1=(b,d), K2=(a,c): (b,d,a,c) has 3 inversions
        assert_eq!(partition_sign(&[false, true, false, true]), -1);
        assert_eq!(partition_sign_mask(0b1010, 4), -1);
    }

    #[test]
    fn enumeration() {
        assert_eq!(multisets(&[1, 3], 2), vec![vec![1, 1], vec![1, 3], vec![3, 3]]);
        assert_eq!(subsets(&[0, 2, 4], 2), vec![vec![0, 2], vec![0, 4], vec![2, 4]]);
        assert_eq!(index_bound(3, 3), 3);
        assert_eq!(index_bound(3, 8), 18);
        assert_eq!(index_bound(1, 5), 3);
        assert_eq!(odd_multisets(2, 4), vec![vec![1, 1], vec![1, 3]]);
        assert_eq!(odd_multisets(0, 0), vec![Vec::<u32>::new()]);
        assert_eq!(even_subsets(2, 4), vec![vec![0, 2], vec![0, 4]]);
        assert_eq!(even_subsets(3, 6), vec![vec![0, 2, 4]]);
        assert!(even_subsets(3, 5).is_empty());
    }

    fn perm_sign(p: &[usize]) -> i32 {
        let mut s = 1;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    s = -s;
                }
            }
        }
        s
    }

    proptest! {
        #[test]
        fn round_trip_permutations(
            bos in prop::collection::vec(0u32..4, 0..4),
            nf in 1usize..3,
            seed in any::<u64>(),
            v in -9i64..9,
        ) {
            prop_assume!(v != 0);
            let bos: Vec<u32> = bos.into_iter().map(|b| 2 * b + 1).collect();
            let fer: Vec<u32> = (0..2 * nf as u32).map(|j| 2 * j).collect();
            prop_assume!(is_stable(1, bos.len(), fer.len()));
            let mut t = CorrTensor::new(9, None);
            t.set(1, &bos, &fer, Scalar::from_int(v)).unwrap();
            // pseudo-random permutation of fer and bos
            let mut idx: Vec<usize> = (0..fer.len()).collect();
            let mut x = seed;
            for i in (1..idx.len()).rev() {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (x >> 33) as usize % (i + 1));
            }
            let pf: Vec<u32> = idx.iter().map(|&i| fer[i]).collect();
            let mut pb = bos.clone();
            pb.reverse();
            let expect = Scalar::from_int(v * perm_sign(&idx) as i64);
            prop_assert_eq!(t.get(1, &pb, &pf), expect.clone());
            let mut t2 = CorrTensor::new(9, None);
            t2.set(1, &pb, &pf, expect).unwrap();
            prop_assert_eq!(t2, t);
        }
    }
}
