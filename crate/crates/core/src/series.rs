//! Truncated Laurent series in one variable `z` tagged with a power of `dz`
//! and a Θ-parity, plus the two bilinear shapes (`BiForm`) and a small
//! bivariate power-series helper (`BiSeries`) used to ingest raw curve data.
//!
//! Θ is the fermionic half-differential with Θ² = z dz. It is σ-invariant and
//! carries no ordering signs here; multi-slot signs live in `store`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Rat, Scalar};

/// Truncation order of a series known exactly (a Laurent polynomial).
pub const EXACT: i64 = i64::MAX / 4;

fn lower(t: i64, by: i64) -> i64 {
    if t >= EXACT {
        EXACT
    } else {
        t - by
    }
}

fn sat(x: i64) -> i64 {
    x.clamp(-EXACT, EXACT)
}

#[derive(Clone, PartialEq)]
pub struct FormalSeries {
    /// Exponent of `coeffs[0]`; after normalization `coeffs[0]` is nonzero.
    min_exp: i64,
    /// Dense coefficients for exponents `min_exp ..`.
    coeffs: Vec<Scalar>,
    /// Coefficients above this exponent are unknown.
    trunc: i64,
    dz: i32,
    theta: bool,
}

impl fmt::Debug for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})z^{}", c, k)?;
        }
        if first {
            write!(f, "0")?;
        }
        if self.trunc < EXACT {
            write!(f, " + O(z^{})", self.trunc + 1)?;
        }
        write!(f, " [dz^{}{}]", self.dz, if self.theta { " Θ" } else { "" })
    }
}

impl FormalSeries {
    pub fn new(min_exp: i64, coeffs: Vec<Scalar>, trunc: i64, dz: i32, theta: bool) -> FormalSeries {
        let mut s = FormalSeries { min_exp, coeffs, trunc, dz, theta };
        s.normalize();
        s
    }

    pub fn zero(trunc: i64, dz: i32, theta: bool) -> FormalSeries {
        FormalSeries { min_exp: sat(trunc.saturating_add(1)), coeffs: Vec::new(), trunc, dz, theta }
    }

    pub fn monomial(c: Scalar, exp: i64, dz: i32, theta: bool) -> FormalSeries {
        FormalSeries::new(exp, vec![c], EXACT, dz, theta)
    }

    /// Build from sparse `(exponent, coefficient)` pairs.
    pub fn from_terms(terms: &[(i64, Scalar)], trunc: i64, dz: i32, theta: bool) -> FormalSeries {
        let ks: Vec<i64> = terms.iter().map(|t| t.0).filter(|&k| k <= trunc).collect();
        let (lo, hi) = match (ks.iter().min(), ks.iter().max()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return FormalSeries::zero(trunc, dz, theta),
        };
        let mut coeffs = vec![Scalar::zero(); (hi - lo + 1) as usize];
        for (k, c) in terms {
            if *k <= trunc {
                coeffs[(k - lo) as usize] += c;
            }
        }
        FormalSeries::new(lo, coeffs, trunc, dz, theta)
    }

    fn normalize(&mut self) {
        if self.trunc < EXACT {
            let keep = (self.trunc - self.min_exp + 1).max(0) as usize;
            if keep < self.coeffs.len() {
                self.coeffs.truncate(keep);
            }
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.min_exp = sat(self.trunc.saturating_add(1));
        } else if lead > 0 {
            self.coeffs.drain(..lead);
            self.min_exp += lead as i64;
        }
    }

    pub fn min_exp(&self) -> i64 {
        self.min_exp
    }

    /// Highest exponent with a nonzero stored coefficient.
    pub fn max_exp(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.min_exp + self.coeffs.len() as i64 - 1)
        }
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc >= EXACT
    }

    pub fn dz_weight(&self) -> i32 {
        self.dz
    }

    pub fn theta(&self) -> bool {
        self.theta
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Nonzero terms in increasing exponent order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &Scalar)> {
        let m = self.min_exp;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (m + i as i64, c))
    }

    /// Coefficient at `k`; errors if `k` lies beyond the truncation.
    pub fn coeff(&self, k: i64) -> Result<Scalar> {
        if k > self.trunc {
            return Err(Error::Truncation(format!("coefficient z^{} requested, known up to z^{}", k, self.trunc)));
        }
        Ok(self.coeff_or_zero(k))
    }

    fn coeff_or_zero(&self, k: i64) -> Scalar {
        if k < self.min_exp {
            return Scalar::zero();
        }
        self.coeffs.get((k - self.min_exp) as usize).cloned().unwrap_or_default()
    }

    fn coeff_ref(&self, k: i64) -> Option<&Scalar> {
        if k < self.min_exp {
            return None;
        }
        self.coeffs.get((k - self.min_exp) as usize)
    }

    pub fn with_trunc(mut self, t: i64) -> FormalSeries {
        self.trunc = self.trunc.min(t);
        self.normalize();
        self
    }

    fn same_tag(&self, o: &FormalSeries) -> bool {
        self.dz == o.dz && self.theta == o.theta
    }

    pub fn try_add(&self, o: &FormalSeries) -> Result<FormalSeries> {
        if !self.same_tag(o) {
            return Err(Error::Weight(format!(
                "adding dz^{}{} to dz^{}{}",
                self.dz, if self.theta { "Θ" } else { "" }, o.dz, if o.theta { "Θ" } else { "" }
            )));
        }
        let trunc = self.trunc.min(o.trunc);
        if o.coeffs.is_empty() {
            return Ok(self.clone().with_trunc(trunc));
        }
        if self.coeffs.is_empty() {
            return Ok(o.clone().with_trunc(trunc));
        }
        let lo = self.min_exp.min(o.min_exp);
        let hi = self.max_exp().unwrap().max(o.max_exp().unwrap()).min(trunc);
        if hi < lo {
            return Ok(FormalSeries::zero(trunc, self.dz, self.theta));
        }
        let mut coeffs = vec![Scalar::zero(); (hi - lo + 1) as usize];
        for s in [self, o] {
            for (i, c) in s.coeffs.iter().enumerate() {
                let k = s.min_exp + i as i64;
                if k <= hi {
                    coeffs[(k - lo) as usize] += c;
                }
            }
        }
        Ok(FormalSeries::new(lo, coeffs, trunc, self.dz, self.theta))
    }

    /// In-place `self += c * o` (tags must agree).
    pub fn add_scaled(&mut self, c: &Scalar, o: &FormalSeries) {
        assert!(self.same_tag(o), "series tag mismatch in add_scaled");
        if c.is_zero() {
            self.trunc = self.trunc.min(o.trunc);
            self.normalize();
            return;
        }
        let trunc = self.trunc.min(o.trunc);
        if o.coeffs.is_empty() {
            self.trunc = trunc;
            self.normalize();
            return;
        }
        let ohi = o.max_exp().unwrap().min(trunc);
        if ohi < o.min_exp {
            self.trunc = trunc;
            self.normalize();
            return;
        }
        if self.coeffs.is_empty() {
            self.min_exp = o.min_exp;
        }
        if o.min_exp < self.min_exp {
            let pad = (self.min_exp - o.min_exp) as usize;
            let mut v = vec![Scalar::zero(); pad];
            v.append(&mut self.coeffs);
            self.coeffs = v;
            self.min_exp = o.min_exp;
        }
        let need = (ohi - self.min_exp + 1) as usize;
        if self.coeffs.len() < need {
            self.coeffs.resize(need, Scalar::zero());
        }
        for (i, oc) in o.coeffs.iter().enumerate() {
            let k = o.min_exp + i as i64;
            if k > ohi {
                break;
            }
            if !oc.is_zero() {
                let t = &self.coeffs[(k - self.min_exp) as usize] + &(c * oc);
                self.coeffs[(k - self.min_exp) as usize] = t;
            }
        }
        self.trunc = trunc;
        self.normalize();
    }

    pub fn scale(&self, c: &Scalar) -> FormalSeries {
        let coeffs = if c.is_zero() { Vec::new() } else { self.coeffs.iter().map(|x| c * x).collect() };
        FormalSeries::new(self.min_exp, coeffs, self.trunc, self.dz, self.theta)
    }

    pub fn neg(&self) -> FormalSeries {
        self.scale(&Scalar::from_int(-1))
    }

    /// Multiply by `z^s`.
    pub fn shift(&self, s: i64) -> FormalSeries {
        let mut r = self.clone();
        r.min_exp = sat(r.min_exp + s);
        r.trunc = if r.is_exact() { EXACT } else { sat(r.trunc + s) };
        r
    }

    pub fn mul(&self, o: &FormalSeries) -> FormalSeries {
        self.mul_capped(o, EXACT)
    }

    /// Cauchy product keeping only exponents `<= cap` (the result is
    /// truncated at `cap`). Θ·Θ is replaced by `z dz`.
    pub fn mul_capped(&self, o: &FormalSeries, cap: i64) -> FormalSeries {
        let both = self.theta && o.theta;
        let shift = if both { 1 } else { 0 };
        let dz = self.dz + o.dz + shift as i32;
        let theta = self.theta ^ o.theta;
        let ta = self.trunc;
        let tb = o.trunc;
        let mut trunc = if self.is_exact() && o.is_exact() {
            EXACT
        } else {
            let x = if tb >= EXACT { EXACT } else { sat(self.min_exp + tb) };
            let y = if ta >= EXACT { EXACT } else { sat(o.min_exp + ta) };
            x.min(y)
        };
        if trunc < EXACT {
            trunc = sat(trunc + shift);
        }
        trunc = trunc.min(cap);
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return FormalSeries::zero(trunc, dz, theta);
        }
        let lo = self.min_exp + o.min_exp + shift;
        let hi_full = self.max_exp().unwrap() + o.max_exp().unwrap() + shift;
        let hi = hi_full.min(trunc);
        if hi < lo {
            return FormalSeries::zero(trunc, dz, theta);
        }
        let n = (hi - lo + 1) as usize;
        let mut out = vec![Scalar::zero(); n];
        let la = self.coeffs.len();
        let lb = o.coeffs.len();
        for i in 0..la.min(n) {
            let a = &self.coeffs[i];
            if a.is_zero() {
                continue;
            }
            let jmax = lb.min(n - i);
            for j in 0..jmax {
                let b = &o.coeffs[j];
                if b.is_zero() {
                    continue;
                }
                out[i + j] += &(a * b);
            }
        }
        FormalSeries::new(lo, out, trunc, dz, theta)
    }

    /// Coefficient of `z^{-1} dz`.
    pub fn residue(&self) -> Result<Scalar> {
        if self.dz != 1 || self.theta {
            return Err(Error::Weight(format!(
                "residue of dz^{}{}",
                self.dz,
                if self.theta { " Θ" } else { "" }
            )));
        }
        self.coeff(-1)
    }

    /// Multiplicative inverse; coefficients are produced up to exponent `upto`
    /// (or to the precision supported by the input's truncation).
    pub fn invert(&self, upto: i64) -> Result<FormalSeries> {
        if self.theta {
            return Err(Error::Weight("cannot invert a Θ-odd series".into()));
        }
        if self.coeffs.is_empty() {
            return Err(Error::NotInvertible("zero series".into()));
        }
        let m = self.min_exp;
        let a0i = self.coeffs[0].invert()?;
        let trunc = if self.is_exact() { upto } else { upto.min(self.trunc - 2 * m) };
        let len = trunc + m + 1;
        if len <= 0 {
            return Ok(FormalSeries::zero(trunc, -self.dz, false));
        }
        let len = len as usize;
        let mut b: Vec<Scalar> = Vec::with_capacity(len);
        b.push(a0i.clone());
        for k in 1..len {
            let mut acc = Scalar::zero();
            for j in 1..=k.min(self.coeffs.len() - 1) {
                let aj = &self.coeffs[j];
                if !aj.is_zero() && !b[k - j].is_zero() {
                    acc += &(aj * &b[k - j]);
                }
            }
            b.push(-(&a0i * &acc));
        }
        Ok(FormalSeries::new(-m, b, trunc, -self.dz, false))
    }

    /// The involution z ↦ −z (Θ invariant, each dz flips sign).
    pub fn sigma(&self) -> FormalSeries {
        let dzs = if self.dz.rem_euclid(2) == 1 { -1 } else { 1 };
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.min_exp + i as i64;
                let s = if k.rem_euclid(2) == 1 { -dzs } else { dzs };
                if s < 0 {
                    -c
                } else {
                    c.clone()
                }
            })
            .collect();
        FormalSeries { min_exp: self.min_exp, coeffs, trunc: self.trunc, dz: self.dz, theta: self.theta }
    }

    /// Term-by-term `d/dz` of the function part; adds one `dz`.
    pub fn derive(&self) -> FormalSeries {
        let coeffs: Vec<Scalar> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.scale_int(self.min_exp + i as i64))
            .collect();
        let trunc = if self.is_exact() { EXACT } else { self.trunc - 1 };
        FormalSeries::new(self.min_exp - 1, coeffs, trunc, self.dz + 1, self.theta)
    }

    /// Antiderivative of a one-form with vanishing residue (function part).
    pub fn antiderivative(&self) -> Result<FormalSeries> {
        if self.dz != 1 || self.theta {
            return Err(Error::Weight("antiderivative of a non one-form".into()));
        }
        if !self.coeff_or_zero(-1).is_zero() {
            return Err(Error::Weight("one-form has a residue".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.min_exp + i as i64;
                if k == -1 {
                    Scalar::zero()
                } else {
                    c.scale(&Rat::new(1, k + 1))
                }
            })
            .collect();
        let trunc = if self.is_exact() { EXACT } else { self.trunc + 1 };
        Ok(FormalSeries::new(self.min_exp + 1, coeffs, trunc, 0, false))
    }

    /// Exact equality of the known parts up to `min(trunc)`.
    pub fn agrees_with(&self, o: &FormalSeries) -> bool {
        if !self.same_tag(o) {
            return false;
        }
        let t = self.trunc.min(o.trunc);
        let lo = self.min_exp.min(o.min_exp);
        let hi = self.max_exp().unwrap_or(lo).max(o.max_exp().unwrap_or(lo)).min(t);
        (lo..=hi).all(|k| self.coeff_ref(k).cloned().unwrap_or_default() == o.coeff_ref(k).cloned().unwrap_or_default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BiKind {
    /// ω_{0,2|0}: singular part dz1 dz2/(z1−z2)²; regular part keyed by
    /// exponents (k−1, l−1) with coefficient φ_{kl}.
    Bosonic02,
    /// ω_{0,0|2}: singular part −½(z1+z2)/(z1−z2) · Θ1Θ2/(z1 z2); regular part
    /// keyed by exponents (a−1, b−1), a, b ≥ 0, coefficient r_{ab}.
    Fermionic002,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagMode {
    Plain,
    DerivedFirst,
    DerivedSecond,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiForm {
    pub kind: BiKind,
    pub regular: BTreeMap<(i64, i64), Scalar>,
    /// Largest basis index (k, l or a, b) for which the regular part is known.
    pub trunc: i64,
}

impl BiForm {
    pub fn coeff(&self, e1: i64, e2: i64) -> Scalar {
        self.regular.get(&(e1, e2)).cloned().unwrap_or_default()
    }

    /// Restriction to the anti-diagonal z2 = σ(z1) = −z, as a series in z.
    ///
    /// The singular parts are evaluated in closed form: expanding 1/(z1−z2)
    /// geometrically and then setting z2 = −z1 produces a divergent sum of
    /// equal terms, so the analytic values are used instead.
    ///
    /// * ω_{0,2|0}, plain: dz·d(−z)/(2z)² = −dz²/(4z²).
    /// * ω_{0,0|2}, derived in either slot: with h = −(z1+z2)/(2 z1 z2 (z1−z2)),
    ///   ∂_{z1}h at (z, −z) is 1/(4z³) and ∂_{z1}h at (−z, z) is −1/(4z³);
    ///   with Θ² = z dz and d(σz) = −dz both orderings give +dz²/(4z²).
    /// * ω_{0,0|2}, plain: h(z, −z) = 0.
    pub fn eval_diag(&self, mode: DiagMode) -> Result<FormalSeries> {
        match self.kind {
            BiKind::Bosonic02 => {
                if mode != DiagMode::Plain {
                    return Err(Error::Weight("derived diagonal of ω_{0,2|0} is not used".into()));
                }
                // Σ φ z^{k−1} (−z)^{l−1} · dz · (−dz)
                let trunc = lower(self.trunc, 1);
                let mut terms = vec![(-2, Scalar::frac(-1, 4))];
                for (&(a, b), c) in &self.regular {
                    let sign = if b % 2 == 0 { -1 } else { 1 };
                    terms.push((a + b, c.scale_int(sign)));
                }
                Ok(FormalSeries::from_terms(&terms, trunc, 2, false))
            }
            BiKind::Fermionic002 => {
                let trunc = lower(self.trunc, 2);
                let mut terms = Vec::new();
                if mode != DiagMode::Plain {
                    terms.push((-2, Scalar::frac(1, 4)));
                }
                for (&(e1, e2), c) in &self.regular {
                    // term c z1^{e1} z2^{e2} Θ1Θ2
                    let v = match mode {
                        // c z^{e1} (−z)^{e2} · z dz
                        DiagMode::Plain => c.scale_int(if e2.rem_euclid(2) == 1 { -1 } else { 1 }),
                        // e1 z^{e1−1} dz · (−z)^{e2} · z dz
                        DiagMode::DerivedFirst => c.scale_int(e1 * if e2.rem_euclid(2) == 1 { -1 } else { 1 }),
                        // e1 (−z)^{e1−1} d(−z) · z^{e2} · z dz
                        DiagMode::DerivedSecond => c.scale_int(e1 * if e1.rem_euclid(2) == 1 { -1 } else { 1 }),
                    };
                    let exp = match mode {
                        DiagMode::Plain => e1 + e2 + 1,
                        _ => e1 + e2,
                    };
                    terms.push((exp, v));
                }
                let (dz, t) = match mode {
                    DiagMode::Plain => (1, lower(self.trunc, 1)),
                    _ => (2, trunc),
                };
                Ok(FormalSeries::from_terms(&terms, t, dz, false))
            }
        }
    }
}

/// Bivariate power series in (z1, z2), truncated by total degree.
#[derive(Clone, Debug, PartialEq)]
pub struct BiSeries {
    /// `c[i][j]` is the coefficient of z1^i z2^j, for i + j <= deg.
    c: Vec<Vec<Scalar>>,
    deg: i64,
}

impl BiSeries {
    pub fn zero(deg: i64) -> BiSeries {
        let deg = deg.max(-1);
        let c = (0..=deg).map(|i| vec![Scalar::zero(); (deg - i + 1) as usize]).collect();
        BiSeries { c, deg }
    }

    pub fn deg(&self) -> i64 {
        self.deg
    }

    pub fn get(&self, i: i64, j: i64) -> Scalar {
        if i < 0 || j < 0 || i + j > self.deg {
            return Scalar::zero();
        }
        self.c[i as usize][j as usize].clone()
    }

    pub fn set(&mut self, i: i64, j: i64, v: Scalar) {
        if i >= 0 && j >= 0 && i + j <= self.deg {
            self.c[i as usize][j as usize] = v;
        }
    }

    pub fn constant(v: Scalar, deg: i64) -> BiSeries {
        let mut r = BiSeries::zero(deg);
        r.set(0, 0, v);
        r
    }

    /// Embed a power series f as f(z1) (`first`) or f(z2).
    pub fn embed(f: &FormalSeries, first: bool, deg: i64) -> Result<BiSeries> {
        if f.min_exp < 0 && !f.is_zero() {
            return Err(Error::Expansion("embedding a Laurent series with poles".into()));
        }
        let deg = deg.min(f.trunc);
        let mut r = BiSeries::zero(deg);
        for k in 0..=deg {
            let v = f.coeff(k)?;
            if first {
                r.set(k, 0, v);
            } else {
                r.set(0, k, v);
            }
        }
        Ok(r)
    }

    pub fn add(&self, o: &BiSeries) -> BiSeries {
        let d = self.deg.min(o.deg);
        let mut r = BiSeries::zero(d);
        for i in 0..=d {
            for j in 0..=(d - i) {
                r.c[i as usize][j as usize] = &self.get(i, j) + &o.get(i, j);
            }
        }
        r
    }

    pub fn sub(&self, o: &BiSeries) -> BiSeries {
        self.add(&o.scale(&Scalar::from_int(-1)))
    }

    pub fn scale(&self, s: &Scalar) -> BiSeries {
        let mut r = self.clone();
        for row in r.c.iter_mut() {
            for v in row.iter_mut() {
                *v = &*v * s;
            }
        }
        r
    }

    pub fn mul(&self, o: &BiSeries) -> BiSeries {
        let d = self.deg.min(o.deg);
        let mut r = BiSeries::zero(d);
        for i1 in 0..=d {
            for j1 in 0..=(d - i1) {
                let a = &self.c[i1 as usize][j1 as usize];
                if a.is_zero() {
                    continue;
                }
                for i2 in 0..=(d - i1 - j1) {
                    for j2 in 0..=(d - i1 - j1 - i2) {
                        let b = &o.c[i2 as usize][j2 as usize];
                        if !b.is_zero() {
                            r.c[(i1 + i2) as usize][(j1 + j2) as usize] += &(a * b);
                        }
                    }
                }
            }
        }
        r
    }

    /// Multiply by z1^a z2^b (degree grows accordingly).
    pub fn mul_mono(&self, a: i64, b: i64) -> BiSeries {
        let mut r = BiSeries::zero(self.deg + a + b);
        for i in 0..=self.deg {
            for j in 0..=(self.deg - i) {
                r.set(i + a, j + b, self.get(i, j));
            }
        }
        r
    }

    pub fn invert(&self) -> Result<BiSeries> {
        let d = self.deg;
        let a0 = self.get(0, 0).invert()?;
        let mut r = BiSeries::zero(d);
        // total-degree recursion
        for t in 0..=d {
            for i in 0..=t {
                let j = t - i;
                if t == 0 {
                    r.set(0, 0, a0.clone());
                    continue;
                }
                let mut acc = Scalar::zero();
                for i1 in 0..=i {
                    for j1 in 0..=j {
                        if i1 + j1 == 0 {
                            continue;
                        }
                        let a = &self.c[i1 as usize][j1 as usize];
                        if a.is_zero() {
                            continue;
                        }
                        let b = &r.c[(i - i1) as usize][(j - j1) as usize];
                        if !b.is_zero() {
                            acc += &(a * b);
                        }
                    }
                }
                r.set(i, j, -(&a0 * &acc));
            }
        }
        Ok(r)
    }

    /// Exact division by (z1 − z2); fails if not divisible.
    pub fn div_by_diff(&self) -> Result<BiSeries> {
        let d = self.deg;
        let mut q = BiSeries::zero(d - 1);
        if !self.get(0, 0).is_zero() {
            return Err(Error::Shape("not divisible by (z1 - z2): nonzero constant".into()));
        }
        for t in 1..=d {
            // q_{0,t-1} = −p_{0,t}; q_{i,t−1−i} = q_{i−1,t−i} − p_{i,t−i}
            let mut prev = -self.get(0, t);
            q.set(0, t - 1, prev.clone());
            for i in 1..t {
                let v = &prev - &self.get(i, t - i);
                q.set(i, t - 1 - i, v.clone());
                prev = v;
            }
            if prev != self.get(t, 0) {
                return Err(Error::Shape(format!("not divisible by (z1 - z2) at degree {}", t)));
            }
        }
        Ok(q)
    }

    /// Swap z1 and z2.
    pub fn swap(&self) -> BiSeries {
        let mut r = BiSeries::zero(self.deg);
        for i in 0..=self.deg {
            for j in 0..=(self.deg - i) {
                r.set(j, i, self.get(i, j));
            }
        }
        r
    }

    /// Substitute z1 ↦ −z1.
    pub fn sigma_first(&self) -> BiSeries {
        let mut r = self.clone();
        for i in (1..=self.deg).step_by(2) {
            for v in r.c[i as usize].iter_mut() {
                *v = -v.clone();
            }
        }
        r
    }

    pub fn truncate(&self, deg: i64) -> BiSeries {
        let mut r = BiSeries::zero(deg.min(self.deg));
        for i in 0..=r.deg {
            for j in 0..=(r.deg - i) {
                r.set(i, j, self.get(i, j));
            }
        }
        r
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|row| row.iter().all(|v| v.is_zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn poly(lo: i64, cs: &[i64], dz: i32, theta: bool) -> FormalSeries {
        FormalSeries::new(lo, cs.iter().map(|&c| s(c)).collect(), EXACT, dz, theta)
    }

    #[test]
    fn mul_examples() {
        let a = FormalSeries::monomial(s(1), -1, 1, false);
        let b = FormalSeries::monomial(s(1), 1, 1, false);
        assert_eq!(a.mul(&b), FormalSeries::monomial(s(1), 0, 2, false));
        let th = FormalSeries::monomial(s(1), 0, 0, true);
        assert_eq!(th.mul(&th), FormalSeries::monomial(s(1), 1, 1, false));
        let e = FormalSeries::monomial(s(1), -1, 0, true);
        assert_eq!(e.mul(&e), FormalSeries::monomial(s(1), -1, 1, false));
    }

    #[test]
    fn residue_examples() {
        assert_eq!(poly(-1, &[3, 2, 1], 1, false).residue().unwrap(), s(3));
        assert_eq!(poly(-2, &[1], 1, false).residue().unwrap(), s(0));
        assert!(matches!(poly(-2, &[1], 2, false).residue(), Err(Error::Weight(_))));
        let t = FormalSeries::new(-3, vec![s(1)], -2, 1, false);
        assert!(matches!(t.residue(), Err(Error::Truncation(_))));
        // η0 η0 = 1 for any zero-mode parameters
        let eta0 = FormalSeries::new(-1, vec![s(1), s(5), s(-2), s(7)], EXACT, 0, true);
        assert_eq!(eta0.mul(&eta0).residue().unwrap(), s(1));
    }

    #[test]
    fn invert_examples() {
        let a = FormalSeries::monomial(s(2), 2, 1, false);
        assert_eq!(a.invert(10).unwrap(), FormalSeries::new(-2, vec![Scalar::frac(1, 2)], 10, -1, false));
        let g = poly(0, &[1, 1], 0, false).invert(5).unwrap();
        let expect = FormalSeries::new(0, [1, -1, 1, -1, 1, -1].iter().map(|&c| s(c)).collect(), 5, 0, false);
        assert_eq!(g, expect);
        let d = FormalSeries::monomial(s(2), 2, 1, false);
        assert_eq!(d.invert(4).unwrap().coeff(-2).unwrap(), Scalar::frac(1, 2));
        assert!(FormalSeries::zero(EXACT, 0, false).invert(3).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(poly(2, &[1], 1, false).sigma(), poly(2, &[-1], 1, false));
        assert_eq!(poly(-1, &[1], 0, true).sigma(), poly(-1, &[-1], 0, true));
        // dz/z² ↦ d(−z)/(−z)² = −dz/z²
        assert_eq!(poly(-2, &[1], 1, false).sigma(), poly(-2, &[-1], 1, false));
    }

    #[test]
    fn derive_examples() {
        assert_eq!(poly(2, &[1], 0, true).derive(), poly(1, &[2], 1, true));
        assert_eq!(poly(-1, &[1], 0, true).derive(), poly(-2, &[-1], 1, true));
        // η_{-2} with ψ_{2k} = (1, 2, 3) for k = 0, 1, 2
        let e = poly(-3, &[1, 0, 1, 2, 3], 0, true);
        assert_eq!(e.derive(), poly(-4, &[-3, 0, -1, 0, 3], 1, true));
    }

    #[test]
    fn diag_examples() {
        let b = BiForm { kind: BiKind::Bosonic02, regular: BTreeMap::new(), trunc: 10 };
        let d = b.eval_diag(DiagMode::Plain).unwrap();
        assert!(d.agrees_with(&FormalSeries::monomial(Scalar::frac(-1, 4), -2, 2, false)));
        let f = BiForm { kind: BiKind::Fermionic002, regular: BTreeMap::new(), trunc: 10 };
        let d = f.eval_diag(DiagMode::DerivedFirst).unwrap();
        assert!(d.agrees_with(&FormalSeries::monomial(Scalar::frac(1, 4), -2, 2, false)));
        let d2 = f.eval_diag(DiagMode::DerivedSecond).unwrap();
        assert!(d2.agrees_with(&d));
        let mut reg = BTreeMap::new();
        reg.insert((0, 0), s(7));
        let b = BiForm { kind: BiKind::Bosonic02, regular: reg, trunc: 10 };
        let d = b.eval_diag(DiagMode::Plain).unwrap();
        let expect = FormalSeries::new(-2, vec![Scalar::frac(-1, 4), s(0), s(-7)], 9, 2, false);
        assert!(d.agrees_with(&expect));
    }

    /// Floating-point oracle for the closed-form diagonal constants: difference
    /// quotients of the singular parts at a sample point.
    #[test]
    fn fermionic_diag_closed_form() {
        let h = |z1: f64, z2: f64| -(z1 + z2) / (2.0 * z1 * z2 * (z1 - z2));
        let z = 0.37f64;
        let eps = 1e-6;
        let d1 = (h(z + eps, -z) - h(z - eps, -z)) / (2.0 * eps);
        // times Θ² = z dz: coefficient of dz² is d1·z, expected 1/(4z²)
        assert!((d1 * z - 1.0 / (4.0 * z * z)).abs() < 1e-4);
        // D_u at u = −z of h(u, z): derivative in first slot, dz(−1)
        let d2 = -(h(-z + eps, z) - h(-z - eps, z)) / (2.0 * eps);
        assert!((d2 * z - 1.0 / (4.0 * z * z)).abs() < 1e-4);
        let b1 = -(1.0 / ((z - (-z)) * (z - (-z))));
        assert!((b1 + 1.0 / (4.0 * z * z)).abs() < 1e-12);
    }

    #[test]
    fn truncation_tracking() {
        let a = FormalSeries::new(-2, vec![s(1), s(1), s(1)], 3, 1, false);
        let b = FormalSeries::new(0, vec![s(1), s(2)], 4, 1, false);
        let p = a.mul(&b);
        assert_eq!(p.trunc(), 2);
        assert!(p.coeff(3).is_err());
        let d = a.derive();
        assert_eq!(d.trunc(), 2);
    }

    #[test]
    fn bivariate_division() {
        // (z1^3 − z2^3)/(z1 − z2) = z1² + z1 z2 + z2²
        let mut p = BiSeries::zero(6);
        p.set(3, 0, s(1));
        p.set(0, 3, s(-1));
        let q = p.div_by_diff().unwrap();
        assert_eq!(q.get(2, 0), s(1));
        assert_eq!(q.get(1, 1), s(1));
        assert_eq!(q.get(0, 2), s(1));
        let mut bad = BiSeries::zero(4);
        bad.set(1, 0, s(1));
        assert!(bad.div_by_diff().is_err());
        let mut u = BiSeries::zero(5);
        u.set(0, 0, s(1));
        u.set(1, 0, s(1));
        u.set(0, 1, s(2));
        let ui = u.invert().unwrap();
        assert_eq!(u.mul(&ui), BiSeries::constant(s(1), 5));
    }

    fn arb_series(theta: bool) -> impl Strategy<Value = FormalSeries> {
        (-4i64..3, prop::collection::vec(-5i64..6, 0..7), 0i32..2).prop_map(move |(lo, cs, dz)| {
            FormalSeries::new(lo, cs.into_iter().map(s).collect(), EXACT, dz, theta)
        })
    }

    fn brute_sigma(a: &FormalSeries) -> FormalSeries {
        // substitute z → −z term by term and multiply by (−1)^{dz}
        let terms: Vec<(i64, Scalar)> = a
            .iter()
            .map(|(k, c)| {
                let mut v = c.clone();
                for _ in 0..k.rem_euclid(2) {
                    v = -v;
                }
                for _ in 0..a.dz_weight().rem_euclid(2) {
                    v = -v;
                }
                (k, v)
            })
            .collect();
        FormalSeries::from_terms(&terms, a.trunc(), a.dz_weight(), a.theta())
    }

    proptest! {
        #[test]
        fn sigma_involution(a in arb_series(false), t in any::<bool>()) {
            let a = if t { FormalSeries::new(a.min_exp(), a.coeffs.clone(), EXACT, a.dz, true) } else { a };
            prop_assert_eq!(a.sigma().sigma(), a.clone());
            prop_assert_eq!(a.sigma(), brute_sigma(&a));
        }

        #[test]
        fn residue_sigma_sign(lo in -4i64..3, cs in prop::collection::vec(-5i64..6, 0..7)) {
            let a = FormalSeries::new(lo, cs.into_iter().map(s).collect(), EXACT, 1, false);
            // per-term sign (−1)^{k+1} at k = −1 is +1, so residues agree
            prop_assert_eq!(a.sigma().residue().unwrap(), a.residue().unwrap());
        }

        #[test]
        fn mul_assoc_distrib(a in arb_series(false), b in arb_series(true), c in arb_series(false), d in arb_series(true)) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b).mul(&d), a.mul(&b.mul(&d)));
            let c2 = FormalSeries::new(c.min_exp(), c.coeffs.clone(), EXACT, a.dz, false);
            let lhs = a.try_add(&c2).unwrap().mul(&b);
            let rhs = a.mul(&b).try_add(&c2.mul(&b)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn invert_roundtrip(lo in -3i64..3, c0 in 1i64..5, cs in prop::collection::vec(-5i64..6, 0..6)) {
            let mut v = vec![s(c0)];
            v.extend(cs.into_iter().map(s));
            let a = FormalSeries::new(lo, v, EXACT, 1, false);
            let b = a.invert(8).unwrap();
            let p = a.mul(&b);
            prop_assert_eq!(p.coeff(0).unwrap(), s(1));
            for k in 1..=p.trunc() {
                prop_assert_eq!(p.coeff(k).unwrap(), s(0));
            }
            prop_assert!(p.trunc() >= 8 + lo);
        }
    }
}
