//! Exact coefficient ring: rationals extended by finitely many named symbols,
//! each either free or subject to a relation `s^2 = q` with `q` rational.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A rational number with an inline fast path for values fitting in `i64`.
#[derive(Clone, Debug)]
pub enum Rat {
    /// Reduced `num/den` with `den > 0`.
    Small(i64, i64),
    Big(BigRational),
}

fn reduce_i128(n: i128, d: i128) -> Rat {
    debug_assert!(d != 0);
    let g = n.gcd(&d);
    let (mut n, mut d) = if g > 1 { (n / g, d / g) } else { (n, d) };
    if d < 0 {
        n = -n;
        d = -d;
    }
    match (i64::try_from(n), i64::try_from(d)) {
        (Ok(n), Ok(d)) => Rat::Small(n, d),
        _ => Rat::Big(BigRational::new_raw(BigInt::from(n), BigInt::from(d))),
    }
}

impl Rat {
    pub fn zero() -> Rat {
        Rat::Small(0, 1)
    }

    pub fn one() -> Rat {
        Rat::Small(1, 1)
    }

    pub fn new(n: i64, d: i64) -> Rat {
        assert!(d != 0, "zero denominator");
        reduce_i128(n as i128, d as i128)
    }

    pub fn from_big(q: BigRational) -> Rat {
        match (q.numer().to_i64(), q.denom().to_i64()) {
            (Some(n), Some(d)) => Rat::Small(n, d),
            _ => Rat::Big(q),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rat::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Rat::Big(q) => q.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Rat::Small(n, _) => *n == 0,
            Rat::Big(q) => q.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Rat::Small(1, 1))
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Rat::Small(n, _) => *n < 0,
            Rat::Big(q) => q.is_negative(),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn add(&self, o: &Rat) -> Rat {
        match (self, o) {
            (Rat::Small(a, b), Rat::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    if let Some(s) = a.checked_add(*c) {
                        return Rat::Small(s, 1);
                    }
                }
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                reduce_i128(a * d + c * b, b * d)
            }
            _ => Rat::from_big(self.to_big() + o.to_big()),
        }
    }

    pub fn mul(&self, o: &Rat) -> Rat {
        match (self, o) {
            (Rat::Small(a, b), Rat::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    if let Some(p) = a.checked_mul(*c) {
                        return Rat::Small(p, 1);
                    }
                }
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                match (a.checked_mul(c), b.checked_mul(d)) {
                    (Some(n), Some(m)) => reduce_i128(n, m),
                    _ => Rat::from_big(self.to_big() * o.to_big()),
                }
            }
            _ => Rat::from_big(self.to_big() * o.to_big()),
        }
    }

    pub fn inv(&self) -> Option<Rat> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Rat::Small(n, d) => reduce_i128(*d as i128, *n as i128),
            Rat::Big(q) => Rat::from_big(q.recip()),
        })
    }

    pub fn pow(&self, e: u32) -> Rat {
        let mut r = Rat::one();
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }
}

impl PartialEq for Rat {
    fn eq(&self, o: &Rat) -> bool {
        match (self, o) {
            (Rat::Small(a, b), Rat::Small(c, d)) => a == c && b == d,
            (Rat::Big(p), Rat::Big(q)) => p == q,
            // canonical form never stores a representable value as Big
            _ => false,
        }
    }
}
impl Eq for Rat {}

impl Hash for Rat {
    fn hash<H: Hasher>(&self, h: &mut H) {
        match self {
            Rat::Small(n, d) => {
                0u8.hash(h);
                n.hash(h);
                d.hash(h);
            }
            Rat::Big(q) => {
                1u8.hash(h);
                q.hash(h);
            }
        }
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self {
            Rat::Small(n, d) => match n.checked_neg() {
                Some(m) => Rat::Small(m, d),
                None => Rat::from_big(-BigRational::new_raw(BigInt::from(n), BigInt::from(d))),
            },
            Rat::Big(q) => Rat::from_big(-q),
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Small(n, 1) => write!(f, "{}", n),
            Rat::Small(n, d) => write!(f, "{}/{}", n, d),
            Rat::Big(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Rat::Big(q) => write!(f, "{}/{}", q.numer(), q.denom()),
        }
    }
}

impl FromStr for Rat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Rat> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid rational `{}`", s));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let ok = |t: &str| {
            let t = t.strip_prefix(['-', '+']).unwrap_or(t);
            !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
        };
        if !ok(n) || !ok(d) {
            return Err(bad());
        }
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{}`", s)));
        }
        Ok(Rat::from_big(BigRational::new(n, d)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolDef {
    pub name: String,
    /// Value of `symbol^2`; `None` for a free symbol.
    pub square: Option<BigRational>,
}

impl SymbolDef {
    pub fn free(name: &str) -> SymbolDef {
        SymbolDef { name: name.to_string(), square: None }
    }

    pub fn quadratic(name: &str, square: i64) -> SymbolDef {
        SymbolDef { name: name.to_string(), square: Some(BigRational::from_integer(square.into())) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SymbolRing {
    symbols: Vec<SymbolDef>,
    squares: Vec<Option<Rat>>,
}

impl SymbolRing {
    pub fn new(symbols: Vec<SymbolDef>) -> Result<Arc<SymbolRing>> {
        for (i, s) in symbols.iter().enumerate() {
            let valid = !s.name.is_empty()
                && s.name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::Parse(format!("invalid symbol name `{}`", s.name)));
            }
            if symbols[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::Parse(format!("duplicate symbol `{}`", s.name)));
            }
            if let Some(q) = &s.square {
                if q.is_zero() {
                    return Err(Error::Parse(format!("symbol `{}` squares to zero", s.name)));
                }
            }
        }
        let squares = symbols.iter().map(|s| s.square.clone().map(Rat::from_big)).collect();
        Ok(Arc::new(SymbolRing { symbols, squares }))
    }

    pub fn symbols(&self) -> &[SymbolDef] {
        &self.symbols
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }
}

/// Sparse exponent vector `(symbol index, exponent)`, strictly increasing in index.
pub type Mono = Vec<(u32, u32)>;

type Terms = SmallVec<[(Mono, Rat); 1]>;

/// An element of `Q[s_1, .., s_k] / (s_i^2 - q_i)`.
#[derive(Clone)]
pub struct Scalar {
    terms: Terms,
    ring: Option<Arc<SymbolRing>>,
}

impl PartialEq for Scalar {
    fn eq(&self, o: &Scalar) -> bool {
        self.terms == o.terms
    }
}
impl Eq for Scalar {}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.terms.len().hash(h);
        for (m, c) in &self.terms {
            m.hash(h);
            c.hash(h);
        }
    }
}

impl Default for Scalar {
    fn default() -> Scalar {
        Scalar::zero()
    }
}

fn merge_rings(a: &Option<Arc<SymbolRing>>, b: &Option<Arc<SymbolRing>>) -> Result<Option<Arc<SymbolRing>>> {
    match (a, b) {
        (None, r) | (r, None) => Ok(r.clone()),
        (Some(x), Some(y)) => {
            if Arc::ptr_eq(x, y) || x == y {
                Ok(Some(x.clone()))
            } else {
                Err(Error::RingMismatch)
            }
        }
    }
}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar { terms: SmallVec::new(), ring: None }
    }

    pub fn one() -> Scalar {
        Scalar::from_rat(Rat::one())
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::from_rat(Rat::Small(n, 1))
    }

    pub fn frac(n: i64, d: i64) -> Scalar {
        Scalar::from_rat(Rat::new(n, d))
    }

    pub fn from_rat(q: Rat) -> Scalar {
        let mut terms = SmallVec::new();
        if !q.is_zero() {
            terms.push((Vec::new(), q));
        }
        Scalar { terms, ring: None }
    }

    pub fn from_big(q: BigRational) -> Scalar {
        Scalar::from_rat(Rat::from_big(q))
    }

    /// The symbol `name` of `ring` as a scalar.
    pub fn symbol(ring: &Arc<SymbolRing>, name: &str) -> Result<Scalar> {
        let i = ring.index_of(name).ok_or_else(|| Error::Parse(format!("unknown symbol `{}`", name)))?;
        let mut terms = SmallVec::new();
        terms.push((vec![(i as u32, 1)], Rat::one()));
        Ok(Scalar { terms, ring: Some(ring.clone()) })
    }

    pub fn ring(&self) -> Option<&Arc<SymbolRing>> {
        self.ring.as_ref()
    }

    /// Attach a ring to a scalar (only valid when it is pure rational or already in that ring).
    pub fn with_ring(mut self, ring: &Arc<SymbolRing>) -> Result<Scalar> {
        self.ring = merge_rings(&self.ring, &Some(ring.clone()))?;
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_empty() && self.terms[0].1.is_one()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rat)> {
        self.terms.iter().map(|(m, c)| (m, c))
    }

    /// The value as a rational, if no symbol occurs.
    pub fn as_rat(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 if self.terms[0].0.is_empty() => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }

    fn from_terms(mut raw: Vec<(Mono, Rat)>, ring: Option<Arc<SymbolRing>>) -> Scalar {
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut terms: Terms = SmallVec::new();
        for (m, c) in raw {
            match terms.last_mut() {
                Some((lm, lc)) if *lm == m => *lc = lc.add(&c),
                _ => terms.push((m, c)),
            }
        }
        terms.retain(|(_, c)| !c.is_zero());
        let ring = if terms.iter().all(|(m, _)| m.is_empty()) { None } else { ring };
        Scalar { terms, ring }
    }

    /// Rebuild the canonical form (idempotent; values are always kept canonical).
    pub fn normalize(&self) -> Scalar {
        Scalar::from_terms(self.terms.iter().cloned().collect(), self.ring.clone())
    }

    pub fn try_add(&self, o: &Scalar) -> Result<Scalar> {
        let ring = merge_rings(&self.ring, &o.ring)?;
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(o.clone());
        }
        if self.terms.len() == 1 && o.terms.len() == 1 && self.terms[0].0 == o.terms[0].0 {
            let c = self.terms[0].1.add(&o.terms[0].1);
            let mut terms = SmallVec::new();
            if !c.is_zero() {
                terms.push((self.terms[0].0.clone(), c));
            }
            let ring = if terms.iter().all(|(m, _): &(Mono, Rat)| m.is_empty()) { None } else { ring };
            return Ok(Scalar { terms, ring });
        }
        let mut out: Terms = SmallVec::new();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &o.terms);
        while i < a.len() || j < b.len() {
            let ord = if i == a.len() {
                Ordering::Greater
            } else if j == b.len() {
                Ordering::Less
            } else {
                a[i].0.cmp(&b[j].0)
            };
            match ord {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = a[i].1.add(&b[j].1);
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        let ring = if out.iter().all(|(m, _)| m.is_empty()) { None } else { ring };
        Ok(Scalar { terms: out, ring })
    }

    pub fn try_mul(&self, o: &Scalar) -> Result<Scalar> {
        let ring = merge_rings(&self.ring, &o.ring)?;
        if self.is_zero() || o.is_zero() {
            return Ok(Scalar::zero());
        }
        if self.terms.len() == 1 && self.terms[0].0.is_empty() {
            return Ok(o.scale(&self.terms[0].1));
        }
        if o.terms.len() == 1 && o.terms[0].0.is_empty() {
            return Ok(self.scale(&o.terms[0].1));
        }
        let r = ring.as_ref().expect("symbolic scalar without ring");
        let mut raw = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let (m, f) = mono_mul(ma, mb, r);
                raw.push((m, ca.mul(cb).mul(&f)));
            }
        }
        Ok(Scalar::from_terms(raw, ring))
    }

    pub fn scale(&self, q: &Rat) -> Scalar {
        if q.is_zero() {
            return Scalar::zero();
        }
        if q.is_one() {
            return self.clone();
        }
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), c.mul(q))).collect();
        Scalar { terms, ring: self.ring.clone() }
    }

    pub fn scale_int(&self, n: i64) -> Scalar {
        self.scale(&Rat::Small(n, 1))
    }

    pub fn pow(&self, e: u32) -> Scalar {
        let mut r = Scalar::one();
        for _ in 0..e {
            r = &r * self;
        }
        r
    }

    /// Multiplicative inverse for the supported shapes: a rational, a rational
    /// multiple of a monomial in relation-bearing symbols, or `u + v*m` with
    /// `u`, `v` rational and `m` such a monomial (inverted by conjugation).
    pub fn invert(&self) -> Result<Scalar> {
        let fail = || Error::NotInvertible(self.to_string());
        let ring = self.ring.clone();
        let is_rel_mono = |m: &Mono| -> Option<Rat> {
            let r = ring.as_ref()?;
            let mut sq = Rat::one();
            for &(s, e) in m {
                let q = r.squares[s as usize].as_ref()?;
                debug_assert_eq!(e, 1);
                sq = sq.mul(q);
            }
            Some(sq)
        };
        match self.terms.len() {
            0 => Err(fail()),
            1 => {
                let (m, c) = &self.terms[0];
                let ci = c.inv().ok_or_else(fail)?;
                if m.is_empty() {
                    return Ok(Scalar::from_rat(ci));
                }
                // (c m)^{-1} = m / (c m^2)
                let sq = is_rel_mono(m).ok_or_else(fail)?;
                let f = ci.mul(&sq.inv().ok_or_else(fail)?);
                let mut terms = SmallVec::new();
                terms.push((m.clone(), f));
                Ok(Scalar { terms, ring })
            }
            2 if self.terms[0].0.is_empty() => {
                let u = &self.terms[0].1;
                let (m, v) = &self.terms[1];
                let sq = is_rel_mono(m).ok_or_else(fail)?;
                let norm = u.mul(u).add(&-(v.mul(v).mul(&sq)));
                let ni = norm.inv().ok_or_else(fail)?;
                let mut terms = SmallVec::new();
                terms.push((Vec::new(), u.mul(&ni)));
                terms.push((m.clone(), -(v.mul(&ni))));
                Ok(Scalar { terms, ring })
            }
            _ => Err(fail()),
        }
    }

    /// Parse a literal `rational ('*' symbol ('^' uint)?)*` joined by `+`/`-`.
    pub fn parse(s: &str, ring: Option<&Arc<SymbolRing>>) -> Result<Scalar> {
        let s = s.replace('\u{2212}', "-");
        let src = s.trim();
        if src.is_empty() {
            return Err(Error::Parse("empty scalar literal".into()));
        }
        if src.contains('.') {
            return Err(Error::Parse(format!("decimals are not accepted: `{}`", src)));
        }
        let mut pieces: Vec<(bool, String)> = Vec::new();
        let mut neg = false;
        let mut cur = String::new();
        let mut expect_term = true;
        for ch in src.chars() {
            match ch {
                '+' | '-' if !cur.trim().is_empty() && !cur.trim_end().ends_with(['^', '/', '*']) => {
                    pieces.push((neg, std::mem::take(&mut cur)));
                    neg = ch == '-';
                    expect_term = true;
                }
                '+' | '-' if expect_term && cur.trim().is_empty() => {
                    if ch == '-' {
                        neg = !neg;
                    }
                }
                _ => {
                    cur.push(ch);
                    expect_term = false;
                }
            }
        }
        if cur.trim().is_empty() {
            return Err(Error::Parse(format!("dangling sign in `{}`", src)));
        }
        pieces.push((neg, cur));
        let mut acc = Scalar::zero();
        for (neg, body) in pieces {
            let mut term = Scalar::one();
            for factor in body.split('*') {
                let f = factor.trim();
                if f.is_empty() {
                    return Err(Error::Parse(format!("empty factor in `{}`", src)));
                }
                if f.starts_with(|c: char| c.is_ascii_digit()) {
                    term = term.try_mul(&Scalar::from_rat(f.parse::<Rat>()?))?;
                } else {
                    let (name, e) = match f.split_once('^') {
                        Some((n, e)) => {
                            let e: u32 = e
                                .trim()
                                .parse()
                                .map_err(|_| Error::Parse(format!("bad exponent in `{}`", f)))?;
                            (n.trim(), e)
                        }
                        None => (f, 1),
                    };
                    let r = ring.ok_or_else(|| Error::Parse(format!("unknown symbol `{}`", name)))?;
                    term = term.try_mul(&Scalar::symbol(r, name)?.pow(e))?;
                }
            }
            if neg {
                term = -term;
            }
            acc = acc.try_add(&term)?;
        }
        Ok(acc)
    }
}

fn mono_mul(a: &Mono, b: &Mono, ring: &SymbolRing) -> (Mono, Rat) {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut f = Rat::one();
    let (mut i, mut j) = (0, 0);
    let mut push = |s: u32, e: u32, out: &mut Mono| match &ring.squares[s as usize] {
        Some(q) => {
            f = f.mul(&q.pow(e / 2));
            if e % 2 == 1 {
                out.push((s, 1));
            }
        }
        None => out.push((s, e)),
    };
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            push(a[i].0, a[i].1, &mut out);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            push(b[j].0, b[j].1, &mut out);
            j += 1;
        } else {
            push(a[i].0, a[i].1 + b[j].1, &mut out);
            i += 1;
            j += 1;
        }
    }
    (out, f)
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let c = if k == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                c.abs()
            } else {
                write!(f, "{}", if c.is_negative() { " - " } else { " + " })?;
                c.abs()
            };
            write!(f, "{}", c)?;
            for &(s, e) in m {
                let name = self
                    .ring
                    .as_ref()
                    .map(|r| r.symbols[s as usize].name.clone())
                    .unwrap_or_else(|| format!("s{}", s));
                if e == 1 {
                    write!(f, "*{}", name)?;
                } else {
                    write!(f, "*{}^{}", name, e)?;
                }
            }
        }
        Ok(())
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::from_int(n)
    }
}

impl From<Rat> for Scalar {
    fn from(q: Rat) -> Scalar {
        Scalar::from_rat(q)
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        self.try_add(o).expect("ring mismatch in scalar addition")
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        self.try_add(&-o.clone()).expect("ring mismatch in scalar subtraction")
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        self.try_mul(o).expect("ring mismatch in scalar multiplication")
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, o: Scalar) -> Scalar {
        &self + &o
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, o: Scalar) -> Scalar {
        &self - &o
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, o: Scalar) -> Scalar {
        &self * &o
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(mut self) -> Scalar {
        for t in self.terms.iter_mut() {
            t.1 = -t.1.clone();
        }
        self
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -self.clone()
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        if o.is_zero() {
            return;
        }
        *self = &*self + o;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        if o.is_zero() {
            return;
        }
        *self = &*self - o;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, o: &Scalar) {
        *self = &*self * o;
    }
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn f<T: Send + Sync>() {}
    f::<Scalar>();
}

impl Zero for Scalar {
    fn zero() -> Scalar {
        Scalar::zero()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for Scalar {
    fn one() -> Scalar {
        Scalar::one()
    }
}
