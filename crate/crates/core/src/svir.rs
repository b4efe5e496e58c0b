//! Free-field modes on the polynomial super-Fock space and the super-Virasoro
//! operators built from them.
//!
//! Bosonic modes J_a (Heisenberg, [J_a, J_b] = aℏδ_{a+b,0}) and fermionic
//! modes Γ_a (Clifford, {Γ_a, Γ_b} = ℏδ_{a+b,0}) act on polynomials in
//! x^1, x^2, .., θ^0, θ^1, .. and ℏ. Operators at most quadratic in modes are
//! kept as `QuadOp`: a sum of ordered mode products, which is exactly what
//! Φ-conjugation produces (it is an algebra automorphism acting mode by mode).

use std::collections::BTreeMap;

use crate::curve::CurveData;
use crate::error::{Error, Result};
use crate::scalar::{Rat, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    J(i64),
    /// Γ_a.
    G(i64),
}

impl Mode {
    pub fn index(self) -> i64 {
        match self {
            Mode::J(a) | Mode::G(a) => a,
        }
    }

    pub fn is_odd(self) -> bool {
        matches!(self, Mode::G(_))
    }

    /// Normal-ordering position: creators left, then the fermionic zero mode,
    /// annihilators right.
    fn order_key(self) -> (u8, u8, i64) {
        let a = self.index();
        let rank = if a < 0 {
            0
        } else if a == 0 {
            1
        } else {
            2
        };
        (rank, self.is_odd() as u8, a)
    }
}

/// (Anti)commutator of two modes, as a multiple of ℏ.
fn bracket(a: Mode, b: Mode) -> Rat {
    match (a, b) {
        (Mode::J(i), Mode::J(j)) if i + j == 0 => Rat::Small(i, 1),
        (Mode::G(i), Mode::G(j)) if i + j == 0 => Rat::one(),
        _ => Rat::zero(),
    }
}

fn sign(odd: bool) -> i64 {
    if odd {
        -1
    } else {
        1
    }
}

/// c0 + ℏ·c1 + Σ lin·M + Σ quad·M1 M2 (products in the stored order).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadOp {
    pub constant: Scalar,
    pub hbar: Scalar,
    pub lin: BTreeMap<Mode, Scalar>,
    pub quad: BTreeMap<(Mode, Mode), Scalar>,
}

fn acc<K: Ord>(m: &mut BTreeMap<K, Scalar>, k: K, c: &Scalar) {
    if c.is_zero() {
        return;
    }
    *m.entry(k).or_default() += c;
}

fn prune<K: Ord + Clone>(m: &mut BTreeMap<K, Scalar>) {
    m.retain(|_, v| !v.is_zero());
}

impl QuadOp {
    pub fn zero() -> QuadOp {
        QuadOp::default()
    }

    pub fn mode(m: Mode) -> QuadOp {
        let mut o = QuadOp::zero();
        o.add_lin(m, &Scalar::one());
        o
    }

    pub fn add_lin(&mut self, m: Mode, c: &Scalar) {
        if m == Mode::J(0) {
            return;
        }
        acc(&mut self.lin, m, c);
    }

    pub fn add_quad(&mut self, a: Mode, b: Mode, c: &Scalar) {
        if a == Mode::J(0) || b == Mode::J(0) {
            return;
        }
        acc(&mut self.quad, (a, b), c);
    }

    /// Adds c·:ab: (reordered without ℏ corrections; :Γ_aΓ_a: = 0).
    pub fn add_normal(&mut self, a: Mode, b: Mode, c: &Scalar) {
        if a.is_odd() && a == b {
            return;
        }
        if a.order_key() > b.order_key() {
            let s = if a.is_odd() && b.is_odd() { -c } else { c.clone() };
            self.add_quad(b, a, &s);
        } else {
            self.add_quad(a, b, c);
        }
    }

    pub fn add_scaled(&mut self, o: &QuadOp, c: &Scalar) {
        self.constant += &(&o.constant * c);
        self.hbar += &(&o.hbar * c);
        for (m, v) in &o.lin {
            self.add_lin(*m, &(v * c));
        }
        for ((a, b), v) in &o.quad {
            self.add_quad(*a, *b, &(v * c));
        }
        self.clean();
    }

    fn clean(&mut self) {
        prune(&mut self.lin);
        prune(&mut self.quad);
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.hbar.is_zero() && self.lin.values().all(|v| v.is_zero()) && self.quad.values().all(|v| v.is_zero())
    }

    /// The same operator with every product brought to normal order, the
    /// (anti)commutators collected into the ℏ term.
    pub fn canonical(&self) -> QuadOp {
        let mut o = QuadOp { constant: self.constant.clone(), hbar: self.hbar.clone(), lin: self.lin.clone(), quad: BTreeMap::new() };
        for ((a, b), c) in &self.quad {
            let (a, b) = (*a, *b);
            if a.is_odd() && a == b {
                // Γ_aΓ_a = ½{Γ_a, Γ_a}
                o.hbar += &c.scale(&bracket(a, a)).scale(&Rat::new(1, 2));
            } else if a.order_key() > b.order_key() {
                let odd = a.is_odd() && b.is_odd();
                o.add_quad(b, a, &c.scale_int(sign(odd)));
                o.hbar += &c.scale(&bracket(a, b));
            } else {
                o.add_quad(a, b, c);
            }
        }
        o.clean();
        o
    }

    /// Φ-conjugation: substitute the shifted modes into every product,
    /// keeping the order.
    pub fn shifted(&self, s: &Shift) -> QuadOp {
        let mut o = QuadOp { constant: self.constant.clone(), hbar: self.hbar.clone(), ..QuadOp::zero() };
        for (m, c) in &self.lin {
            let (k, terms) = s.mode(*m);
            o.constant += &(&k * c);
            for (t, v) in &terms {
                o.add_lin(*t, &(v * c));
            }
        }
        for ((a, b), c) in &self.quad {
            let (ka, ta) = s.mode(*a);
            let (kb, tb) = s.mode(*b);
            o.constant += &(&(&ka * &kb) * c);
            if !ka.is_zero() {
                for (t, v) in &tb {
                    o.add_lin(*t, &(&(v * &ka) * c));
                }
            }
            if !kb.is_zero() {
                for (t, v) in &ta {
                    o.add_lin(*t, &(&(v * &kb) * c));
                }
            }
            for (x, u) in &ta {
                let uc = u * c;
                for (y, v) in &tb {
                    o.add_quad(*x, *y, &(&uc * v));
                }
            }
        }
        o.clean();
        o
    }

    pub fn apply(&self, p: &FockPoly) -> Result<FockPoly> {
        let mut out = p.scaled(&self.constant);
        out.add_assign(&p.times_hbar()?.scaled(&self.hbar));
        for (m, c) in &self.lin {
            out.add_assign(&p.apply_mode(*m)?.scaled(c));
        }
        let mut cache: BTreeMap<Mode, FockPoly> = BTreeMap::new();
        for ((a, b), c) in &self.quad {
            if !cache.contains_key(b) {
                cache.insert(*b, p.apply_mode(*b)?);
            }
            let q = &cache[b];
            if q.is_zero() {
                continue;
            }
            out.add_assign(&q.apply_mode(*a)?.scaled(c));
        }
        out.prune();
        Ok(out)
    }
}

/// The mode shifts of Φ-conjugation:
/// J_{−i} ↦ J_{−i} + τ_i + Σ_k φ_{ik}/k J_k and Γ_{−i} ↦ Γ_{−i} + Σ_{k≥0} ψ_{ki} Γ_k
/// (i ≥ 0 for Γ; positive modes are unchanged). The maps are stored in full so
/// that deliberately inconsistent data can be fed in as a negative control.
#[derive(Clone, Debug, Default)]
pub struct Shift {
    pub tau: BTreeMap<u32, Scalar>,
    pub phi: BTreeMap<(u32, u32), Scalar>,
    pub psi: BTreeMap<(u32, u32), Scalar>,
}

impl Shift {
    pub fn from_curve(c: &CurveData, kmax: u32) -> Shift {
        let mut s = Shift { tau: c.tau.clone(), ..Shift::default() };
        for k in 0..=kmax {
            for l in 0..=kmax {
                if k > 0 && l > 0 {
                    let v = c.phi(k, l);
                    if !v.is_zero() {
                        s.phi.insert((k, l), v);
                    }
                }
                let v = c.psi(k, l);
                if !v.is_zero() {
                    s.psi.insert((k, l), v);
                }
            }
        }
        s
    }

    /// (constant, linear terms) of the shifted mode.
    pub fn mode(&self, m: Mode) -> (Scalar, Vec<(Mode, Scalar)>) {
        let mut terms = vec![(m, Scalar::one())];
        let mut k0 = Scalar::zero();
        match m {
            Mode::J(i) if i < 0 => {
                let a = (-i) as u32;
                k0 = self.tau.get(&a).cloned().unwrap_or_default();
                for (&(p, k), v) in self.phi.range((a, 0)..=(a, u32::MAX)) {
                    debug_assert_eq!(p, a);
                    terms.push((Mode::J(k as i64), v.scale(&Rat::new(1, k as i64))));
                }
            }
            Mode::G(i) if i <= 0 => {
                let a = (-i) as u32;
                for (&(k, l), v) in &self.psi {
                    if l == a {
                        if k == 0 && a == 0 {
                            terms[0].1 += v;
                        } else {
                            terms.push((Mode::G(k as i64), v.clone()));
                        }
                    }
                }
            }
            _ => {}
        }
        terms.retain(|(_, v)| !v.is_zero());
        (k0, terms)
    }

    pub fn is_trivial(&self) -> bool {
        self.tau.values().all(|v| v.is_zero()) && self.phi.values().all(|v| v.is_zero()) && self.psi.values().all(|v| v.is_zero())
    }
}

fn sum_op(range: i64, mut f: impl FnMut(&mut QuadOp, i64)) -> QuadOp {
    let mut o = QuadOp::zero();
    for j in -range..=range {
        f(&mut o, j);
    }
    o.clean();
    o
}

fn alt(j: i64) -> i64 {
    if j.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// L_{2n} = ½Σ(−1)^{j−1}:J_{−j}J_{2n+j}: + central·ℏδ_{n0} [+ ½Σ(−1)^j(n+j):Γ_{−j}Γ_{j+2n}:],
/// with |j| ≤ range. The super operator has central = 1/4; the purely
/// bosonic one drops the fermions and uses 1/8.
pub fn l_op(n: i64, range: i64, central: Rat, fermions: bool) -> QuadOp {
    let mut o = sum_op(range, |o, j| {
        o.add_normal(Mode::J(-j), Mode::J(2 * n + j), &Scalar::frac(-alt(j), 2));
        if fermions {
            o.add_normal(Mode::G(-j), Mode::G(j + 2 * n), &Scalar::frac(alt(j) * (n + j), 2));
        }
    });
    if n == 0 {
        o.hbar = Scalar::from_rat(central);
    }
    o
}

pub fn l_super(n: i64, range: i64) -> QuadOp {
    l_op(n, range, Rat::new(1, 4), true)
}

/// G_{2m+1} = Σ(−1)^{j−1}:J_{−j}Γ_{j+2m+1}:.
pub fn g_op(m: i64, range: i64) -> QuadOp {
    sum_op(range, |o, j| o.add_normal(Mode::J(-j), Mode::G(j + 2 * m + 1), &Scalar::from_int(-alt(j))))
}

/// Σ_j :J_{−2j}J_{s+2j}:.
fn jj_even(s: i64, range: i64) -> QuadOp {
    sum_op(range, |o, j| o.add_normal(Mode::J(-2 * j), Mode::J(s + 2 * j), &Scalar::one()))
}

/// Σ_j (c + 2j) :Γ_{−2j−1}Γ_{2j+s}:.
fn gg_odd(c: i64, s: i64, range: i64) -> QuadOp {
    sum_op(range, |o, j| o.add_normal(Mode::G(-2 * j - 1), Mode::G(2 * j + s), &Scalar::from_int(c + 2 * j)))
}

/// Σ_j :J_{−2j}Γ_{s+2j}:.
fn jg_even(s: i64, range: i64) -> QuadOp {
    sum_op(range, |o, j| o.add_normal(Mode::J(-2 * j), Mode::G(s + 2 * j), &Scalar::one()))
}

// ---------------------------------------------------------------------------
// Fock space

/// Highest variable index representable.
pub const MAX_VAR: usize = 31;

/// ℏ^h Π (x^a)^{e_a} θ^{i_1}..θ^{i_k} with i_1 < .. < i_k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockMono {
    pub hbar: u8,
    /// exponent of x^a at position a (position 0 unused)
    pub x: [u8; MAX_VAR + 1],
    pub theta: u32,
}

impl FockMono {
    pub fn one() -> FockMono {
        FockMono { hbar: 0, x: [0; MAX_VAR + 1], theta: 0 }
    }

    /// deg x = deg θ = 1, deg ℏ = 2.
    pub fn degree(&self) -> u32 {
        self.x.iter().map(|&e| e as u32).sum::<u32>() + self.theta.count_ones() + 2 * self.hbar as u32
    }
}

impl std::fmt::Display for FockMono {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        match self.hbar {
            0 => {}
            1 => parts.push("ħ".to_string()),
            h => parts.push(format!("ħ^{h}")),
        }
        for (a, &e) in self.x.iter().enumerate().filter(|(_, &e)| e > 0) {
            parts.push(if e == 1 { format!("x{a}") } else { format!("x{a}^{e}") });
        }
        for a in (0..32).filter(|a| self.theta >> a & 1 == 1) {
            parts.push(format!("θ{a}"));
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("·"))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockPoly {
    pub terms: BTreeMap<FockMono, Scalar>,
    /// Maximal total degree; exceeding it is `CapExceeded`.
    pub degree_cap: u32,
}

fn cap_err(what: &str) -> Error {
    Error::CapExceeded(what.to_string())
}

impl FockPoly {
    pub fn zero(cap: u32) -> FockPoly {
        FockPoly { terms: BTreeMap::new(), degree_cap: cap }
    }

    pub fn one(cap: u32) -> FockPoly {
        FockPoly::monomial(&[], &[], 0, cap).expect("constant within cap")
    }

    /// The monomial ℏ^h Π x^{xs} · θ^{ts} (θ factors in the given order).
    pub fn monomial(xs: &[u32], ts: &[u32], hbar: u8, cap: u32) -> Result<FockPoly> {
        let mut m = FockMono::one();
        m.hbar = hbar;
        let mut p = FockPoly::zero(cap);
        p.terms.insert(m, Scalar::one());
        for &a in xs {
            p = p.x_mul(a)?;
        }
        for &t in ts.iter().rev() {
            p = p.theta_mul(t)?;
        }
        Ok(p)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|v| v.is_zero())
    }

    fn checked(self) -> Result<FockPoly> {
        if let Some(m) = self.terms.keys().find(|m| m.degree() > self.degree_cap) {
            return Err(cap_err(&format!("degree {} > {}", m.degree(), self.degree_cap)));
        }
        Ok(self)
    }

    fn prune(&mut self) {
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn add_assign(&mut self, o: &FockPoly) {
        for (m, v) in &o.terms {
            *self.terms.entry(*m).or_default() += v;
        }
    }

    pub fn sub(&self, o: &FockPoly) -> FockPoly {
        let mut r = self.clone();
        for (m, v) in &o.terms {
            *r.terms.entry(*m).or_default() -= v;
        }
        r.prune();
        r
    }

    pub fn scaled(&self, c: &Scalar) -> FockPoly {
        let mut r = FockPoly::zero(self.degree_cap);
        if c.is_zero() {
            return r;
        }
        for (m, v) in &self.terms {
            r.terms.insert(*m, v * c);
        }
        r
    }

    fn times_hbar(&self) -> Result<FockPoly> {
        let mut r = FockPoly::zero(self.degree_cap);
        for (m, v) in &self.terms {
            let mut k = *m;
            k.hbar += 1;
            r.terms.insert(k, v.clone());
        }
        r.checked()
    }

    fn x_mul(&self, a: u32) -> Result<FockPoly> {
        if a == 0 || a as usize > MAX_VAR {
            return Err(cap_err(&format!("x^{a}")));
        }
        let mut r = FockPoly::zero(self.degree_cap);
        for (m, v) in &self.terms {
            let mut k = *m;
            k.x[a as usize] += 1;
            r.terms.insert(k, v.clone());
        }
        r.checked()
    }

    /// Left multiplication by θ^a.
    fn theta_mul(&self, a: u32) -> Result<FockPoly> {
        if a as usize > MAX_VAR {
            return Err(cap_err(&format!("θ^{a}")));
        }
        let bit = 1u32 << a;
        let mut r = FockPoly::zero(self.degree_cap);
        for (m, v) in &self.terms {
            if m.theta & bit != 0 {
                continue;
            }
            let mut k = *m;
            k.theta |= bit;
            let s = (m.theta & (bit - 1)).count_ones() % 2 == 1;
            r.terms.insert(k, if s { -v } else { v.clone() });
        }
        r.checked()
    }

    /// ℏ ∂/∂x^a.
    fn x_der(&self, a: u32) -> Result<FockPoly> {
        let mut r = FockPoly::zero(self.degree_cap);
        if a as usize > MAX_VAR {
            return Ok(r);
        }
        for (m, v) in &self.terms {
            let e = m.x[a as usize];
            if e == 0 {
                continue;
            }
            let mut k = *m;
            k.x[a as usize] -= 1;
            k.hbar += 1;
            r.terms.insert(k, v.scale_int(e as i64));
        }
        r.checked()
    }

    /// ℏ ∂/∂θ^a (left derivative).
    fn theta_der(&self, a: u32) -> Result<FockPoly> {
        let mut r = FockPoly::zero(self.degree_cap);
        if a as usize > MAX_VAR {
            return Ok(r);
        }
        let bit = 1u32 << a;
        for (m, v) in &self.terms {
            if m.theta & bit == 0 {
                continue;
            }
            let mut k = *m;
            k.theta &= !bit;
            k.hbar += 1;
            let s = (m.theta & (bit - 1)).count_ones() % 2 == 1;
            r.terms.insert(k, if s { -v } else { v.clone() });
        }
        r.checked()
    }

    pub fn apply_mode(&self, m: Mode) -> Result<FockPoly> {
        match m {
            Mode::J(0) => Ok(FockPoly::zero(self.degree_cap)),
            Mode::J(a) if a > 0 => self.x_der(a as u32),
            Mode::J(a) => Ok(self.x_mul((-a) as u32)?.scaled(&Scalar::from_int(-a))),
            Mode::G(0) => {
                let mut r = self.theta_mul(0)?.scaled(&Scalar::frac(1, 2));
                r.add_assign(&self.theta_der(0)?);
                r.prune();
                Ok(r)
            }
            Mode::G(a) if a > 0 => self.theta_der(a as u32),
            Mode::G(a) => self.theta_mul((-a) as u32),
        }
    }
}

/// All monomials (without ℏ) of degree ≤ `degree` in x^1..x^r, θ^0..θ^r.
pub fn sample_monomials(degree: u32, r: u32, cap: u32) -> Result<Vec<FockPoly>> {
    let mut bos: Vec<Vec<u32>> = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..degree {
        let mut next = vec![];
        for v in &frontier {
            let lo = v.last().copied().unwrap_or(1);
            for a in lo..=r {
                let mut w: Vec<u32> = v.clone();
                w.push(a);
                next.push(w);
            }
        }
        bos.extend(next.iter().cloned());
        frontier = next;
    }
    let mut out = vec![];
    for b in &bos {
        for mask in 0u32..(1 << (r + 1)) {
            if b.len() as u32 + mask.count_ones() > degree {
                continue;
            }
            let ts: Vec<u32> = (0..=r).filter(|i| mask & (1 << i) != 0).collect();
            out.push(FockPoly::monomial(b, &ts, 0, cap)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Relations

/// The relation families of the extended super-Virasoro algebra, plus the
/// free-field relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// [L_{2n}, J_{2i}] = 2iℏ J_{2n+2i}
    LJ { n: i64, i: i64 },
    /// [G_{2m+1}, J_{2i}] = 2iℏ Γ_{2i+2m+1}
    GJ { m: i64, i: i64 },
    /// [L_{2n}, Γ_{2i−1}] = (n+2i−1)ℏ Γ_{2n+2i−1}
    LGamma { n: i64, i: i64 },
    /// {G_{2m+1}, Γ_{2i−1}} = −ℏ J_{2i+2m} (the weight-preserving form; the
    /// variant with J_{2i+2m+2} fails already on 1·x¹)
    GGamma { m: i64, i: i64 },
    LL { n: i64, m: i64 },
    LG { n: i64, m: i64 },
    GG { n: i64, m: i64 },
    /// [J_a, J_b] = aℏδ_{a+b,0}
    Heisenberg { a: i64, b: i64 },
    /// {Γ_a, Γ_b} = ℏδ_{a+b,0}
    Clifford { a: i64, b: i64 },
    /// [J_a, Γ_b] = 0
    Mixed { a: i64, b: i64 },
}

impl Relation {
    pub fn family(&self) -> &'static str {
        match self {
            Relation::LJ { .. } | Relation::GJ { .. } => "comm1",
            Relation::LGamma { .. } | Relation::GGamma { .. } => "comm2",
            Relation::LL { .. } => "comm3",
            Relation::LG { .. } => "comm4",
            Relation::GG { .. } => "comm5",
            Relation::Heisenberg { .. } => "heisenberg",
            Relation::Clifford { .. } => "clifford",
            Relation::Mixed { .. } => "mixed",
        }
    }
}

/// Options for building the operators of a relation check.
#[derive(Clone, Debug)]
pub struct AlgebraSetup {
    pub range: i64,
    /// Conjugate every operator (both sides) by Φ.
    pub shift: Option<Shift>,
    /// Central term of L_0 (1/4 for the true operator; anything else is a
    /// deliberately corrupted operator).
    pub central: Rat,
}

impl AlgebraSetup {
    pub fn plain(range: i64) -> AlgebraSetup {
        AlgebraSetup { range, shift: None, central: Rat::new(1, 4) }
    }

    fn fin(&self, o: QuadOp) -> QuadOp {
        match &self.shift {
            Some(s) => o.shifted(s),
            None => o,
        }
    }

    fn l(&self, n: i64) -> QuadOp {
        self.fin(l_op(n, self.range, self.central.clone(), true))
    }

    fn g(&self, m: i64) -> QuadOp {
        self.fin(g_op(m, self.range))
    }

    fn md(&self, m: Mode) -> QuadOp {
        self.fin(QuadOp::mode(m))
    }

    /// (A, B, anticommutator?, RHS) of a relation. For the Virasoro-type
    /// families the RHS still has to be multiplied by ℏ.
    pub fn sides(&self, rel: Relation) -> (QuadOp, QuadOp, bool, QuadOp) {
        let r = self.range;
        let hb = |c: i64| Scalar::from_int(c);
        let mut rhs = QuadOp::zero();
        let (a, b, anti) = match rel {
            Relation::LJ { n, i } => {
                rhs.add_scaled(&self.md(Mode::J(2 * n + 2 * i)), &hb(2 * i));
                (self.l(n), self.md(Mode::J(2 * i)), false)
            }
            Relation::GJ { m, i } => {
                rhs.add_scaled(&self.md(Mode::G(2 * i + 2 * m + 1)), &hb(2 * i));
                (self.g(m), self.md(Mode::J(2 * i)), false)
            }
            Relation::LGamma { n, i } => {
                rhs.add_scaled(&self.md(Mode::G(2 * n + 2 * i - 1)), &hb(n + 2 * i - 1));
                (self.l(n), self.md(Mode::G(2 * i - 1)), false)
            }
            Relation::GGamma { m, i } => {
                rhs.add_scaled(&self.md(Mode::J(2 * i + 2 * m)), &hb(-1));
                (self.g(m), self.md(Mode::G(2 * i - 1)), true)
            }
            Relation::LL { n, m } => {
                let mut x = self.l(n + m);
                x.add_scaled(&self.fin(jj_even(2 * n + 2 * m, r)), &hb(1));
                x.add_scaled(&self.fin(gg_odd(n + m + 1, 2 * n + 2 * m + 1, r)), &hb(1));
                rhs.add_scaled(&x, &hb(2 * (n - m)));
                (self.l(n), self.l(m), false)
            }
            Relation::LG { n, m } => {
                let mut x = self.g(n + m);
                x.add_scaled(&self.fin(jg_even(2 * n + 2 * m + 1, r)), &hb(2));
                rhs.add_scaled(&x, &hb(n - 2 * m - 1));
                (self.l(n), self.g(m), false)
            }
            Relation::GG { n, m } => {
                let mut x = self.l(n + m + 1);
                x.add_scaled(&self.fin(jj_even(2 * n + 2 * m + 2, r)), &hb(1));
                x.add_scaled(&self.fin(gg_odd(n + m + 2, 2 * n + 2 * m + 3, r)), &hb(1));
                rhs.add_scaled(&x, &hb(2));
                (self.g(n), self.g(m), true)
            }
            Relation::Heisenberg { a, b } => {
                if a + b == 0 {
                    rhs.hbar = hb(a);
                }
                (self.md(Mode::J(a)), self.md(Mode::J(b)), false)
            }
            Relation::Clifford { a, b } => {
                if a + b == 0 {
                    rhs.hbar = hb(1);
                }
                (self.md(Mode::G(a)), self.md(Mode::G(b)), true)
            }
            Relation::Mixed { a, b } => (self.md(Mode::J(a)), self.md(Mode::G(b)), false),
        };
        (a, b, anti, rhs)
    }
}

/// [A, B]p or {A, B}p.
pub fn bracket_apply(a: &QuadOp, b: &QuadOp, anti: bool, p: &FockPoly) -> Result<FockPoly> {
    let ab = a.apply(&b.apply(p)?)?;
    let ba = b.apply(&a.apply(p)?)?;
    if anti {
        let mut r = ab;
        r.add_assign(&ba);
        r.prune();
        Ok(r)
    } else {
        Ok(ab.sub(&ba))
    }
}

/// LHS − RHS of a relation on a sample polynomial.
pub fn relation_defect(rel: Relation, setup: &AlgebraSetup, p: &FockPoly) -> Result<FockPoly> {
    let (a, b, anti, rhs) = setup.sides(rel);
    let lhs = bracket_apply(&a, &b, anti, p)?;
    let r = rhs.apply(p)?;
    let r = match rel {
        Relation::Heisenberg { .. } | Relation::Clifford { .. } | Relation::Mixed { .. } => r,
        _ => r.times_hbar()?,
    };
    Ok(lhs.sub(&r))
}

pub fn check_commutator(rel: Relation, setup: &AlgebraSetup, p: &FockPoly) -> Result<bool> {
    Ok(relation_defect(rel, setup, p)?.is_zero())
}

/// Pass/fail summary per relation family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlgebraReport {
    pub rows: Vec<FamilyResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyResult {
    pub family: String,
    pub checked: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

impl AlgebraReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.failed == 0)
    }

    fn record(&mut self, family: &str, ok: bool, what: impl FnOnce() -> String) {
        let row = match self.rows.iter_mut().find(|r| r.family == family) {
            Some(r) => r,
            None => {
                self.rows.push(FamilyResult { family: family.to_string(), checked: 0, failed: 0, first_failure: None });
                self.rows.last_mut().unwrap()
            }
        };
        row.checked += 1;
        if !ok {
            row.failed += 1;
            if row.first_failure.is_none() {
                row.first_failure = Some(what());
            }
        }
    }
}

/// Every relation instance with n, m ∈ [−1, r], i ∈ [1, r] (free-field
/// relations for |a|, |b| ≤ r).
pub fn relation_instances(r: i64) -> Vec<Relation> {
    let mut v = vec![];
    for n in -1..=r {
        for i in 1..=r {
            v.push(Relation::LJ { n, i });
            v.push(Relation::GJ { m: n, i });
            v.push(Relation::LGamma { n, i });
            v.push(Relation::GGamma { m: n, i });
        }
    }
    for n in -1..=r {
        for m in -1..=r {
            v.push(Relation::LL { n, m });
            v.push(Relation::LG { n, m });
            v.push(Relation::GG { n, m });
        }
    }
    for a in -r..=r {
        for b in -r..=r {
            v.push(Relation::Heisenberg { a, b });
            v.push(Relation::Clifford { a, b });
            v.push(Relation::Mixed { a, b });
        }
    }
    v
}

fn run_relations(setup: &AlgebraSetup, degree: u32, r: i64, rels: &[Relation]) -> Result<AlgebraReport> {
    // two operator applications raise the degree by at most 4, the ℏ on the
    // right-hand side by 2 more
    let samples = sample_monomials(degree, r.max(0) as u32, degree + 6)?;
    let mut rep = AlgebraReport::default();
    for rel in rels {
        let (a, b, anti, rhs) = setup.sides(*rel);
        let hbar_rhs = !matches!(rel, Relation::Heisenberg { .. } | Relation::Clifford { .. } | Relation::Mixed { .. });
        for p in &samples {
            let lhs = bracket_apply(&a, &b, anti, p)?;
            let mut rp = rhs.apply(p)?;
            if hbar_rhs {
                rp = rp.times_hbar()?;
            }
            let ok = lhs.sub(&rp).is_zero();
            rep.record(rel.family(), ok, || match p.terms.keys().next() {
                Some(m) => format!("{:?} on {}", rel, m),
                None => format!("{:?} on 0", rel),
            });
        }
    }
    Ok(rep)
}

/// Checks all relation families on all monomials of degree ≤ `degree` in
/// x¹..x^r, θ⁰..θ^r. `central` other than 1/4 corrupts L₀ (negative control).
pub fn verify_algebra(degree: u32, r: i64, central: Rat) -> Result<AlgebraReport> {
    let setup = AlgebraSetup { range: 2 * r + 16, shift: None, central };
    run_relations(&setup, degree, r, &relation_instances(r))
}

// ---------------------------------------------------------------------------
// The super Airy structure of a curve

/// Half the leading exponent: H²_i = L̃_{2i−2s}, F²_i = G̃_{2i−2s+1}, s = (ε+1)/2.
fn s_of(epsilon: u8) -> i64 {
    (epsilon as i64 + 1) / 2
}

/// L-index n of H²_i.
pub fn h2_index(epsilon: u8, i: i64) -> i64 {
    i - s_of(epsilon)
}

/// G-index m of F²_i.
pub fn f2_index(epsilon: u8, i: i64) -> i64 {
    i - s_of(epsilon)
}

pub fn h2(shift: &Shift, epsilon: u8, i: i64, range: i64) -> QuadOp {
    l_super(h2_index(epsilon, i), range).shifted(shift)
}

pub fn f2(shift: &Shift, epsilon: u8, i: i64, range: i64) -> QuadOp {
    g_op(f2_index(epsilon, i), range).shifted(shift)
}

/// H¹_i = J_{2i}, F¹_i = Γ_{2i−1} (zero for i ≤ 0).
fn h1(i: i64) -> QuadOp {
    if i <= 0 {
        QuadOp::zero()
    } else {
        QuadOp::mode(Mode::J(2 * i))
    }
}

fn f1(i: i64) -> QuadOp {
    if i <= 0 {
        QuadOp::zero()
    } else {
        QuadOp::mode(Mode::G(2 * i - 1))
    }
}

/// Which F¹ index the fermionic recombination uses: the printed one
/// (i+k−2 at ε=3) or the one that cancels the τ_{2k} terms (i+k−1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recombination {
    AsPrinted,
    Corrected,
}

/// Ĥ²_i = (1/τ_ε)[H²_i + Σ_{k≥1} τ_{2k} H¹_{i+k−s} − Σ_{k≥s} (τ_{2k+1}/τ_ε) H²_{i+k−s+1}].
/// At τ_ε = 1, ε = 3 this is the usual first-order recombination.
pub fn hatted_h2(shift: &Shift, epsilon: u8, i: i64, range: i64) -> Result<QuadOp> {
    let s = s_of(epsilon);
    let te = shift.tau.get(&(epsilon as u32)).cloned().unwrap_or_default();
    let inv = te.invert().map_err(|_| Error::SingularLeading)?;
    let mut o = h2(shift, epsilon, i, range);
    for (&l, t) in &shift.tau {
        let k = (l / 2) as i64;
        if l % 2 == 0 && k >= 1 {
            o.add_scaled(&h1(i + k - s), t);
        } else if l % 2 == 1 && k >= s {
            o.add_scaled(&h2(shift, epsilon, i + k - s + 1, range), &-(t * &inv));
        }
    }
    let mut r = QuadOp::zero();
    r.add_scaled(&o, &inv);
    Ok(r)
}

pub fn hatted_f2(shift: &Shift, epsilon: u8, i: i64, range: i64, rec: Recombination) -> Result<QuadOp> {
    let s = s_of(epsilon);
    let te = shift.tau.get(&(epsilon as u32)).cloned().unwrap_or_default();
    let inv = te.invert().map_err(|_| Error::SingularLeading)?;
    let shift_f1 = match rec {
        Recombination::AsPrinted => -s,
        Recombination::Corrected => 1 - s,
    };
    let mut o = f2(shift, epsilon, i, range);
    for (&l, t) in &shift.tau {
        let k = (l / 2) as i64;
        if l % 2 == 0 && k >= 1 {
            o.add_scaled(&f1(i + k + shift_f1), t);
        } else if l % 2 == 1 && k >= s {
            o.add_scaled(&f2(shift, epsilon, i + k - s + 1, range), &-(t * &inv));
        }
    }
    let mut r = QuadOp::zero();
    r.add_scaled(&o, &inv);
    Ok(r)
}

/// Outcome of the Airy-structure property checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AxiomReport {
    /// (operator label, degree-1 part is exactly ℏ∂ of the expected variable)
    pub degree_one: Vec<(String, bool)>,
    /// degree-1 part is unitriangular: the expected mode with coefficient 1
    /// plus modes of higher index only
    pub triangular: Vec<(String, bool)>,
    /// no θ⁰-derivative (Γ₀) and no ℏ⁰ constant in any degree-1/0 part
    pub no_zero_mode: bool,
    /// commutation relations of the conjugated operators
    pub closure: AlgebraReport,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.triangular.iter().all(|(_, ok)| *ok) && self.no_zero_mode && self.closure.all_pass()
    }
}

fn degree_one_checks(o: &QuadOp, want: Mode) -> (bool, bool) {
    let exact = o.constant.is_zero() && o.lin.len() == 1 && o.lin.get(&want).is_some_and(|v| v.is_one());
    let tri = o.constant.is_zero()
        && o.lin.get(&want).is_some_and(|v| v.is_one())
        && o.lin.keys().all(|m| m.is_odd() == want.is_odd() && m.index() >= want.index());
    (exact, tri)
}

/// Degree-1 structure of the hatted operators for i ≤ imax, and closure of
/// the conjugated relations on monomials of degree ≤ `degree` in
/// x¹..x^r, θ⁰..θ^r.
pub fn check_airy_axioms(shift: &Shift, epsilon: u8, imax: i64, degree: u32, r: i64) -> Result<AxiomReport> {
    let nmax = shift.tau.keys().chain(shift.phi.keys().map(|k| &k.1)).chain(shift.psi.keys().map(|k| &k.1)).copied().max().unwrap_or(0) as i64;
    let range = (2 * imax + 2 * r + 16).max(nmax + 2 * r + 8);
    let mut rep = AxiomReport { no_zero_mode: true, ..AxiomReport::default() };
    for i in 1..=imax {
        let h = hatted_h2(shift, epsilon, i, range)?;
        let f = hatted_f2(shift, epsilon, i, range, Recombination::Corrected)?;
        let (e, t) = degree_one_checks(&h, Mode::J(2 * i - 1));
        rep.degree_one.push((format!("H^2_{i}"), e));
        rep.triangular.push((format!("H^2_{i}"), t));
        let (e, t) = degree_one_checks(&f, Mode::G(2 * i));
        rep.degree_one.push((format!("F^2_{i}"), e));
        rep.triangular.push((format!("F^2_{i}"), t));
        for o in [&h, &f] {
            if o.lin.contains_key(&Mode::G(0)) || !o.constant.is_zero() {
                rep.no_zero_mode = false;
            }
        }
    }
    let setup = AlgebraSetup { range, shift: Some(shift.clone()), central: Rat::new(1, 4) };
    rep.closure = run_relations(&setup, degree, r, &relation_instances(r))?;
    Ok(rep)
}
