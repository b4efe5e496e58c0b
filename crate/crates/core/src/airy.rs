//! Solver for the free energy of the super Airy structure of a curve.
//!
//! With Z = exp(Σ ℏ^{g−1}/(n!(2m)!) F_{g,n|2m}(I|K) x^I θ^K), every constraint
//! H Z = 0 becomes e^{−F} H e^{F} = 0. For an ordered mode product AB this is
//! α_A α_B + D_A(α_B), where α_M = e^{−F}M e^{F}·1 (ℏ∂F for annihilators, the
//! multiplication operator for creators) and D_A is the derivative part of A.
//! Reading off one coefficient of x^I θ^K ℏ^g gives a linear equation whose
//! only unknown at the current level is the entry hit by the dilaton term
//! τ_ε J_{2n+ε} (resp. τ_ε Γ_{2m+1+ε}).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::curve::CurveData;
use crate::error::{Error, Result};
use crate::scalar::{Rat, Scalar};
use crate::store::{even_subsets, index_bound, is_stable, odd_multisets, partition_sign_mask, CorrKey, CorrTensor, Type};
use crate::svir::{g_op, l_op, Mode, QuadOp, Shift};
use crate::tr::types_at;

/// Parts of α_M.
#[derive(Clone, Copy, Debug)]
enum Atom {
    /// k·x^c
    X(u32, i64, i64),
    /// k·θ^c
    T(u32, i64, i64),
    /// ℏ∂F/∂x^a
    Db(u32),
    /// ℏ∂F/∂θ^a
    Df(u32),
}

fn atoms(m: Mode) -> ([Option<Atom>; 2], usize) {
    match m {
        Mode::J(a) if a > 0 => ([Some(Atom::Db(a as u32)), None], 1),
        Mode::J(a) => ([Some(Atom::X((-a) as u32, -a, 1)), None], 1),
        Mode::G(0) => ([Some(Atom::T(0, 1, 2)), Some(Atom::Df(0))], 2),
        Mode::G(a) if a > 0 => ([Some(Atom::Df(a as u32)), None], 1),
        Mode::G(a) => ([Some(Atom::T((-a) as u32, 1, 1)), None], 1),
    }
}

#[derive(Clone, Debug)]
struct Term {
    a: Mode,
    b: Mode,
    c: Scalar,
}

/// One shifted operator prepared for coefficient evaluation.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub op: QuadOp,
    lin: Vec<(Mode, Scalar)>,
    quad: Vec<Term>,
}

impl Constraint {
    fn new(op: QuadOp) -> Constraint {
        let lin = op.lin.iter().map(|(m, c)| (*m, c.clone())).collect();
        let quad = op.quad.iter().map(|((a, b), c)| Term { a: *a, b: *b, c: c.clone() }).collect();
        Constraint { op, lin, quad }
    }

    pub fn linear_coeff(&self, m: Mode) -> Scalar {
        self.op.lin.get(&m).cloned().unwrap_or_default()
    }
}

/// Coefficient evaluation against a (partially filled) tensor.
struct Eval<'a> {
    t: &'a CorrTensor,
    /// indices occurring in some stored entry
    bos_present: &'a BTreeSet<u32>,
    fer_present: &'a BTreeSet<u32>,
}

fn with_front(a: u32, v: &[u32]) -> Vec<u32> {
    let mut w = Vec::with_capacity(v.len() + 1);
    w.push(a);
    w.extend_from_slice(v);
    w
}

fn with_front2(a: u32, b: u32, v: &[u32]) -> Vec<u32> {
    let mut w = Vec::with_capacity(v.len() + 2);
    w.push(a);
    w.push(b);
    w.extend_from_slice(v);
    w
}

fn remove_one(v: &[u32], c: u32) -> Option<Vec<u32>> {
    let p = v.iter().position(|&x| x == c)?;
    let mut w = v.to_vec();
    w.remove(p);
    Some(w)
}

fn without(v: &[u32], p: usize) -> Vec<u32> {
    let mut w = v.to_vec();
    w.remove(p);
    w
}

impl<'a> Eval<'a> {
    fn atom(&self, at: Atom, h: u32, bos: &[u32], fer: &[u32]) -> Scalar {
        match at {
            Atom::X(c, k, d) => {
                if h == 0 && fer.is_empty() && bos == [c] {
                    Scalar::frac(k, d)
                } else {
                    Scalar::zero()
                }
            }
            Atom::T(c, k, d) => {
                if h == 0 && bos.is_empty() && fer == [c] {
                    Scalar::frac(k, d)
                } else {
                    Scalar::zero()
                }
            }
            Atom::Db(a) => {
                if !self.bos_present.contains(&a) || !is_stable(h, bos.len() + 1, fer.len()) {
                    return Scalar::zero();
                }
                self.t.get(h, &with_front(a, bos), fer)
            }
            Atom::Df(a) => {
                if !self.fer_present.contains(&a) || !is_stable(h, bos.len(), fer.len() + 1) {
                    return Scalar::zero();
                }
                self.t.get(h, bos, &with_front(a, fer))
            }
        }
    }

    fn possibly_nonzero(&self, at: Atom) -> bool {
        match at {
            Atom::Db(a) => self.bos_present.contains(&a),
            Atom::Df(a) => self.fer_present.contains(&a),
            _ => true,
        }
    }

    /// Coefficient of the product of two atoms (A to the left).
    fn product(&self, x: Atom, y: Atom, h: u32, bos: &[u32], fer: &[u32]) -> Scalar {
        if !self.possibly_nonzero(x) || !self.possibly_nonzero(y) {
            return Scalar::zero();
        }
        match (x, y) {
            (Atom::X(c, k, d), o) | (o, Atom::X(c, k, d)) => {
                let m = bos.iter().filter(|&&b| b == c).count() as i64;
                if m == 0 {
                    return Scalar::zero();
                }
                let rest = remove_one(bos, c).unwrap();
                self.atom(o, h, &rest, fer).scale(&Rat::new(k * m, d))
            }
            (Atom::T(c, k, d), o) => {
                let mut s = Scalar::zero();
                for (p, &q) in fer.iter().enumerate() {
                    if q == c {
                        let v = self.atom(o, h, bos, &without(fer, p));
                        s += &(if p % 2 == 1 { -v } else { v });
                    }
                }
                s.scale(&Rat::new(k, d))
            }
            (o, Atom::T(c, k, d)) => {
                let mut s = Scalar::zero();
                let n = fer.len();
                for (p, &q) in fer.iter().enumerate() {
                    if q == c {
                        let v = self.atom(o, h, bos, &without(fer, p));
                        s += &(if (n - 1 - p) % 2 == 1 { -v } else { v });
                    }
                }
                s.scale(&Rat::new(k, d))
            }
            _ => self.split(x, y, h, bos, fer),
        }
    }

    fn split(&self, x: Atom, y: Atom, h: u32, bos: &[u32], fer: &[u32]) -> Scalar {
        let (nb, nf) = (bos.len(), fer.len());
        let mut s = Scalar::zero();
        let mut b1 = Vec::with_capacity(nb);
        let mut b2 = Vec::with_capacity(nb);
        let mut f1 = Vec::with_capacity(nf);
        let mut f2 = Vec::with_capacity(nf);
        for mb in 0u32..(1 << nb) {
            b1.clear();
            b2.clear();
            for (p, &v) in bos.iter().enumerate() {
                if mb >> p & 1 == 1 {
                    b1.push(v)
                } else {
                    b2.push(v)
                }
            }
            for mf in 0u32..(1 << nf) {
                f1.clear();
                f2.clear();
                for (p, &v) in fer.iter().enumerate() {
                    if mf >> p & 1 == 1 {
                        f1.push(v)
                    } else {
                        f2.push(v)
                    }
                }
                for h1 in 0..=h {
                    let u = self.atom(x, h1, &b1, &f1);
                    if u.is_zero() {
                        continue;
                    }
                    let v = self.atom(y, h - h1, &b2, &f2);
                    if v.is_zero() {
                        continue;
                    }
                    let uv = &u * &v;
                    s += &(if partition_sign_mask(mf, nf) < 0 { -uv } else { uv });
                }
            }
        }
        s
    }

    /// Coefficient of D_A(α_B): the derivative part of A hitting B's α.
    fn derived(&self, a: Mode, y: Atom, h: u32, bos: &[u32], fer: &[u32]) -> Scalar {
        let vac = bos.is_empty() && fer.is_empty();
        match a {
            Mode::J(ia) if ia > 0 => {
                let ia = ia as u32;
                match y {
                    Atom::X(c, k, d) if c == ia && h == 1 && vac => Scalar::frac(k, d),
                    Atom::Db(b) if h >= 1 => self.t.get(h - 1, &with_front2(ia, b, bos), fer),
                    Atom::Df(b) if h >= 1 => self.t.get(h - 1, &with_front(ia, bos), &with_front(b, fer)),
                    _ => Scalar::zero(),
                }
            }
            Mode::G(ia) if ia >= 0 => {
                let ia = ia as u32;
                match y {
                    Atom::T(c, k, d) if c == ia && h == 1 && vac => Scalar::frac(k, d),
                    Atom::Db(b) if h >= 1 => self.t.get(h - 1, &with_front(b, bos), &with_front(ia, fer)),
                    Atom::Df(b) if h >= 1 => self.t.get(h - 1, bos, &with_front2(b, ia, fer)),
                    _ => Scalar::zero(),
                }
            }
            _ => Scalar::zero(),
        }
    }

    /// Coefficient of ℏ^h x^bos θ^fer in e^{−F} O e^{F}.
    fn value(&self, o: &Constraint, h: u32, bos: &[u32], fer: &[u32]) -> Scalar {
        let vac = bos.is_empty() && fer.is_empty();
        let mut s = Scalar::zero();
        if vac && h == 0 {
            s += &o.op.constant;
        }
        if vac && h == 1 {
            s += &o.op.hbar;
        }
        for (m, c) in &o.lin {
            let (at, n) = atoms(*m);
            for x in at.iter().take(n).flatten() {
                let v = self.atom(*x, h, bos, fer);
                if !v.is_zero() {
                    s += &(&v * c);
                }
            }
        }
        for t in &o.quad {
            let (ax, na) = atoms(t.a);
            let (by, nb) = atoms(t.b);
            let mut v = Scalar::zero();
            for x in ax.iter().take(na).flatten() {
                for y in by.iter().take(nb).flatten() {
                    v += &self.product(*x, *y, h, bos, fer);
                }
            }
            for y in by.iter().take(nb).flatten() {
                v += &self.derived(t.a, *y, h, bos, fer);
            }
            if !v.is_zero() {
                s += &(&v * &t.c);
            }
        }
        s
    }
}

/// Which family of constraints an equation comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Eq {
    /// L̃_{2n}, read at a coefficient with one bosonic slot removed
    H(i64),
    /// G̃_{2m+1}, one fermionic slot removed
    G(i64),
}

#[derive(Clone, Debug, Default)]
pub struct AiryOptions {
    /// Solve only what these types need.
    pub targets: Option<Vec<Type>>,
    /// Evaluate every constraint at every coefficient after solving.
    pub residual: bool,
    /// Fermion-free system with central term ℏ/8.
    pub bosonic: bool,
}

pub struct AiryEngine {
    pub epsilon: u8,
    pub chi_max: u32,
    bosonic: bool,
    shift: Shift,
    range: i64,
    ops: BTreeMap<Eq, Constraint>,
    tensor: CorrTensor,
    bos_present: BTreeSet<u32>,
    fer_present: BTreeSet<u32>,
    done: BTreeSet<Type>,
}

impl AiryEngine {
    pub fn new(c: &CurveData, chi_max: u32, bosonic: bool) -> Result<AiryEngine> {
        c.validate()?;
        if chi_max < 3 {
            return Err(Error::Stability(format!("chi_max = {chi_max} < 3")));
        }
        c.check_trunc(chi_max)?;
        let eps = c.epsilon;
        if c.tau(eps as u32).is_zero() {
            return Err(Error::SingularLeading);
        }
        let d = index_bound(eps, chi_max) as i64;
        let range = d + 2 * eps as i64 + 6;
        let mut shift = Shift::from_curve(c, range as u32);
        if bosonic {
            shift.psi.clear();
        }
        let mut tensor = CorrTensor::new(chi_max, Some(Arc::new(c.clone())));
        tensor.chi_max = chi_max;
        Ok(AiryEngine {
            epsilon: eps,
            chi_max,
            bosonic,
            shift,
            range,
            ops: BTreeMap::new(),
            tensor,
            bos_present: BTreeSet::new(),
            fer_present: BTreeSet::new(),
            done: BTreeSet::new(),
        })
    }

    pub fn tensor(&self) -> &CorrTensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> CorrTensor {
        self.tensor
    }

    /// The shifted operator behind an equation family.
    pub fn constraint(&mut self, e: Eq) -> &Constraint {
        let (range, bosonic) = (self.range, self.bosonic);
        let shift = &self.shift;
        self.ops.entry(e).or_insert_with(|| {
            let op = match e {
                Eq::H(n) if bosonic => l_op(n, range, Rat::new(1, 8), false),
                Eq::H(n) => l_op(n, range, Rat::new(1, 4), true),
                Eq::G(m) => g_op(m, range),
            };
            Constraint::new(op.shifted(shift))
        })
    }

    fn eq_for(&self, lead: u32, bosonic_slot: bool) -> Eq {
        let e = lead as i64 - self.epsilon as i64;
        if bosonic_slot {
            Eq::H(e / 2)
        } else {
            Eq::G((e - 1) / 2)
        }
    }

    /// e^{−F} O e^{F} at ℏ^h x^bos θ^fer with the current tensor.
    pub fn evaluate(&mut self, e: Eq, h: u32, bos: &[u32], fer: &[u32]) -> Scalar {
        self.constraint(e);
        let ev = Eval { t: &self.tensor, bos_present: &self.bos_present, fer_present: &self.fer_present };
        ev.value(&self.ops[&e], h, bos, fer)
    }

    /// Canonical keys of a type with index sum within the level bound,
    /// in decreasing index sum.
    fn keys_of(&self, t: Type) -> Vec<CorrKey> {
        let d = index_bound(self.epsilon, t.chi());
        let mut out = vec![];
        for b in odd_multisets(t.n as usize, d) {
            let sb: u32 = b.iter().sum();
            for f in even_subsets(t.f as usize, d - sb) {
                out.push(CorrKey::new(t.g, b.clone(), f));
            }
        }
        out.sort_by_key(|k| std::cmp::Reverse(k.bos.iter().sum::<u32>() + k.fer.iter().sum::<u32>()));
        out
    }

    fn store(&mut self, g: u32, bos: &[u32], fer: &[u32], v: Scalar) -> Result<()> {
        if v.is_zero() {
            return Ok(());
        }
        self.bos_present.extend(bos.iter().copied());
        self.fer_present.extend(fer.iter().copied());
        self.tensor.set(g, bos, fer, v)
    }

    pub fn solve_type(&mut self, t: Type) -> Result<()> {
        if self.bosonic && t.f > 0 {
            self.done.insert(t);
            return Ok(());
        }
        for k in self.keys_of(t) {
            let (eq, rest_b, rest_f, lead) = if t.n >= 1 {
                let e = *k.bos.last().unwrap();
                (self.eq_for(e, true), k.bos[..k.bos.len() - 1].to_vec(), k.fer.clone(), Mode::J(e as i64))
            } else {
                let e = *k.fer.last().unwrap();
                (self.eq_for(e, false), vec![], k.fer[..k.fer.len() - 1].to_vec(), Mode::G(e as i64))
            };
            let l = self.constraint(eq).linear_coeff(lead);
            let inv = l.invert().map_err(|_| Error::SingularLeading)?;
            let r = self.evaluate(eq, k.g, &rest_b, &rest_f);
            let v = -(&r * &inv);
            match lead {
                Mode::J(e) => self.store(k.g, &with_front(e as u32, &rest_b), &rest_f, v)?,
                Mode::G(e) => self.store(k.g, &rest_b, &with_front(e as u32, &rest_f), v)?,
            }
        }
        self.done.insert(t);
        Ok(())
    }

    /// Every equation whose unknown slot lies in a solved type of level χ,
    /// evaluated at every parity-allowed coefficient (including leads past
    /// the index bound, whose unknown must then vanish).
    pub fn residuals(&mut self, chi: u32) -> Result<usize> {
        let d = index_bound(self.epsilon, chi);
        let eps = self.epsilon as u32;
        let mut count = 0;
        let types: Vec<Type> = types_at(chi).into_iter().filter(|t| self.done.contains(t)).collect();
        for t in types {
            if self.bosonic && t.f > 0 {
                continue;
            }
            // (bosonic slot removed?, sizes of the remaining coefficient)
            let mut shapes = vec![];
            if t.n >= 1 {
                shapes.push((true, t.n - 1, t.f));
            }
            if t.f >= 2 && !self.bosonic {
                shapes.push((false, t.n, t.f - 1));
            }
            for (bslot, nb, nf) in shapes {
                for b in odd_multisets(nb as usize, d) {
                    let sb: u32 = b.iter().sum();
                    for f in self.fer_lists(nf as usize, d - sb) {
                        let sf: u32 = f.iter().sum();
                        let top = d - sb - sf + 2 * eps + 2;
                        let mut lead = if bslot { 1 } else { 2 };
                        while lead <= top {
                            let e = self.eq_for(lead, bslot);
                            let v = self.evaluate(e, t.g, &b, &f);
                            count += 1;
                            if !v.is_zero() {
                                return Err(Error::Residual(format!("{:?} at ℏ^{} x{:?} θ{:?}: {}", e, t.g, b, f, v)));
                            }
                            lead += 2;
                        }
                    }
                }
            }
        }
        Ok(count)
    }

    /// Fermionic coefficient lists for residual checks: strictly increasing
    /// even lists (odd entries vanish identically).
    fn fer_lists(&self, size: usize, max_sum: u32) -> Vec<Vec<u32>> {
        even_subsets(size, max_sum)
    }

    pub fn solve_all(&mut self, opts: &AiryOptions) -> Result<()> {
        let wanted: Option<BTreeSet<Type>> = opts.targets.as_ref().map(|t| airy_closure(t, self.bosonic));
        for chi in 3..=self.chi_max {
            for t in types_at(chi) {
                if let Some(w) = &wanted {
                    if !w.contains(&t) {
                        continue;
                    }
                }
                self.solve_type(t)?;
            }
            if opts.residual && wanted.is_none() {
                self.residuals(chi)?;
            }
        }
        Ok(())
    }
}

fn push_type(out: &mut BTreeSet<Type>, g: i64, n: i64, f: i64) {
    if g < 0 || n < 0 || f < 0 || f % 2 == 1 {
        return;
    }
    let (g, n, f) = (g as u32, n as u32, f as u32);
    if n + f > 0 && is_stable(g, n as usize, f as usize) {
        out.insert(Type::new(g, n, f));
    }
}

/// Types referenced when solving `t`.
pub fn airy_dependencies(t: Type) -> BTreeSet<Type> {
    let (g, n, f) = (t.g as i64, t.n as i64, t.f as i64);
    // remaining coefficient sizes and the mode families in play
    let (a, b, pairs): (i64, i64, &[(i64, i64, i64, i64)]) = if n >= 1 {
        // JJ and ΓΓ
        (n - 1, f, &[(1, 0, 1, 0), (0, 1, 0, 1)])
    } else {
        // JΓ
        (0, f - 1, &[(1, 0, 0, 1)])
    };
    let mut out = BTreeSet::new();
    for &(xa, xb, ya, yb) in pairs {
        for h1 in 0..=g {
            for a1 in 0..=a {
                for b1 in 0..=b {
                    push_type(&mut out, h1, a1 + xa, b1 + xb);
                    push_type(&mut out, g - h1, a - a1 + ya, b - b1 + yb);
                }
            }
        }
    }
    for (da, db) in [(0, 0), (-1, 1), (1, -1), (1, 0), (0, 1)] {
        push_type(&mut out, g, a + da, b + db);
    }
    for (da, db) in [(2, 0), (1, 1), (0, 2)] {
        push_type(&mut out, g - 1, a + da, b + db);
    }
    out.remove(&t);
    out.retain(|u| u.chi() < t.chi());
    out
}

pub fn airy_closure(targets: &[Type], bosonic: bool) -> BTreeSet<Type> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<Type> = targets.to_vec();
    while let Some(t) = stack.pop() {
        if bosonic && t.f > 0 {
            continue;
        }
        if out.insert(t) {
            stack.extend(airy_dependencies(t));
        }
    }
    out
}

pub fn run_airy(c: &CurveData, chi_max: u32) -> Result<CorrTensor> {
    run_airy_with(c, chi_max, &AiryOptions { residual: true, ..AiryOptions::default() })
}

pub fn run_airy_with(c: &CurveData, chi_max: u32, opts: &AiryOptions) -> Result<CorrTensor> {
    let mut e = AiryEngine::new(c, chi_max, opts.bosonic)?;
    e.solve_all(opts)?;
    Ok(e.into_tensor())
}

/// The purely bosonic constraint system (ψ ignored, central term ℏ/8).
pub fn run_bosonic(c: &CurveData, chi_max: u32) -> Result<CorrTensor> {
    run_airy_with(c, chi_max, &AiryOptions { residual: true, bosonic: true, ..AiryOptions::default() })
}

/// The expansion coefficients of H²_i = L̃_{2i−4} and F²_i = G̃_{2i−3} in
/// normal-ordered mode products (indices in the ε = 3 labelling; the ε = 1
/// operators are the same tables with i shifted by one).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintCoeffs {
    /// C_i^{j,k|}
    pub c_bb: BTreeMap<(i64, i64, i64), Scalar>,
    /// C_i^{|j,k}
    pub c_ff: BTreeMap<(i64, i64, i64), Scalar>,
    /// C_i^{j|k}
    pub c_bf: BTreeMap<(i64, i64, i64), Scalar>,
    pub d: BTreeMap<i64, Scalar>,
    pub imax: i64,
    pub range: i64,
}

fn sgn(j: i64) -> i64 {
    if j.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn delta(a: i64, b: i64) -> i64 {
    (a == b) as i64
}

/// Sign convention for the single-ψ terms of C_i^{|j,k}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiSign {
    /// (−1)^j (k−i+2) ψ_{j,k−2i+4} − (−1)^k (j−i+2) ψ_{k,j−2i+4}
    AsPrinted,
    /// the signs carried by the annihilator: (−1)^k … − (−1)^j …
    Expanded,
}

/// The closed-form tables for 1 ≤ i ≤ imax and |j|, |k| ≤ range.
pub fn compute_coeffs(c: &CurveData, imax: i64, range: i64, psi_sign: PsiSign) -> ConstraintCoeffs {
    let phi = |a: i64, b: i64| c.phi_i(a, b);
    let psi = |a: i64, b: i64| c.psi_i(a, b);
    let over = |x: Scalar, d: i64| if d == 0 { Scalar::zero() } else { x.scale(&Rat::new(1, d)) };
    let mut out = ConstraintCoeffs { imax, range, ..ConstraintCoeffs::default() };
    for i in 1..=imax {
        let s = 2 * i - 4;
        for j in -range..=range {
            for k in -range..=range {
                let mut v = Scalar::from_int(sgn(j - 1) * delta(j + k, s));
                v += &over(phi(j - s, k), k).scale_int(sgn(j - 1));
                v += &over(phi(j, k - s), j).scale_int(sgn(k - 1));
                if i == 1 {
                    v += &over(&phi(1, j) * &phi(1, k), j * k);
                }
                if !v.is_zero() {
                    out.c_bb.insert((i, j, k), v);
                }

                let mut v = Scalar::frac(sgn(j) * (k - j) * delta(j + k, s), 2);
                if i == 1 {
                    v += &(&(&psi(2, j) * &psi(0, k)) - &(&psi(0, j) * &psi(2, k)));
                }
                let (sa, sb) = match psi_sign {
                    PsiSign::AsPrinted => (sgn(j), sgn(k)),
                    PsiSign::Expanded => (sgn(k), sgn(j)),
                };
                v += &psi(j, k - s).scale_int(sa * (k - i + 2));
                v -= &psi(k, j - s).scale_int(sb * (j - i + 2));
                if !v.is_zero() {
                    out.c_ff.insert((i, j, k), v);
                }

                let s1 = 2 * i - 3;
                let mut v = Scalar::from_int(sgn(k) * delta(j + k, s1));
                v += &over(phi(j, k - s1), j).scale_int(sgn(k));
                v -= &psi(k, j - s1).scale_int(sgn(j));
                if i == 1 {
                    v += &over(&phi(j, 1) * &psi(k, 0), j);
                }
                if !v.is_zero() {
                    out.c_bf.insert((i, j, k), v);
                }
            }
        }
        let mut d = Scalar::frac(delta(i, 2), 4);
        if i == 1 {
            d += &(&c.phi(1, 1) + &c.psi0(2)).scale(&Rat::new(1, 2));
        }
        out.d.insert(i, d);
    }
    out
}

impl ConstraintCoeffs {
    /// H²_i rebuilt from the tables (for ε = 3).
    pub fn h2(&self, c: &CurveData, i: i64) -> QuadOp {
        let mut o = QuadOp::zero();
        for k in 2..=c.trunc as i64 {
            o.add_lin(Mode::J(2 * i + k - 4), &c.tau_i(k).scale_int(sgn(k - 1)));
        }
        let half = Scalar::frac(1, 2);
        for (&(ii, j, k), v) in self.c_bb.range((i, i64::MIN, i64::MIN)..=(i, i64::MAX, i64::MAX)) {
            debug_assert_eq!(ii, i);
            o.add_normal(Mode::J(j), Mode::J(k), &(v * &half));
        }
        for (&(_, j, k), v) in self.c_ff.range((i, i64::MIN, i64::MIN)..=(i, i64::MAX, i64::MAX)) {
            o.add_normal(Mode::G(j), Mode::G(k), &(v * &half));
        }
        o.hbar = self.d.get(&i).cloned().unwrap_or_default();
        o
    }

    /// F²_i rebuilt from the tables (for ε = 3).
    pub fn f2(&self, c: &CurveData, i: i64) -> QuadOp {
        let mut o = QuadOp::zero();
        for k in 2..=c.trunc as i64 {
            o.add_lin(Mode::G(2 * i + k - 3), &c.tau_i(k).scale_int(sgn(k - 1)));
        }
        for (&(_, j, k), v) in self.c_bf.range((i, i64::MIN, i64::MIN)..=(i, i64::MAX, i64::MAX)) {
            o.add_normal(Mode::J(j), Mode::G(k), v);
        }
        o
    }
}

/// Terms on which two operators differ, restricted to modes with |index| ≤ window.
pub fn op_differences(a: &QuadOp, b: &QuadOp, window: i64) -> Vec<String> {
    let inw = |m: &Mode| m.index().abs() <= window;
    let mut out = vec![];
    if a.constant != b.constant {
        out.push(format!("constant: {} vs {}", a.constant, b.constant));
    }
    if a.hbar != b.hbar {
        out.push(format!("hbar: {} vs {}", a.hbar, b.hbar));
    }
    let keys: BTreeSet<Mode> = a.lin.keys().chain(b.lin.keys()).filter(|m| inw(m)).copied().collect();
    for m in keys {
        let (x, y) = (a.lin.get(&m).cloned().unwrap_or_default(), b.lin.get(&m).cloned().unwrap_or_default());
        if x != y {
            out.push(format!("{m:?}: {x} vs {y}"));
        }
    }
    let keys: BTreeSet<(Mode, Mode)> = a.quad.keys().chain(b.quad.keys()).filter(|(m, n)| inw(m) && inw(n)).copied().collect();
    for k in keys {
        let (x, y) = (a.quad.get(&k).cloned().unwrap_or_default(), b.quad.get(&k).cloned().unwrap_or_default());
        if x != y {
            out.push(format!("{k:?}: {x} vs {y}"));
        }
    }
    out
}

/// The m = 1 sector predicted from the bosonic free energy at zero
/// polarization, ε = 3:
/// F_{g,n|2}(I|2i,2j) = −2^{g−1}(F^{bos}_{g,n+2}(2i+1, 2j−1, I) − F^{bos}_{g,n+2}(2j+1, 2i−1, I)),
/// where any slot x^{−1} (from i = 0 or j = 0) contributes zero.
pub fn reduction_m1(bos: &CorrTensor, g: u32, i_set: &[u32], i: u32, j: u32) -> Scalar {
    let term = |a: u32, b: u32| -> Scalar {
        if b == 0 {
            return Scalar::zero();
        }
        let mut idx = vec![2 * a + 1, 2 * b - 1];
        idx.extend_from_slice(i_set);
        bos.get(g, &idx, &[])
    };
    let v = &term(i, j) - &term(j, i);
    // −2^{g−1}
    v.scale(&Rat::new(-(1i64 << g), 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::SymbolRing;
    use crate::svir::l_super;

    fn rnd_curve() -> CurveData {
        let ring = SymbolRing::new(vec![]).unwrap();
        let mut c = CurveData::with_tau("r", 3, &[(3, Scalar::one()), (4, Scalar::from_int(2)), (5, Scalar::frac(1, 3))], 20, ring).unwrap();
        c.phi.insert((1, 1), Scalar::frac(1, 2));
        c.phi.insert((1, 3), Scalar::from_int(2));
        c.phi.insert((2, 3), Scalar::from_int(5));
        c.psi0.insert(1, Scalar::frac(-1, 2));
        c.psi0.insert(2, Scalar::one());
        c.psi_a.insert((1, 3), Scalar::from_int(7));
        c.psi_a.insert((2, 4), Scalar::from_int(-1));
        c
    }

    #[test]
    fn airy_base_cases() {
        let t = run_airy(&CurveData::airy(20), 3).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.get(0, &[1, 1, 1], &[]), Scalar::from_int(-1));
        assert_eq!(t.get(0, &[1], &[2, 0]), Scalar::frac(-1, 2));
        assert_eq!(t.get(1, &[3], &[]), Scalar::frac(-1, 4));
    }

    #[test]
    fn genus_one_dilaton_constant() {
        // F_{1,1|0}(1) = −D_1/τ_3 when only τ_3, φ_11, ψ_02 are on
        let mut c = CurveData::airy(20);
        c.phi.insert((1, 1), Scalar::from_int(3));
        c.psi0.insert(2, Scalar::from_int(5));
        let t = run_airy(&c, 3).unwrap();
        assert_eq!(t.get(1, &[1], &[]), Scalar::from_int(-4));
    }

    #[test]
    fn matches_tr_on_polarized_curve() {
        let c = rnd_curve();
        let a = run_airy(&c, 5).unwrap();
        let b = crate::tr::run_tr(&c, 5).unwrap();
        assert!(a.first_difference(&b).is_none());
        assert!(a.len() > 20);
    }

    #[test]
    fn even_bosonic_never_produced() {
        let t = run_airy(&rnd_curve(), 5).unwrap();
        for (k, _) in t.entries() {
            assert!(k.bos.iter().all(|i| i % 2 == 1), "{k}");
            assert!(k.fer.iter().all(|j| j % 2 == 0), "{k}");
        }
    }

    #[test]
    fn bosonic_mode() {
        let b = run_bosonic(&CurveData::airy(20), 4).unwrap();
        assert_eq!(b.get(0, &[1, 1, 1], &[]), Scalar::from_int(-1));
        assert_eq!(b.get(1, &[3], &[]), Scalar::frac(-1, 8));
        assert!(b.entries().all(|(k, _)| k.fer.is_empty()));
        // the super free energy doubles per genus
        let s = run_airy(&CurveData::airy(20), 4).unwrap();
        for (k, v) in b.entries() {
            assert_eq!(s.get(k.g, &k.bos, &[]), v.scale(&Rat::Small(1 << k.g, 1)));
        }
    }

    #[test]
    fn reduction_second_sector() {
        let ring = SymbolRing::new(vec![]).unwrap();
        let c = CurveData::with_tau("d", 3, &[(2, Scalar::frac(-3, 7)), (3, Scalar::one()), (5, Scalar::frac(1, 3))], 20, ring).unwrap();
        let s = run_airy(&c, 5).unwrap();
        let b = run_bosonic(&c, 5).unwrap();
        for chi in 3..=5u32 {
            for t in types_at(chi).into_iter().filter(|t| t.f == 2) {
                let d = index_bound(3, chi);
                for bos in odd_multisets(t.n as usize, d) {
                    for f in even_subsets(2, d) {
                        let want = reduction_m1(&b, t.g, &bos, f[0] / 2, f[1] / 2);
                        assert_eq!(s.get(t.g, &bos, &f), want, "{t} {bos:?} {f:?}");
                    }
                }
            }
        }
        assert!(s.entries().all(|(k, _)| k.fer.len() <= 2));
    }

    #[test]
    fn tables_match_direct_expansion() {
        let c = rnd_curve();
        let s = Shift::from_curve(&c, 40);
        let t = compute_coeffs(&c, 4, 30, PsiSign::Expanded);
        let printed = compute_coeffs(&c, 4, 30, PsiSign::AsPrinted);
        let mut printed_differs = false;
        for i in 1..=4 {
            let h = l_super(i - 2, 40).shifted(&s).canonical();
            assert!(op_differences(&h, &t.h2(&c, i), 8).is_empty(), "H_{i}");
            let f = g_op(i - 2, 40).shifted(&s).canonical();
            assert!(op_differences(&f, &t.f2(&c, i), 8).is_empty(), "F_{i}");
            printed_differs |= !op_differences(&h, &printed.h2(&c, i), 8).is_empty();
        }
        assert!(printed_differs);
    }

    #[test]
    fn trivial_polarization_tables() {
        let t = compute_coeffs(&CurveData::airy(20), 3, 6, PsiSign::Expanded);
        for i in 1..=3 {
            for j in 0..=6 {
                for k in 0..=6 {
                    let g = |m: &BTreeMap<(i64, i64, i64), Scalar>, a, b| m.get(&(i, a, b)).cloned().unwrap_or_default();
                    let bb = if j >= 1 && k >= 1 { (i == 1 && j == 1 && k == 1) as i64 } else { 0 };
                    if j >= 1 && k >= 1 {
                        assert_eq!(g(&t.c_bb, -j, -k), Scalar::from_int(bb));
                    }
                    let ff = if i == 1 { (j == 2 && k == 0) as i64 - (j == 0 && k == 2) as i64 } else { 0 };
                    assert_eq!(g(&t.c_ff, -j, -k), Scalar::from_int(ff), "ff {i} {j} {k}");
                    if j >= 1 {
                        let bf = (i == 1 && j == 1 && k == 0) as i64;
                        assert_eq!(g(&t.c_bf, -j, -k), Scalar::from_int(bf));
                    }
                }
            }
        }
        assert_eq!(t.d[&2], Scalar::frac(1, 4));
        let mut c = CurveData::airy(20);
        c.phi.insert((1, 1), Scalar::from_int(3));
        c.psi0.insert(2, Scalar::from_int(7));
        assert_eq!(compute_coeffs(&c, 1, 2, PsiSign::Expanded).d[&1], Scalar::from_int(5));
    }

    #[test]
    fn residual_detects_wrong_entry() {
        let c = CurveData::airy(20);
        let mut e = AiryEngine::new(&c, 4, false).unwrap();
        e.solve_all(&AiryOptions::default()).unwrap();
        assert!(e.residuals(4).unwrap() > 0);
        e.tensor.set(0, &[1, 1, 1, 3], &[], Scalar::from_int(7)).unwrap();
        assert!(matches!(e.residuals(4), Err(Error::Residual(_))));
    }

    #[test]
    fn targeted_run_agrees() {
        let c = rnd_curve();
        let full = run_airy(&c, 5).unwrap();
        let t = Type::new(1, 1, 2);
        let part = run_airy_with(&c, 5, &AiryOptions { targets: Some(vec![t]), ..AiryOptions::default() }).unwrap();
        assert_eq!(full.of_type(t), part.of_type(t));
    }

    #[test]
    fn truncation_guard() {
        let c = CurveData::airy(5);
        assert!(matches!(AiryEngine::new(&c, 6, false), Err(Error::Truncation(_))));
        assert!(matches!(AiryEngine::new(&CurveData::airy(20), 2, false), Err(Error::Stability(_))));
    }
}
