//! The residue recursion. For every target the quadratic loop-equation
//! quantities Q̃ are assembled as series in the recursion variable z, one
//! series per assignment of external indices; the kernels then act as
//! extraction weights: F(l, …) = Res z^l/Δω · Q̃ and F̂(k, …) = Res η_k/Δω · Q̃.
//!
//! Dividing by Δω once gives a series S whose coefficient of z^{−l−1} is the
//! new entry with first index l, so a single assembly yields a whole column.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use crate::curve::{build_bases, CurveBases, CurveData};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{DiagMode, FormalSeries};
use crate::store::{
    even_subsets, index_bound, is_stable, odd_multisets, partition_sign_mask, sort_fermions, CorrKey, CorrTensor, Type,
};

/// Which formula produces a target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Route {
    /// Bosonic recursion (first bosonic slot is the kernel output).
    Bosonic,
    /// Fermionic recursion with zero-mode completion.
    Fermionic,
}

#[derive(Clone, Debug)]
pub struct TrOptions {
    /// Compute mixed types by both formulas and compare.
    pub both_routes: bool,
    /// Only compute these types and what they depend on.
    pub targets: Option<Vec<Type>>,
}

impl Default for TrOptions {
    fn default() -> Self {
        TrOptions { both_routes: true, targets: None }
    }
}

/// Stable types of level χ carrying at least one slot, in lexicographic order.
pub fn types_at(chi: u32) -> Vec<Type> {
    let mut v = Vec::new();
    for g in 0..=chi / 2 {
        for f in (0..=chi - 2 * g).step_by(2) {
            let n = chi - 2 * g - f;
            if n + f > 0 && is_stable(g, n as usize, f as usize) {
                v.push(Type::new(g, n, f));
            }
        }
    }
    v
}

fn push_lower(out: &mut BTreeSet<Type>, g: u32, n: u32, f: u32) {
    if n + f > 0 && is_stable(g, n as usize, f as usize) {
        out.insert(Type::new(g, n, f));
    }
}

/// Stable lower types read when computing `t` by `route`.
pub fn dependencies(t: Type, route: Route) -> BTreeSet<Type> {
    let mut out = BTreeSet::new();
    let (g, n, m) = (t.g, t.n, t.f / 2);
    match route {
        Route::Bosonic => {
            assert!(n >= 1);
            let n0 = n - 1;
            if g >= 1 {
                push_lower(&mut out, g - 1, n0 + 2, 2 * m);
                push_lower(&mut out, g - 1, n0, 2 * m + 2);
            }
            for g1 in 0..=g {
                for n1 in 0..=n0 {
                    for m1 in 0..=m {
                        push_lower(&mut out, g1, n1 + 1, 2 * m1);
                        push_lower(&mut out, g - g1, n0 - n1 + 1, 2 * (m - m1));
                    }
                    for m1 in 1..=m + 1 {
                        push_lower(&mut out, g1, n1, 2 * m1);
                        push_lower(&mut out, g - g1, n0 - n1, 2 * (m + 1 - m1));
                    }
                }
            }
        }
        Route::Fermionic => {
            assert!(m >= 1);
            if g >= 1 {
                push_lower(&mut out, g - 1, n + 1, 2 * m);
            }
            for g1 in 0..=g {
                for n1 in 0..=n {
                    for m1 in 0..m {
                        push_lower(&mut out, g1, n1 + 1, 2 * m1);
                        push_lower(&mut out, g - g1, n - n1, 2 * (m - m1));
                    }
                }
            }
        }
    }
    out.remove(&t);
    out
}

/// Route used in dependency-closure runs.
pub fn preferred_route(t: Type) -> Route {
    if t.f >= 2 {
        Route::Fermionic
    } else {
        Route::Bosonic
    }
}

/// All types needed to compute `targets` (inclusive), using `preferred_route`.
pub fn dependency_closure(targets: &[Type]) -> BTreeSet<Type> {
    let mut done = BTreeSet::new();
    let mut stack: Vec<Type> = targets.to_vec();
    while let Some(t) = stack.pop() {
        if !done.insert(t) {
            continue;
        }
        for d in dependencies(t, preferred_route(t)) {
            if !done.contains(&d) {
                stack.push(d);
            }
        }
    }
    done
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum SlotKind {
    Bos { flip: bool },
    Fer { flip: bool, derived: bool },
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct SlotKey {
    kind: SlotKind,
    g: u32,
    bos: Vec<u32>,
    fer: Vec<u32>,
}

type Slot = Option<Rc<FormalSeries>>;

/// Solver state: the curve, its bases, the growing tensor and a cache of
/// lower correlators evaluated with one slot at ±z.
pub struct TrEngine {
    epsilon: u8,
    bases: CurveBases,
    dxi: Vec<FormalSeries>,
    dxi_s: Vec<FormalSeries>,
    eta: Vec<FormalSeries>,
    inv_dw: FormalSeries,
    cap: i64,
    tensor: CorrTensor,
    done: BTreeSet<Type>,
    memo: HashMap<SlotKey, Slot>,
}

fn half() -> Scalar {
    Scalar::frac(1, 2)
}

impl TrEngine {
    pub fn new(c: &CurveData, chi_max: u32) -> Result<TrEngine> {
        c.check_trunc(chi_max)?;
        let bases = build_bases(c)?;
        let dxi_s = bases.dxi_minus.iter().map(|s| s.sigma()).collect();
        let dxi = bases.dxi_minus.clone();
        let eta = bases.eta_minus.clone();
        let inv_dw = bases.delta_omega.invert(c.trunc as i64)?;
        Ok(TrEngine {
            epsilon: c.epsilon,
            bases,
            dxi,
            dxi_s,
            eta,
            inv_dw,
            cap: c.epsilon as i64 - 3,
            tensor: CorrTensor::new(chi_max, Some(Arc::new(c.clone()))),
            done: BTreeSet::new(),
            memo: HashMap::new(),
        })
    }

    pub fn tensor(&self) -> &CorrTensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> CorrTensor {
        self.tensor
    }

    fn bound(&self, chi: u32) -> u32 {
        index_bound(self.epsilon, chi)
    }

    fn basis<'a>(&self, v: &'a [FormalSeries], i: u32) -> Result<&'a FormalSeries> {
        let range = self.bases.range;
        v.get(i as usize)
            .ok_or_else(|| Error::Truncation(format!("basis index {} beyond curve truncation {}", i, range)))
    }

    fn require(&self, t: Type) -> Result<()> {
        if self.done.contains(&t) {
            Ok(())
        } else {
            Err(Error::MissingDependency(format!("type {} not computed", t)))
        }
    }

    /// ω_{g,|J|+1|2m}(±z, J|K) with the other slots fixed to basis indices.
    /// `None` for ω_{0,1|0} (excluded) or an identically vanishing series.
    pub fn eval_bos(&mut self, g: u32, jsub: &[u32], ksub: &[u32], flip: bool) -> Result<Slot> {
        if ksub.len() % 2 == 1 || (g == 0 && jsub.is_empty() && ksub.is_empty()) {
            return Ok(None);
        }
        let (fer, sign) = match sort_fermions(ksub) {
            Some(x) => x,
            None => return Ok(None),
        };
        let mut bos = jsub.to_vec();
        bos.sort_unstable();
        let key = SlotKey { kind: SlotKind::Bos { flip }, g, bos, fer };
        let base = match self.memo.get(&key) {
            Some(s) => s.clone(),
            None => {
                let s = self.compute_bos(&key)?;
                self.memo.insert(key, s.clone());
                s
            }
        };
        Ok(match base {
            Some(s) if sign < 0 => Some(Rc::new(s.neg())),
            x => x,
        })
    }

    fn compute_bos(&self, key: &SlotKey) -> Result<Slot> {
        let flip = matches!(key.kind, SlotKind::Bos { flip: true });
        let (g, bos, fer) = (key.g, &key.bos, &key.fer);
        if g == 0 && bos.len() == 1 && fer.is_empty() {
            // ω_{0,2|0}(z, ·) paired against dξ_{−j}: j z^{j−1} dz
            let j = bos[0];
            let s = FormalSeries::monomial(Scalar::from_int(j as i64), j as i64 - 1, 1, false);
            return Ok(Some(Rc::new(if flip { s.sigma() } else { s })));
        }
        let t = Type::new(g, bos.len() as u32 + 1, fer.len() as u32);
        self.require(t)?;
        let used: u32 = bos.iter().sum::<u32>() + fer.iter().sum::<u32>();
        let top = self.bound(t.chi());
        if used >= top {
            return Ok(None);
        }
        let basis = if flip { &self.dxi_s } else { &self.dxi };
        let mut acc: Option<FormalSeries> = None;
        let mut idx = Vec::with_capacity(bos.len() + 1);
        for a in (1..=top - used).step_by(2) {
            idx.clear();
            idx.push(a);
            idx.extend_from_slice(bos);
            let v = self.tensor.get(g, &idx, fer);
            if v.is_zero() {
                continue;
            }
            let b = self.basis(basis, a)?;
            match acc.as_mut() {
                Some(s) => s.add_scaled(&v, b),
                None => acc = Some(b.scale(&v)),
            }
        }
        Ok(acc.filter(|s| !s.is_zero()).map(Rc::new))
    }

    /// ω_{g,|J||2m}(J|±z, K) with z in the first fermionic slot, optionally
    /// with D_z applied (for the flipped case this is D_z of f(σz)Θ).
    pub fn eval_fer(&mut self, g: u32, jsub: &[u32], ksub: &[u32], flip: bool, derived: bool) -> Result<Slot> {
        if ksub.len().is_multiple_of(2) {
            return Ok(None);
        }
        let (fer, sign) = match sort_fermions(ksub) {
            Some(x) => x,
            None => return Ok(None),
        };
        let mut bos = jsub.to_vec();
        bos.sort_unstable();
        let key = SlotKey { kind: SlotKind::Fer { flip, derived }, g, bos, fer };
        let base = match self.memo.get(&key) {
            Some(s) => s.clone(),
            None => {
                let s = if derived {
                    self.eval_fer(g, jsub, &key.fer, flip, false)?.map(|s| Rc::new(s.derive()))
                } else {
                    self.compute_fer(&key)?
                };
                self.memo.insert(key, s.clone());
                s
            }
        };
        Ok(match base {
            Some(s) if sign < 0 => Some(Rc::new(s.neg())),
            x => x,
        })
    }

    fn compute_fer(&self, key: &SlotKey) -> Result<Slot> {
        let flip = matches!(key.kind, SlotKind::Fer { flip: true, .. });
        let (g, bos, fer) = (key.g, &key.bos, &key.fer);
        let orient = |s: FormalSeries| if flip { s.sigma() } else { s };
        if g == 0 && bos.is_empty() && fer.len() == 1 {
            // ω_{0,0|2}(|z, ·) paired against η_{−k}: η_k(z), or ½η_0(z) for k = 0
            let k = fer[0];
            let s = if k == 0 {
                self.bases.eta_zero.scale(&half())
            } else {
                FormalSeries::monomial(Scalar::one(), k as i64 - 1, 0, true)
            };
            return Ok(Some(Rc::new(orient(s))));
        }
        let t = Type::new(g, bos.len() as u32, fer.len() as u32 + 1);
        self.require(t)?;
        let used: u32 = bos.iter().sum::<u32>() + fer.iter().sum::<u32>();
        let top = self.bound(t.chi());
        if used > top {
            return Ok(None);
        }
        let mut acc: Option<FormalSeries> = None;
        let mut idx = Vec::with_capacity(fer.len() + 1);
        for b in (0..=top - used).step_by(2) {
            if fer.contains(&b) {
                continue;
            }
            idx.clear();
            idx.push(b);
            idx.extend_from_slice(fer);
            let v = self.tensor.get(g, bos, &idx);
            if v.is_zero() {
                continue;
            }
            let e = orient(self.basis(&self.eta, b)?.clone());
            match acc.as_mut() {
                Some(s) => s.add_scaled(&v, &e),
                None => acc = Some(e.scale(&v)),
            }
        }
        Ok(acc.filter(|s| !s.is_zero()).map(Rc::new))
    }

    fn add_product(&self, acc: &mut FormalSeries, c: &Scalar, a: &Slot, b: &Slot) {
        if let (Some(a), Some(b)) = (a, b) {
            acc.add_scaled(c, &a.mul_capped(b, self.cap));
        }
    }

    /// Q̃^{BB} + Q̃^{FF} for the target ω_{g,|J|+1|2m}(z, J|K), as a dz² series.
    pub fn assemble_qbb_ff(&mut self, g: u32, jext: &[u32], kext: &[u32]) -> Result<FormalSeries> {
        let cap = self.cap;
        let mut acc = FormalSeries::zero(cap, 2, false);
        let nj = jext.len();
        let nk = kext.len();
        let one = Scalar::one();
        let mut j1 = Vec::new();
        let mut j2 = Vec::new();
        let mut k1 = Vec::new();
        let mut k2 = Vec::new();
        if g >= 1 {
            // ω_{g−1,n+2|2m}(z, σz, J|K)
            if g == 1 && nj == 0 && nk == 0 {
                acc.add_scaled(&one, &self.bases.omega02.eval_diag(DiagMode::Plain)?);
            } else {
                let t = Type::new(g - 1, nj as u32 + 2, nk as u32);
                if is_stable(t.g, t.n as usize, t.f as usize) {
                    let top = self.bound(t.chi());
                    let used: u32 = jext.iter().sum::<u32>() + kext.iter().sum::<u32>();
                    for a in (1..=top.saturating_sub(used)).step_by(2) {
                        let mut ja = vec![a];
                        ja.extend_from_slice(jext);
                        let inner = self.eval_bos(g - 1, &ja, kext, true)?;
                        let outer = Some(Rc::new(self.basis(&self.dxi, a)?.clone()));
                        self.add_product(&mut acc, &one, &outer, &inner);
                    }
                }
            }
            // −½(D_z ω(J|z,u,K) + D_u ω(J|u,z,K))|_{u=σz}
            if g == 1 && nj == 0 && nk == 0 {
                let mut d = self.bases.omega002.eval_diag(DiagMode::DerivedFirst)?;
                d = d.try_add(&self.bases.omega002.eval_diag(DiagMode::DerivedSecond)?)?;
                acc.add_scaled(&Scalar::frac(-1, 2), &d);
            } else {
                let t = Type::new(g - 1, nj as u32, nk as u32 + 2);
                if is_stable(t.g, t.n as usize, t.f as usize) {
                    let top = self.bound(t.chi());
                    let used: u32 = jext.iter().sum::<u32>() + kext.iter().sum::<u32>();
                    for a in (0..=top.saturating_sub(used)).step_by(2) {
                        let mut ka = vec![a];
                        ka.extend_from_slice(kext);
                        // Σ_b F(J|a,b,K) η_{−b} = −(z-first evaluation with K' = (a, K))
                        let minus = self.eval_fer(g - 1, jext, &ka, true, false)?;
                        let plus = self.eval_fer(g - 1, jext, &ka, false, false)?;
                        let e = self.basis(&self.eta, a)?.clone();
                        let de = Some(Rc::new(e.derive()));
                        let sde = Some(Rc::new(e.derive().sigma()));
                        self.add_product(&mut acc, &half(), &de, &minus);
                        self.add_product(&mut acc, &half(), &sde, &plus);
                    }
                }
            }
        }
        for g1 in 0..=g {
            let g2 = g - g1;
            for jm in 0..(1u32 << nj) {
                split(jext, jm, &mut j1, &mut j2);
                for km in 0..(1u32 << nk) {
                    let c1 = km.count_ones() as usize;
                    split(kext, km, &mut k1, &mut k2);
                    let rho = partition_sign_mask(km, nk);
                    if c1.is_multiple_of(2) {
                        // ω(z, J1|K1) ω(σz, J2|K2), neither factor ω_{0,1|0}
                        if g2 == 0 && j2.is_empty() && k2.is_empty() {
                            continue;
                        }
                        let a = self.eval_bos(g1, &j1, &k1, false)?;
                        if a.is_none() {
                            continue;
                        }
                        let b = self.eval_bos(g2, &j2, &k2, true)?;
                        self.add_product(&mut acc, &Scalar::from_int(rho as i64), &a, &b);
                    } else {
                        // ½ D ω(J1|z,K1) ω(J2|σz,K2) + ½ D ω(J1|σz,K1) ω(J2|z,K2)
                        let c = Scalar::frac(rho as i64, 2);
                        let a = self.eval_fer(g1, &j1, &k1, false, true)?;
                        let b = self.eval_fer(g2, &j2, &k2, true, false)?;
                        self.add_product(&mut acc, &c, &a, &b);
                        let a = self.eval_fer(g1, &j1, &k1, true, true)?;
                        let b = self.eval_fer(g2, &j2, &k2, false, false)?;
                        self.add_product(&mut acc, &c, &a, &b);
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Q̃^{FB} for the target ω_{g,|J||2m}(J|z, K), |K| = 2m − 1, as a dz·Θ series.
    pub fn assemble_qfb(&mut self, g: u32, jext: &[u32], kext: &[u32]) -> Result<FormalSeries> {
        let cap = self.cap;
        let mut acc = FormalSeries::zero(cap, 1, true);
        let nj = jext.len();
        let nk = kext.len();
        let one = Scalar::one();
        if g >= 1 {
            // ω_{g−1,n+1|2m}(z,J|σz,K) + ω_{g−1,n+1|2m}(σz,J|z,K)
            let t = Type::new(g - 1, nj as u32 + 1, nk as u32 + 1);
            let top = self.bound(t.chi());
            let used: u32 = jext.iter().sum::<u32>() + kext.iter().sum::<u32>();
            for a in (1..=top.saturating_sub(used)).step_by(2) {
                let mut ja = vec![a];
                ja.extend_from_slice(jext);
                let minus = self.eval_fer(g - 1, &ja, kext, true, false)?;
                let plus = self.eval_fer(g - 1, &ja, kext, false, false)?;
                let d = Some(Rc::new(self.basis(&self.dxi, a)?.clone()));
                let ds = Some(Rc::new(self.basis(&self.dxi_s, a)?.clone()));
                self.add_product(&mut acc, &one, &d, &minus);
                self.add_product(&mut acc, &one, &ds, &plus);
            }
        }
        let mut j1 = Vec::new();
        let mut j2 = Vec::new();
        let mut k1 = Vec::new();
        let mut k2 = Vec::new();
        for g1 in 0..=g {
            let g2 = g - g1;
            for jm in 0..(1u32 << nj) {
                split(jext, jm, &mut j1, &mut j2);
                for km in 0..(1u32 << nk) {
                    if km.count_ones() % 2 == 1 {
                        continue;
                    }
                    split(kext, km, &mut k1, &mut k2);
                    let rho = Scalar::from_int(partition_sign_mask(km, nk) as i64);
                    let a = self.eval_bos(g1, &j1, &k1, false)?;
                    let a_s = self.eval_bos(g1, &j1, &k1, true)?;
                    if a.is_none() && a_s.is_none() {
                        continue;
                    }
                    let b_s = self.eval_fer(g2, &j2, &k2, true, false)?;
                    let b = self.eval_fer(g2, &j2, &k2, false, false)?;
                    self.add_product(&mut acc, &rho, &a, &b_s);
                    self.add_product(&mut acc, &rho, &a_s, &b);
                }
            }
        }
        Ok(acc)
    }

    /// Q̃/Δω, whose coefficient of z^{−l−1} is the extracted entry.
    fn divide(&self, q: &FormalSeries) -> FormalSeries {
        q.mul_capped(&self.inv_dw, -2)
    }

    /// All entries of type `t` by the bosonic formula. Every assignment of the
    /// non-output slots is assembled, so entries with several distinct
    /// bosonic indices are produced more than once; the copies must agree.
    pub fn solve_bosonic(&mut self, t: Type) -> Result<BTreeMap<CorrKey, Scalar>> {
        let top = self.bound(t.chi());
        let mut out = BTreeMap::new();
        for kext in even_subsets(t.f as usize, top) {
            let ks: u32 = kext.iter().sum();
            for jext in odd_multisets(t.n as usize - 1, top.saturating_sub(ks + 1)) {
                let used = ks + jext.iter().sum::<u32>();
                if used + 1 > top {
                    continue;
                }
                let q = self.assemble_qbb_ff(t.g, &jext, &kext)?;
                let s = self.divide(&q);
                let lmax = top - used;
                check_beyond(&s, lmax, &t, &jext, &kext)?;
                for l in 1..=lmax {
                    let v = s.coeff(-(l as i64) - 1)?;
                    if l % 2 == 0 {
                        if !v.is_zero() {
                            return Err(Error::NonzeroEvenIndex(format!(
                                "F_{}({},{:?}|{:?}) = {}",
                                t.g, l, jext, kext, v
                            )));
                        }
                        continue;
                    }
                    let mut bos = vec![l];
                    bos.extend_from_slice(&jext);
                    record(&mut out, t.g, bos, kext.clone(), v)?;
                }
            }
        }
        Ok(out)
    }

    /// All entries of type `t` by the fermionic formula; entries whose first
    /// fermionic index would be the zero mode come from antisymmetry.
    pub fn solve_fermionic(&mut self, t: Type) -> Result<BTreeMap<CorrKey, Scalar>> {
        let top = self.bound(t.chi());
        let mut out = BTreeMap::new();
        for kext in even_subsets(t.f as usize - 1, top) {
            let ks: u32 = kext.iter().sum();
            for jext in odd_multisets(t.n as usize, top - ks) {
                let used = ks + jext.iter().sum::<u32>();
                let q = self.assemble_qfb(t.g, &jext, &kext)?;
                let s = self.divide(&q);
                let kmax = top.saturating_sub(used);
                check_beyond(&s, kmax.max(1), &t, &jext, &kext)?;
                for k in 1..=kmax {
                    let v = s.coeff(-(k as i64) - 1)?;
                    if k % 2 == 1 {
                        if !v.is_zero() {
                            return Err(Error::NonzeroOddIndex(format!(
                                "F_{}({:?}|{},{:?}) = {}",
                                t.g, jext, k, kext, v
                            )));
                        }
                        continue;
                    }
                    let mut fer = vec![k];
                    fer.extend_from_slice(&kext);
                    record(&mut out, t.g, jext.clone(), fer, v)?;
                }
            }
        }
        Ok(out)
    }

    fn commit(&mut self, t: Type, vals: BTreeMap<CorrKey, Scalar>) {
        for (k, v) in vals {
            self.tensor.insert_canonical(k, v);
        }
        self.done.insert(t);
    }

    /// Compute one type from already computed lower types.
    pub fn solve_type(&mut self, t: Type, both: bool) -> Result<()> {
        let routes: Vec<Route> = if both {
            let mut r = Vec::new();
            if t.n >= 1 {
                r.push(Route::Bosonic);
            }
            if t.f >= 2 {
                r.push(Route::Fermionic);
            }
            r
        } else {
            vec![preferred_route(t)]
        };
        let mut first: Option<BTreeMap<CorrKey, Scalar>> = None;
        for r in routes {
            let vals = match r {
                Route::Bosonic => self.solve_bosonic(t)?,
                Route::Fermionic => self.solve_fermionic(t)?,
            };
            match &first {
                None => first = Some(vals),
                Some(a) => compare_routes(a, &vals)?,
            }
        }
        self.commit(t, first.unwrap_or_default());
        Ok(())
    }
}

fn split(v: &[u32], mask: u32, a: &mut Vec<u32>, b: &mut Vec<u32>) {
    a.clear();
    b.clear();
    for (i, &x) in v.iter().enumerate() {
        if mask >> i & 1 == 1 {
            a.push(x);
        } else {
            b.push(x);
        }
    }
}

/// Coefficients of S with first index above the total-degree bound must vanish.
fn check_beyond(s: &FormalSeries, lmax: u32, t: &Type, jext: &[u32], kext: &[u32]) -> Result<()> {
    for (e, c) in s.iter() {
        if e < -(lmax as i64) - 1 && !c.is_zero() {
            return Err(Error::CapExceeded(format!(
                "type {} externals {:?}|{:?}: index {} above bound {}",
                t,
                jext,
                kext,
                -e - 1,
                lmax
            )));
        }
    }
    Ok(())
}

fn record(out: &mut BTreeMap<CorrKey, Scalar>, g: u32, mut bos: Vec<u32>, fer: Vec<u32>, v: Scalar) -> Result<()> {
    bos.sort_unstable();
    let (fer, sign) = match sort_fermions(&fer) {
        Some(x) => x,
        None => {
            if v.is_zero() {
                return Ok(());
            }
            return Err(Error::SymmetryViolation(format!(
                "F_{}({:?}|{:?}) = {} with a repeated fermionic index",
                g, bos, fer, v
            )));
        }
    };
    let v = if sign < 0 { -v } else { v };
    let key = CorrKey::new(g, bos, fer);
    if let Some(old) = out.get(&key) {
        if *old != v {
            return Err(Error::SymmetryViolation(format!("{}: {} vs {}", key, old, v)));
        }
        return Ok(());
    }
    out.insert(key, v);
    Ok(())
}

fn compare_routes(a: &BTreeMap<CorrKey, Scalar>, b: &BTreeMap<CorrKey, Scalar>) -> Result<()> {
    let zero = Scalar::zero();
    for k in a.keys().chain(b.keys()) {
        let x = a.get(k).unwrap_or(&zero);
        let y = b.get(k).unwrap_or(&zero);
        if x != y {
            return Err(Error::BothRoutesDisagree(format!("{}: bosonic {} vs fermionic {}", k, x, y)));
        }
    }
    Ok(())
}

/// All F_{g,n|2m} with 3 ≤ χ ≤ `chi_max` by the residue recursion.
pub fn run_tr(c: &CurveData, chi_max: u32) -> Result<CorrTensor> {
    run_tr_with(c, chi_max, &TrOptions::default())
}

pub fn run_tr_with(c: &CurveData, chi_max: u32, opts: &TrOptions) -> Result<CorrTensor> {
    let mut e = TrEngine::new(c, chi_max)?;
    let wanted = opts.targets.as_ref().map(|t| dependency_closure(t));
    for chi in 3..=chi_max {
        for t in types_at(chi) {
            match &wanted {
                Some(w) if !w.contains(&t) => continue,
                Some(_) => e.solve_type(t, false)?,
                None => e.solve_type(t, opts.both_routes)?,
            }
        }
    }
    Ok(e.into_tensor())
}
