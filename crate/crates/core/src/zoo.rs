//! Built-in example curves: the Airy and Bessel curves, the φ₁₁ deformation,
//! the super JT dilaton shift, the two NS components and the Ramond curve
//! of supereigenvalue models, and seeded random curves.
//!
//! Each generator expands the defining forms as truncated series over the
//! symbol ring and reads the parameters off with `fit_parameters`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{build_bases, dxi_plus, eta_plus, fit_parameters, pairing_b, pairing_f, raw_forms, CurveData, RawForms};
use crate::error::{Error, Result};
use crate::scalar::{Rat, Scalar, SymbolDef, SymbolRing};
use crate::series::{BiSeries, FormalSeries};

pub const ZOO_NAMES: [&str; 8] = ["airy", "bessel", "phi11", "super_jt", "ns_plus", "ns_minus", "ramond", "random"];

#[derive(Clone, Debug, PartialEq)]
pub struct ZooSpec {
    pub name: String,
    /// Coefficients of M(x), constant term first (NS and Ramond only).
    pub m_coeffs: Vec<Rat>,
    pub trunc: u32,
    /// `t` for phi11; `seed` and `epsilon` for random.
    pub params: BTreeMap<String, Scalar>,
}

impl ZooSpec {
    pub fn new(name: &str, trunc: u32) -> ZooSpec {
        ZooSpec { name: name.to_string(), m_coeffs: vec![Rat::one()], trunc, params: BTreeMap::new() }
    }

    pub fn with_param(mut self, k: &str, v: Scalar) -> ZooSpec {
        self.params.insert(k.to_string(), v);
        self
    }

    pub fn with_m(mut self, m: &[Rat]) -> ZooSpec {
        self.m_coeffs = m.to_vec();
        self
    }

    fn param(&self, k: &str) -> Option<&Scalar> {
        self.params.get(k)
    }

    fn int_param(&self, k: &str, default: i64) -> Result<i64> {
        match self.param(k) {
            None => Ok(default),
            Some(v) => match v.as_rat() {
                Some(Rat::Small(n, 1)) => Ok(n),
                _ => Err(Error::InvalidCurve(format!("parameter {k} must be an integer, got {v}"))),
            },
        }
    }

    pub fn epsilon(&self) -> Result<u8> {
        match self.name.as_str() {
            "bessel" | "super_jt" => Ok(1),
            "random" => match self.int_param("epsilon", 3)? {
                1 => Ok(1),
                3 => Ok(3),
                e => Err(Error::InvalidCurve(format!("epsilon must be 1 or 3, got {e}"))),
            },
            n if ZOO_NAMES.contains(&n) => Ok(3),
            n => Err(Error::UnknownCurve(n.to_string())),
        }
    }
}

/// Symbols a zoo curve needs.
pub fn zoo_ring(name: &str) -> Result<Arc<SymbolRing>> {
    match name {
        "ns_minus" => SymbolRing::new(vec![SymbolDef::quadratic("im", -1)]),
        "ramond" => SymbolRing::new(vec![SymbolDef::quadratic("sqrt2", 2)]),
        "super_jt" => SymbolRing::new(vec![SymbolDef::quadratic("sqrt2", 2), SymbolDef::free("pi2")]),
        n if ZOO_NAMES.contains(&n) => SymbolRing::new(vec![]),
        n => Err(Error::UnknownCurve(n.to_string())),
    }
}

// --- univariate helpers, all series in z with dz weight 0 ---

fn series(terms: &[(i64, Scalar)], n: i64) -> FormalSeries {
    FormalSeries::from_terms(terms, n, 0, false)
}

/// (1 + c z²)^p up to z^n.
fn binomial(p: Rat, c: &Scalar, n: i64) -> FormalSeries {
    let mut terms = vec![(0, Scalar::one())];
    let mut coef = Rat::one();
    let mut cp = Scalar::one();
    for k in 1..=n / 2 {
        coef = coef.mul(&p.add(&Rat::new(1 - k, 1))).mul(&Rat::new(1, k));
        cp = &cp * c;
        terms.push((2 * k, cp.scale(&coef)));
    }
    series(&terms, n)
}

fn poly_at(m: &[Rat], x: &FormalSeries, n: i64) -> FormalSeries {
    let mut acc = series(&[], n);
    for c in m.iter().rev() {
        acc = acc.mul(x).with_trunc(n);
        acc = acc.try_add(&series(&[(0, Scalar::from_rat(c.clone()))], n)).expect("same tags");
    }
    acc
}

fn one_form(f: &FormalSeries, n: i64) -> FormalSeries {
    let terms: Vec<(i64, Scalar)> = f.iter().map(|(k, c)| (k, c.clone())).collect();
    FormalSeries::from_terms(&terms, n, 1, false)
}

fn lin(a: i64, b: i64, deg: i64) -> BiSeries {
    let mut r = BiSeries::zero(deg);
    r.set(1, 0, Scalar::from_int(a));
    r.set(0, 1, Scalar::from_int(b));
    r
}

/// (u(z1) − u(z2))/(z1 − z2), u(z1)·u(z2) and u'(z1)·u'(z2).
struct UData {
    u1: BiSeries,
    u2: BiSeries,
    q: BiSeries,
    dd: BiSeries,
}

fn udata(u: &FormalSeries, deg: i64) -> Result<UData> {
    let u1 = BiSeries::embed(u, true, deg + 1)?;
    let u2 = BiSeries::embed(u, false, deg + 1)?;
    let q = u1.sub(&u2).div_by_diff()?;
    let du = u.derive();
    let dd = BiSeries::embed(&du, true, deg)?.mul(&BiSeries::embed(&du, false, deg)?);
    Ok(UData { u1: u1.truncate(deg), u2: u2.truncate(deg), q: q.truncate(deg), dd })
}

fn ns_forms(sign: i64, m: &[Rat], n: i64, ring: &Arc<SymbolRing>) -> Result<RawForms> {
    let deg = 2 * n + 2;
    let len = deg + 2;
    // √(±1 + z²/4)
    let root = if sign > 0 {
        binomial(Rat::new(1, 2), &Scalar::frac(1, 4), len)
    } else {
        let im = Scalar::symbol(ring, "im")?;
        binomial(Rat::new(1, 2), &Scalar::frac(-1, 4), len).scale(&im)
    };
    let x = series(&[(0, Scalar::from_int(sign)), (2, Scalar::frac(1, 2))], len);
    let z = series(&[(1, Scalar::one())], len);
    let u = x.try_add(&z.mul(&root).with_trunc(len))?;
    let f = poly_at(m, &x, len).mul(&root).mul(&series(&[(2, Scalar::frac(-1, 2))], len));
    let omega01 = one_form(&f.with_trunc(n), n);
    let d = udata(&u, deg)?;
    let k = d.dd.mul(&d.q.invert()?.mul(&d.q.invert()?));
    let omega002_num = lin(1, 1, deg).scale(&Scalar::frac(-1, 2)).mul(&k);
    Ok(RawForms { omega01, omega02_num: k, omega002_num })
}

fn ramond_forms(m: &[Rat], n: i64, ring: &Arc<SymbolRing>) -> Result<RawForms> {
    let deg = 2 * n + 2;
    let len = deg + 2;
    let s2 = Scalar::symbol(ring, "sqrt2")?;
    // u = z (2 + z²)^{−1/2} = z · (√2/2) (1 + z²/2)^{−1/2}
    let v = binomial(Rat::new(-1, 2), &Scalar::frac(1, 2), len).scale(&s2.scale(&Rat::new(1, 2)));
    let u = v.shift(1).with_trunc(len);
    let x = series(&[(0, Scalar::one()), (2, Scalar::frac(1, 2))], len);
    let f = poly_at(m, &x, len).mul(&u).shift(1);
    let omega01 = one_form(&f.with_trunc(n), n);
    let d = udata(&u, deg)?;
    let qi = d.q.invert()?;
    let omega02_num = d.dd.mul(&qi.mul(&qi));
    // (z1 − z2) z1 z2 ω_{0,0|2}/(Θ1Θ2) = −(u1 + u2)(1 − u1 u2)/(2q): the
    // factors z1 z2/(u1 u2) and (1 + z²/2)^{−1/2} combine to 2.
    let one = BiSeries::constant(Scalar::one(), deg);
    let omega002_num = d.u1.add(&d.u2).mul(&one.sub(&d.u1.mul(&d.u2))).mul(&qi).scale(&Scalar::frac(-1, 2));
    Ok(RawForms { omega01, omega02_num, omega002_num })
}

/// Raw forms with zero polarization and the given one-form.
fn unpolarized(omega01: FormalSeries, n: i64) -> RawForms {
    let deg = 2 * n + 2;
    RawForms {
        omega01,
        omega02_num: BiSeries::constant(Scalar::one(), deg),
        omega002_num: lin(1, 1, deg).scale(&Scalar::frac(-1, 2)),
    }
}

/// The defining forms of a zoo curve, expanded directly.
pub fn zoo_forms(s: &ZooSpec, ring: &Arc<SymbolRing>) -> Result<RawForms> {
    let n = s.trunc as i64;
    if s.trunc < 3 {
        return Err(Error::Truncation(format!("zoo curves need trunc >= 3, got {}", s.trunc)));
    }
    if matches!(s.name.as_str(), "ns_plus" | "ns_minus" | "ramond") && s.m_coeffs.iter().all(|c| c.is_zero()) {
        return Err(Error::InvalidCurve("M must be nonzero".into()));
    }
    let mono = |k: i64, c: Scalar| FormalSeries::from_terms(&[(k, c)], n, 1, false);
    match s.name.as_str() {
        "airy" => Ok(unpolarized(mono(2, Scalar::one()), n)),
        "bessel" => Ok(unpolarized(mono(0, Scalar::one()), n)),
        "phi11" => {
            let t = s.param("t").cloned().unwrap_or_else(Scalar::one);
            let mut r = unpolarized(mono(2, Scalar::one()), n);
            let d = lin(1, -1, 2 * n + 2);
            r.omega02_num = r.omega02_num.add(&d.mul(&d).scale(&t));
            Ok(r)
        }
        "super_jt" => {
            // √2 cos(2πz) = √2 Σ (−1)^k (2π)^{2k} z^{2k}/(2k)!
            let s2 = Scalar::symbol(ring, "sqrt2")?;
            let pi2 = Scalar::symbol(ring, "pi2")?;
            let mut terms = Vec::new();
            let mut fact = Rat::one();
            let mut p = s2;
            for k in 0..=n / 2 {
                if k > 0 {
                    fact = fact.mul(&Rat::new(1, (2 * k - 1) * 2 * k));
                    p = -(&p * &pi2);
                }
                terms.push((2 * k, p.scale(&fact)));
            }
            Ok(unpolarized(FormalSeries::from_terms(&terms, n, 1, false), n))
        }
        "ns_plus" => ns_forms(1, &s.m_coeffs, n, ring),
        "ns_minus" => ns_forms(-1, &s.m_coeffs, n, ring),
        "ramond" => ramond_forms(&s.m_coeffs, n, ring),
        "random" => Ok(raw_forms(&random_curve(s.int_param("seed", 0)? as u64, s.epsilon()?, s.trunc)?, 2 * n + 2)),
        other => Err(Error::UnknownCurve(other.to_string())),
    }
}

pub fn zoo_build(s: &ZooSpec) -> Result<CurveData> {
    let ring = zoo_ring(&s.name)?;
    if s.name == "random" {
        return random_curve(s.int_param("seed", 0)? as u64, s.epsilon()?, s.trunc);
    }
    let raw = zoo_forms(s, &ring)?;
    fit_parameters(&raw, s.epsilon()?, &s.name, s.trunc, ring)
}

/// Shorthand for the default spec of a named curve.
pub fn zoo_curve(name: &str, trunc: u32) -> Result<CurveData> {
    zoo_build(&ZooSpec::new(name, trunc))
}

fn small_rat(rng: &mut ChaCha8Rng) -> Rat {
    let mut n = 0;
    while n == 0 {
        n = rng.gen_range(-4i64..=4);
    }
    Rat::new(n, rng.gen_range(1i64..=3))
}

/// A sparse random curve with rational parameters; deterministic in `seed`.
pub fn random_curve(seed: u64, epsilon: u8, trunc: u32) -> Result<CurveData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = trunc.min(7);
    let mut tau = vec![(epsilon as u32, Scalar::from_rat(small_rat(&mut rng)))];
    for _ in 0..2 {
        let l = rng.gen_range(2..=top);
        if l != 3 || epsilon == 1 {
            tau.push((l, Scalar::from_rat(small_rat(&mut rng))));
        }
    }
    tau.sort_by_key(|t| t.0);
    tau.dedup_by_key(|t| t.0);
    let mut c = CurveData::with_tau(&format!("random{seed}"), epsilon, &tau, trunc, SymbolRing::new(vec![])?)?;
    for _ in 0..2 {
        let k = rng.gen_range(1..=top.min(5));
        let l = rng.gen_range(k..=top.min(5));
        c.phi.insert((k, l), Scalar::from_rat(small_rat(&mut rng)));
    }
    for _ in 0..rng.gen_range(1..=2) {
        c.psi0.insert(rng.gen_range(1..=top.min(4)), Scalar::from_rat(small_rat(&mut rng)));
    }
    for _ in 0..rng.gen_range(1..=2) {
        let a = rng.gen_range(1..top.min(5));
        let b = rng.gen_range(a + 1..=top.min(5));
        c.psi_a.insert((a, b), Scalar::from_rat(small_rat(&mut rng)));
    }
    c.validate()?;
    Ok(c)
}

// --- identities ---

/// σ-sum identities, each checked after clearing denominators:
/// * ω₀₁(z) + ω₀₁(σz) = 0;
/// * (z1+z2)² N(z1,z2) − (z1−z2)² N(−z1,z2) = 4 z1 z2, with N the
///   numerator of ω₀₂, i.e. ω₀₂ + σ₁ω₀₂ = dx1dx2/(x1−x2)²;
/// * (z1+z2) P(z1,z2) + (z1−z2) P(−z1,z2) = −2 z1 z2, with P the
///   numerator of ω₀₀₂, i.e. ω₀₀₂ + σ₁ω₀₀₂ = −Θ1Θ2/(x1−x2);
/// * the Ramond variant with right-hand side −z1 z2 (2 + (z1²+z2²)/2)/√(x1 x2).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZooReport {
    pub checks: Vec<(String, bool)>,
    /// Total degree to which the bivariate identities were checked.
    pub degree: i64,
}

impl ZooReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    fn push(&mut self, name: &str, ok: bool) {
        self.checks.push((name.to_string(), ok));
    }
}

pub fn omega01_identity(raw: &RawForms) -> bool {
    raw.omega01.try_add(&raw.omega01.sigma()).is_ok_and(|s| s.is_zero())
}

pub fn omega02_identity(raw: &RawForms, deg: i64) -> bool {
    let n = raw.omega02_num.truncate(deg);
    let p = lin(1, 1, deg);
    let m = lin(1, -1, deg);
    let lhs = p.mul(&p).mul(&n).sub(&m.mul(&m).mul(&n.sigma_first()));
    let mut rhs = BiSeries::zero(deg);
    rhs.set(1, 1, Scalar::from_int(4));
    lhs.sub(&rhs).is_zero()
}

fn omega002_lhs(raw: &RawForms, deg: i64) -> BiSeries {
    let p = raw.omega002_num.truncate(deg);
    lin(1, 1, deg).mul(&p).add(&lin(1, -1, deg).mul(&p.sigma_first()))
}

pub fn omega002_ns_identity(raw: &RawForms, deg: i64) -> bool {
    let mut rhs = BiSeries::zero(deg);
    rhs.set(1, 1, Scalar::from_int(-2));
    omega002_lhs(raw, deg).sub(&rhs).is_zero()
}

pub fn omega002_ramond_identity(raw: &RawForms, deg: i64) -> bool {
    let s = binomial(Rat::new(-1, 2), &Scalar::frac(1, 2), deg);
    let ss = BiSeries::embed(&s, true, deg).unwrap().mul(&BiSeries::embed(&s, false, deg).unwrap());
    let mut w = BiSeries::zero(deg);
    w.set(1, 1, Scalar::from_int(-2));
    w.set(3, 1, Scalar::frac(-1, 2));
    w.set(1, 3, Scalar::frac(-1, 2));
    omega002_lhs(raw, deg).sub(&w.mul(&ss)).is_zero()
}

pub fn pairings_ok(c: &CurveData, kmax: i64) -> bool {
    let Ok(b) = build_bases(c) else { return false };
    let kmax = kmax.min(b.dxi_minus.len() as i64 - 1).min(b.eta_minus.len() as i64 - 1);
    let dxi = |k: i64| if k > 0 { dxi_plus(k as u32) } else { b.dxi_minus[(-k) as usize].clone() };
    let eta = |k: i64| match k {
        k if k > 0 => eta_plus(k as u32),
        0 => b.eta_zero.clone(),
        k => b.eta_minus[(-k) as usize].clone(),
    };
    for k in -kmax..=kmax {
        for l in -kmax..=kmax {
            if k != 0 && l != 0 {
                let want = if k + l == 0 { Scalar::frac(1, k) } else { Scalar::zero() };
                if pairing_b(&dxi(k), &dxi(l)).ok() != Some(want) {
                    return false;
                }
            }
            let want = if k + l == 0 { Scalar::one() } else { Scalar::zero() };
            if pairing_f(&eta(k), &eta(l)).ok() != Some(want) {
                return false;
            }
        }
    }
    true
}

/// Pairing normalizations, the σ-sum identities on the directly expanded
/// forms and on the forms rebuilt from the fitted parameters, and agreement
/// of the two to truncation.
pub fn zoo_validate(c: &CurveData, s: &ZooSpec) -> Result<ZooReport> {
    let n = s.trunc as i64;
    let deg = n;
    let mut rep = ZooReport { degree: deg, ..ZooReport::default() };
    rep.push("pairing", pairings_ok(c, n.min(6)));
    let direct = zoo_forms(s, &c.ring)?;
    let rebuilt = raw_forms(c, 2 * n + 2);
    for (tag, raw) in [("direct", &direct), ("rebuilt", &rebuilt)] {
        rep.push(&format!("{tag}: omega01 + sigma = 0"), omega01_identity(raw));
        if s.name != "random" {
            rep.push(&format!("{tag}: omega02 sigma-sum"), omega02_identity(raw, deg));
            if s.name == "ramond" {
                rep.push(&format!("{tag}: omega002 sigma-sum (Ramond)"), omega002_ramond_identity(raw, deg));
            } else {
                rep.push(&format!("{tag}: omega002 sigma-sum"), omega002_ns_identity(raw, deg));
            }
        }
    }
    rep.push("omega01 rebuilt", direct.omega01.agrees_with(&rebuilt.omega01));
    rep.push("omega02 rebuilt", direct.omega02_num.truncate(deg + 1) == rebuilt.omega02_num.truncate(deg + 1));
    rep.push("omega002 rebuilt", direct.omega002_num.truncate(deg + 1) == rebuilt.omega002_num.truncate(deg + 1));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_curves() {
        let a = zoo_curve("airy", 10).unwrap();
        assert_eq!(a, CurveData { name: "airy".into(), ..CurveData::airy(10) });
        let b = zoo_curve("bessel", 10).unwrap();
        assert_eq!(b.epsilon, 1);
        assert_eq!(b.tau, [(1u32, Scalar::one())].into_iter().collect());
        let p = zoo_build(&ZooSpec::new("phi11", 10).with_param("t", Scalar::frac(2, 3))).unwrap();
        assert_eq!(p.phi, [((1u32, 1u32), Scalar::frac(2, 3))].into_iter().collect());
        assert!(p.psi0.is_empty() && p.psi_a.is_empty());
    }

    #[test]
    fn super_jt_taylor() {
        let c = zoo_curve("super_jt", 9).unwrap();
        let s2 = Scalar::symbol(&c.ring, "sqrt2").unwrap();
        let pi2 = Scalar::symbol(&c.ring, "pi2").unwrap();
        assert_eq!(c.tau(1), s2);
        assert_eq!(c.tau(3), -(&s2 * &pi2).scale(&Rat::new(1, 2)));
        assert_eq!(c.tau(5), (&s2 * &pi2.pow(2)).scale(&Rat::new(1, 24)));
        assert_eq!(c.tau(7), -(&s2 * &pi2.pow(3)).scale(&Rat::new(1, 720)));
        assert!(c.tau(2).is_zero() && c.phi.is_empty());
    }

    #[test]
    fn ns_plus_leading_data() {
        let c = zoo_curve("ns_plus", 8).unwrap();
        // −½ z² √(1 + z²/4) dz
        assert_eq!(c.tau(3), Scalar::frac(-1, 2));
        assert_eq!(c.tau(5), Scalar::frac(-1, 16));
        assert!(c.tau(4).is_zero());
        assert!(!c.phi.is_empty());
        let rep = zoo_validate(&c, &ZooSpec::new("ns_plus", 8)).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn ns_components_related() {
        // u_−(z) = −u_+(−iz)
        let p = zoo_curve("ns_plus", 8).unwrap();
        let m = zoo_curve("ns_minus", 8).unwrap();
        let mi = -Scalar::symbol(&m.ring, "im").unwrap();
        for k in 1..=8 {
            for l in k..=8 {
                assert_eq!(m.phi(k, l), &mi.pow(k + l) * &p.phi(k, l), "phi {k} {l}");
            }
        }
        for a in 0..=8 {
            for b in 0..=8 {
                assert_eq!(m.r(a, b), &mi.pow(a + b) * &p.r(a, b), "r {a} {b}");
            }
        }
    }

    #[test]
    fn ramond_data() {
        let c = zoo_curve("ramond", 8).unwrap();
        let s2 = Scalar::symbol(&c.ring, "sqrt2").unwrap();
        assert_eq!(c.tau(3), s2.scale(&Rat::new(1, 2)));
        assert!(c.phi.keys().all(|&(k, l)| (k + l) % 2 == 0));
        let rep = zoo_validate(&c, &ZooSpec::new("ramond", 8)).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        // the NS identity must not hold for Ramond data
        assert!(!omega002_ns_identity(&raw_forms(&c, 18), 8));
    }

    #[test]
    fn trivially_satisfied() {
        for name in ["airy", "bessel", "phi11", "super_jt"] {
            let s = ZooSpec::new(name, 8);
            let rep = zoo_validate(&zoo_build(&s).unwrap(), &s).unwrap();
            assert!(rep.all_pass(), "{name} {rep:?}");
        }
    }

    #[test]
    fn random_curves_deterministic() {
        let a = random_curve(7, 3, 12).unwrap();
        assert_eq!(a, random_curve(7, 3, 12).unwrap());
        assert_ne!(a, random_curve(8, 3, 12).unwrap());
        for seed in 0..20 {
            let c = random_curve(seed, 1, 12).unwrap();
            assert!(!c.tau(1).is_zero());
            let c = random_curve(seed, 3, 12).unwrap();
            assert!(c.tau(1).is_zero() && !c.tau(3).is_zero());
            assert!(pairings_ok(&c, 4));
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(zoo_curve("kdv", 10), Err(Error::UnknownCurve(_))));
        let s = ZooSpec::new("ramond", 10).with_m(&[Rat::zero()]);
        assert!(matches!(zoo_build(&s), Err(Error::InvalidCurve(_))));
    }
}
