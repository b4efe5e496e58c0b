//! Local super spectral curves: parameters (ε, τ, φ, ψ), the basis series
//! dξ_{±l}, η_0, η_{±l}, the three defining forms, the pairings Ω^B and Ω^F,
//! and extraction of parameters from raw form data.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Rat, Scalar, SymbolRing};
use crate::series::{BiForm, BiKind, BiSeries, FormalSeries};
use crate::store::index_bound;

#[derive(Clone, Debug, PartialEq)]
pub struct CurveData {
    pub name: String,
    /// 3 for regular curves (τ_1 = 0), 1 for irregular ones.
    pub epsilon: u8,
    pub tau: BTreeMap<u32, Scalar>,
    /// Upper triangle φ_{kl}, k ≤ l.
    pub phi: BTreeMap<(u32, u32), Scalar>,
    /// Zero-mode parameters ψ_{0k}, k ≥ 1.
    pub psi0: BTreeMap<u32, Scalar>,
    /// Free part ψ_{kl}, 1 ≤ k < l.
    pub psi_a: BTreeMap<(u32, u32), Scalar>,
    /// Parameters with an index above `trunc` are unknown (treated as dropped).
    pub trunc: u32,
    pub ring: Arc<SymbolRing>,
}

fn nz(m: &BTreeMap<u32, Scalar>, k: u32) -> Scalar {
    m.get(&k).cloned().unwrap_or_default()
}

impl CurveData {
    /// A curve with the given dilaton shift and zero polarization.
    pub fn with_tau(name: &str, epsilon: u8, tau: &[(u32, Scalar)], trunc: u32, ring: Arc<SymbolRing>) -> Result<CurveData> {
        let c = CurveData {
            name: name.to_string(),
            epsilon,
            tau: tau.iter().filter(|&(_, v)| !v.is_zero()).cloned().collect(),
            phi: BTreeMap::new(),
            psi0: BTreeMap::new(),
            psi_a: BTreeMap::new(),
            trunc,
            ring,
        };
        c.validate()?;
        Ok(c)
    }

    /// The Airy curve ω_{0,1|0} = z² dz with zero polarization.
    pub fn airy(trunc: u32) -> CurveData {
        CurveData::with_tau("airy", 3, &[(3, Scalar::one())], trunc, SymbolRing::new(vec![]).unwrap()).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCurve(m));
        if self.epsilon != 1 && self.epsilon != 3 {
            return bad(format!("epsilon must be 1 or 3, got {}", self.epsilon));
        }
        let t1 = self.tau(1);
        let t3 = self.tau(3);
        if self.epsilon == 1 && t1.is_zero() {
            return bad("epsilon = 1 requires tau_1 != 0".into());
        }
        if self.epsilon == 3 && (!t1.is_zero() || t3.is_zero()) {
            return bad("epsilon = 3 requires tau_1 = 0 and tau_3 != 0".into());
        }
        if self.tau(self.epsilon as u32).invert().is_err() {
            return bad(format!("leading dilaton coefficient {} is not invertible", self.tau(self.epsilon as u32)));
        }
        let n = self.trunc;
        for &l in self.tau.keys() {
            if l == 0 || l > n {
                return bad(format!("tau index {} outside 1..={}", l, n));
            }
        }
        for &(k, l) in self.phi.keys() {
            if k == 0 || k > l || l > n {
                return bad(format!("phi key ({},{}) must satisfy 1 <= k <= l <= {}", k, l, n));
            }
        }
        for &k in self.psi0.keys() {
            if k == 0 || k > n {
                return bad(format!("psi0 index {} outside 1..={}", k, n));
            }
        }
        for &(k, l) in self.psi_a.keys() {
            if k == 0 || k >= l || l > n {
                return bad(format!("psiA key ({},{}) must satisfy 1 <= k < l <= {}", k, l, n));
            }
        }
        let all = self.tau.values().chain(self.phi.values()).chain(self.psi0.values()).chain(self.psi_a.values());
        for v in all {
            if let Some(r) = v.ring() {
                if !Arc::ptr_eq(r, &self.ring) && **r != *self.ring {
                    return Err(Error::RingMismatch);
                }
            }
        }
        Ok(())
    }

    pub fn tau(&self, l: u32) -> Scalar {
        nz(&self.tau, l)
    }

    pub fn phi(&self, k: u32, l: u32) -> Scalar {
        let key = if k <= l { (k, l) } else { (l, k) };
        self.phi.get(&key).cloned().unwrap_or_default()
    }

    pub fn psi0(&self, k: u32) -> Scalar {
        nz(&self.psi0, k)
    }

    /// The completed ψ_{kl}, k, l ≥ 0, obeying ψ_{kl} + ψ_{lk} + ψ_{0k}ψ_{0l} = 0.
    pub fn psi(&self, k: u32, l: u32) -> Scalar {
        match (k, l) {
            (0, 0) => Scalar::zero(),
            (0, l) => self.psi0(l),
            (k, 0) => -self.psi0(k),
            (k, l) if k == l => {
                let a = self.psi0(k);
                (&a * &a).scale(&Rat::new(-1, 2))
            }
            (k, l) if k < l => self.psi_a.get(&(k, l)).cloned().unwrap_or_default(),
            (k, l) => {
                let a = self.psi_a.get(&(l, k)).cloned().unwrap_or_default();
                -(&a + &(&self.psi0(k) * &self.psi0(l)))
            }
        }
    }

    /// ψ as a signed-index function: zero when either index is negative.
    pub fn psi_i(&self, k: i64, l: i64) -> Scalar {
        if k < 0 || l < 0 {
            return Scalar::zero();
        }
        self.psi(k as u32, l as u32)
    }

    pub fn phi_i(&self, k: i64, l: i64) -> Scalar {
        if k <= 0 || l <= 0 {
            return Scalar::zero();
        }
        self.phi(k as u32, l as u32)
    }

    pub fn tau_i(&self, l: i64) -> Scalar {
        if l <= 0 {
            return Scalar::zero();
        }
        self.tau(l as u32)
    }

    pub fn complete_psi(&self, max: u32) -> BTreeMap<(u32, u32), Scalar> {
        let mut m = BTreeMap::new();
        for k in 0..=max {
            for l in 0..=max {
                let v = self.psi(k, l);
                if !v.is_zero() {
                    m.insert((k, l), v);
                }
            }
        }
        m
    }

    pub fn has_zero_polarization(&self) -> bool {
        self.phi.values().all(|v| v.is_zero())
            && self.psi0.values().all(|v| v.is_zero())
            && self.psi_a.values().all(|v| v.is_zero())
    }

    /// Truncation order needed for levels up to `chi_max`.
    pub fn required_trunc(epsilon: u8, chi_max: u32) -> u32 {
        index_bound(epsilon, chi_max) + 2 * epsilon as u32 + 1
    }

    pub fn check_trunc(&self, chi_max: u32) -> Result<()> {
        let need = CurveData::required_trunc(self.epsilon, chi_max);
        if self.trunc < need {
            return Err(Error::Truncation(format!(
                "curve `{}` truncated at N = {} but chi_max = {} needs N >= {}",
                self.name, self.trunc, chi_max, need
            )));
        }
        Ok(())
    }

    /// Copy with all parameters of index above `n` dropped.
    pub fn truncated(&self, n: u32) -> CurveData {
        let mut c = self.clone();
        c.trunc = n.min(self.trunc);
        c.tau.retain(|&l, _| l <= c.trunc);
        c.phi.retain(|&(_, l), _| l <= c.trunc);
        c.psi0.retain(|&k, _| k <= c.trunc);
        c.psi_a.retain(|&(_, l), _| l <= c.trunc);
        c
    }

    /// r_{ab} = (ψ_{ab} − ψ_{ba}) / (2(1 + δ_{ab,0})), the ω_{0,0|2} regular part.
    pub fn r(&self, a: u32, b: u32) -> Scalar {
        let d = &self.psi(a, b) - &self.psi(b, a);
        let den = if a == 0 || b == 0 { 4 } else { 2 };
        d.scale(&Rat::new(1, den))
    }
}

#[derive(Clone, Debug)]
pub struct CurveBases {
    pub epsilon: u8,
    /// dξ_{−l}, l = 1..=range (index 0 unused).
    pub dxi_minus: Vec<FormalSeries>,
    pub eta_zero: FormalSeries,
    /// η_{−l}, l = 0..=range (η_{−0} is the plain η_0 of the complement basis).
    pub eta_minus: Vec<FormalSeries>,
    pub omega01: FormalSeries,
    pub omega02: BiForm,
    pub omega002: BiForm,
    pub delta_omega: FormalSeries,
    pub range: u32,
}

/// dξ_l = z^{l−1} dz for l > 0.
pub fn dxi_plus(l: u32) -> FormalSeries {
    FormalSeries::monomial(Scalar::one(), l as i64 - 1, 1, false)
}

/// η_l = z^{l−1} Θ for l > 0.
pub fn eta_plus(l: u32) -> FormalSeries {
    FormalSeries::monomial(Scalar::one(), l as i64 - 1, 0, true)
}

pub fn build_bases(c: &CurveData) -> Result<CurveBases> {
    c.validate()?;
    let n = c.trunc as i64;
    let range = c.trunc;
    let known = n - 1;
    let mut dxi_minus = vec![FormalSeries::zero(known, 1, false)];
    for l in 1..=range {
        let mut terms = vec![(-(l as i64) - 1, Scalar::one())];
        for m in 1..=range {
            let p = c.phi(l, m);
            if !p.is_zero() {
                terms.push((m as i64 - 1, p.scale(&Rat::new(1, l as i64))));
            }
        }
        dxi_minus.push(FormalSeries::from_terms(&terms, known, 1, false));
    }
    let mut eta_minus = Vec::new();
    for l in 0..=range {
        let mut terms = vec![(-(l as i64) - 1, Scalar::one())];
        for k in 0..=range {
            let p = c.psi(l, k);
            if !p.is_zero() {
                terms.push((k as i64 - 1, p));
            }
        }
        eta_minus.push(FormalSeries::from_terms(&terms, known, 0, true));
    }
    let mut z0 = vec![(-1, Scalar::one())];
    for k in 1..=range {
        let p = c.psi0(k);
        if !p.is_zero() {
            z0.push((k as i64 - 1, p));
        }
    }
    let eta_zero = FormalSeries::from_terms(&z0, known, 0, true);
    let w: Vec<(i64, Scalar)> = c.tau.iter().map(|(&l, v)| (l as i64 - 1, v.clone())).collect();
    let omega01 = FormalSeries::from_terms(&w, known, 1, false);
    let dw: Vec<(i64, Scalar)> =
        c.tau.iter().filter(|(&l, _)| l % 2 == 1).map(|(&l, v)| (l as i64 - 1, v.scale_int(2))).collect();
    let delta_omega = FormalSeries::from_terms(&dw, known, 1, false);
    let mut reg = BTreeMap::new();
    for (&(k, l), v) in &c.phi {
        reg.insert((k as i64 - 1, l as i64 - 1), v.clone());
        reg.insert((l as i64 - 1, k as i64 - 1), v.clone());
    }
    let omega02 = BiForm { kind: BiKind::Bosonic02, regular: reg, trunc: n };
    let mut freg = BTreeMap::new();
    for a in 0..=range {
        for b in 0..=range {
            let v = c.r(a, b);
            if !v.is_zero() {
                freg.insert((a as i64 - 1, b as i64 - 1), v);
            }
        }
    }
    let omega002 = BiForm { kind: BiKind::Fermionic002, regular: freg, trunc: n };
    Ok(CurveBases { epsilon: c.epsilon, dxi_minus, eta_zero, eta_minus, omega01, omega02, omega002, delta_omega, range })
}

/// Ω^B(a, b) = Res (∫a) b for one-forms, `a` without residue.
pub fn pairing_b(a: &FormalSeries, b: &FormalSeries) -> Result<Scalar> {
    if a.dz_weight() != 1 || b.dz_weight() != 1 || a.theta() || b.theta() {
        return Err(Error::Weight("Ω^B needs two bosonic one-forms".into()));
    }
    a.antiderivative()?.mul(b).residue()
}

/// Ω^F(a, b) = Res a b for Θ-forms (Θ² = z dz).
pub fn pairing_f(a: &FormalSeries, b: &FormalSeries) -> Result<Scalar> {
    if a.dz_weight() != 0 || b.dz_weight() != 0 || !a.theta() || !b.theta() {
        return Err(Error::Weight("Ω^F needs two fermionic Θ-forms".into()));
    }
    a.mul(b).residue()
}

/// Raw defining forms as power series:
/// * `omega01` — the one-form ω_{0,1|0};
/// * `omega02_num` — (z1 − z2)² · ω_{0,2|0} / (dz1 dz2);
/// * `omega002_num` — (z1 − z2) z1 z2 · ω_{0,0|2} / (Θ1 Θ2).
#[derive(Clone, Debug, PartialEq)]
pub struct RawForms {
    pub omega01: FormalSeries,
    pub omega02_num: BiSeries,
    pub omega002_num: BiSeries,
}

/// Raw forms of `c` up to total degree `deg` in the bivariate parts.
pub fn raw_forms(c: &CurveData, deg: i64) -> RawForms {
    let b = build_bases(c).expect("valid curve");
    let mut reg = BiSeries::zero(deg);
    for (&(e1, e2), v) in &b.omega02.regular {
        reg.set(e1, e2, v.clone());
    }
    let mut d = BiSeries::zero(deg);
    d.set(1, 0, Scalar::one());
    d.set(0, 1, Scalar::from_int(-1));
    let omega02_num = BiSeries::constant(Scalar::one(), deg).add(&d.mul(&d).mul(&reg));
    let mut r = BiSeries::zero(deg);
    for (&(e1, e2), v) in &b.omega002.regular {
        r.set(e1 + 1, e2 + 1, v.clone());
    }
    let mut half = BiSeries::zero(deg);
    half.set(1, 0, Scalar::frac(-1, 2));
    half.set(0, 1, Scalar::frac(-1, 2));
    let omega002_num = half.add(&d.mul(&r));
    RawForms { omega01: b.omega01, omega02_num, omega002_num }
}

/// Read curve parameters off raw form data (inverse of `raw_forms`).
pub fn fit_parameters(
    raw: &RawForms,
    epsilon: u8,
    name: &str,
    trunc: u32,
    ring: Arc<SymbolRing>,
) -> Result<CurveData> {
    let n = trunc as i64;
    if raw.omega01.dz_weight() != 1 || raw.omega01.theta() {
        return Err(Error::Shape("omega01 is not a bosonic one-form".into()));
    }
    if !raw.omega01.is_zero() && raw.omega01.min_exp() < 0 {
        return Err(Error::Shape("omega01 has a pole".into()));
    }
    let mut tau = BTreeMap::new();
    for l in 1..=n {
        let v = raw.omega01.coeff(l - 1)?;
        if !v.is_zero() {
            tau.insert(l as u32, v);
        }
    }
    // ω_{0,2|0}: P = 1 + (z1 − z2)² R
    let p = raw.omega02_num.sub(&BiSeries::constant(Scalar::one(), raw.omega02_num.deg()));
    let reg = p
        .div_by_diff()
        .and_then(|q| q.div_by_diff())
        .map_err(|e| Error::Shape(format!("omega02 singular part: {}", e)))?;
    if reg.deg() < 2 * n - 2 {
        return Err(Error::Truncation(format!("omega02 data to degree {} cannot fix phi up to {}", reg.deg(), n)));
    }
    let mut phi = BTreeMap::new();
    for k in 1..=n {
        for l in k..=n {
            let v = reg.get(k - 1, l - 1);
            if v != reg.get(l - 1, k - 1) {
                return Err(Error::Shape(format!("omega02 regular part is not symmetric at ({},{})", k, l)));
            }
            if !v.is_zero() {
                phi.insert((k as u32, l as u32), v);
            }
        }
    }
    // ω_{0,0|2}: P2 = −½(z1 + z2) + (z1 − z2) Σ r_{ab} z1^a z2^b
    let mut half = BiSeries::zero(raw.omega002_num.deg());
    half.set(1, 0, Scalar::frac(1, 2));
    half.set(0, 1, Scalar::frac(1, 2));
    let r = raw
        .omega002_num
        .add(&half)
        .div_by_diff()
        .map_err(|e| Error::Shape(format!("omega002 singular part: {}", e)))?;
    if r.deg() < 2 * n {
        return Err(Error::Truncation(format!("omega002 data to degree {} cannot fix psi up to {}", r.deg(), n)));
    }
    for a in 0..=n {
        for b in 0..=n {
            if r.get(a, b) != -r.get(b, a) {
                return Err(Error::InconsistentPolarization(format!("r_({},{}) not antisymmetric", a, b)));
            }
        }
    }
    let mut psi0 = BTreeMap::new();
    for b in 1..=n {
        let v = r.get(0, b).scale_int(2);
        if !v.is_zero() {
            psi0.insert(b as u32, v);
        }
    }
    let p0 = |k: i64| psi0.get(&(k as u32)).cloned().unwrap_or_default();
    let mut psi_a = BTreeMap::new();
    for a in 1..=n {
        for b in a + 1..=n {
            let v = &r.get(a, b) - &(&p0(a) * &p0(b)).scale(&Rat::new(1, 2));
            if !v.is_zero() {
                psi_a.insert((a as u32, b as u32), v);
            }
        }
    }
    let c = CurveData { name: name.to_string(), epsilon, tau, phi, psi0, psi_a, trunc, ring };
    c.validate()?;
    // the completed ψ must reproduce every antisymmetric combination
    for a in 0..=trunc {
        for b in 0..=trunc {
            if c.r(a, b) != r.get(a as i64, b as i64) {
                return Err(Error::InconsistentPolarization(format!("psi completion fails at ({},{})", a, b)));
            }
        }
    }
    Ok(c)
}

/// Projection properties for ω = Σ_l c_l z^{l−1} dz (bosonic) and
/// η = Σ_l c_l z^{l−1} Θ (fermionic), with `cs` = [(l, c_l)], |l| ≤ trunc/2:
/// * Σ_{l>0} l Ω^B(dξ_l, ω) dξ_{−l} = the negative part of ω;
/// * Σ_{l>0} Ω^F(η_l, η) η_{−l} + ½ Ω^F(η_0, η) η_0 = the negative part of
///   η plus ½ (c_0 + Σ_{l<0} ψ_{0,−l} c_l) η_0.
pub fn projections_hold(c: &CurveData, cs: &[(i64, Scalar)]) -> Result<(bool, bool)> {
    let b = build_bases(c)?;
    let lmax = cs.iter().map(|x| x.0.unsigned_abs()).max().unwrap_or(0) as u32 + 2;
    let lmax = lmax.min(b.dxi_minus.len() as u32 - 1).min(b.eta_minus.len() as u32 - 1);
    let terms: Vec<(i64, Scalar)> = cs.iter().map(|(l, v)| (l - 1, v.clone())).collect();
    let t = 2 * c.trunc as i64;
    let omega = FormalSeries::from_terms(&terms.iter().filter(|x| x.0 != -1).cloned().collect::<Vec<_>>(), t, 1, false);
    let mut lhs = FormalSeries::zero(b.dxi_minus[1].trunc(), 1, false);
    for l in 1..=lmax {
        let p = pairing_b(&dxi_plus(l), &omega)?;
        lhs.add_scaled(&p.scale_int(l as i64), &b.dxi_minus[l as usize]);
    }
    let mut rhs = FormalSeries::zero(b.dxi_minus[1].trunc(), 1, false);
    for (l, v) in cs {
        if *l < 0 {
            rhs.add_scaled(v, &b.dxi_minus[(-l) as usize]);
        }
    }
    let bos = lhs.agrees_with(&rhs);
    let eta = FormalSeries::from_terms(&terms, t, 0, true);
    let mut lhs = FormalSeries::zero(b.eta_zero.trunc(), 0, true);
    for l in 1..=lmax {
        let p = pairing_f(&eta_plus(l), &eta)?;
        lhs.add_scaled(&p, &b.eta_minus[l as usize]);
    }
    let p0 = pairing_f(&b.eta_zero, &eta)?;
    lhs.add_scaled(&p0.scale(&Rat::new(1, 2)), &b.eta_zero);
    let mut rhs = FormalSeries::zero(b.eta_zero.trunc(), 0, true);
    let mut c0 = Scalar::zero();
    for (l, v) in cs {
        if *l < 0 {
            rhs.add_scaled(v, &b.eta_minus[(-l) as usize]);
            c0 += &(&c.psi0((-l) as u32) * v);
        } else if *l == 0 {
            c0 += v;
        }
    }
    rhs.add_scaled(&c0.scale(&Rat::new(1, 2)), &b.eta_zero);
    Ok((bos, lhs.agrees_with(&rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DiagMode;

    fn ring() -> Arc<SymbolRing> {
        SymbolRing::new(vec![]).unwrap()
    }

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn sample_curve() -> CurveData {
        let mut c = CurveData::with_tau("t", 3, &[(3, s(1)), (5, Scalar::frac(1, 3))], 8, ring()).unwrap();
        c.phi.insert((1, 1), s(2));
        c.phi.insert((1, 3), Scalar::frac(-1, 2));
        c.psi0.insert(1, s(1));
        c.psi0.insert(2, Scalar::frac(1, 3));
        c.psi_a.insert((1, 2), s(3));
        c.psi_a.insert((2, 5), s(-1));
        c
    }

    #[test]
    fn psi_completion_examples() {
        let mut c = CurveData::airy(8);
        c.psi0.insert(2, s(5));
        assert_eq!(c.psi(2, 2), Scalar::frac(-25, 2));
        let mut c = CurveData::airy(8);
        c.psi_a.insert((1, 2), s(7));
        assert_eq!(c.psi(2, 1), s(-7));
        let mut c = CurveData::airy(8);
        c.psi0.insert(1, s(1));
        c.psi0.insert(2, s(1));
        assert_eq!(c.psi(2, 1), s(-1));
        let c = sample_curve();
        for k in 0..6 {
            for l in 0..6 {
                let lhs = &(&c.psi(k, l) + &c.psi(l, k)) + &(&c.psi(0, k) * &c.psi(0, l));
                assert!(lhs.is_zero(), "({},{})", k, l);
            }
        }
    }

    #[test]
    fn airy_bases() {
        let b = build_bases(&CurveData::airy(9)).unwrap();
        assert!(b.delta_omega.agrees_with(&FormalSeries::monomial(s(2), 2, 1, false)));
        assert!(b.dxi_minus[2].agrees_with(&FormalSeries::monomial(s(1), -3, 1, false)));
        let mut c = CurveData::airy(9);
        c.psi0.insert(1, s(4));
        let b = build_bases(&c).unwrap();
        assert_eq!(b.eta_zero.coeff(-1).unwrap(), s(1));
        assert_eq!(b.eta_zero.coeff(0).unwrap(), s(4));
    }

    #[test]
    fn pairing_examples() {
        let b = build_bases(&sample_curve()).unwrap();
        assert_eq!(pairing_b(&b.dxi_minus[2], &dxi_plus(2)).unwrap(), Scalar::frac(-1, 2));
        assert_eq!(pairing_b(&dxi_plus(1), &dxi_plus(1)).unwrap(), s(0));
        assert_eq!(pairing_b(&dxi_plus(3), &b.dxi_minus[3]).unwrap(), Scalar::frac(1, 3));
        assert_eq!(pairing_f(&b.eta_zero, &b.eta_zero).unwrap(), s(1));
        assert_eq!(pairing_f(&eta_plus(2), &eta_plus(2)).unwrap(), s(0));
        assert_eq!(pairing_f(&eta_plus(3), &b.eta_minus[3]).unwrap(), s(1));
        assert!(pairing_f(&dxi_plus(1), &eta_plus(1)).is_err());
    }

    /// Ω^B(dξ_k, dξ_l) = δ_{k+l,0}/k and Ω^F(η_k, η_l) = δ_{k+l,0} on a polarized curve.
    #[test]
    fn pairing_normalization() {
        let c = sample_curve();
        let b = build_bases(&c).unwrap();
        let dxi = |k: i64| if k > 0 { dxi_plus(k as u32) } else { b.dxi_minus[(-k) as usize].clone() };
        let eta = |k: i64| {
            if k > 0 {
                eta_plus(k as u32)
            } else if k == 0 {
                b.eta_zero.clone()
            } else {
                b.eta_minus[(-k) as usize].clone()
            }
        };
        for k in -5i64..=5 {
            for l in -5i64..=5 {
                if k != 0 && l != 0 {
                    let expect = if k + l == 0 { Scalar::frac(1, k) } else { s(0) };
                    assert_eq!(pairing_b(&dxi(k), &dxi(l)).unwrap(), expect, "B {} {}", k, l);
                }
                let expect = if k + l == 0 { s(1) } else { s(0) };
                assert_eq!(pairing_f(&eta(k), &eta(l)).unwrap(), expect, "F {} {}", k, l);
            }
        }
    }

    #[test]
    fn fit_round_trip() {
        let c = sample_curve();
        let raw = raw_forms(&c, 2 * c.trunc as i64 + 2);
        let back = fit_parameters(&raw, 3, "t", c.trunc, c.ring.clone()).unwrap();
        assert_eq!(back, c);
        assert_eq!(raw_forms(&back, 2 * c.trunc as i64 + 2), raw);
        // examples: ω01 = z² dz; constant ω02 regular part
        let mut c = CurveData::airy(4);
        c.phi.insert((1, 1), s(5));
        let raw = raw_forms(&c, 10);
        let back = fit_parameters(&raw, 3, "airy", 4, c.ring.clone()).unwrap();
        assert_eq!(back.tau, [(3u32, s(1))].into_iter().collect());
        assert_eq!(back.phi(1, 1), s(5));
    }

    #[test]
    fn fit_rejects_bad_shapes() {
        let c = sample_curve();
        let mut raw = raw_forms(&c, 18);
        raw.omega02_num.set(1, 0, s(1));
        assert!(matches!(fit_parameters(&raw, 3, "t", 8, ring()), Err(Error::Shape(_))));
        let mut raw = raw_forms(&c, 18);
        // a symmetric regular piece in ω_{0,0|2}
        let mut d = BiSeries::zero(18);
        d.set(1, 0, s(1));
        d.set(0, 1, s(-1));
        raw.omega002_num = raw.omega002_num.add(&d.mul(&BiSeries::constant(s(1), 18).mul_mono(1, 1)));
        assert!(matches!(fit_parameters(&raw, 3, "t", 8, ring()), Err(Error::InconsistentPolarization(_))));
    }

    #[test]
    fn bosonic_diag_with_phi11() {
        let mut c = CurveData::airy(6);
        c.phi.insert((1, 1), s(3));
        let b = build_bases(&c).unwrap();
        let d = b.omega02.eval_diag(DiagMode::Plain).unwrap();
        assert_eq!(d.coeff(-2).unwrap(), Scalar::frac(-1, 4));
        assert_eq!(d.coeff(0).unwrap(), s(-3));
    }

    #[test]
    fn projection_property() {
        let c = sample_curve();
        let cs: Vec<(i64, Scalar)> = [(-4, 2), (-3, -1), (-1, 5), (0, 2), (1, 7), (2, -3), (4, 1)]
            .iter()
            .map(|&(l, v)| (l, s(v)))
            .collect();
        assert_eq!(projections_hold(&c, &cs).unwrap(), (true, true));
    }

    /// The ω_{0,0|2} regular part built from ψ, plus the singular part expanded
    /// for |z1| < |z2|, equals Σ_{l>0} η_l(z1) η_{−l}(z2) + ½ η_0(z1) η_0(z2).
    #[test]
    fn fermionic_expansion_matches_basis() {
        let c = sample_curve();
        let b = build_bases(&c).unwrap();
        for a in 0..6i64 {
            for e2 in -7i64..6 {
                // coefficient of z1^{a−1} z2^{e2}
                let mut lhs = Scalar::zero();
                if a == 0 && e2 == -1 {
                    lhs += &Scalar::frac(1, 2);
                }
                if a >= 1 && e2 == -a - 1 {
                    lhs += &s(1);
                }
                if e2 >= -1 {
                    lhs += &c.r(a as u32, (e2 + 1) as u32);
                }
                let mut rhs = Scalar::zero();
                for l in 1..8i64 {
                    if l - 1 == a - 1 {
                        rhs += &b.eta_minus[l as usize].coeff(e2).unwrap();
                    }
                }
                let z1 = b.eta_zero.coeff(a - 1).unwrap();
                rhs += &(&z1 * &b.eta_zero.coeff(e2).unwrap()).scale(&Rat::new(1, 2));
                assert_eq!(lhs, rhs, "a={} e2={}", a, e2);
            }
        }
    }
}
