//! The JSON curve-spec format. Scalars are strings in the exact literal
//! grammar, never JSON numbers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use supertr::{CurveData, Rat, Scalar, SymbolDef, SymbolRing, ZooSpec};

use crate::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub square: Option<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZooRef {
    pub name: String,
    #[serde(rename = "M_coeffs", default, skip_serializing_if = "Vec::is_empty")]
    pub m_coeffs: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpecFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symbols: Vec<SymbolSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tau: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub phi: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub psi0: BTreeMap<String, String>,
    #[serde(rename = "psiA", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub psi_a: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zoo: Option<ZooRef>,
}

fn bad(m: impl Into<String>) -> CliError {
    CliError::Spec(m.into())
}

fn index(k: &str) -> CliResult<u32> {
    k.trim().parse().map_err(|_| bad(format!("key `{k}` is not a nonnegative integer")))
}

fn pair(k: &str) -> CliResult<(u32, u32)> {
    let (a, b) = k.split_once(',').ok_or_else(|| bad(format!("key `{k}` is not of the form \"k,l\"")))?;
    Ok((index(a)?, index(b)?))
}

fn scalar(s: &str, ring: &std::sync::Arc<SymbolRing>) -> CliResult<Scalar> {
    Scalar::parse(s, Some(ring)).map_err(|e| bad(format!("`{s}`: {e}")))
}

impl CurveSpecFile {
    pub fn parse(text: &str) -> CliResult<CurveSpecFile> {
        serde_json::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn read(path: &Path) -> CliResult<CurveSpecFile> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        CurveSpecFile::parse(&text)
    }

    /// A spec referring to a zoo curve.
    pub fn zoo(name: &str, params: &[(String, String)], m: &[String], trunc: Option<u32>) -> CurveSpecFile {
        CurveSpecFile {
            name: name.to_string(),
            trunc,
            zoo: Some(ZooRef {
                name: name.to_string(),
                m_coeffs: m.to_vec(),
                params: params.iter().cloned().collect(),
            }),
            ..CurveSpecFile::default()
        }
    }

    fn has_explicit(&self) -> bool {
        self.epsilon.is_some() || !self.symbols.is_empty() || !self.tau.is_empty() || !self.phi.is_empty() || !self.psi0.is_empty() || !self.psi_a.is_empty()
    }

    /// The zoo spec behind a zoo reference, with `default_trunc` used when the
    /// file gives none.
    pub fn zoo_spec(&self, default_trunc: u32) -> CliResult<Option<ZooSpec>> {
        let Some(z) = &self.zoo else { return Ok(None) };
        if self.has_explicit() {
            return Err(bad("a spec gives either explicit parameters or a zoo reference, not both"));
        }
        let ring = supertr::zoo::zoo_ring(&z.name)?;
        let mut s = ZooSpec::new(&z.name, self.trunc.unwrap_or(default_trunc));
        if !z.m_coeffs.is_empty() {
            let m: CliResult<Vec<Rat>> = z.m_coeffs.iter().map(|c| c.trim().parse::<Rat>().map_err(|e| bad(format!("M coefficient `{c}`: {e}")))).collect();
            s.m_coeffs = m?;
        }
        for (k, v) in &z.params {
            s.params.insert(k.clone(), scalar(v, &ring)?);
        }
        Ok(Some(s))
    }

    /// Build the curve. `default_trunc` applies to zoo references without an
    /// explicit `trunc`.
    pub fn resolve(&self, default_trunc: u32) -> CliResult<CurveData> {
        if let Some(s) = self.zoo_spec(default_trunc)? {
            return Ok(supertr::zoo_build(&s)?);
        }
        let epsilon = self.epsilon.ok_or_else(|| bad("missing `epsilon`"))?;
        let trunc = self.trunc.ok_or_else(|| bad("missing `trunc`"))?;
        let defs = self
            .symbols
            .iter()
            .map(|s| match s.square {
                Some(q) => SymbolDef::quadratic(&s.name, q),
                None => SymbolDef::free(&s.name),
            })
            .collect();
        let ring = SymbolRing::new(defs)?;
        let mut c = CurveData {
            name: self.name.clone(),
            epsilon,
            tau: BTreeMap::new(),
            phi: BTreeMap::new(),
            psi0: BTreeMap::new(),
            psi_a: BTreeMap::new(),
            trunc,
            ring: ring.clone(),
        };
        let put = |v: &str| -> CliResult<Option<Scalar>> {
            let s = scalar(v, &ring)?;
            Ok(if s.is_zero() { None } else { Some(s) })
        };
        for (k, v) in &self.tau {
            if let Some(s) = put(v)? {
                c.tau.insert(index(k)?, s);
            }
        }
        for (k, v) in &self.phi {
            if let Some(s) = put(v)? {
                let (a, b) = pair(k)?;
                c.phi.insert((a.min(b), a.max(b)), s);
            }
        }
        for (k, v) in &self.psi0 {
            if let Some(s) = put(v)? {
                c.psi0.insert(index(k)?, s);
            }
        }
        for (k, v) in &self.psi_a {
            if let Some(s) = put(v)? {
                c.psi_a.insert(pair(k)?, s);
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// The explicit spec of a curve.
    pub fn from_curve(c: &CurveData) -> CurveSpecFile {
        let sym = c
            .ring
            .symbols()
            .iter()
            .map(|s| SymbolSpec {
                name: s.name.clone(),
                square: s.square.as_ref().map(|q| q.to_integer().try_into().expect("integer square")),
            })
            .collect();
        let one = |m: &BTreeMap<u32, Scalar>| m.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let two = |m: &BTreeMap<(u32, u32), Scalar>| m.iter().map(|((a, b), v)| (format!("{a},{b}"), v.to_string())).collect();
        CurveSpecFile {
            name: c.name.clone(),
            epsilon: Some(c.epsilon),
            symbols: sym,
            tau: one(&c.tau),
            phi: two(&c.phi),
            psi0: one(&c.psi0),
            psi_a: two(&c.psi_a),
            trunc: Some(c.trunc),
            zoo: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Digest of the canonical explicit spec of `c`, ignoring its name, so a zoo
/// reference and its explicit expansion hash alike.
pub fn curve_hash(c: &CurveData) -> String {
    let mut s = CurveSpecFile::from_curve(c);
    s.name.clear();
    sha256_hex(serde_json::to_string(&s).expect("serializable").as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_round_trip() {
        let text = r#"{"name": "t", "epsilon": 3, "symbols": [{"name": "s", "square": 2}],
            "tau": {"3": "1", "5": "1/2*s"}, "phi": {"1,1": "-2"}, "psi0": {"2": "3"},
            "psiA": {"1,2": "1/3"}, "trunc": 9}"#;
        let spec = CurveSpecFile::parse(text).unwrap();
        let c = spec.resolve(0).unwrap();
        assert_eq!(c.tau(5).to_string(), "1/2*s");
        assert_eq!(c.phi(1, 1), Scalar::from_int(-2));
        let back = CurveSpecFile::from_curve(&c);
        assert_eq!(back.resolve(0).unwrap(), c);
        assert_eq!(CurveSpecFile::parse(&back.to_json()).unwrap(), back);
    }

    #[test]
    fn zoo_reference_hashes_like_explicit() {
        let z = CurveSpecFile::zoo("phi11", &[("t".into(), "2".into())], &[], Some(10));
        let c = z.resolve(0).unwrap();
        assert_eq!(c.phi(1, 1), Scalar::from_int(2));
        let e = CurveSpecFile::from_curve(&c).resolve(0).unwrap();
        assert_eq!(curve_hash(&c), curve_hash(&e));
        let z3 = CurveSpecFile::zoo("phi11", &[("t".into(), "3".into())], &[], Some(10));
        assert_ne!(curve_hash(&c), curve_hash(&z3.resolve(0).unwrap()));
    }

    #[test]
    fn rejects_bad_specs() {
        let e = |t: &str| CurveSpecFile::parse(t).and_then(|s| s.resolve(10)).unwrap_err();
        assert!(matches!(e("{"), CliError::Spec(_)));
        assert!(matches!(e(r#"{"name": "x", "epsilon": 3, "tau": {"3": "0.5"}, "trunc": 5}"#), CliError::Spec(_)));
        assert!(matches!(e(r#"{"name": "x", "tau": {"3": "1"}, "trunc": 5}"#), CliError::Spec(_)));
        assert!(matches!(e(r#"{"name": "x", "epsilon": 3, "phi": {"1": "1"}, "tau": {"3": "1"}, "trunc": 5}"#), CliError::Spec(_)));
        assert!(matches!(e(r#"{"name": "x", "epsilon": 3, "tau": {"3": "1"}, "zoo": {"name": "airy"}}"#), CliError::Spec(_)));
        assert!(matches!(e(r#"{"name": "x", "epsilon": 3, "tau": {"1": "1"}, "trunc": 5}"#), CliError::Core(_)));
        assert!(matches!(e(r#"{"name": "x", "wat": 1}"#), CliError::Spec(_)));
        assert_eq!(e(r#"{"name": "x", "epsilon": 3, "tau": {"1": "1"}, "trunc": 5}"#).exit_code(), 2);
    }
}
