//! Result files: the coefficient tensor as canonical JSON (and flat CSV).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use supertr::{CorrKey, CorrTensor, Scalar, SymbolRing};

use crate::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub g: u32,
    pub bos: Vec<u32>,
    pub fer: Vec<u32>,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub curve_hash: String,
    pub chi_max: u32,
    pub engine: String,
    pub entries: Vec<Entry>,
}

impl ResultFile {
    /// Entries come out in the tensor's canonical key order.
    pub fn from_tensor(t: &CorrTensor, curve_hash: &str, engine: &str) -> ResultFile {
        let entries = t
            .entries()
            .filter(|(_, v)| !v.is_zero())
            .map(|(k, v)| Entry { g: k.g, bos: k.bos.clone(), fer: k.fer.clone(), value: v.to_string() })
            .collect();
        ResultFile { curve_hash: curve_hash.to_string(), chi_max: t.chi_max, engine: engine.to_string(), entries }
    }

    pub fn parse(text: &str) -> CliResult<ResultFile> {
        let r: ResultFile = serde_json::from_str(text).map_err(|e| CliError::Spec(format!("result file: {e}")))?;
        let keys: Vec<CorrKey> = r.entries.iter().map(|e| CorrKey::new(e.g, e.bos.clone(), e.fer.clone())).collect();
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Spec("result entries are not in canonical order".into()));
        }
        Ok(r)
    }

    pub fn to_tensor(&self, ring: &Arc<SymbolRing>) -> CliResult<CorrTensor> {
        let mut t = CorrTensor::new(self.chi_max, None);
        for e in &self.entries {
            let v = Scalar::parse(&e.value, Some(ring)).map_err(|x| CliError::Spec(format!("value `{}`: {x}", e.value)))?;
            t.set(e.g, &e.bos, &e.fer, v)?;
        }
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    /// `g,bos,fer,value` with indices space-separated inside a field.
    pub fn to_csv(&self) -> String {
        let j = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::from("g,bos,fer,value\n");
        for e in &self.entries {
            out += &format!("{},{},{},{}\n", e.g, j(&e.bos), j(&e.fer), e.value);
        }
        out
    }

    pub fn same_entries(&self, o: &ResultFile) -> bool {
        self.curve_hash == o.curve_hash && self.chi_max == o.chi_max && self.entries == o.entries
    }
}

/// Report of the first key on which two tensors differ, if any.
pub fn first_divergence(a: &CorrTensor, b: &CorrTensor) -> Option<String> {
    a.first_difference(b).map(|(k, x, y)| format!("{k}: {x} vs {y}"))
}
