//! On-disk result cache keyed by (curve hash, χ_max, engine). Each entry has a
//! sidecar digest; anything that fails to verify is evicted.

use std::fs;
use std::path::{Path, PathBuf};

use crate::results::ResultFile;
use crate::spec::sha256_hex;
use crate::CliResult;

pub const CACHE_ENV: &str = "SUPERTR_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct Cache {
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lookup {
    Hit(String),
    Miss,
    /// A stored entry failed verification and was removed.
    Evicted,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    /// `$SUPERTR_CACHE_DIR`, else `$XDG_CACHE_HOME/supertr`, else `~/.cache/supertr`.
    pub fn from_env() -> Cache {
        if let Some(d) = std::env::var_os(CACHE_ENV) {
            return Cache::new(d);
        }
        let base = std::env::var_os("XDG_CACHE_HOME")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("HOME").map(|h| Path::new(&h).join(".cache")))
            .unwrap_or_else(|| PathBuf::from(".cache"));
        Cache::new(base.join("supertr"))
    }

    fn paths(&self, hash: &str, chi: u32, engine: &str) -> (PathBuf, PathBuf) {
        let stem = format!("{hash}-chi{chi}-{engine}");
        (self.dir.join(format!("{stem}.json")), self.dir.join(format!("{stem}.sha256")))
    }

    pub fn get(&self, hash: &str, chi: u32, engine: &str) -> Lookup {
        let (data, sum) = self.paths(hash, chi, engine);
        if !data.exists() && !sum.exists() {
            return Lookup::Miss;
        }
        let ok = (|| {
            let body = fs::read_to_string(&data).ok()?;
            let want = fs::read_to_string(&sum).ok()?;
            if sha256_hex(body.as_bytes()) != want.trim() {
                return None;
            }
            let r = ResultFile::parse(&body).ok()?;
            (r.curve_hash == hash && r.chi_max == chi && r.engine == engine).then_some(body)
        })();
        match ok {
            Some(body) => Lookup::Hit(body),
            None => {
                let _ = fs::remove_file(&data);
                let _ = fs::remove_file(&sum);
                Lookup::Evicted
            }
        }
    }

    /// Write via a temporary file and rename, so readers never see a partial
    /// entry; concurrent writers are last-writer-wins.
    pub fn put(&self, hash: &str, chi: u32, engine: &str, body: &str) -> CliResult<()> {
        fs::create_dir_all(&self.dir)?;
        let (data, sum) = self.paths(hash, chi, engine);
        let pid = std::process::id();
        let tmp = |p: &Path| p.with_extension(format!("tmp{pid}"));
        fs::write(tmp(&data), body)?;
        fs::rename(tmp(&data), &data)?;
        fs::write(tmp(&sum), sha256_hex(body.as_bytes()) + "\n")?;
        fs::rename(tmp(&sum), &sum)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(hash: &str) -> String {
        ResultFile { curve_hash: hash.into(), chi_max: 3, engine: "tr".into(), entries: vec![] }.to_json()
    }

    #[test]
    fn hit_miss_evict() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::new(d.path());
        assert_eq!(c.get("h", 3, "tr"), Lookup::Miss);
        c.put("h", 3, "tr", &body("h")).unwrap();
        assert_eq!(c.get("h", 3, "tr"), Lookup::Hit(body("h")));
        assert_eq!(c.get("h", 4, "tr"), Lookup::Miss);
        let (data, _) = c.paths("h", 3, "tr");
        fs::write(&data, body("h").replace("\"tr\"", "\"airy\"")).unwrap();
        assert_eq!(c.get("h", 3, "tr"), Lookup::Evicted);
        assert!(!data.exists());
        // a self-consistent entry stored under the wrong key is also rejected
        c.put("g", 3, "tr", &body("h")).unwrap();
        assert_eq!(c.get("g", 3, "tr"), Lookup::Evicted);
    }
}
