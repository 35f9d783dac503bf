//! Content-addressed cache of floating-point arrays.
//!
//! Each entry is a text header followed by little-endian `f64` payload bytes:
//!
//! ```text
//! teichlab-cache 1
//! kind <kind>
//! key <sha256 of the key material>
//! <provenance key> <value>
//! payload_len <number of f64>
//! payload_sha256 <sha256 of the payload bytes>
//! end
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::sha256_hex;
use crate::error::CliError;

const MAGIC: &str = "teichlab-cache 1";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub provenance: BTreeMap<String, String>,
    pub payload: Vec<f64>,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Digest of `kind` and the textual key material.
    pub fn key(kind: &str, material: &str) -> String {
        sha256_hex(format!("{kind}\n{material}").as_bytes())
    }

    pub fn path(&self, kind: &str, key: &str) -> PathBuf {
        self.dir.join(kind).join(format!("{key}.bin"))
    }

    /// Reads an entry; `Ok(None)` when absent, `CacheCorrupt` when present but inconsistent.
    pub fn load(&self, kind: &str, key: &str) -> Result<Option<CacheEntry>, CliError> {
        let path = self.path(kind, key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |msg: &str| CliError::CacheCorrupt(format!("{}: {msg}", path.display()));
        let end = find_subslice(&bytes, b"\nend\n").ok_or_else(|| corrupt("missing header terminator"))?;
        let header = std::str::from_utf8(&bytes[..end]).map_err(|_| corrupt("header is not UTF-8"))?;
        let payload_bytes = &bytes[end + 5..];
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC) {
            return Err(corrupt("unknown format"));
        }
        let mut fields = BTreeMap::new();
        for line in lines {
            let (k, v) = line.split_once(' ').ok_or_else(|| corrupt("malformed header line"))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let take = |fields: &mut BTreeMap<String, String>, k: &str| fields.remove(k).ok_or_else(|| corrupt(&format!("missing {k}")));
        if take(&mut fields, "kind")? != kind || take(&mut fields, "key")? != key {
            return Err(corrupt("kind or key does not match the file name"));
        }
        let len: usize = take(&mut fields, "payload_len")?.parse().map_err(|_| corrupt("bad payload_len"))?;
        let digest = take(&mut fields, "payload_sha256")?;
        if payload_bytes.len() != 8 * len {
            return Err(corrupt("payload length mismatch"));
        }
        if sha256_hex(payload_bytes) != digest {
            return Err(corrupt("payload digest mismatch"));
        }
        let payload = payload_bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Some(CacheEntry {
            provenance: fields,
            payload,
        }))
    }

    /// Writes an entry through a temporary file and an atomic rename.
    pub fn store(&self, kind: &str, key: &str, provenance: &BTreeMap<String, String>, payload: &[f64]) -> Result<(), CliError> {
        let path = self.path(kind, key);
        let parent = path.parent().expect("entry path has a parent");
        fs::create_dir_all(parent)?;
        let bytes: Vec<u8> = payload.iter().flat_map(|x| x.to_le_bytes()).collect();
        let mut header = format!("{MAGIC}\nkind {kind}\nkey {key}\n");
        for (k, v) in provenance {
            if k.contains(char::is_whitespace) || v.contains('\n') || matches!(k.as_str(), "kind" | "key" | "payload_len" | "payload_sha256" | "end") {
                return Err(CliError::Io(format!("invalid provenance field {k:?}")));
            }
            header.push_str(&format!("{k} {v}\n"));
        }
        header.push_str(&format!("payload_len {}\npayload_sha256 {}\nend\n", payload.len(), sha256_hex(&bytes)));
        let tmp = parent.join(format!(".{key}.{}.tmp", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(header.as_bytes())?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn find_subslice(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = Cache::key("demo", "material");
        let payload = vec![0.1, -3.5e-300, f64::MAX, 1.0 / 3.0];
        let mut prov = BTreeMap::new();
        prov.insert("level".to_string(), "3".to_string());
        cache.store("demo", &key, &prov, &payload).unwrap();
        let e = cache.load("demo", &key).unwrap().unwrap();
        assert_eq!(e.payload.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), payload.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_eq!(e.provenance, prov);
    }

    #[test]
    fn missing_entry_is_none() {
        let dir = tempfile::tempdir().unwrap();
        assert!(Cache::new(dir.path()).load("demo", "abc").unwrap().is_none());
    }

    #[test]
    fn flipped_payload_byte_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = Cache::key("demo", "x");
        cache.store("demo", &key, &BTreeMap::new(), &[1.0, 2.0]).unwrap();
        let path = cache.path("demo", &key);
        let mut bytes = fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n - 1] ^= 0x01;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(cache.load("demo", &key), Err(CliError::CacheCorrupt(_))));
    }
}
