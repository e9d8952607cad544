//! On-disk cache of simulated null replicates.
//!
//! One file holds the replicates of one statistic, in replicate order, for a
//! given sample size, null kind, replicate count and seed. Layout, all
//! integers little-endian:
//!
//! ```text
//! magic      4 bytes  "FDNL"
//! version    u16      currently 1
//! stat_len   u8
//! stat       stat_len bytes of ASCII statistic name
//! n          u64      sample size
//! kind       32 bytes SHA-256 digest of the null kind description
//! b          u64      replicate count
//! seed       u64
//! values     b x f64
//! checksum   32 bytes SHA-256 of every preceding byte
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::statistics::StatId;

pub const MAGIC: &[u8; 4] = b"FDNL";
pub const FORMAT_VERSION: u16 = 1;
const DIGEST_LEN: usize = 32;

/// Identity of a cached replicate vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub stat: StatId,
    pub n: u64,
    pub kind_digest: [u8; 32],
    pub replicates: u64,
    pub seed: u64,
}

impl CacheKey {
    pub fn file_name(&self) -> String {
        let kind: String = self.kind_digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        format!(
            "{}-n{}-b{}-s{}-{}.fdnl",
            self.stat.name().to_ascii_lowercase(),
            self.n,
            self.replicates,
            self.seed,
            kind
        )
    }
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

pub fn encode(key: &CacheKey, values: &[f64]) -> Vec<u8> {
    let name = key.stat.name().as_bytes();
    let mut out = Vec::with_capacity(4 + 2 + 1 + name.len() + 8 + 32 + 16 + values.len() * 8 + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(name.len() as u8);
    out.extend_from_slice(name);
    out.extend_from_slice(&key.n.to_le_bytes());
    out.extend_from_slice(&key.kind_digest);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    out.extend_from_slice(&key.seed.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let sum = sha256(&out);
    out.extend_from_slice(&sum);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.buf.len() < len {
            return Err(Error::Cache("truncated file".into()));
        }
        let (head, tail) = self.buf.split_at(len);
        self.buf = tail;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parse a cache file. Never panics on malformed input.
pub fn decode(bytes: &[u8]) -> Result<(CacheKey, Vec<f64>)> {
    if bytes.len() < DIGEST_LEN {
        return Err(Error::Cache("truncated file".into()));
    }
    let (body, sum) = bytes.split_at(bytes.len() - DIGEST_LEN);
    let mut r = Reader { buf: body };
    if r.take(4)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("unsupported format version {version}")));
    }
    let name_len = r.take(1)?[0] as usize;
    let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| Error::Cache("statistic name is not UTF-8".into()))?;
    let stat: StatId = name
        .parse()
        .map_err(|_| Error::Cache(format!("unknown statistic {name:?}")))?;
    let n = r.u64()?;
    let kind_digest: [u8; 32] = r.take(32)?.try_into().unwrap();
    let replicates = r.u64()?;
    let seed = r.u64()?;
    let expected = replicates
        .checked_mul(8)
        .filter(|&len| len == r.buf.len() as u64)
        .ok_or_else(|| Error::Cache("replicate count does not match file length".into()))?;
    let values: Vec<f64> = r
        .take(expected as usize)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if sha256(body) != sum {
        return Err(Error::Cache("checksum mismatch".into()));
    }
    let key = CacheKey {
        stat,
        n,
        kind_digest,
        replicates,
        seed,
    };
    Ok((key, values))
}

/// A directory of cache files.
#[derive(Debug, Clone)]
pub struct NullCache {
    dir: PathBuf,
}

impl NullCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    /// Cached replicates for `key`. A missing file is `Ok(None)`; a corrupt
    /// or mismatching file is reported and also treated as a miss.
    pub fn load(&self, key: &CacheKey) -> Result<Option<Vec<f64>>> {
        let path = self.path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match decode(&bytes) {
            Ok((found, values)) if found == *key => Ok(Some(values)),
            Ok(_) => {
                log::warn!("{}: key mismatch, ignoring", path.display());
                Ok(None)
            }
            Err(e) => {
                log::warn!("{}: {e}, ignoring", path.display());
                Ok(None)
            }
        }
    }

    pub fn store(&self, key: &CacheKey, values: &[f64]) -> Result<()> {
        let path = self.path(key);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&encode(key, values))?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> CacheKey {
        CacheKey {
            stat: StatId::QDelta,
            n: 500,
            kind_digest: sha256(b"plain"),
            replicates: 3,
            seed: 42,
        }
    }

    #[test]
    fn round_trip() {
        let values = [1.5, -0.0, f64::MAX];
        let bytes = encode(&key(), &values);
        let (k, v) = decode(&bytes).unwrap();
        assert_eq!(k, key());
        assert_eq!(v, values);
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&key(), &[1.0, 2.0, 3.0]);
        for cut in [0, 5, 20, bytes.len() - 1] {
            assert!(decode(&bytes[..cut]).is_err());
        }
        let mut flipped = bytes.clone();
        flipped[60] ^= 1;
        assert!(decode(&flipped).is_err());
        let mut version = bytes;
        version[4] = 9;
        assert!(decode(&version).is_err());
    }

    #[test]
    fn file_store() {
        let dir = std::env::temp_dir().join(format!("fdnl-test-{}", std::process::id()));
        let cache = NullCache::new(&dir).unwrap();
        assert!(cache.load(&key()).unwrap().is_none());
        cache.store(&key(), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(cache.load(&key()).unwrap().unwrap(), vec![1.0, 2.0, 3.0]);
        let mut other = key();
        other.seed = 43;
        assert!(cache.load(&other).unwrap().is_none());
        fs::write(cache.path(&key()), b"garbage").unwrap();
        assert!(cache.load(&key()).unwrap().is_none());
        fs::remove_dir_all(dir).unwrap();
    }
}
