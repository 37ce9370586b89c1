//! Persistent snapshot store.
//!
//! ```text
//! <root>/<fingerprint>/manifest.txt
//! <root>/<fingerprint>/snap_<ν_1>_<ν_2>….bin     interpolation snapshots
//! <root>/<fingerprint>/ref_<i>.bin               test-grid references
//! ```
//!
//! The fingerprint is a hash of a study descriptor (geometry, resolution,
//! flow settings, point rule or test grid). Vectors are raw little-endian
//! `f64`. Files are written to a temporary name and renamed into place.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::interp::{decode_f64s, encode_f64s, SnapshotMap};
use crate::multiindex::MultiIndex;

const MANIFEST: &str = "manifest.txt";
const HEADER: &str = "snapshot-cache v1";

#[derive(Debug)]
pub struct SnapshotCache {
    dir: PathBuf,
    descriptor: String,
    len: usize,
    manifest_lock: Mutex<()>,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

/// First 16 hex digits of the SHA-256 of `descriptor`.
pub fn fingerprint(descriptor: &str) -> String {
    Sha256::digest(descriptor.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl SnapshotCache {
    /// Opens (or creates) the cache for `descriptor` under `root`. A
    /// manifest whose descriptor or vector length differs is stale.
    pub fn open(root: &Path, descriptor: &str, len: usize) -> Result<Self> {
        let descriptor = descriptor.replace('\n', " ");
        let dir = root.join(fingerprint(&descriptor));
        fs::create_dir_all(&dir)?;
        let manifest = dir.join(MANIFEST);
        let stale = |reason: String| Error::StaleCache {
            path: manifest.clone(),
            reason,
        };
        if manifest.exists() {
            let text = fs::read_to_string(&manifest)?;
            let mut lines = text.lines();
            if lines.next() != Some(HEADER) {
                return Err(stale("unrecognized manifest header".into()));
            }
            let found = lines.next().and_then(|l| l.strip_prefix("descriptor "));
            if found != Some(descriptor.as_str()) {
                return Err(stale(format!("descriptor {found:?} does not match {descriptor:?}")));
            }
            let found_len = lines
                .next()
                .and_then(|l| l.strip_prefix("length "))
                .and_then(|l| l.parse::<usize>().ok());
            if found_len != Some(len) {
                return Err(stale(format!("vector length {found_len:?}, expected {len}")));
            }
        } else {
            write_atomic(&manifest, format!("{HEADER}\ndescriptor {descriptor}\nlength {len}\n").as_bytes())?;
        }
        Ok(Self {
            dir,
            descriptor,
            len,
            manifest_lock: Mutex::new(()),
            key_locks: Mutex::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn vector_len(&self) -> usize {
        self.len
    }

    /// Lookups answered from disk by [`Self::get_or_compute`].
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    /// Values computed by [`Self::get_or_compute`].
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn get(&self, index: &MultiIndex) -> Result<Option<Vec<f64>>> {
        self.get_key(&snap_key(index))
    }

    pub fn put(&self, index: &MultiIndex, y: &[f64], v: &[f64]) -> Result<()> {
        self.put_key(&snap_key(index), y, v)
    }

    pub fn get_point(&self, i: usize) -> Result<Option<Vec<f64>>> {
        self.get_key(&point_key(i))
    }

    pub fn put_point(&self, i: usize, y: &[f64], v: &[f64]) -> Result<()> {
        self.put_key(&point_key(i), y, v)
    }

    /// Interpolation snapshot, computed at most once per key and process.
    pub fn snapshot_or_compute(
        &self,
        index: &MultiIndex,
        y: &[f64],
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        self.get_or_compute(&snap_key(index), y, compute)
    }

    /// Test-point reference, computed at most once per key and process.
    pub fn point_or_compute(
        &self,
        i: usize,
        y: &[f64],
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        self.get_or_compute(&point_key(i), y, compute)
    }

    fn get_or_compute(
        &self,
        key: &str,
        y: &[f64],
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let lock = {
            let mut locks = self.key_locks.lock().unwrap_or_else(|e| e.into_inner());
            locks.entry(key.to_string()).or_default().clone()
        };
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(v) = self.get_key(key)? {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        let v = compute()?;
        self.put_key(key, y, &v)?;
        self.misses.fetch_add(1, Ordering::Relaxed);
        Ok(v)
    }

    fn get_key(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let path = self.dir.join(format!("{key}.bin"));
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let v = decode_f64s(&bytes).map_err(|_| Error::StaleCache {
            path: path.clone(),
            reason: "truncated vector file".into(),
        })?;
        if v.len() != self.len {
            return Err(Error::StaleCache {
                path,
                reason: format!("vector of length {}, expected {}", v.len(), self.len),
            });
        }
        Ok(Some(v))
    }

    fn put_key(&self, key: &str, y: &[f64], v: &[f64]) -> Result<()> {
        if v.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                found: v.len(),
            });
        }
        write_atomic(&self.dir.join(format!("{key}.bin")), &encode_f64s(v))?;
        let coords: Vec<String> = y.iter().map(|c| format!("{c:e}")).collect();
        let _guard = self.manifest_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new().append(true).open(self.dir.join(MANIFEST))?;
        writeln!(f, "entry {key} y={}", coords.join(","))?;
        Ok(())
    }
}

fn snap_key(index: &MultiIndex) -> String {
    format!("snap_{}", index.file_stem())
}

fn point_key(i: usize) -> String {
    format!("ref_{i}")
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("tmp");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Routes interpolation snapshots of `inner` through a cache.
pub struct CachedMap<'a, M: ?Sized> {
    inner: &'a M,
    cache: &'a SnapshotCache,
}

impl<'a, M: SnapshotMap + ?Sized> CachedMap<'a, M> {
    pub fn new(inner: &'a M, cache: &'a SnapshotCache) -> Result<Self> {
        if cache.vector_len() != inner.output_len() {
            return Err(Error::DimensionMismatch {
                expected: inner.output_len(),
                found: cache.vector_len(),
            });
        }
        Ok(Self { inner, cache })
    }
}

impl<M: SnapshotMap + ?Sized> SnapshotMap for CachedMap<'_, M> {
    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    fn output_len(&self) -> usize {
        self.inner.output_len()
    }

    fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.inner.evaluate(y)
    }

    fn snapshot(&self, index: &MultiIndex, y: &[f64]) -> Result<Vec<f64>> {
        self.cache
            .snapshot_or_compute(index, y, || self.inner.snapshot(index, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{AnalyticKind, AnalyticMap};

    fn idx(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec()).unwrap()
    }

    #[test]
    fn put_get_round_trip_is_bitwise() {
        let root = tempfile::tempdir().unwrap();
        let cache = SnapshotCache::open(root.path(), "demo", 4).unwrap();
        assert_eq!(cache.get(&idx(&[0, 0])).unwrap(), None);
        let v = [0.1 + 0.2, f64::MIN_POSITIVE, -1e300, 1.0 / 3.0];
        cache.put(&idx(&[2, 1]), &[0.5, -0.25], &v).unwrap();
        let back = cache.get(&idx(&[2, 1])).unwrap().unwrap();
        assert!(back.iter().zip(&v).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(cache.dir().join("snap_2_1.bin").exists());
        assert_eq!(cache.get_point(0).unwrap(), None);
    }

    #[test]
    fn wrong_length_and_stale_descriptor() {
        let root = tempfile::tempdir().unwrap();
        let cache = SnapshotCache::open(root.path(), "demo", 3).unwrap();
        assert!(matches!(
            cache.put(&idx(&[0]), &[0.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        // same descriptor, different length
        assert!(matches!(
            SnapshotCache::open(root.path(), "demo", 4),
            Err(Error::StaleCache { .. })
        ));
        // hash collision is simulated by editing the manifest
        let manifest = cache.dir().join(MANIFEST);
        let text = fs::read_to_string(&manifest).unwrap().replace("descriptor demo", "descriptor other");
        fs::write(&manifest, text).unwrap();
        assert!(matches!(
            SnapshotCache::open(root.path(), "demo", 3),
            Err(Error::StaleCache { .. })
        ));
        // a different study lives in its own directory
        assert!(SnapshotCache::open(root.path(), "demo-2", 3).is_ok());
    }

    #[test]
    fn cached_map_computes_once() {
        let root = tempfile::tempdir().unwrap();
        let f = AnalyticMap::scalar(AnalyticKind::TensorExp, 2).unwrap();
        let cache = SnapshotCache::open(root.path(), "exp", 1).unwrap();
        let m = CachedMap::new(&f, &cache).unwrap();
        let a = m.snapshot(&idx(&[1, 0]), &[1.0, 0.0]).unwrap();
        let b = m.snapshot(&idx(&[1, 0]), &[1.0, 0.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(f.calls(), 1);
        assert_eq!((cache.hits(), cache.misses()), (1, 1));

        // reopened cache answers without evaluating
        let cache2 = SnapshotCache::open(root.path(), "exp", 1).unwrap();
        let m2 = CachedMap::new(&f, &cache2).unwrap();
        assert_eq!(m2.snapshot(&idx(&[1, 0]), &[1.0, 0.0]).unwrap(), a);
        assert_eq!(f.calls(), 1);
        let manifest = fs::read_to_string(cache2.dir().join(MANIFEST)).unwrap();
        assert!(manifest.contains("entry snap_1_0 y=1e0,0e0"), "{manifest}");
    }

    #[test]
    fn concurrent_requests_for_one_key_compute_once() {
        let root = tempfile::tempdir().unwrap();
        let f = AnalyticMap::scalar(AnalyticKind::TensorExp, 1).unwrap();
        let cache = SnapshotCache::open(root.path(), "exp1", 1).unwrap();
        let m = CachedMap::new(&f, &cache).unwrap();
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| m.snapshot(&idx(&[3]), &[0.5]).unwrap());
            }
        });
        assert_eq!(f.calls(), 1);
    }
}
