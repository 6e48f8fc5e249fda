//! Content-addressed store of JSON artifacts. Entries are written once, to a
//! temporary name and then renamed, so concurrent readers never see a
//! partial file.

use std::fs;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::scenario::digest;

pub struct Cache {
    root: Option<PathBuf>,
}

impl Cache {
    pub fn new(root: Option<PathBuf>) -> Cache {
        Cache { root }
    }

    fn path(&self, kind: &str, key: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(kind).join(format!("{key}.json")))
    }

    /// Returns the cached value for `key_of`, computing and storing it on a miss.
    pub fn get_or_compute<K, T, E>(&self, kind: &str, key_of: &K, compute: impl FnOnce() -> Result<T, E>) -> Result<T, E>
    where
        K: Serialize,
        T: Serialize + DeserializeOwned,
    {
        let key = format!("{}-{}", env!("CARGO_PKG_VERSION"), digest(key_of));
        let Some(path) = self.path(kind, &key) else {
            return compute();
        };
        if let Ok(bytes) = fs::read(&path) {
            if let Ok(v) = serde_json::from_slice(&bytes) {
                return Ok(v);
            }
        }
        let v = compute()?;
        if let Err(e) = store(&path, &v) {
            eprintln!("warning: cache write to {} failed: {e}", path.display());
        }
        Ok(v)
    }
}

fn store<T: Serialize>(path: &PathBuf, v: &T) -> std::io::Result<()> {
    if path.exists() {
        return Ok(());
    }
    let dir = path.parent().expect("cache entries live in a directory");
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{}.{}", std::process::id(), path.file_name().unwrap().to_string_lossy()));
    fs::write(&tmp, serde_json::to_vec(v)?)?;
    fs::rename(&tmp, path)
}
