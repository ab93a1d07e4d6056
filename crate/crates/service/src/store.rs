//! Document persistence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid document key `{0}`")]
    InvalidKey(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Flat key → bytes storage grouped into collections. Keys and collection
/// names are restricted to `[A-Za-z0-9._-]` and must not start with a dot.
pub trait DocumentStore: Send + Sync {
    fn put(&self, collection: &str, key: &str, bytes: &[u8]) -> Result<(), StoreError>;
    fn get(&self, collection: &str, key: &str) -> Result<Option<Vec<u8>>, StoreError>;
    /// Keys in ascending order.
    fn list(&self, collection: &str) -> Result<Vec<String>, StoreError>;
}

fn check_key(key: &str) -> Result<(), StoreError> {
    let ok = !key.is_empty()
        && !key.starts_with('.')
        && key.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidKey(key.to_string()))
    }
}

/// One file per document under `root/collection/key`.
#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FileStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, collection: &str, key: &str) -> Result<PathBuf, StoreError> {
        check_key(collection)?;
        check_key(key)?;
        Ok(self.root.join(collection).join(key))
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

impl DocumentStore for FileStore {
    fn put(&self, collection: &str, key: &str, bytes: &[u8]) -> Result<(), StoreError> {
        let path = self.path(collection, key)?;
        let dir = path.parent().expect("document path has a parent");
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        // write-then-rename keeps readers from seeing partial documents
        let tmp = dir.join(format!(".{key}.tmp"));
        std::fs::write(&tmp, bytes).map_err(io(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io(&path))
    }

    fn get(&self, collection: &str, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        let path = self.path(collection, key)?;
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io(&path)(e)),
        }
    }

    fn list(&self, collection: &str) -> Result<Vec<String>, StoreError> {
        check_key(collection)?;
        let dir = self.root.join(collection);
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io(&dir)(e)),
        };
        let mut keys = Vec::new();
        for entry in entries {
            let name = entry.map_err(io(&dir))?.file_name().to_string_lossy().into_owned();
            if check_key(&name).is_ok() {
                keys.push(name);
            }
        }
        keys.sort();
        Ok(keys)
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    docs: Mutex<BTreeMap<(String, String), Vec<u8>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl DocumentStore for MemoryStore {
    fn put(&self, collection: &str, key: &str, bytes: &[u8]) -> Result<(), StoreError> {
        check_key(collection)?;
        check_key(key)?;
        self.docs.lock().expect("store poisoned").insert((collection.to_string(), key.to_string()), bytes.to_vec());
        Ok(())
    }

    fn get(&self, collection: &str, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        check_key(collection)?;
        check_key(key)?;
        Ok(self.docs.lock().expect("store poisoned").get(&(collection.to_string(), key.to_string())).cloned())
    }

    fn list(&self, collection: &str) -> Result<Vec<String>, StoreError> {
        check_key(collection)?;
        Ok(self
            .docs
            .lock()
            .expect("store poisoned")
            .keys()
            .filter(|(c, _)| c == collection)
            .map(|(_, k)| k.clone())
            .collect())
    }
}
