//! Application and audit persistence.
//!
//! [`FileStore`] keeps one JSON file per application under `applications/`,
//! replaced atomically by write-then-rename, and an append-only
//! `audit.jsonl`. [`MemoryStore`] is the in-process equivalent.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

use super::audit::{AuditEvent, NewAuditEvent};
use super::Application;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt store record {origin}: {reason}")]
    Corrupt { origin: String, reason: String },
}

pub trait Store: Send + Sync {
    fn put_application(&self, app: &Application) -> Result<(), StoreError>;
    fn get_application(&self, id: &str) -> Result<Option<Application>, StoreError>;
    /// All applications, ordered by id.
    fn list_applications(&self) -> Result<Vec<Application>, StoreError>;
    /// Appends an event with the next sequence number and returns it.
    fn append_audit(&self, event: NewAuditEvent) -> Result<AuditEvent, StoreError>;
    /// Events with `sequence > after`, ascending.
    fn audit_after(&self, after: u64) -> Result<Vec<AuditEvent>, StoreError>;
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    apps: Mutex<BTreeMap<String, Application>>,
    audit: Mutex<Vec<AuditEvent>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Store for MemoryStore {
    fn put_application(&self, app: &Application) -> Result<(), StoreError> {
        self.apps
            .lock()
            .expect("store lock")
            .insert(app.application_id.clone(), app.clone());
        Ok(())
    }

    fn get_application(&self, id: &str) -> Result<Option<Application>, StoreError> {
        Ok(self.apps.lock().expect("store lock").get(id).cloned())
    }

    fn list_applications(&self) -> Result<Vec<Application>, StoreError> {
        Ok(self.apps.lock().expect("store lock").values().cloned().collect())
    }

    fn append_audit(&self, event: NewAuditEvent) -> Result<AuditEvent, StoreError> {
        let mut log = self.audit.lock().expect("store lock");
        let e = event.into_event(log.len() as u64 + 1);
        log.push(e.clone());
        Ok(e)
    }

    fn audit_after(&self, after: u64) -> Result<Vec<AuditEvent>, StoreError> {
        Ok(self
            .audit
            .lock()
            .expect("store lock")
            .iter()
            .filter(|e| e.sequence > after)
            .cloned()
            .collect())
    }
}

#[derive(Debug)]
pub struct FileStore {
    root: PathBuf,
    /// Last assigned sequence number; the lock also serializes log appends.
    last_sequence: Mutex<u64>,
}

fn corrupt(origin: &Path, reason: impl ToString) -> StoreError {
    StoreError::Corrupt {
        origin: origin.display().to_string(),
        reason: reason.to_string(),
    }
}

impl FileStore {
    /// Opens or creates a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("applications"))?;
        let store = Self {
            root,
            last_sequence: Mutex::new(0),
        };
        let events = store.read_audit()?;
        for (i, e) in events.iter().enumerate() {
            if e.sequence != i as u64 + 1 {
                return Err(corrupt(&store.audit_path(), format!("sequence gap at line {}", i + 1)));
            }
        }
        *store.last_sequence.lock().expect("store lock") = events.len() as u64;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn audit_path(&self) -> PathBuf {
        self.root.join("audit.jsonl")
    }

    fn app_path(&self, id: &str) -> PathBuf {
        self.root.join("applications").join(format!("{id}.json"))
    }

    fn read_audit(&self) -> Result<Vec<AuditEvent>, StoreError> {
        let path = self.audit_path();
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| corrupt(&path, e))?);
        }
        Ok(out)
    }

    fn read_app(path: &Path) -> Result<Application, StoreError> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| corrupt(path, e))
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Store for FileStore {
    fn put_application(&self, app: &Application) -> Result<(), StoreError> {
        if !valid_id(&app.application_id) {
            return Err(corrupt(Path::new(&app.application_id), "invalid application id"));
        }
        let path = self.app_path(&app.application_id);
        let tmp = path.with_extension("json.tmp");
        let bytes = serde_json::to_vec_pretty(app).expect("application serializes");
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn get_application(&self, id: &str) -> Result<Option<Application>, StoreError> {
        if !valid_id(id) {
            return Ok(None);
        }
        let path = self.app_path(id);
        if !path.exists() {
            return Ok(None);
        }
        Self::read_app(&path).map(Some)
    }

    fn list_applications(&self) -> Result<Vec<Application>, StoreError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(self.root.join("applications"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
            .collect();
        paths.sort();
        paths.iter().map(|p| Self::read_app(p)).collect()
    }

    fn append_audit(&self, event: NewAuditEvent) -> Result<AuditEvent, StoreError> {
        let mut last = self.last_sequence.lock().expect("store lock");
        let e = event.into_event(*last + 1);
        let mut line = serde_json::to_string(&e).expect("event serializes");
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.audit_path())?;
        f.write_all(line.as_bytes())?;
        f.sync_data()?;
        *last += 1;
        Ok(e)
    }

    fn audit_after(&self, after: u64) -> Result<Vec<AuditEvent>, StoreError> {
        let _guard = self.last_sequence.lock().expect("store lock");
        Ok(self
            .read_audit()?
            .into_iter()
            .filter(|e| e.sequence > after)
            .collect())
    }
}
