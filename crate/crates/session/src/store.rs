//! On-disk layout, one directory per session:
//!
//! - `initial.json`: state at creation, the replay base
//! - `events.jsonl`: append-only event log
//! - `snapshot.json`: latest committed state, replaced atomically
//!
//! Events are appended before the snapshot is replaced, so recovery loads the
//! snapshot and replays any logged events it does not yet contain.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::SessionError;
use crate::state::{SessionEvent, SessionState};

const INITIAL: &str = "initial.json";
const SNAPSHOT: &str = "snapshot.json";
const EVENTS: &str = "events.jsonl";

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn temp_sibling(path: &Path) -> PathBuf {
    let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.{n}.tmp", std::process::id()))
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SessionError> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| SessionError::Storage(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug)]
pub struct SessionStore {
    root: PathBuf,
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(SessionStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn session_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    fn check_id(id: &str) -> Result<(), SessionError> {
        let ok = !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if ok {
            Ok(())
        } else {
            Err(SessionError::UnknownSession(id.to_string()))
        }
    }

    pub fn exists(&self, id: &str) -> bool {
        Self::check_id(id).is_ok() && self.session_dir(id).join(SNAPSHOT).is_file()
    }

    /// Persists a new session. The directory appears only once complete.
    pub fn create(&self, state: &SessionState) -> Result<(), SessionError> {
        Self::check_id(&state.session_id)?;
        let dir = self.session_dir(&state.session_id);
        if dir.exists() {
            return Err(SessionError::Storage(format!(
                "session directory {} already exists",
                dir.display()
            )));
        }
        let staging = temp_sibling(&dir);
        let result = (|| -> Result<(), SessionError> {
            fs::create_dir_all(&staging)?;
            let json = state.to_json();
            write_atomic(&staging.join(INITIAL), json.as_bytes())?;
            let mut log = File::create(staging.join(EVENTS))?;
            for ev in &state.event_log {
                writeln!(log, "{}", serde_json::to_string(ev)?)?;
            }
            log.sync_all()?;
            write_atomic(&staging.join(SNAPSHOT), json.as_bytes())?;
            fs::rename(&staging, &dir)?;
            Ok(())
        })();
        if result.is_err() {
            let _ = fs::remove_dir_all(&staging);
        }
        result
    }

    /// Appends the events `state` has beyond `persisted_events`, then
    /// replaces the snapshot.
    pub fn commit(
        &self,
        state: &SessionState,
        persisted_events: usize,
    ) -> Result<(), SessionError> {
        Self::check_id(&state.session_id)?;
        let dir = self.session_dir(&state.session_id);
        let new = state.event_log.get(persisted_events..).unwrap_or_default();
        if !new.is_empty() {
            let mut log = OpenOptions::new().append(true).open(dir.join(EVENTS))?;
            let mut buf = String::new();
            for ev in new {
                buf.push_str(&serde_json::to_string(ev)?);
                buf.push('\n');
            }
            log.write_all(buf.as_bytes())?;
            log.sync_all()?;
        }
        write_atomic(&dir.join(SNAPSHOT), state.to_json().as_bytes())
    }

    pub fn read_events(&self, id: &str) -> Result<Vec<SessionEvent>, SessionError> {
        Self::check_id(id)?;
        let f = File::open(self.session_dir(id).join(EVENTS))
            .map_err(|_| SessionError::UnknownSession(id.to_string()))?;
        let lines: Vec<String> = BufReader::new(f).lines().collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(ev) => out.push(ev),
                // a torn final line is an append that never committed
                Err(_) if i + 1 == lines.len() => break,
                Err(e) => {
                    return Err(SessionError::Storage(format!(
                        "{EVENTS} line {}: {e}",
                        i + 1
                    )))
                }
            }
        }
        Ok(out)
    }

    fn read_state(&self, id: &str, file: &str) -> Result<SessionState, SessionError> {
        Self::check_id(id)?;
        let text = fs::read_to_string(self.session_dir(id).join(file))
            .map_err(|_| SessionError::UnknownSession(id.to_string()))?;
        SessionState::from_json(&text)
    }

    pub fn load_initial(&self, id: &str) -> Result<SessionState, SessionError> {
        self.read_state(id, INITIAL)
    }

    pub fn load_snapshot(&self, id: &str) -> Result<SessionState, SessionError> {
        self.read_state(id, SNAPSHOT)
    }

    /// Latest snapshot plus any logged events it is missing.
    pub fn recover(&self, id: &str) -> Result<SessionState, SessionError> {
        let snap = self.load_snapshot(id)?;
        let events = self.read_events(id)?;
        let have = snap.event_log.len();
        SessionState::replay(snap, events.get(have..).unwrap_or_default())
    }

    /// Rebuilds the session from `initial.json` and the full log.
    pub fn replay_from_initial(&self, id: &str) -> Result<SessionState, SessionError> {
        let initial = self.load_initial(id)?;
        let events = self.read_events(id)?;
        SessionState::replay(initial, &events)
    }

    /// Ids of every persisted session, sorted.
    pub fn list(&self) -> Result<Vec<String>, SessionError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !name.starts_with('.') && self.exists(&name) {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }
}
