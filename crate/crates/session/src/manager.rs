//! Concurrent access to many sessions.
//!
//! Each session has one writer at a time; a second concurrent mutation is
//! refused with [`SessionError::Busy`] rather than queued. Readers see the
//! latest committed state and never wait on a running mutation. Mutations run
//! on the blocking pool so a long induction does not stall other sessions.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use rulelab_core::Dataset;
use tokio::sync::Mutex;

use crate::error::SessionError;
use crate::state::{SessionConfig, SessionState};
use crate::store::SessionStore;

struct Handle {
    committed: RwLock<Arc<SessionState>>,
    writer: Arc<Mutex<()>>,
}

pub struct SessionManager {
    store: Option<SessionStore>,
    sessions: RwLock<BTreeMap<String, Arc<Handle>>>,
}

impl SessionManager {
    /// Sessions kept in memory only.
    pub fn in_memory() -> Self {
        SessionManager {
            store: None,
            sessions: RwLock::new(BTreeMap::new()),
        }
    }

    /// Persistent manager; sessions already in the store are recovered.
    pub fn with_store(store: SessionStore) -> Result<Self, SessionError> {
        let mut sessions = BTreeMap::new();
        for id in store.list()? {
            let state = store.recover(&id)?;
            sessions.insert(id, Arc::new(Handle::new(state)));
        }
        Ok(SessionManager {
            store: Some(store),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn store(&self) -> Option<&SessionStore> {
        self.store.as_ref()
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions
            .read()
            .expect("session map lock")
            .keys()
            .cloned()
            .collect()
    }

    /// Creates and persists a session with a fresh random id.
    pub fn create(&self, dataset: Dataset, config: SessionConfig) -> Result<String, SessionError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.create_with_id(&id, dataset, config)?;
        Ok(id)
    }

    pub fn create_with_id(
        &self,
        id: &str,
        dataset: Dataset,
        config: SessionConfig,
    ) -> Result<(), SessionError> {
        let state = SessionState::new(id, dataset, config)?;
        let mut map = self.sessions.write().expect("session map lock");
        if map.contains_key(id) {
            return Err(SessionError::Validation(format!(
                "session `{id}` already exists"
            )));
        }
        if let Some(store) = &self.store {
            store.create(&state)?;
        }
        map.insert(id.to_string(), Arc::new(Handle::new(state)));
        Ok(())
    }

    fn handle(&self, id: &str) -> Result<Arc<Handle>, SessionError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    /// Latest committed state.
    pub fn get(&self, id: &str) -> Result<Arc<SessionState>, SessionError> {
        Ok(self
            .handle(id)?
            .committed
            .read()
            .expect("state lock")
            .clone())
    }

    /// Runs `f` on a copy of the session and commits the copy if `f`
    /// succeeds. Nothing is kept when `f` fails.
    pub async fn mutate<T, F>(&self, id: &str, f: F) -> Result<T, SessionError>
    where
        T: Send + 'static,
        F: FnOnce(&mut SessionState) -> Result<T, SessionError> + Send + 'static,
    {
        let handle = self.handle(id)?;
        let _guard = handle
            .writer
            .clone()
            .try_lock_owned()
            .map_err(|_| SessionError::Busy(id.to_string()))?;
        let current = handle.committed.read().expect("state lock").clone();
        let store = self.store.clone();
        let (next, out) = tokio::task::spawn_blocking(move || {
            let mut s = (*current).clone();
            let persisted = s.event_log.len();
            let out = f(&mut s)?;
            if let Some(store) = &store {
                store.commit(&s, persisted)?;
            }
            Ok::<_, SessionError>((s, out))
        })
        .await
        .map_err(|e| SessionError::Storage(format!("mutation task failed: {e}")))??;
        *handle.committed.write().expect("state lock") = Arc::new(next);
        Ok(out)
    }
}

impl Handle {
    fn new(state: SessionState) -> Self {
        Handle {
            committed: RwLock::new(Arc::new(state)),
            writer: Arc::new(Mutex::new(())),
        }
    }
}
