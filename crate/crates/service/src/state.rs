use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use featline_core::{Diagnostic, FeatureModel, Session};
use featline_fd::Limits;

use crate::{ApiError, Config};

/// A registered model. Invalid models are kept so their diagnostics can be
/// read back.
#[derive(Debug)]
pub struct ModelEntry {
    pub model: FeatureModel,
    pub diagnostics: Vec<Diagnostic>,
}

impl ModelEntry {
    pub fn valid(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

pub(crate) struct SessionSlot {
    pub session: Arc<tokio::sync::Mutex<Session>>,
    pub model_id: String,
    last_used: Mutex<Instant>,
}

impl SessionSlot {
    fn touch(&self) {
        *self.last_used.lock().unwrap_or_else(|e| e.into_inner()) = Instant::now();
    }

    fn idle_since(&self) -> Instant {
        *self.last_used.lock().unwrap_or_else(|e| e.into_inner())
    }
}

struct Inner {
    config: Config,
    models: RwLock<HashMap<String, Arc<ModelEntry>>>,
    sessions: Mutex<HashMap<String, Arc<SessionSlot>>>,
}

/// Shared registries of models and sessions, keyed by opaque ids.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(config: Config) -> Self {
        AppState(Arc::new(Inner {
            config,
            models: RwLock::default(),
            sessions: Mutex::default(),
        }))
    }

    pub fn config(&self) -> &Config {
        &self.0.config
    }

    pub(crate) fn limits(&self) -> Limits {
        Limits {
            deadline: Some(Instant::now() + self.0.config.time_budget),
            cancel: None,
        }
    }

    pub fn add_model(&self, entry: ModelEntry) -> String {
        let id = uuid::Uuid::new_v4().to_string();
        self.0
            .models
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.clone(), Arc::new(entry));
        id
    }

    pub fn model(&self, id: &str) -> Result<Arc<ModelEntry>, ApiError> {
        self.0
            .models
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("model", id))
    }

    pub(crate) fn add_session(&self, model_id: &str, session: Session) -> String {
        let id = uuid::Uuid::new_v4().to_string();
        let slot = SessionSlot {
            session: Arc::new(tokio::sync::Mutex::new(session)),
            model_id: model_id.to_string(),
            last_used: Mutex::new(Instant::now()),
        };
        self.sessions().insert(id.clone(), Arc::new(slot));
        id
    }

    pub(crate) fn session(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        let slot = self
            .sessions()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))?;
        slot.touch();
        Ok(slot)
    }

    pub(crate) fn remove_session(&self, id: &str) -> bool {
        self.sessions().remove(id).is_some()
    }

    pub fn session_count(&self) -> usize {
        self.sessions().len()
    }

    /// Drops sessions idle for longer than the configured TTL and returns
    /// how many were dropped. Requests already holding a session finish
    /// normally.
    pub fn evict_idle(&self) -> usize {
        let ttl = self.0.config.session_ttl;
        let now = Instant::now();
        let mut sessions = self.sessions();
        let before = sessions.len();
        sessions.retain(|_, s| now.saturating_duration_since(s.idle_since()) <= ttl && !ttl.is_zero());
        before - sessions.len()
    }

    fn sessions(&self) -> std::sync::MutexGuard<'_, HashMap<String, Arc<SessionSlot>>> {
        self.0.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Raises its flag when dropped, which stops solver work started for a
/// request whose client went away.
pub(crate) struct CancelOnDrop(Option<Arc<AtomicBool>>);

impl CancelOnDrop {
    pub fn new() -> Self {
        CancelOnDrop(Some(Arc::new(AtomicBool::new(false))))
    }

    pub fn flag(&self) -> Arc<AtomicBool> {
        self.0.clone().unwrap_or_default()
    }

    /// The work finished; dropping no longer cancels.
    pub fn disarm(mut self) {
        self.0 = None;
    }
}

impl Drop for CancelOnDrop {
    fn drop(&mut self) {
        if let Some(f) = &self.0 {
            f.store(true, Ordering::Relaxed);
        }
    }
}
