//! Labeling sessions: the label/induce/edit loop as an event-sourced state
//! machine, its on-disk store, and the HTTP API the studio talks to.

pub mod error;
pub mod export;
pub mod http;
pub mod manager;
pub mod state;
pub mod store;

pub use error::SessionError;
pub use export::{ExportDocument, ExportEntry, ExportSummary, Provenance};
pub use http::{router, serve, AppState};
pub use manager::SessionManager;
pub use state::{
    AutoLabelOutcome, EventKind, LabelState, PreviewOutcome, ProgressStats, SessionConfig,
    SessionEvent, SessionState,
};
pub use store::{write_atomic, SessionStore};
