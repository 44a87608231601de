//! Mass production of personality-infused two-agent dialogues from Big
//! Five trait profiles, with automated back-testing of whether each
//! dialogue actually expresses the traits it was built from.
//!
//! The pipeline runs in stages, each with its own module:
//!
//! - [`persona`]: score-to-trait encoding, the descriptor table, and
//!   rendered personality descriptions
//! - [`rolegen`]: role-card creation over a chat backend
//! - [`topics`]: few-shot topic extraction from a source corpus
//! - [`dialogue`]: two-agent conversation orchestration
//! - [`backtest`]: per-dimension trait judging of finished dialogues
//! - [`metrics`]: success rates, agreement, kappa, diversity
//! - [`store`]: JSON-lines artifacts and the bench splits
//! - [`backend`]: live HTTP and deterministic scripted chat backends
//!
//! Batch stages fan out through [`exec::Exec`], which uses rayon when
//! the default `parallel` feature is enabled and plain iteration
//! otherwise.

pub mod backend;
pub mod backtest;
pub mod dialogue;
pub mod exec;
pub mod metrics;
pub mod persona;
pub mod rolegen;
pub mod store;
pub mod topics;

pub use backend::{BackendConfig, BackendError, ChatBackend, GenParams, ScriptedBackend};
pub use backtest::{BackTestRecord, Verdict};
pub use dialogue::{AblationConfig, Dialogue, Termination};
pub use exec::Exec;
pub use persona::{Dimension, Level, Polarity, Score, TraitProfile, TraitSpec};
pub use rolegen::RoleCard;
pub use topics::Topic;
