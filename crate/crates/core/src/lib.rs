//! Group spaces, meeting areas, anchored discussion and decision procedures.
//!
//! [`Deme`] is the entry point; the modules hold the records it manages and
//! the pure functions behind its operations.

pub mod access;
pub mod activation;
pub mod bundle;
pub mod decision;
pub mod deme;
pub mod diff;
pub mod directory;
pub mod document;
pub mod error;
pub mod feedback;
pub mod ids;
pub mod model;
pub mod space;

pub use access::{Action, Relation};
pub use activation::{ActivationState, ActivationTarget};
pub use bundle::{ExportBundle, FORMAT_VERSION};
pub use deme::{ArchiveResult, ArchivedMessage, Commit, Deme, GroupHomepage, Scope, Sender, Storage};
pub use directory::{Directory, GroupSettings, JoinOutcome, ProfileUpdate};
pub use error::{Error, Result};
pub use ids::*;
pub use model::*;
pub use space::{GroupSpace, NewComment, PollView, Settings};
