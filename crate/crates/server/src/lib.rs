//! The HTTP service: accounts and sessions, persistence, and the JSON API
//! over the group spaces and the mail gateway.

pub mod accounts;
pub mod api;
pub mod app;
pub mod clock;
pub mod error;
pub mod mailer;
pub mod store;

pub use api::router;
pub use app::{App, AppConfig};
