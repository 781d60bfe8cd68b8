//! Mail for deme: notifications out, replies in, and mailing-list archives
//! imported wholesale.
//!
//! Replies are routed by a signed token in the plus-extension of the reply
//! address (`deme+<token>@example.org`), so the subject line is free for
//! humans and mail clients to mangle.

pub mod archive;
pub mod inbound;
pub mod mbox;
pub mod notify;
pub mod token;
pub mod wire;

use std::collections::HashSet;
use std::sync::Arc;

use deme_core::{AreaId, CommentId, Deme, Error as CoreError};
use parking_lot::Mutex;

pub use archive::ImportReport;
pub use inbound::InboundPosting;
pub use notify::Event;
pub use token::{RouteTarget, RoutingToken, TokenKey};
pub use wire::{Mailbox, Message, Outbound};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MailError {
    #[error("routing target does not exist")]
    UnknownTarget,
    #[error("access denied")]
    AccessDenied,
    #[error("not authorized")]
    NotAuthorized,
    #[error("subscriber has notifications turned off or no address")]
    NotificationsDisabled,
    #[error("sender {0} is not a registered member")]
    UnknownSender(String),
    #[error("missing or invalid routing token")]
    BadToken,
    #[error("message {0} was already accepted")]
    Duplicate(String),
    #[error("message has no plain-text part")]
    NoTextPart,
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("malformed archive: {0}")]
    MalformedArchive(String),
    #[error(transparent)]
    Core(CoreError),
}

impl From<CoreError> for MailError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::AccessDenied => MailError::AccessDenied,
            CoreError::NotAuthorized => MailError::NotAuthorized,
            CoreError::Duplicate(m) => MailError::Duplicate(m),
            other => MailError::Core(other),
        }
    }
}

impl From<wire::WireError> for MailError {
    fn from(e: wire::WireError) -> Self {
        match e {
            wire::WireError::Malformed(m) => MailError::Malformed(m),
        }
    }
}

pub type Result<T, E = MailError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct MailConfig {
    /// Domain of the gateway's own addresses.
    pub domain: String,
    /// Local part before the `+token` extension.
    pub local_part: String,
    /// Base URL for links in notification footers, without a trailing slash.
    pub web_base: String,
    pub key: TokenKey,
}

impl MailConfig {
    pub fn new(domain: &str, web_base: &str, key: TokenKey) -> Self {
        MailConfig {
            domain: domain.to_ascii_lowercase(),
            local_part: "deme".to_string(),
            web_base: web_base.trim_end_matches('/').to_string(),
            key,
        }
    }

    pub fn address_for(&self, token: &str) -> String {
        format!("{}+{}@{}", self.local_part, token, self.domain)
    }

    /// The token in one of our reply addresses, if `address` is one.
    pub fn token_in<'a>(&self, address: &'a str) -> Option<&'a str> {
        let (local, domain) = address.rsplit_once('@')?;
        if !domain.eq_ignore_ascii_case(&self.domain) {
            return None;
        }
        let (base, token) = local.split_once('+')?;
        base.eq_ignore_ascii_case(&self.local_part).then_some(token)
    }
}

pub struct Gateway {
    deme: Arc<Deme>,
    config: MailConfig,
    /// Comments a notification has gone out for, so replies can thread.
    notified: Mutex<HashSet<CommentId>>,
}

impl Gateway {
    pub fn new(deme: Arc<Deme>, config: MailConfig) -> Self {
        Gateway {
            deme,
            config,
            notified: Mutex::new(HashSet::new()),
        }
    }

    pub fn config(&self) -> &MailConfig {
        &self.config
    }

    pub fn deme(&self) -> &Arc<Deme> {
        &self.deme
    }

    /// The area a routing target lives in, if it exists.
    pub fn target_area(&self, target: RouteTarget, area_hint: Option<AreaId>) -> Option<AreaId> {
        match target {
            RouteTarget::Global => {
                let area = area_hint?;
                let g = self.deme.owner_of(area)?;
                self.deme
                    .with_space(g, |s, _| s.area(area).is_ok())
                    .ok()
                    .filter(|&ok| ok)
                    .map(|_| area)
            }
            RouteTarget::Item(i) => {
                let g = self.deme.owner_of(i)?;
                self.deme
                    .with_space(g, |s, _| s.item(i).map(|i| i.area).ok())
                    .ok()
                    .flatten()
            }
            RouteTarget::Comment(c) => {
                let g = self.deme.owner_of(c)?;
                self.deme
                    .with_space(g, |s, _| s.comment(c).map(|c| c.area).ok())
                    .ok()
                    .flatten()
            }
        }
    }

    pub fn encode_token(&self, area: AreaId, target: RouteTarget) -> Result<String> {
        if self.target_area(target, Some(area)) != Some(area) {
            return Err(MailError::UnknownTarget);
        }
        Ok(token::encode(&self.config.key, RoutingToken { area, target }))
    }

    /// Decodes and verifies a token against the live target.
    pub fn decode_token(&self, token: &str) -> Result<RoutingToken> {
        let raw = token::parse(token).ok_or(MailError::BadToken)?;
        let area = self.target_area(raw.target, raw.area_hint).ok_or(MailError::BadToken)?;
        raw.verify(&self.config.key, area).ok_or(MailError::BadToken)
    }
}
