use thiserror::Error;

use crate::ids::{AreaId, CommentId, DocumentId, GroupId, ItemId, PollId, UserId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("unknown group {0}")]
    UnknownGroup(GroupId),
    #[error("unknown meeting area {0}")]
    UnknownArea(AreaId),
    #[error("unknown item {0}")]
    UnknownItem(ItemId),
    #[error("unknown comment {0}")]
    UnknownComment(CommentId),
    #[error("unknown document {0}")]
    UnknownDocument(DocumentId),
    #[error("unknown poll {0}")]
    UnknownPoll(PollId),
    #[error("document has no revision {0}")]
    UnknownRevision(u32),

    #[error("invalid group name: {0}")]
    InvalidName(&'static str),
    #[error("a group named {0:?} already exists")]
    DuplicateName(String),
    #[error("email address {0:?} is already registered")]
    DuplicateEmail(String),
    #[error("invalid email address {0:?}")]
    InvalidEmail(String),
    #[error("{field} exceeds {max} {unit}")]
    TooLong {
        field: &'static str,
        max: usize,
        unit: &'static str,
    },

    #[error("already a member of the group")]
    AlreadyMember,
    #[error("a join request is already pending")]
    AlreadyPending,
    #[error("no pending join request for this user")]
    NoPendingRequest,
    #[error("not a member of the group")]
    NotAMember,
    #[error("not authorized")]
    NotAuthorized,
    #[error("access denied")]
    AccessDenied,
    #[error("a meeting area cannot be linked to its own group")]
    SelfLink,

    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("comment target does not resolve within this meeting area")]
    DanglingTarget,
    #[error("comment has no item reference")]
    NoReference,

    #[error("in-text comments must be anchored on whitespace")]
    InvalidAnchor,
    #[error("document is not plain text")]
    NotPlainText,
    #[error("document is not an upload")]
    NotUploaded,
    #[error("offset {offset} is outside a text of {len} characters")]
    OffsetOutOfRange { offset: usize, len: usize },
    #[error("upload of {size} bytes exceeds the {cap} byte cap")]
    OversizeUpload { size: usize, cap: usize },
    #[error("text is not valid UTF-8")]
    InvalidEncoding,
    #[error("anchor has no position at revision {0}")]
    AnchorRevisionMismatch(u32),
    #[error("revision is stale, latest is {latest}")]
    StaleRevision { latest: u32 },

    #[error("poll is closed")]
    PollClosed,
    #[error("poll deadline has passed")]
    DeadlinePassed,
    #[error("voter is not eligible for this poll")]
    NotEligible,
    #[error("ballot does not match the poll's procedure")]
    ContentMismatch,
    #[error("ballot names an option the poll does not have")]
    InvalidOption,
    #[error("poll is already closed")]
    AlreadyClosed,
    #[error("ballot was sealed by an import and cannot be recast")]
    BallotSealed,

    #[error("message {0:?} was already accepted")]
    Duplicate(String),
    #[error("rating must be between 1 and 5")]
    InvalidRating,

    #[error("unsupported bundle format version {0}")]
    UnsupportedVersion(u32),
    #[error("integrity violation: {0}")]
    IntegrityViolation(String),
    #[error("storage failure: {0}")]
    Storage(String),
}
