use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use deme_core::Error as CoreError;
use deme_mail::MailError;
use serde::Serialize;

use crate::accounts::AuthError;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("authentication required")]
    Unauthenticated,
    #[error("{0}")]
    Auth(#[from] AuthError),
    #[error("{0}")]
    Core(CoreError),
    #[error("{0}")]
    Mail(MailError),
    #[error("{0}")]
    BadRequest(String),
    #[error("operator rights required")]
    Forbidden,
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        ApiError::Core(e)
    }
}

impl From<MailError> for ApiError {
    fn from(e: MailError) -> Self {
        match e {
            MailError::Core(c) => ApiError::Core(c),
            other => ApiError::Mail(other),
        }
    }
}

#[derive(Serialize)]
struct Body {
    error: String,
    message: String,
}

/// `UnknownGroup(..)` becomes `unknown_group`.
fn code_of(debug: &str) -> String {
    let name = debug.split(['(', ' ', '{']).next().unwrap_or_default();
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

fn core_status(e: &CoreError) -> StatusCode {
    use CoreError::*;
    match e {
        UnknownUser(_) | UnknownGroup(_) | UnknownArea(_) | UnknownItem(_) | UnknownComment(_) | UnknownDocument(_)
        | UnknownPoll(_) | UnknownRevision(_) => StatusCode::NOT_FOUND,
        AccessDenied | NotAuthorized | NotAMember | NotEligible => StatusCode::FORBIDDEN,
        DuplicateName(_)
        | DuplicateEmail(_)
        | AlreadyMember
        | AlreadyPending
        | Duplicate(_)
        | AlreadyClosed
        | PollClosed
        | DeadlinePassed
        | StaleRevision { .. }
        | BallotSealed => StatusCode::CONFLICT,
        OversizeUpload { .. } => StatusCode::PAYLOAD_TOO_LARGE,
        Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Unauthenticated => StatusCode::UNAUTHORIZED,
            ApiError::Auth(AuthError::BadCredentials) => StatusCode::UNAUTHORIZED,
            ApiError::Auth(AuthError::RateLimited) => StatusCode::TOO_MANY_REQUESTS,
            ApiError::Core(e) => core_status(e),
            ApiError::Mail(e) => match e {
                MailError::UnknownTarget => StatusCode::NOT_FOUND,
                MailError::AccessDenied | MailError::NotAuthorized | MailError::UnknownSender(_) => {
                    StatusCode::FORBIDDEN
                }
                MailError::Duplicate(_) => StatusCode::CONFLICT,
                MailError::Malformed(_) | MailError::MalformedArchive(_) => StatusCode::BAD_REQUEST,
                _ => StatusCode::UNPROCESSABLE_ENTITY,
            },
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Forbidden => StatusCode::FORBIDDEN,
        }
    }

    pub fn code(&self) -> String {
        match self {
            ApiError::Unauthenticated => "unauthenticated".into(),
            ApiError::Auth(e) => code_of(&format!("{e:?}")),
            ApiError::Core(e) => code_of(&format!("{e:?}")),
            ApiError::Mail(e) => code_of(&format!("{e:?}")),
            ApiError::BadRequest(_) => "bad_request".into(),
            ApiError::Forbidden => "not_authorized".into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!("{self}");
        }
        let body = Body {
            error: self.code(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}
