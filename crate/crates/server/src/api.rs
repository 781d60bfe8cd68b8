//! HTTP routes.
//!
//! Requests authenticate with `Authorization: Bearer <token>` or the
//! `deme_session` cookie. A missing, unknown or expired token leaves the
//! request anonymous; mutating routes then answer 401.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE, COOKIE, SET_COOKIE};
use axum::http::request::Parts;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use deme_core::bundle::MEDIA_TYPE;
use deme_core::decision::BallotContent;
use deme_core::document::DocumentSource;
use deme_core::feedback::FeedbackScope;
use deme_core::{
    ActivationState, ActivationTarget, AnchorId, AreaId, CommentId, DocumentId, ExportBundle, GroupAccess, GroupId,
    GroupSettings, IndexOrder, ItemId, ItemKind, ItemSpec, JoinPolicy, NewComment, PollId, ProfileUpdate, Role, UserId,
};
use deme_mail::notify::Event;
use serde::{Deserialize, Serialize};

use crate::accounts::{Session, MIN_PASSWORD_CHARS};
use crate::app::App;
use crate::error::ApiError;

pub type Shared = Arc<App>;
type ApiResult<T> = Result<T, ApiError>;

pub const SESSION_COOKIE: &str = "deme_session";
pub const DELIVERY_HEADER: &str = "x-deme-delivery-key";
/// Smallest request body limit; raised to fit a base64-encoded upload at the
/// configured cap.
pub const BODY_LIMIT: usize = 64 * 1024 * 1024;

fn session_token(parts: &Parts) -> Option<String> {
    if let Some(value) = parts.headers.get(AUTHORIZATION).and_then(|v| v.to_str().ok()) {
        if let Some(token) = value.strip_prefix("Bearer ") {
            return Some(token.trim().to_string());
        }
    }
    parts
        .headers
        .get_all(COOKIE)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(';'))
        .find_map(|pair| {
            let (name, value) = pair.trim().split_once('=')?;
            (name == SESSION_COOKIE).then(|| value.to_string())
        })
}

/// The requesting user, if any.
pub struct Viewer(pub Option<UserId>);

impl FromRequestParts<Shared> for Viewer {
    type Rejection = Infallible;

    async fn from_request_parts(parts: &mut Parts, app: &Shared) -> Result<Self, Self::Rejection> {
        let now = app.clock.now();
        Ok(Viewer(
            session_token(parts).and_then(|t| app.accounts.session_user(&t, now)),
        ))
    }
}

/// A request that must carry a live session.
pub struct Authed(pub UserId);

impl FromRequestParts<Shared> for Authed {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &Shared) -> Result<Self, Self::Rejection> {
        match Viewer::from_request_parts(parts, app).await {
            Ok(Viewer(Some(user))) => Ok(Authed(user)),
            _ => Err(ApiError::Unauthenticated),
        }
    }
}

fn created<T: Serialize>(value: T) -> Response {
    (StatusCode::CREATED, Json(value)).into_response()
}

fn announce(app: &App, event: Event) {
    let at = app.clock.now();
    match app.gateway.fan_out(event, at) {
        Ok(messages) => {
            for m in messages {
                if let Err(e) = app.mailer.deliver(&m) {
                    tracing::warn!("could not spool {}: {e}", m.message_id);
                }
            }
        }
        Err(e) => tracing::warn!("no notifications for {event:?}: {e}"),
    }
}

pub fn router(app: Shared) -> Router {
    let body_limit = BODY_LIMIT.max(app.upload_cap / 3 * 4 + 1024 * 1024);
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/session", post(login).delete(logout))
        .route("/users", post(register))
        .route("/users/{user}", get(user_profile))
        .route("/me", get(me).patch(update_me))
        .route("/me/password", put(change_password))
        .route("/groups", get(list_groups).post(create_group))
        .route("/groups/import", post(import_group))
        .route("/groups/{group}", get(homepage).patch(configure_group))
        .route("/groups/{group}/members", get(members))
        .route("/groups/{group}/join", post(join))
        .route("/groups/{group}/leave", post(leave))
        .route("/groups/{group}/requests/{user}/approve", post(approve))
        .route("/groups/{group}/requests/{user}/reject", post(reject))
        .route("/groups/{group}/members/{user}/role", put(set_role))
        .route("/groups/{group}/areas", get(list_areas).post(create_area))
        .route("/groups/{group}/export", get(export_group))
        .route("/groups/{group}/feedback", get(group_feedback))
        .route("/areas/{area}", get(area))
        .route("/areas/{area}/links", post(link_area))
        .route("/areas/{area}/items", get(folio).post(post_item))
        .route("/areas/{area}/comments", get(comments_index).post(post_comment))
        .route("/areas/{area}/archive", post(import_archive))
        .route("/items/{item}", get(item))
        .route("/items/{item}/retract", post(retract_item))
        .route("/comments/{comment}", get(comment))
        .route("/comments/{comment}/retract", post(retract_comment))
        .route("/activation", post(activation))
        .route("/documents/{document}", get(document))
        .route("/documents/{document}/revisions", post(revise_document))
        .route("/documents/{document}/revisions/{revision}", get(document_revision))
        .route("/documents/{document}/anchors", get(anchors))
        .route("/documents/{document}/annotated", get(annotated))
        .route("/polls/{poll}", get(poll))
        .route("/polls/{poll}/tally", get(tally))
        .route("/polls/{poll}/ballots", post(cast_ballot))
        .route("/polls/{poll}/close", post(close_poll))
        .route("/feedback", get(platform_feedback).post(submit_feedback))
        .route("/mail/inbound", post(inbound_mail))
        .layer(axum::extract::DefaultBodyLimit::max(body_limit))
        .with_state(app)
}

/// Every route that changes state, as `(method, path template)`.
pub const MUTATING_ROUTES: &[(&str, &str)] = &[
    ("DELETE", "/session"),
    ("POST", "/users"),
    ("PATCH", "/me"),
    ("PUT", "/me/password"),
    ("POST", "/groups"),
    ("POST", "/groups/import"),
    ("PATCH", "/groups/{group}"),
    ("POST", "/groups/{group}/join"),
    ("POST", "/groups/{group}/leave"),
    ("POST", "/groups/{group}/requests/{user}/approve"),
    ("POST", "/groups/{group}/requests/{user}/reject"),
    ("PUT", "/groups/{group}/members/{user}/role"),
    ("POST", "/groups/{group}/areas"),
    ("POST", "/areas/{area}/links"),
    ("POST", "/areas/{area}/items"),
    ("POST", "/areas/{area}/comments"),
    ("POST", "/areas/{area}/archive"),
    ("POST", "/items/{item}/retract"),
    ("POST", "/comments/{comment}/retract"),
    ("POST", "/documents/{document}/revisions"),
    ("POST", "/polls/{poll}/ballots"),
    ("POST", "/polls/{poll}/close"),
    ("POST", "/feedback"),
    ("POST", "/mail/inbound"),
];

// sessions and accounts

#[derive(Deserialize)]
struct Login {
    email: String,
    password: String,
}

async fn login(State(app): State<Shared>, Json(body): Json<Login>) -> ApiResult<Response> {
    let session: Session = app
        .accounts
        .authenticate(&app.deme, &body.email, &body.password, app.clock.now())?;
    let max_age = (session.expires_at - session.issued_at).num_seconds();
    let cookie = format!(
        "{SESSION_COOKIE}={}; Path=/; HttpOnly; SameSite=Lax; Max-Age={max_age}",
        session.token
    );
    Ok((StatusCode::CREATED, [(SET_COOKIE, cookie)], Json(session)).into_response())
}

async fn logout(Authed(_): Authed, State(app): State<Shared>, headers: HeaderMap) -> ApiResult<StatusCode> {
    let (mut parts, _) = axum::http::Request::new(()).into_parts();
    parts.headers = headers;
    if let Some(token) = session_token(&parts) {
        app.accounts.revoke(&token)?;
    }
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct Registration {
    display_name: String,
    email: String,
    password: String,
}

/// Operators create accounts. The very first account needs no session and
/// becomes the operator.
async fn register(Viewer(viewer): Viewer, State(app): State<Shared>, body: Bytes) -> ApiResult<Response> {
    let bootstrap = app.deme.with_directory(|d| d.users().next().is_none());
    if !bootstrap {
        let actor = viewer.ok_or(ApiError::Unauthenticated)?;
        if !app.deme.is_operator(actor) {
            return Err(ApiError::Forbidden);
        }
    }
    let body: Registration = serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    if body.password.chars().count() < MIN_PASSWORD_CHARS {
        return Err(ApiError::BadRequest(format!(
            "passwords need at least {MIN_PASSWORD_CHARS} characters"
        )));
    }
    let member = app.deme.register_user(&body.display_name, Some(&body.email))?;
    app.accounts.set_password(member.user_id, &body.password)?;
    Ok(created(member))
}

#[derive(Serialize)]
struct PublicProfile {
    user_id: UserId,
    display_name: String,
    profile: std::collections::BTreeMap<String, String>,
}

async fn user_profile(
    Viewer(_): Viewer,
    State(app): State<Shared>,
    Path(user): Path<UserId>,
) -> ApiResult<Json<PublicProfile>> {
    let m = app.deme.user(user)?;
    Ok(Json(PublicProfile {
        user_id: m.user_id,
        display_name: m.display_name,
        profile: m.profile,
    }))
}

async fn me(Authed(user): Authed, State(app): State<Shared>) -> ApiResult<Json<deme_core::Member>> {
    Ok(Json(app.deme.user(user)?))
}

async fn update_me(
    Authed(user): Authed,
    State(app): State<Shared>,
    Json(update): Json<ProfileUpdate>,
) -> ApiResult<Json<deme_core::Member>> {
    Ok(Json(app.deme.update_user(user, update)?))
}

#[derive(Deserialize)]
struct PasswordChange {
    current: String,
    new: String,
}

async fn change_password(
    Authed(user): Authed,
    State(app): State<Shared>,
    Json(body): Json<PasswordChange>,
) -> ApiResult<StatusCode> {
    let email = app.deme.user(user)?.email.unwrap_or_default();
    app.accounts
        .authenticate(&app.deme, &email, &body.current, app.clock.now())?;
    app.accounts.set_password(user, &body.new)?;
    Ok(StatusCode::NO_CONTENT)
}

// groups

async fn list_groups(State(app): State<Shared>) -> Json<Vec<deme_core::deme::GroupSummary>> {
    Json(app.deme.groups())
}

#[derive(Deserialize)]
struct NewGroup {
    name: String,
    #[serde(default)]
    description: String,
    access: GroupAccess,
    join_policy: JoinPolicy,
}

async fn create_group(
    Authed(user): Authed,
    State(app): State<Shared>,
    Json(body): Json<NewGroup>,
) -> ApiResult<Response> {
    let g = app.deme.create_group(
        &body.name,
        &body.description,
        body.access,
        body.join_policy,
        user,
        app.clock.now(),
    )?;
    Ok(created(g))
}

async fn homepage(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(group): Path<GroupId>,
) -> ApiResult<Json<deme_core::GroupHomepage>> {
    Ok(Json(app.deme.homepage(group, viewer)?))
}

async fn configure_group(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(group): Path<GroupId>,
    Json(settings): Json<GroupSettings>,
) -> ApiResult<Json<deme_core::Group>> {
    Ok(Json(app.deme.configure_group(group, user, settings)?))
}

async fn members(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(group): Path<GroupId>,
) -> ApiResult<Json<Vec<deme_core::deme::MemberEntry>>> {
    Ok(Json(app.deme.members(group, viewer)?))
}

async fn join(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(group): Path<GroupId>,
) -> ApiResult<Json<deme_core::JoinOutcome>> {
    Ok(Json(app.deme.join_group(group, user, app.clock.now())?))
}

async fn leave(Authed(user): Authed, State(app): State<Shared>, Path(group): Path<GroupId>) -> ApiResult<StatusCode> {
    app.deme.leave_group(group, user)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn approve(
    Authed(actor): Authed,
    State(app): State<Shared>,
    Path((group, user)): Path<(GroupId, UserId)>,
) -> ApiResult<Json<deme_core::Membership>> {
    Ok(Json(app.deme.approve_join(group, actor, user, app.clock.now())?))
}

async fn reject(
    Authed(actor): Authed,
    State(app): State<Shared>,
    Path((group, user)): Path<(GroupId, UserId)>,
) -> ApiResult<StatusCode> {
    app.deme.reject_join(group, actor, user)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct RoleChange {
    role: Role,
}

async fn set_role(
    Authed(actor): Authed,
    State(app): State<Shared>,
    Path((group, user)): Path<(GroupId, UserId)>,
    Json(body): Json<RoleChange>,
) -> ApiResult<Json<deme_core::Membership>> {
    Ok(Json(app.deme.set_role(group, actor, user, body.role)?))
}

async fn list_areas(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(group): Path<GroupId>,
) -> ApiResult<Json<Vec<deme_core::MeetingArea>>> {
    let home = app.deme.homepage(group, viewer)?;
    let areas = home
        .areas
        .iter()
        .map(|a| app.deme.area(a.id, viewer))
        .collect::<Result<_, _>>()?;
    Ok(Json(areas))
}

#[derive(Deserialize)]
struct NewArea {
    title: String,
    #[serde(default)]
    description: String,
}

async fn create_area(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(group): Path<GroupId>,
    Json(body): Json<NewArea>,
) -> ApiResult<Response> {
    let a = app
        .deme
        .create_meeting_area(group, user, &body.title, &body.description, app.clock.now())?;
    Ok(created(a))
}

async fn export_group(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(group): Path<GroupId>,
) -> ApiResult<Response> {
    let bundle = app.deme.export_group(group, user, app.clock.now())?;
    Ok(([(CONTENT_TYPE, MEDIA_TYPE)], bundle.to_json()).into_response())
}

#[derive(Deserialize)]
struct ImportQuery {
    rename: Option<String>,
}

async fn import_group(
    Authed(user): Authed,
    State(app): State<Shared>,
    Query(query): Query<ImportQuery>,
    body: Bytes,
) -> ApiResult<Response> {
    let bundle = ExportBundle::from_json(&body)?;
    let g = app.deme.import_group(bundle, user, query.rename.as_deref())?;
    Ok(created(g))
}

async fn group_feedback(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(group): Path<GroupId>,
) -> ApiResult<Json<Vec<deme_core::feedback::FeedbackRecord>>> {
    Ok(Json(app.deme.group_feedback(group, user)?))
}

// meeting areas

async fn area(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(area): Path<AreaId>,
) -> ApiResult<Json<deme_core::MeetingArea>> {
    Ok(Json(app.deme.area(area, viewer)?))
}

#[derive(Deserialize)]
struct Link {
    group: GroupId,
}

async fn link_area(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(area): Path<AreaId>,
    Json(body): Json<Link>,
) -> ApiResult<Json<deme_core::MeetingArea>> {
    Ok(Json(app.deme.link_area(area, body.group, user)?))
}

async fn folio(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(area): Path<AreaId>,
) -> ApiResult<Json<Vec<deme_core::Item>>> {
    Ok(Json(app.deme.folio(area, viewer)?))
}

async fn post_item(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(area): Path<AreaId>,
    Json(spec): Json<ItemSpec>,
) -> ApiResult<Response> {
    let item = app.deme.post_item(area, user, spec, app.clock.now())?;
    let event = match item.kind {
        ItemKind::Poll { poll_id } | ItemKind::Decision { poll_id } => Event::PollOpened(poll_id),
        _ => Event::NewItem(item.id),
    };
    announce(&app, event);
    Ok(created(item))
}

#[derive(Deserialize)]
struct IndexQuery {
    order: Option<IndexOrder>,
}

async fn comments_index(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(area): Path<AreaId>,
    Query(query): Query<IndexQuery>,
) -> ApiResult<Json<Vec<deme_core::CommentHeader>>> {
    let order = query.order.unwrap_or(IndexOrder::Threaded);
    Ok(Json(app.deme.comments_index(area, viewer, order)?))
}

async fn post_comment(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(area): Path<AreaId>,
    Json(draft): Json<NewComment>,
) -> ApiResult<Response> {
    let c = app.deme.post_comment(area, user, draft, app.clock.now())?;
    announce(&app, Event::NewComment(c.id));
    Ok(created(c))
}

/// Imports an mbox archive sent as the raw request body.
async fn import_archive(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(area): Path<AreaId>,
    body: Bytes,
) -> ApiResult<Json<deme_mail::archive::ImportReport>> {
    let report = app
        .gateway
        .import_mail_archive(area, user, &body, &Default::default(), app.clock.now())?;
    Ok(Json(report))
}

// items and comments

async fn item(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(item): Path<ItemId>,
) -> ApiResult<Json<deme_core::Item>> {
    Ok(Json(app.deme.item(item, viewer)?))
}

async fn retract_item(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(item): Path<ItemId>,
) -> ApiResult<Json<deme_core::Item>> {
    Ok(Json(app.deme.retract_item(item, user)?))
}

async fn comment(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(comment): Path<CommentId>,
) -> ApiResult<Json<deme_core::Comment>> {
    Ok(Json(app.deme.comment(comment, viewer)?))
}

async fn retract_comment(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(comment): Path<CommentId>,
) -> ApiResult<Json<deme_core::Comment>> {
    Ok(Json(app.deme.retract_comment(comment, user)?))
}

#[derive(Deserialize)]
struct Activation {
    target: ActivationTarget,
    #[serde(default)]
    prior: ActivationState,
}

/// Computes the next viewer activation. Reads only.
async fn activation(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Json(body): Json<Activation>,
) -> ApiResult<Json<ActivationState>> {
    Ok(Json(app.deme.activate(viewer, body.target, body.prior)?))
}

// documents

async fn document(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(document): Path<DocumentId>,
) -> ApiResult<Json<deme_core::document::Document>> {
    Ok(Json(app.deme.document(document, viewer)?))
}

/// Either new text for a plain-text document or a replacement upload.
#[derive(Deserialize)]
#[serde(untagged)]
enum Revision {
    Text { text: String },
    Upload { source: DocumentSource },
}

async fn revise_document(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(document): Path<DocumentId>,
    Json(body): Json<Revision>,
) -> ApiResult<Response> {
    let at = app.clock.now();
    let rev = match body {
        Revision::Text { text } => app.deme.revise_document(document, text, user, at)?,
        Revision::Upload { source } => app.deme.revise_upload(document, source, user, at)?,
    };
    Ok(created(rev))
}

async fn document_revision(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path((document, revision)): Path<(DocumentId, u32)>,
) -> ApiResult<Json<deme_core::document::DocumentRevision>> {
    Ok(Json(app.deme.document_revision(document, Some(revision), viewer)?))
}

async fn anchors(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(document): Path<DocumentId>,
) -> ApiResult<Json<Vec<deme_core::document::Anchor>>> {
    Ok(Json(app.deme.anchors(document, viewer)?))
}

#[derive(Deserialize)]
struct AnnotatedQuery {
    revision: Option<u32>,
    active: Option<AnchorId>,
}

async fn annotated(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(document): Path<DocumentId>,
    Query(query): Query<AnnotatedQuery>,
) -> ApiResult<Json<deme_core::document::AnnotatedDocument>> {
    Ok(Json(app.deme.annotated(
        document,
        query.revision,
        viewer,
        query.active,
    )?))
}

// polls

async fn poll(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(poll): Path<PollId>,
) -> ApiResult<Json<deme_core::PollView>> {
    Ok(Json(app.deme.poll_view(poll, viewer, app.clock.now())?))
}

async fn tally(
    Viewer(viewer): Viewer,
    State(app): State<Shared>,
    Path(poll): Path<PollId>,
) -> ApiResult<Json<deme_core::decision::Tally>> {
    Ok(Json(app.deme.tally(poll, viewer, app.clock.now())?))
}

async fn cast_ballot(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(poll): Path<PollId>,
    Json(content): Json<BallotContent>,
) -> ApiResult<Response> {
    let ballot = app.deme.cast_ballot(poll, user, content, app.clock.now())?;
    Ok(created(ballot))
}

async fn close_poll(
    Authed(user): Authed,
    State(app): State<Shared>,
    Path(poll): Path<PollId>,
) -> ApiResult<Json<deme_core::decision::Outcome>> {
    let outcome = app.deme.close_poll(poll, user, app.clock.now())?;
    announce(&app, Event::PollClosed(poll));
    Ok(Json(outcome))
}

// feedback

#[derive(Deserialize)]
struct NewFeedback {
    scope: FeedbackScope,
    rating: u8,
    #[serde(default)]
    text: String,
    #[serde(default)]
    anonymous: bool,
}

async fn submit_feedback(
    Authed(user): Authed,
    State(app): State<Shared>,
    Json(body): Json<NewFeedback>,
) -> ApiResult<Response> {
    let record = app.deme.submit_feedback(
        user,
        body.scope,
        body.rating,
        body.text,
        body.anonymous,
        app.clock.now(),
    )?;
    Ok(created(record))
}

async fn platform_feedback(
    Authed(user): Authed,
    State(app): State<Shared>,
) -> ApiResult<Json<Vec<deme_core::feedback::FeedbackRecord>>> {
    Ok(Json(app.deme.platform_feedback(user)?))
}

// mail

/// Accepts one raw reply from the local MTA.
async fn inbound_mail(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let presented = headers.get(DELIVERY_HEADER).and_then(|v| v.to_str().ok());
    let authorized = match (&app.delivery_key, presented) {
        (Some(key), Some(p)) => constant_time_eq(key.as_bytes(), p.as_bytes()),
        _ => false,
    };
    if !authorized {
        return Err(ApiError::Unauthenticated);
    }
    match app.gateway.receive(&body, app.clock.now()) {
        Ok(c) => {
            announce(&app, Event::NewComment(c.id));
            Ok(created(c))
        }
        // a redelivered message was already posted; acknowledge it so the MTA stops retrying
        Err(deme_mail::MailError::Duplicate(id)) => Ok(Json(serde_json::json!({ "duplicate": id })).into_response()),
        Err(e) => Err(e.into()),
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}
