//! Group export bundles.
//!
//! A bundle is one JSON document holding everything a group owns. Its
//! `content` is fully determined by the group's state, so exporting an
//! imported bundle reproduces the same bytes; only `instance` varies.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::decision::Poll;
use crate::decision::{count, SealedBallots};
use crate::directory::{check_group_name, Directory};
use crate::document::{is_anchor_whitespace, Anchor, AnchorPosition, Document, DocumentFormat};
use crate::error::{Error, Result};
use crate::feedback::{check_rating, FeedbackRecord, FeedbackScope};
use crate::ids::{CommentId, GroupId, ItemId, UserId};
use crate::model::{
    check_body, check_chars, check_title, Comment, CommentTarget, Group, Item, ItemKind, MeetingArea, Member,
    Timestamp, MAX_TITLE_CHARS,
};
use crate::space::GroupSpace;

pub const FORMAT_VERSION: u32 = 1;
pub const MEDIA_TYPE: &str = "application/vnd.deme.group+json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub exported_at: Timestamp,
    pub generator: String,
}

/// A linked group that is not part of the bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalGroup {
    pub id: GroupId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleContent {
    pub group: Group,
    /// Every user referenced anywhere in the bundle, sorted by id.
    pub users: Vec<Member>,
    pub external_groups: Vec<ExternalGroup>,
    pub areas: Vec<MeetingArea>,
    pub items: Vec<Item>,
    pub documents: Vec<Document>,
    pub anchors: Vec<Anchor>,
    pub comments: Vec<Comment>,
    /// Secret-ballot polls carry only sealed aggregates, never ballots.
    pub polls: Vec<Poll>,
    pub feedback: Vec<FeedbackRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub format_version: u32,
    pub instance: InstanceMetadata,
    pub content: BundleContent,
}

impl ExportBundle {
    /// Parses a bundle, checking the format version before anything else.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            format_version: u32,
        }
        let probe: Probe = serde_json::from_slice(bytes)
            .map_err(|e| Error::IntegrityViolation(format!("bundle has no readable format_version: {e}")))?;
        if probe.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(probe.format_version));
        }
        serde_json::from_slice(bytes).map_err(|e| Error::IntegrityViolation(format!("malformed bundle: {e}")))
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("bundles always serialize")
    }

    /// The serialized content without instance metadata.
    pub fn canonical_content(&self) -> Vec<u8> {
        serde_json::to_vec(&self.content).expect("bundles always serialize")
    }
}

fn referenced_users(space: &GroupSpace, group: &Group) -> BTreeSet<UserId> {
    let mut users = BTreeSet::new();
    users.extend(group.members.iter().map(|m| m.user_id));
    users.extend(group.pending.iter().map(|r| r.user_id));
    users.extend(space.areas.values().map(|a| a.created_by));
    users.extend(space.items.values().map(|i| i.author));
    users.extend(space.comments.values().map(|c| c.author));
    for d in space.documents.values() {
        users.extend(d.revisions.iter().map(|r| r.author));
    }
    for p in space.polls.values() {
        users.insert(p.author);
        users.extend(p.eligible.iter().copied());
        users.extend(p.ballots.keys().copied());
        if let Some(s) = &p.sealed {
            users.extend(s.voters.iter().copied());
        }
    }
    users.extend(space.feedback.iter().filter_map(|f| f.author));
    users
}

/// Seals the ballots of secret polls into aggregates.
fn export_poll(poll: &Poll) -> Poll {
    if poll.spec.open_ballots {
        return poll.clone();
    }
    let mut out = poll.clone();
    let mut counts = count(poll.spec.procedure, poll.spec.options.len(), poll.ballots.values());
    let mut voters: Vec<UserId> = poll.ballots.keys().copied().collect();
    if let Some(sealed) = &poll.sealed {
        let mut total = sealed.counts.clone();
        total.absorb(&counts);
        counts = total;
        voters.extend(sealed.voters.iter().copied());
    }
    voters.sort();
    out.ballots.clear();
    out.sealed = Some(SealedBallots { counts, voters });
    out
}

pub(crate) fn export_content(dir: &Directory, space: &GroupSpace) -> Result<BundleContent> {
    let group = dir.group(space.group_id)?.clone();
    let users = referenced_users(space, &group)
        .into_iter()
        .map(|u| dir.user(u).cloned())
        .collect::<Result<Vec<_>>>()?;
    let linked: BTreeSet<GroupId> = space
        .areas
        .values()
        .flat_map(|a| a.linked_groups.iter().copied())
        .collect();
    let external_groups = linked
        .into_iter()
        .map(|id| ExternalGroup {
            id,
            name: space
                .linked_names
                .get(&id)
                .cloned()
                .or_else(|| dir.group(id).ok().map(|g| g.name.clone()))
                .unwrap_or_default(),
        })
        .collect();
    Ok(BundleContent {
        group,
        users,
        external_groups,
        areas: space.areas.values().cloned().collect(),
        items: space.items.values().cloned().collect(),
        documents: space.documents.values().cloned().collect(),
        anchors: space.anchors.values().cloned().collect(),
        comments: space.comments.values().cloned().collect(),
        polls: space.polls.values().map(export_poll).collect(),
        feedback: space.feedback.clone(),
    })
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn limits<T>(r: Result<T>, what: impl std::fmt::Display) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

/// Checks every invariant a group's state must satisfy, reporting the first
/// violation found.
pub fn validate(c: &BundleContent) -> std::result::Result<(), String> {
    let group = &c.group;
    limits(check_group_name(&group.name), "group name")?;
    limits(check_body("description", &group.description), "group")?;

    // ids are unique across every kind of record
    let mut seen: HashSet<Uuid> = HashSet::new();
    let mut unique = |id: Uuid, kind: &str| -> std::result::Result<(), String> {
        ensure!(seen.insert(id), "duplicate id {id} ({kind})");
        Ok(())
    };
    unique(group.id.uuid(), "group")?;
    for a in &c.areas {
        unique(a.id.uuid(), "area")?;
    }
    for i in &c.items {
        unique(i.id.uuid(), "item")?;
    }
    for d in &c.documents {
        unique(d.id.uuid(), "document")?;
    }
    for a in &c.anchors {
        unique(a.id.uuid(), "anchor")?;
    }
    for cm in &c.comments {
        unique(cm.id.uuid(), "comment")?;
    }
    for p in &c.polls {
        unique(p.id.uuid(), "poll")?;
    }
    for f in &c.feedback {
        unique(f.id.uuid(), "feedback")?;
    }

    // users
    let mut users: HashSet<UserId> = HashSet::new();
    let mut emails: HashSet<&str> = HashSet::new();
    let mut last: Option<UserId> = None;
    for u in &c.users {
        ensure!(
            last.is_none_or(|l| l < u.user_id),
            "users are not sorted by id at {}",
            u.user_id
        );
        last = Some(u.user_id);
        users.insert(u.user_id);
        limits(check_title("display name", &u.display_name), u.user_id)?;
        if let Some(e) = &u.email {
            ensure!(
                crate::model::normalize_email(e).as_deref() == Ok(e.as_str()),
                "user {} has an unnormalized email",
                u.user_id
            );
            ensure!(emails.insert(e), "email {e} belongs to two users");
        }
        ensure!(
            !(u.email.is_some() && u.imported_address.is_some()),
            "placeholder user {} has an email",
            u.user_id
        );
    }
    let known = |u: UserId, what: &str| -> std::result::Result<(), String> {
        ensure!(users.contains(&u), "{what} refers to undefined user {u}");
        Ok(())
    };

    // group
    let mut members = HashSet::new();
    ensure!(!group.members.is_empty(), "group has no members");
    for m in &group.members {
        known(m.user_id, "membership")?;
        ensure!(members.insert(m.user_id), "user {} is a member twice", m.user_id);
    }
    ensure!(
        group.members.iter().any(|m| m.role == crate::model::Role::Moderator),
        "group has no moderator"
    );
    let mut pending = HashSet::new();
    for r in &group.pending {
        known(r.user_id, "join request")?;
        ensure!(
            !members.contains(&r.user_id),
            "member {} also has a pending request",
            r.user_id
        );
        ensure!(pending.insert(r.user_id), "user {} has two pending requests", r.user_id);
    }
    let external: HashMap<GroupId, &str> = c.external_groups.iter().map(|g| (g.id, g.name.as_str())).collect();
    ensure!(external.len() == c.external_groups.len(), "external group listed twice");
    ensure!(!external.contains_key(&group.id), "group lists itself as external");

    // areas
    let items: HashMap<ItemId, &Item> = c.items.iter().map(|i| (i.id, i)).collect();
    let comments: HashMap<CommentId, &Comment> = c.comments.iter().map(|x| (x.id, x)).collect();
    let mut used_external = BTreeSet::new();
    let mut item_home = HashMap::new();
    let mut comment_home = HashMap::new();
    for a in &c.areas {
        ensure!(a.owner_group == group.id, "area {} belongs to another group", a.id);
        limits(check_title("title", &a.title), a.id)?;
        limits(check_body("description", &a.description), a.id)?;
        known(a.created_by, "area creator")?;
        let mut linked = HashSet::new();
        for g in &a.linked_groups {
            ensure!(*g != group.id, "area {} is linked to its own group", a.id);
            ensure!(external.contains_key(g), "area {} links to undefined group {g}", a.id);
            ensure!(linked.insert(*g), "area {} links group {g} twice", a.id);
            used_external.insert(*g);
        }
        for (n, id) in a.folio.iter().enumerate() {
            let item = items
                .get(id)
                .ok_or_else(|| format!("folio of area {} holds undefined item {id}", a.id))?;
            ensure!(item.area == a.id, "item {id} sits in the folio of another area");
            ensure!(
                item.ordinal as usize == n + 1,
                "item {id} has ordinal {} at position {}",
                item.ordinal,
                n + 1
            );
            ensure!(
                item_home.insert(*id, a.id).is_none(),
                "item {id} appears in two folio slots"
            );
        }
        for id in &a.discussion {
            ensure!(
                comments.contains_key(id),
                "discussion of area {} holds undefined comment {id}",
                a.id
            );
            ensure!(
                comments[id].area == a.id,
                "comment {id} sits in the discussion of another area"
            );
            ensure!(
                comment_home.insert(*id, a.id).is_none(),
                "comment {id} appears twice in discussions"
            );
        }
    }
    ensure!(
        used_external.len() == external.len(),
        "external groups list a group no area links to"
    );
    ensure!(item_home.len() == c.items.len(), "an item is missing from its folio");
    ensure!(
        comment_home.len() == c.comments.len(),
        "a comment is missing from its discussion"
    );

    // items and their payloads
    let documents: HashMap<_, &Document> = c.documents.iter().map(|d| (d.id, d)).collect();
    let polls: HashMap<_, &Poll> = c.polls.iter().map(|p| (p.id, p)).collect();
    let mut claimed_docs = HashSet::new();
    let mut claimed_polls = HashSet::new();
    for i in &c.items {
        known(i.author, "item author")?;
        limits(check_title("title", &i.title), i.id)?;
        match &i.kind {
            ItemKind::Document { document_id } => {
                let d = documents
                    .get(document_id)
                    .ok_or_else(|| format!("item {} refers to undefined document {document_id}", i.id))?;
                ensure!(
                    d.item == i.id && d.area == i.area,
                    "document {document_id} points at another item"
                );
                ensure!(
                    claimed_docs.insert(*document_id),
                    "document {document_id} is claimed twice"
                );
            }
            ItemKind::Poll { poll_id } | ItemKind::Decision { poll_id } => {
                let p = polls
                    .get(poll_id)
                    .ok_or_else(|| format!("item {} refers to undefined poll {poll_id}", i.id))?;
                ensure!(
                    p.item == i.id && p.area == i.area,
                    "poll {poll_id} points at another item"
                );
                let decision = matches!(i.kind, ItemKind::Decision { .. });
                ensure!(
                    p.spec.binding == decision,
                    "poll {poll_id} binding flag disagrees with its item"
                );
                ensure!(claimed_polls.insert(*poll_id), "poll {poll_id} is claimed twice");
            }
            ItemKind::Link { url, caption } => {
                limits(check_chars("caption", caption, MAX_TITLE_CHARS), i.id)?;
                ensure!(url::Url::parse(url).is_ok(), "item {} has an invalid URL", i.id);
            }
            ItemKind::DiscussionItem { prompt } => limits(check_body("prompt", prompt), i.id)?,
        }
    }
    ensure!(claimed_docs.len() == c.documents.len(), "a document belongs to no item");
    ensure!(claimed_polls.len() == c.polls.len(), "a poll belongs to no item");

    // documents and anchors
    let anchors: HashMap<_, &Anchor> = c.anchors.iter().map(|a| (a.id, a)).collect();
    let mut claimed_anchors = HashSet::new();
    for d in &c.documents {
        ensure!(!d.revisions.is_empty(), "document {} has no revisions", d.id);
        for (n, r) in d.revisions.iter().enumerate() {
            ensure!(
                r.document_id == d.id && r.revision as usize == n + 1,
                "document {} revisions are not numbered 1..n",
                d.id
            );
            ensure!(r.source.format() == d.format, "document {} mixes formats", d.id);
            known(r.author, "revision author")?;
        }
        if d.format == DocumentFormat::Uploaded {
            ensure!(d.anchors.is_empty(), "uploaded document {} has anchors", d.id);
        }
        let latest = d.revisions.len() as u32;
        for id in &d.anchors {
            let a = anchors
                .get(id)
                .ok_or_else(|| format!("document {} lists undefined anchor {id}", d.id))?;
            ensure!(a.document_id == d.id, "anchor {id} belongs to another document");
            ensure!(claimed_anchors.insert(*id), "anchor {id} is listed twice");
            ensure!(
                a.created_on_revision >= 1 && a.created_on_revision <= latest,
                "anchor {id} was created on a missing revision"
            );
            let expected: Vec<u32> = (a.created_on_revision..=latest).collect();
            let actual: Vec<u32> = a.positions.keys().copied().collect();
            ensure!(expected == actual, "anchor {id} lacks positions for some revisions");
            ensure!(
                matches!(a.positions[&a.created_on_revision], AnchorPosition::Live(_)),
                "anchor {id} was orphaned when created"
            );
            let mut orphaned = false;
            for (rev, pos) in &a.positions {
                match pos {
                    AnchorPosition::Orphaned => orphaned = true,
                    AnchorPosition::Live(offset) => {
                        ensure!(!orphaned, "anchor {id} came back after being orphaned");
                        let text = d.revisions[*rev as usize - 1].text().map_err(|e| e.to_string())?;
                        let ok = text.chars().nth(*offset).is_some_and(is_anchor_whitespace);
                        ensure!(ok, "anchor {id} is not on whitespace at revision {rev}");
                    }
                }
            }
            let comment = comments
                .get(&a.comment_id)
                .ok_or_else(|| format!("anchor {id} belongs to undefined comment {}", a.comment_id))?;
            ensure!(
                comment.target == CommentTarget::InText { anchor: *id },
                "anchor {id} and its comment disagree"
            );
        }
    }
    ensure!(
        claimed_anchors.len() == c.anchors.len(),
        "an anchor belongs to no document"
    );

    // comments
    let position: HashMap<CommentId, usize> = c.comments.iter().enumerate().map(|(n, x)| (x.id, n)).collect();
    let mut message_ids = HashSet::new();
    for (n, cm) in c.comments.iter().enumerate() {
        known(cm.author, "comment author")?;
        limits(check_chars("subject", &cm.subject, MAX_TITLE_CHARS), cm.id)?;
        limits(check_body("body", &cm.body), cm.id)?;
        if let Some(m) = &cm.source_message_id {
            ensure!(message_ids.insert(m.as_str()), "message id {m} imported twice");
        }
        match cm.target {
            CommentTarget::Global => {}
            CommentTarget::OnItem { item } => {
                let i = items
                    .get(&item)
                    .ok_or_else(|| format!("comment {} targets undefined item", cm.id))?;
                ensure!(i.area == cm.area, "comment {} targets an item of another area", cm.id);
            }
            CommentTarget::ReplyTo { comment } => {
                let p = position
                    .get(&comment)
                    .ok_or_else(|| format!("comment {} replies to undefined comment", cm.id))?;
                ensure!(*p < n, "comment {} replies to a later comment", cm.id);
                ensure!(c.comments[*p].area == cm.area, "comment {} replies across areas", cm.id);
            }
            CommentTarget::InText { anchor } => {
                let a = anchors
                    .get(&anchor)
                    .ok_or_else(|| format!("comment {} targets undefined anchor", cm.id))?;
                ensure!(
                    a.comment_id == cm.id,
                    "comment {} targets another comment's anchor",
                    cm.id
                );
                ensure!(
                    documents[&a.document_id].area == cm.area,
                    "comment {} anchors across areas",
                    cm.id
                );
            }
        }
    }

    // polls
    for p in &c.polls {
        known(p.author, "poll author")?;
        ensure!(
            p.eligible.windows(2).all(|w| w[0] < w[1]),
            "poll {} eligibility list is not sorted",
            p.id
        );
        for u in &p.eligible {
            known(*u, "poll eligibility")?;
        }
        p.check_integrity()?;
        if !p.spec.open_ballots {
            ensure!(p.ballots.is_empty(), "secret poll {} carries individual ballots", p.id);
            ensure!(p.sealed.is_some(), "secret poll {} carries no sealed tally", p.id);
        }
    }

    // feedback
    for f in &c.feedback {
        limits(check_rating(f.rating), f.id)?;
        limits(check_body("feedback", &f.text), f.id)?;
        ensure!(
            f.scope == FeedbackScope::Group { group: group.id },
            "feedback {} is not scoped to this group",
            f.id
        );
        if let Some(a) = f.author {
            known(a, "feedback author")?;
        }
    }
    Ok(())
}

/// Rebuilds a group space from validated bundle content.
pub(crate) fn space_from_content(c: &BundleContent) -> GroupSpace {
    let mut space = GroupSpace::new(c.group.id);
    space.areas = c.areas.iter().map(|a| (a.id, a.clone())).collect();
    space.items = c.items.iter().map(|i| (i.id, i.clone())).collect();
    space.comments = c.comments.iter().map(|x| (x.id, x.clone())).collect();
    space.documents = c.documents.iter().map(|d| (d.id, d.clone())).collect();
    space.anchors = c.anchors.iter().map(|a| (a.id, a.clone())).collect();
    space.polls = c.polls.iter().map(|p| (p.id, p.clone())).collect();
    space.feedback = c.feedback.clone();
    space.linked_names = c
        .external_groups
        .iter()
        .map(|g| (g.id, g.name.clone()))
        .collect::<BTreeMap<_, _>>();
    space
}
