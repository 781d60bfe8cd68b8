//! One group's space: its meeting areas and everything posted in them.
//!
//! All operations validate completely before they mutate, so a failed call
//! leaves the space untouched.

use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::access::{authorize_area, Action};
use crate::decision::{Ballot, BallotContent, Outcome, Poll, PollSpec, Tally};
use crate::directory::Directory;
use crate::document::{
    remap_offsets, validate_anchor_offset, Anchor, AnchorPosition, Document, DocumentFormat, DocumentRevision,
    DocumentSource,
};
use crate::error::{Error, Result};
use crate::feedback::FeedbackRecord;
use crate::ids::{AnchorId, AreaId, CommentId, DocumentId, GroupId, ItemId, PollId, UserId};
use crate::model::{
    check_body, check_chars, check_title, Comment, CommentHeader, CommentTarget, IndexOrder, Item, ItemKind,
    ItemReference, ItemSpec, MeetingArea, TargetSpec, Timestamp, MAX_TITLE_CHARS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub upload_cap: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            upload_cap: crate::document::DEFAULT_UPLOAD_CAP,
        }
    }
}

/// An area of another group that has been linked to this one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedArea {
    pub area: AreaId,
    pub owner_group: GroupId,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewComment {
    #[serde(default)]
    pub subject: Option<String>,
    pub body: String,
    pub target: TargetSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollView {
    pub poll_id: PollId,
    pub item: ItemId,
    pub area: AreaId,
    pub spec: PollSpec,
    pub author: UserId,
    pub opened_at: Timestamp,
    pub eligible_count: usize,
    pub tally: Tally,
    pub outcome: Outcome,
    /// Individual ballots, present for open-ballot polls and for moderators.
    pub ballots: Option<Vec<Ballot>>,
    pub own_ballot: Option<Ballot>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupSpace {
    pub group_id: GroupId,
    pub(crate) areas: IndexMap<AreaId, MeetingArea>,
    pub(crate) items: IndexMap<ItemId, Item>,
    pub(crate) comments: IndexMap<CommentId, Comment>,
    pub(crate) documents: IndexMap<DocumentId, Document>,
    pub(crate) anchors: IndexMap<AnchorId, Anchor>,
    pub(crate) polls: IndexMap<PollId, Poll>,
    #[serde(default)]
    pub(crate) feedback: Vec<FeedbackRecord>,
    /// Areas of other groups linked into this group's homepage.
    #[serde(default)]
    pub(crate) linked_in: Vec<LinkedArea>,
    /// Names of the groups this space's areas are linked to, as of linking.
    #[serde(default)]
    pub(crate) linked_names: BTreeMap<GroupId, String>,
    #[serde(skip)]
    fresh: Vec<Uuid>,
}

pub(crate) fn reply_subject(parent: &str) -> String {
    let already = parent.get(..3).is_some_and(|p| p.eq_ignore_ascii_case("re:"));
    let subject = if already {
        parent.to_string()
    } else {
        format!("Re: {parent}")
    };
    truncate_chars(subject, MAX_TITLE_CHARS)
}

fn truncate_chars(s: String, max: usize) -> String {
    if s.chars().count() <= max {
        s
    } else {
        s.chars().take(max).collect()
    }
}

fn check_url(url: &str) -> Result<()> {
    let parsed = url::Url::parse(url).map_err(|e| Error::InvalidSpec(format!("invalid URL: {e}")))?;
    match parsed.scheme() {
        "http" | "https" | "ftp" if parsed.host().is_some() => Ok(()),
        "mailto" => Ok(()),
        other => Err(Error::InvalidSpec(format!("unsupported URL scheme {other:?}"))),
    }
}

fn check_upload_meta(source: &DocumentSource) -> Result<()> {
    if let DocumentSource::Uploaded {
        filename, media_type, ..
    } = source
    {
        check_title("filename", filename)?;
        check_title("media type", media_type)?;
    }
    Ok(())
}

impl GroupSpace {
    pub fn new(group_id: GroupId) -> Self {
        GroupSpace {
            group_id,
            ..GroupSpace::default()
        }
    }

    /// Ids created since the last call, for the server-wide locator.
    pub(crate) fn take_fresh(&mut self) -> Vec<Uuid> {
        std::mem::take(&mut self.fresh)
    }

    pub(crate) fn all_ids(&self) -> Vec<Uuid> {
        let mut ids = Vec::new();
        ids.extend(self.areas.keys().map(|i| i.uuid()));
        ids.extend(self.items.keys().map(|i| i.uuid()));
        ids.extend(self.comments.keys().map(|i| i.uuid()));
        ids.extend(self.documents.keys().map(|i| i.uuid()));
        ids.extend(self.anchors.keys().map(|i| i.uuid()));
        ids.extend(self.polls.keys().map(|i| i.uuid()));
        ids
    }

    // lookups without access checks

    pub fn area(&self, id: AreaId) -> Result<&MeetingArea> {
        self.areas.get(&id).ok_or(Error::UnknownArea(id))
    }

    pub fn areas(&self) -> impl Iterator<Item = &MeetingArea> {
        self.areas.values()
    }

    pub fn linked_in(&self) -> &[LinkedArea] {
        &self.linked_in
    }

    pub fn item(&self, id: ItemId) -> Result<&Item> {
        self.items.get(&id).ok_or(Error::UnknownItem(id))
    }

    pub fn comment(&self, id: CommentId) -> Result<&Comment> {
        self.comments.get(&id).ok_or(Error::UnknownComment(id))
    }

    pub fn comments(&self) -> impl Iterator<Item = &Comment> {
        self.comments.values()
    }

    pub fn document(&self, id: DocumentId) -> Result<&Document> {
        self.documents.get(&id).ok_or(Error::UnknownDocument(id))
    }

    pub fn anchor(&self, id: AnchorId) -> Option<&Anchor> {
        self.anchors.get(&id)
    }

    pub fn poll(&self, id: PollId) -> Result<&Poll> {
        self.polls.get(&id).ok_or(Error::UnknownPoll(id))
    }

    pub fn polls(&self) -> impl Iterator<Item = &Poll> {
        self.polls.values()
    }

    pub fn feedback(&self) -> &[FeedbackRecord] {
        &self.feedback
    }

    pub fn can(&self, dir: &Directory, area: AreaId, user: Option<UserId>, action: Action) -> bool {
        self.areas
            .get(&area)
            .is_some_and(|a| authorize_area(dir, a, user, action))
    }

    fn require(&self, dir: &Directory, area: AreaId, user: Option<UserId>, action: Action) -> Result<&MeetingArea> {
        let area = self.area(area)?;
        if authorize_area(dir, area, user, action) {
            Ok(area)
        } else {
            Err(Error::AccessDenied)
        }
    }

    fn is_moderator(&self, dir: &Directory, user: UserId) -> bool {
        dir.group(self.group_id).is_ok_and(|g| g.is_moderator(user))
    }

    /// Every member of the owner group and of the linked groups.
    fn electorate(&self, dir: &Directory, area: &MeetingArea) -> Vec<UserId> {
        std::iter::once(area.owner_group)
            .chain(area.linked_groups.iter().copied())
            .filter_map(|g| dir.group(g).ok())
            .flat_map(|g| g.members.iter().map(|m| m.user_id))
            .collect()
    }

    // areas

    pub fn create_area(
        &mut self,
        dir: &Directory,
        creator: UserId,
        title: &str,
        description: &str,
        at: Timestamp,
    ) -> Result<MeetingArea> {
        if !dir.group(self.group_id)?.is_member(creator) {
            return Err(Error::NotAMember);
        }
        check_title("title", title)?;
        check_body("description", description)?;
        let area = MeetingArea {
            id: AreaId::new(),
            owner_group: self.group_id,
            title: title.to_string(),
            description: description.to_string(),
            created_by: creator,
            created_at: at,
            linked_groups: Vec::new(),
            folio: Vec::new(),
            discussion: Vec::new(),
        };
        self.fresh.push(area.id.uuid());
        self.areas.insert(area.id, area.clone());
        Ok(area)
    }

    /// Checks a link request and reports whether it changes anything.
    pub(crate) fn check_link(&self, dir: &Directory, area: AreaId, other: GroupId, actor: UserId) -> Result<bool> {
        let a = self.area(area)?;
        if !dir.group(self.group_id)?.is_member(actor) {
            return Err(Error::NotAMember);
        }
        if other == self.group_id {
            return Err(Error::SelfLink);
        }
        dir.group(other)?;
        Ok(!a.linked_groups.contains(&other))
    }

    pub(crate) fn apply_link(&mut self, area: AreaId, other: GroupId, other_name: &str) -> MeetingArea {
        let a = self.areas.get_mut(&area).expect("checked by check_link");
        if !a.linked_groups.contains(&other) {
            a.linked_groups.push(other);
        }
        self.linked_names.insert(other, other_name.to_string());
        a.clone()
    }

    pub(crate) fn add_linked_in(&mut self, linked: LinkedArea) {
        if !self.linked_in.iter().any(|l| l.area == linked.area) {
            self.linked_in.push(linked);
        }
    }

    // items

    pub fn post_item(
        &mut self,
        dir: &Directory,
        settings: &Settings,
        area_id: AreaId,
        author: UserId,
        spec: ItemSpec,
        at: Timestamp,
    ) -> Result<Item> {
        let area = self.require(dir, area_id, Some(author), Action::Post)?;
        let item_id = ItemId::new();
        let ordinal = area.folio.len() as u32 + 1;
        let mut document = None;
        let mut poll = None;
        let (title, kind) = match spec {
            ItemSpec::Document { title, source } => {
                check_title("title", &title)?;
                source.check_size(settings.upload_cap)?;
                check_upload_meta(&source)?;
                let id = DocumentId::new();
                document = Some(Document {
                    id,
                    item: item_id,
                    area: area_id,
                    format: source.format(),
                    revisions: vec![DocumentRevision {
                        document_id: id,
                        revision: 1,
                        source,
                        author,
                        created_at: at,
                    }],
                    anchors: Vec::new(),
                });
                (title, ItemKind::Document { document_id: id })
            }
            ItemSpec::Link { title, url, caption } => {
                check_title("title", &title)?;
                check_url(&url)?;
                check_chars("caption", &caption, MAX_TITLE_CHARS)?;
                (title, ItemKind::Link { url, caption })
            }
            ItemSpec::DiscussionItem { title, prompt } => {
                check_title("title", &title)?;
                check_body("prompt", &prompt)?;
                (title, ItemKind::DiscussionItem { prompt })
            }
            ItemSpec::Poll { title, spec } => {
                spec.validate()?;
                if spec.deadline.is_some_and(|d| d <= at) {
                    return Err(Error::InvalidSpec("deadline must lie in the future".into()));
                }
                let title = if title.trim().is_empty() {
                    truncate_chars(spec.question.trim().to_string(), MAX_TITLE_CHARS)
                } else {
                    check_title("title", &title)?;
                    title
                };
                let id = PollId::new();
                let binding = spec.binding;
                let eligible = self.electorate(dir, area);
                poll = Some(Poll::new(id, item_id, area_id, spec, author, at, eligible));
                let kind = if binding {
                    ItemKind::Decision { poll_id: id }
                } else {
                    ItemKind::Poll { poll_id: id }
                };
                (title, kind)
            }
        };
        let item = Item {
            id: item_id,
            area: area_id,
            ordinal,
            author,
            created_at: at,
            title,
            kind,
            retracted: false,
        };
        if let Some(d) = document {
            self.fresh.push(d.id.uuid());
            self.documents.insert(d.id, d);
        }
        if let Some(p) = poll {
            self.fresh.push(p.id.uuid());
            self.polls.insert(p.id, p);
        }
        self.fresh.push(item.id.uuid());
        self.items.insert(item.id, item.clone());
        self.areas[&area_id].folio.push(item.id);
        Ok(item)
    }

    pub fn retract_item(&mut self, dir: &Directory, item: ItemId, actor: UserId) -> Result<Item> {
        let i = self.item(item)?;
        if i.author != actor && !self.is_moderator(dir, actor) {
            return Err(Error::NotAuthorized);
        }
        let i = &mut self.items[&item];
        i.retracted = true;
        Ok(i.clone())
    }

    // comments

    /// Posts a comment; for in-text targets the anchor is created with it.
    pub fn post_comment(
        &mut self,
        dir: &Directory,
        area_id: AreaId,
        author: UserId,
        draft: NewComment,
        at: Timestamp,
        source_message_id: Option<String>,
    ) -> Result<(Comment, Option<Anchor>)> {
        self.require(dir, area_id, Some(author), Action::Post)?;
        self.post_comment_unchecked(area_id, author, draft, at, source_message_id)
    }

    /// Posts without checking the author's rights, for archive imports whose
    /// senders need not be members.
    pub(crate) fn post_comment_unchecked(
        &mut self,
        area_id: AreaId,
        author: UserId,
        draft: NewComment,
        at: Timestamp,
        source_message_id: Option<String>,
    ) -> Result<(Comment, Option<Anchor>)> {
        self.area(area_id)?;
        check_body("body", &draft.body)?;
        let subject = draft.subject.filter(|s| !s.trim().is_empty());
        if let Some(s) = &subject {
            check_chars("subject", s, MAX_TITLE_CHARS)?;
        }
        let comment_id = CommentId::new();
        let (target, default_subject, anchor) = self.resolve_target(area_id, comment_id, draft.target)?;
        let comment = Comment {
            id: comment_id,
            area: area_id,
            author,
            created_at: at,
            subject: subject.unwrap_or(default_subject),
            body: draft.body,
            target,
            retracted: false,
            source_message_id,
        };
        if let Some(a) = &anchor {
            self.fresh.push(a.id.uuid());
            self.documents[&a.document_id].anchors.push(a.id);
            self.anchors.insert(a.id, a.clone());
        }
        self.fresh.push(comment.id.uuid());
        self.comments.insert(comment.id, comment.clone());
        self.areas[&area_id].discussion.push(comment.id);
        Ok((comment, anchor))
    }

    fn resolve_target(
        &self,
        area: AreaId,
        comment: CommentId,
        target: TargetSpec,
    ) -> Result<(CommentTarget, String, Option<Anchor>)> {
        match target {
            TargetSpec::Global => Ok((CommentTarget::Global, "(no subject)".to_string(), None)),
            TargetSpec::OnItem { item } => {
                let i = self
                    .items
                    .get(&item)
                    .filter(|i| i.area == area)
                    .ok_or(Error::DanglingTarget)?;
                Ok((CommentTarget::OnItem { item }, i.title.clone(), None))
            }
            TargetSpec::ReplyTo { comment: parent } => {
                let p = self
                    .comments
                    .get(&parent)
                    .filter(|c| c.area == area)
                    .ok_or(Error::DanglingTarget)?;
                Ok((
                    CommentTarget::ReplyTo { comment: parent },
                    reply_subject(&p.subject),
                    None,
                ))
            }
            TargetSpec::InText {
                document,
                revision,
                offset,
            } => {
                let doc = self
                    .documents
                    .get(&document)
                    .filter(|d| d.area == area)
                    .ok_or(Error::DanglingTarget)?;
                if doc.format != DocumentFormat::PlainText {
                    return Err(Error::NotPlainText);
                }
                let latest = doc.latest();
                if let Some(r) = revision {
                    if r != latest.revision {
                        doc.revision(r)?;
                        return Err(Error::StaleRevision {
                            latest: latest.revision,
                        });
                    }
                }
                if !validate_anchor_offset(latest, offset)? {
                    return Err(Error::InvalidAnchor);
                }
                let anchor = Anchor {
                    id: AnchorId::new(),
                    document_id: document,
                    comment_id: comment,
                    created_on_revision: latest.revision,
                    positions: BTreeMap::from([(latest.revision, AnchorPosition::Live(offset))]),
                };
                let title = self.item(doc.item)?.title.clone();
                Ok((CommentTarget::InText { anchor: anchor.id }, title, Some(anchor)))
            }
        }
    }

    pub fn retract_comment(&mut self, dir: &Directory, comment: CommentId, actor: UserId) -> Result<Comment> {
        let c = self.comment(comment)?;
        if c.author != actor && !self.is_moderator(dir, actor) {
            return Err(Error::NotAuthorized);
        }
        let c = &mut self.comments[&comment];
        c.retracted = true;
        Ok(c.clone())
    }

    /// The item a comment refers to, derived from its target.
    pub fn item_reference(&self, comment: &Comment) -> Option<ItemReference> {
        let (item, anchor) = match comment.target {
            CommentTarget::OnItem { item } => (item, None),
            CommentTarget::InText { anchor } => {
                let a = self.anchors.get(&anchor)?;
                (self.documents.get(&a.document_id)?.item, Some(anchor))
            }
            CommentTarget::Global | CommentTarget::ReplyTo { .. } => return None,
        };
        let label = self.items.get(&item)?.label();
        Some(ItemReference {
            item_id: item,
            anchor_id: anchor,
            label,
        })
    }

    fn header(&self, dir: &Directory, comment: &Comment, depth: usize) -> CommentHeader {
        CommentHeader {
            comment_id: comment.id,
            subject: comment.subject.clone(),
            author: comment.author,
            author_name: dir
                .user(comment.author)
                .map(|m| m.display_name.clone())
                .unwrap_or_default(),
            created_at: comment.created_at,
            item_reference: self.item_reference(comment),
            reply_to: comment.reply_parent(),
            depth,
            retracted: comment.retracted,
        }
    }

    pub fn comments_index(
        &self,
        dir: &Directory,
        area: AreaId,
        viewer: Option<UserId>,
        order: IndexOrder,
    ) -> Result<Vec<CommentHeader>> {
        let area = self.require(dir, area, viewer, Action::Read)?;
        let comments: Vec<&Comment> = area.discussion.iter().map(|id| &self.comments[id]).collect();
        Ok(match order {
            IndexOrder::Chronological => chronological(&comments)
                .into_iter()
                .map(|c| self.header(dir, c, 0))
                .collect(),
            IndexOrder::Threaded => threaded(&comments)
                .into_iter()
                .map(|(c, depth)| self.header(dir, c, depth))
                .collect(),
        })
    }

    // documents

    pub fn revise_document(
        &mut self,
        dir: &Directory,
        settings: &Settings,
        document: DocumentId,
        new_text: String,
        author: UserId,
        at: Timestamp,
    ) -> Result<DocumentRevision> {
        let doc = self.document(document)?;
        self.require(dir, doc.area, Some(author), Action::Post)?;
        if doc.format != DocumentFormat::PlainText {
            return Err(Error::NotPlainText);
        }
        let source = DocumentSource::plain(new_text);
        source.check_size(settings.upload_cap)?;
        let previous = doc.latest();
        let old_text = previous.text()?;
        let number = previous.revision + 1;

        let live: Vec<(AnchorId, usize)> = doc
            .anchors
            .iter()
            .filter_map(|id| {
                let offset = self.anchors[id].position_at(previous.revision)?.offset()?;
                Some((*id, offset))
            })
            .collect();
        let offsets: Vec<usize> = live.iter().map(|(_, o)| *o).collect();
        let moved = remap_offsets(old_text, source.text().expect("plain"), &offsets);
        let moved: HashMap<AnchorId, AnchorPosition> = live.iter().map(|(id, _)| *id).zip(moved).collect();

        let revision = DocumentRevision {
            document_id: document,
            revision: number,
            source,
            author,
            created_at: at,
        };
        let anchor_ids = doc.anchors.clone();
        for id in anchor_ids {
            let position = moved.get(&id).copied().unwrap_or(AnchorPosition::Orphaned);
            self.anchors[&id].positions.insert(number, position);
        }
        self.documents[&document].revisions.push(revision.clone());
        Ok(revision)
    }

    /// Replaces an uploaded document with a new upload. Uploads carry no
    /// anchors, so nothing is remapped.
    pub fn revise_upload(
        &mut self,
        dir: &Directory,
        settings: &Settings,
        document: DocumentId,
        source: DocumentSource,
        author: UserId,
        at: Timestamp,
    ) -> Result<DocumentRevision> {
        let doc = self.document(document)?;
        self.require(dir, doc.area, Some(author), Action::Post)?;
        if doc.format != DocumentFormat::Uploaded || source.format() != DocumentFormat::Uploaded {
            return Err(Error::NotUploaded);
        }
        source.check_size(settings.upload_cap)?;
        check_upload_meta(&source)?;
        let revision = DocumentRevision {
            document_id: document,
            revision: doc.latest().revision + 1,
            source,
            author,
            created_at: at,
        };
        self.documents[&document].revisions.push(revision.clone());
        Ok(revision)
    }

    pub fn anchors_of(&self, document: &Document) -> Vec<&Anchor> {
        document.anchors.iter().map(|id| &self.anchors[id]).collect()
    }

    // polls

    pub fn cast_ballot(
        &mut self,
        poll: PollId,
        voter: UserId,
        content: BallotContent,
        at: Timestamp,
    ) -> Result<Ballot> {
        let p = self.polls.get_mut(&poll).ok_or(Error::UnknownPoll(poll))?;
        p.cast(voter, content, at)
    }

    pub fn close_poll(&mut self, dir: &Directory, poll: PollId, actor: UserId, at: Timestamp) -> Result<Outcome> {
        let p = self.poll(poll)?;
        self.require(dir, p.area, Some(actor), Action::Read)?;
        let authorized = p.author == actor || self.is_moderator(dir, actor);
        self.polls[&poll].close(at, authorized)
    }

    pub fn needs_settling(&self, poll: PollId, at: Timestamp) -> bool {
        self.polls.get(&poll).is_some_and(|p| p.needs_settling(at))
    }

    pub fn settle_poll(&mut self, poll: PollId, at: Timestamp) {
        if let Some(p) = self.polls.get_mut(&poll) {
            p.settle(at);
        }
    }

    /// Settles every poll whose deadline has passed; returns how many closed.
    pub fn settle_all(&mut self, at: Timestamp) -> usize {
        let mut closed = 0;
        for p in self.polls.values_mut() {
            if p.needs_settling(at) {
                p.settle(at);
                closed += 1;
            }
        }
        closed
    }

    pub fn poll_view(&self, dir: &Directory, poll: PollId, viewer: Option<UserId>, at: Timestamp) -> Result<PollView> {
        let p = self.poll(poll)?;
        self.require(dir, p.area, viewer, Action::Read)?;
        let reveal = p.spec.open_ballots || viewer.is_some_and(|v| self.is_moderator(dir, v));
        Ok(PollView {
            poll_id: p.id,
            item: p.item,
            area: p.area,
            spec: p.spec.clone(),
            author: p.author,
            opened_at: p.opened_at,
            eligible_count: p.eligible.len(),
            tally: p.tally(at),
            outcome: p.outcome(),
            ballots: reveal.then(|| p.ballots.values().cloned().collect()),
            own_ballot: viewer.and_then(|v| p.ballots.get(&v).cloned()),
        })
    }

    // feedback

    pub(crate) fn push_feedback(&mut self, record: FeedbackRecord) {
        self.feedback.push(record);
    }
}

/// Ascending creation time, ties in posting order.
pub fn chronological<'a>(comments: &[&'a Comment]) -> Vec<&'a Comment> {
    let mut sorted = comments.to_vec();
    sorted.sort_by_key(|c| c.created_at);
    sorted
}

/// Depth-first along reply chains; siblings and roots by creation time, ties
/// in posting order. Replies whose parent is missing are treated as roots.
pub fn threaded<'a>(comments: &[&'a Comment]) -> Vec<(&'a Comment, usize)> {
    let present: HashMap<CommentId, usize> = comments.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
    let mut children: HashMap<CommentId, Vec<&Comment>> = HashMap::new();
    let mut roots = Vec::new();
    for c in chronological(comments) {
        match c.reply_parent().filter(|p| present.contains_key(p)) {
            Some(parent) => children.entry(parent).or_default().push(c),
            None => roots.push(c),
        }
    }
    let mut out = Vec::with_capacity(comments.len());
    let mut stack: Vec<(&Comment, usize)> = roots.into_iter().rev().map(|c| (c, 0)).collect();
    while let Some((c, depth)) = stack.pop() {
        out.push((c, depth));
        if let Some(kids) = children.get(&c.id) {
            stack.extend(kids.iter().rev().map(|k| (*k, depth + 1)));
        }
    }
    out
}
