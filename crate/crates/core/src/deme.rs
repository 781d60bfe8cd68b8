//! The server-wide entry point.
//!
//! Each group space sits behind its own lock, so writes to one group are
//! serialized while other groups proceed. Locks are always taken in the order
//! group spaces (ascending id), directory, index; the message-id registry is a
//! leaf lock held only for single lookups.
//!
//! With a [`Storage`] attached, a mutation runs on a copy of the state, the
//! copy is committed to storage, and only then replaces the live state.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::access::{authorize_area, authorize_group, Action};
use crate::activation::{activate, ActivationState, ActivationTarget};
use crate::bundle::{export_content, space_from_content, validate, ExportBundle, InstanceMetadata, FORMAT_VERSION};
use crate::decision::{Ballot, BallotContent, Outcome, Tally};
use crate::directory::{check_group_name, Directory, GroupSettings, JoinOutcome, ProfileUpdate};
use crate::document::{render_annotated, Anchor, AnnotatedDocument, Document, DocumentRevision, DocumentSource};
use crate::error::{Error, Result};
use crate::feedback::{FeedbackRecord, FeedbackScope};
use crate::ids::{AnchorId, AreaId, CommentId, DocumentId, GroupId, Id, ItemId, PollId, UserId};
use crate::model::{
    Comment, CommentHeader, Group, GroupAccess, IndexOrder, Item, ItemSpec, JoinPolicy, MeetingArea, Member,
    Membership, Role, TargetSpec, Timestamp, MAX_BODY_BYTES, MAX_TITLE_CHARS,
};
use crate::space::{reply_subject, GroupSpace, LinkedArea, NewComment, PollView, Settings};

/// A set of changes to persist in one transaction.
pub struct Commit<'a> {
    pub directory: Option<&'a Directory>,
    pub spaces: Vec<&'a GroupSpace>,
}

pub trait Storage: Send + Sync {
    fn commit(&self, commit: Commit<'_>) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum Scope {
    Group(GroupId),
    Area(AreaId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub id: GroupId,
    pub name: String,
    pub description: String,
    pub access: GroupAccess,
    pub join_policy: JoinPolicy,
    pub member_count: usize,
    pub created_at: Timestamp,
}

impl From<&Group> for GroupSummary {
    fn from(g: &Group) -> Self {
        GroupSummary {
            id: g.id,
            name: g.name.clone(),
            description: g.description.clone(),
            access: g.access,
            join_policy: g.join_policy,
            member_count: g.members.len(),
            created_at: g.created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaSummary {
    pub id: AreaId,
    pub title: String,
    pub description: String,
    pub item_count: usize,
    pub comment_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Standing {
    pub member: bool,
    pub moderator: bool,
    pub pending: bool,
    pub can_join: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupHomepage {
    pub group: GroupSummary,
    pub viewer: Standing,
    /// The group's own areas; empty for outsiders of a closed group.
    pub areas: Vec<AreaSummary>,
    /// Areas of other groups linked to this one.
    pub linked_areas: Vec<LinkedArea>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberEntry {
    pub user_id: UserId,
    pub display_name: String,
    pub role: Role,
    pub joined_at: Timestamp,
}

/// Where an archived message came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Sender {
    Member(UserId),
    /// An address mapped to no user; a placeholder member stands in.
    Address(String),
}

/// One message of a mailing-list archive, ready to become a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchivedMessage {
    pub message_id: String,
    /// Candidate parent message ids, best first.
    pub parents: Vec<String>,
    pub sender: Sender,
    pub subject: String,
    pub body: String,
    pub date: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ArchiveResult {
    Imported {
        comment: CommentId,
        /// Posted as a reply to an earlier message.
        threaded: bool,
        /// Named a parent that is not in the area, so posted as global.
        orphan_parent: bool,
        /// Attributed to a placeholder member.
        unmapped: bool,
    },
    Duplicate {
        /// Absent while the earlier delivery is still being posted.
        comment: Option<CommentId>,
    },
}

#[derive(Default)]
struct Index {
    spaces: HashMap<GroupId, Arc<RwLock<GroupSpace>>>,
    locate: HashMap<Uuid, GroupId>,
}

/// Accepted mail message ids. `None` marks a delivery in progress.
type MessageRegistry = HashMap<String, Option<CommentId>>;

pub struct Deme {
    settings: Settings,
    storage: Option<Arc<dyn Storage>>,
    directory: RwLock<Directory>,
    index: RwLock<Index>,
    messages: Mutex<MessageRegistry>,
}

impl Default for Deme {
    fn default() -> Self {
        Deme::new(Settings::default())
    }
}

impl Deme {
    pub fn new(settings: Settings) -> Self {
        Deme {
            settings,
            storage: None,
            directory: RwLock::new(Directory::default()),
            index: RwLock::new(Index::default()),
            messages: Mutex::new(HashMap::new()),
        }
    }

    /// Rebuilds the live state from stored records.
    pub fn restore(
        settings: Settings,
        storage: Option<Arc<dyn Storage>>,
        directory: Directory,
        spaces: Vec<GroupSpace>,
    ) -> Self {
        let mut index = Index::default();
        let mut messages = HashMap::new();
        for space in spaces {
            let gid = space.group_id;
            for id in space.all_ids() {
                index.locate.insert(id, gid);
            }
            for c in space.comments() {
                if let Some(m) = &c.source_message_id {
                    messages.insert(m.clone(), Some(c.id));
                }
            }
            index.spaces.insert(gid, Arc::new(RwLock::new(space)));
        }
        Deme {
            settings,
            storage,
            directory: RwLock::new(directory),
            index: RwLock::new(index),
            messages: Mutex::new(messages),
        }
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    // plumbing

    fn handle(&self, group: GroupId) -> Result<Arc<RwLock<GroupSpace>>> {
        self.index
            .read()
            .spaces
            .get(&group)
            .cloned()
            .ok_or(Error::UnknownGroup(group))
    }

    /// The group owning an area, item, comment, document, anchor or poll.
    pub fn owner_of<T>(&self, id: Id<T>) -> Option<GroupId> {
        self.index.read().locate.get(&id.uuid()).copied()
    }

    fn owner_or<T>(&self, id: Id<T>, missing: Error) -> Result<GroupId> {
        self.owner_of(id).ok_or(missing)
    }

    fn read_space<R>(&self, group: GroupId, f: impl FnOnce(&GroupSpace, &Directory) -> Result<R>) -> Result<R> {
        let handle = self.handle(group)?;
        let space = handle.read();
        let dir = self.directory.read();
        f(&space, &dir)
    }

    fn register(&self, group: GroupId, fresh: Vec<Uuid>) {
        if !fresh.is_empty() {
            let mut index = self.index.write();
            for id in fresh {
                index.locate.insert(id, group);
            }
        }
    }

    fn write_space<R>(&self, group: GroupId, f: impl FnOnce(&mut GroupSpace, &Directory) -> Result<R>) -> Result<R> {
        let handle = self.handle(group)?;
        let mut space = handle.write();
        let dir = self.directory.read();
        let (result, fresh) = match &self.storage {
            None => {
                let r = f(&mut space, &dir)?;
                (r, space.take_fresh())
            }
            Some(store) => {
                let mut draft = space.clone();
                let r = f(&mut draft, &dir)?;
                let fresh = draft.take_fresh();
                store.commit(Commit {
                    directory: None,
                    spaces: vec![&draft],
                })?;
                *space = draft;
                (r, fresh)
            }
        };
        drop(dir);
        self.register(group, fresh);
        Ok(result)
    }

    fn write_space_and_directory<R>(
        &self,
        group: GroupId,
        f: impl FnOnce(&mut GroupSpace, &mut Directory) -> Result<R>,
    ) -> Result<R> {
        let handle = self.handle(group)?;
        let mut space = handle.write();
        let mut dir = self.directory.write();
        let (result, fresh) = match &self.storage {
            None => {
                let r = f(&mut space, &mut dir)?;
                (r, space.take_fresh())
            }
            Some(store) => {
                let mut draft_space = space.clone();
                let mut draft_dir = dir.clone();
                let r = f(&mut draft_space, &mut draft_dir)?;
                let fresh = draft_space.take_fresh();
                store.commit(Commit {
                    directory: Some(&draft_dir),
                    spaces: vec![&draft_space],
                })?;
                *space = draft_space;
                *dir = draft_dir;
                (r, fresh)
            }
        };
        drop(dir);
        self.register(group, fresh);
        Ok(result)
    }

    fn write_directory<R>(&self, f: impl FnOnce(&mut Directory) -> Result<R>) -> Result<R> {
        let mut dir = self.directory.write();
        match &self.storage {
            None => f(&mut dir),
            Some(store) => {
                let mut draft = dir.clone();
                let r = f(&mut draft)?;
                store.commit(Commit {
                    directory: Some(&draft),
                    spaces: Vec::new(),
                })?;
                *dir = draft;
                Ok(r)
            }
        }
    }

    /// Runs `f` against the directory under its read lock.
    pub fn with_directory<R>(&self, f: impl FnOnce(&Directory) -> R) -> R {
        f(&self.directory.read())
    }

    /// Runs `f` against a group's space with no access checks. Meant for
    /// trusted components such as the mail gateway.
    pub fn with_space<R>(&self, group: GroupId, f: impl FnOnce(&GroupSpace, &Directory) -> R) -> Result<R> {
        self.read_space(group, |space, dir| Ok(f(space, dir)))
    }

    // users

    pub fn register_user(&self, display_name: &str, email: Option<&str>) -> Result<Member> {
        self.write_directory(|d| d.register_user(display_name, email))
    }

    pub fn update_user(&self, user: UserId, update: ProfileUpdate) -> Result<Member> {
        self.write_directory(|d| d.update_user(user, update))
    }

    pub fn set_email_verified(&self, user: UserId, verified: bool) -> Result<()> {
        self.write_directory(|d| d.set_email_verified(user, verified))
    }

    pub fn user(&self, user: UserId) -> Result<Member> {
        self.directory.read().user(user).cloned()
    }

    pub fn user_by_email(&self, email: &str) -> Option<Member> {
        self.directory.read().user_by_email(email).cloned()
    }

    pub fn is_operator(&self, user: UserId) -> bool {
        self.directory.read().is_operator(user)
    }

    // groups

    pub fn create_group(
        &self,
        name: &str,
        description: &str,
        access: GroupAccess,
        join_policy: JoinPolicy,
        creator: UserId,
        at: Timestamp,
    ) -> Result<Group> {
        let mut dir = self.directory.write();
        let mut draft = dir.clone();
        let group = draft.create_group(name, description, access, join_policy, creator, at)?;
        let space = GroupSpace::new(group.id);
        if let Some(store) = &self.storage {
            store.commit(Commit {
                directory: Some(&draft),
                spaces: vec![&space],
            })?;
        }
        *dir = draft;
        self.index.write().spaces.insert(group.id, Arc::new(RwLock::new(space)));
        Ok(group)
    }

    pub fn group(&self, group: GroupId) -> Result<Group> {
        self.directory.read().group(group).cloned()
    }

    pub fn group_by_name(&self, name: &str) -> Option<Group> {
        self.directory.read().group_by_name(name).cloned()
    }

    pub fn groups(&self) -> Vec<GroupSummary> {
        self.directory.read().groups().map(GroupSummary::from).collect()
    }

    pub fn join_group(&self, group: GroupId, user: UserId, at: Timestamp) -> Result<JoinOutcome> {
        self.write_directory(|d| d.join_group(group, user, at))
    }

    pub fn approve_join(&self, group: GroupId, actor: UserId, user: UserId, at: Timestamp) -> Result<Membership> {
        self.write_directory(|d| d.approve_join(group, actor, user, at))
    }

    pub fn reject_join(&self, group: GroupId, actor: UserId, user: UserId) -> Result<()> {
        self.write_directory(|d| d.reject_join(group, actor, user))
    }

    pub fn leave_group(&self, group: GroupId, user: UserId) -> Result<()> {
        self.write_directory(|d| d.leave_group(group, user))
    }

    pub fn set_role(&self, group: GroupId, actor: UserId, user: UserId, role: Role) -> Result<Membership> {
        self.write_directory(|d| d.set_role(group, actor, user, role))
    }

    pub fn configure_group(&self, group: GroupId, actor: UserId, settings: GroupSettings) -> Result<Group> {
        self.write_directory(|d| d.configure_group(group, actor, settings))
    }

    pub fn members(&self, group: GroupId, viewer: Option<UserId>) -> Result<Vec<MemberEntry>> {
        let dir = self.directory.read();
        let g = dir.group(group)?;
        if !authorize_group(g, viewer, Action::Read) {
            return Err(Error::AccessDenied);
        }
        Ok(g.members
            .iter()
            .map(|m| MemberEntry {
                user_id: m.user_id,
                display_name: dir.user(m.user_id).map(|u| u.display_name.clone()).unwrap_or_default(),
                role: m.role,
                joined_at: m.joined_at,
            })
            .collect())
    }

    pub fn homepage(&self, group: GroupId, viewer: Option<UserId>) -> Result<GroupHomepage> {
        self.read_space(group, |space, dir| {
            let g = dir.group(group)?;
            let member = viewer.is_some_and(|v| g.is_member(v));
            let pending = viewer.is_some_and(|v| g.is_pending(v));
            let standing = Standing {
                member,
                moderator: viewer.is_some_and(|v| g.is_moderator(v)),
                pending,
                can_join: viewer.is_some() && !member && !pending,
            };
            let visible = authorize_group(g, viewer, Action::Read);
            let areas = if visible {
                space
                    .areas()
                    .map(|a| AreaSummary {
                        id: a.id,
                        title: a.title.clone(),
                        description: a.description.clone(),
                        item_count: a.folio.len(),
                        comment_count: a.discussion.len(),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let linked_areas = if visible {
                space.linked_in().to_vec()
            } else {
                Vec::new()
            };
            Ok(GroupHomepage {
                group: GroupSummary::from(g),
                viewer: standing,
                areas,
                linked_areas,
            })
        })
    }

    pub fn authorize(&self, user: Option<UserId>, scope: Scope, action: Action) -> bool {
        match scope {
            Scope::Group(g) => self
                .directory
                .read()
                .group(g)
                .is_ok_and(|g| authorize_group(g, user, action)),
            Scope::Area(a) => {
                let Some(g) = self.owner_of(a) else {
                    return false;
                };
                self.read_space(g, |space, dir| Ok(space.can(dir, a, user, action)))
                    .unwrap_or(false)
            }
        }
    }

    // meeting areas

    pub fn create_meeting_area(
        &self,
        group: GroupId,
        creator: UserId,
        title: &str,
        description: &str,
        at: Timestamp,
    ) -> Result<MeetingArea> {
        self.write_space(group, |space, dir| {
            space.create_area(dir, creator, title, description, at)
        })
    }

    pub fn link_area(&self, area: AreaId, other: GroupId, actor: UserId) -> Result<MeetingArea> {
        let owner = self.owner_or(area, Error::UnknownArea(area))?;
        if owner == other {
            return self.read_space(owner, |space, dir| {
                space.check_link(dir, area, other, actor).and(Err(Error::SelfLink))
            });
        }
        let owner_handle = self.handle(owner)?;
        let other_handle = self.handle(other)?;
        let (mut first, mut second) = if owner < other {
            let a = owner_handle.write();
            let b = other_handle.write();
            (a, b)
        } else {
            let b = other_handle.write();
            let a = owner_handle.write();
            (a, b)
        };
        let (owner_space, other_space) = (&mut *first, &mut *second);
        let dir = self.directory.read();
        let changes = owner_space.check_link(&dir, area, other, actor)?;
        if !changes {
            return owner_space.area(area).cloned();
        }
        let other_name = dir.group(other)?.name.clone();
        let linked = |space: &mut GroupSpace, other_space: &mut GroupSpace| {
            let a = space.apply_link(area, other, &other_name);
            other_space.add_linked_in(LinkedArea {
                area,
                owner_group: owner,
                title: a.title.clone(),
            });
            a
        };
        match &self.storage {
            None => Ok(linked(owner_space, other_space)),
            Some(store) => {
                let mut a = owner_space.clone();
                let mut b = other_space.clone();
                let result = linked(&mut a, &mut b);
                store.commit(Commit {
                    directory: None,
                    spaces: vec![&a, &b],
                })?;
                *owner_space = a;
                *other_space = b;
                Ok(result)
            }
        }
    }

    pub fn area(&self, area: AreaId, viewer: Option<UserId>) -> Result<MeetingArea> {
        let g = self.owner_or(area, Error::UnknownArea(area))?;
        self.read_space(g, |space, dir| {
            let a = space.area(area)?;
            if !authorize_area(dir, a, viewer, Action::Read) {
                return Err(Error::AccessDenied);
            }
            Ok(a.clone())
        })
    }

    pub fn folio(&self, area: AreaId, viewer: Option<UserId>) -> Result<Vec<Item>> {
        let g = self.owner_or(area, Error::UnknownArea(area))?;
        self.read_space(g, |space, dir| {
            let a = space.area(area)?;
            if !authorize_area(dir, a, viewer, Action::Read) {
                return Err(Error::AccessDenied);
            }
            a.folio.iter().map(|i| space.item(*i).cloned()).collect()
        })
    }

    // items

    pub fn post_item(&self, area: AreaId, author: UserId, spec: ItemSpec, at: Timestamp) -> Result<Item> {
        let g = self.owner_or(area, Error::UnknownArea(area))?;
        let settings = self.settings;
        self.write_space(g, |space, dir| space.post_item(dir, &settings, area, author, spec, at))
    }

    pub fn item(&self, item: ItemId, viewer: Option<UserId>) -> Result<Item> {
        let g = self.owner_or(item, Error::UnknownItem(item))?;
        self.read_space(g, |space, dir| {
            let i = space.item(item)?;
            if !space.can(dir, i.area, viewer, Action::Read) {
                return Err(Error::AccessDenied);
            }
            Ok(i.clone())
        })
    }

    pub fn retract_item(&self, item: ItemId, actor: UserId) -> Result<Item> {
        let g = self.owner_or(item, Error::UnknownItem(item))?;
        self.write_space(g, |space, dir| space.retract_item(dir, item, actor))
    }

    // comments

    pub fn post_comment(&self, area: AreaId, author: UserId, draft: NewComment, at: Timestamp) -> Result<Comment> {
        let g = self.owner_or(area, Error::UnknownArea(area))?;
        self.write_space(g, |space, dir| {
            space.post_comment(dir, area, author, draft, at, None).map(|(c, _)| c)
        })
    }

    /// Posts an in-text comment at `offset` of the document's latest revision.
    #[allow(clippy::too_many_arguments)]
    pub fn attach_intext(
        &self,
        document: DocumentId,
        revision: Option<u32>,
        offset: usize,
        subject: Option<String>,
        body: String,
        author: UserId,
        at: Timestamp,
    ) -> Result<(Comment, Anchor)> {
        let g = self.owner_or(document, Error::UnknownDocument(document))?;
        self.write_space(g, |space, dir| {
            let area = space.document(document)?.area;
            let draft = NewComment {
                subject,
                body,
                target: TargetSpec::InText {
                    document,
                    revision,
                    offset,
                },
            };
            let (c, a) = space.post_comment(dir, area, author, draft, at, None)?;
            Ok((c, a.expect("in-text comments always create an anchor")))
        })
    }

    fn reserve_message(&self, message_id: &str) -> Result<()> {
        let mut messages = self.messages.lock();
        if messages.contains_key(message_id) {
            return Err(Error::Duplicate(message_id.to_string()));
        }
        messages.insert(message_id.to_string(), None);
        Ok(())
    }

    fn settle_message(&self, message_id: &str, comment: Option<CommentId>) {
        let mut messages = self.messages.lock();
        match comment {
            Some(c) => {
                messages.insert(message_id.to_string(), Some(c));
            }
            None => {
                messages.remove(message_id);
            }
        }
    }

    pub fn message_comment(&self, message_id: &str) -> Option<CommentId> {
        self.messages.lock().get(message_id).copied().flatten()
    }

    /// Posts a comment that arrived by mail. A message id that was accepted
    /// before, here or in an archive import, yields [`Error::Duplicate`].
    pub fn post_mail_comment(
        &self,
        area: AreaId,
        author: UserId,
        draft: NewComment,
        message_id: &str,
        at: Timestamp,
    ) -> Result<Comment> {
        let g = self.owner_or(area, Error::UnknownArea(area))?;
        self.reserve_message(message_id)?;
        let result = self.write_space(g, |space, dir| {
            space
                .post_comment(dir, area, author, draft, at, Some(message_id.to_string()))
                .map(|(c, _)| c)
        });
        self.settle_message(message_id, result.as_ref().ok().map(|c| c.id));
        result
    }

    pub fn comment(&self, comment: CommentId, viewer: Option<UserId>) -> Result<Comment> {
        let g = self.owner_or(comment, Error::UnknownComment(comment))?;
        self.read_space(g, |space, dir| {
            let c = space.comment(comment)?;
            if !space.can(dir, c.area, viewer, Action::Read) {
                return Err(Error::AccessDenied);
            }
            Ok(c.clone())
        })
    }

    pub fn comment_header(&self, comment: CommentId, viewer: Option<UserId>) -> Result<CommentHeader> {
        let c = self.comment(comment, viewer)?;
        self.comments_index(c.area, viewer, IndexOrder::Chronological)?
            .into_iter()
            .find(|h| h.comment_id == comment)
            .ok_or(Error::UnknownComment(comment))
    }

    pub fn retract_comment(&self, comment: CommentId, actor: UserId) -> Result<Comment> {
        let g = self.owner_or(comment, Error::UnknownComment(comment))?;
        self.write_space(g, |space, dir| space.retract_comment(dir, comment, actor))
    }

    pub fn comments_index(
        &self,
        area: AreaId,
        viewer: Option<UserId>,
        order: IndexOrder,
    ) -> Result<Vec<CommentHeader>> {
        let g = self.owner_or(area, Error::UnknownArea(area))?;
        self.read_space(g, |space, dir| space.comments_index(dir, area, viewer, order))
    }

    pub fn activate(
        &self,
        viewer: Option<UserId>,
        target: ActivationTarget,
        prior: ActivationState,
    ) -> Result<ActivationState> {
        let id = match target {
            ActivationTarget::Reference(c) | ActivationTarget::Subject(c) => c,
        };
        let g = self.owner_or(id, Error::UnknownComment(id))?;
        self.read_space(g, |space, dir| {
            let c = space.comment(id)?;
            if !space.can(dir, c.area, viewer, Action::Read) {
                return Err(Error::AccessDenied);
            }
            activate(space, target, prior)
        })
    }

    // documents

    pub fn document(&self, document: DocumentId, viewer: Option<UserId>) -> Result<Document> {
        let g = self.owner_or(document, Error::UnknownDocument(document))?;
        self.read_space(g, |space, dir| {
            let d = space.document(document)?;
            if !space.can(dir, d.area, viewer, Action::Read) {
                return Err(Error::AccessDenied);
            }
            Ok(d.clone())
        })
    }

    pub fn document_revision(
        &self,
        document: DocumentId,
        revision: Option<u32>,
        viewer: Option<UserId>,
    ) -> Result<DocumentRevision> {
        let d = self.document(document, viewer)?;
        match revision {
            Some(n) => d.revision(n).cloned(),
            None => Ok(d.latest().clone()),
        }
    }

    pub fn anchors(&self, document: DocumentId, viewer: Option<UserId>) -> Result<Vec<Anchor>> {
        let g = self.owner_or(document, Error::UnknownDocument(document))?;
        self.read_space(g, |space, dir| {
            let d = space.document(document)?;
            if !space.can(dir, d.area, viewer, Action::Read) {
                return Err(Error::AccessDenied);
            }
            Ok(space.anchors_of(d).into_iter().cloned().collect())
        })
    }

    /// The revision text with reference markers of every anchor that existed
    /// at that revision.
    pub fn annotated(
        &self,
        document: DocumentId,
        revision: Option<u32>,
        viewer: Option<UserId>,
        active: Option<AnchorId>,
    ) -> Result<AnnotatedDocument> {
        let g = self.owner_or(document, Error::UnknownDocument(document))?;
        self.read_space(g, |space, dir| {
            let d = space.document(document)?;
            if !space.can(dir, d.area, viewer, Action::Read) {
                return Err(Error::AccessDenied);
            }
            let rev = match revision {
                Some(n) => d.revision(n)?,
                None => d.latest(),
            };
            let anchors: Vec<&Anchor> = space
                .anchors_of(d)
                .into_iter()
                .filter(|a| a.position_at(rev.revision).is_some())
                .collect();
            render_annotated(rev, &anchors, active)
        })
    }

    pub fn revise_document(
        &self,
        document: DocumentId,
        new_text: String,
        author: UserId,
        at: Timestamp,
    ) -> Result<DocumentRevision> {
        let g = self.owner_or(document, Error::UnknownDocument(document))?;
        let settings = self.settings;
        self.write_space(g, |space, dir| {
            space.revise_document(dir, &settings, document, new_text, author, at)
        })
    }

    pub fn revise_upload(
        &self,
        document: DocumentId,
        source: DocumentSource,
        author: UserId,
        at: Timestamp,
    ) -> Result<DocumentRevision> {
        let g = self.owner_or(document, Error::UnknownDocument(document))?;
        let settings = self.settings;
        self.write_space(g, |space, dir| {
            space.revise_upload(dir, &settings, document, source, author, at)
        })
    }

    // polls

    fn settle_if_due(&self, group: GroupId, poll: PollId, at: Timestamp) -> Result<()> {
        let due = self.read_space(group, |space, _| Ok(space.needs_settling(poll, at)))?;
        if due {
            self.write_space(group, |space, _| {
                space.settle_poll(poll, at);
                Ok(())
            })?;
        }
        Ok(())
    }

    pub fn cast_ballot(&self, poll: PollId, voter: UserId, content: BallotContent, at: Timestamp) -> Result<Ballot> {
        let g = self.owner_or(poll, Error::UnknownPoll(poll))?;
        // settle in its own step so a late cast leaves the poll closed even
        // though the cast itself fails
        self.settle_if_due(g, poll, at)?;
        self.write_space(g, |space, _| space.cast_ballot(poll, voter, content, at))
    }

    pub fn poll_view(&self, poll: PollId, viewer: Option<UserId>, at: Timestamp) -> Result<PollView> {
        let g = self.owner_or(poll, Error::UnknownPoll(poll))?;
        self.settle_if_due(g, poll, at)?;
        self.read_space(g, |space, dir| space.poll_view(dir, poll, viewer, at))
    }

    pub fn tally(&self, poll: PollId, viewer: Option<UserId>, at: Timestamp) -> Result<Tally> {
        self.poll_view(poll, viewer, at).map(|v| v.tally)
    }

    pub fn close_poll(&self, poll: PollId, actor: UserId, at: Timestamp) -> Result<Outcome> {
        let g = self.owner_or(poll, Error::UnknownPoll(poll))?;
        self.write_space(g, |space, dir| space.close_poll(dir, poll, actor, at))
    }

    /// Closes every poll whose deadline passed. Optional; reads and casts
    /// settle lazily anyway.
    pub fn settle_all(&self, at: Timestamp) -> Result<usize> {
        let groups: Vec<GroupId> = self.index.read().spaces.keys().copied().collect();
        let mut closed = 0;
        for g in groups {
            let due = self.read_space(g, |space, _| Ok(space.polls().any(|p| p.needs_settling(at))))?;
            if due {
                closed += self.write_space(g, |space, _| Ok(space.settle_all(at)))?;
            }
        }
        Ok(closed)
    }

    // feedback

    pub fn submit_feedback(
        &self,
        author: UserId,
        scope: FeedbackScope,
        rating: u8,
        text: String,
        anonymous: bool,
        at: Timestamp,
    ) -> Result<FeedbackRecord> {
        let record = FeedbackRecord::new(author, anonymous, scope, rating, text, at)?;
        match scope {
            FeedbackScope::Platform => self.write_directory(|d| {
                d.user(author)?;
                d.push_platform_feedback(record.clone());
                Ok(record)
            }),
            FeedbackScope::Group { group } => self.write_space(group, |space, dir| {
                if !dir.group(group)?.is_member(author) {
                    return Err(Error::NotAMember);
                }
                space.push_feedback(record.clone());
                Ok(record)
            }),
        }
    }

    pub fn group_feedback(&self, group: GroupId, viewer: UserId) -> Result<Vec<FeedbackRecord>> {
        self.read_space(group, |space, dir| {
            if !dir.group(group)?.is_member(viewer) {
                return Err(Error::NotAMember);
            }
            Ok(space.feedback().to_vec())
        })
    }

    pub fn platform_feedback(&self, viewer: UserId) -> Result<Vec<FeedbackRecord>> {
        self.directory.read().platform_feedback(viewer).map(<[_]>::to_vec)
    }

    // export and import

    pub fn export_group(&self, group: GroupId, actor: UserId, at: Timestamp) -> Result<ExportBundle> {
        self.settle_all_in(group, at)?;
        self.read_space(group, |space, dir| {
            if !dir.group(group)?.is_moderator(actor) {
                return Err(Error::NotAuthorized);
            }
            Ok(ExportBundle {
                format_version: FORMAT_VERSION,
                instance: InstanceMetadata {
                    exported_at: at,
                    generator: concat!("deme ", env!("CARGO_PKG_VERSION")).to_string(),
                },
                content: export_content(dir, space)?,
            })
        })
    }

    fn settle_all_in(&self, group: GroupId, at: Timestamp) -> Result<()> {
        let due = self.read_space(group, |space, _| Ok(space.polls().any(|p| p.needs_settling(at))))?;
        if due {
            self.write_space(group, |space, _| Ok(space.settle_all(at)))?;
        }
        Ok(())
    }

    /// Checks a group's live state against every bundle invariant.
    pub fn check_integrity(&self, group: GroupId) -> Result<()> {
        self.read_space(group, |space, dir| {
            let content = export_content(dir, space)?;
            validate(&content).map_err(Error::IntegrityViolation)
        })
    }

    /// Recreates a group from a bundle. The actor must be an operator or a
    /// moderator of the bundled group.
    pub fn import_group(&self, bundle: ExportBundle, actor: UserId, rename: Option<&str>) -> Result<Group> {
        if bundle.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(bundle.format_version));
        }
        let mut content = bundle.content;
        validate(&content).map_err(Error::IntegrityViolation)?;
        if let Some(name) = rename {
            check_group_name(name)?;
            content.group.name = name.to_string();
        }
        let group_id = content.group.id;

        // areas elsewhere that already link to this group
        let handles: Vec<(GroupId, Arc<RwLock<GroupSpace>>)> = {
            let index = self.index.read();
            index.spaces.iter().map(|(g, h)| (*g, h.clone())).collect()
        };
        let mut linked_in = Vec::new();
        for (_, h) in &handles {
            let space = h.read();
            for a in space.areas() {
                if a.linked_groups.contains(&group_id) {
                    linked_in.push(LinkedArea {
                        area: a.id,
                        owner_group: a.owner_group,
                        title: a.title.clone(),
                    });
                }
            }
        }
        let mut space = space_from_content(&content);
        for l in linked_in {
            space.add_linked_in(l);
        }

        // groups this one links to that exist here; lock them in id order
        let mut targets: Vec<GroupId> = content
            .areas
            .iter()
            .flat_map(|a| a.linked_groups.iter().copied())
            .filter(|g| handles.iter().any(|(h, _)| h == g))
            .collect();
        targets.sort();
        targets.dedup();
        let target_handles: Vec<Arc<RwLock<GroupSpace>>> =
            targets.iter().map(|g| self.handle(*g)).collect::<Result<_>>()?;
        let mut guards: Vec<_> = target_handles.iter().map(|h| h.write()).collect();
        let mut dir = self.directory.write();

        if !dir.is_operator(actor) && !content.group.is_moderator(actor) {
            return Err(Error::NotAuthorized);
        }
        if dir.name_taken(&content.group.name) {
            return Err(Error::DuplicateName(content.group.name.clone()));
        }
        let collision = |what: String| Err(Error::IntegrityViolation(format!("id collision: {what}")));
        if dir.group(group_id).is_ok() {
            return collision(format!("group {group_id} already exists"));
        }
        {
            let index = self.index.read();
            if let Some(id) = space.all_ids().into_iter().find(|id| index.locate.contains_key(id)) {
                return collision(format!("{id} already exists"));
            }
        }
        for u in &content.users {
            if let Ok(existing) = dir.user(u.user_id) {
                if existing.email != u.email && u.email.is_some() {
                    return collision(format!("user {} exists with another address", u.user_id));
                }
            }
            if let Some(e) = &u.email {
                if dir.user_by_email(e).is_some_and(|m| m.user_id != u.user_id) {
                    return Err(Error::IntegrityViolation(format!("email {e} belongs to another user")));
                }
            }
        }
        let message_ids: Vec<String> = content
            .comments
            .iter()
            .filter_map(|c| c.source_message_id.clone())
            .collect();
        {
            let messages = self.messages.lock();
            if let Some(m) = message_ids.iter().find(|m| messages.contains_key(*m)) {
                return Err(Error::IntegrityViolation(format!("message {m} was already accepted")));
            }
        }

        let mut draft_dir = dir.clone();
        for u in &content.users {
            draft_dir.adopt_user(u.clone())?;
        }
        draft_dir.insert_group(content.group.clone());
        let mut drafts: Vec<GroupSpace> = guards.iter().map(|g| (**g).clone()).collect();
        for target in drafts.iter_mut() {
            for a in &content.areas {
                if a.linked_groups.contains(&target.group_id) {
                    target.add_linked_in(LinkedArea {
                        area: a.id,
                        owner_group: group_id,
                        title: a.title.clone(),
                    });
                }
            }
        }
        if let Some(store) = &self.storage {
            let mut spaces: Vec<&GroupSpace> = drafts.iter().collect();
            spaces.push(&space);
            store.commit(Commit {
                directory: Some(&draft_dir),
                spaces,
            })?;
        }
        *dir = draft_dir;
        for (guard, draft) in guards.iter_mut().zip(drafts) {
            **guard = draft;
        }
        {
            let mut messages = self.messages.lock();
            for c in space.comments() {
                if let Some(m) = &c.source_message_id {
                    messages.insert(m.clone(), Some(c.id));
                }
            }
        }
        let mut index = self.index.write();
        for id in space.all_ids() {
            index.locate.insert(id, group_id);
        }
        index.spaces.insert(group_id, Arc::new(RwLock::new(space)));
        Ok(content.group)
    }

    // mail archives

    /// Posts archived messages in order, as one transaction. Parents must
    /// precede their replies.
    pub fn import_archive(
        &self,
        area: AreaId,
        actor: UserId,
        messages: Vec<ArchivedMessage>,
        at: Timestamp,
    ) -> Result<Vec<ArchiveResult>> {
        let g = self.owner_or(area, Error::UnknownArea(area))?;
        let mut reserved = Vec::new();
        let outcome = self.write_space_and_directory(g, |space, dir| {
            if !space.can(dir, area, Some(actor), Action::Moderate) {
                return Err(Error::NotAuthorized);
            }
            let registry = self.messages.lock();
            let mut accepted: HashMap<String, CommentId> = HashMap::new();
            let mut results = Vec::with_capacity(messages.len());
            for m in messages {
                let known = registry
                    .get(&m.message_id)
                    .copied()
                    .or_else(|| accepted.get(&m.message_id).map(|c| Some(*c)));
                if let Some(comment) = known {
                    results.push(ArchiveResult::Duplicate { comment });
                    continue;
                }
                let parent = m.parents.iter().find_map(|p| {
                    let c = accepted
                        .get(p)
                        .copied()
                        .or_else(|| registry.get(p).copied().flatten())?;
                    space.comment(c).ok().filter(|c| c.area == area).map(|c| c.id)
                });
                let (author, unmapped) = match &m.sender {
                    Sender::Member(u) => {
                        dir.user(*u)?;
                        (*u, false)
                    }
                    Sender::Address(a) => (dir.placeholder_for(a), true),
                };
                let target = match parent {
                    Some(comment) => TargetSpec::ReplyTo { comment },
                    None => TargetSpec::Global,
                };
                let mut subject = truncate(m.subject.trim(), MAX_TITLE_CHARS);
                if subject.is_empty() {
                    subject = match parent {
                        Some(p) => reply_subject(&space.comment(p)?.subject),
                        None => "(no subject)".to_string(),
                    };
                }
                let draft = NewComment {
                    subject: Some(subject),
                    body: truncate_bytes(&m.body, MAX_BODY_BYTES),
                    target,
                };
                let (comment, _) = space.post_comment_unchecked(
                    area,
                    author,
                    draft,
                    m.date.unwrap_or(at),
                    Some(m.message_id.clone()),
                )?;
                accepted.insert(m.message_id, comment.id);
                results.push(ArchiveResult::Imported {
                    comment: comment.id,
                    threaded: parent.is_some(),
                    orphan_parent: parent.is_none() && !m.parents.is_empty(),
                    unmapped,
                });
            }
            // reserve before the space lock is released; settled below
            let mut registry = registry;
            for m in accepted.keys() {
                registry.insert(m.clone(), None);
                reserved.push(m.clone());
            }
            Ok((results, accepted))
        });
        let mut registry = self.messages.lock();
        match outcome {
            Ok((results, accepted)) => {
                for (m, c) in accepted {
                    registry.insert(m, Some(c));
                }
                Ok(results)
            }
            Err(e) => {
                for m in reserved {
                    registry.remove(&m);
                }
                Err(e)
            }
        }
    }
}

fn truncate(s: &str, max_chars: usize) -> String {
    s.chars().take(max_chars).collect()
}

fn truncate_bytes(s: &str, max: usize) -> String {
    if s.len() <= max {
        return s.to_string();
    }
    let mut end = max;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    s[..end].to_string()
}
