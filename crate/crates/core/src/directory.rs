//! The server-wide registry of users and groups.

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::FeedbackRecord;
use crate::ids::{GroupId, UserId};
use crate::model::{
    check_body, check_chars, check_title, normalize_email, Group, GroupAccess, JoinPolicy, JoinRequest, Member,
    Membership, Role, Timestamp, MAX_GROUP_NAME_CHARS,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JoinOutcome {
    Joined { membership: Membership },
    Pending { request: JoinRequest },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileUpdate {
    pub display_name: Option<String>,
    pub profile: Option<std::collections::BTreeMap<String, String>>,
    pub notifications: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSettings {
    pub description: Option<String>,
    pub access: Option<GroupAccess>,
    pub join_policy: Option<JoinPolicy>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct DirectoryRecord {
    users: Vec<Member>,
    groups: Vec<Group>,
    #[serde(default)]
    operators: BTreeSet<UserId>,
    #[serde(default)]
    platform_feedback: Vec<FeedbackRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "DirectoryRecord", into = "DirectoryRecord")]
pub struct Directory {
    users: IndexMap<UserId, Member>,
    groups: IndexMap<GroupId, Group>,
    operators: BTreeSet<UserId>,
    platform_feedback: Vec<FeedbackRecord>,
    emails: HashMap<String, UserId>,
    names: HashMap<String, GroupId>,
    placeholders: HashMap<String, UserId>,
}

impl From<DirectoryRecord> for Directory {
    fn from(r: DirectoryRecord) -> Self {
        let mut dir = Directory {
            operators: r.operators,
            platform_feedback: r.platform_feedback,
            ..Directory::default()
        };
        for user in r.users {
            dir.index_user(&user);
            dir.users.insert(user.user_id, user);
        }
        for group in r.groups {
            dir.names.insert(group.name.clone(), group.id);
            dir.groups.insert(group.id, group);
        }
        dir
    }
}

impl From<Directory> for DirectoryRecord {
    fn from(d: Directory) -> Self {
        DirectoryRecord {
            users: d.users.into_values().collect(),
            groups: d.groups.into_values().collect(),
            operators: d.operators,
            platform_feedback: d.platform_feedback,
        }
    }
}

pub(crate) fn check_group_name(name: &str) -> Result<()> {
    if name.trim().is_empty() {
        return Err(Error::InvalidName("name must not be empty"));
    }
    if name.chars().count() > MAX_GROUP_NAME_CHARS {
        return Err(Error::InvalidName("name exceeds 100 characters"));
    }
    if name.chars().any(char::is_control) {
        return Err(Error::InvalidName("name contains control characters"));
    }
    Ok(())
}

impl Directory {
    fn index_user(&mut self, user: &Member) {
        if let Some(email) = &user.email {
            self.emails.insert(email.clone(), user.user_id);
        }
        if let Some(address) = &user.imported_address {
            self.placeholders.insert(address.clone(), user.user_id);
        }
    }

    // users

    /// Registers a user. The first user ever registered becomes an operator.
    pub fn register_user(&mut self, display_name: &str, email: Option<&str>) -> Result<Member> {
        check_title("display name", display_name)?;
        let email = email.map(normalize_email).transpose()?;
        if let Some(email) = &email {
            if self.emails.contains_key(email) {
                return Err(Error::DuplicateEmail(email.clone()));
            }
        }
        let member = Member {
            user_id: UserId::new(),
            display_name: display_name.trim().to_string(),
            email,
            email_verified: false,
            profile: Default::default(),
            notifications: true,
            imported_address: None,
        };
        if self.operators.is_empty() {
            self.operators.insert(member.user_id);
        }
        self.index_user(&member);
        self.users.insert(member.user_id, member.clone());
        Ok(member)
    }

    /// Adds a user record carried in from elsewhere, keeping its id.
    pub(crate) fn adopt_user(&mut self, member: Member) -> Result<()> {
        if let Some(email) = &member.email {
            if self.emails.get(email).is_some_and(|u| *u != member.user_id) {
                return Err(Error::DuplicateEmail(email.clone()));
            }
        }
        if self.users.contains_key(&member.user_id) {
            return Ok(());
        }
        self.index_user(&member);
        self.users.insert(member.user_id, member);
        Ok(())
    }

    pub fn update_user(&mut self, user: UserId, update: ProfileUpdate) -> Result<Member> {
        if let Some(name) = &update.display_name {
            check_title("display name", name)?;
        }
        if let Some(profile) = &update.profile {
            for (k, v) in profile {
                check_chars("profile field", k, crate::model::MAX_TITLE_CHARS)?;
                check_body("profile value", v)?;
            }
        }
        let member = self.users.get_mut(&user).ok_or(Error::UnknownUser(user))?;
        if let Some(name) = update.display_name {
            member.display_name = name.trim().to_string();
        }
        if let Some(profile) = update.profile {
            member.profile = profile;
        }
        if let Some(n) = update.notifications {
            member.notifications = n;
        }
        Ok(member.clone())
    }

    pub fn set_email_verified(&mut self, user: UserId, verified: bool) -> Result<()> {
        let member = self.users.get_mut(&user).ok_or(Error::UnknownUser(user))?;
        member.email_verified = verified;
        Ok(())
    }

    pub fn user(&self, user: UserId) -> Result<&Member> {
        self.users.get(&user).ok_or(Error::UnknownUser(user))
    }

    pub fn users(&self) -> impl Iterator<Item = &Member> {
        self.users.values()
    }

    /// Exact match on the normalized address.
    pub fn user_by_email(&self, email: &str) -> Option<&Member> {
        let email = normalize_email(email).ok()?;
        self.emails.get(&email).and_then(|u| self.users.get(u))
    }

    /// The placeholder standing in for an unmapped archive sender, created on
    /// first use.
    pub fn placeholder_for(&mut self, address: &str) -> UserId {
        let address = address.trim().to_ascii_lowercase();
        if let Some(id) = self.placeholders.get(&address) {
            return *id;
        }
        let mut name = format!("imported: {address}");
        if name.chars().count() > crate::model::MAX_TITLE_CHARS {
            name = name.chars().take(crate::model::MAX_TITLE_CHARS).collect();
        }
        let member = Member {
            user_id: UserId::new(),
            display_name: name,
            email: None,
            email_verified: false,
            profile: Default::default(),
            notifications: false,
            imported_address: Some(address),
        };
        let id = member.user_id;
        self.index_user(&member);
        self.users.insert(id, member);
        id
    }

    pub fn is_operator(&self, user: UserId) -> bool {
        self.operators.contains(&user)
    }

    // groups

    pub fn create_group(
        &mut self,
        name: &str,
        description: &str,
        access: GroupAccess,
        join_policy: JoinPolicy,
        creator: UserId,
        at: Timestamp,
    ) -> Result<Group> {
        check_group_name(name)?;
        check_body("description", description)?;
        if self.names.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        self.user(creator)?;
        let group = Group {
            id: GroupId::new(),
            name: name.to_string(),
            description: description.to_string(),
            access,
            join_policy,
            created_at: at,
            members: vec![Membership {
                user_id: creator,
                role: Role::Moderator,
                joined_at: at,
            }],
            pending: Vec::new(),
        };
        self.insert_group(group.clone());
        Ok(group)
    }

    pub(crate) fn insert_group(&mut self, group: Group) {
        self.names.insert(group.name.clone(), group.id);
        self.groups.insert(group.id, group);
    }

    pub fn group(&self, group: GroupId) -> Result<&Group> {
        self.groups.get(&group).ok_or(Error::UnknownGroup(group))
    }

    pub fn group_by_name(&self, name: &str) -> Option<&Group> {
        self.names.get(name).and_then(|g| self.groups.get(g))
    }

    pub fn groups(&self) -> impl Iterator<Item = &Group> {
        self.groups.values()
    }

    pub fn name_taken(&self, name: &str) -> bool {
        self.names.contains_key(name)
    }

    fn group_mut(&mut self, group: GroupId) -> Result<&mut Group> {
        self.groups.get_mut(&group).ok_or(Error::UnknownGroup(group))
    }

    fn require_moderator(&self, group: GroupId, actor: UserId) -> Result<()> {
        if self.group(group)?.is_moderator(actor) {
            Ok(())
        } else {
            Err(Error::NotAuthorized)
        }
    }

    pub fn join_group(&mut self, group: GroupId, user: UserId, at: Timestamp) -> Result<JoinOutcome> {
        let g = self.group(group)?;
        let member = self.user(user)?;
        if member.is_placeholder() {
            return Err(Error::NotAuthorized);
        }
        if g.is_member(user) {
            return Err(Error::AlreadyMember);
        }
        if g.is_pending(user) {
            return Err(Error::AlreadyPending);
        }
        let g = self.group_mut(group)?;
        match g.join_policy {
            JoinPolicy::OpenJoin => {
                let membership = Membership {
                    user_id: user,
                    role: Role::Member,
                    joined_at: at,
                };
                g.members.push(membership.clone());
                Ok(JoinOutcome::Joined { membership })
            }
            JoinPolicy::ApprovalRequired => {
                let request = JoinRequest {
                    user_id: user,
                    requested_at: at,
                };
                g.pending.push(request.clone());
                Ok(JoinOutcome::Pending { request })
            }
        }
    }

    pub fn approve_join(&mut self, group: GroupId, actor: UserId, user: UserId, at: Timestamp) -> Result<Membership> {
        self.require_moderator(group, actor)?;
        let g = self.group_mut(group)?;
        let pos = g
            .pending
            .iter()
            .position(|r| r.user_id == user)
            .ok_or(Error::NoPendingRequest)?;
        g.pending.remove(pos);
        let membership = Membership {
            user_id: user,
            role: Role::Member,
            joined_at: at,
        };
        g.members.push(membership.clone());
        Ok(membership)
    }

    pub fn reject_join(&mut self, group: GroupId, actor: UserId, user: UserId) -> Result<()> {
        self.require_moderator(group, actor)?;
        let g = self.group_mut(group)?;
        let pos = g
            .pending
            .iter()
            .position(|r| r.user_id == user)
            .ok_or(Error::NoPendingRequest)?;
        g.pending.remove(pos);
        Ok(())
    }

    /// Leaves a group. The last moderator cannot leave while others remain.
    pub fn leave_group(&mut self, group: GroupId, user: UserId) -> Result<()> {
        let g = self.group(group)?;
        let m = g.membership(user).ok_or(Error::NotAMember)?;
        let moderators = g.members.iter().filter(|m| m.role == Role::Moderator).count();
        if m.role == Role::Moderator && moderators == 1 && g.members.len() > 1 {
            return Err(Error::NotAuthorized);
        }
        self.group_mut(group)?.members.retain(|m| m.user_id != user);
        Ok(())
    }

    pub fn set_role(&mut self, group: GroupId, actor: UserId, user: UserId, role: Role) -> Result<Membership> {
        self.require_moderator(group, actor)?;
        let g = self.group(group)?;
        g.membership(user).ok_or(Error::NotAMember)?;
        let moderators = g.members.iter().filter(|m| m.role == Role::Moderator).count();
        if role == Role::Member && g.is_moderator(user) && moderators == 1 {
            return Err(Error::NotAuthorized);
        }
        let g = self.group_mut(group)?;
        let m = g.members.iter_mut().find(|m| m.user_id == user).expect("checked above");
        m.role = role;
        Ok(m.clone())
    }

    pub fn configure_group(&mut self, group: GroupId, actor: UserId, settings: GroupSettings) -> Result<Group> {
        self.require_moderator(group, actor)?;
        if let Some(d) = &settings.description {
            check_body("description", d)?;
        }
        let g = self.group_mut(group)?;
        if let Some(d) = settings.description {
            g.description = d;
        }
        if let Some(a) = settings.access {
            g.access = a;
        }
        if let Some(p) = settings.join_policy {
            g.join_policy = p;
        }
        Ok(g.clone())
    }

    // platform feedback

    pub(crate) fn push_platform_feedback(&mut self, record: FeedbackRecord) {
        self.platform_feedback.push(record);
    }

    pub fn platform_feedback(&self, viewer: UserId) -> Result<&[FeedbackRecord]> {
        if self.is_operator(viewer) {
            Ok(&self.platform_feedback)
        } else {
            Err(Error::NotAuthorized)
        }
    }
}
