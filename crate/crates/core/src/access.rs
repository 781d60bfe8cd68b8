//! Who may read, post in, or moderate a meeting area.

use serde::{Deserialize, Serialize};

use crate::directory::Directory;
use crate::ids::UserId;
use crate::model::{Group, GroupAccess, MeetingArea};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Read,
    Post,
    Moderate,
}

/// A user's standing towards one meeting area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    OwnerMember,
    LinkedMember,
    Outsider,
}

/// The fixed permission table. `moderator` only matters for
/// [`Action::Moderate`] and is only ever true for owner-group members.
pub fn permits(relation: Relation, access: GroupAccess, action: Action, moderator: bool) -> bool {
    match action {
        Action::Read => match relation {
            Relation::OwnerMember | Relation::LinkedMember => true,
            Relation::Outsider => access == GroupAccess::Open,
        },
        Action::Post => relation != Relation::Outsider,
        Action::Moderate => relation == Relation::OwnerMember && moderator,
    }
}

pub fn relation(dir: &Directory, area: &MeetingArea, user: Option<UserId>) -> Relation {
    let Some(user) = user else {
        return Relation::Outsider;
    };
    if dir.group(area.owner_group).is_ok_and(|g| g.is_member(user)) {
        return Relation::OwnerMember;
    }
    let linked = area
        .linked_groups
        .iter()
        .filter_map(|g| dir.group(*g).ok())
        .any(|g| g.is_member(user));
    if linked {
        Relation::LinkedMember
    } else {
        Relation::Outsider
    }
}

pub fn authorize_area(dir: &Directory, area: &MeetingArea, user: Option<UserId>, action: Action) -> bool {
    let Ok(owner) = dir.group(area.owner_group) else {
        return false;
    };
    let relation = relation(dir, area, user);
    let moderator = user.is_some_and(|u| owner.is_moderator(u));
    permits(relation, owner.access, action, moderator)
}

/// Group-level decisions, e.g. for the homepage or group feedback. Linked
/// membership grants nothing at this level.
pub fn authorize_group(group: &Group, user: Option<UserId>, action: Action) -> bool {
    let relation = match user {
        Some(u) if group.is_member(u) => Relation::OwnerMember,
        _ => Relation::Outsider,
    };
    let moderator = user.is_some_and(|u| group.is_moderator(u));
    permits(relation, group.access, action, moderator)
}
