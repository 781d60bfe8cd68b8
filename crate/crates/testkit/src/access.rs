//! The permission table, written out row by row.

use deme_core::{Action, GroupAccess, Relation};

/// `(relation, access, [read, post, moderate])` for users without the
/// moderator role.
pub const TABLE: [(Relation, GroupAccess, [bool; 3]); 6] = [
    (Relation::OwnerMember, GroupAccess::Open, [true, true, false]),
    (Relation::OwnerMember, GroupAccess::Closed, [true, true, false]),
    (Relation::LinkedMember, GroupAccess::Open, [true, true, false]),
    (Relation::LinkedMember, GroupAccess::Closed, [true, true, false]),
    (Relation::Outsider, GroupAccess::Open, [true, false, false]),
    (Relation::Outsider, GroupAccess::Closed, [false, false, false]),
];

/// Owner-group moderators may do everything regardless of access.
pub const MODERATOR: [bool; 3] = [true, true, true];

pub const ACTIONS: [Action; 3] = [Action::Read, Action::Post, Action::Moderate];

pub fn expected(relation: Relation, access: GroupAccess, action: Action) -> bool {
    let column = ACTIONS.iter().position(|&a| a == action).expect("listed action");
    TABLE
        .iter()
        .find(|(r, a, _)| *r == relation && *a == access)
        .map(|(_, _, row)| row[column])
        .expect("every combination has a row")
}
