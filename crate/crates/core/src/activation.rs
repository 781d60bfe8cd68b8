//! Viewer activation: which comment is open and which item reference drives
//! the item display.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{AnchorId, CommentId, ItemId};
use crate::space::GroupSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "comment", rename_all = "snake_case")]
pub enum ActivationTarget {
    Reference(CommentId),
    Subject(CommentId),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationState {
    pub active_comment: Option<CommentId>,
    /// The comment whose item reference is active.
    pub active_reference: Option<CommentId>,
    /// Item loaded into the display by the active reference.
    pub displayed_item: Option<ItemId>,
    /// Anchor of the active reference, when it points into a document.
    pub reference_anchor: Option<AnchorId>,
}

impl ActivationState {
    /// The in-text marker to highlight: the active reference's anchor, while
    /// the comment it belongs to is also the active comment.
    pub fn highlighted_anchor(&self) -> Option<AnchorId> {
        if self.active_comment.is_some() && self.active_comment == self.active_reference {
            self.reference_anchor
        } else {
            None
        }
    }
}

pub fn activate(space: &GroupSpace, target: ActivationTarget, prior: ActivationState) -> Result<ActivationState> {
    match target {
        ActivationTarget::Reference(id) => {
            let comment = space.comment(id)?;
            let reference = space.item_reference(comment).ok_or(Error::NoReference)?;
            Ok(ActivationState {
                active_comment: Some(id),
                active_reference: Some(id),
                displayed_item: Some(reference.item_id),
                reference_anchor: reference.anchor_id,
            })
        }
        ActivationTarget::Subject(id) => {
            space.comment(id)?;
            Ok(ActivationState {
                active_comment: Some(id),
                ..prior
            })
        }
    }
}
