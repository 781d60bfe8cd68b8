//! Ratings and remarks about a group's work or about the platform itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{FeedbackId, GroupId, UserId};
use crate::model::{check_body, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeedbackScope {
    Group { group: GroupId },
    Platform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub id: FeedbackId,
    /// `None` for anonymous submissions; the submitter is not recorded at all.
    pub author: Option<UserId>,
    pub scope: FeedbackScope,
    pub rating: u8,
    pub text: String,
    pub created_at: Timestamp,
}

impl FeedbackRecord {
    pub fn new(
        author: UserId,
        anonymous: bool,
        scope: FeedbackScope,
        rating: u8,
        text: String,
        at: Timestamp,
    ) -> Result<Self> {
        check_rating(rating)?;
        check_body("feedback", &text)?;
        Ok(FeedbackRecord {
            id: FeedbackId::new(),
            author: (!anonymous).then_some(author),
            scope,
            rating,
            text,
            created_at: at,
        })
    }
}

pub(crate) fn check_rating(rating: u8) -> Result<()> {
    if (1..=5).contains(&rating) {
        Ok(())
    } else {
        Err(Error::InvalidRating)
    }
}
