//! Polls and decisions.
//!
//! A nonbinding poll and a binding decision share the same machinery; only
//! the folio item kind differs. Four procedures are supported: majority
//! (yes/no/abstain on a proposal), plurality (one option each), approval (any
//! subset of options) and consensus (agree/stand aside/block).
//!
//! Closure is lazy. A poll whose deadline has passed is closed, as of its
//! deadline, by the first cast or read that notices.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{AreaId, ItemId, PollId, UserId};
use crate::model::{check_body, check_chars, Timestamp, MAX_TITLE_CHARS};

pub const MAX_OPTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Majority,
    Plurality,
    Approval,
    Consensus,
}

impl Procedure {
    pub fn takes_options(self) -> bool {
        matches!(self, Procedure::Plurality | Procedure::Approval)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollSpec {
    pub question: String,
    #[serde(default)]
    pub options: Vec<String>,
    pub procedure: Procedure,
    #[serde(default)]
    pub binding: bool,
    #[serde(default)]
    pub deadline: Option<Timestamp>,
    /// Fraction of eligible voters that must take part.
    #[serde(default)]
    pub quorum: Option<f64>,
    /// Individual ballots are visible to everyone with access instead of
    /// moderators only, and travel in exports.
    #[serde(default)]
    pub open_ballots: bool,
}

impl PollSpec {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: &str| Err(Error::InvalidSpec(msg.to_string()));
        if self.question.trim().is_empty() {
            return invalid("poll question must not be empty");
        }
        check_body("question", &self.question)?;
        if self.procedure.takes_options() {
            if self.options.len() > MAX_OPTIONS {
                return invalid("too many options");
            }
            let distinct: BTreeSet<&str> = self.options.iter().map(|o| o.trim()).collect();
            if distinct.len() != self.options.len() || distinct.contains("") {
                return invalid("options must be distinct and non-empty");
            }
            if distinct.len() < 2 {
                return invalid("plurality and approval polls need at least two options");
            }
            for option in &self.options {
                check_chars("option", option, MAX_TITLE_CHARS)?;
            }
        } else if !self.options.is_empty() {
            return invalid("majority and consensus polls take no options");
        }
        if let Some(q) = self.quorum {
            if !(0.0..=1.0).contains(&q) {
                return invalid("quorum must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YesNo {
    Yes,
    No,
    Abstain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Agree,
    StandAside,
    Block,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BallotContent {
    YesNoAbstain {
        choice: YesNo,
    },
    SingleChoice {
        option: usize,
    },
    ApprovalSet {
        options: BTreeSet<usize>,
    },
    Consent {
        stance: Stance,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
}

impl BallotContent {
    fn check(&self, procedure: Procedure, option_count: usize) -> Result<()> {
        match (procedure, self) {
            (Procedure::Majority, BallotContent::YesNoAbstain { .. }) => Ok(()),
            (Procedure::Plurality, BallotContent::SingleChoice { option }) => {
                if *option < option_count {
                    Ok(())
                } else {
                    Err(Error::InvalidOption)
                }
            }
            (Procedure::Approval, BallotContent::ApprovalSet { options }) => {
                if options.iter().all(|&o| o < option_count) {
                    Ok(())
                } else {
                    Err(Error::InvalidOption)
                }
            }
            (Procedure::Consensus, BallotContent::Consent { reason, .. }) => {
                if let Some(reason) = reason {
                    check_body("reason", reason)?;
                }
                Ok(())
            }
            _ => Err(Error::ContentMismatch),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub poll_id: PollId,
    pub voter: UserId,
    pub cast_at: Timestamp,
    pub content: BallotContent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "procedure", rename_all = "snake_case")]
pub enum TallyCounts {
    Majority { yes: u32, no: u32, abstain: u32 },
    Plurality { counts: Vec<u32> },
    Approval { counts: Vec<u32> },
    Consensus { agree: u32, stand_aside: u32, block: u32 },
}

impl TallyCounts {
    pub fn empty(procedure: Procedure, option_count: usize) -> Self {
        match procedure {
            Procedure::Majority => TallyCounts::Majority {
                yes: 0,
                no: 0,
                abstain: 0,
            },
            Procedure::Plurality => TallyCounts::Plurality {
                counts: vec![0; option_count],
            },
            Procedure::Approval => TallyCounts::Approval {
                counts: vec![0; option_count],
            },
            Procedure::Consensus => TallyCounts::Consensus {
                agree: 0,
                stand_aside: 0,
                block: 0,
            },
        }
    }

    pub fn procedure(&self) -> Procedure {
        match self {
            TallyCounts::Majority { .. } => Procedure::Majority,
            TallyCounts::Plurality { .. } => Procedure::Plurality,
            TallyCounts::Approval { .. } => Procedure::Approval,
            TallyCounts::Consensus { .. } => Procedure::Consensus,
        }
    }

    fn record(&mut self, content: &BallotContent) {
        match (self, content) {
            (TallyCounts::Majority { yes, no, abstain }, BallotContent::YesNoAbstain { choice }) => match choice {
                YesNo::Yes => *yes += 1,
                YesNo::No => *no += 1,
                YesNo::Abstain => *abstain += 1,
            },
            (TallyCounts::Plurality { counts }, BallotContent::SingleChoice { option }) => counts[*option] += 1,
            (TallyCounts::Approval { counts }, BallotContent::ApprovalSet { options }) => {
                for &o in options {
                    counts[o] += 1;
                }
            }
            (
                TallyCounts::Consensus {
                    agree,
                    stand_aside,
                    block,
                },
                BallotContent::Consent { stance, .. },
            ) => match stance {
                Stance::Agree => *agree += 1,
                Stance::StandAside => *stand_aside += 1,
                Stance::Block => *block += 1,
            },
            _ => unreachable!("ballot content is checked against the procedure on cast"),
        }
    }

    pub(crate) fn absorb(&mut self, other: &TallyCounts) {
        match (self, other) {
            (
                TallyCounts::Majority { yes, no, abstain },
                TallyCounts::Majority {
                    yes: y,
                    no: n,
                    abstain: a,
                },
            ) => {
                *yes += y;
                *no += n;
                *abstain += a;
            }
            (TallyCounts::Plurality { counts }, TallyCounts::Plurality { counts: more })
            | (TallyCounts::Approval { counts }, TallyCounts::Approval { counts: more }) => {
                for (c, m) in counts.iter_mut().zip(more) {
                    *c += m;
                }
            }
            (
                TallyCounts::Consensus {
                    agree,
                    stand_aside,
                    block,
                },
                TallyCounts::Consensus {
                    agree: a,
                    stand_aside: s,
                    block: b,
                },
            ) => {
                *agree += a;
                *stand_aside += s;
                *block += b;
            }
            _ => unreachable!("sealed counts share the poll's procedure"),
        }
    }

    fn matches_shape(&self, procedure: Procedure, option_count: usize) -> bool {
        match self {
            TallyCounts::Plurality { counts } | TallyCounts::Approval { counts } => {
                self.procedure() == procedure && counts.len() == option_count
            }
            _ => self.procedure() == procedure,
        }
    }
}

/// Counts the current ballots under `procedure`.
pub fn count<'a>(
    procedure: Procedure,
    option_count: usize,
    ballots: impl IntoIterator<Item = &'a Ballot>,
) -> TallyCounts {
    let mut counts = TallyCounts::empty(procedure, option_count);
    for ballot in ballots {
        counts.record(&ballot.content);
    }
    counts
}

/// Smallest participation meeting `quorum` of `eligible` voters.
pub fn quorum_threshold(quorum: f64, eligible: u32) -> u32 {
    // the epsilon absorbs products such as 0.3 * 10 = 3.0000000000000004
    (quorum * f64::from(eligible) - 1e-9).ceil().max(0.0) as u32
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub counts: TallyCounts,
    pub participation: u32,
    pub eligible_count: u32,
    pub quorum_met: bool,
    pub computed_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OutcomeStatus {
    Open,
    Passed,
    Failed,
    Winner { option: usize },
    Tied { options: Vec<usize> },
    QuorumNotMet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    #[serde(flatten)]
    pub status: OutcomeStatus,
    pub closed_at: Option<Timestamp>,
}

/// Applies the procedure's decision rule to a final tally.
pub fn decide(tally: &Tally) -> OutcomeStatus {
    if !tally.quorum_met {
        return OutcomeStatus::QuorumNotMet;
    }
    match &tally.counts {
        TallyCounts::Majority { yes, no, .. } => {
            if yes > no {
                OutcomeStatus::Passed
            } else {
                OutcomeStatus::Failed
            }
        }
        TallyCounts::Plurality { counts } | TallyCounts::Approval { counts } => {
            let best = counts.iter().copied().max().unwrap_or(0);
            let leaders: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] == best).collect();
            match leaders.as_slice() {
                [only] => OutcomeStatus::Winner { option: *only },
                _ => OutcomeStatus::Tied { options: leaders },
            }
        }
        TallyCounts::Consensus { block, .. } => {
            if *block == 0 && tally.participation >= 1 {
                OutcomeStatus::Passed
            } else {
                OutcomeStatus::Failed
            }
        }
    }
}

/// Aggregates carried over from an export that withheld individual ballots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedBallots {
    pub counts: TallyCounts,
    pub voters: Vec<UserId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Closure {
    pub status: OutcomeStatus,
    pub closed_at: Timestamp,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poll {
    pub id: PollId,
    pub item: ItemId,
    pub area: AreaId,
    pub spec: PollSpec,
    pub author: UserId,
    pub opened_at: Timestamp,
    /// Snapshot of who may vote, taken when the poll opened.
    pub eligible: Vec<UserId>,
    #[serde(default)]
    pub ballots: IndexMap<UserId, Ballot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sealed: Option<SealedBallots>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<Closure>,
}

impl Poll {
    pub fn new(
        id: PollId,
        item: ItemId,
        area: AreaId,
        spec: PollSpec,
        author: UserId,
        opened_at: Timestamp,
        mut eligible: Vec<UserId>,
    ) -> Self {
        eligible.sort();
        eligible.dedup();
        Poll {
            id,
            item,
            area,
            spec,
            author,
            opened_at,
            eligible,
            ballots: IndexMap::new(),
            sealed: None,
            closure: None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closure.is_some()
    }

    pub fn is_eligible(&self, voter: UserId) -> bool {
        self.eligible.binary_search(&voter).is_ok()
    }

    /// True when a deadline has passed but the poll has not been closed yet.
    pub fn needs_settling(&self, at: Timestamp) -> bool {
        self.closure.is_none() && self.spec.deadline.is_some_and(|d| at > d)
    }

    /// Closes the poll as of its deadline if `at` is past it.
    pub fn settle(&mut self, at: Timestamp) {
        if self.needs_settling(at) {
            let deadline = self.spec.deadline.expect("checked by needs_settling");
            self.close_now(deadline);
        }
    }

    pub fn cast(&mut self, voter: UserId, content: BallotContent, at: Timestamp) -> Result<Ballot> {
        if self.spec.deadline.is_some_and(|d| at > d) {
            self.settle(at);
            return Err(Error::DeadlinePassed);
        }
        if self.is_closed() {
            return Err(Error::PollClosed);
        }
        if !self.is_eligible(voter) {
            return Err(Error::NotEligible);
        }
        content.check(self.spec.procedure, self.spec.options.len())?;
        if self.sealed.as_ref().is_some_and(|s| s.voters.contains(&voter)) {
            return Err(Error::BallotSealed);
        }
        let ballot = Ballot {
            poll_id: self.id,
            voter,
            cast_at: at,
            content,
        };
        // recasting replaces and moves the ballot to the end
        self.ballots.shift_remove(&voter);
        self.ballots.insert(voter, ballot.clone());
        Ok(ballot)
    }

    fn live_tally(&self, at: Timestamp) -> Tally {
        let mut counts = count(self.spec.procedure, self.spec.options.len(), self.ballots.values());
        let mut participation = self.ballots.len() as u32;
        if let Some(sealed) = &self.sealed {
            counts.absorb(&sealed.counts);
            participation += sealed.voters.len() as u32;
        }
        let eligible_count = self.eligible.len() as u32;
        let quorum_met = self
            .spec
            .quorum
            .is_none_or(|q| participation >= quorum_threshold(q, eligible_count));
        Tally {
            counts,
            participation,
            eligible_count,
            quorum_met,
            computed_at: at,
        }
    }

    /// Current counts, or the frozen counts of a closed poll. Does not settle;
    /// callers that may pass a deadline should call [`Poll::settle`] first.
    pub fn tally(&self, at: Timestamp) -> Tally {
        match &self.closure {
            Some(c) => c.tally.clone(),
            None => self.live_tally(at),
        }
    }

    pub fn outcome(&self) -> Outcome {
        match &self.closure {
            Some(c) => Outcome {
                status: c.status.clone(),
                closed_at: Some(c.closed_at),
            },
            None => Outcome {
                status: OutcomeStatus::Open,
                closed_at: None,
            },
        }
    }

    /// Explicit closure. `authorized` says whether the actor is the author or
    /// a moderator; anyone may close once the deadline is reached.
    pub fn close(&mut self, at: Timestamp, authorized: bool) -> Result<Outcome> {
        if self.is_closed() {
            return Err(Error::AlreadyClosed);
        }
        if self.needs_settling(at) {
            self.settle(at);
            return Ok(self.outcome());
        }
        let deadline_reached = self.spec.deadline.is_some_and(|d| at >= d);
        if !authorized && !deadline_reached {
            return Err(Error::NotAuthorized);
        }
        self.close_now(at);
        Ok(self.outcome())
    }

    fn close_now(&mut self, at: Timestamp) {
        let tally = self.live_tally(at);
        let status = decide(&tally);
        self.closure = Some(Closure {
            status,
            closed_at: at,
            tally,
        });
    }

    pub(crate) fn check_integrity(&self) -> std::result::Result<(), String> {
        self.spec.validate().map_err(|e| format!("poll {}: {e}", self.id))?;
        let options = self.spec.options.len();
        for (voter, ballot) in &self.ballots {
            if ballot.voter != *voter || ballot.poll_id != self.id {
                return Err(format!("poll {}: ballot keyed under the wrong voter or poll", self.id));
            }
            if !self.is_eligible(*voter) {
                return Err(format!("poll {}: ballot from ineligible voter {voter}", self.id));
            }
            ballot
                .content
                .check(self.spec.procedure, options)
                .map_err(|e| format!("poll {}: {e}", self.id))?;
        }
        if let Some(sealed) = &self.sealed {
            if !sealed.counts.matches_shape(self.spec.procedure, options) {
                return Err(format!("poll {}: sealed counts do not match the procedure", self.id));
            }
            if sealed
                .voters
                .iter()
                .any(|v| !self.is_eligible(*v) || self.ballots.contains_key(v))
            {
                return Err(format!("poll {}: sealed voter list is inconsistent", self.id));
            }
        }
        if let Some(closure) = &self.closure {
            if !closure.tally.counts.matches_shape(self.spec.procedure, options) {
                return Err(format!("poll {}: closing tally does not match the procedure", self.id));
            }
            if decide(&closure.tally) != closure.status {
                return Err(format!("poll {}: recorded outcome disagrees with its tally", self.id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    fn t(minutes: i64) -> Timestamp {
        Utc.with_ymd_and_hms(2005, 5, 20, 12, 0, 0).unwrap() + Duration::minutes(minutes)
    }

    fn spec(procedure: Procedure, options: &[&str]) -> PollSpec {
        PollSpec {
            question: "Shorter workshops?".into(),
            options: options.iter().map(|s| s.to_string()).collect(),
            procedure,
            binding: false,
            deadline: None,
            quorum: None,
            open_ballots: false,
        }
    }

    fn poll_with(spec: PollSpec, voters: usize) -> (Poll, Vec<UserId>) {
        let users: Vec<UserId> = (0..voters).map(|_| UserId::new()).collect();
        let poll = Poll::new(
            PollId::new(),
            ItemId::new(),
            AreaId::new(),
            spec,
            users[0],
            t(0),
            users.clone(),
        );
        (poll, users)
    }

    fn yn(choice: YesNo) -> BallotContent {
        BallotContent::YesNoAbstain { choice }
    }

    #[test]
    fn spec_validation() {
        assert!(spec(Procedure::Plurality, &["A", "B", "C"]).validate().is_ok());
        assert!(matches!(
            spec(Procedure::Plurality, &["A"]).validate(),
            Err(Error::InvalidSpec(_))
        ));
        assert!(spec(Procedure::Approval, &["A", "A"]).validate().is_err());
        assert!(spec(Procedure::Majority, &["A", "B"]).validate().is_err());
        assert!(spec(Procedure::Consensus, &[]).validate().is_ok());
        let mut s = spec(Procedure::Majority, &[]);
        s.quorum = Some(1.5);
        assert!(s.validate().is_err());
        s.quorum = Some(f64::NAN);
        assert!(s.validate().is_err());
        s.quorum = Some(1.0);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn majority_fixture() {
        let (mut poll, users) = poll_with(spec(Procedure::Majority, &[]), 6);
        let choices = [YesNo::Yes, YesNo::Yes, YesNo::Yes, YesNo::No, YesNo::No, YesNo::Abstain];
        for (u, c) in users.iter().zip(choices) {
            poll.cast(*u, yn(c), t(1)).unwrap();
        }
        let tally = poll.tally(t(2));
        assert_eq!(
            tally.counts,
            TallyCounts::Majority {
                yes: 3,
                no: 2,
                abstain: 1
            }
        );
        assert_eq!(tally.participation, 6);
        assert_eq!(poll.close(t(3), true).unwrap().status, OutcomeStatus::Passed);
    }

    #[test]
    fn majority_tie_fails() {
        let (mut poll, users) = poll_with(spec(Procedure::Majority, &[]), 2);
        poll.cast(users[0], yn(YesNo::Yes), t(1)).unwrap();
        poll.cast(users[1], yn(YesNo::No), t(1)).unwrap();
        assert_eq!(poll.close(t(2), true).unwrap().status, OutcomeStatus::Failed);
    }

    #[test]
    fn recast_replaces() {
        let (mut poll, users) = poll_with(spec(Procedure::Majority, &[]), 1);
        poll.cast(users[0], yn(YesNo::Yes), t(1)).unwrap();
        poll.cast(users[0], yn(YesNo::No), t(2)).unwrap();
        assert_eq!(poll.ballots.len(), 1);
        assert_eq!(poll.ballots[&users[0]].content, yn(YesNo::No));
        assert_eq!(poll.tally(t(3)).participation, 1);
    }

    #[test]
    fn plurality_tie_is_reported() {
        let (mut poll, users) = poll_with(spec(Procedure::Plurality, &["A", "B", "C"]), 5);
        for (u, o) in users.iter().zip([0, 0, 1, 1, 2]) {
            poll.cast(*u, BallotContent::SingleChoice { option: o }, t(1)).unwrap();
        }
        assert_eq!(
            poll.close(t(2), true).unwrap().status,
            OutcomeStatus::Tied { options: vec![0, 1] }
        );
    }

    #[test]
    fn approval_counts() {
        let (mut poll, users) = poll_with(spec(Procedure::Approval, &["A", "B", "C"]), 3);
        let sets = [vec![0, 1], vec![1], vec![1, 2]];
        for (u, s) in users.iter().zip(sets) {
            poll.cast(
                *u,
                BallotContent::ApprovalSet {
                    options: s.into_iter().collect(),
                },
                t(1),
            )
            .unwrap();
        }
        let tally = poll.tally(t(2));
        assert_eq!(tally.counts, TallyCounts::Approval { counts: vec![1, 3, 1] });
        assert_eq!(tally.participation, 3);
        assert_eq!(
            poll.close(t(3), true).unwrap().status,
            OutcomeStatus::Winner { option: 1 }
        );
    }

    #[test]
    fn consensus_block_fails() {
        let (mut poll, users) = poll_with(spec(Procedure::Consensus, &[]), 8);
        let stances = [
            Stance::Agree,
            Stance::Agree,
            Stance::Agree,
            Stance::Agree,
            Stance::Agree,
            Stance::StandAside,
            Stance::StandAside,
            Stance::Block,
        ];
        for (u, s) in users.iter().zip(stances) {
            poll.cast(
                *u,
                BallotContent::Consent {
                    stance: s,
                    reason: None,
                },
                t(1),
            )
            .unwrap();
        }
        assert_eq!(poll.close(t(2), true).unwrap().status, OutcomeStatus::Failed);
    }

    #[test]
    fn consensus_needs_a_participant() {
        let (mut poll, _) = poll_with(spec(Procedure::Consensus, &[]), 3);
        assert_eq!(poll.close(t(2), true).unwrap().status, OutcomeStatus::Failed);
    }

    #[test]
    fn ballot_errors() {
        let (mut poll, users) = poll_with(spec(Procedure::Plurality, &["A", "B"]), 2);
        assert_eq!(poll.cast(users[0], yn(YesNo::Yes), t(1)), Err(Error::ContentMismatch));
        assert_eq!(
            poll.cast(users[0], BallotContent::SingleChoice { option: 2 }, t(1)),
            Err(Error::InvalidOption)
        );
        assert_eq!(
            poll.cast(UserId::new(), BallotContent::SingleChoice { option: 0 }, t(1)),
            Err(Error::NotEligible)
        );
        poll.close(t(2), true).unwrap();
        assert_eq!(
            poll.cast(users[0], BallotContent::SingleChoice { option: 0 }, t(3)),
            Err(Error::PollClosed)
        );
        assert_eq!(poll.close(t(4), true), Err(Error::AlreadyClosed));
    }

    #[test]
    fn quorum_threshold_boundary() {
        assert_eq!(quorum_threshold(0.5, 10), 5);
        assert_eq!(quorum_threshold(0.3, 10), 3);
        assert_eq!(quorum_threshold(0.51, 10), 6);
        assert_eq!(quorum_threshold(0.0, 10), 0);
        assert_eq!(quorum_threshold(1.0, 7), 7);

        let mut s = spec(Procedure::Majority, &[]);
        s.quorum = Some(0.5);
        let (mut poll, users) = poll_with(s, 10);
        for u in &users[..4] {
            poll.cast(*u, yn(YesNo::Yes), t(1)).unwrap();
        }
        assert!(!poll.tally(t(2)).quorum_met);
        assert_eq!(poll.close(t(2), true).unwrap().status, OutcomeStatus::QuorumNotMet);
    }

    #[test]
    fn lazy_closure_at_deadline() {
        let mut s = spec(Procedure::Majority, &[]);
        s.deadline = Some(t(10));
        let (mut poll, users) = poll_with(s, 2);
        poll.cast(users[0], yn(YesNo::Yes), t(10)).unwrap();
        assert_eq!(poll.cast(users[1], yn(YesNo::No), t(11)), Err(Error::DeadlinePassed));
        let outcome = poll.outcome();
        assert_eq!(outcome.status, OutcomeStatus::Passed);
        assert_eq!(outcome.closed_at, Some(t(10)));
        // later reads and casts leave the frozen tally alone
        assert_eq!(poll.cast(users[1], yn(YesNo::No), t(12)), Err(Error::DeadlinePassed));
        assert_eq!(poll.tally(t(20)).participation, 1);
        assert_eq!(poll.tally(t(20)).computed_at, t(10));
    }

    #[test]
    fn close_permissions() {
        let mut s = spec(Procedure::Majority, &[]);
        s.deadline = Some(t(10));
        let (mut poll, _) = poll_with(s.clone(), 2);
        assert_eq!(poll.close(t(5), false), Err(Error::NotAuthorized));
        assert_eq!(poll.close(t(10), false).unwrap().closed_at, Some(t(10)));

        let (mut poll, _) = poll_with(s, 2);
        let outcome = poll.close(t(30), false).unwrap();
        assert_eq!(outcome.closed_at, Some(t(10)));
    }

    #[test]
    fn sealed_ballots_count_and_block_recast() {
        let (mut poll, users) = poll_with(spec(Procedure::Majority, &[]), 3);
        poll.sealed = Some(SealedBallots {
            counts: TallyCounts::Majority {
                yes: 1,
                no: 0,
                abstain: 0,
            },
            voters: vec![users[0]],
        });
        assert_eq!(poll.cast(users[0], yn(YesNo::No), t(1)), Err(Error::BallotSealed));
        poll.cast(users[1], yn(YesNo::No), t(1)).unwrap();
        let tally = poll.tally(t(2));
        assert_eq!(tally.participation, 2);
        assert_eq!(
            tally.counts,
            TallyCounts::Majority {
                yes: 1,
                no: 1,
                abstain: 0
            }
        );
        assert!(poll.check_integrity().is_ok());
    }
}
