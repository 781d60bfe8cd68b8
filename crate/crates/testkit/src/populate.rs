//! A group with some of everything in it.

use deme_core::decision::{BallotContent, PollSpec, Procedure, Stance, YesNo};
use deme_core::document::DocumentSource;
use deme_core::feedback::FeedbackScope;
use deme_core::{
    AreaId, CommentId, Deme, DocumentId, GroupAccess, GroupId, ItemId, ItemKind, ItemSpec, JoinPolicy, NewComment,
    PollId, Result, TargetSpec, UserId,
};

use crate::t;

pub const CHARTER: &str = "Labortech runs workshops for members.\n\
Each workshop lasts a full day and covers one topic.\n\
Sessions should be shorter and more focused.\n\
Everyone is welcome to propose a topic.\n";

pub struct Populated {
    pub group: GroupId,
    pub partner: GroupId,
    /// Moderator first.
    pub members: Vec<UserId>,
    pub partner_member: UserId,
    pub pending: UserId,
    pub areas: Vec<AreaId>,
    pub items: Vec<ItemId>,
    pub document: DocumentId,
    pub polls: Vec<PollId>,
    pub comments: Vec<CommentId>,
}

fn spec(question: &str, options: &[&str], procedure: Procedure, binding: bool, deadline: i64, open: bool) -> PollSpec {
    PollSpec {
        question: question.into(),
        options: options.iter().map(|s| s.to_string()).collect(),
        procedure,
        binding,
        deadline: Some(t(deadline)),
        quorum: Some(0.5),
        open_ballots: open,
    }
}

fn poll_of(deme: &Deme, item: ItemId, viewer: UserId) -> Result<PollId> {
    let kind = deme.item(item, Some(viewer))?.kind;
    Ok(kind.poll_id().expect("poll item"))
}

/// Builds the fixture at times `t(0)` through `t(150)`. Every poll is closed
/// by `t(200)`.
pub fn populated_group(deme: &Deme) -> Result<Populated> {
    let names = ["Kazmi", "Ayşe", "Bruno", "Chen", "Dana"];
    let mut members = Vec::new();
    for name in names {
        let email = format!("{}@labortech.example", name.to_lowercase().replace('ş', "s"));
        members.push(deme.register_user(name, Some(&email))?.user_id);
    }
    let moderator = members[0];
    let group = deme
        .create_group(
            "Labortech",
            "A workers' cooperative",
            GroupAccess::Closed,
            JoinPolicy::ApprovalRequired,
            moderator,
            t(0),
        )?
        .id;
    for &m in &members[1..] {
        deme.join_group(group, m, t(1))?;
        deme.approve_join(group, moderator, m, t(2))?;
    }
    let pending = deme.register_user("Eve", Some("eve@example.org"))?.user_id;
    deme.join_group(group, pending, t(3))?;

    let partner_member = deme.register_user("Farid", Some("farid@neighbours.example"))?.user_id;
    let partner = deme
        .create_group(
            "Neighbours",
            "",
            GroupAccess::Open,
            JoinPolicy::OpenJoin,
            partner_member,
            t(4),
        )?
        .id;

    let workshops = deme
        .create_meeting_area(group, moderator, "Workshops", "Planning the workshop series", t(5))?
        .id;
    let budget = deme.create_meeting_area(group, members[1], "Budget", "", t(6))?.id;
    deme.link_area(workshops, partner, moderator)?;

    let mut items = Vec::new();
    let mut post = |area, author, spec, at| -> Result<ItemId> {
        let id = deme.post_item(area, author, spec, at)?.id;
        items.push(id);
        Ok(id)
    };
    let doc_item = post(
        workshops,
        moderator,
        ItemSpec::Document {
            title: "Workshop charter".into(),
            source: DocumentSource::plain(CHARTER),
        },
        t(10),
    )?;
    let link = post(
        workshops,
        members[1],
        ItemSpec::Link {
            title: "Venue".into(),
            url: "https://example.org/venue".into(),
            caption: "Where we meet".into(),
        },
        t(11),
    )?;
    let discussion = post(
        workshops,
        members[2],
        ItemSpec::DiscussionItem {
            title: "Proposal: Shorter Workshops".into(),
            prompt: "Should workshops be half days?".into(),
        },
        t(12),
    )?;
    let poll_item = post(
        workshops,
        members[1],
        ItemSpec::Poll {
            title: String::new(),
            spec: spec(
                "Which weekday?",
                &["Monday", "Wednesday", "Friday"],
                Procedure::Plurality,
                false,
                100,
                true,
            ),
        },
        t(13),
    )?;
    let decision_item = post(
        workshops,
        moderator,
        ItemSpec::Poll {
            title: "Adopt half-day workshops".into(),
            spec: spec("Adopt half-day workshops?", &[], Procedure::Majority, true, 120, false),
        },
        t(14),
    )?;
    let secret_item = post(
        budget,
        moderator,
        ItemSpec::Poll {
            title: "Budget lines".into(),
            spec: spec(
                "Which lines to fund?",
                &["Tools", "Snacks", "Travel"],
                Procedure::Approval,
                false,
                130,
                false,
            ),
        },
        t(15),
    )?;
    let consensus_item = post(
        budget,
        members[3],
        ItemSpec::Poll {
            title: "Accept the budget".into(),
            spec: spec("Accept the budget?", &[], Procedure::Consensus, true, 140, true),
        },
        t(16),
    )?;
    let upload = post(
        budget,
        members[4],
        ItemSpec::Document {
            title: "Receipts".into(),
            source: DocumentSource::Uploaded {
                blob: vec![0x25, 0x50, 0x44, 0x46, 0, 1, 2, 255],
                filename: "receipts.pdf".into(),
                media_type: "application/pdf".into(),
            },
        },
        t(17),
    )?;
    deme.post_item(
        workshops,
        partner_member,
        ItemSpec::Link {
            title: "Neighbours' calendar".into(),
            url: "https://neighbours.example/calendar".into(),
            caption: String::new(),
        },
        t(18),
    )
    .map(|i| items.push(i.id))?;

    let document = deme
        .item(doc_item, Some(moderator))?
        .kind
        .document_id()
        .expect("document item");

    let mut comments = Vec::new();
    let mut say = |area, author, subject: Option<&str>, body: &str, target, at| -> Result<CommentId> {
        let draft = NewComment {
            subject: subject.map(str::to_string),
            body: body.into(),
            target,
        };
        let id = deme.post_comment(area, author, draft, t(at))?.id;
        comments.push(id);
        Ok(id)
    };
    let welcome = say(
        workshops,
        moderator,
        Some("Welcome"),
        "Let's plan the series here.",
        TargetSpec::Global,
        20,
    )?;
    let on_item = say(
        workshops,
        members[2],
        Some("Shorter workshops"),
        "Full days are exhausting.",
        TargetSpec::OnItem { item: discussion },
        21,
    )?;
    let reply = say(
        workshops,
        members[1],
        None,
        "Agreed.",
        TargetSpec::ReplyTo { comment: on_item },
        22,
    )?;
    say(
        workshops,
        members[3],
        None,
        "Half days then?",
        TargetSpec::ReplyTo { comment: reply },
        23,
    )?;
    say(
        workshops,
        members[4],
        None,
        "What about travel time?",
        TargetSpec::ReplyTo { comment: on_item },
        24,
    )?;
    say(
        workshops,
        partner_member,
        Some("From the neighbours"),
        "We could share the venue.",
        TargetSpec::OnItem { item: link },
        25,
    )?;
    say(
        workshops,
        members[1],
        None,
        "Wednesday works for me.",
        TargetSpec::OnItem { item: poll_item },
        26,
    )?;
    say(
        workshops,
        members[2],
        None,
        "I support this.",
        TargetSpec::OnItem { item: decision_item },
        27,
    )?;
    say(
        workshops,
        moderator,
        None,
        "Thanks, all.",
        TargetSpec::ReplyTo { comment: welcome },
        28,
    )?;
    say(
        budget,
        members[1],
        Some("Snacks"),
        "Snacks are essential.",
        TargetSpec::Global,
        29,
    )?;
    say(
        budget,
        members[3],
        None,
        "Tools first.",
        TargetSpec::OnItem { item: secret_item },
        30,
    )?;
    say(
        budget,
        members[4],
        None,
        "Receipts are in.",
        TargetSpec::OnItem { item: upload },
        31,
    )?;
    say(
        budget,
        moderator,
        None,
        "Please review.",
        TargetSpec::OnItem { item: consensus_item },
        32,
    )?;

    // in-text comments at whitespace positions of the charter
    let spaces: Vec<usize> = CHARTER
        .chars()
        .enumerate()
        .filter(|(_, c)| *c == ' ')
        .map(|(i, _)| i)
        .collect();
    for (k, &offset) in [spaces[2], spaces[9], spaces[15], spaces[20]].iter().enumerate() {
        let (c, _) = deme.attach_intext(
            document,
            None,
            offset,
            Some(format!("Note {}", k + 1)),
            format!("In-text remark {}.", k + 1),
            members[k % members.len()],
            t(33 + k as i64),
        )?;
        comments.push(c.id);
    }
    // revise so anchors are remapped, one of them orphaned by the edit
    let revised = CHARTER
        .replace(
            "Each workshop lasts a full day and covers one topic.",
            "Each workshop covers one topic.",
        )
        .replace("Everyone", "Every member");
    deme.revise_document(document, revised, moderator, t(40))?;
    let (after, _) = deme.attach_intext(
        document,
        None,
        CHARTER.find(' ').expect("space"),
        None,
        "Added after the revision.".into(),
        members[2],
        t(41),
    )?;
    comments.push(after.id);
    for n in 0..5 {
        let id = deme
            .post_comment(
                workshops,
                members[n % members.len()],
                NewComment {
                    subject: Some(format!("Follow-up {n}")),
                    body: format!("Follow-up number {n}."),
                    target: TargetSpec::ReplyTo { comment: after.id },
                },
                t(42 + n as i64),
            )?
            .id;
        comments.push(id);
    }
    deme.retract_comment(comments[4], members[4])?;

    // ballots
    let weekday = poll_of(deme, poll_item, moderator)?;
    let adopt = poll_of(deme, decision_item, moderator)?;
    let lines = poll_of(deme, secret_item, moderator)?;
    let accept = poll_of(deme, consensus_item, moderator)?;
    for (i, &m) in members.iter().enumerate() {
        deme.cast_ballot(
            weekday,
            m,
            BallotContent::SingleChoice { option: i % 3 },
            t(50 + i as i64),
        )?;
        let choice = [YesNo::Yes, YesNo::Yes, YesNo::No, YesNo::Abstain, YesNo::Yes][i];
        deme.cast_ballot(adopt, m, BallotContent::YesNoAbstain { choice }, t(50 + i as i64))?;
        let options = [0usize, 1, 2].into_iter().filter(|o| (i + o) % 2 == 0).collect();
        deme.cast_ballot(lines, m, BallotContent::ApprovalSet { options }, t(50 + i as i64))?;
    }
    deme.cast_ballot(weekday, members[0], BallotContent::SingleChoice { option: 1 }, t(60))?;
    deme.cast_ballot(
        accept,
        members[1],
        BallotContent::Consent {
            stance: Stance::StandAside,
            reason: Some("Not my area.".into()),
        },
        t(61),
    )?;
    deme.cast_ballot(
        accept,
        members[2],
        BallotContent::Consent {
            stance: Stance::Agree,
            reason: None,
        },
        t(62),
    )?;
    deme.close_poll(adopt, moderator, t(70))?;

    deme.submit_feedback(
        members[1],
        FeedbackScope::Group { group },
        4,
        "Useful so far.".into(),
        false,
        t(80),
    )?;
    deme.submit_feedback(
        members[2],
        FeedbackScope::Group { group },
        2,
        "Too many emails.".into(),
        true,
        t(81),
    )?;

    Ok(Populated {
        group,
        partner,
        members,
        partner_member,
        pending,
        areas: vec![workshops, budget],
        items,
        document,
        polls: vec![weekday, adopt, lines, accept],
        comments,
    })
}

/// Every item kind that appears in the fixture.
pub fn kinds(deme: &Deme, p: &Populated) -> Vec<&'static str> {
    let mut kinds: Vec<&'static str> = p
        .items
        .iter()
        .filter_map(|&i| deme.item(i, Some(p.members[0])).ok())
        .map(|i| match i.kind {
            ItemKind::Document { .. } => "document",
            ItemKind::Link { .. } => "link",
            ItemKind::DiscussionItem { .. } => "discussion_item",
            ItemKind::Poll { .. } => "poll",
            ItemKind::Decision { .. } => "decision",
        })
        .collect();
    kinds.sort_unstable();
    kinds.dedup();
    kinds
}
