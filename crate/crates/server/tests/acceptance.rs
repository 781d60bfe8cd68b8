//! Acceptance run: one PASS or FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p deme-server --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use deme_core::decision::{BallotContent, OutcomeStatus, Poll, PollSpec, Procedure, Stance, YesNo};
use deme_core::document::{
    is_anchor_whitespace, remap_offsets, render_annotated, Anchor, AnchorPosition, DocumentRevision, DocumentSource,
    Segment,
};
use deme_core::{
    AnchorId, AreaId, CommentId, CommentTarget, Deme, DocumentId, ExportBundle, GroupAccess, IndexOrder, ItemId,
    ItemSpec, JoinPolicy, NewComment, PollId, Relation, Scope, TargetSpec, UserId,
};
use deme_mail::notify::Event;
use deme_mail::token::TokenKey;
use deme_mail::wire::Message;
use deme_mail::{Gateway, MailConfig, MailError};
use deme_server::api::MUTATING_ROUTES;
use deme_testkit::access::{expected, ACTIONS};
use deme_testkit::forest::{in_reply_to_forest, isomorphic};
use deme_testkit::lcs::expected_remap;
use deme_testkit::mail::{compliant_reply, threaded_archive, RawMail};
use deme_testkit::populate::{populated_group, Populated};
use deme_testkit::{rng, t};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fail<E: std::fmt::Debug>(context: &str) -> impl FnOnce(E) -> String + '_ {
    move |e| format!("{context}: {e:?}")
}

// 1. decision procedures against the recount oracle

const PROCEDURES: [Procedure; 4] = [
    Procedure::Majority,
    Procedure::Plurality,
    Procedure::Approval,
    Procedure::Consensus,
];

fn random_ballot(procedure: Procedure, options: usize, r: &mut impl Rng) -> BallotContent {
    match procedure {
        Procedure::Majority => BallotContent::YesNoAbstain {
            choice: *[YesNo::Yes, YesNo::No, YesNo::Abstain].choose(r).unwrap(),
        },
        Procedure::Plurality => BallotContent::SingleChoice {
            option: r.gen_range(0..options),
        },
        Procedure::Approval => BallotContent::ApprovalSet {
            options: (0..options).filter(|_| r.gen_bool(0.4)).collect(),
        },
        Procedure::Consensus => BallotContent::Consent {
            stance: *[Stance::Agree, Stance::Agree, Stance::StandAside, Stance::Block]
                .choose(r)
                .unwrap(),
            reason: None,
        },
    }
}

fn decisions() -> Outcome {
    const PER_PROCEDURE: usize = 1000;
    let started = Instant::now();
    let mut r = rng(1);
    for procedure in PROCEDURES {
        for case in 0..PER_PROCEDURE {
            let options = if matches!(procedure, Procedure::Plurality | Procedure::Approval) {
                r.gen_range(2..=6)
            } else {
                0
            };
            let electorate: Vec<UserId> = (0..r.gen_range(1..=40)).map(|_| UserId::new()).collect();
            let quorum = *[None, Some(0), Some(25), Some(50), Some(67), Some(100)]
                .choose(&mut r)
                .unwrap();
            let spec = PollSpec {
                question: "Proceed?".into(),
                options: (0..options).map(|i| format!("Option {i}")).collect(),
                procedure,
                binding: false,
                deadline: Some(t(1000)),
                quorum: quorum.map(|p: u32| f64::from(p) / 100.0),
                open_ballots: false,
            };
            let mut poll = Poll::new(
                PollId::new(),
                ItemId::new(),
                AreaId::new(),
                spec,
                electorate[0],
                t(0),
                electorate.clone(),
            );
            let mut current = HashMap::new();
            for k in 0..r.gen_range(0..=electorate.len() * 2) {
                let voter = *electorate.choose(&mut r).unwrap();
                let ballot = random_ballot(procedure, options, &mut r);
                poll.cast(voter, ballot.clone(), t(k as i64)).map_err(fail("cast"))?;
                current.insert(voter, ballot);
            }
            let ballots: Vec<BallotContent> = current.into_values().collect();
            let tally = poll.tally(t(999));
            let counts = deme_testkit::tally::recount(procedure, options, &ballots);
            ensure!(
                tally.counts == counts,
                "{procedure:?} case {case}: tally {:?} vs recount {counts:?}",
                tally.counts
            );
            let outcome = poll.close(t(999), true).map_err(fail("close"))?;
            let want =
                deme_testkit::tally::expected_outcome(&counts, ballots.len() as u32, electorate.len() as u32, quorum);
            ensure!(
                outcome.status == want,
                "{procedure:?} case {case}: {:?} vs {want:?}",
                outcome.status
            );
        }
    }
    let fixtures: [(Procedure, usize, Vec<BallotContent>, OutcomeStatus); 3] = [
        (
            Procedure::Majority,
            0,
            [YesNo::Yes, YesNo::Yes, YesNo::Yes, YesNo::No, YesNo::No, YesNo::Abstain]
                .map(|choice| BallotContent::YesNoAbstain { choice })
                .to_vec(),
            OutcomeStatus::Passed,
        ),
        (
            Procedure::Plurality,
            3,
            [0, 0, 1, 1, 2]
                .map(|option| BallotContent::SingleChoice { option })
                .to_vec(),
            OutcomeStatus::Tied { options: vec![0, 1] },
        ),
        (
            Procedure::Consensus,
            0,
            [Stance::Agree, Stance::Agree, Stance::StandAside, Stance::Block]
                .map(|stance| BallotContent::Consent { stance, reason: None })
                .to_vec(),
            OutcomeStatus::Failed,
        ),
    ];
    for (procedure, options, ballots, want) in fixtures {
        let electorate: Vec<UserId> = (0..10).map(|_| UserId::new()).collect();
        let spec = PollSpec {
            question: "Fixture".into(),
            options: (0..options).map(|i| format!("Option {i}")).collect(),
            procedure,
            binding: true,
            deadline: None,
            quorum: None,
            open_ballots: false,
        };
        let mut poll = Poll::new(
            PollId::new(),
            ItemId::new(),
            AreaId::new(),
            spec,
            electorate[0],
            t(0),
            electorate.clone(),
        );
        for (voter, ballot) in electorate.iter().zip(ballots) {
            poll.cast(*voter, ballot, t(1)).map_err(fail("cast"))?;
        }
        let got = poll.close(t(2), true).map_err(fail("close"))?.status;
        ensure!(got == want, "{procedure:?} fixture: {got:?}, expected {want:?}");
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "{PER_PROCEDURE} ballot multisets per procedure and 3 fixed fixtures in {elapsed:.2?}"
    ))
}

// 2. anchors against the alignment oracle

fn random_text(r: &mut impl Rng, len: usize) -> String {
    const WORDS: [&str; 8] = ["alpha", "beta", "gamma", "ünïcode", "the", "a", "motion", "weekly"];
    const GAPS: [&str; 4] = [" ", " ", "\n", "\t"];
    let mut s = String::new();
    while s.chars().count() < len {
        s.push_str(WORDS.choose(r).unwrap());
        s.push_str(GAPS.choose(r).unwrap());
    }
    s
}

fn random_edit(r: &mut impl Rng, old: &str) -> String {
    let mut chars: Vec<char> = old.chars().collect();
    for _ in 0..r.gen_range(1..=4) {
        let at = r.gen_range(0..=chars.len());
        if r.gen_bool(0.5) {
            let len = r.gen_range(1..20);
            let insert = random_text(r, len);
            chars.splice(at..at, insert.chars());
        } else {
            let end = (at + r.gen_range(1..25)).min(chars.len());
            chars.drain(at..end);
        }
    }
    chars.into_iter().collect()
}

fn whitespace_offsets(text: &str) -> Vec<usize> {
    text.chars()
        .enumerate()
        .filter(|(_, c)| is_anchor_whitespace(*c))
        .map(|(i, _)| i)
        .collect()
}

/// Digits never occur in [`random_text`], so a block of them cannot be
/// aligned against the surrounding text.
fn foreign_block(r: &mut impl Rng) -> String {
    (0..r.gen_range(1..12))
        .map(|_| char::from(b'0' + r.gen_range(0..10)))
        .collect()
}

fn splice(text: &str, at: usize, insert: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    chars.splice(at..at, insert.chars());
    chars.into_iter().collect()
}

fn anchors() -> Outcome {
    const TRIPLES: usize = 1000;
    let started = Instant::now();
    let mut r = rng(2);
    let (mut live, mut orphaned) = (0, 0);
    for case in 0..TRIPLES {
        let len = r.gen_range(5..160);
        let old = random_text(&mut r, len);
        let new = random_edit(&mut r, &old);
        let spaces = whitespace_offsets(&old);
        let mut set: Vec<usize> = spaces.iter().copied().filter(|_| r.gen_bool(0.3)).collect();
        if set.is_empty() {
            set.push(*spaces.choose(&mut r).unwrap());
        }

        // oracle agreement, whitespace invariant, monotonicity
        let new_chars: Vec<char> = new.chars().collect();
        let remapped = remap_offsets(&old, &new, &set);
        for (&offset, got) in set.iter().zip(&remapped) {
            let want = expected_remap(&old, &new, offset);
            match *got {
                AnchorPosition::Live(j) => {
                    ensure!(want == Some(j), "case {case}: {offset} went to {j}, oracle {want:?}");
                    ensure!(
                        is_anchor_whitespace(new_chars[j]),
                        "case {case}: landed on {:?}",
                        new_chars[j]
                    );
                    live += 1;
                }
                AnchorPosition::Orphaned => {
                    ensure!(want.is_none(), "case {case}: orphaned, oracle {want:?}");
                    orphaned += 1;
                }
            }
        }
        let survivors: Vec<usize> = remapped.iter().filter_map(|p| p.offset()).collect();
        ensure!(
            survivors.windows(2).all(|w| w[0] < w[1]),
            "case {case}: anchors swapped order"
        );

        // identity edit
        let same: Vec<AnchorPosition> = set.iter().map(|&o| AnchorPosition::Live(o)).collect();
        ensure!(
            remap_offsets(&old, &old, &set) == same,
            "case {case}: identity edit moved an anchor"
        );

        // prefix shift: insert a block, then delete part of it again
        let at = r.gen_range(0..=old.chars().count());
        let block = foreign_block(&mut r);
        let k = block.chars().count();
        let grown = splice(&old, at, &block);
        for (&o, got) in set.iter().zip(remap_offsets(&old, &grown, &set)) {
            let want = if o >= at { o + k } else { o };
            ensure!(
                got == AnchorPosition::Live(want),
                "case {case}: insertion moved {o} to {got:?}, not {want}"
            );
        }
        let grown_set: Vec<usize> = set.iter().map(|&o| if o >= at { o + k } else { o }).collect();
        let cut_start = at + r.gen_range(0..k);
        let cut = r.gen_range(1..=at + k - cut_start);
        let mut shrunk: Vec<char> = grown.chars().collect();
        shrunk.drain(cut_start..cut_start + cut);
        let shrunk: String = shrunk.into_iter().collect();
        for (&o, got) in grown_set.iter().zip(remap_offsets(&grown, &shrunk, &grown_set)) {
            let want = if o >= cut_start + cut { o - cut } else { o };
            ensure!(
                got == AnchorPosition::Live(want),
                "case {case}: deletion moved {o} to {got:?}, not {want}"
            );
        }

        // render round-trip with markers in offset order
        let rev = DocumentRevision {
            document_id: DocumentId::new(),
            revision: 1,
            source: DocumentSource::plain(old.clone()),
            author: UserId::new(),
            created_at: t(0),
        };
        let placed: Vec<Anchor> = set
            .iter()
            .rev()
            .map(|&o| Anchor {
                id: AnchorId::new(),
                document_id: rev.document_id,
                comment_id: CommentId::new(),
                created_on_revision: 1,
                positions: BTreeMap::from([(1, AnchorPosition::Live(o))]),
            })
            .collect();
        let refs: Vec<&Anchor> = placed.iter().collect();
        let rendered = render_annotated(&rev, &refs, None).map_err(fail("render"))?;
        ensure!(rendered.plain_text() == old, "case {case}: rendering changed the text");
        let order: Vec<AnchorId> = rendered
            .segments
            .iter()
            .filter_map(|s| match s {
                Segment::Marker { anchor, .. } => Some(*anchor),
                Segment::Text { .. } => None,
            })
            .collect();
        let expected_order: Vec<AnchorId> = placed.iter().rev().map(|a| a.id).collect();
        ensure!(order == expected_order, "case {case}: markers out of offset order");
    }
    // and end to end through stored revisions
    let deme = Deme::default();
    let user = deme
        .register_user("Writer", Some("w@example.org"))
        .map_err(fail("user"))?
        .user_id;
    let group = deme
        .create_group("Drafting", "", GroupAccess::Open, JoinPolicy::OpenJoin, user, t(0))
        .map_err(fail("group"))?
        .id;
    let area = deme
        .create_meeting_area(group, user, "Draft", "", t(0))
        .map_err(fail("area"))?
        .id;
    let mut text = random_text(&mut r, 200);
    let item = deme
        .post_item(
            area,
            user,
            ItemSpec::Document {
                title: "Draft".into(),
                source: DocumentSource::plain(text.clone()),
            },
            t(1),
        )
        .map_err(fail("document"))?;
    let document = item.kind.document_id().ok_or("no document")?;
    let mut offsets = Vec::new();
    for revision in 1..=20u32 {
        let spaces: Vec<usize> = text
            .chars()
            .enumerate()
            .filter(|(_, c)| is_anchor_whitespace(*c))
            .map(|(i, _)| i)
            .collect();
        let offset = *spaces.choose(&mut r).unwrap();
        let draft = NewComment {
            subject: None,
            body: format!("note {revision}"),
            target: TargetSpec::InText {
                document,
                revision: Some(revision),
                offset,
            },
        };
        let c = deme.post_comment(area, user, draft, t(2)).map_err(fail("comment"))?;
        offsets.push((c.id, revision, offset));
        text = random_edit(&mut r, &text);
        deme.revise_document(document, text.clone(), user, t(3))
            .map_err(fail("revise"))?;
    }
    let stored = deme.anchors(document, Some(user)).map_err(fail("anchors"))?;
    for a in &stored {
        let mut prior = a.positions.iter();
        let (mut rev, mut pos) = prior.next().map(|(r, p)| (*r, *p)).ok_or("empty anchor")?;
        for (&next_rev, &next_pos) in prior {
            let (before, after) = (
                revision_text(&deme, document, user, rev)?,
                revision_text(&deme, document, user, next_rev)?,
            );
            let want = pos.offset().and_then(|o| expected_remap(&before, &after, o));
            ensure!(
                next_pos.offset() == want,
                "anchor {} at revision {next_rev}: {next_pos:?} vs {want:?}",
                a.id
            );
            rev = next_rev;
            pos = next_pos;
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "{TRIPLES} triples ({live} anchors kept, {orphaned} orphaned) with all five laws and {} stored anchors across 20 revisions in {elapsed:.2?}",
        stored.len()
    ))
}

fn revision_text(deme: &Deme, document: DocumentId, user: UserId, revision: u32) -> Result<String, String> {
    let rev = deme
        .document_revision(document, Some(revision), Some(user))
        .map_err(fail("revision"))?;
    match rev.source {
        DocumentSource::PlainText { text } => Ok(text),
        _ => Err("not plain text".into()),
    }
}

// 3. mail round trip

fn gateway() -> Result<(Gateway, Populated), String> {
    let deme = Deme::default();
    let p = populated_group(&deme).map_err(fail("fixture"))?;
    let config = MailConfig::new(
        "lists.deme.example",
        "https://deme.example",
        TokenKey::new(b"acceptance".to_vec()),
    );
    Ok((Gateway::new(Arc::new(deme), config), p))
}

fn mail_round_trip() -> Outcome {
    let (gw, p) = gateway()?;
    let subscriber = p.members[3];
    let email = gw
        .deme()
        .user(subscriber)
        .map_err(fail("user"))?
        .email
        .unwrap_or_default();
    let poll_item = |poll| gw.deme().poll_view(poll, Some(p.members[0]), t(300)).map(|v| v.item);
    let events = [
        (
            Event::NewComment(p.comments[1]),
            CommentTarget::ReplyTo { comment: p.comments[1] },
        ),
        (Event::NewItem(p.items[2]), CommentTarget::OnItem { item: p.items[2] }),
        (
            Event::PollOpened(p.polls[0]),
            CommentTarget::OnItem {
                item: poll_item(p.polls[0]).map_err(fail("poll"))?,
            },
        ),
        (
            Event::PollClosed(p.polls[1]),
            CommentTarget::OnItem {
                item: poll_item(p.polls[1]).map_err(fail("poll"))?,
            },
        ),
    ];
    let mut last = None;
    for (n, (event, target)) in events.into_iter().enumerate() {
        let out = gw.notify(event, subscriber, t(300)).map_err(fail("notify"))?;
        let parsed = Message::parse(&out.to_bytes()).map_err(fail("parse"))?;
        let reply_to = parsed.addresses("Reply-To")[0].address.clone();
        let raw = compliant_reply(
            &email,
            &reply_to,
            &parsed.subject().unwrap_or_default(),
            &parsed.message_id().unwrap_or_default(),
            &parsed.text_body().unwrap_or_default(),
            &format!("Reply {n}."),
        );
        let c = gw.receive(&raw, t(301)).map_err(fail("receive"))?;
        ensure!(c.target == target, "{event:?}: landed on {:?}", c.target);
        ensure!(
            c.author == subscriber && c.body == format!("Reply {n}."),
            "{event:?}: {c:?}"
        );
        last = Some((raw, reply_to));
    }
    let (raw, address) = last.ok_or("no reply")?;
    let count = || {
        gw.deme()
            .comments_index(p.areas[0], Some(subscriber), IndexOrder::Chronological)
            .map(|v| v.len())
    };
    let before = count().map_err(fail("index"))?;
    for _ in 0..3 {
        ensure!(
            matches!(gw.receive(&raw, t(302)), Err(MailError::Duplicate(_))),
            "redelivery accepted"
        );
    }
    ensure!(count().map_err(fail("index"))? == before, "redelivery changed the area");

    let token = gw.config().token_in(&address).ok_or("no token")?.to_string();
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz234567AZ01-".chars().collect();
    let mut mutations = Vec::new();
    for (i, original) in token.char_indices() {
        for &c in alphabet.iter().filter(|&&c| c != original).step_by(5) {
            let mut m = token.clone();
            m.replace_range(i..i + 1, &c.to_string());
            mutations.push(m);
        }
        let mut dropped = token.clone();
        dropped.remove(i);
        mutations.push(dropped);
    }
    ensure!(mutations.len() >= 200, "only {} mutations", mutations.len());
    for (n, bad) in mutations.iter().enumerate() {
        let mail = RawMail {
            from: email.clone(),
            to: gw.config().address_for(bad),
            subject: "Re: tampered".into(),
            message_id: Some(format!("mutation.{n}@client.example")),
            body: "Should not post.".into(),
            ..RawMail::default()
        };
        ensure!(
            matches!(gw.parse_inbound(&mail.to_bytes()), Err(MailError::BadToken)),
            "mutated token {bad} accepted"
        );
    }
    Ok(format!(
        "4 event kinds routed, redelivery posted once, {} token mutations refused",
        mutations.len()
    ))
}

// 4. archive import

fn archive() -> Outcome {
    let (gw, p) = gateway()?;
    let area = p.areas[0];
    let fixture = threaded_archive(10, 50, 7);
    let report = gw
        .import_mail_archive(area, p.members[0], &fixture.mbox, &HashMap::new(), t(300))
        .map_err(fail("import"))?;
    ensure!(report.imported == 50, "imported {}", report.imported);
    let map: HashMap<String, CommentId> = fixture
        .headers
        .iter()
        .map(|(id, _)| {
            report
                .comment_for(id)
                .map(|c| (id.clone(), c))
                .ok_or(format!("{id} not imported"))
        })
        .collect::<Result<_, _>>()?;
    let mut actual = HashMap::new();
    for &c in map.values() {
        let parent = gw
            .deme()
            .comment(c, Some(p.members[0]))
            .map_err(fail("comment"))?
            .reply_parent();
        actual.insert(c, parent);
    }
    isomorphic(&in_reply_to_forest(&fixture.headers), &actual, &map)?;
    let again = gw
        .import_mail_archive(area, p.members[0], &fixture.mbox, &HashMap::new(), t(400))
        .map_err(fail("reimport"))?;
    ensure!(
        again.imported == 0 && again.duplicates == 50,
        "second import: {again:?}"
    );
    Ok("50 messages in 10 threads form the same forest; the second import is all duplicates".into())
}

// 5. export and import

fn export_import() -> Outcome {
    let source = Deme::default();
    let p = populated_group(&source).map_err(fail("fixture"))?;
    let moderator = p.members[0];
    let bundle = source
        .export_group(p.group, moderator, t(200))
        .map_err(fail("export"))?;
    let bytes = bundle.to_json();
    let target = Deme::default();
    target
        .import_group(ExportBundle::from_json(&bytes).map_err(fail("parse"))?, moderator, None)
        .map_err(fail("import"))?;
    let again = target
        .export_group(p.group, moderator, t(300))
        .map_err(fail("re-export"))?;
    ensure!(again.instance != bundle.instance, "instance metadata did not change");
    ensure!(
        again.canonical_content() == bundle.canonical_content(),
        "content differs after the round trip"
    );
    target.check_integrity(p.group).map_err(fail("integrity"))?;
    Ok(format!(
        "{} bytes; {} items, {} comments, {} polls identical after import and re-export",
        bytes.len(),
        bundle.content.items.len(),
        bundle.content.comments.len(),
        bundle.content.polls.len()
    ))
}

// 6. access control

fn access() -> Outcome {
    let mut checked = 0;
    for access in [GroupAccess::Open, GroupAccess::Closed] {
        let deme = Deme::default();
        let reg = |name: &str| {
            deme.register_user(name, Some(&format!("{name}@example.org")))
                .map(|m| m.user_id)
        };
        let (moderator, member, linked, outsider) = (
            reg("mod").map_err(fail("user"))?,
            reg("member").map_err(fail("user"))?,
            reg("linked").map_err(fail("user"))?,
            reg("outsider").map_err(fail("user"))?,
        );
        let group = deme
            .create_group("Owners", "", access, JoinPolicy::OpenJoin, moderator, t(0))
            .map_err(fail("group"))?
            .id;
        deme.join_group(group, member, t(1)).map_err(fail("join"))?;
        let other = deme
            .create_group("Others", "", GroupAccess::Closed, JoinPolicy::OpenJoin, linked, t(0))
            .map_err(fail("group"))?
            .id;
        let area = deme
            .create_meeting_area(group, moderator, "Area", "", t(2))
            .map_err(fail("area"))?
            .id;
        deme.link_area(area, other, moderator).map_err(fail("link"))?;
        for (relation, user) in [
            (Relation::OwnerMember, Some(member)),
            (Relation::LinkedMember, Some(linked)),
            (Relation::Outsider, Some(outsider)),
            (Relation::Outsider, None),
        ] {
            for action in ACTIONS {
                let got = deme.authorize(user, Scope::Area(area), action);
                ensure!(
                    got == expected(relation, access, action),
                    "{relation:?} {access:?} {action:?}: allowed={got}"
                );
                checked += 1;
            }
        }
    }

    let runtime = tokio::runtime::Runtime::new().map_err(fail("runtime"))?;
    let replayed = runtime.block_on(async {
        let h = common::Harness::new().await;
        let s = common::scene(&h, "open").await;
        let fill = |path: &str| {
            path.replace("{group}", &s.group)
                .replace("{area}", &s.area)
                .replace("{user}", &s.member.0.to_string())
                .replace("{item}", &ItemId::new().to_string())
                .replace("{comment}", &CommentId::new().to_string())
                .replace("{document}", &DocumentId::new().to_string())
                .replace("{poll}", &PollId::new().to_string())
        };
        for (method, template) in MUTATING_ROUTES {
            let path = fill(template);
            let r = h.send(method, &path, None, Some(serde_json::json!({}))).await;
            if r.status != StatusCode::UNAUTHORIZED {
                return Err(format!("{method} {path} answered {}", r.status));
            }
        }
        Ok(MUTATING_ROUTES.len())
    })?;
    Ok(format!(
        "{checked} relation/access/action checks match; {replayed} mutating endpoints refuse anonymous callers"
    ))
}

// 7. random operations keep references whole

fn integrity() -> Outcome {
    const OPS: usize = 10_000;
    let run = deme_testkit::fuzz::run(OPS, 2026)?;
    run.deme.check_integrity(run.group).map_err(fail("integrity"))?;
    let bundle = run
        .deme
        .export_group(run.group, run.moderator, run.end)
        .map_err(fail("export"))?;
    let c = &bundle.content;
    let dangling = deme_testkit::fuzz::referential_faults(c);
    ensure!(
        dangling.is_empty(),
        "{} referential faults, first: {}",
        dangling.len(),
        dangling[0]
    );
    let index = deme_testkit::fuzz::index_faults(&run.deme, c, run.moderator);
    ensure!(index.is_empty(), "{} index faults, first: {}", index.len(), index[0]);
    let folio_ids: Vec<_> = c.items.iter().map(|i| i.id).collect();
    ensure!(
        folio_ids.iter().collect::<BTreeSet<_>>().len() == folio_ids.len(),
        "duplicate folio ids"
    );
    Ok(format!(
        "{OPS} operations ({} applied), {} comments and {} items: no dangling targets, no duplicate folio ids, indexes agree",
        run.applied,
        c.comments.len(),
        c.items.len()
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("decision procedures match the recount oracle", decisions),
        ("anchors follow the alignment oracle", anchors),
        ("mail replies route, deduplicate and reject tampering", mail_round_trip),
        ("mail archives import as isomorphic threads", archive),
        ("export and import round-trip byte-equal", export_import),
        ("access matrix and authenticated mutation", access),
        ("random operations keep references whole", integrity),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.into_iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail}", n + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {} {name}: {reason}", n + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
