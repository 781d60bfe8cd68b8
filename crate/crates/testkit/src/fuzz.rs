//! Random operation sequences against one group, and a referential check
//! that reads only the exported bundle.

use std::collections::{HashMap, HashSet};

use deme_core::bundle::BundleContent;
use deme_core::decision::{BallotContent, PollSpec, Procedure, Stance, YesNo};
use deme_core::document::{is_anchor_whitespace, DocumentSource};
use deme_core::{
    AreaId, CommentId, CommentTarget, Deme, DocumentId, Error, GroupAccess, GroupId, IndexOrder, ItemId, ItemSpec,
    JoinPolicy, NewComment, PollId, TargetSpec, UserId,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::t;

pub struct FuzzRun {
    pub deme: Deme,
    pub group: GroupId,
    pub moderator: UserId,
    pub applied: usize,
    /// Operations the core refused, by error name.
    pub refused: HashMap<String, usize>,
    /// Time after the last operation.
    pub end: deme_core::Timestamp,
}

struct State {
    rng: ChaCha8Rng,
    group: GroupId,
    users: Vec<UserId>,
    areas: Vec<AreaId>,
    items: Vec<(AreaId, ItemId)>,
    comments: Vec<(AreaId, CommentId)>,
    documents: Vec<DocumentId>,
    polls: Vec<(PollId, Procedure, usize)>,
    minute: i64,
}

const WORDS: [&str; 8] = ["workshop", "budget", "the", "a", "vote", "draft", "tools", "room"];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..8);
    let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).expect("words")).collect();
    words.join(" ")
}

fn edit(rng: &mut ChaCha8Rng, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for _ in 0..rng.gen_range(1..4) {
        let at = rng.gen_range(0..=chars.len());
        if rng.gen_bool(0.5) || chars.len() > 1500 {
            let end = (at + rng.gen_range(1..20)).min(chars.len());
            chars.drain(at..end);
        } else {
            let insert = format!(" {} ", sentence(rng));
            chars.splice(at..at, insert.chars());
        }
    }
    chars.into_iter().collect()
}

impl State {
    fn now(&mut self) -> deme_core::Timestamp {
        self.minute += 1;
        t(self.minute)
    }

    fn user(&mut self) -> UserId {
        *self.users.choose(&mut self.rng).expect("users")
    }

    fn area(&mut self) -> AreaId {
        *self.areas.choose(&mut self.rng).expect("areas")
    }

    fn step(&mut self, deme: &Deme) -> Result<(), Error> {
        let at = self.now();
        match self.rng.gen_range(0..100) {
            0..=2 => {
                let n = self.users.len();
                let user = deme
                    .register_user(&format!("User {n}"), Some(&format!("user{n}@fuzz.example")))?
                    .user_id;
                deme.join_group(self.group, user, at)?;
                self.users.push(user);
            }
            3..=4 => {
                let author = self.user();
                let area =
                    deme.create_meeting_area(self.group, author, &format!("Area {}", self.areas.len()), "", at)?;
                self.areas.push(area.id);
            }
            5..=14 => {
                let (area, author) = (self.area(), self.user());
                let title = sentence(&mut self.rng);
                let spec = match self.rng.gen_range(0..4) {
                    0 => ItemSpec::Document {
                        title,
                        source: DocumentSource::plain(format!(
                            "{}.\n{}.\n",
                            sentence(&mut self.rng),
                            sentence(&mut self.rng)
                        )),
                    },
                    1 => ItemSpec::Link {
                        title,
                        url: format!("https://example.org/{}", self.rng.gen::<u16>()),
                        caption: String::new(),
                    },
                    2 => ItemSpec::DiscussionItem {
                        title,
                        prompt: sentence(&mut self.rng),
                    },
                    _ => {
                        let procedure = [
                            Procedure::Majority,
                            Procedure::Plurality,
                            Procedure::Approval,
                            Procedure::Consensus,
                        ][self.rng.gen_range(0..4)];
                        let options = match procedure {
                            Procedure::Plurality | Procedure::Approval => {
                                (0..self.rng.gen_range(2..5)).map(|i| format!("Option {i}")).collect()
                            }
                            _ => Vec::new(),
                        };
                        ItemSpec::Poll {
                            title,
                            spec: PollSpec {
                                question: "What now?".into(),
                                options,
                                procedure,
                                binding: self.rng.gen_bool(0.5),
                                deadline: Some(t(self.minute + self.rng.gen_range(10..500))),
                                quorum: None,
                                open_ballots: self.rng.gen_bool(0.5),
                            },
                        }
                    }
                };
                let item = deme.post_item(area, author, spec, at)?;
                if let Some(d) = item.kind.document_id() {
                    self.documents.push(d);
                }
                if let Some(p) = item.kind.poll_id() {
                    let view = deme.poll_view(p, Some(author), at)?;
                    self.polls.push((p, view.spec.procedure, view.spec.options.len()));
                }
                self.items.push((area, item.id));
            }
            15..=59 => {
                let author = self.user();
                let (area, target) = match self.rng.gen_range(0..3) {
                    0 if !self.items.is_empty() => {
                        let (area, item) = *self.items.choose(&mut self.rng).expect("items");
                        (area, TargetSpec::OnItem { item })
                    }
                    1 if !self.comments.is_empty() => {
                        let (area, comment) = *self.comments.choose(&mut self.rng).expect("comments");
                        (area, TargetSpec::ReplyTo { comment })
                    }
                    _ => (self.area(), TargetSpec::Global),
                };
                let subject = self.rng.gen_bool(0.5).then(|| sentence(&mut self.rng));
                let draft = NewComment {
                    subject,
                    body: sentence(&mut self.rng),
                    target,
                };
                let c = deme.post_comment(area, author, draft, at)?;
                self.comments.push((area, c.id));
            }
            60..=69 if !self.documents.is_empty() => {
                let document = *self.documents.choose(&mut self.rng).expect("documents");
                let author = self.user();
                let doc = deme.document(document, Some(author))?;
                let text = doc.latest().text()?.to_string();
                let spaces: Vec<usize> = text
                    .chars()
                    .enumerate()
                    .filter(|(_, c)| is_anchor_whitespace(*c))
                    .map(|(i, _)| i)
                    .collect();
                let Some(&offset) = spaces.choose(&mut self.rng) else {
                    return Ok(());
                };
                let body = sentence(&mut self.rng);
                let (c, _) = deme.attach_intext(document, None, offset, None, body, author, at)?;
                self.comments.push((doc.area, c.id));
            }
            70..=76 if !self.documents.is_empty() => {
                let document = *self.documents.choose(&mut self.rng).expect("documents");
                let author = self.user();
                let text = deme.document(document, Some(author))?.latest().text()?.to_string();
                let revised = edit(&mut self.rng, &text);
                deme.revise_document(document, revised, author, at)?;
            }
            77..=92 if !self.polls.is_empty() => {
                let (poll, procedure, options) = *self.polls.choose(&mut self.rng).expect("polls");
                let voter = self.user();
                let seed: u64 = self.rng.gen();
                let content = match procedure {
                    Procedure::Majority => BallotContent::YesNoAbstain {
                        choice: [YesNo::Yes, YesNo::No, YesNo::Abstain][(seed % 3) as usize],
                    },
                    Procedure::Plurality => BallotContent::SingleChoice {
                        option: seed as usize % options,
                    },
                    Procedure::Approval => BallotContent::ApprovalSet {
                        options: (0..options).filter(|o| seed >> o & 1 == 1).collect(),
                    },
                    Procedure::Consensus => BallotContent::Consent {
                        stance: [Stance::Agree, Stance::StandAside, Stance::Block][(seed % 3) as usize],
                        reason: None,
                    },
                };
                deme.cast_ballot(poll, voter, content, at)?;
            }
            93..=94 if !self.polls.is_empty() => {
                let (poll, _, _) = *self.polls.choose(&mut self.rng).expect("polls");
                deme.close_poll(poll, self.users[0], at)?;
            }
            95..=97 if !self.comments.is_empty() => {
                let (_, comment) = *self.comments.choose(&mut self.rng).expect("comments");
                let actor = if self.rng.gen_bool(0.5) {
                    self.users[0]
                } else {
                    self.user()
                };
                deme.retract_comment(comment, actor)?;
            }
            98..=99 if !self.items.is_empty() => {
                let (_, item) = *self.items.choose(&mut self.rng).expect("items");
                deme.retract_item(item, self.users[0])?;
            }
            _ => {
                let area = self.area();
                let author = self.user();
                let draft = NewComment {
                    subject: None,
                    body: sentence(&mut self.rng),
                    target: TargetSpec::Global,
                };
                let c = deme.post_comment(area, author, draft, at)?;
                self.comments.push((area, c.id));
            }
        }
        Ok(())
    }
}

fn error_name(e: &Error) -> String {
    format!("{e:?}")
        .split(['(', ' ', '{'])
        .next()
        .unwrap_or_default()
        .to_string()
}

/// Applies `ops` random operations to a fresh group. Refusals are counted,
/// except integrity and storage failures, which abort the run.
pub fn run(ops: usize, seed: u64) -> Result<FuzzRun, String> {
    let deme = Deme::default();
    let moderator = deme
        .register_user("Moderator", Some("moderator@fuzz.example"))
        .map_err(|e| e.to_string())?
        .user_id;
    let group = deme
        .create_group("Fuzz", "", GroupAccess::Closed, JoinPolicy::OpenJoin, moderator, t(0))
        .map_err(|e| e.to_string())?
        .id;
    let area = deme
        .create_meeting_area(group, moderator, "General", "", t(0))
        .map_err(|e| e.to_string())?
        .id;
    let mut state = State {
        rng: crate::rng(seed),
        group,
        users: vec![moderator],
        areas: vec![area],
        items: Vec::new(),
        comments: Vec::new(),
        documents: Vec::new(),
        polls: Vec::new(),
        minute: 0,
    };
    let mut applied = 0;
    let mut refused = HashMap::new();
    for n in 0..ops {
        match state.step(&deme) {
            Ok(()) => applied += 1,
            Err(e @ (Error::IntegrityViolation(_) | Error::Storage(_))) => return Err(format!("operation {n}: {e}")),
            Err(e) => *refused.entry(error_name(&e)).or_insert(0) += 1,
        }
    }
    let end = t(state.minute + 1);
    Ok(FuzzRun {
        deme,
        group,
        moderator,
        applied,
        refused,
        end,
    })
}

/// Every referential fault in a bundle: dangling targets, folio and
/// discussion lists that repeat or miss records.
pub fn referential_faults(c: &BundleContent) -> Vec<String> {
    let mut faults = Vec::new();
    let areas: HashSet<AreaId> = c.areas.iter().map(|a| a.id).collect();
    let items: HashMap<ItemId, AreaId> = c.items.iter().map(|i| (i.id, i.area)).collect();
    let comments: HashMap<CommentId, AreaId> = c.comments.iter().map(|x| (x.id, x.area)).collect();
    let documents: HashMap<DocumentId, AreaId> = c.documents.iter().map(|d| (d.id, d.area)).collect();
    let anchors: HashMap<_, _> = c.anchors.iter().map(|a| (a.id, a)).collect();

    for a in &c.areas {
        let mut seen = HashSet::new();
        for i in &a.folio {
            if !seen.insert(*i) {
                faults.push(format!("area {} lists item {i} twice", a.id));
            }
            if items.get(i) != Some(&a.id) {
                faults.push(format!("area {} lists foreign item {i}", a.id));
            }
        }
        let mut seen = HashSet::new();
        for x in &a.discussion {
            if !seen.insert(*x) {
                faults.push(format!("area {} lists comment {x} twice", a.id));
            }
            if comments.get(x) != Some(&a.id) {
                faults.push(format!("area {} lists foreign comment {x}", a.id));
            }
        }
    }
    for i in &c.items {
        if !areas.contains(&i.area) {
            faults.push(format!("item {} in missing area", i.id));
        }
        let listed = c.areas.iter().filter(|a| a.folio.contains(&i.id)).count();
        if listed != 1 {
            faults.push(format!("item {} is in {listed} folios", i.id));
        }
    }
    for x in &c.comments {
        let resolves = match x.target {
            CommentTarget::Global => true,
            CommentTarget::OnItem { item } => items.get(&item) == Some(&x.area),
            CommentTarget::ReplyTo { comment } => comments.get(&comment) == Some(&x.area),
            CommentTarget::InText { anchor } => anchors
                .get(&anchor)
                .is_some_and(|a| a.comment_id == x.id && documents.get(&a.document_id) == Some(&x.area)),
        };
        if !resolves {
            faults.push(format!("comment {} has a dangling target", x.id));
        }
        if !c.areas.iter().any(|a| a.id == x.area && a.discussion.contains(&x.id)) {
            faults.push(format!("comment {} is missing from its discussion", x.id));
        }
    }
    for a in &c.anchors {
        if !comments.contains_key(&a.comment_id) || !documents.contains_key(&a.document_id) {
            faults.push(format!("anchor {} is dangling", a.id));
        }
    }
    for p in &c.polls {
        if items.get(&p.item) != Some(&p.area) {
            faults.push(format!("poll {} has a dangling item", p.id));
        }
    }
    faults
}

/// Whether the chronological and threaded indexes of every area hold the
/// same comments as the area's discussion.
pub fn index_faults(deme: &Deme, c: &BundleContent, viewer: UserId) -> Vec<String> {
    let mut faults = Vec::new();
    for a in &c.areas {
        let mut expected = a.discussion.clone();
        expected.sort();
        for order in [IndexOrder::Chronological, IndexOrder::Threaded] {
            let mut ids: Vec<CommentId> = match deme.comments_index(a.id, Some(viewer), order) {
                Ok(headers) => headers.into_iter().map(|h| h.comment_id).collect(),
                Err(e) => {
                    faults.push(format!("area {}: {e}", a.id));
                    continue;
                }
            };
            ids.sort();
            if ids != expected {
                faults.push(format!(
                    "area {}: {order:?} index is not a permutation of the discussion",
                    a.id
                ));
            }
        }
    }
    faults
}
