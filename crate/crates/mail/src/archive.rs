//! Importing a mailing-list archive into a meeting area.

use std::collections::HashMap;

use deme_core::{
    normalize_email, Action, ArchiveResult, ArchivedMessage, AreaId, CommentId, Scope, Sender, Timestamp, UserId,
};
use serde::{Deserialize, Serialize};

use crate::inbound::message_key;
use crate::wire::Message;
use crate::{mbox, Gateway, MailError, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub imported: usize,
    pub threaded: usize,
    pub orphan_parent: usize,
    pub unmapped: usize,
    pub duplicates: usize,
    /// Reply cycles in the headers, each broken by making one message a root.
    pub cycles_broken: usize,
    /// Per message in archive order.
    pub entries: Vec<ImportEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportEntry {
    pub message_id: String,
    pub result: ArchiveResult,
}

impl ImportReport {
    pub fn comment_for(&self, message_id: &str) -> Option<CommentId> {
        self.entries.iter().find_map(|e| match e.result {
            ArchiveResult::Imported { comment, .. } if e.message_id == message_id => Some(comment),
            _ => None,
        })
    }
}

struct Parsed {
    key: String,
    in_reply_to: Option<Vec<String>>,
    references: Vec<String>,
    sender: Option<String>,
    subject: String,
    body: String,
    date: Option<Timestamp>,
}

/// Parent position of every message within the archive. `In-Reply-To`
/// decides when present; `References` is consulted only without it.
fn parents(parsed: &[Parsed]) -> Vec<Option<usize>> {
    let mut first: HashMap<&str, usize> = HashMap::new();
    for (i, p) in parsed.iter().enumerate() {
        first.entry(p.key.as_str()).or_insert(i);
    }
    parsed
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let present = |id: &String| first.get(id.as_str()).copied().filter(|&j| j != i);
            match &p.in_reply_to {
                Some(ids) => ids.first().and_then(present),
                None => p.references.iter().rev().find_map(present),
            }
        })
        .collect()
}

/// Cuts every cycle at its earliest member. Returns how many were cut.
fn break_cycles(parent: &mut [Option<usize>]) -> usize {
    const NEW: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![NEW; parent.len()];
    let mut broken = 0;
    for start in 0..parent.len() {
        let mut path = Vec::new();
        let mut at = Some(start);
        while let Some(i) = at {
            match state[i] {
                DONE => break,
                ON_PATH => {
                    let cycle_start = path.iter().position(|&p| p == i).expect("on path");
                    let cut = *path[cycle_start..].iter().min().expect("non-empty cycle");
                    parent[cut] = None;
                    broken += 1;
                    break;
                }
                _ => {
                    state[i] = ON_PATH;
                    path.push(i);
                    at = parent[i];
                }
            }
        }
        for i in path {
            state[i] = DONE;
        }
    }
    broken
}

/// Archive order, except that a parent is pulled ahead of its replies.
fn posting_order(parent: &[Option<usize>]) -> Vec<usize> {
    let mut emitted = vec![false; parent.len()];
    let mut order = Vec::with_capacity(parent.len());
    for i in 0..parent.len() {
        let mut chain = Vec::new();
        let mut at = Some(i);
        while let Some(j) = at {
            if emitted[j] {
                break;
            }
            emitted[j] = true;
            chain.push(j);
            at = parent[j];
        }
        order.extend(chain.into_iter().rev());
    }
    order
}

impl Gateway {
    /// Imports an mbox archive into `area`. Senders are looked up in
    /// `address_map`, then among registered members; anyone else is
    /// attributed to an `imported:` placeholder.
    pub fn import_mail_archive(
        &self,
        area: AreaId,
        actor: UserId,
        archive: &[u8],
        address_map: &HashMap<String, UserId>,
        at: Timestamp,
    ) -> Result<ImportReport> {
        if !self.deme.authorize(Some(actor), Scope::Area(area), Action::Moderate) {
            if self.deme.owner_of(area).is_none() {
                return Err(deme_core::Error::UnknownArea(area).into());
            }
            return Err(MailError::NotAuthorized);
        }
        let raw_messages = mbox::split(archive).map_err(|e| MailError::MalformedArchive(e.0))?;
        let mut parsed = Vec::with_capacity(raw_messages.len());
        for (n, raw) in raw_messages.iter().enumerate() {
            let m = Message::parse(raw).map_err(|e| MailError::MalformedArchive(format!("message {}: {e}", n + 1)))?;
            parsed.push(Parsed {
                key: message_key(&m, raw),
                in_reply_to: m.in_reply_to().filter(|ids| !ids.is_empty()),
                references: m.references(),
                sender: m.from().map(|f| f.address),
                subject: m.subject().unwrap_or_default(),
                body: m.text_body().unwrap_or_default(),
                date: m.date(),
            });
        }
        let mut report = ImportReport::default();
        if parsed.is_empty() {
            return Ok(report);
        }
        let mut parent = parents(&parsed);
        let before: Vec<bool> = parent.iter().map(Option::is_some).collect();
        report.cycles_broken = break_cycles(&mut parent);
        let map: HashMap<String, UserId> = address_map
            .iter()
            .map(|(k, v)| (k.trim().to_ascii_lowercase(), *v))
            .collect();
        let order = posting_order(&parent);
        let messages: Vec<ArchivedMessage> = order
            .iter()
            .map(|&i| {
                let p = &parsed[i];
                let parents = match parent[i] {
                    Some(j) => vec![parsed[j].key.clone()],
                    // cut out of a cycle
                    None if before[i] => Vec::new(),
                    // not in the archive; may still be an earlier import
                    None => p
                        .in_reply_to
                        .iter()
                        .flatten()
                        .chain(p.references.iter().rev())
                        .cloned()
                        .collect(),
                };
                ArchivedMessage {
                    message_id: p.key.clone(),
                    parents,
                    sender: self.sender(p.sender.as_deref(), &map),
                    subject: p.subject.clone(),
                    body: p.body.clone(),
                    date: p.date,
                }
            })
            .collect();
        let results = self.deme.import_archive(area, actor, messages, at)?;
        let mut by_position: Vec<Option<ArchiveResult>> = vec![None; parsed.len()];
        for (&i, r) in order.iter().zip(results) {
            by_position[i] = Some(r);
        }
        for (p, r) in parsed.iter().zip(by_position) {
            let result = r.expect("one result per message");
            match result {
                ArchiveResult::Imported {
                    threaded,
                    orphan_parent,
                    unmapped,
                    ..
                } => {
                    report.imported += 1;
                    report.threaded += usize::from(threaded);
                    report.orphan_parent += usize::from(orphan_parent);
                    report.unmapped += usize::from(unmapped);
                }
                ArchiveResult::Duplicate { .. } => report.duplicates += 1,
            }
            report.entries.push(ImportEntry {
                message_id: p.key.clone(),
                result,
            });
        }
        Ok(report)
    }

    fn sender(&self, address: Option<&str>, map: &HashMap<String, UserId>) -> Sender {
        let Some(address) = address else {
            return Sender::Address("(unknown sender)".to_string());
        };
        let normalized = address.trim().to_ascii_lowercase();
        if let Some(&u) = map.get(&normalized) {
            return Sender::Member(u);
        }
        let member = normalize_email(address).ok().and_then(|e| self.deme.user_by_email(&e));
        match member {
            Some(m) => Sender::Member(m.user_id),
            None => Sender::Address(normalized),
        }
    }
}
