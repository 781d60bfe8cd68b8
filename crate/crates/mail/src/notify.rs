//! Outbound notifications.

use std::collections::BTreeSet;

use deme_core::decision::{OutcomeStatus, TallyCounts};
use deme_core::PollView;
use deme_core::{AreaId, CommentId, CommentTarget, GroupId, ItemId, Member, PollId, Timestamp, UserId};
use serde::{Deserialize, Serialize};

use crate::token::RouteTarget;
use crate::wire::{Mailbox, Outbound};
use crate::{Gateway, MailError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum Event {
    NewComment(CommentId),
    NewItem(ItemId),
    PollOpened(PollId),
    PollClosed(PollId),
}

/// What a notification is about, gathered under the subscriber's access.
struct Context {
    area: AreaId,
    group_name: String,
    area_title: String,
    actor: Option<UserId>,
    subject: String,
    body: String,
    reply_target: RouteTarget,
    message_id: String,
    in_reply_to: Option<String>,
    anchor: String,
}

pub fn comment_message_id(comment: CommentId, domain: &str) -> String {
    format!("comment.{comment}@{domain}")
}

impl Gateway {
    /// Builds the notification of `event` for one subscriber.
    pub fn notify(&self, event: Event, subscriber: UserId, at: Timestamp) -> Result<Outbound> {
        let member = self.deme.user(subscriber)?;
        let Some(address) = member.email.clone().filter(|_| member.notifications) else {
            return Err(MailError::NotificationsDisabled);
        };
        let ctx = self.context(event, subscriber, at)?;
        if let Event::NewComment(c) = event {
            self.notified.lock().insert(c);
        }
        let token = self.encode_token(ctx.area, ctx.reply_target)?;
        let reply = self.config.address_for(&token);
        let sender_name = match ctx.actor.and_then(|a| self.deme.user(a).ok()) {
            Some(actor) => format!("{} ({})", actor.display_name, ctx.group_name),
            None => ctx.group_name.clone(),
        };
        let link = format!("{}/areas/{}{}", self.config.web_base, ctx.area, ctx.anchor);
        let body = format!(
            "{}\n\n-- \n{}: {}\n{}\nReply to this message to respond in the meeting area.\n",
            ctx.body.trim_end(),
            ctx.group_name,
            ctx.area_title,
            link
        );
        Ok(Outbound {
            from: Mailbox::new(Some(&sender_name), &reply),
            to: vec![Mailbox::new(Some(&member.display_name), &address)],
            reply_to: Some(Mailbox::new(Some(&sender_name), &reply)),
            subject: format!("[{}:{}] {}", ctx.group_name, ctx.area_title, ctx.subject),
            message_id: ctx.message_id,
            references: ctx.in_reply_to.iter().cloned().collect(),
            in_reply_to: ctx.in_reply_to,
            date: at,
            body,
            extra_headers: vec![("Auto-Submitted".into(), "auto-generated".into())],
        })
    }

    /// Everyone who should hear about `event`: members of the owning group
    /// and of linked groups who can read the area, have notifications on and
    /// have an address. The actor is left out.
    pub fn subscribers(&self, event: Event) -> Result<Vec<UserId>> {
        let (group, area, actor) = self.event_scope(event)?;
        let users = self.deme.with_space(group, |space, dir| {
            let Ok(a) = space.area(area) else {
                return Vec::new();
            };
            let mut groups = vec![a.owner_group];
            groups.extend(a.linked_groups.iter().copied());
            let mut users = BTreeSet::new();
            for g in groups {
                if let Ok(g) = dir.group(g) {
                    users.extend(g.members.iter().map(|m| m.user_id));
                }
            }
            users
                .into_iter()
                .filter(|&u| Some(u) != actor)
                .filter(|&u| dir.user(u).is_ok_and(|m: &Member| m.notifications && m.email.is_some()))
                .filter(|&u| space.can(dir, area, Some(u), deme_core::Action::Read))
                .collect()
        })?;
        Ok(users)
    }

    /// Notifications of `event` for all of its subscribers.
    pub fn fan_out(&self, event: Event, at: Timestamp) -> Result<Vec<Outbound>> {
        let mut out = Vec::new();
        for u in self.subscribers(event)? {
            match self.notify(event, u, at) {
                Ok(m) => out.push(m),
                Err(MailError::AccessDenied | MailError::NotificationsDisabled) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    fn event_scope(&self, event: Event) -> Result<(GroupId, AreaId, Option<UserId>)> {
        let missing = || MailError::UnknownTarget;
        match event {
            Event::NewComment(c) => {
                let g = self.deme.owner_of(c).ok_or_else(missing)?;
                let (area, author) = self
                    .deme
                    .with_space(g, |s, _| s.comment(c).map(|c| (c.area, c.author)))??;
                Ok((g, area, Some(author)))
            }
            Event::NewItem(i) => {
                let g = self.deme.owner_of(i).ok_or_else(missing)?;
                let (area, author) = self
                    .deme
                    .with_space(g, |s, _| s.item(i).map(|i| (i.area, i.author)))??;
                Ok((g, area, Some(author)))
            }
            Event::PollOpened(p) | Event::PollClosed(p) => {
                let g = self.deme.owner_of(p).ok_or_else(missing)?;
                let (area, author) = self
                    .deme
                    .with_space(g, |s, _| s.poll(p).map(|p| (p.area, p.author)))??;
                let actor = matches!(event, Event::PollOpened(_)).then_some(author);
                Ok((g, area, actor))
            }
        }
    }

    fn names(&self, area: AreaId, viewer: UserId) -> Result<(String, String)> {
        let a = self.deme.area(area, Some(viewer))?;
        let g = self.deme.group(a.owner_group)?;
        Ok((g.name, a.title))
    }

    fn context(&self, event: Event, viewer: UserId, at: Timestamp) -> Result<Context> {
        let domain = &self.config.domain;
        match event {
            Event::NewComment(id) => {
                let c = self.deme.comment(id, Some(viewer))?;
                let header = self.deme.comment_header(id, Some(viewer))?;
                let (group_name, area_title) = self.names(c.area, viewer)?;
                let mut lead = format!("{} wrote", header.author_name);
                if let Some(r) = &header.item_reference {
                    lead.push_str(&format!(" on {}", r.label));
                }
                let in_reply_to = match c.target {
                    CommentTarget::ReplyTo { comment } if self.notified.lock().contains(&comment) => {
                        Some(comment_message_id(comment, domain))
                    }
                    _ => None,
                };
                Ok(Context {
                    area: c.area,
                    group_name,
                    area_title,
                    actor: Some(c.author),
                    subject: c.subject.clone(),
                    body: format!("{lead}:\n\n{}", c.body),
                    reply_target: RouteTarget::Comment(id),
                    message_id: comment_message_id(id, domain),
                    in_reply_to,
                    anchor: format!("#comment-{id}"),
                })
            }
            Event::NewItem(id) => {
                let item = self.deme.item(id, Some(viewer))?;
                let (group_name, area_title) = self.names(item.area, viewer)?;
                let author = self.deme.user(item.author)?.display_name;
                Ok(Context {
                    area: item.area,
                    group_name,
                    area_title,
                    actor: Some(item.author),
                    subject: format!("New {}: {}", item.kind.name(), item.label()),
                    body: format!("{author} added {} to the folio.", item.label()),
                    reply_target: RouteTarget::Item(id),
                    message_id: format!("item.{id}@{domain}"),
                    in_reply_to: None,
                    anchor: format!("#item-{id}"),
                })
            }
            Event::PollOpened(id) | Event::PollClosed(id) => {
                let view = self.deme.poll_view(id, Some(viewer), at)?;
                let item = self.deme.item(view.item, Some(viewer))?;
                let (group_name, area_title) = self.names(view.area, viewer)?;
                let opened = matches!(event, Event::PollOpened(_));
                let (subject, body, message_id) = if opened {
                    (
                        format!("Poll opened: {}", item.title),
                        poll_opened_body(&view),
                        format!("poll-opened.{id}@{domain}"),
                    )
                } else {
                    (
                        format!("Poll closed: {}", item.title),
                        poll_closed_body(&view),
                        format!("poll-closed.{id}@{domain}"),
                    )
                };
                Ok(Context {
                    area: view.area,
                    group_name,
                    area_title,
                    actor: opened.then_some(view.author),
                    subject,
                    body,
                    reply_target: RouteTarget::Item(view.item),
                    message_id,
                    in_reply_to: None,
                    anchor: format!("#item-{}", view.item),
                })
            }
        }
    }
}

fn poll_opened_body(view: &PollView) -> String {
    let mut body = format!("{}\n", view.spec.question);
    for (i, option) in view.spec.options.iter().enumerate() {
        body.push_str(&format!("  {}. {}\n", i + 1, option));
    }
    body.push_str(&format!("\nProcedure: {:?}\n", view.spec.procedure).to_lowercase());
    if let Some(d) = view.spec.deadline {
        body.push_str(&format!("Deadline: {}\n", d.to_rfc2822()));
    }
    body.push_str("\nVote on the web; replies to this message become comments.\n");
    body
}

fn option_name(view: &PollView, i: usize) -> String {
    view.spec
        .options
        .get(i)
        .cloned()
        .unwrap_or_else(|| format!("option {}", i + 1))
}

pub fn outcome_line(view: &PollView) -> String {
    let status = match view.outcome.status.clone() {
        OutcomeStatus::Open => "open".to_string(),
        OutcomeStatus::Passed => "passed".to_string(),
        OutcomeStatus::Failed => "failed".to_string(),
        OutcomeStatus::Winner { option } => format!("winner: {}", option_name(view, option)),
        OutcomeStatus::Tied { options } => {
            let names: Vec<String> = options.into_iter().map(|o| option_name(view, o)).collect();
            format!("tied: {}", names.join(", "))
        }
        OutcomeStatus::QuorumNotMet => "quorum not met".to_string(),
    };
    format!("Outcome: {status}")
}

pub fn tally_line(view: &PollView) -> String {
    let counts = match &view.tally.counts {
        TallyCounts::Majority { yes, no, abstain } => format!("yes {yes}, no {no}, abstain {abstain}"),
        TallyCounts::Consensus {
            agree,
            stand_aside,
            block,
        } => format!("agree {agree}, stand aside {stand_aside}, block {block}"),
        TallyCounts::Plurality { counts } | TallyCounts::Approval { counts } => counts
            .iter()
            .enumerate()
            .map(|(i, n)| format!("{} {n}", option_name(view, i)))
            .collect::<Vec<_>>()
            .join(", "),
    };
    format!("Tally: {counts}")
}

fn poll_closed_body(view: &PollView) -> String {
    format!(
        "{}\n\n{}\n{}\nParticipation: {} of {} eligible\n",
        view.spec.question,
        outcome_line(view),
        tally_line(view),
        view.tally.participation,
        view.tally.eligible_count
    )
}
