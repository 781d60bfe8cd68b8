//! Mail replies turned into comments.

use deme_core::{normalize_email, AreaId, Comment, NewComment, TargetSpec, Timestamp, UserId};
use sha2::{Digest, Sha256};

use crate::token::RouteTarget;
use crate::wire::Message;
use crate::{Gateway, MailError, Result};

/// Recipient headers searched for a reply address, most specific first.
const RECIPIENT_HEADERS: [&str; 5] = ["Delivered-To", "X-Original-To", "Envelope-To", "To", "Cc"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InboundPosting {
    pub author: UserId,
    pub area: AreaId,
    pub target: RouteTarget,
    /// `None` when nothing but tags and reply prefixes was left.
    pub subject: Option<String>,
    pub body: String,
    pub source_message_id: String,
}

impl InboundPosting {
    pub fn draft(&self) -> NewComment {
        let target = match self.target {
            RouteTarget::Global => TargetSpec::Global,
            RouteTarget::Item(item) => TargetSpec::OnItem { item },
            RouteTarget::Comment(comment) => TargetSpec::ReplyTo { comment },
        };
        NewComment {
            subject: self.subject.clone(),
            body: self.body.clone(),
            target,
        }
    }
}

/// The Message-ID, or a digest of the raw bytes when there is none.
pub fn message_key(message: &Message, raw: &[u8]) -> String {
    message.message_id().unwrap_or_else(|| {
        let digest = Sha256::digest(raw);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    })
}

/// A piped delivery may still carry its mbox envelope line.
fn strip_envelope(raw: &[u8]) -> &[u8] {
    if raw.starts_with(b"From ") {
        match raw.iter().position(|&b| b == b'\n') {
            Some(i) => &raw[i + 1..],
            None => &raw[raw.len()..],
        }
    } else {
        raw
    }
}

impl Gateway {
    /// Parses a reply without posting it.
    pub fn parse_inbound(&self, raw: &[u8]) -> Result<InboundPosting> {
        let raw = strip_envelope(raw);
        let message = Message::parse(raw)?;
        let source_message_id = message_key(&message, raw);
        if self.deme.message_comment(&source_message_id).is_some() {
            return Err(MailError::Duplicate(source_message_id));
        }
        let from = message.from().ok_or_else(|| MailError::UnknownSender(String::new()))?;
        let author = normalize_email(&from.address)
            .ok()
            .and_then(|e| self.deme.user_by_email(&e))
            .filter(|m| !m.is_placeholder())
            .ok_or_else(|| MailError::UnknownSender(from.address.clone()))?;
        let token = self.find_token(&message)?;
        let text = message.text_body().ok_or(MailError::NoTextPart)?;
        let tag = self.area_tag(token.area);
        let subject = message.subject().and_then(|s| clean_subject(&s, tag.as_deref()));
        Ok(InboundPosting {
            author: author.user_id,
            area: token.area,
            target: token.target,
            subject,
            body: strip_reply(&text),
            source_message_id,
        })
    }

    /// Parses a reply and posts it. A redelivered message yields
    /// [`MailError::Duplicate`] and posts nothing.
    pub fn receive(&self, raw: &[u8], at: Timestamp) -> Result<Comment> {
        let posting = self.parse_inbound(raw)?;
        let comment = self.deme.post_mail_comment(
            posting.area,
            posting.author,
            posting.draft(),
            &posting.source_message_id,
            at,
        )?;
        Ok(comment)
    }

    fn find_token(&self, message: &Message) -> Result<crate::RoutingToken> {
        for header in RECIPIENT_HEADERS {
            for mailbox in message.addresses(header) {
                if let Some(token) = self.config.token_in(&mailbox.address) {
                    if let Ok(t) = self.decode_token(token) {
                        return Ok(t);
                    }
                }
            }
        }
        Err(MailError::BadToken)
    }

    fn area_tag(&self, area: AreaId) -> Option<String> {
        let g = self.deme.owner_of(area)?;
        let group = self.deme.group(g).ok()?;
        let title = self
            .deme
            .with_space(g, |s, _| s.area(area).map(|a| a.title.clone()).ok())
            .ok()??;
        Some(format!("[{}:{}]", group.name, title))
    }
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

/// Removes reply prefixes and the area tag, keeping one `Re: ` if there was
/// any.
pub fn clean_subject(subject: &str, tag: Option<&str>) -> Option<String> {
    let mut rest = subject.trim();
    let mut reply = false;
    loop {
        if let Some(r) = ["re:", "aw:", "sv:"].iter().find_map(|p| strip_prefix_ci(rest, p)) {
            reply = true;
            rest = r.trim_start();
        } else if let Some(r) = tag.and_then(|t| strip_prefix_ci(rest, t)) {
            rest = r.trim_start();
        } else {
            break;
        }
    }
    if rest.is_empty() {
        None
    } else if reply {
        Some(format!("Re: {rest}"))
    } else {
        Some(rest.to_string())
    }
}

fn is_attribution(line: &str) -> bool {
    let line = line.trim_end();
    line.ends_with("wrote:") || line.ends_with("writes:") || line.ends_with("schrieb:")
}

/// Drops the signature and a trailing block of quoted lines together with
/// its attribution line. Quotes followed by original text stay.
pub fn strip_reply(body: &str) -> String {
    let mut lines: Vec<&str> = body.lines().collect();
    if let Some(sig) = lines.iter().rposition(|l| *l == "-- " || *l == "--") {
        lines.truncate(sig);
    }
    let trim_blank = |lines: &mut Vec<&str>| {
        while lines.last().is_some_and(|l| l.trim().is_empty()) {
            lines.pop();
        }
    };
    trim_blank(&mut lines);
    let mut end = lines.len();
    let mut quoted = false;
    while end > 0 {
        let l = lines[end - 1];
        if l.starts_with('>') {
            quoted = true;
        } else if !l.trim().is_empty() {
            break;
        }
        end -= 1;
    }
    if quoted {
        lines.truncate(end);
        if lines.last().is_some_and(|l| is_attribution(l)) {
            lines.pop();
        }
        trim_blank(&mut lines);
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_signature_and_trailing_quote() {
        let body = "Agreed, let's try it.\n\nOn Fri, 16 Oct 2026, Kazmi wrote:\n> Shorter workshops?\n> Yes.\n";
        assert_eq!(strip_reply(body), "Agreed, let's try it.");
        let body = "Sounds good.\n-- \nAyşe\nLabortech\n";
        assert_eq!(strip_reply(body), "Sounds good.");
    }

    #[test]
    fn keeps_interleaved_quotes() {
        let body = "> first point\nI disagree here.\n> second point\nAnd here.\n";
        assert_eq!(strip_reply(body), body.trim_end());
    }

    #[test]
    fn quote_only_reply_is_empty() {
        assert_eq!(strip_reply("> all quoted\n"), "");
    }

    #[test]
    fn subject_cleanup() {
        let tag = Some("[Labortech:Workshops]");
        assert_eq!(
            clean_subject("Re: [Labortech:Workshops] Shorter workshops", tag).as_deref(),
            Some("Re: Shorter workshops")
        );
        assert_eq!(
            clean_subject("[labortech:workshops] RE: Re: x", tag).as_deref(),
            Some("Re: x")
        );
        assert_eq!(clean_subject("[draft] plan", tag).as_deref(), Some("[draft] plan"));
        assert_eq!(clean_subject("Re: [Labortech:Workshops]", tag), None);
    }

    #[test]
    fn envelope_line_is_skipped() {
        assert_eq!(strip_envelope(b"From x@y Mon\nSubject: s\n"), b"Subject: s\n");
        assert_eq!(strip_envelope(b"From: x@y\n"), b"From: x@y\n");
    }
}
