use std::sync::Arc;

use deme_core::{CommentTarget, Deme, ItemId, UserId};
use deme_mail::notify::Event;
use deme_mail::token::{TokenKey, TOKEN_LEN};
use deme_mail::wire::{Message, Outbound};
use deme_mail::{Gateway, MailConfig, MailError};
use deme_testkit::mail::{compliant_reply, RawMail};
use deme_testkit::populate::{populated_group, Populated};
use deme_testkit::t;

fn setup() -> (Gateway, Populated) {
    let deme = Deme::default();
    let p = populated_group(&deme).unwrap();
    let config = MailConfig::new(
        "lists.deme.example",
        "https://deme.example",
        TokenKey::new(b"round trip".to_vec()),
    );
    (Gateway::new(Arc::new(deme), config), p)
}

fn email(gw: &Gateway, user: UserId) -> String {
    gw.deme().user(user).unwrap().email.unwrap()
}

fn reply_address(out: &Outbound) -> String {
    let parsed = Message::parse(&out.to_bytes()).unwrap();
    parsed.addresses("Reply-To")[0].address.clone()
}

fn reply_to(gw: &Gateway, out: &Outbound, from: UserId, text: &str) -> Vec<u8> {
    let parsed = Message::parse(&out.to_bytes()).unwrap();
    compliant_reply(
        &email(gw, from),
        &reply_address(out),
        &parsed.subject().unwrap(),
        &parsed.message_id().unwrap(),
        &parsed.text_body().unwrap(),
        text,
    )
}

fn item_of_poll(gw: &Gateway, p: &Populated, poll: deme_core::PollId) -> ItemId {
    gw.deme().poll_view(poll, Some(p.members[0]), t(300)).unwrap().item
}

#[test]
fn replies_land_on_the_notified_object() {
    let (gw, p) = setup();
    let subscriber = p.members[3];
    let comment = p.comments[1];
    let discussion = p.items[2];
    let events = [
        (Event::NewComment(comment), CommentTarget::ReplyTo { comment }),
        (Event::NewItem(discussion), CommentTarget::OnItem { item: discussion }),
        (
            Event::PollOpened(p.polls[0]),
            CommentTarget::OnItem {
                item: item_of_poll(&gw, &p, p.polls[0]),
            },
        ),
        (
            Event::PollClosed(p.polls[1]),
            CommentTarget::OnItem {
                item: item_of_poll(&gw, &p, p.polls[1]),
            },
        ),
    ];
    for (n, (event, expected)) in events.into_iter().enumerate() {
        assert!(gw.subscribers(event).unwrap().contains(&subscriber), "{event:?}");
        let out = gw.notify(event, subscriber, t(300)).unwrap();
        let text = format!("Reply number {n}.");
        let raw = reply_to(&gw, &out, subscriber, &text);
        let posting = gw.parse_inbound(&raw).unwrap();
        assert_eq!(posting.author, subscriber);
        let c = gw.receive(&raw, t(301)).unwrap();
        assert_eq!(c.target, expected, "{event:?}");
        assert_eq!(c.body, text);
        assert_eq!(c.author, subscriber);
        assert!(!c.subject.contains("[Labortech"), "{}", c.subject);
    }
}

#[test]
fn closed_poll_notice_reports_the_outcome() {
    let (gw, p) = setup();
    let out = gw.notify(Event::PollClosed(p.polls[1]), p.members[1], t(300)).unwrap();
    assert!(
        out.subject.starts_with("[Labortech:Workshops] Poll closed:"),
        "{}",
        out.subject
    );
    assert!(out.body.contains("Outcome: passed"), "{}", out.body);
    assert!(out.body.contains("Tally: yes 3, no 1, abstain 1"), "{}", out.body);
    assert!(out.body.contains("Participation: 5 of 6 eligible"), "{}", out.body);
}

#[test]
fn redelivery_posts_once() {
    let (gw, p) = setup();
    let subscriber = p.members[2];
    let out = gw.notify(Event::NewItem(p.items[1]), subscriber, t(300)).unwrap();
    let raw = reply_to(&gw, &out, subscriber, "Posted once.");
    let count = |gw: &Gateway| {
        gw.deme()
            .comments_index(p.areas[0], Some(subscriber), deme_core::IndexOrder::Chronological)
            .unwrap()
            .len()
    };
    let before = count(&gw);
    gw.receive(&raw, t(301)).unwrap();
    for _ in 0..3 {
        assert!(matches!(gw.receive(&raw, t(302)), Err(MailError::Duplicate(_))));
    }
    assert_eq!(count(&gw), before + 1);
}

#[test]
fn every_single_character_token_mutation_is_rejected() {
    let (gw, p) = setup();
    let subscriber = p.members[1];
    let out = gw.notify(Event::NewComment(p.comments[0]), subscriber, t(300)).unwrap();
    let address = reply_address(&out);
    let token = gw.config().token_in(&address).unwrap().to_string();
    assert_eq!(token.len(), TOKEN_LEN);

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
    assert!(mutations.len() >= 200, "{}", mutations.len());
    for (n, bad) in mutations.iter().enumerate() {
        let mail = RawMail {
            from: email(&gw, subscriber),
            to: gw.config().address_for(bad),
            subject: "Re: tampered".into(),
            message_id: Some(format!("mutation.{n}@client.example")),
            body: "Should not post.".into(),
            ..RawMail::default()
        };
        assert!(
            matches!(gw.parse_inbound(&mail.to_bytes()), Err(MailError::BadToken)),
            "mutation {bad} accepted"
        );
    }
    // the untouched token still routes
    let mail = RawMail {
        from: email(&gw, subscriber),
        to: address,
        subject: "Re: fine".into(),
        message_id: Some("untouched@client.example".into()),
        body: "Fine.".into(),
        ..RawMail::default()
    };
    gw.parse_inbound(&mail.to_bytes()).unwrap();
}

#[test]
fn inbound_refusals() {
    let (gw, p) = setup();
    let subscriber = p.members[1];
    let out = gw.notify(Event::NewItem(p.items[2]), subscriber, t(300)).unwrap();
    let address = reply_address(&out);
    let base = RawMail {
        from: email(&gw, subscriber),
        to: address.clone(),
        subject: "Re: hello".into(),
        message_id: Some("refusal@client.example".into()),
        body: "Hello.".into(),
        ..RawMail::default()
    };

    let stranger = RawMail {
        from: "stranger@elsewhere.example".into(),
        ..base.clone()
    };
    assert!(matches!(
        gw.parse_inbound(&stranger.to_bytes()),
        Err(MailError::UnknownSender(_))
    ));

    let untargeted = RawMail {
        to: "someone@lists.deme.example".into(),
        ..base.clone()
    };
    assert!(matches!(
        gw.parse_inbound(&untargeted.to_bytes()),
        Err(MailError::BadToken)
    ));

    let other_key = MailConfig::new(
        "lists.deme.example",
        "https://deme.example",
        TokenKey::new(b"other".to_vec()),
    );
    let forged = Gateway::new(gw.deme().clone(), other_key);
    assert!(matches!(
        forged.parse_inbound(&base.to_bytes()),
        Err(MailError::BadToken)
    ));

    let html = format!(
        "From: {}\r\nTo: {address}\r\nSubject: html\r\nMessage-ID: <html@client.example>\r\n\
         Content-Type: text/html; charset=utf-8\r\n\r\n<p>Hello</p>\r\n",
        email(&gw, subscriber)
    );
    assert!(matches!(gw.parse_inbound(html.as_bytes()), Err(MailError::NoTextPart)));

    assert!(matches!(
        gw.parse_inbound(b"no headers at all"),
        Err(MailError::Malformed(_))
    ));

    // a member of a linked group may reply; an outsider of the closed group may not
    let partner = RawMail {
        from: email(&gw, p.partner_member),
        message_id: Some("partner@client.example".into()),
        ..base.clone()
    };
    gw.receive(&partner.to_bytes(), t(301)).unwrap();
    let pending = RawMail {
        from: email(&gw, p.pending),
        message_id: Some("pending@client.example".into()),
        ..base
    };
    assert!(matches!(
        gw.receive(&pending.to_bytes(), t(301)),
        Err(MailError::AccessDenied)
    ));
}

#[test]
fn reply_threads_under_the_notified_parent() {
    let (gw, p) = setup();
    let first = gw
        .notify(Event::NewComment(p.comments[0]), p.members[1], t(300))
        .unwrap();
    let reply = gw
        .receive(&reply_to(&gw, &first, p.members[1], "First reply."), t(301))
        .unwrap();
    let second = gw.notify(Event::NewComment(reply.id), p.members[2], t(302)).unwrap();
    assert_eq!(second.in_reply_to.as_deref(), Some(first.message_id.as_str()));
    assert_eq!(second.from.name.as_deref(), Some("Ayşe (Labortech)"));
    let bytes = second.to_bytes();
    assert!(bytes.iter().all(u8::is_ascii));
    assert!(String::from_utf8(bytes)
        .unwrap()
        .contains("Auto-Submitted: auto-generated"));
}
