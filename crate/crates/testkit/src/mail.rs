//! Hand-built mail fixtures: raw messages, mbox archives and threaded
//! archives with a known reply structure.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Default)]
pub struct RawMail {
    pub from: String,
    pub to: String,
    pub subject: String,
    pub message_id: Option<String>,
    pub in_reply_to: Option<String>,
    pub references: Vec<String>,
    pub date: Option<String>,
    pub body: String,
}

impl RawMail {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(&format!("From: {}\r\n", self.from));
        out.push_str(&format!("To: {}\r\n", self.to));
        out.push_str(&format!("Subject: {}\r\n", self.subject));
        if let Some(d) = &self.date {
            out.push_str(&format!("Date: {d}\r\n"));
        }
        if let Some(m) = &self.message_id {
            out.push_str(&format!("Message-ID: <{m}>\r\n"));
        }
        if let Some(p) = &self.in_reply_to {
            out.push_str(&format!("In-Reply-To: <{p}>\r\n"));
        }
        if !self.references.is_empty() {
            let refs: Vec<String> = self.references.iter().map(|r| format!("<{r}>")).collect();
            out.push_str(&format!("References: {}\r\n", refs.join(" ")));
        }
        out.push_str("Content-Type: text/plain; charset=utf-8\r\n\r\n");
        out.push_str(&self.body.replace('\n', "\r\n"));
        out.into_bytes()
    }
}

/// A reply as a typical client writes it: top-posted text, an attribution
/// line, the original quoted below, and a signature.
pub fn compliant_reply(
    from: &str,
    reply_to: &str,
    subject: &str,
    parent_id: &str,
    quoted: &str,
    text: &str,
) -> Vec<u8> {
    let mut body = format!("{text}\n\nOn Mon, 5 Jan 2026 at 09:00, someone wrote:\n");
    for line in quoted.lines() {
        body.push_str(&format!("> {line}\n"));
    }
    RawMail {
        from: from.to_string(),
        to: reply_to.to_string(),
        subject: format!("Re: {subject}"),
        message_id: Some(format!("reply.{}@client.example", parent_id.replace('@', "."))),
        in_reply_to: Some(parent_id.to_string()),
        references: vec![parent_id.to_string()],
        date: Some("Mon, 5 Jan 2026 10:00:00 +0000".to_string()),
        body,
    }
    .to_bytes()
}

/// mboxrd: a separator line per message, `From ` body lines escaped.
pub fn mbox(messages: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::new();
    for m in messages {
        out.extend_from_slice(b"From archive@example.org Mon Jan  5 09:00:00 2026\n");
        let text = String::from_utf8_lossy(m).replace("\r\n", "\n");
        for line in text.split_inclusive('\n') {
            if line.trim_start_matches('>').starts_with("From ") {
                out.push(b'>');
            }
            out.extend_from_slice(line.as_bytes());
        }
        if !text.ends_with('\n') {
            out.push(b'\n');
        }
        out.push(b'\n');
    }
    out
}

pub struct ThreadedArchive {
    pub mbox: Vec<u8>,
    /// `(message id, in-reply-to)` in archive order.
    pub headers: Vec<(String, Option<String>)>,
    pub senders: Vec<String>,
}

/// `total` messages spread over `threads` threads. Replies pick a random
/// earlier message of their thread; archive order is shuffled so some
/// replies precede their parents.
pub fn threaded_archive(threads: usize, total: usize, seed: u64) -> ThreadedArchive {
    assert!(threads >= 1 && total >= threads);
    let mut rng = crate::rng(seed);
    let senders: Vec<String> = (0..6).map(|i| format!("list{i}@lists.example.org")).collect();
    let mut per_thread: Vec<Vec<usize>> = vec![Vec::new(); threads];
    let mut messages: Vec<(String, Option<String>, usize)> = Vec::new();
    for n in 0..total {
        let thread = if n < threads { n } else { rng.gen_range(0..threads) };
        let id = format!("m{n}.t{thread}@lists.example.org");
        let parent = per_thread[thread].choose(&mut rng).map(|&p| messages[p].0.clone());
        per_thread[thread].push(n);
        messages.push((id, parent, thread));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let mut raw = Vec::new();
    let mut headers = Vec::new();
    for &n in &order {
        let (id, parent, thread) = &messages[n];
        let from = &senders[n % senders.len()];
        let subject = match parent {
            None => format!("Thread {thread}"),
            Some(_) => format!("Re: Thread {thread}"),
        };
        let mail = RawMail {
            from: format!("Poster {} <{from}>", n % senders.len()),
            to: "list@lists.example.org".into(),
            subject,
            message_id: Some(id.clone()),
            in_reply_to: parent.clone(),
            references: parent.iter().cloned().collect(),
            date: Some(format!("Mon, 5 Jan 2026 {:02}:{:02}:00 +0000", 8 + n / 60, n % 60)),
            body: format!("Message {n} in thread {thread}.\nFrom the archive.\n"),
        };
        raw.push(mail.to_bytes());
        headers.push((id.clone(), parent.clone()));
    }
    ThreadedArchive {
        mbox: mbox(&raw),
        headers,
        senders,
    }
}
