//! Outbound mail delivery. The server drops finished messages into a spool
//! directory for the local MTA to pick up.

use std::io;
use std::path::PathBuf;

use deme_mail::wire::Outbound;
use parking_lot::Mutex;

pub trait Mailer: Send + Sync {
    fn deliver(&self, message: &Outbound) -> io::Result<()>;
}

pub struct SpoolMailer {
    dir: PathBuf,
}

impl SpoolMailer {
    pub fn new(dir: PathBuf) -> io::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(SpoolMailer { dir })
    }
}

fn file_stem(message_id: &str) -> String {
    message_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

impl Mailer for SpoolMailer {
    fn deliver(&self, message: &Outbound) -> io::Result<()> {
        let recipient = message.to.first().map(|m| m.address.as_str()).unwrap_or("unknown");
        let stem = format!("{}-{}", file_stem(&message.message_id), file_stem(recipient));
        let tmp = self.dir.join(format!(".{stem}.tmp"));
        std::fs::write(&tmp, message.to_bytes())?;
        // the rename makes each message appear whole
        std::fs::rename(&tmp, self.dir.join(format!("{stem}.eml")))
    }
}

/// Keeps messages in memory.
#[derive(Default)]
pub struct MemoryMailer(Mutex<Vec<Outbound>>);

impl MemoryMailer {
    pub fn take(&self) -> Vec<Outbound> {
        std::mem::take(&mut *self.0.lock())
    }
}

impl Mailer for MemoryMailer {
    fn deliver(&self, message: &Outbound) -> io::Result<()> {
        self.0.lock().push(message.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use deme_mail::wire::Mailbox;

    #[test]
    fn spool_writes_one_file_per_recipient() {
        let dir = tempfile::tempdir().unwrap();
        let spool = SpoolMailer::new(dir.path().join("outbox")).unwrap();
        let mut message = Outbound {
            from: Mailbox::new(None, "deme+g@example.org"),
            to: vec![Mailbox::new(None, "a@example.org")],
            reply_to: None,
            subject: "Hello".into(),
            message_id: "comment.1@example.org".into(),
            in_reply_to: None,
            references: Vec::new(),
            date: "2026-03-01T12:00:00Z".parse().unwrap(),
            body: "Hi.\n".into(),
            extra_headers: Vec::new(),
        };
        spool.deliver(&message).unwrap();
        message.to = vec![Mailbox::new(None, "b@example.org")];
        spool.deliver(&message).unwrap();
        let mut names: Vec<String> = std::fs::read_dir(dir.path().join("outbox"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(
            names,
            [
                "comment.1_example.org-a_example.org.eml",
                "comment.1_example.org-b_example.org.eml"
            ]
        );
    }
}
