//! mbox archives in the mboxrd flavour: a `From ` separator line opens each
//! message and body lines matching `>*From ` carry one extra `>`.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed archive: {0}")]
pub struct MboxError(pub String);

fn unescape(line: &[u8]) -> &[u8] {
    let quotes = line.iter().take_while(|&&b| b == b'>').count();
    if quotes > 0 && line[quotes..].starts_with(b"From ") {
        &line[1..]
    } else {
        line
    }
}

/// Splits an archive into raw messages. An empty archive has no messages;
/// anything else must start with a separator line.
pub fn split(archive: &[u8]) -> Result<Vec<Vec<u8>>, MboxError> {
    let mut messages = Vec::new();
    if archive.iter().all(|b| b.is_ascii_whitespace()) {
        return Ok(messages);
    }
    if !archive.starts_with(b"From ") {
        return Err(MboxError("archive does not start with a From line".into()));
    }
    let mut current: Option<Vec<u8>> = None;
    let mut previous_blank = true;
    for raw_line in archive.split_inclusive(|&b| b == b'\n') {
        let content = raw_line.strip_suffix(b"\n").unwrap_or(raw_line);
        let content = content.strip_suffix(b"\r").unwrap_or(content);
        if content.starts_with(b"From ") && (previous_blank || current.is_none()) {
            if let Some(done) = current.take() {
                messages.push(finish(done));
            }
            current = Some(Vec::new());
            previous_blank = false;
            continue;
        }
        let buf = current.as_mut().expect("opened by the first line");
        buf.extend_from_slice(unescape(content));
        buf.push(b'\n');
        previous_blank = content.is_empty();
    }
    if let Some(done) = current {
        messages.push(finish(done));
    }
    Ok(messages)
}

/// Drops the blank line that separates a message from the next separator.
fn finish(mut message: Vec<u8>) -> Vec<u8> {
    if message.ends_with(b"\n\n") {
        message.pop();
    }
    message
}

/// Writes messages as an mboxrd archive.
pub fn join<'a>(messages: impl IntoIterator<Item = &'a [u8]>) -> Vec<u8> {
    let mut out = Vec::new();
    for m in messages {
        out.extend_from_slice(b"From MAILER-DAEMON Thu Jan  1 00:00:00 1970\n");
        for line in m.split_inclusive(|&b| b == b'\n') {
            let content = line.strip_suffix(b"\n").unwrap_or(line);
            let content = content.strip_suffix(b"\r").unwrap_or(content);
            let quotes = content.iter().take_while(|&&b| b == b'>').count();
            if content[quotes..].starts_with(b"From ") {
                out.push(b'>');
            }
            out.extend_from_slice(content);
            out.push(b'\n');
        }
        if !m.ends_with(b"\n") {
            out.push(b'\n');
        }
        out.push(b'\n');
    }
    out
}
