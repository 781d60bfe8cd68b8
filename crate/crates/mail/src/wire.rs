//! The subset of RFC 5322 and MIME the gateway reads and writes.
//!
//! Parsing is lenient where real mail is sloppy (bare LF line endings,
//! unknown charsets, stray `=` in quoted-printable) and strict only about the
//! header block, which must be present and well formed.

use std::collections::BTreeMap;

use base64::engine::general_purpose::{GeneralPurpose, GeneralPurposeConfig, STANDARD};
use base64::engine::DecodePaddingMode;
use base64::Engine;
use chrono::{DateTime, Utc};

const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("malformed message: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub name: String,
    /// Unfolded, still encoded.
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub headers: Vec<Header>,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mailbox {
    pub name: Option<String>,
    pub address: String,
}

impl Mailbox {
    pub fn new(name: Option<&str>, address: &str) -> Self {
        Mailbox {
            name: name.map(str::to_string),
            address: address.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentType {
    /// Lower-cased `type/subtype`.
    pub mime: String,
    pub params: BTreeMap<String, String>,
}

impl ContentType {
    pub fn parse(value: &str) -> ContentType {
        let mut parts = split_params(value).into_iter();
        let mime = parts
            .next()
            .map(|s| s.trim().to_ascii_lowercase())
            .filter(|s| s.contains('/'))
            .unwrap_or_else(|| "text/plain".to_string());
        let mut params = BTreeMap::new();
        for p in parts {
            if let Some((k, v)) = p.split_once('=') {
                params.insert(k.trim().to_ascii_lowercase(), unquote(v.trim()));
            }
        }
        ContentType { mime, params }
    }

    pub fn param(&self, name: &str) -> Option<&str> {
        self.params.get(name).map(String::as_str)
    }

    pub fn is_multipart(&self) -> bool {
        self.mime.starts_with("multipart/")
    }
}

impl Default for ContentType {
    fn default() -> Self {
        ContentType {
            mime: "text/plain".to_string(),
            params: BTreeMap::new(),
        }
    }
}

/// Splits on `;` outside quoted strings.
fn split_params(value: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut escaped = false;
    for c in value.chars() {
        if escaped {
            cur.push(c);
            escaped = false;
            continue;
        }
        match c {
            '\\' if quoted => {
                cur.push(c);
                escaped = true;
            }
            '"' => {
                quoted = !quoted;
                cur.push(c);
            }
            ';' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

fn unquote(s: &str) -> String {
    let Some(inner) = s.strip_prefix('"').and_then(|s| s.strip_suffix('"')) else {
        return s.to_string();
    };
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn normalize_newlines(raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == b'\r' && raw.get(i + 1) == Some(&b'\n') {
            i += 1;
            continue;
        }
        out.push(raw[i]);
        i += 1;
    }
    out
}

fn valid_field_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| (33..=126).contains(&b) && b != b':')
}

impl Message {
    pub fn parse(raw: &[u8]) -> Result<Message, WireError> {
        let text = normalize_newlines(raw);
        let (head, body) = if text.first() == Some(&b'\n') {
            (&text[..0], &text[1..])
        } else {
            match text.windows(2).position(|w| w == b"\n\n") {
                Some(i) => (&text[..i], &text[i + 2..]),
                None => (&text[..], &text[text.len()..]),
            }
        };
        let head = String::from_utf8_lossy(head);
        let mut headers: Vec<Header> = Vec::new();
        for line in head.split('\n') {
            if line.starts_with([' ', '\t']) {
                match headers.last_mut() {
                    Some(h) => h.value.push_str(line),
                    None => return Err(WireError::Malformed("continuation line before any header".into())),
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let Some((name, value)) = line.split_once(':') else {
                return Err(WireError::Malformed(format!("not a header line: {}", preview(line))));
            };
            if !valid_field_name(name) {
                return Err(WireError::Malformed(format!("bad header name: {}", preview(name))));
            }
            headers.push(Header {
                name: name.to_string(),
                value: value.trim_start().to_string(),
            });
        }
        if headers.is_empty() {
            return Err(WireError::Malformed("no header block".into()));
        }
        Ok(Message {
            headers,
            body: body.to_vec(),
        })
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|h| h.name.eq_ignore_ascii_case(name))
            .map(|h| h.value.as_str())
    }

    pub fn headers_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.headers
            .iter()
            .filter(move |h| h.name.eq_ignore_ascii_case(name))
            .map(|h| h.value.as_str())
    }

    pub fn subject(&self) -> Option<String> {
        self.header("Subject").map(|s| decode_words(s.trim()))
    }

    pub fn message_id(&self) -> Option<String> {
        self.header("Message-ID")
            .and_then(|v| parse_msg_ids(v).into_iter().next())
    }

    pub fn in_reply_to(&self) -> Option<Vec<String>> {
        self.header("In-Reply-To").map(parse_msg_ids)
    }

    pub fn references(&self) -> Vec<String> {
        self.headers_named("References").flat_map(parse_msg_ids).collect()
    }

    pub fn from(&self) -> Option<Mailbox> {
        self.header("From").and_then(|v| parse_addresses(v).into_iter().next())
    }

    pub fn addresses(&self, header: &str) -> Vec<Mailbox> {
        self.headers_named(header).flat_map(parse_addresses).collect()
    }

    pub fn date(&self) -> Option<DateTime<Utc>> {
        self.header("Date").and_then(parse_date)
    }

    pub fn content_type(&self) -> ContentType {
        self.header("Content-Type").map(ContentType::parse).unwrap_or_default()
    }

    /// The body with its transfer encoding removed.
    pub fn decoded_body(&self) -> Vec<u8> {
        let encoding = self
            .header("Content-Transfer-Encoding")
            .map(|e| e.trim().to_ascii_lowercase())
            .unwrap_or_default();
        match encoding.as_str() {
            "base64" => decode_base64(&self.body),
            "quoted-printable" => decode_qp(&self.body),
            _ => self.body.clone(),
        }
    }

    /// The first `text/plain` part that is not an attachment.
    pub fn text_body(&self) -> Option<String> {
        self.find_text(0)
    }

    fn find_text(&self, depth: usize) -> Option<String> {
        if depth > MAX_DEPTH {
            return None;
        }
        let ct = self.content_type();
        if ct.is_multipart() {
            let boundary = ct.param("boundary")?;
            return split_multipart(&self.body, boundary)
                .into_iter()
                .filter_map(Message::parse_part)
                .find_map(|part| part.find_text(depth + 1));
        }
        if ct.mime != "text/plain" {
            return None;
        }
        let attachment = self
            .header("Content-Disposition")
            .is_some_and(|d| d.trim().to_ascii_lowercase().starts_with("attachment"));
        if attachment {
            return None;
        }
        let charset = ct.param("charset").unwrap_or("us-ascii");
        Some(decode_charset(&self.decoded_body(), charset))
    }

    /// MIME parts may omit every header, which implies `text/plain`.
    fn parse_part(raw: &[u8]) -> Option<Message> {
        let starts_blank = raw.first() == Some(&b'\n') || raw.starts_with(b"\r\n");
        if starts_blank {
            let body = if raw.starts_with(b"\r\n") { &raw[2..] } else { &raw[1..] };
            return Some(Message {
                headers: Vec::new(),
                body: normalize_newlines(body),
            });
        }
        Message::parse(raw).ok()
    }
}

fn preview(s: &str) -> String {
    s.chars().take(40).collect()
}

/// Part bodies between boundary lines, without the line break before each
/// delimiter.
fn split_multipart<'a>(body: &'a [u8], boundary: &str) -> Vec<&'a [u8]> {
    let delim = format!("--{boundary}");
    let mut parts = Vec::new();
    let mut start: Option<usize> = None;
    let mut pos = 0;
    while pos <= body.len() {
        let end = body[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(body.len(), |i| pos + i);
        let line = trim_end_ws(&body[pos..end]);
        if line.starts_with(delim.as_bytes()) {
            let rest = &line[delim.len()..];
            let closing = rest == b"--";
            if rest.is_empty() || closing {
                if let Some(s) = start {
                    let stop = pos.saturating_sub(1).max(s);
                    parts.push(&body[s..stop]);
                }
                if closing {
                    return parts;
                }
                start = Some((end + 1).min(body.len()));
            }
        }
        if end == body.len() {
            break;
        }
        pos = end + 1;
    }
    // unterminated: keep what was opened
    if let Some(s) = start {
        parts.push(&body[s..]);
    }
    parts
}

fn trim_end_ws(mut b: &[u8]) -> &[u8] {
    while let [rest @ .., last] = b {
        if matches!(last, b' ' | b'\t' | b'\r') {
            b = rest;
        } else {
            break;
        }
    }
    b
}

pub fn decode_base64(data: &[u8]) -> Vec<u8> {
    const LENIENT: GeneralPurpose = GeneralPurpose::new(
        &base64::alphabet::STANDARD,
        GeneralPurposeConfig::new()
            .with_decode_padding_mode(DecodePaddingMode::Indifferent)
            .with_decode_allow_trailing_bits(true),
    );
    let clean: Vec<u8> = data
        .iter()
        .copied()
        .filter(|b| b.is_ascii_alphanumeric() || matches!(b, b'+' | b'/' | b'='))
        .collect();
    let unpadded: Vec<u8> = clean.iter().copied().take_while(|&b| b != b'=').collect();
    LENIENT.decode(&unpadded).unwrap_or_else(|_| data.to_vec())
}

fn hex_value(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'A'..=b'F' => Some(b - b'A' + 10),
        b'a'..=b'f' => Some(b - b'a' + 10),
        _ => None,
    }
}

pub fn decode_qp(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    let lines: Vec<&[u8]> = data.split(|&b| b == b'\n').collect();
    for (n, line) in lines.iter().enumerate() {
        let line = trim_end_ws(line);
        let (line, soft) = match line.strip_suffix(b"=") {
            Some(l) => (l, true),
            None => (line, false),
        };
        let mut i = 0;
        while i < line.len() {
            if line[i] == b'=' {
                if let (Some(h), Some(l)) = (
                    line.get(i + 1).copied().and_then(hex_value),
                    line.get(i + 2).copied().and_then(hex_value),
                ) {
                    out.push(h << 4 | l);
                    i += 3;
                    continue;
                }
            }
            out.push(line[i]);
            i += 1;
        }
        if !soft && n + 1 < lines.len() {
            out.push(b'\n');
        }
    }
    out
}

const CP1252_HIGH: [char; 32] = [
    '\u{20AC}', '\u{81}', '\u{201A}', '\u{0192}', '\u{201E}', '\u{2026}', '\u{2020}', '\u{2021}', '\u{02C6}',
    '\u{2030}', '\u{0160}', '\u{2039}', '\u{0152}', '\u{8D}', '\u{017D}', '\u{8F}', '\u{90}', '\u{2018}', '\u{2019}',
    '\u{201C}', '\u{201D}', '\u{2022}', '\u{2013}', '\u{2014}', '\u{02DC}', '\u{2122}', '\u{0161}', '\u{203A}',
    '\u{0153}', '\u{9D}', '\u{017E}', '\u{0178}',
];

pub fn decode_charset(bytes: &[u8], charset: &str) -> String {
    let charset = charset.trim().to_ascii_lowercase();
    match charset.as_str() {
        "iso-8859-1" | "iso8859-1" | "latin1" | "latin-1" | "l1" => bytes.iter().map(|&b| b as char).collect(),
        "windows-1252" | "cp1252" | "iso-8859-15" => bytes
            .iter()
            .map(|&b| match b {
                0x80..=0x9f => CP1252_HIGH[(b - 0x80) as usize],
                _ => b as char,
            })
            .collect(),
        _ => String::from_utf8_lossy(bytes).into_owned(),
    }
}

/// Decodes RFC 2047 encoded words. Whitespace between two adjacent encoded
/// words is dropped; anything that does not parse is kept literally.
pub fn decode_words(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    let mut pending_ws: Option<&str> = None;
    let mut last_was_word = false;
    while !rest.is_empty() {
        if let Some((decoded, consumed)) = rest.strip_prefix("=?").and_then(encoded_word) {
            if !last_was_word {
                if let Some(ws) = pending_ws.take() {
                    out.push_str(ws);
                }
            }
            pending_ws = None;
            out.push_str(&decoded);
            rest = &rest[2 + consumed..];
            last_was_word = true;
            continue;
        }
        let ws_len = rest.len() - rest.trim_start_matches([' ', '\t']).len();
        if ws_len > 0 {
            if let Some(ws) = pending_ws.take() {
                out.push_str(ws);
            }
            pending_ws = Some(&rest[..ws_len]);
            rest = &rest[ws_len..];
            continue;
        }
        if let Some(ws) = pending_ws.take() {
            out.push_str(ws);
        }
        let c = rest.chars().next().expect("non-empty");
        out.push(c);
        rest = &rest[c.len_utf8()..];
        last_was_word = false;
    }
    if let Some(ws) = pending_ws {
        out.push_str(ws);
    }
    out
}

/// Parses `charset?enc?text?=` after the opening `=?`. Returns the decoded
/// text and the number of bytes consumed.
fn encoded_word(s: &str) -> Option<(String, usize)> {
    let (charset_raw, rest) = s.split_once('?')?;
    let (encoding, rest) = rest.split_once('?')?;
    let end = rest.find("?=")?;
    let text = &rest[..end];
    if charset_raw.is_empty() || text.contains([' ', '\t']) {
        return None;
    }
    let charset = charset_raw.split('*').next().unwrap_or(charset_raw);
    let bytes = match encoding {
        "B" | "b" => decode_base64(text.as_bytes()),
        "Q" | "q" => {
            let b = text.as_bytes();
            let mut out = Vec::with_capacity(b.len());
            let mut i = 0;
            while i < b.len() {
                let hex = (b[i] == b'=')
                    .then(|| Some(hex_value(*b.get(i + 1)?)? << 4 | hex_value(*b.get(i + 2)?)?))
                    .flatten();
                match (b[i], hex) {
                    (_, Some(byte)) => {
                        out.push(byte);
                        i += 3;
                        continue;
                    }
                    (b'_', None) => out.push(b' '),
                    (c, None) => out.push(c),
                }
                i += 1;
            }
            out
        }
        _ => return None,
    };
    let consumed = charset_raw.len() + 1 + encoding.len() + 1 + end + 2;
    Some((decode_charset(&bytes, charset), consumed))
}

/// Extracts `<id>` tokens, returning them without the angle brackets. A bare
/// token is accepted when no brackets are present.
pub fn parse_msg_ids(value: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = value;
    while let Some(open) = rest.find('<') {
        let Some(close) = rest[open..].find('>') else { break };
        let id = rest[open + 1..open + close].trim();
        if !id.is_empty() {
            out.push(id.to_string());
        }
        rest = &rest[open + close + 1..];
    }
    if out.is_empty() {
        let bare = value.trim();
        if !bare.is_empty() && !bare.contains(char::is_whitespace) {
            out.push(bare.to_string());
        }
    }
    out
}

/// Parses an address list, including group syntax and old-style
/// `addr (Name)` comments. Display names are decoded.
pub fn parse_addresses(value: &str) -> Vec<Mailbox> {
    let mut pieces = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut escaped = false;
    let mut comment = 0usize;
    let mut angle = false;
    for c in value.chars() {
        if escaped {
            cur.push(c);
            escaped = false;
            continue;
        }
        match c {
            '\\' if quoted || comment > 0 => {
                cur.push(c);
                escaped = true;
            }
            '"' if comment == 0 => {
                quoted = !quoted;
                cur.push(c);
            }
            '(' if !quoted => {
                comment += 1;
                cur.push(c);
            }
            ')' if !quoted && comment > 0 => {
                comment -= 1;
                cur.push(c);
            }
            '<' if !quoted && comment == 0 => {
                angle = true;
                cur.push(c);
            }
            '>' if !quoted && comment == 0 => {
                angle = false;
                cur.push(c);
            }
            ',' | ';' if !quoted && comment == 0 && !angle => pieces.push(std::mem::take(&mut cur)),
            // group display name
            ':' if !quoted && comment == 0 && !angle => cur.clear(),
            _ => cur.push(c),
        }
    }
    pieces.push(cur);
    pieces.iter().filter_map(|p| parse_mailbox(p)).collect()
}

fn parse_mailbox(piece: &str) -> Option<Mailbox> {
    let piece = piece.trim();
    if piece.is_empty() {
        return None;
    }
    if let (Some(open), Some(close)) = (piece.rfind('<'), piece.rfind('>')) {
        if open < close {
            let address = piece[open + 1..close].trim().to_string();
            let name = strip_comments(&piece[..open]).0;
            let name = decode_words(unquote(name.trim()).trim());
            return (!address.is_empty()).then(|| Mailbox {
                name: (!name.is_empty()).then_some(name),
                address,
            });
        }
    }
    let (address, comment) = strip_comments(piece);
    let address = address.trim().to_string();
    let name = comment.map(|c| decode_words(c.trim())).filter(|c| !c.is_empty());
    (!address.is_empty()).then_some(Mailbox { name, address })
}

/// Removes parenthesized comments, returning the rest and the first comment.
fn strip_comments(s: &str) -> (String, Option<String>) {
    let mut out = String::with_capacity(s.len());
    let mut first: Option<String> = None;
    let mut current = String::new();
    let mut depth = 0usize;
    let mut quoted = false;
    for c in s.chars() {
        match c {
            '"' if depth == 0 => {
                quoted = !quoted;
                out.push(c);
            }
            '(' if !quoted => {
                if depth > 0 {
                    current.push(c);
                }
                depth += 1;
            }
            ')' if !quoted && depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    if first.is_none() {
                        first = Some(std::mem::take(&mut current));
                    }
                    current.clear();
                } else {
                    current.push(c);
                }
            }
            _ if depth > 0 => current.push(c),
            _ => out.push(c),
        }
    }
    (out, first)
}

pub fn parse_date(value: &str) -> Option<DateTime<Utc>> {
    let (clean, _) = strip_comments(value);
    let clean = clean.split_whitespace().collect::<Vec<_>>().join(" ");
    DateTime::parse_from_rfc2822(&clean).ok().map(|d| d.with_timezone(&Utc))
}

// writing

/// A plain-text message to send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outbound {
    pub from: Mailbox,
    pub to: Vec<Mailbox>,
    pub reply_to: Option<Mailbox>,
    pub subject: String,
    /// Without angle brackets.
    pub message_id: String,
    pub in_reply_to: Option<String>,
    pub references: Vec<String>,
    pub date: DateTime<Utc>,
    pub body: String,
    pub extra_headers: Vec<(String, String)>,
}

impl Outbound {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        let mut put = |name: &str, value: &str| out.push_str(&fold(name, value));
        put("Date", &self.date.to_rfc2822());
        put("From", &format_mailbox(&self.from));
        let to: Vec<String> = self.to.iter().map(format_mailbox).collect();
        put("To", &to.join(", "));
        if let Some(r) = &self.reply_to {
            put("Reply-To", &format_mailbox(r));
        }
        put("Subject", &encode_phrase_if_needed(&self.subject));
        put("Message-ID", &format!("<{}>", self.message_id));
        if let Some(p) = &self.in_reply_to {
            put("In-Reply-To", &format!("<{p}>"));
        }
        if !self.references.is_empty() {
            let refs: Vec<String> = self.references.iter().map(|r| format!("<{r}>")).collect();
            put("References", &refs.join(" "));
        }
        for (name, value) in &self.extra_headers {
            put(name, &encode_phrase_if_needed(value));
        }
        put("MIME-Version", "1.0");
        put("Content-Type", "text/plain; charset=utf-8");
        let plain = self.body.is_ascii() && self.body.lines().all(|l| l.len() <= 76 && !l.ends_with([' ', '\t']));
        let body = if plain {
            put("Content-Transfer-Encoding", "7bit");
            self.body.replace('\n', "\r\n")
        } else {
            put("Content-Transfer-Encoding", "quoted-printable");
            encode_qp(&self.body)
        };
        out.push_str("\r\n");
        out.push_str(&body);
        if !body.ends_with("\r\n") {
            out.push_str("\r\n");
        }
        out.into_bytes()
    }
}

fn is_atext(c: char) -> bool {
    c.is_ascii_alphanumeric() || "!#$%&'*+-/=?^_`{|}~ ".contains(c)
}

pub fn format_mailbox(m: &Mailbox) -> String {
    match m.name.as_deref().filter(|n| !n.is_empty()) {
        None => m.address.clone(),
        Some(name) if !name.is_ascii() => format!("{} <{}>", encode_words(name), m.address),
        Some(name) if name.chars().all(is_atext) => format!("{name} <{}>", m.address),
        Some(name) => {
            let escaped = name.replace('\\', "\\\\").replace('"', "\\\"");
            format!("\"{escaped}\" <{}>", m.address)
        }
    }
}

fn encode_phrase_if_needed(s: &str) -> String {
    let looks_encoded = s.contains("=?") && s.contains("?=");
    if s.is_ascii() && !looks_encoded && !s.contains(['\r', '\n']) {
        s.to_string()
    } else {
        encode_words(s)
    }
}

/// Base64 encoded words of at most 40 input bytes each, split on character
/// boundaries.
pub fn encode_words(s: &str) -> String {
    let mut words = Vec::new();
    let mut chunk = String::new();
    for c in s.chars() {
        if chunk.len() + c.len_utf8() > 40 {
            words.push(format!("=?utf-8?b?{}?=", STANDARD.encode(&chunk)));
            chunk.clear();
        }
        chunk.push(c);
    }
    if !chunk.is_empty() || words.is_empty() {
        words.push(format!("=?utf-8?b?{}?=", STANDARD.encode(&chunk)));
    }
    words.join(" ")
}

/// Formats one header field, folding at spaces to stay near 78 columns.
fn fold(name: &str, value: &str) -> String {
    let mut out = format!("{name}:");
    let mut line_len = out.len();
    for word in value.split(' ') {
        if line_len + 1 + word.len() > 78 && line_len > name.len() + 1 {
            out.push_str("\r\n");
            line_len = 0;
        }
        out.push(' ');
        out.push_str(word);
        line_len += 1 + word.len();
    }
    out.push_str("\r\n");
    out
}

pub fn encode_qp(body: &str) -> String {
    let mut out = String::with_capacity(body.len() + body.len() / 8);
    let lines: Vec<&str> = body.split('\n').collect();
    for (n, line) in lines.iter().enumerate() {
        let bytes = line.as_bytes();
        let mut col = 0;
        for (i, &b) in bytes.iter().enumerate() {
            let last = i + 1 == bytes.len();
            let literal = (33..=126).contains(&b) && b != b'=' || (matches!(b, b' ' | b'\t') && !last);
            let piece = if literal {
                (b as char).to_string()
            } else {
                format!("={b:02X}")
            };
            if col + piece.len() > 75 {
                out.push_str("=\r\n");
                col = 0;
            }
            out.push_str(&piece);
            col += piece.len();
        }
        if n + 1 < lines.len() {
            out.push_str("\r\n");
        }
    }
    out
}
