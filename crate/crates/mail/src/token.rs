//! Routing tokens carried in the local-part extension of reply addresses.
//!
//! A token is one kind letter followed by the lowercase, unpadded base32 form
//! of the target id and a truncated HMAC-SHA256 tag. The tag covers the area
//! and the target, so a token cannot be retargeted by editing the id. Decoding
//! is strict: any change to any character fails verification.

use data_encoding::{Encoding, Specification};
use deme_core::{AreaId, CommentId, ItemId};
use hmac::{Hmac, Mac};
use sha2::Sha256;
use std::sync::OnceLock;

const DOMAIN_TAG: &[u8] = b"deme-route-v1";
const TAG_LEN: usize = 9;
const PAYLOAD_LEN: usize = 16 + TAG_LEN;
/// Kind letter plus 40 base32 characters for 25 bytes.
pub const TOKEN_LEN: usize = 1 + PAYLOAD_LEN * 8 / 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteTarget {
    Global,
    Item(ItemId),
    Comment(CommentId),
}

impl RouteTarget {
    fn kind(self) -> u8 {
        match self {
            RouteTarget::Global => b'g',
            RouteTarget::Item(_) => b'i',
            RouteTarget::Comment(_) => b'c',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoutingToken {
    pub area: AreaId,
    pub target: RouteTarget,
}

/// The server secret tokens are keyed with.
#[derive(Clone)]
pub struct TokenKey(Vec<u8>);

impl TokenKey {
    pub fn new(secret: impl Into<Vec<u8>>) -> Self {
        TokenKey(secret.into())
    }
}

impl std::fmt::Debug for TokenKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TokenKey(..)")
    }
}

fn base32() -> &'static Encoding {
    static ENCODING: OnceLock<Encoding> = OnceLock::new();
    ENCODING.get_or_init(|| {
        let mut spec = Specification::new();
        spec.symbols.push_str("abcdefghijklmnopqrstuvwxyz234567");
        spec.encoding().expect("valid base32 specification")
    })
}

fn tag(key: &TokenKey, area: AreaId, kind: u8, id: &[u8; 16]) -> [u8; TAG_LEN] {
    let mut mac = Hmac::<Sha256>::new_from_slice(&key.0).expect("HMAC accepts keys of any length");
    mac.update(DOMAIN_TAG);
    mac.update(area.as_bytes());
    mac.update(&[kind]);
    mac.update(id);
    let full = mac.finalize().into_bytes();
    let mut out = [0u8; TAG_LEN];
    out.copy_from_slice(&full[..TAG_LEN]);
    out
}

fn target_bytes(area: AreaId, target: RouteTarget) -> [u8; 16] {
    match target {
        RouteTarget::Global => *area.as_bytes(),
        RouteTarget::Item(i) => *i.as_bytes(),
        RouteTarget::Comment(c) => *c.as_bytes(),
    }
}

pub fn encode(key: &TokenKey, token: RoutingToken) -> String {
    let kind = token.target.kind();
    let id = target_bytes(token.area, token.target);
    let mut payload = Vec::with_capacity(PAYLOAD_LEN);
    payload.extend_from_slice(&id);
    payload.extend_from_slice(&tag(key, token.area, kind, &id));
    let mut out = String::with_capacity(TOKEN_LEN);
    out.push(kind as char);
    out.push_str(&base32().encode(&payload));
    out
}

/// A token's claimed target before its tag is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnverifiedToken {
    pub target: RouteTarget,
    /// For global tokens the area is the id itself.
    pub area_hint: Option<AreaId>,
    kind: u8,
    id: [u8; 16],
    tag: [u8; TAG_LEN],
}

impl UnverifiedToken {
    /// Checks the tag against the area the target lives in.
    pub fn verify(self, key: &TokenKey, area: AreaId) -> Option<RoutingToken> {
        if let Some(hint) = self.area_hint {
            if hint != area {
                return None;
            }
        }
        let expected = tag(key, area, self.kind, &self.id);
        // constant-time comparison through the MAC API
        let mut mac = Hmac::<Sha256>::new_from_slice(&expected).ok()?;
        mac.update(&self.tag);
        let mut check = Hmac::<Sha256>::new_from_slice(&expected).ok()?;
        check.update(&expected);
        if mac.verify(&check.finalize().into_bytes()).is_err() {
            return None;
        }
        Some(RoutingToken {
            area,
            target: self.target,
        })
    }
}

/// Splits a token into its parts; `None` for anything malformed.
pub fn parse(token: &str) -> Option<UnverifiedToken> {
    if token.len() != TOKEN_LEN || !token.is_ascii() {
        return None;
    }
    let (kind, rest) = token.split_at(1);
    let kind = kind.as_bytes()[0];
    let payload = base32().decode(rest.as_bytes()).ok()?;
    if payload.len() != PAYLOAD_LEN {
        return None;
    }
    let mut id = [0u8; 16];
    id.copy_from_slice(&payload[..16]);
    let mut tag = [0u8; TAG_LEN];
    tag.copy_from_slice(&payload[16..]);
    let uuid = uuid::Uuid::from_bytes(id);
    let (target, area_hint) = match kind {
        b'g' => (RouteTarget::Global, Some(AreaId::from_uuid(uuid))),
        b'i' => (RouteTarget::Item(ItemId::from_uuid(uuid)), None),
        b'c' => (RouteTarget::Comment(CommentId::from_uuid(uuid)), None),
        _ => return None,
    };
    Some(UnverifiedToken {
        target,
        area_hint,
        kind,
        id,
        tag,
    })
}

/// Parses and verifies in one step, resolving the area of item and comment
/// targets through `area_of`.
pub fn decode(
    key: &TokenKey,
    token: &str,
    area_of: impl FnOnce(RouteTarget) -> Option<AreaId>,
) -> Option<RoutingToken> {
    let raw = parse(token)?;
    let area = match raw.area_hint {
        Some(a) => a,
        None => area_of(raw.target)?,
    };
    raw.verify(key, area)
}
