//! Passwords, sessions and login throttling.
//!
//! Session tokens are 32 random bytes; only their SHA-256 digests are kept.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use argon2::password_hash::rand_core::{OsRng, RngCore};
use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::Duration;
use deme_core::{Deme, Timestamp, UserId};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::store::RedbStore;

pub const DEFAULT_SESSION_LIFETIME: Duration = Duration::days(14);
/// Failed logins per identifier and minute before further attempts are refused.
pub const FAILURE_LIMIT: usize = 10;
pub const MIN_PASSWORD_CHARS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AuthError {
    #[error("unknown identifier or wrong password")]
    BadCredentials,
    #[error("too many failed attempts, try again later")]
    RateLimited,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredSession {
    /// Hex SHA-256 of the token.
    pub digest: String,
    pub user_id: UserId,
    pub issued_at: Timestamp,
    pub expires_at: Timestamp,
}

/// The persisted part of the account table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountRecord {
    /// PHC strings.
    pub credentials: BTreeMap<UserId, String>,
    #[serde(default)]
    pub sessions: Vec<StoredSession>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub user_id: UserId,
    pub issued_at: Timestamp,
    pub expires_at: Timestamp,
}

struct State {
    credentials: BTreeMap<UserId, String>,
    sessions: HashMap<String, StoredSession>,
    failures: HashMap<String, VecDeque<Timestamp>>,
}

pub struct Accounts {
    state: Mutex<State>,
    lifetime: Duration,
    hasher: Argon2<'static>,
    /// Verified against when the identifier is unknown, so both failures cost the same.
    decoy: String,
    store: Option<Arc<RedbStore>>,
}

fn digest(token: &str) -> String {
    let d = Sha256::digest(token.as_bytes());
    d.iter().map(|b| format!("{b:02x}")).collect()
}

fn identifier_key(identifier: &str) -> String {
    identifier.trim().to_lowercase()
}

impl Accounts {
    pub fn new(record: AccountRecord, lifetime: Duration, store: Option<Arc<RedbStore>>) -> Self {
        Self::with_hasher(record, lifetime, store, Argon2::default())
    }

    /// Cheap hashing parameters, for tests.
    pub fn fast(record: AccountRecord, lifetime: Duration) -> Self {
        let params = Params::new(256, 1, 1, None).expect("valid argon2 parameters");
        Self::with_hasher(
            record,
            lifetime,
            None,
            Argon2::new(Algorithm::Argon2id, Version::V0x13, params),
        )
    }

    fn with_hasher(
        record: AccountRecord,
        lifetime: Duration,
        store: Option<Arc<RedbStore>>,
        hasher: Argon2<'static>,
    ) -> Self {
        let salt = SaltString::generate(&mut OsRng);
        let decoy = hasher
            .hash_password(b"decoy password", &salt)
            .expect("hashing succeeds")
            .to_string();
        Accounts {
            state: Mutex::new(State {
                credentials: record.credentials,
                sessions: record.sessions.into_iter().map(|s| (s.digest.clone(), s)).collect(),
                failures: HashMap::new(),
            }),
            lifetime,
            hasher,
            decoy,
            store,
        }
    }

    pub fn lifetime(&self) -> Duration {
        self.lifetime
    }

    fn persist(&self, state: &State) -> deme_core::Result<()> {
        let Some(store) = &self.store else {
            return Ok(());
        };
        let record = AccountRecord {
            credentials: state.credentials.clone(),
            sessions: state.sessions.values().cloned().collect(),
        };
        store.save_accounts(&record)
    }

    pub fn has_password(&self, user: UserId) -> bool {
        self.state.lock().credentials.contains_key(&user)
    }

    pub fn set_password(&self, user: UserId, secret: &str) -> deme_core::Result<()> {
        if secret.chars().count() < MIN_PASSWORD_CHARS {
            return Err(deme_core::Error::InvalidSpec(format!(
                "passwords need at least {MIN_PASSWORD_CHARS} characters"
            )));
        }
        let salt = SaltString::generate(&mut OsRng);
        let phc = self
            .hasher
            .hash_password(secret.as_bytes(), &salt)
            .map_err(|e| deme_core::Error::Storage(e.to_string()))?
            .to_string();
        let mut state = self.state.lock();
        state.credentials.insert(user, phc);
        // a new password ends every existing session
        state.sessions.retain(|_, s| s.user_id != user);
        self.persist(&state)
    }

    fn verify(&self, phc: &str, secret: &str) -> bool {
        PasswordHash::new(phc).is_ok_and(|h| self.hasher.verify_password(secret.as_bytes(), &h).is_ok())
    }

    /// Checks an email address and password and opens a session.
    pub fn authenticate(
        &self,
        deme: &Deme,
        identifier: &str,
        secret: &str,
        now: Timestamp,
    ) -> Result<Session, AuthError> {
        let key = identifier_key(identifier);
        let phc = {
            let mut state = self.state.lock();
            let window = state.failures.entry(key.clone()).or_default();
            while window.front().is_some_and(|&t| now - t >= Duration::minutes(1)) {
                window.pop_front();
            }
            if window.len() >= FAILURE_LIMIT {
                return Err(AuthError::RateLimited);
            }
            deme.user_by_email(&key)
                .and_then(|m| state.credentials.get(&m.user_id).map(|p| (m.user_id, p.clone())))
        };
        let user = match &phc {
            Some((user, phc)) if self.verify(phc, secret) => Some(*user),
            Some(_) => None,
            None => {
                self.verify(&self.decoy, secret);
                None
            }
        };
        let mut state = self.state.lock();
        let Some(user) = user else {
            state.failures.entry(key).or_default().push_back(now);
            return Err(AuthError::BadCredentials);
        };
        state.failures.remove(&key);
        let session = self.issue(&mut state, user, now);
        // a session that cannot be stored still works until restart
        if let Err(e) = self.persist(&state) {
            tracing::warn!("could not store session: {e}");
        }
        Ok(session)
    }

    fn issue(&self, state: &mut State, user: UserId, now: Timestamp) -> Session {
        let mut bytes = [0u8; 32];
        OsRng.fill_bytes(&mut bytes);
        let token = URL_SAFE_NO_PAD.encode(bytes);
        let stored = StoredSession {
            digest: digest(&token),
            user_id: user,
            issued_at: now,
            expires_at: now + self.lifetime,
        };
        state.sessions.retain(|_, s| s.expires_at > now);
        state.sessions.insert(stored.digest.clone(), stored.clone());
        Session {
            token,
            user_id: user,
            issued_at: now,
            expires_at: stored.expires_at,
        }
    }

    /// The user a token belongs to, if it is live at `now`.
    pub fn session_user(&self, token: &str, now: Timestamp) -> Option<UserId> {
        let state = self.state.lock();
        state
            .sessions
            .get(&digest(token))
            .filter(|s| now <= s.expires_at)
            .map(|s| s.user_id)
    }

    pub fn revoke(&self, token: &str) -> deme_core::Result<()> {
        let mut state = self.state.lock();
        if state.sessions.remove(&digest(token)).is_some() {
            self.persist(&state)?;
        }
        Ok(())
    }
}
