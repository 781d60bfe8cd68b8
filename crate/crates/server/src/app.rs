use std::path::Path;
use std::sync::Arc;

use chrono::Duration;
use deme_core::{Deme, Settings, Storage};
use deme_mail::token::TokenKey;
use deme_mail::{Gateway, MailConfig};

use crate::accounts::{AccountRecord, Accounts, DEFAULT_SESSION_LIFETIME};
use crate::clock::Clock;
use crate::mailer::{Mailer, SpoolMailer};
use crate::store::RedbStore;

#[derive(Debug, Clone)]
pub struct AppConfig {
    pub mail_domain: String,
    /// Public base URL, used in notification links.
    pub web_base: String,
    pub mail_secret: Vec<u8>,
    pub session_lifetime: Duration,
    /// Shared secret the local MTA presents when piping replies in. Without
    /// one, inbound mail over HTTP is refused.
    pub delivery_key: Option<String>,
    /// Largest accepted document upload, in bytes.
    pub upload_cap: usize,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            mail_domain: "localhost".into(),
            web_base: "http://localhost:8080".into(),
            mail_secret: Vec::new(),
            session_lifetime: DEFAULT_SESSION_LIFETIME,
            delivery_key: None,
            upload_cap: deme_core::document::DEFAULT_UPLOAD_CAP,
        }
    }
}

pub struct App {
    pub deme: Arc<Deme>,
    pub gateway: Gateway,
    pub accounts: Accounts,
    pub clock: Arc<dyn Clock>,
    pub mailer: Arc<dyn Mailer>,
    pub delivery_key: Option<String>,
    pub upload_cap: usize,
}

fn gateway(deme: &Arc<Deme>, config: &AppConfig) -> Gateway {
    let mail = MailConfig::new(
        &config.mail_domain,
        &config.web_base,
        TokenKey::new(config.mail_secret.clone()),
    );
    Gateway::new(deme.clone(), mail)
}

impl App {
    /// Opens or creates the store under `data_dir`; outbound mail is spooled
    /// to `data_dir/outbox`.
    pub fn open(data_dir: &Path, config: &AppConfig, clock: Arc<dyn Clock>) -> anyhow::Result<App> {
        std::fs::create_dir_all(data_dir)?;
        let store = Arc::new(RedbStore::open(&data_dir.join("deme.redb"))?);
        let loaded = store.load()?;
        let storage: Arc<dyn Storage> = store.clone();
        let deme = Arc::new(Deme::restore(
            Settings {
                upload_cap: config.upload_cap,
            },
            Some(storage),
            loaded.directory,
            loaded.spaces,
        ));
        let accounts = Accounts::new(loaded.accounts, config.session_lifetime, Some(store));
        let mailer = Arc::new(SpoolMailer::new(data_dir.join("outbox"))?);
        Ok(App {
            gateway: gateway(&deme, config),
            deme,
            accounts,
            clock,
            mailer,
            delivery_key: config.delivery_key.clone(),
            upload_cap: config.upload_cap,
        })
    }

    /// An unpersisted instance with cheap password hashing, for tests.
    pub fn ephemeral(config: &AppConfig, clock: Arc<dyn Clock>, mailer: Arc<dyn Mailer>) -> App {
        let deme = Arc::new(Deme::new(Settings {
            upload_cap: config.upload_cap,
        }));
        App {
            gateway: gateway(&deme, config),
            deme,
            accounts: Accounts::fast(AccountRecord::default(), config.session_lifetime),
            clock,
            mailer,
            delivery_key: config.delivery_key.clone(),
            upload_cap: config.upload_cap,
        }
    }
}
