use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use deme_server::accounts::MIN_PASSWORD_CHARS;
use deme_server::clock::{Clock, SystemClock};
use deme_server::{router, App, AppConfig};
use rand::RngCore;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "deme", version, about = "Group deliberation server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve(Serve),
    /// Register a user. The first user on an instance becomes its operator.
    AddUser {
        #[command(flatten)]
        data: DataDir,
        #[arg(long)]
        name: String,
        #[arg(long)]
        email: String,
        /// Read from DEME_PASSWORD when not given.
        #[arg(long, env = "DEME_PASSWORD", hide_env_values = true)]
        password: String,
    },
    /// Set a user's password, revoking their sessions.
    SetPassword {
        #[command(flatten)]
        data: DataDir,
        #[arg(long)]
        email: String,
        #[arg(long, env = "DEME_PASSWORD", hide_env_values = true)]
        password: String,
    },
}

#[derive(Args)]
struct DataDir {
    #[arg(long, env = "DEME_DATA_DIR", default_value = "deme-data")]
    data_dir: PathBuf,
}

#[derive(Args)]
struct Serve {
    #[command(flatten)]
    data: DataDir,
    #[arg(long, env = "DEME_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Domain of the reply addresses, as in `deme+<token>@<domain>`.
    #[arg(long, env = "DEME_MAIL_DOMAIN", default_value = "localhost")]
    mail_domain: String,
    /// Public base URL used in notification links.
    #[arg(long, env = "DEME_WEB_BASE", default_value = "http://localhost:8080")]
    web_base: String,
    /// Reply-token key: a file path, or the key itself. Generated and kept in
    /// the data directory when absent.
    #[arg(long, env = "DEME_MAIL_SECRET", hide_env_values = true)]
    mail_secret: Option<String>,
    #[arg(long, env = "DEME_SESSION_LIFETIME", default_value = "14days", value_parser = humantime::parse_duration)]
    session_lifetime: Duration,
    /// Secret the MTA presents on /mail/inbound. Inbound mail over HTTP is
    /// refused without one.
    #[arg(long, env = "DEME_DELIVERY_KEY", hide_env_values = true)]
    delivery_key: Option<String>,
    /// Largest accepted document upload, in bytes.
    #[arg(long, env = "DEME_UPLOAD_CAP", default_value_t = deme_core::document::DEFAULT_UPLOAD_CAP)]
    upload_cap: usize,
}

fn mail_secret(data_dir: &Path, given: Option<&str>) -> anyhow::Result<Vec<u8>> {
    if let Some(given) = given {
        let path = Path::new(given);
        return Ok(if path.is_file() {
            std::fs::read(path).with_context(|| format!("reading {}", path.display()))?
        } else {
            given.as_bytes().to_vec()
        });
    }
    let kept = data_dir.join("mail-secret");
    if let Ok(key) = std::fs::read(&kept) {
        return Ok(key);
    }
    let mut key = vec![0u8; 32];
    rand::thread_rng().fill_bytes(&mut key);
    std::fs::create_dir_all(data_dir)?;
    std::fs::write(&kept, &key).with_context(|| format!("writing {}", kept.display()))?;
    tracing::info!("generated a reply-token key in {}", kept.display());
    Ok(key)
}

fn open(data: &DataDir, config: &AppConfig) -> anyhow::Result<App> {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    App::open(&data.data_dir, config, clock)
}

async fn serve(args: Serve) -> anyhow::Result<()> {
    let config = AppConfig {
        mail_domain: args.mail_domain,
        web_base: args.web_base,
        mail_secret: mail_secret(&args.data.data_dir, args.mail_secret.as_deref())?,
        session_lifetime: chrono::Duration::from_std(args.session_lifetime)?,
        delivery_key: args.delivery_key,
        upload_cap: args.upload_cap,
    };
    if config.mail_secret.len() < 16 {
        bail!("the mail secret must be at least 16 bytes");
    }
    let app = Arc::new(open(&args.data, &config)?);
    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    match Cli::parse().command {
        Command::Serve(args) => serve(args).await,
        Command::AddUser {
            data,
            name,
            email,
            password,
        } => {
            if password.chars().count() < MIN_PASSWORD_CHARS {
                bail!("passwords need at least {MIN_PASSWORD_CHARS} characters");
            }
            let app = open(&data, &AppConfig::default())?;
            let member = app.deme.register_user(&name, Some(&email))?;
            app.accounts.set_password(member.user_id, &password)?;
            println!("{}", member.user_id);
            Ok(())
        }
        Command::SetPassword { data, email, password } => {
            let app = open(&data, &AppConfig::default())?;
            let member = app
                .deme
                .user_by_email(&email)
                .with_context(|| format!("no user with {email}"))?;
            app.accounts.set_password(member.user_id, &password)?;
            Ok(())
        }
    }
}
