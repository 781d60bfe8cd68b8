#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use deme_core::UserId;
use deme_server::clock::ManualClock;
use deme_server::mailer::MemoryMailer;
use deme_server::{router, App, AppConfig};
use deme_testkit::t;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const DELIVERY_KEY: &str = "mta-shared-secret";
pub const PASSWORD: &str = "correct horse";

pub struct Harness {
    pub app: Arc<App>,
    pub clock: Arc<ManualClock>,
    pub mailer: Arc<MemoryMailer>,
    pub operator: UserId,
    pub operator_token: String,
    router: Router,
}

pub fn config() -> AppConfig {
    AppConfig {
        mail_domain: "lists.deme.example".into(),
        web_base: "https://deme.example".into(),
        mail_secret: b"a test key of enough length".to_vec(),
        delivery_key: Some(DELIVERY_KEY.into()),
        ..AppConfig::default()
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Value,
    pub bytes: Vec<u8>,
    pub headers: axum::http::HeaderMap,
}

impl Reply {
    pub fn code(&self) -> &str {
        self.body["error"].as_str().unwrap_or_default()
    }
}

impl Harness {
    pub async fn new() -> Harness {
        let clock = Arc::new(ManualClock::new(t(0)));
        let mailer = Arc::new(MemoryMailer::default());
        let app = Arc::new(App::ephemeral(&config(), clock.clone(), mailer.clone()));
        Harness::wrap(app, clock, mailer).await
    }

    /// Wraps an app, bootstrapping its operator account when it has none.
    pub async fn wrap(app: Arc<App>, clock: Arc<ManualClock>, mailer: Arc<MemoryMailer>) -> Harness {
        let mut h = Harness {
            router: router(app.clone()),
            app,
            clock,
            mailer,
            operator: UserId::new(),
            operator_token: String::new(),
        };
        let existing = h.app.deme.user_by_email("olga@example.org");
        let operator = match existing {
            Some(m) => m.user_id,
            None => {
                let r = h
                    .send(
                        "POST",
                        "/users",
                        None,
                        Some(json!({"display_name": "Olga", "email": "olga@example.org", "password": PASSWORD})),
                    )
                    .await;
                assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.body);
                serde_json::from_value(r.body["user_id"].clone()).unwrap()
            }
        };
        h.operator = operator;
        h.operator_token = h.login("olga@example.org", PASSWORD).await;
        h
    }

    pub async fn request(&self, request: Request<Body>) -> Reply {
        let response = self.router.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let headers = response.headers().clone();
        let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
        let body = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        Reply {
            status,
            body,
            bytes,
            headers,
        }
    }

    pub async fn send(&self, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut builder = Request::builder().method(method).uri(path);
        if let Some(token) = token {
            builder = builder.header("authorization", format!("Bearer {token}"));
        }
        let request = match body {
            Some(body) => builder
                .header("content-type", "application/json")
                .body(Body::from(body.to_string()))
                .unwrap(),
            None => builder.body(Body::empty()).unwrap(),
        };
        self.request(request).await
    }

    pub async fn raw(
        &self,
        method: &str,
        path: &str,
        token: Option<&str>,
        bytes: Vec<u8>,
        headers: &[(&str, &str)],
    ) -> Reply {
        let mut builder = Request::builder().method(method).uri(path);
        if let Some(token) = token {
            builder = builder.header("authorization", format!("Bearer {token}"));
        }
        for (k, v) in headers {
            builder = builder.header(*k, *v);
        }
        self.request(builder.body(Body::from(bytes)).unwrap()).await
    }

    pub async fn login(&self, email: &str, password: &str) -> String {
        let r = self
            .send(
                "POST",
                "/session",
                None,
                Some(json!({"email": email, "password": password})),
            )
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.body);
        r.body["token"].as_str().unwrap().to_string()
    }

    /// Registers a user through the operator and logs them in.
    pub async fn user(&self, name: &str) -> (UserId, String) {
        let email = format!("{}@example.org", name.to_lowercase());
        let r = self
            .send(
                "POST",
                "/users",
                Some(&self.operator_token),
                Some(json!({"display_name": name, "email": email, "password": PASSWORD})),
            )
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.body);
        let id = serde_json::from_value(r.body["user_id"].clone()).unwrap();
        (id, self.login(&email, PASSWORD).await)
    }

    pub async fn ok(&self, method: &str, path: &str, token: &str, body: Option<Value>) -> Value {
        let r = self.send(method, path, Some(token), body).await;
        assert!(r.status.is_success(), "{method} {path}: {} {:?}", r.status, r.body);
        r.body
    }
}

pub fn id(v: &Value) -> String {
    v["id"].as_str().unwrap().to_string()
}

/// A group with an area, a moderator and a member.
pub struct Scene {
    pub group: String,
    pub area: String,
    pub moderator: (UserId, String),
    pub member: (UserId, String),
}

pub async fn scene(h: &Harness, access: &str) -> Scene {
    let moderator = h.user("Mona").await;
    let member = h.user("Milo").await;
    let group = id(&h
        .ok(
            "POST",
            "/groups",
            &moderator.1,
            Some(json!({"name": "Labortech", "access": access, "join_policy": "open_join"})),
        )
        .await);
    h.ok("POST", &format!("/groups/{group}/join"), &member.1, None).await;
    let area = id(&h
        .ok(
            "POST",
            &format!("/groups/{group}/areas"),
            &moderator.1,
            Some(json!({"title": "Plenary"})),
        )
        .await);
    Scene {
        group,
        area,
        moderator,
        member,
    }
}
