//! User profiles, password digests and session tokens.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

pub const DIGEST_ALGORITHM: &str = "pbkdf2-hmac-sha256";
const SALT_LEN: usize = 16;
const HASH_LEN: usize = 32;
const TOKEN_BYTES: usize = 32;

#[derive(Debug, Error)]
pub enum UserError {
    #[error("username {0:?} is already registered")]
    Conflict(String),
    #[error("{0}")]
    InvalidInput(&'static str),
    /// Unknown user and wrong password are deliberately the same error.
    #[error("invalid username or password")]
    BadCredentials,
    #[error("missing, unknown or expired session token")]
    InvalidToken,
    #[error("cannot persist user profiles to {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt user profile file {path}: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
}

/// Salted password digest, stored with the parameters needed to verify it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasswordDigest {
    pub algorithm: String,
    pub iterations: u32,
    pub salt: String,
    pub hash: String,
}

impl PasswordDigest {
    pub fn new(password: &str, iterations: u32) -> Self {
        let mut salt = [0u8; SALT_LEN];
        rand::rng().fill_bytes(&mut salt);
        Self::with_salt(password, &salt, iterations)
    }

    fn with_salt(password: &str, salt: &[u8], iterations: u32) -> Self {
        Self {
            algorithm: DIGEST_ALGORITHM.into(),
            iterations,
            salt: hex::encode(salt),
            hash: hex::encode(derive(password, salt, iterations)),
        }
    }

    pub fn verify(&self, password: &str) -> bool {
        if self.algorithm != DIGEST_ALGORITHM {
            log::error!("unsupported digest algorithm {:?}", self.algorithm);
            return false;
        }
        let (Ok(salt), Ok(expected)) = (hex::decode(&self.salt), hex::decode(&self.hash)) else {
            return false;
        };
        constant_time_eq(&derive(password, &salt, self.iterations), &expected)
    }
}

fn derive(password: &str, salt: &[u8], iterations: u32) -> [u8; HASH_LEN] {
    let mut out = [0u8; HASH_LEN];
    pbkdf2::pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, iterations, &mut out);
    out
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub username: String,
    pub password_digest: PasswordDigest,
    pub address: Option<String>,
    pub occupation: Option<String>,
    pub qualification: Option<String>,
    pub interests: Option<Vec<String>>,
    pub created_at: DateTime<Utc>,
}

/// Registration request: credentials plus the optional profile fields.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewUser {
    pub username: String,
    pub password: String,
    #[serde(default)]
    pub address: Option<String>,
    #[serde(default)]
    pub occupation: Option<String>,
    #[serde(default)]
    pub qualification: Option<String>,
    #[serde(default)]
    pub interests: Option<Vec<String>>,
}

/// A profile as shown to clients: everything except the digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicProfile {
    pub username: String,
    pub address: Option<String>,
    pub occupation: Option<String>,
    pub qualification: Option<String>,
    pub interests: Option<Vec<String>>,
    pub created_at: DateTime<Utc>,
}

impl From<&UserProfile> for PublicProfile {
    fn from(p: &UserProfile) -> Self {
        Self {
            username: p.username.clone(),
            address: p.address.clone(),
            occupation: p.occupation.clone(),
            qualification: p.qualification.clone(),
            interests: p.interests.clone(),
            created_at: p.created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionToken {
    pub token: String,
    pub username: String,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ProfileFile {
    users: BTreeMap<String, UserProfile>,
}

#[derive(Debug, Default)]
struct Inner {
    profiles: BTreeMap<String, UserProfile>,
    tokens: HashMap<String, SessionToken>,
}

/// Registered users and live sessions. Profiles are written through to a
/// JSON file; sessions live in memory only.
#[derive(Debug)]
pub struct UserStore {
    path: Option<PathBuf>,
    iterations: u32,
    token_lifetime: chrono::Duration,
    /// Verified against when the username is unknown, so both failure
    /// paths cost one digest computation.
    decoy: PasswordDigest,
    inner: RwLock<Inner>,
}

impl UserStore {
    pub fn in_memory(iterations: u32, token_lifetime: Duration) -> Self {
        Self {
            path: None,
            iterations,
            token_lifetime: chrono::Duration::from_std(token_lifetime).unwrap_or(chrono::Duration::hours(24)),
            decoy: PasswordDigest::new("decoy", iterations),
            inner: RwLock::new(Inner::default()),
        }
    }

    /// Opens (or starts) the profile file at `path`.
    pub fn open(path: &Path, iterations: u32, token_lifetime: Duration) -> Result<Self, UserError> {
        let mut store = Self::in_memory(iterations, token_lifetime);
        store.path = Some(path.to_path_buf());
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|source| UserError::Io { path: path.into(), source })?;
            let file: ProfileFile =
                serde_json::from_str(&text).map_err(|source| UserError::Corrupt { path: path.into(), source })?;
            store.inner.get_mut().expect("fresh lock").profiles = file.users;
        }
        Ok(store)
    }

    pub fn register(&self, req: NewUser, now: DateTime<Utc>) -> Result<UserProfile, UserError> {
        let username = req.username.trim().to_string();
        if username.is_empty() {
            return Err(UserError::InvalidInput("username must not be empty"));
        }
        if req.password.is_empty() {
            return Err(UserError::InvalidInput("password must not be empty"));
        }
        // hash outside the lock
        let digest = PasswordDigest::new(&req.password, self.iterations);
        let mut inner = self.inner.write().expect("user store lock poisoned");
        if inner.profiles.contains_key(&username) {
            return Err(UserError::Conflict(username));
        }
        let profile = UserProfile {
            username: username.clone(),
            password_digest: digest,
            address: req.address,
            occupation: req.occupation,
            qualification: req.qualification,
            interests: req.interests,
            created_at: now,
        };
        inner.profiles.insert(username.clone(), profile.clone());
        if let Err(e) = self.persist(&inner.profiles) {
            inner.profiles.remove(&username);
            return Err(e);
        }
        Ok(profile)
    }

    pub fn authenticate(&self, username: &str, password: &str, now: DateTime<Utc>) -> Result<SessionToken, UserError> {
        let digest = {
            let inner = self.inner.read().expect("user store lock poisoned");
            inner.profiles.get(username).map(|p| p.password_digest.clone())
        };
        let ok = match &digest {
            Some(d) => d.verify(password),
            None => {
                self.decoy.verify(password);
                false
            }
        };
        if !ok {
            return Err(UserError::BadCredentials);
        }
        let mut bytes = [0u8; TOKEN_BYTES];
        rand::rng().fill_bytes(&mut bytes);
        let token = SessionToken {
            token: hex::encode(bytes),
            username: username.into(),
            issued_at: now,
            expires_at: now + self.token_lifetime,
        };
        let mut inner = self.inner.write().expect("user store lock poisoned");
        inner.tokens.retain(|_, t| t.expires_at > now);
        inner.tokens.insert(token.token.clone(), token.clone());
        Ok(token)
    }

    /// The username behind a live token.
    pub fn validate(&self, token: &str, now: DateTime<Utc>) -> Result<String, UserError> {
        let inner = self.inner.read().expect("user store lock poisoned");
        match inner.tokens.get(token) {
            Some(t) if t.expires_at > now => Ok(t.username.clone()),
            _ => Err(UserError::InvalidToken),
        }
    }

    pub fn profile(&self, username: &str) -> Option<UserProfile> {
        self.inner.read().expect("user store lock poisoned").profiles.get(username).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("user store lock poisoned").profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn persist(&self, profiles: &BTreeMap<String, UserProfile>) -> Result<(), UserError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let io = |source| UserError::Io { path: path.clone(), source };
        let json = serde_json::to_vec_pretty(&ProfileFile { users: profiles.clone() }).expect("profiles serialize");
        let tmp = path.with_extension("json.tmp");
        let mut file = fs::File::create(&tmp).map_err(io)?;
        file.write_all(&json).map_err(io)?;
        file.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }
}
