//! Registration, password verification and bearer sessions.
//!
//! Raw passwords only ever live inside [`Password`], whose `Debug` output is
//! redacted. The store keeps a salted Argon2id digest per user and the
//! SHA-256 of each live session token, never the token itself.

use std::fmt;
use std::sync::{Arc, OnceLock};

use argon2::password_hash::{PasswordHasher, PasswordVerifier};
use argon2::{Algorithm, Argon2, Params, Version};
use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::clock::Clock;
use crate::error::ServiceError;
use crate::ids::{SessionId, UserId};
use crate::model::{
    is_mailbox, limits, validate_personal_info, PersonalInfo, ProfessionalInfo, Session, User,
};
use crate::store::{Record, RecordKey, Store, StoreError, StoreExt, UniqueKey};

pub const DEFAULT_SESSION_TTL_SECS: i64 = 24 * 60 * 60;

/// A raw password. Never printed.
#[derive(Clone, PartialEq, Eq, Deserialize)]
#[serde(transparent)]
pub struct Password(String);

impl Password {
    pub fn new(raw: impl Into<String>) -> Self {
        Self(raw.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Password {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Password(<redacted>)")
    }
}

/// Salted one-way password digests.
pub trait PasswordScheme: Send + Sync {
    fn digest(&self, password: &Password) -> Result<String, ServiceError>;
    fn verify(&self, password: &Password, digest: &str) -> bool;
}

/// Argon2id with a fresh random 16-byte salt per digest.
#[derive(Debug, Clone, Default)]
pub struct Argon2Scheme {
    params: Params,
}

impl Argon2Scheme {
    /// `memory_kib` is clamped up to the algorithm minimum.
    pub fn with_cost(memory_kib: u32, iterations: u32) -> Self {
        let params = Params::new(
            memory_kib.max(Params::MIN_M_COST),
            iterations.max(Params::MIN_T_COST),
            1,
            None,
        )
        .expect("clamped argon2 parameters are valid");
        Self { params }
    }

    /// The cheapest admissible parameters. Tests only.
    pub fn minimal() -> Self {
        Self::with_cost(Params::MIN_M_COST, Params::MIN_T_COST)
    }

    fn hasher(&self) -> Argon2<'static> {
        Argon2::new(Algorithm::Argon2id, Version::V0x13, self.params.clone())
    }
}

impl PasswordScheme for Argon2Scheme {
    fn digest(&self, password: &Password) -> Result<String, ServiceError> {
        let mut salt = [0u8; 16];
        rand::rng().fill_bytes(&mut salt);
        self.hasher()
            .hash_password_with_salt(password.expose().as_bytes(), &salt)
            .map(|hash| hash.to_string())
            .map_err(|e| ServiceError::Internal(format!("password hashing: {e}")))
    }

    fn verify(&self, password: &Password, digest: &str) -> bool {
        PasswordVerifier::<str>::verify_password(
            &self.hasher(),
            password.expose().as_bytes(),
            digest,
        )
        .is_ok()
    }
}

/// Source of bearer tokens.
pub trait TokenSource: Send + Sync {
    fn generate(&self) -> String;
}

/// 256 bits from the thread-local CSPRNG, hex encoded.
#[derive(Debug, Default)]
pub struct RandomTokens;

impl TokenSource for RandomTokens {
    fn generate(&self) -> String {
        let mut bytes = [0u8; 32];
        rand::rng().fill_bytes(&mut bytes);
        hex::encode(bytes)
    }
}

/// Reproducible tokens for tests: same seed, same sequence.
#[derive(Debug)]
pub struct SeededTokens(Mutex<ChaCha20Rng>);

impl SeededTokens {
    pub fn new(seed: u64) -> Self {
        Self(Mutex::new(ChaCha20Rng::seed_from_u64(seed)))
    }
}

impl TokenSource for SeededTokens {
    fn generate(&self) -> String {
        let mut bytes = [0u8; 32];
        self.0.lock().fill_bytes(&mut bytes);
        hex::encode(bytes)
    }
}

pub fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

/// What a successful login hands back to the caller.
#[derive(Clone, PartialEq, Eq)]
pub struct IssuedSession {
    pub token: String,
    pub user_id: UserId,
    pub expires_at: DateTime<Utc>,
}

impl fmt::Debug for IssuedSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IssuedSession")
            .field("token", &"<redacted>")
            .field("user_id", &self.user_id)
            .field("expires_at", &self.expires_at)
            .finish()
    }
}

pub struct Accounts {
    store: Arc<dyn Store>,
    clock: Arc<dyn Clock>,
    tokens: Arc<dyn TokenSource>,
    passwords: Arc<dyn PasswordScheme>,
    session_ttl: Duration,
    decoy: OnceLock<String>,
}

impl Accounts {
    pub fn new(
        store: Arc<dyn Store>,
        clock: Arc<dyn Clock>,
        tokens: Arc<dyn TokenSource>,
        passwords: Arc<dyn PasswordScheme>,
        session_ttl: Duration,
    ) -> Self {
        Self {
            store,
            clock,
            tokens,
            passwords,
            session_ttl,
            decoy: OnceLock::new(),
        }
    }

    pub fn session_ttl(&self) -> Duration {
        self.session_ttl
    }

    /// Create a user with a minimal profile. Uniqueness of the email is
    /// decided by the store, atomically.
    pub fn register(
        &self,
        email: &str,
        password: &Password,
        first_name: &str,
        last_name: &str,
    ) -> Result<UserId, ServiceError> {
        if !is_mailbox(email) {
            return Err(ServiceError::InvalidEmail);
        }
        if password.expose().chars().count() < limits::PASSWORD_MIN {
            return Err(ServiceError::WeakPassword);
        }
        let now = self.clock.now();
        let personal = PersonalInfo::minimal(email, first_name, last_name);
        let report = validate_personal_info(&personal, now.date_naive());
        if !report.is_valid() {
            return Err(ServiceError::ValidationFailed(report.nested("personal")));
        }
        let user = User {
            id: UserId(0),
            personal,
            professional: ProfessionalInfo::default(),
            password_digest: self.passwords.digest(password)?,
            created_at: now,
        };
        let key = self.store.create(Record::User(user))?;
        Ok(UserId(key.id))
    }

    /// Wrong password and unknown email fail identically.
    pub fn authenticate(
        &self,
        email: &str,
        password: &Password,
    ) -> Result<IssuedSession, ServiceError> {
        let user = self
            .store
            .find_unique(&UniqueKey::UserEmail(email.to_string()))
            .and_then(|key| self.store.user(UserId(key.id)));
        let Some(user) = user else {
            // burn the same work as a real check
            let decoy = self.decoy.get_or_init(|| {
                self.passwords
                    .digest(&Password::new("decoy-password"))
                    .unwrap_or_default()
            });
            let _ = self.passwords.verify(password, decoy);
            return Err(ServiceError::InvalidCredentials);
        };
        if !self.passwords.verify(password, &user.password_digest) {
            return Err(ServiceError::InvalidCredentials);
        }

        let now = self.clock.now();
        let token = self.tokens.generate();
        let session = Session {
            id: SessionId(0),
            token_digest: token_digest(&token),
            user_id: user.id,
            created_at: now,
            expires_at: now + self.session_ttl,
        };
        let expires_at = session.expires_at;
        match self.store.create(Record::Session(session)) {
            Ok(_) => Ok(IssuedSession {
                token,
                user_id: user.id,
                expires_at,
            }),
            // the user vanished between lookup and insert
            Err(StoreError::IntegrityViolation(_)) => Err(ServiceError::InvalidCredentials),
            Err(e) => Err(ServiceError::Internal(e.to_string())),
        }
    }

    pub fn resolve_session(&self, token: &str) -> Result<UserId, ServiceError> {
        let session = self
            .store
            .find_unique(&UniqueKey::SessionToken(token_digest(token)))
            .and_then(|key| self.store.session(SessionId(key.id)))
            .ok_or(ServiceError::Unauthenticated)?;
        if session.expires_at <= self.clock.now() {
            return Err(ServiceError::Unauthenticated);
        }
        Ok(session.user_id)
    }

    /// Idempotent; unknown tokens are ignored.
    pub fn revoke_session(&self, token: &str) -> Result<(), ServiceError> {
        let Some(key) = self
            .store
            .find_unique(&UniqueKey::SessionToken(token_digest(token)))
        else {
            return Ok(());
        };
        match self.store.delete(key) {
            Ok(()) | Err(StoreError::NotFound(_)) => Ok(()),
            Err(e) => Err(e.into()),
        }
    }

    /// Remove sessions whose expiry has passed. Returns how many went.
    pub fn purge_expired_sessions(&self) -> Result<usize, ServiceError> {
        let now = self.clock.now();
        let mut purged = 0;
        for record in self
            .store
            .scan(crate::store::Kind::Session, &Default::default())
        {
            if let Record::Session(s) = record {
                if s.expires_at <= now {
                    match self.store.delete(RecordKey::session(s.id)) {
                        Ok(()) => purged += 1,
                        Err(StoreError::NotFound(_)) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
        Ok(purged)
    }
}
