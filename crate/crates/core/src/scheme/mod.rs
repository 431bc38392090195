//! The authentication scheme itself: registration, login, mutual
//! authentication and session-key agreement.
//!
//! Everything here is a pure function of its arguments. Byte-level
//! concatenation uses fixed-width fields (digests, 16-byte salt, 8-byte
//! big-endian timestamps, 4-byte big-endian registration counter) and a
//! one-byte length prefix on the identity, so every hash preimage parses
//! back uniquely.

mod hash;
mod types;

use subtle::ConstantTimeEq;
use thiserror::Error;

pub use hash::{Digest, HashAlgorithm, HashSuite, MAX_DIGEST_LEN};
pub use types::{
    LoginMessage, LongTermSecret, MaskedPassword, MasterKey, Password, ResponseMessage, Salt,
    ServerRecord, ServerState, SessionKey, SmartCard, Timestamp, UserIdentity, LOGIN_TAG,
    MASTER_KEY_LEN, MAX_IDENTITY_LEN, MAX_PASSWORD_LEN, RESPONSE_TAG, SALT_LEN,
};

/// Default freshness window in seconds.
pub const DEFAULT_WINDOW_SECS: u64 = 60;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("digest length mismatch ({left} vs {right} bytes)")]
    DigestLengthMismatch { left: usize, right: usize },
    #[error("identity {0:?} is already registered, choose a new identity")]
    DuplicateIdentity(String),
    #[error("malformed {0} message")]
    MalformedMessage(&'static str),
}

/// Why a receiver terminated the session.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rejection {
    #[error("timestamp outside the freshness window")]
    StaleTimestamp,
    #[error("login matches no registered user")]
    UnknownOrigin,
    #[error("server authenticator does not verify")]
    BadAuthenticator,
}

/// `|now - t| <= window`
pub fn is_fresh(t: Timestamp, now: Timestamp, window: u64) -> bool {
    now.abs_diff(t) <= window
}

/// `RPW = h(r || PW)`
pub fn derive_rpw(suite: &HashSuite, r: &Salt, pw: &Password) -> MaskedPassword {
    MaskedPassword(suite.h(&[r.as_bytes(), pw.as_bytes()]))
}

/// `J = h(x || ID || N)`
pub fn derive_long_term_secret(
    suite: &HashSuite,
    x: &MasterKey,
    id: &UserIdentity,
    n: u32,
) -> Result<LongTermSecret, SchemeError> {
    if n == 0 {
        return Err(SchemeError::InvalidArgument(
            "registration counter must be at least 1",
        ));
    }
    Ok(long_term_secret(suite, x, id, n))
}

fn long_term_secret(suite: &HashSuite, x: &MasterKey, id: &UserIdentity, n: u32) -> LongTermSecret {
    let len = [id.as_bytes().len() as u8];
    LongTermSecret(suite.h(&[x.as_bytes(), &len, id.as_bytes(), &n.to_be_bytes()]))
}

/// Server side of registration: `L = J xor RPW`, with `r` stored next to it.
pub fn server_issue_card(
    suite: &HashSuite,
    x: &MasterKey,
    id: &UserIdentity,
    n: u32,
    rpw: &MaskedPassword,
    r: Salt,
) -> Result<SmartCard, SchemeError> {
    let j = derive_long_term_secret(suite, x, id, n)?;
    Ok(SmartCard {
        l: j.0.xor(&rpw.0)?,
        r,
    })
}

/// Full registration against a server: records `(ID, N = 1)` and returns the issued card.
///
/// Fails with [`SchemeError::DuplicateIdentity`] if the identity already exists.
pub fn register(
    suite: &HashSuite,
    state: &mut ServerState,
    id: UserIdentity,
    pw: &Password,
    r: Salt,
) -> Result<SmartCard, SchemeError> {
    if state.find(&id).is_some() {
        return Err(SchemeError::DuplicateIdentity(id.to_string()));
    }
    let rpw = derive_rpw(suite, &r, pw);
    let card = server_issue_card(suite, state.master_key(), &id, 1, &rpw, r)?;
    state.insert(ServerRecord::new(id, 1)?)?;
    Ok(card)
}

/// What the card computes from the entered password: `J = L xor h(r || PW)`.
pub fn card_long_term_secret(
    suite: &HashSuite,
    card: &SmartCard,
    pw: &Password,
) -> Result<LongTermSecret, SchemeError> {
    let rpw = derive_rpw(suite, &card.r, pw);
    Ok(LongTermSecret(card.l.xor(&rpw.0)?))
}

/// `C1 = h1(J || T_U)`
pub fn login_authenticator(suite: &HashSuite, j: &LongTermSecret, t_u: Timestamp) -> Digest {
    suite.h1(&[j.0.as_bytes(), &t_u.to_be_bytes()])
}

/// `C2 = h1(J || C1 || T_S)`
pub fn response_authenticator(
    suite: &HashSuite,
    j: &LongTermSecret,
    c1: &Digest,
    t_s: Timestamp,
) -> Digest {
    suite.h1(&[j.0.as_bytes(), c1.as_bytes(), &t_s.to_be_bytes()])
}

/// `sk = h1(J || C2)`
pub fn session_key(suite: &HashSuite, j: &LongTermSecret, c2: &Digest) -> SessionKey {
    SessionKey(suite.h1(&[j.0.as_bytes(), c2.as_bytes()]))
}

/// Builds `M1`. A wrong password still produces a well-formed message; the
/// only error is a card whose `L` does not match the suite's digest width.
pub fn card_login(
    suite: &HashSuite,
    card: &SmartCard,
    pw: &Password,
    t_u: Timestamp,
) -> Result<LoginMessage, SchemeError> {
    let j = card_long_term_secret(suite, card, pw)?;
    Ok(LoginMessage {
        c1: login_authenticator(suite, &j, t_u),
        t_u,
    })
}

/// Checks freshness of `T_U`, then scans the registry in order for the first
/// record whose recomputed `C1` matches.
pub fn server_verify_login<'a>(
    suite: &HashSuite,
    state: &'a ServerState,
    m1: &LoginMessage,
    now: Timestamp,
    window: u64,
) -> Result<&'a ServerRecord, Rejection> {
    if !is_fresh(m1.t_u, now, window) {
        return Err(Rejection::StaleTimestamp);
    }
    let x = state.master_key();
    state
        .records()
        .iter()
        .find(|record| {
            let j = long_term_secret(suite, x, record.id(), record.n());
            bool::from(login_authenticator(suite, &j, m1.t_u).ct_eq(&m1.c1))
        })
        .ok_or(Rejection::UnknownOrigin)
}

/// Builds `M2` and the server's session key for an accepted login.
pub fn server_respond(
    suite: &HashSuite,
    x: &MasterKey,
    record: &ServerRecord,
    c1: &Digest,
    t_s: Timestamp,
) -> (ResponseMessage, SessionKey) {
    let j = long_term_secret(suite, x, record.id(), record.n());
    let c2 = response_authenticator(suite, &j, c1, t_s);
    let sk = session_key(suite, &j, &c2);
    (ResponseMessage { c2, t_s }, sk)
}

/// User side of mutual authentication: checks `T_S` and `C2`, then derives `sk`.
pub fn user_verify_response(
    suite: &HashSuite,
    j: &LongTermSecret,
    c1: &Digest,
    m2: &ResponseMessage,
    now: Timestamp,
    window: u64,
) -> Result<SessionKey, Rejection> {
    if !is_fresh(m2.t_s, now, window) {
        return Err(Rejection::StaleTimestamp);
    }
    let expected = response_authenticator(suite, j, c1, m2.t_s);
    if !bool::from(expected.ct_eq(&m2.c2)) {
        return Err(Rejection::BadAuthenticator);
    }
    Ok(session_key(suite, j, &m2.c2))
}
