use std::fmt;

use super::hash::Digest;
use super::SchemeError;

pub const MAX_IDENTITY_LEN: usize = 64;
pub const MAX_PASSWORD_LEN: usize = 128;
pub const SALT_LEN: usize = 16;
pub const MASTER_KEY_LEN: usize = 32;

/// A user's identity. 1 to 64 bytes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserIdentity(Vec<u8>);

impl UserIdentity {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, SchemeError> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(SchemeError::InvalidArgument("identity must not be empty"));
        }
        if bytes.len() > MAX_IDENTITY_LEN {
            return Err(SchemeError::InvalidArgument(
                "identity longer than 64 bytes",
            ));
        }
        Ok(UserIdentity(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// One length byte followed by the identity bytes.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + self.0.len());
        out.push(self.0.len() as u8);
        out.extend_from_slice(&self.0);
        out
    }
}

impl fmt::Debug for UserIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UserIdentity({:?})", String::from_utf8_lossy(&self.0))
    }
}

impl fmt::Display for UserIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.0))
    }
}

/// A user's password. 1 to 128 bytes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Password(Vec<u8>);

impl Password {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, SchemeError> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(SchemeError::InvalidArgument("password must not be empty"));
        }
        if bytes.len() > MAX_PASSWORD_LEN {
            return Err(SchemeError::InvalidArgument(
                "password longer than 128 bytes",
            ));
        }
        Ok(Password(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Password {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Password({:?})", String::from_utf8_lossy(&self.0))
    }
}

impl fmt::Display for Password {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.0))
    }
}

/// The random value `r` stored on the card.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Salt(pub [u8; SALT_LEN]);

impl Salt {
    pub fn as_bytes(&self) -> &[u8; SALT_LEN] {
        &self.0
    }
}

impl fmt::Debug for Salt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Salt({})", hex::encode(self.0))
    }
}

/// The server's master key `x`.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey(pub [u8; MASTER_KEY_LEN]);

impl MasterKey {
    pub fn as_bytes(&self) -> &[u8; MASTER_KEY_LEN] {
        &self.0
    }
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterKey(..)")
    }
}

/// `RPW = h(r || PW)`
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskedPassword(pub Digest);

/// `J = h(x || ID || N)`, the per-user long-term secret.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LongTermSecret(pub Digest);

/// `sk = h1(J || C2)`
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionKey(pub Digest);

/// Card contents: `L = J xor RPW` and the salt `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmartCard {
    pub l: Digest,
    pub r: Salt,
}

/// One registered user as the server sees it. `n` counts registrations and is at least 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerRecord {
    id: UserIdentity,
    n: u32,
}

impl ServerRecord {
    pub fn new(id: UserIdentity, n: u32) -> Result<Self, SchemeError> {
        if n == 0 {
            return Err(SchemeError::InvalidArgument(
                "registration counter must be at least 1",
            ));
        }
        Ok(ServerRecord { id, n })
    }

    pub fn id(&self) -> &UserIdentity {
        &self.id
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

/// Master key plus the registry of users, in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerState {
    master_key: MasterKey,
    records: Vec<ServerRecord>,
}

impl ServerState {
    pub fn new(master_key: MasterKey) -> Self {
        ServerState {
            master_key,
            records: Vec::new(),
        }
    }

    /// Builds a state from existing records, rejecting duplicate identities.
    pub fn from_records(
        master_key: MasterKey,
        records: impl IntoIterator<Item = ServerRecord>,
    ) -> Result<Self, SchemeError> {
        let mut state = ServerState::new(master_key);
        for record in records {
            state.insert(record)?;
        }
        Ok(state)
    }

    pub fn master_key(&self) -> &MasterKey {
        &self.master_key
    }

    pub fn records(&self) -> &[ServerRecord] {
        &self.records
    }

    pub fn find(&self, id: &UserIdentity) -> Option<&ServerRecord> {
        self.records.iter().find(|r| &r.id == id)
    }

    /// Appends a record. Fails if the identity is already present.
    pub fn insert(&mut self, record: ServerRecord) -> Result<(), SchemeError> {
        if self.find(&record.id).is_some() {
            return Err(SchemeError::DuplicateIdentity(record.id.to_string()));
        }
        self.records.push(record);
        Ok(())
    }

    /// Removes a user's record, returning it if present.
    pub fn remove(&mut self, id: &UserIdentity) -> Option<ServerRecord> {
        let idx = self.records.iter().position(|r| &r.id == id)?;
        Some(self.records.remove(idx))
    }
}

/// Seconds since an agreed epoch. Encodes as 8 big-endian bytes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    pub fn abs_diff(self, other: Timestamp) -> u64 {
        self.0.abs_diff(other.0)
    }

    pub fn saturating_add(self, secs: u64) -> Timestamp {
        Timestamp(self.0.saturating_add(secs))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub const LOGIN_TAG: u8 = 0x01;
pub const RESPONSE_TAG: u8 = 0x02;

/// `M1 = <C1, T_U>`. Carries no identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoginMessage {
    pub c1: Digest,
    pub t_u: Timestamp,
}

/// `M2 = <C2, T_S>`
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResponseMessage {
    pub c2: Digest,
    pub t_s: Timestamp,
}

fn encode_message(tag: u8, d: &Digest, t: Timestamp) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + d.len() + 8);
    out.push(tag);
    out.extend_from_slice(d.as_bytes());
    out.extend_from_slice(&t.to_be_bytes());
    out
}

fn decode_message(
    tag: u8,
    kind: &'static str,
    bytes: &[u8],
    digest_len: usize,
) -> Result<(Digest, Timestamp), SchemeError> {
    if bytes.len() != 1 + digest_len + 8 || bytes[0] != tag {
        return Err(SchemeError::MalformedMessage(kind));
    }
    let digest = Digest::from_slice(&bytes[1..1 + digest_len])?;
    let mut ts = [0u8; 8];
    ts.copy_from_slice(&bytes[1 + digest_len..]);
    Ok((digest, Timestamp(u64::from_be_bytes(ts))))
}

impl LoginMessage {
    /// `0x01 || C1 || T_U (8 bytes, big endian)`
    pub fn encode(&self) -> Vec<u8> {
        encode_message(LOGIN_TAG, &self.c1, self.t_u)
    }

    pub fn decode(bytes: &[u8], digest_len: usize) -> Result<Self, SchemeError> {
        let (c1, t_u) = decode_message(LOGIN_TAG, "login", bytes, digest_len)?;
        Ok(LoginMessage { c1, t_u })
    }
}

impl ResponseMessage {
    /// `0x02 || C2 || T_S (8 bytes, big endian)`
    pub fn encode(&self) -> Vec<u8> {
        encode_message(RESPONSE_TAG, &self.c2, self.t_s)
    }

    pub fn decode(bytes: &[u8], digest_len: usize) -> Result<Self, SchemeError> {
        let (c2, t_s) = decode_message(RESPONSE_TAG, "response", bytes, digest_len)?;
        Ok(ResponseMessage { c2, t_s })
    }
}
