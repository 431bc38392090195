//! Deterministic session orchestration over a recorded public channel.
//!
//! A [`LogicalClock`] stands in for wall time. Each channel hop costs one
//! tick, so timestamp checks are exercised without sleeping. Everything the
//! channel carries is kept in [`SessionTranscript`]s, which is all an
//! eavesdropper gets to see (plus an optional card dump).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::scheme::{
    self, HashSuite, LoginMessage, MasterKey, Password, Rejection, ResponseMessage, Salt,
    SchemeError, ServerState, SessionKey, SmartCard, Timestamp, UserIdentity, MASTER_KEY_LEN,
    SALT_LEN,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalClock {
    now: Timestamp,
    step: u64,
}

impl LogicalClock {
    pub fn new(start: Timestamp, step: u64) -> Self {
        LogicalClock { now: start, step }
    }

    pub fn starting_at(start: Timestamp) -> Self {
        LogicalClock::new(start, 1)
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn tick(&mut self) -> Timestamp {
        self.advance(self.step)
    }

    pub fn advance(&mut self, secs: u64) -> Timestamp {
        self.now = self.now.saturating_add(secs);
        self.now
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Completed,
    RejectedStale,
    RejectedUnknown,
    RejectedBadAuthenticator,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::RejectedStale => "rejected-stale",
            Outcome::RejectedUnknown => "rejected-unknown",
            Outcome::RejectedBadAuthenticator => "rejected-bad-authenticator",
        }
    }
}

impl From<Rejection> for Outcome {
    fn from(r: Rejection) -> Self {
        match r {
            Rejection::StaleTimestamp => Outcome::RejectedStale,
            Rejection::UnknownOrigin => Outcome::RejectedUnknown,
            Rejection::BadAuthenticator => Outcome::RejectedBadAuthenticator,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Outcome {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        [
            Outcome::Completed,
            Outcome::RejectedStale,
            Outcome::RejectedUnknown,
            Outcome::RejectedBadAuthenticator,
        ]
        .into_iter()
        .find(|o| o.name() == s)
        .ok_or(())
    }
}

/// What crossed the public channel during one session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionTranscript {
    pub session_index: u64,
    pub m1: LoginMessage,
    /// Absent when the server rejected the login.
    pub m2: Option<ResponseMessage>,
    pub outcome: Outcome,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("transcript line {line}: {reason}")]
pub struct TranscriptError {
    pub line: usize,
    pub reason: &'static str,
}

impl SessionTranscript {
    /// `<session-index> <outcome> <hex(m1)> <hex(m2) | ->`
    pub fn to_line(&self) -> String {
        let m2 = self
            .m2
            .map(|m| hex::encode(m.encode()))
            .unwrap_or_else(|| "-".to_string());
        format!(
            "{} {} {} {}",
            self.session_index,
            self.outcome,
            hex::encode(self.m1.encode()),
            m2
        )
    }

    /// Parses one export line. `lineno` is only used for error reporting.
    pub fn parse_line(
        line: &str,
        digest_len: usize,
        lineno: usize,
    ) -> Result<Self, TranscriptError> {
        let err = |reason| TranscriptError {
            line: lineno,
            reason,
        };
        let fields: Vec<&str> = line.split(' ').collect();
        let [index, outcome, m1, m2] = fields[..] else {
            return Err(err("expected four space-separated fields"));
        };
        let session_index = index.parse().map_err(|_| err("bad session index"))?;
        let outcome: Outcome = outcome.parse().map_err(|_| err("unknown outcome"))?;
        let m1 = hex::decode(m1).map_err(|_| err("login message is not hex"))?;
        let m1 =
            LoginMessage::decode(&m1, digest_len).map_err(|_| err("malformed login message"))?;
        let m2 = match m2 {
            "-" => None,
            hex_m2 => {
                let raw = hex::decode(hex_m2).map_err(|_| err("response message is not hex"))?;
                Some(
                    ResponseMessage::decode(&raw, digest_len)
                        .map_err(|_| err("malformed response message"))?,
                )
            }
        };
        if outcome == Outcome::Completed && m2.is_none() {
            return Err(err("completed session without a response message"));
        }
        Ok(SessionTranscript {
            session_index,
            m1,
            m2,
            outcome,
        })
    }
}

/// Renders transcripts in export format, one LF-terminated line each.
pub fn export_transcripts(transcripts: &[SessionTranscript]) -> String {
    transcripts.iter().map(|t| t.to_line() + "\n").collect()
}

/// Inverse of [`export_transcripts`]. Blank lines are skipped.
pub fn parse_transcripts(
    text: &str,
    digest_len: usize,
) -> Result<Vec<SessionTranscript>, TranscriptError> {
    text.split('\n')
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| SessionTranscript::parse_line(l, digest_len, i + 1))
        .collect()
}

/// A user holding a card and knowing its password.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserDevice {
    pub card: SmartCard,
    pub password: Password,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionRun {
    pub transcript: SessionTranscript,
    pub user_key: Option<SessionKey>,
    pub server_key: Option<SessionKey>,
}

impl SessionRun {
    pub fn keys_agree(&self) -> bool {
        matches!((&self.user_key, &self.server_key), (Some(u), Some(s)) if u == s)
    }
}

/// Runs login, server verification, response and user verification in order,
/// with one clock tick per channel hop.
pub fn run_honest_session(
    suite: &HashSuite,
    user: &UserDevice,
    server: &ServerState,
    clock: &mut LogicalClock,
    window: u64,
    session_index: u64,
) -> Result<SessionRun, SchemeError> {
    run_session_with_skew(suite, user, server, clock, window, session_index, 0)
}

/// Like [`run_honest_session`], but the user's clock reads `skew` seconds
/// away from the shared clock.
pub fn run_session_with_skew(
    suite: &HashSuite,
    user: &UserDevice,
    server: &ServerState,
    clock: &mut LogicalClock,
    window: u64,
    session_index: u64,
    skew: i64,
) -> Result<SessionRun, SchemeError> {
    let user_now = |t: Timestamp| Timestamp(t.0.saturating_add_signed(skew));

    let j = scheme::card_long_term_secret(suite, &user.card, &user.password)?;
    let m1 = scheme::card_login(suite, &user.card, &user.password, user_now(clock.now()))?;
    clock.tick();

    let rejected = |outcome: Outcome, m2, server_key| SessionRun {
        transcript: SessionTranscript {
            session_index,
            m1,
            m2,
            outcome,
        },
        user_key: None,
        server_key,
    };

    let record = match scheme::server_verify_login(suite, server, &m1, clock.now(), window) {
        Ok(record) => record,
        Err(r) => return Ok(rejected(r.into(), None, None)),
    };
    let (m2, server_key) =
        scheme::server_respond(suite, server.master_key(), record, &m1.c1, clock.now());
    clock.tick();

    match scheme::user_verify_response(suite, &j, &m1.c1, &m2, user_now(clock.now()), window) {
        Ok(user_key) => Ok(SessionRun {
            transcript: SessionTranscript {
                session_index,
                m1,
                m2: Some(m2),
                outcome: Outcome::Completed,
            },
            user_key: Some(user_key),
            server_key: Some(server_key),
        }),
        Err(r) => Ok(rejected(r.into(), Some(m2), Some(server_key))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplayDecision {
    Accepted,
    Rejected(Rejection),
}

/// Re-delivers a captured login message to the server at the current clock.
///
/// The scheme keeps no record of seen timestamps, so a replay inside the
/// window is accepted.
pub fn run_replayed_login(
    suite: &HashSuite,
    prior: &SessionTranscript,
    server: &ServerState,
    clock: &LogicalClock,
    window: u64,
) -> ReplayDecision {
    match scheme::server_verify_login(suite, server, &prior.m1, clock.now(), window) {
        Ok(_) => ReplayDecision::Accepted,
        Err(r) => ReplayDecision::Rejected(r),
    }
}

/// Everything the adversary holds: captured transcripts and, if the scenario
/// grants it, the extracted contents of the victim's card.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdversaryView {
    pub transcripts: Vec<SessionTranscript>,
    pub card_dump: Option<SmartCard>,
}

pub fn eavesdrop(sessions: &[SessionTranscript], card_dump: Option<&SmartCard>) -> AdversaryView {
    AdversaryView {
        transcripts: sessions.to_vec(),
        card_dump: card_dump.copied(),
    }
}

/// A server, a clock and a seeded RNG, plus everything seen on the channel.
///
/// Not meant to be shared across threads; run independent instances instead.
pub struct Simulation {
    suite: HashSuite,
    server: ServerState,
    clock: LogicalClock,
    window: u64,
    rng: ChaCha20Rng,
    transcripts: Vec<SessionTranscript>,
}

impl Simulation {
    /// The master key and all salts are drawn from a ChaCha20 stream seeded with `seed`.
    pub fn new(suite: HashSuite, seed: u64, start: Timestamp, window: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut key = [0u8; MASTER_KEY_LEN];
        rng.fill_bytes(&mut key);
        Simulation {
            suite,
            server: ServerState::new(MasterKey(key)),
            clock: LogicalClock::starting_at(start),
            window,
            rng,
            transcripts: Vec::new(),
        }
    }

    pub fn suite(&self) -> &HashSuite {
        &self.suite
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn server_mut(&mut self) -> &mut ServerState {
        &mut self.server
    }

    pub fn clock(&self) -> &LogicalClock {
        &self.clock
    }

    pub fn clock_mut(&mut self) -> &mut LogicalClock {
        &mut self.clock
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    pub fn transcripts(&self) -> &[SessionTranscript] {
        &self.transcripts
    }

    pub fn random_salt(&mut self) -> Salt {
        Salt(self.rng.random::<[u8; SALT_LEN]>())
    }

    pub fn register(
        &mut self,
        id: UserIdentity,
        password: Password,
    ) -> Result<UserDevice, SchemeError> {
        let salt = self.random_salt();
        let card = scheme::register(&self.suite, &mut self.server, id, &password, salt)?;
        Ok(UserDevice { card, password })
    }

    /// Runs one session and records its transcript.
    pub fn run_session(&mut self, user: &UserDevice) -> Result<SessionRun, SchemeError> {
        let index = self.transcripts.len() as u64;
        let run = run_honest_session(
            &self.suite,
            user,
            &self.server,
            &mut self.clock,
            self.window,
            index,
        )?;
        self.transcripts.push(run.transcript.clone());
        Ok(run)
    }

    pub fn replay(&self, prior: &SessionTranscript) -> ReplayDecision {
        run_replayed_login(&self.suite, prior, &self.server, &self.clock, self.window)
    }

    pub fn eavesdrop(&self, card_dump: Option<&SmartCard>) -> AdversaryView {
        eavesdrop(&self.transcripts, card_dump)
    }
}
