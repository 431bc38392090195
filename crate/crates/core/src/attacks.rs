//! Offline password guessing and recovery of past session keys.
//!
//! Both attacks work only from an [`AdversaryView`]: captured transcripts and
//! the extracted card values `(L, r)`.
//!
//! Guessing: for a candidate `pw*`, compute `J* = L xor h(r || pw*)` and test
//! `h1(J* || T_U) == C1` against a captured login. A match identifies a
//! password that the server would accept.
//!
//! Session keys: `sk = h1(J || C2)` depends on nothing but `J` and the public
//! `C2`, so once `J` is known every recorded session key follows.

use std::time::Instant;

use rayon::prelude::*;
use subtle::ConstantTimeEq;
use thiserror::Error;

use crate::scheme::{
    self, HashSuite, LoginMessage, LongTermSecret, Password, SchemeError, SessionKey, SmartCard,
};
use crate::simulator::{AdversaryView, Outcome, SessionTranscript};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttackError {
    #[error("the adversary view has no card dump")]
    MissingCardDump,
    #[error("the adversary view has no completed session")]
    NoCompletedSession,
    #[error("card digest is {card} bytes but the hash suite produces {suite}")]
    CardWidth { card: usize, suite: usize },
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Clone, Debug)]
pub struct GuessingResult {
    pub recovered: Option<Password>,
    /// Candidates evaluated, counted as a sequential scan would count them.
    pub guesses_tried: u64,
    pub elapsed_ms: u64,
}

/// `J = L xor h(r || pw)`
pub fn derive_j_from_card(
    suite: &HashSuite,
    card: &SmartCard,
    pw: &Password,
) -> Result<LongTermSecret, SchemeError> {
    scheme::card_long_term_secret(suite, card, pw)
}

/// The guessing predicate: does `pw` turn the card into one that reproduces `m1`?
pub fn candidate_matches(
    suite: &HashSuite,
    card: &SmartCard,
    m1: &LoginMessage,
    pw: &Password,
) -> Result<bool, SchemeError> {
    let j = derive_j_from_card(suite, card, pw)?;
    Ok(scheme::login_authenticator(suite, &j, m1.t_u)
        .ct_eq(&m1.c1)
        .into())
}

struct Target<'a> {
    card: &'a SmartCard,
    m1: &'a LoginMessage,
}

fn target<'a>(suite: &HashSuite, view: &'a AdversaryView) -> Result<Target<'a>, AttackError> {
    let card = view
        .card_dump
        .as_ref()
        .ok_or(AttackError::MissingCardDump)?;
    if card.l.len() != suite.digest_len() {
        return Err(AttackError::CardWidth {
            card: card.l.len(),
            suite: suite.digest_len(),
        });
    }
    let transcript = view
        .transcripts
        .iter()
        .find(|t| t.outcome == Outcome::Completed)
        .ok_or(AttackError::NoCompletedSession)?;
    Ok(Target {
        card,
        m1: &transcript.m1,
    })
}

impl Target<'_> {
    fn matches(&self, suite: &HashSuite, pw: &Password) -> bool {
        // Width was checked when the target was built.
        candidate_matches(suite, self.card, self.m1, pw).unwrap_or(false)
    }
}

/// Tries candidates in list order against the first completed session and
/// returns the first password that satisfies the login check.
pub fn offline_guess(
    suite: &HashSuite,
    view: &AdversaryView,
    candidates: &[Password],
) -> Result<GuessingResult, AttackError> {
    let target = target(suite, view)?;
    let start = Instant::now();
    let hit = candidates.iter().position(|pw| target.matches(suite, pw));
    Ok(finish(candidates, hit, start))
}

/// Same result as [`offline_guess`], with candidates split across `jobs`
/// worker threads. The lowest matching index wins.
pub fn offline_guess_parallel(
    suite: &HashSuite,
    view: &AdversaryView,
    candidates: &[Password],
    jobs: usize,
) -> Result<GuessingResult, AttackError> {
    if jobs <= 1 {
        return offline_guess(suite, view, candidates);
    }
    let target = target(suite, view)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AttackError::WorkerPool(e.to_string()))?;
    let start = Instant::now();
    let hit = pool.install(|| {
        candidates
            .par_iter()
            .position_first(|pw| target.matches(suite, pw))
    });
    Ok(finish(candidates, hit, start))
}

fn finish(candidates: &[Password], hit: Option<usize>, start: Instant) -> GuessingResult {
    let elapsed_ms = start.elapsed().as_millis() as u64;
    match hit {
        Some(i) => GuessingResult {
            recovered: Some(candidates[i].clone()),
            guesses_tried: i as u64 + 1,
            elapsed_ms,
        },
        None => GuessingResult {
            recovered: None,
            guesses_tried: candidates.len() as u64,
            elapsed_ms,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredKey {
    pub session_index: u64,
    pub key: SessionKey,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForwardSecrecyBreak {
    pub keys: Vec<RecoveredKey>,
    /// Transcripts without a completed response, which carry no session key.
    pub skipped: usize,
}

/// Recomputes `sk = h1(J || C2)` for every completed session in the view.
pub fn forward_secrecy_break(
    suite: &HashSuite,
    j: &LongTermSecret,
    view: &AdversaryView,
) -> ForwardSecrecyBreak {
    let mut out = ForwardSecrecyBreak::default();
    for t in &view.transcripts {
        match completed_response(t) {
            Some(c2) => out.keys.push(RecoveredKey {
                session_index: t.session_index,
                key: scheme::session_key(suite, j, c2),
            }),
            None => out.skipped += 1,
        }
    }
    out
}

fn completed_response(t: &SessionTranscript) -> Option<&scheme::Digest> {
    match (&t.outcome, &t.m2) {
        (Outcome::Completed, Some(m2)) => Some(&m2.c2),
        _ => None,
    }
}

/// Checks a candidate `J` against a captured transcript using only public
/// values: `C1 = h1(J || T_U)` and, when present, `C2 = h1(J || C1 || T_S)`.
pub fn secret_explains_transcript(
    suite: &HashSuite,
    j: &LongTermSecret,
    t: &SessionTranscript,
) -> bool {
    let c1_ok: bool = scheme::login_authenticator(suite, j, t.m1.t_u)
        .ct_eq(&t.m1.c1)
        .into();
    let c2_ok = t.m2.as_ref().is_none_or(|m2| {
        scheme::response_authenticator(suite, j, &t.m1.c1, m2.t_s)
            .ct_eq(&m2.c2)
            .into()
    });
    c1_ok && c2_ok
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordlistError {
    #[error("word list is not valid UTF-8")]
    NotUtf8,
    #[error("word list line {line}: {source}")]
    BadCandidate { line: usize, source: SchemeError },
}

/// One candidate per LF-terminated line; blank lines are ignored and a
/// trailing CR is dropped.
pub fn parse_wordlist(bytes: &[u8]) -> Result<Vec<Password>, WordlistError> {
    let text = std::str::from_utf8(bytes).map_err(|_| WordlistError::NotUtf8)?;
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty())
        .map(|(line, l)| {
            Password::new(l).map_err(|source| WordlistError::BadCandidate { line, source })
        })
        .collect()
}
