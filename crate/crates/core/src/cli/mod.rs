//! The `authbreak` command line.
//!
//! Exit codes are stable: see [`exit`].

mod demo;
mod output;

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::attacks::{self, AttackError};
use crate::scheme::{
    self, HashAlgorithm, HashSuite, MasterKey, Password, Salt, SchemeError, ServerState,
    SessionKey, Timestamp, UserIdentity, DEFAULT_WINDOW_SECS, MASTER_KEY_LEN,
};
use crate::simulator::{self, LogicalClock, Outcome, SessionTranscript, UserDevice};
use crate::store::{self, StoreError};

pub use output::{OutputMode, Report};

pub mod exit {
    pub const SUCCESS: u8 = 0;
    /// Guessing exhausted its word list, keys did not verify, or there was no data to attack.
    pub const ATTACK_FAILED: u8 = 1;
    pub const DUPLICATE_IDENTITY: u8 = 2;
    pub const IO: u8 = 3;
    pub const REJECTED: u8 = 4;
    pub const STALE: u8 = 5;
    /// Command-line usage error.
    pub const USAGE: u8 = 64;
}

#[derive(Debug, Parser)]
#[command(
    name = "authbreak",
    version,
    about = "Smart-card authentication scheme workbench: run sessions, guess passwords, recover session keys"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: CliConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CliConfig {
    /// Server registry file.
    #[arg(long = "registry", global = true, default_value = "registry.txt")]
    pub registry_path: PathBuf,
    /// Timestamp acceptance window in seconds.
    #[arg(long = "window", global = true, default_value_t = DEFAULT_WINDOW_SECS,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub window_seconds: u64,
    /// Seed for every random choice (master key, salts, demo scenario).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Hash primitive underlying h and h1 (sha256 or sha512-256).
    #[arg(long = "hash", global = true, default_value_t = HashAlgorithm::Sha256)]
    pub hash: HashAlgorithm,
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Human)]
    pub output_mode: OutputMode,
    /// Worker threads for password guessing.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

impl CliConfig {
    pub fn suite(&self) -> HashSuite {
        HashSuite::new(self.hash)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register a user and write their smart card.
    Register {
        #[arg(long)]
        id: String,
        /// Password; prompted for on stdin when omitted. Flags end up in shell history.
        #[arg(long)]
        password: Option<String>,
        #[arg(long)]
        card_out: PathBuf,
    },
    /// Run one login and mutual authentication, appending the transcript to a log.
    Session {
        #[arg(long)]
        card: PathBuf,
        #[arg(long)]
        password: Option<String>,
        #[arg(long, default_value = "transcript.log")]
        transcript: PathBuf,
        /// Offset of the user's clock from the server's, in seconds.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        skew: i64,
        /// Server time in seconds since the Unix epoch (defaults to the system clock).
        #[arg(long)]
        now: Option<u64>,
    },
    /// Attacks on captured transcripts.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Scripted end-to-end run: register, three sessions, eavesdrop, guess, recover keys.
    Demo,
}

#[derive(Debug, Subcommand)]
pub enum AttackCommand {
    /// Offline password guessing from a transcript log and an extracted card.
    Guess {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        card: PathBuf,
        #[arg(long)]
        wordlist: PathBuf,
    },
    /// Recover every logged session key from the card and a password.
    Fs {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        card: PathBuf,
        /// Known or previously recovered password.
        #[arg(long, required_unless_present = "wordlist")]
        password: Option<String>,
        /// Recover the password by guessing first.
        #[arg(long, conflicts_with = "password")]
        wordlist: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Duplicate(SchemeError),
    #[error("{0}")]
    NoData(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Store(_) | CliError::Io { .. } | CliError::Input(_) => exit::IO,
            CliError::Duplicate(_) => exit::DUPLICATE_IDENTITY,
            CliError::NoData(_) => exit::ATTACK_FAILED,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(source: io::Error) -> Self {
        CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses arguments and runs the command. Returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            code
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let config = &cli.config;
    let mut report = Report::new(config.output_mode, out);
    let result = match cli.command {
        Command::Register {
            ref id,
            ref password,
            ref card_out,
        } => cmd_register(config, &mut report, id, password.as_deref(), card_out),
        Command::Session {
            ref card,
            ref password,
            ref transcript,
            skew,
            now,
        } => cmd_session(
            config,
            &mut report,
            card,
            password.as_deref(),
            transcript,
            skew,
            now,
        ),
        Command::Attack(AttackCommand::Guess {
            ref transcript,
            ref card,
            ref wordlist,
        }) => cmd_attack_guess(config, &mut report, transcript, card, wordlist),
        Command::Attack(AttackCommand::Fs {
            ref transcript,
            ref card,
            ref password,
            ref wordlist,
        }) => cmd_attack_fs(
            config,
            &mut report,
            transcript,
            card,
            password.as_deref(),
            wordlist.as_deref(),
        ),
        Command::Demo => demo::cmd_demo(config, &mut report),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

fn password_arg(flag: Option<&str>) -> Result<Password, CliError> {
    let raw = match flag {
        Some(p) => p.to_string(),
        None => {
            eprint!("password: ");
            let mut line = String::new();
            io::stdin()
                .lock()
                .read_line(&mut line)
                .map_err(io_at(Path::new("<stdin>")))?;
            line.trim_end_matches(['\n', '\r']).to_string()
        }
    };
    Password::new(raw).map_err(|e| CliError::Input(e.to_string()))
}

/// RNG for one registration: distinct per identity, fixed for a given seed.
fn registration_rng(seed: u64, id: &UserIdentity) -> ChaCha20Rng {
    let digest =
        HashSuite::default().h(&[b"authbreak register", &seed.to_be_bytes(), id.as_bytes()]);
    let mut key = [0u8; 32];
    key.copy_from_slice(digest.as_bytes());
    ChaCha20Rng::from_seed(key)
}

fn load_or_create_registry(config: &CliConfig) -> Result<ServerState, CliError> {
    if config.registry_path.exists() {
        return Ok(store::load_registry(&config.registry_path)?);
    }
    let mut key = [0u8; MASTER_KEY_LEN];
    ChaCha20Rng::seed_from_u64(config.seed).fill_bytes(&mut key);
    Ok(ServerState::new(MasterKey(key)))
}

fn cmd_register(
    config: &CliConfig,
    report: &mut Report<'_>,
    id: &str,
    password: Option<&str>,
    card_out: &Path,
) -> Result<u8, CliError> {
    let suite = config.suite();
    let id = UserIdentity::new(id).map_err(|e| CliError::Input(e.to_string()))?;
    let mut state = load_or_create_registry(config)?;
    if state.find(&id).is_some() {
        return Err(CliError::Duplicate(SchemeError::DuplicateIdentity(
            id.to_string(),
        )));
    }
    let password = password_arg(password)?;
    let mut salt = [0u8; 16];
    registration_rng(config.seed, &id).fill_bytes(&mut salt);
    let card = scheme::register(&suite, &mut state, id.clone(), &password, Salt(salt))
        .map_err(CliError::Duplicate)?;

    store::save_card(&card, card_out)?;
    store::save_registry(&state, &config.registry_path)?;

    report.say(format!("registered {id} (n=1)"))?;
    report.field("identity", "identity", &id)?;
    report.field("n", "registration counter", 1)?;
    report.field("card", "card written to", card_out.display())?;
    report.field("registry", "registry", config.registry_path.display())?;
    Ok(exit::SUCCESS)
}

/// Path of the file holding the honest parties' session keys for a transcript log.
pub fn keys_path(transcript: &Path) -> PathBuf {
    let mut name = transcript.as_os_str().to_os_string();
    name.push(".keys");
    PathBuf::from(name)
}

fn append_line(path: &Path, line: &str) -> Result<(), CliError> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_at(path))?;
    writeln!(file, "{line}").map_err(io_at(path))
}

fn count_lines(path: &Path) -> Result<u64, CliError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(text.lines().filter(|l| !l.is_empty()).count() as u64),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(0),
        Err(e) => Err(io_at(path)(e)),
    }
}

fn cmd_session(
    config: &CliConfig,
    report: &mut Report<'_>,
    card_path: &Path,
    password: Option<&str>,
    transcript_path: &Path,
    skew: i64,
    now: Option<u64>,
) -> Result<u8, CliError> {
    let suite = config.suite();
    let card = store::load_card(card_path)?;
    let state = store::load_registry(&config.registry_path)?;
    let password = password_arg(password)?;
    let now = now.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let index = count_lines(transcript_path)?;
    let user = UserDevice { card, password };
    let mut clock = LogicalClock::starting_at(Timestamp(now));
    let run = simulator::run_session_with_skew(
        &suite,
        &user,
        &state,
        &mut clock,
        config.window_seconds,
        index,
        skew,
    )
    .map_err(|e| CliError::Input(e.to_string()))?;

    append_line(transcript_path, &run.transcript.to_line())?;
    if let Some(sk) = run.user_key {
        append_line(&keys_path(transcript_path), &format!("{index} {}", sk.0))?;
    }

    let outcome = run.transcript.outcome;
    report.field("session", "session", index)?;
    report.field("outcome", "outcome", outcome)?;
    let hex_or_none =
        |k: Option<SessionKey>| k.map(|k| k.0.to_hex()).unwrap_or_else(|| "none".into());
    report.field("user_sk", "user session key", hex_or_none(run.user_key))?;
    report.field(
        "server_sk",
        "server session key",
        hex_or_none(run.server_key),
    )?;
    report.field(
        "transcript",
        "transcript appended to",
        transcript_path.display(),
    )?;

    Ok(match outcome {
        Outcome::Completed if run.keys_agree() => exit::SUCCESS,
        Outcome::Completed => exit::REJECTED,
        Outcome::RejectedStale => exit::STALE,
        Outcome::RejectedUnknown | Outcome::RejectedBadAuthenticator => exit::REJECTED,
    })
}

fn load_transcripts(suite: &HashSuite, path: &Path) -> Result<Vec<SessionTranscript>, CliError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    simulator::parse_transcripts(&text, suite.digest_len())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_wordlist(path: &Path) -> Result<Vec<Password>, CliError> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    attacks::parse_wordlist(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn guess(
    config: &CliConfig,
    view: &simulator::AdversaryView,
    wordlist: &Path,
) -> Result<attacks::GuessingResult, CliError> {
    let candidates = load_wordlist(wordlist)?;
    attacks::offline_guess_parallel(&config.suite(), view, &candidates, config.jobs as usize)
        .map_err(|e| match e {
            AttackError::NoCompletedSession => CliError::NoData(e.to_string()),
            other => CliError::Input(other.to_string()),
        })
}

fn cmd_attack_guess(
    config: &CliConfig,
    report: &mut Report<'_>,
    transcript: &Path,
    card: &Path,
    wordlist: &Path,
) -> Result<u8, CliError> {
    let transcripts = load_transcripts(&config.suite(), transcript)?;
    let card = store::load_card(card)?;
    let view = simulator::eavesdrop(&transcripts, Some(&card));
    let result = guess(config, &view, wordlist)?;

    match &result.recovered {
        Some(pw) => report.field("recovered", "recovered password", pw)?,
        None => report.either("password not in word list", "recovered", "none")?,
    }
    report.field("guesses_tried", "guesses tried", result.guesses_tried)?;
    report.field("elapsed_ms", "elapsed (ms)", result.elapsed_ms)?;
    Ok(if result.recovered.is_some() {
        exit::SUCCESS
    } else {
        exit::ATTACK_FAILED
    })
}

fn load_recorded_keys(transcript: &Path) -> Result<HashMap<u64, String>, CliError> {
    let path = keys_path(transcript);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(e) => return Err(io_at(&path)(e)),
    };
    text.lines()
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            let (idx, key) = l.split_once(' ').ok_or_else(|| {
                CliError::Input(format!(
                    "{}: line {}: expected `<index> <hex>`",
                    path.display(),
                    i + 1
                ))
            })?;
            let idx = idx.parse().map_err(|_| {
                CliError::Input(format!("{}: line {}: bad index", path.display(), i + 1))
            })?;
            Ok((idx, key.to_ascii_lowercase()))
        })
        .collect()
}

fn cmd_attack_fs(
    config: &CliConfig,
    report: &mut Report<'_>,
    transcript: &Path,
    card_path: &Path,
    password: Option<&str>,
    wordlist: Option<&Path>,
) -> Result<u8, CliError> {
    let suite = config.suite();
    let transcripts = load_transcripts(&suite, transcript)?;
    let card = store::load_card(card_path)?;
    let view = simulator::eavesdrop(&transcripts, Some(&card));
    if !view
        .transcripts
        .iter()
        .any(|t| t.outcome == Outcome::Completed)
    {
        return Err(CliError::NoData(format!(
            "{}: no completed sessions to attack",
            transcript.display()
        )));
    }

    let password = match (password, wordlist) {
        (_, Some(list)) => {
            let result = guess(config, &view, list)?;
            match result.recovered {
                Some(pw) => {
                    report.field("recovered", "recovered password", &pw)?;
                    pw
                }
                None => {
                    report.either("password not in word list", "recovered", "none")?;
                    return Ok(exit::ATTACK_FAILED);
                }
            }
        }
        (pw, None) => password_arg(pw)?,
    };

    let j = attacks::derive_j_from_card(&suite, &card, &password)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let recorded = load_recorded_keys(transcript)?;
    let broken = attacks::forward_secrecy_break(&suite, &j, &view);
    report.field("long_term_secret", "long-term secret J", j.0)?;

    let mut all_ok = true;
    for key in &broken.keys {
        let hex = key.key.0.to_hex();
        let status = match recorded.get(&key.session_index) {
            Some(expected) if *expected == hex => "match",
            Some(_) => "mismatch",
            None => {
                let t = view
                    .transcripts
                    .iter()
                    .find(|t| t.session_index == key.session_index)
                    .expect("key derived from a view transcript");
                if attacks::secret_explains_transcript(&suite, &j, t) {
                    "consistent"
                } else {
                    "inconsistent"
                }
            }
        };
        all_ok &= matches!(status, "match" | "consistent");
        report.either(
            format!("session {}: sk={hex} ({status})", key.session_index),
            &format!("sk.{}", key.session_index),
            format!("{hex}:{status}"),
        )?;
    }
    if broken.skipped > 0 {
        report.field("skipped", "sessions without a key", broken.skipped)?;
    }
    report.field(
        "recovered_keys",
        "session keys recovered",
        broken.keys.len(),
    )?;
    Ok(if all_ok {
        exit::SUCCESS
    } else {
        exit::ATTACK_FAILED
    })
}
