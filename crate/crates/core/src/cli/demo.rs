//! Scripted reproduction of both attacks against a freshly built scenario.
//!
//! Output depends only on the seed, window and hash: no wall-clock values
//! are printed.

use rand::Rng;

use super::{CliConfig, CliError, Report};
use crate::attacks;
use crate::scheme::{Password, Timestamp, UserIdentity};
use crate::simulator::{Outcome, Simulation};

use super::exit;

pub const DEMO_START: Timestamp = Timestamp(1_700_000_000);
const SESSIONS: usize = 3;
const SECONDS_BETWEEN_SESSIONS: u64 = 300;

/// 100 common password stems; with a two-digit suffix they make a 10,000-word list.
const STEMS: [&str; 100] = [
    "password", "dragon", "monkey", "letmein", "shadow", "master", "qwerty", "sunshine",
    "princess", "football", "baseball", "welcome", "trustno", "superman", "iloveyou", "starwars",
    "freedom", "whatever", "michael", "jessica", "charlie", "jordan", "hunter", "ranger", "buster",
    "soccer", "harley", "batman", "andrew", "tigger", "thomas", "robert", "hockey", "killer",
    "george", "summer", "ashley", "yankees", "dallas", "silver", "orange", "ginger", "pepper",
    "cookie", "matrix", "mustang", "access", "flower", "banana", "chelsea", "purple", "cheese",
    "amanda", "maggie", "secret", "diamond", "falcon", "phoenix", "mercedes", "forever", "anthony",
    "nicole", "daniel", "hannah", "corvette", "marina", "winter", "spring", "autumn", "snoopy",
    "cowboy", "eagles", "lakers", "gandalf", "merlin", "coffee", "guitar", "pirate", "rocket",
    "rainbow", "london", "paris", "berlin", "madrid", "tokyo", "sydney", "boston", "chicago",
    "zxcvbn", "asdfgh", "abc123", "qazwsx", "passw0rd", "admin", "login", "changeme", "samsung",
    "google", "apple", "nintendo",
];

pub fn candidate_list() -> Vec<Password> {
    STEMS
        .iter()
        .flat_map(|stem| {
            (0..100).map(move |n| Password::new(format!("{stem}{n:02}")).expect("non-empty"))
        })
        .collect()
}

pub(super) fn cmd_demo(config: &CliConfig, report: &mut Report<'_>) -> Result<u8, CliError> {
    let suite = config.suite();
    let mut sim = Simulation::new(suite, config.seed, DEMO_START, config.window_seconds);
    let internal = |e: crate::scheme::SchemeError| CliError::Input(e.to_string());

    report.say(format!(
        "== scenario: seed {}, hash {}, window {}s ==",
        config.seed,
        suite.algorithm(),
        config.window_seconds
    ))?;
    report.field("seed", "seed", config.seed)?;

    // Registration. Bystanders make the server's identity scan non-trivial.
    let stem = STEMS[sim.rng().random_range(0..STEMS.len())];
    let suffix: u32 = sim.rng().random_range(0..100);
    let password = Password::new(format!("{stem}{suffix:02}")).map_err(internal)?;
    for (id, pw) in [
        ("bob", "correct horse battery staple"),
        ("carol", "Tr0ub4dor&3"),
    ] {
        sim.register(
            UserIdentity::new(id).map_err(internal)?,
            Password::new(pw).map_err(internal)?,
        )
        .map_err(internal)?;
    }
    let alice = sim
        .register(
            UserIdentity::new("alice").map_err(internal)?,
            password.clone(),
        )
        .map_err(internal)?;
    report.say("== registration ==")?;
    report.either(
        format!("registered bob, carol and alice; alice's password is \"{password}\""),
        "registered",
        "bob,carol,alice",
    )?;
    report.field("card_l", "alice's card L", alice.card.l)?;
    report.field(
        "card_r",
        "alice's card r",
        hex::encode(alice.card.r.as_bytes()),
    )?;

    // Honest sessions.
    report.say("== honest sessions on the public channel ==")?;
    let mut recorded = Vec::with_capacity(SESSIONS);
    for _ in 0..SESSIONS {
        let run = sim.run_session(&alice).map_err(internal)?;
        let t = &run.transcript;
        let m2 = t.m2.expect("honest session gets a response");
        report.either(
            format!(
                "session {}: {} T_U={} C1={} T_S={} C2={}",
                t.session_index, t.outcome, t.m1.t_u, t.m1.c1, m2.t_s, m2.c2
            ),
            &format!("session.{}", t.session_index),
            t.outcome,
        )?;
        report.either(
            format!(
                "session {}: agreed key sk={}",
                t.session_index,
                run.server_key.expect("completed").0
            ),
            &format!("sk.{}", t.session_index),
            run.server_key.expect("completed").0,
        )?;
        recorded.push(run);
        sim.clock_mut().advance(SECONDS_BETWEEN_SESSIONS);
    }

    // Adversary.
    let view = sim.eavesdrop(Some(&alice.card));
    report.say("== adversary: eavesdropped transcripts plus extracted card (L, r) ==")?;
    report.field("captured", "transcripts captured", view.transcripts.len())?;

    let candidates = candidate_list();
    let guess = attacks::offline_guess_parallel(&suite, &view, &candidates, config.jobs as usize)
        .map_err(|e| CliError::Input(e.to_string()))?;
    report.say(format!(
        "== offline password guessing over {} candidates ==",
        candidates.len()
    ))?;
    let Some(found) = guess.recovered else {
        report.either("password not recovered", "recovered", "none")?;
        return Ok(exit::ATTACK_FAILED);
    };
    report.field("recovered", "recovered password", &found)?;
    report.field("guesses_tried", "guesses tried", guess.guesses_tried)?;

    report.say("== forward secrecy: recompute every past session key ==")?;
    let j = attacks::derive_j_from_card(&suite, &alice.card, &found).map_err(internal)?;
    report.field("long_term_secret", "long-term secret J", j.0)?;
    let broken = attacks::forward_secrecy_break(&suite, &j, &view);
    let mut matched = 0;
    for (key, run) in broken.keys.iter().zip(&recorded) {
        let ok = Some(key.key) == run.server_key && run.transcript.outcome == Outcome::Completed;
        matched += usize::from(ok);
        report.either(
            format!(
                "session {}: recovered sk={} ({})",
                key.session_index,
                key.key.0,
                if ok { "matches" } else { "MISMATCH" }
            ),
            &format!("recovered.{}", key.session_index),
            if ok { "match" } else { "mismatch" },
        )?;
    }
    let all = matched == SESSIONS;
    report.field(
        "recovered_keys",
        "session keys matching the honest ones",
        format!("{matched}/{SESSIONS}"),
    )?;
    report.either(
        if all {
            format!("all {SESSIONS} session keys recovered")
        } else {
            format!("only {matched} of {SESSIONS} session keys recovered")
        },
        "all_session_keys_recovered",
        all,
    )?;
    Ok(if all {
        exit::SUCCESS
    } else {
        exit::ATTACK_FAILED
    })
}
