#![allow(dead_code)]

use std::path::{Path, PathBuf};

use authbreak::scheme::{
    Digest, MasterKey, Password, Salt, ServerRecord, ServerState, SmartCard, UserIdentity,
};
use authbreak::store::{self, StoreError};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/malformed")
}

pub fn fixtures() -> Vec<PathBuf> {
    let mut all: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    all.sort();
    all
}

/// Fixture names are `<card|registry>__<expected error>[__<note>].txt`, where
/// the expected error is `bad-version`, `duplicate-identity`, `not-utf8` or
/// `malformed-<line>`.
pub fn check_fixture(path: &Path) -> Result<String, String> {
    let name = path.file_stem().unwrap().to_str().unwrap();
    let mut parts = name.split("__");
    let kind = parts.next().unwrap();
    let expected = parts
        .next()
        .ok_or_else(|| format!("{name}: no expected error in name"))?;
    let result = match kind {
        "registry" => store::load_registry(path).map(|_| ()),
        "card" => store::load_card(path).map(|_| ()),
        other => return Err(format!("{name}: unknown fixture kind {other}")),
    };
    let err = match result {
        Ok(()) => return Err(format!("{name}: loaded without error")),
        Err(e) => e,
    };
    let ok = match (&err, expected) {
        (StoreError::BadVersion(_), "bad-version") => true,
        (StoreError::DuplicateIdentity(_), "duplicate-identity") => true,
        (StoreError::NotUtf8, "not-utf8") => true,
        (StoreError::MalformedLine { line, .. }, e) => e == format!("malformed-{line}"),
        _ => false,
    };
    if ok {
        Ok(format!("{name}: {err}"))
    } else {
        Err(format!("{name}: expected {expected}, got {err:?}"))
    }
}

pub fn random_bytes(rng: &mut ChaCha20Rng, min: usize, max: usize) -> Vec<u8> {
    let len = rng.random_range(min..=max);
    (0..len).map(|_| rng.random()).collect()
}

pub fn random_password(rng: &mut ChaCha20Rng) -> Password {
    Password::new(random_bytes(rng, 1, 128)).unwrap()
}

/// Lowercase ASCII words, the shape of a typical dictionary entry.
pub fn random_word(rng: &mut ChaCha20Rng) -> String {
    let len = rng.random_range(6..=12);
    (0..len)
        .map(|_| rng.random_range(b'a'..=b'z') as char)
        .collect()
}

/// `size` distinct words, none equal to `exclude`.
pub fn random_wordlist(rng: &mut ChaCha20Rng, size: usize, exclude: &str) -> Vec<Password> {
    let mut seen = std::collections::HashSet::with_capacity(size);
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let w = random_word(rng);
        if w != exclude && seen.insert(w.clone()) {
            out.push(Password::new(w).unwrap());
        }
    }
    out
}

/// Identities representable in the registry file: UTF-8 without line breaks.
pub fn random_file_identity(rng: &mut ChaCha20Rng) -> UserIdentity {
    const ALPHABET: [char; 12] = ['a', 'Z', '7', ' ', '-', '_', '.', 'é', 'ß', '中', '🙂', '@'];
    loop {
        let n = rng.random_range(1..=20);
        let s: String = (0..n)
            .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
            .collect();
        if let Ok(id) = UserIdentity::new(s) {
            return id;
        }
    }
}

pub fn random_state(rng: &mut ChaCha20Rng) -> ServerState {
    let mut state = ServerState::new(MasterKey(rng.random()));
    let count = rng.random_range(0..=8);
    while state.records().len() < count {
        let id = random_file_identity(rng);
        let n = if rng.random_bool(0.5) {
            1
        } else {
            rng.random_range(1..=u32::MAX)
        };
        let _ = state.insert(ServerRecord::new(id, n).unwrap());
    }
    state
}

pub fn random_card(rng: &mut ChaCha20Rng) -> SmartCard {
    SmartCard {
        l: Digest::from_slice(&rng.random::<[u8; 32]>()).unwrap(),
        r: Salt(rng.random()),
    }
}
