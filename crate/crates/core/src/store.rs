//! Text formats for the server registry and for smart cards.
//!
//! Registry:
//!
//! ```text
//! authbreak-registry v1 <64 hex master key>
//! <n> <identity>
//! ...
//! ```
//!
//! `n` is the first token; the identity is the rest of the line and may
//! contain spaces. Card:
//!
//! ```text
//! authbreak-card v1
//! L=<64 hex>
//! r=<32 hex>
//! ```
//!
//! Both are UTF-8 with LF line endings. Hex is accepted in either case and
//! written in lowercase. The master key and `L` are stored in the clear:
//! these files exist to feed attack demonstrations.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::scheme::{
    Digest, MasterKey, Salt, SchemeError, ServerRecord, ServerState, SmartCard, UserIdentity,
    MASTER_KEY_LEN, SALT_LEN,
};

pub const REGISTRY_MAGIC: &str = "authbreak-registry";
pub const CARD_MAGIC: &str = "authbreak-card";
pub const FORMAT_VERSION: &str = "v1";

const CARD_DIGEST_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("file is not valid UTF-8")]
    NotUtf8,
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: &'static str },
    #[error("duplicate identity {0:?}")]
    DuplicateIdentity(String),
    #[error("unsupported format version {0:?}")]
    BadVersion(String),
    #[error("cannot be written in this format: {0}")]
    Unrepresentable(&'static str),
}

fn malformed(line: usize, reason: &'static str) -> StoreError {
    StoreError::MalformedLine { line, reason }
}

/// Splits into lines, allowing (but not requiring) a final LF.
fn lines(text: &str) -> Vec<&str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n').collect()
}

fn decode_hex<const N: usize>(
    s: &str,
    line: usize,
    reason: &'static str,
) -> Result<[u8; N], StoreError> {
    if s.len() != 2 * N {
        return Err(malformed(line, reason));
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).map_err(|_| malformed(line, reason))?;
    Ok(out)
}

fn check_header<'a>(
    header: &'a str,
    magic: &str,
    fields: usize,
) -> Result<Vec<&'a str>, StoreError> {
    let tokens: Vec<&str> = header.split(' ').collect();
    if tokens[0] != magic {
        return Err(malformed(1, "unrecognized header"));
    }
    if tokens.len() >= 2 && tokens[1] != FORMAT_VERSION {
        return Err(StoreError::BadVersion(tokens[1].to_string()));
    }
    if tokens.len() != fields {
        return Err(malformed(1, "wrong number of header fields"));
    }
    Ok(tokens)
}

pub fn render_registry(state: &ServerState) -> Result<String, StoreError> {
    let mut out = format!(
        "{REGISTRY_MAGIC} {FORMAT_VERSION} {}\n",
        hex::encode(state.master_key().as_bytes())
    );
    for record in state.records() {
        let id = std::str::from_utf8(record.id().as_bytes())
            .map_err(|_| StoreError::Unrepresentable("identity is not UTF-8"))?;
        if id.contains(['\n', '\r']) {
            return Err(StoreError::Unrepresentable(
                "identity contains a line break",
            ));
        }
        out.push_str(&format!("{} {id}\n", record.n()));
    }
    Ok(out)
}

pub fn parse_registry(text: &str) -> Result<ServerState, StoreError> {
    let lines = lines(text);
    let header = check_header(lines[0], REGISTRY_MAGIC, 3)?;
    let key = decode_hex::<MASTER_KEY_LEN>(header[2], 1, "master key must be 64 hex digits")?;

    let mut state = ServerState::new(MasterKey(key));
    for (i, line) in lines.iter().enumerate().skip(1) {
        let lineno = i + 1;
        let (n, id) = line
            .split_once(' ')
            .ok_or_else(|| malformed(lineno, "expected `<n> <identity>`"))?;
        if n.is_empty()
            || !n.bytes().all(|b| b.is_ascii_digit())
            || (n.len() > 1 && n.starts_with('0'))
        {
            return Err(malformed(
                lineno,
                "registration counter must be a decimal number",
            ));
        }
        let n: u32 = n
            .parse()
            .map_err(|_| malformed(lineno, "registration counter out of range"))?;
        if id.contains('\r') {
            return Err(malformed(lineno, "identity contains a carriage return"));
        }
        let id = UserIdentity::new(id)
            .map_err(|_| malformed(lineno, "identity must be 1 to 64 bytes"))?;
        let record = ServerRecord::new(id, n)
            .map_err(|_| malformed(lineno, "registration counter must be at least 1"))?;
        state.insert(record).map_err(|e| match e {
            SchemeError::DuplicateIdentity(id) => StoreError::DuplicateIdentity(id),
            _ => malformed(lineno, "invalid record"),
        })?;
    }
    Ok(state)
}

pub fn render_card(card: &SmartCard) -> Result<String, StoreError> {
    if card.l.len() != CARD_DIGEST_LEN {
        return Err(StoreError::Unrepresentable("card digest must be 32 bytes"));
    }
    Ok(format!(
        "{CARD_MAGIC} {FORMAT_VERSION}\nL={}\nr={}\n",
        card.l.to_hex(),
        hex::encode(card.r.as_bytes())
    ))
}

pub fn parse_card(text: &str) -> Result<SmartCard, StoreError> {
    let lines = lines(text);
    check_header(lines[0], CARD_MAGIC, 2)?;
    if lines.len() != 3 {
        let line = if lines.len() < 3 { lines.len() + 1 } else { 4 };
        return Err(malformed(line, "card file must have exactly three lines"));
    }
    let l = lines[1]
        .strip_prefix("L=")
        .ok_or_else(|| malformed(2, "expected `L=<hex>`"))?;
    let l = decode_hex::<CARD_DIGEST_LEN>(l, 2, "L must be 64 hex digits")?;
    let r = lines[2]
        .strip_prefix("r=")
        .ok_or_else(|| malformed(3, "expected `r=<hex>`"))?;
    let r = decode_hex::<SALT_LEN>(r, 3, "r must be 32 hex digits")?;
    Ok(SmartCard {
        l: Digest::from_slice(&l).expect("32-byte digest"),
        r: Salt(r),
    })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    String::from_utf8(bytes).map_err(|_| StoreError::NotUtf8)
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), StoreError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| StoreError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn save_registry(state: &ServerState, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, render_registry(state)?.as_bytes())
}

pub fn load_registry(path: &Path) -> Result<ServerState, StoreError> {
    parse_registry(&read_text(path)?)
}

pub fn save_card(card: &SmartCard, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, render_card(card)?.as_bytes())
}

pub fn load_card(path: &Path) -> Result<SmartCard, StoreError> {
    parse_card(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEY: &str = "404142434445464748494a4b4c4d4e4f505152535455565758595a5b5c5d5e5f";

    fn state(ids: &[(&str, u32)]) -> ServerState {
        ServerState::from_records(
            MasterKey(core::array::from_fn(|i| 0x40 + i as u8)),
            ids.iter()
                .map(|(id, n)| ServerRecord::new(UserIdentity::new(*id).unwrap(), *n).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn empty_registry_is_header_only() {
        let text = render_registry(&state(&[])).unwrap();
        assert_eq!(text, format!("authbreak-registry v1 {KEY}\n"));
        assert_eq!(parse_registry(&text).unwrap(), state(&[]));
    }

    #[test]
    fn registry_layout() {
        let s = state(&[("alice", 1), ("bob the builder", 7)]);
        let text = render_registry(&s).unwrap();
        assert_eq!(
            text,
            format!("authbreak-registry v1 {KEY}\n1 alice\n7 bob the builder\n")
        );
        assert_eq!(text.lines().count(), 3);
        assert_eq!(parse_registry(&text).unwrap(), s);
        // A missing final newline is tolerated.
        assert_eq!(parse_registry(text.trim_end_matches('\n')).unwrap(), s);
    }

    #[test]
    fn identity_with_leading_space_round_trips() {
        let s = state(&[(" x ", 2)]);
        assert_eq!(parse_registry(&render_registry(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn registry_errors() {
        let dup = format!("authbreak-registry v1 {KEY}\n1 alice\n2 alice\n");
        assert!(
            matches!(parse_registry(&dup), Err(StoreError::DuplicateIdentity(id)) if id == "alice")
        );
        let short = format!("authbreak-registry v1 {}\n", &KEY[..60]);
        assert!(matches!(
            parse_registry(&short),
            Err(StoreError::MalformedLine { line: 1, .. })
        ));
        let v2 = format!("authbreak-registry v2 {KEY}\n");
        assert!(matches!(parse_registry(&v2), Err(StoreError::BadVersion(v)) if v == "v2"));
        for (body, line) in [
            ("0 alice", 2),
            ("x alice", 2),
            ("1", 2),
            ("1 ", 2),
            ("01 alice", 2),
            ("1 a\r", 2),
            ("", 2),
        ] {
            let text = format!("authbreak-registry v1 {KEY}\n{body}\n");
            match parse_registry(&text) {
                Err(StoreError::MalformedLine { line: l, .. }) => assert_eq!(l, line, "{body:?}"),
                other => panic!("{body:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn unrepresentable_identities() {
        let bad = ServerState::from_records(
            MasterKey([0; 32]),
            [ServerRecord::new(UserIdentity::new(vec![0xff, 0xfe]).unwrap(), 1).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            render_registry(&bad),
            Err(StoreError::Unrepresentable(_))
        ));
        assert!(matches!(
            render_registry(&state(&["a\nb"].map(|s| (s, 1)))),
            Err(StoreError::Unrepresentable(_))
        ));
    }

    fn card() -> SmartCard {
        SmartCard {
            l: Digest::from_slice(&[0xab; 32]).unwrap(),
            r: Salt([0x0c; 16]),
        }
    }

    #[test]
    fn card_layout() {
        let text = render_card(&card()).unwrap();
        assert_eq!(
            text,
            format!(
                "authbreak-card v1\nL={}\nr={}\n",
                "ab".repeat(32),
                "0c".repeat(16)
            )
        );
        assert_eq!(parse_card(&text).unwrap(), card());
    }

    #[test]
    fn uppercase_card_is_normalized() {
        let upper = format!(
            "authbreak-card v1\nL={}\nr={}\n",
            "AB".repeat(32),
            "0C".repeat(16)
        );
        let parsed = parse_card(&upper).unwrap();
        assert_eq!(parsed, card());
        assert_eq!(render_card(&parsed).unwrap(), render_card(&card()).unwrap());
    }

    #[test]
    fn card_errors() {
        let r30 = format!(
            "authbreak-card v1\nL={}\nr={}\n",
            "ab".repeat(32),
            "0c".repeat(15)
        );
        assert!(matches!(
            parse_card(&r30),
            Err(StoreError::MalformedLine { line: 3, .. })
        ));
        let truncated_card = SmartCard {
            l: Digest::zero(2).unwrap(),
            r: Salt([0; 16]),
        };
        assert!(matches!(
            render_card(&truncated_card),
            Err(StoreError::Unrepresentable(_))
        ));
    }

    #[test]
    fn files_round_trip_and_report_paths() {
        let dir = tempfile::tempdir().unwrap();
        let reg = dir.path().join("registry.txt");
        let s = state(&[("alice", 1)]);
        save_registry(&s, &reg).unwrap();
        assert_eq!(load_registry(&reg).unwrap(), s);
        save_registry(&state(&[]), &reg).unwrap();
        assert_eq!(load_registry(&reg).unwrap(), state(&[]));

        let card_path = dir.path().join("card.txt");
        save_card(&card(), &card_path).unwrap();
        assert_eq!(load_card(&card_path).unwrap(), card());
        // Nothing but the two files is left behind.
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);

        let missing = dir.path().join("nope").join("card.txt");
        match save_card(&card(), &missing) {
            Err(StoreError::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_registry(&missing),
            Err(StoreError::Io { .. })
        ));
    }
}
