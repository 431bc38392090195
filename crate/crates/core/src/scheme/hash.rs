//! The two one-way functions of the scheme and the digest value they produce.
//!
//! Both functions share one underlying primitive and are separated by a
//! one-byte domain tag: `h(m) = H(0x00 || m)` and `h1(m) = H(0x01 || m)`.
//! Inputs are passed as a list of byte slices which are absorbed in order,
//! so callers never allocate the concatenation.

use std::fmt;
use std::str::FromStr;

use sha2::Digest as _;
use subtle::{Choice, ConstantTimeEq};

use super::SchemeError;

/// Width of the widest supported digest. Every supported algorithm emits 32 bytes.
pub const MAX_DIGEST_LEN: usize = 32;

const TAG_H: u8 = 0x00;
const TAG_H1: u8 = 0x01;

/// Underlying 256-bit hash primitive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum HashAlgorithm {
    #[default]
    Sha256,
    Sha512_256,
}

impl HashAlgorithm {
    pub const ALL: [HashAlgorithm; 2] = [HashAlgorithm::Sha256, HashAlgorithm::Sha512_256];

    pub fn name(self) -> &'static str {
        match self {
            HashAlgorithm::Sha256 => "sha256",
            HashAlgorithm::Sha512_256 => "sha512-256",
        }
    }
}

impl fmt::Display for HashAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HashAlgorithm {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sha256" | "sha-256" => Ok(HashAlgorithm::Sha256),
            "sha512-256" | "sha512_256" | "sha-512/256" => Ok(HashAlgorithm::Sha512_256),
            _ => Err(SchemeError::InvalidArgument("unknown hash algorithm")),
        }
    }
}

/// A fixed-width digest of 1..=32 bytes.
///
/// Equality is constant time in the digest contents.
#[derive(Clone, Copy)]
pub struct Digest {
    bytes: [u8; MAX_DIGEST_LEN],
    len: u8,
}

impl Digest {
    pub fn from_slice(bytes: &[u8]) -> Result<Self, SchemeError> {
        if bytes.is_empty() || bytes.len() > MAX_DIGEST_LEN {
            return Err(SchemeError::InvalidArgument("digest must be 1 to 32 bytes"));
        }
        let mut out = [0u8; MAX_DIGEST_LEN];
        out[..bytes.len()].copy_from_slice(bytes);
        Ok(Digest {
            bytes: out,
            len: bytes.len() as u8,
        })
    }

    pub fn from_hex(s: &str) -> Result<Self, SchemeError> {
        let raw =
            hex::decode(s).map_err(|_| SchemeError::InvalidArgument("digest is not valid hex"))?;
        Digest::from_slice(&raw)
    }

    /// The all-zero digest of the given width.
    pub fn zero(len: usize) -> Result<Self, SchemeError> {
        if len == 0 || len > MAX_DIGEST_LEN {
            return Err(SchemeError::InvalidArgument("digest must be 1 to 32 bytes"));
        }
        Ok(Digest {
            bytes: [0u8; MAX_DIGEST_LEN],
            len: len as u8,
        })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.len as usize]
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    /// Byte-wise XOR of two digests of equal width.
    pub fn xor(&self, other: &Digest) -> Result<Digest, SchemeError> {
        if self.len != other.len {
            return Err(SchemeError::DigestLengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let mut out = *self;
        for (a, b) in out.bytes.iter_mut().zip(other.bytes.iter()) {
            *a ^= b;
        }
        Ok(out)
    }

    /// Returns a copy with bit `bit` (counted from the most significant bit of byte 0) inverted.
    pub fn with_bit_flipped(&self, bit: usize) -> Digest {
        let mut out = *self;
        let idx = (bit / 8) % self.len();
        out.bytes[idx] ^= 0x80 >> (bit % 8);
        out
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.as_bytes())
    }
}

impl ConstantTimeEq for Digest {
    fn ct_eq(&self, other: &Self) -> Choice {
        // Slices of different length compare unequal without inspecting contents.
        self.as_bytes().ct_eq(other.as_bytes())
    }
}

impl PartialEq for Digest {
    fn eq(&self, other: &Self) -> bool {
        self.ct_eq(other).into()
    }
}

impl Eq for Digest {}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// The pair of hash functions `h` and `h1` together with the output width.
///
/// A width below 32 bytes truncates the primitive's output; it exists so that
/// exhaustive tests can work in a small digest space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashSuite {
    algorithm: HashAlgorithm,
    digest_len: usize,
}

impl Default for HashSuite {
    fn default() -> Self {
        HashSuite::new(HashAlgorithm::Sha256)
    }
}

impl HashSuite {
    pub fn new(algorithm: HashAlgorithm) -> Self {
        HashSuite {
            algorithm,
            digest_len: MAX_DIGEST_LEN,
        }
    }

    pub fn truncated(algorithm: HashAlgorithm, digest_len: usize) -> Result<Self, SchemeError> {
        if digest_len == 0 || digest_len > MAX_DIGEST_LEN {
            return Err(SchemeError::InvalidArgument(
                "digest length must be 1 to 32 bytes",
            ));
        }
        Ok(HashSuite {
            algorithm,
            digest_len,
        })
    }

    pub fn algorithm(&self) -> HashAlgorithm {
        self.algorithm
    }

    pub fn digest_len(&self) -> usize {
        self.digest_len
    }

    /// `h(parts[0] || parts[1] || ...)`
    pub fn h(&self, parts: &[&[u8]]) -> Digest {
        self.tagged(TAG_H, parts)
    }

    /// `h1(parts[0] || parts[1] || ...)`
    pub fn h1(&self, parts: &[&[u8]]) -> Digest {
        self.tagged(TAG_H1, parts)
    }

    fn tagged(&self, tag: u8, parts: &[&[u8]]) -> Digest {
        let full: [u8; MAX_DIGEST_LEN] = match self.algorithm {
            HashAlgorithm::Sha256 => absorb(sha2::Sha256::new(), tag, parts),
            HashAlgorithm::Sha512_256 => absorb(sha2::Sha512_256::new(), tag, parts),
        };
        let mut bytes = [0u8; MAX_DIGEST_LEN];
        bytes[..self.digest_len].copy_from_slice(&full[..self.digest_len]);
        Digest {
            bytes,
            len: self.digest_len as u8,
        }
    }
}

fn absorb<D: sha2::Digest>(mut hasher: D, tag: u8, parts: &[&[u8]]) -> [u8; MAX_DIGEST_LEN] {
    hasher.update([tag]);
    for part in parts {
        hasher.update(part);
    }
    let out = hasher.finalize();
    let mut buf = [0u8; MAX_DIGEST_LEN];
    buf.copy_from_slice(&out[..MAX_DIGEST_LEN]);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_and_h1_differ() {
        let suite = HashSuite::default();
        assert_ne!(suite.h(&[b"abc"]), suite.h1(&[b"abc"]));
        assert_ne!(suite.h(&[]), suite.h1(&[]));
    }

    #[test]
    fn parts_are_concatenated() {
        let suite = HashSuite::default();
        assert_eq!(suite.h(&[b"ab", b"c"]), suite.h(&[b"abc"]));
        assert_eq!(suite.h1(&[b"a", b"", b"bc"]), suite.h1(&[b"abc"]));
    }

    #[test]
    fn truncation_is_a_prefix() {
        let full = HashSuite::default();
        let short = HashSuite::truncated(HashAlgorithm::Sha256, 2).unwrap();
        let a = full.h(&[b"xyz"]);
        let b = short.h(&[b"xyz"]);
        assert_eq!(b.len(), 2);
        assert_eq!(b.as_bytes(), &a.as_bytes()[..2]);
    }

    #[test]
    fn algorithms_disagree() {
        let a = HashSuite::new(HashAlgorithm::Sha256).h(&[b"x"]);
        let b = HashSuite::new(HashAlgorithm::Sha512_256).h(&[b"x"]);
        assert_ne!(a, b);
    }

    #[test]
    fn bad_widths_rejected() {
        assert!(HashSuite::truncated(HashAlgorithm::Sha256, 0).is_err());
        assert!(HashSuite::truncated(HashAlgorithm::Sha256, 33).is_err());
        assert!(Digest::from_slice(&[]).is_err());
        assert!(Digest::from_slice(&[0u8; 33]).is_err());
        assert!(Digest::zero(0).is_err());
        assert!(Digest::zero(40).is_err());
        assert_eq!(Digest::zero(32).unwrap().as_bytes(), &[0u8; 32]);
    }

    #[test]
    fn xor_length_mismatch() {
        let a = Digest::from_slice(&[1, 2, 3]).unwrap();
        let b = Digest::from_slice(&[1, 2]).unwrap();
        assert_eq!(
            a.xor(&b),
            Err(SchemeError::DigestLengthMismatch { left: 3, right: 2 })
        );
        assert_ne!(a, b);
    }

    #[test]
    fn bit_flip_changes_exactly_one_bit() {
        let d = Digest::from_slice(&[0u8; 4]).unwrap();
        let f = d.with_bit_flipped(9);
        assert_eq!(f.as_bytes(), &[0, 0x40, 0, 0]);
        assert_eq!(f.with_bit_flipped(9), d);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for alg in HashAlgorithm::ALL {
            assert_eq!(alg.name().parse::<HashAlgorithm>().unwrap(), alg);
        }
        assert!("md5".parse::<HashAlgorithm>().is_err());
    }
}
