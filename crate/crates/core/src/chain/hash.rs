use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256, Sha512_256};

/// A 256-bit block digest.
pub type Digest = [u8; 32];

/// All-zero digest used as the `prev_hash` of a genesis block.
pub const ZERO_DIGEST: Digest = [0u8; 32];

/// The 256-bit hash used for block linkage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashAlgorithm {
    #[default]
    Sha256,
    #[serde(rename = "sha512-256")]
    Sha512_256,
}

impl HashAlgorithm {
    pub fn digest(self, data: &[u8]) -> Digest {
        match self {
            HashAlgorithm::Sha256 => Sha256::digest(data).into(),
            HashAlgorithm::Sha512_256 => Sha512_256::digest(data).into(),
        }
    }

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
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sha256" | "sha-256" => Ok(HashAlgorithm::Sha256),
            "sha512-256" | "sha512/256" | "sha-512/256" => Ok(HashAlgorithm::Sha512_256),
            other => Err(format!("unknown hash algorithm `{other}`")),
        }
    }
}

/// Lowercase hex rendering of a digest.
pub fn to_hex(digest: &Digest) -> String {
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // Published FIPS 180-4 test vectors.
    const SHA256_EMPTY: &str = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
    const SHA256_ABC: &str = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
    const SHA512_256_EMPTY: &str = "c672b8d1ef56ed28ab87c3622c5114069bdd3ad7b8f9737498d0c01ecef0967a";
    const SHA512_256_ABC: &str = "53048e2681941ef99b2e29b76b4c7dabe4c2d0c634fc6d46e0e2f13107e7af23";

    #[test]
    fn sha256_matches_published_vectors() {
        assert_eq!(to_hex(&HashAlgorithm::Sha256.digest(b"")), SHA256_EMPTY);
        assert_eq!(to_hex(&HashAlgorithm::Sha256.digest(b"abc")), SHA256_ABC);
    }

    #[test]
    fn sha512_256_matches_published_vectors() {
        assert_eq!(to_hex(&HashAlgorithm::Sha512_256.digest(b"")), SHA512_256_EMPTY);
        assert_eq!(to_hex(&HashAlgorithm::Sha512_256.digest(b"abc")), SHA512_256_ABC);
    }

    #[test]
    fn parses_names() {
        assert_eq!("SHA256".parse::<HashAlgorithm>().unwrap(), HashAlgorithm::Sha256);
        assert_eq!(
            "sha512-256".parse::<HashAlgorithm>().unwrap(),
            HashAlgorithm::Sha512_256
        );
        assert!("md5".parse::<HashAlgorithm>().is_err());
    }
}
