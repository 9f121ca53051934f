//! SHA-256 hex digests used for cache keys, prompt hashes and manifests.

use alloc::string::String;
use core::fmt::Write;

use sha2::{Digest, Sha256};

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(out, "{b:02x}");
    }
    out
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex(&Sha256::digest(data))
}

/// Digest over several parts, each length-prefixed so boundaries matter.
pub fn sha256_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

pub fn sha256_hex_parts(parts: &[&[u8]]) -> String {
    hex(&sha256_parts(parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn part_boundaries_matter() {
        assert_ne!(sha256_hex_parts(&[b"ab", b"c"]), sha256_hex_parts(&[b"a", b"bc"]));
    }
}
