//! CIDv1 content identifiers.
//!
//! Binary form is `varint(version) || varint(codec) || multihash` where the
//! multihash is always sha2-256 (`0x12 0x20` + 32 digest bytes). Both codecs
//! used here fit a single varint byte, so every CID encodes to exactly 36
//! bytes. Text form is the multibase base32-lower encoding with a `b` prefix.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::chain::sha256;

/// Multicodec for raw binary leaves.
pub const CODEC_RAW: u64 = 0x55;
/// Repo-private codec for chunk manifests. Single-byte on purpose: it keeps
/// every CID at the same 36-byte binary length as raw-codec CIDs. Manifests
/// never leave the embedded store, so no registry interop is needed.
pub const CODEC_MANIFEST: u64 = 0x5a;

const MULTIHASH_SHA2_256: u8 = 0x12;
const DIGEST_LEN: u8 = 0x20;
const BASE32_ALPHABET: &[u8; 32] = b"abcdefghijklmnopqrstuvwxyz234567";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CidError {
    #[error("cid must be {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("unsupported cid version byte {0:#04x}")]
    BadVersion(u8),
    #[error("unsupported codec {0:#x}")]
    BadCodec(u64),
    #[error("unsupported multihash prefix {0:#04x} {1:#04x}")]
    BadMultihash(u8, u8),
    #[error("cid text must start with multibase prefix 'b'")]
    BadMultibase,
    #[error("invalid base32 character {0:?}")]
    BadBase32Char(char),
    #[error("dangling base32 padding bits")]
    BadBase32Padding,
}

/// A CIDv1 with a sha2-256 multihash.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cid {
    codec: u64,
    digest: [u8; 32],
}

impl Cid {
    pub fn new(codec: u64, digest: [u8; 32]) -> Result<Cid, CidError> {
        if codec != CODEC_RAW && codec != CODEC_MANIFEST {
            return Err(CidError::BadCodec(codec));
        }
        Ok(Cid { codec, digest })
    }

    pub fn codec(&self) -> u64 {
        self.codec
    }

    pub fn digest(&self) -> &[u8; 32] {
        &self.digest
    }

    pub fn is_manifest(&self) -> bool {
        self.codec == CODEC_MANIFEST
    }

    /// Binary form: always 36 bytes for the codecs this repo uses.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(36);
        out.push(0x01);
        put_varint(&mut out, self.codec);
        out.push(MULTIHASH_SHA2_256);
        out.push(DIGEST_LEN);
        out.extend_from_slice(&self.digest);
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Cid, CidError> {
        if data.len() != 36 {
            return Err(CidError::BadLength { expected: 36, got: data.len() });
        }
        if data[0] != 0x01 {
            return Err(CidError::BadVersion(data[0]));
        }
        let codec = data[1] as u64;
        if data[1] >= 0x80 || (codec != CODEC_RAW && codec != CODEC_MANIFEST) {
            return Err(CidError::BadCodec(codec));
        }
        if data[2] != MULTIHASH_SHA2_256 || data[3] != DIGEST_LEN {
            return Err(CidError::BadMultihash(data[2], data[3]));
        }
        let mut digest = [0u8; 32];
        digest.copy_from_slice(&data[4..]);
        Ok(Cid { codec, digest })
    }
}

impl fmt::Display for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", base32_lower(&self.to_bytes()))
    }
}

impl fmt::Debug for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cid({self})")
    }
}

impl FromStr for Cid {
    type Err = CidError;

    fn from_str(s: &str) -> Result<Cid, CidError> {
        let rest = s.strip_prefix('b').ok_or(CidError::BadMultibase)?;
        let bytes = base32_decode(rest)?;
        Cid::from_bytes(&bytes)
    }
}

/// CID of a blob under the raw codec.
pub fn cid_of_blob(data: &[u8]) -> Cid {
    Cid { codec: CODEC_RAW, digest: sha256(data) }
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// RFC 4648 base32, lowercase, no padding.
fn base32_lower(data: &[u8]) -> String {
    let mut out = String::with_capacity(data.len().div_ceil(5) * 8);
    let mut bits: u32 = 0;
    let mut nbits = 0;
    for &byte in data {
        bits = (bits << 8) | byte as u32;
        nbits += 8;
        while nbits >= 5 {
            nbits -= 5;
            out.push(BASE32_ALPHABET[((bits >> nbits) & 31) as usize] as char);
        }
    }
    if nbits > 0 {
        out.push(BASE32_ALPHABET[((bits << (5 - nbits)) & 31) as usize] as char);
    }
    out
}

fn base32_decode(s: &str) -> Result<Vec<u8>, CidError> {
    let mut out = Vec::with_capacity(s.len() * 5 / 8);
    let mut bits: u32 = 0;
    let mut nbits = 0;
    for c in s.chars() {
        let v = match c {
            'a'..='z' => c as u32 - 'a' as u32,
            '2'..='7' => c as u32 - '2' as u32 + 26,
            other => return Err(CidError::BadBase32Char(other)),
        };
        bits = (bits << 5) | v;
        nbits += 5;
        if nbits >= 8 {
            nbits -= 8;
            out.push(((bits >> nbits) & 0xff) as u8);
        }
    }
    if bits & ((1 << nbits) - 1) != 0 {
        return Err(CidError::BadBase32Padding);
    }
    Ok(out)
}
