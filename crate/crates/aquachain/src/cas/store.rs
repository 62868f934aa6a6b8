//! Chunking, manifests, and the embedded blob store.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::cid::{cid_of_blob, Cid, CidError, CODEC_MANIFEST};
use crate::chain::sha256;

/// Default chunk size, matching the common IPFS chunker default.
pub const DEFAULT_CHUNK_SIZE: usize = 262_144;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CasError {
    #[error("chunk_size must be at least 1")]
    ZeroChunkSize,
    #[error("blob not found: {0}")]
    NotFound(Cid),
    #[error("invalid manifest encoding: {0}")]
    BadManifest(String),
    #[error(transparent)]
    BadCid(#[from] CidError),
}

/// Splits `data` into fixed-size chunks. All chunks have length `chunk_size`
/// except possibly the last; empty input yields a single empty chunk so that
/// every file has a CID.
pub fn chunk_bytes(data: &[u8], chunk_size: usize) -> Result<Vec<&[u8]>, CasError> {
    if chunk_size == 0 {
        return Err(CasError::ZeroChunkSize);
    }
    if data.is_empty() {
        return Ok(vec![&data[..0]]);
    }
    Ok(data.chunks(chunk_size).collect())
}

/// Ordered list of (chunk CID, chunk length) pairs describing a multi-chunk
/// file. A simplified stand-in for a UnixFS DAG node; repo-internal only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub chunks: Vec<(Cid, u64)>,
}

impl Manifest {
    pub fn total_len(&self) -> u64 {
        self.chunks.iter().map(|(_, len)| len).sum()
    }

    /// Canonical encoding: u32 count, then per chunk a 36-byte CID and a
    /// u64 length, all big-endian.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.chunks.len() * 44);
        out.extend_from_slice(&(self.chunks.len() as u32).to_be_bytes());
        for (cid, len) in &self.chunks {
            out.extend_from_slice(&cid.to_bytes());
            out.extend_from_slice(&len.to_be_bytes());
        }
        out
    }

    pub fn decode(data: &[u8]) -> Result<Manifest, CasError> {
        if data.len() < 4 {
            return Err(CasError::BadManifest("truncated count".into()));
        }
        let count = u32::from_be_bytes(data[..4].try_into().unwrap()) as usize;
        if data.len() != 4 + count * 44 {
            return Err(CasError::BadManifest(format!(
                "expected {} bytes for {count} chunks, got {}",
                4 + count * 44,
                data.len()
            )));
        }
        let mut chunks = Vec::with_capacity(count);
        for i in 0..count {
            let off = 4 + i * 44;
            let cid = Cid::from_bytes(&data[off..off + 36])?;
            let len = u64::from_be_bytes(data[off + 36..off + 44].try_into().unwrap());
            chunks.push((cid, len));
        }
        Ok(Manifest { chunks })
    }
}

/// In-memory content-addressed blob store with pin bookkeeping.
///
/// Reads may be shared; callers serialize writes. Pinned CIDs are tracked for
/// the gateway workflow; eviction itself is out of scope.
#[derive(Debug, Default)]
pub struct BlobStore {
    blobs: HashMap<Cid, Vec<u8>>,
    pins: HashSet<Cid>,
    chunk_size: usize,
}

impl BlobStore {
    pub fn new() -> BlobStore {
        BlobStore::with_chunk_size(DEFAULT_CHUNK_SIZE)
    }

    pub fn with_chunk_size(chunk_size: usize) -> BlobStore {
        BlobStore { blobs: HashMap::new(), pins: HashSet::new(), chunk_size }
    }

    pub fn len(&self) -> usize {
        self.blobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blobs.is_empty()
    }

    pub fn contains(&self, cid: &Cid) -> bool {
        self.blobs.contains_key(cid)
    }

    pub fn pin(&mut self, cid: Cid) {
        self.pins.insert(cid);
    }

    pub fn is_pinned(&self, cid: &Cid) -> bool {
        self.pins.contains(cid)
    }

    /// Removes an unpinned blob. Pinned blobs are never evicted.
    pub fn evict(&mut self, cid: &Cid) -> bool {
        if self.pins.contains(cid) {
            return false;
        }
        self.blobs.remove(cid).is_some()
    }

    /// Stores `data`, chunking if needed, and returns the root CID.
    ///
    /// Single-chunk files are stored under their raw CID; larger files store
    /// every chunk plus a manifest blob under a manifest-codec CID.
    /// Idempotent: re-adding changes nothing.
    pub fn add_file(&mut self, data: &[u8]) -> Result<Cid, CasError> {
        let chunks = chunk_bytes(data, self.chunk_size)?;
        if chunks.len() == 1 {
            let cid = cid_of_blob(chunks[0]);
            self.blobs.entry(cid).or_insert_with(|| chunks[0].to_vec());
            return Ok(cid);
        }
        let mut manifest = Manifest { chunks: Vec::with_capacity(chunks.len()) };
        for chunk in chunks {
            let cid = cid_of_blob(chunk);
            self.blobs.entry(cid).or_insert_with(|| chunk.to_vec());
            manifest.chunks.push((cid, chunk.len() as u64));
        }
        let encoded = manifest.encode();
        let root = Cid::new(CODEC_MANIFEST, sha256(&encoded)).expect("manifest codec");
        self.blobs.entry(root).or_insert(encoded);
        Ok(root)
    }

    /// Reassembles a file from its root CID.
    pub fn get_file(&self, root: &Cid) -> Result<Vec<u8>, CasError> {
        let blob = self.blobs.get(root).ok_or(CasError::NotFound(*root))?;
        if !root.is_manifest() {
            return Ok(blob.clone());
        }
        let manifest = Manifest::decode(blob)?;
        let mut out = Vec::with_capacity(manifest.total_len() as usize);
        for (cid, _) in &manifest.chunks {
            let chunk = self.blobs.get(cid).ok_or(CasError::NotFound(*cid))?;
            out.extend_from_slice(chunk);
        }
        Ok(out)
    }
}

/// Root CID `add_file` would assign to `data`, without storing anything.
pub fn root_cid(data: &[u8], chunk_size: usize) -> Result<Cid, CasError> {
    let chunks = chunk_bytes(data, chunk_size)?;
    if chunks.len() == 1 {
        return Ok(cid_of_blob(chunks[0]));
    }
    let manifest = Manifest {
        chunks: chunks.iter().map(|c| (cid_of_blob(c), c.len() as u64)).collect(),
    };
    Ok(Cid::new(CODEC_MANIFEST, sha256(&manifest.encode())).expect("manifest codec"))
}
