//! Content-addressed storage: CID computation following the multiformats
//! conventions (CIDv1, raw codec, sha2-256 multihash, base32 multibase text),
//! fixed-size chunking with a manifest node for multi-chunk files, an
//! embedded blob store with pinning, and a client for a Kubo-compatible
//! HTTP RPC daemon.

mod cid;
mod remote;
mod store;

pub use cid::{cid_of_blob, Cid, CidError, CODEC_MANIFEST, CODEC_RAW};
pub use remote::{default_endpoint, remote_add, remote_cat, RemoteError, ENV_IPFS_API};
pub use store::{
    chunk_bytes, root_cid, BlobStore, CasError, Manifest, DEFAULT_CHUNK_SIZE,
};
