//! A deterministic simulator and benchmark harness for a private
//! proof-of-authority chain that stores smart-water-meter batches either
//! fully on-chain or as content-addressed anchors of off-chain payloads.
//!
//! The crate is organized around the pipeline the `aquabench` binary drives:
//! [`ingest`] generates or parses meter batches, [`cas`] content-addresses
//! them, [`anchor`] turns them into chain transactions and applies them,
//! [`chain`] defines blocks and their canonical encoding, [`netsim`] runs
//! the slot-clock network simulation, [`stats`] provides the Welch t-test
//! machinery, and [`bench`] ties everything into scenarios and artifacts.

pub mod anchor;
pub mod bench;
pub mod cas;
pub mod chain;
pub mod cli;
pub mod ingest;
pub mod netsim;
pub mod stats;
