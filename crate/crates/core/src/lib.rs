pub mod analysis;
pub mod central;
pub mod channel;
pub mod cli;
pub mod codec;
pub mod coop;
pub mod error;
pub mod galois;
pub mod harness;
pub mod idnc;
pub mod keyshare;
pub mod oracle;
