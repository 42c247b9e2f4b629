pub mod codon;
pub mod crypto;
pub mod error;
pub mod fold;
pub mod pbox;
pub mod keyforge;
pub mod envelope;
pub mod sts;
pub mod qattack;
pub mod harness;
