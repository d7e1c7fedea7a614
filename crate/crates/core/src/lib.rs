//! Packet-level artificial chemistry and evolutionary protocol-stack
//! composition.
//!
//! The crate is `no_std` with `alloc`; IO, file formats and the command line
//! live in the `chemstack` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chem;
pub mod crc;
pub mod evolution;
pub mod flow;
pub mod math;
pub mod proto;
pub mod sim;
pub mod stack;
