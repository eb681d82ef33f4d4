pub mod adversary;
pub mod analysis;
pub mod coding;
pub mod comm;
pub mod error;
pub mod field;
pub mod flooding;
pub mod harness;
pub mod network;
pub mod tracker;
