//! Stress-test orchestration for remote GUI devices: the script
//! interpreter, the resource agent, the voice channel and a simulated
//! device, over TCP.

pub mod agent;
pub mod clock;
pub mod device;
pub mod interpreter;
pub mod net;
pub mod sim_server;
pub mod suite;
pub mod voice;

pub use tvstress_core as core;
