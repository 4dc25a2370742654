//! Core building blocks for stress-testing remote GUI devices.
//!
//! Everything in this crate is pure computation over owned data and only
//! needs `alloc`: the test-script language, the execution trace and its
//! resource replay, the retry loop, the three wire codecs, the GUI query
//! procedures (generic over a [`gui::DeviceLink`]), the load-generation
//! arithmetic, the tone-coded voice pipeline and the simulated device's
//! state machine. Sockets, threads and files live in the `tvstress` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agent_proto;
pub mod clock;
pub mod gui;
pub mod load;
pub mod monkey;
pub mod reply;
pub mod report;
pub mod resource;
pub mod retry;
pub mod script;
pub mod sim;
pub mod trace;
pub mod value;
pub mod verdict;
pub mod voice;

pub use clock::{Clock, VirtualClock};
pub use resource::{LoadTarget, Percentage, ReleaseTarget, ResourceKind};
pub use retry::RetryPolicy;
pub use trace::{replay_resource_state, Event, ExecutionTrace, Interface, Outcome};
pub use value::Value;
pub use verdict::{Verdict, VerdictStatus};
