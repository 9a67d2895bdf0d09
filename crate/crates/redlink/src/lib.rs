//! Deterministic discrete-event simulator and analysis toolkit for
//! seamless-redundant (PRP-style) Wi-Fi links.
//!
//! The crate models a redundant station driving duplicate packet copies over
//! two Wi-Fi channels through one or two access points onto a wired port,
//! with pluggable interference sources (DTIM multicast buffering, network
//! manager scan blackouts, AP forwarding stalls, adjacent-channel coupling
//! between co-located adapters), and provides the statistics used to judge
//! whether the two channels behave as independent paths: latency summaries,
//! CCDF/PDF curves, the closed-form redundant-link CCDF/PLR composition, and
//! a distribution-distance independence verdict.
//!
//! Entry points:
//! - [`scenario::Scenario`] — declarative experiment description (TOML).
//! - [`sim::run_simulation`] — execute a scenario into per-channel traces.
//! - [`report`] — trace files, summaries, analysis reports.

pub mod analysis;
pub mod engine;
pub mod impairments;
pub mod mac;
pub mod prp;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod trace;
pub mod traffic;

pub use engine::{EventId, EventQueue, ScheduleError};
pub use rng::RngStreams;
pub use time::SimTime;
