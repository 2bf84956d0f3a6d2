//! Carbon-aware orchestration of an integrated satellite, aerial and
//! terrestrial network, driven by a digital twin.
//!
//! The crate is organized bottom-up: scenario configuration, topology and
//! environment inputs, link and energy models, the per-tick engine, the twin,
//! the policy layer, the run loop and report writers.

pub mod config;
pub mod energy;
pub mod engine;
pub mod environment;
pub mod error;
pub mod linkmodel;
pub mod orchestration;
pub mod report;
pub mod rng;
pub mod sim;
pub mod topology;
pub mod twin;

pub use config::{default_paper_scenario, load_scenario, parse_scenario, validate, ScenarioSpec};
pub use engine::{Model, World};
pub use error::{Error, Result};
pub use orchestration::PolicyKind;
