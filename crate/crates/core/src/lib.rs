//! Deterministic gesture-and-voice input control engine.
//!
//! Hand-landmark frames flow through [`fingers`] and [`gesture`] into
//! pointer events, transcribed utterances flow through [`intent`], and both
//! become backend [`action`]s, planned in [`plan`] and executed by a
//! [`session`]. [`eval`] scores the gesture pipeline against labels.

pub mod action;
pub mod backend;
pub mod config;
pub mod eval;
pub mod fingers;
pub mod gesture;
pub mod intent;
pub mod landmark;
pub mod plan;
pub mod pointer;
pub mod session;
pub mod stream;
pub mod weather;
