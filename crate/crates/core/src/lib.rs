//! Multi-UAV gas source seeking and localisation.
//!
//! A swarm explores a square area by coordinated scanning, random walk or
//! Brownian motion until one agent senses a Gaussian plume above a
//! threshold, then localises the source with a contracting spiral formation
//! around the best-reading agent. [`engine::run_mission`] runs one mission;
//! [`harness`] runs seeded Monte Carlo sweeps and writes CSV summaries.

// NaN must fail validation, hence `!(x > 0.0)`; one Field/Phase per mission.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::large_enum_variant)]

pub mod config;
pub mod engine;
pub mod error;
pub mod exploration;
pub mod harness;
pub mod localisation;
pub mod plume;
pub mod rng;
pub mod swarm;

pub type Vec3 = nalgebra::Vector3<f64>;
