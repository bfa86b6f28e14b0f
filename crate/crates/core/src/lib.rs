//! Simulator and trainer for a free-floating multi-arm space robot.
//!
//! The crate is `no_std` (it only needs `alloc`) and holds every algorithmic
//! piece: zero-gravity floating-base dynamics, the robot presets, the
//! multi-agent environment with its rewards, a small MLP stack, MAPPO with
//! centralized critics, and the hierarchical agent division with policy
//! reassembly. File formats, the CLI and parallel rollout workers live in the
//! `spacearm-cli` companion crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assembly;
pub mod dynamics;
pub mod env;
mod error;
pub mod eval;
pub mod marl;
pub mod math;
pub mod nn;
pub mod robot;

pub use error::{Error, Result};

pub use nalgebra::{Matrix3, UnitQuaternion, Vector3};
