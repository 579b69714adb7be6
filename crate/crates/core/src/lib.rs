//! Swarm simulation and command stack: point-mass world, flocking and
//! formation control, tasks, mode-gated command dispatch, gesture
//! classification with decision fusion, and the UDP wire protocol.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN on purpose

pub mod assignment;
pub mod command;
pub mod controller;
pub mod engine;
pub mod error;
pub mod flocking;
pub mod formation;
pub mod fusion;
pub mod geom;
pub mod gesture;
pub mod grouping;
pub mod mapping;
pub mod netproto;
pub mod pipeline;
pub mod scenario;
pub mod tasks;
pub mod world;

pub use command::{Action, Command, Mode, Scope};
pub use controller::{ControlParams, ControllerState, Echo};
pub use engine::Engine;
pub use error::{Error, Result};
pub use geom::{Vec2, Vec3};
pub use world::{SwarmWorld, UavState};
