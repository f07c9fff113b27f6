//! Engine for face-to-face remote collaboration over a shared 3D volume.
//!
//! Two rooms are glued through a virtual tunnel between their displays.
//! The crate covers the tunnel geometry and head-coupled projection, the
//! per-condition transforms of workspace and remote person, a checkerboard
//! puzzle workspace, a reference-frame consistency analyzer, the two-channel
//! wire protocol with its session state machine, and a runtime with a
//! deterministic network simulator, a live server and a web gateway.

pub mod awareness;
pub mod board;
pub mod geometry;
pub mod protocol;
pub mod runtime;
pub mod tasks;

use serde::{Deserialize, Serialize};

/// Which side of the tunnel a participant is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    /// Knows the solution and the cube colors; guides.
    Instructor,
    /// Moves the cubes.
    Assembler,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::Instructor => Role::Assembler,
            Role::Assembler => Role::Instructor,
        }
    }
}
