//! Finite workbench for free amalgamation classes of η-hypergraphs.
//!
//! Structures, their automorphism groups and the free independence relation
//! are all handled exhaustively at small sizes.

pub mod amalgam;
pub mod cli;
pub mod error;
pub mod finstruct;
pub mod format;
pub mod generic;
pub mod independence;
pub mod perm;
pub mod permgroup;
pub mod recon;
pub(crate) mod refine;
pub mod signature;

/// Points are plain non-negative integers.
pub type Point = usize;

pub use error::{Error, Result};
pub use finstruct::{Class, FinStructure, PartialIso};
pub use perm::Perm;
pub use permgroup::{Ambient, AclMode, PermGroup};
pub use signature::EtaZetaProfile;
