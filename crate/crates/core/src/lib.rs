//! Billiards on confocal billiard books.
//!
//! A book is a set of elliptic disks and annuli cut out of one confocal
//! family and glued along shared ellipses by permutations. This crate
//! simulates the billiard flow on such books, compiles ordered billiard
//! games into books realising them, and computes the Fomenko graph of the
//! resulting Liouville foliation.

pub mod book;
pub mod dynamics;
pub mod fixtures;
pub mod game;
pub mod geometry;
pub mod render;
pub mod topology;

pub use book::{BilliardBook, GluingPermutation, Leaf, LeafId, LeafKind};
pub use geometry::{ConfocalFamily, Point, UnitVector};
