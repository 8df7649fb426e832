//! Paper-folding schemes and the conformal geometry of their quotients.
//!
//! A scheme is a polygon (or several) whose boundary is glued to itself by
//! length-preserving, orientation-reversing segment identifications. The crate
//! builds the quotient scar as a metric graph, decides the topology of the
//! quotient, evaluates the goodness-function criterion at singular points,
//! computes collar constants and modulus-of-continuity bounds, and
//! instantiates the NBT horseshoe polygons.
#![no_std]

extern crate alloc;

pub mod collar;
pub mod criterion;
pub mod dd;
pub mod geometry;
pub mod horseshoe;
pub mod scalar;
pub mod scar;
pub mod scheme;
pub mod special;
