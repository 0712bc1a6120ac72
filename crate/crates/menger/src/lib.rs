//! Geometric self-repulsion functionals for closed polygonal space curves.
//!
//! The crate models a knotted (or unknotted) loop as a closed polygon,
//! evaluates a family of curvature-based self-avoidance energies on it —
//! triple, pair, and point circumradius sums, tangent-point energies, and a
//! regularized inverse-square pair energy — and relaxes loops by gradient
//! descent on any of them. Everything is deterministic: identical inputs
//! produce bit-identical outputs regardless of worker-thread count.

pub mod curve;
pub mod geom;
pub mod harness;
pub mod energies;
pub mod flow;
pub mod numeric;
pub mod radii;
