//! Normal forms, Bass–Serre trees, Cayley-ball geometry and flag-manifold
//! ping-pong certificates for amalgamated products and HNN extensions of
//! matrix groups.

pub mod cayley;
pub mod certify;
pub mod exact;
pub mod fixtures;
pub mod flags;
pub mod numeric;
pub mod reps;
pub mod words;
pub mod tree;
