//! Unit-disk range counting: a grid of unit cells, cuttings of unit-circle
//! arcs, partition trees with a space/time trade-off, batched counting,
//! circle-intersection counting and distance selection.

pub mod batched;
pub mod cutting;
pub mod distsel;
pub mod gen;
pub mod geom;
pub mod grid;
pub mod io;
pub mod ops;
pub mod oracle;
pub mod par;
pub mod partition;
pub mod verify;
