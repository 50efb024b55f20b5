pub mod ring;
pub mod seed;
pub mod exec;
pub mod series;
pub mod eval;
pub mod diagnostics;
pub mod verify;
pub mod potentials;
