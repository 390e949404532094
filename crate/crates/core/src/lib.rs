//! Model checking of timed alternating-time temporal logic on timed
//! multiplayer games, by on-the-fly minimum fixed points on extended
//! abstract dependency graphs.

pub mod bench;
pub mod cli;
pub mod dbm;
pub mod encoding;
pub mod engine;
pub mod federation;
pub mod lex;
pub mod logic;
pub mod model;
pub mod oracle;
pub mod symbolic;
