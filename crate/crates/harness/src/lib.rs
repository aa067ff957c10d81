//! Config ingestion, experiment sweeps and CSV output around the
//! pinching-antenna solvers; `pass-sim` is the CLI front end.

pub mod csv;
pub mod fileconfig;
pub mod modes;
pub mod sweeps;
pub mod validate;
