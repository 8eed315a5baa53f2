//! Workbench plumbing around `wmstack-core`: bound profiles, random-program
//! generators, differential compiler-stage checks, the timing attack
//! builder, and the fixture corpus drivers shared by the command-line tool
//! and the acceptance suite.

pub mod checks;
pub mod findpass;
pub mod fixtures;
pub mod gen;
pub mod profile;
