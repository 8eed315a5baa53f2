//! Interpreter stack for studying how compiled components pick up behaviors
//! their source never had.
//!
//! The crate hosts four small languages (an imperative source language, a
//! C-like intermediate, an assembly-like target, and a high-level observer
//! language with an introspection primitive), the compilers between them,
//! and bounded oracles that classify attacker contexts as certified,
//! refuted, or unknown at the explored bound.
//!
//! Everything here is pure and deterministic; IO, file formats and random
//! program generation live in the companion CLI crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod compile;
pub mod fsm;
pub mod imp;
pub mod oracle;
pub mod sexpr;
pub mod toya;
pub mod toyc;
pub mod toyh;
pub mod trace;
