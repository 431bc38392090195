//! Workbench for a dynamic-ID smart-card remote authentication scheme.
//!
//! [`scheme`] implements registration, login, mutual authentication and
//! session-key agreement. [`simulator`] runs sessions over a recorded public
//! channel. [`attacks`] recovers a user's password offline from one captured
//! login plus the card contents, and then recomputes every past session key.
//! [`store`] holds the on-disk formats and [`cli`] the command line.

pub mod attacks;
pub mod cli;
pub mod scheme;
pub mod simulator;
pub mod store;
