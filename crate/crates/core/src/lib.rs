//! Energy-efficient operating points for M-QAM users in a DS-CDMA uplink
//! with average-delay constraints.
//!
//! Each user maximizes delivered bits per joule of transmit energy by
//! choosing a square QAM constellation, a symbol rate, a target SIR and a
//! transmit power. The crate provides the efficiency functions
//! ([`modulation`]), the M/G/1 ARQ delay model ([`delay_qos`]), best
//! responses and the matched-filter Nash equilibrium ([`game`]), and the
//! sweep/report machinery behind the `qamgame` binary ([`cli`]).

pub mod cli;
pub mod delay_qos;
pub mod error;
pub mod game;
pub mod modulation;
pub mod numerics;

pub use error::{Error, Result};
