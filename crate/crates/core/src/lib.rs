//! Punctured trellis-coded modulation over intersymbol-interference channels.
//!
//! The crate covers the whole link: a binary convolutional encoder with
//! periodic puncturing ([`codec`]), set-partitioned PAM mapping driven by a
//! per-symbol bit schedule ([`mapping`]), an FIR channel with white Gaussian
//! noise ([`channel`]), joint code/channel Viterbi decoding over the
//! super-trellis ([`jointva`]), reduced-state sequence estimation with
//! per-survivor decision feedback ([`rsse`]) and a Monte Carlo BER harness
//! ([`sim`]).

pub mod channel;
pub mod codec;
pub mod error;
pub mod jointva;
pub mod link;
pub mod mapping;
pub mod rsse;
pub mod sim;

pub use error::{Error, Result};
