//! Capacity computations for parallel amplify-and-forward relay networks.
//!
//! The crate covers the point-to-point channel, the two-user multiple-access
//! channel (MAC) and its dual broadcast channel (BC), all relayed by a bank of
//! distributed single-antenna relays under a sum-power constraint, plus a
//! three-hop multi-antenna extension for which the MAC/BC duality is checked
//! numerically.
//!
//! Rates are in nats throughout.

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod duality;
pub mod error;
pub mod io;
pub mod multihop;
pub mod oracle;
pub mod relay;

pub use error::{AfError, Result};
