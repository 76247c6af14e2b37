//! NR-DCSK chaotic communication under sweep jamming.
//!
//! The crate models the full link: a logistic-map NR-DCSK transmitter
//! ([`chaos`]), block Nakagami-m fading with AWGN and a linear sweep jammer
//! ([`channel`]), and three correlation receivers ([`receivers`]):
//!
//! * `plain` - moving-average filter followed by the reference/IB correlator,
//! * `wpd` - wavelet-packet jamming estimate subtracted before correlation,
//! * `vmd-ica-wpd` - variational mode decomposition into two sub-band
//!   signals, two-channel FastICA, wavelet-packet jamming removal on both
//!   ICA outputs, inverse ICA and summation, then correlation.
//!
//! [`sim`] drives seeded Monte-Carlo BER sweeps and spectrograms and writes
//! the CSV/matrix outputs consumed by plotting tools.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod chaos;
pub mod error;
pub mod ica;
pub mod receivers;
pub mod sim;
pub mod vmd;
pub mod wpd;

pub use error::{Error, Result};
