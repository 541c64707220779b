//! Fractional heat- and wave-type propagators E_β(−t^β 𝓛) realized by
//! spectral functional calculus on concrete groups, together with the
//! counting functions, rearrangements and norms needed to measure their
//! time decay.

// `!(x > 0.0)` is how NaN is rejected; quadrature nodes are kept as tabulated
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod gamma;
pub mod group;
pub mod mlf;
mod ml_thresholds;
mod quadrature;
pub mod spectral_model;
pub mod fractional_time;
pub mod propagator;
pub mod norms_decay;
