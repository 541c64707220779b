//! Frozen dispatch thresholds for the Mittag-Leffler evaluator.
//!
//! One row per α node: `(alpha, series_radius, asymptotic_threshold)`.
//! For α ≤ 1 the series radius keeps the cancellation ratio
//! E_{α,δ}(|z|)/E_{α,δ}(z) below 1e3; for α > 1 it keeps E_{α,δ}(|z|) below
//! 1e2. Both are shrunk by 20% and checked for δ ∈ {1, 2}. The asymptotic
//! threshold is twice the smallest |z| at which the optimally truncated
//! expansion reaches a relative term size of 1e-16. α = 1 and α = 2 carry
//! exact residue terms, so their thresholds only matter for non-integer δ.
//! Between nodes the evaluator takes the more conservative neighbour.

pub(crate) const ALPHA_STEP: f64 = 0.05;

pub(crate) const TABLE: [(f64, f64, f64); 40] = [
    (0.05, 0.84, 4.0),
    (0.10, 0.88, 4.0),
    (0.15, 0.96, 5.0),
    (0.20, 1.04, 5.0),
    (0.25, 1.15, 6.0),
    (0.30, 1.24, 7.0),
    (0.35, 1.36, 8.0),
    (0.40, 1.48, 9.0),
    (0.45, 1.6, 11.0),
    (0.50, 1.72, 13.0),
    (0.55, 1.88, 15.0),
    (0.60, 2.0, 18.0),
    (0.65, 2.16, 21.0),
    (0.70, 2.31, 26.0),
    (0.75, 2.44, 33.0),
    (0.80, 2.6, 38.0),
    (0.85, 2.72, 46.0),
    (0.90, 2.8, 56.0),
    (0.95, 2.8, 68.0),
    (1.00, 2.76, 50.0),
    (1.05, 4.0, 100.0),
    (1.10, 4.36, 68.0),
    (1.15, 4.76, 140.0),
    (1.20, 5.2, 170.0),
    (1.25, 5.72, 207.0),
    (1.30, 6.24, 251.0),
    (1.35, 6.84, 305.0),
    (1.40, 7.48, 207.0),
    (1.45, 8.16, 429.0),
    (1.50, 8.95, 547.0),
    (1.55, 9.8, 633.0),
    (1.60, 10.72, 808.0),
    (1.65, 11.76, 936.0),
    (1.70, 12.88, 1137.0),
    (1.75, 14.12, 1451.0),
    (1.80, 15.48, 1764.0),
    (1.85, 17.0, 2144.0),
    (1.90, 18.64, 2606.0),
    (1.95, 20.44, 3167.0),
    (2.00, 22.44, 3200.0),
];
