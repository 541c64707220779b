//! Discrete Caputo derivatives and Riemann–Liouville integrals on uniform
//! grids, used to check that evolved modes satisfy ᶜ∂^β u + μu = 0.
//!
//! * `rl_integral`: product trapezoid rule. u is replaced by its piecewise
//!   linear interpolant and the kernel (t−s)^{β−1}/Γ(β) is integrated
//!   exactly against it.
//! * `caputo_derivative`, 0 < β < 1: the L1 scheme, again with exact kernel
//!   integrals over each step, of order 2 − β for smooth u.
//! * `caputo_derivative`, 1 < β < 2: I^{2−β} applied to a second difference
//!   (centred inside, one-sided second order at both ends).
//!
//! Solutions of the fractional ODE behave like t^β near t = 0, so the defect
//! at the first few nodes does not shrink with dt. [`residual_from`] and
//! [`residual_series`] let callers look past that initial layer.

use thiserror::Error;

use crate::gamma::gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractionalError {
    #[error("invalid time series: {0}")]
    InvalidSeries(String),
    #[error("beta = 1 is an ordinary derivative; use a plain difference")]
    BetaEqualsOne,
    #[error("beta = {0} is outside the supported range")]
    BetaOutOfRange(f64),
    #[error("series has {got} samples, this operator needs at least {needed}")]
    TooShort { needed: usize, got: usize },
}

/// Samples u(0), u(dt), u(2dt), ...
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub const MIN_LEN: usize = 3;

    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self, FractionalError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FractionalError::InvalidSeries(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if values.len() < Self::MIN_LEN {
            return Err(FractionalError::TooShort {
                needed: Self::MIN_LEN,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FractionalError::InvalidSeries(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self { dt, values })
    }

    /// Samples `f` at 0, dt, ..., steps·dt.
    pub fn sample(dt: f64, steps: usize, f: impl Fn(f64) -> f64) -> Result<Self, FractionalError> {
        Self::new(dt, (0..=steps).map(|k| f(k as f64 * dt)).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.time(k))
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            dt: self.dt,
            values,
        }
    }
}

/// (1/Γ(β)) ∫_0^t (t−s)^{β−1} u(s) ds at every node, β > 0.
pub fn rl_integral(series: &TimeSeries, beta: f64) -> Result<TimeSeries, FractionalError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(FractionalError::BetaOutOfRange(beta));
    }
    let u = series.values();
    let len = u.len();
    let b1 = beta + 1.0;
    // c[m] = m^{β+1}
    let c: Vec<f64> = (0..=len).map(|m| (m as f64).powf(b1)).collect();
    let scale = series.dt.powf(beta) / gamma(beta + 2.0);
    let mut out = vec![0.0; len];
    for n in 1..len {
        let nf = n as f64;
        let mut acc = (c[n - 1] - (nf - 1.0 - beta) * nf.powf(beta)) * u[0];
        for j in 1..n {
            let m = n - j;
            acc += (c[m + 1] - 2.0 * c[m] + c[m - 1]) * u[j];
        }
        acc += u[n];
        out[n] = scale * acc;
    }
    Ok(series.with_values(out))
}

/// Second difference: centred inside, (2u₀ − 5u₁ + 4u₂ − u₃)/dt² and its
/// mirror image at the ends.
fn second_difference(u: &[f64], dt: f64) -> Vec<f64> {
    let n = u.len();
    let h2 = dt * dt;
    let mut out = vec![0.0; n];
    out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
    for k in 1..n - 1 {
        out[k] = (u[k + 1] - 2.0 * u[k] + u[k - 1]) / h2;
    }
    out[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2;
    out
}

/// Caputo derivative of order β ∈ (0, 1) ∪ (1, 2) at every node; the value
/// at t = 0 is set to 0 (only its limit is defined).
pub fn caputo_derivative(series: &TimeSeries, beta: f64) -> Result<TimeSeries, FractionalError> {
    if beta == 1.0 {
        return Err(FractionalError::BetaEqualsOne);
    }
    if !(beta > 0.0 && beta < 2.0) {
        return Err(FractionalError::BetaOutOfRange(beta));
    }
    if beta > 1.0 {
        if series.len() < 4 {
            return Err(FractionalError::TooShort {
                needed: 4,
                got: series.len(),
            });
        }
        let d2 = series.with_values(second_difference(series.values(), series.dt));
        let mut out = rl_integral(&d2, 2.0 - beta)?;
        out.values[0] = 0.0;
        return Ok(out);
    }
    let u = series.values();
    let len = u.len();
    let a = 1.0 - beta;
    let b: Vec<f64> = (0..len)
        .map(|j| ((j + 1) as f64).powf(a) - (j as f64).powf(a))
        .collect();
    let scale = series.dt.powf(-beta) / gamma(2.0 - beta);
    let mut out = vec![0.0; len];
    for n in 1..len {
        let mut acc = 0.0;
        for j in 0..n {
            acc += b[j] * (u[n - j] - u[n - j - 1]);
        }
        out[n] = scale * acc;
    }
    Ok(series.with_values(out))
}

/// ᶜ∂^β u + μu at every node (0 at t = 0).
pub fn residual_series(series: &TimeSeries, beta: f64, mu: f64) -> Result<TimeSeries, FractionalError> {
    let d = caputo_derivative(series, beta)?;
    let mut values: Vec<f64> = d
        .values()
        .iter()
        .zip(series.values())
        .map(|(a, u)| a + mu * u)
        .collect();
    values[0] = 0.0;
    Ok(series.with_values(values))
}

/// max_{n ≥ 1} |ᶜ∂^β u(t_n) + μ u(t_n)|.
pub fn residual(series: &TimeSeries, beta: f64, mu: f64) -> Result<f64, FractionalError> {
    residual_from(series, beta, mu, 0.0)
}

/// As [`residual`], restricted to nodes with t_n ≥ t_from (and n ≥ 1).
pub fn residual_from(
    series: &TimeSeries,
    beta: f64,
    mu: f64,
    t_from: f64,
) -> Result<f64, FractionalError> {
    let r = residual_series(series, beta, mu)?;
    Ok(r.values()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(k, _)| r.time(*k) >= t_from - 1e-12 * r.dt)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max))
}

/// log₂ of the ratio between two errors obtained at dt and dt/2.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
