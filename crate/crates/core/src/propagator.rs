//! Solution operators by spectral functional calculus.
//!
//! A [`Grid`] pairs a spectral model with a discretization and knows the
//! eigenvalue of every mode:
//!
//! * torus: n points per axis on [0, 2π)ⁿ, Fourier modes e^{ik·x}, |k|²;
//! * Euclidean: a periodized box [−L/2, L/2)ⁿ standing in for ℝⁿ, modes
//!   (2π m / L)². Aliasing is negligible while the solution stays well
//!   inside the box and its spectrum below the grid Nyquist frequency
//!   π n / L; choose L several times the largest diffusion length t^{β/2};
//! * finite Cayley models: functions on the group, expanded in the
//!   orthonormal eigenbasis of the Laplacian.
//!
//! Propagation multiplies every mode by a Mittag-Leffler factor, so there is
//! no time stepping anywhere in this module.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::mlf::{ml_value, MlError};
use crate::spectral_model::{ModelKind, SpectralModel};

const MAX_GRID_POINTS: usize = 1 << 24;
// modes whose eigenvalue is below this are treated as the zero mode
const ZERO_MODE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagatorError {
    #[error("grid has {got} samples, the discretization needs {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("beta = {beta} is outside {range} for {kind} type equations")]
    BetaOutOfRange {
        beta: f64,
        kind: &'static str,
        range: &'static str,
    },
    #[error("fields live on different grids")]
    ModelMismatch,
    #[error("wave type evolution needs an initial velocity w1")]
    MissingW1,
    #[error("heat type evolution takes no initial velocity")]
    W1NotAllowed,
    #[error("invalid time: {0}")]
    InvalidTime(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// How the model is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// `points` per axis on [0, 2π)ⁿ (torus models).
    Periodic { points: usize },
    /// `points` per axis on the box [−L/2, L/2)ⁿ (Euclidean models).
    Box { length: f64, points: usize },
    /// One sample per group element (finite Cayley models).
    Group,
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Fourier {
        dim: usize,
        points: usize,
        /// grid spacing
        h: f64,
        /// coordinate of index 0 along each axis
        origin: f64,
        period: f64,
    },
    Eigen,
}

/// A sampled model: node positions, measures and the eigenvalue of every
/// mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    model: SpectralModel,
    layout: Layout,
    len: usize,
    mode_eigenvalues: Vec<f64>,
    distinct: Vec<f64>,
    mode_to_distinct: Vec<usize>,
}

impl Grid {
    pub fn new(model: SpectralModel, spec: GridSpec) -> Result<Arc<Self>, PropagatorError> {
        use std::f64::consts::PI;
        let scale = model.scale();
        let (layout, mode_eigenvalues) = match (model.kind(), spec) {
            (ModelKind::Torus { dim }, GridSpec::Periodic { points }) => {
                let dim = *dim;
                check_points(dim, points)?;
                let layout = Layout::Fourier {
                    dim,
                    points,
                    h: 2.0 * PI / points as f64,
                    origin: 0.0,
                    period: 2.0 * PI,
                };
                let ev = fourier_eigenvalues(dim, points, 1.0, scale);
                (layout, ev)
            }
            (ModelKind::Euclidean { dim }, GridSpec::Box { length, points }) => {
                let dim = *dim;
                check_points(dim, points)?;
                if !(length.is_finite() && length > 0.0) {
                    return Err(PropagatorError::InvalidGrid(format!(
                        "box length must be positive, got {length}"
                    )));
                }
                let h = length / points as f64;
                let layout = Layout::Fourier {
                    dim,
                    points,
                    h,
                    origin: -((points / 2) as f64) * h,
                    period: length,
                };
                let ev = fourier_eigenvalues(dim, points, 2.0 * PI / length, scale);
                (layout, ev)
            }
            (ModelKind::FiniteCayley { .. }, GridSpec::Group) => {
                let basis = model.cayley_basis().expect("Cayley models carry a basis");
                (Layout::Eigen, basis.eigenvalues.clone())
            }
            (ModelKind::PowerLaw { .. }, _) => {
                return Err(PropagatorError::InvalidGrid(
                    "power-law models have no discretization".into(),
                ))
            }
            (kind, spec) => {
                return Err(PropagatorError::InvalidGrid(format!(
                    "{spec:?} does not fit a {} model",
                    kind_name(kind)
                )))
            }
        };
        let mut distinct = mode_eigenvalues.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mode_to_distinct = mode_eigenvalues
            .iter()
            .map(|e| distinct.partition_point(|d| d < e))
            .collect();
        Ok(Arc::new(Self {
            model,
            layout,
            len: mode_eigenvalues.len(),
            mode_eigenvalues,
            distinct,
            mode_to_distinct,
        }))
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    /// Number of nodes (and of modes).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Points per axis for each axis; `[order]` for groups.
    pub fn shape(&self) -> Vec<usize> {
        match self.layout {
            Layout::Fourier { dim, points, .. } => vec![points; dim],
            Layout::Eigen => vec![self.len],
        }
    }

    pub fn dim(&self) -> usize {
        self.shape().len()
    }

    /// Haar measure of one cell: hⁿ on tori and boxes, 1 on finite groups.
    pub fn cell_measure(&self) -> f64 {
        match self.layout {
            Layout::Fourier { dim, h, .. } => h.powi(dim as i32),
            Layout::Eigen => 1.0,
        }
    }

    pub fn total_measure(&self) -> f64 {
        self.cell_measure() * self.len as f64
    }

    /// Eigenvalue of mode `i`, in the same order as the coefficients.
    pub fn mode_eigenvalues(&self) -> &[f64] {
        &self.mode_eigenvalues
    }

    /// Index of the node at the group identity (x = 0).
    pub fn identity_index(&self) -> usize {
        match &self.layout {
            Layout::Fourier { dim, points, origin, .. } => {
                let i0 = if *origin == 0.0 { 0 } else { points / 2 };
                (0..*dim).fold(0, |acc, _| acc * points + i0)
            }
            Layout::Eigen => match self.model.kind() {
                ModelKind::FiniteCayley { group, .. } => group.identity(),
                _ => unreachable!(),
            },
        }
    }

    /// Multi-index of node `i`, last axis fastest.
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            out[a] = i % shape[a];
            i /= shape[a];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> Option<usize> {
        let shape = self.shape();
        if multi.len() != shape.len() {
            return None;
        }
        let mut i = 0;
        for (m, n) in multi.iter().zip(&shape) {
            if m >= n {
                return None;
            }
            i = i * n + m;
        }
        Some(i)
    }

    /// Coordinates of node `i` (tori and boxes).
    pub fn coordinates(&self, i: usize) -> Option<Vec<f64>> {
        match &self.layout {
            Layout::Fourier { h, origin, .. } => Some(
                self.multi_index(i)
                    .into_iter()
                    .map(|m| origin + m as f64 * h)
                    .collect(),
            ),
            Layout::Eigen => None,
        }
    }

    /// Distance from node `i` to the identity: the periodic Euclidean
    /// distance on tori and boxes, the word length on Cayley graphs.
    pub fn distance_to_identity(&self, i: usize) -> f64 {
        match &self.layout {
            Layout::Fourier { period, .. } => {
                let x = self.coordinates(i).expect("fourier layout");
                x.iter()
                    .map(|&c| {
                        let w = c - period * (c / period).round();
                        w * w
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            Layout::Eigen => self.word_lengths()[i] as f64,
        }
    }

    fn word_lengths(&self) -> Vec<usize> {
        let ModelKind::FiniteCayley { group, generators } = self.model.kind() else {
            unreachable!()
        };
        let mut dist = vec![usize::MAX; group.order()];
        let mut queue = VecDeque::from([group.identity()]);
        dist[group.identity()] = 0;
        while let Some(g) = queue.pop_front() {
            for &s in generators {
                let h = group.mul(g, s);
                if dist[h] == usize::MAX {
                    dist[h] = dist[g] + 1;
                    queue.push_back(h);
                }
            }
        }
        dist
    }

    fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }

    /// Applies `m(μ)` to every distinct eigenvalue once, in parallel.
    fn multipliers<F>(&self, m: F) -> Result<Vec<f64>, PropagatorError>
    where
        F: Fn(f64) -> Result<f64, PropagatorError> + Sync,
    {
        let distinct: Vec<f64> = self.distinct.par_iter().map(|&mu| m(mu)).collect::<Result<_, _>>()?;
        Ok(self.mode_to_distinct.iter().map(|&j| distinct[j]).collect())
    }
}

fn kind_name(kind: &ModelKind) -> &'static str {
    match kind {
        ModelKind::Torus { .. } => "torus",
        ModelKind::Euclidean { .. } => "Euclidean",
        ModelKind::FiniteCayley { .. } => "finite Cayley",
        ModelKind::PowerLaw { .. } => "power-law",
    }
}

fn check_points(dim: usize, points: usize) -> Result<(), PropagatorError> {
    let total = (points as f64).powi(dim as i32);
    if points < 2 || dim == 0 || total > MAX_GRID_POINTS as f64 {
        return Err(PropagatorError::InvalidGrid(format!(
            "{points} points per axis in dimension {dim} (at most {MAX_GRID_POINTS} nodes)"
        )));
    }
    Ok(())
}

/// Signed FFT frequency of index m on an n-point axis.
fn frequency(m: usize, n: usize) -> f64 {
    if m <= n / 2 {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

fn fourier_eigenvalues(dim: usize, points: usize, k0: f64, scale: f64) -> Vec<f64> {
    let total = points.pow(dim as u32);
    (0..total)
        .map(|mut i| {
            let mut s = 0.0;
            for _ in 0..dim {
                let k = frequency(i % points, points) * k0;
                s += k * k;
                i /= points;
            }
            scale * s
        })
        .collect()
}

/// In-place n-dimensional FFT, last axis fastest.
fn fft_nd(data: &mut [Complex64], dim: usize, points: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(points)
    } else {
        planner.plan_fft_forward(points)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); points];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = points.pow((dim - 1 - axis) as u32);
        let block = stride * points;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    /// c_k with f(x_j) = Σ_k c_k e^{ik·(x_j − x_0)}.
    Fourier(Vec<Complex64>),
    /// Coordinates in the orthonormal eigenbasis.
    Eigen(Vec<f64>),
}

impl Coefficients {
    fn scaled_by(&self, m: &[f64]) -> Self {
        match self {
            Coefficients::Fourier(c) => {
                Coefficients::Fourier(c.iter().zip(m).map(|(c, m)| c * m).collect())
            }
            Coefficients::Eigen(c) => {
                Coefficients::Eigen(c.iter().zip(m).map(|(c, m)| c * m).collect())
            }
        }
    }
}

/// A function on a grid, held by its spectral coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coefficients: Coefficients,
}

impl SpectralField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    /// |c_i| for every mode.
    pub fn magnitudes(&self) -> Vec<f64> {
        match &self.coefficients {
            Coefficients::Fourier(c) => c.iter().map(|c| c.norm()).collect(),
            Coefficients::Eigen(c) => c.iter().map(|c| c.abs()).collect(),
        }
    }

    /// (Σ w|c_i|²)^{1/2} with w the total measure on tori and boxes and 1 on
    /// groups; equal to the grid L² norm.
    pub fn l2_norm(&self) -> f64 {
        let w = match self.coefficients {
            Coefficients::Fourier(_) => self.grid.total_measure(),
            Coefficients::Eigen(_) => 1.0,
        };
        (w * self.magnitudes().iter().map(|m| m * m).sum::<f64>()).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        match &self.coefficients {
            Coefficients::Fourier(c) => c.iter().all(|c| c.norm_sqr() == 0.0),
            Coefficients::Eigen(c) => c.iter().all(|&c| c == 0.0),
        }
    }

    /// Norm of the eigenvalue-0 component (in the same weighting as
    /// [`Self::l2_norm`]).
    pub fn zero_mode_norm(&self) -> f64 {
        let mut only_zero = self.clone();
        let keep: Vec<f64> = self
            .grid
            .mode_eigenvalues
            .iter()
            .map(|&mu| if mu.abs() <= ZERO_MODE_TOL { 1.0 } else { 0.0 })
            .collect();
        only_zero.coefficients = self.coefficients.scaled_by(&keep);
        only_zero.l2_norm()
    }

    /// The projection onto the orthogonal complement of the kernel.
    pub fn mean_zero(&self) -> Self {
        let keep: Vec<f64> = self
            .grid
            .mode_eigenvalues
            .iter()
            .map(|&mu| if mu.abs() <= ZERO_MODE_TOL { 0.0 } else { 1.0 })
            .collect();
        self.with_coefficients(self.coefficients.scaled_by(&keep))
    }

    /// a·self + b·other.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self, PropagatorError> {
        if !self.grid.same_as(&other.grid) {
            return Err(PropagatorError::ModelMismatch);
        }
        let c = match (&self.coefficients, &other.coefficients) {
            (Coefficients::Fourier(x), Coefficients::Fourier(y)) => {
                Coefficients::Fourier(x.iter().zip(y).map(|(x, y)| x * a + y * b).collect())
            }
            (Coefficients::Eigen(x), Coefficients::Eigen(y)) => {
                Coefficients::Eigen(x.iter().zip(y).map(|(x, y)| a * x + b * y).collect())
            }
            _ => return Err(PropagatorError::ModelMismatch),
        };
        Ok(self.with_coefficients(c))
    }

    /// Multiplies the mode of eigenvalue μ by `m(μ)`.
    pub fn apply_multiplier<F>(&self, m: F) -> Result<Self, PropagatorError>
    where
        F: Fn(f64) -> Result<f64, PropagatorError> + Sync,
    {
        let factors = self.grid.multipliers(m)?;
        Ok(self.with_coefficients(self.coefficients.scaled_by(&factors)))
    }

    fn with_coefficients(&self, coefficients: Coefficients) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            coefficients,
        }
    }
}

/// Grid samples → spectral coefficients.
pub fn analyze(grid: &Arc<Grid>, samples: &[f64]) -> Result<SpectralField, PropagatorError> {
    if samples.len() != grid.len() {
        return Err(PropagatorError::ShapeMismatch {
            expected: grid.len(),
            got: samples.len(),
        });
    }
    let coefficients = match &grid.layout {
        Layout::Fourier { dim, points, .. } => {
            let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_nd(&mut data, *dim, *points, false);
            let norm = 1.0 / grid.len() as f64;
            data.iter_mut().for_each(|c| *c *= norm);
            Coefficients::Fourier(data)
        }
        Layout::Eigen => {
            let basis = grid.model.cayley_basis().expect("Cayley basis");
            let f = DVector::from_column_slice(samples);
            Coefficients::Eigen(basis.eigenvectors.tr_mul(&f).iter().copied().collect())
        }
    };
    Ok(SpectralField {
        grid: Arc::clone(grid),
        coefficients,
    })
}

/// Spectral coefficients → real grid samples (the imaginary part, zero up to
/// roundoff for real data, is dropped).
pub fn synthesize(field: &SpectralField) -> Vec<f64> {
    match (&field.grid.layout, &field.coefficients) {
        (Layout::Fourier { dim, points, .. }, Coefficients::Fourier(c)) => {
            let mut data = c.clone();
            fft_nd(&mut data, *dim, *points, true);
            data.iter().map(|c| c.re).collect()
        }
        (Layout::Eigen, Coefficients::Eigen(c)) => {
            let basis = field.grid.model.cayley_basis().expect("Cayley basis");
            (&basis.eigenvectors * DVector::from_column_slice(c))
                .iter()
                .copied()
                .collect()
        }
        _ => unreachable!("coefficients always match the layout"),
    }
}

fn check_time(t: f64) -> Result<(), PropagatorError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(PropagatorError::InvalidTime(format!(
            "t must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

fn check_heat_beta(beta: f64) -> Result<(), PropagatorError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(PropagatorError::BetaOutOfRange {
            beta,
            kind: "heat",
            range: "(0, 1]",
        });
    }
    Ok(())
}

fn check_wave_beta(beta: f64) -> Result<(), PropagatorError> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(PropagatorError::BetaOutOfRange {
            beta,
            kind: "wave",
            range: "(1, 2)",
        });
    }
    Ok(())
}

/// E_β(−t^β μ), the heat-type factor of a mode.
pub fn heat_factor(beta: f64, t: f64, mu: f64) -> Result<f64, PropagatorError> {
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok(ml_value(beta, 1.0, -t.powf(beta) * mu)?)
}

/// t·E_{β,2}(−t^β μ) = ∫₀ᵗ E_β(−s^β μ) ds, the factor multiplying w₁.
pub fn wave_velocity_factor(beta: f64, t: f64, mu: f64) -> Result<f64, PropagatorError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(t * ml_value(beta, 2.0, -t.powf(beta) * mu)?)
}

/// w(t) = E_β(−t^β 𝓛) w₀ for 0 < β ≤ 1.
pub fn heat_propagate(field: &SpectralField, beta: f64, t: f64) -> Result<SpectralField, PropagatorError> {
    check_heat_beta(beta)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(field.clone());
    }
    field.apply_multiplier(|mu| heat_factor(beta, t, mu))
}

/// w(t) = E_β(−t^β 𝓛) w₀ + t E_{β,2}(−t^β 𝓛) w₁ for 1 < β < 2.
pub fn wave_propagate(
    field0: &SpectralField,
    field1: &SpectralField,
    beta: f64,
    t: f64,
) -> Result<SpectralField, PropagatorError> {
    check_wave_beta(beta)?;
    check_time(t)?;
    if !field0.grid.same_as(&field1.grid) {
        return Err(PropagatorError::ModelMismatch);
    }
    if t == 0.0 {
        return Ok(field0.clone());
    }
    // a zero field needs no Mittag-Leffler evaluations
    let a = if field0.is_zero() {
        field0.clone()
    } else {
        field0.apply_multiplier(|mu| heat_factor(beta, t, mu))?
    };
    if field1.is_zero() {
        return Ok(a);
    }
    let b = field1.apply_multiplier(|mu| wave_velocity_factor(beta, t, mu))?;
    a.combine(1.0, &b, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationType {
    /// 0 < β ≤ 1
    Heat,
    /// 1 < β < 2
    Wave,
}

impl EquationType {
    pub fn for_beta(beta: f64) -> Result<Self, PropagatorError> {
        if beta > 0.0 && beta <= 1.0 {
            Ok(EquationType::Heat)
        } else {
            check_wave_beta(beta).map(|_| EquationType::Wave)
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EquationType::Heat => "heat",
            EquationType::Wave => "wave",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRequest {
    kind: EquationType,
    beta: f64,
    t_grid: Vec<f64>,
}

impl EvolutionRequest {
    /// `t_grid` must be strictly increasing and nonnegative.
    pub fn new(kind: EquationType, beta: f64, t_grid: Vec<f64>) -> Result<Self, PropagatorError> {
        match kind {
            EquationType::Heat => check_heat_beta(beta)?,
            EquationType::Wave => check_wave_beta(beta)?,
        }
        if t_grid.is_empty() {
            return Err(PropagatorError::InvalidTime("empty time grid".into()));
        }
        for &t in &t_grid {
            check_time(t)?;
        }
        if t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PropagatorError::InvalidTime(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { kind, beta, t_grid })
    }

    pub fn kind(&self) -> EquationType {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }
}

/// Evaluates the solution at every requested time (in parallel; the output
/// is in the order of the time grid).
pub fn evolve(
    request: &EvolutionRequest,
    field0: &SpectralField,
    field1: Option<&SpectralField>,
) -> Result<Vec<(f64, SpectralField)>, PropagatorError> {
    let beta = request.beta;
    match (request.kind, field1) {
        (EquationType::Heat, Some(_)) => Err(PropagatorError::W1NotAllowed),
        (EquationType::Wave, None) => Err(PropagatorError::MissingW1),
        (EquationType::Heat, None) => request
            .t_grid
            .par_iter()
            .map(|&t| heat_propagate(field0, beta, t).map(|f| (t, f)))
            .collect(),
        (EquationType::Wave, Some(w1)) => request
            .t_grid
            .par_iter()
            .map(|&t| wave_propagate(field0, w1, beta, t).map(|f| (t, f)))
            .collect(),
    }
}

/// Named initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum DataPreset {
    Zero,
    Constant(f64),
    /// exp(−d²/(2σ²)) with d the distance to the identity.
    Gaussian { sigma: f64 },
    /// Unit mass at the identity: 1/cell at one node.
    Dirac,
    /// Independent uniform samples on [−1, 1] with the mean removed.
    RandomMeanZero { seed: u64 },
    /// d^{−n/p} outside radius σ: the scale-invariant profile of L^{p,∞}.
    /// Inside, the constant p′σ^{−n/p} (p′ = p/(p−1)) keeps the mass of the
    /// untruncated profile, so the cut-off fades quickly under evolution.
    PowerProfile { p: f64, sigma: f64 },
}

impl DataPreset {
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>, PropagatorError> {
        let n = grid.len();
        let out = match *self {
            DataPreset::Zero => vec![0.0; n],
            DataPreset::Constant(c) => vec![c; n],
            DataPreset::Gaussian { sigma } => {
                positive(sigma, "sigma")?;
                (0..n)
                    .map(|i| {
                        let d = grid.distance_to_identity(i);
                        (-d * d / (2.0 * sigma * sigma)).exp()
                    })
                    .collect()
            }
            DataPreset::Dirac => {
                let mut v = vec![0.0; n];
                v[grid.identity_index()] = 1.0 / grid.cell_measure();
                v
            }
            DataPreset::RandomMeanZero { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let mean = v.iter().sum::<f64>() / n as f64;
                v.iter_mut().for_each(|x| *x -= mean);
                v
            }
            DataPreset::PowerProfile { p, sigma } => {
                positive(sigma, "sigma")?;
                if !(p.is_finite() && p > 1.0) {
                    return Err(PropagatorError::InvalidData(format!("p must be > 1, got {p}")));
                }
                let e = -(grid.dim() as f64) / p;
                let core = p / (p - 1.0) * sigma.powf(e);
                (0..n)
                    .map(|i| {
                        let d = grid.distance_to_identity(i);
                        if d < sigma {
                            core
                        } else {
                            d.powf(e)
                        }
                    })
                    .collect()
            }
        };
        Ok(out)
    }

    pub fn field(&self, grid: &Arc<Grid>) -> Result<SpectralField, PropagatorError> {
        analyze(grid, &self.sample(grid)?)
    }
}

fn positive(x: f64, name: &str) -> Result<(), PropagatorError> {
    if !(x.is_finite() && x > 0.0) {
        return Err(PropagatorError::InvalidData(format!(
            "{name} must be positive, got {x}"
        )));
    }
    Ok(())
}

/// Reads grid samples from CSV: a header, then one row per node with one
/// index column per axis (the element index on groups) followed by the
/// value. Nodes that are not listed are 0.
pub fn samples_from_csv_str(grid: &Grid, text: &str) -> Result<Vec<f64>, PropagatorError> {
    let dim = grid.dim();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = vec![0.0; grid.len()];
    let mut seen = vec![false; grid.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| PropagatorError::InvalidData(e.to_string()))?;
        if record.len() != dim + 1 {
            return Err(PropagatorError::InvalidData(format!(
                "row {row}: expected {} columns, got {}",
                dim + 1,
                record.len()
            )));
        }
        let bad = |f: &str| PropagatorError::InvalidData(format!("row {row}: cannot parse {f:?}"));
        let multi = record
            .iter()
            .take(dim)
            .map(|f| f.parse::<usize>().map_err(|_| bad(f)))
            .collect::<Result<Vec<_>, _>>()?;
        let value: f64 = record[dim].parse().map_err(|_| bad(&record[dim]))?;
        if !value.is_finite() {
            return Err(bad(&record[dim]));
        }
        let i = grid.flat_index(&multi).ok_or_else(|| {
            PropagatorError::InvalidData(format!("row {row}: index {multi:?} is off the grid"))
        })?;
        if seen[i] {
            return Err(PropagatorError::InvalidData(format!(
                "row {row}: node {multi:?} listed twice"
            )));
        }
        seen[i] = true;
        values[i] = value;
    }
    Ok(values)
}

pub fn samples_from_csv_path(grid: &Grid, path: &Path) -> Result<Vec<f64>, PropagatorError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PropagatorError::InvalidData(format!("{}: {e}", path.display())))?;
    samples_from_csv_str(grid, &text)
}
