//! Concrete positive left-invariant operators and their spectral counting
//! functions N(s) = τ(E_(0,s)(𝓛)).
//!
//! * `Torus(n)`: the Laplacian on 𝕋ⁿ = ℝⁿ/2πℤⁿ, atoms |k|² with lattice
//!   multiplicities, stored exhaustively up to a cutoff.
//! * `Euclidean(n)`: the Laplacian on ℝⁿ, N(s) = |B(0, √s)| / (2π)ⁿ.
//! * `FiniteCayley`: Δ = deg·I − A on a finite group, A the adjacency of
//!   the Cayley graph with right multiplication by the generators (so Δ
//!   commutes with left translations), counting measure as trace.
//! * `PowerLaw(λ, c)`: N(s) = c·s^λ, standing in for groups whose Plancherel
//!   theory is not implemented here.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::gamma::gamma;
use crate::group::GroupTable;
use crate::mlf::{ml_value, MlError};

/// Default largest torus eigenvalue stored.
pub const DEFAULT_TORUS_CUTOFF: f64 = 1e4;
const MAX_TORUS_DIM: usize = 8;
// eigenvalues of the Cayley Laplacian closer than this are one atom
const CAYLEY_CLUSTER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid model descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("generator set is not closed under inverses: {generator} has inverse {inverse} outside the set")]
    NonSymmetricGenerators { generator: usize, inverse: usize },
    #[error("cutoff {cutoff} is too small, need at least {required}")]
    CutoffTooSmall { cutoff: f64, required: f64 },
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("counting function vanishes at s = {s}")]
    ZeroCounting { s: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Ml(#[from] MlError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralAtom {
    pub eigenvalue: f64,
    /// Trace of the eigenprojection (the multiplicity for discrete models).
    pub weight: f64,
}

/// Power-law counting exponents from the literature on nilpotent and
/// compact groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerLawPreset {
    /// Positive sub-Laplacian on the Heisenberg group ℍⁿ: λ = n + 1.
    Heisenberg { n: usize },
    /// Positive Rockland operator of homogeneous order ν on a graded group
    /// of homogeneous dimension Q: λ = Q/ν.
    Rockland { homogeneous_dim: f64, order: f64 },
    /// Sub-Laplacian on a compact Lie group of Hausdorff dimension Q: λ = Q/2.
    CompactSubLaplacian { hausdorff_dim: f64 },
    /// m-th order weighted subcoercive operator, local dimension Q*: λ = Q*/m.
    WeightedSubcoercive { local_dim: f64, order: f64 },
    /// Engel group 𝔅₄: λ = 3.
    Engel,
    /// Cartan group 𝔅₅: λ = 9/2.
    Cartan,
}

impl PowerLawPreset {
    pub fn lambda(&self) -> f64 {
        match *self {
            PowerLawPreset::Heisenberg { n } => n as f64 + 1.0,
            PowerLawPreset::Rockland {
                homogeneous_dim,
                order,
            } => homogeneous_dim / order,
            PowerLawPreset::CompactSubLaplacian { hausdorff_dim } => hausdorff_dim / 2.0,
            PowerLawPreset::WeightedSubcoercive { local_dim, order } => local_dim / order,
            PowerLawPreset::Engel => 3.0,
            PowerLawPreset::Cartan => 4.5,
        }
    }

    pub fn descriptor(&self, c: f64) -> ModelDescriptor {
        ModelDescriptor::PowerLaw {
            lambda: self.lambda(),
            c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelDescriptor {
    Torus { dim: usize, cutoff: f64 },
    Euclidean { dim: usize },
    /// `generators = None` uses [`GroupTable::standard_generators`].
    FiniteCayley {
        group: GroupTable,
        generators: Option<Vec<usize>>,
    },
    PowerLaw { lambda: f64, c: f64 },
}

impl ModelDescriptor {
    pub fn torus(dim: usize) -> Self {
        ModelDescriptor::Torus {
            dim,
            cutoff: DEFAULT_TORUS_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Torus { dim: usize },
    Euclidean { dim: usize },
    FiniteCayley { group: GroupTable, generators: Vec<usize> },
    PowerLaw { lambda: f64, c: f64 },
}

/// Orthonormal eigenbasis of a Cayley Laplacian, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyBasis {
    pub eigenvalues: Vec<f64>,
    /// Column j is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    kind: ModelKind,
    atoms: Vec<SpectralAtom>,
    cutoff: Option<f64>,
    scale: f64,
    cayley: Option<CayleyBasis>,
}

impl SpectralModel {
    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Atoms sorted by eigenvalue. Empty for closed-form models.
    pub fn atoms(&self) -> &[SpectralAtom] {
        &self.atoms
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// Largest eigenvalue below which the stored atoms are exhaustive
    /// (torus only).
    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    /// Factor applied to every eigenvalue (1 unless built by [`Self::scaled`]).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn cayley_basis(&self) -> Option<&CayleyBasis> {
        self.cayley.as_ref()
    }

    /// Total trace weight, finite only for finite groups.
    pub fn total_weight(&self) -> Option<f64> {
        match self.kind {
            ModelKind::FiniteCayley { .. } => Some(self.atoms.iter().map(|a| a.weight).sum()),
            _ => None,
        }
    }

    /// True when the model has an eigenvalue-0 atom (a non-decaying mode).
    pub fn is_compact(&self) -> bool {
        matches!(
            self.kind,
            ModelKind::Torus { .. } | ModelKind::FiniteCayley { .. }
        )
    }

    /// λ for models whose counting function is an exact power law.
    pub fn exact_lambda(&self) -> Option<f64> {
        match self.kind {
            ModelKind::Euclidean { dim } => Some(dim as f64 / 2.0),
            ModelKind::PowerLaw { lambda, .. } => Some(lambda),
            _ => None,
        }
    }

    /// The same operator multiplied by `c > 0`, so N_c(s) = N(s/c).
    pub fn scaled(&self, c: f64) -> Result<Self, SpectralError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(SpectralError::InvalidParameters(format!(
                "scale must be positive, got {c}"
            )));
        }
        let mut out = self.clone();
        out.scale *= c;
        for a in &mut out.atoms {
            a.eigenvalue *= c;
        }
        out.cutoff = out.cutoff.map(|x| x * c);
        if let Some(b) = &mut out.cayley {
            for e in &mut b.eigenvalues {
                *e *= c;
            }
        }
        Ok(out)
    }
}

pub fn build_model(descriptor: &ModelDescriptor) -> Result<SpectralModel, SpectralError> {
    match descriptor {
        ModelDescriptor::Torus { dim, cutoff } => build_torus(*dim, *cutoff),
        ModelDescriptor::Euclidean { dim } => {
            if *dim == 0 {
                return Err(SpectralError::InvalidDescriptor(
                    "Euclidean dimension must be at least 1".into(),
                ));
            }
            Ok(SpectralModel {
                kind: ModelKind::Euclidean { dim: *dim },
                atoms: Vec::new(),
                cutoff: None,
                scale: 1.0,
                cayley: None,
            })
        }
        ModelDescriptor::FiniteCayley { group, generators } => {
            let gens = generators
                .clone()
                .unwrap_or_else(|| group.standard_generators());
            build_cayley(group, gens)
        }
        ModelDescriptor::PowerLaw { lambda, c } => {
            if !(lambda.is_finite() && *lambda > 0.0) {
                return Err(SpectralError::InvalidDescriptor(format!(
                    "power-law exponent must be positive, got {lambda}"
                )));
            }
            if !(c.is_finite() && *c > 0.0) {
                return Err(SpectralError::InvalidDescriptor(format!(
                    "power-law constant must be positive, got {c}"
                )));
            }
            Ok(SpectralModel {
                kind: ModelKind::PowerLaw {
                    lambda: *lambda,
                    c: *c,
                },
                atoms: Vec::new(),
                cutoff: None,
                scale: 1.0,
                cayley: None,
            })
        }
    }
}

/// Number of k ∈ ℤⁿ with |k|² = m, for m = 0..=max.
pub fn lattice_representation_counts(dim: usize, max: usize) -> Vec<u64> {
    let mut one = vec![0u64; max + 1];
    one[0] = 1;
    let mut j = 1usize;
    while j * j <= max {
        one[j * j] = 2;
        j += 1;
    }
    let mut acc = one.clone();
    for _ in 1..dim {
        let mut next = vec![0u64; max + 1];
        for (m, &a) in acc.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let mut j = 0usize;
            while m + j * j <= max {
                next[m + j * j] += a * one[j * j];
                j += 1;
            }
        }
        acc = next;
    }
    acc
}

fn build_torus(dim: usize, cutoff: f64) -> Result<SpectralModel, SpectralError> {
    if dim == 0 || dim > MAX_TORUS_DIM {
        return Err(SpectralError::InvalidDescriptor(format!(
            "torus dimension must lie in 1..={MAX_TORUS_DIM}, got {dim}"
        )));
    }
    if cutoff.is_nan() || cutoff < 1.0 {
        return Err(SpectralError::CutoffTooSmall {
            cutoff,
            required: 1.0,
        });
    }
    if cutoff > 1e7 {
        return Err(SpectralError::InvalidDescriptor(format!(
            "torus cutoff {cutoff} exceeds the supported 1e7"
        )));
    }
    let max = cutoff.floor() as usize;
    let counts = lattice_representation_counts(dim, max);
    let atoms = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(m, &c)| SpectralAtom {
            eigenvalue: m as f64,
            weight: c as f64,
        })
        .collect();
    Ok(SpectralModel {
        kind: ModelKind::Torus { dim },
        atoms,
        cutoff: Some(cutoff),
        scale: 1.0,
        cayley: None,
    })
}

/// Δ = deg·I − A with A[g][g·s] = 1 for each generator s.
pub fn cayley_laplacian(group: &GroupTable, generators: &[usize]) -> DMatrix<f64> {
    let n = group.order();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for g in 0..n {
        lap[(g, g)] += generators.len() as f64;
        for &s in generators {
            lap[(g, group.mul(g, s))] -= 1.0;
        }
    }
    lap
}

fn build_cayley(group: &GroupTable, mut generators: Vec<usize>) -> Result<SpectralModel, SpectralError> {
    generators.sort_unstable();
    generators.dedup();
    if generators.is_empty() {
        return Err(SpectralError::InvalidDescriptor(
            "Cayley generator set is empty".into(),
        ));
    }
    for &s in &generators {
        if s >= group.order() {
            return Err(SpectralError::InvalidDescriptor(format!(
                "generator {s} is not an element of a group of order {}",
                group.order()
            )));
        }
        let inv = group.inverse(s);
        if generators.binary_search(&inv).is_err() {
            return Err(SpectralError::NonSymmetricGenerators {
                generator: s,
                inverse: inv,
            });
        }
    }
    let lap = cayley_laplacian(group, &generators);
    let eig = SymmetricEigen::new(lap);
    let n = group.order();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        // the Laplacian is positive; clamp roundoff below zero
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    let mut atoms: Vec<SpectralAtom> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[start] <= CAYLEY_CLUSTER_TOL * (1.0 + eigenvalues[start]) {
            end += 1;
        }
        let cluster = &eigenvalues[start..end];
        let mean = cluster.iter().sum::<f64>() / cluster.len() as f64;
        // integer spectra are common; snap when within roundoff
        let value = if (mean - mean.round()).abs() < CAYLEY_CLUSTER_TOL {
            mean.round()
        } else {
            mean
        };
        atoms.push(SpectralAtom {
            eigenvalue: value,
            weight: cluster.len() as f64,
        });
        for e in &mut eigenvalues[start..end] {
            *e = value;
        }
        start = end;
    }
    Ok(SpectralModel {
        kind: ModelKind::FiniteCayley {
            group: group.clone(),
            generators,
        },
        atoms,
        cutoff: None,
        scale: 1.0,
        cayley: Some(CayleyBasis {
            eigenvalues,
            eigenvectors: vectors,
        }),
    })
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    std::f64::consts::PI.powf(h) / gamma(h + 1.0)
}

/// N(s) = τ(E_(0,s)(𝓛)): the trace weight of the spectrum in the open
/// interval (0, s). The eigenvalue-0 atom never counts. For the torus,
/// values of s above the cutoff only see the stored atoms.
pub fn counting_function(model: &SpectralModel, s: f64) -> f64 {
    if !(s > 0.0) {
        return 0.0;
    }
    let s0 = s / model.scale;
    match model.kind {
        ModelKind::Euclidean { dim } => {
            unit_ball_volume(dim) * s0.powf(dim as f64 / 2.0)
                / (2.0 * std::f64::consts::PI).powi(dim as i32)
        }
        ModelKind::PowerLaw { lambda, c } => c * s0.powf(lambda),
        ModelKind::Torus { .. } | ModelKind::FiniteCayley { .. } => {
            let end = model.atoms.partition_point(|a| a.eigenvalue < s);
            model.atoms[..end]
                .iter()
                .filter(|a| a.eigenvalue > 0.0)
                .map(|a| a.weight)
                .sum()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaFit {
    pub lambda_hat: f64,
    pub c_hat: f64,
    pub r_squared: f64,
    pub s_range: (f64, f64),
}

impl LambdaFit {
    /// Minimum r² before `lambda_hat` is trusted downstream.
    pub const MIN_R_SQUARED: f64 = 0.99;

    pub fn is_reliable(&self) -> bool {
        self.r_squared >= Self::MIN_R_SQUARED
    }
}

/// `points` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo * (ratio * i as f64).exp()
            }
        })
        .collect()
}

/// Least-squares line through (x, y); returns (slope, intercept, r²).
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

/// Fits N(s) ≈ c·s^λ on a grid spanning at least two decades.
pub fn fit_lambda(model: &SpectralModel, s_grid: &[f64]) -> Result<LambdaFit, SpectralError> {
    if s_grid.len() < 3 {
        return Err(SpectralError::DegenerateGrid(format!(
            "need at least 3 points, got {}",
            s_grid.len()
        )));
    }
    if s_grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(SpectralError::DegenerateGrid(
            "grid points must be positive and finite".into(),
        ));
    }
    if s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectralError::DegenerateGrid(
            "grid must be strictly increasing".into(),
        ));
    }
    let (lo, hi) = (s_grid[0], s_grid[s_grid.len() - 1]);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(SpectralError::DegenerateGrid(format!(
            "grid spans {:.2} decades, need at least 2",
            (hi / lo).log10()
        )));
    }
    if let Some(cutoff) = model.cutoff {
        if hi > cutoff {
            return Err(SpectralError::CutoffTooSmall {
                cutoff,
                required: hi,
            });
        }
    }
    let mut x = Vec::with_capacity(s_grid.len());
    let mut y = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let n = counting_function(model, s);
        if n <= 0.0 {
            return Err(SpectralError::ZeroCounting { s });
        }
        x.push(s.ln());
        y.push(n.ln());
    }
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    Ok(LambdaFit {
        lambda_hat: slope,
        c_hat: intercept.exp(),
        r_squared,
        s_range: (lo, hi),
    })
}

/// Location and value of a grid supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSup {
    pub value: f64,
    pub t_at: f64,
    pub s_at: f64,
    /// The maximum sits on the largest s of the grid: the supremum may be
    /// infinite, widen the grid to tell.
    pub at_s_edge: bool,
    pub at_t_edge: bool,
}

fn check_exponents(p: f64, q: f64) -> Result<f64, SpectralError> {
    if !(p > 1.0 && p <= 2.0 && q >= 2.0 && q.is_finite()) {
        return Err(SpectralError::InvalidParameters(format!(
            "need 1 < p <= 2 <= q < inf, got p = {p}, q = {q}"
        )));
    }
    Ok(1.0 / p - 1.0 / q)
}

fn check_grid(name: &str, grid: &[f64]) -> Result<(), SpectralError> {
    if grid.is_empty() || grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(SpectralError::DegenerateGrid(format!(
            "{name} grid must be nonempty, finite and nonnegative"
        )));
    }
    Ok(())
}

fn grid_sup<F>(t_grid: &[f64], s_grid: &[f64], kernel: F) -> Result<ConditionSup, SpectralError>
where
    F: Fn(f64, f64) -> Result<f64, SpectralError> + Sync,
{
    let rows: Vec<Result<(f64, usize), SpectralError>> = t_grid
        .par_iter()
        .map(|&t| {
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (j, &s) in s_grid.iter().enumerate() {
                let v = kernel(t, s)?;
                if v > best.0 {
                    best = (v, j);
                }
            }
            Ok(best)
        })
        .collect();
    let mut out = ConditionSup {
        value: f64::NEG_INFINITY,
        t_at: t_grid[0],
        s_at: s_grid[0],
        at_s_edge: false,
        at_t_edge: false,
    };
    let s_max = s_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let t_min = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = t_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for (i, row) in rows.into_iter().enumerate() {
        let (v, j) = row?;
        if v > out.value {
            out.value = v;
            out.t_at = t_grid[i];
            out.s_at = s_grid[j];
        }
    }
    out.at_s_edge = out.s_at == s_max;
    out.at_t_edge = t_grid.len() > 1 && (out.t_at == t_min || out.t_at == t_max);
    Ok(out)
}

/// sup over the grids of N(s)^{1/p−1/q} E_β(−t^β s), the quantity the heat
/// type estimate requires to be finite (0 < β ≤ 1).
pub fn heat_condition_sup(
    model: &SpectralModel,
    p: f64,
    q: f64,
    beta: f64,
    t_grid: &[f64],
    s_grid: &[f64],
) -> Result<ConditionSup, SpectralError> {
    let gamma_exp = check_exponents(p, q)?;
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(SpectralError::InvalidParameters(format!(
            "heat type needs 0 < beta <= 1, got {beta}"
        )));
    }
    check_grid("t", t_grid)?;
    check_grid("s", s_grid)?;
    grid_sup(t_grid, s_grid, |t, s| {
        let n = counting_function(model, s).powf(gamma_exp);
        Ok(n * ml_value(beta, 1.0, -t.powf(beta) * s)?)
    })
}

/// sup over the grids of N(s)^{1/p−1/q} / (1 + t^β s), the wave type
/// hypothesis (1 < β < 2).
pub fn wave_condition_sup(
    model: &SpectralModel,
    p: f64,
    q: f64,
    beta: f64,
    t_grid: &[f64],
    s_grid: &[f64],
) -> Result<ConditionSup, SpectralError> {
    let gamma_exp = check_exponents(p, q)?;
    if !(beta > 1.0 && beta < 2.0) {
        return Err(SpectralError::InvalidParameters(format!(
            "wave type needs 1 < beta < 2, got {beta}"
        )));
    }
    check_grid("t", t_grid)?;
    check_grid("s", s_grid)?;
    grid_sup(t_grid, s_grid, |t, s| {
        Ok(counting_function(model, s).powf(gamma_exp) / (1.0 + t.powf(beta) * s))
    })
}
