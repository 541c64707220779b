//! Experiment configuration: a TOML file, overridden by command-line flags,
//! validated and turned into core types before anything expensive runs.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use fracprop::group::GroupTable;
use fracprop::norms_decay::{default_lambda, ScalarFn};
use fracprop::propagator::{
    analyze, samples_from_csv_path, DataPreset, EquationType, Grid, GridSpec, SpectralField,
};
use fracprop::spectral_model::{
    build_model, geometric_grid, ModelDescriptor, PowerLawPreset, SpectralModel,
    DEFAULT_TORUS_CUTOFF,
};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub model: Option<ModelConfig>,
    pub grid: Option<GridConfig>,
    pub equation: Option<EquationConfig>,
    pub data: Option<DataConfig>,
    pub t_grid: Option<RangeConfig>,
    pub s_grid: Option<RangeConfig>,
    pub ml: Option<MlConfig>,
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Torus {
        dim: usize,
        cutoff: Option<f64>,
    },
    Euclidean {
        dim: usize,
    },
    Cyclic {
        n: usize,
        generators: Option<Vec<usize>>,
    },
    Dihedral {
        n: usize,
        generators: Option<Vec<usize>>,
    },
    Symmetric4 {
        generators: Option<Vec<usize>>,
    },
    /// A multiplication table read from CSV.
    Table {
        path: PathBuf,
        generators: Option<Vec<usize>>,
    },
    PowerLaw {
        lambda: f64,
        c: Option<f64>,
    },
    Heisenberg {
        n: usize,
        c: Option<f64>,
    },
    Engel {
        c: Option<f64>,
    },
    Cartan {
        c: Option<f64>,
    },
    Rockland {
        homogeneous_dim: f64,
        order: f64,
        c: Option<f64>,
    },
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Torus { dim: 1, cutoff: None }
    }
}

impl FromStr for ModelConfig {
    type Err = anyhow::Error;

    /// `torus:2`, `euclidean:1`, `cyclic:8`, `dihedral:5`, `s4`,
    /// `engel`, `cartan`, `heisenberg:1`, `power:3[:c]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let int = |i: usize| -> Result<usize> {
            parts
                .get(i)
                .ok_or_else(|| anyhow!("model {s:?} needs a size after ':'"))?
                .parse()
                .with_context(|| format!("bad integer in model {s:?}"))
        };
        let float = |i: usize| -> Result<Option<f64>> {
            parts
                .get(i)
                .map(|p| p.parse().with_context(|| format!("bad number in model {s:?}")))
                .transpose()
        };
        let expected_len = match parts[0] {
            "s4" | "symmetric4" | "engel" | "cartan" => 1,
            "power" => parts.len().clamp(2, 3),
            _ => 2,
        };
        if parts.len() != expected_len {
            bail!("cannot parse model {s:?}");
        }
        Ok(match parts[0] {
            "torus" => ModelConfig::Torus { dim: int(1)?, cutoff: None },
            "euclidean" => ModelConfig::Euclidean { dim: int(1)? },
            "cyclic" => ModelConfig::Cyclic { n: int(1)?, generators: None },
            "dihedral" => ModelConfig::Dihedral { n: int(1)?, generators: None },
            "s4" | "symmetric4" => ModelConfig::Symmetric4 { generators: None },
            "engel" => ModelConfig::Engel { c: None },
            "cartan" => ModelConfig::Cartan { c: None },
            "heisenberg" => ModelConfig::Heisenberg { n: int(1)?, c: None },
            "power" => ModelConfig::PowerLaw {
                lambda: float(1)?.ok_or_else(|| anyhow!("power model needs lambda"))?,
                c: float(2)?,
            },
            other => bail!("unknown model {other:?}"),
        })
    }
}

impl ModelConfig {
    pub fn descriptor(&self, base: &Path) -> Result<ModelDescriptor> {
        let cayley = |group: GroupTable, generators: &Option<Vec<usize>>| {
            ModelDescriptor::FiniteCayley {
                group,
                generators: generators.clone(),
            }
        };
        let preset = |p: PowerLawPreset, c: Option<f64>| p.descriptor(c.unwrap_or(1.0));
        Ok(match self {
            ModelConfig::Torus { dim, cutoff } => ModelDescriptor::Torus {
                dim: *dim,
                cutoff: cutoff.unwrap_or(DEFAULT_TORUS_CUTOFF),
            },
            ModelConfig::Euclidean { dim } => ModelDescriptor::Euclidean { dim: *dim },
            ModelConfig::Cyclic { n, generators } => cayley(GroupTable::cyclic(*n)?, generators),
            ModelConfig::Dihedral { n, generators } => {
                cayley(GroupTable::dihedral(*n)?, generators)
            }
            ModelConfig::Symmetric4 { generators } => cayley(GroupTable::symmetric4(), generators),
            ModelConfig::Table { path, generators } => {
                cayley(GroupTable::from_csv_path(&base.join(path))?, generators)
            }
            ModelConfig::PowerLaw { lambda, c } => ModelDescriptor::PowerLaw {
                lambda: *lambda,
                c: c.unwrap_or(1.0),
            },
            ModelConfig::Heisenberg { n, c } => preset(PowerLawPreset::Heisenberg { n: *n }, *c),
            ModelConfig::Engel { c } => preset(PowerLawPreset::Engel, *c),
            ModelConfig::Cartan { c } => preset(PowerLawPreset::Cartan, *c),
            ModelConfig::Rockland {
                homogeneous_dim,
                order,
                c,
            } => preset(
                PowerLawPreset::Rockland {
                    homogeneous_dim: *homogeneous_dim,
                    order: *order,
                },
                *c,
            ),
        })
    }

    pub fn build(&self, base: &Path) -> Result<SpectralModel> {
        Ok(build_model(&self.descriptor(base)?)?)
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Points per axis (tori and Euclidean boxes).
    pub points: Option<usize>,
    /// Side of the periodized box (Euclidean models).
    pub length: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Counting exponent for the target slope; the model's own by default.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    Zero,
    Constant { value: f64 },
    Gaussian { sigma: f64 },
    Dirac,
    /// Seeded from the experiment seed unless given.
    Random { seed: Option<u64> },
    Power { p: f64, sigma: f64 },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub w0: Option<DataSpec>,
    pub w1: Option<DataSpec>,
    /// Project out the eigenvalue-0 mode (default true).
    pub mean_zero: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Manual fitting window for decay studies.
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

impl RangeConfig {
    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Log => geometric_grid(self.start, self.stop, self.points),
            Spacing::Linear if self.points == 1 => vec![self.start],
            Spacing::Linear => (0..self.points)
                .map(|k| {
                    self.start + (self.stop - self.start) * k as f64 / (self.points - 1) as f64
                })
                .collect(),
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.points >= 1) {
            bail!("{what}: start/stop must be finite and points >= 1");
        }
        if self.points > 1 && !(self.stop > self.start) {
            bail!("{what}: need stop > start");
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0) {
            bail!("{what}: log spacing needs start > 0");
        }
        if let Some([a, b]) = self.window {
            if !(a > 0.0 && b > a) {
                bail!("{what}: window must satisfy 0 < lo < hi");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlConfig {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub z: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random cases in the additional-bound battery.
    pub cases: Option<usize>,
    pub points_per_decade: Option<usize>,
    /// Extra (φ, ψ, r) checks on the configured model.
    #[serde(default)]
    pub bound: Vec<BoundCase>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCase {
    pub phi: String,
    pub psi: String,
    pub r: f64,
}

impl BoundCase {
    pub fn parse(&self) -> Result<(ScalarFn, ScalarFn)> {
        let phi = self.phi.parse().map_err(|e| anyhow!("phi: {e}"))?;
        let psi = self.psi.parse().map_err(|e| anyhow!("psi: {e}"))?;
        if !(self.r >= 1.0 && self.r.is_finite()) {
            bail!("r must be finite and >= 1, got {}", self.r);
        }
        Ok((phi, psi))
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub model: Option<ModelConfig>,
}

pub const DEFAULT_SEED: u64 = 0;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.out.is_some() {
            self.output_dir.clone_from(&o.out);
        }
        if let Some(m) = &o.model {
            self.model = Some(m.clone());
        }
        if o.beta.is_some() || o.p.is_some() || o.q.is_some() {
            let eq = self.equation.get_or_insert_with(Default::default);
            eq.beta = o.beta.or(eq.beta);
            eq.p = o.p.or(eq.p);
            eq.q = o.q.or(eq.q);
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn model_config(&self) -> ModelConfig {
        self.model.clone().unwrap_or_default()
    }
}

/// Everything a decay study needs, checked.
pub struct DecayPlan {
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub t_grid: Vec<f64>,
    pub window: Option<(f64, f64)>,
    pub w0: SpectralField,
    pub w1: Option<SpectralField>,
}

impl DecayPlan {
    pub fn from_config(cfg: &ExperimentConfig, base: &Path) -> Result<Self> {
        let eq = cfg.equation.unwrap_or_default();
        let beta = eq.beta.ok_or_else(|| anyhow!("equation.beta (or --beta) is required"))?;
        let kind = EquationType::for_beta(beta)?;
        let p = eq.p.unwrap_or(2.0);
        let q = eq.q.unwrap_or(p);
        if !(p >= 1.0 && p.is_finite() && q >= p && q.is_finite()) {
            bail!("need 1 <= p <= q < inf, got p = {p}, q = {q}");
        }
        let t_cfg = cfg.t_grid.unwrap_or(RangeConfig {
            start: 1e-2,
            stop: 1e2,
            points: 41,
            spacing: Spacing::Log,
            window: None,
        });
        t_cfg.check("t_grid")?;
        if !(t_cfg.start > 0.0) || t_cfg.points < 3 {
            bail!("t_grid needs start > 0 and at least 3 points");
        }

        let model_cfg = cfg.model_config();
        let model = model_cfg.build(base)?;
        let g = cfg.grid.unwrap_or_default();
        let spec = match model_cfg {
            ModelConfig::Torus { .. } => {
                if g.length.is_some() {
                    bail!("grid.length only applies to Euclidean models");
                }
                GridSpec::Periodic { points: g.points.unwrap_or(64) }
            }
            ModelConfig::Euclidean { .. } => GridSpec::Box {
                length: g.length.unwrap_or(100.0),
                points: g.points.unwrap_or(4096),
            },
            ModelConfig::Cyclic { .. }
            | ModelConfig::Dihedral { .. }
            | ModelConfig::Symmetric4 { .. }
            | ModelConfig::Table { .. } => {
                if g.points.is_some() || g.length.is_some() {
                    bail!("group models take no [grid] settings");
                }
                GridSpec::Group
            }
            _ => bail!("decay studies need a model with a grid (torus, euclidean or a finite group)"),
        };
        let lambda = match eq.lambda {
            Some(l) => l,
            None => default_lambda(&model)?,
        };
        let grid = Grid::new(model, spec)?;

        let data = cfg.data.clone().unwrap_or_default();
        let (w0_spec, w1_spec) = match kind {
            EquationType::Heat => {
                if data.w1.is_some() {
                    bail!("data.w1 is only used for 1 < beta < 2");
                }
                (data.w0.unwrap_or(DataSpec::Gaussian { sigma: 0.05 }), None)
            }
            EquationType::Wave => (
                data.w0.unwrap_or(DataSpec::Zero),
                Some(data.w1.unwrap_or(DataSpec::Gaussian { sigma: 0.05 })),
            ),
        };
        let mean_zero = data.mean_zero.unwrap_or(true);
        let load = |spec: &DataSpec| -> Result<SpectralField> {
            let f = data_field(spec, &grid, cfg.seed(), base)?;
            Ok(if mean_zero { f.mean_zero() } else { f })
        };
        let w0 = load(&w0_spec)?;
        let w1 = w1_spec.as_ref().map(load).transpose()?;
        Ok(DecayPlan {
            beta,
            p,
            q,
            lambda,
            t_grid: t_cfg.values(),
            window: t_cfg.window.map(|[a, b]| (a, b)),
            w0,
            w1,
        })
    }
}

fn data_field(spec: &DataSpec, grid: &Arc<Grid>, seed: u64, base: &Path) -> Result<SpectralField> {
    let preset = match spec {
        DataSpec::Zero => DataPreset::Zero,
        DataSpec::Constant { value } => DataPreset::Constant(*value),
        DataSpec::Gaussian { sigma } => DataPreset::Gaussian { sigma: *sigma },
        DataSpec::Dirac => DataPreset::Dirac,
        DataSpec::Random { seed: s } => DataPreset::RandomMeanZero { seed: s.unwrap_or(seed) },
        DataSpec::Power { p, sigma } => DataPreset::PowerProfile { p: *p, sigma: *sigma },
        DataSpec::Csv { path } => {
            let samples = samples_from_csv_path(grid, &base.join(path))?;
            return Ok(analyze(grid, &samples)?);
        }
    };
    Ok(preset.field(grid)?)
}

/// The s values for a counting-function table.
pub fn spectrum_grid(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let s = cfg.s_grid.unwrap_or(RangeConfig {
        start: 1e2,
        stop: 1e4,
        points: 40,
        spacing: Spacing::Log,
        window: None,
    });
    s.check("s_grid")?;
    if s.window.is_some() {
        bail!("s_grid takes no window");
    }
    if !(s.start > 0.0) || s.points < 2 {
        bail!("s_grid needs start > 0 and at least 2 points");
    }
    Ok(s.values())
}
