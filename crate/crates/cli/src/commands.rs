use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Result};
use fracprop::fractional_time::{observed_order, residual_from, TimeSeries};
use fracprop::gamma::gamma;
use fracprop::group::GroupTable;
use fracprop::mlf::{ml_eval, uniform_rational_bound, MlParams};
use fracprop::norms_decay::{
    decay_study, verify_additional_bound, DecaySpec, NormsError, ScalarFn,
    DEFAULT_POINTS_PER_DECADE,
};
use fracprop::propagator::{
    analyze, heat_propagate, synthesize, wave_propagate, Grid, GridSpec,
};
use fracprop::spectral_model::{
    build_model, counting_function, fit_lambda, geometric_grid, ModelDescriptor, ModelKind,
    SpectralModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{spectrum_grid, DecayPlan, ExperimentConfig, ModelConfig};
use crate::output::{fmt, Table};

pub struct Outcome {
    pub tables: Vec<Table>,
    pub passed: bool,
}

impl Outcome {
    fn ok(tables: Vec<Table>) -> Self {
        Self { tables, passed: true }
    }
}

pub struct MlArgs {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub z: Vec<f64>,
}

pub fn ml_eval_cmd(cfg: &ExperimentConfig, args: &MlArgs) -> Result<Outcome> {
    let ml = cfg.ml.clone().unwrap_or_default();
    let alpha = args.alpha.or(ml.alpha).ok_or_else(|| anyhow!("alpha is required"))?;
    let delta = args.delta.or(ml.delta).unwrap_or(1.0);
    let z_list = if args.z.is_empty() { ml.z.unwrap_or_default() } else { args.z.clone() };
    if z_list.is_empty() {
        bail!("no z values given");
    }
    for &z in &z_list {
        MlParams::new(alpha, delta, z)?;
    }
    let mut table = Table::new("ml_eval", &["z", "value", "err_estimate", "regime"]);
    for &z in &z_list {
        let r = ml_eval(alpha, delta, z)?;
        if !r.guaranteed {
            eprintln!("warning: (alpha, delta, z) = ({alpha}, {delta}, {z}) is outside the guaranteed range");
        }
        table.push(vec![fmt(z), fmt(r.value), fmt(r.abs_error_estimate), r.regime.as_str().into()]);
    }
    Ok(Outcome::ok(vec![table]))
}

pub fn spectrum_cmd(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome> {
    let model = cfg.model_config().build(base)?;
    let finite_group = matches!(model.kind(), ModelKind::FiniteCayley { .. });
    let s_grid = if finite_group && cfg.s_grid.is_none() {
        let top = model.atoms().last().map_or(1.0, |a| a.eigenvalue).max(1e-12);
        geometric_grid(top / 100.0, top, 40)
    } else {
        spectrum_grid(cfg)?
    };
    let mut counts = Table::new("spectrum", &["s", "N"]);
    for &s in &s_grid {
        counts.push(vec![fmt(s), fmt(counting_function(&model, s))]);
    }
    let mut tables = vec![counts];
    if !finite_group {
        let fit = fit_lambda(&model, &s_grid)?;
        let mut summary = Table::new(
            "spectrum_fit",
            &["lambda_hat", "c_hat", "r_squared", "s_min", "s_max", "exact_lambda"],
        );
        summary.push(vec![
            fmt(fit.lambda_hat),
            fmt(fit.c_hat),
            fmt(fit.r_squared),
            fmt(fit.s_range.0),
            fmt(fit.s_range.1),
            model.exact_lambda().map(fmt).unwrap_or_default(),
        ]);
        tables.push(summary);
    }
    if finite_group {
        let mut atoms = Table::new("spectrum_atoms", &["eigenvalue", "weight"]);
        for a in model.atoms() {
            atoms.push(vec![fmt(a.eigenvalue), fmt(a.weight)]);
        }
        tables.push(atoms);
    }
    Ok(Outcome::ok(tables))
}

pub fn decay_cmd(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome> {
    let plan = DecayPlan::from_config(cfg, base)?;
    let spec = DecaySpec {
        beta: plan.beta,
        p: plan.p,
        q: plan.q,
        lambda: plan.lambda,
        t_grid: plan.t_grid.clone(),
        window: plan.window,
    };
    let report = decay_study(&spec, &plan.w0, plan.w1.as_ref())?;
    let mut rows = Table::new("decay", &["t", "norm_q", "normalizer", "local_slope"]);
    for r in &report.rows {
        rows.push(vec![fmt(r.t), fmt(r.norm_q), fmt(r.normalizer), fmt(r.local_slope)]);
    }
    let mut fit = Table::new(
        "decay_fit",
        &[
            "slope",
            "target",
            "rel_dev",
            "r_squared",
            "t_min",
            "t_max",
            "automatic_window",
            "intercept",
            "max_abs_residual",
            "lambda",
        ],
    );
    fit.push(vec![
        fmt(report.fit.slope),
        fmt(report.target),
        fmt(report.rel_dev),
        fmt(report.fit.r_squared),
        fmt(report.fit.t_range.0),
        fmt(report.fit.t_range.1),
        report.fit.automatic_window.to_string(),
        fmt(report.fit.intercept),
        fmt(report.fit.max_abs_residual),
        fmt(plan.lambda),
    ]);
    Ok(Outcome::ok(vec![rows, fit]))
}

struct Check {
    name: String,
    passed: bool,
    measured: f64,
    tolerance: String,
    detail: String,
}

// e^x erfc(√x) = E_{1/2}(−√x), 40-digit reference values
const ERFCX_SQRT: [(f64, f64); 6] = [
    (1e-4, 0.988_815_461_046_342_5),
    (0.3, 0.592_018_411_314_735_7),
    (1.0, 0.427_583_576_155_807),
    (10.0, 0.170_577_718_325_972_66),
    (1e4, 0.005_641_613_782_989_433),
    (1e6, 0.000_564_189_301_453_387_7),
];

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

fn ml_identity_check() -> Result<Check> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in 0..200 {
        let x = 10f64.powf(-6.0 + 12.0 * k as f64 / 199.0);
        let z = -x;
        worst = worst.max(rel(ml_eval(1.0, 1.0, z)?.value, z.exp()));
        worst = worst.max(rel(ml_eval(1.0, 2.0, z)?.value, z.exp_m1() / z));
        count += 2;
    }
    for (x, want) in ERFCX_SQRT {
        worst = worst.max(rel(ml_eval(0.5, 1.0, -x.sqrt())?.value, want));
        count += 1;
    }
    for alpha in [0.3, 0.8, 1.5, 1.9] {
        for delta in [1.0, 2.0] {
            worst = worst.max(rel(ml_eval(alpha, delta, 0.0)?.value, 1.0 / gamma(delta)));
            count += 1;
        }
    }
    Ok(Check {
        name: "ml_identities".into(),
        passed: worst <= 1e-10,
        measured: worst,
        tolerance: "1e-10".into(),
        detail: format!("{count} values of exp, (e^z-1)/z, erfcx and 1/Gamma(delta)"),
    })
}

fn check_grids() -> Result<Vec<Arc<Grid>>> {
    let torus = |dim, points| -> Result<Arc<Grid>> {
        Ok(Grid::new(build_model(&ModelDescriptor::torus(dim))?, GridSpec::Periodic { points })?)
    };
    let group = |g: GroupTable| -> Result<Arc<Grid>> {
        let model = build_model(&ModelDescriptor::FiniteCayley { group: g, generators: None })?;
        Ok(Grid::new(model, GridSpec::Group)?)
    };
    Ok(vec![
        torus(1, 64)?,
        torus(2, 16)?,
        torus(3, 8)?,
        Grid::new(
            build_model(&ModelDescriptor::Euclidean { dim: 1 })?,
            GridSpec::Box { length: 20.0, points: 200 },
        )?,
        group(GroupTable::cyclic(7)?)?,
        group(GroupTable::symmetric4())?,
    ])
}

fn random_samples(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn transform_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grids = check_grids()?;
    let (mut round_trip, mut parseval, mut semigroup) = (0.0f64, 0.0f64, 0.0f64);
    let mut identity = true;
    for grid in &grids {
        let samples = random_samples(&mut rng, grid.len());
        let f = analyze(grid, &samples)?;
        round_trip = round_trip.max(max_abs_diff(&synthesize(&f), &samples));
        let direct = (samples.iter().map(|x| x * x).sum::<f64>() * grid.cell_measure()).sqrt();
        parseval = parseval.max(rel(f.l2_norm(), direct));
        let a = heat_propagate(&heat_propagate(&f, 1.0, 0.3)?, 1.0, 0.9)?;
        let b = heat_propagate(&f, 1.0, 1.2)?;
        semigroup = semigroup.max(max_abs_diff(&synthesize(&a), &synthesize(&b)));
        identity &= heat_propagate(&f, 0.5, 0.0)? == f;
        identity &= wave_propagate(&f, &f, 1.5, 0.0)? == f;
    }
    let n = grids.len();
    Ok(vec![
        Check {
            name: "transform_round_trip".into(),
            passed: round_trip <= 1e-10,
            measured: round_trip,
            tolerance: "1e-10".into(),
            detail: format!("max abs error over {n} grids"),
        },
        Check {
            name: "parseval".into(),
            passed: parseval <= 1e-10,
            measured: parseval,
            tolerance: "1e-10".into(),
            detail: format!("max relative L2 mismatch over {n} grids"),
        },
        Check {
            name: "semigroup_beta_1".into(),
            passed: semigroup <= 1e-10,
            measured: semigroup,
            tolerance: "1e-10".into(),
            detail: "E(0.3)E(0.9) vs E(1.2)".into(),
        },
        Check {
            name: "time_zero_identity".into(),
            passed: identity,
            measured: if identity { 0.0 } else { 1.0 },
            tolerance: "exact".into(),
            detail: "heat and wave propagators at t = 0".into(),
        },
    ])
}

fn residual_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for beta in [0.3, 0.5, 0.8] {
        let sample = |dt: f64| -> Result<TimeSeries> {
            let u: Result<Vec<f64>> = (0..=(1.0 / dt).round() as usize)
                .map(|k| Ok(fracprop::mlf::ml_value(beta, 1.0, -(k as f64 * dt).powf(beta))?))
                .collect();
            Ok(TimeSeries::new(dt, u?)?)
        };
        let coarse = residual_from(&sample(1e-2)?, beta, 1.0, 0.1)?;
        let fine = residual_from(&sample(5e-3)?, beta, 1.0, 0.1)?;
        let order = observed_order(coarse, fine);
        out.push(Check {
            name: format!("caputo_residual_beta_{beta}"),
            passed: order >= 1.0,
            measured: order,
            tolerance: ">= 1".into(),
            detail: format!("order of max residual on t >= 0.1, dt 1e-2 -> 5e-3 (residual {fine:.3e})"),
        });
    }
    Ok(out)
}

fn random_cayley(rng: &mut ChaCha8Rng) -> Result<SpectralModel> {
    let group = match rng.gen_range(0..3) {
        0 => GroupTable::cyclic(rng.gen_range(2..12))?,
        1 => GroupTable::dihedral(rng.gen_range(2..7))?,
        _ => GroupTable::symmetric4(),
    };
    let mut gens: Vec<usize> = (0..group.order())
        .filter(|&g| g != group.identity() && rng.gen_bool(0.3))
        .collect();
    let inverses: Vec<usize> = gens.iter().map(|&g| group.inverse(g)).collect();
    gens.extend(inverses);
    gens.sort_unstable();
    gens.dedup();
    let generators = (!gens.is_empty()).then_some(gens);
    Ok(build_model(&ModelDescriptor::FiniteCayley { group, generators })?)
}

/// φ with a matching majorant ψ.
fn random_pair(rng: &mut ChaCha8Rng, top: f64) -> Result<(ScalarFn, ScalarFn)> {
    Ok(match rng.gen_range(0..3) {
        0 => {
            let beta = rng.gen_range(0.05..=1.0);
            let t = rng.gen_range(0.05..5.0);
            let rate = f64::powf(t, beta) / gamma(1.0 + beta);
            (ScalarFn::MittagLeffler { beta, t }, ScalarFn::Rational { amplitude: 1.0, rate })
        }
        1 => {
            let beta = rng.gen_range(1.05..1.95);
            let t = rng.gen_range(0.05..3.0);
            let tb = f64::powf(t, beta);
            let c = 1.01 * uniform_rational_bound(beta, 10.0 * tb * top, 2000)?;
            (ScalarFn::MittagLeffler { beta, t }, ScalarFn::Rational { amplitude: c, rate: tb })
        }
        _ => {
            let rate = rng.gen_range(0.01..3.0);
            let slower = rate * rng.gen_range(0.2..=1.0);
            (ScalarFn::Exp { rate }, ScalarFn::Exp { rate: slower })
        }
    })
}

fn bound_battery(cases: usize, seed: u64, ppd: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut held, mut min_slack) = (0, f64::INFINITY);
    let mut first_failure = String::new();
    for _ in 0..cases {
        let model = random_cayley(&mut rng)?;
        let top = model.atoms().last().map_or(1.0, |a| a.eigenvalue);
        let (phi, psi) = random_pair(&mut rng, top)?;
        let r = rng.gen_range(1.0..4.0);
        match verify_additional_bound(&model, &phi, &psi, r, ppd) {
            Ok(b) if b.holds => {
                held += 1;
                if b.rhs > 0.0 {
                    min_slack = min_slack.min((b.rhs - b.lhs) / b.rhs);
                }
            }
            Ok(b) if first_failure.is_empty() => {
                first_failure = format!("; first failure {phi} / {psi}: lhs {} > rhs {}", b.lhs, b.rhs)
            }
            Err(e) if first_failure.is_empty() => first_failure = format!("; first error {phi} / {psi}: {e}"),
            _ => {}
        }
    }
    Ok(Check {
        name: "additional_bound_battery".into(),
        passed: held == cases,
        measured: held as f64,
        tolerance: format!("{cases} of {cases}"),
        detail: format!("random Cayley models, seed {seed}, smallest relative slack {min_slack:.3e}{first_failure}"),
    })
}

fn user_bound(model: &SpectralModel, label: &str, phi: &ScalarFn, psi: &ScalarFn, r: f64, ppd: usize) -> Check {
    let name = format!("additional_bound[{label}]");
    match verify_additional_bound(model, phi, psi, r, ppd) {
        Ok(b) => Check {
            name,
            passed: b.holds,
            measured: b.lhs,
            tolerance: format!("<= {} (rhs at v = {})", fmt(b.rhs), fmt(b.rhs_at)),
            detail: format!("phi = {phi}, psi = {psi}, r = {r}"),
        },
        Err(e @ NormsError::HypothesisViolated { .. }) => Check {
            name,
            passed: false,
            measured: f64::NAN,
            tolerance: "hypotheses".into(),
            detail: e.to_string(),
        },
        Err(e) => Check {
            name,
            passed: false,
            measured: f64::NAN,
            tolerance: "-".into(),
            detail: e.to_string(),
        },
    }
}

pub fn verify_cmd(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome> {
    let v = cfg.verify.clone().unwrap_or_default();
    let ppd = v.points_per_decade.unwrap_or(DEFAULT_POINTS_PER_DECADE);
    if ppd == 0 {
        bail!("verify.points_per_decade must be positive");
    }
    let cases = v.cases.unwrap_or(200);
    let user_cases = v
        .bound
        .iter()
        .map(|c| c.parse().map(|(phi, psi)| (phi, psi, c.r)))
        .collect::<Result<Vec<_>>>()?;
    let user_model = if user_cases.is_empty() {
        None
    } else {
        let m = cfg.model.clone().unwrap_or(ModelConfig::Cyclic { n: 8, generators: None });
        Some(m.build(base)?)
    };

    let seed = cfg.seed();
    let mut checks = vec![ml_identity_check()?];
    checks.extend(transform_checks(seed)?);
    checks.extend(residual_checks()?);
    checks.push(bound_battery(cases, seed, ppd)?);
    if let Some(model) = &user_model {
        for (k, (phi, psi, r)) in user_cases.iter().enumerate() {
            checks.push(user_bound(model, &k.to_string(), phi, psi, *r, ppd));
        }
    }

    let mut table = Table::new("verify", &["check", "passed", "measured", "tolerance", "detail"]);
    let passed = checks.iter().all(|c| c.passed);
    for c in checks {
        table.push(vec![c.name, c.passed.to_string(), fmt(c.measured), c.tolerance, c.detail]);
    }
    Ok(Outcome { tables: vec![table], passed })
}
