use std::f64::consts::PI;
use std::sync::Arc;

use fracprop::fractional_time::{observed_order, residual_from, TimeSeries};
use fracprop::group::GroupTable;
use fracprop::mlf::ml_value;
use fracprop::propagator::*;
use fracprop::spectral_model::{build_model, ModelDescriptor};
use num_complex::Complex64;
use proptest::prelude::*;

fn torus_grid(dim: usize, points: usize) -> Arc<Grid> {
    let model = build_model(&ModelDescriptor::Torus { dim, cutoff: 100.0 }).unwrap();
    Grid::new(model, GridSpec::Periodic { points }).unwrap()
}

fn box_grid(length: f64, points: usize) -> Arc<Grid> {
    let model = build_model(&ModelDescriptor::Euclidean { dim: 1 }).unwrap();
    Grid::new(model, GridSpec::Box { length, points }).unwrap()
}

fn cayley_grid(group: GroupTable) -> Arc<Grid> {
    let model = build_model(&ModelDescriptor::FiniteCayley {
        group,
        generators: None,
    })
    .unwrap();
    Grid::new(model, GridSpec::Group).unwrap()
}

fn all_grids() -> Vec<Arc<Grid>> {
    vec![
        torus_grid(1, 32),
        torus_grid(2, 12),
        torus_grid(3, 6),
        box_grid(20.0, 64),
        cayley_grid(GroupTable::cyclic(4).unwrap()),
        cayley_grid(GroupTable::dihedral(5).unwrap()),
        cayley_grid(GroupTable::symmetric4()),
    ]
}

fn fourier(field: &SpectralField) -> &[Complex64] {
    match field.coefficients() {
        Coefficients::Fourier(c) => c,
        Coefficients::Eigen(_) => panic!("expected Fourier coefficients"),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn grid_l2(grid: &Grid, samples: &[f64]) -> f64 {
    (samples.iter().map(|v| v * v).sum::<f64>() * grid.cell_measure()).sqrt()
}

fn single_mode(grid: &Arc<Grid>, mode: usize) -> SpectralField {
    let mut samples = vec![0.0; grid.len()];
    // a real single mode: cos(k·x) on the torus
    for (i, s) in samples.iter_mut().enumerate() {
        let x = grid.coordinates(i).unwrap();
        *s = (mode as f64 * x[0]).cos();
    }
    analyze(grid, &samples).unwrap()
}

/// Adaptive Simpson on [a, b].
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[test]
fn torus_transform_examples() {
    let grid = torus_grid(1, 16);
    let one = analyze(&grid, &vec![1.0; 16]).unwrap();
    let c = fourier(&one);
    assert!((c[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(c[1..].iter().all(|c| c.norm() < 1e-15));
    assert_eq!(grid.mode_eigenvalues()[0], 0.0);

    let cos = single_mode(&grid, 1);
    let c = fourier(&cos);
    for (m, c) in c.iter().enumerate() {
        let expected = if m == 1 || m == 15 { 0.5 } else { 0.0 };
        assert!((c - Complex64::new(expected, 0.0)).norm() < 1e-15, "mode {m}: {c}");
    }
    assert_eq!(grid.mode_eigenvalues()[1], 1.0);
    assert_eq!(grid.mode_eigenvalues()[15], 1.0);
}

#[test]
fn cayley_indicator_of_identity() {
    let grid = cayley_grid(GroupTable::cyclic(4).unwrap());
    let basis = grid.model().cayley_basis().unwrap();
    assert_eq!(basis.eigenvalues, [0.0, 2.0, 2.0, 4.0]);
    let mut delta = vec![0.0; 4];
    delta[grid.identity_index()] = 1.0;
    let field = analyze(&grid, &delta).unwrap();
    let Coefficients::Eigen(c) = field.coefficients() else { panic!() };
    for j in 0..4 {
        assert!((c[j] - basis.eigenvectors[(0, j)]).abs() < 1e-15);
    }
    // the constant and alternating modes are fixed up to sign
    assert!((c[0].abs() - 0.5).abs() < 1e-14);
    assert!((c[3].abs() - 0.5).abs() < 1e-14);
    assert!(max_diff(&synthesize(&field), &delta) < 1e-15);
}

#[test]
fn round_trip_and_parseval_on_every_grid() {
    for (n, grid) in all_grids().iter().enumerate() {
        let f = DataPreset::RandomMeanZero { seed: n as u64 }.sample(grid).unwrap();
        let g: Vec<f64> = f.iter().enumerate().map(|(i, v)| v + (i % 3) as f64).collect();
        let field = analyze(grid, &g).unwrap();
        let back = synthesize(&field);
        assert!(max_diff(&back, &g) <= 1e-10 * max_abs(&g), "grid {n}");
        let lhs = grid_l2(grid, &g);
        assert!((field.l2_norm() - lhs).abs() <= 1e-10 * lhs, "grid {n}");
    }
}

#[test]
fn shape_and_grid_mismatches() {
    let grid = torus_grid(2, 8);
    assert_eq!(
        analyze(&grid, &[0.0; 63]),
        Err(PropagatorError::ShapeMismatch { expected: 64, got: 63 })
    );
    let torus = build_model(&ModelDescriptor::torus(1)).unwrap();
    assert!(matches!(
        Grid::new(torus, GridSpec::Group),
        Err(PropagatorError::InvalidGrid(_))
    ));
    let power = build_model(&ModelDescriptor::PowerLaw { lambda: 3.0, c: 1.0 }).unwrap();
    assert!(matches!(
        Grid::new(power, GridSpec::Periodic { points: 8 }),
        Err(PropagatorError::InvalidGrid(_))
    ));
    let a = DataPreset::Constant(1.0).field(&torus_grid(1, 8)).unwrap();
    let b = DataPreset::Constant(1.0).field(&torus_grid(1, 16)).unwrap();
    assert_eq!(wave_propagate(&a, &b, 1.5, 1.0), Err(PropagatorError::ModelMismatch));
    // equal grids built separately are compatible
    let c = DataPreset::Constant(2.0).field(&torus_grid(1, 8)).unwrap();
    assert!(a.combine(1.0, &c, 1.0).is_ok());
}

#[test]
fn heat_examples() {
    let grid = torus_grid(1, 16);
    let cos = single_mode(&grid, 1);
    assert_eq!(heat_propagate(&cos, 0.5, 0.0).unwrap(), cos);
    let w = heat_propagate(&cos, 1.0, 1.0).unwrap();
    assert!((fourier(&w)[1].re - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
    let w = heat_propagate(&cos, 0.5, 1.0).unwrap();
    assert!((fourier(&w)[1].re - 0.5 * 0.427583576155807004).abs() < 1e-13);
    // the mean is untouched
    let one = DataPreset::Constant(3.0).field(&grid).unwrap();
    assert_eq!(heat_propagate(&one, 0.7, 5.0).unwrap(), one);
    for beta in [0.0, -0.5, 1.2] {
        assert!(matches!(
            heat_propagate(&cos, beta, 1.0),
            Err(PropagatorError::BetaOutOfRange { .. })
        ));
    }
    assert!(matches!(heat_propagate(&cos, 0.5, -1.0), Err(PropagatorError::InvalidTime(_))));
}

#[test]
fn wave_examples() {
    let grid = torus_grid(1, 16);
    let w0 = single_mode(&grid, 2);
    let w1 = DataPreset::RandomMeanZero { seed: 3 }
        .field(&grid)
        .unwrap()
        .combine(1.0, &DataPreset::Constant(0.25).field(&grid).unwrap(), 1.0)
        .unwrap();
    let beta = 1.5;
    assert_eq!(wave_propagate(&w0, &w1, beta, 0.0).unwrap(), w0);

    // the μ = 0 mode moves as a0 + a1 t
    let t = 3.0;
    let w = wave_propagate(&w0, &w1, beta, t).unwrap();
    let expected = fourier(&w0)[0] + fourier(&w1)[0] * t;
    assert!((fourier(&w)[0] - expected).norm() < 1e-15);

    // ∂_t w(0) = w1, by one-sided differences; the error is O(h^{β−1}) for
    // the modes with w0 ≠ 0 and O(h^β) otherwise
    let mut prev = f64::INFINITY;
    for h in [1e-4, 1e-6, 1e-8] {
        let wh = wave_propagate(&w0, &w1, beta, h).unwrap();
        let diff = wh.combine(1.0 / h, &w0, -1.0 / h).unwrap();
        let err: f64 = fourier(&diff)
            .iter()
            .zip(fourier(&w1))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 1e-3, "{prev}");

    for beta in [1.0, 2.0, 0.5] {
        assert!(matches!(
            wave_propagate(&w0, &w1, beta, 1.0),
            Err(PropagatorError::BetaOutOfRange { .. })
        ));
    }
}

#[test]
fn velocity_term_matches_quadrature() {
    let (beta, mu, t) = (1.5, 1.0, 2.0);
    let closed = wave_velocity_factor(beta, t, mu).unwrap();
    let f = |s: f64| ml_value(beta, 1.0, -s.powf(beta) * mu).unwrap();
    let quad = simpson(&f, 0.0, t, 1e-12);
    assert!((closed - quad).abs() < 1e-8, "{closed} vs {quad}");
    assert!((closed - 0.82993969202459834).abs() < 1e-12);
}

#[test]
fn evolve_driver() {
    let grid = torus_grid(1, 16);
    let w0 = single_mode(&grid, 1);
    let w1 = single_mode(&grid, 3);

    let req = EvolutionRequest::new(EquationType::Heat, 0.5, vec![0.0]).unwrap();
    let out = evolve(&req, &w0, None).unwrap();
    assert_eq!(out, vec![(0.0, w0.clone())]);
    let req = EvolutionRequest::new(EquationType::Wave, 1.5, vec![0.0]).unwrap();
    assert_eq!(evolve(&req, &w0, Some(&w1)).unwrap(), vec![(0.0, w0.clone())]);

    let times = vec![0.1, 0.5, 1.0, 2.0];
    let req = EvolutionRequest::new(EquationType::Heat, 0.7, times.clone()).unwrap();
    for (t, f) in evolve(&req, &w0, None).unwrap() {
        let scalar = 0.5 * ml_value(0.7, 1.0, -t.powf(0.7)).unwrap();
        assert!((fourier(&f)[1].re - scalar).abs() < 1e-15);
    }
    let req = EvolutionRequest::new(EquationType::Wave, 1.3, times).unwrap();
    for (t, f) in evolve(&req, &w0, Some(&w1)).unwrap() {
        assert!((fourier(&f)[1].re - 0.5 * ml_value(1.3, 1.0, -t.powf(1.3)).unwrap()).abs() < 1e-15);
        let z = -t.powf(1.3) * 9.0;
        assert!((fourier(&f)[3].re - 0.5 * t * ml_value(1.3, 2.0, z).unwrap()).abs() < 1e-15);
    }

    let heat = EvolutionRequest::new(EquationType::Heat, 0.5, vec![1.0]).unwrap();
    let wave = EvolutionRequest::new(EquationType::Wave, 1.5, vec![1.0]).unwrap();
    assert_eq!(evolve(&heat, &w0, Some(&w1)), Err(PropagatorError::W1NotAllowed));
    assert_eq!(evolve(&wave, &w0, None), Err(PropagatorError::MissingW1));
    assert!(EvolutionRequest::new(EquationType::Heat, 1.5, vec![1.0]).is_err());
    assert!(EvolutionRequest::new(EquationType::Wave, 1.0, vec![1.0]).is_err());
    assert!(EvolutionRequest::new(EquationType::Heat, 0.5, vec![1.0, 1.0]).is_err());
    assert!(EvolutionRequest::new(EquationType::Heat, 0.5, vec![]).is_err());
    assert!(EvolutionRequest::new(EquationType::Heat, 0.5, vec![-1.0, 1.0]).is_err());
    assert_eq!(EquationType::for_beta(1.0).unwrap(), EquationType::Heat);
    assert_eq!(EquationType::for_beta(1.5).unwrap(), EquationType::Wave);
    assert!(EquationType::for_beta(2.0).is_err());
}

#[test]
fn semigroup_only_for_unit_order() {
    let grid = torus_grid(2, 8);
    let f = DataPreset::RandomMeanZero { seed: 11 }.field(&grid).unwrap();
    let (t1, t2) = (0.3, 0.9);
    let compose = |beta: f64| {
        let a = heat_propagate(&heat_propagate(&f, beta, t1).unwrap(), beta, t2).unwrap();
        let b = heat_propagate(&f, beta, t1 + t2).unwrap();
        max_diff(&synthesize(&a), &synthesize(&b))
    };
    assert!(compose(1.0) <= 1e-10);
    // single mode μ = 1, t1 = t2 = 1: E_½(−1)² vs E_½(−√2)
    let e1 = ml_value(0.5, 1.0, -1.0).unwrap();
    let e2 = ml_value(0.5, 1.0, -(2.0f64).sqrt()).unwrap();
    assert!((e1 * e1 - e2).abs() > 1e-3, "{}", (e1 * e1 - e2).abs());
    assert!(compose(0.5) > 1e-3);
}

#[test]
fn presets() {
    let grid = box_grid(10.0, 100);
    let dirac = DataPreset::Dirac.sample(&grid).unwrap();
    assert!((dirac.iter().sum::<f64>() * grid.cell_measure() - 1.0).abs() < 1e-14);
    let a = DataPreset::RandomMeanZero { seed: 42 }.sample(&grid).unwrap();
    let b = DataPreset::RandomMeanZero { seed: 42 }.sample(&grid).unwrap();
    let c = DataPreset::RandomMeanZero { seed: 43 }.sample(&grid).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.iter().sum::<f64>().abs() < 1e-12);

    let g = DataPreset::Gaussian { sigma: 0.5 }.sample(&grid).unwrap();
    assert_eq!(g[grid.identity_index()], 1.0);
    let mass = g.iter().sum::<f64>() * grid.cell_measure();
    assert!((mass - (2.0 * PI).sqrt() * 0.5).abs() < 1e-10);

    let field = DataPreset::Gaussian { sigma: 0.5 }.field(&grid).unwrap();
    assert!(field.zero_mode_norm() > 0.1);
    let centred = field.mean_zero();
    assert!(centred.zero_mode_norm() == 0.0);
    assert!(synthesize(&centred).iter().sum::<f64>().abs() < 1e-10);

    let s4 = cayley_grid(GroupTable::symmetric4());
    let g = DataPreset::Gaussian { sigma: 1.0 }.sample(&s4).unwrap();
    // adjacent transpositions: word length = inversion count, at most 6
    assert_eq!(g.iter().filter(|&&v| v == 1.0).count(), 1);
    assert!((g.iter().cloned().fold(1.0, f64::min) - (-18.0f64).exp()).abs() < 1e-15);

    let p = DataPreset::PowerProfile { p: 2.0, sigma: 0.1 }.sample(&grid).unwrap();
    assert!((p[grid.identity_index()] - 2.0 * 0.1f64.powf(-0.5)).abs() < 1e-12);
    assert!((p[grid.identity_index() + 100 / 5] - 2.0f64.powf(-0.5)).abs() < 1e-12);
    assert!(DataPreset::Gaussian { sigma: 0.0 }.sample(&grid).is_err());
    assert!(DataPreset::PowerProfile { p: 1.0, sigma: 0.1 }.sample(&grid).is_err());
}

#[test]
fn csv_samples() {
    let grid = torus_grid(2, 3);
    let text = "i,j,value\n0,0,1.5\n2,1,-2\n";
    let v = samples_from_csv_str(&grid, text).unwrap();
    assert_eq!(v[0], 1.5);
    assert_eq!(v[grid.flat_index(&[2, 1]).unwrap()], -2.0);
    assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 2);
    for bad in [
        "i,j,value\n0,0,1\n0,0,2\n",
        "i,j,value\n3,0,1\n",
        "i,j,value\n0,1\n",
        "i,j,value\n0,x,1\n",
        "i,j,value\n0,1,inf\n",
    ] {
        assert!(matches!(samples_from_csv_str(&grid, bad), Err(PropagatorError::InvalidData(_))), "{bad}");
    }
    let z4 = cayley_grid(GroupTable::cyclic(4).unwrap());
    let v = samples_from_csv_str(&z4, "element,value\n3,1\n").unwrap();
    assert_eq!(v, [0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn evolved_mode_satisfies_the_fractional_equation() {
    for beta in [0.5, 0.8] {
        let mu = 4.0;
        let u = |t: f64| heat_factor(beta, t, mu).unwrap();
        let r1 = residual_from(&TimeSeries::sample(1e-2, 100, u).unwrap(), beta, mu, 0.1).unwrap();
        let r2 = residual_from(&TimeSeries::sample(5e-3, 200, u).unwrap(), beta, mu, 0.1).unwrap();
        assert!(r2 < r1 && observed_order(r1, r2) > 1.0, "β={beta}: {r1:.3e} {r2:.3e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn heat_contracts_l2(seed in any::<u64>(), beta in 0.05f64..=1.0, t in 0.0f64..50.0, which in 0usize..7) {
        let grid = &all_grids()[which];
        let f = DataPreset::RandomMeanZero { seed }.field(grid).unwrap();
        let w = heat_propagate(&f, beta, t).unwrap();
        prop_assert!(w.l2_norm() <= f.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn propagators_are_linear(
        s1 in any::<u64>(), s2 in any::<u64>(),
        a in -2.0f64..2.0, b in -2.0f64..2.0,
        beta in 0.1f64..1.9, t in 0.01f64..10.0,
    ) {
        prop_assume!((beta - 1.0).abs() > 1e-3);
        let grid = torus_grid(2, 8);
        let f = DataPreset::RandomMeanZero { seed: s1 }.field(&grid).unwrap();
        let g = DataPreset::RandomMeanZero { seed: s2 }.field(&grid).unwrap();
        let fg = f.combine(a, &g, b).unwrap();
        let (lhs, rf, rg) = if beta < 1.0 {
            (heat_propagate(&fg, beta, t).unwrap(), heat_propagate(&f, beta, t).unwrap(), heat_propagate(&g, beta, t).unwrap())
        } else {
            (wave_propagate(&fg, &g, beta, t).unwrap(), wave_propagate(&f, &g, beta, t).unwrap(), wave_propagate(&g, &g, beta, t).unwrap())
        };
        // the wave map is affine in w0 with w1 fixed: compare differences
        let rhs = if beta < 1.0 { rf.combine(a, &rg, b).unwrap() } else {
            let zero = DataPreset::Zero.field(&grid).unwrap();
            let v = wave_propagate(&zero, &g, beta, t).unwrap();
            rf.combine(a, &rg, b).unwrap().combine(1.0, &v, 1.0 - a - b).unwrap()
        };
        let d = max_diff(&synthesize(&lhs), &synthesize(&rhs));
        prop_assert!(d <= 1e-13 * (1.0 + a.abs() + b.abs()) * 10.0, "{d}");
    }
}
