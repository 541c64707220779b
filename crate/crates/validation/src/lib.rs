//! Reference computations that share no code with `fracprop`, used by the
//! acceptance suite as oracles.

use std::f64::consts::PI;

/// Scaled complementary error function e^{x²} erfc(x) for x ≥ 0.
///
/// Taylor series of erf for x ≤ 2, Lentz evaluation of the Laplace
/// continued fraction beyond.
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "erfcx oracle needs finite x >= 0, got {x}");
    let two_over_sqrt_pi = 2.0 / PI.sqrt();
    if x <= 2.0 {
        // erf(x) = 2/√π e^{−x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= 2.0 * x2 / (2 * n + 1) as f64;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        return x2.exp() - two_over_sqrt_pi * sum;
    }
    // erfcx(x) = 1/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..10_000 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (PI.sqrt() * f)
}

/// ∫_a^b f by adaptive Simpson with Richardson correction, to an absolute
/// tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, abs_tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// n points from lo to hi (inclusive), evenly spaced.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// One line of the acceptance report.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: u32, title: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            id,
            title,
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {}: {} {} | {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}
