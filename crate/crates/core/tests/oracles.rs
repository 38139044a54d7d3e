//! Cross-checks against independently derived values.

use std::f64::consts::{E, TAU};

use condenser_core::equilibrium::condenser_capacity;
use condenser_core::extremal::{chi_asymptotic_pair, chi_bruteforce, zero_distribution_diag};
use condenser_core::measure::box_grid;
use condenser_core::{Condenser64, CurveSpec, DiscreteMeasure64, EDomain, ZeroConfig64};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
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
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[test]
fn ellipse_perimeter_matches_quadrature() {
    for (a, b) in [(3.0, 2.0), (5.0, 1.0), (2.0, 2.0)] {
        let curve = CurveSpec::ellipse(Complex64::new(0.5, -0.2), [a, b], 0.7).unwrap();
        let samples = curve.sample(2048).unwrap();
        let length: f64 = samples.weights.iter().sum();
        let speed = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let oracle = adaptive_simpson(&speed, 0.0, TAU, 1e-13);
        assert!(
            (length - oracle).abs() <= 1e-9 * oracle,
            "{a},{b}: {length} vs {oracle}"
        );
        assert!((samples.polygon_length() - oracle).abs() <= 1e-5 * oracle);
    }
}

#[test]
fn segment_green_matches_focal_formula() {
    // level sets of g(·,∞) for [-1, 1] are confocal ellipses: g = arccosh((|z-1| + |z+1|)/2)
    let seg = EDomain::segment(-1.0, 1.0).unwrap();
    let shifted = EDomain::segment(2.0, 6.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let z = Complex64::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let oracle = (0.5 * ((z - 1.0).norm() + (z + 1.0).norm())).acosh();
        assert!(
            (seg.green_pole_infinity(z) - oracle).abs() <= 1e-12 * oracle.max(1.0),
            "{z}"
        );
        // affine image of [-1, 1] onto [2, 6]
        let w = 4.0 + 2.0 * z;
        assert!(
            (shifted.green_pole_infinity(w) - oracle).abs() <= 1e-12 * oracle.max(1.0),
            "{w}"
        );
    }
}

#[test]
fn disk_green_matches_image_charge() {
    // exterior of the disk |z - c| <= r: g(z, t) = log(|z - t*| / |z - t|) + log(|t - c| / r), t* the reflection
    let (c, r) = (Complex64::new(0.3, -0.4), 1.5);
    let e = EDomain::disk(c, r).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let outside = |rng: &mut ChaCha8Rng| {
        c + Complex64::from_polar(r * rng.gen_range(1.01..4.0), TAU * rng.gen::<f64>())
    };
    for _ in 0..500 {
        let (z, t) = (outside(&mut rng), outside(&mut rng));
        let star = c + r * r / (t - c).conj();
        let oracle = ((z - star).norm() / (z - t).norm()).ln() + ((t - c).norm() / r).ln();
        let g = e.green_kernel(z, t).unwrap();
        assert!(
            (g - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
            "{z} {t}: {g} vs {oracle}"
        );
    }
}

#[test]
fn offset_capacity_matches_annulus_modulus() {
    // nested circles (r1, r2, centre distance d) are conformally an annulus of
    // modulus log ρ = arccosh((r1² + r2² - d²) / (2 r1 r2))
    for (radius, d) in [(3.0, 1.0), (2.5, 1.0)] {
        let c = Condenser64::offset(radius).unwrap();
        let log_rho = ((1.0 + radius * radius - d * d) / (2.0 * radius)).acosh();
        let cp = condenser_capacity(&c, 256, 4096).unwrap();
        assert!(
            (cp * log_rho - 1.0).abs() <= 1e-3,
            "R={radius}: {cp} vs {}",
            1.0 / log_rho
        );
    }
}

#[derive(Deserialize)]
struct ChiFixture {
    condenser: Condenser64,
    n: usize,
    k: usize,
    grid_n: usize,
    restarts: usize,
    seed: u64,
    value: f64,
}

#[test]
fn bruteforce_regression_fixture() {
    let text = include_str!("fixtures/chi_bruteforce_n4_k2_seed1.json");
    let fx: ChiFixture = serde_json::from_str(text).unwrap();
    let mut c = fx.condenser.clone();
    c.validate().unwrap();
    let est = chi_bruteforce(&c, fx.n, fx.k, fx.grid_n, fx.restarts, fx.seed).unwrap();
    assert!((est.chi_upper - fx.value).abs() <= 1e-12 * fx.value);
    let rate = fx.value.ln() / fx.n as f64;
    assert!((-1.0..=0.0).contains(&rate));
    let pair = chi_asymptotic_pair(&c, fx.n, fx.k, 1024).unwrap();
    assert!(
        pair.chi_lower <= fx.value && fx.value <= pair.chi_upper,
        "{} {} {}",
        pair.chi_lower,
        fx.value,
        pair.chi_upper
    );
}

#[test]
fn pair_matches_bernstein_walsh_pin() {
    let off = Condenser64::offset(3.0).unwrap();
    for n in 2..=5 {
        let est = chi_asymptotic_pair(&off, n, n, 1024).unwrap();
        let pin = 4f64.powi(-(n as i32));
        assert!((est.chi_upper / pin - 1.0).abs() <= 0.01);
        assert!((est.chi_lower / pin - 1.0).abs() <= 0.01);
    }
}

#[test]
fn diag_negative_control() {
    let c = Condenser64::concentric(E).unwrap();
    let unit: Vec<Complex64> = (0..4096)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / 4096.0))
        .collect();
    let reference = DiscreteMeasure64::uniform(unit, 0.5).unwrap();
    let grid: Vec<Complex64> =
        box_grid(Complex64::new(-2.5, -2.5), Complex64::new(2.5, 2.5), 24, 24)
            .into_iter()
            .filter(|z| (z.norm() - 1.0).abs() >= 0.05)
            .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..5 {
        let zeros: Vec<Complex64> = (0..32)
            .map(|_| Complex64::from_polar(rng.gen_range(4.0..8.0), TAU * rng.gen::<f64>()))
            .collect();
        let zc = ZeroConfig64::new(zeros, vec![], 64, 32).unwrap();
        let d = zero_distribution_diag(&zc, &c, &reference, &grid).unwrap();
        assert!(d >= 0.1, "{d}");
    }
}
