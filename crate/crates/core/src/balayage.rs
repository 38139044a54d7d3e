//! Sweeping discrete measures onto circles with closed-form Poisson kernels,
//! and the swept zero-counting measures `α(p)` and `β(q)`.
//!
//! Every atom is replaced by its harmonic measure sampled at the cell centres
//! of an equispaced boundary grid. Sampling the periodic Poisson density is a
//! trapezoid rule, so potentials of the swept measure converge geometrically
//! in the number of cells for sources away from the circle.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Condenser, CurveSpec, EDomain};
use crate::measure::DiscreteMeasure;
use crate::scalar::{CompensatedSum, Point, Real};

/// Boundary cells used when a caller does not choose a grid.
pub const DEFAULT_BALAYAGE_CELLS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct BalayageResult<T> {
    pub swept: DiscreteMeasure<T>,
    /// `Σ w·g(x,∞)` over the swept atoms, with the Green function of the side
    /// the atoms were swept out of.
    pub shift_constant: T,
}

fn check_cells(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!(
            "balayage needs at least 8 boundary cells, got {n}"
        )));
    }
    Ok(())
}

/// Cell weights of the swept sources; `sources` are `(ζ, w)` with `ζ` in the
/// unit-circle frame, strictly off the circle.
fn poisson_cells<T: Real>(sources: &[(Point<T>, T)], n: usize) -> Vec<T> {
    let nodes: Vec<Point<T>> = (0..n)
        .map(|j| Complex::from_polar(T::one(), T::TAU() * T::lit(j as f64) / T::lit(n as f64)))
        .collect();
    let kernel = |zeta: Point<T>, node: Point<T>| {
        (T::one() - zeta.norm_sqr()).abs() / (zeta - node).norm_sqr()
    };
    let norms: Vec<T> = sources
        .par_iter()
        .map(|&(zeta, _)| {
            let mut acc = CompensatedSum::new();
            for node in &nodes {
                acc.add(kernel(zeta, *node));
            }
            acc.value()
        })
        .collect();
    nodes
        .par_iter()
        .map(|node| {
            let mut acc = CompensatedSum::new();
            for (&(zeta, w), norm) in sources.iter().zip(&norms) {
                acc.add(w * kernel(zeta, *node) / *norm);
            }
            acc.value()
        })
        .collect()
}

fn assemble<T: Real>(
    passthrough: Vec<(Point<T>, T)>,
    cells: Vec<T>,
    center: Point<T>,
    radius: T,
) -> Result<DiscreteMeasure<T>> {
    let n = cells.len();
    let (mut points, mut weights): (Vec<_>, Vec<_>) = passthrough.into_iter().unzip();
    for (j, w) in cells.into_iter().enumerate() {
        if w > T::zero() {
            let t = T::TAU() * T::lit(j as f64) / T::lit(n as f64);
            points.push(center + Complex::from_polar(radius, t));
            weights.push(w);
        }
    }
    DiscreteMeasure::new(points, weights)
}

fn circle_sweep<T: Real>(
    nu: &DiscreteMeasure<T>,
    center: Point<T>,
    radius: T,
    n: usize,
    sweep_outside: bool,
) -> Result<BalayageResult<T>> {
    check_cells(n)?;
    let tol = T::lit(1e-12).max(T::lit(100.0) * T::epsilon());
    let mut passthrough = Vec::new();
    let mut sources = Vec::new();
    let mut shift = CompensatedSum::new();
    for (x, w) in nu.iter() {
        let zeta = (x - center) / radius;
        let r = zeta.norm();
        let swept = if sweep_outside {
            r > T::one() + tol
        } else {
            r < T::one() - tol
        };
        if swept {
            sources.push((zeta, w));
            if sweep_outside {
                shift.add(w * r.ln());
            }
        } else {
            passthrough.push((x, w));
        }
    }
    let cells = poisson_cells(&sources, n);
    Ok(BalayageResult {
        swept: assemble(passthrough, cells, center, radius)?,
        shift_constant: shift.value(),
    })
}

/// Balayage of the part of `nu` outside the disk `E` onto `∂E`.
///
/// On `E`, `U^{swept} = U^nu + shift_constant`. Atoms in `E` pass through.
pub fn balayage_to_e<T: Real>(
    nu: &DiscreteMeasure<T>,
    e: &EDomain<T>,
    boundary_grid_n: usize,
) -> Result<BalayageResult<T>> {
    match *e {
        EDomain::Disk { center, radius } => circle_sweep(nu, center, radius, boundary_grid_n, true),
        EDomain::Segment { .. } => Err(Error::UnsupportedDomain(
            "balayage onto E is implemented for disks only".into(),
        )),
    }
}

/// Balayage of the part of `nu` outside the closed circle `Γ` onto `Γ`.
///
/// On the closed disk bounded by `Γ`, `U^{swept} = U^nu + shift_constant`.
pub fn balayage_to_gamma<T: Real>(
    nu: &DiscreteMeasure<T>,
    gamma: &CurveSpec<T>,
    boundary_grid_n: usize,
) -> Result<BalayageResult<T>> {
    match *gamma {
        CurveSpec::Circle { center, radius } => {
            circle_sweep(nu, center, radius, boundary_grid_n, true)
        }
        _ => Err(Error::UnsupportedCurve(
            "balayage onto Γ is implemented for circles only".into(),
        )),
    }
}

/// Sweeps atoms in the interior of `E` onto `∂E`; atoms of `D̄` pass through.
///
/// A segment has empty interior, so its measures are returned unchanged.
pub fn balayage_interior_to_boundary<T: Real>(
    nu: &DiscreteMeasure<T>,
    e: &EDomain<T>,
    boundary_grid_n: usize,
) -> Result<DiscreteMeasure<T>> {
    match *e {
        EDomain::Disk { center, radius } => {
            Ok(circle_sweep(nu, center, radius, boundary_grid_n, false)?.swept)
        }
        EDomain::Segment { .. } => Ok(nu.clone()),
    }
}

/// Uniform measure of the given mass on `n` equispaced points of a circular `Γ`.
pub fn uniform_on_gamma<T: Real>(
    gamma: &CurveSpec<T>,
    mass: T,
    n: usize,
) -> Result<DiscreteMeasure<T>> {
    if !gamma.is_circle() {
        return Err(Error::UnsupportedCurve(
            "the equilibrium measure of Γ is only available for circles".into(),
        ));
    }
    if mass == T::zero() {
        return Ok(DiscreteMeasure::zero());
    }
    DiscreteMeasure::uniform(gamma.sample(n)?.points, mass)
}

/// Swept counting measures of a pair `(p, q)` with `deg p ≤ k`, `deg q ≤ n-k`:
///
/// * `α = ν(p)|_{D̄} +` balayage onto `∂E` of `ν(p)` restricted to the interior of `E`;
/// * `β = ν(q)|_{Ḡ} +` balayage onto `Γ` of `ν(q)|_{C∖Ḡ} + ((n-k-deg q)/n)·ω_Γ`,
///
/// with `ν` the zero-counting measure normalized by `1/n`. `β` needs a circular `Γ`.
pub fn counting_alpha_beta<T: Real>(
    p_zeros: &[Point<T>],
    q_zeros: &[Point<T>],
    c: &Condenser<T>,
    n: usize,
    k: usize,
    grid_n: usize,
) -> Result<(DiscreteMeasure<T>, DiscreteMeasure<T>)> {
    if k > n || p_zeros.len() > k || q_zeros.len() > n - k {
        return Err(Error::InvalidParameter(format!(
            "zero counts ({}, {}) exceed (k, n-k) = ({k}, {})",
            p_zeros.len(),
            q_zeros.len(),
            n - k
        )));
    }
    let nu_p = DiscreteMeasure::counting(p_zeros, n)?;
    let alpha = balayage_interior_to_boundary(&nu_p, &c.e_domain, grid_n)?;

    let nu_q = DiscreteMeasure::counting(q_zeros, n)?;
    let swept = balayage_to_gamma(&nu_q, &c.gamma, grid_n)?.swept;
    let defect = T::lit((n - k - q_zeros.len()) as f64) / T::lit(n as f64);
    let beta = swept.plus(&uniform_on_gamma(&c.gamma, defect, grid_n)?);
    Ok((alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, LN_2, TAU};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn unit_disk() -> EDomain<f64> {
        EDomain::disk(c(0.0, 0.0), 1.0).unwrap()
    }

    fn random_in_disk(rng: &mut ChaCha8Rng, center: Complex<f64>, r: f64) -> Complex<f64> {
        let rho = r * rng.gen::<f64>().sqrt();
        center + Complex::from_polar(rho, TAU * rng.gen::<f64>())
    }

    #[test]
    fn sweep_of_atom_at_two_onto_unit_circle() {
        let nu = DiscreteMeasure::new(vec![c(2.0, 0.0)], vec![1.0]).unwrap();
        let b = balayage_to_e(&nu, &unit_disk(), 4096).unwrap();
        assert!((b.swept.total_mass() - 1.0).abs() < 1e-12);
        assert!(b.swept.weights().iter().all(|w| *w > 0.0));
        assert!((b.shift_constant - LN_2).abs() < 1e-15);
        assert!(b.swept.log_potential(c(0.0, 0.0)).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let z = random_in_disk(&mut rng, c(0.0, 0.0), 0.9);
            let lhs = b.swept.log_potential(z);
            let rhs = nu.log_potential(z) + b.shift_constant;
            assert!((lhs - rhs).abs() <= 1e-6, "{z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn ring_sweeps_to_uniform() {
        let n = 4096;
        let ring: Vec<_> = (0..n)
            .map(|j| Complex::from_polar(E, TAU * j as f64 / n as f64))
            .collect();
        let nu = DiscreteMeasure::uniform(ring, 1.0).unwrap();
        let b = balayage_to_e(&nu, &unit_disk(), n).unwrap();
        assert_eq!(b.swept.len(), n);
        let dev = b
            .swept
            .weights()
            .iter()
            .map(|w| (w - 1.0 / n as f64).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-6, "{dev}");
        assert!((b.shift_constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_onto_offset_circle() {
        let gamma = CurveSpec::circle(c(1.0, 0.0), 3.0).unwrap();
        let nu = DiscreteMeasure::new(vec![c(7.0, 0.0)], vec![1.0]).unwrap();
        let b = balayage_to_gamma(&nu, &gamma, 4096).unwrap();
        assert!((b.shift_constant - LN_2).abs() < 1e-15);
        assert!((b.swept.log_potential(c(1.0, 0.0)) + 3f64.ln()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let z = random_in_disk(&mut rng, c(1.0, 0.0), 2.7);
            let lhs = b.swept.log_potential(z);
            let rhs = nu.log_potential(z) + b.shift_constant;
            assert!((lhs - rhs).abs() <= 1e-6);
        }

        let inside = DiscreteMeasure::new(vec![c(2.0, 0.5)], vec![0.7]).unwrap();
        let b = balayage_to_gamma(&inside, &gamma, 256).unwrap();
        assert_eq!(b.swept, inside);
        assert_eq!(b.shift_constant, 0.0);
    }

    #[test]
    fn unsupported_targets() {
        let nu = DiscreteMeasure::new(vec![c(3.0, 0.0)], vec![1.0]).unwrap();
        let seg = EDomain::segment(-1.0, 1.0).unwrap();
        assert!(matches!(
            balayage_to_e(&nu, &seg, 64),
            Err(Error::UnsupportedDomain(_))
        ));
        let ell = CurveSpec::ellipse(c(0.0, 0.0), [3.0, 2.0], 0.0).unwrap();
        assert!(matches!(
            balayage_to_gamma(&nu, &ell, 64),
            Err(Error::UnsupportedCurve(_))
        ));
    }

    #[test]
    fn sweeping_is_linear() {
        let a = DiscreteMeasure::new(vec![c(2.0, 1.0), c(-1.5, 0.3)], vec![0.4, 0.2]).unwrap();
        let b = DiscreteMeasure::new(vec![c(0.0, -3.0)], vec![0.9]).unwrap();
        let e = unit_disk();
        let sa = balayage_to_e(&a, &e, 512).unwrap().swept;
        let sb = balayage_to_e(&b, &e, 512).unwrap().swept;
        let sab = balayage_to_e(&a.plus(&b), &e, 512).unwrap().swept;
        for j in 0..512 {
            let d = sab.weights()[j] - sa.weights()[j] - sb.weights()[j];
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_beta_examples() {
        let cond = Condenser::concentric(E).unwrap();
        let (alpha, beta) = counting_alpha_beta(&[c(0.0, 0.0); 3], &[], &cond, 8, 3, 1024).unwrap();
        assert!((alpha.total_mass() - 3.0 / 8.0).abs() < 1e-12);
        assert_eq!(alpha.len(), 1024);
        let dev = alpha
            .weights()
            .iter()
            .map(|w| (w - 3.0 / 8.0 / 1024.0).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-15);
        // q ≡ 1: β is the defect term alone
        assert!((beta.total_mass() - 5.0 / 8.0).abs() < 1e-12);
        assert_eq!(beta.len(), 1024);

        let on_gamma: Vec<_> = (0..5)
            .map(|j| Complex::from_polar(E, TAU * j as f64 / 5.0))
            .collect();
        let (_, beta) = counting_alpha_beta(&[], &on_gamma, &cond, 8, 3, 1024).unwrap();
        assert_eq!(beta, DiscreteMeasure::counting(&on_gamma, 8).unwrap());

        assert!(counting_alpha_beta(&[c(0.0, 0.0); 4], &[], &cond, 8, 3, 64).is_err());
    }
}
