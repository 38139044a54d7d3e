//! Discrete positive measures, their logarithmic and Green potentials, the
//! weighted energies of the two extremal problems, and the minimax functional
//! `M(σ) = min_Γ U^σ - min_E U^σ`.

use std::cmp::Ordering;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Condenser, EDomain};
use crate::scalar::{ln_abs, CompensatedSum, Point, Real};

/// Interior spot checks added to every scan of `E`.
pub const E_INTERIOR_SPOTS: usize = 64;

fn mass_tol<T: Real>() -> T {
    T::lit(1e-9).max(T::lit(1e3) * T::epsilon())
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr<T> {
    points: Vec<Point<T>>,
    weights: Vec<T>,
}

/// Finite weighted point set standing in for a positive Borel measure.
///
/// Weights are strictly positive and points are pairwise distinct (exact
/// duplicates are merged at construction). The empty measure is the zero
/// measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "MeasureRepr<T>",
    bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct DiscreteMeasure<T> {
    points: Vec<Point<T>>,
    weights: Vec<T>,
    #[serde(skip_serializing)]
    total_mass: T,
}

impl<T: Real> TryFrom<MeasureRepr<T>> for DiscreteMeasure<T> {
    type Error = Error;

    fn try_from(repr: MeasureRepr<T>) -> Result<Self> {
        DiscreteMeasure::new(repr.points, repr.weights)
    }
}

impl<T: Real> DiscreteMeasure<T> {
    pub fn new(points: Vec<Point<T>>, weights: Vec<T>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > T::zero() && w.is_finite())) {
            return Err(Error::InvalidMeasure(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        if points
            .iter()
            .any(|p| !(p.re.is_finite() && p.im.is_finite()))
        {
            return Err(Error::InvalidMeasure("points must be finite".into()));
        }
        let (points, weights) = merge_duplicates(points, weights);
        let total_mass = crate::scalar::compensated_sum(weights.iter().copied());
        Ok(Self {
            points,
            weights,
            total_mass,
        })
    }

    pub fn zero() -> Self {
        Self {
            points: Vec::new(),
            weights: Vec::new(),
            total_mass: T::zero(),
        }
    }

    /// Equal weights summing to `mass` (the zero measure when `points` is empty).
    pub fn uniform(points: Vec<Point<T>>, mass: T) -> Result<Self> {
        if points.is_empty() {
            return Ok(Self::zero());
        }
        let w = mass / T::lit(points.len() as f64);
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    /// Unit-weight atoms scaled by `1/n`: the normalized zero counting measure.
    pub fn counting(zeros: &[Point<T>], n: usize) -> Result<Self> {
        let w = T::one() / T::lit(n as f64);
        Self::new(zeros.to_vec(), vec![w; zeros.len()])
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point<T>, T)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        if factor == T::zero() {
            return Ok(Self::zero());
        }
        Self::new(
            self.points.clone(),
            self.weights.iter().map(|w| *w * factor).collect(),
        )
    }

    /// Measure sum; coincident atoms are merged.
    pub fn plus(&self, other: &Self) -> Self {
        let mut points = self.points.clone();
        let mut weights = self.weights.clone();
        points.extend_from_slice(&other.points);
        weights.extend_from_slice(&other.weights);
        Self::new(points, weights).expect("sum of valid measures is valid")
    }

    /// Restriction to the atoms satisfying `keep`.
    pub fn restrict<F: Fn(Point<T>) -> bool>(&self, keep: F) -> Self {
        let (points, weights): (Vec<_>, Vec<_>) = self.iter().filter(|(p, _)| keep(*p)).unzip();
        Self::new(points, weights).expect("restriction of a valid measure is valid")
    }

    /// `U^μ(z) = -Σ w_i log|z - x_i|`, distances clamped below at `1e-300`.
    pub fn log_potential(&self, z: Point<T>) -> T {
        let mut acc = CompensatedSum::new();
        for (x, w) in self.iter() {
            acc.add(-w * ln_abs(z - x));
        }
        acc.value()
    }

    /// `U_D^μ(z) = Σ w_i g(z, x_i)`; zero for `z ∈ E`.
    pub fn green_potential(&self, e: &EDomain<T>, z: Point<T>) -> Result<T> {
        if e.contains(z) {
            return Ok(T::zero());
        }
        let mut acc = CompensatedSum::new();
        for (x, w) in self.iter() {
            acc.add(w * e.green_kernel(z, x)?);
        }
        Ok(acc.value())
    }

    /// `U_D^μ(z) - g(z,∞)`, the field whose minimum on `Γ` is `m_θ`.
    pub fn green_field(&self, e: &EDomain<T>, z: Point<T>) -> Result<T> {
        Ok(self.green_potential(e, z)? - e.green_pole_infinity(z))
    }

    /// `Σ w_i g(x_i, ∞)`.
    pub fn integral_pole_green(&self, e: &EDomain<T>) -> T {
        crate::scalar::compensated_sum(self.iter().map(|(x, w)| w * e.green_pole_infinity(x)))
    }

    /// Smallest distance from `z` to an atom (`+∞` for the zero measure).
    pub fn distance_to(&self, z: Point<T>) -> T {
        self.points
            .iter()
            .map(|x| (z - *x).norm())
            .fold(T::infinity(), T::min)
    }
}

fn total_cmp<T: Real>(a: &Point<T>, b: &Point<T>) -> Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

fn merge_duplicates<T: Real>(points: Vec<Point<T>>, weights: Vec<T>) -> (Vec<Point<T>>, Vec<T>) {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| total_cmp(&points[i], &points[j]).then(i.cmp(&j)));
    // representative = first occurrence in input order
    let mut rep = vec![usize::MAX; n];
    let mut has_dup = false;
    let mut k = 0;
    while k < n {
        let first = order[k];
        let mut m = k;
        while m < n && points[order[m]] == points[first] {
            rep[order[m]] = first;
            has_dup |= m > k;
            m += 1;
        }
        k = m;
    }
    if !has_dup {
        return (points, weights);
    }
    let mut merged_w = vec![T::zero(); n];
    for i in 0..n {
        merged_w[rep[i]] = merged_w[rep[i]] + weights[i];
    }
    let mut out_p = Vec::new();
    let mut out_w = Vec::new();
    for i in 0..n {
        if rep[i] == i {
            out_p.push(points[i]);
            out_w.push(merged_w[i]);
        }
    }
    (out_p, out_w)
}

fn check_mass<T: Real>(measure: &DiscreteMeasure<T>, expected: T) -> Result<()> {
    if (measure.total_mass() - expected).abs() > mass_tol() {
        return Err(Error::MassMismatch {
            expected: expected.as_f64(),
            found: measure.total_mass().as_f64(),
        });
    }
    Ok(())
}

/// Discrete weighted Green energy
/// `J_θ(λ) = Σ_{i≠j} w_i w_j g(x_i,x_j) - 2 Σ_i w_i g(x_i,∞)`.
///
/// The diagonal is excluded. `lambda` must carry mass `1-θ`; the zero measure
/// at `θ = 1` has energy zero.
pub fn energy_j<T: Real>(lambda: &DiscreteMeasure<T>, e: &EDomain<T>, theta: T) -> Result<T> {
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [0,1], got {theta}"
        )));
    }
    check_mass(lambda, T::one() - theta)?;
    if lambda.is_empty() {
        return Ok(T::zero());
    }
    let pts = lambda.points();
    let ws = lambda.weights();
    let rows: Vec<T> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for j in 0..pts.len() {
                if i != j {
                    acc.add(ws[j] * e.green_kernel(pts[i], pts[j]).unwrap_or(T::zero()));
                }
            }
            ws[i] * acc.value()
        })
        .collect();
    let pair = crate::scalar::compensated_sum(rows);
    Ok(pair - T::lit(2.0) * lambda.integral_pole_green(e))
}

/// Discrete weighted logarithmic energy
/// `I_θ(μ) = -Σ_{i≠j} w_i w_j log|x_i-x_j| + 2 Σ_i w_i U^λ(x_i)`, diagonal excluded.
pub fn energy_i<T: Real>(
    mu: &DiscreteMeasure<T>,
    lambda_theta: &DiscreteMeasure<T>,
    theta: T,
) -> Result<T> {
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [0,1], got {theta}"
        )));
    }
    check_mass(mu, theta)?;
    if mu.is_empty() {
        return Ok(T::zero());
    }
    let pts = mu.points();
    let ws = mu.weights();
    let rows: Vec<T> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for j in 0..pts.len() {
                if i != j {
                    acc.add(-ws[j] * ln_abs(pts[i] - pts[j]));
                }
            }
            ws[i] * (acc.value() + T::lit(2.0) * lambda_theta.log_potential(pts[i]))
        })
        .collect();
    Ok(crate::scalar::compensated_sum(rows))
}

/// Point sets on which `min_Γ` and `min_E` are taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid<T> {
    /// Samples of `Γ`.
    pub gamma: Vec<Point<T>>,
    /// Samples of `∂E` followed by interior spot checks.
    pub e: Vec<Point<T>>,
}

impl<T: Real> ScanGrid<T> {
    pub fn new(c: &Condenser<T>, gamma_n: usize, e_n: usize) -> Result<Self> {
        let gamma = c.gamma_samples(gamma_n)?.points;
        let mut e = c.e_domain.boundary_samples(e_n);
        e.extend(c.e_domain.interior_spots(E_INTERIOR_SPOTS));
        Ok(Self { gamma, e })
    }
}

/// `M(σ) = min_Γ U^σ - min_E U^σ` on `gamma_grid_n` curve samples and
/// `e_grid_n` boundary samples of `E` (plus interior spot checks).
pub fn m_functional<T: Real>(
    sigma: &DiscreteMeasure<T>,
    c: &Condenser<T>,
    gamma_grid_n: usize,
    e_grid_n: usize,
) -> Result<T> {
    let scan = ScanGrid::new(c, gamma_grid_n, e_grid_n)?;
    m_functional_on(sigma, &scan)
}

/// [`m_functional`] on a precomputed scan grid.
pub fn m_functional_on<T: Real>(sigma: &DiscreteMeasure<T>, scan: &ScanGrid<T>) -> Result<T> {
    if sigma.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let min_on = |pts: &[Point<T>]| {
        pts.par_iter()
            .map(|z| sigma.log_potential(*z))
            .reduce(|| T::infinity(), T::min)
    };
    Ok(min_on(&scan.gamma) - min_on(&scan.e))
}

/// Values of a scalar field on a list of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid<T> {
    pub grid_points: Vec<Point<T>>,
    pub values: Vec<T>,
    pub description: String,
}

impl<T: Real> FieldGrid<T> {
    pub fn new(
        grid_points: Vec<Point<T>>,
        values: Vec<T>,
        description: impl Into<String>,
    ) -> Result<Self> {
        if grid_points.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "field grid has {} points but {} values",
                grid_points.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid_points,
            values,
            description: description.into(),
        })
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Rectangular `nx × ny` grid spanning `[lo, hi]`.
pub fn box_grid<T: Real>(lo: Point<T>, hi: Point<T>, nx: usize, ny: usize) -> Vec<Point<T>> {
    let step = |a: T, b: T, n: usize, i: usize| {
        if n <= 1 {
            (a + b) / T::lit(2.0)
        } else {
            a + (b - a) * T::lit(i as f64) / T::lit((n - 1) as f64)
        }
    };
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push(Complex::new(
                step(lo.re, hi.re, nx, i),
                step(lo.im, hi.im, ny, j),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;
    use proptest::prelude::*;
    use std::f64::consts::{E, LN_2, TAU};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn circle_points(center: Complex<f64>, r: f64, n: usize, offset: f64) -> Vec<Complex<f64>> {
        (0..n)
            .map(|j| center + Complex::from_polar(r, TAU * (j as f64 + offset) / n as f64))
            .collect()
    }

    #[test]
    fn construction_rules() {
        assert!(DiscreteMeasure::new(vec![c(0.0, 0.0)], vec![0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![c(0.0, 0.0)], vec![1.0, 2.0]).is_err());
        let m = DiscreteMeasure::new(
            vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)],
            vec![0.25, 0.5, 0.25],
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.points()[0], c(1.0, 0.0));
        assert_eq!(m.weights()[0], 0.5);
        assert_eq!(m.total_mass(), 1.0);
        let z = DiscreteMeasure::<f64>::zero();
        assert!(z.is_empty());
        assert_eq!(z.total_mass(), 0.0);
    }

    #[test]
    fn log_potential_examples() {
        let atom = DiscreteMeasure::new(vec![c(0.0, 0.0)], vec![1.0]).unwrap();
        assert!((atom.log_potential(c(E, 0.0)) + 1.0).abs() < 1e-15);
        assert_eq!(
            DiscreteMeasure::<f64>::zero().log_potential(c(3.0, 1.0)),
            0.0
        );
        let ring = DiscreteMeasure::uniform(circle_points(c(0.0, 0.0), E, 4096, 0.0), 1.0).unwrap();
        assert!((ring.log_potential(c(0.5, 0.0)) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn log_potential_far_field() {
        let m = DiscreteMeasure::new(
            vec![c(0.3, 0.1), c(-0.5, 0.2), c(0.0, -0.7)],
            vec![0.2, 0.5, 0.8],
        )
        .unwrap();
        let z = c(1e6, 0.0);
        let expected = -m.total_mass() * z.norm().ln();
        assert!(((m.log_potential(z) - expected) / expected).abs() < 1e-5);
    }

    #[test]
    fn green_potential_examples() {
        let e = EDomain::disk(c(0.0, 0.0), 1.0).unwrap();
        let atom = DiscreteMeasure::new(vec![c(3.0, 0.0)], vec![1.0]).unwrap();
        assert!((atom.green_potential(&e, c(2.0, 0.0)).unwrap() - 5.0f64.ln()).abs() < 1e-14);
        assert_eq!(atom.green_potential(&e, c(0.2, 0.3)).unwrap(), 0.0);
        assert_eq!(
            atom.green_potential(&e, c(3.0, 0.0)),
            Err(Error::CoincidentPole)
        );

        // 4096 equispaced atoms on |z| = e. Off the atoms the discrete potential
        // carries the ripple -(1/m) log|2 sin(πf)| at cell fraction f, which
        // vanishes at f = 1/6 and equals -(log 2)/m at the midpoint.
        let m = 4096;
        let ring = DiscreteMeasure::uniform(circle_points(c(0.0, 0.0), E, m, 0.0), 1.0).unwrap();
        let at_sixth = Complex::from_polar(E, TAU * (1.0 / 6.0) / m as f64);
        assert!((ring.green_potential(&e, at_sixth).unwrap() - 1.0).abs() < 1e-6);
        let mid = Complex::from_polar(E, TAU * 0.5 / m as f64);
        let expected = 1.0 - LN_2 / m as f64;
        assert!((ring.green_potential(&e, mid).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn energy_j_examples() {
        let e = EDomain::disk(c(0.0, 0.0), 1.0).unwrap();
        assert_eq!(energy_j(&DiscreteMeasure::zero(), &e, 1.0).unwrap(), 0.0);

        let two = DiscreteMeasure::new(vec![c(E, 0.0), c(-E, 0.0)], vec![0.5, 0.5]).unwrap();
        let g = (1.0 + E * E).ln() - (2.0 * E).ln();
        let expected = 2.0 * 0.25 * g - 2.0 * (0.5 + 0.5) * 1.0;
        assert!((energy_j(&two, &e, 0.0).unwrap() - expected).abs() < 1e-14);

        let half = DiscreteMeasure::uniform(circle_points(c(0.0, 0.0), E, 256, 0.0), 0.5).unwrap();
        let v = energy_j(&half, &e, 0.5).unwrap();
        let m_est = (v + half.integral_pole_green(&e)) / 0.5;
        assert!((m_est + 0.5).abs() <= 0.02, "{m_est}");

        assert!(matches!(
            energy_j(&half, &e, 0.25),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn energy_i_examples() {
        let zero = DiscreteMeasure::<f64>::zero();
        assert_eq!(energy_i(&zero, &zero, 0.0).unwrap(), 0.0);

        let m = 256;
        let mu = DiscreteMeasure::uniform(circle_points(c(0.0, 0.0), 1.0, m, 0.0), 1.0).unwrap();
        let v = energy_i(&mu, &zero, 1.0).unwrap();
        // off-diagonal energy of the m-th roots of unity is -(log m)/m
        assert!((v + (m as f64).ln() / m as f64).abs() < 1e-12);
        assert!(v.abs() < 2.0 * (m as f64).ln() / m as f64);
    }

    #[test]
    fn energy_i_is_minimal_under_weight_perturbations() {
        use rand::{Rng, SeedableRng};
        let m = 256;
        let pts = circle_points(c(0.0, 0.0), 1.0, m, 0.0);
        let lambda = DiscreteMeasure::uniform(circle_points(c(0.0, 0.0), E, m, 0.0), 0.5).unwrap();
        let mu = DiscreteMeasure::uniform(pts.clone(), 0.5).unwrap();
        let base = energy_i(&mu, &lambda, 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..m)
                .map(|_| 1.0 + 0.3 * rng.gen_range(-1.0..1.0))
                .collect();
            let s: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| 0.5 * x / s).collect();
            let pert = DiscreteMeasure::new(pts.clone(), w).unwrap();
            let v = energy_i(&pert, &lambda, 0.5).unwrap();
            // diagonal exclusion leaves tiny negative high-frequency modes
            assert!(v >= base - 1e-3, "{v} < {base}");
        }
        assert!(base.is_finite());
    }

    #[test]
    fn m_functional_examples() {
        let conc = Condenser::concentric(E).unwrap();
        // atoms sit half a cell off the 4096 Γ samples, so every sample is a
        // cell midpoint where the ripple is -(log 2)/m.
        let m = 4096;
        let ring = DiscreteMeasure::uniform(circle_points(c(0.0, 0.0), E, m, 0.5), 1.0).unwrap();
        let v = m_functional(&ring, &conc, 4096, 1024).unwrap();
        assert!((v + LN_2 / m as f64).abs() < 1e-9, "{v}");
        assert!(v.abs() < 2e-4);

        let atom = DiscreteMeasure::new(vec![c(10.0, 0.0)], vec![1.0]).unwrap();
        let v = m_functional(&atom, &conc, 4096, 4096).unwrap();
        let expected = (11.0 / (10.0 + E)).ln();
        assert!((v - expected).abs() < 1e-12);
        assert!((expected + 0.145145).abs() < 1e-6);

        assert_eq!(
            m_functional(&DiscreteMeasure::zero(), &conc, 64, 64),
            Err(Error::EmptyMeasure)
        );
    }

    #[test]
    fn m_functional_interior_spots_never_lower() {
        let conc = Condenser::concentric(E).unwrap();
        let sigma = DiscreteMeasure::new(
            vec![c(2.0, 1.0), c(-1.5, 0.5), c(0.0, -2.2)],
            vec![0.3, 0.3, 0.4],
        )
        .unwrap();
        let boundary = conc.e_domain.boundary_samples(2048);
        let min_b = boundary
            .iter()
            .map(|z| sigma.log_potential(*z))
            .fold(f64::INFINITY, f64::min);
        for z in conc.e_domain.interior_spots(E_INTERIOR_SPOTS) {
            assert!(sigma.log_potential(z) >= min_b - 1e-9);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = DiscreteMeasure::new(
            vec![c(0.1, 1.0 / 3.0), c(std::f64::consts::PI, -1e-17)],
            vec![0.7, 1.0 / 7.0],
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("{\"points\":[["));
        let back: DiscreteMeasure<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.weights().iter().zip(m.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let bad = "{\"points\":[[0.0,0.0]],\"weights\":[-1.0]}";
        assert!(serde_json::from_str::<DiscreteMeasure<f64>>(bad).is_err());
    }

    #[test]
    fn field_grid_lengths_must_match() {
        assert!(FieldGrid::new(vec![c(0.0, 0.0)], vec![1.0, 2.0], "x").is_err());
        let g = box_grid(c(-1.0, -1.0), c(1.0, 1.0), 3, 2);
        assert_eq!(g.len(), 6);
        assert_eq!(g[5], c(1.0, 1.0));
    }

    #[test]
    fn order_independent_potentials() {
        let pts = circle_points(c(0.2, 0.0), 2.5, 999, 0.3);
        let ws: Vec<f64> = (0..999).map(|j| 1.0 + (j % 7) as f64).collect();
        let a = DiscreteMeasure::new(pts.clone(), ws.clone()).unwrap();
        let b = DiscreteMeasure::new(
            pts.into_iter().rev().collect(),
            ws.into_iter().rev().collect(),
        )
        .unwrap();
        let z = c(0.1, -0.4);
        assert!(
            (a.log_potential(z) - b.log_potential(z)).abs() <= 1e-12 * a.log_potential(z).abs()
        );
    }

    proptest! {
        #[test]
        fn m_functional_is_positively_homogeneous(
            xs in proptest::collection::vec((-4.0f64..4.0, -4.0f64..4.0, 0.05f64..1.0), 1..6),
            scale in 0.1f64..5.0,
        ) {
            let conc = Condenser::offset(3.0).unwrap();
            let (pts, ws): (Vec<_>, Vec<_>) = xs.iter().map(|&(x, y, w)| (c(x, y), w)).unzip();
            let sigma = DiscreteMeasure::new(pts, ws).unwrap();
            let a = m_functional(&sigma, &conc, 256, 256).unwrap();
            let b = m_functional(&sigma.scaled(scale).unwrap(), &conc, 256, 256).unwrap();
            prop_assert!((b - scale * a).abs() <= 1e-10 * (1.0 + a.abs() * scale));
        }

        #[test]
        fn measure_json_round_trip(
            xs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3, 1e-6f64..10.0), 0..20),
        ) {
            let (pts, ws): (Vec<_>, Vec<_>) = xs.iter().map(|&(x, y, w)| (c(x, y), w)).unzip();
            let m = DiscreteMeasure::new(pts, ws).unwrap();
            let back: DiscreteMeasure<f64> = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn curve_spec_is_usable_in_scan() {
        let cond = Condenser::new(
            EDomain::segment(-1.0, 1.0).unwrap(),
            CurveSpec::ellipse(c(0.0, 0.0), [2.0, 1.5], 0.0).unwrap(),
        )
        .unwrap();
        let scan = ScanGrid::new(&cond, 64, 33).unwrap();
        assert_eq!(scan.gamma.len(), 64);
        assert_eq!(scan.e.len(), 33);
    }
}
