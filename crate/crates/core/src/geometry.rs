//! Model condensers: the plate `E` (disk or real segment), the surrounding
//! Jordan curve `Γ`, closed-form Green functions of `D = C \ E`, and curve
//! sampling.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ln_abs, Point, Real};

/// Number of `Γ` samples used when validating a condenser.
pub const VALIDATION_SAMPLES: usize = 4096;
/// Number of `∂E` samples whose winding number is checked during validation.
const VALIDATION_E_SAMPLES: usize = 256;

fn membership_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::lit(100.0) * T::epsilon())
}

fn coincidence_tol<T: Real>() -> T {
    T::lit(1e-14).max(T::lit(4.0) * T::epsilon())
}

/// The compact plate `E` of the condenser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EDomain<T> {
    Disk {
        center: Point<T>,
        radius: T,
    },
    /// Real segment `[a, b]` on the real axis.
    Segment {
        a: T,
        b: T,
    },
}

impl<T: Real> EDomain<T> {
    pub fn disk(center: Point<T>, radius: T) -> Result<Self> {
        let e = EDomain::Disk { center, radius };
        e.validate()?;
        Ok(e)
    }

    pub fn segment(a: T, b: T) -> Result<Self> {
        let e = EDomain::Segment { a, b };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EDomain::Disk { center, radius } => {
                if !(radius > T::zero() && radius.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
                if !(center.re.is_finite() && center.im.is_finite()) {
                    return Err(Error::InvalidParameter("disk center must be finite".into()));
                }
            }
            EDomain::Segment { a, b } => {
                if !(a.is_finite() && b.is_finite() && b > a) {
                    return Err(Error::InvalidParameter(format!(
                        "segment requires a < b, got [{a}, {b}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Logarithmic capacity: the radius of a disk, a quarter of a segment's length.
    pub fn log_capacity(&self) -> T {
        match *self {
            EDomain::Disk { radius, .. } => radius,
            EDomain::Segment { a, b } => (b - a) / T::lit(4.0),
        }
    }

    /// Robin constant `-log cp(E)`.
    pub fn robin_constant(&self) -> T {
        -self.log_capacity().ln()
    }

    /// A point of `E` used as winding-number reference.
    pub fn interior_point(&self) -> Point<T> {
        match *self {
            EDomain::Disk { center, .. } => center,
            EDomain::Segment { a, b } => Complex::new((a + b) / T::lit(2.0), T::zero()),
        }
    }

    /// Conformal map of `D` onto the exterior of the unit disk, normalized at infinity.
    ///
    /// For a segment the root of `w² - 1` with the larger `|w ± √(w²-1)|` is taken,
    /// which removes the sign ambiguity uniformly off the cut.
    pub fn to_exterior(&self, z: Point<T>) -> Point<T> {
        match *self {
            EDomain::Disk { center, radius } => (z - center) / radius,
            EDomain::Segment { .. } => {
                let w = self.segment_coordinate(z);
                let s = (w * w - T::one()).sqrt();
                let plus = w + s;
                let minus = w - s;
                if plus.norm_sqr() >= minus.norm_sqr() {
                    plus
                } else {
                    minus
                }
            }
        }
    }

    /// Derivative of [`Self::to_exterior`]; only meaningful off `E`.
    pub fn to_exterior_derivative(&self, z: Point<T>) -> Point<T> {
        match *self {
            EDomain::Disk { radius, .. } => Complex::new(radius.recip(), T::zero()),
            EDomain::Segment { a, b } => {
                let half = (b - a) / T::lit(2.0);
                let w = self.segment_coordinate(z);
                let zeta = self.to_exterior(z);
                let root = zeta - w;
                zeta / (root * half)
            }
        }
    }

    fn segment_coordinate(&self, z: Point<T>) -> Point<T> {
        match *self {
            EDomain::Segment { a, b } => {
                let two = T::lit(2.0);
                let mid = (a + b) / two;
                let half = (b - a) / two;
                (z - Complex::new(mid, T::zero())) / half
            }
            EDomain::Disk { .. } => z,
        }
    }

    /// Whether `z` lies in `E` (boundary included, up to a relative tolerance).
    pub fn contains(&self, z: Point<T>) -> bool {
        self.to_exterior(z).norm() <= T::one() + membership_tol()
    }

    /// Green function of `D` with pole at infinity; zero on `E`.
    pub fn green_pole_infinity(&self, z: Point<T>) -> T {
        self.to_exterior(z).norm().ln().max(T::zero())
    }

    /// Green function `g(z, t)` of `D`; zero whenever `z` or `t` lies in `E`.
    pub fn green_kernel(&self, z: Point<T>, t: Point<T>) -> Result<T> {
        let pz = self.to_exterior(z);
        let pt = self.to_exterior(t);
        green_from_exterior(pz, pt, z, t)
    }

    /// `lim_{t→z} [g(z,t) + log|z-t|]`, the regular part of the kernel on the diagonal.
    pub fn green_diagonal_regular(&self, z: Point<T>) -> T {
        let p = self.to_exterior(z);
        let dp = self.to_exterior_derivative(z);
        (p.norm_sqr() - T::one()).max(T::log_clamp()).ln() - dp.norm().ln()
    }

    /// `n` samples of `∂E` in increasing parameter order.
    ///
    /// Disk: equispaced in angle starting at angle 0. Segment: Chebyshev–Lobatto
    /// abscissae from `b` down to `a`, both endpoints included.
    pub fn boundary_samples(&self, n: usize) -> Vec<Point<T>> {
        match *self {
            EDomain::Disk { center, radius } => (0..n)
                .map(|j| {
                    let t = T::TAU() * T::lit(j as f64) / T::lit(n as f64);
                    center + Complex::from_polar(radius, t)
                })
                .collect(),
            EDomain::Segment { a, b } => {
                let two = T::lit(2.0);
                let mid = (a + b) / two;
                let half = (b - a) / two;
                if n == 1 {
                    return vec![Complex::new(mid, T::zero())];
                }
                (0..n)
                    .map(|j| {
                        let t = T::PI() * T::lit(j as f64) / T::lit((n - 1) as f64);
                        Complex::new(mid + half * t.cos(), T::zero())
                    })
                    .collect()
            }
        }
    }

    /// Interior spot checks of `E` (empty for a segment, which has no interior).
    pub fn interior_spots(&self, count: usize) -> Vec<Point<T>> {
        match *self {
            EDomain::Disk { center, radius } => {
                if count == 0 {
                    return Vec::new();
                }
                // golden-angle spiral, deterministic and roughly uniform in area
                let golden = T::PI() * (T::lit(3.0) - T::lit(5.0).sqrt());
                (0..count)
                    .map(|j| {
                        let r = radius
                            * T::lit(0.95)
                            * (T::lit(j as f64 + 0.5) / T::lit(count as f64)).sqrt();
                        center + Complex::from_polar(r, golden * T::lit(j as f64))
                    })
                    .collect()
            }
            EDomain::Segment { .. } => Vec::new(),
        }
    }

    pub fn is_disk(&self) -> bool {
        matches!(self, EDomain::Disk { .. })
    }
}

/// Green kernel from already-mapped points; shared with hot loops that cache `φ`.
#[inline]
pub(crate) fn green_from_exterior<T: Real>(
    pz: Point<T>,
    pt: Point<T>,
    z: Point<T>,
    t: Point<T>,
) -> Result<T> {
    let one = T::one() + membership_tol();
    if pz.norm() <= one || pt.norm() <= one {
        return Ok(T::zero());
    }
    let scale = T::one().max(z.norm()).max(t.norm());
    if (z - t).norm() <= coincidence_tol::<T>() * scale {
        return Err(Error::CoincidentPole);
    }
    Ok(green_unchecked(pz, pt))
}

/// `log|1 - φz·conj(φt)| - log|φz - φt|`, clamped at zero; caller guarantees `z ≠ t`.
#[inline]
pub(crate) fn green_unchecked<T: Real>(pz: Point<T>, pt: Point<T>) -> T {
    let one = Complex::new(T::one(), T::zero());
    (ln_abs(one - pz * pt.conj()) - ln_abs(pz - pt)).max(T::zero())
}

/// Description of the outer curve `Γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "snake_case",
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub enum CurveSpec<T> {
    Circle {
        center: Point<T>,
        radius: T,
    },
    Ellipse {
        center: Point<T>,
        semi_axes: [T; 2],
        #[serde(default)]
        rotation: T,
    },
    /// Star-shaped curve `center + r(φ)e^{iφ}` from a table of `[angle, radius]` rows,
    /// interpolated linearly and periodically in the angle.
    Polar {
        center: Point<T>,
        samples: Vec<[T; 2]>,
    },
}

/// Equispaced-parameter samples of a curve with arclength quadrature weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSamples<T> {
    pub params: Vec<T>,
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> CurveSamples<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Length of the closed polygon through the samples.
    pub fn polygon_length(&self) -> T {
        closed_polygon_length(&self.points)
    }

    pub fn total_weight(&self) -> T {
        crate::scalar::compensated_sum(self.weights.iter().copied())
    }
}

/// Length of the closed polygon through `points`.
pub fn closed_polygon_length<T: Real>(points: &[Point<T>]) -> T {
    let n = points.len();
    crate::scalar::compensated_sum((0..n).map(|j| (points[(j + 1) % n] - points[j]).norm()))
}

impl<T: Real> CurveSpec<T> {
    pub fn circle(center: Point<T>, radius: T) -> Result<Self> {
        let c = CurveSpec::Circle { center, radius };
        c.validate()?;
        Ok(c)
    }

    pub fn ellipse(center: Point<T>, semi_axes: [T; 2], rotation: T) -> Result<Self> {
        let c = CurveSpec::Ellipse {
            center,
            semi_axes,
            rotation,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn polar(center: Point<T>, samples: Vec<[T; 2]>) -> Result<Self> {
        let c = CurveSpec::Polar { center, samples };
        c.validate()?;
        Ok(c)
    }

    /// Parameter checks plus, for tabulated curves, the sampled Jordan check.
    pub fn validate(&self) -> Result<()> {
        match self {
            CurveSpec::Circle { radius, .. } => {
                if !(*radius > T::zero() && radius.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "circle radius must be positive, got {radius}"
                    )));
                }
            }
            CurveSpec::Ellipse { semi_axes, .. } => {
                if !semi_axes.iter().all(|a| *a > T::zero() && a.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "ellipse semi-axes must be positive".into(),
                    ));
                }
            }
            CurveSpec::Polar { samples, .. } => {
                if samples.len() < 8 {
                    return Err(Error::InvalidParameter(
                        "polar curve needs at least 8 (angle, radius) samples".into(),
                    ));
                }
                if !samples.iter().all(|s| s[1] > T::zero() && s[0].is_finite()) {
                    return Err(Error::InvalidParameter(
                        "polar curve radii must be positive".into(),
                    ));
                }
                let mut angles: Vec<T> = samples.iter().map(|s| wrap_angle(s[0])).collect();
                angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
                if angles.windows(2).any(|w| w[1] - w[0] <= T::epsilon()) {
                    return Err(Error::InvalidParameter(
                        "polar curve angles must be distinct modulo 2π".into(),
                    ));
                }
                let samples = self.sample_points(VALIDATION_SAMPLES);
                if polygon_self_intersects(&samples) {
                    return Err(Error::InvalidCondenser(
                        "Jordan check failed: sampled curve intersects itself".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Point<T> {
        match self {
            CurveSpec::Circle { center, .. }
            | CurveSpec::Ellipse { center, .. }
            | CurveSpec::Polar { center, .. } => *center,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, CurveSpec::Circle { .. })
    }

    /// Point at parameter `t ∈ [0, 2π)`.
    pub fn point(&self, t: T) -> Point<T> {
        match self {
            CurveSpec::Circle { center, radius } => *center + Complex::from_polar(*radius, t),
            CurveSpec::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let local = Complex::new(semi_axes[0] * t.cos(), semi_axes[1] * t.sin());
                *center + local * Complex::from_polar(T::one(), *rotation)
            }
            CurveSpec::Polar { center, samples } => {
                *center + Complex::from_polar(polar_radius(samples, t), t)
            }
        }
    }

    /// `|γ'(t)|` where a closed form exists.
    fn speed(&self, t: T) -> Option<T> {
        match self {
            CurveSpec::Circle { radius, .. } => Some(*radius),
            CurveSpec::Ellipse { semi_axes, .. } => {
                let (a, b) = (semi_axes[0], semi_axes[1]);
                Some((a * a * t.sin() * t.sin() + b * b * t.cos() * t.cos()).sqrt())
            }
            CurveSpec::Polar { .. } => None,
        }
    }

    fn sample_points(&self, n: usize) -> Vec<Point<T>> {
        (0..n).map(|j| self.point(param_at::<T>(j, n))).collect()
    }

    /// `n ≥ 8` samples at equispaced parameters with arclength weights.
    ///
    /// Weights are `|γ'(t_j)|·2π/n` when the speed is known in closed form
    /// (spectrally exact for these smooth periodic curves) and averaged
    /// adjacent chords otherwise.
    pub fn sample(&self, n: usize) -> Result<CurveSamples<T>> {
        if n < 8 {
            return Err(Error::InvalidParameter(format!(
                "curve sampling needs n >= 8, got {n}"
            )));
        }
        let params: Vec<T> = (0..n).map(|j| param_at::<T>(j, n)).collect();
        let points: Vec<Point<T>> = params.iter().map(|&t| self.point(t)).collect();
        let dt = T::TAU() / T::lit(n as f64);
        let weights = match self.speed(T::zero()) {
            Some(_) => params
                .iter()
                .map(|&t| self.speed(t).unwrap() * dt)
                .collect(),
            None => (0..n)
                .map(|j| {
                    let prev = points[(j + n - 1) % n];
                    let next = points[(j + 1) % n];
                    ((points[j] - prev).norm() + (next - points[j]).norm()) / T::lit(2.0)
                })
                .collect(),
        };
        Ok(CurveSamples {
            params,
            points,
            weights,
        })
    }

    /// Axis-aligned bounding box `(min, max)` from `n` samples.
    pub fn bounding_box(&self, n: usize) -> (Point<T>, Point<T>) {
        let pts = self.sample_points(n.max(8));
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in &pts {
            lo.re = lo.re.min(p.re);
            lo.im = lo.im.min(p.im);
            hi.re = hi.re.max(p.re);
            hi.im = hi.im.max(p.im);
        }
        (lo, hi)
    }

    /// Green function of the exterior of a circular `Γ` with pole at infinity.
    pub fn green_exterior(&self, z: Point<T>) -> Result<T> {
        match self {
            CurveSpec::Circle { center, radius } => {
                Ok(((z - *center).norm() / *radius).ln().max(T::zero()))
            }
            _ => Err(Error::UnsupportedCurve(
                "exterior Green function is only available for circular Γ".into(),
            )),
        }
    }
}

#[inline]
fn param_at<T: Real>(j: usize, n: usize) -> T {
    T::TAU() * T::lit(j as f64) / T::lit(n as f64)
}

fn wrap_angle<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let r = a % tau;
    if r < T::zero() {
        r + tau
    } else {
        r
    }
}

fn polar_radius<T: Real>(samples: &[[T; 2]], t: T) -> T {
    let mut table: Vec<(T, T)> = samples.iter().map(|s| (wrap_angle(s[0]), s[1])).collect();
    table.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let t = wrap_angle(t);
    let n = table.len();
    let tau = T::TAU();
    let upper = table.iter().position(|&(a, _)| a > t).unwrap_or(n);
    let (a0, r0, a1, r1) = if upper == 0 || upper == n {
        let (la, lr) = table[n - 1];
        let (fa, fr) = table[0];
        let la = if upper == 0 { la - tau } else { la };
        let fa = if upper == 0 { fa } else { fa + tau };
        (la, lr, fa, fr)
    } else {
        let (la, lr) = table[upper - 1];
        let (fa, fr) = table[upper];
        (la, lr, fa, fr)
    };
    let s = (t - a0) / (a1 - a0);
    r0 + (r1 - r0) * s
}

/// Winding number of the closed polygon `points` about `p`, via summed argument increments.
pub fn winding_number<T: Real>(points: &[Point<T>], p: Point<T>) -> i64 {
    let n = points.len();
    let mut total = T::zero();
    for j in 0..n {
        let a = points[j] - p;
        let b = points[(j + 1) % n] - p;
        total = total + (b / a).arg();
    }
    (total / T::TAU()).round().to_i64().unwrap_or(0)
}

/// Brute-force check whether any two non-adjacent edges of the closed polygon cross.
pub fn polygon_self_intersects<T: Real>(points: &[Point<T>]) -> bool {
    let n = points.len();
    let cross = |o: Point<T>, a: Point<T>, b: Point<T>| {
        (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
    };
    for i in 0..n {
        let (p1, p2) = (points[i], points[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (q1, q2) = (points[j], points[(j + 1) % n]);
            let d1 = cross(q1, q2, p1);
            let d2 = cross(q1, q2, p2);
            let d3 = cross(p1, p2, q1);
            let d4 = cross(p1, p2, q2);
            if d1 * d2 < T::zero() && d3 * d4 < T::zero() {
                return true;
            }
        }
    }
    false
}

/// The pair `(E, Γ)` with `E` inside the Jordan domain bounded by `Γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Condenser<T> {
    pub e_domain: EDomain<T>,
    pub gamma: CurveSpec<T>,
    #[serde(default)]
    pub validated: bool,
}

impl<T: Real> Condenser<T> {
    /// Builds and validates a condenser.
    pub fn new(e_domain: EDomain<T>, gamma: CurveSpec<T>) -> Result<Self> {
        let mut c = Condenser {
            e_domain,
            gamma,
            validated: false,
        };
        c.validate()?;
        Ok(c)
    }

    /// Unit disk inside the concentric circle of radius `rho`.
    pub fn concentric(rho: T) -> Result<Self> {
        Self::new(
            EDomain::disk(Complex::new(T::zero(), T::zero()), T::one())?,
            CurveSpec::circle(Complex::new(T::zero(), T::zero()), rho)?,
        )
    }

    /// Unit disk inside the circle of radius `radius` centred at `1`.
    pub fn offset(radius: T) -> Result<Self> {
        Self::new(
            EDomain::disk(Complex::new(T::zero(), T::zero()), T::one())?,
            CurveSpec::circle(Complex::new(T::one(), T::zero()), radius)?,
        )
    }

    /// Sample-based validation: `Γ` winds once around every `∂E` sample and
    /// `g(·,∞) > 0` on `Γ`.
    pub fn validate(&mut self) -> Result<()> {
        self.e_domain.validate()?;
        self.gamma.validate()?;
        let curve = self.gamma.sample(VALIDATION_SAMPLES)?;
        let mut probes = self.e_domain.boundary_samples(VALIDATION_E_SAMPLES);
        probes.push(self.e_domain.interior_point());
        for p in &probes {
            let w = winding_number(&curve.points, *p);
            if w != 1 {
                self.validated = false;
                return Err(Error::InvalidCondenser(format!(
                    "winding-number check failed: Γ winds {w} times around the E point ({}, {}); E must lie inside Γ",
                    p.re, p.im
                )));
            }
        }
        let min_g = curve
            .points
            .iter()
            .map(|z| self.e_domain.green_pole_infinity(*z))
            .fold(T::infinity(), T::min);
        if !(min_g > T::zero()) {
            self.validated = false;
            return Err(Error::InvalidCondenser(format!(
                "positivity check failed: min over Γ of g(·,∞) is {min_g}; Γ must lie in D"
            )));
        }
        self.validated = true;
        Ok(())
    }

    pub fn green_pole_infinity(&self, z: Point<T>) -> T {
        self.e_domain.green_pole_infinity(z)
    }

    pub fn green_kernel(&self, z: Point<T>, t: Point<T>) -> Result<T> {
        self.e_domain.green_kernel(z, t)
    }

    pub fn gamma_samples(&self, n: usize) -> Result<CurveSamples<T>> {
        self.gamma.sample(n)
    }

    /// `max_Γ g(·,∞)` over `n` samples.
    pub fn max_green_on_gamma(&self, n: usize) -> Result<T> {
        Ok(self
            .gamma_samples(n)?
            .points
            .iter()
            .map(|z| self.green_pole_infinity(*z))
            .fold(T::neg_infinity(), T::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn unit_disk() -> EDomain<f64> {
        EDomain::disk(c(0.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn pole_at_infinity_closed_forms() {
        let e = unit_disk();
        assert!((e.green_pole_infinity(c(std::f64::consts::E, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(e.green_pole_infinity(c(0.3, 0.4)), 0.0);
        let s = EDomain::segment(-1.0, 1.0).unwrap();
        let expected = (2.0 + 3.0f64.sqrt()).ln();
        assert!((s.green_pole_infinity(c(2.0, 0.0)) - expected).abs() < 1e-14);
        assert!((expected - 1.316958).abs() < 1e-6);
        // both half-planes pick the exterior branch
        assert!((s.green_pole_infinity(c(-2.0, 0.0)) - expected).abs() < 1e-14);
        assert!(s.green_pole_infinity(c(0.0, -1.0)) > 0.0);
        assert_eq!(s.green_pole_infinity(c(0.25, 0.0)), 0.0);
    }

    #[test]
    fn green_kernel_closed_forms() {
        let e = unit_disk();
        let v = e.green_kernel(c(2.0, 0.0), c(3.0, 0.0)).unwrap();
        assert!((v - 5.0f64.ln()).abs() < 1e-14);
        assert_eq!(e.green_kernel(c(1.0, 0.0), c(3.0, 0.0)).unwrap(), 0.0);
        let w = e.green_kernel(c(3.0, 0.0), c(2.0, 0.0)).unwrap();
        assert_eq!(v, w);
        assert_eq!(
            e.green_kernel(c(2.0, 1.0), c(2.0, 1.0)),
            Err(Error::CoincidentPole)
        );
        // z in E short-circuits before the coincidence check
        assert_eq!(e.green_kernel(c(0.1, 0.0), c(0.1, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn kernel_symmetry_and_positivity_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let domains = [unit_disk(), EDomain::segment(-1.0, 1.0).unwrap()];
        for e in &domains {
            for _ in 0..10_000 {
                let z = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                let t = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                let a = e.green_kernel(z, t).unwrap();
                let b = e.green_kernel(t, z).unwrap();
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                assert!(a >= 0.0);
            }
        }
    }

    #[test]
    fn kernel_vanishes_on_boundary_samples() {
        for e in [unit_disk(), EDomain::segment(-1.0, 1.0).unwrap()] {
            for z in e.boundary_samples(4096) {
                let v = e.green_kernel(z, c(2.5, 1.5)).unwrap();
                assert!(v.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kernel_tends_to_pole_at_infinity() {
        let domains = [
            unit_disk(),
            EDomain::segment(-1.0, 1.0).unwrap(),
            EDomain::disk(c(0.5, -0.2), 0.7).unwrap(),
        ];
        let far = c(1e8, 0.0);
        for e in &domains {
            for i in 0..8 {
                for j in 0..8 {
                    let z = c(-3.0 + 0.8 * i as f64, -3.0 + 0.8 * j as f64);
                    let d = (e.green_kernel(z, far).unwrap() - e.green_pole_infinity(z)).abs();
                    assert!(d <= 1e-6, "{d}");
                }
            }
        }
    }

    #[test]
    fn diagonal_regular_part_matches_limit() {
        for e in [unit_disk(), EDomain::segment(-1.0, 1.0).unwrap()] {
            let z = c(1.7, 0.9);
            let h = 1e-6;
            let t = z + c(h, 0.0);
            let approx = e.green_kernel(z, t).unwrap() + h.ln();
            assert!((approx - e.green_diagonal_regular(z)).abs() < 1e-5);
        }
    }

    #[test]
    fn exterior_gamma_green() {
        let g = CurveSpec::circle(c(1.0, 0.0), 3.0).unwrap();
        assert!((g.green_exterior(c(7.0, 0.0)).unwrap() - 2.0f64.ln()).abs() < 1e-15);
        assert!(g.green_exterior(c(1.0, 3.0)).unwrap().abs() < 1e-15);
        let g = CurveSpec::circle(c(0.0, 0.0), std::f64::consts::E).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        assert!((g.green_exterior(c(e2, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        let el = CurveSpec::ellipse(c(0.0, 0.0), [2.0, 1.0], 0.0).unwrap();
        assert!(matches!(
            el.green_exterior(c(5.0, 0.0)),
            Err(Error::UnsupportedCurve(_))
        ));
    }

    #[test]
    fn circle_samples_and_weights() {
        let g = CurveSpec::circle(c(0.0, 0.0), 1.0).unwrap();
        assert!(g.sample(4).is_err());
        let s = g.sample(8).unwrap();
        assert!((s.points[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((s.points[2] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((s.points[4] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((s.points[6] - c(0.0, -1.0)).norm() < 1e-15);
        let s = g.sample(4096).unwrap();
        assert!((s.total_weight() - std::f64::consts::TAU).abs() < 1e-9);
    }

    #[test]
    fn capacities() {
        assert_eq!(EDomain::disk(c(0.0, 0.0), 2.0).unwrap().log_capacity(), 2.0);
        assert_eq!(EDomain::segment(-1.0, 1.0).unwrap().log_capacity(), 0.5);
        assert_eq!(unit_disk().robin_constant(), 0.0);
        assert!(EDomain::disk(c(0.0, 0.0), 0.0).is_err());
        assert!(EDomain::segment(1.0, 1.0).is_err());
    }

    #[test]
    fn condenser_validation() {
        assert!(
            Condenser::concentric(std::f64::consts::E)
                .unwrap()
                .validated
        );
        assert!(Condenser::offset(3.0).unwrap().validated);
        let inside = Condenser::new(unit_disk(), CurveSpec::circle(c(0.0, 0.0), 0.5).unwrap());
        match inside {
            Err(Error::InvalidCondenser(msg)) => assert!(msg.contains("winding-number")),
            other => panic!("expected winding failure, got {other:?}"),
        }
        let crossing = Condenser::new(unit_disk(), CurveSpec::circle(c(1.5, 0.0), 1.0).unwrap());
        assert!(crossing.is_err());
        let seg = Condenser::new(
            EDomain::segment(-1.0, 1.0).unwrap(),
            CurveSpec::ellipse(c(0.0, 0.0), [2.0, 1.0], 0.0).unwrap(),
        );
        assert!(seg.is_ok());
    }

    #[test]
    fn polar_curve_jordan_check() {
        let ok: Vec<[f64; 2]> = (0..16)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / 16.0;
                [a, 2.0 + 0.3 * (3.0 * a).cos()]
            })
            .collect();
        let curve = CurveSpec::polar(c(0.0, 0.0), ok).unwrap();
        let cond = Condenser::new(unit_disk(), curve).unwrap();
        assert!(cond.validated);
        let s = cond.gamma.sample(64).unwrap();
        assert!((s.points[0] - c(2.3, 0.0)).norm() < 1e-12);
        // a figure-eight polygon crosses itself
        let eight: Vec<Complex<f64>> = (0..64)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / 64.0;
                c(t.sin(), (2.0 * t).sin())
            })
            .collect();
        assert!(polygon_self_intersects(&eight));
        assert_eq!(winding_number(&eight[..], c(5.0, 5.0)), 0);
    }

    #[test]
    fn works_in_single_precision() {
        let e = EDomain::<f32>::disk(Complex::new(0.0, 0.0), 1.0).unwrap();
        let v = e
            .green_kernel(Complex::new(2.0, 0.0), Complex::new(3.0, 0.0))
            .unwrap();
        assert!((v - 5.0f32.ln()).abs() < 1e-5);
        assert!(Condenser::<f32>::concentric(std::f32::consts::E).is_ok());
    }
}
