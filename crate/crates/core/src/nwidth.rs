//! Predicted exponential rates of Kolmogorov widths `d_{k_n}` for the
//! condenser, with `χ_n` estimates as computable lower bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{condenser_capacity, fekete_green, m_theta};
use crate::error::{Error, Result};
use crate::extremal::{chi_asymptotic_pair, chi_bruteforce, BRUTEFORCE_MAX_N};
use crate::geometry::Condenser;
use crate::measure::{box_grid, DiscreteMeasure, FieldGrid};
use crate::scalar::{Point, Real};

/// Smallest distance between a field sample and an atom of `λ_n`.
pub const FIELD_MIN_DISTANCE: f64 = 1e-3;
/// Grid for the `χ_n` estimates behind [`width_lower_bound`].
pub const CHI_GRID_N: usize = 1024;
const BRUTEFORCE_RESTARTS: usize = 4;

/// Knobs of [`width_rate_predict_with`].
///
/// The rate near `θ = 0` is a small difference of Fekete energies, whose
/// discretization bias shrinks like `1/n_points`; the defaults keep the
/// `θ → 0` slope within a few percent of `-1/cp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthOptions {
    pub n_points: usize,
    pub grid_n: usize,
    /// Side of the square field grid over the bounding box of `Γ`.
    pub field_n: usize,
    /// Degrees `n` at which `χ_n` is estimated with `k = round(θ n)`.
    pub chi_degrees: Vec<usize>,
}

impl Default for WidthOptions {
    fn default() -> Self {
        Self {
            n_points: 512,
            grid_n: 8192,
            field_n: 32,
            chi_degrees: vec![16, 32, 64],
        }
    }
}

/// Rate prediction at one `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct WidthReport<T> {
    pub theta: T,
    /// `m_θ`: the limit of `(1/n) log d_{k_n}` for `k_n/n → θ`.
    pub predicted_rate: T,
    /// `-1/cp(E, Γ)`: the limit of `(1/k) log d_k` at fixed `n`-independent degree.
    pub widom_rate: T,
    /// At `θ = 0` the `k`-normalized rate, which equals `widom_rate`.
    pub k_normalized_rate: Option<T>,
    /// `(n, k, (1/n) log χ_n)` from [`width_lower_bound`].
    pub chi_lower_bounds: Vec<(usize, usize, T)>,
    /// `U_D^{λ_n} - g(·,∞)`; the set where it exceeds `m_θ` is `G_θ`.
    pub field_grid: FieldGrid<T>,
}

/// [`width_rate_predict_with`] under default options.
pub fn width_rate_predict<T: Real>(c: &Condenser<T>, theta: T) -> Result<WidthReport<T>> {
    width_rate_predict_with(c, theta, &WidthOptions::default())
}

pub fn width_rate_predict_with<T: Real>(
    c: &Condenser<T>,
    theta: T,
    opts: &WidthOptions,
) -> Result<WidthReport<T>> {
    let (_, predicted_rate) = m_theta(c, theta, opts.n_points, opts.grid_n)?;
    let widom_rate = -condenser_capacity(c, opts.n_points, opts.grid_n)?.recip();

    let lambda = if theta < T::one() {
        fekete_green(c, theta, opts.n_points, opts.grid_n, 0)?
    } else {
        DiscreteMeasure::zero()
    };
    let (lo, hi) = c.gamma.bounding_box(opts.grid_n);
    let min_d = T::lit(FIELD_MIN_DISTANCE);
    let grid: Vec<Point<T>> = box_grid(lo, hi, opts.field_n, opts.field_n)
        .into_iter()
        .filter(|z| lambda.distance_to(*z) >= min_d)
        .collect();
    let field_grid = g_theta_field(c, &lambda, &grid)?;

    let mut chi_lower_bounds = Vec::with_capacity(opts.chi_degrees.len());
    for &n in &opts.chi_degrees {
        let k = (theta * T::lit(n as f64)).round().as_f64() as usize;
        let chi = width_lower_bound(c, n, k)?;
        chi_lower_bounds.push((n, k, chi.ln() / T::lit(n as f64)));
    }

    Ok(WidthReport {
        theta,
        predicted_rate,
        widom_rate,
        k_normalized_rate: (theta == T::zero()).then_some(widom_rate),
        chi_lower_bounds,
        field_grid,
    })
}

/// Estimate of `χ_n` at `(n, k)`, bounding `d_k(A_n^∞; C(E))` from below.
///
/// Exhaustive search for `n ≤ 6`, the outer infimum at the equilibrium `q_n`
/// otherwise. `k = 0` returns the exact value 1.
pub fn width_lower_bound<T: Real>(c: &Condenser<T>, n: usize, k: usize) -> Result<T> {
    if k == 0 && n > 0 {
        return Ok(T::one());
    }
    let est = if n <= BRUTEFORCE_MAX_N {
        chi_bruteforce(c, n, k, CHI_GRID_N, BRUTEFORCE_RESTARTS, 0)?
    } else {
        chi_asymptotic_pair(c, n, k, CHI_GRID_N)?
    };
    Ok(est.chi_lower)
}

/// `U_D^{λ_n} - g(·,∞)` on `grid`; zero on `E`.
pub fn g_theta_field<T: Real>(
    c: &Condenser<T>,
    lambda_n: &DiscreteMeasure<T>,
    grid: &[Point<T>],
) -> Result<FieldGrid<T>> {
    let min_d = T::lit(FIELD_MIN_DISTANCE);
    if let Some(d) = grid
        .iter()
        .map(|z| lambda_n.distance_to(*z))
        .find(|d| *d < min_d)
    {
        return Err(Error::GridTooClose {
            distance: d.as_f64(),
            minimum: FIELD_MIN_DISTANCE,
        });
    }
    let values = grid
        .par_iter()
        .map(|z| lambda_n.green_field(&c.e_domain, *z))
        .collect::<Result<Vec<T>>>()?;
    FieldGrid::new(grid.to_vec(), values, "U_D^lambda_n - g(z, inf)")
}
