//! Discrete equilibrium problems of the condenser: weighted Fekete points on
//! `Γ`, weighted Leja points on `∂E`, the constants `m_θ` and `m̂_θ` by an
//! energy route and a field route, the supports `S_θ`, condenser capacities
//! and `θ`-sweeps.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Condenser;
use crate::measure::{energy_j, m_functional_on, DiscreteMeasure, ScanGrid};
use crate::scalar::{argmax, compensated_sum, ln_abs, CompensatedSum, Point, Real};

/// Minimum number of grid samples per discrete point.
pub const GRID_PER_POINT: usize = 16;
/// Cap on exchange passes per optimization.
pub const DEFAULT_MAX_PASSES: usize = 64;

/// Knobs shared by the equilibrium solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    /// Fekete points on `Γ` and Leja points on `∂E`.
    pub n_points: usize,
    /// Samples of `Γ` and of `∂E`.
    pub grid_n: usize,
    /// Shuffles the exchange-pass visiting order; nothing else depends on it.
    pub seed: u64,
    pub max_passes: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            n_points: 256,
            grid_n: 4096,
            seed: 0,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

impl EquilibriumOptions {
    pub fn new(n_points: usize, grid_n: usize) -> Self {
        Self {
            n_points,
            grid_n,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Maximal run of `Γ` grid slots; `last_slot < first_slot` when it wraps past parameter 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportArc<T> {
    pub first_slot: usize,
    pub last_slot: usize,
    pub start_param: T,
    pub end_param: T,
    pub slots: usize,
}

/// Output of [`solve_equilibrium`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct EquilibriumResult<T> {
    pub theta: T,
    /// Fekete measure on `Γ`, mass `1-θ`.
    pub lambda_n: DiscreteMeasure<T>,
    /// Leja measure on `∂E`, mass `θ`.
    pub mu_n: DiscreteMeasure<T>,
    pub m_theta_energy: T,
    pub m_theta_field: T,
    pub m_hat_theta: T,
    pub support_arcs: Vec<SupportArc<T>>,
    /// Named cross-checks; `route_gap` bounds `|m_theta_energy - m_theta_field|`.
    pub residuals: BTreeMap<String, T>,
}

/// Per-`θ` constants of a sweep plus the integral-formula cross-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SweepReport<T> {
    pub thetas: Vec<T>,
    pub m_theta_energy: Vec<T>,
    /// Field route; the sequence the monotonicity and integral checks use.
    pub m_theta: Vec<T>,
    pub m_hat_theta: Vec<T>,
    /// `cp(S_τ, ∂E)`; zero where the detected support is degenerate.
    pub cap_s_tau: Vec<T>,
    pub support_degenerate: Vec<bool>,
    /// `cp(E, Γ)`.
    pub condenser_capacity: T,
    /// `|m_θ - m_last - ∫_θ^last dτ/cp(S_τ)|` per row.
    pub integral_residuals: Vec<T>,
    pub integral_check_residual: T,
    pub m_theta_decreasing: bool,
    pub m_hat_increasing: bool,
    /// `|slope·cp + 1|` from the first two rows when the sweep starts at `θ = 0`.
    pub slope_relative_error: Option<T>,
}

/// One CSV row of a [`SweepReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub m_energy: f64,
    pub m_field: f64,
    pub m_hat: f64,
    #[serde(rename = "cap_S_tau")]
    pub cap_s_tau: f64,
    pub residuals: f64,
}

impl<T: Real> SweepReport<T> {
    pub fn rows(&self) -> Vec<SweepRow> {
        (0..self.thetas.len())
            .map(|i| SweepRow {
                theta: self.thetas[i].as_f64(),
                m_energy: self.m_theta_energy[i].as_f64(),
                m_field: self.m_theta[i].as_f64(),
                m_hat: self.m_hat_theta[i].as_f64(),
                cap_s_tau: self.cap_s_tau[i].as_f64(),
                residuals: self.integral_residuals[i].as_f64(),
            })
            .collect()
    }
}

/// `Γ` samples with their images under the exterior map and `g(·,∞)`.
#[derive(Clone, Debug)]
pub struct GammaGrid<T> {
    pub params: Vec<T>,
    pub points: Vec<Point<T>>,
    pub phi: Vec<Point<T>>,
    pub g_inf: Vec<T>,
}

impl<T: Real> GammaGrid<T> {
    pub fn new(c: &Condenser<T>, n: usize) -> Result<Self> {
        let samples = c.gamma_samples(n)?;
        let phi = samples
            .points
            .iter()
            .map(|z| c.e_domain.to_exterior(*z))
            .collect();
        let g_inf = samples
            .points
            .iter()
            .map(|z| c.green_pole_infinity(*z))
            .collect();
        Ok(Self {
            params: samples.params,
            points: samples.points,
            phi,
            g_inf,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `U_D^λ - g(·,∞)` on every slot; `None` where an atom of `λ` sits.
    pub fn field(&self, c: &Condenser<T>, lambda: &DiscreteMeasure<T>) -> Vec<Option<T>> {
        let atoms: Vec<(Point<T>, Point<T>, T)> = lambda
            .iter()
            .map(|(x, w)| (x, c.e_domain.to_exterior(x), w))
            .collect();
        let tiny = T::lit(1e-12);
        (0..self.len())
            .into_par_iter()
            .map(|s| {
                let z = self.points[s];
                let scale = T::one().max(z.norm());
                let mut acc = CompensatedSum::new();
                for &(x, px, w) in &atoms {
                    if (z - x).norm() <= tiny * scale {
                        return None;
                    }
                    if px.norm() > T::one() {
                        acc.add(w * green_mapped(self.phi[s], px));
                    }
                }
                Some(acc.value() - self.g_inf[s])
            })
            .collect()
    }
}

/// Green kernel between two points already mapped to the exterior of the unit disk.
#[inline]
fn green_mapped<T: Real>(a: Point<T>, b: Point<T>) -> T {
    let one = Complex::new(T::one(), T::zero());
    let num = (one - a * b.conj()).norm_sqr();
    let den = (a - b).norm_sqr().max(T::log_clamp());
    (T::lit(0.5) * (num / den).ln()).max(T::zero())
}

fn check_grid(grid_n: usize, m: usize) -> Result<()> {
    let required = GRID_PER_POINT * m;
    if grid_n < required {
        return Err(Error::GridTooCoarse { grid_n, required });
    }
    Ok(())
}

fn check_theta<T: Real>(theta: T, lo_open: bool, hi_open: bool) -> Result<()> {
    let ok = theta.is_finite()
        && if lo_open {
            theta > T::zero()
        } else {
            theta >= T::zero()
        }
        && if hi_open {
            theta < T::one()
        } else {
            theta <= T::one()
        };
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "theta out of range: {theta}"
        )));
    }
    Ok(())
}

struct Exchange<T> {
    /// Chosen candidate indices, ascending.
    chosen: Vec<usize>,
    /// `P[s] = Σ_j g(s, z_j)` over chosen `z_j ≠ s`.
    potential: Vec<T>,
    passes: usize,
    converged: bool,
}

/// Maximizes `-Σ_{i<j} g(z_i,z_j) + k·Σ_i reward(z_i)` over `m`-subsets of the
/// candidates: greedy insertion (step `j` weighs the reward by `greedy(j)`)
/// followed by single-point exchange passes.
fn exchange_optimize<T: Real>(
    phi: &[Point<T>],
    reward: &[T],
    m: usize,
    greedy: impl Fn(usize) -> T,
    k: T,
    seed: u64,
    max_passes: usize,
) -> Exchange<T> {
    let n = phi.len();
    let mut potential = vec![T::zero(); n];
    let mut occupied = vec![false; n];
    let mut slot_of = Vec::with_capacity(m);
    let mut row = vec![T::zero(); n];

    let fill_row = |row: &mut [T], a: usize| {
        let pa = phi[a];
        row.par_iter_mut().enumerate().for_each(|(s, r)| {
            *r = if s == a {
                T::zero()
            } else {
                green_mapped(phi[s], pa)
            };
        });
    };

    for j in 0..m {
        let pick = if j == 0 {
            argmax(reward).unwrap_or(0)
        } else {
            let cj = greedy(j);
            let scores: Vec<T> = (0..n)
                .map(|s| {
                    if occupied[s] {
                        T::neg_infinity()
                    } else {
                        -potential[s] + cj * reward[s]
                    }
                })
                .collect();
            argmax(&scores).expect("free candidate exists")
        };
        occupied[pick] = true;
        slot_of.push(pick);
        fill_row(&mut row, pick);
        for (p, r) in potential.iter_mut().zip(&row) {
            *p = *p + *r;
        }
    }

    let scale = T::one() + k.abs() * reward.iter().copied().fold(T::zero(), T::max);
    let move_tol = T::lit(1e3) * T::epsilon() * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut passes = 0;
    let mut converged = m == n;
    let mut new_row = vec![T::zero(); n];
    while !converged && passes < max_passes {
        passes += 1;
        order.shuffle(&mut rng);
        let mut moved = false;
        for &i in &order {
            let a = slot_of[i];
            fill_row(&mut row, a);
            let current = -(potential[a]) + k * reward[a];
            let mut best = (a, current);
            for s in 0..n {
                if occupied[s] {
                    continue;
                }
                let v = -(potential[s] - row[s]) + k * reward[s];
                if v > best.1 {
                    best = (s, v);
                }
            }
            if best.0 != a && best.1 > current + move_tol {
                let b = best.0;
                fill_row(&mut new_row, b);
                for s in 0..n {
                    potential[s] = potential[s] - row[s] + new_row[s];
                }
                occupied[a] = false;
                occupied[b] = true;
                slot_of[i] = b;
                moved = true;
            }
        }
        converged = !moved;
    }

    // fresh potential, free of the incremental drift
    let mut chosen = slot_of;
    chosen.sort_unstable();
    let fresh: Vec<T> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut acc = CompensatedSum::new();
            for &a in &chosen {
                if a != s {
                    acc.add(green_mapped(phi[s], phi[a]));
                }
            }
            acc.value()
        })
        .collect();
    Exchange {
        chosen,
        potential: fresh,
        passes,
        converged,
    }
}

struct FeketeRun<T> {
    measure: DiscreteMeasure<T>,
    slots: Vec<usize>,
    potential: Vec<T>,
    passes: usize,
    converged: bool,
}

fn fekete_on_grid<T: Real>(
    grid: &GammaGrid<T>,
    theta: T,
    m: usize,
    seed: u64,
    max_passes: usize,
) -> Result<FeketeRun<T>> {
    let one_minus = T::one() - theta;
    let k = T::lit((m - 1) as f64) / one_minus;
    let ex = exchange_optimize(
        &grid.phi,
        &grid.g_inf,
        m,
        |j| T::lit(j as f64) / one_minus,
        k,
        seed,
        max_passes,
    );
    let w = one_minus / T::lit(m as f64);
    let points = ex.chosen.iter().map(|&s| grid.points[s]).collect();
    let measure = DiscreteMeasure::new(points, vec![w; m])?;
    Ok(FeketeRun {
        measure,
        slots: ex.chosen,
        potential: ex.potential,
        passes: ex.passes,
        converged: ex.converged,
    })
}

/// Weighted Fekete (Tsuji-type) points: `m` points of the `grid_n`-sample grid
/// of `Γ`, each of weight `(1-θ)/m`, locally maximizing
/// `-Σ_{i<j} g(z_i,z_j) + ((m-1)/(1-θ))·Σ_i g(z_i,∞)`.
pub fn fekete_green<T: Real>(
    c: &Condenser<T>,
    theta: T,
    m: usize,
    grid_n: usize,
    seed: u64,
) -> Result<DiscreteMeasure<T>> {
    check_theta(theta, false, true)?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 Fekete points, got {m}"
        )));
    }
    check_grid(grid_n, m)?;
    let grid = GammaGrid::new(c, grid_n)?;
    Ok(fekete_on_grid(&grid, theta, m, seed, DEFAULT_MAX_PASSES)?.measure)
}

/// The discrete objective maximized by [`fekete_green`].
pub fn fekete_objective<T: Real>(
    c: &Condenser<T>,
    lambda: &DiscreteMeasure<T>,
    theta: T,
) -> Result<T> {
    let pts = lambda.points();
    let m = pts.len();
    let mut pair = CompensatedSum::new();
    for i in 0..m {
        for j in i + 1..m {
            pair.add(c.green_kernel(pts[i], pts[j])?);
        }
    }
    let field = compensated_sum(pts.iter().map(|z| c.green_pole_infinity(*z)));
    Ok(-pair.value() + T::lit(m.saturating_sub(1) as f64) / (T::one() - theta) * field)
}

/// Weighted Leja points on the `grid_n`-sample grid of `∂E`, each of weight `θ/m`.
///
/// Point `j+1` maximizes `Σ_{i≤j} log|z - z_i| - (j/θ)·U^λ(z)`; the first
/// maximizes `-U^λ`. Ties go to the smallest grid parameter.
pub fn leja_weighted<T: Real>(
    c: &Condenser<T>,
    lambda_n: &DiscreteMeasure<T>,
    theta: T,
    m: usize,
    grid_n: usize,
) -> Result<DiscreteMeasure<T>> {
    check_theta(theta, true, false)?;
    if m < 1 {
        return Err(Error::InvalidParameter(
            "need at least one Leja point".into(),
        ));
    }
    check_grid(grid_n, m)?;
    let grid = c.e_domain.boundary_samples(grid_n);
    let n = grid.len();
    let u: Vec<T> = grid
        .par_iter()
        .map(|z| lambda_n.log_potential(*z))
        .collect();
    let mut logsum = vec![T::zero(); n];
    let mut occupied = vec![false; n];
    let mut chosen = Vec::with_capacity(m);
    for j in 0..m {
        let coeff = if j == 0 {
            T::one()
        } else {
            T::lit(j as f64) / theta
        };
        let scores: Vec<T> = (0..n)
            .map(|s| {
                if occupied[s] {
                    T::neg_infinity()
                } else {
                    logsum[s] - coeff * u[s]
                }
            })
            .collect();
        let pick = first_near_max(&scores);
        occupied[pick] = true;
        chosen.push(grid[pick]);
        let zp = grid[pick];
        logsum
            .par_iter_mut()
            .zip(grid.par_iter())
            .for_each(|(l, z)| {
                *l = *l + ln_abs(*z - zp);
            });
    }
    DiscreteMeasure::uniform(chosen, theta)
}

/// Lowest index whose score is within rounding of the maximum, so that
/// symmetric ties go to the smallest parameter rather than to rounding noise.
fn first_near_max<T: Real>(scores: &[T]) -> usize {
    let best = argmax(scores).expect("free slot exists");
    let tol = T::lit(64.0) * T::epsilon() * (T::one() + scores[best].abs());
    scores
        .iter()
        .position(|v| *v >= scores[best] - tol)
        .unwrap_or(best)
}

/// `m̂_θ = -log cp(E) - Σ_i w_i g(x_i,∞)`.
pub fn m_hat_theta<T: Real>(c: &Condenser<T>, lambda_n: &DiscreteMeasure<T>) -> T {
    c.e_domain.robin_constant() - lambda_n.integral_pole_green(&c.e_domain)
}

/// `-max_Γ g(·,∞)` on the grid: the value of `m_θ` at `θ = 1`.
pub fn m_one<T: Real>(grid: &GammaGrid<T>) -> T {
    -grid.g_inf.iter().copied().fold(T::neg_infinity(), T::max)
}

struct ThetaRun<T> {
    lambda: DiscreteMeasure<T>,
    energy: T,
    field: T,
    /// Computed values before the endpoint closed forms are substituted.
    raw_energy: T,
    raw_field: T,
    field_values: Vec<Option<T>>,
    passes: usize,
    converged: bool,
}

fn run_theta<T: Real>(
    c: &Condenser<T>,
    grid: &GammaGrid<T>,
    theta: T,
    m: usize,
    seed: u64,
    max_passes: usize,
) -> Result<ThetaRun<T>> {
    if theta >= T::one() {
        let m1 = m_one(grid);
        let field_values = grid.g_inf.iter().map(|g| Some(-*g)).collect();
        return Ok(ThetaRun {
            lambda: DiscreteMeasure::zero(),
            energy: m1,
            field: m1,
            raw_energy: m1,
            raw_field: m1,
            field_values,
            passes: 0,
            converged: true,
        });
    }
    let run = fekete_on_grid(grid, theta, m, seed, max_passes)?;
    let w = (T::one() - theta) / T::lit(m as f64);
    let mut is_atom = vec![false; grid.len()];
    for &s in &run.slots {
        is_atom[s] = true;
    }
    let field_values: Vec<Option<T>> = (0..grid.len())
        .map(|s| (!is_atom[s]).then(|| w * run.potential[s] - grid.g_inf[s]))
        .collect();
    let raw_field = field_values
        .iter()
        .flatten()
        .copied()
        .fold(T::infinity(), T::min);
    let j = energy_j(&run.measure, &c.e_domain, theta)?;
    let raw_energy = (j + run.measure.integral_pole_green(&c.e_domain)) / (T::one() - theta);
    let (energy, field) = if theta == T::zero() {
        (T::zero(), T::zero())
    } else {
        (raw_energy, raw_field)
    };
    Ok(ThetaRun {
        lambda: run.measure,
        energy,
        field,
        raw_energy,
        raw_field,
        field_values,
        passes: run.passes,
        converged: run.converged,
    })
}

/// `(m_energy, m_field)` from `n_points` Fekete points on a `grid_n` grid.
///
/// `θ = 1` returns `-max_Γ g(·,∞)` for both routes and `θ = 0` returns the
/// exact value `0`.
pub fn m_theta<T: Real>(
    c: &Condenser<T>,
    theta: T,
    n_points: usize,
    grid_n: usize,
) -> Result<(T, T)> {
    check_theta(theta, false, false)?;
    if theta < T::one() {
        check_grid(grid_n, n_points)?;
    }
    let grid = GammaGrid::new(c, grid_n)?;
    let run = run_theta(c, &grid, theta, n_points, 0, DEFAULT_MAX_PASSES)?;
    Ok((run.energy, run.field))
}

/// Default support threshold `1e-2·|m| + 1e-4`.
pub fn default_support_tol<T: Real>(m_field: T) -> T {
    T::lit(1e-2) * m_field.abs() + T::lit(1e-4)
}

/// Support arcs from per-slot field values (`None` marks an atom).
///
/// Atoms and slots with field `≤ m_field + tol` qualify; holes between
/// qualifying slots shorter than twice the mean atom spacing are closed,
/// since the field spikes next to every atom.
pub fn support_from_field<T: Real>(
    params: &[T],
    field: &[Option<T>],
    m_field: T,
    tol: T,
) -> Vec<SupportArc<T>> {
    let n = field.len();
    if n == 0 {
        return Vec::new();
    }
    let atoms = field.iter().filter(|v| v.is_none()).count();
    let mut q: Vec<bool> = field
        .iter()
        .map(|v| v.map_or(true, |f| f <= m_field + tol))
        .collect();
    if atoms > 0 && q.iter().any(|b| *b) {
        let max_hole = (2 * n).div_ceil(atoms);
        close_holes(&mut q, max_hole);
    }
    arcs_from_mask(params, &q)
}

fn close_holes(q: &mut [bool], max_hole: usize) {
    let n = q.len();
    let Some(start) = q.iter().position(|b| *b) else {
        return;
    };
    // walk once around the circle from a qualifying slot
    let mut i = 0;
    while i < n {
        let s = (start + i) % n;
        if q[s] {
            i += 1;
            continue;
        }
        let mut len = 0;
        while len < n && !q[(s + len) % n] {
            len += 1;
        }
        if len <= max_hole {
            for t in 0..len {
                q[(s + t) % n] = true;
            }
        }
        i += len;
    }
}

fn arcs_from_mask<T: Real>(params: &[T], q: &[bool]) -> Vec<SupportArc<T>> {
    let n = q.len();
    let make = |first: usize, len: usize| {
        let last = (first + len - 1) % n;
        SupportArc {
            first_slot: first,
            last_slot: last,
            start_param: params[first],
            end_param: params[last],
            slots: len,
        }
    };
    if q.iter().all(|b| *b) {
        return vec![make(0, n)];
    }
    let Some(gap) = q.iter().position(|b| !*b) else {
        return Vec::new();
    };
    let mut arcs = Vec::new();
    let mut i = 0;
    while i < n {
        let s = (gap + i) % n;
        if !q[s] {
            i += 1;
            continue;
        }
        let mut len = 0;
        while i + len < n && q[(s + len) % n] {
            len += 1;
        }
        arcs.push(make(s, len));
        i += len;
    }
    arcs.sort_by_key(|a| a.first_slot);
    arcs
}

/// Slot indices covered by a list of arcs, in arc order.
pub fn arc_slots<T>(arcs: &[SupportArc<T>], grid_n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for a in arcs {
        for t in 0..a.slots {
            out.push((a.first_slot + t) % grid_n);
        }
    }
    out
}

/// Maximal arcs of the `grid_n`-sample grid of `Γ` where
/// `U_D^{λ_n} - g(·,∞) ≤ m_field + tol`; the whole curve when every sample qualifies.
pub fn support_s_theta<T: Real>(
    c: &Condenser<T>,
    lambda_n: &DiscreteMeasure<T>,
    m_field: T,
    tol: T,
    grid_n: usize,
) -> Result<Vec<SupportArc<T>>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "support tolerance must be positive, got {tol}"
        )));
    }
    let grid = GammaGrid::new(c, grid_n)?;
    let field = grid.field(c, lambda_n);
    Ok(support_from_field(&grid.params, &field, m_field, tol))
}

/// Capacity `1/I` of the minimal-Green-energy configuration of `m` points,
/// restricted to the listed slots (in curve order) of `grid`.
///
/// The off-diagonal energy is completed by a per-point self-energy estimate
/// `w²(log(2π/h_i) + lim_{t→x_i}[g(x_i,t) + log|x_i - t|])`, `h_i` the local
/// spacing; this is exact for equispaced points on a circle.
fn capacity_on_slots<T: Real>(
    c: &Condenser<T>,
    grid: &GammaGrid<T>,
    slots: &[usize],
    m: usize,
    closed: bool,
) -> Result<T> {
    if slots.len() < 2 || m < 2 {
        return Ok(T::zero());
    }
    let m = m.min(slots.len());
    let phi: Vec<Point<T>> = slots.iter().map(|&s| grid.phi[s]).collect();
    let reward = vec![T::zero(); slots.len()];
    let ex = exchange_optimize(
        &phi,
        &reward,
        m,
        |_| T::zero(),
        T::zero(),
        0,
        DEFAULT_MAX_PASSES,
    );
    let w = T::one() / T::lit(m as f64);
    let pts: Vec<Point<T>> = ex.chosen.iter().map(|&i| grid.points[slots[i]]).collect();
    let mut energy = CompensatedSum::new();
    for &i in &ex.chosen {
        energy.add(w * w * ex.potential[i]);
    }
    let two = T::lit(2.0);
    for (idx, &x) in pts.iter().enumerate() {
        let prev = if idx > 0 {
            Some(pts[idx - 1])
        } else if closed {
            Some(pts[m - 1])
        } else {
            None
        };
        let next = if idx + 1 < m {
            Some(pts[idx + 1])
        } else if closed {
            Some(pts[0])
        } else {
            None
        };
        let h = match (prev, next) {
            (Some(p), Some(q)) => ((x - p).norm() + (q - x).norm()) / two,
            (Some(p), None) => (x - p).norm(),
            (None, Some(q)) => (q - x).norm(),
            (None, None) => return Ok(T::zero()),
        };
        let self_energy = (T::TAU() / h).ln() + c.e_domain.green_diagonal_regular(x);
        energy.add(w * w * self_energy);
    }
    let e = energy.value();
    if !(e > T::zero()) {
        return Ok(T::zero());
    }
    Ok(e.recip())
}

/// Condenser (Green) capacity `cp(E, Γ)` from `m` minimal-energy points on a `grid_n` grid.
pub fn condenser_capacity<T: Real>(c: &Condenser<T>, m: usize, grid_n: usize) -> Result<T> {
    if m < 8 {
        return Err(Error::InvalidParameter(format!(
            "capacity needs m >= 8, got {m}"
        )));
    }
    check_grid(grid_n, m)?;
    let grid = GammaGrid::new(c, grid_n)?;
    let slots: Vec<usize> = (0..grid.len()).collect();
    capacity_on_slots(c, &grid, &slots, m, true)
}

/// `cp(S, ∂E)` for a union of `Γ` arcs; zero when the arcs hold fewer than two slots.
///
/// Uses at most `m` points and at least [`GRID_PER_POINT`] slots per point.
pub fn arc_capacity<T: Real>(
    c: &Condenser<T>,
    arcs: &[SupportArc<T>],
    m: usize,
    grid_n: usize,
) -> Result<T> {
    let grid = GammaGrid::new(c, grid_n)?;
    arc_capacity_on(c, &grid, arcs, m)
}

fn arc_capacity_on<T: Real>(
    c: &Condenser<T>,
    grid: &GammaGrid<T>,
    arcs: &[SupportArc<T>],
    m: usize,
) -> Result<T> {
    let slots = arc_slots(arcs, grid.len());
    let closed = slots.len() == grid.len();
    let m_eff = m.min(slots.len() / GRID_PER_POINT).max(2);
    capacity_on_slots(c, grid, &slots, m_eff, closed)
}

/// Full two-stage pipeline at one `θ`: Fekete `λ_n` on `Γ`, Leja `μ_n` on `∂E`
/// in the field of `λ_n`, both constants, supports and cross-check residuals.
pub fn solve_equilibrium<T: Real>(
    c: &Condenser<T>,
    theta: T,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumResult<T>> {
    check_theta(theta, false, false)?;
    check_grid(opts.grid_n, opts.n_points)?;
    let grid = GammaGrid::new(c, opts.grid_n)?;
    let run = run_theta(c, &grid, theta, opts.n_points, opts.seed, opts.max_passes)?;
    let mu_n = if theta > T::zero() {
        leja_weighted(c, &run.lambda, theta, opts.n_points, opts.grid_n)?
    } else {
        DiscreteMeasure::zero()
    };
    let m_hat = m_hat_theta(c, &run.lambda);
    let tol = default_support_tol(run.field);
    let support_arcs = support_from_field(&grid.params, &run.field_values, run.field, tol);

    let mut residuals = BTreeMap::new();
    residuals.insert("route_gap".to_string(), (run.energy - run.field).abs());
    residuals.insert("raw_m_energy".to_string(), run.raw_energy);
    residuals.insert("raw_m_field".to_string(), run.raw_field);
    residuals.insert("exchange_passes".to_string(), T::lit(run.passes as f64));
    residuals.insert(
        "exchange_converged".to_string(),
        if run.converged { T::one() } else { T::zero() },
    );
    residuals.insert(
        "field_flatness".to_string(),
        field_flatness(&run.field_values, &support_arcs, grid.len()),
    );
    residuals.insert(
        "mass_lambda".to_string(),
        (run.lambda.total_mass() - (T::one() - theta)).abs(),
    );
    residuals.insert("mass_mu".to_string(), (mu_n.total_mass() - theta).abs());
    Ok(EquilibriumResult {
        theta,
        lambda_n: run.lambda,
        mu_n,
        m_theta_energy: run.energy,
        m_theta_field: run.field,
        m_hat_theta: m_hat,
        support_arcs,
        residuals,
    })
}

/// Standard deviation of the field over non-atom slots of the support.
fn field_flatness<T: Real>(field: &[Option<T>], arcs: &[SupportArc<T>], n: usize) -> T {
    let vals: Vec<T> = arc_slots(arcs, n)
        .iter()
        .filter_map(|&s| field[s])
        .collect();
    if vals.len() < 2 {
        return T::zero();
    }
    let len = T::lit(vals.len() as f64);
    let mean = compensated_sum(vals.iter().copied()) / len;
    let var = compensated_sum(vals.iter().map(|v| (*v - mean) * (*v - mean))) / len;
    var.sqrt()
}

/// `m_θ`, `m̂_θ`, `S_θ` and `cp(S_θ, ∂E)` along an increasing `θ` grid, with the
/// integral-formula residual `|m_θ - m_last - ∫ dτ/cp(S_τ)|` (trapezoid rule).
pub fn theta_sweep<T: Real>(
    c: &Condenser<T>,
    thetas: &[T],
    n_points: usize,
    grid_n: usize,
) -> Result<SweepReport<T>> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("empty theta grid".into()));
    }
    for t in thetas {
        check_theta(*t, false, false)?;
    }
    if thetas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "thetas must be strictly increasing".into(),
        ));
    }
    check_grid(grid_n, n_points)?;
    let grid = GammaGrid::new(c, grid_n)?;
    let all: Vec<usize> = (0..grid.len()).collect();
    let cp_full = capacity_on_slots(c, &grid, &all, n_points, true)?;
    let mut cache: HashMap<Vec<usize>, T> = HashMap::new();
    cache.insert(all, cp_full);

    let mut report = SweepReport {
        thetas: thetas.to_vec(),
        m_theta_energy: Vec::new(),
        m_theta: Vec::new(),
        m_hat_theta: Vec::new(),
        cap_s_tau: Vec::new(),
        support_degenerate: Vec::new(),
        condenser_capacity: cp_full,
        integral_residuals: Vec::new(),
        integral_check_residual: T::zero(),
        m_theta_decreasing: true,
        m_hat_increasing: true,
        slope_relative_error: None,
    };
    for &theta in thetas {
        let run = run_theta(c, &grid, theta, n_points, 0, DEFAULT_MAX_PASSES)?;
        let tol = default_support_tol(run.field);
        let arcs = support_from_field(&grid.params, &run.field_values, run.field, tol);
        let key = arc_slots(&arcs, grid.len());
        let cp = match cache.get(&key) {
            Some(v) => *v,
            None => {
                let v = arc_capacity_on(c, &grid, &arcs, n_points)?;
                cache.insert(key, v);
                v
            }
        };
        report.m_theta_energy.push(run.energy);
        report.m_theta.push(run.field);
        report.m_hat_theta.push(m_hat_theta(c, &run.lambda));
        report.support_degenerate.push(!(cp > T::zero()));
        report.cap_s_tau.push(cp);
    }

    // 1/cp; degenerate rows borrow the nearest finite neighbour
    let n = thetas.len();
    let inv: Vec<Option<T>> = report
        .cap_s_tau
        .iter()
        .map(|cp| (*cp > T::zero()).then(|| cp.recip()))
        .collect();
    let integrand: Vec<T> = (0..n)
        .map(|i| {
            (0..n)
                .filter_map(|d| {
                    let lo = i.checked_sub(d).and_then(|j| inv[j]);
                    let hi = inv.get(i + d).copied().flatten();
                    lo.or(hi)
                })
                .next()
                .unwrap_or(T::zero())
        })
        .collect();
    let last = report.m_theta[n - 1];
    let mut tail = T::zero();
    let mut residuals = vec![T::zero(); n];
    for i in (0..n).rev() {
        if i + 1 < n {
            tail = tail
                + (thetas[i + 1] - thetas[i]) * (integrand[i] + integrand[i + 1]) / T::lit(2.0);
        }
        residuals[i] = (report.m_theta[i] - last - tail).abs();
    }
    report.integral_check_residual = residuals.iter().copied().fold(T::zero(), T::max);
    report.integral_residuals = residuals;

    let slack = T::lit(1e-6);
    report.m_theta_decreasing = report.m_theta.windows(2).all(|w| w[1] < w[0] + slack);
    report.m_hat_increasing = report.m_hat_theta.windows(2).all(|w| w[1] > w[0] - slack);
    if n >= 2 && thetas[0] == T::zero() && cp_full > T::zero() {
        let slope = (report.m_theta[1] - report.m_theta[0]) / (thetas[1] - thetas[0]);
        report.slope_relative_error = Some((slope * cp_full + T::one()).abs());
    }
    Ok(report)
}

/// `max |[U_D^{λ_n} - g(·,∞)] - [U^{λ_n+μ_n} - m̂_θ]|` over test points at
/// distance `≥ 1e-3` from both supports.
pub fn basic_equation_residual<T: Real>(
    c: &Condenser<T>,
    result: &EquilibriumResult<T>,
    test_grid: &[Point<T>],
) -> Result<T> {
    let sigma = result.lambda_n.plus(&result.mu_n);
    let min_dist = T::lit(1e-3);
    let vals: Vec<Option<T>> = test_grid
        .par_iter()
        .map(|z| {
            if sigma.distance_to(*z) < min_dist {
                return Ok(None);
            }
            let lhs = result.lambda_n.green_field(&c.e_domain, *z)?;
            let rhs = sigma.log_potential(*z) - result.m_hat_theta;
            Ok(Some((lhs - rhs).abs()))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().flatten().fold(T::zero(), T::max))
}

/// Outcome of [`minimax_sandwich`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport<T> {
    pub m_field: T,
    /// `min M(μ' + λ_n)` over perturbed `μ'`.
    pub lower_min: T,
    /// `max M(μ_n + λ')` over perturbed `λ'`.
    pub upper_max: T,
    pub trials: usize,
}

impl<T: Real> SandwichReport<T> {
    pub fn holds(&self, tol: T) -> bool {
        self.lower_min >= self.m_field - tol && self.upper_max <= self.m_field + tol
    }
}

fn perturb<T: Real>(
    m: &DiscreteMeasure<T>,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
) -> Result<DiscreteMeasure<T>> {
    use rand::Rng;
    let raw: Vec<T> = m
        .weights()
        .iter()
        .map(|w| *w * T::lit(1.0 + amplitude * rng.gen_range(-1.0..1.0)))
        .collect();
    let total = compensated_sum(raw.iter().copied());
    let scale = m.total_mass() / total;
    DiscreteMeasure::new(
        m.points().to_vec(),
        raw.into_iter().map(|w| w * scale).collect(),
    )
}

/// Random weight perturbations `μ'` of `μ_n` and `λ'` of `λ_n` (same masses)
/// probing `M(μ' + λ_n) ≥ m_θ ≥ M(μ_n + λ')`.
pub fn minimax_sandwich<T: Real>(
    result: &EquilibriumResult<T>,
    trials: usize,
    seed: u64,
    scan: &ScanGrid<T>,
) -> Result<SandwichReport<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower_min = T::infinity();
    let mut upper_max = T::neg_infinity();
    for _ in 0..trials {
        let mu = perturb(&result.mu_n, &mut rng, 0.3)?;
        lower_min = lower_min.min(m_functional_on(&mu.plus(&result.lambda_n), scan)?);
        let lambda = perturb(&result.lambda_n, &mut rng, 0.3)?;
        upper_max = upper_max.max(m_functional_on(&result.mu_n.plus(&lambda), scan)?);
    }
    Ok(SandwichReport {
        m_field: result.m_theta_field,
        lower_min,
        upper_max,
        trials,
    })
}
