//! Estimates of `χ_n = inf_p sup_q ‖pq‖_E / ‖pq‖_Γ` over monic `p` of degree
//! `≤ k` and `q` of degree `≤ n-k`, plus zero-distribution diagnostics.
//!
//! Zeros move on fixed candidate grids. For every candidate the values
//! `log|s - z|` on the scan points of `E` and `Γ` are tabulated once, so a
//! single-zero move costs one pass over the scan points.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balayage::{balayage_interior_to_boundary, DEFAULT_BALAYAGE_CELLS};
use crate::equilibrium::{fekete_green, leja_weighted, GammaGrid, GRID_PER_POINT};
use crate::error::{Error, Result};
use crate::geometry::Condenser;
use crate::measure::{DiscreteMeasure, ScanGrid};
use crate::scalar::{argmax, ln_abs, Point, Real};

/// Cap on ratio evaluations per estimate.
pub const RATIO_BUDGET: usize = 1_000_000;
/// Largest `n` accepted by [`chi_bruteforce`].
pub const BRUTEFORCE_MAX_N: usize = 6;
/// Samples of `∂E` and of `Γ` offered as zeros by [`chi_bruteforce`].
const BRUTEFORCE_CANDIDATES: usize = 24;
/// Minimum distance between a diagnostic test point and either support.
pub const DIAG_MIN_DISTANCE: f64 = 0.05;

/// Zeros of a monic pair `(p, q)`; fewer zeros than allowed means lower degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ZeroConfig<T> {
    pub p_zeros: Vec<Point<T>>,
    pub q_zeros: Vec<Point<T>>,
    pub n: usize,
    pub k: usize,
}

impl<T: Real> ZeroConfig<T> {
    pub fn new(p_zeros: Vec<Point<T>>, q_zeros: Vec<Point<T>>, n: usize, k: usize) -> Result<Self> {
        let zc = Self {
            p_zeros,
            q_zeros,
            n,
            k,
        };
        zc.validate()?;
        Ok(zc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k > self.n {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= k <= n and n >= 1, got n = {}, k = {}",
                self.n, self.k
            )));
        }
        if self.p_zeros.len() > self.k || self.q_zeros.len() > self.n - self.k {
            return Err(Error::InvalidParameter(format!(
                "{} p-zeros and {} q-zeros exceed degrees {} and {}",
                self.p_zeros.len(),
                self.q_zeros.len(),
                self.k,
                self.n - self.k
            )));
        }
        if self
            .p_zeros
            .iter()
            .chain(&self.q_zeros)
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::InvalidParameter("zeros must be finite".into()));
        }
        Ok(())
    }

    pub fn all_zeros(&self) -> Vec<Point<T>> {
        self.p_zeros.iter().chain(&self.q_zeros).copied().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiMethod {
    Bruteforce,
    AsymptoticPair,
}

/// Two-sided estimate of `χ_n`.
///
/// `chi_upper` is the inner supremum found for the best `p`; `chi_lower` is
/// the outer infimum found for the best `q`. Both come from local searches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ChiEstimate<T> {
    pub n: usize,
    pub k: usize,
    pub chi_upper: T,
    pub chi_lower: T,
    pub log_rate_upper: T,
    pub log_rate_lower: T,
    pub method: ChiMethod,
    pub evaluations: usize,
    /// The pair realizing `chi_upper`.
    pub upper_config: ZeroConfig<T>,
    /// The pair realizing `chi_lower`.
    pub lower_config: ZeroConfig<T>,
}

fn e_scan<T: Real>(c: &Condenser<T>, grid_n: usize) -> Result<ScanGrid<T>> {
    if grid_n < 8 {
        return Err(Error::GridTooCoarse {
            grid_n,
            required: 8,
        });
    }
    ScanGrid::new(c, grid_n, grid_n)
}

/// `‖pq‖_E / ‖pq‖_Γ` of the monic pair, from `grid_n` samples of `∂E` (plus
/// interior spot checks) and of `Γ`, evaluated in the log domain.
pub fn ratio_norms<T: Real>(zc: &ZeroConfig<T>, c: &Condenser<T>, grid_n: usize) -> Result<T> {
    zc.validate()?;
    let scan = e_scan(c, grid_n)?;
    Ok(log_ratio_on(&zc.all_zeros(), &scan).exp())
}

/// `log(‖pq‖_E / ‖pq‖_Γ)` for the given zeros on a scan grid.
pub fn log_ratio_on<T: Real>(zeros: &[Point<T>], scan: &ScanGrid<T>) -> T {
    let log_abs = |z: Point<T>| zeros.iter().fold(T::zero(), |acc, x| acc + ln_abs(z - *x));
    let max_on = |pts: &[Point<T>]| {
        pts.par_iter()
            .map(|z| log_abs(*z))
            .reduce(|| T::neg_infinity(), T::max)
    };
    max_on(&scan.e) - max_on(&scan.gamma)
}

/// Tabulated `log|s - z|` for candidate zeros `z` and scan points `s`.
struct Tables<T> {
    cands: Vec<Point<T>>,
    ne: usize,
    ng: usize,
    e: Vec<T>,
    g: Vec<T>,
}

impl<T: Real> Tables<T> {
    fn new(cands: Vec<Point<T>>, scan: &ScanGrid<T>) -> Self {
        let fill = |pts: &[Point<T>]| -> Vec<T> {
            cands
                .par_iter()
                .flat_map_iter(|z| pts.iter().map(move |s| ln_abs(*s - *z)))
                .collect()
        };
        Self {
            ne: scan.e.len(),
            ng: scan.gamma.len(),
            e: fill(&scan.e),
            g: fill(&scan.gamma),
            cands,
        }
    }

    fn e_row(&self, i: usize) -> &[T] {
        &self.e[i * self.ne..(i + 1) * self.ne]
    }

    fn g_row(&self, i: usize) -> &[T] {
        &self.g[i * self.ng..(i + 1) * self.ng]
    }
}

/// Running sums `Σ log|s - z_i|` over the current zeros.
#[derive(Clone)]
struct State<T> {
    le: Vec<T>,
    lg: Vec<T>,
}

fn max_of<T: Real>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::neg_infinity(), T::max)
}

/// `max_s (base[s] - old[s] + new[s])`, absent rows contributing nothing.
fn swapped_max<T: Real>(base: &[T], old: Option<&[T]>, new: Option<&[T]>) -> T {
    match (old, new) {
        (Some(ro), Some(rn)) => max_of((0..base.len()).map(|s| base[s] - ro[s] + rn[s])),
        (Some(ro), None) => max_of((0..base.len()).map(|s| base[s] - ro[s])),
        (None, Some(rn)) => max_of((0..base.len()).map(|s| base[s] + rn[s])),
        (None, None) => max_of(base.iter().copied()),
    }
}

impl<T: Real> State<T> {
    fn new(tab: &Tables<T>, zeros: impl IntoIterator<Item = usize>) -> Self {
        let mut st = Self {
            le: vec![T::zero(); tab.ne],
            lg: vec![T::zero(); tab.ng],
        };
        for z in zeros {
            st.apply(tab, None, Some(z));
        }
        st
    }

    fn value(&self) -> T {
        max_of(self.le.iter().copied()) - max_of(self.lg.iter().copied())
    }

    fn value_swap(&self, tab: &Tables<T>, old: Option<usize>, new: Option<usize>) -> T {
        let e = swapped_max(
            &self.le,
            old.map(|i| tab.e_row(i)),
            new.map(|i| tab.e_row(i)),
        );
        let g = swapped_max(
            &self.lg,
            old.map(|i| tab.g_row(i)),
            new.map(|i| tab.g_row(i)),
        );
        e - g
    }

    fn apply(&mut self, tab: &Tables<T>, old: Option<usize>, new: Option<usize>) {
        if let Some(o) = old {
            for (l, r) in self.le.iter_mut().zip(tab.e_row(o)) {
                *l = *l - *r;
            }
            for (l, r) in self.lg.iter_mut().zip(tab.g_row(o)) {
                *l = *l - *r;
            }
        }
        if let Some(n) = new {
            for (l, r) in self.le.iter_mut().zip(tab.e_row(n)) {
                *l = *l + *r;
            }
            for (l, r) in self.lg.iter_mut().zip(tab.g_row(n)) {
                *l = *l + *r;
            }
        }
    }
}

struct Counter {
    evals: usize,
    budget: usize,
}

impl Counter {
    fn new(budget: usize) -> Self {
        Self { evals: 0, budget }
    }

    fn tick(&mut self) -> Result<()> {
        self.evals += 1;
        if self.evals > self.budget {
            return Err(Error::BudgetExceeded {
                evaluations: self.evals,
            });
        }
        Ok(())
    }
}

fn improve_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::lit(64.0) * T::epsilon())
}

/// Cyclic coordinate descent of the movable zeros over `range`; the other
/// zeros stay inside `state`. Maximizes when `maximize`, minimizes otherwise.
fn descend<T: Real>(
    tab: &Tables<T>,
    state: &mut State<T>,
    zeros: &mut [usize],
    range: &[usize],
    maximize: bool,
    counter: &mut Counter,
) -> Result<T> {
    let sign = if maximize { T::one() } else { -T::one() };
    let tol = improve_tol::<T>();
    let mut cur = state.value();
    loop {
        let mut improved = false;
        for i in 0..zeros.len() {
            let old = zeros[i];
            let mut best = (old, cur);
            for &cand in range {
                if cand == old {
                    continue;
                }
                counter.tick()?;
                let v = state.value_swap(tab, Some(old), Some(cand));
                if sign * (v - best.1) > tol {
                    best = (cand, v);
                }
            }
            if best.0 != old {
                state.apply(tab, Some(old), Some(best.0));
                zeros[i] = best.0;
                cur = best.1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(cur)
}

/// Best value over `q` for fixed `p`: full degree from `warm`, then `q ≡ 1`.
fn inner_sup<T: Real>(
    tab: &Tables<T>,
    p: &[usize],
    warm: &[usize],
    qrange: &[usize],
    counter: &mut Counter,
) -> Result<(T, Vec<usize>, Vec<usize>)> {
    let mut q = warm.to_vec();
    let mut st = State::new(tab, p.iter().chain(&q).copied());
    counter.tick()?;
    let v_full = descend(tab, &mut st, &mut q, qrange, true, counter)?;
    counter.tick()?;
    let v_one = State::new(tab, p.iter().copied()).value();
    if v_one > v_full + improve_tol::<T>() {
        Ok((v_one, Vec::new(), q))
    } else {
        Ok((v_full, q.clone(), q))
    }
}

/// Greedy degree reduction of the maximizing `q` at fixed `p`: repeatedly drop
/// the zero whose removal helps most, re-descend, and keep the best degree.
fn inner_sup_with_truncation<T: Real>(
    tab: &Tables<T>,
    p: &[usize],
    warm: &[usize],
    qrange: &[usize],
    counter: &mut Counter,
) -> Result<(T, Vec<usize>)> {
    let (mut best_v, mut best_q, full) = inner_sup(tab, p, warm, qrange, counter)?;
    let mut q = full;
    while !q.is_empty() {
        let st = State::new(tab, p.iter().chain(&q).copied());
        let mut drop = (0, T::neg_infinity());
        for i in 0..q.len() {
            counter.tick()?;
            let v = st.value_swap(tab, Some(q[i]), None);
            if v > drop.1 {
                drop = (i, v);
            }
        }
        q.remove(drop.0);
        let mut st = State::new(tab, p.iter().chain(&q).copied());
        let v = descend(tab, &mut st, &mut q, qrange, true, counter)?;
        if v > best_v + improve_tol::<T>() {
            best_v = v;
            best_q = q.clone();
        }
    }
    Ok((best_v, best_q))
}

/// Candidate zeros for `p`: samples of `∂E`, the centre and interior rings.
fn p_candidates<T: Real>(c: &Condenser<T>, boundary: usize, extra: &[Point<T>]) -> Vec<Point<T>> {
    let mut out = extra.to_vec();
    out.extend(c.e_domain.boundary_samples(boundary));
    if let crate::geometry::EDomain::Disk { center, radius } = c.e_domain {
        out.push(center);
        for ring in [0.25, 0.5, 0.75] {
            let count = (boundary / 4).max(4);
            for j in 0..count {
                let t = T::TAU() * T::lit(j as f64) / T::lit(count as f64);
                out.push(center + Complex::from_polar(radius * T::lit(ring), t));
            }
        }
    }
    dedup(out)
}

/// Candidate zeros for `q`: samples of `Γ` and of curves scaled about its centre.
fn q_candidates<T: Real>(
    c: &Condenser<T>,
    samples: usize,
    scales: &[f64],
    extra: &[Point<T>],
) -> Result<Vec<Point<T>>> {
    let mut out = extra.to_vec();
    let pts = c.gamma_samples(samples.max(8))?.points;
    let center = c.gamma.center();
    for &s in scales {
        let s = T::lit(s);
        out.extend(pts.iter().map(|z| center + (*z - center) * s));
    }
    Ok(dedup(out))
}

fn dedup<T: Real>(pts: Vec<Point<T>>) -> Vec<Point<T>> {
    let mut out: Vec<Point<T>> = Vec::with_capacity(pts.len());
    for p in pts {
        if !out
            .iter()
            .any(|q| (*q - p).norm() <= T::lit(1e-12) * (T::one() + p.norm()))
        {
            out.push(p);
        }
    }
    out
}

fn index_of<T: Real>(cands: &[Point<T>], z: Point<T>) -> usize {
    let d: Vec<T> = cands.iter().map(|c| -(*c - z).norm()).collect();
    argmax(&d).expect("nonempty candidate set")
}

/// Weighted Fekete zeros of `q` (`m` points on `Γ`); one point at the maximum of `g(·,∞)` for `m = 1`.
fn fekete_zeros<T: Real>(
    c: &Condenser<T>,
    theta: T,
    m: usize,
    grid_n: usize,
) -> Result<Vec<Point<T>>> {
    match m {
        0 => Ok(Vec::new()),
        1 => {
            let grid = GammaGrid::new(c, grid_n.max(16))?;
            Ok(vec![grid.points[argmax(&grid.g_inf).unwrap_or(0)]])
        }
        _ => Ok(
            fekete_green(c, theta, m, grid_n.max(GRID_PER_POINT * m), 0)?
                .points()
                .to_vec(),
        ),
    }
}

/// Weighted Leja zeros of `p` (`k` points on `∂E`) in the field of `lambda`.
fn leja_zeros<T: Real>(
    c: &Condenser<T>,
    lambda: &DiscreteMeasure<T>,
    theta: T,
    k: usize,
    grid_n: usize,
) -> Result<Vec<Point<T>>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    Ok(
        leja_weighted(c, lambda, theta, k, grid_n.max(GRID_PER_POINT * k))?
            .points()
            .to_vec(),
    )
}

fn estimate<T: Real>(
    n: usize,
    k: usize,
    upper: (T, &[usize], &[usize]),
    lower: (T, &[usize], &[usize]),
    tab: &Tables<T>,
    method: ChiMethod,
    evaluations: usize,
) -> Result<ChiEstimate<T>> {
    let pts = |ix: &[usize]| ix.iter().map(|&i| tab.cands[i]).collect::<Vec<_>>();
    let nn = T::lit(n as f64);
    Ok(ChiEstimate {
        n,
        k,
        chi_upper: upper.0.exp(),
        chi_lower: lower.0.exp(),
        log_rate_upper: upper.0 / nn,
        log_rate_lower: lower.0 / nn,
        method,
        evaluations,
        upper_config: ZeroConfig::new(pts(upper.1), pts(upper.2), n, k)?,
        lower_config: ZeroConfig::new(pts(lower.1), pts(lower.2), n, k)?,
    })
}

struct Branch<T> {
    value: T,
    p: Vec<usize>,
    q: Vec<usize>,
    evals: usize,
}

/// Nested minimax over zero configurations for `n ≤ 6`.
///
/// Outer coordinate descent over `p` (starts: Leja points of `E`, all zeros
/// at the centre of `E`, and `restarts` random configurations drawn with
/// `seed`), each move scored by an inner coordinate-ascent over `q` warm-started
/// from the incumbent; lower degrees of both `p` and `q` are explored by greedy
/// truncation. Branches run in parallel and the best value, then the lowest
/// branch index, wins.
pub fn chi_bruteforce<T: Real>(
    c: &Condenser<T>,
    n: usize,
    k: usize,
    grid_n: usize,
    restarts: usize,
    seed: u64,
) -> Result<ChiEstimate<T>> {
    if n == 0 || n > BRUTEFORCE_MAX_N || k > n {
        return Err(Error::InvalidParameter(format!(
            "bruteforce needs 1 <= n <= {BRUTEFORCE_MAX_N} and k <= n, got n = {n}, k = {k}"
        )));
    }
    let scan = e_scan(c, grid_n)?;
    let theta = T::lit(k as f64) / T::lit(n as f64);
    let leja = leja_zeros(c, &DiscreteMeasure::zero(), T::one(), k, 16 * 32)?;
    let fekete = fekete_zeros(c, theta.min(T::lit(0.99)), n - k, 16 * 32)?;
    let mut cands = p_candidates(c, BRUTEFORCE_CANDIDATES, &leja);
    let np = cands.len();
    cands.extend(q_candidates(c, BRUTEFORCE_CANDIDATES, &[1.0], &fekete)?);
    let tab = Tables::new(cands, &scan);
    let prange: Vec<usize> = (0..np).collect();
    let qrange: Vec<usize> = (np..tab.cands.len()).collect();
    let q_start: Vec<usize> = fekete
        .iter()
        .map(|z| np + index_of(&tab.cands[np..], *z))
        .collect();
    let center = index_of(&tab.cands[..np], c.e_domain.interior_point());

    let mut starts: Vec<Vec<usize>> = vec![
        leja.iter()
            .map(|z| index_of(&tab.cands[..np], *z))
            .collect(),
        vec![center; k],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        starts.push((0..k).map(|_| rng.gen_range(0..np)).collect());
    }

    let branches: Vec<Result<Branch<T>>> = starts
        .par_iter()
        .map(|start| {
            let mut counter = Counter::new(RATIO_BUDGET);
            let mut p = start.clone();
            let (mut cur, _, mut warm) = inner_sup(&tab, &p, &q_start, &qrange, &mut counter)?;
            loop {
                let mut improved = false;
                for i in 0..p.len() {
                    for &cand in &prange {
                        if cand == p[i] {
                            continue;
                        }
                        let mut trial = p.clone();
                        trial[i] = cand;
                        let (v, _, w) = inner_sup(&tab, &trial, &warm, &qrange, &mut counter)?;
                        if v < cur - improve_tol::<T>() {
                            cur = v;
                            p = trial;
                            warm = w;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            // lower-degree p: drop zeros while that lowers the inner supremum
            while !p.is_empty() {
                let mut best: Option<(T, Vec<usize>, Vec<usize>)> = None;
                for i in 0..p.len() {
                    let mut trial = p.clone();
                    trial.remove(i);
                    let (v, _, w) = inner_sup(&tab, &trial, &warm, &qrange, &mut counter)?;
                    if best.as_ref().map_or(true, |b| v < b.0) {
                        best = Some((v, trial, w));
                    }
                }
                match best {
                    Some((v, trial, w)) if v < cur - improve_tol::<T>() => {
                        cur = v;
                        p = trial;
                        warm = w;
                    }
                    _ => break,
                }
            }
            let (value, q) = inner_sup_with_truncation(&tab, &p, &warm, &qrange, &mut counter)?;
            Ok(Branch {
                value,
                p,
                q,
                evals: counter.evals,
            })
        })
        .collect();

    let mut evaluations = 0;
    let mut best: Option<Branch<T>> = None;
    for b in branches {
        let b = b?;
        evaluations += b.evals;
        if best.as_ref().map_or(true, |x| b.value < x.value) {
            best = Some(b);
        }
    }
    if evaluations > RATIO_BUDGET {
        return Err(Error::BudgetExceeded { evaluations });
    }
    let best = best.expect("at least one branch");

    let mut counter = Counter::new(RATIO_BUDGET - evaluations);
    let mut p_low = best.p.clone();
    let mut st = State::new(&tab, best.p.iter().chain(&best.q).copied());
    let low = descend(&tab, &mut st, &mut p_low, &prange, false, &mut counter)?;
    evaluations += counter.evals;
    estimate(
        n,
        k,
        (best.value, &best.p, &best.q),
        (low.min(best.value), &p_low, &best.q),
        &tab,
        ChiMethod::Bruteforce,
        evaluations,
    )
}

/// Candidate-grid sizes for [`chi_asymptotic_pair`].
const PAIR_BOUNDARY_CANDIDATES: usize = 256;
const PAIR_GAMMA_CANDIDATES: usize = 256;

/// Bounds from the equilibrium discretizations at `θ = k/n`: `p_n` has the `k`
/// weighted Leja points as zeros and `q_n` the `n-k` weighted Fekete points.
///
/// `chi_lower` is the infimum over `p` at fixed `q_n` by coordinate descent
/// from `p_n` and from all zeros at the centre of `E`; `chi_upper` is the smaller of the inner suprema over `q`
/// (coordinate ascent from `q_n`, compared with `q ≡ 1`) at `p_n` and at the
/// descended `p`.
pub fn chi_asymptotic_pair<T: Real>(
    c: &Condenser<T>,
    n: usize,
    k: usize,
    grid_n: usize,
) -> Result<ChiEstimate<T>> {
    if n == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= n and k <= n, got n = {n}, k = {k}"
        )));
    }
    let theta = T::lit(k as f64) / T::lit(n as f64);
    let scan = e_scan(c, grid_n)?;
    let fekete = if k < n {
        fekete_zeros(c, theta, n - k, grid_n)?
    } else {
        Vec::new()
    };
    let lambda = if fekete.is_empty() {
        DiscreteMeasure::zero()
    } else {
        DiscreteMeasure::counting(&fekete, n)?
    };
    let leja = if k > 0 {
        leja_zeros(c, &lambda, theta, k, grid_n)?
    } else {
        Vec::new()
    };

    let mut cands = p_candidates(c, PAIR_BOUNDARY_CANDIDATES, &leja);
    let np = cands.len();
    cands.extend(q_candidates(c, PAIR_GAMMA_CANDIDATES, &[1.0], &fekete)?);
    let tab = Tables::new(cands, &scan);
    let prange: Vec<usize> = (0..np).collect();
    let qrange: Vec<usize> = (np..tab.cands.len()).collect();
    let p_n: Vec<usize> = (0..leja.len()).collect();
    let q_n: Vec<usize> = (np..np + fekete.len()).collect();
    debug_assert!(q_n.iter().zip(&fekete).all(|(&i, z)| tab.cands[i] == *z));

    let mut counter = Counter::new(RATIO_BUDGET);
    let center = index_of(&tab.cands[..np], c.e_domain.interior_point());
    let mut low = T::infinity();
    let mut p_low = p_n.clone();
    for start in [p_n.clone(), vec![center; p_n.len()]] {
        let mut p = start;
        let mut st = State::new(&tab, p.iter().chain(&q_n).copied());
        counter.tick()?;
        let v = descend(&tab, &mut st, &mut p, &prange, false, &mut counter)?;
        if v < low - improve_tol::<T>() {
            low = v;
            p_low = p;
        }
    }

    let (v_n, q_at_n, _) = inner_sup(&tab, &p_n, &q_n, &qrange, &mut counter)?;
    let (v_low, q_at_low, _) = inner_sup(&tab, &p_low, &q_n, &qrange, &mut counter)?;
    let upper = if v_low < v_n {
        (v_low, p_low.as_slice(), q_at_low.as_slice())
    } else {
        (v_n, p_n.as_slice(), q_at_n.as_slice())
    };
    estimate(
        n,
        k,
        upper,
        (low, &p_low, &q_n),
        &tab,
        ChiMethod::AsymptoticPair,
        counter.evals,
    )
}

/// `max |U^{α(p)} - U^{reference}|` over the test grid, `α(p)` the swept
/// zero-counting measure of `p` (mass `deg p / n`).
pub fn zero_distribution_diag<T: Real>(
    zc: &ZeroConfig<T>,
    c: &Condenser<T>,
    reference: &DiscreteMeasure<T>,
    test_grid: &[Point<T>],
) -> Result<T> {
    zc.validate()?;
    let nu = DiscreteMeasure::counting(&zc.p_zeros, zc.n)?;
    let alpha = balayage_interior_to_boundary(&nu, &c.e_domain, DEFAULT_BALAYAGE_CELLS)?;
    let minimum = T::lit(DIAG_MIN_DISTANCE);
    for z in test_grid {
        let d = alpha.distance_to(*z).min(reference.distance_to(*z));
        if d < minimum {
            return Err(Error::GridTooClose {
                distance: d.as_f64(),
                minimum: DIAG_MIN_DISTANCE,
            });
        }
    }
    Ok(test_grid
        .par_iter()
        .map(|z| (alpha.log_potential(*z) - reference.log_potential(*z)).abs())
        .reduce(|| T::zero(), T::max))
}
