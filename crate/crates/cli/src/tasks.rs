//! One runner per task. Each returns the `result.json` payload plus any CSV tables.

use condenser_core::balayage::{balayage_to_e, uniform_on_gamma, DEFAULT_BALAYAGE_CELLS};
use condenser_core::equilibrium::{
    m_hat_theta, m_theta, solve_equilibrium, theta_sweep, DEFAULT_MAX_PASSES,
};
use condenser_core::extremal::{chi_asymptotic_pair, chi_bruteforce, BRUTEFORCE_MAX_N};
use condenser_core::measure::box_grid;
use condenser_core::nwidth::{width_rate_predict_with, WidthOptions};
use condenser_core::{
    Condenser64, CurveSpec, DiscreteMeasure64, EDomain, EquilibriumOptions, Error,
    Result as CoreResult,
};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    ChiMethodChoice, RunConfig, Task, DEFAULT_CHI_GRID_N, DEFAULT_GRID_N, DEFAULT_RESTARTS,
    SCHEMA_VERSION,
};
use crate::RunError;

pub struct CsvTable {
    pub file: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub struct TaskOutput {
    pub result: Value,
    pub tables: Vec<CsvTable>,
    /// `(file name, contents)` for the `--fixtures` directory.
    pub fixture: Option<(String, Value)>,
    /// False when the validate task found a failing item.
    pub passed: bool,
}

impl TaskOutput {
    fn ok(result: Value, tables: Vec<CsvTable>) -> Self {
        Self {
            result,
            tables,
            fixture: None,
            passed: true,
        }
    }
}

fn envelope(task: Task, body: impl Serialize) -> Value {
    let mut v = json!({ "schema_version": SCHEMA_VERSION, "task": task.name() });
    if let (Some(obj), Value::Object(extra)) = (
        v.as_object_mut(),
        serde_json::to_value(body).expect("payload serializes"),
    ) {
        obj.extend(extra);
    }
    v
}

fn measure_rows(m: &DiscreteMeasure64) -> Vec<Vec<f64>> {
    m.iter().map(|(z, w)| vec![z.re, z.im, w]).collect()
}

pub fn run(task: Task, cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    match task {
        Task::Equilibrium => equilibrium(cfg),
        Task::Sweep => sweep(cfg),
        Task::Chi => chi(cfg),
        Task::Nwidth => nwidth(cfg),
        Task::BalayageDemo => balayage_demo(cfg),
        Task::Validate => Ok(validate(cfg)),
    }
}

fn equilibrium(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let opts = EquilibriumOptions {
        n_points: cfg.points(),
        grid_n: cfg.grid_n(DEFAULT_GRID_N),
        seed: cfg.seed.unwrap_or(0),
        max_passes: DEFAULT_MAX_PASSES,
    };
    let res = solve_equilibrium(&cfg.condenser, cfg.theta(), &opts)?;
    let mut tables = Vec::new();
    if cfg.wants_csv() {
        tables.push(CsvTable {
            file: "lambda.csv",
            header: vec!["x", "y", "weight"],
            rows: measure_rows(&res.lambda_n),
        });
        tables.push(CsvTable {
            file: "mu.csv",
            header: vec!["x", "y", "weight"],
            rows: measure_rows(&res.mu_n),
        });
    }
    let body = json!({ "options": opts, "result": res });
    Ok(TaskOutput::ok(envelope(Task::Equilibrium, body), tables))
}

fn sweep(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let thetas = cfg.sweep_thetas();
    let (points, grid_n) = (cfg.points(), cfg.grid_n(DEFAULT_GRID_N));
    let report = theta_sweep(&cfg.condenser, &thetas, points, grid_n)?;
    let mut tables = Vec::new();
    if cfg.wants_csv() {
        tables.push(CsvTable {
            file: "sweep.csv",
            header: vec![
                "theta",
                "m_energy",
                "m_field",
                "m_hat",
                "cap_S_tau",
                "residuals",
            ],
            rows: report
                .rows()
                .iter()
                .map(|r| {
                    vec![
                        r.theta,
                        r.m_energy,
                        r.m_field,
                        r.m_hat,
                        r.cap_s_tau,
                        r.residuals,
                    ]
                })
                .collect(),
        });
    }
    let body = json!({ "points": points, "grid_n": grid_n, "result": report });
    Ok(TaskOutput::ok(envelope(Task::Sweep, body), tables))
}

fn chi(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let seed = cfg.seed.ok_or_else(|| {
        RunError::Validation("seed is mandatory for the chi task (config `seed` or --seed)".into())
    })?;
    let (n, k) = cfg.degrees()?;
    let grid_n = cfg.grid_n(DEFAULT_CHI_GRID_N);
    let restarts = cfg.restarts.unwrap_or(DEFAULT_RESTARTS);
    let method = cfg.method.unwrap_or(ChiMethodChoice::Auto);
    let brute = match method {
        ChiMethodChoice::Auto => n <= BRUTEFORCE_MAX_N,
        ChiMethodChoice::Bruteforce => true,
        ChiMethodChoice::AsymptoticPair => false,
    };
    let est = if brute {
        chi_bruteforce(&cfg.condenser, n, k, grid_n, restarts, seed)?
    } else {
        chi_asymptotic_pair(&cfg.condenser, n, k, grid_n)?
    };
    let body = json!({
        "seed": seed,
        "grid_n": grid_n,
        "restarts": restarts,
        "chi": est.chi_upper,
        "estimate": est,
    });
    let fixture = json!({
        "schema_version": SCHEMA_VERSION,
        "condenser": cfg.condenser,
        "n": n,
        "k": k,
        "grid_n": grid_n,
        "restarts": restarts,
        "seed": seed,
        "method": est.method,
        "value": est.chi_upper,
        "chi_lower": est.chi_lower,
        "chi_upper": est.chi_upper,
    });
    let method_name = if brute {
        "bruteforce"
    } else {
        "asymptotic_pair"
    };
    Ok(TaskOutput {
        result: envelope(Task::Chi, body),
        tables: Vec::new(),
        fixture: Some((
            format!("chi_{method_name}_n{n}_k{k}_seed{seed}.json"),
            fixture,
        )),
        passed: true,
    })
}

fn nwidth(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let defaults = WidthOptions::default();
    let opts = WidthOptions {
        n_points: cfg.points.unwrap_or(defaults.n_points),
        grid_n: cfg.grid_n.unwrap_or(defaults.grid_n),
        field_n: cfg.field_n.unwrap_or(defaults.field_n),
        chi_degrees: cfg.chi_degrees.clone().unwrap_or(defaults.chi_degrees),
    };
    let report = width_rate_predict_with(&cfg.condenser, cfg.theta(), &opts)?;
    let mut tables = Vec::new();
    if cfg.wants_csv() {
        tables.push(CsvTable {
            file: "field.csv",
            header: vec!["x", "y", "value"],
            rows: report
                .field_grid
                .grid_points
                .iter()
                .zip(&report.field_grid.values)
                .map(|(z, v)| vec![z.re, z.im, *v])
                .collect(),
        });
    }
    let body = json!({ "options": opts, "result": report });
    Ok(TaskOutput::ok(envelope(Task::Nwidth, body), tables))
}

fn disk_of(c: &Condenser64) -> Result<(Complex64, f64), RunError> {
    match c.e_domain {
        EDomain::Disk { center, radius } => Ok((center, radius)),
        EDomain::Segment { .. } => {
            Err(Error::UnsupportedDomain("the balayage demo needs a disk E".into()).into())
        }
    }
}

/// Interior test points of the disk at radius at most `0.9 r`.
fn disk_probes(center: Complex64, r: f64) -> Vec<Complex64> {
    let lo = center - Complex64::new(r, r);
    let hi = center + Complex64::new(r, r);
    box_grid(lo, hi, 17, 17)
        .into_iter()
        .filter(|z| (z - center).norm() <= 0.9 * r)
        .collect()
}

#[derive(Serialize)]
struct BalayageDemo {
    cells: usize,
    sources: DiscreteMeasure64,
    swept: DiscreteMeasure64,
    shift_constant: f64,
    mass_error: f64,
    /// `max |U^{swept} - U^{sources} - shift|` over interior probes of `E`.
    potential_identity_residual: f64,
    /// `max_j |w_j - 1/cells|` for the swept equilibrium measure of `Γ`; absent for non-circular `Γ`.
    harmonic_measure_deviation: Option<f64>,
}

fn balayage_demo(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let c = &cfg.condenser;
    let (center, r) = disk_of(c)?;
    let cells = cfg.cells.unwrap_or(DEFAULT_BALAYAGE_CELLS);
    let sources = match &cfg.sources {
        Some(s) => DiscreteMeasure64::new(
            s.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
            s.iter().map(|p| p[2]).collect(),
        )?,
        None => DiscreteMeasure64::new(
            vec![
                center + Complex64::from_polar(2.0 * r, 0.0),
                center + Complex64::from_polar(1.5 * r, 2.0),
                center + Complex64::from_polar(2.2 * r, -1.5),
            ],
            vec![0.5, 0.3, 0.2],
        )?,
    };
    let b = balayage_to_e(&sources, &c.e_domain, cells)?;
    let residual = disk_probes(center, r)
        .iter()
        .map(|z| (b.swept.log_potential(*z) - sources.log_potential(*z) - b.shift_constant).abs())
        .fold(0.0, f64::max);
    let deviation = if c.gamma.is_circle() {
        let omega = uniform_on_gamma(&c.gamma, 1.0, cells)?;
        let swept = balayage_to_e(&omega, &c.e_domain, cells)?.swept;
        let target = 1.0 / cells as f64;
        Some(
            swept
                .weights()
                .iter()
                .map(|w| (w - target).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    let mut tables = Vec::new();
    if cfg.wants_csv() {
        tables.push(CsvTable {
            file: "swept.csv",
            header: vec!["x", "y", "weight"],
            rows: measure_rows(&b.swept),
        });
    }
    let demo = BalayageDemo {
        cells,
        mass_error: (b.swept.total_mass() - sources.total_mass()).abs(),
        sources,
        swept: b.swept,
        shift_constant: b.shift_constant,
        potential_identity_residual: residual,
        harmonic_measure_deviation: deviation,
    };
    Ok(TaskOutput::ok(
        envelope(Task::BalayageDemo, json!({ "result": demo })),
        tables,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: CoreResult<(bool, String)>) -> CheckItem {
    match outcome {
        Ok((passed, detail)) => CheckItem {
            name,
            passed,
            detail,
        },
        Err(e) => CheckItem {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Closed form of `max_Γ g(·,∞)` when `E` is a disk and `Γ` a circle.
fn max_green_closed_form(c: &Condenser64) -> Option<f64> {
    match (&c.e_domain, &c.gamma) {
        (
            EDomain::Disk { center, radius },
            CurveSpec::Circle {
                center: gc,
                radius: gr,
            },
        ) => Some((((gc - center).norm() + gr) / radius).ln()),
        _ => None,
    }
}

fn validate(cfg: &RunConfig) -> TaskOutput {
    let c = &cfg.condenser;
    let (points, grid_n) = (cfg.points(), cfg.grid_n(DEFAULT_GRID_N));
    let mut items = vec![CheckItem {
        name: "geometry",
        passed: c.validated,
        detail: "winding-number and positivity checks".into(),
    }];

    items.push(check(
        "kernel_symmetry",
        (|| {
            let probes = c.gamma_samples(16)?.points;
            let mut worst = 0.0f64;
            for (i, z) in probes.iter().enumerate() {
                for t in &probes[i + 1..] {
                    let (a, b) = (c.green_kernel(*z, *t)?, c.green_kernel(*t, *z)?);
                    worst = worst.max((a - b).abs() / a.abs().max(1.0));
                }
            }
            Ok((
                worst <= 1e-12,
                format!("max relative asymmetry {worst:.3e}"),
            ))
        })(),
    ));

    items.push(check(
        "kernel_zero_on_E",
        (|| {
            let t = c.gamma_samples(8)?.points;
            let mut worst = 0.0f64;
            for z in c.e_domain.boundary_samples(64) {
                for p in &t {
                    worst = worst.max(c.green_kernel(z, *p)?.abs());
                }
            }
            Ok((
                worst <= 1e-12,
                format!("max |g| on the boundary of E {worst:.3e}"),
            ))
        })(),
    ));

    items.push(check(
        "balayage_identity",
        (|| {
            let EDomain::Disk { center, radius } = c.e_domain else {
                return Ok((true, "skipped: E is a segment".into()));
            };
            let source = DiscreteMeasure64::new(c.gamma_samples(8)?.points, vec![0.125; 8])?;
            let b = balayage_to_e(&source, &c.e_domain, DEFAULT_BALAYAGE_CELLS)?;
            let mass = (b.swept.total_mass() - 1.0).abs();
            let res = disk_probes(center, radius)
                .iter()
                .map(|z| {
                    (b.swept.log_potential(*z) - source.log_potential(*z) - b.shift_constant).abs()
                })
                .fold(0.0, f64::max);
            Ok((
                mass <= 1e-12 && res <= 1e-6,
                format!("mass error {mass:.3e}, potential residual {res:.3e}"),
            ))
        })(),
    ));

    items.push(check(
        "m_0_zero",
        (|| {
            let opts = EquilibriumOptions::new(points, grid_n);
            let res = solve_equilibrium(c, 0.0, &opts)?;
            let raw = res
                .residuals
                .get("raw_m_field")
                .copied()
                .unwrap_or(f64::NAN);
            Ok((
                res.m_theta_field.abs() <= 1e-3 && res.m_theta_energy.abs() <= 1e-3,
                format!("m_0 = {:e} (raw field value {raw:.3e})", res.m_theta_field),
            ))
        })(),
    ));

    items.push(check(
        "m_1_grid_max",
        (|| {
            let (energy, field) = m_theta(c, 1.0, points, grid_n)?;
            let max_g = c.max_green_on_gamma(grid_n)?;
            let ok = energy == -max_g && field == -max_g;
            let mut detail = format!("m_1 = {field}, -max g on the grid = {}", -max_g);
            let mut closed_ok = true;
            if let Some(exact) = max_green_closed_form(c) {
                closed_ok = (field + exact).abs() <= 1e-6;
                detail.push_str(&format!(", closed form {}", -exact));
            }
            Ok((ok && closed_ok, detail))
        })(),
    ));

    items.push(check(
        "m_hat_1",
        (|| {
            let v = m_hat_theta(c, &DiscreteMeasure64::zero());
            let exact = -c.e_domain.log_capacity().ln();
            Ok((
                (v - exact).abs() <= 1e-15,
                format!("m_hat_1 = {v}, -log cp(E) = {exact}"),
            ))
        })(),
    ));

    for it in &items {
        println!(
            "[{}] {}: {}",
            if it.passed { "PASS" } else { "FAIL" },
            it.name,
            it.detail
        );
    }
    let passed = items.iter().all(|i| i.passed);
    TaskOutput {
        result: envelope(Task::Validate, json!({ "passed": passed, "items": items })),
        tables: Vec::new(),
        fixture: None,
        passed,
    }
}
