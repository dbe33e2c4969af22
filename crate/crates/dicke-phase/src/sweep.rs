//! Coupling sweeps over the numeric and variational channels, cutoff
//! convergence reporting, and numeric-vs-variational comparison tables.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ground::{
    converge_cutoff, load_or_compute, resolve_cache_dir, save_cache, CutoffRow, GroundState,
};
use crate::measures::{density_measures, husimi_measures, MeasureReport, Measures, DEFAULT_NU};
use crate::params::DickeParams;
use crate::quad::QuadratureSpec;
use crate::variational::{equilibrium, AnsatzState, VariationalDensity};
use crate::Result;

/// Which density is analyzed: the exact-diagonalization Husimi distribution
/// or the closed-form symmetrized coherent-state ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Numeric,
    Variational,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Numeric, Channel::Variational];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Numeric => "numeric",
            Channel::Variational => "variational",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "numeric" => Ok(Channel::Numeric),
            "variational" => Ok(Channel::Variational),
            other => Err(Error::Config(format!(
                "unknown channel {other:?} (expected \"numeric\" or \"variational\")"
            ))),
        }
    }
}

/// Everything a sweep needs; mirrors the command-line flags one-to-one and
/// deserializes from a JSON config file with the same field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub omega: f64,
    pub omega0: f64,
    pub two_j: u32,
    /// Fixed Fock cutoff; `None` selects it per λ by the convergence scan.
    pub n_cut: Option<usize>,
    /// Upper end of the convergence scan.
    pub n_cut_max: usize,
    pub lambda_grid: Vec<f64>,
    pub channels: Vec<Channel>,
    /// Moment orders reported as M_ν columns.
    pub nu: Vec<f64>,
    /// Override of the per-axis node count of the recommended quadrature.
    pub nodes: Option<usize>,
    /// Eigenvalue/cutoff tolerance.
    pub tol: f64,
    pub cache_dir: Option<PathBuf>,
    /// Size of the worker pool; `None` uses the global default.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            omega0: 1.0,
            two_j: 20,
            n_cut: None,
            n_cut_max: 400,
            lambda_grid: default_figure_grid(),
            channels: Channel::ALL.to_vec(),
            nu: DEFAULT_NU.to_vec(),
            nodes: None,
            tol: 1e-8,
            cache_dir: None,
            workers: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::Config("empty coupling grid".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("no channels selected".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!("tolerance {} must be > 0", self.tol)));
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(Error::Config("worker count must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// The coupling grid behind the overview figures: 0 to 1 in steps of 0.02,
/// refined to 0.005 inside [0.4, 0.6] around the critical point.
pub fn default_figure_grid() -> Vec<f64> {
    let mut millis: BTreeSet<u64> = (0..=50).map(|k| k * 20).collect();
    millis.extend((80..=120).map(|k| k * 5));
    millis.into_iter().map(|m| m as f64 / 1000.0).collect()
}

/// Parse a coupling grid given either as `lo:hi:step` or as a comma list.
pub fn parse_lambda_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::Config(format!("invalid coupling grid {s:?}: {msg}"));
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("{t:?} is not a number")))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("range form is lo:hi:step".into()));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(bad("need step > 0 and hi ≥ lo".into()));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| lo + i as f64 * step).collect())
    } else {
        let grid: Vec<f64> = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(num)
            .collect::<Result<_>>()?;
        if grid.is_empty() {
            return Err(bad("empty".into()));
        }
        Ok(grid)
    }
}

/// Default box quadrature for the given parameters: trapezoid grid sized by
/// the equilibrium displacement.
pub fn recommended_quadrature(params: &DickeParams) -> QuadratureSpec {
    let eq = equilibrium(params);
    QuadratureSpec::trapezoid_for_displacement(eq.alpha_e.abs().max(eq.beta_e.abs()))
}

/// Quadrature for one sweep point: the displacement-derived default unless
/// the configuration pins `nodes`.
pub fn configured_quadrature(cfg: &SweepConfig, params: &DickeParams) -> QuadratureSpec {
    let mut q = recommended_quadrature(params);
    if let Some(n) = cfg.nodes {
        q.nodes_per_axis = n;
    }
    q
}

/// Resolve the numeric ground state for one coupling: fixed cutoff goes
/// through the cache, automatic cutoff runs the convergence scan and then
/// populates the cache for the accepted dimension.
pub fn ground_for(cfg: &SweepConfig, lambda: f64) -> Result<(GroundState, usize)> {
    match cfg.n_cut {
        Some(nc) => {
            let p = DickeParams::new(cfg.omega, cfg.omega0, lambda, cfg.two_j, nc)?;
            Ok((load_or_compute(&p, cfg.tol, cfg.cache_dir.as_deref())?, nc))
        }
        None => {
            let p = DickeParams::new(cfg.omega, cfg.omega0, lambda, cfg.two_j, 0)?;
            let (_, n_cut, gs) = converge_cutoff(&p, cfg.tol, cfg.n_cut_max)?;
            if let Some(dir) = resolve_cache_dir(cfg.cache_dir.as_deref()) {
                save_cache(&gs, &dir)?;
            }
            Ok((gs, n_cut))
        }
    }
}

fn report_from_measures(
    channel: Channel,
    lambda: f64,
    cfg: &SweepConfig,
    n_cut: usize,
    m: &Measures,
) -> MeasureReport {
    MeasureReport {
        channel: channel.name().into(),
        lambda,
        two_j: cfg.two_j,
        n_cut,
        norm: m.norm,
        p: m.p,
        w: m.w,
        p1: m.p1,
        p2: m.p2,
        w1: m.w1,
        w2: m.w2,
        moments: m.moments.clone(),
        note: None,
    }
}

fn numeric_row(cfg: &SweepConfig, lambda: f64) -> Result<MeasureReport> {
    let (gs, n_cut) = ground_for(cfg, lambda)?;
    let m = husimi_measures(&gs, &configured_quadrature(cfg, &gs.params), &cfg.nu)?;
    Ok(report_from_measures(
        Channel::Numeric,
        lambda,
        cfg,
        n_cut,
        &m,
    ))
}

fn variational_row(cfg: &SweepConfig, lambda: f64) -> Result<MeasureReport> {
    let p = DickeParams::new(cfg.omega, cfg.omega0, lambda, cfg.two_j, 0)?;
    let st = AnsatzState::even(&p)?;
    let density = VariationalDensity::new(&st)?;
    let m = density_measures(&density, &configured_quadrature(cfg, &p), &cfg.nu)?;
    Ok(report_from_measures(
        Channel::Variational,
        lambda,
        cfg,
        0,
        &m,
    ))
}

/// Ordered sweep rows plus the requested moment orders (for headers).
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub nu: Vec<f64>,
    pub rows: Vec<MeasureReport>,
    /// At least one row is an error placeholder.
    pub had_error: bool,
}

/// Run the sweep: λ values in grid order, channels in configured order,
/// failures recorded as error rows rather than aborting the run.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let compute = || {
        let mut rows = Vec::with_capacity(cfg.lambda_grid.len() * cfg.channels.len());
        let mut had_error = false;
        for &lambda in &cfg.lambda_grid {
            for &ch in &cfg.channels {
                let row = match ch {
                    Channel::Numeric => numeric_row(cfg, lambda),
                    Channel::Variational => variational_row(cfg, lambda),
                };
                match row {
                    Ok(r) => rows.push(r),
                    Err(e) => {
                        had_error = true;
                        rows.push(MeasureReport::error_row(
                            lambda,
                            cfg.two_j,
                            &cfg.nu,
                            format!("{}: {e}", ch.name()),
                        ));
                    }
                }
            }
        }
        SweepResult {
            nu: cfg.nu.clone(),
            rows,
            had_error,
        }
    };
    match cfg.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            Ok(pool.install(compute))
        }
        None => Ok(compute()),
    }
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = MeasureReport::csv_header(&result.nu);
    out.push('\n');
    for row in &result.rows {
        out.push_str(&row.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn sweep_json(result: &SweepResult) -> serde_json::Value {
    serde_json::Value::Array(result.rows.iter().map(|r| r.to_json()).collect())
}

// ---------------------------------------------------------------------------
// Channel comparison
// ---------------------------------------------------------------------------

/// Per-λ deviation between the two channels.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub lambda: f64,
    /// Inside the window |λ − λ_c| < 0.05 λ_c, where the finite-size state
    /// departs from both limits and the comparison is not meaningful.
    pub excluded: bool,
    pub p_numeric: f64,
    pub p_variational: f64,
    pub p_rel_dev: f64,
    pub w_numeric: f64,
    pub w_variational: f64,
    pub w_rel_dev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareResult {
    pub rows: Vec<CompareRow>,
    /// Maxima over rows outside the excluded window.
    pub max_p_rel_dev: f64,
    pub max_w_rel_dev: f64,
    pub had_error: bool,
}

/// Sweep both channels and tabulate their relative deviations in P and W.
pub fn run_compare(cfg: &SweepConfig) -> Result<CompareResult> {
    cfg.validate()?;
    let critical = 0.5 * (cfg.omega * cfg.omega0).sqrt();
    let compute = || {
        let mut rows = Vec::new();
        let mut had_error = false;
        let (mut max_p, mut max_w) = (0.0f64, 0.0f64);
        for &lambda in &cfg.lambda_grid {
            let excluded = (lambda - critical).abs() < 0.05 * critical;
            let pair =
                numeric_row(cfg, lambda).and_then(|n| variational_row(cfg, lambda).map(|v| (n, v)));
            let row = match pair {
                Ok((n, v)) => {
                    let p_rel = ((n.p - v.p) / n.p).abs();
                    let w_rel = ((n.w - v.w) / n.w).abs();
                    if !excluded {
                        max_p = max_p.max(p_rel);
                        max_w = max_w.max(w_rel);
                    }
                    CompareRow {
                        lambda,
                        excluded,
                        p_numeric: n.p,
                        p_variational: v.p,
                        p_rel_dev: p_rel,
                        w_numeric: n.w,
                        w_variational: v.w,
                        w_rel_dev: w_rel,
                    }
                }
                Err(_) => {
                    had_error = true;
                    CompareRow {
                        lambda,
                        excluded,
                        p_numeric: f64::NAN,
                        p_variational: f64::NAN,
                        p_rel_dev: f64::NAN,
                        w_numeric: f64::NAN,
                        w_variational: f64::NAN,
                        w_rel_dev: f64::NAN,
                    }
                }
            };
            rows.push(row);
        }
        CompareResult {
            rows,
            max_p_rel_dev: max_p,
            max_w_rel_dev: max_w,
            had_error,
        }
    };
    match cfg.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            Ok(pool.install(compute))
        }
        None => Ok(compute()),
    }
}

pub fn compare_csv(result: &CompareResult) -> String {
    use crate::measures::fmt_f64 as f;
    let mut out = String::from(
        "lambda,excluded,P_numeric,P_variational,P_rel_dev,W_numeric,W_variational,W_rel_dev\n",
    );
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            f(r.lambda),
            r.excluded,
            f(r.p_numeric),
            f(r.p_variational),
            f(r.p_rel_dev),
            f(r.w_numeric),
            f(r.w_variational),
            f(r.w_rel_dev),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Cutoff convergence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConvergeResult {
    pub rows: Vec<CutoffRow>,
    pub n_cut: usize,
    pub energy: f64,
}

/// Run the cutoff scan at one coupling.
pub fn run_converge(cfg: &SweepConfig, lambda: f64) -> Result<ConvergeResult> {
    cfg.validate()?;
    let p = DickeParams::new(cfg.omega, cfg.omega0, lambda, cfg.two_j, 0)?;
    let (rows, n_cut, gs) = converge_cutoff(&p, cfg.tol, cfg.n_cut_max)?;
    Ok(ConvergeResult {
        rows,
        n_cut,
        energy: gs.energy,
    })
}

pub fn converge_csv(result: &ConvergeResult) -> String {
    use crate::measures::fmt_f64 as f;
    let mut out = String::from("n_cut,energy,energy_delta,tail_mass,accepted\n");
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n_cut,
            f(r.energy),
            f(r.energy_delta),
            f(r.tail_mass),
            r.accepted,
        ));
    }
    out
}
