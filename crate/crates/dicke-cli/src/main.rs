//! Command-line front end for the Dicke-model phase-space library.
//!
//! Five subcommands cover the full analysis pipeline:
//!
//! * `sweep` — measure table (norm, P, W, marginal P/W, moments) over a
//!   coupling grid, per channel;
//! * `compare` — numeric vs variational deviation table for P and W;
//! * `zeros` — closed-form Husimi zero lines of the variational state;
//! * `grid` — density dumps (Husimi slices, marginals, smeared densities)
//!   for plotting, with a JSON metadata sidecar;
//! * `converge` — Fock-cutoff convergence audit at one coupling.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 computation
//! failure, 4 partial success (the output contains error rows).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dicke_phase::coherent::{husimi_flat, PhasePoint};
use dicke_phase::ground::GroundState;
use dicke_phase::measures::{fmt_f64, husimi_measures, MarginalGrid, MarginalPair};
use dicke_phase::quad::Axis1D;
use dicke_phase::smearing::{default_smearing_axes, SmearedState};
use dicke_phase::sweep::{
    compare_csv, configured_quadrature, converge_csv, ground_for, parse_lambda_grid, run_compare,
    run_converge, run_sweep, sweep_csv, sweep_json, Channel, SweepConfig,
};
use dicke_phase::variational::{
    analytic_marginal_husimi, ansatz_husimi_flat, husimi_zero_lines, zero_lines_csv, AnsatzState,
    Cell,
};
use dicke_phase::{DickeParams, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_COMPUTE: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "dicke",
    version,
    about = "Phase-space measures of the Dicke-model ground state",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sweep phase-space measures over a coupling grid.
    Sweep(SweepArgs),
    /// Tabulate numeric-vs-variational deviations in P and W.
    Compare(CompareArgs),
    /// Emit closed-form Husimi zero lines of the variational state.
    Zeros(ZerosArgs),
    /// Dump a density grid (plus a `.meta.json` sidecar) for plotting.
    Grid(GridArgs),
    /// Audit Fock-cutoff convergence at one coupling.
    Converge(ConvergeArgs),
}

/// Model and solver knobs shared by every subcommand. Each flag overrides the
/// corresponding field of the (default or file-loaded) configuration.
#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Field frequency ω.
    #[arg(long)]
    omega: Option<f64>,

    /// Level splitting ω₀.
    #[arg(long)]
    omega0: Option<f64>,

    /// Collective spin as 2j (the number of two-level systems).
    #[arg(long = "two-j")]
    two_j: Option<u32>,

    /// Fock cutoff. Omit to select it automatically by a convergence scan.
    #[arg(long = "n-cut")]
    n_cut: Option<usize>,

    /// Quadrature nodes per axis (overrides the displacement-derived default).
    #[arg(long)]
    nodes: Option<usize>,

    /// Eigensolver and cutoff-convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,

    /// Ground-state cache directory (the DICKE_CACHE_DIR variable is also honored).
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,

    /// Worker threads (default: all cores). Results are identical for any count.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// JSON configuration file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Coupling grid: "lo:hi:step" or a comma-separated list.
    #[arg(long = "lambda-grid")]
    lambda_grid: Option<String>,

    /// Channels to run, comma separated: numeric, variational.
    #[arg(long)]
    channels: Option<String>,

    /// Rényi–Wehrl orders, comma separated.
    #[arg(long)]
    nu: Option<String>,

    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// JSON configuration file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Coupling grid: "lo:hi:step" or a comma-separated list.
    #[arg(long = "lambda-grid")]
    lambda_grid: Option<String>,

    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Args, Debug)]
struct ZerosArgs {
    /// Field frequency ω.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,

    /// Level splitting ω₀.
    #[arg(long, default_value_t = 1.0)]
    omega0: f64,

    /// Coupling λ. Omit to run the four canonical sets
    /// (λ, 2j) ∈ {0.6, 10} × {20, 200}.
    #[arg(long)]
    lambda: Option<f64>,

    /// Collective spin 2j (requires --lambda; default 20).
    #[arg(long = "two-j")]
    two_j: Option<u32>,

    /// Clip cell "a_lo,a_hi,b_lo,b_hi" in the marginal plane.
    #[arg(long, default_value = "-1,1,-1,1")]
    cell: String,

    /// Which marginal plane(s) to scan.
    #[arg(long, value_enum, default_value_t = SpaceArg::Both)]
    space: SpaceArg,

    /// CSV destination: a file with --lambda, a directory for the canonical
    /// sets (one CSV per set). Without it a single set prints CSV to stdout;
    /// the canonical run prints only the JSON summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Which density to dump.
    #[arg(long, value_enum)]
    what: GridWhat,

    /// Channel that computes it (smeared grids are numeric-only).
    #[arg(long, value_enum, default_value_t = ChannelArg::Numeric)]
    channel: ChannelArg,

    /// Coupling λ.
    #[arg(long)]
    lambda: f64,

    /// Phase-space slice for `husimi-slice`.
    #[arg(long, value_enum, default_value_t = SliceArg::Position)]
    slice: SliceArg,

    /// CSV destination; a `<out>.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// JSON configuration file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Coupling λ at which to scan the cutoff.
    #[arg(long)]
    lambda: f64,

    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SpaceArg {
    Position,
    Momentum,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ChannelArg {
    Numeric,
    Variational,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum GridWhat {
    /// 2-D slice of the 4-D Husimi density.
    HusimiSlice,
    /// Position-quadrature marginal Φ₁(α₁, β₁).
    Marginal1,
    /// Momentum-quadrature marginal Φ₂(α₂, β₂).
    Marginal2,
    /// Gaussian-smeared configuration density ξ(x, y).
    SmearedPosition,
    /// Gaussian-smeared momentum density ξ̃(k_x, k_y).
    SmearedMomentum,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SliceArg {
    /// Vary (α₁, β₁) at α₂ = β₂ = 0.
    Position,
    /// Vary (α₂, β₂) at α₁ = β₁ = 0.
    Momentum,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_PARTIAL),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Map failure kinds onto exit codes: everything the user could fix in the
/// invocation or configuration is 2, genuine computation failures are 3.
fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_))
        | Some(Error::InvalidParams(_))
        | Some(Error::InvalidQuadrature(_)) => EXIT_CONFIG,
        _ => EXIT_COMPUTE,
    }
}

fn cfg_err(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

/// Run the command; `Ok(true)` means partial success (error rows present).
fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Zeros(args) => cmd_zeros(args),
        Cmd::Grid(args) => cmd_grid(args),
        Cmd::Converge(args) => cmd_converge(args),
    }
}

// ---------------------------------------------------------------------------
// Configuration plumbing
// ---------------------------------------------------------------------------

fn load_config(path: Option<&Path>) -> Result<SweepConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| cfg_err(format!("cannot read config {}: {e}", p.display())))?;
            let cfg: SweepConfig = serde_json::from_str(&text)
                .map_err(|e| cfg_err(format!("bad config {}: {e}", p.display())))?;
            Ok(cfg)
        }
        None => Ok(SweepConfig::default()),
    }
}

fn apply_model(cfg: &mut SweepConfig, m: &ModelArgs) {
    if let Some(v) = m.omega {
        cfg.omega = v;
    }
    if let Some(v) = m.omega0 {
        cfg.omega0 = v;
    }
    if let Some(v) = m.two_j {
        cfg.two_j = v;
    }
    if let Some(v) = m.n_cut {
        cfg.n_cut = Some(v);
    }
    if let Some(v) = m.nodes {
        cfg.nodes = Some(v);
    }
    if let Some(v) = m.tol {
        cfg.tol = v;
    }
    if let Some(ref v) = m.cache_dir {
        cfg.cache_dir = Some(v.clone());
    }
    if let Some(v) = m.workers {
        cfg.workers = Some(v);
    }
}

fn parse_channels(s: &str) -> Result<Vec<Channel>> {
    let channels = s
        .split(',')
        .map(|t| t.trim().parse::<Channel>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if channels.is_empty() {
        return Err(cfg_err("empty channel list"));
    }
    Ok(channels)
}

fn parse_nu(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| cfg_err(format!("bad Rényi order {t:?}: {e}")))
        })
        .collect()
}

fn parse_cell(s: &str) -> Result<Cell> {
    let vals = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| cfg_err(format!("bad cell bound {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let [a_lo, a_hi, b_lo, b_hi] = vals[..] else {
        return Err(cfg_err(format!(
            "cell needs exactly four bounds a_lo,a_hi,b_lo,b_hi, got {}",
            vals.len()
        )));
    };
    Ok(Cell::new(a_lo, a_hi, b_lo, b_hi)?)
}

/// Write to the file (creating parent directories) or stdout.
fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(p, content)?;
        }
        None => {
            print!("{content}");
            std::io::stdout().flush()?;
        }
    }
    Ok(())
}

/// Run `f` on a dedicated pool of `workers` threads, or inline on the global
/// pool. The measure engine merges in a fixed order, so any worker count
/// produces bit-identical results.
fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| cfg_err(format!("worker pool: {e}")))?;
            pool.install(f)
        }
        None => f(),
    }
}

// ---------------------------------------------------------------------------
// sweep / compare / converge
// ---------------------------------------------------------------------------

fn cmd_sweep(args: SweepArgs) -> Result<bool> {
    let mut cfg = load_config(args.config.as_deref())?;
    apply_model(&mut cfg, &args.model);
    if let Some(ref s) = args.lambda_grid {
        cfg.lambda_grid = parse_lambda_grid(s)?;
    }
    if let Some(ref s) = args.channels {
        cfg.channels = parse_channels(s)?;
    }
    if let Some(ref s) = args.nu {
        cfg.nu = parse_nu(s)?;
    }
    let result = run_sweep(&cfg)?;
    let content = match args.format {
        OutFormat::Csv => sweep_csv(&result),
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&sweep_json(&result))?;
            s.push('\n');
            s
        }
    };
    emit(args.out.as_deref(), &content)?;
    if result.had_error {
        eprintln!("warning: some rows failed; see the error rows in the output");
    }
    Ok(result.had_error)
}

fn cmd_compare(args: CompareArgs) -> Result<bool> {
    let mut cfg = load_config(args.config.as_deref())?;
    apply_model(&mut cfg, &args.model);
    if let Some(ref s) = args.lambda_grid {
        cfg.lambda_grid = parse_lambda_grid(s)?;
    }
    let result = run_compare(&cfg)?;
    let content = match args.format {
        OutFormat::Csv => compare_csv(&result),
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&result)?;
            s.push('\n');
            s
        }
    };
    emit(args.out.as_deref(), &content)?;
    eprintln!(
        "max relative deviation outside the critical window: P {:.3e}, W {:.3e}",
        result.max_p_rel_dev, result.max_w_rel_dev
    );
    if result.had_error {
        eprintln!("warning: some rows failed; see the nan rows in the output");
    }
    Ok(result.had_error)
}

fn cmd_converge(args: ConvergeArgs) -> Result<bool> {
    let mut cfg = load_config(args.config.as_deref())?;
    apply_model(&mut cfg, &args.model);
    let workers = cfg.workers;
    let result = with_pool(workers, || Ok(run_converge(&cfg, args.lambda)?))?;
    let content = match args.format {
        OutFormat::Csv => converge_csv(&result),
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&json!({
                "n_cut": result.n_cut,
                "energy": result.energy,
                "rows": result.rows,
            }))?;
            s.push('\n');
            s
        }
    };
    emit(args.out.as_deref(), &content)?;
    eprintln!(
        "accepted n_cut = {} (ground energy {:.12})",
        result.n_cut, result.energy
    );
    Ok(false)
}

// ---------------------------------------------------------------------------
// zeros
// ---------------------------------------------------------------------------

const CANONICAL_ZERO_SETS: [(f64, u32); 4] = [(0.6, 20), (0.6, 200), (10.0, 20), (10.0, 200)];

fn cmd_zeros(args: ZerosArgs) -> Result<bool> {
    let cell = parse_cell(&args.cell)?;
    let sets: Vec<(f64, u32)> = match (args.lambda, args.two_j) {
        (Some(l), tj) => vec![(l, tj.unwrap_or(20))],
        (None, Some(_)) => {
            return Err(cfg_err("--two-j needs --lambda: pass both or neither"));
        }
        (None, None) => CANONICAL_ZERO_SETS.to_vec(),
    };
    let spaces: &[MarginalPair] = match args.space {
        SpaceArg::Position => &[MarginalPair::Position],
        SpaceArg::Momentum => &[MarginalPair::Momentum],
        SpaceArg::Both => &[MarginalPair::Position, MarginalPair::Momentum],
    };

    let single = sets.len() == 1;
    let mut summaries = Vec::new();
    for &(lambda, two_j) in &sets {
        let params = DickeParams::new(args.omega, args.omega0, lambda, two_j, 0)?;
        let mut lines = Vec::new();
        for &space in spaces {
            lines.extend(husimi_zero_lines(&params, &cell, space));
        }
        let n_position = lines
            .iter()
            .filter(|l| l.space == MarginalPair::Position)
            .count();
        let n_momentum = lines.len() - n_position;
        summaries.push(json!({
            "lambda": lambda,
            "two_j": two_j,
            "position_lines": n_position,
            "momentum_lines": n_momentum,
        }));

        let csv = zero_lines_csv(&lines);
        if single {
            emit(args.out.as_deref(), &csv)?;
            eprintln!(
                "lambda = {lambda}, 2j = {two_j}: {n_position} position line(s), \
                 {n_momentum} momentum line(s)"
            );
        } else if let Some(ref dir) = args.out {
            fs::create_dir_all(dir)?;
            fs::write(
                dir.join(format!("zeros_lambda{lambda}_twoj{two_j}.csv")),
                csv,
            )?;
        }
    }
    if !single {
        println!("{}", serde_json::to_string_pretty(&summaries)?);
    }
    Ok(false)
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

fn cmd_grid(args: GridArgs) -> Result<bool> {
    let mut cfg = load_config(None)?;
    apply_model(&mut cfg, &args.model);
    let workers = cfg.workers;
    with_pool(workers, || grid_body(&args, &cfg))?;
    Ok(false)
}

fn grid_body(args: &GridArgs, cfg: &SweepConfig) -> Result<()> {
    // The variational channel needs no Fock cutoff; the numeric one resolves
    // its ground state (through the cache / convergence scan) first.
    let numeric_state: Option<(GroundState, usize)> = match args.channel {
        ChannelArg::Numeric => Some(ground_for(cfg, args.lambda)?),
        ChannelArg::Variational => None,
    };
    let params = match &numeric_state {
        Some((gs, _)) => gs.params,
        None => DickeParams::new(cfg.omega, cfg.omega0, args.lambda, cfg.two_j, 0)?,
    };
    let quad = configured_quadrature(cfg, &params);
    let axis = quad.axis()?;

    let (columns, csv, shape, axes_meta): (Vec<&str>, String, (usize, usize), serde_json::Value) =
        match (args.what, args.channel) {
            (GridWhat::HusimiSlice, _) => {
                let cols = vec!["alpha1", "alpha2", "beta1", "beta2", "phi"];
                let eval: Box<dyn Fn(&PhasePoint) -> f64> = match &numeric_state {
                    Some((gs, _)) => Box::new(move |p| husimi_flat(gs, p)),
                    None => {
                        let st = AnsatzState::even(&params)?;
                        Box::new(move |p| ansatz_husimi_flat(&st, p))
                    }
                };
                let mut body = String::new();
                for &a in &axis.points {
                    for &b in &axis.points {
                        let p = match args.slice {
                            SliceArg::Position => PhasePoint::new(a, 0.0, b, 0.0),
                            SliceArg::Momentum => PhasePoint::new(0.0, a, 0.0, b),
                        };
                        let row = [p.alpha1, p.alpha2, p.beta1, p.beta2, eval(&p)];
                        push_csv_row(&mut body, &row);
                    }
                }
                let n = axis.len();
                let meta = json!({ "a": axis_meta(&axis), "b": axis_meta(&axis) });
                (cols, body, (n, n), meta)
            }
            (GridWhat::Marginal1 | GridWhat::Marginal2, ChannelArg::Numeric) => {
                let (gs, _) = numeric_state.as_ref().expect("numeric channel");
                let m = husimi_measures(gs, &quad, &[2.0])?;
                let (grid, name) = match args.what {
                    GridWhat::Marginal1 => (&m.marginal1, "phi1"),
                    _ => (&m.marginal2, "phi2"),
                };
                let cols = vec!["a", "b", name];
                let body = marginal_csv(grid);
                let meta = json!({ "a": axis_meta(&grid.axis_a), "b": axis_meta(&grid.axis_b) });
                (cols, body, (grid.axis_a.len(), grid.axis_b.len()), meta)
            }
            (GridWhat::Marginal1 | GridWhat::Marginal2, ChannelArg::Variational) => {
                let st = AnsatzState::even(&params)?;
                let (pair, name) = match args.what {
                    GridWhat::Marginal1 => (MarginalPair::Position, "phi1"),
                    _ => (MarginalPair::Momentum, "phi2"),
                };
                let cols = vec!["a", "b", name];
                let mut body = String::new();
                for &a in &axis.points {
                    for &b in &axis.points {
                        push_csv_row(
                            &mut body,
                            &[a, b, analytic_marginal_husimi(&st, pair, a, b)],
                        );
                    }
                }
                let n = axis.len();
                let meta = json!({ "a": axis_meta(&axis), "b": axis_meta(&axis) });
                (cols, body, (n, n), meta)
            }
            (GridWhat::SmearedPosition | GridWhat::SmearedMomentum, ChannelArg::Variational) => {
                return Err(cfg_err(
                    "smeared grids need the state's Fock coefficients: use --channel numeric",
                ));
            }
            (GridWhat::SmearedPosition, ChannelArg::Numeric) => {
                let (gs, _) = numeric_state.as_ref().expect("numeric channel");
                let smeared = SmearedState::new(gs)?;
                let [xs, ys, _, _] = default_smearing_axes(gs)?;
                let values = smeared.position_grid(&xs.points, &ys.points);
                let cols = vec!["x", "y", "xi"];
                let mut body = String::new();
                for (i, &x) in xs.points.iter().enumerate() {
                    for (j, &y) in ys.points.iter().enumerate() {
                        push_csv_row(&mut body, &[x, y, values[[i, j]]]);
                    }
                }
                let meta = json!({ "a": axis_meta(&xs), "b": axis_meta(&ys) });
                (cols, body, (xs.len(), ys.len()), meta)
            }
            (GridWhat::SmearedMomentum, ChannelArg::Numeric) => {
                let (gs, _) = numeric_state.as_ref().expect("numeric channel");
                let smeared = SmearedState::new(gs)?;
                let [_, _, kxs, kys] = default_smearing_axes(gs)?;
                let values = smeared.momentum_grid(&kxs.points, &kys.points);
                let cols = vec!["kx", "ky", "xi_tilde"];
                let mut body = String::new();
                for (i, &kx) in kxs.points.iter().enumerate() {
                    for (j, &ky) in kys.points.iter().enumerate() {
                        push_csv_row(&mut body, &[kx, ky, values[[i, j]]]);
                    }
                }
                let meta = json!({ "a": axis_meta(&kxs), "b": axis_meta(&kys) });
                (cols, body, (kxs.len(), kys.len()), meta)
            }
        };

    let mut content = columns.join(",");
    content.push('\n');
    content.push_str(&csv);
    emit(Some(&args.out), &content)?;

    let channel = match args.channel {
        ChannelArg::Numeric => Channel::Numeric.name(),
        ChannelArg::Variational => Channel::Variational.name(),
    };
    let n_cut = numeric_state
        .as_ref()
        .map(|(_, nc)| json!(nc))
        .unwrap_or(serde_json::Value::Null);
    let what = args
        .what
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string();
    let meta = json!({
        "what": what,
        "channel": channel,
        "omega": cfg.omega,
        "omega0": cfg.omega0,
        "lambda": args.lambda,
        "two_j": cfg.two_j,
        "n_cut": n_cut,
        "columns": columns,
        "rows": shape.0 * shape.1,
        "shape": [shape.0, shape.1],
        "axes": axes_meta,
    });
    let sidecar = PathBuf::from(format!("{}.meta.json", args.out.display()));
    fs::write(
        &sidecar,
        format!("{}\n", serde_json::to_string_pretty(&meta)?),
    )?;
    eprintln!(
        "wrote {} ({} rows) and {}",
        args.out.display(),
        shape.0 * shape.1,
        sidecar.display()
    );
    Ok(())
}

fn push_csv_row(body: &mut String, vals: &[f64]) {
    let mut first = true;
    for &v in vals {
        if !first {
            body.push(',');
        }
        body.push_str(&fmt_f64(v));
        first = false;
    }
    body.push('\n');
}

fn marginal_csv(grid: &MarginalGrid) -> String {
    let mut body = String::new();
    for (i, &a) in grid.axis_a.points.iter().enumerate() {
        for (j, &b) in grid.axis_b.points.iter().enumerate() {
            push_csv_row(&mut body, &[a, b, grid.values[[i, j]]]);
        }
    }
    body
}

fn axis_meta(axis: &Axis1D) -> serde_json::Value {
    json!({
        "len": axis.len(),
        "lo": axis.points.first().copied(),
        "hi": axis.points.last().copied(),
    })
}
