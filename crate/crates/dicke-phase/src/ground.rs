//! Ground states: solving, cutoff convergence, disk caching, and the
//! configuration-space wavefunctions built from the coefficient matrix.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig::lowest_eigenpair;
use crate::error::Error;
use crate::model::EvenBlock;
use crate::params::{parity_sign, DickeParams};
use crate::special::hermite_functions;
use crate::Result;

/// Default eigensolver tolerance for production solves.
pub const DEFAULT_EIG_TOL: f64 = 1e-11;
/// Cutoff-convergence step: candidate cutoffs are multiples of this.
pub const CUTOFF_STEP: usize = 10;
/// Highest polynomial degree accepted by the wavefunction evaluators. The
/// orthonormal Hermite recurrence is stable far beyond any cutoff used here;
/// the guard catches nonsense inputs rather than a genuine stability limit.
pub const MAX_WAVEFUNCTION_DEGREE: usize = 100_000;

/// A converged ground state of the even parity block, stored as the full
/// coefficient matrix c[n][m_index] with the odd-parity slots exactly zero.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub params: DickeParams,
    /// Ground-state energy.
    pub energy: f64,
    /// Parity eigenvalue of the state (+1: the ground state is even).
    pub parity: i8,
    /// (n_cut+1) × (two_j+1) real coefficients, unit Euclidean norm,
    /// canonical sign (largest-magnitude entry positive).
    pub coeffs: Array2<f64>,
}

impl GroundState {
    /// Sum of squared coefficients with photon number above `n_keep`.
    pub fn tail_mass(&self, n_keep: usize) -> f64 {
        let mut t = 0.0;
        for n in (n_keep + 1)..=self.params.n_cut {
            for k in 0..=self.params.two_j as usize {
                t += self.coeffs[(n, k)].powi(2);
            }
        }
        t
    }

    /// Squared norm of the coefficient matrix.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Solve for the ground state at the given parameters.
pub fn ground_state(params: &DickeParams, tol: f64) -> Result<GroundState> {
    let block = EvenBlock::assemble(params)?;
    let (energy, vec) = lowest_eigenpair(&block, tol)?;
    let mut coeffs = Array2::zeros((params.n_cut + 1, params.two_j as usize + 1));
    for (state, c) in block.states.iter().zip(&vec) {
        coeffs[(state.n, state.m_index)] = *c;
    }
    Ok(GroundState {
        params: *params,
        energy,
        parity: 1,
        coeffs,
    })
}

/// One row of the cutoff-convergence audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffRow {
    pub n_cut: usize,
    pub energy: f64,
    /// |E₀(n_cut) − E₀(n_cut + step)|.
    pub energy_delta: f64,
    /// Occupation above n_cut in the (n_cut + step) solve.
    pub tail_mass: f64,
    pub accepted: bool,
}

/// Find the smallest cutoff on the grid {0, step, 2·step, …} at which both
/// the energy shift to the next grid point and the photon-number tail mass
/// drop below `tol`. Returns the audit rows, the chosen cutoff, and the
/// ground state solved at that cutoff.
pub fn converge_cutoff(
    params: &DickeParams,
    tol: f64,
    n_cut_max: usize,
) -> Result<(Vec<CutoffRow>, usize, GroundState)> {
    let mut rows = Vec::new();
    let mut gs_at: Option<GroundState> = None; // solution at current n_c
    let mut n_c = 0usize;
    loop {
        if n_c > n_cut_max {
            let last = rows.last();
            return Err(Error::CutoffNotConverged {
                n_cut_max,
                energy_delta: last.map_or(f64::INFINITY, |r: &CutoffRow| r.energy_delta),
                tail_mass: last.map_or(f64::INFINITY, |r| r.tail_mass),
                tol,
            });
        }
        let gs_small = match gs_at.take() {
            Some(g) => g,
            None => ground_state(&params.with_n_cut(n_c), DEFAULT_EIG_TOL)?,
        };
        let gs_big = ground_state(&params.with_n_cut(n_c + CUTOFF_STEP), DEFAULT_EIG_TOL)?;
        let energy_delta = (gs_small.energy - gs_big.energy).abs();
        let tail_mass = gs_big.tail_mass(n_c);
        let accepted = energy_delta < tol && tail_mass < tol;
        rows.push(CutoffRow {
            n_cut: n_c,
            energy: gs_small.energy,
            energy_delta,
            tail_mass,
            accepted,
        });
        if accepted {
            return Ok((rows, n_c, gs_small));
        }
        gs_at = Some(gs_big);
        n_c += CUTOFF_STEP;
    }
}

// ---------------------------------------------------------------------------
// Disk cache
// ---------------------------------------------------------------------------

/// Environment variable that supplies a cache directory when none is given.
pub const CACHE_DIR_ENV: &str = "DICKE_CACHE_DIR";
const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    omega: f64,
    omega0: f64,
    lambda: f64,
    two_j: u32,
    n_cut: usize,
    energy: f64,
    parity: i8,
    /// Row-major (n, m_index) coefficients, rendered with 17 significant
    /// digits so the round trip is bit-exact.
    coeffs: Vec<String>,
}

/// Canonical cache file name for a parameter set. Floats are rendered with
/// their shortest exact decimal form, so distinct parameters cannot collide.
pub fn cache_file_name(params: &DickeParams) -> String {
    format!(
        "gs-j{}-w{}-w0{}-lam{}-nc{}.json",
        params.two_j, params.omega, params.omega0, params.lambda, params.n_cut
    )
}

/// Serialize a ground state into `dir`, atomically (write temp + rename).
pub fn save_cache(gs: &GroundState, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let file = CacheFile {
        version: CACHE_VERSION,
        omega: gs.params.omega,
        omega0: gs.params.omega0,
        lambda: gs.params.lambda,
        two_j: gs.params.two_j,
        n_cut: gs.params.n_cut,
        energy: gs.energy,
        parity: gs.parity,
        coeffs: gs.coeffs.iter().map(|c| format!("{c:.16e}")).collect(),
    };
    let path = dir.join(cache_file_name(&gs.params));
    let tmp = dir.join(format!(
        "{}.tmp-{}",
        cache_file_name(&gs.params),
        std::process::id()
    ));
    std::fs::write(&tmp, serde_json::to_vec_pretty(&file)?)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Load a cached ground state if present. `Ok(None)` when no file exists;
/// a malformed or mismatched file is an error rather than silently ignored.
pub fn load_cache(params: &DickeParams, dir: &Path) -> Result<Option<GroundState>> {
    let path = dir.join(cache_file_name(params));
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mismatch = |reason: &str| Error::CacheMismatch {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let file: CacheFile =
        serde_json::from_slice(&bytes).map_err(|e| mismatch(&format!("invalid JSON: {e}")))?;
    if file.version != CACHE_VERSION {
        return Err(mismatch(&format!(
            "version {} != {}",
            file.version, CACHE_VERSION
        )));
    }
    if file.omega != params.omega
        || file.omega0 != params.omega0
        || file.lambda != params.lambda
        || file.two_j != params.two_j
        || file.n_cut != params.n_cut
    {
        return Err(mismatch("stored parameters differ from the request"));
    }
    let span = params.two_j as usize + 1;
    let expect_len = (params.n_cut + 1) * span;
    if file.coeffs.len() != expect_len {
        return Err(mismatch("coefficient count differs from the basis size"));
    }
    let mut coeffs = Array2::zeros((params.n_cut + 1, span));
    for (flat, s) in file.coeffs.iter().enumerate() {
        let v: f64 = s
            .parse()
            .map_err(|e| mismatch(&format!("bad coefficient {flat}: {e}")))?;
        coeffs[(flat / span, flat % span)] = v;
    }
    let gs = GroundState {
        params: *params,
        energy: file.energy,
        parity: file.parity,
        coeffs,
    };
    if (gs.norm_sq() - 1.0).abs() > 1e-10 {
        return Err(mismatch("coefficients are not normalized"));
    }
    for n in 0..=params.n_cut {
        for k in 0..span {
            if parity_sign(n, k) != gs.parity && gs.coeffs[(n, k)] != 0.0 {
                return Err(mismatch("nonzero coefficient outside the parity block"));
            }
        }
    }
    Ok(Some(gs))
}

/// Resolve the cache directory: an explicit argument wins, otherwise the
/// `DICKE_CACHE_DIR` environment variable, otherwise no caching.
pub fn resolve_cache_dir(explicit: Option<&Path>) -> Option<PathBuf> {
    match explicit {
        Some(d) => Some(d.to_path_buf()),
        None => std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from),
    }
}

/// Load from cache or solve and populate it.
pub fn load_or_compute(params: &DickeParams, tol: f64, dir: Option<&Path>) -> Result<GroundState> {
    let dir = resolve_cache_dir(dir);
    if let Some(d) = &dir {
        if let Some(gs) = load_cache(params, d)? {
            return Ok(gs);
        }
    }
    let gs = ground_state(params, tol)?;
    if let Some(d) = &dir {
        save_cache(&gs, d)?;
    }
    Ok(gs)
}

// ---------------------------------------------------------------------------
// Configuration-space wavefunctions
// ---------------------------------------------------------------------------

/// Which representation a wavefunction is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveSpace {
    Position,
    Momentum,
}

fn degree_guard(degree: usize) -> Result<()> {
    if degree > MAX_WAVEFUNCTION_DEGREE {
        return Err(Error::DegreeOverflow {
            degree,
            max: MAX_WAVEFUNCTION_DEGREE,
        });
    }
    Ok(())
}

/// Oscillator eigenfunction family u_n^{(ω)}(x) = ω^{1/4} ĥ_n(√ω x) for all
/// n ≤ n_max, evaluated through the orthonormal Hermite-function recurrence
/// (no overflowing factorials at any degree).
pub fn oscillator_functions(n_max: usize, omega: f64, x: f64) -> Result<Vec<f64>> {
    degree_guard(n_max)?;
    let mut h = hermite_functions(n_max, omega.sqrt() * x);
    let pref = omega.powf(0.25);
    for v in &mut h {
        *v *= pref;
    }
    Ok(h)
}

/// Position-space ground-state wavefunction
/// ψ(x, y) = Σ c_{nk} u_n^{(ω)}(x) u_k^{(ω₀)}(y); real for real coefficients.
pub fn wavefunction_position(gs: &GroundState, x: f64, y: f64) -> Result<f64> {
    let ux = oscillator_functions(gs.params.n_cut, gs.params.omega, x)?;
    let uy = oscillator_functions(gs.params.two_j as usize, gs.params.omega0, y)?;
    let mut acc = 0.0;
    for (n, &u) in ux.iter().enumerate() {
        let mut row = 0.0;
        for (k, &v) in uy.iter().enumerate() {
            row += gs.coeffs[(n, k)] * v;
        }
        acc += u * row;
    }
    Ok(acc)
}

/// Momentum-space wavefunction
/// ψ̃(p_x, p_y) = Σ c_{nk} (−i)^{n+k} ω^{−1/4} ĥ_n(p_x/√ω) ω₀^{−1/4} ĥ_k(p_y/√ω₀).
/// For an even-parity state every contributing (−i)^{n+k} is ±1, so the
/// result is real up to an exactly-zero imaginary part.
pub fn wavefunction_momentum(gs: &GroundState, px: f64, py: f64) -> Result<Complex64> {
    degree_guard(gs.params.n_cut)?;
    let omega = gs.params.omega;
    let omega0 = gs.params.omega0;
    let hx = hermite_functions(gs.params.n_cut, px / omega.sqrt());
    let hy = hermite_functions(gs.params.two_j as usize, py / omega0.sqrt());
    let pref = omega.powf(-0.25) * omega0.powf(-0.25);
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &hxn) in hx.iter().enumerate() {
        for (k, &hyk) in hy.iter().enumerate() {
            let c = gs.coeffs[(n, k)];
            if c == 0.0 {
                continue;
            }
            // (−i)^(n+k) cycles through 1, −i, −1, i.
            let phase = match (n + k) % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            };
            acc += phase * (c * hxn * hyk);
        }
    }
    Ok(pref * acc)
}
