//! C ABI over the simulation engines: opaque handles, integer status codes,
//! and a thread-local last-error message.
//!
//! Complex vectors cross the boundary as interleaved doubles
//! `[re0, im0, re1, im1, ...]` of length `2n`. Every function that can fail
//! returns a [`ClmStatus`]; `CLM_OK` is zero. Handles must be freed with
//! their matching `_free` function exactly once.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
#[cfg(test)]
use std::ptr;

use num_complex::Complex64;

use clm_core::analytics::energy_bounds;
use clm_core::dynamics::{integrate_rk4, Geometry};
use clm_core::error::CoreError;
use clm_core::lattice::{
    build_1d_gainloss, build_1d_nonreciprocal, build_2d_clm, HamiltonianMatrix, MassProfile,
};
use clm_core::response::{frequency_sweep, random_phase_drive, steady_state, DriveSpec};
use clm_core::spectral::{self, EigenDecomposition};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClmStatus {
    ClmOk = 0,
    ClmNullArgument = 1,
    ClmInvalidSpec = 2,
    ClmDimensionMismatch = 3,
    ClmNumericFailure = 4,
    ClmResonance = 5,
    ClmIo = 6,
    ClmPanic = 7,
}

/// Rainbow/funnel metrics of a frequency sweep.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ClmSweepMetrics {
    pub slope: f64,
    pub r2: f64,
    pub funnel_fraction: f64,
    pub correlation: f64,
}

/// Opaque lattice Hamiltonian handle.
pub struct ClmHamiltonian(HamiltonianMatrix);

/// Opaque eigendecomposition handle.
pub struct ClmEigen(EigenDecomposition);

/// Opaque evolution record handle.
pub struct ClmEvolution(clm_core::dynamics::EvolutionResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").expect("empty cstring"));
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("nul-free message");
    });
}

fn status_of(err: &CoreError) -> ClmStatus {
    match err {
        CoreError::InvalidSpec(_)
        | CoreError::NoField
        | CoreError::DegenerateDrift(_)
        | CoreError::UnknownKey(_)
        | CoreError::InvalidValue { .. }
        | CoreError::EmptyData(_)
        | CoreError::GridCoverage(_) => ClmStatus::ClmInvalidSpec,
        CoreError::DimensionMismatch { .. } => ClmStatus::ClmDimensionMismatch,
        CoreError::Resonance { .. } => ClmStatus::ClmResonance,
        CoreError::Io(_) | CoreError::Json(_) => ClmStatus::ClmIo,
        _ => ClmStatus::ClmNumericFailure,
    }
}

fn run_guarded<F: FnOnce() -> ClmStatus>(f: F) -> ClmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            ClmStatus::ClmPanic
        }
    }
}

fn fail(err: CoreError) -> ClmStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn null_arg(what: &str) -> ClmStatus {
    set_error(&format!("null argument: {what}"));
    ClmStatus::ClmNullArgument
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn clm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent error on this thread. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn clm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> ClmStatus {
    if out.is_null() {
        return null_arg("out");
    }
    *out = Box::into_raw(Box::new(value));
    ClmStatus::ClmOk
}

/// Builds the 2D lattice with onsite mass `B(y - ix)`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn clm_build_2d(
    lx: usize,
    ly: usize,
    tx: f64,
    ty: f64,
    b: f64,
    out: *mut *mut ClmHamiltonian,
) -> ClmStatus {
    run_guarded(|| match build_2d_clm(lx, ly, tx, ty, b) {
        Ok(h) => write_handle(out, ClmHamiltonian(h)),
        Err(e) => fail(e),
    })
}

/// Builds the 1D nonreciprocal chain; `random_mass != 0` draws the onsite
/// masses from the seeded uniform distribution instead of the linear ramp.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn clm_build_1d_nonreciprocal(
    n: usize,
    t: f64,
    b: f64,
    random_mass: i32,
    seed: u64,
    out: *mut *mut ClmHamiltonian,
) -> ClmStatus {
    run_guarded(|| {
        let mass = if random_mass != 0 {
            MassProfile::random_real(b, seed)
        } else {
            MassProfile::linear_real(b)
        };
        match build_1d_nonreciprocal(n, t, mass) {
            Ok(h) => write_handle(out, ClmHamiltonian(h)),
            Err(e) => fail(e),
        }
    })
}

/// Builds the 1D gain/loss chain (imaginary onsite mass).
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn clm_build_1d_gainloss(
    n: usize,
    t: f64,
    b: f64,
    random_mass: i32,
    seed: u64,
    out: *mut *mut ClmHamiltonian,
) -> ClmStatus {
    run_guarded(|| {
        let mass = if random_mass != 0 {
            MassProfile::random_imaginary(b, seed)
        } else {
            MassProfile::linear_imaginary(b)
        };
        match build_1d_gainloss(n, t, mass) {
            Ok(h) => write_handle(out, ClmHamiltonian(h)),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `h` must come from a `clm_build_*` call and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn clm_hamiltonian_free(h: *mut ClmHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Matrix dimension, or 0 for a null handle.
///
/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn clm_hamiltonian_dim(h: *const ClmHamiltonian) -> usize {
    if h.is_null() {
        return 0;
    }
    (*h).0.n()
}

/// Reads one matrix entry.
///
/// # Safety
/// Pointers must be valid; `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn clm_hamiltonian_entry(
    h: *const ClmHamiltonian,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> ClmStatus {
    run_guarded(|| {
        if h.is_null() {
            return null_arg("h");
        }
        if re.is_null() || im.is_null() {
            return null_arg("re/im");
        }
        let m = &(*h).0;
        if row >= m.n() || col >= m.n() {
            set_error(&format!("entry ({row}, {col}) outside {0} x {0}", m.n()));
            return ClmStatus::ClmDimensionMismatch;
        }
        let z = m.entry(row, col);
        *re = z.re;
        *im = z.im;
        ClmStatus::ClmOk
    })
}

/// ||H - H^dagger||_F, or -1.0 for a null handle.
///
/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn clm_hermiticity_defect(h: *const ClmHamiltonian) -> f64 {
    if h.is_null() {
        return -1.0;
    }
    (*h).0.hermiticity_defect()
}

/// Box half-widths bounding the mode-family energies for this model.
///
/// # Safety
/// Pointers must be valid; `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn clm_energy_bounds(
    h: *const ClmHamiltonian,
    re_max: *mut f64,
    im_max: *mut f64,
) -> ClmStatus {
    run_guarded(|| {
        if h.is_null() {
            return null_arg("h");
        }
        if re_max.is_null() || im_max.is_null() {
            return null_arg("re_max/im_max");
        }
        let b = energy_bounds((*h).0.model());
        *re_max = b.re_max;
        *im_max = b.im_max;
        ClmStatus::ClmOk
    })
}

unsafe fn slice_complex(v: *const f64, n: usize) -> Vec<Complex64> {
    let raw = std::slice::from_raw_parts(v, 2 * n);
    raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

unsafe fn write_complex(out: *mut f64, v: &[Complex64]) {
    let raw = std::slice::from_raw_parts_mut(out, 2 * v.len());
    for (i, z) in v.iter().enumerate() {
        raw[2 * i] = z.re;
        raw[2 * i + 1] = z.im;
    }
}

/// y = H v for interleaved complex buffers of length 2n.
///
/// # Safety
/// `v` and `out` must point to `2 * dim` doubles; `h` must be live.
#[no_mangle]
pub unsafe extern "C" fn clm_hamiltonian_apply(
    h: *const ClmHamiltonian,
    v: *const f64,
    out: *mut f64,
) -> ClmStatus {
    run_guarded(|| {
        if h.is_null() {
            return null_arg("h");
        }
        if v.is_null() || out.is_null() {
            return null_arg("v/out");
        }
        let ham = &(*h).0;
        let vin = slice_complex(v, ham.n());
        match ham.apply(&vin) {
            Ok(res) => {
                write_complex(out, &res);
                ClmStatus::ClmOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Full eigendecomposition; `tol` scales the QR deflation threshold (pass
/// 0 for the 1e-12 default).
///
/// # Safety
/// `h` must be live; `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn clm_eig(
    h: *const ClmHamiltonian,
    tol: f64,
    out: *mut *mut ClmEigen,
) -> ClmStatus {
    run_guarded(|| {
        if h.is_null() {
            return null_arg("h");
        }
        let tol = if tol > 0.0 { tol } else { spectral::DEFAULT_TOL };
        match spectral::eig((*h).0.matrix(), tol) {
            Ok(d) => write_handle(out, ClmEigen(d)),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `e` must come from `clm_eig` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn clm_eigen_free(e: *mut ClmEigen) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of eigenpairs, or 0 for a null handle.
///
/// # Safety
/// `e` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn clm_eigen_n(e: *const ClmEigen) -> usize {
    if e.is_null() {
        return 0;
    }
    (*e).0.n()
}

/// Copies the eigenvalues into `re`/`im` (each length n, sorted by (Re, Im)).
///
/// # Safety
/// Arrays must hold n doubles; `e` must be live.
#[no_mangle]
pub unsafe extern "C" fn clm_eigen_values(
    e: *const ClmEigen,
    re: *mut f64,
    im: *mut f64,
) -> ClmStatus {
    run_guarded(|| {
        if e.is_null() {
            return null_arg("e");
        }
        if re.is_null() || im.is_null() {
            return null_arg("re/im");
        }
        let d = &(*e).0;
        let res = std::slice::from_raw_parts_mut(re, d.n());
        let ims = std::slice::from_raw_parts_mut(im, d.n());
        for (i, v) in d.values.iter().enumerate() {
            res[i] = v.re;
            ims[i] = v.im;
        }
        ClmStatus::ClmOk
    })
}

/// Copies the eigenpair residuals ||H v - lambda v|| (length n).
///
/// # Safety
/// `out` must hold n doubles; `e` must be live.
#[no_mangle]
pub unsafe extern "C" fn clm_eigen_residuals(e: *const ClmEigen, out: *mut f64) -> ClmStatus {
    run_guarded(|| {
        if e.is_null() {
            return null_arg("e");
        }
        if out.is_null() {
            return null_arg("out");
        }
        let d = &(*e).0;
        std::slice::from_raw_parts_mut(out, d.n()).copy_from_slice(&d.residuals);
        ClmStatus::ClmOk
    })
}

/// Copies eigenvector k as interleaved doubles (length 2n, unit L2).
///
/// # Safety
/// `out` must hold 2n doubles; `e` must be live.
#[no_mangle]
pub unsafe extern "C" fn clm_eigen_vector(
    e: *const ClmEigen,
    k: usize,
    out: *mut f64,
) -> ClmStatus {
    run_guarded(|| {
        if e.is_null() {
            return null_arg("e");
        }
        if out.is_null() {
            return null_arg("out");
        }
        let d = &(*e).0;
        if k >= d.n() {
            set_error(&format!("eigenvector {k} out of range {}", d.n()));
            return ClmStatus::ClmDimensionMismatch;
        }
        write_complex(out, &d.vectors[k]);
        ClmStatus::ClmOk
    })
}

/// Per-state statistics: participation ratio and |psi|^2-weighted centered
/// positions (arrays of length n).
///
/// # Safety
/// Arrays must hold n doubles; handles must be live and match.
#[no_mangle]
pub unsafe extern "C" fn clm_eigen_stats(
    h: *const ClmHamiltonian,
    e: *const ClmEigen,
    pr: *mut f64,
    mean_x: *mut f64,
    mean_y: *mut f64,
) -> ClmStatus {
    run_guarded(|| {
        if h.is_null() || e.is_null() {
            return null_arg("h/e");
        }
        if pr.is_null() || mean_x.is_null() || mean_y.is_null() {
            return null_arg("pr/mean_x/mean_y");
        }
        match spectral::spectrum_table(&(*h).0, &(*e).0) {
            Ok(table) => {
                let prs = std::slice::from_raw_parts_mut(pr, table.len());
                let mxs = std::slice::from_raw_parts_mut(mean_x, table.len());
                let mys = std::slice::from_raw_parts_mut(mean_y, table.len());
                for (i, s) in table.iter().enumerate() {
                    prs[i] = s.pr;
                    mxs[i] = s.mean_x;
                    mys[i] = s.mean_y;
                }
                ClmStatus::ClmOk
            }
            Err(err) => fail(err),
        }
    })
}

/// Participation ratio of an interleaved complex vector; -1.0 on a zero or
/// null vector.
///
/// # Safety
/// `v` must hold 2n doubles or be null.
#[no_mangle]
pub unsafe extern "C" fn clm_participation_ratio(v: *const f64, n: usize) -> f64 {
    if v.is_null() {
        return -1.0;
    }
    let vec = slice_complex(v, n);
    spectral::participation_ratio(&vec).unwrap_or(-1.0)
}

/// Steady-state amplitudes |psi_j| under the seeded random-phase drive:
/// psi = kappa (omega I - H + i gamma I)^{-1} d.
///
/// # Safety
/// `amplitudes` must hold n doubles; `solve_residual` may be null.
#[no_mangle]
pub unsafe extern "C" fn clm_steady_state(
    h: *const ClmHamiltonian,
    omega: f64,
    kappa: f64,
    gamma: f64,
    seed: u64,
    amplitudes: *mut f64,
    solve_residual: *mut f64,
) -> ClmStatus {
    run_guarded(|| {
        if h.is_null() {
            return null_arg("h");
        }
        if amplitudes.is_null() {
            return null_arg("amplitudes");
        }
        let ham = &(*h).0;
        let drive = match DriveSpec::new(omega, kappa, seed, gamma) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let d = random_phase_drive(ham.n(), seed);
        match steady_state(ham, &drive, &d) {
            Ok(profile) => {
                std::slice::from_raw_parts_mut(amplitudes, ham.n())
                    .copy_from_slice(&profile.amplitudes);
                if !solve_residual.is_null() {
                    *solve_residual = profile.solve_residual;
                }
                ClmStatus::ClmOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Frequency sweep with one shared drive, reduced to trapping metrics.
/// `window_fraction` is the trailing-site share for the funnel count.
///
/// # Safety
/// `omegas` must hold `n_omega` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn clm_sweep_metrics(
    h: *const ClmHamiltonian,
    omegas: *const f64,
    n_omega: usize,
    kappa: f64,
    gamma: f64,
    seed: u64,
    window_fraction: f64,
    out: *mut ClmSweepMetrics,
) -> ClmStatus {
    run_guarded(|| {
        if h.is_null() {
            return null_arg("h");
        }
        if omegas.is_null() || out.is_null() {
            return null_arg("omegas/out");
        }
        let ham = &(*h).0;
        let grid = std::slice::from_raw_parts(omegas, n_omega);
        let sweep = match frequency_sweep(ham, grid, kappa, gamma, seed) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        match clm_core::response::sweep_metrics(&sweep, ham.n(), window_fraction) {
            Ok(m) => {
                *out = ClmSweepMetrics {
                    slope: m.rainbow_slope,
                    r2: m.rainbow_r2,
                    funnel_fraction: m.funnel_fraction,
                    correlation: m.peak_omega_correlation,
                };
                ClmStatus::ClmOk
            }
            Err(e) => fail(e),
        }
    })
}

/// RK4 evolution of an interleaved initial state under the lattice
/// Hamiltonian, recording moments every `record_every` steps.
///
/// # Safety
/// `psi0` must hold 2n doubles; `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn clm_evolve(
    h: *const ClmHamiltonian,
    psi0: *const f64,
    dt: f64,
    t_final: f64,
    record_every: usize,
    out: *mut *mut ClmEvolution,
) -> ClmStatus {
    run_guarded(|| {
        if h.is_null() {
            return null_arg("h");
        }
        if psi0.is_null() {
            return null_arg("psi0");
        }
        let ham = &(*h).0;
        let initial = slice_complex(psi0, ham.n());
        let geom = Geometry::from_indexer(ham.indexer());
        match integrate_rk4(ham, &initial, &geom, dt, t_final, record_every, false) {
            Ok(evo) => write_handle(out, ClmEvolution(evo)),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `e` must come from `clm_evolve` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn clm_evolution_free(e: *mut ClmEvolution) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of recorded samples.
///
/// # Safety
/// `e` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn clm_evolution_len(e: *const ClmEvolution) -> usize {
    if e.is_null() {
        return 0;
    }
    (*e).0.times.len()
}

/// Reads one recorded sample. Null output pointers are skipped.
///
/// # Safety
/// `e` must be live; non-null outputs must be valid doubles.
#[no_mangle]
pub unsafe extern "C" fn clm_evolution_row(
    e: *const ClmEvolution,
    i: usize,
    t: *mut f64,
    center_x: *mut f64,
    center_y: *mut f64,
    width_x: *mut f64,
    width_y: *mut f64,
    log_norm: *mut f64,
) -> ClmStatus {
    run_guarded(|| {
        if e.is_null() {
            return null_arg("e");
        }
        let evo = &(*e).0;
        if i >= evo.times.len() {
            set_error(&format!("sample {i} out of range {}", evo.times.len()));
            return ClmStatus::ClmDimensionMismatch;
        }
        if !t.is_null() {
            *t = evo.times[i];
        }
        if !center_x.is_null() {
            *center_x = evo.center[i].0;
        }
        if !center_y.is_null() {
            *center_y = evo.center[i].1;
        }
        if !width_x.is_null() {
            *width_x = evo.width[i].0;
        }
        if !width_y.is_null() {
            *width_y = evo.width[i].1;
        }
        if !log_norm.is_null() {
            *log_norm = evo.log_norm[i];
        }
        ClmStatus::ClmOk
    })
}
