//! Spectral-statistics harness.
//!
//! Everything here consumes the output of [`crate::eigensolve`] — interior
//! normalized boundary traces with a completeness audit — and produces the
//! quantitative checks: per-state matrix elements `ρ_j(A) = ⟨Op_{1/λ_j}(a) u_j^b, u_j^b⟩`
//! with running Cesàro averages against the classical target `ω_B(a)`,
//! windowed quantum-variance and boundary-norm statistics, operator-level
//! Egorov residuals against billiard-transported symbols, the Rellich
//! identity for Dirichlet traces, and truncated boundary heat traces against
//! their leading asymptotics.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::billiard::PhasePoint;
use crate::classical::{self, ClassicalError, Symbol, TransferKind};
use crate::eigensolve::{Eigenpair, EigensolveError, SpectrumResult};
use crate::geometry::Domain;
use crate::grid::{self, BoundaryGrid, GridError};
use crate::kernels;
use crate::operators::{self, OperatorError, OperatorKind};
use crate::BcKind;

#[derive(Debug, Error)]
pub enum QeError {
    #[error("completeness audit failed; refusing to average over a spectrum with gaps")]
    AuditFailed,
    #[error("spectrum validated up to λ = {have:.4} but the request needs λ = {need:.4}")]
    IncompleteSpectrum { need: f64, have: f64 },
    #[error("symbol `{name}` unusable here: {reason}")]
    BadSupport { name: String, reason: String },
    #[error("{op} requires Dirichlet traces, got {got}")]
    NotDirichlet { op: &'static str, got: String },
    #[error("heat mode {mode} does not apply to {got} traces")]
    HeatModeMismatch { mode: &'static str, got: String },
    #[error("heat time t = {t} is under the truncation guard 18.5/λ_max² = {min:.6}")]
    HeatTimeTooSmall { t: f64, min: f64 },
    #[error("report has no rows in the requested range")]
    EmptyReport,
    #[error("window `{label}` wants states {start}..={end} but the report has {len}")]
    BadWindow {
        label: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("state j = {j} has nonpositive boundary norm {norm_sq:.3e}")]
    DegenerateNorm { j: usize, norm_sq: f64 },
    #[error("traces have {got} nodes but the grid has {expect}")]
    GridMismatch { got: usize, expect: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Eigensolve(#[from] EigensolveError),
}

// ---------------------------------------------------------------------------
// Matrix-element report
// ---------------------------------------------------------------------------

/// One per-state row of a matrix-element report. Dirichlet rows carry the
/// λ_j⁻² scaling on both `rho` and `norm_sq` so that their ratio is
/// scale-free; all other boundary conditions use the raw weighted products.
#[derive(Debug, Clone)]
pub struct QeRow {
    /// 1-based index in λ order.
    pub j: usize,
    pub lambda: f64,
    /// Re ⟨Op_{1/λ}(a) u_b, u_b⟩ after per-condition row scaling.
    pub rho: f64,
    /// Imaginary residue of the same product (should vanish for Hermitian
    /// quantizations; kept as a diagnostic).
    pub rho_im: f64,
    /// Row-scaled squared boundary norm ⟨u_b, u_b⟩.
    pub norm_sq: f64,
    /// Running mean of `rho` over rows 1..=j.
    pub cesaro: f64,
    /// Running mean of |rho/norm_sq − ω(a)/ω(1)|² over rows 1..=j.
    pub variance: f64,
}

/// Matrix elements of one quantized observable against one spectral run,
/// λ-sorted, with the classical transport targets attached.
#[derive(Debug, Clone)]
pub struct QeReport {
    pub bc: BcKind,
    /// Display name of the observable.
    pub symbol: String,
    pub rows: Vec<QeRow>,
    /// Classical target ω_B(a) for this boundary condition's limit measure.
    pub omega_target: f64,
    /// ω_B(1), the same functional on the constant observable.
    pub omega_one: f64,
    /// Whether the spectral run's completeness audit passed.
    pub audit_passed: bool,
    /// Top of the λ range the scan actually covered.
    pub lambda_max: f64,
}

/// A contiguous block of states, 1-based and inclusive on both ends
/// ("states 26..=100").
#[derive(Debug, Clone)]
pub struct Window {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn new(label: &str, start: usize, end: usize) -> Window {
        Window {
            label: label.to_string(),
            start,
            end,
        }
    }
}

fn window_slice<'a>(rows: &'a [QeRow], w: &Window) -> Result<&'a [QeRow], QeError> {
    if w.start == 0 || w.start > w.end || w.end > rows.len() {
        return Err(QeError::BadWindow {
            label: w.label.clone(),
            start: w.start,
            end: w.end,
            len: rows.len(),
        });
    }
    Ok(&rows[w.start - 1..w.end])
}

/// Per-state products ⟨Op_{1/λ_j}(a) u_j^b, u_j^b⟩ over a spectral run.
///
/// The semiclassical parameter is tied to the state (`h_j = 1/λ_j`), so each
/// row quantizes the observable afresh at its own wavenumber. Dirichlet rows
/// are λ_j⁻²-scaled. The grid must be the one the run solved on (same node
/// count); η-dependent observables on corner-graded grids are rejected by
/// the quantizer.
pub fn matrix_elements(
    grid: &BoundaryGrid,
    spectrum: &SpectrumResult,
    a: &Symbol,
) -> Result<QeReport, QeError> {
    if spectrum.grid_n != grid.len() {
        return Err(QeError::GridMismatch {
            got: spectrum.grid_n,
            expect: grid.len(),
        });
    }
    let domain = grid.domain();
    let kind = spectrum.bc.measure_kind();
    let omega_target = classical::omega(&kind, a, domain).re;
    let omega_one = classical::omega(&kind, &Symbol::one(), domain).re;
    let ratio = omega_target / omega_one;

    let mut pairs: Vec<&Eigenpair> = spectrum.pairs.iter().collect();
    pairs.sort_by(|x, y| {
        x.lambda
            .partial_cmp(&y.lambda)
            .unwrap()
            .then(x.cluster_index.cmp(&y.cluster_index))
    });

    let mut rows = Vec::with_capacity(pairs.len());
    let mut rho_sum = 0.0;
    let mut var_sum = 0.0;
    for (idx, pair) in pairs.iter().enumerate() {
        if pair.trace.len() != grid.len() {
            return Err(QeError::GridMismatch {
                got: pair.trace.len(),
                expect: grid.len(),
            });
        }
        let op = operators::quantize(a, pair.lambda, grid)?;
        let raw = operators::matrix_element(&op, grid, &pair.trace, &pair.trace)?;
        let scale = spectrum.bc.row_scaling(pair.lambda);
        let norm_sq = scale * grid.inner(&pair.trace, &pair.trace).re;
        let j = idx + 1;
        if norm_sq <= 0.0 {
            return Err(QeError::DegenerateNorm { j, norm_sq });
        }
        let rho = scale * raw.re;
        rho_sum += rho;
        let dev = rho / norm_sq - ratio;
        var_sum += dev * dev;
        rows.push(QeRow {
            j,
            lambda: pair.lambda,
            rho,
            rho_im: scale * raw.im,
            norm_sq,
            cesaro: rho_sum / j as f64,
            variance: var_sum / j as f64,
        });
    }

    let lambda_max = spectrum
        .scan
        .lambdas
        .last()
        .copied()
        .or_else(|| rows.last().map(|r| r.lambda))
        .unwrap_or(0.0);
    Ok(QeReport {
        bc: spectrum.bc.clone(),
        symbol: a.name.clone(),
        rows,
        omega_target,
        omega_one,
        audit_passed: spectrum.audit.passed,
        lambda_max,
    })
}

// ---------------------------------------------------------------------------
// Cesàro averages, variance, norm statistics
// ---------------------------------------------------------------------------

/// Cesàro average of the matrix-element rows below a λ cutoff, next to its
/// classical target.
#[derive(Debug, Clone)]
pub struct WeylAverage {
    pub lambda_cut: f64,
    pub count: usize,
    pub average: f64,
    pub target: f64,
}

/// Mean of `rho` over all states with λ_j ≤ λ_cut. Refuses when the
/// completeness audit failed (an undercounted spectrum biases the mean) or
/// when the cutoff exceeds the validated scan range.
pub fn weyl_average(report: &QeReport, lambda_cut: f64) -> Result<WeylAverage, QeError> {
    if !report.audit_passed {
        return Err(QeError::AuditFailed);
    }
    if lambda_cut > report.lambda_max + 1e-9 {
        return Err(QeError::IncompleteSpectrum {
            need: lambda_cut,
            have: report.lambda_max,
        });
    }
    let included: Vec<&QeRow> = report
        .rows
        .iter()
        .filter(|r| r.lambda <= lambda_cut + 1e-12)
        .collect();
    if included.is_empty() {
        return Err(QeError::EmptyReport);
    }
    let count = included.len();
    let average = included.iter().map(|r| r.rho).sum::<f64>() / count as f64;
    Ok(WeylAverage {
        lambda_cut,
        count,
        average,
        target: report.omega_target,
    })
}

/// Windowed quantum variance, in both guises.
#[derive(Debug, Clone)]
pub struct VarianceWindow {
    pub label: String,
    pub start: usize,
    pub end: usize,
    pub count: usize,
    /// Mean |rho_j/norm_sq_j − ω(a)/ω(1)|² — variance of the normalized
    /// per-state averages about the classical ratio.
    pub normalized: f64,
    /// Mean |rho_j − (ω(a)/ω(1))·norm_sq_j|² — the raw deviation form.
    pub unnormalized: f64,
}

/// Mean-square deviation of the per-state averages from the classical ratio,
/// per window. The normalized form divides out each state's boundary mass
/// (otherwise normalization noise dominates); the raw form is reported
/// alongside.
pub fn qe_variance(report: &QeReport, windows: &[Window]) -> Result<Vec<VarianceWindow>, QeError> {
    let ratio = report.omega_target / report.omega_one;
    let mut out = Vec::with_capacity(windows.len());
    for w in windows {
        let rows = window_slice(&report.rows, w)?;
        let mut norm_acc = 0.0;
        let mut raw_acc = 0.0;
        for r in rows {
            if r.norm_sq <= 0.0 {
                return Err(QeError::DegenerateNorm {
                    j: r.j,
                    norm_sq: r.norm_sq,
                });
            }
            let dn = r.rho / r.norm_sq - ratio;
            let dr = r.rho - ratio * r.norm_sq;
            norm_acc += dn * dn;
            raw_acc += dr * dr;
        }
        let count = rows.len();
        out.push(VarianceWindow {
            label: w.label.clone(),
            start: w.start,
            end: w.end,
            count,
            normalized: norm_acc / count as f64,
            unnormalized: raw_acc / count as f64,
        });
    }
    Ok(out)
}

/// Windowed mean of the squared boundary norms with its standard error.
#[derive(Debug, Clone)]
pub struct NormWindow {
    pub label: String,
    pub start: usize,
    pub end: usize,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation of the window divided by √count.
    pub std_error: f64,
}

/// Windowed means of `norm_sq` (row-scaled boundary mass per state). With
/// the constant observable these coincide with [`weyl_average`] over the
/// same states, which is the consistency cross-check the tests pin.
pub fn norm_limit(report: &QeReport, windows: &[Window]) -> Result<Vec<NormWindow>, QeError> {
    let mut out = Vec::with_capacity(windows.len());
    for w in windows {
        let rows = window_slice(&report.rows, w)?;
        let count = rows.len();
        let mean = rows.iter().map(|r| r.norm_sq).sum::<f64>() / count as f64;
        let std_error = if count > 1 {
            let ss = rows
                .iter()
                .map(|r| (r.norm_sq - mean) * (r.norm_sq - mean))
                .sum::<f64>();
            (ss / (count - 1) as f64).sqrt() / (count as f64).sqrt()
        } else {
            0.0
        };
        out.push(NormWindow {
            label: w.label.clone(),
            start: w.start,
            end: w.end,
            count,
            mean,
            std_error,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Egorov residuals
// ---------------------------------------------------------------------------

/// Operator-level transport defect at one wavenumber.
#[derive(Debug, Clone)]
pub struct EgorovPoint {
    pub lambda: f64,
    /// max over the test batch of ‖(P*Op(a)P − Op(ã))v‖ / ‖v‖.
    pub residual: f64,
    /// Fraction of phase-space samples whose billiard step died at a corner
    /// or tangentially (those samples contribute 0 to the transported
    /// symbol, exact when the observable vanishes near the singular set).
    pub corner_fraction: f64,
    pub grid_n: usize,
}

fn propagator_kind(bc: &BcKind) -> OperatorKind {
    match bc {
        BcKind::Neumann => OperatorKind::F,
        BcKind::Dirichlet => OperatorKind::Fstar,
        BcKind::Robin { kappa } => OperatorKind::Robin { kappa: *kappa },
        BcKind::PsiRobin { alpha } => OperatorKind::PsiRobin { alpha: *alpha },
    }
}

fn transfer_kind(bc: &BcKind) -> TransferKind {
    match bc {
        // The one-step sandwich P* Op(a) P pulls the observable forward
        // along the billiard map for the double-layer propagator…
        BcKind::Neumann | BcKind::Robin { .. } => TransferKind::T,
        // …and backward for its adjoint, with the reciprocal weight.
        BcKind::Dirichlet => TransferKind::Tstar,
        BcKind::PsiRobin { alpha } => TransferKind::PsiRobinWeight(
            kernels::psi_robin_symbol(*alpha).expect("nonnegative alpha"),
        ),
    }
}

/// Adjoint with respect to the weighted grid inner product; coincides with
/// the plain conjugate transpose on uniform grids.
fn weighted_adjoint(m: &Array2<Complex64>, grid: &BoundaryGrid) -> Array2<Complex64> {
    let n = grid.len();
    let w = grid.weights();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = m[[j, i]].conj() * (w[j] / w[i]);
        }
    }
    out
}

fn check_support(domain: &Domain, a: &Symbol) -> Result<f64, QeError> {
    let eta_max = a.eta_max.ok_or_else(|| QeError::BadSupport {
        name: a.name.clone(),
        reason: "transport needs a declared band limit (eta_max) at or below 0.9".to_string(),
    })?;
    if !(eta_max <= 0.9) {
        return Err(QeError::BadSupport {
            name: a.name.clone(),
            reason: format!("band limit {eta_max} exceeds 0.9"),
        });
    }
    if !domain.corners().is_empty() {
        // The transported symbol is set to 0 wherever the billiard step dies
        // at a corner; that is only exact when the observable itself
        // vanishes near the singular set, so sample a neighborhood of every
        // corner and insist on (numerical) zero there.
        let delta = domain.length() / 64.0;
        for &sc in domain.corners() {
            for k in 0..9 {
                let s = domain.wrap_s(sc + delta * (k as f64 - 4.0) / 4.0);
                for &eta in &[-0.85f64, -0.5, -0.15, 0.15, 0.5, 0.85] {
                    if eta.abs() < eta_max && a.eval(s, eta).norm() > 1e-10 {
                        return Err(QeError::BadSupport {
                            name: a.name.clone(),
                            reason: format!(
                                "does not vanish near the corner at s = {sc:.6} \
                                 (|a({s:.6}, {eta})| = {:.3e})",
                                a.eval(s, eta).norm()
                            ),
                        });
                    }
                }
            }
        }
    }
    Ok(eta_max)
}

/// Band-limited pseudorandom test vectors: uniform complex Fourier
/// coefficients on the modes with |η_m| ≤ 0.9 at this wavenumber, zero
/// beyond, synthesized by inverse FFT.
fn test_batch(n: usize, lambda: f64, length: f64, seed: u64, count: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut c: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        for (k, ck) in c.iter_mut().enumerate() {
            let m = if k < n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            let eta = 2.0 * std::f64::consts::PI * m / (lambda * length);
            if eta.abs() > 0.9 {
                *ck = Complex64::new(0.0, 0.0);
            }
        }
        ifft.process(&mut c);
        out.push(c);
    }
    out
}

/// Worst-case relative defect of the one-step transport identity
/// `P* Op(a) P ≈ Op(ã)` at each requested wavenumber, with `ã` built by
/// composing the billiard map with the boundary-condition weight. The
/// residual is measured on a fixed seeded batch of 20 band-limited vectors;
/// phase-space samples whose step dies at a corner are excluded from the
/// transported symbol and their fraction reported.
pub fn egorov_residual(
    domain: &Arc<Domain>,
    bc: &BcKind,
    a: &Symbol,
    lambdas: &[f64],
    ppw: f64,
    seed: u64,
) -> Result<Vec<EgorovPoint>, QeError> {
    check_support(domain, a)?;
    let transfer = transfer_kind(bc);
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let grid = grid::make_grid_with_max(domain, ppw, lambda, grid::DEFAULT_N_MAX)?;
        let n = grid.len();

        let hits = Arc::new(AtomicUsize::new(0));
        let samples = Arc::new(AtomicUsize::new(0));
        let a_inner = a.clone();
        let dom_inner = domain.clone();
        let transfer_inner = transfer.clone();
        let hits_c = hits.clone();
        let samples_c = samples.clone();
        let a_tilde = Symbol::from_fn(
            &format!("transport({})", a.name),
            a.eta_max,
            move |s, eta| {
                // Quantization grids sample |η| well past 1; outside the
                // bundle the band-limited observable and its transport both
                // vanish identically.
                if eta.abs() >= 0.999 {
                    return Complex64::new(0.0, 0.0);
                }
                samples_c.fetch_add(1, Ordering::Relaxed);
                match classical::transfer_apply(
                    &transfer_inner,
                    &a_inner,
                    &dom_inner,
                    PhasePoint::new(s, eta),
                ) {
                    Ok(tv) => {
                        if tv.corner {
                            hits_c.fetch_add(1, Ordering::Relaxed);
                        }
                        tv.value
                    }
                    Err(_) => {
                        hits_c.fetch_add(1, Ordering::Relaxed);
                        Complex64::new(0.0, 0.0)
                    }
                }
            },
        );

        let p = operators::assemble(propagator_kind(bc), lambda, &grid)?;
        let op_a = operators::quantize(a, lambda, &grid)?;
        let op_tilde = operators::quantize(&a_tilde, lambda, &grid)?;
        let p_adj = weighted_adjoint(&p.entries, &grid);
        let mut d = p_adj.dot(&op_a.entries.dot(&p.entries));
        d -= &op_tilde.entries;

        let mut residual = 0.0f64;
        for v in test_batch(n, lambda, domain.length(), seed, 20) {
            let vn = grid.norm(&v);
            if vn == 0.0 {
                continue;
            }
            let dv = d.dot(&ndarray::ArrayView1::from(&v[..]));
            residual = residual.max(grid.norm(dv.as_slice().unwrap()) / vn);
        }

        let total = samples.load(Ordering::Relaxed);
        let dead = hits.load(Ordering::Relaxed);
        out.push(EgorovPoint {
            lambda,
            residual,
            corner_fraction: if total == 0 {
                0.0
            } else {
                dead as f64 / total as f64
            },
            grid_n: n,
        });
    }
    Ok(out)
}

/// Least-squares slope of log residual against log λ; `None` with fewer
/// than two positive residuals (an identically-zero observable has nothing
/// to fit).
pub fn fit_log_slope(points: &[EgorovPoint]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.residual > 0.0 && p.lambda > 0.0)
        .map(|p| (p.lambda.ln(), p.residual.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

// ---------------------------------------------------------------------------
// Rellich identity
// ---------------------------------------------------------------------------

/// Per-state Rellich defect for a Dirichlet trace.
#[derive(Debug, Clone)]
pub struct RellichRow {
    pub j: usize,
    pub lambda: f64,
    /// ∫ (x·ν) |u^b|² dσ with x measured from the centroid, ν outward.
    pub boundary_integral: f64,
    /// |2λ² − ∫(x·ν)|u^b|²| / (2λ²).
    pub rel_error: f64,
    /// λ⁻²‖u^b‖², which the identity brackets by 2/max(x·ν) and 2/min(x·ν).
    pub norm_ratio: f64,
    pub norm_bound_ok: bool,
}

/// Rellich report over a Dirichlet run, with the boundary's x·ν range.
#[derive(Debug, Clone)]
pub struct RellichReport {
    pub rows: Vec<RellichRow>,
    pub min_xnu: f64,
    pub max_xnu: f64,
}

/// Checks `2λ_j² = ∫ (x·ν) |u_j^b|² dσ` per state for interior-normalized
/// Dirichlet traces, with the origin at the centroid and ν outward (on the
/// unit disk x·ν ≡ 1 and the identity is exact). Each row also carries the
/// derived norm sanity bound `2/max(x·ν) ≤ λ⁻²‖u^b‖² ≤ 2/min(x·ν)`
/// (checked with 5% quadrature slack).
pub fn rellich_check(grid: &BoundaryGrid, pairs: &[Eigenpair]) -> Result<RellichReport, QeError> {
    let domain = grid.domain();
    let c = domain.centroid();
    let w = grid.weights();
    let xnu: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|p| {
            let nu = p.normal_out();
            (p.position[0] - c[0]) * nu[0] + (p.position[1] - c[1]) * nu[1]
        })
        .collect();
    let min_xnu = xnu.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_xnu = xnu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut sorted: Vec<&Eigenpair> = pairs.iter().collect();
    sorted.sort_by(|x, y| {
        x.lambda
            .partial_cmp(&y.lambda)
            .unwrap()
            .then(x.cluster_index.cmp(&y.cluster_index))
    });

    let mut rows = Vec::with_capacity(sorted.len());
    for (idx, pair) in sorted.iter().enumerate() {
        if pair.bc != BcKind::Dirichlet {
            return Err(QeError::NotDirichlet {
                op: "rellich_check",
                got: pair.bc.label(),
            });
        }
        if pair.trace.len() != grid.len() {
            return Err(QeError::GridMismatch {
                got: pair.trace.len(),
                expect: grid.len(),
            });
        }
        let integral: f64 = pair
            .trace
            .iter()
            .zip(&xnu)
            .zip(w)
            .map(|((v, &q), &wi)| wi * q * v.norm_sqr())
            .sum();
        let target = 2.0 * pair.lambda * pair.lambda;
        let norm_ratio = grid.inner(&pair.trace, &pair.trace).re / (pair.lambda * pair.lambda);
        let norm_bound_ok = min_xnu > 0.0
            && norm_ratio <= (2.0 / min_xnu) * 1.05
            && norm_ratio >= (2.0 / max_xnu) * 0.95;
        rows.push(RellichRow {
            j: idx + 1,
            lambda: pair.lambda,
            boundary_integral: integral,
            rel_error: (target - integral).abs() / target,
            norm_ratio,
            norm_bound_ok,
        });
    }
    Ok(RellichReport {
        rows,
        min_xnu,
        max_xnu,
    })
}

// ---------------------------------------------------------------------------
// Heat traces
// ---------------------------------------------------------------------------

/// Which boundary heat identity to compare against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatMode {
    /// Σ e^{−tλ²} ⟨φ u^b, u^b⟩ against (1/2πt)·∫φ dσ, for trace-type
    /// conditions (Neumann, Robin, Ψ¹-Robin). The λ = 0 constant mode is
    /// added analytically where the condition admits one.
    Boundary,
    /// Σ e^{−tλ²} ⟨φ v, v⟩ with the *unscaled* Dirichlet normal-derivative
    /// data against (1/4πt²)·∫φ dσ.
    DirichletTilde,
}

impl HeatMode {
    fn name(&self) -> &'static str {
        match self {
            HeatMode::Boundary => "boundary",
            HeatMode::DirichletTilde => "dirichlet-tilde",
        }
    }
}

/// One truncated heat sum next to its leading asymptotic.
#[derive(Debug, Clone)]
pub struct HeatRow {
    pub t: f64,
    pub trace: f64,
    pub target: f64,
    pub ratio: f64,
    /// States included in the truncated sum (analytic zero mode included).
    pub count: usize,
}

/// Truncated boundary heat traces at the requested times. Refuses times
/// under `18.5/λ_max²` (the tail the scan never saw would matter) and runs
/// whose completeness audit failed. `phi` is an s-only multiplication
/// observable; `None` means φ ≡ 1.
pub fn heat_trace(
    grid: &BoundaryGrid,
    spectrum: &SpectrumResult,
    t_list: &[f64],
    mode: HeatMode,
    phi: Option<&Symbol>,
) -> Result<Vec<HeatRow>, QeError> {
    match (mode, &spectrum.bc) {
        (HeatMode::DirichletTilde, BcKind::Dirichlet) => {}
        (HeatMode::Boundary, BcKind::Dirichlet) | (HeatMode::DirichletTilde, _) => {
            return Err(QeError::HeatModeMismatch {
                mode: mode.name(),
                got: spectrum.bc.label(),
            });
        }
        (HeatMode::Boundary, _) => {}
    }
    if !spectrum.audit.passed {
        return Err(QeError::AuditFailed);
    }
    if spectrum.grid_n != grid.len() {
        return Err(QeError::GridMismatch {
            got: spectrum.grid_n,
            expect: grid.len(),
        });
    }
    let lambda_max = spectrum
        .scan
        .lambdas
        .last()
        .copied()
        .or_else(|| spectrum.pairs.iter().map(|p| p.lambda).fold(None, |m, l| Some(m.map_or(l, |v: f64| v.max(l)))))
        .ok_or(QeError::EmptyReport)?;
    let t_min = 18.5 / (lambda_max * lambda_max);

    let domain = grid.domain();
    let w = grid.weights();
    let phi_vals: Vec<f64> = match phi {
        Some(sym) => grid.nodes().iter().map(|p| sym.eval(p.s, 0.0).re).collect(),
        None => vec![1.0; grid.len()],
    };
    let phi_integral: f64 = w.iter().zip(&phi_vals).map(|(&wi, &f)| wi * f).sum();

    // Per-state weighted boundary mass ⟨φ u, u⟩ (computed once, reused per t).
    let mut masses: Vec<(f64, f64)> = Vec::with_capacity(spectrum.pairs.len() + 1);
    if mode == HeatMode::Boundary
        && matches!(spectrum.bc, BcKind::Neumann | BcKind::PsiRobin { .. })
    {
        // The constant interior mode at λ = 0 has trace ≡ A^{-1/2}, below
        // every scan range; add its row analytically.
        masses.push((0.0, phi_integral / domain.area()));
    }
    for pair in &spectrum.pairs {
        if pair.trace.len() != grid.len() {
            return Err(QeError::GridMismatch {
                got: pair.trace.len(),
                expect: grid.len(),
            });
        }
        let m: f64 = pair
            .trace
            .iter()
            .zip(&phi_vals)
            .zip(w)
            .map(|((v, &f), &wi)| wi * f * v.norm_sqr())
            .sum();
        masses.push((pair.lambda, m));
    }
    let count = masses.len();

    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        if t < t_min {
            return Err(QeError::HeatTimeTooSmall { t, min: t_min });
        }
        let trace: f64 = masses
            .iter()
            .map(|&(l, m)| (-t * l * l).exp() * m)
            .sum();
        let target = match mode {
            HeatMode::Boundary => phi_integral / (2.0 * std::f64::consts::PI * t),
            HeatMode::DirichletTilde => {
                phi_integral / (4.0 * std::f64::consts::PI * t * t)
            }
        };
        out.push(HeatRow {
            t,
            trace,
            target,
            ratio: trace / target,
            count,
        });
    }
    Ok(out)
}
