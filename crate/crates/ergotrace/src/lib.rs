//! **ergotrace** — a numerical laboratory for Laplace eigenvalues and
//! eigenfunction boundary traces on piecewise-smooth planar domains.
//!
//! The crate computes interior Helmholtz eigenvalues through boundary
//! integral operators (double layer `F`, single layer `E`), extracts the
//! associated boundary traces, normalizes them against the interior L² norm,
//! and then runs the statistical checks that connect those traces to the
//! classical billiard dynamics: local Weyl (Cesàro) averages against the
//! per-boundary-condition limit measures, quantum-variance contrast between
//! ergodic and integrable domains, symbol transport under one reflection
//! (Egorov-type residuals), the Rellich boundary identity, and truncated heat
//! traces.
//!
//! Module map:
//!
//! - [`geometry`]: domains as cycles of circle arcs and segments; frames,
//!   corners, ray intersection.
//! - [`billiard`]: the billiard map, its inverse, orbits, and the
//!   generating-function check on the coball bundle of the boundary.
//! - [`classical`]: symbols, limit measures and states `ω_B`, weighted
//!   transfer operators, ergodic averages, projections.
//! - [`kernels`]: Bessel/Hankel evaluations and the explicit layer-potential
//!   kernels with their diagonal limits and log-splits.
//! - [`grid`] / [`operators`]: Nyström grids (uniform or corner-graded) and
//!   dense assembled operators, including semiclassical quantization of
//!   boundary observables on uniform grids.
//! - [`eigensolve`]: eigenvalues as minima of the smallest singular value of
//!   a characteristic matrix, trace extraction, Weyl-count audits.
//! - [`field`]: interior field evaluation from boundary data and interior L²
//!   normalization (offset-core quadrature plus a boundary-shell Taylor
//!   expansion).
//! - [`qe`]: matrix elements, Cesàro averages, variances, Egorov residuals,
//!   Rellich and heat-trace checks, with CSV/JSON-ready reports.
//! - [`config`] / [`report`]: run configuration, deterministic manifests,
//!   and output emission.
//!
//! Conventions that hold crate-wide: boundaries are traversed
//! counterclockwise; the inward normal is the tangent rotated by +90°; all
//! lengths are dimensionless; the spectral parameter λ is the square root of
//! the Laplace eigenvalue and `h = 1/λ` is the semiclassical parameter.

pub mod billiard;
pub mod classical;
pub mod config;
pub mod eigensolve;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod guide;
pub mod kernels;
pub mod operators;
pub mod qe;
pub mod report;

/// Boundary-condition selector shared by the solver, the interior
/// normalization, and the statistical reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind {
    Neumann,
    /// Lowest singular values of `I + F*` locate Dirichlet eigenvalues; the
    /// trace stored for Dirichlet states is the (inward) normal derivative.
    Dirichlet,
    /// `∂_ν_in u = κ u` on the boundary with constant `κ > 0`.
    Robin { kappa: f64 },
    /// `∂_ν_in u = K u` with `K = α·(−Δ_Y)^{1/2}`, a Fourier multiplier of
    /// symbol `α|η|` after semiclassical scaling. Requires a uniform grid.
    PsiRobin { alpha: f64 },
}

impl BcKind {
    /// Stable label used in CSV/JSON output and CLI flags.
    pub fn label(&self) -> String {
        match self {
            BcKind::Neumann => "neumann".to_string(),
            BcKind::Dirichlet => "dirichlet".to_string(),
            BcKind::Robin { kappa } => format!("robin:{kappa}"),
            BcKind::PsiRobin { alpha } => format!("psirobin:{alpha}"),
        }
    }

    /// Parse a CLI-style label: `neumann | dirichlet | robin:κ | psirobin:α`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let lower = text.trim().to_ascii_lowercase();
        if lower == "neumann" {
            return Ok(BcKind::Neumann);
        }
        if lower == "dirichlet" {
            return Ok(BcKind::Dirichlet);
        }
        if let Some(rest) = lower.strip_prefix("robin:") {
            let kappa: f64 = rest
                .parse()
                .map_err(|_| format!("bad robin parameter {rest:?}"))?;
            if !(kappa >= 0.0) {
                return Err(format!("robin parameter must be >= 0, got {kappa}"));
            }
            return Ok(BcKind::Robin { kappa });
        }
        if let Some(rest) = lower.strip_prefix("psirobin:") {
            let alpha: f64 = rest
                .parse()
                .map_err(|_| format!("bad psirobin parameter {rest:?}"))?;
            if !(alpha >= 0.0) {
                return Err(format!("psirobin parameter must be >= 0, got {alpha}"));
            }
            return Ok(BcKind::PsiRobin { alpha });
        }
        Err(format!(
            "unknown boundary condition {text:?}; expected neumann, dirichlet, robin:<kappa>, or psirobin:<alpha>"
        ))
    }

    /// Sign of the boundary term in the two-term eigenvalue counting
    /// estimate `N(λ) ≈ Aλ²/4π + sign·Lλ/4π`: `+1` for Neumann/Robin, `-1`
    /// for Dirichlet, `0` for the Ψ¹-Robin family (used with a wide audit
    /// band).
    pub fn weyl_boundary_sign(&self) -> f64 {
        match self {
            BcKind::Neumann | BcKind::Robin { .. } => 1.0,
            BcKind::Dirichlet => -1.0,
            BcKind::PsiRobin { .. } => 0.0,
        }
    }

    /// Dirichlet matrix elements and norms carry a `λ^{-2}` scaling (the
    /// trace is a normal derivative, one power of λ per factor).
    pub fn row_scaling(&self, lambda: f64) -> f64 {
        match self {
            BcKind::Dirichlet => 1.0 / (lambda * lambda),
            _ => 1.0,
        }
    }

    /// The limit measure family on the coball bundle for this boundary
    /// condition.
    pub fn measure_kind(&self) -> classical::MeasureKind {
        match self {
            BcKind::Neumann => classical::MeasureKind::Neumann,
            BcKind::Dirichlet => classical::MeasureKind::Dirichlet,
            BcKind::Robin { .. } => classical::MeasureKind::Robin,
            BcKind::PsiRobin { alpha } => {
                classical::MeasureKind::PsiRobin(kernels::psi_robin_symbol(*alpha)
                    .expect("nonnegative alpha"))
            }
        }
    }
}
