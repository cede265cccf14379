//! Special functions and the explicit 2D layer-potential kernels: the free
//! outgoing Green function, the double-layer kernel, the single-layer kernel
//! with its log-singularity split, and the Ψ¹-Robin multiplier symbol.
//!
//! Conventions (all pinned by closed-form disk identities and covered by
//! tests):
//!
//! - Outgoing Hankel functions `H⁽¹⁾` throughout.
//! - The double-layer kernel uses the **outward** normal at its first
//!   (row/output) argument:
//!   `F(y,y') = −(iλ/2) H⁽¹⁾₁(λr) (ν_out(y)·(y−y'))/r`, whose circle
//!   Fourier multiplier is `F̂_m = 1 − iπλ J'_m(λ) H⁽¹⁾_m(λ)`, so that
//!   `F u = u` exactly at interior Neumann eigenvalues.
//! - Its diagonal limit on a smooth arc is `−κ(s)/(2π)` with κ the
//!   counterclockwise curvature.
//! - The single-layer kernel `E = 2G₀ = (i/2)H⁽¹⁾₀(λr)` is returned split
//!   against the periodic logarithm `ln(4 sin²(π(s−s')/L))` for
//!   spectrally-accurate product quadrature.

use crate::classical::Symbol;
use crate::geometry::BoundaryPoint;
use num_complex::Complex64;
use thiserror::Error;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.5772156649015328606;

/// Kernels are flagged near-diagonal when `λ·r` drops below this.
pub const NEAR_DIAGONAL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("wavenumber must be positive, got {0}")]
    InvalidWavenumber(f64),
    #[error("{family:?} is singular at x = 0")]
    BesselSingularity { family: BesselFamily },
    #[error("bessel argument must be nonnegative, got {x}")]
    NegativeArgument { x: f64 },
    #[error("Green function evaluated on its diagonal (r = 0)")]
    DiagonalSingularity,
    #[error("double-layer diagonal limit requested across a corner (arcs {0} and {1})")]
    CornerDiagonal(usize, usize),
    #[error("multiplier strength must be nonnegative, got {0}")]
    NegativeAlpha(f64),
}

/// Positive wavenumber `λ` with semiclassical parameter `h = 1/λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumber {
    lambda: f64,
}

impl Wavenumber {
    pub fn new(lambda: f64) -> Result<Wavenumber, KernelError> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Wavenumber { lambda })
        } else {
            Err(KernelError::InvalidWavenumber(lambda))
        }
    }

    pub fn lambda(self) -> f64 {
        self.lambda
    }

    pub fn h(self) -> f64 {
        1.0 / self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselFamily {
    J0,
    J1,
    Y0,
    Y1,
}

/// Bessel functions of order 0 and 1 (first and second kind), absolute
/// error ≤ 1e-13 for `x ≤ 10³`.
pub fn bessel(family: BesselFamily, x: f64) -> Result<f64, KernelError> {
    if x < 0.0 {
        return Err(KernelError::NegativeArgument { x });
    }
    match family {
        BesselFamily::J0 => Ok(libm::j0(x)),
        BesselFamily::J1 => Ok(libm::j1(x)),
        BesselFamily::Y0 => {
            if x == 0.0 {
                Err(KernelError::BesselSingularity { family })
            } else {
                Ok(libm::y0(x))
            }
        }
        BesselFamily::Y1 => {
            if x == 0.0 {
                Err(KernelError::BesselSingularity { family })
            } else {
                Ok(libm::y1(x))
            }
        }
    }
}

/// Outgoing Hankel function `H⁽¹⁾₀(x) = J₀(x) + iY₀(x)`, x > 0.
pub fn hankel1_0(x: f64) -> Complex64 {
    Complex64::new(libm::j0(x), libm::y0(x))
}

/// Outgoing Hankel function `H⁽¹⁾₁(x) = J₁(x) + iY₁(x)`, x > 0.
pub fn hankel1_1(x: f64) -> Complex64 {
    Complex64::new(libm::j1(x), libm::y1(x))
}

/// A kernel evaluation plus a flag marking near-diagonal arguments
/// (`λ·r < 1e-6`), where callers may prefer a limit formula.
#[derive(Debug, Clone, Copy)]
pub struct KernelValue {
    pub value: Complex64,
    pub near_diagonal: bool,
}

/// Free outgoing Green function `G₀(z,z') = (i/4) H⁽¹⁾₀(λ|z−z'|)`.
pub fn green0(k: Wavenumber, z: [f64; 2], zp: [f64; 2]) -> Result<KernelValue, KernelError> {
    let r = ((z[0] - zp[0]).powi(2) + (z[1] - zp[1]).powi(2)).sqrt();
    if r == 0.0 {
        return Err(KernelError::DiagonalSingularity);
    }
    let x = k.lambda() * r;
    Ok(KernelValue {
        value: Complex64::new(0.0, 0.25) * hankel1_0(x),
        near_diagonal: x < NEAR_DIAGONAL_THRESHOLD,
    })
}

/// Double-layer kernel
/// `F(y,y') = 2∂_{ν_in(y')}G₀ = (iλ/2) H⁽¹⁾₁(λr) (ν_out(y')·(y'−y))/r` for
/// `r > 0`, with the smooth-arc diagonal limit `+κ/(2π)`. Both the choice
/// of argument (the normal lives at the second, column/integration point)
/// and the inward orientation are forced by the Green representation
/// `u(z) = ∫ ∂_{ν_in(y)}G₀(z,y) u_b(y) dσ(y)` of an interior Neumann
/// eigenfunction: its boundary trace is `(F u_b + u_b)/2` by the jump
/// relations, so traces are exactly the null vectors of `I − F`. On the
/// unit circle the resulting Fourier multiplier is
/// `F̂_m = 1 − iπλ J'_m(λ) H⁽¹⁾_m(λ)` (Wronskian-checked), which vanishes
/// for `I − F` precisely at `J'_m(λ) = 0`. A diagonal request across two
/// different arcs is a corner and is rejected.
pub fn f_kernel(
    k: Wavenumber,
    y: &BoundaryPoint,
    yp: &BoundaryPoint,
) -> Result<KernelValue, KernelError> {
    let dx = yp.position[0] - y.position[0];
    let dy = yp.position[1] - y.position[1];
    let r = (dx * dx + dy * dy).sqrt();
    if r == 0.0 {
        if y.arc_id != yp.arc_id {
            return Err(KernelError::CornerDiagonal(y.arc_id, yp.arc_id));
        }
        return Ok(KernelValue {
            value: Complex64::new(y.curvature / (2.0 * std::f64::consts::PI), 0.0),
            near_diagonal: true,
        });
    }
    let nu_out = yp.normal_out();
    let dot = nu_out[0] * dx + nu_out[1] * dy;
    let x = k.lambda() * r;
    let value = Complex64::new(0.0, 0.5 * k.lambda()) * hankel1_1(x) * (dot / r);
    Ok(KernelValue {
        value,
        near_diagonal: x < NEAR_DIAGONAL_THRESHOLD,
    })
}

/// Single-layer kernel split against the periodic logarithm:
/// `E(y,y') = smooth + logcoef · ln(4 sin²(π(s−s')/L))`.
#[derive(Debug, Clone, Copy)]
pub struct EKernelSplit {
    pub smooth: Complex64,
    /// Coefficient of `ln(4 sin²(π(s−s')/L))`; equals `−J₀(λr)/(2π)`.
    pub logcoef: f64,
    pub near_diagonal: bool,
}

impl EKernelSplit {
    /// Recombine the split into the plain kernel value (r > 0 only).
    pub fn combine(&self, s: f64, sp: f64, length: f64) -> Complex64 {
        let arg = std::f64::consts::PI * (s - sp) / length;
        self.smooth + self.logcoef * (4.0 * arg.sin() * arg.sin()).ln()
    }
}

/// `Y₀(x) − (2/π)(ln(x/2)+γ)J₀(x)`, the part of Y₀ analytic at 0 (value 0
/// there).
fn y0_regular(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        libm::y0(x)
            - std::f64::consts::FRAC_2_PI * ((0.5 * x).ln() + EULER_GAMMA) * libm::j0(x)
    }
}

/// Single-layer kernel `E = 2G₀ = (i/2)H⁽¹⁾₀(λr)`, returned as a
/// (smooth, log-coefficient) pair against `ln(4 sin²(π(s−s')/L))`:
///
/// ```text
/// smooth  = (i/2)J₀(λr) − (1/π)(ln(λ/2)+γ)J₀(λr)
///           − (1/π)J₀(λr)·ln(r / (2|sin(π(s−s')/L)|)) − (1/2)Y₀reg(λr)
/// logcoef = −J₀(λr)/(2π)
/// ```
///
/// At the diagonal the smooth part has the finite limit
/// `i/2 − (1/π)(ln(λ/2)+γ) − (1/π)ln(L/(2π))` and `logcoef = −1/(2π)`.
pub fn e_kernel(k: Wavenumber, y: &BoundaryPoint, yp: &BoundaryPoint, length: f64) -> EKernelSplit {
    let lambda = k.lambda();
    let pi = std::f64::consts::PI;
    let dx = y.position[0] - yp.position[0];
    let dy = y.position[1] - yp.position[1];
    let r = (dx * dx + dy * dy).sqrt();
    let arg = pi * (y.s - yp.s) / length;
    let two_sin = 2.0 * arg.sin().abs();
    if r == 0.0 || two_sin == 0.0 {
        // Diagonal limit (also covers the periodic wrap s' = s ± L).
        let smooth_re = -((0.5 * lambda).ln() + EULER_GAMMA) / pi - (length / (2.0 * pi)).ln() / pi;
        return EKernelSplit {
            smooth: Complex64::new(smooth_re, 0.5),
            logcoef: -1.0 / (2.0 * pi),
            near_diagonal: true,
        };
    }
    let x = lambda * r;
    let j0 = libm::j0(x);
    let smooth_re = -((0.5 * lambda).ln() + EULER_GAMMA) / pi * j0 - j0 / pi * (r / two_sin).ln()
        - 0.5 * y0_regular(x);
    EKernelSplit {
        smooth: Complex64::new(smooth_re, 0.5 * j0),
        logcoef: -j0 / (2.0 * pi),
        near_diagonal: x < NEAR_DIAGONAL_THRESHOLD,
    }
}

/// The Ψ¹-Robin multiplier symbol `k(s,η) = α|η|` (α ≥ 0).
pub fn psi_robin_symbol(alpha: f64) -> Result<Symbol, KernelError> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(KernelError::NegativeAlpha(alpha));
    }
    Ok(Symbol::eta_abs(alpha))
}
