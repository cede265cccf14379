//! Dense Nyström matrices for the boundary operators: the double layer `F`,
//! its weighted adjoint `F*`, the single layer `E` (Kress log-split
//! product quadrature), the Robin and Ψ¹-Robin combinations, and the
//! Kohn–Nirenberg quantization `Op_h(a)` of boundary observables.
//!
//! Matrix conventions: entries act on plain node samples, `(Au)_i = Σ_j
//! A_ij u_j`; quadrature weights are folded into the entries. The weighted
//! inner product is `⟨u,v⟩ = Σ_i w_i u_i conj(v_i)`, and `F*` is the
//! adjoint of `F` with respect to it.

use crate::classical::Symbol;
use crate::grid::{kress_log_weights, BoundaryGrid};
use crate::kernels::{self, KernelError, Wavenumber};
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::io::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("operator {0} requires a globally uniform grid (corner-free domain)")]
    NonUniformGrid(&'static str),
    #[error("quantization of an eta-dependent symbol {0:?} requires a uniform grid")]
    EtaSymbolOnPolygon(String),
    #[error("vector length {got} does not match grid size {expect}")]
    LengthMismatch { got: usize, expect: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("matrix dump failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    F,
    E,
    Fstar,
    Robin { kappa: f64 },
    PsiRobin { alpha: f64 },
    Quantized { symbol: String },
}

/// A dense boundary-operator matrix tied to a wavenumber and a grid size.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: Array2<Complex64>,
    pub lambda: f64,
    pub kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>, OperatorError> {
        if u.len() != self.n() {
            return Err(OperatorError::LengthMismatch {
                got: u.len(),
                expect: self.n(),
            });
        }
        let uv = ndarray::ArrayView1::from(u);
        Ok(self.entries.dot(&uv).to_vec())
    }

    /// Binary dump: row-major, little-endian f64 pairs (re, im).
    pub fn dump(&self, path: &std::path::Path) -> Result<(), OperatorError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in self.entries.iter() {
            file.write_all(&v.re.to_le_bytes())?;
            file.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Assemble the double layer `F` by plain Nyström quadrature (the kernel is
/// continuous on smooth arcs; the diagonal uses the curvature limit).
fn assemble_f(k: Wavenumber, grid: &BoundaryGrid) -> Result<Array2<Complex64>, OperatorError> {
    let n = grid.len();
    let w = grid.weights();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        let yi = grid.node(i);
        for j in 0..n {
            let val = kernels::f_kernel(k, yi, grid.node(j))?.value;
            m[[i, j]] = val * w[j];
        }
    }
    Ok(m)
}

/// Assemble the single layer `E` with spectrally-accurate product
/// quadrature for the periodic log singularity (uniform grids only).
fn assemble_e(k: Wavenumber, grid: &BoundaryGrid) -> Result<Array2<Complex64>, OperatorError> {
    if !grid.is_uniform() {
        return Err(OperatorError::NonUniformGrid("E"));
    }
    let n = grid.len();
    let length = grid.domain().length();
    let trapz = length / n as f64;
    let log_w = kress_log_weights(n);
    let log_scale = length / (2.0 * std::f64::consts::PI);
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        let yi = grid.node(i);
        for j in 0..n {
            let split = kernels::e_kernel(k, yi, grid.node(j), length);
            let idx = (i + n - j) % n;
            m[[i, j]] = split.smooth * trapz
                + Complex64::new(split.logcoef * log_scale * log_w[idx], 0.0);
        }
    }
    Ok(m)
}

/// Circulant matrix of the Fourier multiplier `k̂_m = α|m|·2π/L` on a
/// uniform grid (`m` in the symmetric range `−N/2 … N/2−1`).
fn multiplier_matrix(alpha: f64, grid: &BoundaryGrid) -> Array2<Complex64> {
    let n = grid.len();
    let length = grid.domain().length();
    // First row by inverse DFT of the multiplier values.
    let mut vals: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
    for (idx, v) in vals.iter_mut().enumerate() {
        let m = if idx < n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        };
        *v = Complex64::new(alpha * m.unsigned_abs() as f64 * 2.0 * std::f64::consts::PI / length, 0.0);
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(n);
    fft.process(&mut vals);
    let row: Vec<Complex64> = vals.iter().map(|v| v / n as f64).collect();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = row[(i + n - j) % n];
        }
    }
    m
}

/// Assemble a boundary operator. `F`/`Fstar` work on any grid; `E`, Robin
/// and Ψ¹-Robin need the uniform grid of a corner-free domain.
pub fn assemble(
    kind: OperatorKind,
    lambda: f64,
    grid: &BoundaryGrid,
) -> Result<OperatorMatrix, OperatorError> {
    let k = Wavenumber::new(lambda)?;
    let entries = match &kind {
        OperatorKind::F => assemble_f(k, grid)?,
        OperatorKind::Fstar => {
            let f = assemble_f(k, grid)?;
            let w = grid.weights();
            let n = grid.len();
            let mut m = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    m[[i, j]] = f[[j, i]].conj() * (w[j] / w[i]);
                }
            }
            m
        }
        OperatorKind::E => assemble_e(k, grid)?,
        OperatorKind::Robin { kappa } => {
            // Robin combination F^κ = F − κE: its invariance matrix
            // I − F^κ = I − F + κE vanishes on disk modes exactly when
            // −λ J'_m(λ) = κ J_m(λ) (oracle-pinned sign).
            if !grid.is_uniform() {
                return Err(OperatorError::NonUniformGrid("Robin"));
            }
            let f = assemble_f(k, grid)?;
            let e = assemble_e(k, grid)?;
            let mut m = f;
            m.scaled_add(Complex64::new(-kappa, 0.0), &e);
            m
        }
        OperatorKind::PsiRobin { alpha } => {
            // Ψ¹-Robin combination F − E·K with K the homogeneous Fourier
            // multiplier α|m|·2π/L; the invariance matrix I − F + E·K
            // vanishes on disk modes exactly when λJ'_m + α|m|J_m = 0
            // (oracle-pinned sign and scaling).
            if !grid.is_uniform() {
                return Err(OperatorError::NonUniformGrid("PsiRobin"));
            }
            let f = assemble_f(k, grid)?;
            let e = assemble_e(k, grid)?;
            let kmat = multiplier_matrix(*alpha, grid);
            let ek = e.dot(&kmat);
            let mut m = f;
            m.scaled_add(Complex64::new(-1.0, 0.0), &ek);
            m
        }
        OperatorKind::Quantized { symbol } => {
            return Err(OperatorError::EtaSymbolOnPolygon(format!(
                "use quantize() to build Op_h({symbol})"
            )));
        }
    };
    Ok(OperatorMatrix {
        entries,
        lambda,
        kind,
    })
}

/// True when the symbol is (detectably) a pure multiplication operator in
/// `s`, i.e. its η-factor is constant.
fn s_only_factor(a: &Symbol) -> Option<Complex64> {
    let sep = a.separable.as_ref()?;
    let probes = [-0.93, -0.41, 0.0, 0.27, 0.88];
    let base = (sep.eta_factor)(probes[0]);
    for &eta in &probes[1..] {
        if ((sep.eta_factor)(eta) - base).norm() > 1e-14 {
            return None;
        }
    }
    Some(base)
}

/// Kohn–Nirenberg quantization on a uniform periodic grid:
/// `(Op_h(a)u)(s_i) = Σ_m a(s_i, h·2πm/L) û_m e^{2πims_i/L}`.
///
/// On graded (polygonal) grids only multiplication operators `a = a(s)` are
/// representable; η-dependent symbols are rejected.
pub fn quantize(
    a: &Symbol,
    lambda: f64,
    grid: &BoundaryGrid,
) -> Result<OperatorMatrix, OperatorError> {
    let k = Wavenumber::new(lambda)?;
    let n = grid.len();
    let kind = OperatorKind::Quantized {
        symbol: a.name.clone(),
    };
    if !grid.is_uniform() {
        if let Some(c) = s_only_factor(a) {
            let mut m = Array2::zeros((n, n));
            for i in 0..n {
                let sf = a.separable.as_ref().map(|sep| (sep.s_factor)(grid.node(i).s));
                m[[i, i]] = sf.unwrap() * c;
            }
            return Ok(OperatorMatrix {
                entries: m,
                lambda,
                kind,
            });
        }
        return Err(OperatorError::EtaSymbolOnPolygon(a.name.clone()));
    }
    let length = grid.domain().length();
    let h = k.h();
    let eta_of = |idx: usize| -> f64 {
        let m = if idx < n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        };
        h * 2.0 * std::f64::consts::PI * m as f64 / length
    };
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(n);
    let mut m = Array2::zeros((n, n));
    if let Some(sep) = &a.separable {
        // Separable fast path: one multiplier row, scaled per output row.
        let mut vals: Vec<Complex64> = (0..n).map(|idx| (sep.eta_factor)(eta_of(idx))).collect();
        fft.process(&mut vals);
        let row: Vec<Complex64> = vals.iter().map(|v| v / n as f64).collect();
        for i in 0..n {
            let fs = (sep.s_factor)(grid.node(i).s);
            for j in 0..n {
                m[[i, j]] = fs * row[(i + n - j) % n];
            }
        }
    } else {
        for i in 0..n {
            let si = grid.node(i).s;
            let mut vals: Vec<Complex64> = (0..n).map(|idx| a.eval(si, eta_of(idx))).collect();
            fft.process(&mut vals);
            for j in 0..n {
                m[[i, j]] = vals[(i + n - j) % n] / n as f64;
            }
        }
    }
    Ok(OperatorMatrix {
        entries: m,
        lambda,
        kind,
    })
}

/// `⟨Au, v⟩ = Σ_i w_i (Au)_i conj(v_i)` in the grid's weighted inner
/// product.
pub fn matrix_element(
    a: &OperatorMatrix,
    grid: &BoundaryGrid,
    u: &[Complex64],
    v: &[Complex64],
) -> Result<Complex64, OperatorError> {
    if u.len() != grid.len() || v.len() != grid.len() || a.n() != grid.len() {
        return Err(OperatorError::LengthMismatch {
            got: u.len().max(v.len()).max(a.n()),
            expect: grid.len(),
        });
    }
    let au = a.apply(u)?;
    Ok(grid.inner(&au, v))
}
