//! Classical phase-space layer: symbols on the coball bundle, the limit
//! measures and states per boundary condition, weighted transfer operators,
//! and ergodic averages.
//!
//! Conventions:
//!
//! - The coball bundle is `[0, L) × (−1, 1)` with coordinates `(s, η)` and
//!   reference measure `ds dη` (total mass `2L`).
//! - Limit measure densities with respect to `ds dη`: Dirichlet `γ`,
//!   Neumann/Robin `γ^{-1}`, Ψ¹-Robin `γ/(γ²+k²)` with `k = k(s,η)` the
//!   multiplier symbol.
//! - The state is `ω_B(a) = (4 / (2π·A)) ∫ a dμ_B` where `A` is the domain
//!   area; the factor 4 is pinned by the Neumann consistency check
//!   `ω_Neu(1) = 2L/A`.
//! - η-quadrature is Gauss–Chebyshev matched to the `γ^{±1}` weight (first
//!   kind for `γ^{-1}`, second kind for `γ`), so the endpoint behavior is
//!   integrated exactly and `|η| = 1` is never sampled.

use crate::billiard::{self, BilliardError, PhasePoint, StepOutcome};
use crate::geometry::Domain;
use num_complex::Complex64;
use rand::Rng;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("phase point with |eta| = {eta} >= 1 sampled; densities are singular there")]
    TangentialSample { eta: f64 },
    #[error("multiplier symbol must be real, nonnegative, and even in eta ({reason})")]
    BadMultiplier { reason: String },
    #[error(transparent)]
    Billiard(#[from] BilliardError),
}

type EvalFn = dyn Fn(f64, f64) -> Complex64 + Send + Sync;
type FactorFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// Separable structure `a(s,η) = f(s)·g(η)`, when known; quantization and
/// per-state matrix elements exploit it.
#[derive(Clone)]
pub struct Separable {
    pub s_factor: Arc<FactorFn>,
    pub eta_factor: Arc<FactorFn>,
}

/// A symbol `a(s, η)` on the coball bundle with band-limit metadata.
#[derive(Clone)]
pub struct Symbol {
    eval: Arc<EvalFn>,
    pub separable: Option<Separable>,
    /// Largest Fourier mode in `s` (None = unknown / not band-limited).
    pub max_mode_s: Option<usize>,
    /// If set, `a(s,η) = 0` for `|η| ≥ eta_max`.
    pub eta_max: Option<f64>,
    pub smooth: bool,
    pub name: String,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("max_mode_s", &self.max_mode_s)
            .field("eta_max", &self.eta_max)
            .field("smooth", &self.smooth)
            .finish()
    }
}

impl Symbol {
    pub fn eval(&self, s: f64, eta: f64) -> Complex64 {
        (self.eval)(s, eta)
    }

    /// The constant symbol.
    pub fn constant(c: Complex64) -> Symbol {
        Symbol {
            eval: Arc::new(move |_, _| c),
            separable: Some(Separable {
                s_factor: Arc::new(move |_| c),
                eta_factor: Arc::new(|_| Complex64::new(1.0, 0.0)),
            }),
            max_mode_s: Some(0),
            eta_max: None,
            smooth: true,
            name: format!("const({c})"),
        }
    }

    pub fn one() -> Symbol {
        let mut s = Symbol::constant(Complex64::new(1.0, 0.0));
        s.name = "const".to_string();
        s
    }

    /// `cos(2π m s / L)`, independent of η.
    pub fn fourier_cos(m: usize, length: f64) -> Symbol {
        let freq = 2.0 * std::f64::consts::PI * m as f64 / length;
        let s_factor: Arc<FactorFn> = Arc::new(move |s| Complex64::new((freq * s).cos(), 0.0));
        let sf = s_factor.clone();
        Symbol {
            eval: Arc::new(move |s, _| sf(s)),
            separable: Some(Separable {
                s_factor,
                eta_factor: Arc::new(|_| Complex64::new(1.0, 0.0)),
            }),
            max_mode_s: Some(m),
            eta_max: None,
            smooth: true,
            name: format!("fourier({m})"),
        }
    }

    /// Smooth even bump in η: `exp(1 − 1/(1−x²))` with
    /// `x = (|η| − center)/width`, vanishing for `|x| ≥ 1`.
    pub fn eta_bump(center: f64, width: f64) -> Symbol {
        let g = move |eta: f64| {
            let x = (eta.abs() - center) / width;
            if x.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - x * x)).exp()
            }
        };
        let eta_factor: Arc<FactorFn> = Arc::new(move |eta| Complex64::new(g(eta), 0.0));
        let ef = eta_factor.clone();
        Symbol {
            eval: Arc::new(move |_, eta| ef(eta)),
            separable: Some(Separable {
                s_factor: Arc::new(|_| Complex64::new(1.0, 0.0)),
                eta_factor,
            }),
            max_mode_s: Some(0),
            eta_max: Some((center + width).min(1.0)),
            smooth: true,
            name: format!("eta_bump({center},{width})"),
        }
    }

    /// `α|η|` — the Ψ¹-Robin multiplier symbol (real, nonnegative, even).
    pub fn eta_abs(alpha: f64) -> Symbol {
        Symbol {
            eval: Arc::new(move |_, eta| Complex64::new(alpha * eta.abs(), 0.0)),
            separable: Some(Separable {
                s_factor: Arc::new(|_| Complex64::new(1.0, 0.0)),
                eta_factor: Arc::new(move |eta| Complex64::new(alpha * eta.abs(), 0.0)),
            }),
            max_mode_s: Some(0),
            eta_max: None,
            smooth: false,
            name: format!("eta_abs({alpha})"),
        }
    }

    /// Pointwise product of two symbols.
    pub fn product(a: &Symbol, b: &Symbol) -> Symbol {
        let (fa, fb) = (a.eval.clone(), b.eval.clone());
        let separable = match (&a.separable, &b.separable) {
            (Some(sa), Some(sb)) => {
                let (s1, s2) = (sa.s_factor.clone(), sb.s_factor.clone());
                let (e1, e2) = (sa.eta_factor.clone(), sb.eta_factor.clone());
                Some(Separable {
                    s_factor: Arc::new(move |s| s1(s) * s2(s)),
                    eta_factor: Arc::new(move |eta| e1(eta) * e2(eta)),
                })
            }
            _ => None,
        };
        Symbol {
            eval: Arc::new(move |s, eta| fa(s, eta) * fb(s, eta)),
            separable,
            max_mode_s: match (a.max_mode_s, b.max_mode_s) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            },
            eta_max: match (a.eta_max, b.eta_max) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (Some(x), None) | (None, Some(x)) => Some(x),
                (None, None) => None,
            },
            smooth: a.smooth && b.smooth,
            name: format!("product({},{})", a.name, b.name),
        }
    }

    /// General symbol from a closure (no separable structure assumed).
    pub fn from_fn<F>(name: &str, eta_max: Option<f64>, f: F) -> Symbol
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Symbol {
            eval: Arc::new(f),
            separable: None,
            max_mode_s: None,
            eta_max,
            smooth: true,
            name: name.to_string(),
        }
    }
}

/// Parse an observable from the registry grammar:
/// `const | fourier(m) | eta_bump(center,width) | product(a,b)`
/// (`eta_window` is accepted as an alias of `eta_bump`).
pub fn parse_observable(text: &str, length: f64) -> Result<Symbol, String> {
    let mut parser = ObsParser {
        chars: text.trim(),
        pos: 0,
        length,
    };
    let sym = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.chars.len() {
        return Err(format!(
            "unexpected trailing input at byte {} of observable {:?}",
            parser.pos, text
        ));
    }
    Ok(sym)
}

struct ObsParser<'a> {
    chars: &'a str,
    pos: usize,
    length: f64,
}

impl ObsParser<'_> {
    fn skip_ws(&mut self) {
        while self.chars[self.pos..].starts_with(' ') {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        for (i, ch) in self.chars[start..].char_indices() {
            if ch.is_ascii_alphanumeric() || ch == '_' {
                self.pos = start + i + ch.len_utf8();
            } else {
                break;
            }
        }
        self.chars[start..self.pos].to_string()
    }

    fn expect(&mut self, ch: char) -> Result<(), String> {
        self.skip_ws();
        if self.chars[self.pos..].starts_with(ch) {
            self.pos += ch.len_utf8();
            Ok(())
        } else {
            Err(format!(
                "expected {:?} at byte {} of observable {:?}",
                ch, self.pos, self.chars
            ))
        }
    }

    fn number(&mut self) -> Result<f64, String> {
        self.skip_ws();
        let start = self.pos;
        for (i, ch) in self.chars[start..].char_indices() {
            if ch.is_ascii_digit() || ch == '.' || ch == '-' || ch == '+' || ch == 'e' {
                self.pos = start + i + 1;
            } else {
                break;
            }
        }
        self.chars[start..self.pos]
            .parse()
            .map_err(|_| format!("bad number at byte {start} of observable {:?}", self.chars))
    }

    fn expr(&mut self) -> Result<Symbol, String> {
        let name = self.ident();
        match name.as_str() {
            "const" | "one" => Ok(Symbol::one()),
            "fourier" => {
                self.expect('(')?;
                let m = self.number()?;
                self.expect(')')?;
                if m < 0.0 || m.fract() != 0.0 {
                    return Err(format!("fourier mode must be a nonnegative integer, got {m}"));
                }
                Ok(Symbol::fourier_cos(m as usize, self.length))
            }
            "eta_bump" | "eta_window" => {
                self.expect('(')?;
                let c = self.number()?;
                self.expect(',')?;
                let w = self.number()?;
                self.expect(')')?;
                if !(w > 0.0) {
                    return Err(format!("eta_bump width must be positive, got {w}"));
                }
                Ok(Symbol::eta_bump(c, w))
            }
            "product" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                self.expect(')')?;
                Ok(Symbol::product(&a, &b))
            }
            other => Err(format!(
                "unknown observable {other:?}; registry: const, fourier(m), eta_bump(center,width), product(a,b)"
            )),
        }
    }
}

/// Limit measure family on the coball bundle.
#[derive(Clone, Debug)]
pub enum MeasureKind {
    Dirichlet,
    Neumann,
    Robin,
    /// Carries the multiplier symbol `k(s,η)` (real, nonnegative, even in η).
    PsiRobin(Symbol),
}

impl MeasureKind {
    /// Validating constructor for the Ψ¹-Robin measure.
    pub fn psi_robin(k: Symbol) -> Result<MeasureKind, ClassicalError> {
        for &eta in &[0.1, 0.35, 0.6, 0.85] {
            let plus = k.eval(0.3, eta);
            let minus = k.eval(0.3, -eta);
            if plus.im.abs() > 1e-14 {
                return Err(ClassicalError::BadMultiplier {
                    reason: format!("k(0.3, {eta}) has imaginary part {}", plus.im),
                });
            }
            if plus.re < 0.0 {
                return Err(ClassicalError::BadMultiplier {
                    reason: format!("k(0.3, {eta}) = {} < 0", plus.re),
                });
            }
            if (plus - minus).norm() > 1e-12 {
                return Err(ClassicalError::BadMultiplier {
                    reason: format!("k not even at eta = {eta}"),
                });
            }
        }
        Ok(MeasureKind::PsiRobin(k))
    }
}

/// Density of `dμ_B` with respect to `ds dη` at `q`.
pub fn mu_density(kind: &MeasureKind, q: PhasePoint) -> Result<f64, ClassicalError> {
    if q.eta.abs() >= 1.0 {
        return Err(ClassicalError::TangentialSample { eta: q.eta });
    }
    let g = billiard::gamma(q);
    Ok(match kind {
        MeasureKind::Dirichlet => g,
        MeasureKind::Neumann | MeasureKind::Robin => 1.0 / g,
        MeasureKind::PsiRobin(k) => {
            let kv = k.eval(q.s, q.eta).re;
            g / (g * g + kv * kv)
        }
    })
}

/// Number of Gauss–Chebyshev nodes used by [`omega`].
pub const OMEGA_ETA_NODES: usize = 128;

/// The state `ω_B(a) = (4/(2π·A)) ∫∫ a dμ_B`, by γ-matched Gauss–Chebyshev
/// quadrature in η and periodic trapezoid in s.
pub fn omega(kind: &MeasureKind, a: &Symbol, domain: &Domain) -> Complex64 {
    let length = domain.length();
    let n_s = match a.max_mode_s {
        Some(m) => (8 * (m + 1)).max(64),
        None => 512,
    };
    let n = OMEGA_ETA_NODES;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n_s {
        let s = length * i as f64 / n_s as f64;
        // η-integral of a·(density) with the γ^{±1} endpoint weight folded
        // into the rule.
        let mut line = Complex64::new(0.0, 0.0);
        match kind {
            MeasureKind::Neumann | MeasureKind::Robin => {
                // First kind: ∫ f(η) (1−η²)^{-1/2} dη ≈ (π/n) Σ f(η_i).
                for j in 0..n {
                    let eta = ((2 * j + 1) as f64 * std::f64::consts::PI / (2.0 * n as f64)).cos();
                    line += a.eval(s, eta);
                }
                line *= std::f64::consts::PI / n as f64;
            }
            MeasureKind::Dirichlet => {
                // Second kind: ∫ f(η) (1−η²)^{1/2} dη ≈ Σ w_j f(η_j).
                for j in 1..=n {
                    let theta = j as f64 * std::f64::consts::PI / (n as f64 + 1.0);
                    let w = std::f64::consts::PI / (n as f64 + 1.0) * theta.sin() * theta.sin();
                    line += w * a.eval(s, theta.cos());
                }
            }
            MeasureKind::PsiRobin(k) => {
                // γ/(γ²+k²) = γ^{-1} · γ²/(γ²+k²): first kind with a smooth
                // extra factor.
                for j in 0..n {
                    let eta = ((2 * j + 1) as f64 * std::f64::consts::PI / (2.0 * n as f64)).cos();
                    let g2 = 1.0 - eta * eta;
                    let kv = k.eval(s, eta).re;
                    line += a.eval(s, eta) * (g2 / (g2 + kv * kv));
                }
                line *= std::f64::consts::PI / n as f64;
            }
        }
        total += line;
    }
    total *= length / n_s as f64;
    total * (4.0 / (2.0 * std::f64::consts::PI * domain.area()))
}

/// `c = 2π·A / (4·vol(B*Y)) = π A / (4 L)` (the coball bundle has volume
/// `2L`).
pub fn c_const(domain: &Domain) -> f64 {
    std::f64::consts::PI * domain.area() / (4.0 * domain.length())
}

/// Weighted transfer operator family.
#[derive(Clone, Debug)]
pub enum TransferKind {
    /// `T f(q) = (γ(q)/γ(βq)) f(βq)`.
    T,
    /// `T* f(q) = (γ(β^{-1}q)/γ(q)) f(β^{-1}q)`.
    Tstar,
    /// Ψ¹-Robin weight:
    /// `[γ(βq)/(γ(βq)²+k(βq)²)]·[(γ(q)²+k(q)²)/γ(q)]·f(βq)`.
    PsiRobinWeight(Symbol),
}

/// Value of a weighted pullback; `corner` is set (and the value is 0) when
/// the step leaves the bundle through the singular set or tangentially.
#[derive(Debug, Clone, Copy)]
pub struct TransferValue {
    pub value: Complex64,
    pub corner: bool,
}

pub fn transfer_apply(
    kind: &TransferKind,
    f: &Symbol,
    domain: &Domain,
    q: PhasePoint,
) -> Result<TransferValue, ClassicalError> {
    let dead = TransferValue {
        value: Complex64::new(0.0, 0.0),
        corner: true,
    };
    let step = match kind {
        TransferKind::Tstar => billiard::billiard_inverse(domain, q)?,
        _ => billiard::billiard_map(domain, q)?,
    };
    let p = match step {
        StepOutcome::Interior(p) => p,
        _ => return Ok(dead),
    };
    let (gq, gp) = (billiard::gamma(q), billiard::gamma(p));
    let value = match kind {
        TransferKind::T => (gq / gp) * f.eval(p.s, p.eta),
        TransferKind::Tstar => (gp / gq) * f.eval(p.s, p.eta),
        TransferKind::PsiRobinWeight(k) => {
            let kq = k.eval(q.s, q.eta).re;
            let kp = k.eval(p.s, p.eta).re;
            let w = (gp / (gp * gp + kp * kp)) * ((gq * gq + kq * kq) / gq);
            w * f.eval(p.s, p.eta)
        }
    };
    Ok(TransferValue {
        value,
        corner: false,
    })
}

/// Result of a finite ergodic average along one orbit.
#[derive(Debug, Clone, Copy)]
pub struct ErgodicAverage {
    pub value: Complex64,
    /// Completed steps (equals the request unless the orbit died).
    pub steps: usize,
    pub requested: usize,
}

/// Finite Cesàro average of transfer iterates along the orbit of `q`:
/// Neumann/Robin use forward steps with weight `γ(q)/γ(β^k q)`, Dirichlet
/// uses backward steps with weight `γ(β^{-k} q)/γ(q)`, Ψ¹-Robin uses its
/// telescoped forward weight. Orbits that die contribute their truncated
/// average with the surviving step count recorded.
pub fn ergodic_average(
    kind: &MeasureKind,
    a: &Symbol,
    domain: &Domain,
    q: PhasePoint,
    n: usize,
) -> Result<ErgodicAverage, ClassicalError> {
    let gq = billiard::gamma(q);
    let (kq2, k_sym) = match kind {
        MeasureKind::PsiRobin(k) => {
            let kv = k.eval(q.s, q.eta).re;
            (kv * kv, Some(k.clone()))
        }
        _ => (0.0, None),
    };
    let mut sum = Complex64::new(0.0, 0.0);
    let mut steps = 0;
    let mut cur = q;
    for _ in 0..n {
        let outcome = match kind {
            MeasureKind::Dirichlet => billiard::billiard_inverse(domain, cur)?,
            _ => billiard::billiard_map(domain, cur)?,
        };
        let p = match outcome {
            StepOutcome::Interior(p) => p,
            _ => break,
        };
        let gp = billiard::gamma(p);
        let weight = match kind {
            MeasureKind::Neumann | MeasureKind::Robin => gq / gp,
            MeasureKind::Dirichlet => gp / gq,
            MeasureKind::PsiRobin(_) => {
                let k = k_sym.as_ref().unwrap();
                let kp = k.eval(p.s, p.eta).re;
                (gp / (gp * gp + kp * kp)) * ((gq * gq + kq2) / gq)
            }
        };
        sum += weight * a.eval(p.s, p.eta);
        steps += 1;
        cur = p;
    }
    Ok(ErgodicAverage {
        value: if steps > 0 {
            sum / steps as f64
        } else {
            Complex64::new(0.0, 0.0)
        },
        steps,
        requested: n,
    })
}

/// Closed-form mean-ergodic limit: `P(a) = c·ω_B(a)·(invariant density of
/// the kind)` — `γ` times the constant for Neumann/Robin, `γ^{-1}` for
/// Dirichlet, `γ/(γ²+k²)` for Ψ¹-Robin.
pub fn projection_p(kind: &MeasureKind, a: &Symbol, domain: &Domain) -> Symbol {
    let cw = c_const(domain) * omega(kind, a, domain);
    match kind {
        MeasureKind::Neumann | MeasureKind::Robin => Symbol::from_fn(
            &format!("P[{}]", a.name),
            None,
            move |_, eta| cw * (1.0 - eta * eta).max(0.0).sqrt(),
        ),
        MeasureKind::Dirichlet => Symbol::from_fn(&format!("P[{}]", a.name), None, move |_, eta| {
            cw / (1.0 - eta * eta).max(f64::MIN_POSITIVE).sqrt()
        }),
        MeasureKind::PsiRobin(k) => {
            let k = k.clone();
            Symbol::from_fn(&format!("P[{}]", a.name), None, move |s, eta| {
                let g = (1.0 - eta * eta).max(0.0).sqrt();
                let kv = k.eval(s, eta).re;
                cw * g / (g * g + kv * kv)
            })
        }
    }
}

/// Monte-Carlo L²(γ^{-2} ds dη) distances between the finite Cesàro average
/// of transfer iterates and the closed-form projection, at several step
/// counts along the same sampled orbits. Returns one distance per entry of
/// `checkpoints` (which must be increasing).
pub fn mean_ergodic_distances<R: Rng>(
    kind: &MeasureKind,
    a: &Symbol,
    domain: &Domain,
    checkpoints: &[usize],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>, ClassicalError> {
    let p_limit = projection_p(kind, a, domain);
    let n_max = *checkpoints.last().expect("checkpoints nonempty");
    let mut sq_sums = vec![0.0; checkpoints.len()];
    let samples = billiard::sample_phase_points(domain, n_samples, rng);
    for q in samples {
        let gq = billiard::gamma(q);
        let kq2 = match kind {
            MeasureKind::PsiRobin(ks) => {
                let kv = ks.eval(q.s, q.eta).re;
                kv * kv
            }
            _ => 0.0,
        };
        let pval = p_limit.eval(q.s, q.eta);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut cur = q;
        let mut steps = 0usize;
        let mut ck = 0usize;
        for k in 1..=n_max {
            let outcome = match kind {
                MeasureKind::Dirichlet => billiard::billiard_inverse(domain, cur)?,
                _ => billiard::billiard_map(domain, cur)?,
            };
            if let StepOutcome::Interior(p) = outcome {
                let gp = billiard::gamma(p);
                let weight = match kind {
                    MeasureKind::Neumann | MeasureKind::Robin => gq / gp,
                    MeasureKind::Dirichlet => gp / gq,
                    MeasureKind::PsiRobin(ks) => {
                        let kp = ks.eval(p.s, p.eta).re;
                        (gp / (gp * gp + kp * kp)) * ((gq * gq + kq2) / gq)
                    }
                };
                sum += weight * a.eval(p.s, p.eta);
                steps = k;
                cur = p;
            } else {
                break;
            }
            while ck < checkpoints.len() && checkpoints[ck] == k {
                let avg = sum / k as f64;
                sq_sums[ck] += (avg - pval).norm_sqr() / (gq * gq);
                ck += 1;
            }
        }
        // Orbits that died early contribute their truncated average at all
        // remaining checkpoints (recorded, not dropped).
        while ck < checkpoints.len() {
            let avg = if steps > 0 {
                sum / steps as f64
            } else {
                Complex64::new(0.0, 0.0)
            };
            sq_sums[ck] += (avg - pval).norm_sqr() / (gq * gq);
            ck += 1;
        }
    }
    // ds dη has mass 2L over the bundle; the uniform sampler already draws
    // from it, so the MC estimate of the squared norm is mass × mean.
    let mass = 2.0 * domain.length();
    Ok(sq_sums
        .iter()
        .map(|&sq| (mass * sq / n_samples as f64).sqrt())
        .collect())
}
