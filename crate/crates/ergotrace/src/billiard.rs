//! The billiard map on the coball bundle of the boundary.
//!
//! Phase points are `q = (s, η)`: arclength position and tangential momentum
//! with `|η| ≤ 1`. The lifted unit velocity is `v = η·tangent + γ·inward
//! normal` with `γ(q) = √(1−η²)`, and one step of the map follows the ray to
//! its next boundary intersection and reads off the new tangential momentum
//! there. Orbits terminate — they are never continued by an invented rule —
//! when they hit a corner or become tangential (`|η| ≥ 1 − 1e-12`).
//!
//! The uniform measure `ds dη` on `[0,L)×(−1,1)` is invariant under the map;
//! samplers draw from it directly.

use crate::geometry::{Domain, GeometryError, RayHit};
use rand::Rng;
use thiserror::Error;

/// Phase points with `|η| ≥ 1 − TANGENTIAL_CUTOFF_MARGIN` are treated as
/// tangential: the map is undefined at `|η| = 1`.
pub const TANGENTIAL_CUTOFF_MARGIN: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BilliardError {
    #[error("phase point has |eta| = {eta} >= 1 (tangential)")]
    Tangential { eta: f64 },
    #[error("ray tracing found no boundary intersection from s = {s}, eta = {eta}")]
    NoHit { s: f64, eta: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A point of the coball bundle: arclength `s` and tangential momentum `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub s: f64,
    pub eta: f64,
}

impl PhasePoint {
    pub fn new(s: f64, eta: f64) -> Self {
        PhasePoint { s, eta }
    }
}

/// Result of one billiard step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Interior(PhasePoint),
    /// The trajectory ends on the singular set; `s` is the corner arclength.
    HitCorner { s: f64 },
    /// The step would start or arrive with `|η|` at the tangential cutoff.
    Tangential,
}

/// γ(q) = √(1−η²), the normal component of the lifted velocity.
pub fn gamma(q: PhasePoint) -> f64 {
    let sq = 1.0 - q.eta * q.eta;
    sq.max(0.0).sqrt()
}

/// The inward unit velocity vector over `q`: `η·tangent + γ·normal_in`.
pub fn lift(domain: &Domain, q: PhasePoint) -> Result<[f64; 2], BilliardError> {
    if q.eta.abs() >= 1.0 - TANGENTIAL_CUTOFF_MARGIN {
        return Err(BilliardError::Tangential { eta: q.eta });
    }
    let bp = domain.boundary_point(q.s)?;
    let g = gamma(q);
    Ok([
        q.eta * bp.tangent[0] + g * bp.normal_in[0],
        q.eta * bp.tangent[1] + g * bp.normal_in[1],
    ])
}

/// One forward step of the billiard map.
pub fn billiard_map(domain: &Domain, q: PhasePoint) -> Result<StepOutcome, BilliardError> {
    if q.eta.abs() >= 1.0 - TANGENTIAL_CUTOFF_MARGIN {
        return Ok(StepOutcome::Tangential);
    }
    let bp = domain.boundary_point(q.s)?;
    let v = lift(domain, q)?;
    match domain.ray_first_hit(bp.position, v) {
        RayHit::NoHit => Err(BilliardError::NoHit { s: q.s, eta: q.eta }),
        RayHit::Corner { s } => Ok(StepOutcome::HitCorner { s }),
        RayHit::Boundary { s, .. } => {
            let bp2 = domain.boundary_point(s)?;
            let eta2 = v[0] * bp2.tangent[0] + v[1] * bp2.tangent[1];
            if eta2.abs() >= 1.0 - TANGENTIAL_CUTOFF_MARGIN {
                Ok(StepOutcome::Tangential)
            } else {
                Ok(StepOutcome::Interior(PhasePoint { s, eta: eta2 }))
            }
        }
    }
}

/// One backward step: conjugation of the forward map by time reversal
/// `(s, η) ↦ (s, −η)`, equivalently launching along the reflected incoming
/// direction.
pub fn billiard_inverse(domain: &Domain, q: PhasePoint) -> Result<StepOutcome, BilliardError> {
    let reversed = PhasePoint {
        s: q.s,
        eta: -q.eta,
    };
    Ok(match billiard_map(domain, reversed)? {
        StepOutcome::Interior(p) => StepOutcome::Interior(PhasePoint {
            s: p.s,
            eta: -p.eta,
        }),
        other => other,
    })
}

/// Why an orbit stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitTermination {
    /// All requested steps completed.
    Completed,
    /// Step `step` (1-based) landed on the corner at arclength `s`.
    Corner { step: usize, s: f64 },
    /// Step `step` became tangential.
    Tangential { step: usize },
}

/// An orbit record: the start plus every completed iterate.
#[derive(Debug, Clone)]
pub struct Orbit {
    /// `points[0]` is the start; `points[k]` is the k-th iterate.
    pub points: Vec<PhasePoint>,
    pub termination: OrbitTermination,
}

impl Orbit {
    /// Completed step count (iterates beyond the start).
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }
}

/// Iterate the map up to `n` steps, recording the termination reason.
pub fn orbit(domain: &Domain, start: PhasePoint, n: usize) -> Result<Orbit, BilliardError> {
    let mut points = Vec::with_capacity(n + 1);
    points.push(start);
    let mut q = start;
    for step in 1..=n {
        match billiard_map(domain, q)? {
            StepOutcome::Interior(p) => {
                points.push(p);
                q = p;
            }
            StepOutcome::HitCorner { s } => {
                return Ok(Orbit {
                    points,
                    termination: OrbitTermination::Corner { step, s },
                });
            }
            StepOutcome::Tangential => {
                return Ok(Orbit {
                    points,
                    termination: OrbitTermination::Tangential { step },
                });
            }
        }
    }
    Ok(Orbit {
        points,
        termination: OrbitTermination::Completed,
    })
}

/// Residual of the chord-length generating relation for one step: with
/// `d(y,y')` the Euclidean chord length and `u` the unit chord direction,
/// the outgoing momentum is `u·tangent(y)` and the incoming one is
/// `u·tangent(y')`; both must match the phase coordinates.
pub fn generating_check(domain: &Domain, q: PhasePoint) -> Result<f64, BilliardError> {
    let step = billiard_map(domain, q)?;
    let q2 = match step {
        StepOutcome::Interior(p) => p,
        _ => {
            return Err(BilliardError::NoHit { s: q.s, eta: q.eta });
        }
    };
    let y = domain.boundary_point(q.s)?;
    let y2 = domain.boundary_point(q2.s)?;
    let dx = [
        y2.position[0] - y.position[0],
        y2.position[1] - y.position[1],
    ];
    let d = dx[0].hypot(dx[1]);
    let u = [dx[0] / d, dx[1] / d];
    // ∇_y d = −u, ∇_{y'} d = u; the generating relation reads
    // η = −∇_y d · tangent(y) and η' = ∇_{y'} d · tangent(y').
    let r1 = (q.eta - (u[0] * y.tangent[0] + u[1] * y.tangent[1])).abs();
    let r2 = (q2.eta - (u[0] * y2.tangent[0] + u[1] * y2.tangent[1])).abs();
    Ok(r1.max(r2))
}

/// Birkhoff-average result; `steps` may fall short of the request when the
/// orbit dies at a corner or tangentially.
#[derive(Debug, Clone, Copy)]
pub struct BirkhoffAverage {
    pub value: f64,
    pub steps: usize,
    pub requested: usize,
}

impl BirkhoffAverage {
    pub fn survival_fraction(&self) -> f64 {
        self.steps as f64 / self.requested as f64
    }
}

/// `(1/N) Σ_{n=1..N} f(β^n q)` with the actual completed step count
/// reported.
pub fn birkhoff_average<F: FnMut(PhasePoint) -> f64>(
    domain: &Domain,
    q: PhasePoint,
    mut f: F,
    n: usize,
) -> Result<BirkhoffAverage, BilliardError> {
    let mut sum = 0.0;
    let mut steps = 0;
    let mut cur = q;
    for _ in 0..n {
        match billiard_map(domain, cur)? {
            StepOutcome::Interior(p) => {
                sum += f(p);
                steps += 1;
                cur = p;
            }
            _ => break,
        }
    }
    Ok(BirkhoffAverage {
        value: if steps > 0 { sum / steps as f64 } else { 0.0 },
        steps,
        requested: n,
    })
}

/// Draw phase points from the invariant measure: uniform in
/// `[0, L) × (−1, 1)`. Points landing within the tangential cutoff or
/// exactly at a corner are redrawn.
pub fn sample_phase_points<R: Rng>(domain: &Domain, n: usize, rng: &mut R) -> Vec<PhasePoint> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = rng.gen_range(0.0..domain.length());
        let eta: f64 = rng.gen_range(-1.0..1.0);
        if eta.abs() >= 1.0 - TANGENTIAL_CUTOFF_MARGIN {
            continue;
        }
        if domain.boundary_point(s).is_err() {
            continue;
        }
        out.push(PhasePoint { s, eta });
    }
    out
}
