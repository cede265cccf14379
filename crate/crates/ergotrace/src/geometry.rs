//! Piecewise-smooth planar domains assembled from circle arcs and line
//! segments.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! - The boundary is an ordered cycle of arcs traversed **counterclockwise**
//!   (positive Green area). Circle arcs encode their traversal direction by
//!   the angle order: `end_angle > start_angle` is a convex (ccw) arc,
//!   `end_angle < start_angle` a dispersing (cw) wall.
//! - The inward normal is the tangent rotated by +90°, so it points into the
//!   region for a ccw cycle.
//! - Signed curvature is `+1/r` on ccw circle arcs, `-1/r` on cw arcs, `0` on
//!   segments: positive for the boundary of a disk traversed ccw.
//! - Corners are junctions with a tangent discontinuity; they are kept as a
//!   sorted list of global arclengths (the singular set). Only finitely many
//!   corner points are supported.
//!
//! Only these two arc kinds exist on purpose: every desk-scale billiard we
//! target (disk, stadium, polygons, dispersing walls) is built from them, and
//! both admit closed-form ray intersection, which keeps the billiard map free
//! of root-finding fragility.

use thiserror::Error;

/// Junction chaining tolerance as a fraction of the total boundary length.
pub const CLOSURE_TOL_FACTOR: f64 = 1e-12;
/// Corner-hit classification window for rays, as a fraction of boundary
/// length: well above double-precision intersection noise, far below any grid
/// spacing.
pub const CORNER_HIT_TOL_FACTOR: f64 = 1e-8;
/// Rays ignore intersections closer than this (fraction of boundary length)
/// so a ray launched from the boundary does not immediately re-hit its
/// departure point.
pub const RAY_T_MIN_FACTOR: f64 = 1e-10;
/// Tangent kink angle (radians) above which a junction counts as a corner.
const CORNER_ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("arc {index}: {reason}")]
    InvalidArc { index: usize, reason: String },
    #[error(
        "boundary is not closed at junction {index} (between arc {prev} and arc {index}): \
         endpoint gap {gap:.3e} exceeds tolerance {tol:.3e}"
    )]
    NotClosed {
        index: usize,
        prev: usize,
        gap: f64,
        tol: f64,
    },
    #[error("boundary self-intersects: arc {a} crosses arc {b}")]
    SelfIntersecting { a: usize, b: usize },
    #[error("empty arc list")]
    Empty,
    #[error("signed area {area:.6e} is not positive; arcs must cycle counterclockwise")]
    NotCounterclockwise { area: f64 },
    #[error("arclength {s:.6e} outside [0, {length:.6e})")]
    OutOfRange { s: f64, length: f64 },
    #[error("arclength {s:.6e} lies exactly at a corner")]
    AtCorner { s: f64 },
}

/// One boundary piece: a circle arc or a straight segment.
#[derive(Debug, Clone, PartialEq)]
pub enum ArcSpec {
    CircleArc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
    LineSegment {
        start: [f64; 2],
        end: [f64; 2],
    },
}

impl ArcSpec {
    fn validate(&self) -> Result<(), String> {
        match *self {
            ArcSpec::CircleArc {
                radius,
                start_angle,
                end_angle,
                ..
            } => {
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(format!("radius must be positive and finite, got {radius}"));
                }
                let extent = (end_angle - start_angle).abs();
                if !(extent > 0.0) || extent > 2.0 * std::f64::consts::PI + 1e-12 {
                    return Err(format!(
                        "angular extent must lie in (0, 2*pi], got {extent}"
                    ));
                }
                Ok(())
            }
            ArcSpec::LineSegment { start, end } => {
                let len = hypot2(sub(end, start));
                if !(len > 0.0) || !len.is_finite() {
                    return Err("segment endpoints must be distinct".to_string());
                }
                Ok(())
            }
        }
    }

    /// Arclength of the piece.
    pub fn length(&self) -> f64 {
        match *self {
            ArcSpec::CircleArc {
                radius,
                start_angle,
                end_angle,
                ..
            } => radius * (end_angle - start_angle).abs(),
            ArcSpec::LineSegment { start, end } => hypot2(sub(end, start)),
        }
    }

    /// +1 for ccw traversal, -1 for cw (segments: +1, unused).
    fn turn(&self) -> f64 {
        match *self {
            ArcSpec::CircleArc {
                start_angle,
                end_angle,
                ..
            } => {
                if end_angle >= start_angle {
                    1.0
                } else {
                    -1.0
                }
            }
            ArcSpec::LineSegment { .. } => 1.0,
        }
    }

    pub fn start_point(&self) -> [f64; 2] {
        self.eval(0.0).0
    }

    pub fn end_point(&self) -> [f64; 2] {
        self.eval(self.length()).0
    }

    /// Position and unit tangent at local arclength `t` in `[0, length]`.
    fn eval(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        match *self {
            ArcSpec::CircleArc {
                center,
                radius,
                start_angle,
                ..
            } => {
                let sgn = self.turn();
                let theta = start_angle + sgn * t / radius;
                let (sin, cos) = theta.sin_cos();
                let pos = [center[0] + radius * cos, center[1] + radius * sin];
                let tan = [-sgn * sin, sgn * cos];
                (pos, tan)
            }
            ArcSpec::LineSegment { start, end } => {
                let d = sub(end, start);
                let len = hypot2(d);
                let tau = [d[0] / len, d[1] / len];
                ([start[0] + t * tau[0], start[1] + t * tau[1]], tau)
            }
        }
    }

    fn curvature(&self) -> f64 {
        match *self {
            ArcSpec::CircleArc { radius, .. } => self.turn() / radius,
            ArcSpec::LineSegment { .. } => 0.0,
        }
    }
}

/// A point on the boundary with its local frame.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    /// Global arclength in `[0, L)`.
    pub s: f64,
    pub position: [f64; 2],
    /// Unit tangent in the direction of traversal.
    pub tangent: [f64; 2],
    /// Unit inward normal (tangent rotated by +90°).
    pub normal_in: [f64; 2],
    /// Signed curvature; positive for a ccw-traversed disk boundary.
    pub curvature: f64,
    pub arc_id: usize,
}

impl BoundaryPoint {
    /// Unit outward normal (negated inward normal).
    pub fn normal_out(&self) -> [f64; 2] {
        [-self.normal_in[0], -self.normal_in[1]]
    }
}

/// Result of shooting a ray at the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayHit {
    /// First intersection: global arclength and travel distance.
    Boundary { s: f64, t: f64 },
    /// The intersection lies within the corner tolerance of a corner point.
    Corner { s: f64 },
    /// No intersection found; only possible through numerical failure and
    /// always reported, never silently skipped.
    NoHit,
}

/// An immutable piecewise-smooth planar domain.
///
/// All operations are pure; the struct is safe to share across threads.
#[derive(Debug, Clone)]
pub struct Domain {
    arcs: Vec<ArcSpec>,
    /// `offsets[i]` = global arclength at which arc `i` starts;
    /// `offsets[arcs.len()] = L`.
    offsets: Vec<f64>,
    length: f64,
    area: f64,
    corners: Vec<f64>,
    centroid: [f64; 2],
}

/// Validate the arc cycle and assemble a [`Domain`].
pub fn build_domain(specs: Vec<ArcSpec>) -> Result<Domain, GeometryError> {
    if specs.is_empty() {
        return Err(GeometryError::Empty);
    }
    for (index, arc) in specs.iter().enumerate() {
        arc.validate()
            .map_err(|reason| GeometryError::InvalidArc { index, reason })?;
    }

    let n = specs.len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for arc in &specs {
        offsets.push(acc);
        acc += arc.length();
    }
    offsets.push(acc);
    let length = acc;

    // Endpoint chaining, cyclically.
    let tol = CLOSURE_TOL_FACTOR * length;
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let gap = hypot2(sub(specs[i].start_point(), specs[prev].end_point()));
        if gap > tol {
            return Err(GeometryError::NotClosed {
                index: i,
                prev,
                gap,
                tol,
            });
        }
    }

    // Corners: junctions where the tangent turns by more than the kink
    // tolerance. A single full circle (its own predecessor) is corner-free.
    let mut corners = Vec::new();
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let (_, t_in) = specs[prev].eval(specs[prev].length());
        let (_, t_out) = specs[i].eval(0.0);
        let cross = t_in[0] * t_out[1] - t_in[1] * t_out[0];
        let dot = t_in[0] * t_out[0] + t_in[1] * t_out[1];
        if cross.atan2(dot).abs() > CORNER_ANGLE_TOL {
            corners.push(offsets[i]);
        }
    }
    corners.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Signed area by the exact Green integral, arc by arc.
    let area: f64 = specs.iter().map(green_area).sum();
    if area <= 0.0 {
        return Err(GeometryError::NotCounterclockwise { area });
    }

    check_simple(&specs, &offsets, length)?;

    let centroid = centroid_green(&specs, area);

    Ok(Domain {
        arcs: specs,
        offsets,
        length,
        area,
        corners,
        centroid,
    })
}

/// Exact contribution of one arc to (1/2)∮(x dy − y dx).
fn green_area(arc: &ArcSpec) -> f64 {
    match *arc {
        ArcSpec::LineSegment { start, end } => 0.5 * (start[0] * end[1] - start[1] * end[0]),
        ArcSpec::CircleArc {
            center,
            radius,
            start_angle,
            end_angle,
        } => {
            let (a, b) = (start_angle, end_angle);
            0.5 * radius * radius * (b - a)
                + 0.5 * radius * (center[0] * (b.sin() - a.sin()) - center[1] * (b.cos() - a.cos()))
        }
    }
}

/// Centroid via C_x = (1/A)∮(x²/2)dy, C_y = −(1/A)∮(y²/2)dx with per-arc
/// Gauss–Legendre in the arc parameter (exact to roundoff for these arcs).
fn centroid_green(specs: &[ArcSpec], area: f64) -> [f64; 2] {
    let (nodes, weights) = gauss_legendre_64();
    let mut cx = 0.0;
    let mut cy = 0.0;
    for arc in specs {
        let len = arc.length();
        for (&x, &w) in nodes.iter().zip(weights.iter()) {
            let t = 0.5 * (x + 1.0) * len;
            let (p, tau) = arc.eval(t);
            let dw = 0.5 * len * w;
            cx += 0.5 * p[0] * p[0] * tau[1] * dw;
            cy -= 0.5 * p[1] * p[1] * tau[0] * dw;
        }
    }
    [cx / area, cy / area]
}

impl Domain {
    /// Total boundary arclength.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Enclosed area (positive).
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Sorted global arclengths of the corner points (the singular set).
    pub fn corners(&self) -> &[f64] {
        &self.corners
    }

    pub fn arcs(&self) -> &[ArcSpec] {
        &self.arcs
    }

    /// Global arclength at which arc `i` starts.
    pub fn arc_offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn centroid(&self) -> [f64; 2] {
        self.centroid
    }

    /// Wrap an arclength into `[0, L)`.
    pub fn wrap_s(&self, s: f64) -> f64 {
        let mut r = s % self.length;
        if r < 0.0 {
            r += self.length;
        }
        // Guard against -0.0 and the wrap landing exactly on L.
        if r >= self.length {
            r = 0.0;
        }
        r
    }

    /// Cyclic distance between two arclengths.
    pub fn cyclic_distance(&self, a: f64, b: f64) -> f64 {
        let d = (self.wrap_s(a) - self.wrap_s(b)).abs();
        d.min(self.length - d)
    }

    /// Evaluate the boundary frame at arclength `s` (wrapped into `[0, L)`).
    ///
    /// Fails if `s` is non-finite or lies exactly (to `1e-13·L`) at a corner,
    /// where the frame is ambiguous.
    pub fn boundary_point(&self, s: f64) -> Result<BoundaryPoint, GeometryError> {
        if !s.is_finite() {
            return Err(GeometryError::OutOfRange {
                s,
                length: self.length,
            });
        }
        let sw = self.wrap_s(s);
        for &c in &self.corners {
            if self.cyclic_distance(sw, c) < 1e-13 * self.length {
                return Err(GeometryError::AtCorner { s: sw });
            }
        }
        let idx = self.arc_index(sw);
        let t = sw - self.offsets[idx];
        let (position, tangent) = self.arcs[idx].eval(t);
        Ok(BoundaryPoint {
            s: sw,
            position,
            tangent,
            normal_in: [-tangent[1], tangent[0]],
            curvature: self.arcs[idx].curvature(),
            arc_id: idx,
        })
    }

    fn arc_index(&self, s: f64) -> usize {
        // offsets is sorted; find the last offset <= s.
        match self
            .offsets
            .binary_search_by(|o| o.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.arcs.len() - 1),
            Err(i) => i - 1,
        }
    }

    /// First boundary intersection of the ray `origin + t·direction`, `t >
    /// t_min`. Hits within the corner tolerance of a corner arclength are
    /// classified as [`RayHit::Corner`].
    pub fn ray_first_hit(&self, origin: [f64; 2], direction: [f64; 2]) -> RayHit {
        let t_min = RAY_T_MIN_FACTOR * self.length;
        let mut best: Option<(f64, f64)> = None; // (t, global s)
        for (i, arc) in self.arcs.iter().enumerate() {
            for (t, local) in arc_ray_intersections(arc, origin, direction) {
                if t <= t_min {
                    continue;
                }
                let s = self.offsets[i] + local;
                if best.map_or(true, |(tb, _)| t < tb) {
                    best = Some((t, s));
                }
            }
        }
        match best {
            None => RayHit::NoHit,
            Some((t, s)) => {
                let tol = CORNER_HIT_TOL_FACTOR * self.length;
                for &c in &self.corners {
                    if self.cyclic_distance(s, c) < tol {
                        return RayHit::Corner { s: c };
                    }
                }
                RayHit::Boundary {
                    s: self.wrap_s(s),
                    t,
                }
            }
        }
    }

    /// Winding-number interior test (strict: points on the boundary are
    /// unreliable and should not be queried).
    pub fn contains(&self, z: [f64; 2]) -> bool {
        let mut winding = 0.0;
        for arc in &self.arcs {
            let len = arc.length();
            // Sample finely enough that each angular increment stays < pi.
            let k = 64.max((len / (0.05 * self.length)).ceil() as usize);
            let (mut prev, _) = arc.eval(0.0);
            for j in 1..=k {
                let (p, _) = arc.eval(len * j as f64 / k as f64);
                let v0 = sub(prev, z);
                let v1 = sub(p, z);
                let cross = v0[0] * v1[1] - v0[1] * v1[0];
                let dot = v0[0] * v1[0] + v0[1] * v1[1];
                winding += cross.atan2(dot);
                prev = p;
            }
        }
        winding.abs() > std::f64::consts::PI
    }

    /// Exact distance from `z` to the boundary curve.
    pub fn distance_to_boundary(&self, z: [f64; 2]) -> f64 {
        let mut best = f64::INFINITY;
        for arc in &self.arcs {
            best = best.min(arc_point_distance(arc, z));
        }
        best
    }
}

/// Intersections of one ray with one arc: pairs `(t, local arclength)`.
fn arc_ray_intersections(arc: &ArcSpec, o: [f64; 2], d: [f64; 2]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    match *arc {
        ArcSpec::LineSegment { start, end } => {
            let e = sub(end, start);
            let len = hypot2(e);
            let tau = [e[0] / len, e[1] / len];
            // o + t d = start + u tau
            let det = d[0] * (-tau[1]) - d[1] * (-tau[0]);
            if det.abs() < 1e-14 {
                return out; // parallel (grazing runs are not billiard steps)
            }
            let rhs = sub(start, o);
            let t = (rhs[0] * (-tau[1]) - rhs[1] * (-tau[0])) / det;
            let u = (d[0] * rhs[1] - d[1] * rhs[0]) / det;
            if (-1e-12 * len..=len * (1.0 + 1e-12)).contains(&u) {
                out.push((t, u.clamp(0.0, len)));
            }
        }
        ArcSpec::CircleArc {
            center,
            radius,
            start_angle,
            end_angle,
        } => {
            let oc = sub(o, center);
            let b = d[0] * oc[0] + d[1] * oc[1];
            let c = oc[0] * oc[0] + oc[1] * oc[1] - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return out;
            }
            let sq = disc.sqrt();
            let sgn = if end_angle >= start_angle { 1.0 } else { -1.0 };
            let extent = (end_angle - start_angle).abs();
            for t in [-b - sq, -b + sq] {
                let p = [o[0] + t * d[0], o[1] + t * d[1]];
                let theta = (p[1] - center[1]).atan2(p[0] - center[0]);
                // Angle travelled from start_angle in traversal direction.
                let mut u = sgn * (theta - start_angle);
                u %= 2.0 * std::f64::consts::PI;
                if u < 0.0 {
                    u += 2.0 * std::f64::consts::PI;
                }
                let slack = 1e-12 / radius.max(1.0);
                if u <= extent + slack {
                    out.push((t, radius * u.min(extent)));
                } else if u >= 2.0 * std::f64::consts::PI - slack {
                    out.push((t, 0.0));
                }
            }
        }
    }
    out
}

/// Exact distance from a point to one arc.
fn arc_point_distance(arc: &ArcSpec, z: [f64; 2]) -> f64 {
    match *arc {
        ArcSpec::LineSegment { start, end } => {
            let e = sub(end, start);
            let len2 = e[0] * e[0] + e[1] * e[1];
            let u = ((z[0] - start[0]) * e[0] + (z[1] - start[1]) * e[1]) / len2;
            let u = u.clamp(0.0, 1.0);
            hypot2([z[0] - start[0] - u * e[0], z[1] - start[1] - u * e[1]])
        }
        ArcSpec::CircleArc {
            center,
            radius,
            start_angle,
            end_angle,
        } => {
            let v = sub(z, center);
            let theta = v[1].atan2(v[0]);
            let sgn = if end_angle >= start_angle { 1.0 } else { -1.0 };
            let extent = (end_angle - start_angle).abs();
            let mut u = sgn * (theta - start_angle);
            u %= 2.0 * std::f64::consts::PI;
            if u < 0.0 {
                u += 2.0 * std::f64::consts::PI;
            }
            if u <= extent {
                (hypot2(v) - radius).abs()
            } else {
                let d0 = hypot2(sub(z, arc.start_point()));
                let d1 = hypot2(sub(z, arc.end_point()));
                d0.min(d1)
            }
        }
    }
}

/// Reject self-intersecting cycles: an intersection between two arcs is only
/// tolerated where their endpoints genuinely meet (the chained junctions).
fn check_simple(specs: &[ArcSpec], _offsets: &[f64], length: f64) -> Result<(), GeometryError> {
    let n = specs.len();
    let junction_tol = 1e-9 * length;
    for a in 0..n {
        for b in (a + 1)..n {
            // Shared junction points: endpoints of a coinciding with
            // endpoints of b (covers both junctions of a 2-arc cycle).
            let mut shared = Vec::new();
            for pa in [specs[a].start_point(), specs[a].end_point()] {
                for pb in [specs[b].start_point(), specs[b].end_point()] {
                    if hypot2(sub(pa, pb)) < junction_tol {
                        shared.push(pa);
                    }
                }
            }
            for p in arc_arc_intersections(&specs[a], &specs[b]) {
                let at_junction = shared.iter().any(|&q| hypot2(sub(p, q)) < junction_tol);
                if !at_junction {
                    return Err(GeometryError::SelfIntersecting { a, b });
                }
            }
        }
    }
    Ok(())
}

/// Intersection points of two arcs (exact case analysis).
fn arc_arc_intersections(a: &ArcSpec, b: &ArcSpec) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    match (a, b) {
        (ArcSpec::LineSegment { start, end }, _) => {
            let e = sub(*end, *start);
            let len = hypot2(e);
            let tau = [e[0] / len, e[1] / len];
            for (t, _) in arc_ray_intersections(b, *start, tau) {
                if (-1e-12..=len + 1e-12).contains(&t) {
                    out.push([start[0] + t * tau[0], start[1] + t * tau[1]]);
                }
            }
        }
        (ArcSpec::CircleArc { .. }, ArcSpec::LineSegment { .. }) => {
            // Defer to the segment-vs-arc branch with roles swapped.
            return arc_arc_intersections(b, a);
        }
        (
            ArcSpec::CircleArc {
                center: ca,
                radius: ra,
                ..
            },
            ArcSpec::CircleArc {
                center: cb,
                radius: rb,
                ..
            },
        ) => {
            let d = sub(*cb, *ca);
            let dist = hypot2(d);
            if dist < 1e-14 {
                return out; // concentric: either identical circles (invalid) or disjoint
            }
            let (ra2, rb2) = (ra * ra, rb * rb);
            let x = (dist * dist + ra2 - rb2) / (2.0 * dist);
            let h2 = ra2 - x * x;
            if h2 < -1e-14 {
                return out;
            }
            let h = h2.max(0.0).sqrt();
            let u = [d[0] / dist, d[1] / dist];
            let base = [ca[0] + x * u[0], ca[1] + x * u[1]];
            for sign in [1.0, -1.0] {
                out.push([base[0] - sign * h * u[1], base[1] + sign * h * u[0]]);
                if h < 1e-14 {
                    break; // tangent circles: single point
                }
            }
        }
    }
    // Keep only points actually on arc b (segment branch pushed unchecked).
    out.retain(|&p| arc_point_distance(b, p) < 1e-10 && arc_point_distance(a, p) < 1e-10);
    out
}

#[inline]
fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn hypot2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Ready-made unit disk (one full ccw circle arc, radius 1, centered at the
/// origin).
pub fn unit_disk() -> Domain {
    build_domain(vec![ArcSpec::CircleArc {
        center: [0.0, 0.0],
        radius: 1.0,
        start_angle: 0.0,
        end_angle: 2.0 * std::f64::consts::PI,
    }])
    .expect("unit disk is valid")
}

/// Ready-made stadium: straight sides of half-length `a` at y = ±r, caps of
/// radius `r` centered at (±a, 0). Junctions are C^{1,1} (tangents match), so
/// the stadium has no corners.
pub fn stadium(a: f64, r: f64) -> Domain {
    use std::f64::consts::PI;
    build_domain(vec![
        ArcSpec::LineSegment {
            start: [-a, -r],
            end: [a, -r],
        },
        ArcSpec::CircleArc {
            center: [a, 0.0],
            radius: r,
            start_angle: -PI / 2.0,
            end_angle: PI / 2.0,
        },
        ArcSpec::LineSegment {
            start: [a, r],
            end: [-a, r],
        },
        ArcSpec::CircleArc {
            center: [-a, 0.0],
            radius: r,
            start_angle: PI / 2.0,
            end_angle: 3.0 * PI / 2.0,
        },
    ])
    .expect("stadium is valid")
}

/// Ready-made axis-aligned unit square [0,1]², corners at s = 0, 1, 2, 3.
pub fn unit_square() -> Domain {
    build_domain(vec![
        ArcSpec::LineSegment {
            start: [0.0, 0.0],
            end: [1.0, 0.0],
        },
        ArcSpec::LineSegment {
            start: [1.0, 0.0],
            end: [1.0, 1.0],
        },
        ArcSpec::LineSegment {
            start: [1.0, 1.0],
            end: [0.0, 1.0],
        },
        ArcSpec::LineSegment {
            start: [0.0, 1.0],
            end: [0.0, 0.0],
        },
    ])
    .expect("unit square is valid")
}

/// 64-point Gauss–Legendre rule on [-1, 1], generated by Newton iteration on
/// Legendre polynomials (computed once at first use).
pub fn gauss_legendre_64() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (n, w) = RULE.get_or_init(|| gauss_legendre(64));
    (n, w)
}

/// Gauss–Legendre nodes/weights on [-1, 1] for arbitrary order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
