//! Morse-Smale extraction for the distance function r on the direction
//! sphere: find and classify critical points, trace separatrices of the
//! descent flow, and assemble the primary topology graph.
//!
//! Smooth shapes use geodesic seeding plus chart Newton refinement. Cut
//! spheres are handled structurally: the spherical part carries critical
//! points only where the reference axis meets it, each cut disk carries at
//! most the foot of the reference, and the intersection circles are searched
//! as one-dimensional problems with one-sided classification across the
//! edge. That convention (flow crosses an edge unless both one-sided slopes
//! agree in sign) is the modeling choice for the non-smooth locus.

use crate::body::{
    axpy, cross, dot, grad_from_hit, normalize, scale, sub, tangent_frame, BodySpec, Piece,
    Reference, Shape, SurfaceHit, Vec3,
};
use crate::mass::mass_properties;
use crate::ode::Rk45;
use pebble_graph::canonical::{canonical_key, CanonicalKey};
use pebble_graph::convert::convert;
use pebble_graph::map::{ColoredMap, PrimaryClass, Repr, VertexColor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("non-generic configuration: {0}")]
    NonGeneric(String),
    #[error("index sum {0} != 2 after refinement; critical points missed or spurious")]
    PoincareHopfMismatch(i64),
    #[error("separatrix from saddle {0} did not reach a target")]
    SeparatrixTimeout(usize),
    #[error(transparent)]
    Body(#[from] crate::body::BodyError),
    #[error("graph assembly failed: {0}")]
    Assembly(String),
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub tol_grad: f64,
    pub tol_degenerate: f64,
    pub tol_het: f64,
    pub merge_radius: f64,
    pub seed_level: u32,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol_grad: 1e-10,
            tol_degenerate: 1e-7,
            tol_het: 1e-5,
            merge_radius: 1e-7,
            seed_level: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CritLocus {
    Smooth,
    Disk(usize),
    Circle { plane: usize, psi: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPoint {
    /// Unit direction from the reference point.
    pub direction: Vec3,
    /// Surface point hit along that direction.
    pub point: Vec3,
    pub kind: VertexColor,
    /// Chart Hessian eigenvalues for smooth points; (along, across)
    /// curvature indicators for edge points.
    pub eigenvalues: (f64, f64),
    pub r: f64,
    pub locus: CritLocus,
}

/// How a separatrix reached a target that sits on an intersection circle:
/// by sliding along the circle for `slide_arc` of parameter, having entered
/// from the given side (-1 sphere, +1 disk, 0 when the slide started at a
/// saddle on the same circle). Stacked slide arrivals share a tangent at the
/// target; the side and the slide length order them around the vertex.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArrivalRide {
    pub plane: usize,
    pub dir: f64,
    pub side: i8,
    pub slide_arc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Separatrix {
    pub saddle: usize,
    pub target: usize,
    pub ascending: bool,
    /// Polyline of directions on the sphere, saddle end first.
    pub points: Vec<Vec3>,
    pub arrival_ride: Option<ArrivalRide>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearHeteroclinic {
    pub from_saddle: usize,
    pub near_saddle: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorseSmaleComplex {
    pub critical_points: Vec<CriticalPoint>,
    pub separatrices: Vec<Separatrix>,
    pub near_heteroclinic: Vec<NearHeteroclinic>,
}

/// Full classification record of a body.
#[derive(Debug, Clone)]
pub struct Classification {
    pub reference: Vec3,
    pub class: PrimaryClass,
    pub keys: CanonicalKey,
    pub complex: MorseSmaleComplex,
    pub q3: ColoredMap,
    pub q2: ColoredMap,
}

// ---------------------------------------------------------------------------
// Critical points
// ---------------------------------------------------------------------------

fn arc_distance(a: Vec3, b: Vec3) -> f64 {
    // chord-based: keeps full precision at small separations, where the
    // naive acos(dot) collapses to zero
    let chord = crate::body::norm(sub(a, b));
    if chord < 1.0 {
        2.0 * (chord / 2.0).asin()
    } else {
        dot(a, b).clamp(-1.0, 1.0).acos()
    }
}

/// Chart gradient (2-vector in the frame of `u`).
fn chart_grad(spec: &BodySpec, reference: Vec3, u: Vec3) -> [f64; 2] {
    let g = spec.grad_r(reference, u);
    let (e1, e2) = tangent_frame(u);
    [dot(g, e1), dot(g, e2)]
}

/// Symmetrized finite-difference Hessian of r in the chart at `u`.
fn chart_hessian(spec: &BodySpec, reference: Vec3, u: Vec3) -> [[f64; 2]; 2] {
    let h = 1e-5;
    let (e1, e2) = tangent_frame(u);
    let eval = |du: Vec3| chart_grad(spec, reference, normalize(du));
    let gx_p = eval(axpy(u, h, e1));
    let gx_m = eval(axpy(u, -h, e1));
    let gy_p = eval(axpy(u, h, e2));
    let gy_m = eval(axpy(u, -h, e2));
    let hxx = (gx_p[0] - gx_m[0]) / (2.0 * h);
    let hxy = (gx_p[1] - gx_m[1]) / (2.0 * h);
    let hyx = (gy_p[0] - gy_m[0]) / (2.0 * h);
    let hyy = (gy_p[1] - gy_m[1]) / (2.0 * h);
    [[hxx, 0.5 * (hxy + hyx)], [0.5 * (hxy + hyx), hyy]]
}

fn sym_eigen(m: [[f64; 2]; 2]) -> ((f64, Vec3), (f64, Vec3), (Vec3, Vec3)) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 - disc;
    let l2 = tr / 2.0 + disc;
    let evec = |l: f64| -> [f64; 2] {
        if m[0][1].abs() > 1e-14 {
            let v = [m[0][1], l - m[0][0]];
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        } else if (m[0][0] - l).abs() < (m[1][1] - l).abs() {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    };
    let v1 = evec(l1);
    let v2 = evec(l2);
    (
        (l1, [v1[0], v1[1], 0.0]),
        (l2, [v2[0], v2[1], 0.0]),
        ([0.0; 3], [0.0; 3]),
    )
}

/// Subdivided icosahedron directions at the given level.
pub fn geodesic_grid(level: u32) -> Vec<Vec3> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint: std::collections::HashMap<(usize, usize), usize> = Default::default();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for i in 0..3 {
                let (a, b) = (f[i], f[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[i] = *midpoint.entry(key).or_insert_with(|| {
                    verts.push(normalize(axpy(verts[a], 1.0, verts[b])));
                    verts.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push(mid);
        }
        faces = next;
    }
    verts
}

fn classify_smooth(
    spec: &BodySpec,
    reference: Vec3,
    u: Vec3,
    opts: &FlowOptions,
) -> Result<CriticalPoint, FlowError> {
    let hess = chart_hessian(spec, reference, u);
    let ((l1, _), (l2, _), _) = sym_eigen(hess);
    if l1.abs() < opts.tol_degenerate || l2.abs() < opts.tol_degenerate {
        return Err(FlowError::NonGeneric(format!(
            "near-degenerate Hessian eigenvalue at {u:?}"
        )));
    }
    let kind = if l1 > 0.0 && l2 > 0.0 {
        VertexColor::Sink
    } else if l1 < 0.0 && l2 < 0.0 {
        VertexColor::Source
    } else {
        VertexColor::Saddle
    };
    let hit = spec.probe(reference, u);
    Ok(CriticalPoint {
        direction: u,
        point: hit.point,
        kind,
        eigenvalues: (l1, l2),
        r: hit.r,
        locus: CritLocus::Smooth,
    })
}

fn find_critical_points_smooth(
    spec: &BodySpec,
    reference: Vec3,
    opts: &FlowOptions,
    level: u32,
) -> Result<Vec<CriticalPoint>, FlowError> {
    let seeds = geodesic_grid(level);
    let mut found: Vec<Vec3> = Vec::new();
    for seed in seeds {
        let mut u = seed;
        let mut ok = false;
        for _ in 0..60 {
            let g = chart_grad(spec, reference, u);
            let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if gn <= opts.tol_grad {
                ok = true;
                break;
            }
            let h = chart_hessian(spec, reference, u);
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let (d1, d2) = if det.abs() > 1e-14 {
                (
                    (g[0] * h[1][1] - g[1] * h[0][1]) / det,
                    (g[1] * h[0][0] - g[0] * h[1][0]) / det,
                )
            } else {
                (g[0], g[1])
            };
            let step_cap = 0.2;
            let n = (d1 * d1 + d2 * d2).sqrt();
            let s = if n > step_cap { step_cap / n } else { 1.0 };
            let (e1, e2) = tangent_frame(u);
            u = normalize(axpy(axpy(u, -s * d1, e1), -s * d2, e2));
        }
        if !ok {
            continue;
        }
        if found.iter().all(|&v| arc_distance(u, v) > 1e-6) {
            found.push(u);
        }
    }
    // merge-radius degeneracy check
    for i in 0..found.len() {
        for j in (i + 1)..found.len() {
            let d = arc_distance(found[i], found[j]);
            if d < opts.merge_radius {
                return Err(FlowError::NonGeneric(format!(
                    "critical points within merge radius ({d:.2e})"
                )));
            }
        }
    }
    found
        .into_iter()
        .map(|u| classify_smooth(spec, reference, u, opts))
        .collect()
}

/// Frame of an intersection circle point: position, direction from the
/// reference, tangents of the circle curve on the direction sphere, and the
/// one-sided radial slopes into the disk and sphere sides.
pub(crate) struct CircleFrame {
    pub q: Vec3,
    pub u: Vec3,
    pub r: f64,
    pub along: Vec3,
    pub across_diskward: Vec3,
    pub slope_disk: f64,
    pub slope_sphere: f64,
    pub along_curvature: f64,
}

pub(crate) fn circle_point(spec: &BodySpec, plane_idx: usize, psi: f64) -> Vec3 {
    let Shape::TruncatedSphere { planes } = &spec.shape else {
        panic!("circle_point on a smooth shape")
    };
    let p = &planes[plane_idx];
    let (a, b) = tangent_frame(p.normal);
    let rr = p.circle_radius();
    axpy(
        axpy(scale(p.normal, p.offset), rr * psi.cos(), a),
        rr * psi.sin(),
        b,
    )
}

pub(crate) fn circle_frame(
    spec: &BodySpec,
    reference: Vec3,
    plane_idx: usize,
    psi: f64,
) -> CircleFrame {
    let Shape::TruncatedSphere { planes } = &spec.shape else {
        panic!("circle_frame on a smooth shape")
    };
    let p = &planes[plane_idx];
    let (a, b) = tangent_frame(p.normal);
    let rr = p.circle_radius();
    let q = circle_point(spec, plane_idx, psi);
    let dq = axpy(scale(a, -rr * psi.sin()), rr * psi.cos(), b);
    let diff = sub(q, reference);
    let r = crate::body::norm(diff);
    let u = scale(diff, 1.0 / r);
    // tangent of the direction curve: projection of dq
    let along = normalize(axpy(dq, -dot(dq, u), u));
    let mut across = cross(u, along);
    if dot(across, p.normal) < 0.0 {
        across = scale(across, -1.0);
    }
    let disk_hit = SurfaceHit {
        r,
        point: q,
        normal: p.normal,
        piece: Piece::Disk(plane_idx),
    };
    let sphere_hit = SurfaceHit {
        r,
        point: q,
        normal: q,
        piece: Piece::Sphere,
    };
    let slope_disk = dot(grad_from_hit(&disk_hit, u), across);
    let slope_sphere = -dot(grad_from_hit(&sphere_hit, u), across);
    // curvature of r along the circle: f'' = g''/(2 r) at critical points,
    // with g = |q - ref|^2, q'' = -(q - center)
    let qpp = scale(sub(q, scale(p.normal, p.offset)), -1.0);
    let gpp = 2.0 * dot(dq, dq) + 2.0 * dot(diff, qpp);
    let along_curvature = gpp / (2.0 * r);
    CircleFrame {
        q,
        u,
        r,
        along,
        across_diskward: across,
        slope_disk,
        slope_sphere,
        along_curvature,
    }
}

fn find_critical_points_cut(
    spec: &BodySpec,
    reference: Vec3,
    opts: &FlowOptions,
) -> Result<Vec<CriticalPoint>, FlowError> {
    let Shape::TruncatedSphere { planes } = &spec.shape else {
        unreachable!()
    };
    let p_norm = crate::body::norm(reference);
    if p_norm < 1e-9 {
        return Err(FlowError::NonGeneric(
            "reference at the sphere center: every spherical point is critical".into(),
        ));
    }
    let rho_hat = scale(reference, 1.0 / p_norm);
    let mut out = Vec::new();
    // spherical poles of the reference axis
    for (q, kind) in [
        (rho_hat, VertexColor::Sink),
        (scale(rho_hat, -1.0), VertexColor::Source),
    ] {
        let clear = planes
            .iter()
            .all(|p| dot(q, p.normal) < p.offset - 1e-12);
        if clear {
            let lam = match kind {
                VertexColor::Sink => p_norm / (1.0 - p_norm),
                _ => -p_norm / (1.0 + p_norm),
            };
            let diff = sub(q, reference);
            let r = crate::body::norm(diff);
            out.push(CriticalPoint {
                direction: scale(diff, 1.0 / r),
                point: q,
                kind,
                eigenvalues: (lam, lam),
                r,
                locus: CritLocus::Smooth,
            });
        }
    }
    // disk feet
    for (k, p) in planes.iter().enumerate() {
        let gap = p.offset - dot(reference, p.normal);
        let foot = axpy(reference, gap, p.normal);
        let dist_center = crate::body::norm(sub(foot, scale(p.normal, p.offset)));
        if dist_center < p.circle_radius() {
            // curvature of r over the flat disk: 1/gap in both directions
            out.push(CriticalPoint {
                direction: p.normal,
                point: foot,
                kind: VertexColor::Sink,
                eigenvalues: (1.0 / gap, 1.0 / gap),
                r: gap,
                locus: CritLocus::Disk(k),
            });
        }
    }
    // circle equilibria by one-dimensional search
    for (k, _) in planes.iter().enumerate() {
        let f = |psi: f64| {
            let q = circle_point(spec, k, psi);
            dot(sub(q, reference), sub(q, reference))
        };
        let fp = |psi: f64| {
            let h = 1e-7;
            (f(psi + h) - f(psi - h)) / (2.0 * h)
        };
        let n_scan = 720;
        let tau = 2.0 * std::f64::consts::PI;
        let mut criticals = Vec::new();
        for i in 0..n_scan {
            let a = tau * i as f64 / n_scan as f64;
            let b = tau * (i + 1) as f64 / n_scan as f64;
            let (fa, fb) = (fp(a), fp(b));
            if fa == 0.0 {
                criticals.push(a);
            } else if fa * fb < 0.0 {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = fp(mid);
                    if flo * fm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                criticals.push(0.5 * (lo + hi));
            }
        }
        for psi in criticals {
            let fr = circle_frame(spec, reference, k, psi);
            let (sd, ss) = (fr.slope_disk, fr.slope_sphere);
            if sd.abs() < opts.tol_degenerate || ss.abs() < opts.tol_degenerate {
                return Err(FlowError::NonGeneric(format!(
                    "flat one-sided slope at circle {k}"
                )));
            }
            if sd * ss < 0.0 {
                continue; // flow crosses the edge here
            }
            let across_min = sd > 0.0;
            if fr.along_curvature.abs() < opts.tol_degenerate {
                return Err(FlowError::NonGeneric(format!(
                    "flat along-circle curvature at circle {k}"
                )));
            }
            let along_min = fr.along_curvature > 0.0;
            let kind = match (along_min, across_min) {
                (true, true) => VertexColor::Sink,
                (false, false) => VertexColor::Source,
                _ => VertexColor::Saddle,
            };
            out.push(CriticalPoint {
                direction: fr.u,
                point: fr.q,
                kind,
                eigenvalues: (
                    fr.along_curvature,
                    if across_min { 1.0 } else { -1.0 } * sd.abs().min(ss.abs()),
                ),
                r: fr.r,
                locus: CritLocus::Circle { plane: k, psi },
            });
        }
    }
    // merge-radius check
    for i in 0..out.len() {
        for j in (i + 1)..out.len() {
            let d = arc_distance(out[i].direction, out[j].direction);
            if d < opts.merge_radius {
                return Err(FlowError::NonGeneric(format!(
                    "critical points within merge radius ({d:.2e})"
                )));
            }
        }
    }
    Ok(out)
}

fn poincare_hopf(cps: &[CriticalPoint]) -> i64 {
    let mut sum = 0i64;
    for c in cps {
        sum += match c.kind {
            VertexColor::Sink | VertexColor::Source => 1,
            VertexColor::Saddle => -1,
        };
    }
    sum
}

/// Find all critical points of r with respect to `reference`; the index sum
/// certifies completeness (one seeding refinement is attempted for smooth
/// shapes before giving up).
pub fn find_critical_points(
    spec: &BodySpec,
    reference: Vec3,
    opts: &FlowOptions,
) -> Result<Vec<CriticalPoint>, FlowError> {
    let mut cps = match &spec.shape {
        Shape::TruncatedSphere { .. } => find_critical_points_cut(spec, reference, opts)?,
        _ => {
            let first = find_critical_points_smooth(spec, reference, opts, opts.seed_level)?;
            if poincare_hopf(&first) == 2 {
                first
            } else {
                find_critical_points_smooth(spec, reference, opts, opts.seed_level + 1)?
            }
        }
    };
    let chi = poincare_hopf(&cps);
    if chi != 2 {
        return Err(FlowError::PoincareHopfMismatch(chi));
    }
    // deterministic order: kind, then direction lexicographically
    cps.sort_by(|a, b| {
        (a.kind.code(), quantize(a.direction)).cmp(&(b.kind.code(), quantize(b.direction)))
    });
    Ok(cps)
}

fn quantize(v: Vec3) -> [i64; 3] {
    [0, 1, 2].map(|i| (v[i] * 1e12).round() as i64)
}

// ---------------------------------------------------------------------------
// Separatrix tracing
// ---------------------------------------------------------------------------

struct TraceOutcome {
    target: usize,
    points: Vec<Vec3>,
    near: Vec<(usize, f64)>,
    arrival_ride: Option<ArrivalRide>,
}

/// One leg of a separatrix: free flow on a smooth region, or sliding along
/// an intersection circle that is locally a ridge (ascent) or valley
/// (descent). `side` records where the slide was entered from.
enum Leg {
    Flow { start: Vec3 },
    Ride { plane: usize, psi: f64, dir: f64, side: i8 },
}

enum LegEnd {
    Target(usize, Option<ArrivalRide>),
    Handoff(Leg),
}

/// Nearest circle of a cut sphere to the direction `u`, with its parameter.
fn nearest_circle(spec: &BodySpec, reference: Vec3, u: Vec3) -> Option<(usize, f64, f64)> {
    let Shape::TruncatedSphere { planes } = &spec.shape else {
        return None;
    };
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 0..planes.len() {
        // coarse scan plus refinement of the nearest parameter
        let mut bpsi = 0.0;
        let mut bd = f64::INFINITY;
        let n = 256;
        for i in 0..n {
            let psi = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let d = arc_distance(circle_frame(spec, reference, k, psi).u, u);
            if d < bd {
                bd = d;
                bpsi = psi;
            }
        }
        let mut lo = bpsi - 0.05;
        let mut hi = bpsi + 0.05;
        for _ in 0..50 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let d1 = arc_distance(circle_frame(spec, reference, k, m1).u, u);
            let d2 = arc_distance(circle_frame(spec, reference, k, m2).u, u);
            if d1 < d2 {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let psi = 0.5 * (lo + hi);
        let d = arc_distance(circle_frame(spec, reference, k, psi).u, u);
        if best.map(|(_, _, bd)| d < bd).unwrap_or(true) {
            best = Some((k, psi, d));
        }
    }
    best
}

/// Integrate free flow until a target, a sliding stall, or failure.
#[allow(clippy::too_many_arguments)]
fn leg_flow(
    spec: &BodySpec,
    reference: Vec3,
    cps: &[CriticalPoint],
    saddle_idx: usize,
    start: Vec3,
    ascending: bool,
    opts: &FlowOptions,
    points: &mut Vec<Vec3>,
    near: &mut Vec<(usize, f64)>,
) -> Result<LegEnd, FlowError> {
    let sgn = if ascending { 1.0 } else { -1.0 };
    let spec2 = spec.clone();
    let field = move |y: &[f64; 3]| {
        let u = normalize(*y);
        let g = spec2.grad_r(reference, u);
        let t = axpy(g, -dot(g, u), u);
        [sgn * t[0], sgn * t[1], sgn * t[2]]
    };
    let want = if ascending {
        VertexColor::Source
    } else {
        VertexColor::Sink
    };
    let mut ode = Rk45::new(field, start, 1e-10, 0.05);
    points.push(start);
    let mut min_to_saddles: Vec<f64> = vec![f64::INFINITY; cps.len()];
    let mut small_h = 0usize;
    let done = |near: &mut Vec<(usize, f64)>, mins: &[f64]| {
        for (j, &m) in mins.iter().enumerate() {
            if j != saddle_idx && cps[j].kind == VertexColor::Saddle && m < opts.tol_het {
                near.push((j, m));
            }
        }
    };
    for _ in 0..400_000 {
        ode.step();
        ode.y = normalize(ode.y);
        let u = ode.y;
        // a collapsed step size over many steps means the trajectory is
        // chattering across a non-smooth edge: hand the branch to the slide
        // tracer along the adjacent circle
        if ode.current_step() < 1e-4 {
            small_h += 1;
        } else {
            small_h = 0;
        }
        if small_h >= 100 {
            small_h = 0;
            if let Some((plane, psi, d)) = nearest_circle(spec, reference, u) {
                if d < 1e-3 {
                    let fr = circle_frame(spec, reference, plane, psi);
                    let sphere_hit = SurfaceHit {
                        r: fr.r,
                        point: fr.q,
                        normal: fr.q,
                        piece: Piece::Sphere,
                    };
                    let along_slope = dot(grad_from_hit(&sphere_hit, fr.u), fr.along);
                    let dir = if ascending {
                        along_slope.signum()
                    } else {
                        -along_slope.signum()
                    };
                    let side = if dot(sub(u, fr.u), fr.across_diskward) >= 0.0 {
                        1i8
                    } else {
                        -1i8
                    };
                    done(near, &min_to_saddles);
                    return Ok(LegEnd::Handoff(Leg::Ride { plane, psi, dir, side }));
                }
            }
        }
        if points.last().map(|&p| arc_distance(p, u) > 1e-4).unwrap_or(true) {
            points.push(u);
        }
        for (i, c) in cps.iter().enumerate() {
            let d = arc_distance(u, c.direction);
            if c.kind == want && d < 1e-6 {
                points.push(c.direction);
                done(near, &min_to_saddles);
                return Ok(LegEnd::Target(i, None));
            }
            if c.kind == VertexColor::Saddle {
                min_to_saddles[i] = min_to_saddles[i].min(d);
            }
        }
        if ode.t > 5e4 {
            break;
        }
    }
    if std::env::var_os("PEBBLE_TRACE_DEBUG").is_some() {
        eprintln!(
            "trace timeout: saddle {saddle_idx} asc={ascending} at {:?} t={}",
            ode.y, ode.t
        );
    }
    Err(FlowError::SeparatrixTimeout(saddle_idx))
}

/// Slide along a circle while it stays a ridge/valley; stop at a circle
/// equilibrium of the right kind or hand back to free flow.
#[allow(clippy::too_many_arguments)]
fn leg_ride(
    spec: &BodySpec,
    reference: Vec3,
    cps: &[CriticalPoint],
    saddle_idx: usize,
    plane: usize,
    psi0: f64,
    dir: f64,
    side: i8,
    ascending: bool,
    points: &mut Vec<Vec3>,
) -> Result<LegEnd, FlowError> {
    let mut psi = psi0;
    let dpsi = 5e-4 * dir;
    points.push(circle_frame(spec, reference, plane, psi).u);
    let want = if ascending {
        VertexColor::Source
    } else {
        VertexColor::Sink
    };
    for step in 0..40_000u32 {
        let next = psi + dpsi;
        let fr = circle_frame(spec, reference, plane, next);
        let ride_ok = if ascending {
            fr.slope_disk < 0.0 && fr.slope_sphere < 0.0
        } else {
            fr.slope_disk > 0.0 && fr.slope_sphere > 0.0
        };
        if !ride_ok {
            let into_disk = if ascending {
                fr.slope_disk > 0.0
            } else {
                fr.slope_disk < 0.0
            };
            let w = if into_disk {
                fr.across_diskward
            } else {
                scale(fr.across_diskward, -1.0)
            };
            let start = normalize(axpy(fr.u, 1e-6, w));
            return Ok(LegEnd::Handoff(Leg::Flow { start }));
        }
        psi = next;
        points.push(fr.u);
        for (i, c) in cps.iter().enumerate() {
            if i == saddle_idx {
                continue;
            }
            if let CritLocus::Circle { plane: cp, .. } = c.locus {
                if cp == plane
                    && c.kind == want
                    && arc_distance(fr.u, c.direction) < 1.5_f64 * dpsi.abs()
                {
                    points.push(c.direction);
                    let ride = ArrivalRide {
                        plane,
                        dir,
                        side,
                        slide_arc: (step as f64 + 1.0) * dpsi.abs(),
                    };
                    return Ok(LegEnd::Target(i, Some(ride)));
                }
            }
        }
    }
    Err(FlowError::SeparatrixTimeout(saddle_idx))
}

/// Follow one separatrix branch through flow and slide legs.
fn trace_branch(
    spec: &BodySpec,
    reference: Vec3,
    cps: &[CriticalPoint],
    saddle_idx: usize,
    first: Leg,
    ascending: bool,
    opts: &FlowOptions,
) -> Result<TraceOutcome, FlowError> {
    let mut points = Vec::new();
    let mut near = Vec::new();
    let mut leg = first;
    let debug = std::env::var_os("PEBBLE_TRACE_DEBUG").is_some();
    for _ in 0..64 {
        if debug {
            match &leg {
                Leg::Flow { start } => eprintln!("  leg flow s{saddle_idx} asc={ascending} from {start:?}"),
                Leg::Ride { plane, psi, dir, side } => {
                    eprintln!("  leg ride s{saddle_idx} asc={ascending} plane {plane} psi {psi:.4} dir {dir} side {side}")
                }
            }
        }
        let end = match leg {
            Leg::Flow { start } => leg_flow(
                spec, reference, cps, saddle_idx, start, ascending, opts, &mut points, &mut near,
            )?,
            Leg::Ride { plane, psi, dir, side } => leg_ride(
                spec, reference, cps, saddle_idx, plane, psi, dir, side, ascending, &mut points,
            )?,
        };
        match end {
            LegEnd::Target(i, ride) => {
                return Ok(TraceOutcome {
                    target: i,
                    points,
                    near,
                    arrival_ride: ride,
                })
            }
            LegEnd::Handoff(next) => leg = next,
        }
    }
    Err(FlowError::SeparatrixTimeout(saddle_idx))
}

/// Branch directions of a saddle: (descending pair, ascending pair), each
/// item being either a plain tangent start or a circle ride.
enum Branch {
    Tangent(Vec3),
    Ride { plane: usize, psi: f64, dir: f64 },
}

fn saddle_branches(spec: &BodySpec, reference: Vec3, c: &CriticalPoint) -> (Vec<Branch>, Vec<Branch>) {
    match c.locus {
        CritLocus::Smooth => {
            let h = chart_hessian(spec, reference, c.direction);
            let ((l1, v1), (l2, v2), _) = sym_eigen(h);
            let (e1, e2) = tangent_frame(c.direction);
            let to_ambient = |v: Vec3| normalize(axpy(scale(e1, v[0]), v[1], e2));
            let (vm, vp) = if l1 < l2 { (v1, v2) } else { (v2, v1) };
            let down = to_ambient(vm);
            let up = to_ambient(vp);
            (
                vec![Branch::Tangent(down), Branch::Tangent(scale(down, -1.0))],
                vec![Branch::Tangent(up), Branch::Tangent(scale(up, -1.0))],
            )
        }
        CritLocus::Circle { plane, psi } => {
            let fr = circle_frame(spec, reference, plane, psi);
            let across_min = fr.slope_disk > 0.0;
            let across = vec![
                Branch::Tangent(fr.across_diskward),
                Branch::Tangent(scale(fr.across_diskward, -1.0)),
            ];
            let rides = vec![
                Branch::Ride { plane, psi, dir: 1.0 },
                Branch::Ride { plane, psi, dir: -1.0 },
            ];
            if across_min {
                // valley across, descending along the circle is impossible:
                // the saddle descends along the circle (along-max)
                (rides, across)
            } else {
                (across, rides)
            }
        }
        CritLocus::Disk(_) => unreachable!("disk feet are sinks"),
    }
}

/// Trace all separatrices of the descent flow.
pub fn trace_complex(
    spec: &BodySpec,
    reference: Vec3,
    cps: &[CriticalPoint],
    opts: &FlowOptions,
) -> Result<MorseSmaleComplex, FlowError> {
    let mut separatrices = Vec::new();
    let mut near_het = Vec::new();
    for (i, c) in cps.iter().enumerate() {
        if c.kind != VertexColor::Saddle {
            continue;
        }
        let (down, up) = saddle_branches(spec, reference, c);
        for (branches, ascending) in [(down, false), (up, true)] {
            for b in branches {
                let leg = match b {
                    Branch::Tangent(w) => Leg::Flow {
                        start: normalize(axpy(c.direction, 1e-6, w)),
                    },
                    Branch::Ride { plane, psi, dir } => Leg::Ride {
                        plane,
                        psi,
                        dir,
                        side: 0,
                    },
                };
                let out = trace_branch(spec, reference, cps, i, leg, ascending, opts)?;
                for (j, d) in &out.near {
                    near_het.push(NearHeteroclinic {
                        from_saddle: i,
                        near_saddle: *j,
                        distance: *d,
                    });
                }
                let mut points = out.points;
                points.insert(0, c.direction);
                separatrices.push(Separatrix {
                    saddle: i,
                    target: out.target,
                    ascending,
                    points,
                    arrival_ride: out.arrival_ride,
                });
            }
        }
    }
    Ok(MorseSmaleComplex {
        critical_points: cps.to_vec(),
        separatrices,
        near_heteroclinic: near_het,
    })
}

// ---------------------------------------------------------------------------
// Graph assembly
// ---------------------------------------------------------------------------

/// Angle of an incident separatrix at a critical point, in its oriented
/// tangent frame.
fn slot_angle(at: Vec3, toward: Vec3) -> f64 {
    let (e1, e2) = tangent_frame(at);
    let w = normalize(axpy(toward, -dot(toward, at), at));
    dot(w, e2).atan2(dot(w, e1))
}

/// A point on the polyline at roughly the given arc distance from an end.
fn polyline_probe(points: &[Vec3], from_start: bool, want_arc: f64) -> Vec3 {
    let idx: Box<dyn Iterator<Item = usize>> = if from_start {
        Box::new(0..points.len())
    } else {
        Box::new((0..points.len()).rev())
    };
    let end = if from_start {
        points[0]
    } else {
        points[points.len() - 1]
    };
    let mut last = end;
    for i in idx {
        let d = arc_distance(points[i], end);
        if d >= want_arc {
            return points[i];
        }
        last = points[i];
    }
    last
}

/// Assemble the primary topology graph from the traced complex.
///
/// Separatrices that slid along the same intersection circle into a target
/// share the arrival tangent; they are ordered around the vertex by which
/// side of the sliding crest they came from and, within a side, by how far
/// along the circle they joined (later joiners lie outside earlier ones).
pub fn to_q3_map(
    spec: &BodySpec,
    reference: Vec3,
    complex: &MorseSmaleComplex,
) -> Result<ColoredMap, FlowError> {
    assemble_q3(spec, reference, complex).map(|(m, _)| m)
}

/// Assembly that also reports the ambiguous slot clusters (vertex, slot
/// index range) whose internal order rested on near-tie resolution.
fn assemble_q3(
    spec: &BodySpec,
    reference: Vec3,
    complex: &MorseSmaleComplex,
) -> Result<(ColoredMap, Vec<(usize, usize, usize)>), FlowError> {
    let cps = &complex.critical_points;
    let colors: Vec<VertexColor> = cps.iter().map(|c| c.kind).collect();
    if complex.separatrices.is_empty() {
        if colors.len() == 2 {
            return pebble_graph::map::ColoredMap::new(colors, vec![vec![], vec![]], &[])
                .map(|m| (m, Vec::new()))
                .map_err(|e| FlowError::Assembly(e.to_string()));
        }
        return Err(FlowError::Assembly(
            "no separatrices on a complex with more than two critical points".into(),
        ));
    }
    struct Slot {
        hid: u32,
        sep: usize,
        from_start: bool,
        angle0: f64,
        /// For arrivals that slid along the target's own circle: the angular
        /// side of the offset from the crest (+/-1) and the slide length.
        ride_key: Option<(f64, f64)>,
    }
    let mut slots: Vec<Vec<Slot>> = (0..cps.len()).map(|_| Vec::new()).collect();
    let mut twins = Vec::new();
    for (s, sep) in complex.separatrices.iter().enumerate() {
        let h_saddle = (2 * s) as u32;
        let h_target = (2 * s + 1) as u32;
        twins.push((h_saddle, h_target));
        let probe_arc = 2e-3;
        let at_saddle = cps[sep.saddle].direction;
        let toward = polyline_probe(&sep.points, true, probe_arc);
        slots[sep.saddle].push(Slot {
            hid: h_saddle,
            sep: s,
            from_start: true,
            angle0: slot_angle(at_saddle, toward),
            ride_key: None,
        });
        let at_target = cps[sep.target].direction;
        let mut ride_key = None;
        let mut angle0 = None;
        if let (Some(ride), CritLocus::Circle { plane, psi }) =
            (&sep.arrival_ride, &cps[sep.target].locus)
        {
            if ride.plane == *plane {
                let fr = circle_frame(spec, reference, *plane, *psi);
                let back = scale(fr.along, -ride.dir);
                let theta = slot_angle(at_target, axpy(at_target, 1.0, back));
                let (e1, e2) = tangent_frame(at_target);
                let t_perp = axpy(scale(e1, -theta.sin()), theta.cos(), e2);
                let sphere_ward = scale(fr.across_diskward, -1.0);
                let sigma = dot(sphere_ward, t_perp).signum();
                let s_ang = -(ride.side as f64) * sigma;
                ride_key = Some((s_ang, ride.slide_arc));
                angle0 = Some(theta);
            }
        }
        let angle0 = angle0.unwrap_or_else(|| {
            slot_angle(at_target, polyline_probe(&sep.points, false, probe_arc))
        });
        slots[sep.target].push(Slot {
            hid: h_target,
            sep: s,
            from_start: false,
            angle0,
            ride_key,
        });
    }
    // Order each vertex's slots cyclically. Slots whose leading angles tie
    // (separatrices that slid along a shared edge into the vertex, or that
    // ran a long parallel corridor) are nested curves: first compare their
    // polylines at growing distances from the vertex; if that never
    // separates them, use the transverse offset where the two corridors run
    // parallel. Trajectories of one flow cannot cross, so either sign is
    // the cyclic order at the vertex.
    let wrap = |mut d: f64| {
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        d
    };
    // keep the probes local: beyond ~a third of a radian the angular order
    // seen from the vertex stops reflecting the nesting of the curves
    let radii: [f64; 7] = [5e-3, 1e-2, 2e-2, 4e-2, 8e-2, 0.16, 0.32];
    let mut clusters: Vec<(usize, usize, usize)> = Vec::new();
    let mut rotation = Vec::with_capacity(cps.len());
    for (v, mut sl) in slots.into_iter().enumerate() {
        let at = cps[v].direction;
        sl.sort_by(|a, b| a.angle0.partial_cmp(&b.angle0).unwrap());
        if sl.is_empty() {
            rotation.push(Vec::new());
            continue;
        }
        let n = sl.len();
        // cut the cycle at the largest angular gap, then group near-ties
        let mut cut = 0;
        let mut best_gap = -1.0;
        for i in 0..n {
            let a = sl[i].angle0;
            let b = sl[(i + 1) % n].angle0
                + if i + 1 == n { 2.0 * std::f64::consts::PI } else { 0.0 };
            if b - a > best_gap {
                best_gap = b - a;
                cut = (i + 1) % n;
            }
        }
        sl.rotate_left(cut);
        let compare = |a: &Slot, b: &Slot| -> std::cmp::Ordering {
            use std::cmp::Ordering;
            let pa = &complex.separatrices[a.sep].points;
            let pb = &complex.separatrices[b.sep].points;
            for r in radii {
                let qa = polyline_probe(pa, a.from_start, r);
                let qb = polyline_probe(pb, b.from_start, r);
                let d = wrap(slot_angle(at, qa) - slot_angle(at, qb));
                if d.abs() > 0.05 {
                    return d.partial_cmp(&0.0).unwrap();
                }
            }
            // arrivals stacked on a crest: the side of the crest decides;
            // within a side the longer slide hugs the crest more closely,
            // and equal slides are ordered by the transverse offset at a
            // common cross-section just before the funnel
            if let (Some((sa, la)), Some((sb, lb))) = (a.ride_key, b.ride_key) {
                if sa != sb {
                    return sa.partial_cmp(&sb).unwrap();
                }
                if (la - lb).abs() > 2e-3 {
                    // angle = crest + side * eps(L), eps decreasing in L
                    let d = sa * (lb - la);
                    return d.partial_cmp(&0.0).unwrap();
                }
                let ra = complex.separatrices[a.sep].arrival_ride.unwrap();
                let rb = complex.separatrices[b.sep].arrival_ride.unwrap();
                if let CritLocus::Circle { plane, psi } = cps[v].locus {
                    if ra.plane == plane && rb.plane == plane && ra.dir == rb.dir {
                        // back off along the approach direction to a section
                        // just outside both funnels
                        let back = la.max(lb) + 3e-3;
                        let psi_star = psi - ra.dir * back;
                        let ea = ridge_offset_at(spec, reference, plane, psi_star, pa);
                        let eb = ridge_offset_at(spec, reference, plane, psi_star, pb);
                        if let (Some(ea), Some(eb)) = (ea, eb) {
                            if (ea - eb).abs() > 1e-12 {
                                let d = sa * (ea - eb);
                                return d.partial_cmp(&0.0).unwrap();
                            }
                        }
                    }
                }
            }
            if let Some(sigma) = corridor_sign(pa, pb) {
                // the transported transverse offset agrees with the angular
                // direction at an arrival slot and flips at a departure slot
                let greater = if a.from_start { sigma > 0.0 } else { sigma < 0.0 };
                return if greater { Ordering::Greater } else { Ordering::Less };
            }
            a.hid.cmp(&b.hid)
        };
        let mut ordered: Vec<u32> = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && wrap(sl[j].angle0 - sl[j - 1].angle0).abs() < 0.05 {
                j += 1;
            }
            if j - i > 1 {
                clusters.push((v, ordered.len(), ordered.len() + (j - i)));
            }
            let mut idx: Vec<usize> = (i..j).collect();
            idx.sort_by(|&x, &y| compare(&sl[x], &sl[y]));
            ordered.extend(idx.into_iter().map(|x| sl[x].hid));
            i = j;
        }
        rotation.push(ordered);
    }
    pebble_graph::map::ColoredMap::new(colors, rotation, &twins)
        .map(|m| (m, clusters))
        .map_err(|e| FlowError::Assembly(e.to_string()))
}

/// When the assembled graph fails the quadrangulation checks, the nesting of
/// some stacked cluster was resolved wrongly by the numerics. Search the
/// within-cluster permutations (bounded) for an order that validates; the
/// abstract graph is unaffected by any such choice.
fn repair_assembly(
    q3: &ColoredMap,
    clusters: &[(usize, usize, usize)],
) -> Option<ColoredMap> {
    let perm_lists: Vec<Vec<Vec<usize>>> = clusters
        .iter()
        .map(|&(_, lo, hi)| permutations_upto(hi - lo))
        .collect();
    let total: usize = perm_lists.iter().map(|p| p.len()).product();
    if total == 0 || total > 200_000 {
        return None;
    }
    let twins: Vec<(u32, u32)> = (0..q3.n_half_edges() as u32)
        .filter(|&h| h < q3.twin(h))
        .map(|h| (h, q3.twin(h)))
        .collect();
    let base: Vec<Vec<u32>> = (0..q3.n_vertices() as u32)
        .map(|v| q3.rotation(v).to_vec())
        .collect();
    let mut counters = vec![0usize; clusters.len()];
    loop {
        let mut rots = base.clone();
        for (ci, &(v, lo, hi)) in clusters.iter().enumerate() {
            let perm = &perm_lists[ci][counters[ci]];
            let orig: Vec<u32> = base[v][lo..hi].to_vec();
            for (k, &p) in perm.iter().enumerate() {
                rots[v][lo + k] = orig[p];
            }
            let _ = hi;
        }
        if let Ok(m) =
            pebble_graph::map::ColoredMap::new(q3.colors().to_vec(), rots, &twins)
        {
            if pebble_graph::map::validate(&m, Repr::Q3)
                .map(|r| r.passed())
                .unwrap_or(false)
            {
                return Some(m);
            }
        }
        // advance the mixed-radix counter
        let mut k = 0;
        loop {
            if k == counters.len() {
                return None;
            }
            counters[k] += 1;
            if counters[k] < perm_lists[k].len() {
                break;
            }
            counters[k] = 0;
            k += 1;
        }
    }
}

fn permutations_upto(n: usize) -> Vec<Vec<usize>> {
    if n > 6 {
        return Vec::new();
    }
    let mut out = vec![vec![]];
    for k in 0..n {
        let mut next = Vec::new();
        for p in out {
            for i in 0..=k {
                let mut q = p.clone();
                q.insert(i, k);
                next.push(q);
            }
        }
        out = next;
    }
    // normalize so the identity comes first
    out.sort_by_key(|p| {
        p.iter()
            .enumerate()
            .map(|(i, &x)| (x as i64 - i as i64).unsigned_abs())
            .sum::<u64>()
    });
    out
}

/// Arc offset of a polyline from an intersection circle at the cross-section
/// with circle parameter `psi_star`: the distance to the circle of the
/// polyline point whose circle-frame azimuth is nearest the section.
fn ridge_offset_at(
    spec: &BodySpec,
    reference: Vec3,
    plane: usize,
    psi_star: f64,
    poly: &[Vec3],
) -> Option<f64> {
    let Shape::TruncatedSphere { planes } = &spec.shape else {
        return None;
    };
    let (ax, bx) = tangent_frame(planes[plane].normal);
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrap = |mut d: f64| {
        while d > std::f64::consts::PI {
            d -= two_pi;
        }
        while d < -std::f64::consts::PI {
            d += two_pi;
        }
        d
    };
    // walk the contiguous funnel tail backward from the arrival; azimuths of
    // points far from the circle alias and must not be matched
    let mut best: Option<(f64, f64)> = None; // (|dpsi|, offset)
    for &u in poly.iter().rev() {
        let psi = dot(u, bx).atan2(dot(u, ax));
        let fr = circle_frame(spec, reference, plane, psi);
        let off = arc_distance(u, fr.u);
        if off > 0.1 {
            break;
        }
        let dpsi = wrap(psi - psi_star).abs();
        if best.map(|(d, _)| dpsi < d).unwrap_or(true) {
            best = Some((dpsi, off));
        }
    }
    let (dpsi, off) = best?;
    (dpsi < 0.01).then_some(off)
}

/// Sign of the transverse offset of polyline `b` relative to `a` in their
/// shared corridor, in the frame (tangent, normal = point x tangent).
/// Trajectories of one flow cannot cross, so the sign is constant along a
/// genuine corridor; the tightest separation above sampling noise is the
/// most reliable witness (wide separations may pair unrelated stretches).
pub fn corridor_sign(a: &[Vec3], b: &[Vec3]) -> Option<f64> {
    if a.len() < 8 || b.len() < 8 {
        return None;
    }
    let step_a = (a.len() / 512).max(1);
    let step_b = (b.len() / 1024).max(1);
    let mut best: Option<(f64, f64)> = None; // (separation, sign)
    let mut i = step_a;
    while i + step_a < a.len() {
        let p = a[i];
        let t = normalize(sub(a[i + step_a], a[i - step_a]));
        // nearest sample of b
        let mut bj = 0;
        let mut bd = f64::INFINITY;
        let mut j = 0;
        while j < b.len() {
            let d = crate::body::norm(sub(b[j], p));
            if d < bd {
                bd = d;
                bj = j;
            }
            j += step_b;
        }
        if bj == 0 || bj + step_b >= b.len() {
            i += step_a;
            continue;
        }
        let tb = normalize(sub(b[(bj + step_b).min(b.len() - 1)], b[bj - step_b.min(bj)]));
        if dot(t, tb) < 0.9 {
            i += step_a;
            continue;
        }
        let vfull = sub(b[bj], p);
        let v1 = axpy(vfull, -dot(vfull, t), t);
        let vt = axpy(v1, -dot(v1, p), p);
        let mag = crate::body::norm(vt);
        if mag > 3e-6 && mag < 0.2 && best.map(|(m, _)| mag < m).unwrap_or(true) {
            let nrm = cross(p, t);
            best = Some((mag, dot(vt, nrm).signum()));
        }
        i += step_a;
    }
    best.map(|(_, s)| s)
}

/// The abstract quasi-dual multigraph, straight from the saddle data: the
/// four branches of a saddle are always angularly distinct, and consecutive
/// branch targets around a saddle span the quadrangle diagonals. Every
/// diagonal is seen from its two flanking saddles, so multiplicities halve.
/// This path needs no separatrix nesting and is immune to stacked arrivals.
pub fn abstract_q2(complex: &MorseSmaleComplex) -> Result<ColoredMap, FlowError> {
    let cps = &complex.critical_points;
    let mut ids = vec![u32::MAX; cps.len()];
    let mut colors = Vec::new();
    for (i, c) in cps.iter().enumerate() {
        if c.kind != VertexColor::Saddle {
            ids[i] = colors.len() as u32;
            colors.push(c.kind);
        }
    }
    if complex.separatrices.is_empty() {
        return pebble_graph::map::ColoredMap::new(colors, vec![vec![], vec![]], &[])
            .map_err(|e| FlowError::Assembly(e.to_string()));
    }
    let mut pair_counts: std::collections::BTreeMap<(u32, u32), u32> = Default::default();
    for (i, c) in cps.iter().enumerate() {
        if c.kind != VertexColor::Saddle {
            continue;
        }
        let mut branches: Vec<(f64, u32)> = complex
            .separatrices
            .iter()
            .filter(|s| s.saddle == i)
            .map(|s| {
                let toward = polyline_probe(&s.points, true, 2e-3);
                (slot_angle(c.direction, toward), ids[s.target])
            })
            .collect();
        if branches.len() != 4 {
            return Err(FlowError::Assembly(format!(
                "saddle {i} has {} branches",
                branches.len()
            )));
        }
        branches.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for k in 0..4 {
            let a = branches[k].1;
            let b = branches[(k + 1) % 4].1;
            let key = (a.min(b), a.max(b));
            *pair_counts.entry(key).or_insert(0) += 1;
        }
    }
    let mut rotation: Vec<Vec<u32>> = vec![Vec::new(); colors.len()];
    let mut twins = Vec::new();
    let mut next_h = 0u32;
    for ((a, b), count) in pair_counts {
        if count % 2 != 0 {
            return Err(FlowError::Assembly(
                "odd diagonal multiplicity in the quasi-dual extraction".into(),
            ));
        }
        for _ in 0..count / 2 {
            let (ha, hb) = (next_h, next_h + 1);
            next_h += 2;
            rotation[a as usize].push(ha);
            rotation[b as usize].push(hb);
            twins.push((ha, hb));
        }
    }
    pebble_graph::map::ColoredMap::new(colors, rotation, &twins)
        .map_err(|e| FlowError::Assembly(e.to_string()))
}

/// Resolve the reference point of a body (center of mass when requested).
pub fn resolve_reference(spec: &BodySpec) -> Result<Vec3, FlowError> {
    match spec.reference {
        Reference::Fixed { point } => Ok(point),
        Reference::CenterOfMass => Ok(mass_properties(spec)?.centroid),
    }
}

/// Full pipeline: critical points, separatrices, primary graph, keys.
pub fn classify(spec: &BodySpec, opts: &FlowOptions) -> Result<Classification, FlowError> {
    spec.validate()?;
    let reference = resolve_reference(spec)?;
    if !spec.is_interior(reference) {
        return Err(FlowError::Body(crate::body::BodyError::ReferenceNotInterior));
    }
    let cps = find_critical_points(spec, reference, opts)?;
    let complex = trace_complex(spec, reference, &cps, opts)?;
    let (assembled, ambiguous) = assemble_q3(spec, reference, &complex)?;
    let rep = pebble_graph::map::validate(&assembled, Repr::Q3)
        .map_err(|e| FlowError::Assembly(e.to_string()))?;
    let q3 = if rep.passed() {
        assembled
    } else if let Some(fixed) = repair_assembly(&assembled, &ambiguous) {
        fixed
    } else {
        return Err(FlowError::Assembly(format!(
            "assembled graph fails primary validation: {:?}",
            rep.checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| &c.name)
                .collect::<Vec<_>>()
        )));
    };
    let q2 = convert(&q3, Repr::Q3, Repr::Q2).map_err(|e| FlowError::Assembly(e.to_string()))?;
    let class = pebble_graph::map::primary_class(&q3)
        .map_err(|e| FlowError::Assembly(e.to_string()))?;
    let mut keys = canonical_key(&q2);
    // the secondary key from the saddle-local route does not depend on any
    // nesting decisions; it also cross-checks the embedded assembly
    let robust = abstract_q2(&complex)?;
    let robust_key = pebble_graph::canonical::secondary_key(&robust);
    debug_assert_eq!(robust_key, keys.secondary, "abstract routes disagree");
    keys.secondary = robust_key;
    Ok(Classification {
        reference,
        class,
        keys,
        complex,
        q3,
        q2,
    })
}

/// Class and abstract key only: skips the embedded assembly entirely, so it
/// stays robust where stacked separatrix nesting is numerically marginal.
pub fn classify_abstract(
    spec: &BodySpec,
    opts: &FlowOptions,
) -> Result<(PrimaryClass, pebble_graph::KeyBytes, bool), FlowError> {
    spec.validate()?;
    let reference = resolve_reference(spec)?;
    if !spec.is_interior(reference) {
        return Err(FlowError::Body(crate::body::BodyError::ReferenceNotInterior));
    }
    let cps = find_critical_points(spec, reference, opts)?;
    let complex = trace_complex(spec, reference, &cps, opts)?;
    let q2 = abstract_q2(&complex)?;
    let class = pebble_graph::map::primary_class(&q2)
        .map_err(|e| FlowError::Assembly(e.to_string()))?;
    let near = !complex.near_heteroclinic.is_empty();
    Ok((class, pebble_graph::canonical::secondary_key(&q2), near))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::CutPlane;
    use pebble_graph::map::{four_cycle, p3};

    fn ellipsoid() -> BodySpec {
        BodySpec {
            shape: Shape::Ellipsoid {
                semi_axes: [1.0, 0.8, 0.6],
            },
            reference: Reference::CenterOfMass,
        }
    }

    #[test]
    fn ellipsoid_critical_points_on_axes() {
        let spec = ellipsoid();
        let cps = find_critical_points(&spec, [0.0; 3], &FlowOptions::default()).unwrap();
        assert_eq!(cps.len(), 6);
        let mut sinks = 0;
        let mut sources = 0;
        let mut saddles = 0;
        for c in &cps {
            let on_axis = |i: usize| c.direction[i].abs() > 1.0 - 1e-6;
            match c.kind {
                VertexColor::Sink => {
                    sinks += 1;
                    assert!(on_axis(2), "sink not on the short axis: {:?}", c.direction);
                }
                VertexColor::Source => {
                    sources += 1;
                    assert!(on_axis(0), "source not on the long axis: {:?}", c.direction);
                }
                VertexColor::Saddle => {
                    saddles += 1;
                    assert!(on_axis(1), "saddle not on the middle axis: {:?}", c.direction);
                }
            }
        }
        assert_eq!((sinks, sources, saddles), (2, 2, 2));
    }

    #[test]
    fn ellipsoid_classifies_as_the_four_cycle() {
        let cls = classify(&ellipsoid(), &FlowOptions::default()).unwrap();
        assert_eq!(cls.class, PrimaryClass { sinks: 2, sources: 2 });
        assert_eq!(cls.q3.n_edges(), 8);
        assert_eq!(cls.q3.faces().len(), 4);
        assert_eq!(cls.keys, canonical_key(&four_cycle()));
    }

    #[test]
    fn offset_reference_keeps_index_sum() {
        let spec = BodySpec::fixed(
            Shape::Ellipsoid {
                semi_axes: [1.0, 0.8, 0.6],
            },
            [0.0, 0.0, 0.2],
        );
        let cls = classify(&spec, &FlowOptions::default()).unwrap();
        assert_eq!(
            cls.class.sinks + cls.class.sources - cls.class.saddles(),
            2
        );
    }

    #[test]
    fn ball_with_centered_reference_is_nongeneric() {
        let spec = BodySpec::fixed(Shape::TruncatedSphere { planes: vec![] }, [0.0; 3]);
        let e = find_critical_points(&spec, [0.0; 3], &FlowOptions::default());
        assert!(matches!(e, Err(FlowError::NonGeneric(_))));
    }

    #[test]
    fn single_cut_over_source_gives_two_one() {
        // cap over the far pole: source moves to the circle, foot is a sink
        let spec = BodySpec::fixed(
            Shape::TruncatedSphere {
                planes: vec![CutPlane {
                    normal: normalize([0.15, 0.0, 1.0]),
                    offset: 0.75,
                }],
            },
            [0.0, 0.0, -0.2],
        );
        let cls = classify(&spec, &FlowOptions::default()).unwrap();
        assert_eq!(cls.class, PrimaryClass { sinks: 2, sources: 1 });
        assert_eq!(cls.keys, canonical_key(&p3(VertexColor::Sink)));
    }

    #[test]
    fn rotation_equivariance() {
        // rotate the cut body and its reference by 90 degrees about x
        let rot = |v: Vec3| [v[0], -v[2], v[1]];
        let planes = vec![CutPlane {
            normal: normalize([0.15, 0.0, 1.0]),
            offset: 0.75,
        }];
        let a = BodySpec::fixed(
            Shape::TruncatedSphere { planes: planes.clone() },
            [0.0, 0.0, -0.2],
        );
        let b = BodySpec::fixed(
            Shape::TruncatedSphere {
                planes: planes
                    .iter()
                    .map(|p| CutPlane {
                        normal: rot(p.normal),
                        offset: p.offset,
                    })
                    .collect(),
            },
            rot([0.0, 0.0, -0.2]),
        );
        let ca = classify(&a, &FlowOptions::default()).unwrap();
        let cb = classify(&b, &FlowOptions::default()).unwrap();
        assert_eq!(ca.keys, cb.keys);
        // critical points map under the rotation
        for c in &ca.complex.critical_points {
            let rc = rot(c.direction);
            assert!(cb
                .complex
                .critical_points
                .iter()
                .any(|d| d.kind == c.kind && arc_distance(d.direction, rc) < 1e-8));
        }
    }

    #[test]
    fn reference_continuity() {
        let base = [0.0, 0.0, -0.2];
        let spec = BodySpec::fixed(
            Shape::TruncatedSphere {
                planes: vec![CutPlane {
                    normal: normalize([0.15, 0.0, 1.0]),
                    offset: 0.75,
                }],
            },
            base,
        );
        let k0 = classify(&spec, &FlowOptions::default()).unwrap().keys;
        for delta in [[1e-6, 0.0, 0.0], [0.0, -1e-6, 1e-6]] {
            let moved = BodySpec::fixed(
                spec.shape.clone(),
                [base[0] + delta[0], base[1] + delta[1], base[2] + delta[2]],
            );
            let k1 = classify(&moved, &FlowOptions::default()).unwrap().keys;
            assert_eq!(k0, k1);
        }
    }
}
