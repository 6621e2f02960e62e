//! Two-parameter truncation families on cut spheres.
//!
//! A family cuts a spherical cap of depth d around a sink s, with the cap
//! axis held at arc distance theta from s and rotated by an azimuth phi.
//! Because the reference point c lies on the segment from the sphere center
//! to s, the two loci of the family have closed forms: a new sink appears on
//! the cut disk once d exceeds d_A (the projection of c enters the disk),
//! and the intersection circle becomes tangent to a separatrix of s along
//! the curve phi_BC(d). Crossing the first locus is a saddle-node; crossing
//! the second swaps the class of the member across a saddle-saddle
//! connection.
//!
//! The compensated variant keeps the center of mass of every member pinned
//! at the base centroid by modulating the antipodal cut that is part of the
//! base body (depth and axis), so the fixed-reference and center-of-mass
//! classifications agree cell by cell.

use crate::body::{
    axpy, dot, normalize, scale, sub, tangent_frame, BodySpec, CutPlane, Reference, Shape, Vec3,
};
use crate::flow::{classify, Classification, FlowError, FlowOptions};
use crate::mass::mass_properties;
use pebble_graph::canonical::KeyBytes;
use pebble_graph::map::PrimaryClass;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TruncError {
    #[error("no admissible cone angle: window ({0:.3}, {1:.3}) rad is empty")]
    AngleWindowEmpty(f64, f64),
    #[error("theta {0:.3} rad leaves no clearance around the sink (limit {1:.3})")]
    ThetaTooLarge(f64, f64),
    #[error("cut depth {0:.3e} exceeds the family limit {1:.3e}")]
    CutTooDeep(f64, f64),
    #[error("no compensating cut balances the centroid")]
    NoBalance,
    #[error("labels of adjacent cells are inconsistent after refinement")]
    InconsistentLabels,
    #[error("the selected sink has fewer than two separatrices")]
    SinkTooSimple,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Body(#[from] crate::body::BodyError),
}

/// Parameters of one truncating plane of the family, in the coordinates of
/// the construction: cut depth, arc distance of the circle center from the
/// sink, and rotation angle about the sink axis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncationPlane {
    pub depth: f64,
    pub arc: f64,
    pub azimuth: f64,
}

/// A planned two-parameter family around a sink with a spherical cap.
#[derive(Debug, Clone)]
pub struct FamilyPlan {
    pub base: BodySpec,
    /// Fixed reference point: the base body's center of mass.
    pub reference: Vec3,
    /// Direction of the sink surface point from the cap-sphere center.
    pub sink_axis: Vec3,
    /// Azimuths of the separatrices arriving at the sink, sorted.
    pub separatrix_azimuths: Vec<f64>,
    /// The sector (between two consecutive separatrices) the family lives in.
    pub sector: (f64, f64),
    /// Chosen cone angle (the tangent wedge of the deepest cut).
    pub cone_angle: f64,
    /// Arc distance of the family circle centers from the sink.
    pub theta: f64,
    /// Distance from the cap center to the reference, toward the sink.
    pub tau: f64,
    pub d_a: f64,
    pub d_bc: f64,
    pub phi_range: (f64, f64),
    /// Index of the antipodal base plane used for compensation.
    pub balance_plane: usize,
}

impl FamilyPlan {
    /// Tangent half-angle of the cut circle seen from the sink at depth d.
    pub fn beta(&self, d: f64) -> f64 {
        let sr = (1.0 - (1.0 - d) * (1.0 - d)).max(0.0).sqrt();
        (sr / self.theta.sin()).clamp(-1.0, 1.0).asin()
    }

    /// The saddle-saddle locus: tangency of the circle to the low-azimuth
    /// separatrix of the sector.
    pub fn phi_bc(&self, d: f64) -> f64 {
        self.sector.0 + self.beta(d)
    }

    /// Axis of the family plane at (theta, phi) in the sink frame.
    pub fn plane_axis(&self, phi: f64) -> Vec3 {
        let (e1, e2) = tangent_frame(self.sink_axis);
        normalize(axpy(
            axpy(scale(self.sink_axis, self.theta.cos()), self.theta.sin() * phi.cos(), e1),
            self.theta.sin() * phi.sin(),
            e2,
        ))
    }
}

/// The stock laboratory body: a unit ball with two flank cuts feeding the
/// polar sink and one shallow antipodal cut whose circle carries the only
/// source. Class {4,1} with a degree-3 sink at the pole of the reference
/// axis; the antipodal cut doubles as the balance reservoir for the
/// compensated sweeps.
pub fn standard_lab_body() -> BodySpec {
    let axis_at = |polar: f64, az: f64| -> Vec3 {
        [
            polar.sin() * az.cos(),
            polar.sin() * az.sin(),
            polar.cos(),
        ]
    };
    let d2r = PI / 180.0;
    BodySpec {
        shape: Shape::TruncatedSphere {
            planes: vec![
                CutPlane {
                    normal: axis_at(112.0 * d2r, 0.0),
                    offset: 0.62,
                },
                CutPlane {
                    normal: axis_at(112.0 * d2r, 178.0 * d2r),
                    offset: 0.63,
                },
                CutPlane {
                    normal: axis_at(177.0 * d2r, 255.0 * d2r),
                    offset: 0.97,
                },
            ],
        },
        reference: Reference::CenterOfMass,
    }
}

/// Plan a family around the spherical-cap sink of `base`. `sink` picks a
/// sink index from the classification, or the sphere-part sink with the most
/// separatrices when absent.
pub fn plan_family(
    base: &BodySpec,
    sink: Option<usize>,
    theta: f64,
    cone_angle_override: Option<f64>,
    opts: &FlowOptions,
) -> Result<FamilyPlan, TruncError> {
    let cls = classify(base, opts)?;
    let reference = cls.reference;
    let cps = &cls.complex.critical_points;
    let sink_idx = match sink {
        Some(i) => i,
        None => {
            // the sink on the smooth spherical part with the most arrivals
            let mut best = None;
            for (i, c) in cps.iter().enumerate() {
                if c.kind != pebble_graph::map::VertexColor::Sink {
                    continue;
                }
                if c.locus != crate::flow::CritLocus::Smooth {
                    continue;
                }
                let arrivals = cls
                    .complex
                    .separatrices
                    .iter()
                    .filter(|s| s.target == i)
                    .count();
                if best.map(|(_, n)| arrivals > n).unwrap_or(true) {
                    best = Some((i, arrivals));
                }
            }
            best.ok_or(TruncError::SinkTooSimple)?.0
        }
    };
    let sink_axis = normalize(cps[sink_idx].point);
    let tau = crate::body::norm(reference);
    // arrival azimuths of the separatrices at the sink
    let (e1, e2) = tangent_frame(sink_axis);
    let mut azimuths: Vec<f64> = Vec::new();
    for s in &cls.complex.separatrices {
        if s.target != sink_idx {
            continue;
        }
        // probe the polyline a little away from the sink for a stable angle
        let mut probe = s.points[0];
        for p in s.points.iter().rev() {
            let d = dot(*p, cps[sink_idx].direction).clamp(-1.0, 1.0).acos();
            if d > 5e-2 {
                probe = *p;
                break;
            }
        }
        let w = normalize(axpy(probe, -dot(probe, sink_axis), sink_axis));
        let mut a = dot(w, e2).atan2(dot(w, e1));
        if a < 0.0 {
            a += 2.0 * PI;
        }
        azimuths.push(a);
    }
    if azimuths.len() < 2 {
        return Err(TruncError::SinkTooSimple);
    }
    azimuths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // widest sector between consecutive separatrices
    let mut sector = (azimuths[0], azimuths[0]);
    let mut best_gap = -1.0;
    for i in 0..azimuths.len() {
        let lo = azimuths[i];
        let hi = if i + 1 < azimuths.len() {
            azimuths[i + 1]
        } else {
            azimuths[0] + 2.0 * PI
        };
        if hi - lo > best_gap {
            best_gap = hi - lo;
            sector = (lo, hi);
        }
    }
    // cone-angle window: wide enough that the sink-appearance depth comes
    // first, narrow enough to fit the sector
    let lo = 2.0 * tau.asin();
    let hi = best_gap;
    if lo >= hi {
        return Err(TruncError::AngleWindowEmpty(lo, hi));
    }
    let cone_angle = match cone_angle_override {
        Some(a) => {
            if a <= lo || a >= hi {
                return Err(TruncError::AngleWindowEmpty(lo, hi));
            }
            a
        }
        None => {
            // keep the saddle-node locus inside the depth range at a
            // resolvable position: sin(alpha/2) about 1.5 tau
            let target = 2.0 * (1.5 * tau).min(0.999).asin();
            target.clamp((lo * 1.15 + 0.01).min(0.5 * (lo + hi)), 0.85 * hi)
        }
    };
    let sin_rbc = theta.sin() * (cone_angle / 2.0).sin();
    let d_bc = 1.0 - (1.0 - sin_rbc * sin_rbc).sqrt();
    let sin_ra = tau * theta.sin();
    let d_a = 1.0 - (1.0 - sin_ra * sin_ra).sqrt();
    // clearance: the family cap must stay inside the spherical region
    let r_bc = sin_rbc.asin();
    let Shape::TruncatedSphere { planes } = &base.shape else {
        return Err(TruncError::Flow(FlowError::NonGeneric(
            "family bodies must be cut spheres".into(),
        )));
    };
    let mut clearance = f64::INFINITY;
    for p in planes {
        let gap = dot(sink_axis, p.normal).clamp(-1.0, 1.0).acos() - p.offset.acos();
        clearance = clearance.min(gap);
    }
    if theta + r_bc > clearance - 0.02 {
        return Err(TruncError::ThetaTooLarge(theta, clearance - r_bc - 0.02));
    }
    let plan = FamilyPlan {
        base: base.clone(),
        reference,
        sink_axis,
        separatrix_azimuths: azimuths,
        sector,
        cone_angle,
        theta,
        tau,
        d_a,
        d_bc,
        phi_range: (0.0, 0.0),
        balance_plane: planes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                dot(a.normal, sink_axis)
                    .partial_cmp(&dot(b.normal, sink_axis))
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap_or(0),
    };
    // phi range: start half a tangency width below the low separatrix (the
    // circle then crosses it for every d > d_A) and end mid-sector, well
    // inside the no-crossing zone
    let beta_a = tau.asin();
    let phi_b = sector.0 - 0.5 * beta_a;
    let phi_c = 0.5 * (sector.0 + sector.1);
    Ok(FamilyPlan {
        phi_range: (phi_b, phi_c),
        ..plan
    })
}

/// The member body K(d, phi): the base with the family plane appended.
pub fn truncate(plan: &FamilyPlan, d: f64, phi: f64) -> Result<BodySpec, TruncError> {
    if d < 0.0 || d > plan.d_bc * 1.5 {
        return Err(TruncError::CutTooDeep(d, plan.d_bc * 1.5));
    }
    let mut spec = BodySpec {
        shape: plan.base.shape.clone(),
        reference: Reference::Fixed {
            point: plan.reference,
        },
    };
    if d > 0.0 {
        let Shape::TruncatedSphere { planes } = &mut spec.shape else {
            unreachable!()
        };
        planes.push(CutPlane {
            normal: plan.plane_axis(phi),
            offset: 1.0 - d,
        });
    }
    spec.validate()?;
    Ok(spec)
}

/// Replace the balance plane of a member so its center of mass returns to
/// the base centroid; Newton on (depth, two axis angles).
pub fn compensate(plan: &FamilyPlan, member: &BodySpec) -> Result<BodySpec, TruncError> {
    let k = plan.balance_plane;
    let target = plan.reference;
    let (base_axis, base_offset) = {
        let Shape::TruncatedSphere { planes } = &member.shape else {
            unreachable!()
        };
        (planes[k].normal, planes[k].offset)
    };
    let (b1, b2) = tangent_frame(base_axis);
    // parameters: depth offset and two tilt components
    let build = |p: [f64; 3]| -> BodySpec {
        let axis = normalize(axpy(axpy(base_axis, p[1], b1), p[2], b2));
        let mut spec = member.clone();
        let Shape::TruncatedSphere { planes } = &mut spec.shape else {
            unreachable!()
        };
        planes[k] = CutPlane {
            normal: axis,
            offset: base_offset - p[0],
        };
        spec
    };
    let centroid_err = |p: [f64; 3]| -> Result<Vec3, TruncError> {
        let spec = build(p);
        let m = mass_properties(&spec)?;
        Ok(sub(m.centroid, target))
    };
    let mut p = [0.0f64; 3];
    for _ in 0..60 {
        let f = centroid_err(p)?;
        let fn_norm = crate::body::norm(f);
        if fn_norm < 1e-12 {
            break;
        }
        // finite-difference Jacobian
        let h = 1e-7;
        let mut jac = [[0.0f64; 3]; 3];
        for j in 0..3 {
            let mut ph = p;
            ph[j] += h;
            let fh = centroid_err(ph)?;
            for i in 0..3 {
                jac[i][j] = (fh[i] - f[i]) / h;
            }
        }
        let delta = solve3(jac, f).ok_or(TruncError::NoBalance)?;
        for i in 0..3 {
            p[i] -= delta[i];
        }
        if p[0].abs() > 0.5 * base_offset {
            return Err(TruncError::NoBalance);
        }
    }
    let f = centroid_err(p)?;
    if crate::body::norm(f) > 1e-9 {
        return Err(TruncError::NoBalance);
    }
    let mut out = build(p);
    out.reference = Reference::CenterOfMass;
    out.validate()?;
    Ok(out)
}

fn solve3(a: [[f64; 3]; 3], b: Vec3) -> Option<Vec3> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-18 {
        return None;
    }
    let inv = 1.0 / det;
    let cof = |r1: usize, c1: usize, r2: usize, c2: usize| a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1];
    Some([
        inv * (b[0] * cof(1, 1, 2, 2) - b[1] * cof(0, 1, 2, 2) + b[2] * cof(0, 1, 1, 2)),
        inv * (-b[0] * cof(1, 0, 2, 2) + b[1] * cof(0, 0, 2, 2) - b[2] * cof(0, 0, 1, 2)),
        inv * (b[0] * cof(1, 0, 2, 1) - b[1] * cof(0, 0, 2, 1) + b[2] * cof(0, 0, 1, 1)),
    ])
}

/// Cell label of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellLabel {
    A,
    B,
    C,
    Degenerate,
    Other,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub d: f64,
    pub phi: f64,
    pub label: CellLabel,
    pub sinks: usize,
    pub sources: usize,
    pub secondary: Option<KeyBytes>,
    pub near_heteroclinic: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub n_d: usize,
    pub n_phi: usize,
    pub d_a_estimates: Vec<f64>,
    pub phi_bc_estimates: Vec<(f64, f64)>,
    pub key_a: KeyBytes,
    pub key_b: Option<KeyBytes>,
    pub key_c: Option<KeyBytes>,
    /// Classifications of one representative B and C member (for the
    /// combinatorial cross-check).
    pub rep_b: Option<Classification>,
    pub rep_c: Option<Classification>,
}

fn classify_member(
    plan: &FamilyPlan,
    d: f64,
    phi: f64,
    compensated: bool,
    opts: &FlowOptions,
) -> Result<Classification, TruncError> {
    let member = truncate(plan, d, phi)?;
    let member = if compensated {
        compensate(plan, &member)?
    } else {
        member
    };
    Ok(classify(&member, opts)?)
}

/// Class and abstract key of a member; robust against nesting ties.
fn label_member(
    plan: &FamilyPlan,
    d: f64,
    phi: f64,
    compensated: bool,
    opts: &FlowOptions,
) -> Result<(PrimaryClass, KeyBytes, bool), TruncError> {
    let member = truncate(plan, d, phi)?;
    let member = if compensated {
        compensate(plan, &member)?
    } else {
        member
    };
    Ok(crate::flow::classify_abstract(&member, opts)?)
}

/// Sweep the family over an n_d x n_phi grid and label every cell.
pub fn sweep(
    plan: &FamilyPlan,
    n_d: usize,
    n_phi: usize,
    compensated: bool,
    opts: &FlowOptions,
) -> Result<SweepResult, TruncError> {
    let base_cls = classify(
        &BodySpec {
            shape: plan.base.shape.clone(),
            reference: Reference::Fixed {
                point: plan.reference,
            },
        },
        opts,
    )?;
    let key_a = base_cls.keys.secondary.clone();
    let class_a = base_cls.class;

    let d_of = |i: usize| plan.d_bc * (i as f64) / ((n_d - 1) as f64);
    let phi_of =
        |j: usize| plan.phi_range.0 + (plan.phi_range.1 - plan.phi_range.0) * (j as f64) / ((n_phi - 1) as f64);

    let coords: Vec<(usize, usize)> = (0..n_d)
        .flat_map(|i| (0..n_phi).map(move |j| (i, j)))
        .collect();
    let raw: Vec<(usize, usize, Option<(PrimaryClass, KeyBytes, bool)>)> = coords
        .par_iter()
        .map(|&(i, j)| {
            let cls = label_member(plan, d_of(i), phi_of(j), compensated, opts).ok();
            (i, j, cls)
        })
        .collect();

    // identify the B and C secondary keys among non-A cells and classify one
    // representative member of each fully (embedded keys included)
    let mut key_b: Option<KeyBytes> = None;
    let mut key_c: Option<KeyBytes> = None;
    for &(i, j, ref cls) in raw.iter() {
        if let Some((class, sec, _)) = cls {
            if *class != class_a && i + 1 == n_d {
                if j == 0 && key_b.is_none() {
                    key_b = Some(sec.clone());
                }
                if j + 1 == n_phi && key_c.is_none() {
                    key_c = Some(sec.clone());
                }
            }
        }
    }
    let rep_b = classify_member(plan, d_of(n_d - 1), phi_of(0), compensated, opts).ok();
    let rep_c = classify_member(plan, d_of(n_d - 1), phi_of(n_phi - 1), compensated, opts).ok();

    let mut cells = Vec::with_capacity(raw.len());
    for (i, j, cls) in raw {
        let (d, phi) = (d_of(i), phi_of(j));
        let cell = match cls {
            None => SweepCell {
                d,
                phi,
                label: CellLabel::Degenerate,
                sinks: 0,
                sources: 0,
                secondary: None,
                near_heteroclinic: false,
            },
            Some((class, sec, near)) => {
                let label = if class == class_a && sec == key_a {
                    CellLabel::A
                } else if Some(&sec) == key_b.as_ref() {
                    CellLabel::B
                } else if Some(&sec) == key_c.as_ref() {
                    CellLabel::C
                } else {
                    CellLabel::Other
                };
                SweepCell {
                    d,
                    phi,
                    label,
                    sinks: class.sinks,
                    sources: class.sources,
                    secondary: Some(sec),
                    near_heteroclinic: near,
                }
            }
        };
        cells.push(cell);
    }

    // estimate d_A per azimuth column by bisection on the A boundary
    let mut d_a_estimates = Vec::new();
    for j in [0usize, n_phi / 2, n_phi - 1] {
        let phi = phi_of(j);
        let is_a = |d: f64| -> bool {
            label_member(plan, d, phi, compensated, opts)
                .map(|(c, _, _)| c == class_a)
                .unwrap_or(false)
        };
        let (mut lo, mut hi) = (0.0, plan.d_bc);
        if !is_a(lo) || is_a(hi) {
            continue;
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if is_a(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d_a_estimates.push(0.5 * (lo + hi));
    }

    // estimate phi_BC(d) on a few deep rows by bisection on the B|C boundary
    let mut phi_bc_estimates = Vec::new();
    if let (Some(kb), Some(kc)) = (&key_b, &key_c) {
        for i in [(3 * (n_d - 1)) / 4, n_d - 1] {
            let d = d_of(i);
            let side = |phi: f64| -> Option<bool> {
                let (_, s, _) = label_member(plan, d, phi, compensated, opts).ok()?;
                if &s == kb {
                    Some(false)
                } else if &s == kc {
                    Some(true)
                } else {
                    None
                }
            };
            let (mut lo, mut hi) = (plan.phi_range.0, plan.phi_range.1);
            if side(lo) != Some(false) || side(hi) != Some(true) {
                continue;
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                match side(mid) {
                    Some(false) => lo = mid,
                    Some(true) => hi = mid,
                    None => break,
                }
            }
            phi_bc_estimates.push((d, 0.5 * (lo + hi)));
        }
    }

    Ok(SweepResult {
        cells,
        n_d,
        n_phi,
        d_a_estimates,
        phi_bc_estimates,
        key_a,
        key_b,
        key_c,
        rep_b,
        rep_c,
    })
}

// ---------------------------------------------------------------------------
// Profile chord ratio (the planar limit behind the projection test)
// ---------------------------------------------------------------------------

/// In the profile plane, take the unit circle around the origin, the
/// reference c = (0, tau), and the chord through q1 = (x1, sqrt(1-x1^2))
/// making the angle pi/2 - angle_coeff*x1 with the segment [c, q1]. Returns
/// the relative x-displacement (x2 - x1)/x1 of the second intersection,
/// which tends to 2 tau/(1-tau) + 2*angle_coeff as x1 -> 0.
pub fn chord_displacement_ratio(tau: f64, x1: f64, angle_coeff: f64) -> f64 {
    assert!(tau > 0.0 && tau < 1.0);
    let q1 = [x1, (1.0 - x1 * x1).sqrt()];
    let cq = [q1[0] - 0.0, q1[1] - tau];
    // rotate by +90 degrees, then tilt by angle_coeff * x1
    let perp = [-cq[1], cq[0]];
    let eps = angle_coeff * x1;
    let (ce, se) = (eps.cos(), eps.sin());
    let dir = [
        ce * perp[0] + se * cq[0],
        ce * perp[1] + se * cq[1],
    ];
    let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    let dir = [dir[0] / n, dir[1] / n];
    // second intersection with the unit circle: t = -2 q1.dir
    let t = -2.0 * (q1[0] * dir[0] + q1[1] * dir[1]);
    let x2 = q1[0] + t * dir[0];
    (x2 - x1) / x1
}

/// Ratio estimates over a sequence of abscissas, as in the projection limit
/// check.
pub fn chord_ratio_estimates(tau: f64, xs: &[f64], angle_coeff: f64) -> Vec<f64> {
    xs.iter()
        .map(|&x| chord_displacement_ratio(tau, x, angle_coeff))
        .collect()
}
