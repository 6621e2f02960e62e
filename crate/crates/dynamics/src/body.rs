//! Convex body specifications and their support-point distance functions.
//!
//! Every shape exposes the distance r(u) from an interior reference point to
//! the surface along a unit direction u, together with the surface hit point
//! and outward normal. The tangential gradient of r on the direction sphere
//! follows one formula for all smooth pieces:
//!
//!   D_w r = -r (N . w) / (N . u)   for tangents w of the direction sphere,
//!
//! so every shape only needs to report its hit and normal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

pub fn axpy(a: Vec3, s: f64, b: Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// An orthonormal tangent frame at a unit direction, with a globally
/// consistent orientation (right-handed with the outward direction).
pub fn tangent_frame(u: Vec3) -> (Vec3, Vec3) {
    let helper = if u[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = normalize(cross(helper, u));
    let e2 = cross(u, e1);
    (e1, e2)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BodyError {
    #[error("body is not convex: {0}")]
    NonConvex(String),
    #[error("degenerate body: {0}")]
    DegenerateBody(String),
    #[error("reference point is not interior")]
    ReferenceNotInterior,
}

/// One cutting halfspace `x . normal <= offset` applied to the unit ball.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CutPlane {
    pub normal: Vec3,
    pub offset: f64,
}

impl CutPlane {
    /// Height of the removed cap.
    pub fn cap_height(&self) -> f64 {
        1.0 - self.offset
    }

    /// Radius of the intersection circle.
    pub fn circle_radius(&self) -> f64 {
        (1.0 - self.offset * self.offset).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Ellipsoid {
        semi_axes: [f64; 3],
    },
    /// Unit sphere radially perturbed by solid harmonics: R(u) = 1 + sum of
    /// c * H_l^m(u) over the coefficient list.
    SphereHarmonics {
        coefficients: Vec<HarmonicTerm>,
    },
    TruncatedSphere {
        planes: Vec<CutPlane>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub l: u32,
    pub m: i32,
    pub coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reference {
    Fixed { point: Vec3 },
    CenterOfMass,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodySpec {
    pub shape: Shape,
    pub reference: Reference,
}

/// Which smooth piece of the surface a ray hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    Smooth,
    Sphere,
    Disk(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceHit {
    pub r: f64,
    pub point: Vec3,
    pub normal: Vec3,
    pub piece: Piece,
}

impl BodySpec {
    pub fn fixed(shape: Shape, point: Vec3) -> BodySpec {
        BodySpec {
            shape,
            reference: Reference::Fixed { point },
        }
    }

    /// Sanity checks: convexity (sampled for harmonics), cap disjointness,
    /// interior reference for fixed references.
    pub fn validate(&self) -> Result<(), BodyError> {
        match &self.shape {
            Shape::Ellipsoid { semi_axes } => {
                if semi_axes.iter().any(|&a| a <= 0.0) {
                    return Err(BodyError::DegenerateBody("non-positive semi-axis".into()));
                }
            }
            Shape::TruncatedSphere { planes } => {
                for p in planes {
                    if (norm(p.normal) - 1.0).abs() > 1e-9 {
                        return Err(BodyError::DegenerateBody("non-unit plane normal".into()));
                    }
                    if p.offset <= 0.0 || p.offset >= 1.0 {
                        return Err(BodyError::DegenerateBody(format!(
                            "cut offset {} outside (0,1)",
                            p.offset
                        )));
                    }
                }
                // disjoint caps keep the surface free of plane-plane edges
                for i in 0..planes.len() {
                    for j in (i + 1)..planes.len() {
                        let gamma = dot(planes[i].normal, planes[j].normal).clamp(-1.0, 1.0).acos();
                        let ri = planes[i].offset.acos();
                        let rj = planes[j].offset.acos();
                        if gamma <= ri + rj {
                            return Err(BodyError::NonConvex(format!(
                                "cut caps {i} and {j} overlap"
                            )));
                        }
                    }
                }
            }
            Shape::SphereHarmonics { coefficients } => {
                let poly = HarmonicField::new(coefficients);
                // support-style convexity probe on a dense sample: every
                // sampled surface point must lie behind every sampled
                // tangent plane
                let dirs = sample_directions(1500);
                let pts: Vec<(Vec3, Vec3)> = dirs
                    .iter()
                    .map(|&u| {
                        let rr = poly.radius(u);
                        (scale(u, rr), poly.outward_normal(u))
                    })
                    .collect();
                for (p, n) in &pts {
                    for (q, _) in &pts {
                        if dot(sub(*q, *p), *n) > 1e-7 {
                            return Err(BodyError::NonConvex(
                                "sampled surface point outside a tangent plane".into(),
                            ));
                        }
                    }
                    if poly.radius(normalize(*p)) <= 0.05 {
                        return Err(BodyError::DegenerateBody("radius near zero".into()));
                    }
                }
            }
        }
        if let Reference::Fixed { point } = self.reference {
            if !self.is_interior(point) {
                return Err(BodyError::ReferenceNotInterior);
            }
        }
        Ok(())
    }

    pub fn is_interior(&self, x: Vec3) -> bool {
        match &self.shape {
            Shape::Ellipsoid { semi_axes } => {
                let s: f64 = (0..3).map(|i| (x[i] / semi_axes[i]).powi(2)).sum();
                s < 1.0 - 1e-12
            }
            Shape::TruncatedSphere { planes } => {
                norm(x) < 1.0 - 1e-12
                    && planes.iter().all(|p| dot(x, p.normal) < p.offset - 1e-12)
            }
            Shape::SphereHarmonics { coefficients } => {
                let n = norm(x);
                if n < 1e-12 {
                    return true;
                }
                let poly = HarmonicField::new(coefficients);
                n < poly.radius(normalize(x)) - 1e-9
            }
        }
    }

    /// Distance from `reference` to the surface along unit direction `u`,
    /// with the hit point and outward normal of the piece that was hit.
    pub fn probe(&self, reference: Vec3, u: Vec3) -> SurfaceHit {
        match &self.shape {
            Shape::Ellipsoid { semi_axes } => {
                let a2 = [
                    semi_axes[0] * semi_axes[0],
                    semi_axes[1] * semi_axes[1],
                    semi_axes[2] * semi_axes[2],
                ];
                let qa: f64 = (0..3).map(|i| u[i] * u[i] / a2[i]).sum();
                let qb: f64 = (0..3).map(|i| 2.0 * reference[i] * u[i] / a2[i]).sum();
                let qc: f64 = (0..3).map(|i| reference[i] * reference[i] / a2[i]).sum::<f64>() - 1.0;
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                let r = (-qb + disc.sqrt()) / (2.0 * qa);
                let point = axpy(reference, r, u);
                let normal = normalize([
                    point[0] / a2[0],
                    point[1] / a2[1],
                    point[2] / a2[2],
                ]);
                SurfaceHit {
                    r,
                    point,
                    normal,
                    piece: Piece::Smooth,
                }
            }
            Shape::TruncatedSphere { planes } => {
                // sphere hit
                let b = dot(reference, u);
                let c = dot(reference, reference) - 1.0;
                let t_sphere = -b + (b * b - c).max(0.0).sqrt();
                let mut best = SurfaceHit {
                    r: t_sphere,
                    point: axpy(reference, t_sphere, u),
                    normal: [0.0; 3],
                    piece: Piece::Sphere,
                };
                best.normal = best.point;
                for (k, p) in planes.iter().enumerate() {
                    let un = dot(u, p.normal);
                    if un > 1e-14 {
                        let t = (p.offset - dot(reference, p.normal)) / un;
                        if t > 0.0 && t < best.r {
                            best = SurfaceHit {
                                r: t,
                                point: axpy(reference, t, u),
                                normal: p.normal,
                                piece: Piece::Disk(k),
                            };
                        }
                    }
                }
                best
            }
            Shape::SphereHarmonics { coefficients } => {
                let poly = HarmonicField::new(coefficients);
                // bracketed root find on g(t) = |x(t)| - R(dir x(t))
                let g = |t: f64| {
                    let x = axpy(reference, t, u);
                    let n = norm(x);
                    n - poly.radius(normalize(x))
                };
                let mut lo = 0.0;
                let mut hi = 2.5 + norm(reference);
                debug_assert!(g(lo) < 0.0);
                while g(hi) < 0.0 {
                    hi *= 1.5;
                }
                for _ in 0..90 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let r = 0.5 * (lo + hi);
                let point = axpy(reference, r, u);
                let normal = poly.outward_normal(normalize(point));
                SurfaceHit {
                    r,
                    point,
                    normal,
                    piece: Piece::Smooth,
                }
            }
        }
    }

    /// Tangential gradient of r on the direction sphere at `u`, as an
    /// ambient 3-vector orthogonal to `u`.
    pub fn grad_r(&self, reference: Vec3, u: Vec3) -> Vec3 {
        let hit = self.probe(reference, u);
        grad_from_hit(&hit, u)
    }

    /// r value (support-point distance).
    pub fn radius_from(&self, reference: Vec3, u: Vec3) -> f64 {
        self.probe(reference, u).r
    }
}

/// The shared gradient formula: D_w r = -r (N.w)/(N.u).
pub fn grad_from_hit(hit: &SurfaceHit, u: Vec3) -> Vec3 {
    let nu = dot(hit.normal, u);
    // tangential part of the normal
    let tang = axpy(hit.normal, -nu, u);
    scale(tang, -hit.r / nu)
}

/// Roughly uniform direction sample (Fibonacci spiral).
pub fn sample_directions(n: usize) -> Vec<Vec3> {
    let phi = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let t = phi * i as f64;
            [r * t.cos(), y, r * t.sin()]
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Solid harmonics as sparse trivariate polynomials
// ---------------------------------------------------------------------------

/// Sparse polynomial in (x, y, z): map from exponent triple to coefficient.
#[derive(Debug, Clone, Default)]
pub struct Poly3 {
    terms: std::collections::BTreeMap<(u32, u32, u32), f64>,
}

impl Poly3 {
    pub fn constant(c: f64) -> Poly3 {
        let mut p = Poly3::default();
        if c != 0.0 {
            p.terms.insert((0, 0, 0), c);
        }
        p
    }

    fn add_term(&mut self, e: (u32, u32, u32), c: f64) {
        let entry = self.terms.entry(e).or_insert(0.0);
        *entry += c;
        if entry.abs() < 1e-300 {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Poly3) -> Poly3 {
        let mut out = self.clone();
        for (&e, &c) in &other.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly3 {
        let mut out = Poly3::default();
        for (&e, &c) in &self.terms {
            out.add_term(e, c * s);
        }
        out
    }

    /// Multiply by x^i y^j z^k.
    pub fn shift(&self, i: u32, j: u32, k: u32) -> Poly3 {
        let mut out = Poly3::default();
        for (&(a, b, c), &v) in &self.terms {
            out.add_term((a + i, b + j, c + k), v);
        }
        out
    }

    /// Multiply by x^2 + y^2 + z^2.
    pub fn times_r2(&self) -> Poly3 {
        self.shift(2, 0, 0)
            .add(&self.shift(0, 2, 0))
            .add(&self.shift(0, 0, 2))
    }

    pub fn eval(&self, p: Vec3) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b, c), &v)| v * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
            .sum()
    }

    pub fn gradient(&self) -> [Poly3; 3] {
        let mut gx = Poly3::default();
        let mut gy = Poly3::default();
        let mut gz = Poly3::default();
        for (&(a, b, c), &v) in &self.terms {
            if a > 0 {
                gx.add_term((a - 1, b, c), v * a as f64);
            }
            if b > 0 {
                gy.add_term((a, b - 1, c), v * b as f64);
            }
            if c > 0 {
                gz.add_term((a, b, c - 1), v * c as f64);
            }
        }
        [gx, gy, gz]
    }

    pub fn laplacian(&self) -> Poly3 {
        let [gx, gy, gz] = self.gradient();
        let [gxx, _, _] = gx.gradient();
        let [_, gyy, _] = gy.gradient();
        let [_, _, gzz] = gz.gradient();
        gxx.add(&gyy).add(&gzz)
    }
}

/// Real solid harmonic H_l^m = r^l P_l^|m|(cos t) {cos,sin}(|m| p), built by
/// the associated-Legendre recurrence lifted to homogeneous polynomials.
pub fn solid_harmonic(l: u32, m: i32) -> Poly3 {
    assert!(m.unsigned_abs() <= l, "|m| must not exceed l");
    let am = m.unsigned_abs();
    // diagonal pair: c_m = Re (x+iy)^m * (2m-1)!!, s_m = Im(...)
    let mut c = Poly3::constant(1.0);
    let mut s = Poly3::constant(0.0);
    for k in 1..=am {
        let f = (2 * k - 1) as f64;
        let nc = c.shift(1, 0, 0).add(&s.shift(0, 1, 0).scale(-1.0)).scale(f);
        let ns = s.shift(1, 0, 0).add(&c.shift(0, 1, 0)).scale(f);
        c = nc;
        s = ns;
    }
    let diag = if m >= 0 { c } else { s };
    if l == am {
        return diag;
    }
    // first step up: H_{m+1}^m = (2m+1) z H_m^m
    let mut prev = diag; // H_{am}
    let mut cur = prev.shift(0, 0, 1).scale((2 * am + 1) as f64);
    if l == am + 1 {
        return cur;
    }
    // (l-m) H_l = (2l-1) z H_{l-1} - (l-1+m) r^2 H_{l-2}
    for ll in (am + 2)..=l {
        let a = (2 * ll - 1) as f64;
        let b = (ll - 1 + am) as f64;
        let next = cur
            .shift(0, 0, 1)
            .scale(a)
            .add(&prev.times_r2().scale(-b))
            .scale(1.0 / (ll - am) as f64);
        prev = cur;
        cur = next;
    }
    cur
}

/// A radial field 1 + sum of solid harmonics, with its angular gradient.
pub struct HarmonicField {
    value: Poly3,
    grad: [Poly3; 3],
}

impl HarmonicField {
    pub fn new(terms: &[HarmonicTerm]) -> HarmonicField {
        let mut value = Poly3::constant(1.0);
        for t in terms {
            value = value.add(&solid_harmonic(t.l, t.m).scale(t.coeff));
        }
        let grad = value.gradient();
        HarmonicField { value, grad }
    }

    pub fn radius(&self, u: Vec3) -> f64 {
        self.value.eval(u)
    }

    /// Outward unit normal of the surface x = R(u) u at direction u.
    pub fn outward_normal(&self, u: Vec3) -> Vec3 {
        // S(x) = |x| - R(x/|x|); grad S at the surface point:
        // u - (I - u u^T) gradR / R   evaluated on the unit sphere
        let r = self.radius(u);
        let g = [
            self.grad[0].eval(u),
            self.grad[1].eval(u),
            self.grad[2].eval(u),
        ];
        let gu = dot(g, u);
        let tang = axpy(g, -gu, u);
        normalize(axpy(u, -1.0 / r, tang).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solid_harmonics_are_harmonic() {
        for l in 0..=6u32 {
            for m in -(l as i32)..=(l as i32) {
                let h = solid_harmonic(l, m);
                let lap = h.laplacian();
                for p in [[0.3, -0.7, 0.2], [1.1, 0.4, -0.9]] {
                    assert!(
                        lap.eval(p).abs() < 1e-9,
                        "Laplacian of H_{l}^{m} nonzero"
                    );
                }
            }
        }
    }

    #[test]
    fn ellipsoid_probe_matches_surface() {
        let b = BodySpec::fixed(
            Shape::Ellipsoid {
                semi_axes: [1.0, 0.8, 0.6],
            },
            [0.05, -0.02, 0.01],
        );
        b.validate().unwrap();
        for u in sample_directions(100) {
            let h = b.probe([0.05, -0.02, 0.01], u);
            let s: f64 = (h.point[0] / 1.0).powi(2)
                + (h.point[1] / 0.8).powi(2)
                + (h.point[2] / 0.6).powi(2);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_all_shapes() {
        let shapes: Vec<(BodySpec, Vec3)> = vec![
            (
                BodySpec::fixed(
                    Shape::Ellipsoid {
                        semi_axes: [1.0, 0.8, 0.6],
                    },
                    [0.03, 0.02, -0.04],
                ),
                [0.03, 0.02, -0.04],
            ),
            (
                BodySpec::fixed(
                    Shape::SphereHarmonics {
                        // the basis is unnormalized; amplitudes shrink with l
                        coefficients: vec![
                            HarmonicTerm { l: 2, m: 0, coeff: 0.03 },
                            HarmonicTerm { l: 3, m: 2, coeff: 0.003 },
                            HarmonicTerm { l: 4, m: -3, coeff: 0.0004 },
                        ],
                    },
                    [0.02, -0.01, 0.05],
                ),
                [0.02, -0.01, 0.05],
            ),
            (
                BodySpec::fixed(
                    Shape::TruncatedSphere {
                        planes: vec![
                            CutPlane {
                                normal: normalize([0.3, 0.1, 0.95]),
                                offset: 0.7,
                            },
                            CutPlane {
                                normal: normalize([-0.8, 0.2, -0.5]),
                                offset: 0.8,
                            },
                        ],
                    },
                    [0.0, 0.0, -0.1],
                ),
                [0.0, 0.0, -0.1],
            ),
        ];
        let h = 1e-6;
        let mut checked = 0usize;
        for (body, refp) in &shapes {
            body.validate().unwrap();
            for u in sample_directions(3333) {
                let hit = body.probe(*refp, u);
                // keep clear of piece boundaries where r is only one-sided
                if let Piece::Disk(_) | Piece::Sphere = hit.piece {
                    let near_edge = |du: Vec3| body.probe(*refp, normalize(du)).piece != hit.piece;
                    let (e1, e2) = tangent_frame(u);
                    if near_edge(axpy(u, 3.0 * h, e1))
                        || near_edge(axpy(u, -3.0 * h, e1))
                        || near_edge(axpy(u, 3.0 * h, e2))
                        || near_edge(axpy(u, -3.0 * h, e2))
                    {
                        continue;
                    }
                }
                let g = body.grad_r(*refp, u);
                let (e1, e2) = tangent_frame(u);
                for e in [e1, e2] {
                    let rp = body.radius_from(*refp, normalize(axpy(u, h, e)));
                    let rm = body.radius_from(*refp, normalize(axpy(u, -h, e)));
                    let fd = (rp - rm) / (2.0 * h);
                    let an = dot(g, e);
                    let denom = 1.0f64.max(an.abs());
                    assert!(
                        ((fd - an) / denom).abs() < 1e-6,
                        "gradient mismatch: fd={fd} analytic={an}"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 10_000);
    }

    #[test]
    fn overlap_caps_rejected() {
        let b = BodySpec::fixed(
            Shape::TruncatedSphere {
                planes: vec![
                    CutPlane {
                        normal: [0.0, 0.0, 1.0],
                        offset: 0.5,
                    },
                    CutPlane {
                        normal: normalize([0.3, 0.0, 1.0]),
                        offset: 0.5,
                    },
                ],
            },
            [0.0; 3],
        );
        assert!(matches!(b.validate(), Err(BodyError::NonConvex(_))));
    }

    #[test]
    fn nonconvex_harmonics_rejected() {
        let b = BodySpec::fixed(
            Shape::SphereHarmonics {
                coefficients: vec![HarmonicTerm { l: 4, m: 0, coeff: 0.2 }],
            },
            [0.0; 3],
        );
        assert!(matches!(b.validate(), Err(BodyError::NonConvex(_))));
    }
}
