//! The planar codimension-2 normal form: a cubic potential whose negative
//! gradient exhibits a saddle-node with a second hyperbolic saddle, the
//! saddle-node discriminant curve, the explicit heteroclinic curve, and the
//! region classification of the unfolding plane.

use crate::ode::Rk45;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parameter value at which the far saddle leaves every compact region and
/// the fixed-point quartic degenerates to a cubic.
pub fn alpha_star() -> f64 {
    0.25f64.cbrt()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormalFormParams {
    pub mu1: f64,
    pub mu2: f64,
    pub alpha: f64,
}

impl NormalFormParams {
    pub fn new(mu1: f64, mu2: f64, alpha: f64) -> Self {
        assert!(
            alpha >= alpha_star() - 1e-12,
            "alpha below the admissible range"
        );
        NormalFormParams { mu1, mu2, alpha }
    }

    pub fn at_star(mu1: f64, mu2: f64) -> Self {
        Self::new(mu1, mu2, alpha_star())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("no sign change while bracketing the discriminant root near {0}")]
    BracketFailure(f64),
    #[error("mu2 = {0} outside the heteroclinic range (0, sqrt(alpha))")]
    OutOfRange(f64),
    #[error("point is within {0:.1e} of a bifurcation curve; side test is ambiguous")]
    OnCurveAmbiguous(f64),
    #[error("missing expected fixed points for the side test")]
    MissingFixedPoints,
}

/// The potential V(x, y).
pub fn potential(p: &NormalFormParams, x: f64, y: f64) -> f64 {
    x * x * x / 3.0 + y * y / 2.0 + y * y * y / 3.0
        - p.alpha * x * x * y
        - p.mu1 * x
        - p.mu2 * x * y
}

/// The negative-gradient field of the potential.
pub fn eval_field(p: &NormalFormParams, x: f64, y: f64) -> (f64, f64) {
    (
        -x * x + 2.0 * p.alpha * x * y + p.mu1 + p.mu2 * y,
        p.alpha * x * x - y - y * y + p.mu2 * x,
    )
}

/// Jacobian of the field (symmetric: the field is a gradient).
pub fn jacobian(p: &NormalFormParams, x: f64, y: f64) -> [[f64; 2]; 2] {
    [
        [-2.0 * x + 2.0 * p.alpha * y, 2.0 * p.alpha * x + p.mu2],
        [2.0 * p.alpha * x + p.mu2, -1.0 - 2.0 * y],
    ]
}

fn eigenvalues_sym(j: [[f64; 2]; 2]) -> (f64, f64) {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}

/// Eigenvector of the symmetric Jacobian for eigenvalue `lam`.
fn eigenvector_sym(j: [[f64; 2]; 2], lam: f64) -> (f64, f64) {
    let (a, b, d) = (j[0][0], j[0][1], j[1][1]);
    let (vx, vy) = if b.abs() > 1e-14 {
        (b, lam - a)
    } else if (a - lam).abs() < (d - lam).abs() {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let n = (vx * vx + vy * vy).sqrt();
    (vx / n, vy / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointKind {
    Sink,
    Source,
    Saddle,
    SaddleNode,
    Degenerate,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FixedPoint2D {
    pub x: f64,
    pub y: f64,
    pub eigenvalues: (f64, f64),
    pub kind: FixedPointKind,
}

const TOL_RESIDUAL: f64 = 1e-10;
const TOL_DEGENERATE: f64 = 1e-7;

fn classify_eigen(l1: f64, l2: f64) -> FixedPointKind {
    let near_zero = |l: f64| l.abs() < TOL_DEGENERATE;
    match (near_zero(l1), near_zero(l2)) {
        (true, true) => FixedPointKind::Degenerate,
        (true, false) | (false, true) => FixedPointKind::SaddleNode,
        _ => {
            if l1 < 0.0 && l2 < 0.0 {
                FixedPointKind::Sink
            } else if l1 > 0.0 && l2 > 0.0 {
                FixedPointKind::Source
            } else {
                FixedPointKind::Saddle
            }
        }
    }
}

/// Coefficients of the fixed-point quartic in x, highest power first.
pub fn quartic_coefficients(p: &NormalFormParams) -> [f64; 5] {
    let a = p.alpha;
    [
        4.0 * a * a * a - 1.0,
        2.0 * a * (4.0 * a * p.mu2 - 1.0),
        2.0 * p.mu1 + 5.0 * a * p.mu2 * p.mu2 - p.mu2,
        2.0 * a * p.mu1 + p.mu2 * p.mu2 * p.mu2,
        p.mu1 * p.mu2 - p.mu1 * p.mu1,
    ]
}

/// Real roots of a polynomial (descending coefficients) via the companion
/// matrix. Leading near-zero coefficients are dropped; trailing near-zero
/// coefficients are peeled off as explicit roots at zero, which keeps the
/// companion matrix away from the nilpotent degenerate case.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c[0].abs() < 1e-12 {
        c.remove(0);
    }
    let mut out: Vec<f64> = Vec::new();
    while c.len() > 1 && c.last().unwrap().abs() < 1e-300 {
        c.pop();
        out.push(0.0);
    }
    let n = c.len() - 1;
    if n == 0 {
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        return out;
    }
    let lead = c[0];
    let monic: Vec<f64> = c[1..].iter().map(|v| v / lead).collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(0, i)] = -monic[i];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    match nalgebra::linalg::Schur::try_new(m, 1e-14, 50_000) {
        Some(s) => {
            for l in s.complex_eigenvalues().iter() {
                if l.im.abs() < 1e-5 * (1.0 + l.re.abs()) {
                    out.push(l.re);
                }
            }
        }
        None => {
            out.extend(durand_kerner_real(&c));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

/// Durand-Kerner fallback when the bounded Schur iteration gives up.
fn durand_kerner_real(c: &[f64]) -> Vec<f64> {
    use nalgebra::Complex;
    let n = c.len() - 1;
    let lead = c[0];
    let monic: Vec<Complex<f64>> = c.iter().map(|&v| Complex::new(v / lead, 0.0)).collect();
    let eval = |z: Complex<f64>| {
        let mut h = Complex::new(0.0, 0.0);
        for &a in monic.iter() {
            h = h * z + a;
        }
        h
    };
    let mut roots: Vec<Complex<f64>> = (0..n)
        .map(|k| Complex::new(0.4, 0.9).powu(k as u32 + 1))
        .collect();
    for _ in 0..500 {
        let old = roots.clone();
        for i in 0..n {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= old[i] - old[j];
                }
            }
            roots[i] = old[i] - eval(old[i]) / denom;
        }
    }
    roots
        .into_iter()
        .filter(|z| z.im.abs() < 1e-5 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

fn newton2(p: &NormalFormParams, mut x: f64, mut y: f64) -> Option<(f64, f64)> {
    for _ in 0..60 {
        let (fx, fy) = eval_field(p, x, y);
        if fx.abs().max(fy.abs()) < 1e-14 {
            break;
        }
        let j = jacobian(p, x, y);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-16 {
            return None;
        }
        let dx = (fx * j[1][1] - fy * j[0][1]) / det;
        let dy = (fy * j[0][0] - fx * j[1][0]) / det;
        x -= dx;
        y -= dy;
        if dx.abs().max(dy.abs()) < 1e-15 {
            break;
        }
    }
    let (fx, fy) = eval_field(p, x, y);
    (fx.abs().max(fy.abs()) <= TOL_RESIDUAL).then_some((x, y))
}

/// All fixed points of the field: quartic roots in x with y recovered from
/// the first equation, Newton-polished. Roots that annihilate the recovery
/// denominator are resolved by solving the second equation for y directly
/// and polishing from those seeds.
pub fn fixed_points(p: &NormalFormParams) -> Vec<FixedPoint2D> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for x in real_roots(&quartic_coefficients(p)) {
        // regular recovery from the first equation
        let denom = 2.0 * p.alpha * x + p.mu2;
        let mut seeds: Vec<(f64, f64)> = Vec::new();
        if denom.abs() >= 1e-6 {
            seeds.push((x, (x * x - p.mu1) / denom));
        }
        // recovery from the second equation: always tried, so roots near the
        // excluded denominator (double roots on the invariant line) are
        // resolved by Newton from well-defined seeds
        let disc = 1.0 + 4.0 * (p.alpha * x * x + p.mu2 * x);
        if disc >= 0.0 {
            for sgn in [-1.0, 1.0] {
                seeds.push((x, (-1.0 + sgn * disc.sqrt()) / 2.0));
            }
        }
        for (sx, sy) in seeds {
            let (fx, fy) = eval_field(p, sx, sy);
            if fx.abs().max(fy.abs()) > 1e-4 {
                continue;
            }
            if let Some(q) = newton2(p, sx, sy) {
                pts.push(q);
            } else if fx.abs().max(fy.abs()) <= TOL_RESIDUAL {
                pts.push((sx, sy));
            }
        }
    }
    // dedupe
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8);
    pts.iter()
        .map(|&(x, y)| {
            let (l1, l2) = eigenvalues_sym(jacobian(p, x, y));
            FixedPoint2D {
                x,
                y,
                eigenvalues: (l1, l2),
                kind: classify_eigen(l1, l2),
            }
        })
        .collect()
}

/// Discriminant of the cubic obtained at alpha = alpha*, as a function of
/// the coefficients at the given parameters.
pub fn cubic_discriminant(p: &NormalFormParams) -> f64 {
    let [_, a3, a2, a1, a0] = quartic_coefficients(p);
    18.0 * a0 * a1 * a2 * a3 - 4.0 * a0 * a2 * a2 * a2 + a1 * a1 * a2 * a2
        - 4.0 * a1 * a1 * a1 * a3
        - 27.0 * a0 * a0 * a3 * a3
}

/// Series expansion of the saddle-node branch at alpha*.
pub fn saddle_node_series(mu2: f64) -> f64 {
    let c1 = 2f64.powf(1.0 / 3.0);
    let c2 = 2f64.powf(2.0 / 3.0);
    -mu2.powi(4) / 4.0 - 3.0 * c1 * mu2.powi(5) / 8.0 - 5.0 * c2 * mu2.powi(6) / 8.0
}

/// The saddle-node bifurcation value mu1 = f1(mu2) at alpha*: the root of the
/// cubic discriminant on the branch approaching -mu2^4/4, located by
/// bisection in a bracket seeded by the series.
pub fn saddle_node_curve(mu2: f64, alpha: f64) -> Result<f64, NormalFormError> {
    if mu2 == 0.0 {
        return Ok(0.0);
    }
    let delta = |mu1: f64| {
        cubic_discriminant(&NormalFormParams {
            mu1,
            mu2,
            alpha,
        })
    };
    let center = saddle_node_series(mu2);
    let mut margin = (50.0 * mu2.abs().powi(7)).max(1e-13 * (1.0 + center.abs()));
    for _ in 0..60 {
        let (lo, hi) = (center - margin, center + margin);
        let (flo, fhi) = (delta(lo), delta(hi));
        if flo == 0.0 {
            return Ok(lo);
        }
        if fhi == 0.0 {
            return Ok(hi);
        }
        if flo * fhi < 0.0 {
            let (mut lo, mut hi, mut flo) = (lo, hi, flo);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = delta(mid);
                if fm == 0.0 || (hi - lo).abs() < 1e-17 * (1.0 + mid.abs()) {
                    return Ok(mid);
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        margin *= 2.0;
        if margin > mu2.abs().powi(4) {
            break;
        }
    }
    Err(NormalFormError::BracketFailure(center))
}

/// The heteroclinic curve mu1 = f2(mu2) = mu2^2 / (4 alpha^2), with the
/// connecting orbit verified by shooting along the invariant line.
pub fn heteroclinic_curve(mu2: f64, alpha: f64) -> Result<f64, NormalFormError> {
    if mu2 <= 0.0 || mu2 >= alpha.sqrt() {
        return Err(NormalFormError::OutOfRange(mu2));
    }
    let mu1 = mu2 * mu2 / (4.0 * alpha * alpha);
    let p = NormalFormParams { mu1, mu2, alpha };
    let (lower, upper) = heteroclinic_saddles(&p).ok_or(NormalFormError::MissingFixedPoints)?;
    let shot = shoot_unstable(&p, &lower, &upper);
    if shot.min_distance <= 1e-6 {
        Ok(mu1)
    } else {
        Err(NormalFormError::BracketFailure(mu1))
    }
}

/// The two saddles of the unfolding region, ordered lower then upper.
pub fn heteroclinic_saddles(p: &NormalFormParams) -> Option<(FixedPoint2D, FixedPoint2D)> {
    let mut saddles: Vec<FixedPoint2D> = relevant_fixed_points(p)
        .into_iter()
        .filter(|f| f.kind == FixedPointKind::Saddle)
        .collect();
    saddles.sort_by(|a, b| a.y.partial_cmp(&b.y).unwrap());
    if saddles.len() != 2 {
        return None;
    }
    Some((saddles[0], saddles[1]))
}

/// Outcome of shooting the lower saddle's ascending unstable branch past the
/// upper saddle.
#[derive(Debug, Clone, Copy)]
pub struct ShotOutcome {
    /// Smallest distance to the upper saddle along the trajectory.
    pub min_distance: f64,
    /// Signed offset along the transversal through the upper saddle
    /// (perpendicular to its stable eigendirection) at the first crossing;
    /// positive passes left in the orientation of the unfolding figure.
    pub crossing: Option<f64>,
    /// Whether the branch fell into the sink of the unfolding region.
    pub converged_to_sink: bool,
}

/// Integrate the unstable manifold of `lower` toward `upper` and measure how
/// it passes the upper saddle's stable manifold.
pub fn shoot_unstable(
    p: &NormalFormParams,
    lower: &FixedPoint2D,
    upper: &FixedPoint2D,
) -> ShotOutcome {
    let jl = jacobian(p, lower.x, lower.y);
    let (l1, l2) = lower.eigenvalues;
    let lam_u = if l1 > l2 { l1 } else { l2 };
    let (mut ux, mut uy) = eigenvector_sym(jl, lam_u);
    if uy < 0.0 {
        ux = -ux;
        uy = -uy;
    }
    // stable direction at the upper saddle, oriented away from the lower one
    let ju = jacobian(p, upper.x, upper.y);
    let (m1, m2) = upper.eigenvalues;
    let lam_s = if m1 < m2 { m1 } else { m2 };
    let (mut sx, mut sy) = eigenvector_sym(ju, lam_s);
    if sy < 0.0 {
        sx = -sx;
        sy = -sy;
    }
    // transversal normal: 90-degree rotation of the stable direction
    let (nx, ny) = (-sy, sx);

    let pc = *p;
    let field = move |y: &[f64; 2]| {
        let (fx, fy) = eval_field(&pc, y[0], y[1]);
        [fx, fy]
    };
    let eps = 1e-6;
    let start = [lower.x + eps * ux, lower.y + eps * uy];
    let sink = relevant_fixed_points(p)
        .into_iter()
        .find(|f| f.kind == FixedPointKind::Sink);
    let mut ode = Rk45::new(field, start, 1e-12, 5e-3);
    let mut min_d = f64::INFINITY;
    let mut crossing = None;
    let mut converged_to_sink = false;
    let mut prev = start;
    let mut prev_psi = (prev[0] - upper.x) * sx + (prev[1] - upper.y) * sy;
    while ode.t < 200.0 {
        let st = ode.step();
        let q = st.y1;
        let d = ((q[0] - upper.x).powi(2) + (q[1] - upper.y).powi(2)).sqrt();
        min_d = min_d.min(d);
        let psi = (q[0] - upper.x) * sx + (q[1] - upper.y) * sy;
        if crossing.is_none() && prev_psi < 0.0 && psi >= 0.0 && d < 0.5 {
            // linear interpolation to the crossing of the transversal
            let w = -prev_psi / (psi - prev_psi);
            let cx = prev[0] + w * (q[0] - prev[0]);
            let cy = prev[1] + w * (q[1] - prev[1]);
            crossing = Some((cx - upper.x) * nx + (cy - upper.y) * ny);
        }
        if let Some(s) = &sink {
            if (q[0] - s.x).hypot(q[1] - s.y) < 1e-4 {
                converged_to_sink = true;
                break;
            }
        }
        // leave once clearly past the region of interest
        if q[0].abs() > 2.5 || q[1].abs() > 2.5 {
            break;
        }
        let speed = {
            let (fx, fy) = eval_field(p, q[0], q[1]);
            fx.hypot(fy)
        };
        if speed < 1e-13 {
            break;
        }
        prev = q;
        prev_psi = psi;
    }
    ShotOutcome {
        min_distance: min_d,
        crossing,
        converged_to_sink,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionLabel {
    /// Only the lower saddle exists.
    NoUpperPair,
    /// Two saddles and a sink; the unstable branch passes left.
    SaddlesUnconnectedLeft,
    /// Two saddles and a sink; the unstable branch passes right.
    SaddlesUnconnectedRight,
    OnSaddleNodeCurve,
    OnHeteroclinicCurve,
    Codim2Origin,
}

/// Classified parameter point with its relevant fixed point count.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionSample {
    pub mu1: f64,
    pub mu2: f64,
    pub label: RegionLabel,
    pub fixed_points: usize,
}

const CURVE_SNAP: f64 = 1e-9;

/// Classify an unfolding-plane point into the open regions and curves.
pub fn classify_region(p: &NormalFormParams) -> Result<RegionSample, NormalFormError> {
    let f1 = saddle_node_curve(p.mu2, p.alpha)?;
    let f2 = if p.mu2 > 0.0 && p.mu2 < p.alpha.sqrt() {
        Some(p.mu2 * p.mu2 / (4.0 * p.alpha * p.alpha))
    } else {
        None
    };
    let relevant = relevant_fixed_points(p);
    let n = relevant.len();
    let sample = |label| {
        Ok(RegionSample {
            mu1: p.mu1,
            mu2: p.mu2,
            label,
            fixed_points: n,
        })
    };
    if p.mu1.abs() < CURVE_SNAP && p.mu2.abs() < CURVE_SNAP {
        return sample(RegionLabel::Codim2Origin);
    }
    let near_f1 = (p.mu1 - f1).abs() < CURVE_SNAP;
    let near_f2 = f2.map(|v| (p.mu1 - v).abs() < CURVE_SNAP).unwrap_or(false);
    if near_f1 && near_f2 {
        return Err(NormalFormError::OnCurveAmbiguous(CURVE_SNAP));
    }
    if near_f1 {
        return sample(RegionLabel::OnSaddleNodeCurve);
    }
    if near_f2 {
        return sample(RegionLabel::OnHeteroclinicCurve);
    }
    if p.mu1 < f1 {
        return sample(RegionLabel::NoUpperPair);
    }
    // two saddles and a sink: decide the passing side
    let (lower, upper) =
        heteroclinic_saddles(p).ok_or(NormalFormError::MissingFixedPoints)?;
    let shot = shoot_unstable(p, &lower, &upper);
    match shot.crossing {
        Some(c) if c.abs() >= 1e-12 => {
            if c > 0.0 {
                sample(RegionLabel::SaddlesUnconnectedLeft)
            } else {
                sample(RegionLabel::SaddlesUnconnectedRight)
            }
        }
        Some(_) => Err(NormalFormError::OnCurveAmbiguous(1e-12)),
        // the branch never entered the capture disk: fall back to where it
        // ended up (into the sink means passing right)
        None if shot.converged_to_sink => sample(RegionLabel::SaddlesUnconnectedRight),
        None => sample(RegionLabel::SaddlesUnconnectedLeft),
    }
}

/// Fixed points near the unfolding region, excluding the far saddle that
/// exits every compact set as alpha approaches alpha*.
pub fn relevant_fixed_points(p: &NormalFormParams) -> Vec<FixedPoint2D> {
    let all = fixed_points(p);
    all.into_iter()
        .filter(|f| {
            if 4.0 * p.alpha.powi(3) - 1.0 > 1e-9 {
                let far_x = 2.0 * p.alpha / (4.0 * p.alpha.powi(3) - 1.0);
                let far_y = 1.0 / (4.0 * p.alpha.powi(3) - 1.0);
                let d = (f.x - far_x).hypot(f.y - far_y);
                if d < 0.3 * (far_x.hypot(far_y)) {
                    return false;
                }
            }
            f.x.abs() < 1.5 && f.y > -1.6 && f.y < 0.6
        })
        .collect()
}

/// Grid scan of the unfolding box; rows are (mu1, mu2, label, count).
pub fn scan(
    alpha: f64,
    half_box: f64,
    grid: usize,
) -> Vec<Result<RegionSample, (f64, f64, NormalFormError)>> {
    use rayon::prelude::*;
    let coords: Vec<(f64, f64)> = (0..grid)
        .flat_map(|i| {
            (0..grid).map(move |j| {
                let mu1 = -half_box + 2.0 * half_box * (i as f64) / ((grid - 1) as f64);
                let mu2 = -half_box + 2.0 * half_box * (j as f64) / ((grid - 1) as f64);
                (mu1, mu2)
            })
        })
        .collect();
    coords
        .par_iter()
        .map(|&(mu1, mu2)| {
            let p = NormalFormParams { mu1, mu2, alpha };
            classify_region(&p).map_err(|e| (mu1, mu2, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_vanishes_at_the_organizing_points() {
        let p = NormalFormParams::at_star(0.0, 0.0);
        assert_eq!(eval_field(&p, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(eval_field(&p, 0.0, -1.0), (0.0, 0.0));
        // invariant axis
        for y0 in [-2.0, -0.3, 0.7, 1.9] {
            assert_eq!(eval_field(&p, 0.0, y0).0, 0.0);
        }
    }

    #[test]
    fn field_is_negative_gradient() {
        let p = NormalFormParams::new(0.013, -0.08, 0.71);
        let h = 1e-6;
        for (x, y) in [(0.2, -0.4), (-0.5, 0.1), (0.0, -1.0)] {
            let (fx, fy) = eval_field(&p, x, y);
            let gx = (potential(&p, x + h, y) - potential(&p, x - h, y)) / (2.0 * h);
            let gy = (potential(&p, x, y + h) - potential(&p, x, y - h)) / (2.0 * h);
            assert!((fx + gx).abs() < 1e-8);
            assert!((fy + gy).abs() < 1e-8);
        }
    }

    #[test]
    fn origin_fixed_points_at_star() {
        let p = NormalFormParams::at_star(0.0, 0.0);
        let fps = fixed_points(&p);
        let at = |x: f64, y: f64| {
            fps.iter()
                .find(|f| (f.x - x).abs() < 1e-9 && (f.y - y).abs() < 1e-9)
                .copied()
                .unwrap_or_else(|| panic!("missing fixed point ({x},{y}) in {fps:?}"))
        };
        let sn = at(0.0, 0.0);
        assert!(sn.eigenvalues.0.abs() < 1e-9 || sn.eigenvalues.1.abs() < 1e-9);
        let saddle = at(0.0, -1.0);
        let a = alpha_star();
        let (l1, l2) = saddle.eigenvalues;
        assert!((l1 - (-2.0 * a)).abs() < 1e-9);
        assert!((l2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quartic_degenerates_at_star() {
        let c = quartic_coefficients(&NormalFormParams::at_star(0.0, 0.0));
        assert!(c[0].abs() < 1e-12); // 4 alpha^3 - 1
        assert!((c[1] + 2.0 * alpha_star()).abs() < 1e-12);
    }

    #[test]
    fn far_saddle_exists_above_star() {
        let a = 0.75;
        let p = NormalFormParams::new(0.0, 0.0, a);
        let fps = fixed_points(&p);
        let far_x = 2.0 * a / (4.0 * a * a * a - 1.0);
        let far_y = 1.0 / (4.0 * a * a * a - 1.0);
        assert!(fps
            .iter()
            .any(|f| (f.x - far_x).abs() < 1e-6 && (f.y - far_y).abs() < 1e-6));
    }

    #[test]
    fn saddle_node_series_value() {
        // the series at mu2 = 0.2 evaluates near -6.147e-4
        let s = saddle_node_series(0.2);
        assert!((s - (-6.1469e-4)).abs() < 1e-7, "{s}");
    }

    #[test]
    fn saddle_node_numeric_matches_series() {
        for mu2 in [0.05f64, 0.1, 0.2, -0.2] {
            let f1 = saddle_node_curve(mu2, alpha_star()).unwrap();
            let s = saddle_node_series(mu2);
            assert!(
                (f1 - s).abs() <= 10.0 * mu2.abs().powi(7),
                "mu2={mu2}: f1={f1:e} series={s:e} diff={:e}",
                (f1 - s).abs()
            );
        }
        assert_eq!(saddle_node_curve(0.0, alpha_star()).unwrap(), 0.0);
    }

    #[test]
    fn heteroclinic_connection_at_point_two() {
        let a = alpha_star();
        let mu1 = heteroclinic_curve(0.2, a).unwrap();
        assert!((mu1 - 0.2 * 0.2 / (4.0 * a * a)).abs() < 1e-15);
        assert!((mu1 - 2.5198e-2).abs() < 1e-6);
        let p = NormalFormParams::new(mu1, 0.2, a);
        let (lower, upper) = heteroclinic_saddles(&p).unwrap();
        let xline = -mu1.sqrt();
        assert!((lower.x - xline).abs() < 1e-9);
        assert!((upper.x - xline).abs() < 1e-9);
        let root = (1.0f64 - 0.2 * 0.2 / a).sqrt();
        assert!((lower.y - 0.5 * (-1.0 - root)).abs() < 1e-9);
        assert!((upper.y - 0.5 * (-1.0 + root)).abs() < 1e-9);
    }

    #[test]
    fn heteroclinic_rejects_out_of_range() {
        assert!(matches!(
            heteroclinic_curve(-0.2, alpha_star()),
            Err(NormalFormError::OutOfRange(_))
        ));
        assert!(matches!(
            heteroclinic_curve(0.9, alpha_star()),
            Err(NormalFormError::OutOfRange(_))
        ));
    }

    #[test]
    fn negative_mu2_line_is_not_a_bifurcation() {
        // saddle-to-sink alignment at mu1 = mu2^2/4a^2 with mu2 < 0: both
        // sides classify the same (structurally stable)
        let a = alpha_star();
        let mu2 = -0.2;
        let mu1 = mu2 * mu2 / (4.0 * a * a);
        let left = classify_region(&NormalFormParams::new(mu1 - 1e-4, mu2, a)).unwrap();
        let right = classify_region(&NormalFormParams::new(mu1 + 1e-4, mu2, a)).unwrap();
        assert_eq!(left.label, right.label);
    }

    #[test]
    fn region_examples() {
        let a = alpha_star();
        let mu2 = 0.2;
        let f1 = saddle_node_curve(mu2, a).unwrap();
        let f2 = mu2 * mu2 / (4.0 * a * a);
        // below f1: only the lower saddle
        let g = classify_region(&NormalFormParams::new(f1 - 0.01, mu2, a)).unwrap();
        assert_eq!(g.label, RegionLabel::NoUpperPair);
        assert_eq!(g.fixed_points, 1);
        // between the curves: left-passing
        let e = classify_region(&NormalFormParams::new(0.5 * f2, mu2, a)).unwrap();
        assert_eq!(e.label, RegionLabel::SaddlesUnconnectedLeft);
        assert_eq!(e.fixed_points, 3);
        // above both: right-passing
        let c = classify_region(&NormalFormParams::new(2.0 * f2, mu2, a)).unwrap();
        assert_eq!(c.label, RegionLabel::SaddlesUnconnectedRight);
        assert_eq!(c.fixed_points, 3);
    }

    #[test]
    fn crossing_flips_sign_across_the_heteroclinic() {
        let a = alpha_star();
        let mu2 = 0.2;
        let f2 = mu2 * mu2 / (4.0 * a * a);
        let side = |mu1: f64| {
            let p = NormalFormParams::new(mu1, mu2, a);
            let (lower, upper) = heteroclinic_saddles(&p).unwrap();
            shoot_unstable(&p, &lower, &upper).crossing
        };
        let below = side(f2 - 1e-4);
        let above = side(f2 + 1e-4);
        let (b, ab) = (below.unwrap(), above.unwrap());
        assert!(
            b * ab < 0.0,
            "crossing signs should differ: {b:e} vs {ab:e}"
        );
        // and the connection itself passes within the tube
        let p = NormalFormParams::new(f2, mu2, a);
        let (lower, upper) = heteroclinic_saddles(&p).unwrap();
        assert!(shoot_unstable(&p, &lower, &upper).min_distance <= 1e-6);
    }

    #[test]
    fn fixed_point_count_changes_by_two_across_f1() {
        let a = alpha_star();
        for mu2 in [0.1, 0.2] {
            let f1 = saddle_node_curve(mu2, a).unwrap();
            let lo = relevant_fixed_points(&NormalFormParams::new(f1 - 1e-5, mu2, a)).len();
            let hi = relevant_fixed_points(&NormalFormParams::new(f1 + 1e-5, mu2, a)).len();
            assert_eq!(lo + 2, hi, "mu2={mu2}: {lo} -> {hi}");
        }
    }
}
