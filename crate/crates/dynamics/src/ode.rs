//! Adaptive Dormand-Prince 5(4) integration for the small autonomous systems
//! used by the shooting and separatrix tracers.

/// One accepted step of the integrator.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    pub t1: f64,
    pub y1: [f64; N],
}

pub struct Rk45<const N: usize, F: FnMut(&[f64; N]) -> [f64; N]> {
    f: F,
    pub t: f64,
    pub y: [f64; N],
    h: f64,
    tol: f64,
    max_step: f64,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// embedded 4th-order weights
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

impl<const N: usize, F: FnMut(&[f64; N]) -> [f64; N]> Rk45<N, F> {
    pub fn new(f: F, y0: [f64; N], tol: f64, max_step: f64) -> Self {
        Rk45 {
            f,
            t: 0.0,
            y: y0,
            h: max_step.min(1e-3),
            tol,
            max_step,
        }
    }

    /// Step size the controller currently proposes.
    pub fn current_step(&self) -> f64 {
        self.h
    }

    fn axpy(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
        let mut out = *y;
        for (c, k) in terms {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
        out
    }

    /// Advance one accepted step; returns the step taken.
    pub fn step(&mut self) -> Step<N> {
        loop {
            let h = self.h;
            let k1 = (self.f)(&self.y);
            let k2 = (self.f)(&Self::axpy(&self.y, &[(A21, &k1)], h));
            let k3 = (self.f)(&Self::axpy(&self.y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = (self.f)(&Self::axpy(&self.y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
            let k5 = (self.f)(&Self::axpy(
                &self.y,
                &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
                h,
            ));
            let k6 = (self.f)(&Self::axpy(
                &self.y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                h,
            ));
            let y5 = Self::axpy(
                &self.y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                h,
            );
            let k7 = (self.f)(&y5);
            let y4 = Self::axpy(
                &self.y,
                &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
                h,
            );
            let mut err: f64 = 0.0;
            for i in 0..N {
                let scale = 1.0 + self.y[i].abs();
                err = err.max(((y5[i] - y4[i]) / scale).abs());
            }
            if err <= self.tol || self.h <= 1e-14 {
                let step = Step {
                    t0: self.t,
                    y0: self.y,
                    t1: self.t + h,
                    y1: y5,
                };
                self.t += h;
                self.y = y5;
                let grow = if err > 0.0 {
                    0.9 * (self.tol / err).powf(0.2)
                } else {
                    2.0
                };
                self.h = (self.h * grow.clamp(0.2, 2.0)).min(self.max_step);
                return step;
            }
            self.h *= (0.9 * (self.tol / err).powf(0.2)).clamp(0.1, 0.5);
        }
    }
}
