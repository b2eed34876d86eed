//! Dormand-Prince 5(4) pair for complex linear ODEs.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

type State = DVector<C64>;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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

// 5th-order weights (also row 7 of the tableau, FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Difference between 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Clone, Copy, Debug)]
pub(crate) struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hard upper bound on |h|.
    pub max_step: f64,
}

/// Adaptive integrator that carries its step-size estimate between calls, so
/// a trajectory can be advanced sample by sample without restarting control.
pub(crate) struct DormandPrince<F> {
    rhs: F,
    ctrl: StepControl,
    h_next: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl<F> DormandPrince<F>
where
    F: FnMut(f64, &State) -> State,
{
    pub fn new(rhs: F, ctrl: StepControl, h_initial: f64) -> Self {
        Self {
            rhs,
            ctrl,
            h_next: h_initial.min(ctrl.max_step),
            steps: 0,
            rejected: 0,
        }
    }

    fn error_norm(&self, y: &State, y_new: &State, err: &State) -> f64 {
        let n = y.len() as f64;
        let sum: f64 = y
            .iter()
            .zip(y_new.iter())
            .zip(err.iter())
            .map(|((a, b), e)| {
                let sc = self.ctrl.abs_tol + self.ctrl.rel_tol * a.norm().max(b.norm());
                (e.norm() / sc).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    /// Advances `y` from `t` to `t_end` (either direction). Returns the state at
    /// `t_end`.
    pub fn advance(&mut self, mut t: f64, mut y: State, t_end: f64) -> State {
        let dir = if t_end >= t { 1.0 } else { -1.0 };
        let span_eps = 1e-14 * t_end.abs().max(1.0);
        let mut k1 = (self.rhs)(t, &y);
        while dir * (t_end - t) > span_eps {
            let remaining = (t_end - t).abs();
            let mut h = self.h_next.min(self.ctrl.max_step);
            let clamped = h >= remaining;
            if clamped {
                h = remaining;
            }
            let hs = dir * h;
            let hc = C64::new(hs, 0.0);

            let k2 = (self.rhs)(t + C2 * hs, &(&y + &k1 * (hc * A21)));
            let k3 = (self.rhs)(t + C3 * hs, &(&y + &k1 * (hc * A31) + &k2 * (hc * A32)));
            let k4 = (self.rhs)(
                t + C4 * hs,
                &(&y + &k1 * (hc * A41) + &k2 * (hc * A42) + &k3 * (hc * A43)),
            );
            let k5 = (self.rhs)(
                t + C5 * hs,
                &(&y + &k1 * (hc * A51) + &k2 * (hc * A52) + &k3 * (hc * A53) + &k4 * (hc * A54)),
            );
            let k6 = (self.rhs)(
                t + hs,
                &(&y + &k1 * (hc * A61)
                    + &k2 * (hc * A62)
                    + &k3 * (hc * A63)
                    + &k4 * (hc * A64)
                    + &k5 * (hc * A65)),
            );
            let y_new = &y
                + &k1 * (hc * B1)
                + &k3 * (hc * B3)
                + &k4 * (hc * B4)
                + &k5 * (hc * B5)
                + &k6 * (hc * B6);
            let k7 = (self.rhs)(t + hs, &y_new);
            let err = &k1 * (hc * E1)
                + &k3 * (hc * E3)
                + &k4 * (hc * E4)
                + &k5 * (hc * E5)
                + &k6 * (hc * E6)
                + &k7 * (hc * E7);

            let en = self.error_norm(&y, &y_new, &err);
            let factor = if en == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if en <= 1.0 {
                t = if clamped { t_end } else { t + hs };
                y = y_new;
                k1 = k7;
                self.steps += 1;
                // A step shortened only to land on t_end says nothing about
                // the admissible size; keep the previous estimate then.
                if !clamped || factor < 1.0 {
                    self.h_next = (h * factor).min(self.ctrl.max_step);
                }
            } else {
                self.rejected += 1;
                self.h_next = h * factor.min(1.0);
            }
        }
        y
    }
}
