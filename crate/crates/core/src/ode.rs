//! Adaptive Dormand–Prince 5(4) integration of complex linear systems with
//! continuous (dense) output.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};

/// Integrator tolerances and limits shared by all solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Accepted plus rejected steps allowed over one integration.
    pub max_steps: usize,
    /// Largest superoperator dimension the diagonalization solver densifies.
    pub dense_cap: usize,
    /// Upper bound on the step size; `None` lets the controller decide.
    pub max_step: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rtol: 1e-6,
            atol: 1e-8,
            max_steps: 100_000,
            dense_cap: 4096,
            max_step: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(QError::Argument(format!(
                "tolerances must be positive (rtol {}, atol {})",
                self.rtol, self.atol
            )));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(QError::Argument(format!(
                    "max_step must be positive, got {h}"
                )));
            }
        }
        Ok(())
    }
}

/// Checks that output times are finite and strictly ascending.
pub fn validate_tlist(tlist: &[f64], min_len: usize) -> Result<()> {
    if tlist.len() < min_len {
        return Err(QError::Argument(format!(
            "tlist needs at least {min_len} points, got {}",
            tlist.len()
        )));
    }
    if tlist.iter().any(|t| !t.is_finite()) {
        return Err(QError::Argument("tlist contains a non-finite time".into()));
    }
    if let Some(k) = tlist.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(QError::Argument(format!(
            "tlist must be strictly ascending (t[{k}] = {}, t[{}] = {})",
            tlist[k],
            k + 1,
            tlist[k + 1]
        )));
    }
    Ok(())
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Stepper state. `f(t, y, dy)` writes the derivative into `dy`.
///
/// After each call to [`Dopri5::step`] the interval `[t_prev, t]` is covered
/// by a quartic interpolant available through [`Dopri5::dense`].
pub struct Dopri5<F> {
    f: F,
    opts: SolverOptions,
    t: f64,
    t_prev: f64,
    h: f64,
    h_prev: f64,
    y: Vec<C64>,
    k: [Vec<C64>; 7],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
    rcont: [Vec<C64>; 5],
    err_prev: f64,
    rejected_last: bool,
    steps: usize,
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    /// Prepares integration from `(t0, y0)`. `t_hint` is the far end of the
    /// interval, used only to bound the first step.
    pub fn new(f: F, t0: f64, y0: Vec<C64>, t_hint: f64, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let n = y0.len();
        let z = || vec![C64::new(0.0, 0.0); n];
        let mut s = Dopri5 {
            f,
            opts,
            t: t0,
            t_prev: t0,
            h: 0.0,
            h_prev: 0.0,
            y: y0,
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            rcont: [z(), z(), z(), z(), z()],
            err_prev: 1e-4,
            rejected_last: false,
            steps: 0,
        };
        s.restart(t0, t_hint);
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Replaces the state (after a discontinuity) and restarts step-size
    /// selection; the step counter keeps running.
    pub fn reset(&mut self, t: f64, y: &[C64], t_hint: f64) {
        self.y.copy_from_slice(y);
        self.restart(t, t_hint);
    }

    fn restart(&mut self, t: f64, t_hint: f64) {
        self.t = t;
        self.t_prev = t;
        self.err_prev = 1e-4;
        self.rejected_last = false;
        (self.f)(t, &self.y, &mut self.k[0]);
        self.h = self.initial_step(t_hint - t);
        self.h_prev = 0.0;
    }

    fn weight(&self, a: C64, b: C64) -> f64 {
        self.opts.atol + self.opts.rtol * a.norm().max(b.norm())
    }

    fn initial_step(&mut self, span: f64) -> f64 {
        let n = self.y.len().max(1) as f64;
        let span = span.abs();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (y, f) in self.y.iter().zip(&self.k[0]) {
            let sk = self.opts.atol + self.opts.rtol * y.norm();
            d0 += (y.norm() / sk).powi(2);
            d1 += (f.norm() / sk).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        if span > 0.0 {
            h0 = h0.min(span);
        }
        for i in 0..self.y.len() {
            self.ytmp[i] = self.y[i] + self.k[0][i] * h0;
        }
        (self.f)(self.t + h0, &self.ytmp, &mut self.k[1]);
        let mut d2 = 0.0;
        for i in 0..self.y.len() {
            let sk = self.opts.atol + self.opts.rtol * self.y[i].norm();
            d2 += ((self.k[1][i] - self.k[0][i]).norm() / sk).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dmax).powf(0.2)
        };
        let mut h = (100.0 * h0).min(h1);
        if span > 0.0 {
            h = h.min(span);
        }
        if let Some(m) = self.opts.max_step {
            h = h.min(m);
        }
        h
    }

    /// Advances by one accepted step, never past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<()> {
        let n = self.y.len();
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(QError::Convergence {
                    t: self.t,
                    reason: format!("exceeded {} internal steps", self.opts.max_steps),
                });
            }
            self.steps += 1;
            let remaining = t_end - self.t;
            let mut h = self.h;
            if let Some(m) = self.opts.max_step {
                h = h.min(m);
            }
            // land exactly on t_end rather than leaving a sliver
            let last = h >= remaining * (1.0 - 1e-10);
            if last {
                h = remaining;
            }
            if !(h > 0.0) || h < 8.0 * f64::EPSILON * self.t.abs().max(1e-300) {
                return Err(QError::Convergence {
                    t: self.t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            let t = self.t;
            self.stages(t, h);
            let mut err = 0.0;
            for i in 0..n {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h;
                let w = self.weight(self.y[i], self.ynew[i]);
                err += (e.norm() / w).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                self.h = h * FAC_MIN;
                self.rejected_last = true;
                continue;
            }
            if err <= 1.0 {
                let mut fac = SAFETY * err.max(1e-300).powf(-EXPO) * self.err_prev.powf(BETA);
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if self.rejected_last {
                    fac = fac.min(1.0);
                }
                self.err_prev = err.max(1e-4);
                self.rejected_last = false;
                self.fill_dense(h);
                self.t_prev = t;
                self.h_prev = h;
                self.t = if last { t_end } else { t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                self.k.swap(0, 6);
                self.h = h * fac;
                return Ok(());
            }
            let fac = (SAFETY * err.powf(-EXPO)).max(FAC_MIN);
            self.h = h * fac.min(1.0);
            self.rejected_last = true;
        }
    }

    fn stages(&mut self, t: f64, h: f64) {
        let n = self.y.len();
        let y = &self.y;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ytmp = &mut self.ytmp;
        for i in 0..n {
            ytmp[i] = y[i] + k1[i] * (h * A21);
        }
        (self.f)(t + C2 * h, ytmp, k2);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        (self.f)(t + C3 * h, ytmp, k3);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        (self.f)(t + C4 * h, ytmp, k4);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        (self.f)(t + C5 * h, ytmp, k5);
        for i in 0..n {
            ytmp[i] =
                y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        (self.f)(t + h, ytmp, k6);
        let ynew = &mut self.ynew;
        for i in 0..n {
            ynew[i] =
                y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        (self.f)(t + h, ynew, k7);
    }

    fn fill_dense(&mut self, h: f64) {
        let [r1, r2, r3, r4, r5] = &mut self.rcont;
        let k = &self.k;
        for i in 0..self.y.len() {
            let ydiff = self.ynew[i] - self.y[i];
            let bspl = k[0][i] * h - ydiff;
            r1[i] = self.y[i];
            r2[i] = ydiff;
            r3[i] = bspl;
            r4[i] = ydiff - k[6][i] * h - bspl;
            r5[i] = (k[0][i] * D1
                + k[2][i] * D3
                + k[3][i] * D4
                + k[4][i] * D5
                + k[5][i] * D6
                + k[6][i] * D7)
                * h;
        }
    }

    /// Interpolated state at `t` in the last accepted step `[t_prev, t]`.
    pub fn dense(&self, t: f64, out: &mut [C64]) {
        if self.h_prev == 0.0 || t == self.t {
            out.copy_from_slice(&self.y);
            return;
        }
        let theta = (t - self.t_prev) / self.h_prev;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * theta1) * theta) * theta1) * theta;
        }
    }
}

/// Integrates `y' = f(t, y)` from `tlist[0]` and calls `emit(k, t_k, y(t_k))`
/// at every output time, including the initial one.
pub fn integrate_with<F, E>(
    f: F,
    y0: Vec<C64>,
    tlist: &[f64],
    opts: &SolverOptions,
    mut emit: E,
) -> Result<()>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    E: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    validate_tlist(tlist, 1)?;
    let t_end = *tlist.last().unwrap();
    emit(0, tlist[0], &y0)?;
    if tlist.len() == 1 {
        return Ok(());
    }
    let mut buf = y0.clone();
    let mut stepper = Dopri5::new(f, tlist[0], y0, t_end, opts.clone())?;
    let mut next = 1;
    while next < tlist.len() {
        stepper.step(t_end)?;
        while next < tlist.len() && tlist[next] <= stepper.t() {
            stepper.dense(tlist[next], &mut buf);
            emit(next, tlist[next], &buf)?;
            next += 1;
        }
    }
    Ok(())
}

/// Integrates `y' = f(t, y)` and returns the state at every time in `tlist`.
pub fn integrate_adaptive<F>(
    f: F,
    y0: Vec<C64>,
    tlist: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut out = Vec::with_capacity(tlist.len());
    integrate_with(f, y0, tlist, opts, |_, _, y| {
        out.push(y.to_vec());
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_derivative_zero() {
        let ys = integrate_adaptive(
            |_, _, dy| dy.fill(c(0.0, 0.0)),
            vec![c(1.5, -2.0)],
            &[0.0, 1.0, 7.0],
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(ys.iter().all(|y| y[0] == c(1.5, -2.0)));
    }

    #[test]
    fn exponential_decay() {
        let tl: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
        let ys = integrate_adaptive(
            |_, y, dy| dy[0] = -y[0],
            vec![c(1.0, 0.0)],
            &tl,
            &SolverOptions::default(),
        )
        .unwrap();
        for (t, y) in tl.iter().zip(&ys) {
            assert!((y[0].re - (-t).exp()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn phase_rotation_keeps_modulus() {
        // modulus drift tracks rtol; 1e-8 keeps it below 1e-7 over ten time units
        let tl: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let opts = SolverOptions {
            rtol: 1e-8,
            atol: 1e-10,
            ..Default::default()
        };
        let ys = integrate_adaptive(
            |_, y, dy| dy[0] = y[0] * c(0.0, 1.0),
            vec![c(1.0, 0.0)],
            &tl,
            &opts,
        )
        .unwrap();
        for (t, y) in tl.iter().zip(&ys) {
            assert!((y[0].norm() - 1.0).abs() < 1e-7);
            assert!((y[0] - c(0.0, *t).exp()).norm() < 1e-7);
        }
    }

    #[test]
    fn phase_drift_at_default_tolerance() {
        let tl: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let ys = integrate_adaptive(
            |_, y, dy| dy[0] = y[0] * c(0.0, 1.0),
            vec![c(1.0, 0.0)],
            &tl,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(ys.iter().all(|y| (y[0].norm() - 1.0).abs() < 1e-5));
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let tl: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let opts = SolverOptions {
            rtol: 1e-9,
            atol: 1e-11,
            ..Default::default()
        };
        let ys = integrate_adaptive(
            |t, _, dy| dy[0] = c(t.cos(), 0.0),
            vec![c(0.0, 0.0)],
            &tl,
            &opts,
        )
        .unwrap();
        for (t, y) in tl.iter().zip(&ys) {
            assert!((y[0].re - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn step_limit_reports_time() {
        let opts = SolverOptions {
            max_steps: 3,
            ..Default::default()
        };
        let r = integrate_adaptive(
            |_, y, dy| dy[0] = y[0] * c(0.0, 50.0),
            vec![c(1.0, 0.0)],
            &[0.0, 100.0],
            &opts,
        );
        assert!(matches!(r, Err(QError::Convergence { .. })));
    }

    #[test]
    fn rejects_bad_tlist_and_tolerances() {
        let f = |_: f64, _: &[C64], dy: &mut [C64]| dy.fill(c(0.0, 0.0));
        assert!(matches!(
            integrate_adaptive(
                f,
                vec![c(1.0, 0.0)],
                &[0.0, 1.0, 1.0],
                &SolverOptions::default()
            ),
            Err(QError::Argument(_))
        ));
        let bad = SolverOptions {
            rtol: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            integrate_adaptive(f, vec![c(1.0, 0.0)], &[0.0, 1.0], &bad),
            Err(QError::Argument(_))
        ));
    }
}
