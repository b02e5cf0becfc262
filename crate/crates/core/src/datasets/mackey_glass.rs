//! Mackey–Glass delay differential equation
//! `dx/dt = b_lin * x(t) + a_num * x(t - tau) / (1 + x(t - tau)^exponent)`.
//!
//! Fixed-step RK4. Delayed values between grid points come from cubic
//! Hermite interpolation over the stored values and derivatives, so the
//! delay lookup is as accurate as the integrator itself.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::ts::TimeSeries;

const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgParams {
    pub tau: f64,
    pub a_num: f64,
    pub b_lin: f64,
    pub exponent: f64,
    pub dt: f64,
    /// Integrator steps per emitted sample.
    pub stride: usize,
    /// Constant history on `[-tau, 0]`.
    pub history: f64,
}

impl Default for MgParams {
    fn default() -> Self {
        Self {
            tau: 17.0,
            a_num: 0.2,
            b_lin: -0.1,
            exponent: 10.0,
            dt: 0.1,
            stride: 10,
            history: 1.2,
        }
    }
}

impl MgParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.tau, self.a_num, self.b_lin, self.exponent, self.dt, self.history]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::usage("Mackey-Glass parameters must be finite"));
        }
        if !(self.tau > 0.0) || !(self.dt > 0.0) || !(self.exponent > 0.0) || self.stride < 1 {
            return Err(Error::usage(
                "Mackey-Glass needs tau > 0, dt > 0, exponent > 0 and stride >= 1",
            ));
        }
        if self.tau < self.dt {
            return Err(Error::usage("Mackey-Glass delay must be at least one integrator step"));
        }
        Ok(())
    }

    fn rhs(&self, x: f64, delayed: f64) -> f64 {
        let p = if self.exponent.fract() == 0.0 && self.exponent.abs() < i32::MAX as f64 {
            delayed.powi(self.exponent as i32)
        } else {
            delayed.powf(self.exponent)
        };
        self.b_lin * x + self.a_num * delayed / (1.0 + p)
    }
}

/// Grid values and derivatives for the most recent `capacity` steps.
struct DelayBuffer {
    first_index: usize,
    values: VecDeque<(f64, f64)>,
    capacity: usize,
    history: f64,
}

impl DelayBuffer {
    fn push(&mut self, value: f64, slope: f64) {
        self.values.push_back((value, slope));
        if self.values.len() > self.capacity {
            self.values.pop_front();
            self.first_index += 1;
        }
    }

    fn at(&self, k: usize) -> (f64, f64) {
        self.values[k - self.first_index]
    }

    /// Value at fractional grid position `pos` (step units, 0 = t = 0).
    fn value_at(&self, pos: f64, dt: f64) -> f64 {
        if pos <= 0.0 {
            return self.history;
        }
        let k = pos.floor();
        let theta = pos - k;
        let k = k as usize;
        let (x0, f0) = self.at(k);
        if theta == 0.0 {
            return x0;
        }
        let (x1, f1) = self.at(k + 1);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + theta;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * x0 + h10 * dt * f0 + h01 * x1 + h11 * dt * f1
    }
}

/// `n` samples of the Mackey–Glass series, starting at `t = 0`.
pub fn mackey_glass(n: usize, p: &MgParams) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::usage("need at least one sample"));
    }
    p.validate()?;
    let delay_steps = p.tau / p.dt;
    let dt = p.dt;
    let mut buf = DelayBuffer {
        first_index: 0,
        values: VecDeque::new(),
        capacity: delay_steps.ceil() as usize + 3,
        history: p.history,
    };
    let x0 = p.history;
    buf.push(x0, p.rhs(x0, buf.value_at(-delay_steps, dt)));

    let mut out = Vec::with_capacity(n);
    out.push(x0);
    let mut x = x0;
    let total_steps = (n - 1) * p.stride;
    for k in 0..total_steps {
        let base = k as f64 - delay_steps;
        let d0 = buf.value_at(base, dt);
        let dh = buf.value_at(base + 0.5, dt);
        let d1 = buf.value_at(base + 1.0, dt);
        let k1 = p.rhs(x, d0);
        let k2 = p.rhs(x + 0.5 * dt * k1, dh);
        let k3 = p.rhs(x + 0.5 * dt * k2, dh);
        let k4 = p.rhs(x + dt * k3, d1);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.is_finite() || x.abs() > DIVERGENCE_LIMIT {
            return Err(Error::GeneratorDiverged { step: k + 1 });
        }
        buf.push(x, p.rhs(x, d1));
        if (k + 1) % p.stride == 0 {
            out.push(x);
        }
    }
    TimeSeries::new("mackey-glass", out)
}
