//! Normalized semi-ISaC program fed to the barrier method.
//!
//! Variables are `x = [tau1, tau2, tau3, p1, p2, p3]` with `p = P / P_max`;
//! rates are divided by `W`. A phase-I variant appends the minimum QoS slack
//! `s` as a seventh variable.

use nalgebra::{DMatrix, DVector};

use super::barrier::{Eval, Program, Smooth};
use super::Instance;
use crate::objective::{stream_kernels, stream_thresholds, stream_weights, Allocation, Kernel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SpectrumMode {
    Free,
    Fixed([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PowerMode {
    /// `sum p <= 1`.
    Budget,
    /// `sum p == 1`.
    FullBudget,
    /// Fixed normalized powers.
    Fixed([f64; 3]),
}

#[derive(Debug, Clone)]
pub(crate) struct Model {
    kernels: [(usize, Kernel); 4],
    weights: [f64; 4],
    thresholds: [f64; 4],
    /// Price per unit of normalized power, `eta P_max / W`.
    price: f64,
    /// Circuit power over `P_max`.
    circuit: f64,
    floor: f64,
    spectrum: SpectrumMode,
    power: PowerMode,
    p_max: f64,
    bandwidth: f64,
}

impl Model {
    pub fn new(inst: &Instance, eta: f64, spectrum: SpectrumMode, power: PowerMode, floor: f64) -> Self {
        let p = &inst.params;
        let w = p.bandwidth_hz;
        let kernels = stream_kernels(&inst.coeffs).map(|(svc, k)| {
            (
                svc,
                Kernel {
                    a: k.a * p.p_max_w,
                    b: k.b * p.p_max_w,
                    c: k.c,
                },
            )
        });
        Model {
            kernels,
            weights: stream_weights(p),
            thresholds: stream_thresholds(p).map(|r| r / w),
            price: eta * p.p_max_w / w,
            circuit: p.circuit_power_w / p.p_max_w,
            floor,
            spectrum,
            power,
            p_max: p.p_max_w,
            bandwidth: w,
        }
    }

    pub fn initial_point(&self) -> DVector<f64> {
        let tau = match self.spectrum {
            SpectrumMode::Free => [1.0 / 3.0; 3],
            SpectrumMode::Fixed(t) => t,
        };
        let p = match self.power {
            PowerMode::FullBudget => [1.0 / 3.0; 3],
            PowerMode::Budget => [0.3; 3],
            PowerMode::Fixed(p) => p,
        };
        DVector::from_iterator(6, tau.into_iter().chain(p))
    }

    pub fn allocation(&self, x: &DVector<f64>) -> Allocation {
        Allocation {
            tau: [x[0], x[1], x[2]],
            power: [x[3] * self.p_max, x[4] * self.p_max, x[5] * self.p_max],
        }
    }

    /// Objective in bits/s for a normalized objective value.
    pub fn to_bps(&self, v: f64) -> f64 {
        v * self.bandwidth
    }

    /// Normalized QoS slacks `m_k - r_k` of the streams with a positive threshold.
    pub fn qos_slacks(&self, x: &DVector<f64>) -> Vec<f64> {
        self.kernels
            .iter()
            .zip(self.thresholds)
            .filter(|(_, r)| *r > 0.0)
            .map(|((svc, k), r)| k.value(x[*svc], x[3 + svc]) - r)
            .collect()
    }

    fn equalities(&self, dim: usize) -> (DMatrix<f64>, DVector<f64>) {
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        let unit = |i: usize| {
            let mut r = vec![0.0; dim];
            r[i] = 1.0;
            r
        };
        match self.spectrum {
            SpectrumMode::Free => {
                let mut r = vec![0.0; dim];
                r[..3].fill(1.0);
                rows.push((r, 1.0));
            }
            SpectrumMode::Fixed(t) => (0..3).for_each(|i| rows.push((unit(i), t[i]))),
        }
        match self.power {
            PowerMode::Budget => {}
            PowerMode::FullBudget => {
                let mut r = vec![0.0; dim];
                r[3..6].fill(1.0);
                rows.push((r, 1.0));
            }
            PowerMode::Fixed(p) => (0..3).for_each(|i| rows.push((unit(3 + i), p[i]))),
        }
        let a = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i].0[j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        (a, b)
    }

    /// Null-space basis of [`Self::equalities`]: differences of free
    /// variables inside each sum constraint, unit vectors for the rest.
    fn null_space(&self, dim: usize) -> DMatrix<f64> {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        let unit = |i: usize| {
            let mut v = DVector::zeros(dim);
            v[i] = 1.0;
            v
        };
        let diff = |i: usize, j: usize| {
            let mut v = DVector::zeros(dim);
            v[i] = 1.0;
            v[j] = -1.0;
            v
        };
        if self.spectrum == SpectrumMode::Free {
            cols.push(diff(0, 2));
            cols.push(diff(1, 2));
        }
        match self.power {
            PowerMode::Budget => (3..6).for_each(|i| cols.push(unit(i))),
            PowerMode::FullBudget => {
                cols.push(diff(3, 5));
                cols.push(diff(4, 5));
            }
            PowerMode::Fixed(_) => {}
        }
        (6..dim).for_each(|i| cols.push(unit(i)));
        if cols.is_empty() {
            DMatrix::zeros(dim, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }

    /// Constraint set shared by both phases. `slack_index` subtracts that
    /// variable from every QoS constraint (phase I).
    fn constraints(&self, x: &DVector<f64>, slack_index: Option<usize>) -> Option<Vec<Smooth>> {
        let n = x.len();
        if (0..6).any(|i| !(x[i] > 0.0) || !x[i].is_finite()) {
            return None;
        }
        let mut out = Vec::with_capacity(11);
        let bound = |i: usize| {
            let mut c = Smooth::zeros(n);
            c.value = x[i] - self.floor;
            c.grad[i] = 1.0;
            c
        };
        if self.spectrum == SpectrumMode::Free {
            (0..3).for_each(|i| out.push(bound(i)));
        }
        if matches!(self.power, PowerMode::Budget | PowerMode::FullBudget) {
            (3..6).for_each(|i| out.push(bound(i)));
        }
        if self.power == PowerMode::Budget {
            let mut c = Smooth::zeros(n);
            c.value = 1.0 - x[3] - x[4] - x[5];
            c.grad.rows_mut(3, 3).fill(-1.0);
            out.push(c);
        }
        for ((svc, k), r) in self.kernels.iter().zip(self.thresholds) {
            if r <= 0.0 {
                continue;
            }
            let (xi, qi) = (*svc, 3 + svc);
            let mut c = Smooth::zeros(n);
            c.value = k.value(x[xi], x[qi]) - r;
            let g = k.grad(x[xi], x[qi]);
            let h = k.hess(x[xi], x[qi]);
            c.grad[xi] = g[0];
            c.grad[qi] = g[1];
            c.hess[(xi, xi)] = h[0][0];
            c.hess[(xi, qi)] = h[0][1];
            c.hess[(qi, xi)] = h[1][0];
            c.hess[(qi, qi)] = h[1][1];
            if let Some(si) = slack_index {
                c.value -= x[si];
                c.grad[si] = -1.0;
            }
            out.push(c);
        }
        out.iter()
            .all(|c| c.value > 0.0 && c.value.is_finite())
            .then_some(out)
    }

    /// Weighted rate (numerator) part of the objective, normalized.
    pub fn weighted_rate(&self, x: &DVector<f64>) -> f64 {
        self.kernels
            .iter()
            .zip(self.weights)
            .map(|((svc, k), w)| w * k.value(x[*svc], x[3 + svc]))
            .sum()
    }

    fn objective(&self, x: &DVector<f64>) -> Smooth {
        let mut f = Smooth::zeros(x.len());
        for ((svc, k), w) in self.kernels.iter().zip(self.weights) {
            if w == 0.0 {
                continue;
            }
            let (xi, qi) = (*svc, 3 + svc);
            let g = k.grad(x[xi], x[qi]);
            let h = k.hess(x[xi], x[qi]);
            f.value += w * k.value(x[xi], x[qi]);
            f.grad[xi] += w * g[0];
            f.grad[qi] += w * g[1];
            f.hess[(xi, xi)] += w * h[0][0];
            f.hess[(xi, qi)] += w * h[0][1];
            f.hess[(qi, xi)] += w * h[1][0];
            f.hess[(qi, qi)] += w * h[1][1];
        }
        if self.price > 0.0 {
            let psum = x[3] + x[4] + x[5];
            f.value -= self.price * (psum + self.circuit);
            f.grad.rows_mut(3, 3).add_scalar_mut(-self.price);
        }
        f
    }

    /// Size of the objective terms; the duality gap is made relative to it.
    fn scale(&self, x: &DVector<f64>) -> f64 {
        let rate = self.weighted_rate(x).abs();
        let cost = self.price * (x[3] + x[4] + x[5] + self.circuit);
        (rate + cost).max(1e-9)
    }
}

/// Phase II: maximize the (possibly energy-priced) weighted rate.
pub(crate) struct MainProgram<'a> {
    pub model: &'a Model,
    a: DMatrix<f64>,
    b: DVector<f64>,
    z: DMatrix<f64>,
}

impl<'a> MainProgram<'a> {
    pub fn new(model: &'a Model) -> Self {
        let (a, b) = model.equalities(6);
        let z = model.null_space(6);
        MainProgram { model, a, b, z }
    }
}

impl Program for MainProgram<'_> {
    fn evaluate(&self, x: &DVector<f64>) -> Option<Eval> {
        let constraints = self.model.constraints(x, None)?;
        Some(Eval {
            objective: self.model.objective(x),
            constraints,
            scale: self.model.scale(x),
        })
    }

    fn equalities(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.a, &self.b)
    }

    fn null_space(&self) -> &DMatrix<f64> {
        &self.z
    }
}

/// Phase I: maximize the minimum normalized QoS slack.
pub(crate) struct PhaseOne<'a> {
    pub model: &'a Model,
    a: DMatrix<f64>,
    b: DVector<f64>,
    z: DMatrix<f64>,
}

impl<'a> PhaseOne<'a> {
    pub fn new(model: &'a Model) -> Self {
        let (a, b) = model.equalities(7);
        let z = model.null_space(7);
        PhaseOne { model, a, b, z }
    }

    pub fn start(&self) -> DVector<f64> {
        let x = self.model.initial_point();
        let worst = self
            .model
            .qos_slacks(&x)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let s0 = worst - worst.abs().max(1.0);
        DVector::from_iterator(7, x.iter().copied().chain([s0]))
    }
}

impl Program for PhaseOne<'_> {
    fn evaluate(&self, x: &DVector<f64>) -> Option<Eval> {
        let constraints = self.model.constraints(x, Some(6))?;
        let mut objective = Smooth::zeros(7);
        objective.value = x[6];
        objective.grad[6] = 1.0;
        Some(Eval {
            objective,
            constraints,
            scale: 1.0,
        })
    }

    fn equalities(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.a, &self.b)
    }

    fn null_space(&self) -> &DMatrix<f64> {
        &self.z
    }
}
