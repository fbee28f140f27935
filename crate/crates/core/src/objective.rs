//! Radar mutual information and data-rate functions, the weighted objective,
//! QoS slacks and exact first/second derivatives.
//!
//! Both stream families reduce to one kernel
//!
//! ```text
//! m(x, q) = x log2(1 + a q / (b q + c x))
//! ```
//!
//! with `b = 0` for the clean (interference-free) streams. The kernel is
//! jointly concave and positively homogeneous of degree one, so its Hessian
//! is a rank-one negative semidefinite matrix:
//!
//! ```text
//! H = -a c (b u + (a + b) v) / (ln2 u^2 v^2) * [[q^2, -x q], [-x q, x^2]]
//! u = (a + b) q + c x,   v = b q + c x
//! ```

use std::f64::consts::LN_2;

use crate::channel::{LinkCoefficients, SystemParams};
use crate::error::{Error, Result};

/// Per-hertz rate kernel `x log2(1 + a q / (b q + c x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Kernel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Kernel {
    pub fn value(&self, x: f64, q: f64) -> f64 {
        let v = self.b * q + self.c * x;
        x * (self.a * q / v).ln_1p() / LN_2
    }

    pub fn grad(&self, x: f64, q: f64) -> [f64; 2] {
        let v = self.b * q + self.c * x;
        let u = v + self.a * q;
        let ac_uv = self.a * self.c / (u * v);
        [
            ((self.a * q / v).ln_1p() - ac_uv * x * q) / LN_2,
            ac_uv * x * x / LN_2,
        ]
    }

    pub fn hess(&self, x: f64, q: f64) -> [[f64; 2]; 2] {
        let v = self.b * q + self.c * x;
        let u = v + self.a * q;
        // scale the squares separately; u^2 v^2 can underflow for echo streams
        let s = -(self.a / u) * (self.c / v) * (self.b * u + (self.a + self.b) * v)
            / (u * v)
            / LN_2;
        [[s * q * q, -s * x * q], [-s * x * q, s * x * x]]
    }
}

fn check_point(x: f64, q: f64) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::domain(format!("bandwidth share must be in (0, 1], got {x}")));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::domain(format!("power must be positive, got {q}")));
    }
    Ok(())
}

fn check_coeff(name: &str, v: f64, strict: bool) -> Result<()> {
    let ok = if strict { v > 0.0 } else { v >= 0.0 };
    if ok && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("coefficient {name} out of range: {v}")))
    }
}

fn check_clutter(x: f64, q: f64, a: f64, b: f64, c: f64) -> Result<()> {
    check_point(x, q)?;
    check_coeff("a", a, false)?;
    check_coeff("b", b, false)?;
    check_coeff("c", c, true)
}

fn check_clean(x: f64, q: f64, d: f64, e: f64) -> Result<()> {
    check_point(x, q)?;
    check_coeff("d", d, false)?;
    check_coeff("e", e, true)
}

/// Mutual information of a clutter-limited echo, `W x log2(1 + a q/(b q + c x))`.
pub fn mi_clutter(x: f64, q: f64, a: f64, b: f64, c: f64, w: f64) -> Result<f64> {
    check_clutter(x, q, a, b, c)?;
    Ok(w * Kernel { a, b, c }.value(x, q))
}

/// Rate of an interference-free link, `W x log2(1 + d q/(e x))`.
pub fn rate_clean(x: f64, q: f64, d: f64, e: f64, w: f64) -> Result<f64> {
    check_clean(x, q, d, e)?;
    Ok(w * Kernel { a: d, b: 0.0, c: e }.value(x, q))
}

/// Hessian of [`mi_clutter`] in `(x, q)`.
pub fn hessian_mi(x: f64, q: f64, a: f64, b: f64, c: f64, w: f64) -> Result<[[f64; 2]; 2]> {
    check_clutter(x, q, a, b, c)?;
    let h = Kernel { a, b, c }.hess(x, q);
    Ok(h.map(|row| row.map(|v| w * v)))
}

/// Hessian of [`rate_clean`] in `(x, q)`.
pub fn hessian_clean(x: f64, q: f64, d: f64, e: f64, w: f64) -> Result<[[f64; 2]; 2]> {
    check_clean(x, q, d, e)?;
    let h = Kernel { a: d, b: 0.0, c: e }.hess(x, q);
    Ok(h.map(|row| row.map(|v| w * v)))
}

/// Bandwidth shares and transmit powers of the three services.
///
/// Index 0 is the sensing-only target, 1 the ISaC user, 2 the
/// communication-only user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub tau: [f64; 3],
    /// Transmit powers, W.
    pub power: [f64; 3],
}

impl Allocation {
    pub fn equal_split(p_max_w: f64) -> Self {
        Allocation {
            tau: [1.0 / 3.0; 3],
            power: [p_max_w / 3.0; 3],
        }
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Checks positivity, the bandwidth partition and the power budget.
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        for s in 0..3 {
            if !(self.tau[s] > 0.0 && self.tau[s] <= 1.0) {
                return Err(Error::domain(format!("tau[{s}] = {} outside (0, 1]", self.tau[s])));
            }
            if !(self.power[s] > 0.0) || !self.power[s].is_finite() {
                return Err(Error::domain(format!("power[{s}] = {} not positive", self.power[s])));
            }
        }
        let tau_sum: f64 = self.tau.iter().sum();
        if (tau_sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("bandwidth shares sum to {tau_sum}, not 1")));
        }
        if self.total_power() > params.p_max_w * (1.0 + 1e-9) + 1e-9 {
            return Err(Error::domain(format!(
                "total power {} W exceeds budget {} W",
                self.total_power(),
                params.p_max_w
            )));
        }
        Ok(())
    }
}

/// Achieved radar MI / data rate per stream, bits/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StreamRates {
    pub sensing: f64,
    pub isac_down: f64,
    pub isac_up: f64,
    pub comm: f64,
}

impl StreamRates {
    pub fn as_array(&self) -> [f64; 4] {
        [self.sensing, self.isac_down, self.isac_up, self.comm]
    }
}

/// Per-stream kernels in the order (sensing, ISaC down, ISaC up, comm),
/// together with the service index each one reads its `(tau, P)` from.
pub(crate) fn stream_kernels(coeffs: &LinkCoefficients) -> [(usize, Kernel); 4] {
    let s = coeffs.sensing;
    let u = coeffs.isac_up;
    let d = coeffs.isac_down;
    let c = coeffs.comm;
    [
        (0, Kernel { a: s.a, b: s.b, c: s.c }),
        (1, Kernel { a: d.d, b: 0.0, c: d.e }),
        (1, Kernel { a: u.a, b: u.b, c: u.c }),
        (2, Kernel { a: c.d, b: 0.0, c: c.e }),
    ]
}

/// Priority of each stream; the ISaC priority weighs both its directions.
pub(crate) fn stream_weights(params: &SystemParams) -> [f64; 4] {
    let g = params.priorities;
    [g[0], g[1], g[1], g[2]]
}

/// QoS threshold of each stream, bits/s.
pub(crate) fn stream_thresholds(params: &SystemParams) -> [f64; 4] {
    let (r, c) = (params.qos_sensing_bps, params.qos_comm_bps);
    [r, c, r, c]
}

pub fn stream_rates(alloc: &Allocation, coeffs: &LinkCoefficients, params: &SystemParams) -> Result<StreamRates> {
    let w = params.bandwidth_hz;
    let s = coeffs.sensing;
    let u = coeffs.isac_up;
    Ok(StreamRates {
        sensing: mi_clutter(alloc.tau[0], alloc.power[0], s.a, s.b, s.c, w)?,
        isac_down: rate_clean(alloc.tau[1], alloc.power[1], coeffs.isac_down.d, coeffs.isac_down.e, w)?,
        isac_up: mi_clutter(alloc.tau[1], alloc.power[1], u.a, u.b, u.c, w)?,
        comm: rate_clean(alloc.tau[2], alloc.power[2], coeffs.comm.d, coeffs.comm.e, w)?,
    })
}

/// `G1 I1 + G2 (I2d + I2u) + G3 I3`, bits/s.
pub fn aggregate_objective(alloc: &Allocation, coeffs: &LinkCoefficients, params: &SystemParams) -> Result<f64> {
    let r = stream_rates(alloc, coeffs, params)?;
    let g = params.priorities;
    Ok(g[0] * r.sensing + g[1] * (r.isac_down + r.isac_up) + g[2] * r.comm)
}

/// `(I1 - Rr, I2d - Rc, I2u - Rr, I3 - Rc)`; the allocation meets QoS iff all are >= 0.
pub fn qos_slacks(alloc: &Allocation, coeffs: &LinkCoefficients, params: &SystemParams) -> Result<[f64; 4]> {
    let r = stream_rates(alloc, coeffs, params)?.as_array();
    let th = stream_thresholds(params);
    Ok([r[0] - th[0], r[1] - th[1], r[2] - th[2], r[3] - th[3]])
}

/// Gradient of [`aggregate_objective`]: `[d/dtau1..3, d/dP1..3]`.
pub fn gradient_objective(alloc: &Allocation, coeffs: &LinkCoefficients, params: &SystemParams) -> Result<[f64; 6]> {
    alloc.validate(params)?;
    let w = params.bandwidth_hz;
    let weights = stream_weights(params);
    let mut g = [0.0; 6];
    for ((svc, k), wt) in stream_kernels(coeffs).into_iter().zip(weights) {
        let [gx, gq] = k.grad(alloc.tau[svc], alloc.power[svc]);
        g[svc] += wt * w * gx;
        g[3 + svc] += wt * w * gq;
    }
    Ok(g)
}

/// Hessian of [`aggregate_objective`] in the order `[tau1..3, P1..3]`.
pub fn hessian_objective(alloc: &Allocation, coeffs: &LinkCoefficients, params: &SystemParams) -> Result<[[f64; 6]; 6]> {
    alloc.validate(params)?;
    let w = params.bandwidth_hz;
    let weights = stream_weights(params);
    let mut h = [[0.0; 6]; 6];
    for ((svc, k), wt) in stream_kernels(coeffs).into_iter().zip(weights) {
        let hk = k.hess(alloc.tau[svc], alloc.power[svc]);
        let idx = [svc, 3 + svc];
        for i in 0..2 {
            for j in 0..2 {
                h[idx[i]][idx[j]] += wt * w * hk[i][j];
            }
        }
    }
    Ok(h)
}
