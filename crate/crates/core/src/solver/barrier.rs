//! Log-barrier interior-point method for small dense concave programs
//!
//! ```text
//! maximize f(x)  s.t.  c_i(x) > 0 (concave),  A x = b
//! ```
//!
//! Each centering step maximizes `t f(x) + sum_i ln c_i(x)` over `A x = b`
//! with equality-constrained Newton steps; `t` grows geometrically until the
//! duality gap `m / t` is below the relative tolerance.

use nalgebra::{DMatrix, DVector};

/// Value, gradient and Hessian of a twice differentiable function.
#[derive(Debug, Clone)]
pub(crate) struct Smooth {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Smooth {
    pub fn zeros(n: usize) -> Self {
        Smooth {
            value: 0.0,
            grad: DVector::zeros(n),
            hess: DMatrix::zeros(n, n),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Eval {
    pub objective: Smooth,
    pub constraints: Vec<Smooth>,
    /// Magnitude the duality gap and complementarity are measured against.
    pub scale: f64,
}

pub(crate) trait Program {
    /// `None` outside the domain or when some `c_i(x) <= 0`.
    fn evaluate(&self, x: &DVector<f64>) -> Option<Eval>;

    fn equalities(&self) -> (&DMatrix<f64>, &DVector<f64>);

    /// Basis of the null space of the equality matrix.
    fn null_space(&self) -> &DMatrix<f64>;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierSettings {
    pub t0: f64,
    pub mu: f64,
    pub rel_gap: f64,
    pub max_newton: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Termination {
    Converged,
    Stopped,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: DVector<f64>,
    pub eval: Eval,
    pub t: f64,
    pub newton_steps: usize,
    pub termination: Termination,
}

const NEWTON_TOL: f64 = 1e-10;
const STALL_TOL: f64 = 1e-6;
const ARMIJO: f64 = 0.01;
const BACKTRACK: f64 = 0.5;
const MIN_STEP: f64 = 1e-14;

fn barrier_value(eval: &Eval, t: f64) -> f64 {
    t * eval.objective.value + eval.constraints.iter().map(|c| c.value.ln()).sum::<f64>()
}

/// Gradient and negated Hessian of the barrier function.
fn barrier_derivatives(eval: &Eval, t: f64) -> (DVector<f64>, DMatrix<f64>) {
    let mut g = &eval.objective.grad * t;
    let mut h = &eval.objective.hess * (-t);
    for c in &eval.constraints {
        let inv = 1.0 / c.value;
        g.axpy(inv, &c.grad, 1.0);
        h.ger(inv * inv, &c.grad, &c.grad, 1.0);
        h -= &c.hess * inv;
    }
    (g, h)
}

/// Newton direction restricted to `x + Z y`: solves `(Z^T H Z) y = Z^T g`
/// with a Jacobi-scaled Cholesky factorization, falling back to LU.
fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<DVector<f64>> {
    if z.ncols() == 0 {
        return Some(DVector::zeros(g.len()));
    }
    let hr = z.transpose() * h * z;
    let gr = z.transpose() * g;
    let d = DVector::from_iterator(hr.nrows(), hr.diagonal().iter().map(|v| 1.0 / v.abs().sqrt().max(f64::MIN_POSITIVE)));
    let scaled = DMatrix::from_fn(hr.nrows(), hr.ncols(), |i, j| d[i] * hr[(i, j)] * d[j]);
    let rhs = gr.component_mul(&d);
    let y = match scaled.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => scaled.lu().solve(&rhs)?,
    };
    let dx = z * y.component_mul(&d);
    dx.iter().all(|v| v.is_finite()).then_some(dx)
}

/// Runs the barrier method from a strictly feasible `x0`.
///
/// `monitor` sees every iterate (`centered == false`) and every centered
/// point (`centered == true`) and may stop the run early.
pub(crate) fn maximize<P, M>(prog: &P, x0: DVector<f64>, cfg: &BarrierSettings, mut monitor: M) -> Option<Outcome>
where
    P: Program,
    M: FnMut(&DVector<f64>, &Eval, f64, bool) -> Control,
{
    let z = prog.null_space();
    let mut x = x0;
    let mut eval = prog.evaluate(&x)?;
    let m = eval.constraints.len() as f64;
    let mut t = cfg.t0;
    let mut steps = 0usize;

    let finish = |x, eval, t, steps, termination| {
        Some(Outcome {
            x,
            eval,
            t,
            newton_steps: steps,
            termination,
        })
    };

    loop {
        // centering at fixed t
        let mut prev_dec2 = f64::INFINITY;
        loop {
            if steps >= cfg.max_newton {
                return finish(x, eval, t, steps, Termination::IterationLimit);
            }
            let (g, h) = barrier_derivatives(&eval, t);
            let Some(dx) = newton_direction(&g, &h, z) else {
                break;
            };
            let dec2 = dx.dot(&(&h * &dx));
            // a small decrement that stops shrinking is rounding noise
            let stalled = dec2 / 2.0 <= STALL_TOL && dec2 >= 0.5 * prev_dec2;
            if dec2 / 2.0 <= NEWTON_TOL || stalled {
                break;
            }
            prev_dec2 = dec2;
            let phi = barrier_value(&eval, t);
            let slope = g.dot(&dx);
            let mut s = 1.0;
            let accepted = loop {
                let trial = &x + &dx * s;
                if let Some(e) = prog.evaluate(&trial) {
                    let phi_new = barrier_value(&e, t);
                    // inside the quadratic region the Armijo test drowns in rounding
                    let tolerant = dec2 < 0.1 && s == 1.0 && phi_new >= phi - 1e-12 * phi.abs().max(1.0);
                    if tolerant || phi_new >= phi + ARMIJO * s * slope {
                        break Some((trial, e));
                    }
                }
                s *= BACKTRACK;
                if s < MIN_STEP {
                    break None;
                }
            };
            steps += 1;
            let Some((xn, en)) = accepted else {
                break;
            };
            x = xn;
            eval = en;
            if monitor(&x, &eval, t, false) == Control::Stop {
                return finish(x, eval, t, steps, Termination::Stopped);
            }
        }
        if monitor(&x, &eval, t, true) == Control::Stop {
            return finish(x, eval, t, steps, Termination::Stopped);
        }
        if m / t <= cfg.rel_gap * eval.scale {
            return finish(x, eval, t, steps, Termination::Converged);
        }
        t *= cfg.mu;
    }
}

/// Constraints below this value get fitted multipliers in [`kkt_residual`].
const NEAR_ACTIVE: f64 = 1e-6;

/// Scaled KKT residual at a barrier point: the worst of relative
/// stationarity, relative complementarity and absolute infeasibility.
///
/// Two multiplier estimates are tried and the better certificate is kept:
/// the barrier estimates `1 / (t c_i)`, and a least-squares fit of the
/// multipliers of nearly active constraints (used only when nonnegative).
/// Equality multipliers are always the least-squares fit.
pub(crate) fn kkt_residual(eval: &Eval, x: &DVector<f64>, t: f64, a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let mut infeas: f64 = 0.0;
    for c in &eval.constraints {
        infeas = infeas.max(-c.value);
    }
    if a.nrows() > 0 {
        infeas = infeas.max((b - a * x).amax());
    }
    let grad_scale = eval.objective.grad.amax().max(f64::MIN_POSITIVE);
    let barrier_lambda: Vec<f64> = eval.constraints.iter().map(|c| 1.0 / (t * c.value)).collect();
    let mut best = certificate(eval, a, &barrier_lambda, grad_scale);

    let near: Vec<usize> = (0..eval.constraints.len())
        .filter(|&i| eval.constraints[i].value <= NEAR_ACTIVE)
        .collect();
    if !near.is_empty() {
        let mut g = eval.objective.grad.clone();
        for (i, c) in eval.constraints.iter().enumerate() {
            if !near.contains(&i) {
                g.axpy(barrier_lambda[i], &c.grad, 1.0);
            }
        }
        let n = g.len();
        let cols = near.len() + a.nrows();
        let m = DMatrix::from_fn(n, cols, |r, k| {
            if k < near.len() {
                eval.constraints[near[k]].grad[r]
            } else {
                a[(k - near.len(), r)]
            }
        });
        if let Ok(theta) = m.svd(true, true).solve(&(-&g), 1e-14) {
            if theta.rows(0, near.len()).iter().all(|&l| l >= 0.0) {
                let mut lambda = barrier_lambda.clone();
                for (k, &i) in near.iter().enumerate() {
                    lambda[i] = theta[k];
                }
                best = best.min(certificate(eval, a, &lambda, grad_scale));
            }
        }
    }
    best.max(infeas)
}

/// Stationarity and complementarity for given inequality multipliers.
fn certificate(eval: &Eval, a: &DMatrix<f64>, lambda: &[f64], grad_scale: f64) -> f64 {
    let mut r = eval.objective.grad.clone();
    let mut comp = 0.0;
    for (c, &l) in eval.constraints.iter().zip(lambda) {
        r.axpy(l, &c.grad, 1.0);
        comp += l * c.value.abs();
    }
    if a.nrows() > 0 {
        let aat = a * a.transpose();
        if let Some(nu) = aat.lu().solve(&(a * &r)) {
            r -= a.transpose() * nu;
        }
    }
    (r.amax() / grad_scale).max(comp / eval.scale)
}
