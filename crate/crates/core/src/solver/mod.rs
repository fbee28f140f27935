//! Joint spectrum partitioning and power allocation.
//!
//! The weighted sum of radar MI and data rate is jointly concave in
//! `(tau, P)` and the QoS constraints are superlevel sets of concave
//! functions, so the problem is convex. It is solved with a two-phase
//! log-barrier method (phase I finds a strictly feasible point or certifies
//! infeasibility). [`brute_force_oracle`] is an independent grid search used
//! to validate the solver.

mod barrier;
mod model;

use nalgebra::DVector;

use crate::channel::{LinkCoefficients, SystemParams};
use crate::error::{Error, Result};
use crate::objective::{aggregate_objective, stream_kernels, stream_thresholds, stream_weights, Allocation};

use barrier::{BarrierSettings, Control, Program, Termination};
pub(crate) use model::{PowerMode, SpectrumMode};
use model::{MainProgram, Model, PhaseOne};

/// Data of one optimization problem: a drop's coefficients and the system.
#[derive(Debug, Clone)]
pub struct Instance {
    pub coeffs: LinkCoefficients,
    pub params: SystemParams,
}

impl Instance {
    pub fn new(coeffs: LinkCoefficients, params: SystemParams) -> Result<Self> {
        let inst = Instance { coeffs, params };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let k = &self.coeffs;
        let checks = [
            ("sensing.a", k.sensing.a, false),
            ("sensing.b", k.sensing.b, false),
            ("sensing.c", k.sensing.c, true),
            ("isac_up.a", k.isac_up.a, false),
            ("isac_up.b", k.isac_up.b, false),
            ("isac_up.c", k.isac_up.c, true),
            ("isac_down.d", k.isac_down.d, false),
            ("isac_down.e", k.isac_down.e, true),
            ("comm.d", k.comm.d, false),
            ("comm.e", k.comm.e, true),
        ];
        for (name, v, strict) in checks {
            let ok = if strict { v > 0.0 } else { v >= 0.0 };
            if !ok || !v.is_finite() {
                return Err(Error::param(name, format!("coefficient out of range: {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative KKT residual accepted as optimal.
    pub kkt_tolerance: f64,
    /// Cap on Newton steps per phase.
    pub max_iterations: usize,
    pub barrier_initial_t: f64,
    pub barrier_mu: f64,
    /// Lower bound realizing `tau_s, P_s > 0` (in units of 1 and of `P_max`).
    pub variable_floor_epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kkt_tolerance: 1e-8,
            max_iterations: 200,
            barrier_initial_t: 1.0,
            barrier_mu: 10.0,
            variable_floor_epsilon: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kkt_tolerance", self.kkt_tolerance),
            ("barrier_initial_t", self.barrier_initial_t),
            ("variable_floor_epsilon", self.variable_floor_epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.barrier_mu > 1.0) || !self.barrier_mu.is_finite() {
            return Err(Error::param("barrier_mu", format!("must exceed 1, got {}", self.barrier_mu)));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        if self.variable_floor_epsilon >= 1.0 / 3.0 {
            return Err(Error::param("variable_floor_epsilon", "must be below 1/3"));
        }
        Ok(())
    }

    fn barrier(&self, rel_gap: f64) -> BarrierSettings {
        BarrierSettings {
            t0: self.barrier_initial_t,
            mu: self.barrier_mu,
            rel_gap,
            max_newton: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Optimal allocation; the best phase-I point when infeasible.
    pub allocation: Allocation,
    /// Objective of the solved problem, bits/s.
    pub objective_value: f64,
    pub kkt_residual: f64,
    /// Newton steps over both phases.
    pub iterations: usize,
    pub status: SolveStatus,
    /// Upper bound on the achievable minimum QoS slack (bits/s); negative
    /// when the instance is certified infeasible.
    pub infeasibility_bound_bps: Option<f64>,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Outcome of the phase-I search.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Allocation),
    Infeasible {
        /// Upper bound on the best achievable minimum QoS slack, bits/s (< 0).
        bound_bps: f64,
        /// Phase-I point with the largest minimum slack found.
        best: Allocation,
    },
    /// Phase I ran out of iterations without a verdict.
    Undecided(Allocation),
}

enum PhaseOneResult {
    Feasible(DVector<f64>, usize),
    Infeasible { x: DVector<f64>, bound: f64, steps: usize },
    Undecided(DVector<f64>, usize),
}

fn phase_one(model: &Model, cfg: &SolverConfig) -> PhaseOneResult {
    let x0 = model.initial_point();
    if model.qos_slacks(&x0).iter().all(|&s| s > 0.0) {
        return PhaseOneResult::Feasible(x0, 0);
    }
    let prog = PhaseOne::new(model);
    let start = prog.start();
    let mut bound = f64::INFINITY;
    // absolute gap on the normalized slack; only its sign matters
    let settings = cfg.barrier(1e-12);
    let out = barrier::maximize(&prog, start.clone(), &settings, |x, eval, t, centered| {
        if x[6] > 0.0 {
            return Control::Stop;
        }
        if centered {
            bound = x[6] + eval.constraints.len() as f64 / t;
            if bound < 0.0 {
                return Control::Stop;
            }
        }
        Control::Continue
    });
    let Some(out) = out else {
        return PhaseOneResult::Undecided(start.rows(0, 6).into_owned(), 0);
    };
    let x6 = out.x.rows(0, 6).into_owned();
    if out.x[6] > 0.0 {
        PhaseOneResult::Feasible(x6, out.newton_steps)
    } else if bound < 0.0 || out.termination == Termination::Converged {
        PhaseOneResult::Infeasible {
            x: x6,
            bound: bound.min(out.x[6] + out.eval.constraints.len() as f64 / out.t),
            steps: out.newton_steps,
        }
    } else {
        PhaseOneResult::Undecided(x6, out.newton_steps)
    }
}

/// Full two-phase solve of one structured subproblem.
pub(crate) fn solve_structured(
    inst: &Instance,
    cfg: &SolverConfig,
    eta: f64,
    spectrum: SpectrumMode,
    power: PowerMode,
) -> Result<SolveReport> {
    inst.validate()?;
    cfg.validate()?;
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::domain(format!("energy price must be non-negative, got {eta}")));
    }
    let model = Model::new(inst, eta, spectrum, power, cfg.variable_floor_epsilon);
    let (x0, phase1_steps) = match phase_one(&model, cfg) {
        PhaseOneResult::Feasible(x, n) => (x, n),
        PhaseOneResult::Infeasible { x, bound, steps } => {
            return Ok(SolveReport {
                allocation: model.allocation(&x),
                objective_value: model.to_bps(model.weighted_rate(&x)),
                kkt_residual: f64::INFINITY,
                iterations: steps,
                status: SolveStatus::Infeasible,
                infeasibility_bound_bps: Some(model.to_bps(bound)),
            });
        }
        PhaseOneResult::Undecided(x, n) => {
            return Ok(SolveReport {
                allocation: model.allocation(&x),
                objective_value: model.to_bps(model.weighted_rate(&x)),
                kkt_residual: f64::INFINITY,
                iterations: n,
                status: SolveStatus::MaxIterations,
                infeasibility_bound_bps: None,
            });
        }
    };

    let prog = MainProgram::new(&model);
    let settings = cfg.barrier(cfg.kkt_tolerance);
    let out = barrier::maximize(&prog, x0, &settings, |_, _, _, _| Control::Continue)
        .ok_or_else(|| Error::domain("phase-I point is not strictly feasible"))?;
    let (a, b) = prog.equalities();
    let kkt = barrier::kkt_residual(&out.eval, &out.x, out.t, a, b);
    let status = match out.termination {
        Termination::Converged if kkt <= cfg.kkt_tolerance => SolveStatus::Optimal,
        _ => SolveStatus::MaxIterations,
    };
    Ok(SolveReport {
        allocation: model.allocation(&out.x),
        objective_value: model.to_bps(out.eval.objective.value),
        kkt_residual: kkt,
        iterations: phase1_steps + out.newton_steps,
        status,
        infeasibility_bound_bps: None,
    })
}

/// Phase I of the joint problem with `sum P <= P_max`.
pub fn find_feasible_point(inst: &Instance, cfg: &SolverConfig) -> Result<Feasibility> {
    inst.validate()?;
    cfg.validate()?;
    let model = Model::new(
        inst,
        0.0,
        SpectrumMode::Free,
        PowerMode::Budget,
        cfg.variable_floor_epsilon,
    );
    Ok(match phase_one(&model, cfg) {
        PhaseOneResult::Feasible(x, _) => Feasibility::Feasible(model.allocation(&x)),
        PhaseOneResult::Infeasible { x, bound, .. } => Feasibility::Infeasible {
            bound_bps: model.to_bps(bound),
            best: model.allocation(&x),
        },
        PhaseOneResult::Undecided(x, _) => Feasibility::Undecided(model.allocation(&x)),
    })
}

/// Maximizes the weighted sum of radar MI and data rate under the QoS,
/// bandwidth and power constraints.
///
/// The objective is nondecreasing in every power, so the budget is imposed
/// as an equality.
pub fn solve_sum_mi_rate(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_structured(inst, cfg, 0.0, SpectrumMode::Free, PowerMode::FullBudget)
}

/// Exhaustive search over `tau` on the grid `{i / n}` of the open simplex
/// crossed with `P` on the same grid scaled to `P_max`. Returns the best
/// QoS-feasible point, or `None` when no grid point is feasible.
pub fn brute_force_oracle(inst: &Instance, grid_n: usize) -> Result<Option<Allocation>> {
    inst.validate()?;
    if grid_n < 10 {
        return Err(Error::domain(format!("grid_n must be at least 10, got {grid_n}")));
    }
    let p = &inst.params;
    let n = grid_n as f64;
    let kernels = stream_kernels(&inst.coeffs);
    let weights = stream_weights(p);
    let thresholds = stream_thresholds(p).map(|r| r / p.bandwidth_hz);

    let simplex: Vec<[f64; 3]> = (1..grid_n)
        .flat_map(|i| (1..grid_n - i).map(move |j| [i as f64 / n, j as f64 / n, (grid_n - i - j) as f64 / n]))
        .collect();

    let mut best: Option<(f64, [f64; 3], [f64; 3])> = None;
    for tau in &simplex {
        for pw in &simplex {
            let q = pw.map(|v| v * p.p_max_w);
            let mut value = 0.0;
            let mut feasible = true;
            for ((svc, k), (w, r)) in kernels.iter().zip(weights.iter().zip(thresholds)) {
                let m = k.value(tau[*svc], q[*svc]);
                if m < r {
                    feasible = false;
                    break;
                }
                value += w * m;
            }
            if feasible && best.is_none_or(|(v, _, _)| value > v) {
                best = Some((value, *tau, q));
            }
        }
    }
    Ok(best.map(|(_, tau, power)| Allocation { tau, power }))
}

/// Objective of an allocation for this instance, bits/s.
pub fn objective_of(inst: &Instance, alloc: &Allocation) -> Result<f64> {
    aggregate_objective(alloc, &inst.coeffs, &inst.params)
}
